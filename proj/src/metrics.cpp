#include "gauc/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "gauc/error.hpp"

namespace gauc {

namespace {

void check_aligned(std::span<const ClassLogProbs> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ShapeError("predictions and labels differ in length");
  if (predictions.empty()) throw ShapeError("metrics need at least one item");
  const std::size_t k = predictions.front().size();
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].size() != k) throw ShapeError("predictions differ in class count");
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) throw ShapeError("label outside class range");
  }
}

double population_variance(std::span<const double> xs) {
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - mean) * (x - mean);
  return v / static_cast<double>(xs.size());
}

void check_grid(const std::vector<std::vector<ClassLogProbs>>& grid, std::size_t min_outer, const char* what) {
  if (grid.size() < min_outer) throw ShapeError(std::string(what) + " needs at least " + std::to_string(min_outer) + " sets");
  const std::size_t n = grid.front().size();
  if (n == 0) throw ShapeError(std::string(what) + " needs at least one query");
  for (const auto& g : grid) {
    if (g.size() != n) throw ShapeError(std::string(what) + ": query lists are misaligned");
    for (const auto& p : g) {
      if (p.size() != grid.front().front().size()) throw ShapeError(std::string(what) + ": class counts differ");
    }
  }
}

}  // namespace

AccuracyF1 accuracy_f1(std::span<const ClassLogProbs> predictions, std::span<const int> labels) {
  check_aligned(predictions, labels);
  const std::size_t k = predictions.front().size();
  std::vector<double> tp(k, 0.0), fp(k, 0.0), fn(k, 0.0);
  std::vector<char> present(k, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto pred = predictions[i].argmax();
    const auto truth = static_cast<std::size_t>(labels[i]);
    present[truth] = 1;
    if (pred == truth) {
      ++correct;
      tp[truth] += 1.0;
    } else {
      fp[pred] += 1.0;
      fn[truth] += 1.0;
    }
  }
  double f1_sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (!present[c]) continue;
    ++classes;
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    f1_sum += denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
  }
  return {static_cast<double>(correct) / static_cast<double>(predictions.size()), f1_sum / static_cast<double>(classes)};
}

double nll(std::span<const ClassLogProbs> predictions, std::span<const int> labels) {
  check_aligned(predictions, labels);
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) s -= predictions[i][static_cast<std::size_t>(labels[i])];
  return std::max(0.0, s / static_cast<double>(predictions.size()));
}

double ece(std::span<const ClassLogProbs> predictions, std::span<const int> labels, std::size_t bins) {
  check_aligned(predictions, labels);
  if (bins < 1) throw ConfigError("ECE needs at least one bin");
  std::vector<double> count(bins, 0.0), conf_sum(bins, 0.0), hit_sum(bins, 0.0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double conf = predictions[i].max_prob();
    // Bin b covers (b/B, (b+1)/B].
    auto b = static_cast<std::ptrdiff_t>(std::ceil(conf * static_cast<double>(bins))) - 1;
    b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    count[static_cast<std::size_t>(b)] += 1.0;
    conf_sum[static_cast<std::size_t>(b)] += conf;
    hit_sum[static_cast<std::size_t>(b)] += predictions[i].argmax() == static_cast<std::size_t>(labels[i]) ? 1.0 : 0.0;
  }
  const auto n = static_cast<double>(predictions.size());
  double e = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0.0) continue;
    e += (count[b] / n) * std::abs(hit_sum[b] / count[b] - conf_sum[b] / count[b]);
  }
  return std::clamp(e, 0.0, 1.0);
}

double var_para(const std::vector<std::vector<ClassLogProbs>>& per_paraphrase) {
  check_grid(per_paraphrase, 2, "var_para");
  const std::size_t n = per_paraphrase.front().size();
  const std::size_t k = per_paraphrase.front().front().size();
  std::vector<double> column(per_paraphrase.size());
  double total = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    double per_query = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t p = 0; p < per_paraphrase.size(); ++p) column[p] = per_paraphrase[p][q].prob(c);
      per_query += population_variance(column);
    }
    total += per_query / static_cast<double>(k);
  }
  return total / static_cast<double>(n);
}

double var_runs(const std::vector<std::vector<ClassLogProbs>>& per_run) {
  check_grid(per_run, 2, "var_runs");
  const std::size_t n = per_run.front().size();
  std::vector<double> column(per_run.size());
  double total = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t r = 0; r < per_run.size(); ++r) column[r] = per_run[r][q].max_prob();
    total += population_variance(column);
  }
  return total / static_cast<double>(n);
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

// Number of word-boundary occurrences of `term` in `text` (both lowercase).
std::size_t count_mentions(const std::string& text, const std::string& term) {
  if (term.empty()) return 0;
  std::size_t hits = 0;
  for (std::size_t pos = text.find(term); pos != std::string::npos; pos = text.find(term, pos + 1)) {
    const bool left = pos == 0 || !is_word_char(text[pos - 1]);
    const std::size_t end = pos + term.size();
    const bool right = end == text.size() || !is_word_char(text[end]);
    if (left && right) ++hits;
  }
  return hits;
}

}  // namespace

ChairScores chair(const std::vector<std::string>& responses,
                  const std::vector<std::vector<std::string>>& ground_truth_terms,
                  const std::vector<std::string>& vocabulary) {
  if (responses.size() != ground_truth_terms.size()) throw ShapeError("responses and ground truth differ in length");
  if (responses.empty()) throw ShapeError("CHAIR needs at least one response");
  std::vector<std::string> vocab;
  for (const auto& v : vocabulary) {
    auto t = lower(v);
    if (!t.empty() && std::find(vocab.begin(), vocab.end(), t) == vocab.end()) vocab.push_back(std::move(t));
  }
  std::size_t flagged = 0;
  std::size_t mentions = 0;
  std::size_t hallucinated = 0;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const auto text = lower(responses[i]);
    std::unordered_set<std::string> truth;
    for (const auto& t : ground_truth_terms[i]) truth.insert(lower(t));
    bool any = false;
    for (const auto& term : vocab) {
      const auto hits = count_mentions(text, term);
      mentions += hits;
      if (hits > 0 && truth.count(term) == 0) {
        hallucinated += hits;
        any = true;
      }
    }
    if (any) ++flagged;
  }
  return {static_cast<double>(flagged) / static_cast<double>(responses.size()),
          mentions == 0 ? 0.0 : static_cast<double>(hallucinated) / static_cast<double>(mentions)};
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("Wilcoxon inputs differ in length");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  const std::size_t n = diffs.size();
  if (n < 5) throw InsufficientDataError("Wilcoxon needs at least 5 nonzero differences, got " + std::to_string(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return std::abs(diffs[x]) < std::abs(diffs[y]); });
  std::vector<double> ranks(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    const auto size = static_cast<double>(j - i + 1);
    tie_term += size * size * size - size;
    i = j + 1;
  }
  double w_plus = 0.0;
  double w_minus = 0.0;
  for (std::size_t i = 0; i < n; ++i) (diffs[i] > 0.0 ? w_plus : w_minus) += ranks[i];
  const double w = std::min(w_plus, w_minus);

  if (n <= kWilcoxonExactMax) {
    // Ranks are multiples of 1/2; enumerate all sign patterns on doubled ranks.
    std::vector<long long> doubled(n);
    for (std::size_t i = 0; i < n; ++i) doubled[i] = std::llround(2.0 * ranks[i]);
    const long long target = std::llround(2.0 * w);
    const std::size_t patterns = std::size_t{1} << n;
    std::size_t at_or_below = 0;
    for (std::size_t mask = 0; mask < patterns; ++mask) {
      long long s = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (std::size_t{1} << i)) s += doubled[i];
      }
      if (s <= target) ++at_or_below;
    }
    const double p = std::min(1.0, 2.0 * static_cast<double>(at_or_below) / static_cast<double>(patterns));
    return {w, p, n, true};
  }

  const auto nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  if (!(var > 0.0)) return {w, 1.0, n, false};
  const double z = std::max(0.0, std::abs(w - mean) - 0.5) / std::sqrt(var);
  const double p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return {w, p, n, false};
}

}  // namespace gauc
