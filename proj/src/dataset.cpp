#include "gauc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "gauc/error.hpp"
#include "gauc/rng.hpp"

namespace gauc {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kProbe: return "probe";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "probe") return Split::kProbe;
  if (s == "test") return Split::kTest;
  throw FormatError("unknown split tag '" + std::string(s) + "'");
}

LabeledDataset::LabeledDataset(EmbeddingMatrix embeddings, std::vector<int> labels,
                               std::vector<Split> splits, std::vector<std::string> class_names)
    : embeddings_(std::move(embeddings)),
      labels_(std::move(labels)),
      splits_(std::move(splits)),
      class_names_(std::move(class_names)) {
  if (labels_.size() != embeddings_.rows() || splits_.size() != embeddings_.rows()) {
    throw ShapeError("label/split count does not match embedding rows");
  }
  const int k = static_cast<int>(class_names_.size());
  by_split_.assign(3, {});
  train_by_class_.assign(class_names_.size(), {});
  std::vector<std::size_t> class_rows(class_names_.size(), 0);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const int y = labels_[i];
    if (y < 0 || y >= k) {
      throw DataError("label " + std::to_string(y) + " at row " + std::to_string(i) +
                      " outside [0, " + std::to_string(k) + ")");
    }
    ++class_rows[static_cast<std::size_t>(y)];
    by_split_[static_cast<std::size_t>(splits_[i])].push_back(i);
    if (splits_[i] == Split::kTrain) train_by_class_[static_cast<std::size_t>(y)].push_back(i);
  }
  for (std::size_t c = 0; c < class_rows.size(); ++c) {
    if (class_rows[c] > 0 && train_by_class_[c].empty()) {
      throw DataError("class " + class_names_[c] + " has rows but no train member");
    }
  }
}

const std::vector<std::size_t>& LabeledDataset::rows_in(Split s) const {
  return by_split_[static_cast<std::size_t>(s)];
}

const std::vector<std::size_t>& LabeledDataset::train_rows_of(int c) const {
  if (c < 0 || static_cast<std::size_t>(c) >= train_by_class_.size()) {
    throw IndexError("class id " + std::to_string(c) + " out of range");
  }
  return train_by_class_[static_cast<std::size_t>(c)];
}

Coreset::Coreset(const LabeledDataset& dataset, std::vector<std::size_t> indices,
                 std::size_t shots_per_class)
    : indices_(std::move(indices)), shots_per_class_(shots_per_class) {
  if (shots_per_class_ == 0) throw ConfigError("shots_per_class must be >= 1");
  std::vector<std::size_t> per_class(dataset.num_classes(), 0);
  std::unordered_set<std::size_t> seen;
  for (std::size_t idx : indices_) {
    if (idx >= dataset.rows()) throw IndexError("coreset index " + std::to_string(idx) + " out of range");
    if (!seen.insert(idx).second) throw ConfigError("duplicate coreset index " + std::to_string(idx));
    if (dataset.split(idx) != Split::kTrain) {
      throw ConfigError("coreset index " + std::to_string(idx) + " is not in the train split");
    }
    ++per_class[static_cast<std::size_t>(dataset.label(idx))];
  }
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    if (per_class[c] != shots_per_class_) {
      throw ConfigError("class " + dataset.class_names()[c] + " has " + std::to_string(per_class[c]) +
                        " coreset members, expected " + std::to_string(shots_per_class_));
    }
  }
}

Coreset Coreset::with_swap(const LabeledDataset& dataset, std::size_t pos, std::size_t row) const {
  if (pos >= indices_.size()) throw IndexError("coreset position out of range");
  auto next = indices_;
  next[pos] = row;
  return {dataset, std::move(next), shots_per_class_};
}

PromptEmbeddingSet::PromptEmbeddingSet(EmbeddingMatrix orig, EmbeddingMatrix para)
    : original(std::move(orig)), paraphrases(std::move(para)) {
  if (original.rows() < 1 || paraphrases.rows() < 1) {
    throw ConfigError("prompt sets need at least one original and one paraphrase row");
  }
  if (original.dim() != paraphrases.dim()) throw ShapeError("original/paraphrase prompt dims differ");
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

long long parse_int(std::string_view s, std::size_t line_no) {
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw FormatError("label file line " + std::to_string(line_no) + ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

LabelTable read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "index,label,split") {
    throw FormatError(path.string() + ": expected header 'index,label,split'");
  }
  LabelTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_csv(t);
    if (fields.size() != 3) throw FormatError("label file line " + std::to_string(line_no) + ": expected 3 fields");
    const auto index = parse_int(trim(fields[0]), line_no);
    if (index != static_cast<long long>(table.labels.size())) {
      throw FormatError("label file line " + std::to_string(line_no) + ": index out of sequence");
    }
    const auto label = parse_int(trim(fields[1]), line_no);
    if (label < 0) throw DataError("label file line " + std::to_string(line_no) + ": negative label");
    table.labels.push_back(static_cast<int>(label));
    table.splits.push_back(parse_split(trim(fields[2])));
  }
  return table;
}

void write_labels(const LabelTable& table, const std::filesystem::path& path) {
  if (table.labels.size() != table.splits.size()) throw ShapeError("labels/splits length mismatch");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "index,label,split\n";
  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    out << i << ',' << table.labels[i] << ',' << to_string(table.splits[i]) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> read_class_names(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty()) continue;
    names.emplace_back(t);
  }
  if (names.empty()) throw FormatError(path.string() + ": no class names");
  return names;
}

void write_class_names(const std::vector<std::string>& names, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& n : names) out << n << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

LabeledDataset load_dataset(const std::filesystem::path& embeddings, const std::filesystem::path& labels,
                            const std::filesystem::path& class_names) {
  auto matrix = read_embeddings(embeddings);
  auto table = read_labels(labels);
  auto names = read_class_names(class_names);
  return {std::move(matrix), std::move(table.labels), std::move(table.splits), std::move(names)};
}

namespace {

Eigen::MatrixXd random_orthonormal(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
}

// K x dim matrix of class means with pairwise distance `separation` whenever
// dim >= K-1; lower dims keep the first `dim` simplex coordinates.
Eigen::MatrixXd simplex_means(std::size_t k, std::size_t dim, double separation, std::mt19937_64& rng) {
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(kk, kk);
  v.rowwise() -= Eigen::RowVectorXd::Constant(kk, 1.0 / static_cast<double>(k));
  v *= separation / std::sqrt(2.0);
  // Coordinates inside the (K-1)-dimensional centred subspace.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(v.transpose());
  const Eigen::MatrixXd basis = qr.householderQ() * Eigen::MatrixXd::Identity(kk, kk - 1);
  const Eigen::MatrixXd coords = v * basis;  // K x (K-1)
  const auto used = std::min<std::size_t>(k - 1, dim);
  const Eigen::MatrixXd rot = random_orthonormal(dim, used, rng);  // dim x used
  return coords.leftCols(static_cast<Eigen::Index>(used)) * rot.transpose();
}

constexpr double kTemplateJitter = 0.1;
constexpr double kParaphraseJitter = 0.25;

const std::vector<std::string>& tissue_names() {
  static const std::vector<std::string> names = {"adipose", "debris", "lymphocytes", "mucus",
                                                 "muscle",  "normal", "stroma",      "tumor"};
  return names;
}

}  // namespace

LabeledDataset generate_synthetic(const SynthConfig& config) {
  if (config.classes < 2) throw ConfigError("synthetic data needs >= 2 classes");
  if (config.dim < 2) throw ConfigError("synthetic data needs dim >= 2");
  if (config.per_class < 1) throw ConfigError("per_class must be >= 1");
  if (!(config.separation >= 0.0) || !std::isfinite(config.separation)) {
    throw ConfigError("separation must be finite and >= 0");
  }
  std::vector<double> ratios = config.imbalance;
  if (ratios.empty()) ratios.assign(config.classes, 1.0);
  if (ratios.size() != config.classes) {
    throw ConfigError("imbalance list has " + std::to_string(ratios.size()) + " entries for " +
                      std::to_string(config.classes) + " classes");
  }
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("imbalance ratios must be positive");
  }
  const double max_ratio = *std::max_element(ratios.begin(), ratios.end());

  auto rng = make_stream(config.seed, streams::kSynth);
  const Eigen::MatrixXd means = simplex_means(config.classes, config.dim, config.separation, rng);

  std::vector<std::size_t> counts(config.classes);
  for (std::size_t c = 0; c < config.classes; ++c) {
    counts[c] = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(config.per_class) * ratios[c] / max_ratio)));
  }
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});

  std::vector<int> labels;
  labels.reserve(total);
  for (std::size_t c = 0; c < config.classes; ++c) labels.insert(labels.end(), counts[c], static_cast<int>(c));
  std::shuffle(labels.begin(), labels.end(), rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<float> values(total * config.dim);
  for (std::size_t i = 0; i < total; ++i) {
    const auto c = static_cast<Eigen::Index>(labels[i]);
    for (std::size_t j = 0; j < config.dim; ++j) {
      values[i * config.dim + j] = static_cast<float>(means(c, static_cast<Eigen::Index>(j)) + normal(rng));
    }
  }

  // Stratified 70/10/20 split: shuffle each class's rows, then cut.
  std::vector<Split> splits(total, Split::kTest);
  std::vector<std::vector<std::size_t>> members(config.classes);
  for (std::size_t i = 0; i < total; ++i) members[static_cast<std::size_t>(labels[i])].push_back(i);
  for (auto& rows : members) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n = static_cast<double>(rows.size());
    const auto n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.7 * n)));
    const auto n_probe = std::min(rows.size() - n_train, static_cast<std::size_t>(std::llround(0.1 * n)));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      splits[rows[r]] = r < n_train ? Split::kTrain : (r < n_train + n_probe ? Split::kProbe : Split::kTest);
    }
  }

  std::vector<std::string> names;
  for (std::size_t c = 0; c < config.classes; ++c) {
    names.push_back(config.classes <= tissue_names().size() ? tissue_names()[c] : "class_" + std::to_string(c));
  }
  return {EmbeddingMatrix(total, config.dim, std::move(values)), std::move(labels), std::move(splits),
          std::move(names)};
}

PromptEmbeddingSet generate_prompts(const PromptSynthConfig& config) {
  if (config.text_dim < 1) throw ConfigError("text_dim must be >= 1");
  if (config.templates < 1 || config.paraphrases_per_template < 1) {
    throw ConfigError("need >= 1 template and >= 1 paraphrase per template");
  }
  if (!(config.scale > 0.0) || !std::isfinite(config.scale)) throw ConfigError("prompt scale must be positive");
  if (!(config.paraphrase_noise >= 0.0) || !std::isfinite(config.paraphrase_noise)) {
    throw ConfigError("paraphrase noise must be finite and >= 0");
  }
  auto rng = make_stream(config.seed, streams::kPrompts);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(config.text_dim);
  const auto t = static_cast<Eigen::Index>(config.templates);
  const auto p = static_cast<Eigen::Index>(config.paraphrases_per_template);

  // Templates are small perturbations of one base instruction. Paraphrases
  // move a template along a shared rewording direction by a random amount
  // (mean 1, sd 0.5, in units of the noise scale) plus a smaller isotropic
  // jitter.
  Eigen::VectorXd base(d), drift(d);
  for (Eigen::Index j = 0; j < d; ++j) base(j) = normal(rng);
  for (Eigen::Index j = 0; j < d; ++j) drift(j) = normal(rng);
  Eigen::MatrixXd original(t, d);
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j < d; ++j) original(i, j) = base(j) + kTemplateJitter * normal(rng);

  Eigen::MatrixXd para(t * p, d);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index r = 0; r < p; ++r) {
      const double amount = 1.0 + 0.5 * normal(rng);
      for (Eigen::Index j = 0; j < d; ++j) {
        para(i * p + r, j) =
            original(i, j) + config.paraphrase_noise * (amount * drift(j) + kParaphraseJitter * normal(rng));
      }
    }
  }
  original *= config.scale;
  para *= config.scale;
  return {EmbeddingMatrix::from_eigen(original), EmbeddingMatrix::from_eigen(para)};
}

}  // namespace gauc
