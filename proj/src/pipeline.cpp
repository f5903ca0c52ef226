#include "gauc/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "json.hpp"

#include "gauc/baselines.hpp"
#include "gauc/error.hpp"
#include "gauc/evaluation.hpp"
#include "gauc/rng.hpp"

namespace gauc {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kGauc: return "gauc";
    case Method::kRandom: return "random";
    case Method::kKnn: return "knn";
    case Method::kHerding: return "herding";
  }
  return "gauc";
}

Method parse_method(std::string_view s) {
  if (s == "gauc") return Method::kGauc;
  if (s == "random") return Method::kRandom;
  if (s == "knn") return Method::kKnn;
  if (s == "herding") return Method::kHerding;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected gauc, random, knn or herding)");
}

namespace {

std::string_view to_string(BandwidthRule r) { return r == BandwidthRule::kFixed ? "fixed" : "median_heuristic"; }

BandwidthRule parse_rule(std::string_view s) {
  if (s == "fixed") return BandwidthRule::kFixed;
  if (s == "median_heuristic") return BandwidthRule::kMedianHeuristic;
  throw ConfigError("unknown sigma_rule '" + std::string(s) + "'");
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json metadata() { return json{{std::string(kTimestampField), utc_now()}}; }

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::uint64_t fnv1a_bytes(const std::string& bytes, std::uint64_t h = 0xCBF29CE484222325ULL) {
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string dataset_fingerprint(const DatasetPaths& p) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& f : {p.embeddings, p.labels, p.class_names, p.prompts_original, p.prompts_paraphrase}) {
    h = fnv1a_bytes(read_text(f), h);
  }
  return hex64(h);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

struct Inputs {
  LabeledDataset dataset;
  PromptEmbeddingSet prompts;
  std::string fingerprint;
};

Inputs load_inputs(const RunConfig& cfg) {
  validate(cfg);
  const auto& r = cfg.resolved;
  auto ds = load_dataset(r.embeddings, r.labels, r.class_names);
  PromptEmbeddingSet prompts(read_embeddings(r.prompts_original), read_embeddings(r.prompts_paraphrase));
  return {std::move(ds), std::move(prompts), dataset_fingerprint(r)};
}

json dataset_json(const Inputs& in) {
  return {{"rows", in.dataset.rows()},
          {"dim", in.dataset.dim()},
          {"classes", in.dataset.num_classes()},
          {"fingerprint", in.fingerprint}};
}

std::optional<KernelConfig> explicit_kernel(const RunConfig& cfg) {
  if (cfg.sigma_rule == BandwidthRule::kFixed) return KernelConfig(cfg.sigma, BandwidthRule::kFixed);
  return std::nullopt;
}

EvaluationContext make_context(const Inputs& in, const RunConfig& cfg, std::uint64_t seed) {
  return {in.dataset,
          in.prompts,
          PredictorConfig(cfg.temperature, cfg.prompt_coupling),
          select_probes(in.dataset, cfg.probe_cap, seed),
          explicit_kernel(cfg),
          cfg.shrinkage,
          cfg.l2_normalize};
}

json echo_json(const RunConfig& c) {
  return {{"data",
           {{"embeddings", c.data.embeddings.generic_string()},
            {"labels", c.data.labels.generic_string()},
            {"class_names", c.data.class_names.generic_string()},
            {"prompts_original", c.data.prompts_original.generic_string()},
            {"prompts_paraphrase", c.data.prompts_paraphrase.generic_string()}}},
          {"method", std::string(to_string(c.method))},
          {"shots", c.shots},
          {"iterations", c.iterations},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"sigma_rule", std::string(to_string(c.sigma_rule))},
          {"sigma", c.sigma},
          {"temperature", c.temperature},
          {"prompt_coupling", c.prompt_coupling},
          {"probe_cap", c.probe_cap},
          {"ece_bins", c.ece_bins},
          {"shrinkage", c.shrinkage},
          {"l2_normalize", c.l2_normalize},
          {"seeds", c.seeds}};
}

json terms_json(const ObjectiveValue& v) {
  return {{"total", v.total}, {"mmd2", v.mmd2}, {"emid", v.emid}, {"var", v.var}};
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  const json j = parse_json(json_text, "config");
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known = {
      "data",      "method",      "shots",       "iterations",      "alpha",     "beta",
      "sigma_rule", "sigma",      "temperature", "prompt_coupling", "probe_cap", "ece_bins",
      "shrinkage", "l2_normalize", "seeds",      "out",             "selections", "baseline"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown config field '" + key + "'");
  }
  RunConfig c;
  if (j.contains("data")) {
    const auto& d = j.at("data");
    if (!d.is_object()) throw ConfigError("config field 'data' must be an object");
    c.data.embeddings = get_or<std::string>(d, "embeddings", "");
    c.data.labels = get_or<std::string>(d, "labels", "");
    c.data.class_names = get_or<std::string>(d, "class_names", "");
    c.data.prompts_original = get_or<std::string>(d, "prompts_original", "");
    c.data.prompts_paraphrase = get_or<std::string>(d, "prompts_paraphrase", "");
  }
  c.resolved = {resolve(base_dir, c.data.embeddings), resolve(base_dir, c.data.labels),
                resolve(base_dir, c.data.class_names), resolve(base_dir, c.data.prompts_original),
                resolve(base_dir, c.data.prompts_paraphrase)};
  c.method = parse_method(get_or<std::string>(j, "method", "gauc"));
  c.shots = get_or<std::size_t>(j, "shots", c.shots);
  c.iterations = get_or<std::size_t>(j, "iterations", c.iterations);
  c.alpha = get_or<double>(j, "alpha", c.alpha);
  c.beta = get_or<double>(j, "beta", c.beta);
  c.sigma_rule = parse_rule(get_or<std::string>(j, "sigma_rule", "median_heuristic"));
  c.sigma = get_or<double>(j, "sigma", c.sigma);
  c.temperature = get_or<double>(j, "temperature", c.temperature);
  c.prompt_coupling = get_or<double>(j, "prompt_coupling", c.prompt_coupling);
  c.probe_cap = get_or<std::size_t>(j, "probe_cap", c.probe_cap);
  c.ece_bins = get_or<std::size_t>(j, "ece_bins", c.ece_bins);
  c.shrinkage = get_or<double>(j, "shrinkage", c.shrinkage);
  c.l2_normalize = get_or<bool>(j, "l2_normalize", c.l2_normalize);
  c.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", c.seeds);
  if (j.contains("out")) c.out_dir = get_or<std::string>(j, "out", ".");
  if (j.contains("selections")) c.selections_dir = fs::path(get_or<std::string>(j, "selections", "."));
  if (j.contains("baseline")) c.baseline = resolve(base_dir, get_or<std::string>(j, "baseline", ""));
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  return parse_run_config(read_text(path), path.parent_path());
}

void validate(const RunConfig& c) {
  if (c.seeds.empty()) throw ConfigError("seed list is empty");
  if (c.shots == 0) throw ConfigError("shots must be >= 1");
  if (c.ece_bins == 0) throw ConfigError("ece_bins must be >= 1");
  if (c.probe_cap == 0) throw ConfigError("probe_cap must be >= 1");
  ObjectiveWeights(c.alpha, c.beta);
  PredictorConfig(c.temperature, c.prompt_coupling);
  if (c.sigma_rule == BandwidthRule::kFixed) KernelConfig(c.sigma, BandwidthRule::kFixed);
  if (!(c.shrinkage >= 0.0 && c.shrinkage <= 1.0)) throw ConfigError("shrinkage must lie in [0, 1]");
  const std::pair<const char*, const fs::path*> files[] = {
      {"embeddings", &c.resolved.embeddings},
      {"labels", &c.resolved.labels},
      {"class_names", &c.resolved.class_names},
      {"prompts_original", &c.resolved.prompts_original},
      {"prompts_paraphrase", &c.resolved.prompts_paraphrase}};
  for (const auto& [name, path] : files) {
    if (path->empty()) throw ConfigError(std::string("config is missing data.") + name);
    if (!fs::exists(*path)) throw ConfigError(std::string("data.") + name + " not found: " + path->string());
  }
}

std::string config_echo(const RunConfig& config) { return echo_json(config).dump(); }

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    const auto tok = text.substr(start, end - start);
    if (tok.empty()) throw ConfigError("empty entry in seed list '" + std::string(text) + "'");
    std::uint64_t v = 0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) {
      throw ConfigError("bad seed '" + std::string(tok) + "'");
    }
    seeds.push_back(v);
    start = end + 1;
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  return seeds;
}

std::string seed_token(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(seeds[i]);
  }
  return out;
}

std::string output_name(std::string_view command, Method method, std::size_t shots,
                        const std::vector<std::uint64_t>& seeds) {
  return std::string(command) + "_" + std::string(to_string(method)) + "_" + std::to_string(shots) + "shot_seed" +
         seed_token(seeds) + ".json";
}

std::vector<fs::path> cmd_synth(const SynthArgs& args) {
  std::error_code ec;
  fs::create_directories(args.out_dir, ec);
  if (ec) throw IoError("cannot create " + args.out_dir.string() + ": " + ec.message());
  const auto ds = generate_synthetic(args.data);
  const auto prompts = generate_prompts(args.prompts);

  const fs::path emb = args.out_dir / "embeddings.gemb";
  const fs::path labels = args.out_dir / "labels.csv";
  const fs::path names = args.out_dir / "classes.txt";
  const fs::path orig = args.out_dir / "prompts_original.gemb";
  const fs::path para = args.out_dir / "prompts_paraphrase.gemb";
  const fs::path cfg = args.out_dir / "dataset.json";

  write_embeddings(ds.embeddings(), emb);
  write_labels({{ds.labels().begin(), ds.labels().end()}, {ds.splits().begin(), ds.splits().end()}}, labels);
  write_class_names(ds.class_names(), names);
  write_embeddings(prompts.original, orig);
  write_embeddings(prompts.paraphrases, para);

  const json config = {{"data",
                        {{"embeddings", "embeddings.gemb"},
                         {"labels", "labels.csv"},
                         {"class_names", "classes.txt"},
                         {"prompts_original", "prompts_original.gemb"},
                         {"prompts_paraphrase", "prompts_paraphrase.gemb"}}}};
  write_json(cfg, config);
  return {emb, labels, names, orig, para, cfg};
}

std::vector<fs::path> cmd_select(const RunConfig& cfg) {
  const auto in = load_inputs(cfg);
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.out_dir.string() + ": " + ec.message());

  std::vector<fs::path> written;
  for (const auto seed : cfg.seeds) {
    json j = {{"command", "select"},
              {"method", std::string(to_string(cfg.method))},
              {"shots_per_class", cfg.shots},
              {"seed", seed},
              {"dataset", dataset_json(in)}};
    if (cfg.method == Method::kKnn) {
      j["query_dependent"] = true;
      j["indices"] = json::array();
    } else {
      const auto ctx = make_context(in, cfg, seed);
      std::optional<Coreset> coreset;
      if (cfg.method == Method::kGauc) {
        const ObjectiveWeights w(cfg.alpha, cfg.beta);
        auto r = greedy_select(ctx, cfg.shots, cfg.iterations, w, seed);
        j["query_dependent"] = false;
        j["indices"] = std::vector<std::size_t>(r.coreset.indices().begin(), r.coreset.indices().end());
        j["weights"] = {{"alpha", w.alpha}, {"beta", w.beta}};
        j["iterations"] = r.iterations;
        j["accepted_swaps"] = r.accepted_swaps;
        j["objective_trace"] = r.objective_trace;
        j["terms"] = terms_json(r.terms);
      } else {
        const Coreset c = cfg.method == Method::kRandom ? select_random(in.dataset, cfg.shots, seed)
                                                        : select_herding(in.dataset, cfg.shots, ctx.kernel());
        j["query_dependent"] = false;
        j["indices"] = std::vector<std::size_t>(c.indices().begin(), c.indices().end());
        j["terms"] = {{"mmd2", mmd_squared(ctx.reference(), ctx.mmd_rows(c.indices()), ctx.kernel())}};
      }
      j["sigma"] = ctx.kernel().sigma;
    }
    j["config"] = echo_json(cfg);
    j["metadata"] = metadata();
    const fs::path path = cfg.out_dir / output_name("select", cfg.method, cfg.shots, {seed});
    write_json(path, j);
    written.push_back(path);
  }
  return written;
}

namespace {

struct LoadedSelection {
  Method method;
  std::size_t shots;
  Demonstrations demos;
};

LoadedSelection load_selection(const fs::path& path, const Inputs& in) {
  const json j = parse_json(read_text(path), path.string());
  try {
    if (j.at("dataset").at("fingerprint").get<std::string>() != in.fingerprint) {
      throw ConfigError(path.string() + " was produced from a different dataset");
    }
    const Method m = parse_method(j.at("method").get<std::string>());
    const auto shots = j.at("shots_per_class").get<std::size_t>();
    if (j.at("query_dependent").get<bool>()) return {m, shots, Demonstrations::knn(shots)};
    auto idx = j.at("indices").get<std::vector<std::size_t>>();
    return {m, shots, Demonstrations::fixed(Coreset(in.dataset, std::move(idx), shots))};
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed selection file: " + e.what());
  }
}

json metric_block(const EvalSummary& s) {
  json metrics = json::object();
  for (std::size_t i = 0; i < s.metric_names.size(); ++i) {
    metrics[s.metric_names[i]] = {{"mean", s.aggregate[i].mean},
                                  {"std", s.aggregate[i].std},
                                  {"display", format_mean_std(s.aggregate[i])}};
  }
  return metrics;
}

json per_run_block(const EvalSummary& s, const std::vector<std::uint64_t>& seeds) {
  json per_run = {{"seeds", seeds}};
  for (std::size_t i = 0; i < s.metric_names.size(); ++i) per_run[s.metric_names[i]] = s.per_run[i];
  return per_run;
}

json significance_block(const EvalSummary& ours, const EvalSummary& theirs) {
  json tests = json::object();
  for (std::size_t i = 0; i < ours.metric_names.size(); ++i) {
    const auto& name = ours.metric_names[i];
    const auto it = std::find(theirs.metric_names.begin(), theirs.metric_names.end(), name);
    if (it == theirs.metric_names.end()) continue;
    const auto& other = theirs.per_run[static_cast<std::size_t>(it - theirs.metric_names.begin())];
    try {
      const auto w = wilcoxon_signed_rank(ours.per_run[i], other);
      tests[name] = {{"statistic", w.statistic}, {"p_value", w.p_value}, {"n", w.n}, {"exact", w.exact}};
    } catch (const InsufficientDataError& e) {
      tests[name] = {{"error", e.what()}};
    }
  }
  return tests;
}

json row_json(const EvalSummary& s, const std::vector<std::uint64_t>& seeds) {
  return {{"metrics", metric_block(s)},
          {"var_runs", s.var_runs ? json(*s.var_runs) : json(nullptr)},
          {"per_run", per_run_block(s, seeds)}};
}

}  // namespace

fs::path cmd_eval(const RunConfig& cfg) {
  const auto in = load_inputs(cfg);
  const PredictorConfig pc(cfg.temperature, cfg.prompt_coupling);
  const fs::path sel_dir = cfg.selections_dir.value_or(cfg.out_dir);

  auto evaluate_files = [&](const fs::path& dir, Method method, std::size_t shots) {
    std::vector<RunMetrics> runs;
    for (const auto seed : cfg.seeds) {
      const auto sel = load_selection(dir / output_name("select", method, shots, {seed}), in);
      if (sel.method != method || sel.shots != shots) {
        throw ConfigError("selection file for seed " + std::to_string(seed) + " does not match method/shots");
      }
      runs.push_back(evaluate_run(in.dataset, in.prompts, pc, sel.demos, cfg.ece_bins));
    }
    return summarize_runs(runs);
  };

  const auto ours = evaluate_files(sel_dir, cfg.method, cfg.shots);
  json row = {{"method", std::string(to_string(cfg.method))}, {"shots_per_class", cfg.shots}};
  row.update(row_json(ours, cfg.seeds));
  if (cfg.baseline) {
    const auto base = load_selection(*cfg.baseline, in);
    const auto theirs = evaluate_files(cfg.baseline->parent_path(), base.method, base.shots);
    row["significance"] = {{"baseline", std::string(to_string(base.method))},
                           {"baseline_shots_per_class", base.shots},
                           {"tests", significance_block(ours, theirs)}};
  }

  json report = {{"command", "eval"},
                 {"dataset", dataset_json(in)},
                 {"seeds", cfg.seeds},
                 {"ece_bins", cfg.ece_bins},
                 {"rows", json::array({row})},
                 {"config", echo_json(cfg)},
                 {"metadata", metadata()}};
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  const fs::path path = cfg.out_dir / output_name("eval", cfg.method, cfg.shots, cfg.seeds);
  write_json(path, report);
  return path;
}

fs::path cmd_ablate(const RunConfig& cfg) {
  const auto in = load_inputs(cfg);
  const PredictorConfig pc(cfg.temperature, cfg.prompt_coupling);
  const std::vector<std::pair<std::string, ObjectiveWeights>> grid = {
      {"full", {cfg.alpha, cfg.beta}},
      {"no_emid", {0.0, cfg.beta}},
      {"no_var", {cfg.alpha, 0.0}},
      {"mmd_only", {0.0, 0.0}}};
  std::vector<ObjectiveWeights> weights;
  for (const auto& g : grid) weights.push_back(g.second);

  std::vector<std::vector<RunMetrics>> runs(grid.size());
  std::vector<std::vector<ObjectiveValue>> terms(grid.size());
  for (const auto seed : cfg.seeds) {
    const auto ctx = make_context(in, cfg, seed);
    const auto results = ablate(ctx, weights, cfg.shots, cfg.iterations, seed);
    for (std::size_t v = 0; v < grid.size(); ++v) {
      runs[v].push_back(evaluate_run(in.dataset, in.prompts, pc, Demonstrations::fixed(results[v].coreset), cfg.ece_bins));
      terms[v].push_back(results[v].terms);
    }
  }

  std::vector<EvalSummary> summaries;
  for (const auto& r : runs) summaries.push_back(summarize_runs(r));
  json rows = json::array();
  for (std::size_t v = 0; v < grid.size(); ++v) {
    json row = {{"variant", grid[v].first}, {"alpha", grid[v].second.alpha}, {"beta", grid[v].second.beta}};
    row.update(row_json(summaries[v], cfg.seeds));
    std::vector<double> mmd2, emid, var;
    for (const auto& t : terms[v]) {
      mmd2.push_back(t.mmd2);
      emid.push_back(t.emid);
      var.push_back(t.var);
    }
    row["objective_terms"] = {{"mmd2", mmd2}, {"emid", emid}, {"var", var}};
    if (v > 0) row["significance_vs_full"] = significance_block(summaries[0], summaries[v]);
    rows.push_back(row);
  }

  json report = {{"command", "ablate"},
                 {"dataset", dataset_json(in)},
                 {"shots_per_class", cfg.shots},
                 {"iterations", cfg.iterations},
                 {"seeds", cfg.seeds},
                 {"rows", rows},
                 {"config", echo_json(cfg)},
                 {"metadata", metadata()}};
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  const fs::path path = cfg.out_dir / output_name("ablate", Method::kGauc, cfg.shots, cfg.seeds);
  write_json(path, report);
  return path;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const IndexError*>(&e)) return 2;
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const DataError*>(&e) ||
      dynamic_cast<const IoError*>(&e) || dynamic_cast<const ShapeError*>(&e) ||
      dynamic_cast<const InsufficientDataError*>(&e)) {
    return 3;
  }
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  return 1;
}

}  // namespace gauc
