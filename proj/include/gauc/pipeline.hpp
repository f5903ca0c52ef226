#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gauc/dataset.hpp"
#include "gauc/kernel.hpp"
#include "gauc/metrics.hpp"
#include "gauc/objective.hpp"

namespace gauc {

enum class Method { kGauc, kRandom, kKnn, kHerding };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct DatasetPaths {
  std::filesystem::path embeddings;
  std::filesystem::path labels;
  std::filesystem::path class_names;
  std::filesystem::path prompts_original;
  std::filesystem::path prompts_paraphrase;
};

inline constexpr double kDefaultTemperature = 4.0;

struct RunConfig {
  // Paths as written in the config (echoed verbatim) and resolved against the
  // config file's directory (used for loading).
  DatasetPaths data;
  DatasetPaths resolved;
  Method method = Method::kGauc;
  std::size_t shots = 3;
  std::size_t iterations = 1000;
  double alpha = 0.1;
  double beta = 0.1;
  BandwidthRule sigma_rule = BandwidthRule::kMedianHeuristic;
  double sigma = 1.0;  // used when sigma_rule is fixed
  double temperature = kDefaultTemperature;
  double prompt_coupling = 0.3;
  std::size_t probe_cap = kDefaultProbeCap;
  std::size_t ece_bins = kDefaultEceBins;
  double shrinkage = kDefaultShrinkage;
  bool l2_normalize = false;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path out_dir = ".";
  std::optional<std::filesystem::path> selections_dir;  // eval input; defaults to out_dir
  std::optional<std::filesystem::path> baseline;        // eval: selection file enabling Wilcoxon
};

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
// Checks the invariants and that every dataset file exists.
void validate(const RunConfig& config);
std::string config_echo(const RunConfig& config);

std::vector<std::uint64_t> parse_seed_list(std::string_view text);
std::string seed_token(const std::vector<std::uint64_t>& seeds);
std::string output_name(std::string_view command, Method method, std::size_t shots,
                        const std::vector<std::uint64_t>& seeds);

struct SynthArgs {
  SynthConfig data;
  PromptSynthConfig prompts;
  std::filesystem::path out_dir = ".";
};

// Writes embeddings.gemb, labels.csv, classes.txt, prompts_original.gemb,
// prompts_paraphrase.gemb and a dataset.json config pointing at them.
std::vector<std::filesystem::path> cmd_synth(const SynthArgs& args);
// One select_<method>_<shots>shot_seed<seed>.json per seed.
std::vector<std::filesystem::path> cmd_select(const RunConfig& config);
std::filesystem::path cmd_eval(const RunConfig& config);
std::filesystem::path cmd_ablate(const RunConfig& config);

// 0 success, 2 config, 3 data/format, 4 numerical, 1 anything else.
int exit_code_for(const std::exception& e);

// Field that carries the wall-clock time; the only nondeterministic content.
inline constexpr std::string_view kTimestampField = "generated_at";

}  // namespace gauc
