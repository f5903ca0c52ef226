// gauc: synthesise embedding datasets, select coresets, evaluate and ablate.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gauc/error.hpp"
#include "gauc/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string seeds;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--seed", f.seeds, "Comma-separated seed list, e.g. 1,2,3");
  cmd->add_option("--out", f.out, "Output directory");
}

struct SelectFlags {
  std::optional<std::string> method;
  std::optional<std::size_t> shots;
  std::optional<std::size_t> iterations;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> temperature;
  std::optional<double> coupling;
  std::optional<std::size_t> probe_cap;
};

void add_select_flags(CLI::App* cmd, SelectFlags& f) {
  cmd->add_option("--method", f.method, "gauc, random, knn or herding");
  cmd->add_option("--shots", f.shots, "Demonstrations per class");
  cmd->add_option("--iterations", f.iterations, "Swap proposals for gauc");
  cmd->add_option("--alpha", f.alpha, "EMID weight");
  cmd->add_option("--beta", f.beta, "Variance weight");
  cmd->add_option("--temperature", f.temperature, "Predictor softmax temperature");
  cmd->add_option("--prompt-coupling", f.coupling, "Scale of the prompt shift on queries");
  cmd->add_option("--probe-cap", f.probe_cap, "Maximum probe rows used by the objective");
}

gauc::RunConfig build_config(const CommonFlags& c, const SelectFlags& s) {
  gauc::RunConfig cfg = c.config.empty() ? gauc::RunConfig{} : gauc::load_run_config(c.config);
  if (!c.seeds.empty()) cfg.seeds = gauc::parse_seed_list(c.seeds);
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (s.method) cfg.method = gauc::parse_method(*s.method);
  if (s.shots) cfg.shots = *s.shots;
  if (s.iterations) cfg.iterations = *s.iterations;
  if (s.alpha) cfg.alpha = *s.alpha;
  if (s.beta) cfg.beta = *s.beta;
  if (s.temperature) cfg.temperature = *s.temperature;
  if (s.coupling) cfg.prompt_coupling = *s.coupling;
  if (s.probe_cap) cfg.probe_cap = *s.probe_cap;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free coreset selection over embedding dumps"};
  app.require_subcommand(1);

  gauc::SynthArgs synth;
  std::string synth_seed;
  std::string synth_out = ".";
  std::string imbalance;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic labelled embedding dataset and prompt sets");
  synth_cmd->add_option("--seed", synth_seed, "Seed (first entry of a list is used)");
  synth_cmd->add_option("--out", synth_out, "Output directory");
  synth_cmd->add_option("--classes", synth.data.classes, "Number of classes")->capture_default_str();
  synth_cmd->add_option("--per-class", synth.data.per_class, "Rows of the largest class")->capture_default_str();
  synth_cmd->add_option("--dim", synth.data.dim, "Embedding dimension")->capture_default_str();
  synth_cmd->add_option("--separation", synth.data.separation, "Distance between class means")->capture_default_str();
  synth_cmd->add_option("--imbalance", imbalance, "Comma-separated relative class sizes");
  synth_cmd->add_option("--text-dim", synth.prompts.text_dim, "Prompt embedding dimension")->capture_default_str();
  synth_cmd->add_option("--templates", synth.prompts.templates, "Original prompt templates")->capture_default_str();
  synth_cmd->add_option("--paraphrases", synth.prompts.paraphrases_per_template, "Paraphrases per template")
      ->capture_default_str();
  synth_cmd->add_option("--prompt-scale", synth.prompts.scale, "Magnitude of prompt vectors")->capture_default_str();
  synth_cmd->add_option("--paraphrase-noise", synth.prompts.paraphrase_noise, "Paraphrase shift scale")
      ->capture_default_str();

  CommonFlags select_common, eval_common, ablate_common;
  SelectFlags select_flags, eval_flags, ablate_flags;
  auto* select_cmd = app.add_subcommand("select", "Select demonstration coresets, one JSON per seed");
  add_common(select_cmd, select_common);
  add_select_flags(select_cmd, select_flags);

  std::optional<std::size_t> ece_bins;
  std::string baseline;
  std::string selections;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate selections over the test split");
  add_common(eval_cmd, eval_common);
  add_select_flags(eval_cmd, eval_flags);
  eval_cmd->add_option("--ece-bins", ece_bins, "Equal-width ECE bins (default 15)");
  eval_cmd->add_option("--baseline", baseline, "Selection file of a baseline; enables Wilcoxon tests");
  eval_cmd->add_option("--selections", selections, "Directory holding select_*.json (default: --out)");

  auto* ablate_cmd = app.add_subcommand("ablate", "Run the full / no_emid / no_var / mmd_only grid");
  add_common(ablate_cmd, ablate_common);
  add_select_flags(ablate_cmd, ablate_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth_cmd->parsed()) {
      if (!synth_seed.empty()) {
        const auto seed = gauc::parse_seed_list(synth_seed).front();
        synth.data.seed = seed;
        synth.prompts.seed = seed;
      }
      if (!imbalance.empty()) {
        synth.data.imbalance.clear();
        std::size_t start = 0;
        while (start <= imbalance.size()) {
          const auto end = std::min(imbalance.find(',', start), imbalance.size());
          try {
            synth.data.imbalance.push_back(std::stod(imbalance.substr(start, end - start)));
          } catch (const std::exception&) {
            throw gauc::ConfigError("bad imbalance entry in '" + imbalance + "'");
          }
          start = end + 1;
        }
      }
      synth.out_dir = synth_out;
      for (const auto& p : gauc::cmd_synth(synth)) std::cout << p.string() << '\n';
    } else if (select_cmd->parsed()) {
      for (const auto& p : gauc::cmd_select(build_config(select_common, select_flags))) std::cout << p.string() << '\n';
    } else if (eval_cmd->parsed()) {
      auto cfg = build_config(eval_common, eval_flags);
      if (ece_bins) cfg.ece_bins = *ece_bins;
      if (!baseline.empty()) cfg.baseline = baseline;
      if (!selections.empty()) cfg.selections_dir = selections;
      std::cout << gauc::cmd_eval(cfg).string() << '\n';
    } else if (ablate_cmd->parsed()) {
      std::cout << gauc::cmd_ablate(build_config(ablate_common, ablate_flags)).string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "gauc: " << e.what() << '\n';
    return gauc::exit_code_for(e);
  }
  return EXIT_SUCCESS;
}
