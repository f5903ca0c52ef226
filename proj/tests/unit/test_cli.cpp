#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "gauc_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(GAUC_CLI) + " " + args + " >/dev/null 2>" + (kWork / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

json without_timestamp(json j) {
  j.erase("metadata");
  return j;
}

struct Workspace {
  Workspace() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    REQUIRE(run("synth --seed 3 --classes 3 --per-class 40 --dim 6 --out " + (kWork / "data").string()) == 0);
  }
  std::string config() const { return (kWork / "data" / "dataset.json").string(); }
};

}  // namespace

TEST_CASE("synth output is deterministic and loadable") {
  Workspace w;
  REQUIRE(run("synth --seed 3 --classes 3 --per-class 40 --dim 6 --out " + (kWork / "again").string()) == 0);
  for (const auto* f : {"embeddings.gemb", "labels.csv", "classes.txt", "prompts_original.gemb", "prompts_paraphrase.gemb",
                        "dataset.json"}) {
    CHECK(slurp(kWork / "data" / f) == slurp(kWork / "again" / f));
  }
  CHECK(slurp(kWork / "data" / "labels.csv").rfind("index,label,split\n", 0) == 0);
  REQUIRE(run("synth --seed 3 --paraphrase-noise 0 --out " + (kWork / "flat").string()) == 0);
  const auto o = slurp(kWork / "flat" / "prompts_original.gemb");
  const auto p = slurp(kWork / "flat" / "prompts_paraphrase.gemb");
  CHECK(o.substr(20, 32) == p.substr(20, 32));  // first paraphrase row equals the first template
}

TEST_CASE("select writes one file per seed") {
  Workspace w;
  const auto out = (kWork / "sel").string();
  REQUIRE(run("select --config " + w.config() + " --method random --shots 1 --seed 1,2 --out " + out) == 0);
  const auto r = load(kWork / "sel" / "select_random_1shot_seed1.json");
  CHECK(r["indices"].size() == 3);
  CHECK(fs::exists(kWork / "sel" / "select_random_1shot_seed2.json"));
  CHECK(r["terms"].contains("mmd2"));
  CHECK_FALSE(r["terms"].contains("emid"));

  REQUIRE(run("select --config " + w.config() + " --method gauc --iterations 0 --seed 1 --out " + out) == 0);
  const auto g0 = load(kWork / "sel" / "select_gauc_3shot_seed1.json");
  CHECK(g0["objective_trace"].size() == 1);

  REQUIRE(run("select --config " + w.config() + " --method gauc --iterations 50 --seed 1 --out " + out) == 0);
  const auto g = load(kWork / "sel" / "select_gauc_3shot_seed1.json");
  CHECK(g["objective_trace"].size() == 51);
  CHECK(g["terms"]["emid"].get<double>() > 0.0);
  CHECK(g["terms"]["var"].get<double>() > 0.0);
  CHECK(g["config"]["iterations"] == 50);
  CHECK(g["metadata"].contains("generated_at"));

  REQUIRE(run("select --config " + w.config() + " --method herding --seed 1 --out " + out) == 0);
  const auto h = load(kWork / "sel" / "select_herding_3shot_seed1.json");
  CHECK_FALSE(h["terms"].contains("emid"));
  CHECK_FALSE(h["terms"].contains("var"));

  REQUIRE(run("select --config " + w.config() + " --method knn --seed 1 --out " + out) == 0);
  CHECK(load(kWork / "sel" / "select_knn_3shot_seed1.json")["query_dependent"] == true);
}

TEST_CASE("select and eval are reproducible") {
  Workspace w;
  auto pipeline = [&](const std::string& dir) {
    const auto out = (kWork / dir).string();
    REQUIRE(run("select --config " + w.config() + " --iterations 100 --seed 4,5 --out " + out) == 0);
    REQUIRE(run("select --config " + w.config() + " --method random --seed 4,5 --out " + out) == 0);
    REQUIRE(run("eval --config " + w.config() + " --seed 4,5 --out " + out + " --baseline " + out +
                "/select_random_3shot_seed4.json") == 0);
  };
  pipeline("one");
  pipeline("two");
  for (const auto* f : {"select_gauc_3shot_seed4.json", "select_gauc_3shot_seed5.json", "eval_gauc_3shot_seed4-5.json"}) {
    CHECK(without_timestamp(load(kWork / "one" / f)) == without_timestamp(load(kWork / "two" / f)));
  }
  const auto rep = load(kWork / "one" / "eval_gauc_3shot_seed4-5.json");
  const auto& row = rep["rows"][0];
  CHECK(row["method"] == "gauc");
  CHECK(row["metrics"]["accuracy"]["display"].get<std::string>().find("\xC2\xB1") != std::string::npos);
  CHECK(row["significance"]["baseline"] == "random");
  CHECK(row["per_run"]["accuracy"].size() == 2);
}

TEST_CASE("ablate emits the four variants") {
  Workspace w;
  const auto out = (kWork / "abl").string();
  REQUIRE(run("ablate --config " + w.config() + " --iterations 40 --seed 1,2 --out " + out) == 0);
  const auto rep = load(kWork / "abl" / "ablate_gauc_3shot_seed1-2.json");
  REQUIRE(rep["rows"].size() == 4);
  const char* names[] = {"full", "no_emid", "no_var", "mmd_only"};
  for (int i = 0; i < 4; ++i) CHECK(rep["rows"][i]["variant"] == names[i]);
  CHECK(rep["rows"][3]["objective_terms"]["emid"][0].get<double>() > 0.0);
  CHECK(rep["rows"][3]["objective_terms"]["var"][0].get<double>() > 0.0);
  CHECK(rep["rows"][0]["metrics"].contains("var_para"));
  CHECK(rep["rows"][0].contains("var_runs"));
}

TEST_CASE("exit codes") {
  Workspace w;
  const auto out = (kWork / "err").string();
  CHECK(run("select --config /nonexistent.json --out " + out) == 3);
  CHECK(run("select --config " + w.config() + " --shots 100 --out " + out) == 2);
  CHECK(run("select --config " + w.config() + " --method mimic --out " + out) == 2);
  CHECK(run("select --config " + w.config() + " --seed x --out " + out) == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(!slurp(kWork / "stderr.txt").empty());

  std::ofstream(kWork / "data" / "embeddings.gemb", std::ios::binary | std::ios::trunc) << "NOPE";
  CHECK(run("select --config " + w.config() + " --out " + out) == 3);

  std::ofstream(kWork / "bad.json") << R"({"data": {"embeddings": "missing.gemb"}})";
  CHECK(run("select --config " + (kWork / "bad.json").string() + " --out " + out) == 2);
}

TEST_CASE("eval rejects selections from another dataset") {
  Workspace w;
  const auto out = (kWork / "mix").string();
  REQUIRE(run("select --config " + w.config() + " --method random --seed 1 --out " + out) == 0);
  REQUIRE(run("synth --seed 4 --classes 3 --per-class 40 --dim 6 --out " + (kWork / "other").string()) == 0);
  CHECK(run("eval --config " + (kWork / "other" / "dataset.json").string() + " --method random --seed 1 --selections " +
            out + " --out " + out) == 2);
}
