#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "stormgen/error.hpp"
#include "stormgen/field_io.hpp"
#include "stormgen/hash.hpp"
#include "stormgen/pipeline.hpp"

using namespace stormgen;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config(const std::string& out) {
  return {{"output_dir", out},
          {"seed", 5},
          {"bootstrap", 500},
          {"max_lag", 10},
          {"world",
           {{"coarse_nx", 2},
            {"coarse_ny", 2},
            {"fine_per_coarse", 3},
            {"train", {"1961-01-01", "1975-12-31"}},
            {"test", {"1976-01-01", "1980-12-31"}},
            {"seed", 3}}}};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "stormgen_unit" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string file_digest(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return sha256_hex(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(STORMGEN_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("stage names round trip") {
  for (auto s : kAllStages) CHECK(parse_stage(stage_name(s)) == s);
  CHECK_THROWS_AS(parse_stage("nope"), UsageError);
}

TEST_CASE("configuration validation") {
  const auto dir = fresh_dir("config");
  auto j = small_config("out");
  CHECK_NOTHROW(PipelineConfig::from_json(j, dir));
  const auto cfg = PipelineConfig::from_json(j, dir);
  CHECK(cfg.output_dir == dir / "out");
  CHECK(cfg.obs_fine == dir / "out" / "world" / "obs_fine.bin");
  CHECK(cfg.variants.size() == 3);

  auto overlap = j;
  overlap["train"] = {"1961-01-01", "1975-12-31"};
  overlap["test"] = {"1975-06-01", "1980-12-31"};
  CHECK_THROWS_AS(PipelineConfig::from_json(overlap, dir), UsageError);
  auto method = j;
  method["methods"] = {"xstar", "magic"};
  CHECK_THROWS_AS(PipelineConfig::from_json(method, dir), UsageError);
  CHECK_THROWS_AS(PipelineConfig::load(dir / "missing.json"), UsageError);

  auto other = PipelineConfig::from_json(j, dir);
  other.seed = 6;
  CHECK(other.hash() != cfg.hash());
  auto moved = j;
  moved["output_dir"] = "elsewhere";
  CHECK(PipelineConfig::from_json(moved, dir).hash() == cfg.hash());
}

TEST_CASE("stages report missing upstream artifacts") {
  const auto dir = fresh_dir("order");
  const auto cfg = PipelineConfig::from_json(small_config("out"), dir);
  run_stage(Stage::kSynthWorld, cfg);
  for (auto s : {Stage::kUpscale, Stage::kFitMoments, Stage::kBiasCorrect, Stage::kFitResiduals, Stage::kEqm}) {
    run_stage(s, cfg);
  }
  try {
    run_stage(Stage::kEvaluate, cfg);
    FAIL("expected an error");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("run downscale first") != std::string::npos);
  }
  const auto empty = PipelineConfig::from_json(small_config("empty"), dir);
  CHECK_THROWS_AS(run_stage(Stage::kDownscale, empty), UsageError);
}

TEST_CASE("end-to-end run is reproducible") {
  const auto dir = fresh_dir("e2e");
  const auto cfg = PipelineConfig::from_json(small_config("out"), dir);
  run_pipeline(cfg);
  const auto report = cfg.output_dir / "evaluate" / "report.json";
  REQUIRE(fs::exists(report));
  const auto doc = read_json(report);
  CHECK(doc.at("fine").at("methods").contains("trend"));
  CHECK(doc.at("coarse").at("methods").contains("corr"));
  const auto prov = read_json(fs::path(report.string() + ".prov.json"));
  CHECK(prov.at("config_hash") == cfg.hash());
  CHECK(prov.at("stage") == "evaluate");
  CHECK(fs::exists(cfg.output_dir / "evaluate" / "iqd.csv"));

  const auto first = file_digest(report);
  const auto trend = file_digest(cfg.output_dir / "downscale" / "trend.bin");
  run_stage(Stage::kDownscale, cfg);
  CHECK(file_digest(cfg.output_dir / "downscale" / "trend.bin") == trend);
  run_stage(Stage::kEvaluate, cfg);
  CHECK(file_digest(report) == first);

  auto reseeded = cfg;
  reseeded.seed = 99;
  run_stage(Stage::kDownscale, reseeded);
  CHECK(file_digest(cfg.output_dir / "downscale" / "trend.bin") != trend);
}

TEST_CASE("command-line exit codes") {
  const auto dir = fresh_dir("cli");
  const auto config = dir / "config.json";
  {
    std::ofstream out(config);
    out << small_config("out").dump(2);
  }
  CHECK(run_cli("") == 1);
  CHECK(run_cli("frobnicate --config " + config.string()) == 1);
  CHECK(run_cli("upscale") == 1);
  CHECK(run_cli("upscale --config " + (dir / "nope.json").string()) == 1);
  CHECK(run_cli("evaluate --config " + config.string()) == 1);
  CHECK(run_cli("synth-world -q --config " + config.string()) == 0);
  CHECK(run_cli("upscale -q --config " + config.string() + " --seed 9") == 0);
  CHECK(run_cli("downscale --config " + config.string() + " --variant sideways") == 1);
  CHECK(fs::exists(dir / "out" / "upscale" / "obs_coarse.bin"));
}
