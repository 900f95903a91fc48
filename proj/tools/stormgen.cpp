#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "stormgen/error.hpp"
#include "stormgen/pipeline.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kInternalError = 2;

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("stormgen"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Bias correction and stochastic downscaling of daily temperature fields"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Pipeline configuration (JSON)")->required();
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--variant", variant, "Downscaling variant: xstar, trend or trendvar")
        ->check(CLI::IsMember({"xstar", "trend", "trendvar"}));
    sub->add_flag("-q,--quiet", quiet, "Only log warnings and errors");
  };
  for (stormgen::Stage s : stormgen::kAllStages) {
    add_common(app.add_subcommand(std::string(stormgen::stage_name(s)), "Run the " +
                                                                          std::string(stormgen::stage_name(s)) +
                                                                          " stage"));
  }
  add_common(app.add_subcommand("run", "Run every stage in order"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUserError;
  }
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    auto config = stormgen::PipelineConfig::load(config_path);
    if (seed) config.seed = *seed;
    if (variant) config.variants = {stormgen::parse_variant(*variant)};
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "run") {
      stormgen::run_pipeline(config);
    } else {
      stormgen::run_stage(stormgen::parse_stage(name), config);
    }
  } catch (const stormgen::UsageError& e) {
    spdlog::error("{}", e.what());
    return kUserError;
  } catch (const stormgen::IngestError& e) {
    spdlog::error("{}", e.what());
    return kUserError;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kInternalError;
  }
  return kOk;
}
