#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stormgen/calendar.hpp"
#include "stormgen/downscaler.hpp"
#include "stormgen/grid.hpp"
#include "stormgen/synthetic.hpp"

namespace stormgen {

enum class Stage { kSynthWorld, kUpscale, kFitMoments, kBiasCorrect, kFitResiduals, kDownscale, kEqm, kEvaluate };

inline constexpr std::array<Stage, 8> kAllStages = {Stage::kSynthWorld,  Stage::kUpscale,      Stage::kFitMoments,
                                                    Stage::kBiasCorrect, Stage::kFitResiduals, Stage::kDownscale,
                                                    Stage::kEqm,         Stage::kEvaluate};

std::string_view stage_name(Stage s);
Stage parse_stage(std::string_view name);

/// Declarative configuration of one experiment. Relative paths are resolved
/// against the directory of the configuration file.
struct PipelineConfig {
  std::filesystem::path output_dir;
  std::filesystem::path fine_grid;
  std::filesystem::path coarse_grid;
  std::optional<std::filesystem::path> overlap;
  std::filesystem::path obs_fine;
  std::filesystem::path rcm_coarse;
  Date train_start{}, train_end{}, test_start{}, test_end{};
  std::string catchment_id = "all";
  std::vector<CellId> catchment_cells;  // coarse cell ids; empty means every cell
  std::vector<std::string> methods;     // fine-scale methods to evaluate
  std::vector<Variant> variants;
  std::uint64_t seed = 0;
  double knot_step = 0.001;
  std::size_t bootstrap = 10000;
  int max_lag = 30;
  bool gaussian_marginals = false;
  std::optional<WorldSpec> world;

  static PipelineConfig load(const std::filesystem::path& path);
  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

  /// Canonical form used for hashing (includes command-line overrides).
  nlohmann::json canonical() const;
  std::string hash() const;

 private:
  nlohmann::json source_;
};

/// Runs one stage, writing its artifacts atomically into the output directory.
/// Throws UsageError naming the stage to run first when inputs are missing.
void run_stage(Stage stage, const PipelineConfig& config);

/// Every stage in dependency order (synth-world only when the config has a world).
void run_pipeline(const PipelineConfig& config);

}  // namespace stormgen
