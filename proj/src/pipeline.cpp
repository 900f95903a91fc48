#include "stormgen/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "stormgen/bias_correction.hpp"
#include "stormgen/eqm.hpp"
#include "stormgen/error.hpp"
#include "stormgen/evaluation.hpp"
#include "stormgen/field_io.hpp"
#include "stormgen/hash.hpp"
#include "stormgen/moment_model.hpp"
#include "stormgen/residual_model.hpp"
#include "stormgen/stats.hpp"

namespace stormgen {

namespace fs = std::filesystem;

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::kSynthWorld: return "synth-world";
    case Stage::kUpscale: return "upscale";
    case Stage::kFitMoments: return "fit-moments";
    case Stage::kBiasCorrect: return "bias-correct";
    case Stage::kFitResiduals: return "fit-residuals";
    case Stage::kDownscale: return "downscale";
    case Stage::kEqm: return "eqm";
    case Stage::kEvaluate: return "evaluate";
  }
  return "unknown";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : kAllStages) {
    if (stage_name(s) == name) return s;
  }
  throw UsageError("unknown stage '" + std::string(name) + "'");
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::pair<Date, Date> parse_period(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 2) {
    throw UsageError(std::string("config: '") + key + "' must be [start, end]");
  }
  try {
    const Date a = parse_date(j[key][0].get<std::string>()), b = parse_date(j[key][1].get<std::string>());
    if (b < a) throw UsageError(std::string("config: '") + key + "' ends before it starts");
    return {a, b};
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: '") + key + "': " + e.what());
  }
}

}  // namespace

PipelineConfig PipelineConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("config file not found: " + path.string());
  nlohmann::json j;
  try {
    j = read_json(path);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config is not valid JSON: " + std::string(e.what()));
  }
  return from_json(j, path.parent_path());
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  PipelineConfig c;
  c.source_ = j;
  try {
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
    if (j.contains("world")) c.world = WorldSpec::from_json(j["world"]);
    const fs::path world_dir = c.output_dir / "world";
    auto path_or = [&](const char* key, const char* fallback) {
      if (j.contains(key)) return resolve(base_dir, j[key].get<std::string>());
      if (c.world) return world_dir / fallback;
      throw UsageError(std::string("config: missing '") + key + "'");
    };
    c.fine_grid = path_or("fine_grid", "fine_grid.csv");
    c.coarse_grid = path_or("coarse_grid", "coarse_grid.csv");
    c.obs_fine = path_or("obs_fine", "obs_fine.bin");
    c.rcm_coarse = path_or("rcm_coarse", "rcm_coarse.bin");
    if (j.contains("overlap")) {
      c.overlap = resolve(base_dir, j["overlap"].get<std::string>());
    } else if (c.world) {
      c.overlap = world_dir / "overlap.csv";
    }

    if (c.world && !j.contains("train")) {
      c.train_start = parse_date(c.world->train_start);
      c.train_end = parse_date(c.world->train_end);
      c.test_start = parse_date(c.world->test_start);
      c.test_end = parse_date(c.world->test_end);
    } else {
      std::tie(c.train_start, c.train_end) = parse_period(j, "train");
      std::tie(c.test_start, c.test_end) = parse_period(j, "test");
    }
    if (!(c.train_end < c.test_start || c.test_end < c.train_start)) {
      throw UsageError("config: training and test periods overlap");
    }

    if (j.contains("catchment")) {
      const auto& cj = j["catchment"];
      c.catchment_id = cj.value("id", std::string("catchment"));
      c.catchment_cells = cj.value("coarse_cells", std::vector<CellId>{});
    }
    c.methods = j.value("methods", std::vector<std::string>{"xstar", "trend", "trendvar", "eqm", "raw"});
    for (const auto& m : c.methods) {
      if (m != "xstar" && m != "trend" && m != "trendvar" && m != "eqm" && m != "raw") {
        throw UsageError("config: unknown method '" + m + "'");
      }
    }
    for (const auto& v : j.value("variants", std::vector<std::string>{"xstar", "trend", "trendvar"})) {
      c.variants.push_back(parse_variant(v));
    }
    c.seed = j.value("seed", std::uint64_t{0});
    c.knot_step = j.value("knot_step", 0.001);
    c.bootstrap = j.value("bootstrap", std::size_t{10000});
    c.max_lag = j.value("max_lag", 30);
    c.gaussian_marginals = j.value("gaussian_marginals", false);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config: " + std::string(e.what()));
  }
  if (c.bootstrap == 0) throw UsageError("config: bootstrap must be positive");
  return c;
}

nlohmann::json PipelineConfig::canonical() const {
  nlohmann::json j = source_;
  j["seed"] = seed;
  std::vector<std::string> v;
  for (Variant x : variants) v.emplace_back(variant_name(x));
  j["variants"] = v;
  j.erase("output_dir");
  return j;
}

std::string PipelineConfig::hash() const { return json_hash(canonical()); }

namespace {

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IngestError("cannot read " + p.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

void require(const fs::path& p, Stage producer) {
  if (!fs::exists(p)) {
    throw UsageError("missing artifact " + p.string() + ": run " + std::string(stage_name(producer)) + " first");
  }
}

void require_input(const fs::path& p) {
  if (!fs::exists(p)) throw UsageError("input file not found: " + p.string());
}

/// Shared loaded state of one experiment.
struct Context {
  const PipelineConfig& cfg;
  fs::path out;
  GridPtr fine;
  GridPtr coarse;
  OverlapMap overlap;
  std::vector<std::size_t> fine_cells;    // catchment cells in the fine grid
  std::vector<std::size_t> coarse_cells;  // catchment cells in the coarse grid
  GridPtr fine_sub;
  GridPtr coarse_sub;

  explicit Context(const PipelineConfig& c) : cfg(c), out(c.output_dir) {}

  fs::path artifact(const std::string& rel) const { return out / rel; }

  void load_grids() {
    require_input(cfg.fine_grid);
    require_input(cfg.coarse_grid);
    fine = std::make_shared<const GridSpec>(load_grid(cfg.fine_grid));
    coarse = std::make_shared<const GridSpec>(load_grid(cfg.coarse_grid));
    if (cfg.overlap && fs::exists(*cfg.overlap)) {
      overlap = load_overlap(*cfg.overlap, *fine, *coarse);
    } else {
      overlap = OverlapMap::build(*fine, *coarse);
    }
    std::vector<CellId> ids = cfg.catchment_cells;
    if (ids.empty()) ids.assign(coarse->ids().begin(), coarse->ids().end());
    for (CellId id : ids) {
      if (!coarse->find(id)) throw UsageError("catchment coarse cell " + std::to_string(id) + " is not in the coarse grid");
    }
    fine_cells = catchment_cells(*fine, *coarse, overlap, ids);
    if (fine_cells.empty()) throw UsageError("catchment contains no fine cells");
    const std::set<CellId> wanted(ids.begin(), ids.end());
    coarse_cells.clear();
    for (std::size_t r = 0; r < coarse->size(); ++r) {
      if (wanted.count(coarse->id(r))) coarse_cells.push_back(r);
    }
    fine_sub = std::make_shared<const GridSpec>(fine->subset(fine_cells));
    coarse_sub = std::make_shared<const GridSpec>(coarse->subset(coarse_cells));
  }

  Field fine_obs(Date a, Date b) const {
    require_input(cfg.obs_fine);
    const auto f = load_field(cfg.obs_fine, fine).slice(a, b);
    return f.select_cells(fine_cells, fine_sub);
  }

  Field rcm(Date a, Date b) const {
    require_input(cfg.rcm_coarse);
    return load_field(cfg.rcm_coarse, coarse).slice(a, b);
  }

  Field coarse_obs(Date a, Date b) const {
    const auto p = artifact("upscale/obs_coarse.bin");
    require(p, Stage::kUpscale);
    return load_field(p, coarse).slice(a, b);
  }

  Field sub_coarse(const Field& f) const { return f.select_cells(coarse_cells, coarse_sub); }

  MomentCoefficients moments(const std::string& name) const {
    const auto p = artifact("moments/" + name + ".json");
    require(p, Stage::kFitMoments);
    return MomentCoefficients::from_json(read_json(p));
  }

  void provenance(const fs::path& artifact_path, Stage stage, nlohmann::json inputs, nlohmann::json extra = {}) const {
    nlohmann::json p{{"stage", stage_name(stage)},
                     {"config_hash", cfg.hash()},
                     {"seed", cfg.seed},
                     {"catchment_id", cfg.catchment_id},
                     {"inputs", std::move(inputs)}};
    if (!extra.is_null()) p["details"] = std::move(extra);
    auto side = artifact_path;
    side += ".prov.json";
    write_json_atomic(side, p);
  }
};

void stage_synth_world(Context& ctx) {
  if (!ctx.cfg.world) throw UsageError("config has no 'world' section for synth-world");
  const auto& spec = *ctx.cfg.world;
  WorldSpec seeded = spec;
  seeded.seed = derive_seed(ctx.cfg.seed, 0x5eed, spec.seed);
  spdlog::info("generating synthetic world ({}x{} coarse cells, {} fine per side)", spec.coarse_nx, spec.coarse_ny,
               spec.fine_per_coarse);
  const auto w = generate_world(seeded);
  for (const auto* p : {&ctx.cfg.fine_grid, &ctx.cfg.coarse_grid, &ctx.cfg.obs_fine, &ctx.cfg.rcm_coarse}) {
    fs::create_directories(p->parent_path());
  }
  save_grid(ctx.cfg.fine_grid, *w.fine);
  save_grid(ctx.cfg.coarse_grid, *w.coarse);
  save_field(ctx.cfg.obs_fine, w.obs_fine);
  save_field(ctx.cfg.rcm_coarse, w.rcm_coarse);
  if (ctx.cfg.overlap) save_overlap(*ctx.cfg.overlap, w.overlap, *w.fine, *w.coarse);
  nlohmann::json truth{{"spec", seeded.to_json()},
                       {"obs_truth", w.obs_truth.to_json()},
                       {"rcm_truth", w.rcm_truth.to_json()},
                       {"test_offset", w.test_offset},
                       {"residual_truth", w.residual_truth.to_json()}};
  const auto truth_path = ctx.cfg.obs_fine.parent_path() / "truth.json";
  write_json_atomic(truth_path, truth);
  ctx.provenance(ctx.cfg.obs_fine, Stage::kSynthWorld, nlohmann::json::object(), {{"world_seed", seeded.seed}});
}

void stage_upscale(Context& ctx) {
  ctx.load_grids();
  require_input(ctx.cfg.obs_fine);
  const auto fine = load_field(ctx.cfg.obs_fine, ctx.fine);
  const auto coarse = upscale(fine, ctx.coarse, ctx.overlap);
  const auto p = ctx.artifact("upscale/obs_coarse.bin");
  fs::create_directories(p.parent_path());
  save_field(p, coarse);
  ctx.provenance(p, Stage::kUpscale, {{"obs_fine", file_hash(ctx.cfg.obs_fine)}});
}

nlohmann::json fit_summary(const MomentFit& f) {
  return {{"log_likelihood", f.log_likelihood},
          {"initial_log_likelihood", f.initial_log_likelihood},
          {"iterations", f.iterations},
          {"gradient_inf_norm", f.gradient_inf_norm},
          {"status", f.status}};
}

void stage_fit_moments(Context& ctx) {
  ctx.load_grids();
  const auto& cfg = ctx.cfg;
  const int ref = year_of(cfg.train_start);
  MomentFitOptions coarse_opts;
  coarse_opts.reference_year = ref;
  coarse_opts.normalizer = CovariateNormalizer::from_grid(*ctx.coarse_sub);

  const auto obs_train = ctx.sub_coarse(ctx.coarse_obs(cfg.train_start, cfg.train_end));
  const auto rcm_train = ctx.sub_coarse(ctx.rcm(cfg.train_start, cfg.train_end));
  const auto rcm_test = ctx.sub_coarse(ctx.rcm(cfg.test_start, cfg.test_end));
  const auto fine_train = ctx.fine_obs(cfg.train_start, cfg.train_end);

  fs::create_directories(ctx.artifact("moments"));
  nlohmann::json summary;
  auto fit_and_save = [&](const std::string& name, const Field& f, const MomentFitOptions& opts) {
    spdlog::info("fitting moment model '{}' ({} cells x {} days)", name, f.n_cells(), f.n_days());
    const auto fit = fit_moment_model(f, opts);
    write_json_atomic(ctx.artifact("moments/" + name + ".json"), fit.coefficients.to_json());
    summary[name] = fit_summary(fit);
  };
  fit_and_save("obs_coarse_train", obs_train, coarse_opts);
  fit_and_save("rcm_train", rcm_train, coarse_opts);
  fit_and_save("rcm_test", rcm_test, coarse_opts);
  MomentFitOptions fine_opts;
  fine_opts.reference_year = ref;
  fit_and_save("fine_train", fine_train, fine_opts);
  ctx.provenance(ctx.artifact("moments/fine_train.json"), Stage::kFitMoments,
                 {{"obs_fine", file_hash(cfg.obs_fine)},
                  {"rcm_coarse", file_hash(cfg.rcm_coarse)},
                  {"obs_coarse", file_hash(ctx.artifact("upscale/obs_coarse.bin"))}},
                 summary);
}

void stage_bias_correct(Context& ctx) {
  ctx.load_grids();
  const auto& cfg = ctx.cfg;
  const CorrectionContext cc{ctx.moments("obs_coarse_train"), ctx.moments("rcm_train"), ctx.moments("rcm_test")};
  const auto raw_test = ctx.sub_coarse(ctx.rcm(cfg.test_start, cfg.test_end));
  const auto obs_train = ctx.sub_coarse(ctx.coarse_obs(cfg.train_start, cfg.train_end));
  const auto rcm_train = ctx.sub_coarse(ctx.rcm(cfg.train_start, cfg.train_end));

  const auto corr = correct(raw_test, cc);
  if (corr.variance_warning()) {
    spdlog::warn("variance floor hit on {} entries ({:.2f}%): RCM and observation models may be incompatible",
                 corr.floored_entries, 100.0 * corr.floored_fraction);
  }
  fs::create_directories(ctx.artifact("correction"));
  const nlohmann::json inputs{{"obs_coarse_train", json_hash(cc.obs_train.to_json())},
                              {"rcm_train", json_hash(cc.rcm_train.to_json())},
                              {"rcm_test", json_hash(cc.rcm_test.to_json())}};
  auto save = [&](const std::string& name, const Field& f, nlohmann::json extra) {
    const auto p = ctx.artifact("correction/" + name + ".bin");
    save_field(p, f);
    extra["method"] = name;
    ctx.provenance(p, Stage::kBiasCorrect, inputs, extra);
  };
  save("corr", corr.corrected, {{"floored_entries", corr.floored_entries}});
  save("simple", simple_correct(raw_test, obs_train, rcm_train), nlohmann::json::object());
  save("local_simple", local_simple_correct(raw_test, obs_train, rcm_train), nlohmann::json::object());
}

void stage_fit_residuals(Context& ctx) {
  ctx.load_grids();
  const auto& cfg = ctx.cfg;
  const auto fine_model = ctx.moments("fine_train");
  const auto train = ctx.fine_obs(cfg.train_start, cfg.train_end);
  const auto z = standardize(train, predict(fine_model, train));
  ResidualFitOptions opts;
  opts.gaussian_marginals = cfg.gaussian_marginals;
  opts.catchment_id = cfg.catchment_id;
  spdlog::info("fitting residual model on {} cells x {} days", z.n_cells(), z.n_days());
  const auto fit = fit_residual_model(z, opts);
  fs::create_directories(ctx.artifact("residuals"));
  const auto p = ctx.artifact("residuals/residual_model.json");
  write_json_atomic(p, fit.model.to_json());
  nlohmann::json emp = nlohmann::json::array();
  for (std::size_t m = 0; m < 12; ++m) emp.push_back({{"month", m + 1}, {"bins", fit.empirical[m]}, {"fit", fit.monthly[m]}});
  write_json_atomic(ctx.artifact("residuals/monthly_variograms.json"), emp);
  ctx.provenance(p, Stage::kFitResiduals, {{"fine_train", json_hash(fine_model.to_json())}},
                 {{"arma_order", {fit.model.arma.p(), fit.model.arma.q()}}});
}

void stage_downscale(Context& ctx) {
  ctx.load_grids();
  const auto& cfg = ctx.cfg;
  require(ctx.artifact("residuals/residual_model.json"), Stage::kFitResiduals);
  DownscaleBundle b;
  b.fine = ctx.moments("fine_train");
  b.coarse = {ctx.moments("obs_coarse_train"), ctx.moments("rcm_train"), ctx.moments("rcm_test")};
  b.residual = ResidualModel::from_json(read_json(ctx.artifact("residuals/residual_model.json")));
  b.fine_grid = ctx.fine_sub;
  b.coarse_grid = ctx.coarse_sub;
  std::map<std::size_t, std::size_t> coarse_index;
  for (std::size_t k = 0; k < ctx.coarse_cells.size(); ++k) coarse_index[ctx.coarse_cells[k]] = k;
  for (std::size_t r : largest_intersection(ctx.overlap, ctx.fine_cells)) {
    const auto it = coarse_index.find(r);
    if (it == coarse_index.end()) throw UsageError("fine cell maps to a coarse cell outside the catchment");
    b.fine_to_coarse.push_back(it->second);
  }
  b.train_dates = daily_range(cfg.train_start, cfg.train_end);
  b.test_dates = daily_range(cfg.test_start, cfg.test_end);
  b.seed = derive_seed(cfg.seed, streams::kRealization);
  spdlog::info("simulating {} days on {} fine cells", b.test_dates.size(), b.fine_grid->size());
  const auto real = downscale(b, cfg.variants);
  if (real.signal.clamped > 0) spdlog::warn("sd ratio clamped on {} coarse cell-days", real.signal.clamped);

  fs::create_directories(ctx.artifact("downscale"));
  const nlohmann::json inputs{{"fine_train", json_hash(b.fine.to_json())},
                              {"residual_model", json_hash(b.residual.to_json())},
                              {"obs_coarse_train", json_hash(b.coarse.obs_train.to_json())},
                              {"rcm_train", json_hash(b.coarse.rcm_train.to_json())},
                              {"rcm_test", json_hash(b.coarse.rcm_test.to_json())}};
  const nlohmann::json transfer{{"mean_delta_mean", real.signal.delta_mean.mean()},
                                {"mean_sd_ratio", real.signal.sd_ratio.mean()},
                                {"clamped_ratios", real.signal.clamped},
                                {"realization_seed", b.seed},
                                {"z_star_hash", matrix_hash(real.z_star)}};
  for (const auto& [v, field] : real.fields) {
    const auto p = ctx.artifact("downscale/" + std::string(variant_name(v)) + ".bin");
    save_field(p, field);
    auto extra = transfer;
    extra["variant"] = variant_name(v);
    ctx.provenance(p, Stage::kDownscale, inputs, extra);
  }
}

void stage_eqm(Context& ctx) {
  ctx.load_grids();
  const auto& cfg = ctx.cfg;
  const auto obs = ctx.fine_obs(cfg.train_start, cfg.train_end);
  const auto rcm_train = nearest_neighbor_regrid(ctx.rcm(cfg.train_start, cfg.train_end), ctx.fine_sub);
  const auto rcm_test = nearest_neighbor_regrid(ctx.rcm(cfg.test_start, cfg.test_end), ctx.fine_sub);
  spdlog::info("training EQM on {} cells (knot step {})", obs.n_cells(), cfg.knot_step);
  const auto table = eqm_train(obs, rcm_train, cfg.knot_step);
  fs::create_directories(ctx.artifact("eqm"));
  std::string grid_ids;
  for (CellId id : ctx.fine_sub->ids()) grid_ids += std::to_string(id) + ",";
  table.save(ctx.artifact("eqm/table.bin"), sha256_hex(grid_ids));
  const auto p = ctx.artifact("eqm/eqm_test.bin");
  save_field(p, eqm_apply(table, rcm_test));
  ctx.provenance(p, Stage::kEqm, {{"obs_fine", file_hash(cfg.obs_fine)}, {"rcm_coarse", file_hash(cfg.rcm_coarse)}},
                 {{"knot_step", cfg.knot_step}, {"knots", table.knots.size()}});
}

void stage_evaluate(Context& ctx) {
  ctx.load_grids();
  const auto& cfg = ctx.cfg;
  std::map<std::string, Field> fine_methods;
  for (const auto& m : cfg.methods) {
    if (m == "raw") {
      fine_methods.emplace(m, nearest_neighbor_regrid(ctx.rcm(cfg.test_start, cfg.test_end), ctx.fine_sub));
    } else if (m == "eqm") {
      const auto p = ctx.artifact("eqm/eqm_test.bin");
      require(p, Stage::kEqm);
      fine_methods.emplace(m, load_field(p, ctx.fine_sub));
    } else {
      const auto p = ctx.artifact("downscale/" + m + ".bin");
      require(p, Stage::kDownscale);
      fine_methods.emplace(m, load_field(p, ctx.fine_sub));
    }
  }
  std::map<std::string, Field> coarse_methods;
  coarse_methods.emplace("raw", ctx.sub_coarse(ctx.rcm(cfg.test_start, cfg.test_end)));
  for (const std::string name : {"simple", "local_simple", "corr"}) {
    const auto p = ctx.artifact("correction/" + name + ".bin");
    require(p, Stage::kBiasCorrect);
    coarse_methods.emplace(name, load_field(p, ctx.coarse_sub));
  }
  const auto obs_fine = ctx.fine_obs(cfg.test_start, cfg.test_end);
  const auto obs_coarse = ctx.sub_coarse(ctx.coarse_obs(cfg.test_start, cfg.test_end));

  EvalOptions opts;
  opts.resamples = cfg.bootstrap;
  opts.max_lag = cfg.max_lag;
  opts.catchment_id = cfg.catchment_id;
  auto refs = [](const std::map<std::string, Field>& m) {
    std::map<std::string, const Field*> r;
    for (const auto& [k, v] : m) r.emplace(k, &v);
    return r;
  };
  spdlog::info("evaluating {} fine-scale and {} coarse-scale methods", fine_methods.size(), coarse_methods.size());
  opts.seed = derive_seed(cfg.seed, streams::kBootstrap, 0);
  opts.scale = "fine";
  const auto fine_report = evaluate_methods(refs(fine_methods), obs_fine, opts);
  opts.seed = derive_seed(cfg.seed, streams::kBootstrap, 1);
  opts.scale = "coarse";
  opts.variograms = false;
  const auto coarse_report = evaluate_methods(refs(coarse_methods), obs_coarse, opts);

  fs::create_directories(ctx.artifact("evaluate"));
  const auto p = ctx.artifact("evaluate/report.json");
  write_json_atomic(p, {{"fine", fine_report.to_json()}, {"coarse", coarse_report.to_json()}});
  write_file_atomic(ctx.artifact("evaluate/iqd.csv"),
                    fine_report.iqd_csv() + coarse_report.iqd_csv().substr(coarse_report.iqd_csv().find('\n') + 1));
  write_file_atomic(ctx.artifact("evaluate/acf.csv"),
                    fine_report.acf_csv() + coarse_report.acf_csv().substr(coarse_report.acf_csv().find('\n') + 1));
  write_file_atomic(ctx.artifact("evaluate/variogram.csv"), fine_report.variogram_csv());
  nlohmann::json inputs;
  for (const auto& [k, v] : fine_methods) inputs["fine/" + k] = matrix_hash(v.values());
  for (const auto& [k, v] : coarse_methods) inputs["coarse/" + k] = matrix_hash(v.values());
  ctx.provenance(p, Stage::kEvaluate, inputs);
  for (const auto& [name, r] : fine_report.methods) {
    spdlog::info("fine IQD {:>10}: {:.5f} [{:.5f}, {:.5f}]", name, r.iqd.at(WeightKind::kFull).mean,
                 r.iqd.at(WeightKind::kFull).lo90, r.iqd.at(WeightKind::kFull).hi90);
  }
}

}  // namespace

void run_stage(Stage stage, const PipelineConfig& config) {
  Context ctx(config);
  fs::create_directories(ctx.out);
  spdlog::info("stage {}", stage_name(stage));
  switch (stage) {
    case Stage::kSynthWorld: stage_synth_world(ctx); break;
    case Stage::kUpscale: stage_upscale(ctx); break;
    case Stage::kFitMoments: stage_fit_moments(ctx); break;
    case Stage::kBiasCorrect: stage_bias_correct(ctx); break;
    case Stage::kFitResiduals: stage_fit_residuals(ctx); break;
    case Stage::kDownscale: stage_downscale(ctx); break;
    case Stage::kEqm: stage_eqm(ctx); break;
    case Stage::kEvaluate: stage_evaluate(ctx); break;
  }
}

void run_pipeline(const PipelineConfig& config) {
  for (Stage s : kAllStages) {
    if (s == Stage::kSynthWorld && !config.world) continue;
    run_stage(s, config);
  }
}

}  // namespace stormgen
