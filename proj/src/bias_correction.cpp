#include "stormgen/bias_correction.hpp"

namespace stormgen {

void CorrectionContext::validate() const {
  if (!(obs_train.normalizer == rcm_train.normalizer) || !(obs_train.normalizer == rcm_test.normalizer)) {
    throw UsageError("correction: moment models use different covariate normalizers");
  }
  if (obs_train.reference_year != rcm_train.reference_year ||
      obs_train.reference_year != rcm_test.reference_year) {
    throw UsageError("correction: moment models use different reference years");
  }
}

CorrectedMoments corrected_moments(const CorrectionContext& ctx, const GridSpec& grid,
                                   const CalendarIndex& calendar) {
  ctx.validate();
  CorrectedMoments m;
  m.obs_train = predict(ctx.obs_train, grid, calendar);
  m.rcm_train = predict(ctx.rcm_train, grid, calendar);
  m.rcm_test = predict(ctx.rcm_test, grid, calendar);
  m.mean = m.obs_train.mean + (m.rcm_test.mean - m.rcm_train.mean);
  m.variance = m.obs_train.sd.array().square() +
               (m.rcm_test.sd.array().square() - m.rcm_train.sd.array().square());
  for (Eigen::Index i = 0; i < m.variance.size(); ++i) {
    if (m.variance.data()[i] < kVarianceFloor) {
      m.variance.data()[i] = kVarianceFloor;
      ++m.floored;
    }
  }
  return m;
}

CorrectionResult correct(const Field& raw_test, const CorrectionContext& ctx) {
  const CalendarIndex cal(raw_test.dates(), ctx.rcm_test.reference_year);
  const auto m = corrected_moments(ctx, raw_test.grid(), cal);
  const Eigen::MatrixXd anomaly = (raw_test.values() - m.rcm_test.mean).cwiseQuotient(m.rcm_test.sd);
  CorrectionResult res{raw_test.with_values(m.mean + m.variance.cwiseSqrt().cwiseProduct(anomaly)),
                       m.floored, 0.0};
  res.floored_fraction = raw_test.values().size() > 0
                             ? static_cast<double>(m.floored) / static_cast<double>(raw_test.values().size())
                             : 0.0;
  return res;
}

namespace {
void check_aligned(const Field& raw_test, const Field& obs_train, const Field& rcm_train) {
  if (!(obs_train.grid() == rcm_train.grid()) || !(raw_test.grid() == obs_train.grid())) {
    throw UsageError("simple correction: fields are on different grids");
  }
  if (obs_train.n_days() != rcm_train.n_days() ||
      !std::equal(obs_train.dates().begin(), obs_train.dates().end(), rcm_train.dates().begin())) {
    throw UsageError("simple correction: training fields cover different periods");
  }
}
}  // namespace

Field simple_correct(const Field& raw_test, const Field& obs_train, const Field& rcm_train) {
  check_aligned(raw_test, obs_train, rcm_train);
  const double shift = obs_train.values().mean() - rcm_train.values().mean();
  return raw_test.with_values(raw_test.values().array() + shift);
}

Field local_simple_correct(const Field& raw_test, const Field& obs_train, const Field& rcm_train) {
  check_aligned(raw_test, obs_train, rcm_train);
  const Eigen::VectorXd shift = obs_train.values().rowwise().mean() - rcm_train.values().rowwise().mean();
  return raw_test.with_values(raw_test.values().colwise() + shift);
}

}  // namespace stormgen
