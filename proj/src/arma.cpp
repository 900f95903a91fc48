#include "stormgen/arma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "stormgen/error.hpp"
#include "stormgen/optim.hpp"
#include "stormgen/stats.hpp"

namespace stormgen {

namespace {

constexpr int kMaxState = 8;

struct StateSpace {
  Eigen::MatrixXd T;
  Eigen::VectorXd R;
  Eigen::MatrixXd P0;  // stationary state covariance for unit innovation variance
};

StateSpace state_space(const std::vector<double>& ar, const std::vector<double>& ma) {
  const int p = static_cast<int>(ar.size()), q = static_cast<int>(ma.size());
  const int r = std::max(p, q + 1);
  if (r > kMaxState) throw UsageError("ARMA order too large: state dimension above " + std::to_string(kMaxState));
  StateSpace s;
  s.T = Eigen::MatrixXd::Zero(r, r);
  for (int i = 0; i < p; ++i) s.T(i, 0) = ar[static_cast<std::size_t>(i)];
  for (int i = 0; i + 1 < r; ++i) s.T(i, i + 1) = 1.0;
  s.R = Eigen::VectorXd::Zero(r);
  s.R(0) = 1.0;
  for (int j = 0; j < q; ++j) s.R(j + 1) = ma[static_cast<std::size_t>(j)];

  // vec(P) = (I - T (x) T)^{-1} vec(R R')
  const int r2 = r * r;
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(r2, r2);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k)
        for (int l = 0; l < r; ++l) m(i * r + j, k * r + l) -= s.T(i, k) * s.T(j, l);
  const Eigen::MatrixXd rr = s.R * s.R.transpose();
  Eigen::VectorXd rhs(r2);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) rhs(i * r + j) = rr(i, j);
  const Eigen::VectorXd vec = m.partialPivLu().solve(rhs);
  s.P0.resize(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) s.P0(i, j) = vec(i * r + j);
  s.P0 = 0.5 * (s.P0 + s.P0.transpose());
  return s;
}

struct KalmanResult {
  double sum_sq = 0.0;     // sum v_t^2 / F_t
  double sum_log_f = 0.0;  // sum log F_t
};

KalmanResult kalman(const StateSpace& s, std::span<const double> y) {
  using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxState, 1>;
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxState, kMaxState>;
  const auto r = s.T.rows();
  const Mat T = s.T;
  const Mat RR = s.R * s.R.transpose();
  Mat P = s.P0;
  Mat next(r, r);
  Vec a = Vec::Zero(r), k(r), tmp(r);
  KalmanResult out;
  std::size_t t = 0;
  double f = 1.0;
  for (; t < y.size(); ++t) {
    f = P(0, 0);
    k = P.col(0) / f;
    const double v = y[t] - a(0);
    out.sum_sq += v * v / f;
    out.sum_log_f += std::log(f);
    tmp = a + k * v;
    a.noalias() = T * tmp;
    next.noalias() = T * (P - k * P.row(0)) * T.transpose();
    next += RR;
    const bool steady = (next - P).cwiseAbs().maxCoeff() < 1e-13;
    P = next;
    if (steady) {
      ++t;
      break;
    }
  }
  if (t == y.size()) return out;
  // Steady state: the gain no longer changes, so only the state recursion remains.
  f = P(0, 0);
  k = P.col(0) / f;
  const double log_f = std::log(f);
  std::array<double, kMaxState> phi{}, st{};
  for (Eigen::Index i = 0; i < r; ++i) {
    phi[static_cast<std::size_t>(i)] = T(i, 0);
    st[static_cast<std::size_t>(i)] = a(i);
  }
  double sum_sq = 0.0;
  for (; t < y.size(); ++t) {
    const double v = y[t] - st[0];
    sum_sq += v * v;
    for (Eigen::Index i = 0; i < r; ++i) st[static_cast<std::size_t>(i)] += k(i) * v;
    const double head = st[0];
    for (Eigen::Index i = 0; i + 1 < r; ++i)
      st[static_cast<std::size_t>(i)] = phi[static_cast<std::size_t>(i)] * head + st[static_cast<std::size_t>(i + 1)];
    st[static_cast<std::size_t>(r - 1)] = phi[static_cast<std::size_t>(r - 1)] * head;
    out.sum_log_f += log_f;
  }
  out.sum_sq += sum_sq / f;
  return out;
}

// Partial autocorrelations in (-1, 1) -> coefficients of a stable AR polynomial.
std::vector<double> pacf_to_ar(std::span<const double> pacf) {
  std::vector<double> phi;
  for (double rk : pacf) {
    std::vector<double> next(phi.size() + 1);
    for (std::size_t j = 0; j < phi.size(); ++j) next[j] = phi[j] - rk * phi[phi.size() - 1 - j];
    next.back() = rk;
    phi = std::move(next);
  }
  return phi;
}

// Inverse of pacf_to_ar; returns false if the polynomial is not stable.
bool ar_to_pacf(std::vector<double> phi, std::vector<double>& pacf) {
  pacf.assign(phi.size(), 0.0);
  for (std::size_t k = phi.size(); k-- > 0;) {
    const double rk = phi[k];
    if (!(std::abs(rk) < 1.0)) return false;
    pacf[k] = rk;
    std::vector<double> prev(k);
    for (std::size_t j = 0; j < k; ++j) prev[j] = (phi[j] + rk * phi[k - 1 - j]) / (1.0 - rk * rk);
    phi = std::move(prev);
  }
  return true;
}

void unpack(std::span<const double> x, int p, int q, std::vector<double>& ar, std::vector<double>& ma) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = std::tanh(x[i]);
  ar = pacf_to_ar(std::span<const double>(r).first(static_cast<std::size_t>(p)));
  ma = pacf_to_ar(std::span<const double>(r).subspan(static_cast<std::size_t>(p), static_cast<std::size_t>(q)));
  for (double& m : ma) m = -m;
}

// Encodes coefficients into the unconstrained space, shrinking toward zero until stable.
std::vector<double> pack(std::vector<double> ar, std::vector<double> ma) {
  std::vector<double> x;
  auto encode = [&x](std::vector<double> phi) {
    std::vector<double> pacf;
    for (int attempt = 0; attempt < 60 && !ar_to_pacf(phi, pacf); ++attempt) {
      for (double& c : phi) c *= 0.9;
    }
    if (!ar_to_pacf(phi, pacf)) pacf.assign(phi.size(), 0.0);
    for (double r : pacf) x.push_back(std::atanh(std::clamp(r, -0.99, 0.99)));
  };
  encode(std::move(ar));
  for (double& m : ma) m = -m;
  encode(std::move(ma));
  return x;
}

double concentrated_nll(std::span<const double> y, const std::vector<double>& ar, const std::vector<double>& ma,
                        double* sigma2 = nullptr) {
  const auto s = state_space(ar, ma);
  const auto k = kalman(s, y);
  const double n = static_cast<double>(y.size());
  const double s2 = k.sum_sq / n;
  if (sigma2) *sigma2 = s2;
  return 0.5 * (n * std::log(2.0 * std::numbers::pi * s2) + k.sum_log_f + n);
}

// Least squares on a design assembled column by column.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return X.colPivHouseholderQr().solve(y);
}

// Hannan-Rissanen: long AR for innovations, then regression on lags of both.
void hannan_rissanen(std::span<const double> y, int p, int q, std::vector<double>& ar, std::vector<double>& ma) {
  const auto n = static_cast<Eigen::Index>(y.size());
  ar.assign(static_cast<std::size_t>(p), 0.0);
  ma.assign(static_cast<std::size_t>(q), 0.0);
  if (p == 0 && q == 0) return;
  const int m = static_cast<int>(std::min<Eigen::Index>(20, n / 20));
  Eigen::VectorXd resid = Eigen::VectorXd::Zero(n);
  if (q > 0) {
    Eigen::MatrixXd X(n - m, m);
    Eigen::VectorXd Y(n - m);
    for (Eigen::Index t = m; t < n; ++t) {
      Y(t - m) = y[static_cast<std::size_t>(t)];
      for (int i = 0; i < m; ++i) X(t - m, i) = y[static_cast<std::size_t>(t - 1 - i)];
    }
    const Eigen::VectorXd b = least_squares(X, Y);
    for (Eigen::Index t = m; t < n; ++t) resid(t) = Y(t - m) - X.row(t - m).dot(b);
  }
  const int start = m + std::max(p, q);
  if (n - start < 10 * (p + q + 1)) return;
  Eigen::MatrixXd X(n - start, p + q);
  Eigen::VectorXd Y(n - start);
  for (Eigen::Index t = start; t < n; ++t) {
    Y(t - start) = y[static_cast<std::size_t>(t)];
    for (int i = 0; i < p; ++i) X(t - start, i) = y[static_cast<std::size_t>(t - 1 - i)];
    for (int j = 0; j < q; ++j) X(t - start, p + j) = resid(t - 1 - j);
  }
  const Eigen::VectorXd b = least_squares(X, Y);
  for (int i = 0; i < p; ++i) ar[static_cast<std::size_t>(i)] = b(i);
  for (int j = 0; j < q; ++j) ma[static_cast<std::size_t>(j)] = b(p + j);
}

bool roots_outside_unit_circle(const std::vector<double>& companion_first_row) {
  const auto r = static_cast<Eigen::Index>(companion_first_row.size());
  if (r == 0) return true;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(r, r);
  for (Eigen::Index i = 0; i < r; ++i) c(0, i) = companion_first_row[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < r; ++i) c(i, i - 1) = 1.0;
  const Eigen::VectorXcd ev = c.eigenvalues();
  return (ev.cwiseAbs().array() < 1.0).all();
}

}  // namespace

bool ArmaModel::is_causal() const { return roots_outside_unit_circle(ar); }

bool ArmaModel::is_invertible() const {
  std::vector<double> neg(ma.size());
  for (std::size_t j = 0; j < ma.size(); ++j) neg[j] = -ma[j];
  return roots_outside_unit_circle(neg);
}

std::vector<double> ArmaModel::autocovariance(int max_lag) const {
  const auto s = state_space(ar, ma);
  std::vector<double> g(static_cast<std::size_t>(max_lag) + 1);
  Eigen::MatrixXd tp = s.P0;
  for (int k = 0; k <= max_lag; ++k) {
    g[static_cast<std::size_t>(k)] = innovation_variance * tp(0, 0);
    tp = s.T * tp;
  }
  return g;
}

std::vector<double> ArmaModel::autocorrelation(int max_lag) const {
  const auto g = autocovariance(max_lag);
  std::vector<double> rho(static_cast<std::size_t>(max_lag));
  for (int k = 1; k <= max_lag; ++k) rho[static_cast<std::size_t>(k - 1)] = g[static_cast<std::size_t>(k)] / g[0];
  return rho;
}

void to_json(nlohmann::json& j, const ArmaModel& m) {
  j = {{"p", m.p()},
       {"q", m.q()},
       {"ar", m.ar},
       {"ma", m.ma},
       {"innovation_variance", m.innovation_variance},
       {"log_likelihood", m.log_likelihood},
       {"aicc", m.aicc}};
}

void from_json(const nlohmann::json& j, ArmaModel& m) {
  m.ar = j.at("ar").get<std::vector<double>>();
  m.ma = j.at("ma").get<std::vector<double>>();
  m.innovation_variance = j.at("innovation_variance").get<double>();
  m.log_likelihood = j.value("log_likelihood", 0.0);
  m.aicc = j.value("aicc", 0.0);
  if (j.contains("p") && j.at("p").get<int>() != m.p()) throw IngestError("arma: order p mismatch");
  if (j.contains("q") && j.at("q").get<int>() != m.q()) throw IngestError("arma: order q mismatch");
  if (!(m.innovation_variance >= 0.0)) throw IngestError("arma: negative innovation variance");
  if (!m.is_causal() || !m.is_invertible()) throw IngestError("arma: model is not causal and invertible");
}

double arma_log_likelihood(const ArmaModel& model, std::span<const double> series) {
  const auto s = state_space(model.ar, model.ma);
  const auto k = kalman(s, series);
  const double n = static_cast<double>(series.size());
  const double s2 = model.innovation_variance;
  return -0.5 * (n * std::log(2.0 * std::numbers::pi * s2) + k.sum_log_f + k.sum_sq / s2);
}

ArmaModel fit_arma_order(std::span<const double> series, int p, int q) {
  const double n = static_cast<double>(series.size());
  const int k = p + q + 1;
  auto finish = [&](std::vector<double> ar, std::vector<double> ma) {
    ArmaModel m;
    m.ar = std::move(ar);
    m.ma = std::move(ma);
    const double nll = concentrated_nll(series, m.ar, m.ma, &m.innovation_variance);
    m.log_likelihood = -nll;
    m.aicc = 2.0 * nll + 2.0 * k + 2.0 * k * (k + 1) / (n - k - 1);
    return m;
  };
  if (p == 0 && q == 0) return finish({}, {});

  auto objective = [&](std::span<const double> x) {
    std::vector<double> ar, ma;
    unpack(x, p, q, ar, ma);
    const double v = concentrated_nll(series, ar, ma) / n;
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };

  std::vector<double> hr_ar, hr_ma;
  hannan_rissanen(series, p, q, hr_ar, hr_ma);
  const std::vector<std::vector<double>> starts = {pack(hr_ar, hr_ma),
                                                   std::vector<double>(static_cast<std::size_t>(p + q), 0.0)};
  optim::SimplexOptions opts{.max_iterations = 4000, .size_tolerance = 1e-7, .initial_step = 0.2};
  optim::Result best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& x0 : starts) {
    auto res = optim::minimize_simplex(objective, x0, opts);
    // A restart from the optimum guards against simplex collapse.
    if (res.converged) {
      optim::SimplexOptions again = opts;
      again.initial_step = 0.05;
      auto res2 = optim::minimize_simplex(objective, res.x, again);
      if (res2.value <= res.value) res = std::move(res2);
    }
    if (res.converged && res.value < best.value) best = std::move(res);
  }
  if (!best.converged) {
    throw FitError("ARMA(" + std::to_string(p) + "," + std::to_string(q) + ") fit did not converge");
  }
  std::vector<double> ar, ma;
  unpack(best.x, p, q, ar, ma);
  return finish(std::move(ar), std::move(ma));
}

ArmaSelection fit_arma(std::span<const double> series, const ArmaFitOptions& options) {
  if (series.size() < 500) throw FitError("ARMA fit needs a series of at least 500 values");
  ArmaSelection sel;
  bool have = false;
  for (int p = 0; p <= options.max_p; ++p) {
    for (int q = 0; q <= options.max_q; ++q) {
      ArmaCandidate cand{p, q, false, std::numeric_limits<double>::infinity()};
      try {
        auto m = fit_arma_order(series, p, q);
        if (m.is_causal() && m.is_invertible() && std::isfinite(m.aicc)) {
          cand.converged = true;
          cand.aicc = m.aicc;
          if (!have || m.aicc < sel.model.aicc) {
            sel.model = std::move(m);
            have = true;
          }
        }
      } catch (const FitError&) {
      }
      sel.candidates.push_back(cand);
    }
  }
  if (!have) throw FitError("ARMA order selection: every candidate fit failed to converge");
  return sel;
}

std::vector<double> simulate_arma(const ArmaModel& model, std::size_t n, std::uint64_t seed) {
  const auto s = state_space(model.ar, model.ma);
  const auto r = s.T.rows();
  auto engine = make_engine(seed, streams::kArma);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(model.innovation_variance);

  // Exact stationary start from N(0, sigma^2 P0).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.P0);
  const Eigen::MatrixXd root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Eigen::VectorXd z(r);
  for (Eigen::Index i = 0; i < r; ++i) z(i) = normal(engine);
  Eigen::VectorXd state = sd * (root * z);

  const std::size_t burn_in = 10 * static_cast<std::size_t>(model.p() + model.q() + 1);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t t = 0; t < burn_in + n; ++t) {
    state = s.T * state + s.R * (sd * normal(engine));
    if (t >= burn_in) out.push_back(state(0));
  }
  return out;
}

}  // namespace stormgen
