#include "stormgen/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

namespace stormgen::optim {

namespace {

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct FdfDeleter {
  void operator()(gsl_multimin_fdfminimizer* m) const { gsl_multimin_fdfminimizer_free(m); }
};
struct FDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

using VectorPtr = std::unique_ptr<gsl_vector, VectorDeleter>;

VectorPtr to_gsl(std::span<const double> x) {
  VectorPtr v(gsl_vector_alloc(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) gsl_vector_set(v.get(), i, x[i]);
  return v;
}

std::vector<double> from_gsl(const gsl_vector* v) {
  std::vector<double> x(v->size);
  for (std::size_t i = 0; i < v->size; ++i) x[i] = gsl_vector_get(v, i);
  return x;
}

struct GradientContext {
  const ObjectiveWithGradient* f;
  std::vector<double> scratch_x, scratch_g;
};

void load(GradientContext& ctx, const gsl_vector* x) {
  for (std::size_t i = 0; i < x->size; ++i) ctx.scratch_x[i] = gsl_vector_get(x, i);
}

double eval_f(const gsl_vector* x, void* params) {
  auto& ctx = *static_cast<GradientContext*>(params);
  load(ctx, x);
  const double v = (*ctx.f)(ctx.scratch_x, ctx.scratch_g);
  return std::isfinite(v) ? v : std::numeric_limits<double>::max();
}

void eval_df(const gsl_vector* x, void* params, gsl_vector* g) {
  auto& ctx = *static_cast<GradientContext*>(params);
  load(ctx, x);
  (*ctx.f)(ctx.scratch_x, ctx.scratch_g);
  for (std::size_t i = 0; i < g->size; ++i) gsl_vector_set(g, i, ctx.scratch_g[i]);
}

void eval_fdf(const gsl_vector* x, void* params, double* f, gsl_vector* g) {
  auto& ctx = *static_cast<GradientContext*>(params);
  load(ctx, x);
  const double v = (*ctx.f)(ctx.scratch_x, ctx.scratch_g);
  *f = std::isfinite(v) ? v : std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < g->size; ++i) gsl_vector_set(g, i, ctx.scratch_g[i]);
}

double inf_norm(const gsl_vector* g) {
  double m = 0.0;
  for (std::size_t i = 0; i < g->size; ++i) m = std::max(m, std::abs(gsl_vector_get(g, i)));
  return m;
}

struct ErrorHandlerGuard {
  gsl_error_handler_t* previous = gsl_set_error_handler_off();
  ~ErrorHandlerGuard() { gsl_set_error_handler(previous); }
};

struct SimplexContext {
  const Objective* f;
  std::vector<double> scratch;
};

double eval_simplex(const gsl_vector* x, void* params) {
  auto& ctx = *static_cast<SimplexContext*>(params);
  for (std::size_t i = 0; i < x->size; ++i) ctx.scratch[i] = gsl_vector_get(x, i);
  const double v = (*ctx.f)(ctx.scratch);
  return std::isfinite(v) ? v : std::numeric_limits<double>::max();
}

}  // namespace

Result minimize_bfgs(const ObjectiveWithGradient& f, std::vector<double> x0, const BfgsOptions& options) {
  ErrorHandlerGuard guard;
  const std::size_t n = x0.size();
  GradientContext ctx{&f, std::vector<double>(n), std::vector<double>(n)};
  gsl_multimin_function_fdf fn{&eval_f, &eval_df, &eval_fdf, n, &ctx};

  std::unique_ptr<gsl_multimin_fdfminimizer, FdfDeleter> m(
      gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n));
  auto start = to_gsl(x0);
  gsl_multimin_fdfminimizer_set(m.get(), &fn, start.get(), options.initial_step, options.line_tolerance);

  Result res;
  double previous = m->f;
  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    if (inf_norm(m->gradient) < options.gradient_tolerance) {
      res.converged = true;
      res.status = "gradient tolerance reached";
      break;
    }
    const int status = gsl_multimin_fdfminimizer_iterate(m.get());
    const double change = std::abs(previous - m->f) / std::max(std::abs(m->f), 1e-300);
    previous = m->f;
    if (status == GSL_ENOPROG || status != GSL_SUCCESS) {
      // The line search cannot improve further; accept only if we are at a flat point.
      res.converged = inf_norm(m->gradient) < std::sqrt(options.gradient_tolerance) ||
                      change < options.relative_tolerance;
      res.status = res.converged ? "no further progress at stationary point"
                                 : std::string("line search failed: ") + gsl_strerror(status);
      break;
    }
    if (change < options.relative_tolerance && res.iterations > 0) {
      res.converged = true;
      res.status = "relative change tolerance reached";
      ++res.iterations;
      break;
    }
  }
  if (res.iterations >= options.max_iterations && res.status.empty()) res.status = "iteration limit";
  res.x = from_gsl(m->x);
  res.value = m->f;
  res.gradient_inf_norm = inf_norm(m->gradient);
  return res;
}

Result minimize_simplex(const Objective& f, std::vector<double> x0, const SimplexOptions& options) {
  ErrorHandlerGuard guard;
  const std::size_t n = x0.size();
  SimplexContext ctx{&f, std::vector<double>(n)};
  gsl_multimin_function fn{&eval_simplex, n, &ctx};
  std::unique_ptr<gsl_multimin_fminimizer, FDeleter> m(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
  auto start = to_gsl(x0);
  VectorPtr step(gsl_vector_alloc(n));
  gsl_vector_set_all(step.get(), options.initial_step);
  gsl_multimin_fminimizer_set(m.get(), &fn, start.get(), step.get());

  Result res;
  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) {
      res.status = "simplex iteration failed";
      break;
    }
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), options.size_tolerance) ==
        GSL_SUCCESS) {
      res.converged = true;
      res.status = "simplex size tolerance reached";
      break;
    }
  }
  if (res.status.empty()) res.status = "iteration limit";
  res.x = from_gsl(m->x);
  res.value = m->fval;
  return res;
}

}  // namespace stormgen::optim
