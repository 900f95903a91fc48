#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace stormgen::optim {

/// Objective returning f(x) and writing the gradient into `grad`.
using ObjectiveWithGradient = std::function<double(std::span<const double> x, std::span<double> grad)>;
using Objective = std::function<double(std::span<const double> x)>;

struct Result {
  std::vector<double> x;
  double value = 0.0;
  double gradient_inf_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::string status;
};

struct BfgsOptions {
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-6;  // on the infinity norm
  double relative_tolerance = 1e-10; // on successive objective values
  double initial_step = 0.01;
  double line_tolerance = 0.1;
};

/// Quasi-Newton minimization (GSL vector_bfgs2).
Result minimize_bfgs(const ObjectiveWithGradient& f, std::vector<double> x0,
                     const BfgsOptions& options = {});

struct SimplexOptions {
  std::size_t max_iterations = 5000;
  double size_tolerance = 1e-8;
  double initial_step = 0.1;
};

/// Derivative-free Nelder-Mead minimization (GSL nmsimplex2).
Result minimize_simplex(const Objective& f, std::vector<double> x0, const SimplexOptions& options = {});

}  // namespace stormgen::optim
