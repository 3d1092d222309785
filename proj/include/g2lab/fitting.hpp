#pragma once

#include <array>
#include <optional>
#include <vector>

#include "g2lab/correlation.hpp"
#include "g2lab/emitters.hpp"

namespace g2lab {

struct FitResult {
  G2Model model;
  /// Weighted sum of squared residuals (chi-square).
  double residual_sum = 0.0;
  int n_iterations = 0;
  bool converged = false;
  /// One-sigma errors of (a, lambda1, lambda2) from the inverse normal
  /// matrix; lambda errors in s^-1. Infinite when the fit is singular.
  std::array<double, 3> param_errors{};
  std::size_t n_points = 0;
};

struct LinearFit {
  double slope_per_ns = 0.0;
  double intercept = 0.0;
  double residual_sum = 0.0;
  double slope_err = 0.0;
  double intercept_err = 0.0;
  std::size_t n_points = 0;
};

struct FitOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-10;
  double gradient_tolerance = 1e-8;
};

/// Partial derivatives of the model at tau with respect to
/// (a, ln lambda1, ln lambda2).
std::array<double, 3> g2_log_rate_gradient(const G2Model& model, double tau_ns);

/// Weighted Levenberg-Marquardt fit of the two-exponential g2 form. Without
/// `init`, runs a multi-start over a log-spaced grid of rate pairs with
/// a in {0, 0.5, 2} and keeps the lowest residual. Empty bins are weighted as
/// if they held one count. Result satisfies lambda1 >= lambda2 (the pair is
/// swapped with a -> -1 - a when needed).
/// Throws ErrorCode::invalid_argument with fewer than 4 non-empty bins and
/// ErrorCode::degenerate when every bin holds the same value.
FitResult fit_g2(const G2Curve& curve, std::optional<G2Model> init = std::nullopt,
                 const FitOptions& options = {});

/// Weighted least-squares line g2 = intercept + slope * tau_ns. Throws
/// ErrorCode::invalid_argument with fewer than 2 bins and
/// ErrorCode::degenerate when all tau are equal.
LinearFit fit_linear(const G2Curve& curve);

/// Rate sets (k12, k21, k23, k31) reproducing `model` for a fixed k21. The
/// model has three observables for four rates, so k12 and k23 are only known
/// as an unordered pair: up to two candidates are returned, k12 >= k23 first.
std::vector<ThreeLevelParams> rates_from_model(const G2Model& model, double k21);

}  // namespace g2lab
