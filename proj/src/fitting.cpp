#include "g2lab/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace g2lab {

namespace {

constexpr double kNsPerSecond = 1e9;

struct Point {
  double tau_ns;
  double y;
  double sigma;
};

std::vector<Point> weighted_points(const G2Curve& curve) {
  std::vector<Point> pts;
  pts.reserve(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double sigma = curve.counts[i] > 0 ? curve.g2_err[i] : curve.scale[i];
    if (!(sigma > 0.0) || !std::isfinite(sigma)) continue;
    pts.push_back({curve.tau_ns(i), curve.g2[i], sigma});
  }
  return pts;
}

using Theta = Eigen::Vector3d;  // (a, ln lambda1_ns, ln lambda2_ns)

G2Model to_model(const Theta& t) {
  return G2Model{t[0], std::exp(t[1]) * kNsPerSecond, std::exp(t[2]) * kNsPerSecond};
}

double chi_square(const std::vector<Point>& pts, const G2Model& m) {
  double sum = 0.0;
  for (const auto& p : pts) {
    const double r = (p.y - eval_g2_ns(m, p.tau_ns)) / p.sigma;
    sum += r * r;
  }
  return sum;
}

struct Normal {
  Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
  Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
};

// Normal equations of the weighted residual vector r = (y - f) / sigma.
Normal normal_equations(const std::vector<Point>& pts, const G2Model& m) {
  Normal n;
  for (const auto& p : pts) {
    const auto grad = g2_log_rate_gradient(m, p.tau_ns);
    const Eigen::Vector3d j(grad[0] / p.sigma, grad[1] / p.sigma, grad[2] / p.sigma);
    const double r = (p.y - eval_g2_ns(m, p.tau_ns)) / p.sigma;
    n.jtj += j * j.transpose();
    n.jtr += j * r;
  }
  return n;
}

FitResult levenberg_marquardt(const std::vector<Point>& pts, Theta theta,
                              const FitOptions& opt) {
  FitResult res;
  res.n_points = pts.size();
  double chi2 = chi_square(pts, to_model(theta));
  double lambda = 1e-3;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Normal n = normal_equations(pts, to_model(theta));
    if (n.jtr.norm() < opt.gradient_tolerance) {
      res.converged = true;
      break;
    }
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::Matrix3d a = n.jtj;
      for (int k = 0; k < 3; ++k) a(k, k) += lambda * std::max(n.jtj(k, k), 1e-12);
      const Theta step = a.ldlt().solve(n.jtr);
      const Theta trial = theta + step;
      const double trial_chi2 =
          trial.allFinite() ? chi_square(pts, to_model(trial)) : std::numeric_limits<double>::infinity();
      if (trial_chi2 < chi2) {
        const double rel = (chi2 - trial_chi2) / std::max(chi2, std::numeric_limits<double>::min());
        theta = trial;
        chi2 = trial_chi2;
        lambda = std::max(lambda * 0.3, 1e-12);
        accepted = true;
        if (rel < opt.relative_tolerance) res.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || res.converged) {
      ++it;
      if (!accepted)
        res.converged = normal_equations(pts, to_model(theta)).jtr.norm() < opt.gradient_tolerance;
      break;
    }
  }
  res.n_iterations = it;
  res.model = to_model(theta);
  res.residual_sum = chi2;

  const Normal n = normal_equations(pts, res.model);
  Eigen::FullPivLU<Eigen::Matrix3d> lu(n.jtj);
  lu.setThreshold(1e-12);
  if (lu.isInvertible()) {
    const Eigen::Matrix3d cov = lu.inverse();
    res.param_errors = {std::sqrt(std::max(cov(0, 0), 0.0)),
                        res.model.lambda1 * std::sqrt(std::max(cov(1, 1), 0.0)),
                        res.model.lambda2 * std::sqrt(std::max(cov(2, 2), 0.0))};
  } else {
    res.param_errors.fill(std::numeric_limits<double>::infinity());
  }
  return res;
}

void order_rates(FitResult& r) {
  if (r.model.lambda1 >= r.model.lambda2) return;
  std::swap(r.model.lambda1, r.model.lambda2);
  r.model.a = -1.0 - r.model.a;
  std::swap(r.param_errors[1], r.param_errors[2]);
}

bool better(const FitResult& x, const FitResult& y) {
  if (x.residual_sum != y.residual_sum) return x.residual_sum < y.residual_sum;
  return std::tie(x.model.a, x.model.lambda1, x.model.lambda2) <
         std::tie(y.model.a, y.model.lambda1, y.model.lambda2);
}

}  // namespace

std::array<double, 3> g2_log_rate_gradient(const G2Model& m, double tau_ns) {
  const double l1 = m.lambda1 / kNsPerSecond;
  const double l2 = m.lambda2 / kNsPerSecond;
  const double e1 = std::exp(-l1 * tau_ns);
  const double e2 = std::exp(-l2 * tau_ns);
  return {e2 - e1, (1.0 + m.a) * tau_ns * l1 * e1, -m.a * tau_ns * l2 * e2};
}

FitResult fit_g2(const G2Curve& curve, std::optional<G2Model> init, const FitOptions& options) {
  const auto pts = weighted_points(curve);
  const auto nonempty = std::count_if(curve.counts.begin(), curve.counts.end(),
                                      [](std::uint64_t c) { return c > 0; });
  if (nonempty < 4 || pts.size() < 4)
    fail(ErrorCode::invalid_argument, "g2 fit needs at least 4 non-empty bins");
  if (std::all_of(pts.begin(), pts.end(), [&](const Point& p) { return p.y == pts.front().y; }))
    fail(ErrorCode::degenerate, "degenerate curve: all bins hold the same value");

  if (init) {
    if (!(init->lambda1 > 0.0 && init->lambda2 > 0.0))
      fail(ErrorCode::invalid_argument, "initial rates must be positive");
    Theta theta(init->a, std::log(init->lambda1 / kNsPerSecond),
                std::log(init->lambda2 / kNsPerSecond));
    FitResult r = levenberg_marquardt(pts, theta, options);
    order_rates(r);
    return r;
  }

  double tau_span = 0.0;
  for (const auto& p : pts) tau_span = std::max(tau_span, p.tau_ns);
  const double bin_ns = to_ns(curve.geometry.bin_width);
  const double lo = 0.3 / std::max(tau_span, bin_ns);
  const double hi = 3.0 / bin_ns;
  constexpr int kGrid = 8;
  std::vector<double> grid(kGrid);
  for (int i = 0; i < kGrid; ++i) grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (kGrid - 1));

  std::optional<FitResult> best;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < i; ++j) {
      for (double a : {0.0, 0.5, 2.0}) {
        FitResult r = levenberg_marquardt(pts, Theta(a, std::log(grid[i]), std::log(grid[j])), options);
        order_rates(r);
        if (!best || better(r, *best)) best = r;
      }
    }
  }
  return *best;
}

LinearFit fit_linear(const G2Curve& curve) {
  const auto pts = weighted_points(curve);
  if (pts.size() < 2) fail(ErrorCode::invalid_argument, "linear fit needs at least 2 bins");
  double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : pts) {
    const double w = 1.0 / (p.sigma * p.sigma);
    s += w;
    sx += w * p.tau_ns;
    sy += w * p.y;
    sxx += w * p.tau_ns * p.tau_ns;
    sxy += w * p.tau_ns * p.y;
  }
  // Centered form of the determinant: exact zero when all tau coincide.
  const double mean = sx / s;
  double sxx_centered = 0.0;
  for (const auto& p : pts) sxx_centered += (p.tau_ns - mean) * (p.tau_ns - mean) / (p.sigma * p.sigma);
  if (!(sxx_centered > 0.0)) fail(ErrorCode::degenerate, "singular linear fit: all tau are equal");
  const double det = s * sxx_centered;

  LinearFit fit;
  fit.n_points = pts.size();
  fit.slope_per_ns = (sxy - sx * sy / s) / sxx_centered;
  fit.intercept = (sy - fit.slope_per_ns * sx) / s;
  fit.slope_err = std::sqrt(s / det);
  fit.intercept_err = std::sqrt(sxx / det);
  for (const auto& p : pts) {
    const double r = (p.y - fit.intercept - fit.slope_per_ns * p.tau_ns) / p.sigma;
    fit.residual_sum += r * r;
  }
  return fit;
}

std::vector<ThreeLevelParams> rates_from_model(const G2Model& m, double k21) {
  if (!(k21 > 0.0)) fail(ErrorCode::invalid_argument, "k21 constraint must be positive");
  std::vector<ThreeLevelParams> out;
  if (m.a == 0.0) {
    const double k12 = m.lambda1 - k21;
    if (k12 > 0.0) out.push_back({k12, k21, 0.0, 0.0});
    return out;
  }
  // lambda1 + lambda2 = k12 + k21 + k23 + k31, lambda1 lambda2 = det, and
  // the initial slope (1 + a) lambda1 - a lambda2 equals det / k31.
  const double det = m.lambda1 * m.lambda2;
  const double slope0 = (1.0 + m.a) * m.lambda1 - m.a * m.lambda2;
  if (!(slope0 > 0.0)) return out;
  const double k31 = det / slope0;
  const double s = m.lambda1 + m.lambda2 - k31;
  const double sum = s - k21;      // k12 + k23
  const double prod = det - s * k31;  // k12 * k23
  const double disc = sum * sum - 4.0 * prod;
  if (sum <= 0.0 || prod < 0.0 || disc < 0.0) return out;
  const double root = std::sqrt(disc);
  const double big = 0.5 * (sum + root);
  const double small = big > 0.0 ? prod / big : 0.0;
  out.push_back({big, k21, small, k31});
  if (big != small) out.push_back({small, k21, big, k31});
  return out;
}

}  // namespace g2lab
