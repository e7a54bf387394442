#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fgvi/model.hpp"

namespace fgvi {

struct ReferenceMoments {
  VectorXd mean;
  VectorXd marginal_var;
  std::string provenance;
};

/// Target known through an unnormalized log density and its gradient.
/// Both functions must be pure so that batches can be scored concurrently.
struct BlackBoxTarget {
  std::string name;
  Eigen::Index dim = 0;
  std::function<double(const VectorXd&)> log_density_unnormalized;
  std::function<VectorXd(const VectorXd&)> score;
  std::optional<ReferenceMoments> reference_moments;
  /// Set when the target is itself Gaussian, enabling closed-form diagnostics.
  std::optional<GaussianTargetd> gaussian;
  /// Free-form note on conventions (e.g. scale parameterization).
  std::string convention;
};

BlackBoxTarget gaussian_target_as_blackbox(const GaussianTargetd& p, std::string name = "gaussian");

/// Two-dimensional crescent: z1 ~ normal(0, variance 10),
/// z2 | z1 ~ normal(0.03 (z1^2 - 100), 1).
BlackBoxTarget rosenbrock_target();

inline constexpr double kRosenbrockZ1Variance = 10.0;
inline constexpr double kRosenbrockCurvature = 0.03;
inline constexpr double kRosenbrockShift = 100.0;

/// Moments of the Rosenbrock target by tensor-grid trapezoid quadrature on
/// [-12 sd, 12 sd] in z1 and a window of +-12 around the conditional mean
/// range in z2.
ReferenceMoments rosenbrock_quadrature_moments(int z1_points = 1601, int z2_points = 2401);

/// Sigma = (1 - eps) I + eps 11^T with zero mean; requires n >= 2 and
/// -1/(n-1) < eps < 1.
GaussianTargetd equicorrelated_gaussian(Eigen::Index n, double eps);

/// Random correlation matrix from a Gaussian factor G G^T rescaled to unit
/// diagonal, with mean uniform in [-1, 1]^n. Deterministic in (n, seed).
GaussianTargetd random_correlation_target(Eigen::Index n, std::uint64_t seed);

/// 2-D target with unit variances and correlation rho.
GaussianTargetd correlated_pair(double rho);

/// Dense 3-D correlation target (C12 = 0.95, C13 = 0.25, C23 = 0.5) on which
/// both score-based solutions collapse a coordinate.
GaussianTargetd collapsing_triple();

/// Named targets: "gaussian2d_rho05", "standard_normal2d", "collapse3d",
/// "rosenbrock". Unknown names throw InvalidArgument.
BlackBoxTarget zoo_target(std::string_view name);
std::vector<std::string> zoo_names();

/// Finite-difference gradient check: max over the points of
/// |score - fd| / (1 + |fd|), using central differences with step
/// rel_step * (1 + |z_i|).
double max_gradient_error(const BlackBoxTarget& target, const std::vector<VectorXd>& points,
                          double rel_step = 1e-5);

}  // namespace fgvi
