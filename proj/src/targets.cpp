#include "fgvi/targets.hpp"

#include <cmath>
#include <random>

namespace fgvi {

BlackBoxTarget gaussian_target_as_blackbox(const GaussianTargetd& p, std::string name) {
  BlackBoxTarget t;
  t.name = std::move(name);
  t.dim = p.dim();
  // Copies keep the closures self-contained and immutable.
  const VectorXd mu = p.mean();
  const MatrixXd prec = p.prec().entries();
  t.log_density_unnormalized = [mu, prec](const VectorXd& z) {
    const VectorXd d = z - mu;
    return -0.5 * d.dot(prec * d);
  };
  t.score = [mu, prec](const VectorXd& z) -> VectorXd { return -(prec * (z - mu)); };
  t.reference_moments = ReferenceMoments{p.mean(), p.cov().diag(), "exact (Gaussian)"};
  t.gaussian = p;
  return t;
}

namespace {

double rosenbrock_log_density(const VectorXd& z) {
  const double m = kRosenbrockCurvature * (z(0) * z(0) - kRosenbrockShift);
  const double r = z(1) - m;
  return -0.5 * z(0) * z(0) / kRosenbrockZ1Variance - 0.5 * r * r;
}

VectorXd rosenbrock_score(const VectorXd& z) {
  const double m = kRosenbrockCurvature * (z(0) * z(0) - kRosenbrockShift);
  const double r = z(1) - m;
  VectorXd g(2);
  g(0) = -z(0) / kRosenbrockZ1Variance + r * 2.0 * kRosenbrockCurvature * z(0);
  g(1) = -r;
  return g;
}

// rosenbrock_quadrature_moments() at its default grid reproduces these to
// better than 1e-9; stored so callers need not rerun the quadrature.
constexpr double kRosenbrockMeanZ1 = 0.0;
constexpr double kRosenbrockMeanZ2 = -2.7;
constexpr double kRosenbrockVarZ1 = 10.0;
constexpr double kRosenbrockVarZ2 = 1.18;

}  // namespace

BlackBoxTarget rosenbrock_target() {
  BlackBoxTarget t;
  t.name = "rosenbrock";
  t.dim = 2;
  t.log_density_unnormalized = rosenbrock_log_density;
  t.score = rosenbrock_score;
  VectorXd mean(2);
  mean << kRosenbrockMeanZ1, kRosenbrockMeanZ2;
  VectorXd var(2);
  var << kRosenbrockVarZ1, kRosenbrockVarZ2;
  t.reference_moments =
      ReferenceMoments{mean, var,
                       "tensor-grid trapezoid quadrature, 1601 x 2401 points, z1 in +-12 sd, "
                       "z2 within 12 of the conditional-mean range"};
  t.convention = "z1 ~ normal(0, 10) read as variance 10";
  return t;
}

ReferenceMoments rosenbrock_quadrature_moments(int z1_points, int z2_points) {
  const double sd = std::sqrt(kRosenbrockZ1Variance);
  const double z1_lo = -12.0 * sd;
  const double z1_hi = 12.0 * sd;
  const double z2_lo = kRosenbrockCurvature * (0.0 - kRosenbrockShift) - 12.0;
  const double z2_hi = kRosenbrockCurvature * (z1_hi * z1_hi - kRosenbrockShift) + 12.0;
  const double h1 = (z1_hi - z1_lo) / (z1_points - 1);
  const double h2 = (z2_hi - z2_lo) / (z2_points - 1);

  double mass = 0, s1 = 0, s2 = 0, s11 = 0, s22 = 0;
  VectorXd z(2);
  for (int a = 0; a < z1_points; ++a) {
    const double wa = (a == 0 || a == z1_points - 1) ? 0.5 : 1.0;
    z(0) = z1_lo + a * h1;
    for (int b = 0; b < z2_points; ++b) {
      const double wb = (b == 0 || b == z2_points - 1) ? 0.5 : 1.0;
      z(1) = z2_lo + b * h2;
      const double w = wa * wb * std::exp(rosenbrock_log_density(z));
      mass += w;
      s1 += w * z(0);
      s2 += w * z(1);
      s11 += w * z(0) * z(0);
      s22 += w * z(1) * z(1);
    }
  }
  ReferenceMoments m;
  m.mean = VectorXd(2);
  m.mean << s1 / mass, s2 / mass;
  m.marginal_var = VectorXd(2);
  m.marginal_var << s11 / mass - m.mean(0) * m.mean(0), s22 / mass - m.mean(1) * m.mean(1);
  m.provenance = "tensor-grid trapezoid quadrature, " + std::to_string(z1_points) + " x " +
                 std::to_string(z2_points) + " points";
  return m;
}

GaussianTargetd equicorrelated_gaussian(Eigen::Index n, double eps) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "equicorrelated target needs n >= 2");
  const double lower = -1.0 / static_cast<double>(n - 1);
  if (!(eps > lower && eps < 1.0)) {
    throw Error(ErrorCode::EpsOutOfRange, "eps = " + std::to_string(eps) + " outside (" +
                                              std::to_string(lower) + ", 1)");
  }
  MatrixXd sigma = MatrixXd::Constant(n, n, eps);
  sigma.diagonal().setOnes();
  return GaussianTargetd(SpdMatrixd(sigma));
}

GaussianTargetd random_correlation_target(Eigen::Index n, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "random target needs n >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  MatrixXd g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = normal(rng);
  }
  MatrixXd c = normalize_unit_diagonal(MatrixXd(g * g.transpose()));
  c.diagonal().setOnes();

  VectorXd mean(n);
  for (Eigen::Index i = 0; i < n; ++i) mean(i) = uniform(rng);
  return GaussianTargetd(mean, SpdMatrixd(c));
}

GaussianTargetd correlated_pair(double rho) {
  MatrixXd sigma(2, 2);
  sigma << 1.0, rho, rho, 1.0;
  return GaussianTargetd(SpdMatrixd(sigma));
}

GaussianTargetd collapsing_triple() {
  MatrixXd c(3, 3);
  c << 1.0, 0.95, 0.25,
       0.95, 1.0, 0.5,
       0.25, 0.5, 1.0;
  return GaussianTargetd(SpdMatrixd(c));
}

std::vector<std::string> zoo_names() {
  return {"gaussian2d_rho05", "standard_normal2d", "collapse3d", "rosenbrock"};
}

BlackBoxTarget zoo_target(std::string_view name) {
  if (name == "gaussian2d_rho05") return gaussian_target_as_blackbox(correlated_pair(0.5), "gaussian2d_rho05");
  if (name == "standard_normal2d") {
    return gaussian_target_as_blackbox(GaussianTargetd(SpdMatrixd::identity(2)), "standard_normal2d");
  }
  if (name == "collapse3d") return gaussian_target_as_blackbox(collapsing_triple(), "collapse3d");
  if (name == "rosenbrock") return rosenbrock_target();
  std::string known;
  for (const auto& n : zoo_names()) known += (known.empty() ? "" : ", ") + n;
  throw Error(ErrorCode::InvalidArgument, "unknown target '" + std::string(name) + "' (known: " + known + ")");
}

double max_gradient_error(const BlackBoxTarget& target, const std::vector<VectorXd>& points,
                          double rel_step) {
  double worst = 0;
  for (const auto& z : points) {
    const VectorXd g = target.score(z);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double h = rel_step * (1.0 + std::abs(z(i)));
      VectorXd up = z;
      VectorXd down = z;
      up(i) += h;
      down(i) -= h;
      const double fd = (target.log_density_unnormalized(up) -
                         target.log_density_unnormalized(down)) / (2.0 * h);
      worst = std::max(worst, std::abs(g(i) - fd) / (1.0 + std::abs(fd)));
    }
  }
  return worst;
}

}  // namespace fgvi
