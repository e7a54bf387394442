#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fgvi/divergence.hpp"
#include "fgvi/nqp.hpp"

namespace fgvi {

enum class CollapseMode { ZeroVariance, InfiniteVariance };

struct CollapsedCoord {
  Eigen::Index index;
  CollapseMode mode;
  friend bool operator==(const CollapsedCoord&, const CollapsedCoord&) = default;
};

/// Optimal factorized approximation for one divergence.
///
/// `psi` holds the optimal marginal variances. Collapsed coordinates (see
/// `collapsed`) carry 0 or +inf there; in that case the optimum is not a proper
/// member of the factorized family and approximation() throws.
template <typename Scalar>
struct SolveReport {
  DivergenceSpec spec;
  Vector<Scalar> mean;
  Vector<Scalar> psi;
  Scalar stationarity_residual = 0;
  std::size_t iterations = 0;
  std::vector<CollapsedCoord> collapsed_coords;

  bool collapsed() const { return !collapsed_coords.empty(); }

  FactorizedGaussian<Scalar> approximation() const {
    if (collapsed()) {
      throw Error(ErrorCode::InvalidArgument, "collapsed solution is not a proper distribution");
    }
    return FactorizedGaussian<Scalar>(mean, psi);
  }
};

struct FixedPointOptions {
  double tol = 1e-10;
  std::size_t max_iter = 10000;
  double damping = 0.5;
};

struct SolverOptions {
  FixedPointOptions fixed_point;
  NqpOptions nqp;
  /// s_i (or t_i) below this after convergence counts as exactly zero.
  double collapse_threshold = 1e-12;
};

class RenyiNoConvergence : public Error {
 public:
  RenyiNoConvergence(VectorXd best, double defect, std::size_t iterations)
      : Error(ErrorCode::NoConvergence, "Renyi fixed point not reached after " +
                                            std::to_string(iterations) +
                                            " iterations, defect " + std::to_string(defect)),
        best_(std::move(best)),
        defect_(defect) {}
  const VectorXd& best() const { return best_; }
  double defect() const { return defect_; }

 private:
  VectorXd best_;
  double defect_;
};

template <typename Scalar>
SolveReport<Scalar> solve_kl_qp(const GaussianTarget<Scalar>& p) {
  SolveReport<Scalar> r;
  r.spec = DivergenceSpec::kl_qp();
  r.mean = p.mean();
  r.psi = p.prec().diag().array().inverse().matrix();
  return r;
}

template <typename Scalar>
SolveReport<Scalar> solve_kl_pq(const GaussianTarget<Scalar>& p) {
  SolveReport<Scalar> r;
  r.spec = DivergenceSpec::kl_pq();
  r.mean = p.mean();
  r.psi = p.cov().diag();
  return r;
}

/// Right-hand side of the precision-form fixed point,
///   1 / [ (alpha Psi + (1 - alpha) Sigma)^{-1} ]_ii.
template <typename Scalar>
Vector<Scalar> renyi_precision_map(const GaussianTarget<Scalar>& p, const Vector<Scalar>& psi,
                                   Scalar alpha) {
  Matrix<Scalar> sigma_alpha = (Scalar(1) - alpha) * p.cov().entries();
  sigma_alpha.diagonal() += alpha * psi;
  return inverse_diagonal(SpdMatrix<Scalar>(sigma_alpha)).array().inverse().matrix();
}

/// Right-hand side of the variance-form fixed point,
///   [ (alpha Sigma^{-1} + (1 - alpha) Psi^{-1})^{-1} ]_ii.
template <typename Scalar>
Vector<Scalar> renyi_variance_map(const GaussianTarget<Scalar>& p, const Vector<Scalar>& psi,
                                  Scalar alpha) {
  Matrix<Scalar> phi_alpha = alpha * p.prec().entries();
  phi_alpha.diagonal() += (Scalar(1) - alpha) * psi.array().inverse().matrix();
  return inverse_diagonal(SpdMatrix<Scalar>(phi_alpha));
}

/// Relative defects of psi in the two fixed-point equations, as
/// (precision form, variance form).
template <typename Scalar>
std::pair<Scalar, Scalar> renyi_fixed_point_defects(const GaussianTarget<Scalar>& p,
                                                    const Vector<Scalar>& psi, Scalar alpha) {
  const Vector<Scalar> prec_rhs = renyi_precision_map(p, psi, alpha);
  const Vector<Scalar> var_rhs = renyi_variance_map(p, psi, alpha);
  const Scalar prec_defect = ((prec_rhs - psi).array() / psi.array()).abs().maxCoeff();
  const Scalar var_defect = ((var_rhs - psi).array() / psi.array()).abs().maxCoeff();
  return {prec_defect, var_defect};
}

/// Minimizes R_alpha(p || q) by damped Picard iteration on one of the two
/// equivalent fixed-point equations, starting from precision matching.
///
/// The precision form contracts fast for small alpha and the variance form for
/// alpha near one, so the form is chosen by alpha < 1/2. Convergence is
/// declared only when psi satisfies both forms within tol.
template <typename Scalar>
SolveReport<Scalar> solve_renyi(const GaussianTarget<Scalar>& p, double alpha,
                                const FixedPointOptions& opts = {}) {
  const Scalar a = detail::check_alpha<Scalar>(alpha);
  const Scalar gamma = static_cast<Scalar>(opts.damping);
  const Scalar tol = static_cast<Scalar>(opts.tol);
  const bool use_precision_form = a < Scalar(0.5);

  SolveReport<Scalar> r;
  r.spec = DivergenceSpec::renyi(alpha);
  r.mean = p.mean();

  Vector<Scalar> psi = p.prec().diag().array().inverse().matrix();
  Scalar defect = std::numeric_limits<Scalar>::infinity();
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    const Vector<Scalar> target =
        use_precision_form ? renyi_precision_map(p, psi, a) : renyi_variance_map(p, psi, a);
    const Scalar step = ((target - psi).array() / psi.array()).abs().maxCoeff();
    if (step <= tol) {
      const auto [prec_defect, var_defect] = renyi_fixed_point_defects(p, psi, a);
      defect = std::max(prec_defect, var_defect);
      if (defect <= tol) {
        r.psi = psi;
        r.stationarity_residual = defect;
        r.iterations = it;
        return r;
      }
    }
    psi = (Scalar(1) - gamma) * psi + gamma * target;
    defect = step;
  }
  throw RenyiNoConvergence(psi.template cast<double>(), static_cast<double>(defect),
                           opts.max_iter);
}

namespace detail {

template <typename Scalar>
std::vector<CollapsedCoord> collapsed_from_nqp(const Vector<Scalar>& s, Scalar threshold,
                                               CollapseMode mode) {
  std::vector<CollapsedCoord> out;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) < threshold) out.push_back({i, mode});
  }
  return out;
}

}  // namespace detail

/// S(q || p): psi_i = s_i / Sigma^{-1}_ii where s solves the NQP built from
/// the Hadamard square of the precision correlation matrix.
template <typename Scalar>
SolveReport<Scalar> solve_score_qp(const GaussianTarget<Scalar>& p, const SolverOptions& opts = {}) {
  const auto prob = NqpProblem<Scalar>::from_hadamard_square(p.prec());
  const auto res = nqp_solve(prob, opts.nqp);
  const Scalar threshold = static_cast<Scalar>(opts.collapse_threshold);

  SolveReport<Scalar> r;
  r.spec = DivergenceSpec::score_qp();
  r.mean = p.mean();
  r.collapsed_coords = detail::collapsed_from_nqp(res.solution, threshold, CollapseMode::ZeroVariance);
  r.psi = (res.solution.array() / p.prec().diag().array()).matrix();
  for (const auto& c : r.collapsed_coords) r.psi(c.index) = Scalar(0);
  r.stationarity_residual = res.kkt_residual;
  r.iterations = res.sweeps;
  return r;
}

/// S(p || q): psi_i = Sigma_ii / t_i where t solves the NQP built from the
/// Hadamard square of the correlation matrix.
template <typename Scalar>
SolveReport<Scalar> solve_score_pq(const GaussianTarget<Scalar>& p, const SolverOptions& opts = {}) {
  const auto prob = NqpProblem<Scalar>::from_hadamard_square(p.cov());
  const auto res = nqp_solve(prob, opts.nqp);
  const Scalar threshold = static_cast<Scalar>(opts.collapse_threshold);

  SolveReport<Scalar> r;
  r.spec = DivergenceSpec::score_pq();
  r.mean = p.mean();
  r.collapsed_coords =
      detail::collapsed_from_nqp(res.solution, threshold, CollapseMode::InfiniteVariance);
  r.psi = Vector<Scalar>(p.dim());
  for (Eigen::Index i = 0; i < p.dim(); ++i) {
    r.psi(i) = p.cov()(i, i) / res.solution(i);
  }
  for (const auto& c : r.collapsed_coords) {
    r.psi(c.index) = std::numeric_limits<Scalar>::infinity();
  }
  r.stationarity_residual = res.kkt_residual;
  r.iterations = res.sweeps;
  return r;
}

template <typename Scalar>
SolveReport<Scalar> solve(const DivergenceSpec& spec, const GaussianTarget<Scalar>& p,
                          const SolverOptions& opts = {}) {
  switch (spec.kind) {
    case DivergenceKind::KLqp: return solve_kl_qp(p);
    case DivergenceKind::KLpq: return solve_kl_pq(p);
    case DivergenceKind::Renyi:
      if (!spec.alpha) throw Error(ErrorCode::AlphaOutOfRange, "renyi divergence requires alpha");
      return solve_renyi(p, *spec.alpha, opts.fixed_point);
    case DivergenceKind::Sqp: return solve_score_qp(p, opts);
    case DivergenceKind::Spq: return solve_score_pq(p, opts);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown divergence kind");
}

template <typename Scalar>
struct EntropyMatch {
  double alpha;
  SolveReport<Scalar> report;
  /// log|Psi(alpha)| - log|Sigma| at the returned alpha
  Scalar gap;
  std::size_t bisection_steps;
};

/// Finds the unique alpha in (0, 1) whose Renyi solution has the same
/// generalized variance (equivalently, entropy) as the target, by bisection on
/// the strictly increasing gap log|Psi(alpha)| - log|Sigma|.
template <typename Scalar>
EntropyMatch<Scalar> entropy_matching_alpha(const GaussianTarget<Scalar>& p, double tol = 1e-8,
                                            const FixedPointOptions& inner = {}) {
  if (p.cov().is_diagonal()) {
    throw Error(ErrorCode::DiagonalTarget, "every alpha matches the entropy of a diagonal target");
  }
  const Scalar log_det_sigma = p.cov().log_det();
  auto gap_at = [&](double alpha) {
    auto rep = solve_renyi(p, alpha, inner);
    const Scalar g = rep.psi.array().log().sum() - log_det_sigma;
    return std::pair{g, std::move(rep)};
  };

  double lo = 1e-4;
  double hi = 1.0 - 1e-4;
  auto [g_lo, rep_lo] = gap_at(lo);
  auto [g_hi, rep_hi] = gap_at(hi);
  if (std::abs(g_lo) <= tol) return {lo, std::move(rep_lo), g_lo, 0};
  if (std::abs(g_hi) <= tol) return {hi, std::move(rep_hi), g_hi, 0};
  if (!(g_lo < 0 && g_hi > 0)) {
    throw Error(ErrorCode::NoConvergence,
                "entropy gap does not change sign on the bisection bracket");
  }

  for (std::size_t step = 1; step <= 200; ++step) {
    const double mid = 0.5 * (lo + hi);
    auto [g_mid, rep_mid] = gap_at(mid);
    if (std::abs(g_mid) <= tol || hi - lo <= 4 * std::numeric_limits<double>::epsilon()) {
      return {mid, std::move(rep_mid), g_mid, step};
    }
    if (g_mid < 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw Error(ErrorCode::NoConvergence, "entropy-matching bisection did not converge");
}

}  // namespace fgvi
