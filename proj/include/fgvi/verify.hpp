#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fgvi/solvers.hpp"

namespace fgvi {

enum class TradeoffCase { VarianceMatching, PrecisionMatching, GenVarMatching };

inline const char* to_string(TradeoffCase c) {
  switch (c) {
    case TradeoffCase::VarianceMatching: return "variance_matching";
    case TradeoffCase::PrecisionMatching: return "precision_matching";
    case TradeoffCase::GenVarMatching: return "gen_var_matching";
  }
  return "unknown";
}

/// Tolerances for turning inequalities into verdicts. Non-strict inequalities
/// may be violated by at most `slack` (relative), and "strict somewhere" means
/// some gap exceeds `strict_margin` (relative).
struct CheckTolerances {
  double slack = 1e-9;
  double strict_margin = 1e-7;
};

template <typename Scalar>
struct TradeoffReport {
  TradeoffCase tradeoff_case;
  Scalar gen_var_gap;             // log|Psi| - log|Sigma|
  Vector<Scalar> precision_gaps;  // 1/psi_i - Sigma^{-1}_ii
  Vector<Scalar> variance_gaps;   // psi_i - Sigma_ii
  bool passed = true;
  std::string violated_clause;    // empty when passed
};

namespace detail {

inline void require_non_diagonal(bool is_diagonal) {
  if (is_diagonal) {
    throw Error(ErrorCode::DiagonalTarget, "trade-offs are only strict for non-diagonal targets");
  }
}

template <typename Scalar>
void fail(TradeoffReport<Scalar>& r, const std::string& clause) {
  if (r.passed) {
    r.passed = false;
    r.violated_clause = clause;
  }
}

}  // namespace detail

/// Checks the three-way trade-off between marginal variances, marginal
/// precisions and generalized variance for a factorized approximation that
/// matches one of the three.
template <typename Scalar>
TradeoffReport<Scalar> check_tradeoffs(const GaussianTarget<Scalar>& p, const Vector<Scalar>& psi,
                                       TradeoffCase which, const CheckTolerances& tol = {}) {
  detail::require_non_diagonal(p.cov().is_diagonal());
  if (psi.size() != p.dim()) throw Error(ErrorCode::DimMismatch, "psi length differs from target");
  if (!((psi.array() > Scalar(0)).all() && psi.allFinite())) {
    throw Error(ErrorCode::InvalidArgument, "psi must be strictly positive and finite");
  }

  const Vector<Scalar> sigma_diag = p.cov().diag();
  const Vector<Scalar> prec_diag = p.prec().diag();

  TradeoffReport<Scalar> r;
  r.tradeoff_case = which;
  r.gen_var_gap = psi.array().log().sum() - p.cov().log_det();
  r.precision_gaps = psi.array().inverse().matrix() - prec_diag;
  r.variance_gaps = psi - sigma_diag;

  const Vector<Scalar> rel_prec = r.precision_gaps.cwiseQuotient(prec_diag);
  const Vector<Scalar> rel_var = r.variance_gaps.cwiseQuotient(sigma_diag);
  const auto slack = static_cast<Scalar>(tol.slack);
  const auto margin = static_cast<Scalar>(tol.strict_margin);
  const auto n = static_cast<Scalar>(p.dim());

  switch (which) {
    case TradeoffCase::VarianceMatching:
      if (rel_var.cwiseAbs().maxCoeff() > slack) detail::fail(r, "premise: diag(Psi) = diag(Sigma)");
      if (!(r.gen_var_gap > margin)) detail::fail(r, "|Psi| > |Sigma|");
      if (rel_prec.maxCoeff() > slack) detail::fail(r, "diag(Psi^-1) <= diag(Sigma^-1)");
      if (!(rel_prec.minCoeff() < -margin)) detail::fail(r, "Psi^-1_ii < Sigma^-1_ii for some i");
      break;
    case TradeoffCase::PrecisionMatching:
      if (rel_prec.cwiseAbs().maxCoeff() > slack) {
        detail::fail(r, "premise: diag(Psi^-1) = diag(Sigma^-1)");
      }
      if (!(r.gen_var_gap < -margin)) detail::fail(r, "|Psi| < |Sigma|");
      if (rel_var.maxCoeff() > slack) detail::fail(r, "diag(Psi) <= diag(Sigma)");
      if (!(rel_var.minCoeff() < -margin)) detail::fail(r, "Psi_ii < Sigma_ii for some i");
      break;
    case TradeoffCase::GenVarMatching:
      if (std::abs(r.gen_var_gap) > slack * n) detail::fail(r, "premise: |Psi| = |Sigma|");
      if (!(rel_var.minCoeff() < -margin)) detail::fail(r, "Psi_ii < Sigma_ii for some i");
      if (!(rel_prec.minCoeff() < -margin)) detail::fail(r, "Psi^-1_jj < Sigma^-1_jj for some j");
      break;
  }
  return r;
}

/// The three matching constructions: psi = diag(Sigma), psi = 1/diag(Sigma^-1),
/// and the precision-matching psi scaled uniformly so that |Psi| = |Sigma|.
template <typename Scalar>
Vector<Scalar> matching_psi(const GaussianTarget<Scalar>& p, TradeoffCase which) {
  switch (which) {
    case TradeoffCase::VarianceMatching: return p.cov().diag();
    case TradeoffCase::PrecisionMatching: return p.prec().diag().array().inverse().matrix();
    case TradeoffCase::GenVarMatching: {
      const Vector<Scalar> base = p.prec().diag().array().inverse().matrix();
      const Scalar shift = (p.cov().log_det() - base.array().log().sum()) / Scalar(p.dim());
      return base * std::exp(shift);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown trade-off case");
}

template <typename Scalar>
struct HadamardReport {
  /// sum_i log(Sigma_ii / psi_i) - (log|Sigma| - log|Psi|), equals -log|C|
  Scalar variance_slack;
  /// (log|Sigma| - log|Psi|) - sum_i log(Psi^-1_ii / Sigma^-1_ii), equals -log|C~|
  Scalar precision_slack;
  bool passed;
};

/// The two determinant inequalities behind the trade-offs. Both reduce to
/// Hadamard's inequality for the correlation matrices of Sigma and Sigma^-1,
/// so they hold for every positive psi.
template <typename Scalar>
HadamardReport<Scalar> check_hadamard_bounds(const GaussianTarget<Scalar>& p,
                                             const Vector<Scalar>& psi) {
  detail::require_non_diagonal(p.cov().is_diagonal());
  if (psi.size() != p.dim()) throw Error(ErrorCode::DimMismatch, "psi length differs from target");
  const Scalar lhs = p.cov().log_det() - psi.array().log().sum();
  const Scalar var_rhs = (p.cov().diag().array() / psi.array()).log().sum();
  const Scalar prec_rhs = (psi.array().inverse() / p.prec().diag().array()).log().sum();
  HadamardReport<Scalar> r;
  r.variance_slack = var_rhs - lhs;
  r.precision_slack = lhs - prec_rhs;
  r.passed = r.variance_slack > Scalar(0) && r.precision_slack > Scalar(0);
  return r;
}

struct OrderingViolation {
  DivergenceSpec lower;
  DivergenceSpec upper;
  /// Coordinate breaking psi_lower <= psi_upper, or -1 when no coordinate is
  /// strictly ordered.
  Eigen::Index coordinate;
};

template <typename Scalar>
struct OrderingReport {
  std::vector<SolveReport<Scalar>> reports;  // in the order of the chain
  std::vector<OrderingViolation> violations;
  /// Diagonal target: every solver returns diag(Sigma), which is not a violation.
  bool degenerate = false;

  bool passed() const { return violations.empty(); }
};

/// The chain S(q||p), KL(q||p), R_alpha for increasing alpha, KL(p||q), S(p||q).
inline std::vector<DivergenceSpec> ordering_chain(const std::vector<double>& alphas) {
  std::vector<DivergenceSpec> chain{DivergenceSpec::score_qp(), DivergenceSpec::kl_qp()};
  for (double a : alphas) chain.push_back(DivergenceSpec::renyi(a));
  chain.push_back(DivergenceSpec::kl_pq());
  chain.push_back(DivergenceSpec::score_pq());
  return chain;
}

/// Compares psi_a <= psi_b coordinatewise (with relative slack) and requires a
/// strict gap somewhere. Collapsed coordinates are 0 or +inf and compare as
/// extended reals.
template <typename Scalar>
std::optional<Eigen::Index> first_ordering_violation(const Vector<Scalar>& lower,
                                                     const Vector<Scalar>& upper,
                                                     const Vector<Scalar>& scale,
                                                     const CheckTolerances& tol = {}) {
  const auto slack = static_cast<Scalar>(tol.slack);
  const auto margin = static_cast<Scalar>(tol.strict_margin);
  bool strict = false;
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    const Scalar a = lower(i);
    const Scalar b = upper(i);
    if (std::isinf(b) && !std::isinf(a)) {
      strict = true;
      continue;
    }
    if (std::isinf(a)) {
      if (!std::isinf(b)) return i;
      continue;
    }
    const Scalar gap = (b - a) / scale(i);
    if (gap < -slack) return i;
    if (gap > margin) strict = true;
  }
  if (!strict) return Eigen::Index(-1);
  return std::nullopt;
}

template <typename Scalar>
OrderingReport<Scalar> check_ordering(const GaussianTarget<Scalar>& p,
                                      const std::vector<double>& alphas,
                                      const SolverOptions& opts = {},
                                      const CheckTolerances& tol = {}) {
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    if (!(alphas[k] > 0.0 && alphas[k] < 1.0)) {
      throw Error(ErrorCode::AlphaOutOfRange, "alphas must lie in (0, 1)");
    }
    if (k > 0 && !(alphas[k] > alphas[k - 1])) {
      throw Error(ErrorCode::InvalidArgument, "alphas must be strictly increasing");
    }
  }

  OrderingReport<Scalar> r;
  for (const auto& spec : ordering_chain(alphas)) r.reports.push_back(solve(spec, p, opts));

  if (p.cov().is_diagonal()) {
    r.degenerate = true;
    return r;
  }
  const Vector<Scalar> scale = p.cov().diag();
  for (std::size_t k = 0; k + 1 < r.reports.size(); ++k) {
    const auto& lo = r.reports[k];
    const auto& hi = r.reports[k + 1];
    if (auto v = first_ordering_violation(lo.psi, hi.psi, scale, tol)) {
      r.violations.push_back({lo.spec, hi.spec, *v});
    }
  }
  return r;
}

}  // namespace fgvi
