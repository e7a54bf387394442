#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "fgvi/model.hpp"

namespace fgvi {

enum class DivergenceKind { KLqp, KLpq, Renyi, Sqp, Spq };

/// Choice of divergence. `alpha` is set iff kind == Renyi and lies in (0, 1);
/// the endpoints are represented by the two KL kinds.
struct DivergenceSpec {
  DivergenceKind kind = DivergenceKind::KLqp;
  std::optional<double> alpha;

  static DivergenceSpec kl_qp() { return {DivergenceKind::KLqp, std::nullopt}; }
  static DivergenceSpec kl_pq() { return {DivergenceKind::KLpq, std::nullopt}; }
  static DivergenceSpec score_qp() { return {DivergenceKind::Sqp, std::nullopt}; }
  static DivergenceSpec score_pq() { return {DivergenceKind::Spq, std::nullopt}; }
  static DivergenceSpec renyi(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
    return {DivergenceKind::Renyi, alpha};
  }

  /// "klqp", "klpq", "sqp", "spq", "renyi"
  std::string name() const {
    switch (kind) {
      case DivergenceKind::KLqp: return "klqp";
      case DivergenceKind::KLpq: return "klpq";
      case DivergenceKind::Renyi: return "renyi";
      case DivergenceKind::Sqp: return "sqp";
      case DivergenceKind::Spq: return "spq";
    }
    return "unknown";
  }

  /// Parses a name as produced by name(); "renyi" requires alpha.
  static DivergenceSpec parse(std::string_view name, std::optional<double> alpha = std::nullopt) {
    if (name == "klqp") return kl_qp();
    if (name == "klpq") return kl_pq();
    if (name == "sqp") return score_qp();
    if (name == "spq") return score_pq();
    if (name == "renyi") {
      if (!alpha) throw Error(ErrorCode::AlphaOutOfRange, "renyi divergence requires alpha");
      return renyi(*alpha);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown divergence '" + std::string(name) + "'");
  }

  friend bool operator==(const DivergenceSpec&, const DivergenceSpec&) = default;
};

namespace detail {

template <typename Scalar>
Scalar check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  return static_cast<Scalar>(alpha);
}

// tr(M^2) for a square M without forming the product.
template <typename Scalar>
Scalar trace_of_square(const Matrix<Scalar>& m) {
  return m.cwiseProduct(m.transpose()).sum();
}

}  // namespace detail

/// KL(q || p) = 1/2 [tr(Psi Sigma^-1) - log|Psi Sigma^-1| - n + (nu-mu)^T Sigma^-1 (nu-mu)]
template <typename Scalar>
Scalar kl_qp(const FactorizedGaussian<Scalar>& q, const GaussianTarget<Scalar>& p) {
  require_same_dim(p, q);
  const auto n = p.dim();
  const Vector<Scalar> d = q.mean() - p.mean();
  const Scalar trace = q.var().dot(p.prec().diag());
  const Scalar log_ratio = q.log_det() - p.cov().log_det();
  return Scalar(0.5) * (trace - log_ratio - Scalar(n) + p.cov().inv_quad(d));
}

/// KL(p || q) = 1/2 [tr(Psi^-1 Sigma) - n + log|Psi| - log|Sigma| + (mu-nu)^T Psi^-1 (mu-nu)]
template <typename Scalar>
Scalar kl_pq(const GaussianTarget<Scalar>& p, const FactorizedGaussian<Scalar>& q) {
  require_same_dim(p, q);
  const auto n = p.dim();
  const Vector<Scalar> d = p.mean() - q.mean();
  const Scalar trace = (p.cov().diag().array() / q.var().array()).sum();
  const Scalar mahal = (d.array().square() / q.var().array()).sum();
  return Scalar(0.5) * (trace - Scalar(n) + q.log_det() - p.cov().log_det() + mahal);
}

/// log of E_q[(p/q)^alpha] for Gaussian p and factorized q. Assembled from
/// log-determinants so that nothing is exponentiated before the end.
template <typename Scalar>
Scalar renyi_log_moment(const GaussianTarget<Scalar>& p, const FactorizedGaussian<Scalar>& q,
                        Scalar alpha) {
  // Sigma_alpha = alpha Psi + (1 - alpha) Sigma
  Matrix<Scalar> mixed = (Scalar(1) - alpha) * p.cov().entries();
  mixed.diagonal() += alpha * q.var();
  const SpdMatrix<Scalar> sigma_alpha(mixed);
  const Vector<Scalar> d = p.mean() - q.mean();
  return -Scalar(0.5) * alpha * (Scalar(1) - alpha) * sigma_alpha.inv_quad(d) -
         Scalar(0.5) * sigma_alpha.log_det() + Scalar(0.5) * alpha * q.log_det() +
         Scalar(0.5) * (Scalar(1) - alpha) * p.cov().log_det();
}

/// R_alpha(p || q) = 1/(alpha(alpha-1)) (E_q[(p/q)^alpha] - 1), alpha in (0, 1).
template <typename Scalar>
Scalar renyi(const GaussianTarget<Scalar>& p, const FactorizedGaussian<Scalar>& q, double alpha) {
  require_same_dim(p, q);
  const Scalar a = detail::check_alpha<Scalar>(alpha);
  const Scalar log_moment = renyi_log_moment(p, q, a);
  return -std::expm1(log_moment) / (a * (Scalar(1) - a));
}

/// S(q || p) = tr[(I - Psi Sigma^-1)^2] + (nu-mu)^T Sigma^-1 Psi Sigma^-1 (nu-mu)
template <typename Scalar>
Scalar score_qp(const FactorizedGaussian<Scalar>& q, const GaussianTarget<Scalar>& p) {
  require_same_dim(p, q);
  const auto n = p.dim();
  const Matrix<Scalar> m =
      Matrix<Scalar>::Identity(n, n) - q.var().asDiagonal() * p.prec().entries();
  const Vector<Scalar> w = p.prec().entries() * (q.mean() - p.mean());
  return detail::trace_of_square(m) + w.dot(q.var().cwiseProduct(w));
}

/// S(p || q) = tr[(I - Sigma Psi^-1)^2] + (mu-nu)^T Psi^-1 Sigma Psi^-1 (mu-nu)
template <typename Scalar>
Scalar score_pq(const GaussianTarget<Scalar>& p, const FactorizedGaussian<Scalar>& q) {
  require_same_dim(p, q);
  const auto n = p.dim();
  const Vector<Scalar> inv_var = q.var().array().inverse().matrix();
  const Matrix<Scalar> m =
      Matrix<Scalar>::Identity(n, n) - p.cov().entries() * inv_var.asDiagonal();
  const Vector<Scalar> w = inv_var.cwiseProduct(p.mean() - q.mean());
  return detail::trace_of_square(m) + w.dot(p.cov().entries() * w);
}

template <typename Scalar>
Scalar evaluate(const DivergenceSpec& spec, const GaussianTarget<Scalar>& p,
                const FactorizedGaussian<Scalar>& q) {
  switch (spec.kind) {
    case DivergenceKind::KLqp: return kl_qp(q, p);
    case DivergenceKind::KLpq: return kl_pq(p, q);
    case DivergenceKind::Renyi:
      if (!spec.alpha) throw Error(ErrorCode::AlphaOutOfRange, "renyi divergence requires alpha");
      return renyi(p, q, *spec.alpha);
    case DivergenceKind::Sqp: return score_qp(q, p);
    case DivergenceKind::Spq: return score_pq(p, q);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown divergence kind");
}

/// The mean-matched objectives with additive constants dropped, i.e. the
/// functions of Psi that the solvers minimize. The mean of q is ignored.
template <typename Scalar>
Scalar reduced_divergence(const DivergenceSpec& spec, const GaussianTarget<Scalar>& p,
                          const Vector<Scalar>& psi) {
  const auto n = p.dim();
  if (psi.size() != n) throw Error(ErrorCode::DimMismatch, "psi length differs from target");
  switch (spec.kind) {
    case DivergenceKind::KLqp:
      return Scalar(0.5) * (psi.dot(p.prec().diag()) - psi.array().log().sum() -
                            p.prec().log_det());
    case DivergenceKind::KLpq:
      return Scalar(0.5) * ((psi.array() / p.cov().diag().array()).log() +
                            p.cov().diag().array() / psi.array())
                               .sum();
    case DivergenceKind::Renyi: {
      const FactorizedGaussian<Scalar> q(p.mean(), psi);
      return renyi(p, q, spec.alpha.value());
    }
    case DivergenceKind::Sqp: {
      const Matrix<Scalar> m =
          Matrix<Scalar>::Identity(n, n) - psi.asDiagonal() * p.prec().entries();
      return detail::trace_of_square(m);
    }
    case DivergenceKind::Spq: {
      const Matrix<Scalar> m = Matrix<Scalar>::Identity(n, n) -
                               p.cov().entries() * psi.array().inverse().matrix().asDiagonal();
      return detail::trace_of_square(m);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown divergence kind");
}

}  // namespace fgvi
