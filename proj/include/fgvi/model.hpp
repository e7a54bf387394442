#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "fgvi/linalg.hpp"

namespace fgvi {

/// Gaussian target p = normal(mean, cov). The precision matrix is cached at
/// construction since every solver consumes it.
template <typename Scalar>
class GaussianTarget {
 public:
  GaussianTarget(Vector<Scalar> mean, SpdMatrix<Scalar> cov)
      : mean_(std::move(mean)), cov_(std::move(cov)), prec_(inverse(cov_)) {
    if (mean_.size() != cov_.dim()) {
      throw Error(ErrorCode::DimMismatch, "mean has length " + std::to_string(mean_.size()) +
                                              ", covariance is " + std::to_string(cov_.dim()) +
                                              "-dimensional");
    }
    if (!mean_.allFinite()) throw Error(ErrorCode::NonFinite, "target mean is not finite");
  }

  explicit GaussianTarget(const SpdMatrix<Scalar>& cov)
      : GaussianTarget(Vector<Scalar>::Zero(cov.dim()), cov) {}

  Eigen::Index dim() const { return mean_.size(); }
  const Vector<Scalar>& mean() const { return mean_; }
  const SpdMatrix<Scalar>& cov() const { return cov_; }
  const SpdMatrix<Scalar>& prec() const { return prec_; }

 private:
  Vector<Scalar> mean_;
  SpdMatrix<Scalar> cov_;
  SpdMatrix<Scalar> prec_;
};

/// Factorized Gaussian q = normal(mean, diag(var)) with strictly positive,
/// finite variances.
template <typename Scalar>
class FactorizedGaussian {
 public:
  FactorizedGaussian(Vector<Scalar> mean, Vector<Scalar> var)
      : mean_(std::move(mean)), var_(std::move(var)) {
    if (mean_.size() != var_.size()) {
      throw Error(ErrorCode::DimMismatch, "mean and variance lengths differ");
    }
    if (!mean_.allFinite() || !var_.allFinite()) {
      throw Error(ErrorCode::NonFinite, "factorized Gaussian has non-finite parameters");
    }
    if ((var_.array() <= Scalar(0)).any()) {
      throw Error(ErrorCode::InvalidArgument, "variances must be strictly positive");
    }
  }

  Eigen::Index dim() const { return mean_.size(); }
  const Vector<Scalar>& mean() const { return mean_; }
  const Vector<Scalar>& var() const { return var_; }
  Scalar log_det() const { return var_.array().log().sum(); }

 private:
  Vector<Scalar> mean_;
  Vector<Scalar> var_;
};

using GaussianTargetd = GaussianTarget<double>;
using FactorizedGaussiand = FactorizedGaussian<double>;

template <typename Scalar>
struct UncertaintySummary {
  Vector<Scalar> marginal_vars;
  Vector<Scalar> marginal_precs;
  Scalar log_gen_var;
  Scalar entropy;
};

template <typename Scalar>
Scalar gaussian_entropy(Eigen::Index n, Scalar log_gen_var) {
  const Scalar two_pi_e = Scalar(2) * std::numbers::pi_v<Scalar> * std::numbers::e_v<Scalar>;
  return Scalar(0.5) * Scalar(n) * std::log(two_pi_e) + Scalar(0.5) * log_gen_var;
}

template <typename Scalar>
UncertaintySummary<Scalar> summarize_target(const GaussianTarget<Scalar>& p) {
  UncertaintySummary<Scalar> s;
  s.marginal_vars = p.cov().diag();
  s.marginal_precs = p.prec().diag();
  s.log_gen_var = p.cov().log_det();
  s.entropy = gaussian_entropy(p.dim(), s.log_gen_var);
  return s;
}

template <typename Scalar>
UncertaintySummary<Scalar> summarize_approx(const FactorizedGaussian<Scalar>& q) {
  UncertaintySummary<Scalar> s;
  s.marginal_vars = q.var();
  s.marginal_precs = q.var().array().inverse().matrix();
  s.log_gen_var = q.log_det();
  s.entropy = gaussian_entropy(q.dim(), s.log_gen_var);
  return s;
}

template <typename Scalar>
void require_same_dim(const GaussianTarget<Scalar>& p, const FactorizedGaussian<Scalar>& q) {
  if (p.dim() != q.dim()) {
    throw Error(ErrorCode::DimMismatch, "target is " + std::to_string(p.dim()) +
                                            "-dimensional, approximation is " +
                                            std::to_string(q.dim()) + "-dimensional");
  }
}

}  // namespace fgvi
