#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fgvi/linalg.hpp"

namespace fgvi {

/// min_{s >= 0} 1/2 s^T Q s - 1^T s, with Q unit-diagonal, entrywise
/// nonnegative and positive definite. Built from a covariance or precision
/// matrix as the Hadamard square of its correlation matrix.
template <typename Scalar>
class NqpProblem {
 public:
  explicit NqpProblem(SpdMatrix<Scalar> quad) : quad_(std::move(quad)) {
    const auto& q = quad_.entries();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      for (Eigen::Index i = 0; i < q.rows(); ++i) {
        if (i == j) {
          if (q(i, i) != Scalar(1)) {
            throw Error(ErrorCode::InvalidArgument, "NQP matrix must have unit diagonal");
          }
        } else if (!(q(i, j) >= Scalar(0) && q(i, j) < Scalar(1))) {
          throw Error(ErrorCode::InvalidArgument, "NQP off-diagonal entries must lie in [0, 1)");
        }
      }
    }
  }

  /// Q_ij = A_ij^2 / (A_ii A_jj) for an SPD matrix A.
  static NqpProblem from_hadamard_square(const SpdMatrix<Scalar>& a) {
    Matrix<Scalar> c = normalize_unit_diagonal(a.entries());
    c.diagonal().setOnes();
    Matrix<Scalar> q = c.cwiseProduct(c);
    q.diagonal().setOnes();
    return NqpProblem(SpdMatrix<Scalar>(q));
  }

  Eigen::Index dim() const { return quad_.dim(); }
  const SpdMatrix<Scalar>& quad() const { return quad_; }

  Scalar objective(const Vector<Scalar>& s) const {
    return Scalar(0.5) * s.dot(quad_.entries() * s) - s.sum();
  }

  /// max_i |min(s_i, (Qs)_i - 1)|
  Scalar kkt_residual(const Vector<Scalar>& s) const {
    const Vector<Scalar> grad = quad_.entries() * s - Vector<Scalar>::Ones(s.size());
    Scalar r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      r = std::max(r, std::abs(std::min(s(i), grad(i))));
    }
    return r;
  }

 private:
  SpdMatrix<Scalar> quad_;
};

struct NqpOptions {
  double tol = 1e-10;
  std::size_t max_sweeps = 100000;
  // Sweeps between attempts to finish exactly on the current free set.
  std::size_t polish_every = 16;
  std::size_t active_set_after = 200;
};

template <typename Scalar>
struct NqpResult {
  Vector<Scalar> solution;
  Scalar kkt_residual;
  std::size_t sweeps;
};

class NqpNoConvergence : public Error {
 public:
  NqpNoConvergence(VectorXd best, double residual)
      : Error(ErrorCode::NoConvergence,
              "NQP coordinate descent stalled with KKT residual " + std::to_string(residual)),
        best_(std::move(best)),
        residual_(residual) {}
  const VectorXd& best() const { return best_; }
  double residual() const { return residual_; }

 private:
  VectorXd best_;
  double residual_;
};

namespace detail {

// Solves Q_FF s_F = 1 on the free set F = {i : s_i > 0}, zeroing the rest.
// Returns false if the reduced solution leaves the nonnegative orthant.
template <typename Scalar>
bool polish_on_free_set(const Matrix<Scalar>& q, Vector<Scalar>& s) {
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > Scalar(0)) free.push_back(i);
  }
  Vector<Scalar> candidate = Vector<Scalar>::Zero(s.size());
  if (!free.empty()) {
    const auto m = static_cast<Eigen::Index>(free.size());
    Matrix<Scalar> sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = q(free[a], free[b]);
    }
    const Eigen::LLT<Matrix<Scalar>> llt(sub);
    if (llt.info() != Eigen::Success) return false;
    const Vector<Scalar> x = llt.solve(Vector<Scalar>::Ones(m));
    if ((x.array() <= Scalar(0)).any()) return false;
    for (Eigen::Index a = 0; a < m; ++a) candidate(free[a]) = x(a);
  }
  s = candidate;
  return true;
}

// Primal active-set method warm-started at a feasible s. Each step solves the
// equality-constrained problem on the free set, walks toward it until a
// coordinate hits zero, and releases the bound coordinate with the most
// negative gradient once the free-set solution is feasible. Finite for
// positive definite Q; the step cap only guards against round-off cycling.
template <typename Scalar>
Vector<Scalar> active_set_finish(const Matrix<Scalar>& q, Vector<Scalar> s, Scalar tol) {
  const auto n = s.size();
  std::vector<bool> free(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) free[static_cast<std::size_t>(i)] = s(i) > Scalar(0);

  for (Eigen::Index step = 0; step < 20 * n + 100; ++step) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (free[static_cast<std::size_t>(i)]) idx.push_back(i);
    }
    Vector<Scalar> target = Vector<Scalar>::Zero(n);
    if (!idx.empty()) {
      const auto m = static_cast<Eigen::Index>(idx.size());
      Matrix<Scalar> sub(m, m);
      for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = q(idx[a], idx[b]);
      }
      const Vector<Scalar> x = sub.llt().solve(Vector<Scalar>::Ones(m));
      for (Eigen::Index a = 0; a < m; ++a) target(idx[a]) = x(a);
    }

    // Longest feasible step toward the free-set solution.
    Scalar t = 1;
    Eigen::Index blocking = -1;
    for (Eigen::Index i : idx) {
      if (target(i) <= Scalar(0)) {
        const Scalar ti = s(i) / (s(i) - target(i));
        if (ti < t) {
          t = ti;
          blocking = i;
        }
      }
    }
    if (blocking >= 0) {
      s += t * (target - s);
      for (Eigen::Index i : idx) {
        if (i == blocking || s(i) <= Scalar(0)) {
          s(i) = 0;
          free[static_cast<std::size_t>(i)] = false;
        }
      }
      continue;
    }

    s = target;
    const Vector<Scalar> grad = q * s - Vector<Scalar>::Ones(n);
    Eigen::Index release = -1;
    Scalar most_negative = -tol;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!free[static_cast<std::size_t>(i)] && grad(i) < most_negative) {
        most_negative = grad(i);
        release = i;
      }
    }
    if (release < 0) break;
    free[static_cast<std::size_t>(release)] = true;
  }
  return s;
}

}  // namespace detail

/// Cyclic projected coordinate descent,
///   s_i <- max(0, s_i - ((Qs)_i - 1) / Q_ii),
/// started from s = 0. Every few sweeps the iterate's support is taken as a
/// guess of the optimal free set and the reduced linear system is solved
/// exactly; the guess is kept only if it satisfies the KKT conditions.
/// Descent that is still short of tolerance after `active_set_after` sweeps
/// (ill-conditioned Q) is finished by an active-set method from the iterate.
template <typename Scalar>
NqpResult<Scalar> nqp_solve(const NqpProblem<Scalar>& prob, const NqpOptions& opts = {}) {
  const auto n = prob.dim();
  const Matrix<Scalar>& q = prob.quad().entries();
  const Scalar tol = static_cast<Scalar>(opts.tol);

  Vector<Scalar> s = Vector<Scalar>::Zero(n);
  Vector<Scalar> grad = -Vector<Scalar>::Ones(n);  // Qs - 1
  Scalar best_residual = prob.kkt_residual(s);
  Vector<Scalar> best = s;

  for (std::size_t sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar updated = std::max(Scalar(0), s(i) - grad(i) / q(i, i));
      const Scalar delta = updated - s(i);
      if (delta != Scalar(0)) {
        s(i) = updated;
        grad += delta * q.col(i);
      }
    }

    Scalar residual = prob.kkt_residual(s);
    if (residual < best_residual) {
      best_residual = residual;
      best = s;
    }
    if (residual <= tol) {
      Vector<Scalar> polished = s;
      if (detail::polish_on_free_set(q, polished)) {
        const Scalar r = prob.kkt_residual(polished);
        if (r <= residual) return {polished, r, sweep};
      }
      return {s, residual, sweep};
    }

    if (sweep % opts.polish_every == 0) {
      Vector<Scalar> polished = s;
      if (detail::polish_on_free_set(q, polished)) {
        const Scalar r = prob.kkt_residual(polished);
        if (r <= tol) return {polished, r, sweep};
      }
    }

    if (sweep == opts.active_set_after || sweep == opts.max_sweeps) {
      const Vector<Scalar> finished = detail::active_set_finish(q, s, tol);
      const Scalar r = prob.kkt_residual(finished);
      if (r <= tol) return {finished, r, sweep};
      if (r < best_residual) {
        best_residual = r;
        best = finished;
      }
    }
  }
  throw NqpNoConvergence(best.template cast<double>(), static_cast<double>(best_residual));
}

}  // namespace fgvi
