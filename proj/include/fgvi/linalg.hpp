#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "fgvi/error.hpp"

namespace fgvi {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

/// Symmetric positive-definite matrix with its Cholesky factor.
///
/// The factor is computed once at construction, so a constructed SpdMatrix is
/// immutable and can be shared read-only between threads. Construction
/// symmetrizes the input by averaging it with its transpose and rejects
/// matrices whose Cholesky pivots fall below n * eps * max|a_ij|.
template <typename Scalar>
class SpdMatrix {
 public:
  using MatrixType = Matrix<Scalar>;
  using VectorType = Vector<Scalar>;

  explicit SpdMatrix(const MatrixType& entries) {
    if (entries.rows() != entries.cols()) {
      throw Error(ErrorCode::NotSquare, "matrix is " + std::to_string(entries.rows()) + "x" +
                                            std::to_string(entries.cols()));
    }
    if (entries.rows() == 0) {
      throw Error(ErrorCode::NotSquare, "matrix is empty");
    }
    if (!entries.allFinite()) {
      throw Error(ErrorCode::NonFinite, "matrix has non-finite entries");
    }
    entries_ = (entries + entries.transpose()) / Scalar(2);
    llt_.compute(entries_);

    const auto n = entries_.rows();
    const Scalar tol = Scalar(n) * std::numeric_limits<Scalar>::epsilon() *
                       entries_.cwiseAbs().maxCoeff();
    if (llt_.info() != Eigen::Success) {
      throw Error(ErrorCode::NotPositiveDefinite, "Cholesky factorization failed");
    }
    // Pivots of the factorization are the squared diagonal of L.
    const MatrixType& l = llt_.matrixLLT();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(l(i, i) * l(i, i) > tol)) {
        throw Error(ErrorCode::NotPositiveDefinite,
                    "Cholesky pivot " + std::to_string(i) + " below tolerance");
      }
    }
  }

  static SpdMatrix identity(Eigen::Index n) { return SpdMatrix(MatrixType::Identity(n, n)); }

  static SpdMatrix diagonal(const VectorType& d) { return SpdMatrix(MatrixType(d.asDiagonal())); }

  Eigen::Index dim() const { return entries_.rows(); }
  const MatrixType& entries() const { return entries_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
  VectorType diag() const { return entries_.diagonal(); }

  /// Lower-triangular Cholesky factor L with entries = L L^T.
  MatrixType chol() const { return llt_.matrixL(); }

  Scalar log_det() const {
    const MatrixType& l = llt_.matrixLLT();
    return Scalar(2) * l.diagonal().array().log().sum();
  }

  template <typename Rhs>
  auto solve(const Eigen::MatrixBase<Rhs>& rhs) const {
    return llt_.solve(rhs);
  }

  /// x^T A^{-1} x
  Scalar inv_quad(const VectorType& x) const {
    const VectorType y = llt_.matrixL().solve(x);
    return y.squaredNorm();
  }

  bool is_diagonal() const {
    const auto n = dim();
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i != j && entries_(i, j) != Scalar(0)) return false;
      }
    }
    return true;
  }

 private:
  MatrixType entries_;
  Eigen::LLT<MatrixType> llt_;
};

using SpdMatrixd = SpdMatrix<double>;

template <typename Scalar>
SpdMatrix<Scalar> spd_from_entries(const Matrix<Scalar>& entries) {
  return SpdMatrix<Scalar>(entries);
}

inline SpdMatrixd spd_from_rows(const std::vector<std::vector<double>>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != n) {
      throw Error(ErrorCode::NotSquare, "row " + std::to_string(i) + " has " +
                                            std::to_string(row.size()) + " entries, expected " +
                                            std::to_string(n));
    }
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return SpdMatrixd(m);
}

template <typename Scalar>
SpdMatrix<Scalar> inverse(const SpdMatrix<Scalar>& m) {
  const auto n = m.dim();
  return SpdMatrix<Scalar>(m.solve(Matrix<Scalar>::Identity(n, n)));
}

template <typename Scalar>
Scalar log_det(const SpdMatrix<Scalar>& m) {
  return m.log_det();
}

/// Diagonal of the inverse, computed column-by-column from the factor.
template <typename Scalar>
Vector<Scalar> inverse_diagonal(const SpdMatrix<Scalar>& m) {
  const auto n = m.dim();
  const Matrix<Scalar> linv = m.chol().template triangularView<Eigen::Lower>().solve(
      Matrix<Scalar>::Identity(n, n));
  // (L L^T)^{-1} = L^{-T} L^{-1}; its diagonal is the column norms of L^{-1}.
  return linv.colwise().squaredNorm().transpose();
}

/// C_ij = A_ij / sqrt(A_ii A_jj)
template <typename Scalar>
Matrix<Scalar> normalize_unit_diagonal(const Matrix<Scalar>& a) {
  const Vector<Scalar> s = a.diagonal().array().sqrt().inverse().matrix();
  return s.asDiagonal() * a * s.asDiagonal();
}

template <typename Scalar>
SpdMatrix<Scalar> correlation_of(const SpdMatrix<Scalar>& m) {
  Matrix<Scalar> c = normalize_unit_diagonal(m.entries());
  c.diagonal().setOnes();
  return SpdMatrix<Scalar>(c);
}

}  // namespace fgvi
