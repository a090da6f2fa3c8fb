#include "rdpca/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace rdpca {

namespace detail {

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) {
    throw InvalidInput(std::string(what) + ": non-finite entries");
  }
}

}  // namespace detail

SymMatrix::SymMatrix(Matrix a) : m_(std::move(a)) {
  if (m_.rows() < 1 || m_.rows() != m_.cols()) {
    throw InvalidInput("SymMatrix: expected a non-empty square matrix, got " +
                       std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()));
  }
  const Index d = m_.rows();
  for (Index j = 0; j < d; ++j) {
    for (Index i = j + 1; i < d; ++i) {
      const double avg = 0.5 * (m_(i, j) + m_(j, i));
      m_(i, j) = avg;
      m_(j, i) = avg;
    }
  }
}

SymMatrix SymMatrix::identity(Index d) { return SymMatrix(Matrix::Identity(d, d)); }

SymMatrix SymMatrix::diagonal(const Vector& diag) {
  return SymMatrix(Matrix(diag.asDiagonal()));
}

EigBasis::EigBasis(Matrix columns) : cols_(std::move(columns)) {
  if (cols_.rows() < 1 || cols_.cols() < 1 || cols_.cols() > cols_.rows()) {
    throw InvalidInput("EigBasis: need 1 <= K <= d, got d=" + std::to_string(cols_.rows()) +
                       " K=" + std::to_string(cols_.cols()));
  }
  detail::require_finite(cols_, "EigBasis");
  const Matrix gram = cols_.transpose() * cols_;
  const double dev = (gram - Matrix::Identity(cols_.cols(), cols_.cols())).cwiseAbs().maxCoeff();
  if (dev > 1e-10) {
    throw InvalidInput("EigBasis: columns are not orthonormal (max deviation " +
                       std::to_string(dev) + ")");
  }
}

namespace {

void fix_signs(Matrix& vectors) {
  for (Index j = 0; j < vectors.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < vectors.rows(); ++i) {
      const double mag = std::abs(vectors(i, j));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    if (vectors(arg, j) < 0.0) vectors.col(j) = -vectors.col(j);
  }
}

}  // namespace

EigDecomp eig_sym(const SymMatrix& a) {
  detail::require_finite(a.matrix(), "eig_sym");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eig_sym: eigensolver did not converge");
  }
  // Eigen returns ascending order; reverse to descending.
  EigDecomp out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  fix_signs(out.vectors);
  return out;
}

Vector eigenvalues_sym(const SymMatrix& a) {
  detail::require_finite(a.matrix(), "eigenvalues_sym");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalues_sym: eigensolver did not converge");
  }
  return solver.eigenvalues().reverse();
}

EigBasis top_k(const EigDecomp& dec, Index k) {
  const Index d = dec.vectors.rows();
  if (k < 1 || k > d) {
    throw InvalidInput("top_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(d) + "]");
  }
  return EigBasis(dec.vectors.leftCols(k), EigBasis::Trusted{});
}

double spectral_norm(const SymMatrix& a) {
  const Vector v = eigenvalues_sym(a);
  return std::max(std::abs(v[0]), std::abs(v[v.size() - 1]));
}

double frobenius_norm(const SymMatrix& a) { return a.matrix().norm(); }

double max_norm(const SymMatrix& a) { return a.matrix().cwiseAbs().maxCoeff(); }

double subspace_dist(const EigBasis& u, const EigBasis& v) {
  if (u.dim() != v.dim() || u.k() != v.k()) {
    throw InvalidInput("subspace_dist: shape mismatch (" + std::to_string(u.dim()) + "x" +
                       std::to_string(u.k()) + " vs " + std::to_string(v.dim()) + "x" +
                       std::to_string(v.k()) + ")");
  }
  const Matrix cross = u.columns().transpose() * v.columns();
  const Matrix residual = v.columns() - u.columns() * cross;
  return std::sqrt(2.0) * residual.norm();
}

}  // namespace rdpca
