#pragma once

// Dense symmetric linear algebra used throughout the library: symmetric
// matrices, orthonormal bases, eigendecomposition, matrix functions, norms
// and the projector distance between K-dimensional subspaces.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

namespace rdpca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised for malformed arguments: wrong shapes, non-finite data, parameters
/// outside their domain.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense d x d symmetric matrix. Construction symmetrizes the input as
/// (A + A^T) / 2, so entries(i, j) == entries(j, i) holds exactly.
class SymMatrix {
 public:
  explicit SymMatrix(Matrix a);

  static SymMatrix identity(Index d);
  static SymMatrix diagonal(const Vector& diag);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Full eigendecomposition: eigenvalues in descending order, eigenvectors as
/// the columns of an orthogonal matrix. Each eigenvector is signed so that its
/// largest-magnitude entry is positive (first such entry on ties).
struct EigDecomp {
  Vector values;
  Matrix vectors;
};

/// Orthonormal d x K matrix whose columns span a K-dimensional subspace.
class EigBasis {
 public:
  /// Throws InvalidInput unless columns^T columns == I within 1e-10.
  explicit EigBasis(Matrix columns);

  Index dim() const { return cols_.rows(); }
  Index k() const { return cols_.cols(); }
  const Matrix& columns() const { return cols_; }

 private:
  friend EigBasis top_k(const EigDecomp&, Index);
  struct Trusted {};
  EigBasis(Matrix columns, Trusted) : cols_(std::move(columns)) {}

  Matrix cols_;
};

EigDecomp eig_sym(const SymMatrix& a);

/// Eigenvalues only, descending. Cheaper than eig_sym when vectors are unused.
Vector eigenvalues_sym(const SymMatrix& a);

/// First k eigenvector columns. When values[k-1] == values[k] the returned
/// basis is one valid choice, fixed by the solver's ordering for this input.
EigBasis top_k(const EigDecomp& dec, Index k);

/// f(A) = V f(Lambda) V^T.
template <class F>
SymMatrix matrix_fn(const SymMatrix& a, F&& f) {
  const EigDecomp dec = eig_sym(a);
  Vector mapped(dec.values.size());
  for (Index i = 0; i < mapped.size(); ++i) mapped[i] = f(dec.values[i]);
  return SymMatrix(dec.vectors * mapped.asDiagonal() * dec.vectors.transpose());
}

/// Largest absolute eigenvalue.
double spectral_norm(const SymMatrix& a);
double frobenius_norm(const SymMatrix& a);
double max_norm(const SymMatrix& a);

/// rho(U, V) = ||U U^T - V V^T||_F, evaluated without forming d x d
/// projectors as sqrt(2) * ||V - U (U^T V)||_F. The residual form equals
/// sqrt(2 (K - ||U^T V||_F^2)) for orthonormal U, V and stays accurate when
/// the subspaces nearly coincide.
double subspace_dist(const EigBasis& u, const EigBasis& v);

namespace detail {
void require_finite(const Matrix& a, const char* what);
}

}  // namespace rdpca
