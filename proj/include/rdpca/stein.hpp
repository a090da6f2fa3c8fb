#pragma once

// Direction estimation in the single-index model y = f(<beta, x>) + eps with
// Gaussian x, through the second-order Stein identity
//   E[y (x x^T - I)] = C beta beta^T,   C = 2 E[f''(<x, beta>)].
// The robust estimate averages the spectrally truncated matrices
// psi_tau(y_i (x_i x_i^T - I)).

#include "rdpca/estimators.hpp"
#include "rdpca/linalg.hpp"

#include <optional>

namespace rdpca {

/// n observations: responses y (length n) and covariates x (n x d).
struct SteinData {
  Vector y;
  Matrix x;
};

struct SteinEstimate {
  SymMatrix sigma;
  double tau = 0.0;
  std::optional<TauFit> tau_fit;
};

/// (1/n) sum_i psi_tau(y_i (x_i x_i^T - I)), evaluated from the closed-form
/// spectrum of each term: eigenvalue y_i (|x_i|^2 - 1) along x_i / |x_i| and
/// -y_i on the orthogonal complement. An empty tau is tuned with
/// tune_tau_stein; tau = +infinity gives the plain average.
SteinEstimate stein_trunc_estimator(const SteinData& data, std::optional<double> tau);

/// Adaptive level for the Stein matrices A_i = y_i (x_i x_i^T - I): solves
///   (1/tau^2) sum_i min(s_i, tau)^2 = log(2d) + log(n),
///   s_i = |A_i|_2 = |y_i| max(||x_i|^2 - 1|, 1),
/// the truncation equation with the scalar variance proxy sum |A_i|_2^2 in
/// place of |sum A_i^2|_2.
TauFit tune_tau_stein(const SteinData& data);

/// Unit eigenvector of the largest |eigenvalue|.
Vector beta_from_stein(const SymMatrix& sigma_hat);

/// min(|b/|b| - beta*|, |b/|b| + beta*|).
double beta_error(const Vector& beta_hat, const Vector& beta_star);

}  // namespace rdpca
