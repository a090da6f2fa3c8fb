#include "rdpca/stein.hpp"

#include "rdpca/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace rdpca {

namespace {

void require_stein(const SteinData& data) {
  if (data.x.rows() < 1 || data.x.cols() < 1) throw InvalidInput("stein: empty covariates");
  if (data.y.size() != data.x.rows()) {
    throw InvalidInput("stein: y has " + std::to_string(data.y.size()) + " entries but x has " +
                       std::to_string(data.x.rows()) + " rows");
  }
  detail::require_finite(data.x, "stein covariates");
  if (!data.y.allFinite()) throw InvalidInput("stein responses: non-finite entries");
}

Vector sq_norms(const Matrix& x) {
  Vector q(x.rows());
  kernels::active().row_sq_norms(x.data(), static_cast<std::size_t>(x.rows()),
                                 static_cast<std::size_t>(x.cols()),
                                 static_cast<std::size_t>(x.outerStride()), q.data());
  return q;
}

}  // namespace

TauFit tune_tau_stein(const SteinData& data) {
  require_stein(data);
  if (data.x.rows() < 2) throw InvalidInput("tune_tau_stein: need n >= 2");
  const Vector q = sq_norms(data.x);
  std::vector<double> s;
  for (Index i = 0; i < q.size(); ++i) {
    const double v = std::abs(data.y[i]) * std::max(std::abs(q[i] - 1.0), 1.0);
    if (v > 0.0) s.push_back(v);
  }
  if (s.empty()) throw DegenerateMoment("tune_tau_stein: all responses are zero");
  std::sort(s.begin(), s.end());
  const double rhs = std::log(2.0 * static_cast<double>(data.x.cols())) +
                     std::log(static_cast<double>(data.x.rows()));
  const std::size_t p = s.size();

  // Below the smallest statistic the left side is the constant p.
  if (static_cast<double>(p) < rhs) {
    return TauFit{s.front() * 1e-6, false, 0, (rhs - static_cast<double>(p)) / rhs, rhs};
  }
  // With the k smallest statistics unclamped: tau^2 = sum_{j<k} s_j^2 / (rhs - (p - k)).
  double below = 0.0;
  for (std::size_t k = 0; k <= p; ++k) {
    if (k > 0) below += s[k - 1] * s[k - 1];
    const double room = rhs - static_cast<double>(p - k);
    if (room <= 0.0 || below <= 0.0) continue;
    const double tau = std::sqrt(below / room);
    const double lo = k > 0 ? s[k - 1] : 0.0;
    const double hi = k < p ? s[k] : std::numeric_limits<double>::infinity();
    if (tau >= lo && tau <= hi) return TauFit{tau, true, static_cast<int>(k + 1), 0.0, rhs};
  }
  // Not reached: the left side is continuous and falls from p to 0.
  return TauFit{s.back(), false, static_cast<int>(p), 1.0, rhs};
}

SteinEstimate stein_trunc_estimator(const SteinData& data, std::optional<double> tau) {
  require_stein(data);
  std::optional<TauFit> fit;
  if (!tau) {
    fit = tune_tau_stein(data);
    tau = fit->tau;
  }
  if (!(*tau > 0.0)) throw InvalidInput("stein_trunc_estimator: tau must be positive");
  const double t = *tau;
  const Index n = data.x.rows();
  const Index d = data.x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  // psi(A_i) = psi(-y_i) I + (psi(a_i) - psi(-y_i)) x_i x_i^T / |x_i|^2.
  const Vector q = sq_norms(data.x);
  Vector w(n);
  double iso = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double off = psi_tau(-data.y[i], t);
    iso += off;
    if (q[i] > 0.0) {
      const double along = psi_tau(data.y[i] * (q[i] - 1.0), t);
      w[i] = (along - off) / q[i] * inv_n;
    } else {
      w[i] = 0.0;
    }
  }
  Matrix out(d, d);
  kernels::active().weighted_gram(data.x.data(), static_cast<std::size_t>(n),
                                  static_cast<std::size_t>(d),
                                  static_cast<std::size_t>(data.x.outerStride()), w.data(),
                                  out.data());
  out.diagonal().array() += iso * inv_n;
  return SteinEstimate{SymMatrix(std::move(out)), t, fit};
}

Vector beta_from_stein(const SymMatrix& sigma_hat) {
  const EigDecomp dec = eig_sym(sigma_hat);
  const Index last = dec.values.size() - 1;
  // Descending order: the largest magnitude sits at one of the two ends.
  const Index pick = std::abs(dec.values[0]) >= std::abs(dec.values[last]) ? 0 : last;
  return dec.vectors.col(pick);
}

double beta_error(const Vector& beta_hat, const Vector& beta_star) {
  if (beta_hat.size() != beta_star.size() || beta_hat.size() == 0) {
    throw InvalidInput("beta_error: dimension mismatch");
  }
  const double norm = beta_hat.norm();
  if (!(norm > 0.0)) throw InvalidInput("beta_error: zero estimate");
  const Vector unit = beta_hat / norm;
  return std::min((unit - beta_star).norm(), (unit + beta_star).norm());
}

}  // namespace rdpca
