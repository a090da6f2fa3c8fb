#pragma once

// Tail-robust covariance estimators for mean-zero samples:
//   - sample second-moment matrix (1/n) sum x x^T
//   - shrinkage:   (1/(n theta)) sum psi_alpha(theta |x|^2) x x^T / |x|^2
//   - truncation:  (1/n) sum min(|x|^2, tau) x x^T / |x|^2
//   - element-wise truncation with per-entry thresholds tau_{k,s}
// together with data-driven selection of theta and tau.
//
// Samples are n x d matrices with one observation per row. They are used
// uncentered; see center_columns() in datagen.hpp for the optional centering.

#include "rdpca/linalg.hpp"

#include <optional>
#include <string>

namespace rdpca {

using Samples = Matrix;

enum class EstimatorKind { Sample, Shrinkage, Truncation, ElementwiseTruncation };

std::string to_string(EstimatorKind kind);
/// Accepts "sample", "shrinkage", "truncation", "elementwise".
EstimatorKind parse_estimator_kind(const std::string& name);

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::Sample;
  double alpha = 2.0;
  /// Shrinkage only; empty means tune_theta on the data.
  std::optional<double> theta;
  /// Truncation only; empty means tune_tau_adaptive on the data.
  std::optional<double> tau;
  /// ElementwiseTruncation only.
  double delta = 0.1;
  /// Multiplier in theta = scale / (v_hat sqrt(n)).
  double theta_scale = 1.0;
  /// Use |x| instead of |x|^2 inside the moment estimate v_hat (comparison
  /// knob; the squared form is the default).
  bool unsquared_moment = false;

  /// Throws InvalidInput when a parameter is outside its domain.
  void validate() const;
};

/// max((alpha-1)/alpha, sqrt((2-alpha)/alpha)); 0.5 at alpha = 2.
double c_alpha(double alpha);

struct MomentStats {
  double v_hat = 0.0;
  double c_alpha = 0.0;
};

/// v_hat = ||(1/n) sum |x_i|^(2(alpha-1)) x_i x_i^T||_2^(1/alpha), which for
/// alpha = 2 is sqrt(||(1/n) sum |x_i|^2 x_i x_i^T||_2).
MomentStats moment_stats(const Samples& samples, double alpha = 2.0, bool unsquared = false);

/// psi_alpha(x) = log(1 + x + c|x|^alpha) for x >= 0, -log(1 - x + c|x|^alpha)
/// for x < 0. Odd, nondecreasing, and meets the upper influence-function
/// bound with equality on x >= 0.
double psi_alpha(double x, double alpha);

/// Clamp of x to [-tau, tau]. tau may be +infinity.
double psi_tau(double x, double tau);

SymMatrix sample_cov(const Samples& samples);

/// Requires spec.theta to be set.
SymMatrix shrinkage_cov(const Samples& samples, const EstimatorSpec& spec);

/// Requires spec.tau to be set.
SymMatrix truncation_cov(const Samples& samples, const EstimatorSpec& spec);

/// Entry (k, s) is (1/n) sum_i psi_{tau_ks}(x_ik x_is) with
/// tau_ks = (n m_ks / (2 log d - log delta))^(1/alpha) and m_ks the empirical
/// mean of |x_ik x_is|^alpha.
SymMatrix elementwise_trunc_cov(const Samples& samples, double delta, double alpha);

/// Empirical m_ks = (1/n) sum_i |x_ik x_is|^alpha, symmetric d x d.
Matrix abs_product_moments(const Samples& samples, double alpha);

/// Thresholds tau_ks used by elementwise_trunc_cov.
Matrix elementwise_thresholds(const Samples& samples, double delta, double alpha);

/// theta = scale / (v_hat sqrt(n)). Throws DegenerateMoment on all-zero data.
double tune_theta(const Samples& samples, double alpha = 2.0, double scale = 1.0,
                  bool unsquared = false);

class DegenerateMoment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TauFit {
  double tau = 0.0;
  /// False when the equation has no root inside the search bracket; tau is
  /// then the bracket end closest to the root.
  bool root_found = false;
  int iterations = 0;
  /// |LHS(tau) - RHS| / RHS.
  double residual = 0.0;
  double rhs = 0.0;
};

/// Solves ||(1/tau^2) sum (|x_i|^2 ^ tau)^2 x_i x_i^T / |x_i|^2||_2 = log(2d) + log(n)
/// over tau in [min_i |x_i|^2 * 1e-6, max_i |x_i|^2 * 1e6].
/// Requires n >= 2 and at least one non-zero sample.
TauFit tune_tau_adaptive(const Samples& samples);

struct Estimate {
  SymMatrix cov;
  /// Spec with theta / tau filled in.
  EstimatorSpec resolved;
  /// Present when tau was tuned.
  std::optional<TauFit> tau_fit;
};

/// Runs the estimator named by spec, tuning theta / tau when they are unset.
Estimate estimate(const Samples& samples, const EstimatorSpec& spec);

namespace detail {

/// Shared root finder for the adaptive truncation level. Sample i contributes
/// (min(stat_i, tau)^2 / tau^2) * x_i x_i^T / |x_i|^2; rows of x that are zero
/// but carry a positive stat contribute (min(stat_i, tau)^2 / tau^2) * I.
TauFit solve_adaptive_tau(const Matrix& x, const Vector& stat, double rhs);

void require_samples(const Samples& samples, const char* what);

}  // namespace detail

}  // namespace rdpca
