#include "rdpca/estimators.hpp"

#include "rdpca/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace rdpca {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Sample: return "sample";
    case EstimatorKind::Shrinkage: return "shrinkage";
    case EstimatorKind::Truncation: return "truncation";
    case EstimatorKind::ElementwiseTruncation: return "elementwise";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(const std::string& name) {
  if (name == "sample") return EstimatorKind::Sample;
  if (name == "shrinkage") return EstimatorKind::Shrinkage;
  if (name == "truncation") return EstimatorKind::Truncation;
  if (name == "elementwise") return EstimatorKind::ElementwiseTruncation;
  throw InvalidInput("unknown estimator kind '" + name + "'");
}

void EstimatorSpec::validate() const {
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    throw InvalidInput("estimator: alpha must lie in (1, 2], got " + std::to_string(alpha));
  }
  if (theta && !(*theta > 0.0)) throw InvalidInput("estimator: theta must be positive");
  if (tau && !(*tau > 0.0)) throw InvalidInput("estimator: tau must be positive");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidInput("estimator: delta must lie in (0, 1), got " + std::to_string(delta));
  }
  if (!(theta_scale > 0.0)) throw InvalidInput("estimator: theta_scale must be positive");
}

namespace detail {

void require_samples(const Samples& samples, const char* what) {
  if (samples.rows() < 1 || samples.cols() < 1) {
    throw InvalidInput(std::string(what) + ": empty sample matrix");
  }
  require_finite(samples, what);
}

}  // namespace detail

namespace {

Vector row_sq_norms(const Samples& x) {
  Vector out(x.rows());
  kernels::active().row_sq_norms(x.data(), static_cast<std::size_t>(x.rows()),
                                 static_cast<std::size_t>(x.cols()),
                                 static_cast<std::size_t>(x.outerStride()), out.data());
  return out;
}

// (sum_k w[k] x_k x_k^T) as a SymMatrix.
SymMatrix weighted_gram(const Samples& x, const Vector* w) {
  const Index d = x.cols();
  Matrix out(d, d);
  kernels::active().weighted_gram(x.data(), static_cast<std::size_t>(x.rows()),
                                  static_cast<std::size_t>(d),
                                  static_cast<std::size_t>(x.outerStride()),
                                  w != nullptr ? w->data() : nullptr, out.data());
  return SymMatrix(std::move(out));
}

double abs_pow(double v, double alpha) {
  const double a = std::abs(v);
  if (alpha == 2.0) return a * a;
  if (alpha == 1.5) return a * std::sqrt(a);
  return std::pow(a, alpha);
}

}  // namespace

double c_alpha(double alpha) {
  return std::max((alpha - 1.0) / alpha, std::sqrt((2.0 - alpha) / alpha));
}

double psi_alpha(double x, double alpha) {
  const double c = c_alpha(alpha);
  const double ax = std::abs(x);
  const double g = std::log1p(ax + c * abs_pow(ax, alpha));
  return x >= 0.0 ? g : -g;
}

double psi_tau(double x, double tau) { return std::clamp(x, -tau, tau); }

SymMatrix sample_cov(const Samples& samples) {
  detail::require_samples(samples, "sample_cov");
  const Vector w = Vector::Constant(samples.rows(), 1.0 / static_cast<double>(samples.rows()));
  return weighted_gram(samples, &w);
}

SymMatrix shrinkage_cov(const Samples& samples, const EstimatorSpec& spec) {
  detail::require_samples(samples, "shrinkage_cov");
  spec.validate();
  if (!spec.theta) throw InvalidInput("shrinkage_cov: theta is not resolved");
  const double theta = *spec.theta;
  const double inv_n = 1.0 / static_cast<double>(samples.rows());
  const Vector s = row_sq_norms(samples);
  Vector w(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    const double z = theta * s[i];
    w[i] = z > 0.0 ? psi_alpha(z, spec.alpha) / z * inv_n : 0.0;
  }
  return weighted_gram(samples, &w);
}

SymMatrix truncation_cov(const Samples& samples, const EstimatorSpec& spec) {
  detail::require_samples(samples, "truncation_cov");
  spec.validate();
  if (!spec.tau) throw InvalidInput("truncation_cov: tau is not resolved");
  const double inv_n = 1.0 / static_cast<double>(samples.rows());
  const Vector s = row_sq_norms(samples);
  Vector w(s.size());
  kernels::active().truncation_weights(s.data(), static_cast<std::size_t>(s.size()), *spec.tau,
                                       w.data());
  w *= inv_n;
  return weighted_gram(samples, &w);
}

Matrix abs_product_moments(const Samples& samples, double alpha) {
  detail::require_samples(samples, "abs_product_moments");
  const Index n = samples.rows();
  const Index d = samples.cols();
  Matrix m(d, d);
  for (Index k = 0; k < d; ++k) {
    for (Index s = k; s < d; ++s) {
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) acc += abs_pow(samples(i, k) * samples(i, s), alpha);
      m(k, s) = acc / static_cast<double>(n);
      m(s, k) = m(k, s);
    }
  }
  return m;
}

Matrix elementwise_thresholds(const Samples& samples, double delta, double alpha) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidInput("elementwise_trunc_cov: delta must lie in (0, 1)");
  }
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    throw InvalidInput("elementwise_trunc_cov: alpha must lie in (1, 2]");
  }
  if (samples.rows() < 2) throw InvalidInput("elementwise_trunc_cov: need n >= 2");
  const Matrix m = abs_product_moments(samples, alpha);
  const double n = static_cast<double>(samples.rows());
  const double denom = 2.0 * std::log(static_cast<double>(samples.cols())) - std::log(delta);
  return (n * m / denom).array().pow(1.0 / alpha).matrix();
}

SymMatrix elementwise_trunc_cov(const Samples& samples, double delta, double alpha) {
  const Matrix tau = elementwise_thresholds(samples, delta, alpha);
  const Index n = samples.rows();
  const Index d = samples.cols();
  const auto& kt = kernels::active();
  Matrix out(d, d);
  for (Index k = 0; k < d; ++k) {
    for (Index s = k; s < d; ++s) {
      const double sum = kt.clamped_product_sum(samples.col(k).data(), samples.col(s).data(),
                                                static_cast<std::size_t>(n), tau(k, s));
      out(k, s) = sum / static_cast<double>(n);
      out(s, k) = out(k, s);
    }
  }
  return SymMatrix(std::move(out));
}

MomentStats moment_stats(const Samples& samples, double alpha, bool unsquared) {
  detail::require_samples(samples, "moment_stats");
  const Vector s = row_sq_norms(samples);
  const double inv_n = 1.0 / static_cast<double>(samples.rows());
  Vector w(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    // |x x^T|^alpha = |x|^(2(alpha-1)) x x^T.
    const double base = unsquared ? std::sqrt(s[i]) : s[i];
    w[i] = (alpha == 2.0 ? base : std::pow(base, alpha - 1.0)) * inv_n;
  }
  const double top = spectral_norm(weighted_gram(samples, &w));
  return MomentStats{std::pow(top, 1.0 / alpha), c_alpha(alpha)};
}

double tune_theta(const Samples& samples, double alpha, double scale, bool unsquared) {
  if (!(scale > 0.0)) throw InvalidInput("tune_theta: scale must be positive");
  const MomentStats ms = moment_stats(samples, alpha, unsquared);
  if (!(ms.v_hat > 0.0)) throw DegenerateMoment("tune_theta: all samples are zero");
  return scale / (ms.v_hat * std::sqrt(static_cast<double>(samples.rows())));
}

TauFit tune_tau_adaptive(const Samples& samples) {
  detail::require_samples(samples, "tune_tau_adaptive");
  if (samples.rows() < 2) throw InvalidInput("tune_tau_adaptive: need n >= 2");
  const Vector s = row_sq_norms(samples);
  if (!(s.maxCoeff() > 0.0)) throw DegenerateMoment("tune_tau_adaptive: all samples are zero");
  const double rhs = std::log(2.0 * static_cast<double>(samples.cols())) +
                     std::log(static_cast<double>(samples.rows()));
  return detail::solve_adaptive_tau(samples, s, rhs);
}

Estimate estimate(const Samples& samples, const EstimatorSpec& spec) {
  spec.validate();
  EstimatorSpec resolved = spec;
  switch (spec.kind) {
    case EstimatorKind::Sample:
      return Estimate{sample_cov(samples), resolved, std::nullopt};
    case EstimatorKind::Shrinkage:
      if (!resolved.theta) {
        resolved.theta = tune_theta(samples, spec.alpha, spec.theta_scale, spec.unsquared_moment);
      }
      return Estimate{shrinkage_cov(samples, resolved), resolved, std::nullopt};
    case EstimatorKind::Truncation: {
      std::optional<TauFit> fit;
      if (!resolved.tau) {
        fit = tune_tau_adaptive(samples);
        resolved.tau = fit->tau;
      }
      return Estimate{truncation_cov(samples, resolved), resolved, fit};
    }
    case EstimatorKind::ElementwiseTruncation:
      return Estimate{elementwise_trunc_cov(samples, spec.delta, spec.alpha), resolved,
                      std::nullopt};
  }
  throw InvalidInput("estimate: unknown estimator kind");
}

}  // namespace rdpca
