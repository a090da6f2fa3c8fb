// Root finding for the adaptive truncation level.
//
// With t = 1/tau^2 and samples sorted by their statistic s_i, the left-hand
// side between two consecutive statistics is
//   lambda_max(t * G_below + H_above) + t * iso_below + iso_above,
// where G_below = sum_{s_i <= tau} s_i^2 / |x_i|^2 x_i x_i^T and
// H_above = sum_{s_i > tau} x_i x_i^T / |x_i|^2. The function is nonincreasing
// in tau, so the root is located by a galloping/bisection search over the
// sorted statistics followed by Illinois regula falsi inside one segment,
// where the function is convex and increasing in t.

#include "rdpca/estimators.hpp"
#include "rdpca/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace rdpca::detail {

namespace {

constexpr double kBracketFactor = 1e6;
constexpr double kRelTol = 1e-6;
constexpr int kMaxEvaluations = 200;

double lambda_max(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()[m.rows() - 1];
}

Matrix gram(const Matrix& rows, Index first, Index count, const double* w) {
  const Index d = rows.cols();
  Matrix out(d, d);
  if (count == 0) {
    out.setZero();
    return out;
  }
  kernels::active().weighted_gram(rows.data() + first, static_cast<std::size_t>(count),
                                  static_cast<std::size_t>(d),
                                  static_cast<std::size_t>(rows.outerStride()), w, out.data());
  return out;
}

class Problem {
 public:
  Problem(const Matrix& x, const Vector& stat, double rhs) : rhs_(rhs), d_(x.cols()) {
    Vector q(x.rows());
    kernels::active().row_sq_norms(x.data(), static_cast<std::size_t>(x.rows()),
                                   static_cast<std::size_t>(x.cols()),
                                   static_cast<std::size_t>(x.outerStride()), q.data());
    std::vector<Index> dir;
    for (Index i = 0; i < x.rows(); ++i) {
      if (!(stat[i] > 0.0)) continue;
      if (q[i] > 0.0) {
        dir.push_back(i);
      } else {
        iso_.push_back(stat[i]);
      }
      all_.push_back(stat[i]);
    }
    if (all_.empty()) throw DegenerateMoment("adaptive tau: every statistic is zero");
    std::stable_sort(dir.begin(), dir.end(), [&](Index a, Index b) { return stat[a] < stat[b]; });
    std::sort(iso_.begin(), iso_.end());
    std::sort(all_.begin(), all_.end());

    const Index p = static_cast<Index>(dir.size());
    rows_.resize(p, d_);
    s_.resize(p);
    g_.resize(p);
    h_.resize(p);
    for (Index r = 0; r < p; ++r) {
      const Index i = dir[static_cast<std::size_t>(r)];
      rows_.row(r) = x.row(i);
      s_[r] = stat[i];
      g_[r] = stat[i] * stat[i] / q[i];
      h_[r] = 1.0 / q[i];
    }
    iso_sq_prefix_.resize(iso_.size() + 1, 0.0);
    for (std::size_t k = 0; k < iso_.size(); ++k) {
      iso_sq_prefix_[k + 1] = iso_sq_prefix_[k] + iso_[k] * iso_[k];
    }
    g_all_ = gram(rows_, 0, p, g_.data());
    h_all_ = gram(rows_, 0, p, h_.data());
  }

  double rhs() const { return rhs_; }
  const std::vector<double>& breakpoints() const { return all_; }

  // Number of directional samples with s <= tau.
  Index below_count(double tau) const {
    return static_cast<Index>(std::upper_bound(s_.data(), s_.data() + s_.size(), tau) - s_.data());
  }

  double iso_shift(double tau) const {
    const std::size_t b =
        static_cast<std::size_t>(std::upper_bound(iso_.begin(), iso_.end(), tau) - iso_.begin());
    return iso_sq_prefix_[b] / (tau * tau) + static_cast<double>(iso_.size() - b);
  }

  double lhs(double tau) {
    ++evaluations_;
    const Index p = s_.size();
    const Index a = below_count(tau);
    const double t = 1.0 / (tau * tau);
    const double below_tr = [&] {
      double acc = 0.0;
      for (Index r = 0; r < a; ++r) acc += s_[r] * s_[r];
      return acc * t;
    }();
    const double trace = below_tr + static_cast<double>(p - a);
    double above_cancel = 0.0;
    for (Index r = a; r < p; ++r) above_cancel += s_[r] * s_[r];
    above_cancel *= t;

    Matrix m;
    Vector w;
    const bool via_g = above_cancel <= 1e4 * trace;
    const bool via_h = static_cast<double>(a) <= 1e4 * trace;
    if (via_g && (p - a) <= std::min(a, p / 2)) {
      w.resize(p - a);
      for (Index r = a; r < p; ++r) w[r - a] = h_[r] - g_[r] * t;
      m = g_all_ * t + gram(rows_, a, p - a, w.data());
    } else if (via_h && a <= p / 2) {
      w.resize(a);
      for (Index r = 0; r < a; ++r) w[r] = g_[r] * t - h_[r];
      m = h_all_ + gram(rows_, 0, a, w.data());
    } else {
      w.resize(p);
      for (Index r = 0; r < p; ++r) w[r] = r < a ? g_[r] * t : h_[r];
      m = gram(rows_, 0, p, w.data());
    }
    const double top = p > 0 ? lambda_max(m) : 0.0;
    return top + iso_shift(tau);
  }

  // Closed form above the largest statistic: (lambda_max(G_all) + sum iso s^2) / tau^2.
  double top_constant() const {
    const double top = s_.size() > 0 ? lambda_max(g_all_) : 0.0;
    return top + iso_sq_prefix_.back();
  }

  // Segment (t_lo, t_hi) between two consecutive distinct statistics: solve in
  // t = 1/tau^2 with the below/above split frozen.
  TauFit solve_segment(double t_lo, double f_lo, double t_hi, double f_hi) {
    const Index p = s_.size();
    const Index a = below_count(t_lo);
    const Matrix gb = gram(rows_, 0, a, g_.data());
    const Matrix ha = gram(rows_, a, p - a, h_.data() + a);
    const std::size_t ib_count =
        static_cast<std::size_t>(std::upper_bound(iso_.begin(), iso_.end(), t_lo) - iso_.begin());
    const double ib = iso_sq_prefix_[ib_count];
    const double ia = static_cast<double>(iso_.size() - ib_count);
    auto g = [&](double t) {
      ++evaluations_;
      const double top = p > 0 ? lambda_max(gb * t + ha) : 0.0;
      return top + ib * t + ia - rhs_;
    };

    double ta = 1.0 / (t_hi * t_hi);
    double fa = f_hi - rhs_;
    double tb = 1.0 / (t_lo * t_lo);
    double fb = f_lo - rhs_;
    double best_t = tb;
    double best_f = fb;
    int side = 0;
    while (evaluations_ < kMaxEvaluations) {
      double tc = tb - fb * (tb - ta) / (fb - fa);
      if (!(tc > ta && tc < tb)) tc = 0.5 * (ta + tb);
      const double fc = g(tc);
      if (std::abs(fc) < std::abs(best_f)) {
        best_t = tc;
        best_f = fc;
      }
      if (std::abs(fc) <= kRelTol * rhs_) break;
      if (fc > 0.0) {
        tb = tc;
        fb = fc;
        if (side == 1) fa *= 0.5;
        side = 1;
      } else {
        ta = tc;
        fa = fc;
        if (side == -1) fb *= 0.5;
        side = -1;
      }
    }
    return TauFit{1.0 / std::sqrt(best_t), true, evaluations_, std::abs(best_f) / rhs_, rhs_};
  }

  int evaluations() const { return evaluations_; }

 private:
  double rhs_;
  Index d_;
  Matrix rows_;  // directional samples sorted by statistic
  Vector s_, g_, h_;
  std::vector<double> iso_;
  std::vector<double> all_;
  std::vector<double> iso_sq_prefix_;
  Matrix g_all_, h_all_;
  int evaluations_ = 0;
};

}  // namespace

TauFit solve_adaptive_tau(const Matrix& x, const Vector& stat, double rhs) {
  if (stat.size() != x.rows()) throw InvalidInput("adaptive tau: statistic length mismatch");
  if (!(rhs > 0.0)) throw InvalidInput("adaptive tau: right-hand side must be positive");
  Problem prob(x, stat, rhs);

  // Distinct breakpoints in increasing order.
  std::vector<double> bp = prob.breakpoints();
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  const std::size_t p = bp.size();

  // Below the smallest statistic every sample is clamped and the LHS is flat.
  const double f_first = prob.lhs(bp.front());
  if (f_first < rhs) {
    return TauFit{bp.front() / kBracketFactor, false, prob.evaluations(), (rhs - f_first) / rhs,
                  rhs};
  }
  const double f_last = p > 1 ? prob.lhs(bp.back()) : f_first;
  if (f_last >= rhs) {
    const double tau = std::sqrt(prob.top_constant() / rhs);
    const double hi = bp.back() * kBracketFactor;
    if (tau > hi) {
      const double f_hi = prob.top_constant() / (hi * hi);
      return TauFit{hi, false, prob.evaluations(), (f_hi - rhs) / rhs, rhs};
    }
    const double f = prob.lhs(tau);
    return TauFit{tau, true, prob.evaluations(), std::abs(f - rhs) / rhs, rhs};
  }

  // f(bp[lo]) >= rhs > f(bp[hi]); gallop down from the top, then bisect.
  std::size_t lo = 0;
  std::size_t hi = p - 1;
  double f_lo = f_first;
  double f_hi = f_last;
  for (std::size_t step = 1; step < hi - lo;) {
    const std::size_t idx = (p - 1) - step;
    if (idx <= lo) break;
    const double f = prob.lhs(bp[idx]);
    if (f >= rhs) {
      lo = idx;
      f_lo = f;
      break;
    }
    hi = idx;
    f_hi = f;
    step *= 2;
  }
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const double f = prob.lhs(bp[mid]);
    if (f >= rhs) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
      f_hi = f;
    }
  }
  if (std::abs(f_lo - rhs) <= kRelTol * rhs) {
    return TauFit{bp[lo], true, prob.evaluations(), std::abs(f_lo - rhs) / rhs, rhs};
  }
  return prob.solve_segment(bp[lo], f_lo, bp[hi], f_hi);
}

}  // namespace rdpca::detail
