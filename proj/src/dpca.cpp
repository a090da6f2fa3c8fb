#include "rdpca/dpca.hpp"

#include "rdpca/kernels.hpp"
#include "rdpca/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace rdpca {

void Transport::send(int /*server_id*/, const EigBasis& basis) {
  std::lock_guard<std::mutex> lock(mu_);
  ++messages_;
  values_ += static_cast<std::size_t>(basis.dim() * basis.k());
}

std::size_t Transport::messages() const {
  std::lock_guard<std::mutex> lock(mu_);
  return messages_;
}

std::size_t Transport::values_sent() const {
  std::lock_guard<std::mutex> lock(mu_);
  return values_;
}

LocalResult local_step_detailed(const Shard& shard, Index k) {
  Estimate est = estimate(shard.samples, shard.estimator);
  return LocalResult{top_k(eig_sym(est.cov), k), est.tau_fit};
}

EigBasis local_step(const Shard& shard, Index k) { return local_step_detailed(shard, k).basis; }

DpcaResult aggregate(const std::vector<EigBasis>& bases, Index k) {
  if (bases.empty()) throw InvalidInput("aggregate: no bases");
  const Index d = bases.front().dim();
  for (const auto& b : bases) {
    if (b.dim() != d || b.k() != k) {
      throw InvalidInput("aggregate: every basis must be " + std::to_string(d) + "x" +
                         std::to_string(k));
    }
  }
  const Index m = static_cast<Index>(bases.size());
  // Rows of `stacked` are the transmitted eigenvectors; the average projector
  // is their weighted Gram matrix.
  Matrix stacked(m * k, d);
  for (Index l = 0; l < m; ++l) {
    stacked.middleRows(l * k, k) = bases[static_cast<std::size_t>(l)].columns().transpose();
  }
  const Vector w = Vector::Constant(m * k, 1.0 / static_cast<double>(m));
  Matrix avg(d, d);
  kernels::active().weighted_gram(stacked.data(), static_cast<std::size_t>(m * k),
                                  static_cast<std::size_t>(d),
                                  static_cast<std::size_t>(stacked.outerStride()), w.data(),
                                  avg.data());
  const SymMatrix sigma_tilde(std::move(avg));
  const EigDecomp dec = eig_sym(sigma_tilde);

  constexpr double tol = 1e-10;
  const double trace = sigma_tilde.matrix().trace();
  if (std::abs(trace - static_cast<double>(k)) > tol * static_cast<double>(k)) {
    throw std::logic_error("aggregate: averaged projector has trace " + std::to_string(trace));
  }
  if (dec.values[0] > 1.0 + tol || dec.values[d - 1] < -tol) {
    throw std::logic_error("aggregate: averaged projector spectrum leaves [0, 1]");
  }

  const Index keep = std::min<Index>(k + 1, d);
  return DpcaResult{top_k(dec, k), dec.values.head(keep), {}, {}};
}

namespace {

template <class ShardT>
std::vector<std::size_t> server_order(const std::vector<ShardT>& shards) {
  if (shards.empty()) throw InvalidInput("run_dpca: no shards");
  std::vector<std::size_t> order(shards.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return shards[a].server_id < shards[b].server_id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (shards[order[i]].server_id == shards[order[i - 1]].server_id) {
      throw InvalidInput("run_dpca: duplicate server id " +
                         std::to_string(shards[order[i]].server_id));
    }
  }
  return order;
}

}  // namespace

DpcaResult run_dpca(const std::vector<Shard>& shards, Index k, const DpcaOptions& opts) {
  const std::vector<std::size_t> order = server_order(shards);
  const Index d = shards.front().samples.cols();
  for (const auto& s : shards) {
    if (s.samples.cols() != d) throw InvalidInput("run_dpca: shards disagree on dimension");
    if (s.samples.rows() < 1) throw InvalidInput("run_dpca: empty shard");
  }
  if (k < 1 || k > d) throw InvalidInput("run_dpca: k outside [1, d]");

  std::vector<std::optional<LocalResult>> local(shards.size());
  detail::parallel_for(order.size(), opts.jobs, [&](std::size_t pos) {
    local[pos] = local_step_detailed(shards[order[pos]], k);
  });

  std::vector<EigBasis> bases;
  std::vector<std::optional<TauFit>> fits;
  bases.reserve(local.size());
  for (std::size_t pos = 0; pos < local.size(); ++pos) {
    if (opts.transport != nullptr) {
      opts.transport->send(shards[order[pos]].server_id, local[pos]->basis);
    }
    bases.push_back(local[pos]->basis);
    fits.push_back(local[pos]->tau_fit);
  }
  DpcaResult out = aggregate(bases, k);
  out.tau_fits = std::move(fits);
  if (opts.retain_bases) out.per_server_bases = std::move(bases);
  return out;
}

double eigengap_report(const DpcaResult& result) {
  const Index k = result.v_tilde.k();
  const Vector& ev = result.sigma_tilde_eigvals;
  return k < ev.size() ? ev[k - 1] - ev[k] : ev[k - 1];
}

SteinDpcaResult run_stein_dpca(const std::vector<SteinShard>& shards, const DpcaOptions& opts) {
  const std::vector<std::size_t> order = server_order(shards);
  const Index d = shards.front().data.x.cols();
  for (const auto& s : shards) {
    if (s.data.x.cols() != d) throw InvalidInput("run_stein_dpca: shards disagree on dimension");
  }

  std::vector<std::optional<EigBasis>> local(shards.size());
  std::vector<std::optional<TauFit>> fits(shards.size());
  detail::parallel_for(order.size(), opts.jobs, [&](std::size_t pos) {
    const SteinShard& sh = shards[order[pos]];
    SteinEstimate est = stein_trunc_estimator(sh.data, sh.tau);
    Matrix col = beta_from_stein(est.sigma);
    local[pos] = EigBasis(std::move(col));
    fits[pos] = est.tau_fit;
  });

  std::vector<EigBasis> bases;
  bases.reserve(local.size());
  for (std::size_t pos = 0; pos < local.size(); ++pos) {
    if (opts.transport != nullptr) opts.transport->send(shards[order[pos]].server_id, *local[pos]);
    bases.push_back(*local[pos]);
  }
  SteinDpcaResult out{Vector(), aggregate(bases, 1)};
  out.beta_hat = out.dpca.v_tilde.columns().col(0);
  out.dpca.tau_fits = std::move(fits);
  if (opts.retain_bases) out.dpca.per_server_bases = std::move(bases);
  return out;
}

}  // namespace rdpca
