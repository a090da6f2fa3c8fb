#pragma once

// Distributed PCA over simulated servers. Each server computes a (robust)
// covariance estimate of its own shard and ships only its top-K eigenvectors;
// the center averages the projectors V V^T and returns the top-K eigenvectors
// of that average.

#include "rdpca/estimators.hpp"
#include "rdpca/linalg.hpp"
#include "rdpca/stein.hpp"

#include <cstddef>
#include <mutex>
#include <optional>
#include <vector>

namespace rdpca {

struct Shard {
  int server_id = 1;
  Samples samples;
  EstimatorSpec estimator;
};

struct LocalResult {
  EigBasis basis;
  /// Tuning outcome when the estimator chose tau from the data.
  std::optional<TauFit> tau_fit;
};

struct DpcaResult {
  EigBasis v_tilde;
  /// Leading min(K + 1, d) eigenvalues of the averaged projector, descending.
  Vector sigma_tilde_eigvals;
  /// Populated only when DpcaOptions::retain_bases is set; ordered by server id.
  std::vector<EigBasis> per_server_bases;
  /// One entry per server, ordered by server id.
  std::vector<std::optional<TauFit>> tau_fits;
};

/// Records what the servers send to the center. Thread-safe.
class Transport {
 public:
  void send(int server_id, const EigBasis& basis);

  std::size_t messages() const;
  /// Number of scalars transmitted (d * K per message).
  std::size_t values_sent() const;
  std::size_t bytes_sent() const { return values_sent() * sizeof(double); }

 private:
  mutable std::mutex mu_;
  std::size_t messages_ = 0;
  std::size_t values_ = 0;
};

struct DpcaOptions {
  /// Worker threads for the local steps.
  int jobs = 1;
  bool retain_bases = false;
  Transport* transport = nullptr;
};

/// Robust covariance of one shard and its top-k eigenvectors.
LocalResult local_step_detailed(const Shard& shard, Index k);
EigBasis local_step(const Shard& shard, Index k);

/// Averages the projectors of the given bases, in the given order, and
/// extracts the top-k eigenvectors. Checks that the average is PSD with
/// trace k and spectrum in [0, 1].
DpcaResult aggregate(const std::vector<EigBasis>& bases, Index k);

/// Full pipeline. Shards are processed and summed in server-id order, so the
/// result does not depend on the order of `shards`.
DpcaResult run_dpca(const std::vector<Shard>& shards, Index k, const DpcaOptions& opts = {});

/// sigma_tilde_eigvals[K-1] - sigma_tilde_eigvals[K]; callers warn below
/// kEigengapWarnThreshold.
double eigengap_report(const DpcaResult& result);
inline constexpr double kEigengapWarnThreshold = 0.05;

struct SteinShard {
  int server_id = 1;
  SteinData data;
  /// Empty: tune per server. +infinity: plain average (non-robust baseline).
  std::optional<double> tau;
};

struct SteinDpcaResult {
  Vector beta_hat;
  DpcaResult dpca;
};

/// Each server estimates its leading Stein direction; the center aggregates
/// the rank-one projectors (K = 1).
SteinDpcaResult run_stein_dpca(const std::vector<SteinShard>& shards, const DpcaOptions& opts = {});

}  // namespace rdpca
