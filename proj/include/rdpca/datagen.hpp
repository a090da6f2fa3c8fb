#pragma once

// Seeded generators for the simulation models, each paired with its exact
// population covariance and top-K eigenspace, plus a delimited-text loader.
//
// Randomness: std::mt19937_64 driven through boost::random distributions,
// whose algorithms are fixed across platforms. Per-stream seeds come from
// mix_seed(), a SplitMix64 chain, so any shard of any replication can be
// regenerated on its own.

#include "rdpca/linalg.hpp"
#include "rdpca/stein.hpp"

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

namespace rdpca {

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// h = splitmix64(master); then h = splitmix64(h ^ part) for each part.
std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts);

enum class ModelKind { SpikedT, SpikedLaplace, Pareto, GaussianOutlier, SingleIndex };
enum class Link { Square, QuarticHalf };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);
std::string to_string(Link link);
Link parse_link(const std::string& name);

struct ModelSpec {
  ModelKind kind = ModelKind::SpikedT;
  Index d = 100;
  /// Leading spike; the spiked models use diag(lambda, lambda/2, lambda/4, 1, ..., 1).
  double lambda = 50.0;
  /// Degrees of freedom of the t model, or of the noise in the single-index model.
  double nu = 5.0;
  /// Pareto shape.
  double shape_k = 4.1;
  /// Outlier multiplier.
  double c = 2.0;
  /// Outlier rows per shard.
  Index outliers = 100;
  Link link = Link::Square;
  /// Dimension of the target eigenspace.
  Index k = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruth {
  SymMatrix population_cov;
  EigBasis v_k;
  /// lambda_K - lambda_{K+1} of population_cov.
  double eigengap;
};

struct Generated {
  Matrix samples;
  GroundTruth truth;
};

/// diag(lambda, lambda/2, lambda/4, 1, ..., 1) truncated to d entries.
Vector spiked_diagonal(Index d, double lambda);

/// Exact population covariance of the model (for SingleIndex: C beta beta^T
/// is data dependent, see stein_constant()).
GroundTruth ground_truth(const ModelSpec& spec);

/// X = Z sqrt(nu / W), Z ~ N(0, diag(spikes)), W ~ chi^2(nu).
Generated gen_spiked_t(const ModelSpec& spec, Index n);

/// Independent Laplace coordinates La(0, sqrt(spike_j)); covariance 2 diag(spikes).
Generated gen_spiked_laplace(const ModelSpec& spec, Index n);

/// Independent coordinates s_j (U^(-1/k) - k/(k-1)), with s_j chosen so the
/// variance equals spike_j.
Generated gen_pareto(const ModelSpec& spec, Index n);

/// Pareto scale giving the centered variance `variance` at shape k.
double pareto_scale_for_variance(double variance, double shape_k);

/// Dispatches to the generator for spec.kind (the three i.i.d. spiked models).
Generated gen_model(const ModelSpec& spec, Index n);

struct OutlierShards {
  std::vector<Matrix> shards;
  /// Row indices scaled by c, per shard, ascending.
  std::vector<std::vector<Index>> outlier_rows;
  GroundTruth truth;
};

/// m shards of N(0, diag(5, 4, 3, 2, 1, ..., 1)) draws; in each shard
/// spec.outliers rows chosen without replacement are multiplied by spec.c.
OutlierShards gen_gaussian_outlier(const ModelSpec& spec, Index n_per_shard, Index m);

/// Unit vector beta / |beta| with beta ~ N(0, I_d).
Vector draw_beta_star(Index d, std::uint64_t seed);

/// C = 2 E[f''(Z)], Z ~ N(0, 1): 4 for x^2, 12 for x^4 / 2.
double stein_constant(Link link);

struct SingleIndexSample {
  SteinData data;
  Vector beta_star;
};

/// y = f(<beta*, x>) + eps with x ~ N(0, I_d), eps ~ t(nu).
SingleIndexSample gen_single_index(const ModelSpec& spec, Index n, const Vector& beta_star);
/// As above with beta* drawn from mix_seed(spec.seed, {0xbe7a}).
SingleIndexSample gen_single_index(const ModelSpec& spec, Index n);

/// n x d matrix of i.i.d. Student-t(nu) coordinates.
Matrix gen_independent_t(Index d, double nu, Index n, std::uint64_t seed);

/// Subtracts each column's mean in place.
void center_columns(Matrix& samples);

struct LoadOptions {
  /// ',' or ' ' (any run of whitespace); 0 picks ',' when the first data line has one.
  char delimiter = 0;
  /// Keep the first max_cols columns; 0 keeps all.
  Index max_cols = 0;
  bool center = false;
};

struct LoadResult {
  Matrix samples;
  /// 1-based line numbers of rows dropped because a field failed to parse.
  std::vector<std::size_t> rejected_lines;
  bool header_skipped = false;
};

/// Numeric delimited text. A non-numeric first line is treated as a header.
/// Throws std::runtime_error for unreadable files, ragged rows and files
/// without usable rows.
LoadResult load_delimited(const std::filesystem::path& path, const LoadOptions& opts = {});

}  // namespace rdpca
