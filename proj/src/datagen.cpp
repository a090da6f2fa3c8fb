#include "rdpca/datagen.hpp"

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/laplace_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rdpca {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : parts) h = splitmix64(h ^ p);
  return h;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::SpikedT: return "spiked-t";
    case ModelKind::SpikedLaplace: return "spiked-laplace";
    case ModelKind::Pareto: return "pareto";
    case ModelKind::GaussianOutlier: return "gaussian-outlier";
    case ModelKind::SingleIndex: return "single-index";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "spiked-t" || name == "t") return ModelKind::SpikedT;
  if (name == "spiked-laplace" || name == "laplace") return ModelKind::SpikedLaplace;
  if (name == "pareto") return ModelKind::Pareto;
  if (name == "gaussian-outlier" || name == "outlier") return ModelKind::GaussianOutlier;
  if (name == "single-index") return ModelKind::SingleIndex;
  throw InvalidInput("unknown model '" + name + "'");
}

std::string to_string(Link link) { return link == Link::Square ? "square" : "quartic-half"; }

Link parse_link(const std::string& name) {
  if (name == "square") return Link::Square;
  if (name == "quartic-half") return Link::QuarticHalf;
  throw InvalidInput("unknown link '" + name + "' (expected square or quartic-half)");
}

void ModelSpec::validate() const {
  if (d < 1) throw InvalidInput("model: d must be positive");
  if (k < 1 || k > d) throw InvalidInput("model: k must lie in [1, d]");
  if (!(lambda > 0.0)) throw InvalidInput("model: lambda must be positive");
  const bool uses_nu = kind == ModelKind::SpikedT || kind == ModelKind::SingleIndex;
  if (uses_nu && !(nu > 2.0)) {
    throw InvalidInput("model: nu must exceed 2 for finite variance, got " + std::to_string(nu));
  }
  if (kind == ModelKind::Pareto && !(shape_k > 2.0)) {
    throw InvalidInput("model: Pareto shape must exceed 2, got " + std::to_string(shape_k));
  }
  if (kind == ModelKind::GaussianOutlier && !(c >= 1.0)) {
    throw InvalidInput("model: outlier multiplier c must be >= 1");
  }
  if (outliers < 0) throw InvalidInput("model: outlier count must be non-negative");
}

Vector spiked_diagonal(Index d, double lambda) {
  Vector diag = Vector::Ones(d);
  const double spikes[3] = {lambda, lambda / 2.0, lambda / 4.0};
  for (Index j = 0; j < std::min<Index>(3, d); ++j) diag[j] = spikes[j];
  return diag;
}

namespace {

using Engine = std::mt19937_64;

GroundTruth diagonal_truth(const Vector& diag, Index k) {
  const Index d = diag.size();
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return diag[a] > diag[b]; });
  Matrix v = Matrix::Zero(d, k);
  for (Index j = 0; j < k; ++j) v(order[static_cast<std::size_t>(j)], j) = 1.0;
  const double lk = diag[order[static_cast<std::size_t>(k - 1)]];
  const double lk1 = k < d ? diag[order[static_cast<std::size_t>(k)]] : 0.0;
  if (!(lk - lk1 > 0.0)) {
    throw InvalidInput("model: population covariance has no eigengap at K=" + std::to_string(k));
  }
  return GroundTruth{SymMatrix::diagonal(diag), EigBasis(std::move(v)), lk - lk1};
}

Vector outlier_diagonal(Index d) {
  Vector diag = Vector::Ones(d);
  for (Index j = 0; j < std::min<Index>(4, d); ++j) diag[j] = 5.0 - static_cast<double>(j);
  return diag;
}

}  // namespace

GroundTruth ground_truth(const ModelSpec& spec) {
  spec.validate();
  const Vector spikes = spiked_diagonal(spec.d, spec.lambda);
  switch (spec.kind) {
    case ModelKind::SpikedT: return diagonal_truth(spikes * (spec.nu / (spec.nu - 2.0)), spec.k);
    case ModelKind::SpikedLaplace: return diagonal_truth(2.0 * spikes, spec.k);
    case ModelKind::Pareto: return diagonal_truth(spikes, spec.k);
    case ModelKind::GaussianOutlier: return diagonal_truth(outlier_diagonal(spec.d), spec.k);
    case ModelKind::SingleIndex:
      throw InvalidInput("ground_truth: the single-index truth depends on the drawn beta");
  }
  throw InvalidInput("ground_truth: unknown model");
}

Generated gen_spiked_t(const ModelSpec& spec, Index n) {
  spec.validate();
  Engine eng(spec.seed);
  boost::random::normal_distribution<double> normal;
  boost::random::chi_squared_distribution<double> chi2(spec.nu);
  const Vector sd = spiked_diagonal(spec.d, spec.lambda).cwiseSqrt();
  Matrix x(n, spec.d);
  for (Index i = 0; i < n; ++i) {
    const double scale = std::sqrt(spec.nu / chi2(eng));
    for (Index j = 0; j < spec.d; ++j) x(i, j) = sd[j] * normal(eng) * scale;
  }
  return Generated{std::move(x), ground_truth(spec)};
}

Generated gen_spiked_laplace(const ModelSpec& spec, Index n) {
  spec.validate();
  Engine eng(spec.seed);
  const Vector b = spiked_diagonal(spec.d, spec.lambda).cwiseSqrt();
  std::vector<boost::random::laplace_distribution<double>> coords;
  coords.reserve(static_cast<std::size_t>(spec.d));
  for (Index j = 0; j < spec.d; ++j) coords.emplace_back(0.0, b[j]);
  Matrix x(n, spec.d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < spec.d; ++j) x(i, j) = coords[static_cast<std::size_t>(j)](eng);
  }
  return Generated{std::move(x), ground_truth(spec)};
}

double pareto_scale_for_variance(double variance, double shape_k) {
  // Var = s^2 k / ((k-1)^2 (k-2)).
  return std::sqrt(variance * (shape_k - 1.0) * (shape_k - 1.0) * (shape_k - 2.0) / shape_k);
}

Generated gen_pareto(const ModelSpec& spec, Index n) {
  spec.validate();
  Engine eng(spec.seed);
  boost::random::uniform_01<double> unif;
  const double k = spec.shape_k;
  const Vector spikes = spiked_diagonal(spec.d, spec.lambda);
  Vector scale(spec.d), mean(spec.d);
  for (Index j = 0; j < spec.d; ++j) {
    scale[j] = pareto_scale_for_variance(spikes[j], k);
    mean[j] = scale[j] * k / (k - 1.0);
  }
  Matrix x(n, spec.d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < spec.d; ++j) {
      const double u = 1.0 - unif(eng);  // (0, 1]
      x(i, j) = scale[j] * std::pow(u, -1.0 / k) - mean[j];
    }
  }
  return Generated{std::move(x), ground_truth(spec)};
}

Generated gen_model(const ModelSpec& spec, Index n) {
  switch (spec.kind) {
    case ModelKind::SpikedT: return gen_spiked_t(spec, n);
    case ModelKind::SpikedLaplace: return gen_spiked_laplace(spec, n);
    case ModelKind::Pareto: return gen_pareto(spec, n);
    default: throw InvalidInput("gen_model: " + to_string(spec.kind) + " is not an i.i.d. spiked model");
  }
}

OutlierShards gen_gaussian_outlier(const ModelSpec& spec, Index n_per_shard, Index m) {
  spec.validate();
  if (n_per_shard < spec.outliers) {
    throw InvalidInput("gen_gaussian_outlier: n_per_shard=" + std::to_string(n_per_shard) +
                       " is smaller than the outlier count " + std::to_string(spec.outliers));
  }
  if (m < 1) throw InvalidInput("gen_gaussian_outlier: need m >= 1");
  const Vector sd = outlier_diagonal(spec.d).cwiseSqrt();
  OutlierShards out{{}, {}, ground_truth(spec)};
  out.shards.reserve(static_cast<std::size_t>(m));
  for (Index l = 0; l < m; ++l) {
    Engine eng(mix_seed(spec.seed, {static_cast<std::uint64_t>(l + 1)}));
    boost::random::normal_distribution<double> normal;
    Matrix x(n_per_shard, spec.d);
    for (Index i = 0; i < n_per_shard; ++i) {
      for (Index j = 0; j < spec.d; ++j) x(i, j) = sd[j] * normal(eng);
    }
    // Partial Fisher-Yates: the first `outliers` slots become a uniform draw
    // without replacement.
    std::vector<Index> idx(static_cast<std::size_t>(n_per_shard));
    std::iota(idx.begin(), idx.end(), 0);
    for (Index t = 0; t < spec.outliers; ++t) {
      boost::random::uniform_int_distribution<Index> pick(t, n_per_shard - 1);
      std::swap(idx[static_cast<std::size_t>(t)], idx[static_cast<std::size_t>(pick(eng))]);
    }
    std::vector<Index> rows(idx.begin(), idx.begin() + spec.outliers);
    std::sort(rows.begin(), rows.end());
    for (Index r : rows) x.row(r) *= spec.c;
    out.shards.push_back(std::move(x));
    out.outlier_rows.push_back(std::move(rows));
  }
  return out;
}

Vector draw_beta_star(Index d, std::uint64_t seed) {
  if (d < 1) throw InvalidInput("draw_beta_star: d must be positive");
  Engine eng(seed);
  boost::random::normal_distribution<double> normal;
  Vector b(d);
  do {
    for (Index j = 0; j < d; ++j) b[j] = normal(eng);
  } while (!(b.norm() > 0.0));
  return b / b.norm();
}

double stein_constant(Link link) { return link == Link::Square ? 4.0 : 12.0; }

SingleIndexSample gen_single_index(const ModelSpec& spec, Index n, const Vector& beta_star) {
  spec.validate();
  if (beta_star.size() != spec.d) throw InvalidInput("gen_single_index: beta has wrong length");
  Engine eng(spec.seed);
  boost::random::normal_distribution<double> normal;
  boost::random::student_t_distribution<double> noise(spec.nu);
  SingleIndexSample out{SteinData{Vector(n), Matrix(n, spec.d)}, beta_star};
  for (Index i = 0; i < n; ++i) {
    double z = 0.0;
    for (Index j = 0; j < spec.d; ++j) {
      const double v = normal(eng);
      out.data.x(i, j) = v;
      z += beta_star[j] * v;
    }
    const double z2 = z * z;
    const double f = spec.link == Link::Square ? z2 : 0.5 * z2 * z2;
    out.data.y[i] = f + noise(eng);
  }
  return out;
}

SingleIndexSample gen_single_index(const ModelSpec& spec, Index n) {
  return gen_single_index(spec, n, draw_beta_star(spec.d, mix_seed(spec.seed, {0xbe7a})));
}

Matrix gen_independent_t(Index d, double nu, Index n, std::uint64_t seed) {
  if (!(nu > 0.0)) throw InvalidInput("gen_independent_t: nu must be positive");
  Engine eng(seed);
  boost::random::student_t_distribution<double> t(nu);
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) x(i, j) = t(eng);
  }
  return x;
}

void center_columns(Matrix& samples) {
  if (samples.rows() == 0) return;
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  samples.rowwise() -= mean;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  if (delim == ',') {
    std::size_t start = 0;
    while (true) {
      const std::size_t pos = line.find(',', start);
      std::string_view f = line.substr(start, pos == std::string_view::npos ? pos : pos - start);
      while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
      while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
      out.push_back(f);
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  } else {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      const std::size_t start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i > start) out.push_back(line.substr(start, i - start));
    }
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

LoadResult load_delimited(const std::filesystem::path& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_delimited: cannot read " + path.string());
  if (opts.delimiter != 0 && opts.delimiter != ',' && opts.delimiter != ' ') {
    throw InvalidInput("load_delimited: delimiter must be ',' or ' '");
  }

  LoadResult result;
  std::vector<double> values;
  char delim = opts.delimiter;
  Index cols = -1;
  bool first = true;
  std::string line;
  std::size_t lineno = 0;
  std::size_t rows = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (delim == 0) delim = line.find(',') != std::string::npos ? ',' : ' ';
    const auto fields = split_fields(line, delim);

    row.clear();
    bool ok = true;
    const std::size_t want =
        cols < 0 ? (opts.max_cols > 0 ? std::min<std::size_t>(fields.size(), static_cast<std::size_t>(opts.max_cols))
                                      : fields.size())
                 : static_cast<std::size_t>(cols);
    if (cols >= 0 && (fields.size() < want || (opts.max_cols == 0 && fields.size() != want))) {
      throw std::runtime_error("load_delimited: ragged row at line " + std::to_string(lineno) +
                               " (" + std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(want) + ")");
    }
    for (std::size_t f = 0; f < want; ++f) {
      double v = 0.0;
      if (!parse_double(fields[f], v)) {
        ok = false;
        break;
      }
      row.push_back(v);
    }
    if (first) {
      first = false;
      if (!ok) {
        result.header_skipped = true;
        continue;
      }
    }
    if (!ok) {
      result.rejected_lines.push_back(lineno);
      continue;
    }
    if (cols < 0) cols = static_cast<Index>(want);
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0 || cols <= 0) throw std::runtime_error("load_delimited: no numeric rows in " + path.string());

  result.samples.resize(static_cast<Index>(rows), cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      result.samples(static_cast<Index>(i), j) = values[i * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j)];
    }
  }
  if (opts.center) center_columns(result.samples);
  return result;
}

}  // namespace rdpca
