#include "rdpca/experiment.hpp"

#include "rdpca/dpca.hpp"
#include "rdpca/parallel.hpp"
#include "rdpca/stein.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>

namespace rdpca {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::TailSweep: return "tail-sweep";
    case Scenario::ParetoServers: return "pareto-servers";
    case Scenario::TComparison: return "t-comparison";
    case Scenario::OutlierSweep: return "outlier-sweep";
    case Scenario::SteinSweep: return "stein-sweep";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::TailSweep, Scenario::ParetoServers, Scenario::TComparison,
                     Scenario::OutlierSweep, Scenario::SteinSweep}) {
    if (to_string(s) == name) return s;
  }
  throw InvalidInput("unknown scenario '" + name +
                     "' (expected tail-sweep, pareto-servers, t-comparison, outlier-sweep, stein-sweep)");
}

Scale parse_scale(const std::string& name) {
  if (name == "desk") return Scale::Desk;
  if (name == "paper") return Scale::Paper;
  throw InvalidInput("unknown scale '" + name + "' (expected desk or paper)");
}

std::string to_string(Axis a) {
  switch (a) {
    case Axis::D: return "d";
    case Axis::M: return "m";
    case Axis::N: return "n";
    case Axis::Delta: return "delta";
    case Axis::Lambda: return "lambda";
    case Axis::Nu: return "nu";
    case Axis::C: return "c";
  }
  return "unknown";
}

Axis parse_axis(const std::string& name) {
  for (Axis a : {Axis::D, Axis::M, Axis::N, Axis::Delta, Axis::Lambda, Axis::Nu, Axis::C}) {
    if (to_string(a) == name) return a;
  }
  throw InvalidInput("unknown axis '" + name + "'");
}

FitMode parse_fit_mode(const std::string& name) {
  if (name == "means" || name == "point-means") return FitMode::PointMeans;
  if (name == "per-rep") return FitMode::PerRep;
  throw InvalidInput("unknown fit mode '" + name + "' (expected means or per-rep)");
}

double axis_value(const ResultRow& row, Axis a) {
  switch (a) {
    case Axis::D: return static_cast<double>(row.d);
    case Axis::M: return static_cast<double>(row.m);
    case Axis::N: return static_cast<double>(row.n);
    case Axis::Delta: return row.delta_gap;
    case Axis::Lambda: return row.lambda;
    case Axis::Nu: return row.nu;
    case Axis::C: return row.c;
  }
  return kNaN;
}

namespace {

ModelSpec point_model(const ExperimentSpec& spec, const GridPoint& p) {
  ModelSpec model = spec.model;
  model.d = p.d;
  model.lambda = p.lambda;
  model.nu = p.nu;
  model.c = p.c;
  model.shape_k = p.shape_k;
  model.outliers = p.outliers;
  model.k = spec.k_target;
  return model;
}

bool is_stein(const ExperimentSpec& spec) { return spec.scenario == Scenario::SteinSweep; }

}  // namespace

void ExperimentSpec::validate() const {
  if (reps < 1) throw InvalidInput("experiment: reps must be >= 1");
  if (grid.empty()) throw InvalidInput("experiment: grid is empty");
  if (estimators.empty()) throw InvalidInput("experiment: no estimators");
  std::set<std::string> labels;
  for (const auto& e : estimators) {
    if (e.label.empty() || e.label.find_first_of(",\n") != std::string::npos) {
      throw InvalidInput("experiment: estimator labels must be non-empty without commas");
    }
    if (!labels.insert(e.label).second) throw InvalidInput("experiment: duplicate label " + e.label);
    e.spec.validate();
    if (is_stein(*this) && e.spec.kind != EstimatorKind::Sample &&
        e.spec.kind != EstimatorKind::Truncation) {
      throw InvalidInput("experiment: stein-sweep supports sample and truncation estimators only");
    }
  }
  if (is_stein(*this) && k_target != 1) throw InvalidInput("experiment: stein-sweep needs k = 1");
  if (is_stein(*this) && model.kind != ModelKind::SingleIndex) {
    throw InvalidInput("experiment: stein-sweep needs the single-index model");
  }
  if (!is_stein(*this) && model.kind == ModelKind::SingleIndex) {
    throw InvalidInput("experiment: the single-index model belongs to stein-sweep");
  }
  if ((scenario == Scenario::OutlierSweep) != (model.kind == ModelKind::GaussianOutlier)) {
    throw InvalidInput("experiment: outlier-sweep and the gaussian-outlier model go together");
  }
  for (const auto& p : grid) {
    if (p.m < 1 || p.n < 2) throw InvalidInput("experiment: each point needs m >= 1 and n >= 2");
    const ModelSpec model_p = point_model(*this, p);
    model_p.validate();
    if (model.kind == ModelKind::GaussianOutlier && p.outliers > p.n) {
      throw InvalidInput("experiment: more outliers than samples per server");
    }
    if (!is_stein(*this)) (void)ground_truth(model_p);
  }
}

std::uint64_t task_seed(std::uint64_t master, std::size_t point, int rep) {
  return mix_seed(master, {static_cast<std::uint64_t>(point), static_cast<std::uint64_t>(rep)});
}

namespace {

struct Clock {
  bool on;
  std::chrono::steady_clock::time_point start;
  explicit Clock(bool enabled) : on(enabled) {
    if (on) start = std::chrono::steady_clock::now();
  }
  double ms() const {
    if (!on) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
};

ResultRow base_row(const ExperimentSpec& spec, const GridPoint& p, std::size_t point, int rep,
                   double gap) {
  ResultRow r;
  r.scenario = to_string(spec.scenario);
  r.d = p.d;
  r.m = p.m;
  r.n = p.n;
  r.lambda = p.lambda;
  r.delta_gap = gap;
  r.nu = p.nu;
  r.c = p.c;
  r.rep = rep;
  r.point = point;
  return r;
}

void set_error(ResultRow& r, double err) {
  r.error = err;
  r.log_error = std::log(err);
}

void set_failure(ResultRow& r, std::string why) {
  r.error = kNaN;
  r.log_error = kNaN;
  r.failure = std::move(why);
}

std::string no_root_message(const std::vector<std::optional<TauFit>>& fits) {
  for (std::size_t l = 0; l < fits.size(); ++l) {
    if (fits[l] && !fits[l]->root_found) {
      return "adaptive tau has no root on server " + std::to_string(l + 1);
    }
  }
  return {};
}

std::vector<ResultRow> run_pca_task(const ExperimentSpec& spec, const GridPoint& p,
                                    std::size_t point, int rep, const GroundTruth& truth,
                                    const RunOptions& opts) {
  const std::uint64_t seed = task_seed(spec.master_seed, point, rep);
  ModelSpec model = point_model(spec, p);
  std::vector<Matrix> shards;
  shards.reserve(static_cast<std::size_t>(p.m));
  if (model.kind == ModelKind::GaussianOutlier) {
    model.seed = seed;
    shards = gen_gaussian_outlier(model, p.n, p.m).shards;
  } else {
    for (Index l = 0; l < p.m; ++l) {
      model.seed = mix_seed(seed, {static_cast<std::uint64_t>(l + 1)});
      shards.push_back(gen_model(model, p.n).samples);
    }
  }

  std::vector<ResultRow> out;
  for (const auto& est : spec.estimators) {
    ResultRow row = base_row(spec, p, point, rep, truth.eigengap);
    row.estimator = est.label;
    const Clock clock(opts.timing);
    try {
      std::vector<Shard> input;
      input.reserve(shards.size());
      for (std::size_t l = 0; l < shards.size(); ++l) {
        input.push_back(Shard{static_cast<int>(l + 1), shards[l], est.spec});
      }
      const DpcaResult res = run_dpca(input, spec.k_target);
      const std::string no_root = opts.fail_on_tau_no_root ? no_root_message(res.tau_fits) : "";
      if (no_root.empty()) {
        set_error(row, subspace_dist(res.v_tilde, truth.v_k));
      } else {
        set_failure(row, no_root);
      }
    } catch (const std::runtime_error& e) {
      set_failure(row, e.what());
    }
    row.wall_ms = clock.ms();
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<ResultRow> run_stein_task(const ExperimentSpec& spec, const GridPoint& p,
                                      std::size_t point, int rep, const RunOptions& opts) {
  const std::uint64_t seed = task_seed(spec.master_seed, point, rep);
  ModelSpec model = point_model(spec, p);
  const Vector beta = draw_beta_star(p.d, mix_seed(seed, {0xbe7a}));
  std::vector<SteinData> shards;
  for (Index l = 0; l < p.m; ++l) {
    model.seed = mix_seed(seed, {static_cast<std::uint64_t>(l + 1)});
    shards.push_back(gen_single_index(model, p.n, beta).data);
  }

  std::vector<ResultRow> out;
  for (const auto& est : spec.estimators) {
    ResultRow row = base_row(spec, p, point, rep, stein_constant(model.link));
    row.estimator = est.label;
    const Clock clock(opts.timing);
    std::optional<double> tau;
    if (est.spec.kind == EstimatorKind::Sample) {
      tau = std::numeric_limits<double>::infinity();
    } else {
      tau = est.spec.tau;
    }
    try {
      std::vector<SteinShard> input;
      for (std::size_t l = 0; l < shards.size(); ++l) {
        input.push_back(SteinShard{static_cast<int>(l + 1), shards[l], tau});
      }
      const SteinDpcaResult res = run_stein_dpca(input);
      const std::string no_root = opts.fail_on_tau_no_root ? no_root_message(res.dpca.tau_fits) : "";
      if (no_root.empty()) {
        set_error(row, beta_error(res.beta_hat, beta));
      } else {
        set_failure(row, no_root);
      }
    } catch (const std::runtime_error& e) {
      set_failure(row, e.what());
    }
    row.wall_ms = clock.ms();
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, const RunOptions& opts) {
  spec.validate();
  std::vector<std::optional<GroundTruth>> truths(spec.grid.size());
  if (!is_stein(spec)) {
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
      truths[i] = ground_truth(point_model(spec, spec.grid[i]));
    }
  }

  const std::size_t reps = static_cast<std::size_t>(spec.reps);
  const std::size_t total = spec.grid.size() * reps;
  std::vector<std::vector<ResultRow>> results(total);
  std::mutex progress_mu;
  std::size_t done = 0;
  detail::parallel_for(total, opts.jobs, [&](std::size_t task) {
    const std::size_t point = task / reps;
    const int rep = static_cast<int>(task % reps);
    const GridPoint& p = spec.grid[point];
    results[task] = is_stein(spec) ? run_stein_task(spec, p, point, rep, opts)
                                   : run_pca_task(spec, p, point, rep, *truths[point], opts);
    if (opts.progress) {
      std::lock_guard<std::mutex> lock(progress_mu);
      opts.progress(++done, total);
    }
  });

  std::vector<ResultRow> rows;
  rows.reserve(total * spec.estimators.size());
  for (auto& r : results) {
    for (auto& row : r) rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

LabeledEstimator labeled(std::string label, EstimatorKind kind) {
  LabeledEstimator e{std::move(label), EstimatorSpec{}};
  e.spec.kind = kind;
  return e;
}

void add_unique(std::vector<GridPoint>& grid, const GridPoint& p) {
  if (std::find(grid.begin(), grid.end(), p) == grid.end()) grid.push_back(p);
}

}  // namespace

ExperimentSpec preset(Scenario scenario, Scale scale) {
  const bool paper = scale == Scale::Paper;
  ExperimentSpec spec;
  spec.scenario = scenario;
  spec.master_seed = 1;
  spec.reps = paper ? 50 : 20;
  const LabeledEstimator rdp = labeled("RDP", EstimatorKind::Truncation);
  const LabeledEstimator dp = labeled("DP", EstimatorKind::Sample);

  switch (scenario) {
    case Scenario::TailSweep: {
      spec.model.kind = ModelKind::SpikedT;
      spec.model.nu = 5.0;
      spec.k_target = 3;
      spec.estimators = {rdp, labeled("RDP-shrink", EstimatorKind::Shrinkage), dp};
      GridPoint base;
      base.d = 100;
      base.m = 10;
      base.n = 1000;
      base.lambda = 50.0;
      base.nu = 5.0;
      const std::vector<Index> ds = paper ? std::vector<Index>{100, 200, 300, 400, 500, 600}
                                          : std::vector<Index>{50, 100, 200};
      const std::vector<Index> ms = paper ? std::vector<Index>{5, 10, 20, 50, 100}
                                          : std::vector<Index>{5, 10, 20, 50};
      const std::vector<Index> ns = paper ? std::vector<Index>{250, 500, 1000, 2000}
                                          : std::vector<Index>{250, 500, 1000};
      const std::vector<double> lambdas = {25.0, 50.0, 100.0, 200.0};
      for (Index d : ds) {
        GridPoint p = base;
        p.d = d;
        add_unique(spec.grid, p);
      }
      for (Index m : ms) {
        GridPoint p = base;
        p.m = m;
        add_unique(spec.grid, p);
      }
      for (Index n : ns) {
        GridPoint p = base;
        p.m = paper ? 50 : 20;
        p.n = n;
        add_unique(spec.grid, p);
      }
      for (double lam : lambdas) {
        GridPoint p = base;
        if (paper) p.d = 200;
        p.lambda = lam;
        add_unique(spec.grid, p);
      }
      break;
    }
    case Scenario::ParetoServers: {
      spec.model.kind = ModelKind::Pareto;
      spec.k_target = 3;
      spec.estimators = {rdp, dp};
      const Index total_n = 5000;
      for (double shape : {4.1, 5.1}) {
        for (Index m : {1, 2, 5, 10, 25, 50}) {
          GridPoint p;
          p.d = paper ? 600 : 100;
          p.m = m;
          p.n = total_n / m;
          p.lambda = 50.0;
          p.shape_k = shape;
          spec.grid.push_back(p);
        }
      }
      break;
    }
    case Scenario::TComparison: {
      spec.model.kind = ModelKind::SpikedT;
      spec.k_target = 3;
      spec.estimators = {rdp, dp};
      const std::vector<double> nus = paper ? std::vector<double>{4.1, 4.5, 5.0, 5.5, 6.0}
                                            : std::vector<double>{4.1, 5.0, 6.0};
      const std::vector<Index> ns = paper ? std::vector<Index>{200, 400, 800, 1600, 2000}
                                          : std::vector<Index>{200, 400, 800};
      const std::vector<Index> ds = paper ? std::vector<Index>{100, 200, 300, 400}
                                          : std::vector<Index>{200};
      for (Index d : ds) {
        for (double nu : nus) {
          for (Index n : ns) {
            GridPoint p;
            p.d = d;
            p.m = 20;
            p.n = n;
            p.lambda = 50.0;
            p.nu = nu;
            spec.grid.push_back(p);
          }
        }
      }
      break;
    }
    case Scenario::OutlierSweep: {
      spec.model.kind = ModelKind::GaussianOutlier;
      spec.k_target = 4;
      spec.reps = paper ? 50 : 10;
      spec.estimators = {dp, labeled("RDP-shrink", EstimatorKind::Shrinkage),
                         labeled("RDP-trunc", EstimatorKind::Truncation)};
      const std::vector<double> cs = paper ? std::vector<double>{2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0}
                                           : std::vector<double>{2.0, 3.0, 4.0, 5.0};
      for (double c : cs) {
        GridPoint p;
        p.d = paper ? 1000 : 200;
        p.m = paper ? 20 : 10;
        p.n = paper ? 5000 : 1000;
        p.lambda = 5.0;
        p.c = c;
        p.outliers = paper ? 100 : 20;
        spec.grid.push_back(p);
      }
      break;
    }
    case Scenario::SteinSweep: {
      spec.model.kind = ModelKind::SingleIndex;
      spec.model.link = Link::QuarticHalf;
      spec.k_target = 1;
      spec.estimators = {rdp, dp};
      const std::vector<double> nus = paper ? std::vector<double>{2.1, 2.5, 3.0, 3.5, 4.0}
                                            : std::vector<double>{2.1, 3.0, 4.0};
      for (double nu : nus) {
        GridPoint p;
        p.d = paper ? 100 : 50;
        p.m = paper ? 20 : 10;
        p.n = paper ? 800 : 500;
        p.lambda = 1.0;
        p.nu = nu;
        spec.grid.push_back(p);
      }
      break;
    }
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

// (d, m, n, lambda, delta, nu, c)
using PointKey = std::array<double, 7>;

PointKey key_of(const ResultRow& r) {
  return {static_cast<double>(r.d), static_cast<double>(r.m), static_cast<double>(r.n),
          r.lambda, r.delta_gap, r.nu, r.c};
}

std::size_t key_index(Axis a) {
  switch (a) {
    case Axis::D: return 0;
    case Axis::M: return 1;
    case Axis::N: return 2;
    case Axis::Lambda: return 3;
    case Axis::Delta: return 4;
    case Axis::Nu: return 5;
    case Axis::C: return 6;
  }
  return 0;
}

// Coordinates held fixed when `a` varies. The eigengap is a function of
// lambda and nu, so it is never part of the slice key except through them.
std::vector<std::size_t> fixed_coords(Axis a) {
  if (a == Axis::Delta) return {0, 1, 2, 6};
  std::vector<std::size_t> out;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u}) {
    if (i != key_index(a)) out.push_back(i);
  }
  return out;
}

struct PointData {
  PointKey key;
  std::vector<double> errors;      // successful, in row order
  std::vector<double> log_errors;
};

// Points in order of first appearance.
std::vector<PointData> group_points(const std::vector<ResultRow>& rows) {
  std::vector<PointData> pts;
  std::map<PointKey, std::size_t> index;
  for (const auto& r : rows) {
    const PointKey k = key_of(r);
    auto it = index.find(k);
    if (it == index.end()) {
      it = index.emplace(k, pts.size()).first;
      pts.push_back(PointData{k, {}, {}});
    }
    if (!r.failed() && r.error > 0.0) {
      pts[it->second].errors.push_back(r.error);
      pts[it->second].log_errors.push_back(r.log_error);
    }
  }
  return pts;
}

void require_single_estimator(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw InvalidInput("fit: no rows");
  for (const auto& r : rows) {
    if (r.estimator != rows.front().estimator || r.scenario != rows.front().scenario) {
      throw InvalidInput("fit: rows mix estimators or scenarios; filter with rows_for() first");
    }
  }
}

// Largest slice (by distinct axis values) in which only `axis` varies;
// ties go to the slice that appears first.
std::vector<const PointData*> axis_slice(const std::vector<PointData>& pts, Axis axis) {
  const auto fixed = fixed_coords(axis);
  const std::size_t ai = key_index(axis);
  std::vector<std::vector<double>> slice_keys;
  std::vector<std::vector<const PointData*>> slices;
  for (const auto& p : pts) {
    if (p.errors.empty()) continue;
    std::vector<double> sk;
    for (std::size_t i : fixed) sk.push_back(p.key[i]);
    auto it = std::find(slice_keys.begin(), slice_keys.end(), sk);
    if (it == slice_keys.end()) {
      slice_keys.push_back(sk);
      slices.push_back({&p});
    } else {
      slices[static_cast<std::size_t>(it - slice_keys.begin())].push_back(&p);
    }
  }
  std::vector<const PointData*> best;
  std::size_t best_distinct = 0;
  for (auto& s : slices) {
    std::set<double> vals;
    for (const auto* p : s) vals.insert(p->key[ai]);
    if (vals.size() > best_distinct) {
      best_distinct = vals.size();
      best = s;
    }
  }
  if (best_distinct < 2) {
    throw InvalidInput("fit: axis " + to_string(axis) + " takes fewer than two values in every slice");
  }
  std::stable_sort(best.begin(), best.end(),
                   [&](const PointData* a, const PointData* b) { return a->key[ai] < b->key[ai]; });
  return best;
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

struct Observations {
  std::vector<std::array<double, 4>> x;  // log d, log m, log n, log delta
  std::vector<double> y;
};

void add_observations(Observations& obs, const PointData& p, FitMode mode) {
  const std::array<double, 4> x = {std::log(p.key[0]), std::log(p.key[1]), std::log(p.key[2]),
                                   std::log(p.key[4])};
  if (mode == FitMode::PointMeans) {
    obs.x.push_back(x);
    obs.y.push_back(std::log(mean_of(p.errors)));
  } else {
    for (double le : p.log_errors) {
      obs.x.push_back(x);
      obs.y.push_back(le);
    }
  }
}

double r_squared(const std::vector<double>& y, const std::vector<double>& fitted) {
  const double ybar = mean_of(y);
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
    ss_res += (y[i] - fitted[i]) * (y[i] - fitted[i]);
  }
  return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

bool all_axes_vary(const std::vector<PointData>& pts) {
  for (std::size_t i : {0u, 1u, 2u, 4u}) {
    std::set<double> vals;
    for (const auto& p : pts) {
      if (!p.errors.empty()) vals.insert(p.key[i]);
    }
    if (vals.size() < 2) return false;
  }
  return true;
}

JointFit joint_from_points(const std::vector<PointData>& pts, FitMode mode) {
  Observations obs;
  for (const auto& p : pts) {
    if (!p.errors.empty()) add_observations(obs, p, mode);
  }
  const Index rows = static_cast<Index>(obs.y.size());
  Matrix a(rows, 5);
  Vector b(rows);
  for (Index i = 0; i < rows; ++i) {
    a(i, 0) = 1.0;
    for (Index j = 0; j < 4; ++j) a(i, j + 1) = obs.x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    b[i] = obs.y[static_cast<std::size_t>(i)];
  }
  const Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() < 5) throw InvalidInput("fit_joint: design is rank deficient");
  const Vector coef = qr.solve(b);
  const Vector fitted = a * coef;
  JointFit out;
  out.intercept = coef[0];
  for (int j = 0; j < 4; ++j) out.coef[j] = coef[j + 1];
  out.r_squared = r_squared(obs.y, std::vector<double>(fitted.data(), fitted.data() + rows));
  return out;
}

}  // namespace

SlopeFit fit_loglog_slope(const std::vector<ResultRow>& rows, Axis axis, FitMode mode) {
  require_single_estimator(rows);
  const std::vector<PointData> pts = group_points(rows);
  const auto slice = axis_slice(pts, axis);
  const std::size_t ai = key_index(axis);

  std::vector<double> xs, ys;
  for (const auto* p : slice) {
    if (!(p->key[ai] > 0.0)) throw InvalidInput("fit: axis values must be positive");
    if (mode == FitMode::PointMeans) {
      xs.push_back(std::log(p->key[ai]));
      ys.push_back(std::log(mean_of(p->errors)));
    } else {
      for (double le : p->log_errors) {
        xs.push_back(std::log(p->key[ai]));
        ys.push_back(le);
      }
    }
  }
  const double xbar = mean_of(xs);
  const double ybar = mean_of(ys);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  fit.points = slice.size();
  std::vector<double> fitted(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) fitted[i] = fit.intercept + fit.slope * xs[i];
  fit.marginal_r_squared = r_squared(ys, fitted);
  fit.r_squared = fit.marginal_r_squared;
  if (all_axes_vary(pts)) {
    try {
      fit.r_squared = joint_from_points(pts, mode).r_squared;
      fit.joint = true;
    } catch (const InvalidInput&) {
      // Too few points for the joint design; keep the marginal R^2.
    }
  }
  return fit;
}

JointFit fit_joint(const std::vector<ResultRow>& rows, FitMode mode) {
  require_single_estimator(rows);
  return joint_from_points(group_points(rows), mode);
}

std::vector<ResultRow> rows_for(const std::vector<ResultRow>& rows, const std::string& estimator) {
  std::vector<ResultRow> out;
  for (const auto& r : rows) {
    if (r.estimator == estimator) out.push_back(r);
  }
  return out;
}

std::vector<std::string> estimator_labels(const std::vector<ResultRow>& rows) {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.estimator) == out.end()) out.push_back(r.estimator);
  }
  return out;
}

double mean_log_error(const std::vector<ResultRow>& rows,
                      const std::function<bool(const ResultRow&)>& pred) {
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& r : rows) {
    if (r.failed() || !pred(r)) continue;
    acc += r.log_error;
    ++count;
  }
  return count > 0 ? acc / static_cast<double>(count) : kNaN;
}

namespace detail {

// Shared with results_io.cpp for plot data.
std::vector<std::pair<double, std::vector<double>>> axis_series(const std::vector<ResultRow>& rows,
                                                                Axis axis) {
  const std::vector<PointData> pts = group_points(rows);
  const auto slice = axis_slice(pts, axis);
  std::vector<std::pair<double, std::vector<double>>> out;
  for (const auto* p : slice) out.emplace_back(p->key[key_index(axis)], p->log_errors);
  return out;
}

}  // namespace detail

}  // namespace rdpca
