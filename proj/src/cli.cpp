#include "rdpca/cli.hpp"

#include "rdpca/config.hpp"
#include "rdpca/datagen.hpp"
#include "rdpca/dpca.hpp"
#include "rdpca/estimators.hpp"
#include "rdpca/experiment.hpp"
#include "rdpca/kernels.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

namespace rdpca {

namespace {

struct DataArgs {
  std::string input;
  std::string delimiter;
  Index max_cols = 0;
  bool center = false;
  std::string model = "t";
  Index d = 100;
  Index n = 1000;
  double lambda = 50.0;
  double nu = 5.0;
  double shape = 4.1;
  Index k = 3;
};

struct EstimatorArgs {
  std::string kind = "truncation";
  double alpha = 2.0;
  std::optional<double> tau;
  std::optional<double> theta;
  double delta = 0.1;
  std::optional<double> theta_scale;
  bool unsquared = false;
};

struct CommonArgs {
  std::optional<std::uint64_t> seed;
  std::string out_dir = "results";
  int jobs = 1;
};

struct ExperimentArgs {
  std::string scenario;
  std::string config;
  std::string scale;
  std::string model;
  std::string link;
  std::string fit = "means";
  std::optional<int> reps;
  bool timing = false;
  bool quiet = false;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--input", a.input, "Delimited numeric file, one sample per row");
  cmd->add_option("--delimiter", a.delimiter, "',' or 'space' (default: detect)");
  cmd->add_option("--max-cols", a.max_cols, "Keep the first N columns of --input");
  cmd->add_flag("--center", a.center, "Subtract column means of --input");
  cmd->add_option("--model", a.model, "Generated data: t, laplace or pareto")->capture_default_str();
  cmd->add_option("--d", a.d, "Dimension")->capture_default_str();
  cmd->add_option("--n", a.n, "Samples (per server for dpca)")->capture_default_str();
  cmd->add_option("--lambda", a.lambda, "Leading spike")->capture_default_str();
  cmd->add_option("--nu", a.nu, "t degrees of freedom")->capture_default_str();
  cmd->add_option("--shape", a.shape, "Pareto shape")->capture_default_str();
  cmd->add_option("--k", a.k, "Eigenspace dimension")->capture_default_str();
}

void add_estimator_options(CLI::App* cmd, EstimatorArgs& a) {
  cmd->add_option("--estimator", a.kind, "sample, shrinkage, truncation or elementwise")
      ->capture_default_str();
  cmd->add_option("--alpha", a.alpha, "Moment order in (1, 2]")->capture_default_str();
  cmd->add_option("--tau", a.tau, "Truncation level (default: adaptive)");
  cmd->add_option("--theta", a.theta, "Shrinkage parameter (default: tuned)");
  cmd->add_option("--delta", a.delta, "Confidence level for elementwise thresholds")->capture_default_str();
  cmd->add_option("--theta-scale", a.theta_scale, "Constant in theta = scale / (v sqrt(n))");
  cmd->add_flag("--unsquared", a.unsquared, "Use |x| instead of |x|^2 in the moment estimate");
}

void add_common_options(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--seed", a.seed, "Master seed");
  cmd->add_option("--out-dir", a.out_dir, "Output directory (ROBUST_DPCA_OUT overrides)")
      ->capture_default_str();
  cmd->add_option("--jobs", a.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}

std::filesystem::path out_dir(const CommonArgs& a) {
  if (const char* env = std::getenv("ROBUST_DPCA_OUT"); env != nullptr && *env != '\0') return env;
  return a.out_dir;
}

EstimatorSpec estimator_from(const EstimatorArgs& a) {
  EstimatorSpec e;
  e.kind = parse_estimator_kind(a.kind);
  e.alpha = a.alpha;
  e.tau = a.tau;
  e.theta = a.theta;
  e.delta = a.delta;
  if (a.theta_scale) e.theta_scale = *a.theta_scale;
  e.unsquared_moment = a.unsquared;
  e.validate();
  return e;
}

ModelSpec model_from(const DataArgs& a, std::uint64_t seed) {
  ModelSpec m;
  m.kind = parse_model_kind(a.model);
  if (m.kind != ModelKind::SpikedT && m.kind != ModelKind::SpikedLaplace && m.kind != ModelKind::Pareto) {
    throw InvalidInput("--model must be t, laplace or pareto");
  }
  m.d = a.d;
  m.lambda = a.lambda;
  m.nu = a.nu;
  m.shape_k = a.shape;
  m.k = a.k;
  m.seed = seed;
  m.validate();
  return m;
}

LoadOptions load_options(const DataArgs& a) {
  LoadOptions o;
  if (a.delimiter == ",") o.delimiter = ',';
  else if (a.delimiter == "space" || a.delimiter == " ") o.delimiter = ' ';
  else if (!a.delimiter.empty()) throw InvalidInput("--delimiter must be ',' or 'space'");
  o.max_cols = a.max_cols;
  o.center = a.center;
  return o;
}

Matrix load_input(const std::filesystem::path& path, const LoadOptions& opts, std::ostream& err) {
  LoadResult res = load_delimited(path, opts);
  if (res.header_skipped) err << "note: skipped header line of " << path.string() << "\n";
  if (!res.rejected_lines.empty()) {
    err << "warning: " << res.rejected_lines.size() << " unparseable rows dropped (first at line "
        << res.rejected_lines.front() << ")\n";
  }
  return std::move(res.samples);
}

void write_matrix(const Matrix& a, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) out << (j ? "," : "") << format_number(a(i, j));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void describe_tau(const std::optional<TauFit>& fit, std::ostream& out) {
  if (!fit) return;
  out << "tau " << format_number(fit->tau) << (fit->root_found ? "" : " (no root; bracket end)")
      << ", residual " << format_number(fit->residual) << ", " << fit->iterations << " evaluations\n";
}

int cmd_estimate(const DataArgs& da, const EstimatorArgs& ea, const CommonArgs& ca, Index top,
                 std::ostream& out, std::ostream& err) {
  const EstimatorSpec spec = estimator_from(ea);
  Matrix x;
  std::optional<GroundTruth> truth;
  if (!da.input.empty()) {
    x = load_input(da.input, load_options(da), err);
  } else {
    const ModelSpec model = model_from(da, ca.seed.value_or(1));
    Generated g = gen_model(model, da.n);
    x = std::move(g.samples);
    truth = std::move(g.truth);
  }
  const Estimate est = estimate(x, spec);
  out << "estimator " << to_string(spec.kind) << ", n " << x.rows() << ", d " << x.cols() << "\n";
  if (est.resolved.theta) out << "theta " << format_number(*est.resolved.theta) << "\n";
  describe_tau(est.tau_fit, out);
  const Vector ev = eigenvalues_sym(est.cov);
  out << "leading eigenvalues:";
  for (Index i = 0; i < std::min<Index>(top, ev.size()); ++i) out << ' ' << format_number(ev[i]);
  out << "\n";
  if (truth) {
    const EigBasis v = top_k(eig_sym(est.cov), truth->v_k.k());
    out << "subspace error (K=" << truth->v_k.k() << ") " << format_number(subspace_dist(v, truth->v_k))
        << "\n";
  }
  const auto path = out_dir(ca) / "covariance.csv";
  write_matrix(est.cov.matrix(), path);
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_dpca(const std::string& config, const DataArgs& da, const EstimatorArgs& ea, Index m_flag,
             const CommonArgs& ca, std::ostream& out, std::ostream& err) {
  DpcaConfig cfg;
  if (!config.empty()) {
    if (!std::filesystem::exists(config)) throw InvalidInput("config file not found: " + config);
    cfg = load_dpca_config(config);
    if (ca.seed) cfg.model.seed = *ca.seed;
    if (ea.theta_scale) cfg.estimator.theta_scale = *ea.theta_scale;
  } else {
    cfg.model = model_from(da, ca.seed.value_or(1));
    cfg.m = m_flag;
    cfg.n = da.n;
    cfg.estimator = estimator_from(ea);
    if (!da.input.empty()) cfg.input = da.input;
    cfg.center = da.center;
  }
  if (cfg.m < 1) throw InvalidInput("--m must be >= 1");

  std::vector<Shard> shards;
  std::optional<GroundTruth> truth;
  if (cfg.input) {
    LoadOptions lo = load_options(da);
    lo.center = cfg.center;
    const Matrix x = load_input(*cfg.input, lo, err);
    const Index per = x.rows() / cfg.m;
    if (per < 2) throw InvalidInput("input has too few rows for " + std::to_string(cfg.m) + " servers");
    for (Index l = 0; l < cfg.m; ++l) {
      shards.push_back(Shard{static_cast<int>(l + 1), x.middleRows(l * per, per), cfg.estimator});
    }
  } else {
    ModelSpec model = cfg.model;
    const std::uint64_t master = model.seed;
    for (Index l = 0; l < cfg.m; ++l) {
      model.seed = mix_seed(master, {static_cast<std::uint64_t>(l + 1)});
      Generated g = gen_model(model, cfg.n);
      if (!truth) truth = std::move(g.truth);
      shards.push_back(Shard{static_cast<int>(l + 1), std::move(g.samples), cfg.estimator});
    }
  }
  if (cfg.model.k > shards.front().samples.cols()) throw InvalidInput("k exceeds the dimension");

  Transport transport;
  DpcaOptions opts;
  opts.jobs = ca.jobs;
  opts.transport = &transport;
  const DpcaResult res = run_dpca(shards, cfg.model.k, opts);

  out << "servers " << shards.size() << ", k " << cfg.model.k << ", estimator "
      << to_string(cfg.estimator.kind) << "\n";
  out << "transmitted " << transport.values_sent() << " values (" << transport.bytes_sent()
      << " bytes) in " << transport.messages() << " messages\n";
  out << "averaged projector eigenvalues:";
  for (Index i = 0; i < res.sigma_tilde_eigvals.size(); ++i) {
    out << ' ' << format_number(res.sigma_tilde_eigvals[i]);
  }
  out << "\n";
  const double gap = eigengap_report(res);
  out << "eigengap " << format_number(gap) << "\n";
  if (gap < kEigengapWarnThreshold) {
    err << "warning: eigengap of the averaged projector is below " << kEigengapWarnThreshold
        << "; the servers disagree on the subspace\n";
  }
  std::size_t no_root = 0;
  for (const auto& f : res.tau_fits) no_root += (f && !f->root_found) ? 1 : 0;
  if (no_root > 0) err << "warning: adaptive tau had no root on " << no_root << " servers\n";
  if (truth) out << "subspace error " << format_number(subspace_dist(res.v_tilde, truth->v_k)) << "\n";
  const auto path = out_dir(ca) / "v_tilde.csv";
  write_matrix(res.v_tilde.columns(), path);
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_experiment(const ExperimentArgs& xa, const EstimatorArgs& ea, const CommonArgs& ca,
                   std::ostream& out, std::ostream& err, const std::string& usage) {
  const Scenario scenario = parse_scenario(xa.scenario);
  if (xa.config.empty() && xa.scale.empty()) {
    err << "experiment: give --config FILE or --scale desk|paper\n\n" << usage;
    return kExitUsage;
  }
  if (!xa.config.empty() && !std::filesystem::exists(xa.config)) {
    err << "experiment: config file not found: " << xa.config << "\n\n" << usage;
    return kExitUsage;
  }
  std::optional<Scale> scale;
  if (!xa.scale.empty()) scale = parse_scale(xa.scale);
  ExperimentSpec spec = xa.config.empty() ? preset(scenario, *scale)
                                          : load_experiment_config(xa.config, scenario, scale);
  if (ca.seed) spec.master_seed = *ca.seed;
  if (xa.reps) spec.reps = *xa.reps;
  if (!xa.model.empty()) {
    const ModelKind kind = parse_model_kind(xa.model);
    if (kind != ModelKind::SpikedT && kind != ModelKind::SpikedLaplace && kind != ModelKind::Pareto) {
      throw InvalidInput("--model must be t, laplace or pareto");
    }
    if (scenario == Scenario::OutlierSweep || scenario == Scenario::SteinSweep) {
      throw InvalidInput("--model does not apply to " + to_string(scenario));
    }
    spec.model.kind = kind;
  }
  if (!xa.link.empty()) {
    if (scenario != Scenario::SteinSweep) throw InvalidInput("--link applies to stein-sweep only");
    spec.model.link = parse_link(xa.link);
  }
  if (ea.theta_scale) {
    for (auto& e : spec.estimators) e.spec.theta_scale = *ea.theta_scale;
  }
  const FitMode mode = parse_fit_mode(xa.fit);
  spec.validate();

  RunOptions opts;
  opts.jobs = ca.jobs;
  opts.timing = xa.timing;
  if (!xa.quiet) {
    opts.progress = [&err](std::size_t done, std::size_t total) {
      if (done == total || done % std::max<std::size_t>(total / 20, 1) == 0) {
        err << "\r" << done << "/" << total << " tasks" << (done == total ? "\n" : "") << std::flush;
      }
    };
  }
  const std::vector<ResultRow> rows = run_experiment(spec, opts);

  const auto dir = out_dir(ca);
  const std::string stem = to_string(scenario);
  emit_csv(rows, dir / (stem + ".csv"));
  emit_plotdata(rows, dir / (stem + ".plotdata"));
  {
    std::ofstream summary(dir / (stem + ".summary.txt"), std::ios::binary);
    write_summary(rows, mode, summary);
  }
  write_summary(rows, mode, out);
  out << "\nwrote " << (dir / (stem + ".csv")).string() << ", .plotdata, .summary.txt\n";
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust distributed PCA: estimators, simulated servers and experiments", "rdpca"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rdpca 1.0");
  app.add_option_function<std::string>(
      "--isa",
      [](const std::string& v) {
        const kernels::Isa isa = v == "scalar" ? kernels::Isa::Scalar : kernels::Isa::Avx2;
        if (!kernels::isa_supported(isa)) throw CLI::ValidationError("--isa", v + " is not supported here");
        kernels::set_active_isa(isa);
      },
      "Kernel set: scalar or avx2 (default: best available)")
      ->check(CLI::IsMember({"scalar", "avx2"}));

  DataArgs da;
  EstimatorArgs ea;
  CommonArgs ca;
  ExperimentArgs xa;
  Index top = 5;
  Index m = 10;
  std::string dpca_config;

  auto* est = app.add_subcommand("estimate", "Covariance of one data set, from --input or generated");
  add_data_options(est, da);
  add_estimator_options(est, ea);
  add_common_options(est, ca);
  est->add_option("--top", top, "Eigenvalues to print")->capture_default_str();

  auto* dp = app.add_subcommand("dpca", "Distributed PCA across simulated servers");
  dp->add_option("--config", dpca_config, "JSON run description");
  add_data_options(dp, da);
  add_estimator_options(dp, ea);
  add_common_options(dp, ca);
  dp->add_option("--m", m, "Servers")->capture_default_str();

  auto* ex = app.add_subcommand("experiment", "Monte-Carlo study for one scenario");
  ex->add_option("scenario", xa.scenario,
                 "tail-sweep, pareto-servers, t-comparison, outlier-sweep or stein-sweep")
      ->required();
  ex->add_option("--config", xa.config, "JSON experiment description");
  ex->add_option("--scale", xa.scale, "Preset size: desk or paper");
  ex->add_option("--model", xa.model, "Override the data model: t, laplace or pareto");
  ex->add_option("--link", xa.link, "stein-sweep link: square or quartic-half");
  ex->add_option("--fit", xa.fit, "Slope fit on per-point means ('means') or 'per-rep'")
      ->capture_default_str();
  ex->add_option("--reps", xa.reps, "Override the replication count");
  ex->add_option("--theta-scale", ea.theta_scale, "Constant in theta = scale / (v sqrt(n))");
  ex->add_flag("--timing", xa.timing, "Record wall_ms (CSV then differs between runs)");
  ex->add_flag("--quiet", xa.quiet, "No progress output");
  add_common_options(ex, ca);

  auto* st = app.add_subcommand("stein", "Single-index direction sweep (stein-sweep scenario)");
  st->add_option("--config", xa.config, "JSON experiment description");
  st->add_option("--scale", xa.scale, "Preset size: desk (default) or paper");
  st->add_option("--link", xa.link, "square or quartic-half");
  st->add_option("--fit", xa.fit, "means or per-rep")->capture_default_str();
  st->add_option("--reps", xa.reps, "Override the replication count");
  st->add_flag("--timing", xa.timing, "Record wall_ms");
  st->add_flag("--quiet", xa.quiet, "No progress output");
  add_common_options(st, ca);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForVersion&) {
    out << "rdpca 1.0\n";
    return kExitOk;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::Success&) {
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (est->parsed()) return cmd_estimate(da, ea, ca, top, out, err);
    if (dp->parsed()) return cmd_dpca(dpca_config, da, ea, m, ca, out, err);
    if (ex->parsed()) return cmd_experiment(xa, ea, ca, out, err, ex->help());
    if (st->parsed()) {
      xa.scenario = "stein-sweep";
      if (xa.config.empty() && xa.scale.empty()) xa.scale = "desk";
      return cmd_experiment(xa, ea, ca, out, err, st->help());
    }
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace rdpca
