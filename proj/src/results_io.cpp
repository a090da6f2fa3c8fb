#include "rdpca/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rdpca {

namespace detail {
std::vector<std::pair<double, std::vector<double>>> axis_series(const std::vector<ResultRow>& rows,
                                                                Axis axis);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.estimator << ',' << r.d << ',' << r.m << ',' << r.n << ','
        << format_number(r.lambda) << ',' << format_number(r.delta_gap) << ','
        << format_number(r.nu) << ',' << format_number(r.c) << ',' << r.rep << ','
        << format_number(r.error) << ',' << format_number(r.log_error) << ','
        << format_number(r.wall_ms) << '\n';
  }
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

double parse_field(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::runtime_error("read_csv: bad number '" + s + "' on line " + std::to_string(line));
  }
  return v;
}

}  // namespace

void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  write_csv(rows, out);
  finish(out, path);
}

std::vector<ResultRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error("read_csv: " + path.string() + " does not start with the result header");
  }
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  std::map<std::string, std::size_t> points;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 13) {
      throw std::runtime_error("read_csv: line " + std::to_string(lineno) + " has " +
                               std::to_string(f.size()) + " fields");
    }
    ResultRow r;
    r.scenario = f[0];
    r.estimator = f[1];
    r.d = static_cast<Index>(parse_field(f[2], lineno));
    r.m = static_cast<Index>(parse_field(f[3], lineno));
    r.n = static_cast<Index>(parse_field(f[4], lineno));
    r.lambda = parse_field(f[5], lineno);
    r.delta_gap = parse_field(f[6], lineno);
    r.nu = parse_field(f[7], lineno);
    r.c = parse_field(f[8], lineno);
    r.rep = static_cast<int>(parse_field(f[9], lineno));
    r.error = parse_field(f[10], lineno);
    r.log_error = parse_field(f[11], lineno);
    r.wall_ms = parse_field(f[12], lineno);
    const std::string key = f[2] + ',' + f[3] + ',' + f[4] + ',' + f[5] + ',' + f[6] + ',' + f[7] + ',' + f[8];
    r.point = points.emplace(key, points.size()).first->second;
    if (r.failed()) r.failure = "failed";
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_plotdata(const std::vector<ResultRow>& rows, std::ostream& out) {
  bool first_block = true;
  for (const auto& label : estimator_labels(rows)) {
    const auto sub = rows_for(rows, label);
    for (Axis axis : {Axis::D, Axis::M, Axis::N, Axis::Delta, Axis::Nu, Axis::C}) {
      std::vector<std::pair<double, std::vector<double>>> series;
      try {
        series = detail::axis_series(sub, axis);
      } catch (const InvalidInput&) {
        continue;  // axis does not vary
      }
      if (!first_block) out << "\n\n";
      first_block = false;
      out << "# scenario=" << sub.front().scenario << " estimator=" << label
          << " axis=" << to_string(axis) << "\n# x mean_log_error stderr\n";
      for (const auto& [x, logs] : series) {
        double mean = 0.0;
        for (double v : logs) mean += v;
        mean /= static_cast<double>(logs.size());
        double var = 0.0;
        for (double v : logs) var += (v - mean) * (v - mean);
        const double se = logs.size() > 1
                              ? std::sqrt(var / static_cast<double>(logs.size() - 1) /
                                          static_cast<double>(logs.size()))
                              : 0.0;
        out << format_number(x) << ' ' << format_number(mean) << ' ' << format_number(se) << '\n';
      }
    }
  }
}

void emit_plotdata(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  write_plotdata(rows, out);
  finish(out, path);
}

void write_summary(const std::vector<ResultRow>& rows, FitMode mode, std::ostream& out) {
  if (rows.empty()) {
    out << "no rows\n";
    return;
  }
  out << "scenario " << rows.front().scenario << ", fit "
      << (mode == FitMode::PointMeans ? "log of per-point mean error" : "per-replication log error")
      << "\n";
  for (const auto& label : estimator_labels(rows)) {
    const auto sub = rows_for(rows, label);
    std::size_t failed = 0;
    for (const auto& r : sub) failed += r.failed() ? 1 : 0;
    out << "\n[" << label << "] rows " << sub.size() << ", failed " << failed << "\n";
    for (Axis axis : {Axis::D, Axis::M, Axis::N, Axis::Delta, Axis::Nu, Axis::C}) {
      try {
        const SlopeFit f = fit_loglog_slope(sub, axis, mode);
        out << "  slope " << to_string(axis) << " " << format_number(f.slope) << "  (R2 "
            << format_number(f.marginal_r_squared) << ", " << f.points << " points)\n";
      } catch (const InvalidInput&) {
      }
    }
    try {
      const JointFit j = fit_joint(sub, mode);
      out << "  joint: d " << format_number(j.coef[0]) << ", m " << format_number(j.coef[1])
          << ", n " << format_number(j.coef[2]) << ", delta " << format_number(j.coef[3])
          << ", R2 " << format_number(j.r_squared) << "\n";
    } catch (const InvalidInput&) {
    }
  }

  out << "\nper-point mean log error\n";
  out << "estimator d m n lambda delta_gap nu c mean_log_error ok failed\n";
  std::map<std::pair<std::string, std::size_t>, std::pair<double, std::pair<int, int>>> acc;
  std::vector<std::pair<std::string, std::size_t>> order;
  std::map<std::pair<std::string, std::size_t>, const ResultRow*> first;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.estimator, r.point);
    if (!first.count(key)) {
      first[key] = &r;
      order.push_back(key);
    }
    auto& a = acc[key];
    if (r.failed()) {
      ++a.second.second;
    } else {
      a.first += r.log_error;
      ++a.second.first;
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  for (const auto& key : order) {
    const ResultRow& r = *first[key];
    const auto& a = acc[key];
    const double mean = a.second.first > 0 ? a.first / a.second.first : std::nan("");
    out << r.estimator << ' ' << r.d << ' ' << r.m << ' ' << r.n << ' ' << format_number(r.lambda)
        << ' ' << format_number(r.delta_gap) << ' ' << format_number(r.nu) << ' '
        << format_number(r.c) << ' ' << format_number(mean) << ' ' << a.second.first << ' '
        << a.second.second << '\n';
  }

  std::size_t shown = 0;
  for (const auto& r : rows) {
    if (!r.failed()) continue;
    if (shown == 0) out << "\nfailed replications (excluded from fits)\n";
    if (++shown > 20) {
      out << "  ...\n";
      break;
    }
    out << "  " << r.estimator << " point " << r.point << " rep " << r.rep << ": " << r.failure << "\n";
  }
}

}  // namespace rdpca
