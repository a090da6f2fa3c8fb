#include "rdpca/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rdpca {

using Json = nlohmann::ordered_json;

namespace {

void only_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidInput("config: " + where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) throw InvalidInput("config: unknown key '" + item.key() + "' in " + where);
  }
}

double num(const Json& v, const std::string& what) {
  if (!v.is_number()) throw InvalidInput("config: " + what + " must be a number");
  return v.get<double>();
}

Index count(const Json& v, const std::string& what) {
  if (!v.is_number_integer() && !(v.is_number() && v.get<double>() == std::floor(v.get<double>()))) {
    throw InvalidInput("config: " + what + " must be an integer");
  }
  return static_cast<Index>(v.get<double>());
}

std::string str(const Json& v, const std::string& what) {
  if (!v.is_string()) throw InvalidInput("config: " + what + " must be a string");
  return v.get<std::string>();
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(std::string("config: malformed JSON: ") + e.what());
  }
}

void apply_model(ModelSpec& model, const Json& obj) {
  only_keys(obj, {"kind", "nu", "shape_k", "c", "outliers", "link", "d", "lambda"}, "model");
  if (obj.contains("kind")) model.kind = parse_model_kind(str(obj["kind"], "model.kind"));
  if (obj.contains("nu")) model.nu = num(obj["nu"], "model.nu");
  if (obj.contains("shape_k")) model.shape_k = num(obj["shape_k"], "model.shape_k");
  if (obj.contains("c")) model.c = num(obj["c"], "model.c");
  if (obj.contains("outliers")) model.outliers = count(obj["outliers"], "model.outliers");
  if (obj.contains("link")) model.link = parse_link(str(obj["link"], "model.link"));
  if (obj.contains("d")) model.d = count(obj["d"], "model.d");
  if (obj.contains("lambda")) model.lambda = num(obj["lambda"], "model.lambda");
}

EstimatorSpec estimator_from(const Json& obj) {
  only_keys(obj, {"label", "kind", "alpha", "theta", "tau", "delta", "theta_scale", "unsquared_moment"},
            "estimator");
  EstimatorSpec e;
  if (!obj.contains("kind")) throw InvalidInput("config: estimator needs a kind");
  e.kind = parse_estimator_kind(str(obj["kind"], "estimator.kind"));
  if (obj.contains("alpha")) e.alpha = num(obj["alpha"], "estimator.alpha");
  if (obj.contains("theta") && !obj["theta"].is_null()) e.theta = num(obj["theta"], "estimator.theta");
  if (obj.contains("tau") && !obj["tau"].is_null()) e.tau = num(obj["tau"], "estimator.tau");
  if (obj.contains("delta")) e.delta = num(obj["delta"], "estimator.delta");
  if (obj.contains("theta_scale")) e.theta_scale = num(obj["theta_scale"], "estimator.theta_scale");
  if (obj.contains("unsquared_moment")) {
    if (!obj["unsquared_moment"].is_boolean()) throw InvalidInput("config: unsquared_moment must be boolean");
    e.unsquared_moment = obj["unsquared_moment"].get<bool>();
  }
  e.validate();
  return e;
}

void set_point_field(GridPoint& p, const std::string& key, const Json& v) {
  const std::string what = "grid." + key;
  if (key == "d") p.d = count(v, what);
  else if (key == "m") p.m = count(v, what);
  else if (key == "n") p.n = count(v, what);
  else if (key == "lambda") p.lambda = num(v, what);
  else if (key == "nu") p.nu = num(v, what);
  else if (key == "c") p.c = num(v, what);
  else if (key == "shape_k") p.shape_k = num(v, what);
  else if (key == "outliers") p.outliers = count(v, what);
  else throw InvalidInput("config: unknown grid key '" + key + "'");
}

GridPoint point_from(const GridPoint& base, const Json& obj) {
  if (!obj.is_object()) throw InvalidInput("config: grid points must be objects");
  GridPoint p = base;
  for (const auto& item : obj.items()) set_point_field(p, item.key(), item.value());
  return p;
}

void push_unique(std::vector<GridPoint>& grid, const GridPoint& p) {
  if (std::find(grid.begin(), grid.end(), p) == grid.end()) grid.push_back(p);
}

std::vector<GridPoint> grid_from(const Json& obj, const GridPoint& preset_base) {
  only_keys(obj, {"base", "panels", "product", "points", "total_n"}, "grid");
  GridPoint base = preset_base;
  if (obj.contains("base")) base = point_from(base, obj["base"]);
  std::vector<GridPoint> grid;

  if (obj.contains("panels")) {
    if (!obj["panels"].is_array()) throw InvalidInput("config: grid.panels must be a list");
    for (const auto& panel : obj["panels"]) {
      if (!panel.is_object()) throw InvalidInput("config: each panel must be an object");
      GridPoint fixed = base;
      std::string axis;
      for (const auto& item : panel.items()) {
        if (item.value().is_array()) {
          if (!axis.empty()) throw InvalidInput("config: a panel varies exactly one key");
          axis = item.key();
        } else {
          set_point_field(fixed, item.key(), item.value());
        }
      }
      if (axis.empty()) throw InvalidInput("config: a panel needs one list-valued key");
      for (const auto& v : panel[axis]) {
        GridPoint p = fixed;
        set_point_field(p, axis, v);
        push_unique(grid, p);
      }
    }
  }

  if (obj.contains("product")) {
    const Json& prod = obj["product"];
    if (!prod.is_object() || prod.empty()) throw InvalidInput("config: grid.product must be a non-empty object");
    std::vector<GridPoint> acc = {base};
    for (const auto& item : prod.items()) {
      if (!item.value().is_array() || item.value().empty()) {
        throw InvalidInput("config: grid.product." + item.key() + " must be a non-empty list");
      }
      std::vector<GridPoint> next;
      for (const auto& p : acc) {
        for (const auto& v : item.value()) {
          GridPoint q = p;
          set_point_field(q, item.key(), v);
          next.push_back(q);
        }
      }
      acc = std::move(next);
    }
    for (const auto& p : acc) push_unique(grid, p);
  }

  if (obj.contains("points")) {
    if (!obj["points"].is_array()) throw InvalidInput("config: grid.points must be a list");
    for (const auto& pt : obj["points"]) push_unique(grid, point_from(base, pt));
  }

  if (grid.empty()) grid.push_back(base);
  if (obj.contains("total_n")) {
    const Index total = count(obj["total_n"], "grid.total_n");
    for (auto& p : grid) p.n = total / p.m;
  }
  return grid;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentSpec parse_experiment_config(const std::string& text, Scenario scenario,
                                       std::optional<Scale> scale) {
  const Json doc = parse_json(text);
  only_keys(doc, {"scenario", "scale", "seed", "reps", "k", "model", "estimators", "grid"}, "document");
  if (doc.contains("scenario") && parse_scenario(str(doc["scenario"], "scenario")) != scenario) {
    throw InvalidInput("config: document is for scenario " + doc["scenario"].get<std::string>() +
                       ", not " + to_string(scenario));
  }
  if (!scale && doc.contains("scale")) scale = parse_scale(str(doc["scale"], "scale"));
  ExperimentSpec spec = preset(scenario, scale.value_or(Scale::Desk));

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) {
      throw InvalidInput("config: seed must be a non-negative integer");
    }
    spec.master_seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("reps")) spec.reps = static_cast<int>(count(doc["reps"], "reps"));
  if (doc.contains("k")) spec.k_target = count(doc["k"], "k");
  if (doc.contains("model")) apply_model(spec.model, doc["model"]);
  if (doc.contains("estimators")) {
    if (!doc["estimators"].is_array()) throw InvalidInput("config: estimators must be a list");
    spec.estimators.clear();
    for (const auto& e : doc["estimators"]) {
      LabeledEstimator le{e.contains("label") ? str(e["label"], "estimator.label") : "", estimator_from(e)};
      if (le.label.empty()) le.label = to_string(le.spec.kind);
      spec.estimators.push_back(std::move(le));
    }
  }
  if (doc.contains("grid")) {
    const GridPoint base = spec.grid.empty() ? GridPoint{} : spec.grid.front();
    spec.grid = grid_from(doc["grid"], base);
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_config(const std::filesystem::path& path, Scenario scenario,
                                      std::optional<Scale> scale) {
  return parse_experiment_config(read_text_file(path), scenario, scale);
}

EstimatorSpec parse_estimator_config(const std::string& text) { return estimator_from(parse_json(text)); }

DpcaConfig parse_dpca_config(const std::string& text) {
  const Json doc = parse_json(text);
  only_keys(doc, {"model", "d", "m", "n", "lambda", "k", "seed", "estimator", "input", "center"},
            "document");
  DpcaConfig cfg;
  if (doc.contains("model")) apply_model(cfg.model, doc["model"]);
  if (doc.contains("d")) cfg.model.d = count(doc["d"], "d");
  if (doc.contains("lambda")) cfg.model.lambda = num(doc["lambda"], "lambda");
  if (doc.contains("k")) cfg.model.k = count(doc["k"], "k");
  if (doc.contains("seed")) cfg.model.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("m")) cfg.m = count(doc["m"], "m");
  if (doc.contains("n")) cfg.n = count(doc["n"], "n");
  if (doc.contains("estimator")) cfg.estimator = estimator_from(doc["estimator"]);
  if (doc.contains("input")) cfg.input = str(doc["input"], "input");
  if (doc.contains("center")) cfg.center = doc["center"].get<bool>();
  if (cfg.m < 1) throw InvalidInput("config: m must be >= 1");
  if (!cfg.input) cfg.model.validate();
  return cfg;
}

DpcaConfig load_dpca_config(const std::filesystem::path& path) {
  return parse_dpca_config(read_text_file(path));
}

}  // namespace rdpca
