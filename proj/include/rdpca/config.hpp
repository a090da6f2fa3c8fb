#pragma once

// JSON configuration for experiments and single runs.
//
// Experiment document (every key optional; unknown keys are rejected):
//   {
//     "scenario": "tail-sweep",          must match the command line
//     "scale": "desk",                   preset the document starts from
//     "seed": 7, "reps": 20, "k": 3,
//     "model": {"kind": "spiked-t", "nu": 5, "shape_k": 4.1, "link": "square"},
//     "estimators": [{"label": "RDP", "kind": "truncation", "tau": 12.5,
//                     "theta": 0.01, "alpha": 2, "delta": 0.1,
//                     "theta_scale": 1, "unsquared_moment": false}],
//     "grid": {
//       "base":    {"d": 100, "m": 10, "n": 1000, "lambda": 50},
//       "panels":  [{"d": [50, 100, 200]}, {"n": [250, 500], "m": 20}],
//       "product": {"nu": [4.1, 5], "n": [200, 400]},
//       "points":  [{"d": 50, "m": 5}],
//       "total_n": 5000
//     }
//   }
// A "grid" key replaces the preset grid. Panels vary the single list-valued
// key around the base (other keys override the base); product takes the
// Cartesian product in key order; points are merged onto the base. With
// total_n every point gets n = total_n / m.

#include "rdpca/experiment.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace rdpca {

/// Parses an experiment document. `scale` (from the command line) wins over
/// the document's "scale"; both absent means desk.
ExperimentSpec parse_experiment_config(const std::string& text, Scenario scenario,
                                       std::optional<Scale> scale = std::nullopt);

ExperimentSpec load_experiment_config(const std::filesystem::path& path, Scenario scenario,
                                      std::optional<Scale> scale = std::nullopt);

/// {"kind": ..., "alpha": ..., ...} as in the experiment "estimators" entries
/// (the label is ignored).
EstimatorSpec parse_estimator_config(const std::string& text);

/// Single distributed run.
///   {"model": {...}, "d": 100, "m": 10, "n": 1000, "lambda": 50, "k": 3,
///    "seed": 1, "estimator": {...}, "input": "data.csv", "center": false}
/// With "input" the file rows are split into m contiguous shards.
struct DpcaConfig {
  ModelSpec model;
  Index m = 10;
  Index n = 1000;
  EstimatorSpec estimator;
  std::optional<std::filesystem::path> input;
  bool center = false;
};

DpcaConfig load_dpca_config(const std::filesystem::path& path);
DpcaConfig parse_dpca_config(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace rdpca
