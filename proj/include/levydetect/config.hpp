#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "levydetect/detector.hpp"
#include "levydetect/eval.hpp"
#include "levydetect/model.hpp"

namespace levydetect {

struct DetectorBlock {
  DetectorConfig config = DetectorConfig::cusum_continuous(2.0);
  /// False-alarm budget for calibrate and compare.
  std::optional<double> gamma;
};

struct ExperimentBlock {
  Regime regime = Regime::InControl;
  std::vector<double> tau_grid{0.0, 1.0, 5.0};
  std::size_t dyadic_levels = 4;
  /// Coarsest convergence grid; 0 means 2^levels simulation steps.
  double delta0 = 0.0;
  std::vector<DetectorConfig> rules;
  double rel_tol = 0.02;
  /// Change-point for `simulate`; infinite means no change.
  double tau = kNever;
  /// Also report the zero-step extrapolation in `arl`.
  bool extrapolate = false;
};

struct OutputBlock {
  std::string directory = "out";
  bool dump_path = false;
  bool dump_llr = false;
  bool dump_ledger = false;
};

/// One experiment: everything but the model block has a default.
struct ExperimentConfig {
  LevySpec pre;
  LevySpec post;
  SimulationSettings simulation;
  DetectorBlock detector;
  ExperimentBlock experiment;
  OutputBlock output;
};

/// Throws ConfigError on missing or mistyped fields.
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Reads a config file. A summary.json artifact is accepted as well, in which
/// case its embedded "config" is used.
ExperimentConfig load_config(const std::string& path);

/// Fully resolved config; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const LevySpec& spec);
nlohmann::json to_json(const DetectorConfig& config);
nlohmann::json to_json(const EvalReport& report);

LevySpec parse_levy_spec(const nlohmann::json& doc);
DetectorConfig parse_detector(const nlohmann::json& doc);

RuleKind parse_rule(const std::string& name);
Regime parse_regime(const std::string& name);

}  // namespace levydetect
