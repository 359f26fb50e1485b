#include "levydetect/config.hpp"

#include <cmath>
#include <fstream>

#include "levydetect/errors.hpp"

namespace levydetect {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ConfigError(std::string("missing field '") + key + "'");
  }
  return obj.at(key);
}

template <class T>
T field(const json& obj, const char* key, T fallback) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
T field(const json& obj, const char* key) {
  try {
    return require(obj, key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

// Infinity is written as the string "inf".
double real_or_inf(const json& obj, const char* key, double fallback) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return fallback;
  const json& v = obj.at(key);
  if (v.is_string() && (v == "inf" || v == "never")) return kNever;
  if (!v.is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

JumpDensity parse_jumps(const json& doc) {
  const std::string law = field<std::string>(doc, "law");
  if (law == "gaussian") {
    return JumpDensity::gaussian(field<double>(doc, "mean", 0.0), field<double>(doc, "sd", 1.0));
  }
  if (law == "exponential") return JumpDensity::exponential(field<double>(doc, "rate", 1.0));
  if (law == "two_sided") {
    return JumpDensity::two_sided(field<double>(doc, "rate_up", 1.0),
                                  field<double>(doc, "rate_down", 1.0),
                                  field<double>(doc, "weight_up", 0.5));
  }
  throw ConfigError("unknown jump law '" + law + "'");
}

json jumps_json(const JumpDensity& j) {
  switch (j.law) {
    case JumpLaw::Gaussian: return {{"law", "gaussian"}, {"mean", j.mean}, {"sd", j.sd}};
    case JumpLaw::Exponential: return {{"law", "exponential"}, {"rate", j.rate}};
    case JumpLaw::TwoSidedExponential:
      return {{"law", "two_sided"},
              {"rate_up", j.rate_up},
              {"rate_down", j.rate_down},
              {"weight_up", j.weight_up}};
  }
  return {};
}

std::string family_name(Family f) {
  switch (f) {
    case Family::BrownianDrift: return "brownian";
    case Family::CompoundPoisson: return "compound_poisson";
    case Family::JumpDiffusion: return "jump_diffusion";
    case Family::GammaSubordinator: return "gamma";
  }
  return "";
}

}  // namespace

RuleKind parse_rule(const std::string& name) {
  if (name == "cusum_continuous" || name == "cusum") return RuleKind::CusumContinuous;
  if (name == "cusum_grid") return RuleKind::CusumGrid;
  if (name == "cusum_iid") return RuleKind::CusumIid;
  if (name == "shiryaev_roberts" || name == "sr") return RuleKind::ShiryaevRoberts;
  if (name == "fixed_time") return RuleKind::FixedTime;
  throw ConfigError("unknown rule '" + name + "'");
}

Regime parse_regime(const std::string& name) {
  if (name == "in_control" || name == "tau=inf") return Regime::InControl;
  if (name == "out_of_control" || name == "tau=0") return Regime::OutOfControl;
  throw ConfigError("unknown regime '" + name + "'");
}

LevySpec parse_levy_spec(const json& doc) {
  if (!doc.is_object()) throw ConfigError("Levy specification must be an object");
  const std::string family = field<std::string>(doc, "family");
  const double linear = field<double>(doc, "linear_drift", 0.0);
  LevySpec spec;
  if (family == "brownian") {
    spec = LevySpec::brownian(field<double>(doc, "sigma", 1.0), linear);
  } else if (family == "compound_poisson") {
    spec = LevySpec::compound_poisson(field<double>(doc, "intensity"),
                                      parse_jumps(require(doc, "jumps")), linear);
  } else if (family == "jump_diffusion") {
    spec = LevySpec::jump_diffusion(field<double>(doc, "sigma", 1.0), linear,
                                    field<double>(doc, "intensity"),
                                    parse_jumps(require(doc, "jumps")));
  } else if (family == "gamma") {
    spec = LevySpec::gamma_subordinator(field<double>(doc, "activity"),
                                        field<double>(doc, "scale"), linear);
  } else {
    throw ConfigError("unknown family '" + family + "'");
  }
  if (doc.contains("sigma") && family != "brownian" && family != "jump_diffusion") {
    spec.sigma = field<double>(doc, "sigma");
  }
  if (doc.contains("drift")) {
    if (doc.contains("linear_drift")) {
      throw ConfigError("give either 'drift' or 'linear_drift', not both");
    }
    spec.drift_b = field<double>(doc, "drift");
  }
  return spec;
}

json to_json(const LevySpec& spec) {
  json out = {{"family", family_name(spec.family)}, {"sigma", spec.sigma}, {"drift", spec.drift_b}};
  if (spec.poisson) {
    out["intensity"] = spec.poisson->intensity;
    out["jumps"] = jumps_json(spec.poisson->jumps);
  }
  if (spec.gamma) {
    out["activity"] = spec.gamma->activity;
    out["scale"] = spec.gamma->scale;
  }
  return out;
}

DetectorConfig parse_detector(const json& doc) {
  if (!doc.is_object()) throw ConfigError("detector must be an object");
  DetectorConfig c;
  c.rule = parse_rule(field<std::string>(doc, "rule", "cusum_continuous"));
  c.log_barrier = field<double>(doc, "h_bar", 2.0);
  c.delta = field<double>(doc, "delta", 0.0);
  c.fixed_steps = field<std::size_t>(doc, "fixed_steps", 0);
  c.strict = field<bool>(doc, "strict", false);
  return c;
}

json to_json(const DetectorConfig& c) {
  return {{"rule", to_string(c.rule)},
          {"h_bar", c.log_barrier},
          {"delta", c.delta},
          {"fixed_steps", c.fixed_steps},
          {"strict", c.strict}};
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  const json& model = require(doc, "model");
  c.pre = parse_levy_spec(require(model, "pre"));
  c.post = parse_levy_spec(require(model, "post"));

  const json sim = doc.value("simulation", json::object());
  c.simulation.horizon = field<double>(sim, "horizon", c.simulation.horizon);
  c.simulation.grid_dt = field<double>(sim, "grid_dt", c.simulation.grid_dt);
  c.simulation.n_rep = field<std::size_t>(sim, "n_rep", c.simulation.n_rep);
  c.simulation.master_seed = field<std::uint64_t>(sim, "master_seed", c.simulation.master_seed);
  c.simulation.threads = field<unsigned>(sim, "threads", c.simulation.threads);

  const json det = doc.value("detector", json::object());
  c.detector.config = parse_detector(det);
  if (det.contains("gamma") && !det.at("gamma").is_null()) {
    c.detector.gamma = field<double>(det, "gamma");
  }

  const json exp = doc.value("experiment", json::object());
  c.experiment.regime = parse_regime(field<std::string>(exp, "regime", "in_control"));
  c.experiment.tau_grid = field<std::vector<double>>(exp, "tau_grid", c.experiment.tau_grid);
  c.experiment.dyadic_levels = field<std::size_t>(exp, "dyadic_levels", c.experiment.dyadic_levels);
  c.experiment.delta0 = field<double>(exp, "delta0", c.experiment.delta0);
  c.experiment.rel_tol = field<double>(exp, "rel_tol", c.experiment.rel_tol);
  c.experiment.tau = real_or_inf(exp, "tau", kNever);
  c.experiment.extrapolate = field<bool>(exp, "extrapolate", false);
  if (exp.contains("rules")) {
    const json& rules = exp.at("rules");
    if (!rules.is_array()) throw ConfigError("field 'rules' must be an array");
    for (const json& r : rules) c.experiment.rules.push_back(parse_detector(r));
  }

  const json out = doc.value("output", json::object());
  c.output.directory = field<std::string>(out, "directory", c.output.directory);
  c.output.dump_path = field<bool>(out, "dump_path", false);
  c.output.dump_llr = field<bool>(out, "dump_llr", false);
  c.output.dump_ledger = field<bool>(out, "dump_ledger", false);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (doc.is_object() && doc.contains("config") && !doc.contains("model")) {
    return parse_config(doc.at("config"));
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json rules = json::array();
  for (const DetectorConfig& r : c.experiment.rules) rules.push_back(to_json(r));
  json det = to_json(c.detector.config);
  det["gamma"] = c.detector.gamma ? json(*c.detector.gamma) : json(nullptr);
  return {
      {"model", {{"pre", to_json(c.pre)}, {"post", to_json(c.post)}}},
      {"simulation",
       {{"horizon", c.simulation.horizon},
        {"grid_dt", c.simulation.grid_dt},
        {"n_rep", c.simulation.n_rep},
        {"master_seed", c.simulation.master_seed},
        {"threads", c.simulation.threads}}},
      {"detector", det},
      {"experiment",
       {{"regime", to_string(c.experiment.regime)},
        {"tau_grid", c.experiment.tau_grid},
        {"dyadic_levels", c.experiment.dyadic_levels},
        {"delta0", c.experiment.delta0},
        {"rules", rules},
        {"rel_tol", c.experiment.rel_tol},
        {"tau", std::isinf(c.experiment.tau) ? json("inf") : json(c.experiment.tau)},
        {"extrapolate", c.experiment.extrapolate}}},
      {"output",
       {{"directory", c.output.directory},
        {"dump_path", c.output.dump_path},
        {"dump_llr", c.output.dump_llr},
        {"dump_ledger", c.output.dump_ledger}}},
  };
}

json to_json(const EvalReport& r) {
  return {{"label", r.label},
          {"estimate", r.estimate},
          {"std_error", r.std_error},
          {"n_rep", r.n_rep},
          {"n_censored", r.n_censored},
          {"horizon", r.horizon},
          {"usable", r.usable},
          {"flags", r.flags},
          {"provenance",
           {{"master_seed", r.provenance.master_seed},
            {"grid_dt", r.provenance.grid_dt},
            {"delta", r.provenance.delta},
            {"rule", r.provenance.rule},
            {"model_digest", r.provenance.model_digest}}}};
}

}  // namespace levydetect
