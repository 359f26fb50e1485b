#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "levydetect/detector.hpp"
#include "levydetect/errors.hpp"
#include "levydetect/eval.hpp"
#include "levydetect/likelihood.hpp"
#include "levydetect/model.hpp"
#include "levydetect/paths.hpp"

namespace py = pybind11;
using namespace levydetect;

PYBIND11_MODULE(_core, m) {
  m.doc() = "CUSUM detection of a change in the law of a Levy process";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<UnsupportedPairError>(m, "UnsupportedPairError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<ContractError>(m, "ContractError", error.ptr());
  py::register_exception<AlignmentError>(m, "AlignmentError", error.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<InfeasibleTargetError>(m, "InfeasibleTargetError", error.ptr());
  py::register_exception<UndefinedEstimateError>(m, "UndefinedEstimateError", error.ptr());
  py::register_exception<DegenerateRuleError>(m, "DegenerateRuleError", error.ptr());

  py::enum_<Family>(m, "Family")
      .value("BrownianDrift", Family::BrownianDrift)
      .value("CompoundPoisson", Family::CompoundPoisson)
      .value("JumpDiffusion", Family::JumpDiffusion)
      .value("GammaSubordinator", Family::GammaSubordinator);
  py::enum_<Condition>(m, "Condition")
      .value("None_", Condition::None)
      .value("EqualVolatility", Condition::EqualVolatility)
      .value("LevyMeasure", Condition::LevyMeasure)
      .value("Drift", Condition::Drift);

  py::class_<JumpDensity>(m, "JumpDensity")
      .def_static("gaussian", &JumpDensity::gaussian, py::arg("mean"), py::arg("sd"))
      .def_static("exponential", &JumpDensity::exponential, py::arg("rate"))
      .def_static("two_sided", &JumpDensity::two_sided, py::arg("rate_up"), py::arg("rate_down"),
                  py::arg("weight_up"))
      .def("pdf", &JumpDensity::pdf);

  py::class_<LevySpec>(m, "LevySpec")
      .def_static("brownian", &LevySpec::brownian, py::arg("sigma"), py::arg("drift"))
      .def_static("compound_poisson", &LevySpec::compound_poisson, py::arg("intensity"),
                  py::arg("jumps"), py::arg("linear_drift") = 0.0)
      .def_static("jump_diffusion", &LevySpec::jump_diffusion, py::arg("sigma"),
                  py::arg("linear_drift"), py::arg("intensity"), py::arg("jumps"))
      .def_static("gamma_subordinator", &LevySpec::gamma_subordinator, py::arg("activity"),
                  py::arg("scale"), py::arg("linear_drift") = 0.0)
      .def_readwrite("sigma", &LevySpec::sigma)
      .def_readwrite("drift_b", &LevySpec::drift_b)
      .def_readonly("family", &LevySpec::family)
      .def("linear_drift", &LevySpec::linear_drift)
      .def("levy_density", &LevySpec::levy_density);

  py::class_<DriftConstants>(m, "DriftConstants")
      .def_readonly("beta_pre", &DriftConstants::beta_pre)
      .def_readonly("beta_post", &DriftConstants::beta_post)
      .def_readonly("compensator_rate", &DriftConstants::compensator_rate);

  py::class_<ChangeModel>(m, "ChangeModel")
      .def_property_readonly("admissible", &ChangeModel::admissible)
      .def_property_readonly("violated", [](const ChangeModel& c) { return c.status().violated; })
      .def_property_readonly("message", [](const ChangeModel& c) { return c.status().message; })
      .def_property_readonly("alpha", &ChangeModel::alpha)
      .def_property_readonly("drift", &ChangeModel::drift)
      .def("u_drift_pre", &ChangeModel::u_drift_pre)
      .def("u_drift_post", &ChangeModel::u_drift_post)
      .def("digest", &ChangeModel::digest);

  m.def("build_change_model", &build_change_model, py::arg("pre"), py::arg("post"));
  m.def("phi_eval", &phi_eval, py::arg("model"), py::arg("x"));
  m.def("drift_constants_by_quadrature", &drift_constants_by_quadrature, py::arg("model"));

  py::class_<RngStream>(m, "RngStream")
      .def(py::init([](std::uint64_t seed, std::uint64_t stream) {
             return RngStream{seed, stream};
           }),
           py::arg("master_seed"), py::arg("stream_id") = 0)
      .def_readonly("master_seed", &RngStream::master_seed)
      .def_readonly("stream_id", &RngStream::stream_id);

  py::class_<SamplePath>(m, "SamplePath")
      .def_readonly("grid_dt", &SamplePath::grid_dt)
      .def_readonly("horizon", &SamplePath::horizon)
      .def_readonly("change_point", &SamplePath::change_point)
      .def_readonly("values", &SamplePath::values)
      .def_property_readonly("jump_sizes", [](const SamplePath& p) {
        std::vector<double> out;
        for (const Jump& j : p.jumps) out.push_back(j.size);
        return out;
      });

  m.def("sample_changed_path", &sample_changed_path, py::arg("model"), py::arg("tau"),
        py::arg("horizon"), py::arg("grid_dt"), py::arg("rng"));

  py::class_<LLRPath>(m, "LLRPath")
      .def_readonly("grid_dt", &LLRPath::grid_dt)
      .def_readonly("u_values", &LLRPath::u_values);
  m.def("llr_path", [](const ChangeModel& model, const SamplePath& p) { return llr_path(model, p); },
        py::arg("model"), py::arg("path"));

  py::enum_<RuleKind>(m, "RuleKind")
      .value("CusumContinuous", RuleKind::CusumContinuous)
      .value("CusumGrid", RuleKind::CusumGrid)
      .value("CusumIid", RuleKind::CusumIid)
      .value("ShiryaevRoberts", RuleKind::ShiryaevRoberts)
      .value("FixedTime", RuleKind::FixedTime);

  py::class_<DetectorConfig>(m, "DetectorConfig")
      .def_static("cusum_continuous", &DetectorConfig::cusum_continuous, py::arg("h_bar"))
      .def_static("cusum_grid", &DetectorConfig::cusum_grid, py::arg("delta"), py::arg("h_bar"))
      .def_static("shiryaev_roberts", &DetectorConfig::shiryaev_roberts, py::arg("delta"),
                  py::arg("log_threshold"))
      .def_static("fixed_time", &DetectorConfig::fixed_time, py::arg("delta"), py::arg("steps"))
      .def_readwrite("rule", &DetectorConfig::rule)
      .def_readwrite("log_barrier", &DetectorConfig::log_barrier)
      .def_readwrite("delta", &DetectorConfig::delta)
      .def_readwrite("strict", &DetectorConfig::strict)
      .def("name", &DetectorConfig::name);

  py::class_<StopResult>(m, "StopResult")
      .def_readonly("stop_time", &StopResult::stop_time)
      .def_readonly("censored", &StopResult::censored)
      .def_readonly("stat_at_stop", &StopResult::stat_at_stop)
      .def_readonly("steps_taken", &StopResult::steps_taken);

  m.def("cusum_update",
        [](double log_stat, double log_l) { return cusum_update({log_stat, 0}, log_l).log_stat; },
        py::arg("log_stat"), py::arg("log_l"));
  m.def("drawup", [](const std::vector<double>& u) { return drawup(u); }, py::arg("u"));
  m.def("run_rule", [](const DetectorConfig& c, const LLRPath& llr) { return run_rule(c, llr); },
        py::arg("config"), py::arg("llr"));

  py::enum_<Regime>(m, "Regime")
      .value("InControl", Regime::InControl)
      .value("OutOfControl", Regime::OutOfControl);

  py::class_<SimulationSettings>(m, "SimulationSettings")
      .def(py::init([](double grid_dt, double horizon, std::size_t n_rep, std::uint64_t seed,
                       unsigned threads) {
             return SimulationSettings{grid_dt, horizon, n_rep, seed, threads};
           }),
           py::arg("grid_dt") = 1e-3, py::arg("horizon") = 100.0, py::arg("n_rep") = 10000,
           py::arg("master_seed") = 1, py::arg("threads") = 1)
      .def_readwrite("grid_dt", &SimulationSettings::grid_dt)
      .def_readwrite("horizon", &SimulationSettings::horizon)
      .def_readwrite("n_rep", &SimulationSettings::n_rep)
      .def_readwrite("master_seed", &SimulationSettings::master_seed)
      .def_readwrite("threads", &SimulationSettings::threads);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("label", &EvalReport::label)
      .def_readonly("estimate", &EvalReport::estimate)
      .def_readonly("std_error", &EvalReport::std_error)
      .def_readonly("n_rep", &EvalReport::n_rep)
      .def_readonly("n_censored", &EvalReport::n_censored)
      .def_readonly("horizon", &EvalReport::horizon)
      .def_readonly("flags", &EvalReport::flags)
      .def_readonly("usable", &EvalReport::usable);

  py::class_<MartingaleCheck>(m, "MartingaleCheck")
      .def_readonly("report", &MartingaleCheck::report)
      .def_readonly("z_score", &MartingaleCheck::z_score)
      .def_readonly("passed", &MartingaleCheck::passed);
  m.def("martingale_check", &martingale_check, py::arg("model"), py::arg("delta"),
        py::arg("n_rep"), py::arg("master_seed"), py::arg("grid_dt") = 0.0,
        py::arg("threads") = 1);

  py::class_<Calibration>(m, "Calibration")
      .def_readonly("h_bar", &Calibration::log_barrier)
      .def_readonly("report", &Calibration::report)
      .def_readonly("converged", &Calibration::converged)
      .def_readonly("rel_error", &Calibration::rel_error);

  py::class_<LordenResult>(m, "LordenResult")
      .def_readonly("tau_grid", &LordenResult::tau_grid)
      .def_readonly("per_tau", &LordenResult::per_tau)
      .def_property_readonly("worst", &LordenResult::worst);

  py::class_<LowerBound>(m, "LowerBound")
      .def_readonly("report", &LowerBound::report)
      .def_readonly("mean_numerator", &LowerBound::mean_numerator)
      .def_readonly("mean_denominator", &LowerBound::mean_denominator);

  m.def("estimate_arl",
        py::overload_cast<const ChangeModel&, const DetectorConfig&, Regime,
                          const SimulationSettings&>(&estimate_arl),
        py::arg("model"), py::arg("config"), py::arg("regime"), py::arg("settings"),
        py::call_guard<py::gil_scoped_release>());
  m.def("calibrate_barrier", &calibrate_barrier, py::arg("model"), py::arg("rule"),
        py::arg("gamma"), py::arg("rel_tol"), py::arg("settings"),
        py::call_guard<py::gil_scoped_release>());
  m.def("lorden_delay",
        [](const ChangeModel& model, const DetectorConfig& c, const std::vector<double>& taus,
           const SimulationSettings& s) { return lorden_delay(model, c, taus, s); },
        py::arg("model"), py::arg("config"), py::arg("tau_grid"), py::arg("settings"),
        py::call_guard<py::gil_scoped_release>());
  m.def("lower_bound_ratio", &lower_bound_ratio, py::arg("model"), py::arg("config"),
        py::arg("settings"), py::call_guard<py::gil_scoped_release>());
}
