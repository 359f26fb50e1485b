#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "levydetect/config.hpp"
#include "levydetect/detector.hpp"
#include "levydetect/errors.hpp"
#include "levydetect/eval.hpp"
#include "levydetect/likelihood.hpp"
#include "levydetect/paths.hpp"

using namespace levydetect;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kParse = 2, kInadmissible = 3, kNumerical = 4 };

struct Inadmissible : Error {
  using Error::Error;
};

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join_flags(const std::vector<std::string>& flags) {
  std::string s;
  for (const auto& f : flags) s += (s.empty() ? "" : ";") + f;
  return s;
}

const char* kReportHeader =
    "label,rule,delta,h_bar,tau,estimate,std_error,n_rep,n_censored,horizon,master_seed,grid_dt,"
    "flags\n";

void report_row(std::ostream& os, const EvalReport& r, double h_bar, double tau) {
  os << r.label << ',' << r.provenance.rule << ',' << num(r.provenance.delta) << ','
     << num(h_bar) << ',' << (std::isnan(tau) ? std::string() : num(tau)) << ',' << num(r.estimate) << ',' << num(r.std_error) << ','
     << r.n_rep << ',' << r.n_censored << ',' << num(r.horizon) << ','
     << r.provenance.master_seed << ',' << num(r.provenance.grid_dt) << ','
     << join_flags(r.flags) << '\n';
}

class Run {
 public:
  Run(std::string command, const Options& opt) : command_(std::move(command)) {
    config_ = load_config(opt.config_path);
    if (opt.seed) config_.simulation.master_seed = *opt.seed;
    if (opt.threads) config_.simulation.threads = *opt.threads;
    if (opt.out) config_.output.directory = *opt.out;
    summary_["command"] = command_;
    summary_["master_seed"] = config_.simulation.master_seed;
    summary_["config"] = to_json(config_);
  }

  const ExperimentConfig& config() const { return config_; }
  json& results() { return summary_["results"]; }
  std::ostringstream& report() { return report_; }

  ChangeModel model() const { return build_change_model(config_.pre, config_.post); }

  ChangeModel admissible_model() {
    ChangeModel m = model();
    summary_["admissible"] = m.admissible();
    summary_["model_digest"] = m.digest();
    if (!m.admissible()) {
      summary_["violated"] = to_string(m.status().violated);
      summary_["message"] = m.status().message;
      write();
      throw Inadmissible(m.status().message);
    }
    return m;
  }

  std::filesystem::path file(const std::string& name) const {
    return std::filesystem::path(config_.output.directory) / name;
  }

  void write() {
    std::filesystem::create_directories(config_.output.directory);
    std::ofstream(file("summary.json")) << summary_.dump(2) << '\n';
    if (!report_.str().empty()) std::ofstream(file("report.csv")) << report_.str();
  }

 private:
  std::string command_;
  ExperimentConfig config_;
  json summary_;
  std::ostringstream report_;
};

void print_report(const EvalReport& r) {
  std::printf("  %-28s %12.6g +- %-10.3g n=%zu censored=%zu %s\n", r.label.c_str(), r.estimate,
              r.std_error, r.n_rep, r.n_censored, join_flags(r.flags).c_str());
}

int cmd_validate(Run& run) {
  const ChangeModel m = run.model();
  json& res = run.results();
  res["admissible"] = m.admissible();
  res["model_digest"] = m.digest();
  if (m.admissible()) {
    res["alpha"] = m.alpha();
    res["u_drift_pre"] = m.u_drift_pre();
    res["u_drift_post"] = m.u_drift_post();
    if (m.drift()) {
      res["beta_pre"] = m.drift()->beta_pre;
      res["beta_post"] = m.drift()->beta_post;
      res["compensator_rate"] = m.drift()->compensator_rate;
    }
    std::printf("admissible: %s\n", m.digest().c_str());
    run.write();
    return kOk;
  }
  res["violated"] = to_string(m.status().violated);
  res["message"] = m.status().message;
  run.write();
  std::fprintf(stderr, "inadmissible: %s\n", m.status().message.c_str());
  return kInadmissible;
}

int cmd_simulate(Run& run) {
  const ChangeModel m = run.admissible_model();
  const ExperimentConfig& c = run.config();
  const RngStream stream{c.simulation.master_seed, stream_id_for(arms::kSimulate, 0)};
  const SamplePath path = sample_changed_path(m, c.experiment.tau, c.simulation.horizon,
                                              c.simulation.grid_dt, stream);
  const LLRPath llr = llr_path(m, path);
  const DetectorConfig rule = c.detector.config;
  const StopResult stop = run_rule(rule, llr);
  std::optional<double> tau_hat;
  if (!stop.censored && rule.is_cusum()) {
    tau_hat = mle_changepoint(statistic_trace(rule, llr), stop, rule.monitor_step(path.grid_dt));
  }

  std::filesystem::create_directories(c.output.directory);
  std::ofstream(run.file("path_dump.csv")) << [&] {
    std::ostringstream os;
    write_path_csv(os, path);
    return os.str();
  }();
  if (c.output.dump_ledger) {
    std::ofstream os(run.file("ledger_dump.csv"));
    write_ledger_csv(os, path);
  }
  if (c.output.dump_llr) {
    std::ofstream os(run.file("llr_dump.csv"));
    os << "t,u\n";
    for (std::size_t i = 0; i < llr.u_values.size(); ++i) {
      os << num(static_cast<double>(i) * llr.grid_dt) << ',' << num(llr.u_values[i]) << '\n';
    }
  }
  run.report() << "rule,h_bar,delta,stop_time,censored,stat_at_stop,tau_hat,seed,stream_id\n"
               << to_string(rule.rule) << ',' << num(rule.log_barrier) << ','
               << num(rule.monitor_step(path.grid_dt)) << ',' << num(stop.stop_time) << ','
               << (stop.censored ? 1 : 0) << ',' << num(stop.stat_at_stop) << ','
               << (tau_hat ? num(*tau_hat) : std::string()) << ',' << stream.master_seed << ','
               << stream.stream_id << '\n';
  json& res = run.results();
  res["stop_time"] = stop.stop_time;
  res["censored"] = stop.censored;
  res["change_point"] = std::isinf(path.change_point) ? json("inf") : json(path.change_point);
  res["jumps_recorded"] = path.jumps.size();
  if (tau_hat) res["tau_hat"] = *tau_hat;
  run.write();
  std::printf("simulated %zu steps; stop at %.6g%s\n", path.steps(), stop.stop_time,
              stop.censored ? " (censored)" : "");
  return kOk;
}

int cmd_arl(Run& run) {
  const ChangeModel m = run.admissible_model();
  const ExperimentConfig& c = run.config();
  const DetectorConfig& rule = c.detector.config;
  run.report() << kReportHeader;
  const EvalReport r = estimate_arl(m, rule, c.experiment.regime, c.simulation);
  report_row(run.report(), r, rule.log_barrier, NAN);
  run.results()["arl"] = to_json(r);
  print_report(r);
  if (c.experiment.extrapolate) {
    const Extrapolation ex =
        extrapolated_arl(m, rule.log_barrier, c.experiment.regime, c.simulation);
    for (const EvalReport& lvl : ex.levels) report_row(run.report(), lvl, rule.log_barrier, NAN);
    report_row(run.report(), ex.extrapolated, rule.log_barrier, NAN);
    run.results()["extrapolated"] = to_json(ex.extrapolated);
    print_report(ex.extrapolated);
  }
  run.write();
  return kOk;
}

double require_gamma(const ExperimentConfig& c) {
  if (!c.detector.gamma) throw ConfigError("detector.gamma is required");
  return *c.detector.gamma;
}

int cmd_calibrate(Run& run) {
  const ChangeModel m = run.admissible_model();
  const ExperimentConfig& c = run.config();
  const Calibration cal =
      calibrate_barrier(m, c.detector.config, require_gamma(c), c.experiment.rel_tol, c.simulation);
  run.report() << kReportHeader;
  report_row(run.report(), cal.report, cal.log_barrier, NAN);
  json& res = run.results();
  res["h_bar"] = cal.log_barrier;
  res["gamma"] = require_gamma(c);
  res["rel_error"] = cal.rel_error;
  res["converged"] = cal.converged;
  res["probes"] = cal.probes;
  res["report"] = to_json(cal.report);
  run.write();
  std::printf("h_bar = %.6f (ARL %.4f, rel. error %.4f)\n", cal.log_barrier, cal.report.estimate,
              cal.rel_error);
  return cal.converged ? kOk : kNumerical;
}

void lorden_rows(std::ostream& os, const LordenResult& lr, double h_bar) {
  for (std::size_t i = 0; i < lr.per_tau.size(); ++i) {
    report_row(os, lr.per_tau[i], h_bar, lr.tau_grid[i]);
  }
}

int cmd_lorden(Run& run) {
  const ChangeModel m = run.admissible_model();
  const ExperimentConfig& c = run.config();
  const LordenResult lr = lorden_delay(m, c.detector.config, c.experiment.tau_grid, c.simulation);
  run.report() << kReportHeader;
  lorden_rows(run.report(), lr, c.detector.config.log_barrier);
  json per = json::array();
  for (const auto& r : lr.per_tau) {
    per.push_back(to_json(r));
    print_report(r);
  }
  run.results()["per_tau"] = per;
  run.results()["worst"] = to_json(lr.worst());
  run.results()["worst_tau"] = lr.tau_grid[lr.worst_index];
  run.write();
  return kOk;
}

int cmd_lowerbound(Run& run) {
  const ChangeModel m = run.admissible_model();
  const ExperimentConfig& c = run.config();
  const LowerBound lb = lower_bound_ratio(m, c.detector.config, c.simulation);
  run.report() << kReportHeader;
  report_row(run.report(), lb.report, c.detector.config.log_barrier, NAN);
  run.results()["lower_bound"] = to_json(lb.report);
  run.results()["mean_numerator"] = lb.mean_numerator;
  run.results()["mean_denominator"] = lb.mean_denominator;
  print_report(lb.report);
  run.write();
  return kOk;
}

int cmd_converge(Run& run) {
  const ChangeModel m = run.admissible_model();
  const ExperimentConfig& c = run.config();
  const std::size_t levels = c.experiment.dyadic_levels;
  const double delta0 = c.experiment.delta0 > 0.0
                            ? c.experiment.delta0
                            : std::ldexp(c.simulation.grid_dt, static_cast<int>(levels));
  const ConvergenceStudy st = convergence_study(m, c.detector.config.log_barrier, levels, delta0,
                                                c.experiment.regime, c.simulation);
  std::ostream& os = run.report();
  os << "level,delta,mean_stop,stop_se,mean_gap,gap_se,n_rep,n_censored\n";
  for (std::size_t l = 0; l < st.levels.size(); ++l) {
    const auto& lv = st.levels[l];
    os << l << ',' << num(lv.delta) << ',' << num(lv.stop.estimate) << ','
       << num(lv.stop.std_error) << ',' << num(lv.gap.estimate) << ',' << num(lv.gap.std_error)
       << ',' << lv.stop.n_rep << ',' << lv.stop.n_censored << '\n';
    std::printf("  delta=%-10.4g mean stop %.6f  gap %.6f\n", lv.delta, lv.stop.estimate,
                lv.gap.estimate);
  }
  os << "stride1," << num(c.simulation.grid_dt) << ',' << num(st.reference.estimate) << ','
     << num(st.reference.std_error) << ",0,0," << st.reference.n_rep << ','
     << st.reference.n_censored << '\n';
  json& res = run.results();
  res["n_rep"] = st.n_rep;
  res["n_monotone"] = st.n_monotone;
  res["gaps_decreasing"] = st.gaps_decreasing;
  res["convention_disagreements"] = st.convention_disagreements;
  res["reference"] = to_json(st.reference);
  run.write();
  std::printf("pathwise monotone on %zu/%zu paths; gaps decreasing: %s\n", st.n_monotone, st.n_rep,
              st.gaps_decreasing ? "yes" : "no");
  return kOk;
}

int cmd_compare(Run& run) {
  const ChangeModel m = run.admissible_model();
  const ExperimentConfig& c = run.config();
  std::vector<DetectorConfig> rules = c.experiment.rules;
  if (rules.empty()) rules.push_back(c.detector.config);
  const Comparison cmp = compare(m, require_gamma(c), rules, c.experiment.rel_tol,
                                 c.experiment.tau_grid, c.simulation);
  std::ostream& os = run.report();
  os << "rule,delta,h_bar,gamma_achieved,gamma_se,worst_delay,worst_delay_se,worst_tau,flags\n";
  json rows = json::array();
  for (const ComparisonRow& row : cmp.rows) {
    json j = {{"rule", to_json(row.config)}, {"flags", row.flags}};
    os << row.config.name() << ',' << num(row.config.delta) << ','
       << num(row.config.log_barrier) << ',';
    if (row.calibration && row.lorden) {
      const EvalReport& w = row.lorden->worst();
      os << num(row.calibration->report.estimate) << ','
         << num(row.calibration->report.std_error) << ',' << num(w.estimate) << ','
         << num(w.std_error) << ',' << num(row.lorden->tau_grid[row.lorden->worst_index]);
      j["gamma_achieved"] = to_json(row.calibration->report);
      j["worst_delay"] = to_json(w);
      std::printf("  %-28s gamma %.4f  worst delay %.4f +- %.4f\n", row.config.name().c_str(),
                  row.calibration->report.estimate, w.estimate, w.std_error);
    } else {
      os << ",,,,";
    }
    os << ',' << join_flags(row.flags) << '\n';
    rows.push_back(j);
  }
  run.results()["rows"] = rows;
  run.results()["cusum_dominates"] =
      cmp.cusum_dominates ? json(*cmp.cusum_dominates) : json(nullptr);
  run.write();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quickest detection of a change in a Levy process"};
  app.require_subcommand(1);
  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"validate", "check the equivalence conditions of the model pair"},
      {"simulate", "simulate one path, its log-likelihood ratio and the stop"},
      {"arl", "estimate the average run length"},
      {"calibrate", "find the barrier matching a false-alarm budget"},
      {"lorden", "detection delay after changes on a tau grid"},
      {"lowerbound", "lower-bound functional of a grid rule"},
      {"converge", "nested dyadic grids against the stride-1 rule"},
      {"compare", "rules calibrated to a common budget and their delays"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", opt.seed, "master seed, overrides the config");
    sub->add_option("--threads", opt.threads, "worker threads");
    sub->add_option("--out", opt.out, "output directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kParse;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    Run run(command, opt);
    if (command == "validate") return cmd_validate(run);
    if (command == "simulate") return cmd_simulate(run);
    if (command == "arl") return cmd_arl(run);
    if (command == "calibrate") return cmd_calibrate(run);
    if (command == "lorden") return cmd_lorden(run);
    if (command == "lowerbound") return cmd_lowerbound(run);
    if (command == "converge") return cmd_converge(run);
    if (command == "compare") return cmd_compare(run);
  } catch (const Inadmissible& e) {
    std::fprintf(stderr, "error[inadmissible]: %s\n", e.what());
    return kInadmissible;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error[config]: %s\n", e.what());
    return kParse;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error[config]: %s\n", e.what());
    return kParse;
  } catch (const AlignmentError& e) {
    std::fprintf(stderr, "error[config]: %s\n", e.what());
    return kParse;
  } catch (const UnsupportedPairError& e) {
    std::fprintf(stderr, "error[inadmissible]: %s\n", e.what());
    return kInadmissible;
  } catch (const ContractError& e) {
    std::fprintf(stderr, "error[contract]: %s\n", e.what());
    return kOther;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error[numerical]: %s (residual %g)\n", e.what(), e.residual());
    return kNumerical;
  } catch (const Error& e) {
    std::fprintf(stderr, "error[other]: %s\n", e.what());
    return kOther;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[other]: %s\n", e.what());
    return kOther;
  }
  return kOther;
}
