#include "levydetect/eval.hpp"

#include <algorithm>
#include <cmath>

#include "levydetect/errors.hpp"
#include "levydetect/likelihood.hpp"
#include "levydetect/parallel.hpp"
#include "levydetect/paths.hpp"
#include "levydetect/stats.hpp"

namespace levydetect {

namespace {

constexpr double kInsufficientFraction = 0.01;

DetectorConfig prepared(const DetectorConfig& config, const ChangeModel& model) {
  DetectorConfig out = config;
  if (out.is_cusum()) out.log_barrier = avoid_lattice(out.log_barrier, model);
  return out;
}

double regime_tau(Regime regime) { return regime == Regime::InControl ? kNever : 0.0; }

std::uint64_t regime_arm(Regime regime) {
  return regime == Regime::InControl ? arms::kInControl : arms::kOutOfControl;
}

void check_settings(const SimulationSettings& s) {
  if (!(s.grid_dt > 0.0) || !std::isfinite(s.grid_dt)) {
    throw ValidationError("grid_dt must be positive");
  }
  if (!(s.horizon > 0.0) || !std::isfinite(s.horizon)) {
    throw ValidationError("horizon must be positive and finite");
  }
  if (s.n_rep < 2) throw ValidationError("need at least two replications");
}

Provenance provenance_of(const ChangeModel& model, const DetectorConfig& config,
                         const SimulationSettings& s) {
  return Provenance{s.master_seed, s.grid_dt, config.monitor_step(s.grid_dt), config.name(),
                    model.digest()};
}

void flag_censoring(EvalReport& r) {
  if (r.n_censored == 0) return;
  r.flags.push_back("censored");
  r.flags.push_back("downward_bias");
  if (r.censored_fraction() >= kInsufficientFraction) r.flags.push_back("insufficient_horizon");
  if (r.n_censored == r.n_rep) {
    r.flags.push_back("unusable");
    r.usable = false;
  }
}

// Runs the monitors on one path from time zero; they share the path.
void run_path(const ChangeModel& model, const LlrStep& step, double tau, double dt,
              std::size_t max_steps, RngStream stream, std::vector<Monitor>& monitors) {
  PathSimulator sim(model, tau, dt, stream);
  std::size_t active = 0;
  for (Monitor& m : monitors) {
    if (!m.start()) ++active;
  }
  double u = 0.0;
  for (std::size_t i = 0; i < max_steps && active > 0; ++i) {
    const StepIncrement inc = sim.advance();
    u += step(inc.dx, inc.ledger, dt);
    for (Monitor& m : monitors) {
      if (!m.stopped() && m.push(u)) --active;
    }
  }
}

EvalReport probe_arl(const ChangeModel& model, const DetectorConfig& config,
                     const SimulationSettings& settings) {
  const RunLengths rl =
      simulate_run_lengths(model, std::span(&config, 1), Regime::InControl, settings,
                           arms::kInControl);
  return summarize(rl.stop_times[0], rl.censored[0], model, config, settings, "arl_in_control");
}

}  // namespace

std::string to_string(Regime regime) {
  return regime == Regime::InControl ? "in_control" : "out_of_control";
}

RunLengths simulate_run_lengths(const ChangeModel& model, std::span<const DetectorConfig> configs,
                                Regime regime, const SimulationSettings& settings,
                                std::uint64_t arm) {
  model.require_admissible();
  check_settings(settings);
  if (configs.empty()) throw ValidationError("no stopping rules given");
  std::vector<Monitor> templates;
  for (const DetectorConfig& c : configs) templates.emplace_back(c, settings.grid_dt);

  const std::size_t n = settings.n_rep;
  const std::size_t max_steps = grid_steps(settings.horizon, settings.grid_dt);
  RunLengths out;
  out.horizon = static_cast<double>(max_steps) * settings.grid_dt;
  out.stop_times.assign(configs.size(), std::vector<double>(n));
  out.censored.assign(configs.size(), std::vector<unsigned char>(n));
  const LlrStep step(model);
  const double tau = regime_tau(regime);

  parallel_for(n, settings.threads, [&](std::size_t rep) {
    std::vector<Monitor> monitors = templates;
    run_path(model, step, tau, settings.grid_dt, max_steps,
             RngStream{settings.master_seed, stream_id_for(arm, rep)}, monitors);
    for (std::size_t j = 0; j < monitors.size(); ++j) {
      const StopResult r = monitors[j].result();
      out.stop_times[j][rep] = r.stop_time;
      out.censored[j][rep] = r.censored ? 1 : 0;
    }
  });
  return out;
}

EvalReport summarize(std::span<const double> values, std::span<const unsigned char> censored,
                     const ChangeModel& model, const DetectorConfig& config,
                     const SimulationSettings& settings, const std::string& label) {
  const stats::MeanSe ms = stats::mean_se(values);
  EvalReport r;
  r.label = label;
  r.estimate = ms.mean;
  r.std_error = ms.std_error;
  r.n_rep = values.size();
  r.n_censored = static_cast<std::size_t>(std::count(censored.begin(), censored.end(), 1));
  r.horizon = settings.horizon;
  r.provenance = provenance_of(model, config, settings);
  flag_censoring(r);
  return r;
}

EvalReport estimate_arl(const ChangeModel& model, const DetectorConfig& config, Regime regime,
                        const SimulationSettings& settings) {
  return estimate_arl(model, std::span(&config, 1), regime, settings).front();
}

std::vector<EvalReport> estimate_arl(const ChangeModel& model,
                                     std::span<const DetectorConfig> configs, Regime regime,
                                     const SimulationSettings& settings) {
  std::vector<DetectorConfig> rules;
  for (const DetectorConfig& c : configs) rules.push_back(prepared(c, model));
  const RunLengths rl = simulate_run_lengths(model, rules, regime, settings, regime_arm(regime));
  std::vector<EvalReport> out;
  for (std::size_t j = 0; j < rules.size(); ++j) {
    EvalReport r = summarize(rl.stop_times[j], rl.censored[j], model, rules[j], settings,
                             "arl_" + to_string(regime));
    if (rules[j].log_barrier != configs[j].log_barrier) r.flags.push_back("barrier_perturbed");
    out.push_back(std::move(r));
  }
  return out;
}

Extrapolation extrapolated_arl(const ChangeModel& model, double log_barrier, Regime regime,
                               const SimulationSettings& settings,
                               std::vector<std::size_t> strides) {
  if (strides.size() < 2) throw ValidationError("extrapolation needs at least two strides");
  std::vector<DetectorConfig> rules;
  Extrapolation out;
  for (std::size_t k : strides) {
    if (k == 0) throw ValidationError("strides must be positive");
    const double step = static_cast<double>(k) * settings.grid_dt;
    out.steps.push_back(step);
    rules.push_back(prepared(DetectorConfig::cusum_grid(step, log_barrier), model));
  }
  const RunLengths rl = simulate_run_lengths(model, rules, regime, settings, regime_arm(regime));

  // Least-squares intercept of E = A + B x, x = sqrt(step), as weights on E_k.
  const std::size_t m = strides.size();
  double sx = 0.0, sxx = 0.0;
  std::vector<double> x(m);
  for (std::size_t k = 0; k < m; ++k) {
    x[k] = std::sqrt(out.steps[k]);
    sx += x[k];
    sxx += x[k] * x[k];
  }
  const double den = static_cast<double>(m) * sxx - sx * sx;
  std::vector<double> w(m);
  for (std::size_t k = 0; k < m; ++k) w[k] = (sxx - x[k] * sx) / den;

  const std::size_t n = settings.n_rep;
  std::vector<double> combined(n, 0.0);
  std::vector<unsigned char> any_censored(n, 0);
  for (std::size_t k = 0; k < m; ++k) {
    out.levels.push_back(summarize(rl.stop_times[k], rl.censored[k], model, rules[k], settings,
                                   "arl_" + to_string(regime)));
    for (std::size_t i = 0; i < n; ++i) {
      combined[i] += w[k] * rl.stop_times[k][i];
      any_censored[i] |= rl.censored[k][i];
    }
  }
  out.extrapolated = summarize(combined, any_censored, model, rules.front(), settings,
                               "arl_" + to_string(regime) + "_extrapolated");
  out.extrapolated.provenance.rule = "cusum_grid(delta->0)";
  out.extrapolated.provenance.delta = 0.0;
  return out;
}

Calibration calibrate_barrier(const ChangeModel& model, const DetectorConfig& rule, double gamma,
                              double rel_tol, const SimulationSettings& settings) {
  model.require_admissible();
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be positive");
  if (!(rel_tol > 0.0)) throw ValidationError("rel_tol must be positive");
  if (rule.rule == RuleKind::CusumIid) {
    throw ContractError("calibration runs on path-based rules");
  }
  const double step = rule.monitor_step(settings.grid_dt);
  if (gamma < step * (1.0 - 1e-12)) {
    throw InfeasibleTargetError("gamma is below one monitoring step; only randomized rules reach it");
  }

  SimulationSettings base = settings;
  base.horizon = 20.0 * gamma;
  SimulationSettings large = base;
  large.n_rep = 4 * settings.n_rep;
  Calibration cal;

  if (rule.rule == RuleKind::FixedTime) {
    DetectorConfig c = rule;
    c.fixed_steps = static_cast<std::size_t>(std::ceil(gamma / c.delta - 1e-9));
    cal.report = probe_arl(model, c, base);
    cal.probes = 1;
    cal.log_barrier = static_cast<double>(c.fixed_steps);
    cal.rel_error = std::abs(cal.report.estimate - gamma) / gamma;
    cal.converged = cal.rel_error <= rel_tol;
    return cal;
  }

  auto arl = [&](double barrier, const SimulationSettings& s) {
    DetectorConfig c = rule;
    c.log_barrier = prepared(DetectorConfig{rule.rule, barrier, rule.delta, 0, rule.strict},
                             model).log_barrier;
    ++cal.probes;
    return probe_arl(model, c, s);
  };
  auto rel = [&](const EvalReport& r) { return std::abs(r.estimate - gamma) / gamma; };

  // Stage 1: bracket and bisect at the base budget.
  double lo = 0.0, hi = 1.0, mid = 0.0;
  EvalReport r = arl(lo, base);
  if (r.estimate < gamma) {
    EvalReport rh = arl(hi, base);
    while (rh.estimate < gamma) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1024.0) throw InfeasibleTargetError("no barrier reaches the target ARL");
      rh = arl(hi, base);
    }
    for (int it = 0; it < 80; ++it) {
      mid = 0.5 * (lo + hi);
      r = arl(mid, base);
      if (rel(r) <= 0.5 * rel_tol || hi - lo < 1e-9) break;
      (r.estimate < gamma ? lo : hi) = mid;
    }
  }

  // Stage 2: confirm at 4x budget, re-bisecting there if needed.
  EvalReport final_r = arl(mid, large);
  if (rel(final_r) > rel_tol) {
    double width = std::max(hi - lo, 0.05);
    if (final_r.estimate < gamma) {
      lo = mid;
      hi = mid + width;
      while (arl(hi, large).estimate < gamma) {
        lo = hi;
        width *= 2.0;
        hi += width;
        if (hi > 1024.0) throw InfeasibleTargetError("no barrier reaches the target ARL");
      }
    } else {
      hi = mid;
      lo = std::max(0.0, mid - width);
      while (lo > 0.0 && arl(lo, large).estimate > gamma) {
        hi = lo;
        width *= 2.0;
        lo = std::max(0.0, lo - width);
      }
    }
    for (int it = 0; it < 80; ++it) {
      mid = 0.5 * (lo + hi);
      final_r = arl(mid, large);
      if (rel(final_r) <= rel_tol || hi - lo < 1e-9) break;
      (final_r.estimate < gamma ? lo : hi) = mid;
    }
  }
  cal.log_barrier = mid;
  cal.report = final_r;
  cal.report.label = "calibrated_arl";
  cal.rel_error = rel(final_r);
  cal.converged = cal.rel_error <= rel_tol;
  if (!cal.converged) cal.report.flags.push_back("calibration_not_converged");
  return cal;
}

LordenResult lorden_delay(const ChangeModel& model, const DetectorConfig& config,
                          std::span<const double> tau_grid, const SimulationSettings& settings) {
  model.require_admissible();
  check_settings(settings);
  if (tau_grid.empty()) throw ValidationError("tau grid is empty");
  const DetectorConfig rule = prepared(config, model);
  const Monitor tmpl(rule, settings.grid_dt);
  const double dt = settings.grid_dt;
  const double step_size = rule.monitor_step(dt);
  const std::size_t max_steps = grid_steps(settings.horizon, dt);
  const LlrStep step(model);

  LordenResult out;
  out.tau_grid.assign(tau_grid.begin(), tau_grid.end());
  for (std::size_t ti = 0; ti < tau_grid.size(); ++ti) {
    const double tau = tau_grid[ti];
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw ValidationError("tau must be finite and >= 0");
    if (tau > 0.0) {
      grid_stride(tau, dt);
      if (tmpl.restartable()) grid_stride(tau, step_size);
    }
    std::vector<double> delays(settings.n_rep);
    std::vector<unsigned char> censored(settings.n_rep);
    parallel_for(settings.n_rep, settings.threads, [&](std::size_t rep) {
      PathSimulator sim(model, tau, dt,
                        RngStream{settings.master_seed, stream_id_for(arms::kLorden + ti, rep)});
      const std::size_t change = sim.change_step();
      const double tau_snapped = sim.change_point();
      Monitor m = tmpl;
      double u = 0.0;
      if (m.restartable()) {
        for (std::size_t i = 0; i < change; ++i) sim.advance();
        m.start();
        m.restart();
        for (std::size_t i = 0; i < max_steps && !m.stopped(); ++i) {
          const StepIncrement inc = sim.advance();
          u += step(inc.dx, inc.ledger, dt);
          m.push(u);
        }
        delays[rep] = m.result().stop_time;
      } else {
        m.start();
        for (std::size_t i = 0; i < change + max_steps && !m.stopped(); ++i) {
          const StepIncrement inc = sim.advance();
          u += step(inc.dx, inc.ledger, dt);
          m.push(u);
        }
        delays[rep] = std::max(m.result().stop_time - tau_snapped, 0.0);
      }
      censored[rep] = m.stopped() ? 0 : 1;
    });
    EvalReport r = summarize(delays, censored, model, rule, settings, "delay");
    r.label = "delay_tau=" + std::to_string(tau);
    out.per_tau.push_back(std::move(r));
    out.delays.push_back(std::move(delays));
  }
  for (std::size_t i = 1; i < out.per_tau.size(); ++i) {
    if (out.per_tau[i].estimate > out.per_tau[out.worst_index].estimate) out.worst_index = i;
  }
  return out;
}

LowerBound lower_bound_ratio(const ChangeModel& model, const DetectorConfig& config,
                             const SimulationSettings& settings) {
  model.require_admissible();
  check_settings(settings);
  if (config.rule != RuleKind::CusumGrid && config.rule != RuleKind::ShiryaevRoberts &&
      config.rule != RuleKind::FixedTime) {
    throw ContractError("the lower bound is defined for delta-grid rules");
  }
  const DetectorConfig rule = prepared(config, model);
  const Monitor tmpl(rule, settings.grid_dt);
  const std::size_t stride = tmpl.stride();
  const double dt = settings.grid_dt;
  const std::size_t max_steps = grid_steps(settings.horizon, dt);
  const LlrStep step(model);
  const std::size_t n = settings.n_rep;

  std::vector<double> num(n), den(n);
  std::vector<unsigned char> censored(n);
  parallel_for(n, settings.threads, [&](std::size_t rep) {
    PathSimulator sim(model, kNever, dt,
                      RngStream{settings.master_seed, stream_id_for(arms::kLowerBound, rep)});
    Monitor m = tmpl;
    m.start();
    // k = 0 term with S_0 = 0.
    double a = 1.0, b = 1.0;
    CusumState s;
    double u = 0.0, u_last = 0.0;
    std::size_t sub = 0;
    for (std::size_t i = 0; i < max_steps; ++i) {
      const StepIncrement inc = sim.advance();
      u += step(inc.dx, inc.ledger, dt);
      const bool stop = m.push(u);
      if (++sub < stride) continue;
      sub = 0;
      s = cusum_update(s, u - u_last);
      u_last = u;
      if (stop) break;
      const double sk = std::exp(s.log_stat);
      a += std::max(sk, 1.0);
      b += std::max(1.0 - sk, 0.0);
    }
    num[rep] = a;
    den[rep] = b;
    censored[rep] = m.stopped() ? 0 : 1;
  });

  const stats::RatioEstimate ratio = stats::ratio_of_means(num, den);
  if (!(ratio.mean_denominator > 0.0)) {
    throw DegenerateRuleError("lower-bound denominator is not positive");
  }
  LowerBound out;
  out.mean_numerator = ratio.mean_numerator;
  out.mean_denominator = ratio.mean_denominator;
  EvalReport& r = out.report;
  r.label = "lower_bound";
  r.estimate = rule.delta * ratio.ratio;
  r.std_error = rule.delta * ratio.std_error;
  r.n_rep = n;
  r.n_censored = static_cast<std::size_t>(std::count(censored.begin(), censored.end(), 1));
  r.horizon = settings.horizon;
  r.provenance = provenance_of(model, rule, settings);
  flag_censoring(r);
  return out;
}

ConvergenceStudy convergence_study(const ChangeModel& model, double log_barrier,
                                   std::size_t levels, double delta0, Regime regime,
                                   const SimulationSettings& settings) {
  if (levels == 0) throw ValidationError("need at least one dyadic level");
  std::vector<DetectorConfig> rules;
  double delta = delta0;
  for (std::size_t n = 0; n < levels; ++n, delta *= 0.5) {
    DetectorConfig c = prepared(DetectorConfig::cusum_grid(delta, log_barrier), model);
    grid_stride(c.delta, settings.grid_dt);
    rules.push_back(c);
  }
  DetectorConfig ref = prepared(DetectorConfig::cusum_grid(settings.grid_dt, log_barrier), model);
  DetectorConfig strict = ref;
  strict.strict = true;
  rules.push_back(ref);
  rules.push_back(strict);

  const RunLengths rl = simulate_run_lengths(model, rules, regime, settings, regime_arm(regime));
  const std::size_t n = settings.n_rep;
  const std::vector<double>& t_ref = rl.stop_times[levels];
  const std::vector<double>& t_strict = rl.stop_times[levels + 1];

  ConvergenceStudy out;
  out.n_rep = n;
  out.reference =
      summarize(t_ref, rl.censored[levels], model, ref, settings, "stop_stride1");
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = rl.stop_times[levels - 1][i] >= t_ref[i];
    for (std::size_t l = 0; l + 1 < levels && ok; ++l) {
      ok = rl.stop_times[l][i] >= rl.stop_times[l + 1][i];
    }
    if (ok) ++out.n_monotone;
    if (t_ref[i] != t_strict[i]) ++out.convention_disagreements;
  }
  out.gaps_decreasing = true;
  for (std::size_t l = 0; l < levels; ++l) {
    std::vector<double> gap(n);
    for (std::size_t i = 0; i < n; ++i) gap[i] = rl.stop_times[l][i] - t_ref[i];
    ConvergenceLevel lev;
    lev.delta = rules[l].delta;
    lev.stop = summarize(rl.stop_times[l], rl.censored[l], model, rules[l], settings, "stop");
    lev.gap = summarize(gap, rl.censored[l], model, rules[l], settings, "gap_to_stride1");
    if (l > 0 && !(lev.gap.estimate < out.levels.back().gap.estimate)) {
      out.gaps_decreasing = false;
    }
    out.levels.push_back(std::move(lev));
  }
  return out;
}

Comparison compare(const ChangeModel& model, double gamma, std::span<const DetectorConfig> rules,
                   double rel_tol, std::span<const double> tau_grid,
                   const SimulationSettings& settings) {
  Comparison out;
  for (const DetectorConfig& rule : rules) {
    ComparisonRow row;
    row.config = rule;
    try {
      Calibration cal = calibrate_barrier(model, rule, gamma, rel_tol, settings);
      if (rule.rule == RuleKind::FixedTime) {
        row.config.fixed_steps = static_cast<std::size_t>(cal.log_barrier);
      } else {
        row.config.log_barrier = cal.log_barrier;
      }
      if (!cal.converged) row.flags.push_back("calibration_not_converged");
      row.calibration = std::move(cal);
    } catch (const Error& e) {
      row.flags.push_back(std::string("calibration_failed: ") + e.what());
    }
    if (row.calibration) {
      try {
        row.lorden = lorden_delay(model, row.config, tau_grid, settings);
      } catch (const Error& e) {
        row.flags.push_back(std::string("delay_failed: ") + e.what());
      }
    }
    out.rows.push_back(std::move(row));
  }
  bool any = false, dominates = true;
  for (const ComparisonRow& c : out.rows) {
    if (!c.config.is_cusum() || !c.lorden) continue;
    for (const ComparisonRow& o : out.rows) {
      if (o.config.is_cusum() || !o.lorden) continue;
      any = true;
      const EvalReport& a = c.lorden->worst();
      const EvalReport& b = o.lorden->worst();
      const double se = std::hypot(a.std_error, b.std_error);
      if (a.estimate > b.estimate + 3.0 * se) dominates = false;
    }
  }
  if (any) out.cusum_dominates = dominates;
  return out;
}

}  // namespace levydetect
