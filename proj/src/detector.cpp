#include "levydetect/detector.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "levydetect/errors.hpp"

namespace levydetect {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(e^a + e^b) with a possibly -inf.
double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}
}  // namespace

std::string to_string(RuleKind rule) {
  switch (rule) {
    case RuleKind::CusumContinuous: return "cusum_continuous";
    case RuleKind::CusumGrid: return "cusum_grid";
    case RuleKind::CusumIid: return "cusum_iid";
    case RuleKind::ShiryaevRoberts: return "shiryaev_roberts";
    case RuleKind::FixedTime: return "fixed_time";
  }
  return "unknown";
}

DetectorConfig DetectorConfig::cusum_continuous(double log_barrier) {
  return DetectorConfig{RuleKind::CusumContinuous, log_barrier, 0.0, 0, false};
}
DetectorConfig DetectorConfig::cusum_grid(double delta, double log_barrier) {
  return DetectorConfig{RuleKind::CusumGrid, log_barrier, delta, 0, false};
}
DetectorConfig DetectorConfig::cusum_iid(double log_barrier) {
  return DetectorConfig{RuleKind::CusumIid, log_barrier, 0.0, 0, false};
}
DetectorConfig DetectorConfig::shiryaev_roberts(double delta, double log_threshold) {
  return DetectorConfig{RuleKind::ShiryaevRoberts, log_threshold, delta, 0, false};
}
DetectorConfig DetectorConfig::fixed_time(double delta, std::size_t steps) {
  return DetectorConfig{RuleKind::FixedTime, 0.0, delta, steps, false};
}

std::string DetectorConfig::name() const {
  std::ostringstream os;
  os << to_string(rule);
  if (rule == RuleKind::CusumGrid || rule == RuleKind::ShiryaevRoberts ||
      rule == RuleKind::FixedTime) {
    os << "(delta=" << delta << ")";
  }
  return os.str();
}

void DetectorConfig::validate() const {
  if (!std::isfinite(log_barrier)) throw ValidationError("barrier must be finite");
  if (is_cusum() && log_barrier < 0.0) {
    throw ValidationError("CUSUM barrier needs h >= 1, i.e. log barrier >= 0");
  }
  if (rule == RuleKind::CusumGrid || rule == RuleKind::ShiryaevRoberts ||
      rule == RuleKind::FixedTime) {
    if (!(delta > 0.0) || !std::isfinite(delta)) {
      throw ValidationError(to_string(rule) + " needs a positive delta");
    }
  }
  if (rule == RuleKind::FixedTime && fixed_steps == 0) {
    throw ValidationError("fixed-time rule needs at least one step");
  }
}

CusumState cusum_update(CusumState state, double log_l) {
  state.log_stat = std::max(state.log_stat, 0.0) + log_l;
  ++state.steps;
  return state;
}

std::vector<double> drawup(std::span<const double> u) {
  std::vector<double> y(u.size());
  double lowest = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    lowest = i == 0 ? u[0] : std::min(lowest, u[i]);
    y[i] = u[i] - lowest;
  }
  return y;
}

std::vector<double> drawup(const LLRPath& llr) { return drawup(llr.u_values); }

StopResult first_passage(std::span<const double> y, double log_barrier, double grid_dt,
                         std::size_t monitor_stride) {
  if (monitor_stride == 0) throw ValidationError("monitor stride must be positive");
  StopResult out;
  if (y.empty()) {
    out.censored = true;
    return out;
  }
  std::size_t last = 0;
  for (std::size_t i = 0, k = 0; i < y.size(); i += monitor_stride, ++k) {
    last = i;
    if (y[i] >= log_barrier) {
      out.stop_time = static_cast<double>(i) * grid_dt;
      out.stat_at_stop = y[i];
      out.steps_taken = k;
      return out;
    }
  }
  out.censored = true;
  out.stop_time = static_cast<double>(y.size() - 1) * grid_dt;
  out.stat_at_stop = y[last];
  out.steps_taken = last / monitor_stride;
  return out;
}

// ---------------------------------------------------------------------------

Monitor::Monitor(const DetectorConfig& config, double grid_dt) : config_(config), dt_(grid_dt) {
  config_.validate();
  if (config_.rule == RuleKind::CusumIid) {
    throw ContractError("the i.i.d. CUSUM runs on increment series, not on U");
  }
  if (!(grid_dt > 0.0)) throw ValidationError("grid_dt must be positive");
  stride_ = config_.rule == RuleKind::CusumContinuous ? 1 : grid_stride(config_.delta, grid_dt);
  start();
}

bool Monitor::start() {
  sub_ = 0;
  grid_index_ = 0;
  monitored_ = 0;
  u_now_ = 0.0;
  u_last_ = 0.0;
  cusum_ = CusumState{};
  log_r_ = kNegInf;
  stopped_ = false;
  stop_time_ = 0.0;
  // Y_0 = 0 for the continuous rule, so a zero barrier alarms immediately.
  if (config_.rule == RuleKind::CusumContinuous && crosses(0.0)) {
    stopped_ = true;
    cusum_.log_stat = 0.0;
  }
  return stopped_;
}

bool Monitor::push(double u) {
  if (stopped_) return true;
  ++grid_index_;
  u_now_ = u;
  if (++sub_ < stride_) return false;
  sub_ = 0;
  const double log_l = u_now_ - u_last_;
  u_last_ = u_now_;
  return monitor(log_l);
}

bool Monitor::monitor(double log_l) {
  ++monitored_;
  double stat = 0.0;
  switch (config_.rule) {
    case RuleKind::CusumContinuous:
      cusum_ = cusum_update(cusum_, log_l);
      stat = std::max(cusum_.log_stat, 0.0);
      break;
    case RuleKind::CusumGrid:
      cusum_ = cusum_update(cusum_, log_l);
      stat = cusum_.log_stat;
      break;
    case RuleKind::ShiryaevRoberts:
      // R_k = (1 + R_{k-1}) L_k
      log_r_ = log_add_exp(0.0, log_r_) + log_l;
      stat = log_r_;
      break;
    case RuleKind::FixedTime:
      if (monitored_ >= config_.fixed_steps) {
        stopped_ = true;
        stop_time_ = time();
      }
      return stopped_;
    case RuleKind::CusumIid:
      break;
  }
  if (crosses(stat)) {
    stopped_ = true;
    stop_time_ = time();
  }
  return stopped_;
}

void Monitor::restart() {
  u_last_ = u_now_;
  sub_ = 0;
  switch (config_.rule) {
    case RuleKind::CusumContinuous:
    case RuleKind::CusumGrid:
      cusum_.log_stat = 0.0;
      break;
    case RuleKind::ShiryaevRoberts:
      log_r_ = kNegInf;
      break;
    default:
      break;
  }
}

double Monitor::statistic() const {
  switch (config_.rule) {
    case RuleKind::CusumContinuous: return std::max(cusum_.log_stat, 0.0);
    case RuleKind::CusumGrid: return cusum_.log_stat;
    case RuleKind::ShiryaevRoberts: return log_r_;
    case RuleKind::FixedTime: return static_cast<double>(monitored_);
    case RuleKind::CusumIid: break;
  }
  return 0.0;
}

StopResult Monitor::result() const {
  StopResult r;
  r.censored = !stopped_;
  r.stop_time = stopped_ ? stop_time_ : time();
  r.stat_at_stop = statistic();
  r.steps_taken = monitored_;
  return r;
}

StopResult run_rule(const DetectorConfig& config, const LLRPath& llr) {
  if (config.rule == RuleKind::CusumIid) {
    throw ContractError("cusum_iid needs an increment series and increment laws");
  }
  Monitor m(config, llr.grid_dt);
  if (!m.stopped()) {
    for (std::size_t i = 1; i < llr.u_values.size(); ++i) {
      if (m.push(llr.u_values[i])) break;
    }
  }
  return m.result();
}

StopResult run_rule(const DetectorConfig& config, const IncrementSeries& series,
                    const IncrementLaw& q0, const IncrementLaw& q1) {
  if (config.rule != RuleKind::CusumIid) {
    throw ContractError(to_string(config.rule) + " runs on an LLR path, not on increments");
  }
  config.validate();
  CusumState s;
  StopResult out;
  for (std::size_t k = 0; k < series.increments.size(); ++k) {
    s = cusum_update(s, llr_increment_iid(q0, q1, series.increments[k]));
    const bool hit = config.strict ? s.log_stat > config.log_barrier
                                   : s.log_stat >= config.log_barrier;
    if (hit) {
      out.stop_time = static_cast<double>(k + 1) * series.delta;
      out.stat_at_stop = s.log_stat;
      out.steps_taken = k + 1;
      return out;
    }
  }
  out.censored = true;
  out.stop_time = static_cast<double>(series.increments.size()) * series.delta;
  out.stat_at_stop = s.log_stat;
  out.steps_taken = series.increments.size();
  return out;
}

std::vector<double> statistic_trace(const DetectorConfig& config, const LLRPath& llr) {
  Monitor m(config, llr.grid_dt);
  std::vector<double> trace;
  trace.push_back(config.rule == RuleKind::CusumGrid ? kNegInf : m.statistic());
  if (m.stopped()) return trace;
  for (std::size_t i = 1; i < llr.u_values.size(); ++i) {
    const bool done = m.push(llr.u_values[i]);
    if (m.on_monitor_point()) trace.push_back(m.statistic());
    if (done) break;
  }
  return trace;
}

double mle_changepoint(std::span<const double> log_stats, const StopResult& stop,
                       double monitor_dt) {
  if (stop.censored) {
    throw UndefinedEstimateError("no change-point estimate for a censored run");
  }
  if (log_stats.empty()) throw ContractError("empty statistic trace");
  const std::size_t end = std::min(log_stats.size() - 1, stop.steps_taken);
  for (std::size_t k = end + 1; k-- > 0;) {
    if (log_stats[k] <= 0.0) return static_cast<double>(k) * monitor_dt;
  }
  return 0.0;
}

double avoid_lattice(double log_barrier, const ChangeModel& model) {
  if (!model.admissible() || !model.phi() || !model.phi()->is_constant()) return log_barrier;
  const DensityRatio& r = *model.phi();
  const double step = std::abs(r.has_positive() ? r.positive().c0 : r.negative().c0);
  if (step == 0.0) return log_barrier;
  const double k = std::round(log_barrier / step);
  if (k >= 1.0 && std::abs(log_barrier - k * step) < 1e-9) return log_barrier + 1e-6;
  return log_barrier;
}

}  // namespace levydetect
