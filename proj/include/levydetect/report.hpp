#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace levydetect {

struct Provenance {
  std::uint64_t master_seed = 0;
  double grid_dt = 0.0;
  double delta = 0.0;
  std::string rule;
  std::string model_digest;
};

/// Monte Carlo estimate with its standard error and where it came from.
/// Censored replications are counted and flagged, never dropped.
struct EvalReport {
  std::string label;
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_rep = 0;
  std::size_t n_censored = 0;
  double horizon = 0.0;
  Provenance provenance;
  std::vector<std::string> flags;
  bool usable = true;

  bool has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
  }
  double censored_fraction() const {
    return n_rep == 0 ? 0.0 : static_cast<double>(n_censored) / static_cast<double>(n_rep);
  }
};

}  // namespace levydetect
