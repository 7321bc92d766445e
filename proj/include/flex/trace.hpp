#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "flex/types.hpp"

namespace flex {

// One exploration step. eps is filled only at evaluation strides.
struct StepRecord {
  long t = 0;
  VectorXd x;
  VectorXd u;
  double eps = 0.0;
  bool has_eps = false;
  long policy_ns = 0;
  long learn_ns = 0;
};

struct RunTrace {
  std::vector<StepRecord> steps;
  VectorXd theta_final;
  // (step count, theta) snapshots at the configured checkpoint stride
  std::vector<std::pair<long, VectorXd>> theta_checkpoints;
  bool failed = false;
  std::string fail_reason;
  long clip_count = 0;
  std::uint64_t config_hash = 0;

  double mean_policy_ns() const;
  double mean_learn_ns() const;
};

// Raw per-step CSV: t,x...,u...,eps,policy_ns,learn_ns,config_hash. Floats in
// full precision so identical runs serialize identically; pass
// include_timing = false to zero the wall-time columns when byte-level
// comparison is the point.
void write_trace_csv(std::ostream& os, const RunTrace& trace,
                     bool include_timing = true);
std::string trace_csv_string(const RunTrace& trace, bool include_timing = true);
void save_trace_csv(const std::string& path, const RunTrace& trace,
                    bool include_timing = true);

// Power spectral density of a scalar input sequence (plain periodogram),
// written as frequency,power rows.
void write_periodogram_csv(std::ostream& os, const std::vector<double>& signal,
                           double dt);

}  // namespace flex
