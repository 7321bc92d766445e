#include "flex/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace flex {

namespace {

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace

double RunTrace::mean_policy_ns() const {
  if (steps.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : steps) total += static_cast<double>(s.policy_ns);
  return total / static_cast<double>(steps.size());
}

double RunTrace::mean_learn_ns() const {
  if (steps.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : steps) total += static_cast<double>(s.learn_ns);
  return total / static_cast<double>(steps.size());
}

void write_trace_csv(std::ostream& os, const RunTrace& trace,
                     bool include_timing) {
  if (trace.steps.empty()) {
    os << "t,eps,policy_ns,learn_ns,config_hash\n";
    return;
  }
  const Eigen::Index d = trace.steps.front().x.size();
  const Eigen::Index m = trace.steps.front().u.size();
  os << "t";
  for (Eigen::Index i = 0; i < d; ++i) os << ",x" << i;
  for (Eigen::Index i = 0; i < m; ++i) os << ",u" << i;
  os << ",eps,policy_ns,learn_ns,config_hash\n";

  char hash[24];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(trace.config_hash));
  for (const auto& s : trace.steps) {
    os << s.t;
    for (Eigen::Index i = 0; i < d; ++i) os << "," << format_double(s.x[i]);
    for (Eigen::Index i = 0; i < m; ++i) os << "," << format_double(s.u[i]);
    os << ",";
    if (s.has_eps) os << format_double(s.eps);
    os << "," << (include_timing ? s.policy_ns : 0) << ","
       << (include_timing ? s.learn_ns : 0) << "," << hash << "\n";
  }
}

std::string trace_csv_string(const RunTrace& trace, bool include_timing) {
  std::ostringstream out;
  write_trace_csv(out, trace, include_timing);
  return out.str();
}

void save_trace_csv(const std::string& path, const RunTrace& trace,
                    bool include_timing) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_trace_csv(out, trace, include_timing);
}

void write_periodogram_csv(std::ostream& os, const std::vector<double>& signal,
                           double dt) {
  const std::size_t n = signal.size();
  os << "frequency,power\n";
  if (n == 0) return;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = -2.0 * M_PI * static_cast<double>(k * t) /
                           static_cast<double>(n);
      re += signal[t] * std::cos(angle);
      im += signal[t] * std::sin(angle);
    }
    const double freq = static_cast<double>(k) /
                        (static_cast<double>(n) * dt);
    const double power = (re * re + im * im) / static_cast<double>(n);
    os << format_double(freq) << "," << format_double(power) << "\n";
  }
}

}  // namespace flex
