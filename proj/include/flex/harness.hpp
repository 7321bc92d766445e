#pragma once

#include <iosfwd>
#include <memory>

#include "flex/config.hpp"
#include "flex/environment.hpp"
#include "flex/gram.hpp"
#include "flex/learner.hpp"
#include "flex/policy.hpp"
#include "flex/trace.hpp"

namespace flex {

// How a run scores the current parameters at evaluation strides.
enum class EvalKind {
  Grid,        // RMS prediction error against the true drift over the grid
  ParamSpace,  // distance to the environment's (possibly moving) true theta
};

// A fully wired exploration run: environment, model, policy, learner, shared
// or separate Gram state, and the evaluation setup.
struct RunSetup {
  std::shared_ptr<Environment> env;
  std::shared_ptr<Model> model;
  std::shared_ptr<GramState> gram;
  std::shared_ptr<Policy> policy;
  std::shared_ptr<Learner> learner;
  bool learner_owns_gram = false;  // RLS absorbs rows itself
  std::vector<StateAction> grid;
  EvalKind eval_kind = EvalKind::Grid;
  long horizon = 100;
  long eval_stride = 10;
  long checkpoint_stride = 0;  // 0 disables theta snapshots
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

// Component factories driven by the parsed config.
std::shared_ptr<Environment> build_environment(const Config& cfg);
std::shared_ptr<Model> build_model(const Config& cfg, const Environment& env);
RunSetup build_run(const Config& cfg);
RunSetup build_run(const Config& cfg, std::uint64_t seed_override);

// Alg-1 loop: choose input, observe a noisy Euler step, absorb features,
// update parameters. Deterministic given (config, seed). A diverged
// simulation yields a partial trace flagged failed instead of an exception.
RunTrace run_exploration(RunSetup& setup);

// Discretized L2 estimation error: root-mean-square over the grid of the
// prediction-vs-truth residual norm.
double evaluate(const Model& model, const VectorXd& theta,
                const Environment& env, const std::vector<StateAction>& grid,
                double t = 0.0);
double evaluate_params(const VectorXd& theta, const VectorXd& theta_star);

double percentile(std::vector<double> values, double fraction);

// ---------------------------------------------------------------------------
// experiments
// ---------------------------------------------------------------------------

struct AggregateRow {
  std::string env;
  std::string policy;
  long t = 0;
  int seeds = 0;
  double mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  std::uint64_t config_hash = 0;
};

struct PolicyRuns {
  std::string policy;
  std::vector<RunTrace> traces;
  int failed = 0;
};

struct BenchmarkResult {
  std::vector<PolicyRuns> runs;
  std::vector<AggregateRow> rows;
  int failed_runs = 0;
};

// Errors-over-time comparison of several policies on one environment,
// aggregated over seeds (failed runs counted and excluded).
BenchmarkResult benchmark(const Config& base,
                          const std::vector<std::string>& policies,
                          int n_seeds);

// Aggregation of one (env, policy) cell; refuses traces with mixed config
// hashes.
std::vector<AggregateRow> aggregate_traces(const std::string& env,
                                           const std::string& policy,
                                           const std::vector<RunTrace>& traces);

void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows);

struct ChainRow {
  int joints = 0;
  std::string policy;
  bool capped = false;       // median never reached the threshold
  double median_samples = 0; // valid when !capped
  long cap = 0;
  double mean_policy_ns = 0.0;
  int seeds = 0;
  std::uint64_t config_hash = 0;
};

// Sample complexity (first step count reaching the parameter-error threshold,
// median over seeds) for growing chain sizes.
std::vector<ChainRow> chain_experiment(const std::vector<int>& sizes,
                                       const Config& base, int n_seeds,
                                       double threshold, long cap);

void write_chain_csv(std::ostream& os, const std::vector<ChainRow>& rows);

struct StarPolicyResult {
  std::string policy;
  std::vector<AggregateRow> error_rows;  // parameter error over time
  double final_error_median = 0.0;
  double mean_distance_to_star = 0.0;
  double mean_policy_ns = 0.0;
  int failed = 0;
  std::uint64_t config_hash = 0;
  std::vector<RunTrace> traces;
};

// Time-varying tracking comparison: flex vs random vs episodic planning.
std::vector<StarPolicyResult> star_experiment(const Config& base, int n_seeds);

void write_star_summary_csv(std::ostream& os,
                            const std::vector<StarPolicyResult>& results);

}  // namespace flex
