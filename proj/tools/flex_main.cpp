// Command-line harness: single exploration runs plus the three batch
// experiments (benchmark, chain scaling, time-varying star field).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "flex/harness.hpp"

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

int run_explore(const std::string& config_path, const std::string& out_path,
                const std::string& checkpoint_path,
                const std::string& spectrum_path) {
  flex::Config cfg = flex::Config::parse_file(config_path);
  flex::RunSetup setup = flex::build_run(cfg);
  flex::RunTrace trace = flex::run_exploration(setup);

  auto out = open_output(out_path);
  flex::write_trace_csv(out, trace);
  std::cout << "trace written to " << out_path << " (" << trace.steps.size()
            << " steps, " << (trace.failed ? "FAILED" : "ok") << ")\n";
  if (trace.failed) std::cout << "  reason: " << trace.fail_reason << "\n";
  if (trace.clip_count > 0) {
    std::cout << "  warning: " << trace.clip_count << " inputs clipped\n";
  }

  if (!checkpoint_path.empty()) {
    auto ck = open_output(checkpoint_path);
    flex::save_params(ck, *setup.model, trace.theta_final);
    for (const auto& [step, theta] : trace.theta_checkpoints) {
      auto snap = open_output(checkpoint_path + ".t" + std::to_string(step));
      flex::save_params(snap, *setup.model, theta);
    }
  }
  if (!spectrum_path.empty() && setup.model->input_dim() == 1) {
    std::vector<double> u_seq;
    u_seq.reserve(trace.steps.size());
    for (const auto& s : trace.steps) u_seq.push_back(s.u[0]);
    auto sp = open_output(spectrum_path);
    flex::write_periodogram_csv(sp, u_seq, setup.env->dt());
  }
  return trace.failed ? 1 : 0;
}

int run_benchmark(const std::string& config_path, int seeds,
                  const std::string& out_dir) {
  flex::Config cfg = flex::Config::parse_file(config_path);
  std::vector<std::string> policies;
  {
    std::istringstream in(cfg.get_string("benchmark", "policies",
                                         "flex,random,uniform,periodic"));
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b != std::string::npos) policies.push_back(item.substr(b, e - b + 1));
    }
  }
  if (seeds <= 0) {
    seeds = static_cast<int>(cfg.get_long("benchmark", "seeds", 20));
  }

  const flex::BenchmarkResult result = flex::benchmark(cfg, policies, seeds);

  for (const auto& runs : result.runs) {
    for (std::size_t i = 0; i < runs.traces.size(); ++i) {
      std::ostringstream name;
      name << out_dir << "/raw_" << runs.policy << "_seed" << i << ".csv";
      auto out = open_output(name.str());
      flex::write_trace_csv(out, runs.traces[i]);
    }
  }
  auto agg = open_output(out_dir + "/aggregate.csv");
  flex::write_aggregate_csv(agg, result.rows);
  std::cout << "benchmark: " << result.rows.size() << " aggregate rows, "
            << result.failed_runs << " failed runs -> " << out_dir << "\n";
  return result.failed_runs > 0 ? 1 : 0;
}

int run_chain(const std::vector<int>& sizes, const std::string& config_path,
              int seeds, double threshold, long cap,
              const std::string& out_path) {
  flex::Config cfg = flex::Config::parse_file(config_path);
  const auto rows = flex::chain_experiment(sizes, cfg, seeds, threshold, cap);
  auto out = open_output(out_path);
  flex::write_chain_csv(out, rows);
  flex::write_chain_csv(std::cout, rows);
  return 0;
}

int run_star(const std::string& config_path, int seeds,
             const std::string& out_dir) {
  flex::Config cfg = flex::Config::parse_file(config_path);
  if (seeds <= 0) seeds = static_cast<int>(cfg.get_long("star", "seeds", 20));
  const auto results = flex::star_experiment(cfg, seeds);

  int failed = 0;
  for (const auto& res : results) {
    failed += res.failed;
    auto out = open_output(out_dir + "/star_errors_" + res.policy + ".csv");
    flex::write_aggregate_csv(out, res.error_rows);
  }
  auto summary = open_output(out_dir + "/star_summary.csv");
  flex::write_star_summary_csv(summary, results);
  flex::write_star_summary_csv(std::cout, results);
  return failed > 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Greedy D-optimal exploration of unknown dynamics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path = "out/trace.csv";
  std::string checkpoint_path;
  std::string spectrum_path;
  auto* explore = app.add_subcommand("explore", "run one exploration episode");
  explore->add_option("config", config_path, "run config file")->required();
  explore->add_option("-o,--out", out_path, "trace CSV path");
  explore->add_option("--checkpoint", checkpoint_path, "final theta path");
  explore->add_option("--spectrum", spectrum_path,
                      "input periodogram CSV path (scalar input only)");

  std::string bench_config;
  int bench_seeds = 0;
  std::string bench_dir = "out/benchmark";
  auto* bench = app.add_subcommand("benchmark",
                                   "compare policies over seeds on one env");
  bench->add_option("config", bench_config, "benchmark config file")->required();
  bench->add_option("--seeds", bench_seeds, "number of seeds");
  bench->add_option("--out", bench_dir, "output directory");

  std::vector<int> chain_sizes{2, 5};
  std::string chain_config = "configs/chain.cfg";
  int chain_seeds = 20;
  double chain_threshold = 1e-2;
  long chain_cap = 400;
  std::string chain_out = "out/chain.csv";
  auto* chain = app.add_subcommand("chain", "chain-size scaling study");
  chain->add_option("--sizes", chain_sizes, "chain sizes")->delimiter(',');
  chain->add_option("--config", chain_config, "base config file");
  chain->add_option("--seeds", chain_seeds, "number of seeds");
  chain->add_option("--threshold", chain_threshold, "parameter error target");
  chain->add_option("--cap", chain_cap, "step cap per run");
  chain->add_option("--out", chain_out, "output CSV");

  std::string star_config;
  int star_seeds = 0;
  std::string star_dir = "out/star";
  auto* star = app.add_subcommand("star", "time-varying star-field experiment");
  star->add_option("config", star_config, "star config file")->required();
  star->add_option("--seeds", star_seeds, "number of seeds");
  star->add_option("--out", star_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (explore->parsed()) {
      return run_explore(config_path, out_path, checkpoint_path, spectrum_path);
    }
    if (bench->parsed()) {
      return run_benchmark(bench_config, bench_seeds, bench_dir);
    }
    if (chain->parsed()) {
      return run_chain(chain_sizes, chain_config, chain_seeds, chain_threshold,
                       chain_cap, chain_out);
    }
    if (star->parsed()) return run_star(star_config, star_seeds, star_dir);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
