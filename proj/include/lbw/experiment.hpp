#pragma once

#include "lbw/cost_model.hpp"
#include "lbw/policies.hpp"
#include "lbw/queue_model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lbw {

struct ExperimentConfig {
    std::string experiment = "sweep"; // index_table | policy_grid | sweep
    std::vector<ServerParams> servers;
    std::vector<CostSpec> costs;
    std::vector<double> p;
    BlockingCost D;
    std::vector<std::string> policies{"whittle"};
    std::vector<int> B;
    double epsilon = 1e-8;
    long long horizon = 1'000'000;
    long long warmup = 10'000;
    std::vector<std::uint64_t> seeds{1};
    int batches = 20;
    int n_max = 200;
    std::string method = "auto"; // auto | exact | simulated
    bool action_map = false;
    std::string output;
};

// Throws ConfigError naming the offending field, e.g. "servers[1].q".
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

struct SweepRow {
    double p = 0.0;
    std::string policy;
    double mean_cost = 0.0;
    std::vector<double> mean_queue;
    double blocking_fraction = 0.0;
    std::string method; // exact | simulated
    double ci = 0.0;
    std::optional<double> rel_vs_whittle;
    std::optional<double> rel_vs_optimal;
    std::vector<int> B;
};

// (E[N^psi] - E[N^ref]) / E[N^ref] * 100
double relative_difference(double value, double reference);

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const RunOptions& opt);

// Subcommand drivers: write CSVs under opt.out_dir and a summary to `log`.
void run_index(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);
void run_policy_grid(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);
void run_simulate(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);
void run_value_iter(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);
void run_sweep_cmd(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);

// Dispatches on cfg.experiment.
void run_experiment(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);

// 9 significant digits, "inf"/"nan" spelled out.
std::string csv_number(double v);

} // namespace lbw
