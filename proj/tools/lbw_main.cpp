// Command-line front end: lbw <index|policy-grid|simulate|value-iter|sweep> --config F

#include "lbw/errors.hpp"
#include "lbw/experiment.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Whittle-index load balancing for LPS-d queues"};
    app.require_subcommand(1);

    std::string config;
    std::uint64_t seed = 0;
    std::string out = ".";
    int threads = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Override the config's seeds with one seed");
    app.add_option("--out", out, "Output directory")->capture_default_str();
    app.add_option("--threads", threads, "OpenMP threads (0 keeps the runtime default)")->check(CLI::NonNegativeNumber);

    struct Cmd {
        const char* name;
        const char* help;
        void (*run)(const lbw::ExperimentConfig&, const lbw::RunOptions&, std::ostream&);
    };
    const Cmd cmds[] = {
        {"index", "Whittle index tables, CSV n,server,W", lbw::run_index},
        {"policy-grid", "Two-server switching grids, CSV n1,n2,action", lbw::run_policy_grid},
        {"simulate", "Monte Carlo estimates per p, policy and seed", lbw::run_simulate},
        {"value-iter", "Optimal average cost by relative value iteration", lbw::run_value_iter},
        {"sweep", "Policy comparison across the p grid", lbw::run_sweep_cmd},
    };
    std::vector<CLI::App*> subs;
    for (const auto& c : cmds) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", config, "JSON experiment config")->required();
        sub->fallthrough();
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (threads > 0)
        omp_set_num_threads(threads);
    lbw::RunOptions opt;
    opt.out_dir = out;
    if (seed_opt->count())
        opt.seed = seed;

    try {
        auto cfg = lbw::load_config(config);
        for (size_t i = 0; i < subs.size(); ++i)
            if (subs[i]->parsed())
                cmds[i].run(cfg, opt, std::cout);
    } catch (const lbw::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const lbw::NumericalError& e) {
        std::cerr << "numerical diagnostic: " << e.what() << "\n";
        return 3;
    } catch (const lbw::ConvergenceError& e) {
        std::cerr << "no convergence: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
