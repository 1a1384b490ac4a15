#include "lbw/experiment.hpp"

#include "lbw/errors.hpp"
#include "lbw/mdp.hpp"
#include "lbw/sim.hpp"
#include "lbw/whittle.hpp"

#include <json.hpp>

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace lbw {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what)
{
    throw ConfigError(path + ": " + what);
}

double get_number(const json& j, const std::string& path)
{
    if (!j.is_number())
        bad(path, "expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v))
        bad(path, "expected a finite number");
    return v;
}

long long get_int(const json& j, const std::string& path)
{
    if (!j.is_number_integer())
        bad(path, "expected an integer");
    return j.get<long long>();
}

std::uint64_t get_u64(const json& j, const std::string& path)
{
    if (j.is_number_unsigned())
        return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<long long>() >= 0)
        return static_cast<std::uint64_t>(j.get<long long>());
    bad(path, "expected a non-negative integer");
}

CostSpec parse_cost(const json& j, const std::string& path)
{
    if (!j.is_object())
        bad(path, "expected an object");
    if (!j.contains("type") || !j["type"].is_string())
        bad(path + ".type", "expected \"linear\" or \"mean_variance\"");
    const auto type = j["type"].get<std::string>();
    CostSpec c;
    if (type == "linear") {
        for (const auto& [k, v] : j.items())
            if (k != "type" && k != "C")
                bad(path + "." + k, "unknown field");
        Linear l;
        if (j.contains("C"))
            l.C = get_number(j["C"], path + ".C");
        c = l;
    } else if (type == "mean_variance") {
        for (const auto& [k, v] : j.items())
            if (k != "type" && k != "beta" && k != "theta")
                bad(path + "." + k, "unknown field");
        MeanVariance m;
        if (j.contains("beta"))
            m.beta = get_number(j["beta"], path + ".beta");
        if (j.contains("theta"))
            m.theta = get_number(j["theta"], path + ".theta");
        c = m;
    } else {
        bad(path + ".type", "expected \"linear\" or \"mean_variance\", got \"" + type + "\"");
    }
    try {
        validate(c);
    } catch (const ConfigError& e) {
        bad(path, e.what());
    }
    return c;
}

ServerParams parse_server(const json& j, const std::string& path)
{
    if (!j.is_object())
        bad(path, "expected an object with fields d and q");
    for (const auto& [k, v] : j.items())
        if (k != "d" && k != "q" && k != "label")
            bad(path + "." + k, "unknown field");
    if (!j.contains("d"))
        bad(path + ".d", "missing");
    if (!j.contains("q"))
        bad(path + ".q", "missing");
    ServerParams s;
    const auto& d = j["d"];
    if (d.is_string()) {
        if (d.get<std::string>() != "infinite")
            bad(path + ".d", "expected a positive integer or \"infinite\"");
        s.discipline = InfinitePS{};
    } else {
        long long dv = get_int(d, path + ".d");
        if (dv < 1 || dv > kMaxFiniteD)
            bad(path + ".d", "must lie in [1,64]");
        s.discipline = Finite{static_cast<int>(dv)};
    }
    s.q = get_number(j["q"], path + ".q");
    if (!(s.q > 0.0 && s.q <= 1.0))
        bad(path + ".q", "must lie in (0,1]");
    if (j.contains("label")) {
        if (!j["label"].is_string())
            bad(path + ".label", "expected a string");
        s.label = j["label"].get<std::string>();
    }
    return s;
}

std::string action_label(const DispatchAction& a)
{
    return a.is_block() ? "block" : std::to_string(a.server + 1);
}

std::string server_name(const ExperimentConfig& cfg, int k)
{
    return cfg.servers[k].label.empty() ? std::to_string(k + 1) : cfg.servers[k].label;
}

fs::path output_path(const ExperimentConfig& cfg, const RunOptions& opt, const std::string& fallback)
{
    fs::path dir(opt.out_dir.empty() ? "." : opt.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    if (cfg.output.empty())
        return dir / fallback;
    fs::path o(cfg.output);
    return o.is_absolute() ? o : dir / o;
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f)
        throw ConfigError("failed writing " + path.string());
}

double single_p(const ExperimentConfig& cfg, const std::string& cmd)
{
    if (cfg.p.size() != 1)
        throw ConfigError("p: " + cmd + " needs a single arrival probability");
    return cfg.p[0];
}

std::vector<std::uint64_t> seeds_for(const ExperimentConfig& cfg, const RunOptions& opt)
{
    if (opt.seed)
        return {*opt.seed};
    return cfg.seeds;
}

PolicySpec make_policy(const ExperimentConfig& cfg, const std::string& name, double p)
{
    const int K = static_cast<int>(cfg.servers.size());
    if (name == "whittle")
        return make_whittle(cfg.servers, cfg.costs, p, cfg.D, ReportOptions{cfg.n_max, true});
    if (name == "jsq")
        return JSQ{K};
    if (name == "rsa")
        return RSA{K};
    std::vector<double> q;
    for (const auto& s : cfg.servers)
        q.push_back(s.q);
    return JSEW{q};
}

SimConfig sim_config(const ExperimentConfig& cfg, double p, PolicySpec pol, std::uint64_t seed)
{
    SimConfig sc;
    sc.servers = cfg.servers;
    sc.p = p;
    sc.costs = cfg.costs;
    sc.D = cfg.D;
    sc.policy = std::move(pol);
    sc.horizon = cfg.horizon;
    sc.warmup = cfg.warmup;
    sc.seed = seed;
    sc.batches = cfg.batches;
    return sc;
}

} // namespace

std::string csv_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

double relative_difference(double value, double reference)
{
    return (value - reference) / reference * 100.0;
}

ExperimentConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object())
        bad("config", "expected a JSON object");
    static const std::set<std::string> known{"experiment", "servers", "cost", "p", "D", "policies",
                                             "B", "epsilon", "horizon", "warmup", "seeds", "batches",
                                             "n_max", "method", "action_map", "output"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k))
            bad(k, "unknown field");

    ExperimentConfig c;
    if (j.contains("experiment")) {
        if (!j["experiment"].is_string())
            bad("experiment", "expected a string");
        c.experiment = j["experiment"].get<std::string>();
        if (c.experiment != "index_table" && c.experiment != "policy_grid" && c.experiment != "sweep")
            bad("experiment", "expected index_table, policy_grid or sweep");
    }

    if (!j.contains("servers") || !j["servers"].is_array() || j["servers"].empty())
        bad("servers", "expected a non-empty array");
    for (size_t i = 0; i < j["servers"].size(); ++i)
        c.servers.push_back(parse_server(j["servers"][i], "servers[" + std::to_string(i) + "]"));
    const int K = static_cast<int>(c.servers.size());

    if (!j.contains("cost")) {
        c.costs.assign(K, Linear{1.0});
    } else if (j["cost"].is_array()) {
        if (static_cast<int>(j["cost"].size()) != K)
            bad("cost", "expected one entry per server");
        for (int k = 0; k < K; ++k)
            c.costs.push_back(parse_cost(j["cost"][k], "cost[" + std::to_string(k) + "]"));
    } else {
        c.costs.assign(K, parse_cost(j["cost"], "cost"));
    }

    double qsum = 0.0;
    for (const auto& s : c.servers)
        qsum += s.q;
    if (j.contains("p")) {
        const auto& p = j["p"];
        if (p.is_object()) {
            for (const auto& [k, v] : p.items())
                if (k != "from" && k != "to" && k != "steps")
                    bad("p." + k, "unknown field");
            if (!p.contains("from") || !p.contains("to") || !p.contains("steps"))
                bad("p", "range needs from, to and steps");
            double from = get_number(p["from"], "p.from");
            double to = get_number(p["to"], "p.to");
            long long steps = get_int(p["steps"], "p.steps");
            if (steps < 1)
                bad("p.steps", "must be at least 1");
            // rounded to 12 decimals so that e.g. 0.04..0.60 lands on 0.2 itself
            for (long long i = 0; i < steps; ++i) {
                const double x = steps == 1 ? from : from + (to - from) * static_cast<double>(i) / static_cast<double>(steps - 1);
                c.p.push_back(std::round(x * 1e12) / 1e12);
            }
        } else {
            c.p.push_back(get_number(p, "p"));
        }
    } else {
        const double top = std::min(qsum, 1.0);
        for (int i = 1; i <= 20; ++i)
            c.p.push_back(top * i / 21.0);
    }
    for (size_t i = 0; i < c.p.size(); ++i) {
        if (!(c.p[i] > 0.0 && c.p[i] < 1.0))
            bad("p", "arrival probabilities must lie in (0,1), got " + csv_number(c.p[i]));
        if (c.p[i] >= qsum) {
            if (c.experiment == "sweep" && c.p.size() > 1)
                bad("p", "sweep points must lie below the total service rate " + csv_number(qsum));
            std::cerr << "warning: p = " << c.p[i] << " is not below the total service rate " << qsum
                      << "; the system is unstable\n";
        }
    }

    if (j.contains("D")) {
        const auto& d = j["D"];
        if (d.is_string()) {
            if (d.get<std::string>() != "infinite")
                bad("D", "expected a non-negative number or \"infinite\"");
            c.D = BlockingCost::infinite();
        } else {
            double v = get_number(d, "D");
            if (v < 0.0)
                bad("D", "must be non-negative");
            c.D = BlockingCost::finite(v);
        }
    }

    if (j.contains("policies")) {
        if (!j["policies"].is_array() || j["policies"].empty())
            bad("policies", "expected a non-empty array");
        c.policies.clear();
        static const std::set<std::string> names{"whittle", "jsq", "jsew", "rsa", "optimal"};
        for (size_t i = 0; i < j["policies"].size(); ++i) {
            const auto& v = j["policies"][i];
            const std::string path = "policies[" + std::to_string(i) + "]";
            if (!v.is_string() || !names.count(v.get<std::string>()))
                bad(path, "expected one of whittle, jsq, jsew, rsa, optimal");
            if (std::find(c.policies.begin(), c.policies.end(), v.get<std::string>()) != c.policies.end())
                bad(path, "duplicate policy");
            c.policies.push_back(v.get<std::string>());
        }
    }
    if (std::find(c.policies.begin(), c.policies.end(), "optimal") != c.policies.end() && K > 3)
        bad("policies", "optimal needs at most 3 servers");

    if (j.contains("B")) {
        if (j["B"].is_array()) {
            if (static_cast<int>(j["B"].size()) != K)
                bad("B", "expected one bound per server");
            for (int k = 0; k < K; ++k)
                c.B.push_back(static_cast<int>(get_int(j["B"][k], "B[" + std::to_string(k) + "]")));
        } else {
            c.B.assign(K, static_cast<int>(get_int(j["B"], "B")));
        }
        for (int b : c.B)
            if (b < 1)
                bad("B", "bounds must be at least 1");
    } else {
        c.B.assign(K, 30);
    }

    if (j.contains("epsilon")) {
        c.epsilon = get_number(j["epsilon"], "epsilon");
        if (!(c.epsilon > 0.0))
            bad("epsilon", "must be positive");
    }
    if (j.contains("horizon"))
        c.horizon = get_int(j["horizon"], "horizon");
    if (j.contains("warmup"))
        c.warmup = get_int(j["warmup"], "warmup");
    if (c.warmup < 0 || c.warmup >= c.horizon)
        bad("warmup", "must be non-negative and below horizon");
    if (j.contains("batches")) {
        c.batches = static_cast<int>(get_int(j["batches"], "batches"));
        if (c.batches < 10)
            bad("batches", "must be at least 10");
    }
    if (j.contains("seeds")) {
        c.seeds.clear();
        if (j["seeds"].is_array()) {
            if (j["seeds"].empty())
                bad("seeds", "expected at least one seed");
            for (size_t i = 0; i < j["seeds"].size(); ++i)
                c.seeds.push_back(get_u64(j["seeds"][i], "seeds[" + std::to_string(i) + "]"));
        } else {
            c.seeds.push_back(get_u64(j["seeds"], "seeds"));
        }
    }
    if (j.contains("n_max")) {
        c.n_max = static_cast<int>(get_int(j["n_max"], "n_max"));
        if (c.n_max < 1)
            bad("n_max", "must be at least 1");
    }
    if (j.contains("method")) {
        if (!j["method"].is_string())
            bad("method", "expected a string");
        c.method = j["method"].get<std::string>();
        if (c.method != "auto" && c.method != "exact" && c.method != "simulated")
            bad("method", "expected auto, exact or simulated");
        if (c.method == "exact" && K > 3)
            bad("method", "exact evaluation needs at most 3 servers");
    }
    if (j.contains("action_map")) {
        if (!j["action_map"].is_boolean())
            bad("action_map", "expected true or false");
        c.action_map = j["action_map"].get<bool>();
    }
    if (j.contains("output")) {
        if (!j["output"].is_string())
            bad("output", "expected a string");
        c.output = j["output"].get<std::string>();
    }
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const RunOptions& opt)
{
    const int K = static_cast<int>(cfg.servers.size());
    const bool exact = cfg.method == "exact" || (cfg.method == "auto" && K <= 3);
    const std::uint64_t seed = seeds_for(cfg, opt).front();
    const bool want_opt = std::find(cfg.policies.begin(), cfg.policies.end(), "optimal") != cfg.policies.end();

    const long long n_points = static_cast<long long>(cfg.p.size());
    std::vector<std::vector<SweepRow>> per_point(cfg.p.size());
    std::vector<std::exception_ptr> errors(cfg.p.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < n_points; ++i) {
        try {
            const double p = cfg.p[i];
            std::vector<SweepRow> rows;
            std::vector<int> B_opt = cfg.B;
            for (const auto& name : cfg.policies) {
                if (name == "optimal")
                    continue;
                SweepRow r;
                r.p = p;
                r.policy = name;
                if (exact) {
                    r.method = "exact";
                    if (name == "rsa") {
                        auto v = rsa_exact(cfg.servers, p, cfg.costs);
                        r.mean_cost = v.g;
                        r.mean_queue = v.mean_queue;
                        r.B = cfg.B;
                    } else {
                        auto tv = evaluate_truncated(cfg.servers, p, cfg.costs, cfg.D, make_policy(cfg, name, p), cfg.B);
                        r.mean_cost = tv.value.g;
                        r.mean_queue = tv.value.mean_queue;
                        r.blocking_fraction = tv.value.blocking_fraction;
                        r.B = tv.B;
                        for (int k = 0; k < K; ++k)
                            B_opt[k] = std::max(B_opt[k], tv.B[k]);
                    }
                } else {
                    r.method = "simulated";
                    auto est = simulate(sim_config(cfg, p, make_policy(cfg, name, p), seed));
                    r.mean_cost = est.mean_cost;
                    r.ci = est.ci;
                    r.mean_queue = est.mean_queue;
                    r.blocking_fraction = est.blocking_fraction;
                }
                rows.push_back(std::move(r));
            }
            if (want_opt) {
                auto mdp = build_joint_mdp(cfg.servers, p, cfg.costs, cfg.D, B_opt);
                auto sol = value_iteration(mdp, ViOptions{cfg.epsilon});
                auto v = policy_evaluation(mdp, sol.action);
                SweepRow r;
                r.p = p;
                r.policy = "optimal";
                r.method = "exact";
                r.mean_cost = v.g; // exact cost of the VI policy, like the other exact rows
                r.mean_queue = v.mean_queue;
                r.blocking_fraction = v.blocking_fraction;
                r.B = B_opt;
                rows.push_back(std::move(r));
            }
            const SweepRow* w = nullptr;
            const SweepRow* o = nullptr;
            for (const auto& r : rows) {
                if (r.policy == "whittle")
                    w = &r;
                if (r.policy == "optimal")
                    o = &r;
            }
            for (auto& r : rows) {
                if (w)
                    r.rel_vs_whittle = relative_difference(r.mean_cost, w->mean_cost);
                if (o)
                    r.rel_vs_optimal = relative_difference(r.mean_cost, o->mean_cost);
            }
            per_point[i] = std::move(rows);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    std::vector<SweepRow> all;
    for (auto& v : per_point)
        for (auto& r : v)
            all.push_back(std::move(r));
    std::stable_sort(all.begin(), all.end(), [](const SweepRow& a, const SweepRow& b) {
        return a.p != b.p ? a.p < b.p : a.policy < b.policy;
    });
    return all;
}

void run_index(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log)
{
    const double p = single_p(cfg, "index");
    const int K = static_cast<int>(cfg.servers.size());
    std::vector<IndexTable> tables(K);
    std::vector<std::exception_ptr> errors(K);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < K; ++k) {
        try {
            tables[k] = indexability_report(cfg.servers[k], cfg.costs[k], p, cfg.D, ReportOptions{cfg.n_max, true});
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    std::string csv = "n,server,W\n";
    for (int k = 0; k < K; ++k)
        for (int n = 0; n <= tables[k].n_max; ++n)
            csv += std::to_string(n) + "," + server_name(cfg, k) + "," + csv_number(tables[k].values[n]) + "\n";
    const auto path = output_path(cfg, opt, "index.csv");
    write_file(path, csv);

    bool ok = true;
    for (int k = 0; k < K; ++k) {
        const auto& t = tables[k];
        log << "server " << server_name(cfg, k) << " (" << t.params.discipline_name() << ", q=" << t.params.q
            << "): n_max=" << t.n_max << " mass_increasing=" << t.diagnostics.cumulative_mass_strictly_increasing
            << " index_non_increasing=" << t.diagnostics.index_non_increasing;
        if (!cfg.D.is_infinite())
            log << " block_from=" << t.first_negative();
        log << "\n";
        ok = ok && t.usable();
    }
    int common = INT_MAX;
    for (const auto& t : tables)
        common = std::min(common, t.n_max);
    log << "argmax by n:";
    for (int n = 0; n <= common; ++n) {
        int best = 0;
        for (int k = 1; k < K; ++k)
            if (tables[k].values[n] > tables[best].values[n])
                best = k;
        log << " " << n << ":";
        bool first = true;
        for (int k = 0; k < K; ++k)
            if (scores_tied(tables[k].values[n], tables[best].values[n])) {
                log << (first ? "" : "=") << server_name(cfg, k);
                first = false;
            }
    }
    log << "\nwrote " << path.string() << "\n";
    if (!ok)
        throw MonotonicityViolation("an index table failed its indexability diagnostics");
}

void run_policy_grid(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log)
{
    if (cfg.servers.size() != 2)
        throw ConfigError("servers: policy_grid needs exactly two servers");
    const double p = single_p(cfg, "policy-grid");
    const int B = *std::max_element(cfg.B.begin(), cfg.B.end());
    for (const auto& name : cfg.policies) {
        std::vector<std::vector<DispatchAction>> grid;
        if (name == "optimal") {
            auto mdp = build_joint_mdp(cfg.servers, p, cfg.costs, cfg.D, {B, B});
            auto sol = value_iteration(mdp, ViOptions{cfg.epsilon});
            grid.assign(B + 1, std::vector<DispatchAction>(B + 1));
            for (int a = 0; a <= B; ++a)
                for (int b = 0; b <= B; ++b) {
                    int act = sol.action[mdp.encode({a, b})];
                    grid[a][b] = mdp.is_block(act) ? DispatchAction::block() : DispatchAction::route(act);
                }
        } else {
            PolicySpec pol = make_policy(cfg, name, p);
            if (table_limit(pol) < B)
                pol = cover_states(pol, B);
            grid = switching_grid(pol, B);
        }
        std::string csv = "n1,n2,action\n";
        int counts[3] = {0, 0, 0};
        for (int a = 0; a <= B; ++a)
            for (int b = 0; b <= B; ++b) {
                csv += std::to_string(a) + "," + std::to_string(b) + "," + action_label(grid[a][b]) + "\n";
                ++counts[grid[a][b].is_block() ? 2 : grid[a][b].server];
            }
        ExperimentConfig named = cfg;
        if (!cfg.output.empty() && cfg.policies.size() > 1)
            named.output = fs::path(cfg.output).stem().string() + "_" + name + fs::path(cfg.output).extension().string();
        const auto path = output_path(named, opt, "grid_" + name + ".csv");
        write_file(path, csv);
        log << name << ": route1=" << counts[0] << " route2=" << counts[1] << " block=" << counts[2] << " -> "
            << path.string() << "\n";
    }
}

void run_simulate(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log)
{
    const int K = static_cast<int>(cfg.servers.size());
    const auto seeds = seeds_for(cfg, opt);
    struct Job {
        double p;
        std::string policy;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (double p : cfg.p)
        for (const auto& name : cfg.policies) {
            if (name == "optimal")
                throw ConfigError("policies: optimal has no simulation rule; use value-iter or sweep");
            for (auto s : seeds)
                jobs.push_back({p, name, s});
        }
    // tables are shared by all seeds at a given p
    std::map<std::pair<double, std::string>, PolicySpec> specs;
    for (const auto& j : jobs)
        if (!specs.count({j.p, j.policy}))
            specs.emplace(std::make_pair(j.p, j.policy), make_policy(cfg, j.policy, j.p));

    std::vector<SimEstimate> est(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    const long long nj = static_cast<long long>(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < nj; ++i) {
        try {
            est[i] = simulate(sim_config(cfg, jobs[i].p, specs.at({jobs[i].p, jobs[i].policy}), jobs[i].seed));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    std::string csv = "p,policy,mean_cost,ci";
    for (int k = 0; k < K; ++k)
        csv += ",mean_q" + std::to_string(k + 1);
    csv += ",blocking_fraction,seed,slots\n";
    for (size_t i = 0; i < jobs.size(); ++i) {
        csv += csv_number(jobs[i].p) + "," + jobs[i].policy + "," + csv_number(est[i].mean_cost) + ","
            + csv_number(est[i].ci);
        for (double q : est[i].mean_queue)
            csv += "," + csv_number(q);
        csv += "," + csv_number(est[i].blocking_fraction) + "," + std::to_string(jobs[i].seed) + ","
            + std::to_string(est[i].slots) + "\n";
        log << "p=" << csv_number(jobs[i].p) << " " << jobs[i].policy << " seed=" << jobs[i].seed
            << " cost=" << csv_number(est[i].mean_cost) << " +- " << csv_number(est[i].ci) << "\n";
    }
    const auto path = output_path(cfg, opt, "simulate.csv");
    write_file(path, csv);
    log << "wrote " << path.string() << "\n";
}

void run_value_iter(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log)
{
    const int K = static_cast<int>(cfg.servers.size());
    std::string csv = "p,g,iterations,span\n";
    for (size_t i = 0; i < cfg.p.size(); ++i) {
        const double p = cfg.p[i];
        auto mdp = build_joint_mdp(cfg.servers, p, cfg.costs, cfg.D, cfg.B);
        auto sol = value_iteration(mdp, ViOptions{cfg.epsilon});
        csv += csv_number(p) + "," + csv_number(sol.g) + "," + std::to_string(sol.iterations) + ","
            + csv_number(sol.span) + "\n";
        log << "p=" << csv_number(p) << " g=" << csv_number(sol.g) << " iterations=" << sol.iterations << "\n";
        if (cfg.action_map) {
            std::string am;
            for (int k = 0; k < K; ++k)
                am += "s" + std::to_string(k + 1) + ",";
            am += "action\n";
            for (std::size_t s = 0; s < mdp.n_states; ++s) {
                for (int v : mdp.decode(s))
                    am += std::to_string(v) + ",";
                const int a = sol.action[s];
                am += (mdp.is_block(a) ? std::string("block") : std::to_string(a + 1)) + "\n";
            }
            const auto path = output_path(ExperimentConfig{}, opt, "actions_p" + std::to_string(i) + ".csv");
            write_file(path, am);
            log << "wrote " << path.string() << "\n";
        }
    }
    const auto path = output_path(cfg, opt, "value_iter.csv");
    write_file(path, csv);
    log << "wrote " << path.string() << "\n";
}

void run_sweep_cmd(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log)
{
    const int K = static_cast<int>(cfg.servers.size());
    auto rows = run_sweep(cfg, opt);
    const auto has = [&](const char* name) {
        return std::find(cfg.policies.begin(), cfg.policies.end(), name) != cfg.policies.end();
    };
    const bool vs_w = has("whittle"), vs_o = has("optimal");
    std::string csv = "p,policy,method,mean_cost,ci";
    if (vs_w)
        csv += ",relative_diff_vs_whittle";
    if (vs_o)
        csv += ",relative_diff_vs_optimal";
    for (int k = 0; k < K; ++k)
        csv += ",mean_q" + std::to_string(k + 1);
    csv += ",blocking_fraction\n";
    for (const auto& r : rows) {
        csv += csv_number(r.p) + "," + r.policy + "," + r.method + "," + csv_number(r.mean_cost) + ","
            + (r.method == "simulated" ? csv_number(r.ci) : "");
        if (vs_w)
            csv += "," + (r.rel_vs_whittle ? csv_number(*r.rel_vs_whittle) : "");
        if (vs_o)
            csv += "," + (r.rel_vs_optimal ? csv_number(*r.rel_vs_optimal) : "");
        for (double q : r.mean_queue)
            csv += "," + csv_number(q);
        csv += "," + csv_number(r.blocking_fraction) + "\n";
    }
    const auto path = output_path(cfg, opt, "sweep.csv");
    write_file(path, csv);
    std::map<std::string, double> worst;
    for (const auto& r : rows)
        if (r.rel_vs_whittle && r.policy != "whittle")
            worst[r.policy] = std::max(worst.count(r.policy) ? worst[r.policy] : -1e300, *r.rel_vs_whittle);
    for (const auto& [name, v] : worst)
        log << name << ": max relative difference vs whittle " << csv_number(v) << "%\n";
    log << "wrote " << rows.size() << " rows to " << path.string() << "\n";
}

void run_experiment(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log)
{
    if (cfg.experiment == "index_table")
        run_index(cfg, opt, log);
    else if (cfg.experiment == "policy_grid")
        run_policy_grid(cfg, opt, log);
    else
        run_sweep_cmd(cfg, opt, log);
}

} // namespace lbw
