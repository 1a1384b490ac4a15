#include "lbw/sim.hpp"

#include "lbw/errors.hpp"
#include "lbw/rng.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <iostream>

namespace lbw {

namespace {

enum Purpose : std::uint32_t { kArrivals = 1, kDepartures = 2, kTies = 3 };

struct BatchStat {
    std::vector<double> sums;
    double mean() const
    {
        double s = 0.0;
        for (double v : sums)
            s += v;
        return s / static_cast<double>(sums.size());
    }
    // half-width from the spread of batch means
    double half_width(double len) const
    {
        const int n = static_cast<int>(sums.size());
        const double m = mean() / len;
        double ss = 0.0;
        for (double v : sums)
            ss += (v / len - m) * (v / len - m);
        return t_quantile_975(n - 1) * std::sqrt(ss / (n - 1) / n);
    }
};

void check(const SimConfig& c)
{
    const int K = static_cast<int>(c.servers.size());
    if (K < 1)
        throw ConfigError("simulation needs at least one server");
    if (c.costs.size() != c.servers.size())
        throw ConfigError("one cost per server is required");
    for (int k = 0; k < K; ++k) {
        validate(c.servers[k]);
        validate(c.costs[k]);
    }
    if (!(c.p >= 0.0 && c.p < 1.0))
        throw ConfigError("arrival probability p must lie in [0,1)");
    if (c.batches < 10)
        throw ConfigError("at least 10 batches are required");
    if (c.warmup < 0 || c.warmup >= c.horizon)
        throw ConfigError("warmup must be non-negative and below the horizon");
    if ((c.horizon - c.warmup) / c.batches < 1)
        throw ConfigError("horizon too short for the requested number of batches");
    if (arity(c.policy) != K)
        throw ConfigError("policy and servers disagree on the number of servers");
    validate(c.policy);
}

} // namespace

double t_quantile_975(int df)
{
    boost::math::students_t dist(df);
    return boost::math::quantile(dist, 0.975);
}

SimEstimate simulate(const SimConfig& cfg)
{
    check(cfg);
    const int K = static_cast<int>(cfg.servers.size());
    PolicySpec pol = cfg.policy;

    Rng arrivals = make_stream(cfg.seed, kArrivals);
    Rng ties = make_stream(cfg.seed, kTies);
    std::vector<Rng> deps;
    for (int k = 0; k < K; ++k)
        deps.push_back(make_stream(cfg.seed, kDepartures, static_cast<std::uint32_t>(k)));

    std::vector<std::vector<double>> cost(K);
    auto cost_at = [&](int k, int n) {
        while (static_cast<int>(cost[k].size()) <= n)
            cost[k].push_back(cost_value(cfg.costs[k], cfg.servers[k], static_cast<int>(cost[k].size())));
        return cost[k][n];
    };

    const long long batch_len = (cfg.horizon - cfg.warmup) / cfg.batches;
    const long long total = cfg.warmup + batch_len * cfg.batches;
    const double blockD = cfg.D.is_infinite() ? 0.0 : *cfg.D.D;

    BatchStat bc{std::vector<double>(cfg.batches, 0.0)};
    BatchStat ba{std::vector<double>(cfg.batches, 0.0)};
    BatchStat bd{std::vector<double>(cfg.batches, 0.0)};
    std::vector<double> qsum(K, 0.0);
    long long arrivals_seen = 0, blocked = 0;

    SimEstimate est;
    std::vector<int> N(K, 0);
    for (long long t = 0; t < total; ++t) {
        const bool measured = t >= cfg.warmup;
        const int b = measured ? static_cast<int>((t - cfg.warmup) / batch_len) : 0;
        double c = 0.0;
        for (int k = 0; k < K; ++k) {
            c += cost_at(k, N[k]);
            if (measured) {
                qsum[k] += N[k];
                est.max_queue = std::max(est.max_queue, N[k]);
            }
        }

        int routed = -1;
        if (bernoulli(arrivals, cfg.p)) {
            DispatchAction a;
            while (true) {
                try {
                    a = decide(pol, N, ties);
                    break;
                } catch (const TableRangeError&) {
                    const int need = 2 * *std::max_element(N.begin(), N.end());
                    pol = cover_states(pol, need);
                    ++est.table_extensions;
                    std::cerr << "sim: index tables extended to n=" << table_limit(pol) << "\n";
                }
            }
            if (measured)
                ++arrivals_seen;
            if (a.is_block()) {
                c += blockD;
                if (measured)
                    ++blocked;
            } else {
                routed = a.server;
            }
        }

        long long departed = 0;
        for (int k = 0; k < K; ++k) {
            const int m = cfg.servers[k].shares(N[k]);
            int r = 0;
            if (m > 0) {
                const double pr = cfg.servers[k].q / m;
                for (int j = 0; j < m; ++j)
                    r += bernoulli(deps[k], pr);
            }
            departed += r;
            N[k] -= r;
        }
        if (routed >= 0) {
            if (++N[routed] > kQueueOverflow)
                throw OverflowError("queue on server " + std::to_string(routed + 1) + " exceeded "
                                    + std::to_string(kQueueOverflow) + " jobs; policy looks unstable");
        }

        if (measured) {
            bc.sums[b] += c;
            ba.sums[b] += routed >= 0 ? 1.0 : 0.0;
            bd.sums[b] += static_cast<double>(departed);
        }
    }

    const double L = static_cast<double>(batch_len);
    const double M = static_cast<double>(total - cfg.warmup);
    est.mean_cost = bc.mean() / L;
    est.ci = bc.half_width(L);
    est.accepted_rate = ba.mean() / L;
    est.accepted_ci = ba.half_width(L);
    est.departure_rate = bd.mean() / L;
    est.departure_ci = bd.half_width(L);
    est.mean_queue.resize(K);
    for (int k = 0; k < K; ++k)
        est.mean_queue[k] = qsum[k] / M;
    est.blocking_fraction = arrivals_seen ? static_cast<double>(blocked) / static_cast<double>(arrivals_seen) : 0.0;
    est.slots = total;
    return est;
}

std::vector<SimEstimate> simulate_replicas(const SimConfig& cfg, const std::vector<std::uint64_t>& seeds)
{
    check(cfg);
    std::vector<SimEstimate> out(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    const long long n = static_cast<long long>(seeds.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < n; ++i) {
        SimConfig c = cfg;
        c.seed = seeds[i];
        try {
            out[i] = simulate(c);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

} // namespace lbw
