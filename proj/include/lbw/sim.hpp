#pragma once

#include "lbw/cost_model.hpp"
#include "lbw/policies.hpp"
#include "lbw/queue_model.hpp"

#include <cstdint>
#include <vector>

namespace lbw {

inline constexpr int kQueueOverflow = 1'000'000;

struct SimConfig {
    std::vector<ServerParams> servers;
    double p = 0.0;
    std::vector<CostSpec> costs;
    BlockingCost D;
    PolicySpec policy;
    long long horizon = 1'000'000; // total slots, warmup included
    long long warmup = 10'000;
    std::uint64_t seed = 1;
    int batches = 20;
};

struct SimEstimate {
    double mean_cost = 0.0;
    double ci = 0.0; // 95% half-width, batch means
    std::vector<double> mean_queue;
    double blocking_fraction = 0.0; // blocked / arrivals
    double accepted_rate = 0.0;     // accepted arrivals per slot
    double accepted_ci = 0.0;
    double departure_rate = 0.0;
    double departure_ci = 0.0;
    int max_queue = 0; // largest queue length seen on any server
    long long slots = 0;
    int table_extensions = 0;
};

// One replica. Streams: arrivals, one per server for departures, one for tie-breaks.
SimEstimate simulate(const SimConfig& cfg);

// Independent replicas, one per seed, run in parallel; results in seed order.
std::vector<SimEstimate> simulate_replicas(const SimConfig& cfg, const std::vector<std::uint64_t>& seeds);

// Two-sided 95% Student-t quantile with df degrees of freedom.
double t_quantile_975(int df);

} // namespace lbw
