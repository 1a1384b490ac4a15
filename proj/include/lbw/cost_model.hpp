#pragma once

#include "lbw/queue_model.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace lbw {

struct Linear {
    double C = 1.0;
};
struct MeanVariance {
    double beta = 0.001;
    double theta = 0.9;
};

using CostSpec = std::variant<Linear, MeanVariance>;

// Per-job blocking penalty; nullopt is the no-blocking model (D = infinity).
struct BlockingCost {
    std::optional<double> D;

    static BlockingCost infinite() { return {}; }
    static BlockingCost finite(double d) { return {d}; }
    bool is_infinite() const { return !D.has_value(); }
    // p*D, or 0 when D is infinite (the term is dropped, not taken to a limit)
    double pD(double p) const { return D ? p * *D : 0.0; }
};

void validate(const CostSpec& c);

double cost_value(const CostSpec& c, const ServerParams& s, int n);

// C(0..n_max)
std::vector<double> cost_values(const CostSpec& c, const ServerParams& s, int n_max);

double expected_cost(const std::vector<double>& dist, const CostSpec& c, const ServerParams& s);

// Throws MonotonicityViolation if C(n+1) < C(n) - 1e-12 for some n < n_max.
void check_cost_monotone(const CostSpec& c, const ServerParams& s, int n_max);

} // namespace lbw
