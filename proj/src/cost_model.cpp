#include "lbw/cost_model.hpp"

#include "lbw/detail/kernels.hpp"
#include "lbw/errors.hpp"

#include <cmath>
#include <string>

namespace lbw {

void validate(const CostSpec& c)
{
    if (auto* lin = std::get_if<Linear>(&c)) {
        if (!(lin->C >= 0.0) || !std::isfinite(lin->C))
            throw ConfigError("linear cost slope C must be a finite non-negative number");
        return;
    }
    const auto& mv = std::get<MeanVariance>(c);
    if (!(mv.beta >= 0.0 && mv.beta <= 1.0))
        throw ConfigError("mean_variance beta must lie in [0,1]");
    if (!(mv.theta >= 0.0) || !std::isfinite(mv.theta))
        throw ConfigError("mean_variance theta must be a finite non-negative number");
}

double cost_value(const CostSpec& c, const ServerParams& s, int n)
{
    return detail::cost_at<double>(c, s, n);
}

std::vector<double> cost_values(const CostSpec& c, const ServerParams& s, int n_max)
{
    std::vector<double> v(n_max + 1);
    for (int n = 0; n <= n_max; ++n)
        v[n] = cost_value(c, s, n);
    return v;
}

double expected_cost(const std::vector<double>& dist, const CostSpec& c, const ServerParams& s)
{
    double acc = 0.0;
    for (int m = 0; m < static_cast<int>(dist.size()); ++m)
        if (dist[m] != 0.0)
            acc += cost_value(c, s, m) * dist[m];
    return acc;
}

void check_cost_monotone(const CostSpec& c, const ServerParams& s, int n_max)
{
    double prev = cost_value(c, s, 0);
    for (int n = 1; n <= n_max; ++n) {
        double cur = cost_value(c, s, n);
        if (cur < prev - 1e-12)
            throw MonotonicityViolation("holding cost decreases between n=" + std::to_string(n - 1)
                                        + " and n=" + std::to_string(n) + " on server "
                                        + s.discipline_name());
        prev = cur;
    }
}

} // namespace lbw
