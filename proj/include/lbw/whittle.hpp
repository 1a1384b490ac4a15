#pragma once

#include "lbw/cost_model.hpp"
#include "lbw/queue_model.hpp"

#include <vector>

namespace lbw {

struct IndexDiagnostics {
    bool cumulative_mass_strictly_increasing = false;
    bool index_non_increasing = false;
};

struct IndexTable {
    ServerParams params;
    CostSpec cost;
    double p = 0.0;
    BlockingCost D;
    std::vector<double> values;
    // log10 of sum_{m<=n} pi^n(m) - sum_{m<=n-1} pi^{n-1}(m); may sit far below double's range
    std::vector<double> log10_mass_increment;
    IndexDiagnostics diagnostics;
    int n_max = 0;

    bool usable() const
    {
        return diagnostics.cumulative_mass_strictly_increasing && diagnostics.index_non_increasing;
    }
    // Throws TableRangeError past n_max.
    double at(int n) const;
    // Smallest n with W(n) < 0, or -1 if the table has none.
    int first_negative() const;
};

// Index at a single state together with the precision it needed.
struct GeneralIndex {
    double value = 0.0;
    double log10_mass_increment = 0.0;
    int digits = 0;
};

GeneralIndex whittle_index_general_detail(const ServerParams& s, const CostSpec& c, double p,
                                          const BlockingCost& D, int n);

double whittle_index_general(const ServerParams& s, const CostSpec& c, double p,
                             const BlockingCost& D, int n);

// n = 0..n_to in one pass, reusing each stationary vector for the next state.
std::vector<GeneralIndex> whittle_index_general_range(const ServerParams& s, const CostSpec& c,
                                                      double p, const BlockingCost& D, int n_to);

double whittle_index_fcfs(double p, double q, const CostSpec& c, const BlockingCost& D, int n);

double whittle_index_fcfs_linear(double p, double q, double C, const BlockingCost& D, int n);

// W(n+1) - W(n) for FCFS in product form.
double fcfs_index_difference(double p, double q, const CostSpec& c, int n);

// g^n(W); n = -1 is the chain that never accepts.
double subsidy_cost(const ServerParams& s, const CostSpec& c, double p, const BlockingCost& D,
                    int n, double W);

struct ReportOptions {
    int n_max = 200;
    bool early_stop = true;
};

IndexTable indexability_report(const ServerParams& s, const CostSpec& c, double p,
                               const BlockingCost& D, ReportOptions opt = {});

inline IndexTable indexability_report(const ServerParams& s, const CostSpec& c, double p,
                                      const BlockingCost& D, int n_max)
{
    return indexability_report(s, c, p, D, ReportOptions{n_max, true});
}

// Rebuilds the table to cover at least n (doubling n_max), without early stop.
IndexTable extend_table(const IndexTable& t, int n);

} // namespace lbw
