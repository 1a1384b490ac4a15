#pragma once

#include "lbw/rng.hpp"
#include "lbw/whittle.hpp"

#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace lbw {

struct WhittleBlocking {
    std::vector<IndexTable> tables;
};
struct WhittleNoBlocking {
    std::vector<IndexTable> tables;
};
struct JSQ {
    int K = 2;
};
struct JSEW {
    std::vector<double> q;
};
struct RSA {
    int K = 2;
};

using PolicySpec = std::variant<WhittleBlocking, WhittleNoBlocking, JSQ, JSEW, RSA>;

struct DispatchAction {
    int server = -1; // 0-based; -1 blocks

    static DispatchAction route(int k) { return {k}; }
    static DispatchAction block() { return {-1}; }
    bool is_block() const { return server < 0; }
    bool operator==(const DispatchAction&) const = default;
};

enum class TieBreak { Random, Lowest };

// Relative tolerance for treating two scores as tied.
inline constexpr double kTieTol = 1e-12;
bool scores_tied(double a, double b);

// Builds one index table per server and picks the blocking or no-blocking rule
// from D. Throws NumericalError if a table fails its indexability diagnostics.
PolicySpec make_whittle(const std::vector<ServerParams>& servers, const std::vector<CostSpec>& costs,
                        double p, const BlockingCost& D, ReportOptions opt = {});

// Validates the invariants (table flags, q > 0, blocking variant only with finite D).
void validate(const PolicySpec& pol);

int arity(const PolicySpec& pol);
std::string policy_name(const PolicySpec& pol);
bool is_whittle(const PolicySpec& pol);

// Extends Whittle tables so every state up to n is covered; other rules pass through.
PolicySpec cover_states(const PolicySpec& pol, int n);
int table_limit(const PolicySpec& pol); // smallest table n_max, or INT_MAX

DispatchAction decide(const PolicySpec& pol, std::span<const int> state, Rng& rng);
DispatchAction decide(const PolicySpec& pol, std::span<const int> state, TieBreak tb, Rng* rng);

// The randomized rule as explicit probabilities, for exact evaluation.
std::vector<std::pair<DispatchAction, double>> action_distribution(const PolicySpec& pol,
                                                                   std::span<const int> state);

// grid[n1][n2], lowest-index tie-break.
std::vector<std::vector<DispatchAction>> switching_grid(const PolicySpec& pol, int B);

} // namespace lbw
