#include "lbw/policies.hpp"

#include "lbw/errors.hpp"

#include <climits>
#include <cmath>

namespace lbw {

bool scores_tied(double a, double b)
{
    return std::abs(a - b) <= kTieTol * std::max({1.0, std::abs(a), std::abs(b)});
}

namespace {

bool close(double a, double b)
{
    return scores_tied(a, b);
}

// Indices of the servers sharing the best score; higher is better.
std::vector<int> best_set(const std::vector<double>& score, const std::vector<bool>& eligible)
{
    std::vector<int> best;
    for (int k = 0; k < static_cast<int>(score.size()); ++k) {
        if (!eligible[k])
            continue;
        if (best.empty() || (score[k] > score[best[0]] && !close(score[k], score[best[0]]))) {
            best.assign(1, k);
        } else if (close(score[k], score[best[0]])) {
            best.push_back(k);
        }
    }
    return best;
}

struct Candidates {
    std::vector<int> set; // empty means block
};

Candidates candidates(const PolicySpec& pol, std::span<const int> state)
{
    const int K = arity(pol);
    if (static_cast<int>(state.size()) != K)
        throw ConfigError("state has " + std::to_string(state.size()) + " servers, policy has "
                          + std::to_string(K));
    std::vector<double> score(K);
    std::vector<bool> eligible(K, true);
    return std::visit(
        [&](const auto& p) -> Candidates {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, WhittleBlocking> || std::is_same_v<T, WhittleNoBlocking>) {
                for (int k = 0; k < K; ++k) {
                    score[k] = p.tables[k].at(state[k]);
                    if constexpr (std::is_same_v<T, WhittleBlocking>)
                        eligible[k] = score[k] >= 0.0;
                }
                return {best_set(score, eligible)};
            } else if constexpr (std::is_same_v<T, JSQ>) {
                for (int k = 0; k < K; ++k)
                    score[k] = -static_cast<double>(state[k]);
                return {best_set(score, eligible)};
            } else if constexpr (std::is_same_v<T, JSEW>) {
                for (int k = 0; k < K; ++k)
                    score[k] = -state[k] / p.q[k];
                return {best_set(score, eligible)};
            } else {
                std::vector<int> all(K);
                for (int k = 0; k < K; ++k)
                    all[k] = k;
                return {all};
            }
        },
        pol);
}

} // namespace

PolicySpec make_whittle(const std::vector<ServerParams>& servers, const std::vector<CostSpec>& costs,
                        double p, const BlockingCost& D, ReportOptions opt)
{
    if (servers.size() != costs.size())
        throw ConfigError("one cost per server is required");
    std::vector<IndexTable> tables;
    for (size_t k = 0; k < servers.size(); ++k)
        tables.push_back(indexability_report(servers[k], costs[k], p, D, opt));
    PolicySpec pol = D.is_infinite() ? PolicySpec{WhittleNoBlocking{std::move(tables)}}
                                     : PolicySpec{WhittleBlocking{std::move(tables)}};
    validate(pol);
    return pol;
}

void validate(const PolicySpec& pol)
{
    std::visit(
        [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, WhittleBlocking> || std::is_same_v<T, WhittleNoBlocking>) {
                if (p.tables.empty())
                    throw ConfigError("Whittle policy needs at least one index table");
                for (const auto& t : p.tables) {
                    if (!t.usable())
                        throw MonotonicityViolation("index table for " + t.params.discipline_name()
                                                    + " failed its indexability diagnostics");
                    if (std::is_same_v<T, WhittleBlocking> == t.D.is_infinite())
                        throw ConfigError("blocking rule requires finite D, no-blocking rule infinite D");
                }
            } else if constexpr (std::is_same_v<T, JSEW>) {
                if (p.q.empty())
                    throw ConfigError("JSEW needs service probabilities");
                for (double q : p.q)
                    if (!(q > 0.0))
                        throw ConfigError("JSEW requires q > 0 on every server");
            } else {
                if (p.K < 1)
                    throw ConfigError("policy needs at least one server");
            }
        },
        pol);
}

int arity(const PolicySpec& pol)
{
    return std::visit(
        [](const auto& p) -> int {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, WhittleBlocking> || std::is_same_v<T, WhittleNoBlocking>)
                return static_cast<int>(p.tables.size());
            else if constexpr (std::is_same_v<T, JSEW>)
                return static_cast<int>(p.q.size());
            else
                return p.K;
        },
        pol);
}

std::string policy_name(const PolicySpec& pol)
{
    switch (pol.index()) {
    case 0:
    case 1:
        return "whittle";
    case 2:
        return "jsq";
    case 3:
        return "jsew";
    default:
        return "rsa";
    }
}

bool is_whittle(const PolicySpec& pol)
{
    return pol.index() <= 1;
}

int table_limit(const PolicySpec& pol)
{
    int lim = INT_MAX;
    auto scan = [&](const std::vector<IndexTable>& ts) {
        for (const auto& t : ts)
            lim = std::min(lim, t.n_max);
    };
    if (auto* w = std::get_if<WhittleBlocking>(&pol))
        scan(w->tables);
    if (auto* w = std::get_if<WhittleNoBlocking>(&pol))
        scan(w->tables);
    return lim;
}

PolicySpec cover_states(const PolicySpec& pol, int n)
{
    auto grow = [n](std::vector<IndexTable> ts) {
        for (auto& t : ts)
            if (t.n_max < n)
                t = extend_table(t, n);
        return ts;
    };
    if (auto* w = std::get_if<WhittleBlocking>(&pol))
        return WhittleBlocking{grow(w->tables)};
    if (auto* w = std::get_if<WhittleNoBlocking>(&pol))
        return WhittleNoBlocking{grow(w->tables)};
    return pol;
}

DispatchAction decide(const PolicySpec& pol, std::span<const int> state, TieBreak tb, Rng* rng)
{
    auto c = candidates(pol, state);
    if (c.set.empty())
        return DispatchAction::block();
    if (c.set.size() == 1 || tb == TieBreak::Lowest)
        return DispatchAction::route(c.set[0]);
    if (!rng)
        throw ConfigError("random tie-break needs a random source");
    return DispatchAction::route(c.set[uniform_index(*rng, static_cast<int>(c.set.size()))]);
}

DispatchAction decide(const PolicySpec& pol, std::span<const int> state, Rng& rng)
{
    return decide(pol, state, TieBreak::Random, &rng);
}

std::vector<std::pair<DispatchAction, double>> action_distribution(const PolicySpec& pol,
                                                                   std::span<const int> state)
{
    auto c = candidates(pol, state);
    if (c.set.empty())
        return {{DispatchAction::block(), 1.0}};
    std::vector<std::pair<DispatchAction, double>> out;
    const double w = 1.0 / static_cast<double>(c.set.size());
    for (int k : c.set)
        out.emplace_back(DispatchAction::route(k), w);
    return out;
}

std::vector<std::vector<DispatchAction>> switching_grid(const PolicySpec& pol, int B)
{
    if (arity(pol) != 2)
        throw ConfigError("switching grids need exactly two servers");
    std::vector<std::vector<DispatchAction>> g(B + 1, std::vector<DispatchAction>(B + 1));
    for (int a = 0; a <= B; ++a)
        for (int b = 0; b <= B; ++b) {
            const int s[2] = {a, b};
            g[a][b] = decide(pol, s, TieBreak::Lowest, nullptr);
        }
    return g;
}

} // namespace lbw
