#include "lbw/mdp.hpp"

#include "lbw/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace lbw {

std::vector<int> JointMdp::decode(std::size_t idx) const
{
    std::vector<int> s(K());
    for (int k = 0; k < K(); ++k)
        s[k] = static_cast<int>((idx / stride[k]) % static_cast<std::size_t>(B[k] + 1));
    return s;
}

std::size_t JointMdp::encode(const std::vector<int>& s) const
{
    std::size_t idx = 0;
    for (int k = 0; k < K(); ++k)
        idx += static_cast<std::size_t>(s[k]) * stride[k];
    return idx;
}

double JointMdp::stage_cost(std::size_t idx, int a) const
{
    return stage[idx] + (is_block(a) ? D.pD(p) : 0.0);
}

namespace {

// Product-form departures from idx, with the arrival (if any) joining `route`.
void departures(const JointMdp& m, std::size_t idx, int route, double weight,
                std::vector<JointMdp::Transition>& out)
{
    const int K = m.K();
    auto s = m.decode(idx);
    std::vector<int> base(K);
    for (int k = 0; k < K; ++k)
        base[k] = (k == route && s[k] < m.B[k]) ? s[k] + 1 : s[k];
    // odometer over i_1..i_K
    std::vector<int> i(K, 0);
    while (true) {
        double pr = weight;
        std::size_t to = 0;
        for (int k = 0; k < K; ++k) {
            pr *= m.pmf[k][s[k]][i[k]];
            to += static_cast<std::size_t>(base[k] - i[k]) * m.stride[k];
        }
        if (pr != 0.0)
            out.push_back({to, pr});
        int k = K - 1;
        for (; k >= 0; --k) {
            if (++i[k] < static_cast<int>(m.pmf[k][s[k]].size()))
                break;
            i[k] = 0;
        }
        if (k < 0)
            break;
    }
}

// out = Op_k v: departures on coordinate k, shifted up by one when `arrive`
// and the coordinate is below its bound.
void apply_dim(const JointMdp& m, int k, bool arrive, const std::vector<double>& v, std::vector<double>& out)
{
    const long long S = static_cast<long long>(m.n_states);
    const std::size_t st = m.stride[k];
    const std::size_t Bk = static_cast<std::size_t>(m.B[k]);
    const auto& pk = m.pmf[k];
#pragma omp parallel for schedule(static)
    for (long long idx = 0; idx < S; ++idx) {
        const std::size_t x = (static_cast<std::size_t>(idx) / st) % (Bk + 1);
        const std::size_t a = (arrive && x < Bk) ? x + 1 : x;
        const std::size_t origin = static_cast<std::size_t>(idx) - x * st;
        const auto& w = pk[x];
        double acc = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            acc += w[i] * v[origin + (a - i) * st];
        out[idx] = acc;
    }
}

struct SweepWork {
    std::vector<std::vector<double>> zero; // zero[j] = Op_j^0 ... Op_{K-1}^0 v
    std::vector<std::vector<double>> route;
    std::vector<double> a, b;
};

void sweep_parallel(const JointMdp& m, const std::vector<double>& v, std::vector<double>& out,
                    std::vector<int>* action, SweepWork& w)
{
    const int K = m.K();
    const std::size_t S = m.n_states;
    w.zero.resize(K);
    w.route.resize(K);
    for (auto& z : w.zero)
        z.resize(S);
    for (auto& r : w.route)
        r.resize(S);
    w.a.resize(S);
    w.b.resize(S);

    for (int j = K - 1; j >= 0; --j)
        apply_dim(m, j, false, j == K - 1 ? v : w.zero[j + 1], w.zero[j]);
    for (int r = 0; r < K; ++r) {
        const std::vector<double>& src = (r == K - 1) ? v : w.zero[r + 1];
        if (r == 0) {
            apply_dim(m, 0, true, src, w.route[0]);
            continue;
        }
        apply_dim(m, r, true, src, w.a);
        for (int j = r - 1; j >= 0; --j) {
            std::vector<double>& dst = (j == 0) ? w.route[r] : w.b;
            apply_dim(m, j, false, w.a, dst);
            if (j != 0)
                std::swap(w.a, w.b);
        }
    }

    const double p = m.p;
    const bool can_block = !m.D.is_infinite();
    const double Dv = can_block ? *m.D.D : 0.0;
    const long long SS = static_cast<long long>(S);
    const auto& E0 = w.zero[0];
#pragma omp parallel for schedule(static)
    for (long long s = 0; s < SS; ++s) {
        int best = 0;
        double bv = w.route[0][s];
        for (int k = 1; k < K; ++k)
            if (w.route[k][s] < bv) {
                bv = w.route[k][s];
                best = k;
            }
        if (can_block && Dv + E0[s] < bv) {
            bv = Dv + E0[s];
            best = K;
        }
        out[s] = m.stage[s] + (1.0 - p) * E0[s] + p * bv;
        if (action)
            (*action)[s] = best;
    }
}

template <class Sweep>
SolveResult relative_vi(const JointMdp& m, const ViOptions& opt, Sweep&& sweep)
{
    const std::size_t S = m.n_states;
    SolveResult r;
    std::vector<double> v(S, 0.0), nv(S);
    r.action.assign(S, 0);
    for (long it = 1; it <= opt.max_iterations; ++it) {
        sweep(v, nv, &r.action);
        double mx = -std::numeric_limits<double>::infinity();
        double mn = std::numeric_limits<double>::infinity();
        const long long SS = static_cast<long long>(S);
#pragma omp parallel for reduction(max : mx) reduction(min : mn) schedule(static)
        for (long long s = 0; s < SS; ++s) {
            const double d = nv[s] - v[s];
            mx = std::max(mx, d);
            mn = std::min(mn, d);
        }
        r.span = mx - mn;
        r.g = 0.5 * (mx + mn);
        r.iterations = it;
        if (opt.keep_trace)
            r.span_trace.push_back(r.span);
        const double ref = nv[0];
        for (std::size_t s = 0; s < S; ++s)
            v[s] = nv[s] - ref;
        if (r.span <= opt.epsilon) {
            r.h = std::move(v);
            return r;
        }
    }
    throw ConvergenceError("value iteration did not reach span " + std::to_string(opt.epsilon) + " within "
                           + std::to_string(opt.max_iterations) + " iterations (span "
                           + std::to_string(r.span) + ")");
}

} // namespace

std::vector<JointMdp::Transition> JointMdp::transitions(std::size_t idx, int a) const
{
    std::vector<Transition> out;
    if (is_block(a)) {
        departures(*this, idx, -1, 1.0, out);
    } else {
        departures(*this, idx, -1, 1.0 - p, out);
        departures(*this, idx, a, p, out);
    }
    return out;
}

JointMdp build_joint_mdp(const std::vector<ServerParams>& servers, double p,
                         const std::vector<CostSpec>& costs, const BlockingCost& D,
                         const std::vector<int>& B, std::size_t state_cap)
{
    const int K = static_cast<int>(servers.size());
    if (K < 1 || K > 3)
        throw ConfigError("the exact solver handles 1 to 3 servers, got " + std::to_string(K));
    if (costs.size() != servers.size() || B.size() != servers.size())
        throw ConfigError("servers, costs and B must have the same length");
    if (!(p > 0.0 && p < 1.0))
        throw ConfigError("arrival probability p must lie in (0,1)");
    double qsum = 0.0;
    for (int k = 0; k < K; ++k) {
        validate(servers[k]);
        validate(costs[k]);
        if (B[k] < 1)
            throw ConfigError("truncation bound B must be at least 1");
        qsum += servers[k].q;
    }
    if (p >= qsum)
        std::cerr << "warning: p = " << p << " is not below the total service rate " << qsum << "\n";

    JointMdp m;
    m.servers = servers;
    m.p = p;
    m.costs = costs;
    m.D = D;
    m.B = B;
    m.stride.assign(K, 1);
    double total = 1.0;
    for (int k = 0; k < K; ++k)
        total *= B[k] + 1.0;
    if (total > static_cast<double>(state_cap))
        throw ConfigError("truncated state space has " + std::to_string(static_cast<long long>(total))
                          + " states, above the cap of " + std::to_string(state_cap));
    for (int k = K - 2; k >= 0; --k)
        m.stride[k] = m.stride[k + 1] * static_cast<std::size_t>(B[k + 1] + 1);
    m.n_states = static_cast<std::size_t>(total);

    m.pmf.resize(K);
    std::vector<std::vector<double>> cost(K);
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n <= B[k]; ++n)
            m.pmf[k].push_back(departure_pmf(servers[k], n));
        cost[k] = cost_values(costs[k], servers[k], B[k]);
    }
    m.stage.resize(m.n_states);
    for (std::size_t idx = 0; idx < m.n_states; ++idx) {
        double c = 0.0;
        for (int k = 0; k < K; ++k)
            c += cost[k][(idx / m.stride[k]) % static_cast<std::size_t>(B[k] + 1)];
        m.stage[idx] = c;
    }
    return m;
}

void bellman_sweep(const JointMdp& mdp, const std::vector<double>& v, std::vector<double>& out,
                   std::vector<int>* action)
{
    SweepWork w;
    sweep_parallel(mdp, v, out, action, w);
}

void bellman_sweep_reference(const JointMdp& mdp, const std::vector<double>& v,
                             std::vector<double>& out, std::vector<int>* action)
{
    const int A = mdp.n_actions();
    std::vector<JointMdp::Transition> row;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int a = 0; a < A; ++a) {
            row.clear();
            if (mdp.is_block(a)) {
                departures(mdp, s, -1, 1.0, row);
            } else {
                departures(mdp, s, -1, 1.0 - mdp.p, row);
                departures(mdp, s, a, mdp.p, row);
            }
            double val = mdp.stage_cost(s, a);
            for (const auto& t : row)
                val += t.prob * v[t.to];
            if (val < best) {
                best = val;
                arg = a;
            }
        }
        out[s] = best;
        if (action)
            (*action)[s] = arg;
    }
}

SolveResult value_iteration(const JointMdp& mdp, ViOptions opt)
{
    SweepWork w;
    return relative_vi(mdp, opt, [&](const std::vector<double>& v, std::vector<double>& out, std::vector<int>* a) {
        sweep_parallel(mdp, v, out, a, w);
    });
}

SolveResult value_iteration_reference(const JointMdp& mdp, ViOptions opt)
{
    return relative_vi(mdp, opt, [&](const std::vector<double>& v, std::vector<double>& out, std::vector<int>* a) {
        bellman_sweep_reference(mdp, v, out, a);
    });
}

namespace {

// Stationary evaluation of a randomized stationary policy given as, per state,
// a list of (action, weight).
template <class ActionsAt>
PolicyValue evaluate(const JointMdp& m, ActionsAt&& actions_at)
{
    const std::size_t S = m.n_states;
    const int K = m.K();
    const double p = m.p;
    std::vector<Eigen::Triplet<double>> gen;
    std::vector<double> cost(S), block_w(S), loss_w(S);
    std::vector<JointMdp::Transition> row;

    for (std::size_t s = 0; s < S; ++s) {
        auto acts = actions_at(s);
        row.clear();
        double none = 1.0 - p;
        auto st = m.decode(s);
        for (const auto& [a, w] : acts) {
            if (m.is_block(a)) {
                none += p * w;
                block_w[s] += w;
            } else {
                departures(m, s, a, p * w, row);
                if (st[a] == m.B[a])
                    loss_w[s] += w;
            }
        }
        departures(m, s, -1, none, row);
        cost[s] = m.stage[s] + m.D.pD(p) * block_w[s];
        for (const auto& t : row)
            gen.emplace_back(static_cast<Eigen::Index>(t.to), static_cast<Eigen::Index>(s), t.prob);
    }

    // Balance equations with one state pinned to 1, normalised afterwards. The empty state is
    // recurrent under every rule; when it is too unlikely to pivot on, the all-full state is used.
    const auto n = static_cast<Eigen::Index>(S);
    auto solve = [&](Eigen::Index pin, std::string& err) -> std::optional<Eigen::VectorXd> {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(gen.size() + S);
        for (const auto& t : gen)
            if (t.row() != pin)
                trip.push_back(t);
        for (Eigen::Index i = 0; i < n; ++i)
            trip.emplace_back(i, i, i == pin ? 1.0 : -1.0);
        Eigen::SparseMatrix<double> A(n, n);
        A.setFromTriplets(trip.begin(), trip.end());
        A.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success) {
            err = lu.lastErrorMessage();
            return std::nullopt;
        }
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        rhs(pin) = 1.0;
        Eigen::VectorXd x = lu.solve(rhs);
        if (lu.info() != Eigen::Success || !x.allFinite() || !(x.maxCoeff() > 0.0)) {
            err = "solve produced no finite positive solution";
            return std::nullopt;
        }
        return x;
    };
    std::string err;
    auto sol = solve(0, err);
    if (!sol)
        sol = solve(n - 1, err);
    if (!sol)
        throw SingularSolve("policy chain solve failed: " + err);
    const Eigen::VectorXd& x = *sol;

    PolicyValue r;
    r.pi.assign(x.data(), x.data() + S);
    for (auto& v : r.pi)
        v = std::max(v, 0.0);
    const double tot = std::accumulate(r.pi.begin(), r.pi.end(), 0.0);
    for (auto& v : r.pi)
        v /= tot;

    r.mean_queue.assign(K, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        const double w = r.pi[s];
        if (w == 0.0)
            continue;
        auto st = m.decode(s);
        r.g += w * cost[s];
        r.blocking_fraction += w * block_w[s];
        r.loss_fraction += w * loss_w[s];
        bool tail = false;
        for (int k = 0; k < K; ++k) {
            r.mean_queue[k] += w * st[k];
            tail = tail || st[k] > m.B[k] - 5;
        }
        if (tail)
            r.tail_mass += w;
    }
    return r;
}

} // namespace

PolicyValue policy_evaluation(const JointMdp& mdp, const PolicySpec& pol)
{
    if (arity(pol) != mdp.K())
        throw ConfigError("policy and MDP disagree on the number of servers");
    if (std::holds_alternative<WhittleBlocking>(pol) && mdp.D.is_infinite())
        throw ConfigError("blocking policy evaluated on a model without blocking cost");
    const int hi = *std::max_element(mdp.B.begin(), mdp.B.end());
    const PolicySpec use = table_limit(pol) < hi ? cover_states(pol, hi) : pol;
    const int K = mdp.K();
    return evaluate(mdp, [&](std::size_t s) {
        auto st = mdp.decode(s);
        std::vector<std::pair<int, double>> out;
        for (const auto& [a, w] : action_distribution(use, st))
            out.emplace_back(a.is_block() ? K : a.server, w);
        return out;
    });
}

PolicyValue policy_evaluation(const JointMdp& mdp, const std::vector<int>& action_map)
{
    if (action_map.size() != mdp.n_states)
        throw ConfigError("action map size does not match the state space");
    for (int a : action_map)
        if (a < 0 || a >= mdp.n_actions())
            throw ConfigError("action map holds an action outside the MDP's action set");
    return evaluate(mdp, [&](std::size_t s) {
        return std::vector<std::pair<int, double>>{{action_map[s], 1.0}};
    });
}

TruncatedValue evaluate_truncated(const std::vector<ServerParams>& servers, double p,
                                  const std::vector<CostSpec>& costs, const BlockingCost& D,
                                  const PolicySpec& pol, std::vector<int> B, double tol,
                                  std::size_t state_cap)
{
    PolicySpec use = pol;
    while (true) {
        double total = 1.0;
        for (int b : B)
            total *= b + 1.0;
        if (total > static_cast<double>(state_cap))
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3g", tol);
            throw TruncationError(std::string("tail mass stays above ") + buf
                                  + " before the state cap is reached for policy " + policy_name(pol));
        }
        auto mdp = build_joint_mdp(servers, p, costs, D, B, state_cap);
        const int hi = *std::max_element(B.begin(), B.end());
        if (table_limit(use) < hi)
            use = cover_states(use, hi);
        auto v = policy_evaluation(mdp, use);
        if (v.tail_mass < tol)
            return {std::move(v), B};
        for (auto& b : B)
            b *= 2;
    }
}

PolicyValue rsa_exact(const std::vector<ServerParams>& servers, double p,
                      const std::vector<CostSpec>& costs)
{
    const int K = static_cast<int>(servers.size());
    if (costs.size() != servers.size())
        throw ConfigError("one cost per server is required");
    PolicyValue r;
    r.mean_queue.assign(K, 0.0);
    const double pk = p / K;
    for (int k = 0; k < K; ++k) {
        if (pk >= servers[k].q) {
            r.g = std::numeric_limits<double>::infinity();
            r.mean_queue[k] = std::numeric_limits<double>::infinity();
            continue;
        }
        // the passive top state stands in for the infinite tail once its mass is negligible
        for (int n = 64;; n *= 2) {
            auto pi = threshold_stationary(servers[k], pk, n);
            if (pi.back() < 1e-15 || n >= (1 << 16)) {
                if (pi.back() >= 1e-15)
                    throw TruncationError("random allocation chain does not settle on server "
                                          + servers[k].discipline_name());
                double mq = 0.0;
                for (int m = 0; m < static_cast<int>(pi.size()); ++m)
                    mq += m * pi[m];
                r.mean_queue[k] = mq;
                r.g += expected_cost(pi, costs[k], servers[k]);
                break;
            }
        }
    }
    return r;
}

} // namespace lbw
