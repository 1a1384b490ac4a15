#include "lbw/errors.hpp"
#include "lbw/mdp.hpp"

#include <doctest.h>

#include <limits>

using namespace lbw;

TEST_CASE("single-server MDP rows equal the threshold chain")
{
    auto s = ServerParams::fcfs(0.6);
    auto m = build_joint_mdp({s}, 0.4, {Linear{1}}, BlockingCost::finite(10), {1});
    CHECK(m.n_states == 2);
    CHECK(m.n_actions() == 2);
    auto P = threshold_transition_matrix(s, 0.4, 0);
    for (std::size_t st = 0; st < 2; ++st) {
        double row[2] = {0, 0};
        for (const auto& t : m.transitions(st, 0))
            row[t.to] += t.prob;
        CHECK(row[0] == doctest::Approx(P(st, 0)));
        CHECK(row[1] == doctest::Approx(P(st, 1)));
    }
    CHECK(m.stage_cost(1, 1) == doctest::Approx(1.0 + 4.0));
}

TEST_CASE("kernel rows sum to one")
{
    auto m = build_joint_mdp({ServerParams::lps(2, 0.5), ServerParams::ps(0.4), ServerParams::fcfs(0.3)}, 0.5,
                             {Linear{1}, Linear{1}, MeanVariance{}}, BlockingCost::finite(5), {4, 3, 5});
    CHECK(m.n_states == 5 * 4 * 6);
    for (std::size_t s = 0; s < m.n_states; ++s)
        for (int a = 0; a < m.n_actions(); ++a) {
            double tot = 0.0;
            for (const auto& t : m.transitions(s, a))
                tot += t.prob;
            CHECK(std::abs(tot - 1.0) < 1e-12);
        }
    auto two = build_joint_mdp({ServerParams::fcfs(0.5), ServerParams::fcfs(0.5)}, 0.4, {Linear{1}, Linear{1}},
                               BlockingCost::infinite(), {3, 3});
    CHECK(two.n_states == 16);
    CHECK(two.n_actions() == 2);
}

TEST_CASE("state cap and arity")
{
    std::vector<ServerParams> s(4, ServerParams::fcfs(0.5));
    std::vector<CostSpec> c(4, Linear{1});
    CHECK_THROWS_AS(build_joint_mdp(s, 0.3, c, BlockingCost::infinite(), {2, 2, 2, 2}), ConfigError);
    CHECK_THROWS_AS(build_joint_mdp({ServerParams::fcfs(0.5), ServerParams::fcfs(0.5)}, 0.3, {Linear{1}, Linear{1}},
                                    BlockingCost::infinite(), {2000, 2000}),
                    ConfigError);
}

TEST_CASE("single server value iteration equals the truncated chain")
{
    auto s = ServerParams::fcfs(0.6);
    auto m = build_joint_mdp({s}, 0.4, {Linear{1}}, BlockingCost::infinite(), {30});
    auto r = value_iteration(m);
    auto pi = fcfs_stationary_closed_form(0.4, 0.6, 29);
    double mean = 0.0;
    for (int k = 0; k < 31; ++k)
        mean += k * pi[k];
    CHECK(std::abs(r.g - mean) < 1e-6);
}

TEST_CASE("value iteration matches brute-force policy enumeration")
{
    for (auto D : {BlockingCost::infinite(), BlockingCost::finite(3.0)}) {
        auto m = build_joint_mdp({ServerParams::lps(2, 0.5), ServerParams::fcfs(0.35)}, 0.45,
                                 {Linear{1}, Linear{1.5}}, D, {2, 2});
        auto r = value_iteration(m);
        const int A = m.n_actions();
        long combos = 1;
        for (std::size_t i = 0; i < m.n_states; ++i)
            combos *= A;
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> map(m.n_states);
        for (long c = 0; c < combos; ++c) {
            long x = c;
            for (auto& a : map) {
                a = static_cast<int>(x % A);
                x /= A;
            }
            best = std::min(best, policy_evaluation(m, map).g);
        }
        CHECK(std::abs(r.g - best) < 1e-8);
    }
}

TEST_CASE("parallel sweep equals the reference sweep")
{
    auto m = build_joint_mdp({ServerParams::lps(3, 0.3), ServerParams::ps(0.5), ServerParams::fcfs(0.4)}, 0.6,
                             {Linear{1}, MeanVariance{}, Linear{2}}, BlockingCost::finite(7), {6, 8, 5});
    std::vector<double> v(m.n_states);
    for (std::size_t s = 0; s < m.n_states; ++s)
        v[s] = std::sin(0.37 * s) * 10.0;
    std::vector<double> a(m.n_states), b(m.n_states);
    std::vector<int> aa(m.n_states), ab(m.n_states);
    bellman_sweep(m, v, a, &aa);
    bellman_sweep_reference(m, v, b, &ab);
    for (std::size_t s = 0; s < m.n_states; ++s) {
        CHECK(a[s] == doctest::Approx(b[s]).epsilon(1e-12));
        CHECK(aa[s] == ab[s]);
    }
    auto r1 = value_iteration(m);
    auto r2 = value_iteration_reference(m);
    CHECK(std::abs(r1.g - r2.g) < 1e-9);
}

TEST_CASE("value iteration invariants")
{
    auto m = build_joint_mdp({ServerParams::lps(2, 0.5), ServerParams::fcfs(0.4)}, 0.6, {Linear{1}, Linear{1}},
                             BlockingCost::finite(20), {12, 12});
    ViOptions o;
    o.keep_trace = true;
    auto r = value_iteration(m, o);
    CHECK(r.span <= o.epsilon);
    for (std::size_t i = 1; i < r.span_trace.size(); ++i)
        CHECK(r.span_trace[i] <= r.span_trace[i - 1] + 1e-12);

    // Bellman residual
    std::vector<double> th(m.n_states);
    bellman_sweep(m, r.h, th, nullptr);
    for (std::size_t s = 0; s < m.n_states; ++s)
        CHECK(std::abs(r.g + r.h[s] - th[s]) <= 10 * o.epsilon);

    ViOptions half = o;
    half.epsilon = o.epsilon / 2;
    CHECK(std::abs(value_iteration(m, half).g - r.g) < o.epsilon);

    ViOptions few;
    few.max_iterations = 3;
    CHECK_THROWS_AS(value_iteration(m, few), ConvergenceError);
}

TEST_CASE("policy evaluation")
{
    auto s = ServerParams::lps(2, 0.5);
    auto m = build_joint_mdp({s, s}, 0.6, {Linear{1}, Linear{1}}, BlockingCost::infinite(), {30, 30});
    auto v = policy_evaluation(m, PolicySpec{RSA{2}});
    CHECK(std::abs(v.mean_queue[0] - v.mean_queue[1]) < 1e-9);

    auto opt = value_iteration(m);
    auto jsq = policy_evaluation(m, PolicySpec{JSQ{2}});
    CHECK(jsq.g >= opt.g - 1e-8);
    CHECK(jsq.g == doctest::Approx(jsq.mean_queue[0] + jsq.mean_queue[1]));

    auto w = make_whittle({s, s}, {Linear{1}, Linear{1}}, 0.6, BlockingCost::infinite());
    CHECK(policy_evaluation(m, w).g >= opt.g - 1e-8);
}

TEST_CASE("blocking fraction accounts for the blocking cost")
{
    std::vector<ServerParams> srv{ServerParams::lps(2, 0.5), ServerParams::lps(2, 0.4)};
    std::vector<CostSpec> c{Linear{1}, Linear{1}};
    auto D = BlockingCost::finite(100);
    auto pol = make_whittle(srv, c, 0.3, D);
    auto tv = evaluate_truncated(srv, 0.3, c, D, pol, {30, 30});
    const auto& v = tv.value;
    CHECK(v.blocking_fraction > 0.0);
    CHECK(v.tail_mass < 1e-8);
    CHECK(v.g == doctest::Approx(v.mean_queue[0] + v.mean_queue[1] + 0.3 * 100 * v.blocking_fraction).epsilon(1e-10));
}

TEST_CASE("truncation doubling and random allocation")
{
    std::vector<ServerParams> srv{ServerParams::fcfs(0.5), ServerParams::fcfs(0.5)};
    std::vector<CostSpec> c{Linear{1}, Linear{1}};
    auto tv = evaluate_truncated(srv, 0.7, c, BlockingCost::infinite(), JSQ{2}, {8, 8});
    CHECK(tv.B[0] > 8);
    CHECK(tv.value.tail_mass < 1e-8);

    // random allocation: each queue is an FCFS chain fed at p/2
    auto r = rsa_exact(srv, 0.7, c);
    const double p = 0.35, q = 0.5;
    const double rho = p * (1 - q) / (q * (1 - p));
    // mean of the infinite FCFS chain: pi(m) = pi(1) rho^{m-1} for m >= 1, pi(0) = q(1-p)/p pi(1)
    const double pi1 = 1.0 / (q * (1 - p) / p + 1.0 / (1 - rho));
    const double mean = pi1 / ((1 - rho) * (1 - rho));
    CHECK(r.mean_queue[0] == doctest::Approx(mean).epsilon(1e-9));
    CHECK(r.g == doctest::Approx(2 * mean).epsilon(1e-9));

    auto bad = rsa_exact({ServerParams::fcfs(0.1), ServerParams::fcfs(0.7)}, 0.4, c);
    CHECK(std::isinf(bad.g));
}
