#include "lbw/errors.hpp"
#include "lbw/mdp.hpp"
#include "lbw/sim.hpp"

#include <doctest.h>

using namespace lbw;

namespace {

SimConfig pair_config(PolicySpec pol, double p, long long horizon)
{
    SimConfig c;
    c.servers = {ServerParams::lps(2, 0.5), ServerParams::fcfs(0.4)};
    c.costs = {Linear{1}, Linear{1}};
    c.p = p;
    c.D = BlockingCost::infinite();
    c.policy = std::move(pol);
    c.horizon = horizon;
    c.warmup = horizon / 20;
    return c;
}

} // namespace

TEST_CASE("no arrivals keeps queues empty")
{
    auto c = pair_config(JSQ{2}, 0.0, 20000);
    auto e = simulate(c);
    CHECK(e.mean_cost == 0.0);
    CHECK(e.max_queue == 0);
    CHECK(e.accepted_rate == 0.0);
    CHECK(e.departure_rate == 0.0);
}

TEST_CASE("same seed, same trajectory")
{
    auto c = pair_config(RSA{2}, 0.5, 50000);
    c.seed = 42;
    auto a = simulate(c);
    auto b = simulate(c);
    CHECK(a.mean_cost == b.mean_cost);
    CHECK(a.ci == b.ci);
    CHECK(a.max_queue == b.max_queue);
    c.seed = 43;
    CHECK(simulate(c).mean_cost != a.mean_cost);

    auto reps = simulate_replicas(c, {42, 43});
    CHECK(reps[0].mean_cost == a.mean_cost);
}

TEST_CASE("flow conservation")
{
    auto c = pair_config(JSQ{2}, 0.6, 400000);
    auto e = simulate(c);
    CHECK(std::abs(e.accepted_rate - 0.6) < 4 * e.accepted_ci + 1e-3);
    CHECK(std::abs(e.accepted_rate - e.departure_rate) < 4 * (e.accepted_ci + e.departure_ci) + 1e-3);
}

TEST_CASE("simulation agrees with exact evaluation")
{
    auto c = pair_config(JSQ{2}, 0.6, 1'000'000);
    auto m = build_joint_mdp(c.servers, c.p, c.costs, c.D, {40, 40});
    const double exact = policy_evaluation(m, c.policy).g;
    auto e = simulate(c);
    CHECK(std::abs(e.mean_cost - exact) < 5 * e.ci);
}

TEST_CASE("blocking fraction under the Whittle rule")
{
    SimConfig c;
    c.servers = {ServerParams::lps(2, 0.5), ServerParams::lps(2, 0.4)};
    c.costs = {Linear{1}, Linear{1}};
    c.p = 0.8;
    c.D = BlockingCost::finite(5);
    c.policy = make_whittle(c.servers, c.costs, c.p, c.D);
    c.horizon = 200000;
    c.warmup = 10000;
    auto e = simulate(c);
    CHECK(e.blocking_fraction > 0.0);
    CHECK(e.blocking_fraction < 1.0);
    CHECK(e.accepted_rate == doctest::Approx(0.8 * (1 - e.blocking_fraction)).epsilon(0.02));
}

TEST_CASE("tables grow on demand")
{
    auto c = pair_config({}, 0.85, 100000);
    c.policy = make_whittle(c.servers, c.costs, c.p, c.D, ReportOptions{2, false});
    auto e = simulate(c);
    CHECK(e.table_extensions > 0);
    CHECK(e.max_queue > 2);
}

TEST_CASE("student t quantile")
{
    CHECK(t_quantile_975(19) == doctest::Approx(2.093024).epsilon(1e-6));
    CHECK(t_quantile_975(1000000) == doctest::Approx(1.959964).epsilon(1e-5));
}

TEST_CASE("invalid simulation settings")
{
    auto c = pair_config(JSQ{2}, 0.5, 1000);
    c.warmup = 1000;
    CHECK_THROWS_AS(simulate(c), ConfigError);
}
