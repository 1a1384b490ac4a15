#include "oracles.hpp"

#include "lbw/errors.hpp"
#include "lbw/queue_model.hpp"

#include <doctest.h>

#include <numeric>

using namespace lbw;

TEST_CASE("departure kernel values")
{
    CHECK(departure_kernel(ServerParams::lps(2, 0.6), 1, 1) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(departure_kernel(ServerParams::lps(5, 0.3), 0, 0) == 1.0);
    CHECK(departure_kernel(ServerParams::lps(2, 0.6), 5, 2) == doctest::Approx(0.09).epsilon(1e-14));
    CHECK(departure_kernel(ServerParams::ps(0.6), 3, 3) == doctest::Approx(0.008).epsilon(1e-14));
    CHECK(departure_kernel(ServerParams::lps(2, 0.6), 5, 3) == 0.0);
}

TEST_CASE("departure kernel matches log-gamma binomial")
{
    for (int d : {1, 2, 3, 7, 64}) {
        for (double q : {0.05, 0.3, 0.99, 1.0}) {
            auto s = ServerParams::lps(d, q);
            for (int n = 0; n <= 90; ++n) {
                int m = std::min(n, d);
                for (int i = 0; i <= m; ++i)
                    CHECK(departure_kernel(s, n, i)
                          == doctest::Approx(oracle::binom_pmf(m, i, m ? q / m : 0.0)).epsilon(1e-11));
            }
        }
    }
}

TEST_CASE("mean departures stay at q")
{
    for (auto s : {ServerParams::fcfs(0.4), ServerParams::lps(4, 0.7), ServerParams::ps(0.25),
                   ServerParams::lps(64, 0.9)}) {
        for (int n = 1; n <= 200; ++n) {
            auto k = departure_pmf(s, n);
            double mean = 0.0;
            for (int i = 0; i < static_cast<int>(k.size()); ++i)
                mean += i * k[i];
            CHECK(std::abs(mean - s.q) < 1e-12);
        }
    }
}

TEST_CASE("kernel is constant beyond d")
{
    auto s = ServerParams::lps(3, 0.45);
    for (int n = 4; n < 40; ++n)
        for (int i = 0; i <= 3; ++i)
            CHECK(departure_kernel(s, n, i) == departure_kernel(s, 3, i));
}

TEST_CASE("FCFS threshold matrix")
{
    auto P = threshold_transition_matrix(ServerParams::fcfs(0.6), 0.4, 2);
    REQUIRE(P.rows() == 4);
    CHECK(P(1, 0) == doctest::Approx(0.36));
    CHECK(P(1, 1) == doctest::Approx(0.48));
    CHECK(P(1, 2) == doctest::Approx(0.16));
    CHECK(P(1, 3) == 0.0);
    // passive state only drains
    CHECK(P(3, 2) == doctest::Approx(0.6));
    CHECK(P(3, 3) == doctest::Approx(0.4));
}

TEST_CASE("LPS-2 threshold matrix row")
{
    auto P = threshold_transition_matrix(ServerParams::lps(2, 0.6), 0.4, 3);
    const double want[] = {0.054, 0.288, 0.462, 0.196, 0.0};
    for (int j = 0; j < 5; ++j)
        CHECK(P(2, j) == doctest::Approx(want[j]).epsilon(1e-12));
}

TEST_CASE("threshold matrix against entrywise construction")
{
    for (auto s : {ServerParams::lps(3, 0.55), ServerParams::ps(0.8), ServerParams::fcfs(0.3)}) {
        const double p = 0.35;
        const int n = 12;
        auto P = threshold_transition_matrix(s, p, n);
        for (int m = 0; m <= n + 1; ++m) {
            int sh = s.shares(m);
            double r = sh ? s.q / sh : 0.0;
            double rowsum = 0.0;
            for (int j = 0; j <= n + 1; ++j) {
                double want = 0.0;
                if (m <= n) {
                    want += p * oracle::binom_pmf(sh, m + 1 - j, r);
                    want += (1 - p) * oracle::binom_pmf(sh, m - j, r);
                } else {
                    want += oracle::binom_pmf(sh, m - j, r);
                }
                CHECK(P(m, j) == doctest::Approx(want).epsilon(1e-11));
                rowsum += P(m, j);
            }
            CHECK(std::abs(rowsum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("threshold matrix rejects bad p")
{
    CHECK_THROWS_AS(threshold_transition_matrix(ServerParams::fcfs(0.5), 0.0, 3), ConfigError);
    CHECK_THROWS_AS(threshold_transition_matrix(ServerParams::fcfs(0.5), 1.0, 3), ConfigError);
    CHECK_THROWS_AS(threshold_transition_matrix(ServerParams::lps(65, 0.5), 0.3, 3), ConfigError);
}

TEST_CASE("stationary distribution small cases")
{
    Matrix P(2, 2);
    P << 0.5, 0.5, 0.5, 0.5;
    auto pi = stationary_distribution(P);
    CHECK(pi[0] == doctest::Approx(0.5));
    CHECK(pi[1] == doctest::Approx(0.5));

    Matrix I = Matrix::Identity(1, 1);
    CHECK(stationary_distribution(I)[0] == 1.0);

    auto f = stationary_distribution(threshold_transition_matrix(ServerParams::fcfs(0.6), 0.4, 1));
    CHECK(f[0] == doctest::Approx(0.41538).epsilon(1e-4));
    CHECK(f[1] == doctest::Approx(0.46154).epsilon(1e-4));
    CHECK(f[2] == doctest::Approx(0.12308).epsilon(1e-4));
}

TEST_CASE("stationary distribution rejects reducible matrices")
{
    Matrix I = Matrix::Identity(3, 3);
    CHECK_THROWS_AS(stationary_distribution(I), SingularSolve);
}

TEST_CASE("LU, GTH and power iteration agree")
{
    for (auto s : {ServerParams::lps(2, 0.6), ServerParams::ps(0.45), ServerParams::lps(5, 0.9)}) {
        for (double p : {0.2, 0.5, 0.85}) {
            const int n = 15;
            auto P = threshold_transition_matrix(s, p, n);
            std::vector<std::vector<double>> rows(n + 2, std::vector<double>(n + 2));
            for (int i = 0; i < n + 2; ++i)
                for (int j = 0; j < n + 2; ++j)
                    rows[i][j] = P(i, j);
            auto ref = oracle::power_stationary(rows);
            auto lu = stationary_distribution(P);
            auto gth = threshold_stationary(s, p, n);
            for (int m = 0; m < n + 2; ++m) {
                CHECK(lu[m] == doctest::Approx(ref[m]).epsilon(1e-8));
                CHECK(gth[m] == doctest::Approx(ref[m]).epsilon(1e-8));
            }
            // invariance pi P = pi
            Eigen::RowVectorXd v = Eigen::Map<Eigen::RowVectorXd>(gth.data(), n + 2);
            Eigen::RowVectorXd w = v * P;
            CHECK((w - v).cwiseAbs().maxCoeff() < 1e-10);
            CHECK(std::abs(std::accumulate(gth.begin(), gth.end(), 0.0) - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("FCFS closed form")
{
    auto pi = fcfs_stationary_closed_form(0.4, 0.6, 1);
    CHECK(pi[0] == doctest::Approx(0.41538).epsilon(1e-4));
    CHECK(pi[1] == doctest::Approx(0.46154).epsilon(1e-4));
    CHECK(pi[2] == doctest::Approx(0.12308).epsilon(1e-4));
    CHECK(pi[0] == doctest::Approx(0.6 * 0.6 / 0.4 * pi[1]));

    auto p3 = fcfs_stationary_closed_form(0.4, 0.6, 3);
    const double ratio = 0.16 / 0.36;
    CHECK(p3[2] / p3[1] == doctest::Approx(ratio));
    CHECK(p3[3] / p3[1] == doctest::Approx(ratio * ratio));
    CHECK(std::accumulate(p3.begin(), p3.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(fcfs_stationary_closed_form(0.5, 0.5, 3), DegenerateParameters);
}

TEST_CASE("FCFS closed form matches the generic solvers on a grid")
{
    double worst = 0.0;
    for (int pi10 = 1; pi10 <= 9; ++pi10) {
        for (int qi10 = 1; qi10 <= 9; ++qi10) {
            if (pi10 == qi10)
                continue;
            double p = pi10 / 10.0, q = qi10 / 10.0;
            auto s = ServerParams::fcfs(q);
            for (int n = 0; n <= 50; ++n) {
                auto cf = fcfs_stationary_closed_form(p, q, n);
                auto lu = stationary_distribution(threshold_transition_matrix(s, p, n));
                auto gth = threshold_stationary(s, p, n);
                for (int m = 0; m < n + 2; ++m) {
                    worst = std::max(worst, std::abs(cf[m] - lu[m]));
                    // GTH keeps relative accuracy deep in the tail
                    if (cf[m] > 1e-300)
                        CHECK(std::abs(gth[m] - cf[m]) <= 1e-9 * cf[m]);
                }
            }
        }
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("cumulative active mass is non-decreasing in the threshold")
{
    for (auto s : {ServerParams::fcfs(0.5), ServerParams::lps(4, 0.5), ServerParams::ps(0.5)}) {
        double prev = 0.0;
        for (int n = 0; n <= 40; ++n) {
            double a = cumulative_active_mass(threshold_stationary(s, 0.3, n));
            CHECK(a > prev);
            prev = a;
        }
    }
}

TEST_CASE("threshold chain bundle")
{
    auto c = make_threshold_chain(ServerParams::lps(2, 0.6), 0.4, 3);
    CHECK(c.matrix.rows() == 5);
    CHECK(c.stationary.size() == 5);
    for (int i = 0; i < 5; ++i)
        CHECK(std::abs(c.matrix.row(i).sum() - 1.0) < 1e-12);
}

namespace {

// max over entries of (P1 U - P2 U) for thresholds n and n+1 with states relabelled top-down,
// P1 padded with a zero row and column.
double dominance_excess(const ServerParams& s, double p, int n)
{
    auto P1 = threshold_transition_matrix(s, p, n);
    auto P2 = threshold_transition_matrix(s, p, n + 1);
    const int N = n + 3;
    auto tail1 = [&](int i, int j) { // sum over labels k >= j of row i
        double t = 0.0;
        if (i > n + 1)
            return t;
        for (int k = j; k <= n + 1; ++k)
            t += P1(n + 1 - i, n + 1 - k);
        return t;
    };
    auto tail2 = [&](int i, int j) {
        double t = 0.0;
        for (int k = j; k < N; ++k)
            t += P2(n + 2 - i, n + 2 - k);
        return t;
    };
    double worst = -1.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            worst = std::max(worst, tail1(i, j) - tail2(i, j));
    return worst;
}

} // namespace

TEST_CASE("reverse-labelled dominance between consecutive thresholds")
{
    for (double q : {0.1, 0.4, 0.7, 0.9})
        for (double p : {0.1, 0.5, 0.9})
            for (int n = 0; n <= 12; ++n)
                CHECK(dominance_excess(ServerParams::fcfs(q), p, n) <= 1e-12);

    // LPS-2: one job leaves a slot empty w.p. (1-p)q = 0.35, but two jobs drop to at most one
    // only w.p. 0.325, so the comparison fails while the stationary masses stay ordered
    const auto s = ServerParams::lps(2, 0.5);
    CHECK(dominance_excess(s, 0.3, 3) > 0.01);
    for (int n = 0; n < 20; ++n)
        CHECK(threshold_stationary(s, 0.3, n + 1)[n + 2] <= threshold_stationary(s, 0.3, n)[n + 1]);
}
