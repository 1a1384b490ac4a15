#include "lbw/queue_model.hpp"

#include "lbw/detail/kernels.hpp"
#include "lbw/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lbw {

ServerParams ServerParams::fcfs(double q, std::string label)
{
    return {Finite{1}, q, std::move(label)};
}

ServerParams ServerParams::lps(int d, double q, std::string label)
{
    return {Finite{d}, q, std::move(label)};
}

ServerParams ServerParams::ps(double q, std::string label)
{
    return {InfinitePS{}, q, std::move(label)};
}

bool ServerParams::is_fcfs() const
{
    auto* f = std::get_if<Finite>(&discipline);
    return f && f->d == 1;
}

int ServerParams::shares(int n) const
{
    if (auto* f = std::get_if<Finite>(&discipline))
        return std::min(n, f->d);
    return n;
}

std::string ServerParams::discipline_name() const
{
    if (is_ps())
        return "PS";
    int d = std::get<Finite>(discipline).d;
    return d == 1 ? "FCFS" : "LPS-" + std::to_string(d);
}

void validate(const ServerParams& s)
{
    if (!(s.q > 0.0 && s.q <= 1.0))
        throw ConfigError("service probability q must lie in (0,1], got " + std::to_string(s.q));
    if (auto* f = std::get_if<Finite>(&s.discipline)) {
        if (f->d < 1 || f->d > kMaxFiniteD)
            throw ConfigError("discipline level d must lie in [1,64], got " + std::to_string(f->d));
    }
}

double departure_kernel(const ServerParams& s, int n, int i)
{
    if (i < 0 || i > s.shares(n))
        return 0.0;
    return detail::kernel_pmf<double>(s, n)[i];
}

std::vector<double> departure_pmf(const ServerParams& s, int n)
{
    return detail::kernel_pmf<double>(s, n);
}

static void check_p(double p)
{
    if (!(p > 0.0 && p < 1.0))
        throw ConfigError("arrival probability p must lie in (0,1), got " + std::to_string(p));
}

Matrix threshold_transition_matrix(const ServerParams& s, double p, int n)
{
    validate(s);
    check_p(p);
    if (n < 0)
        throw ConfigError("threshold must be non-negative");
    const int N = n + 2;
    Matrix P = Matrix::Zero(N, N);
    for (int m = 0; m < N; ++m) {
        auto k = departure_pmf(s, m);
        const int sh = static_cast<int>(k.size()) - 1;
        for (int i = 0; i <= sh; ++i) {
            if (m <= n) {
                P(m, m + 1 - i) += p * k[i];
                P(m, m - i) += (1.0 - p) * k[i];
            } else {
                P(m, m - i) += k[i];
            }
        }
    }
    return P;
}

std::vector<double> stationary_distribution(const Matrix& P)
{
    const Eigen::Index N = P.rows();
    if (N == 0 || P.cols() != N)
        throw SingularSolve("transition matrix must be square and non-empty");
    Matrix A = P.transpose() - Matrix::Identity(N, N);
    A.row(N - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(N);
    b(N - 1) = 1.0;
    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible())
        throw SingularSolve("stationary system is singular");
    Eigen::VectorXd x = lu.solve(b);
    std::vector<double> pi(x.data(), x.data() + N);
    for (auto& v : pi)
        v = std::max(v, 0.0);
    double total = std::accumulate(pi.begin(), pi.end(), 0.0);
    for (auto& v : pi)
        v /= total;
    return pi;
}

std::vector<double> threshold_stationary(const ServerParams& s, double p, int n)
{
    validate(s);
    check_p(p);
    return detail::threshold_stationary_t<double>(s, p, n);
}

std::vector<double> fcfs_stationary_closed_form(double p, double q, int n)
{
    check_p(p);
    if (!(q > 0.0 && q <= 1.0))
        throw ConfigError("service probability q must lie in (0,1]");
    if (std::abs(p - q) < 1e-9)
        throw DegenerateParameters("FCFS closed form is 0/0 at p = q; use stationary_distribution");
    std::vector<double> pi(n + 2);
    const double b = p * (1.0 - q);
    const double dc = q * (1.0 - p);
    if (n == 0) {
        // two-state chain: 0 -> 1 w.p. p, 1 -> 0 w.p. q
        pi[0] = q / (p + q);
        pi[1] = p / (p + q);
        return pi;
    }
    const double r = p / q;
    const double pi1 = r * (1.0 - r) * std::pow(1.0 - p, n - 1)
        / (std::pow(1.0 - p, n) - std::pow(r, n + 2) * std::pow(1.0 - q, n));
    pi[0] = dc / p * pi1;
    for (int m = 1; m <= n; ++m)
        pi[m] = std::pow(b / dc, m - 1) * pi1;
    pi[n + 1] = b / q * std::pow(b / dc, n - 1) * pi1;
    return pi;
}

ThresholdChain make_threshold_chain(const ServerParams& s, double p, int n)
{
    ThresholdChain c;
    c.params = s;
    c.threshold = n;
    c.arrival_prob = p;
    c.matrix = threshold_transition_matrix(s, p, n);
    c.stationary = threshold_stationary(s, p, n);
    return c;
}

double cumulative_active_mass(const std::vector<double>& pi)
{
    return std::accumulate(pi.begin(), pi.end() - 1, 0.0);
}

} // namespace lbw
