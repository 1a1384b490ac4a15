#include "lbw/whittle.hpp"

#include "lbw/detail/kernels.hpp"
#include "lbw/errors.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <string>
#include <tuple>

namespace lbw {

namespace {

namespace bmp = boost::multiprecision;

template <unsigned Digits>
using Mp = bmp::number<bmp::cpp_bin_float<Digits>, bmp::et_off>;

// Cancellation in the index formula scales with the smallest stationary mass,
// which can be 1e-300 and beyond, so precision is picked per state.
using Tiers = std::tuple<Mp<40>, Mp<80>, Mp<160>, Mp<320>, Mp<640>, Mp<1280>>;
constexpr int kTierDigits[] = {40, 80, 160, 320, 640, 1280};
constexpr int kTierCount = 6;

template <class Real>
struct TierState {
    int n_prev = -2;
    std::vector<Real> pi_prev;
    std::vector<Real> costs;
};

struct Eval {
    bool ok = false;
    double ratio = 0.0; // numerator / denominator
    double log10_den = 0.0;
};

template <class Real>
Eval eval_at(const ServerParams& s, const CostSpec& c, double p, int n, int digits,
             TierState<Real>& st)
{
    const int N = n + 2;
    while (static_cast<int>(st.costs.size()) < N)
        st.costs.push_back(detail::cost_at<Real>(c, s, static_cast<int>(st.costs.size())));

    std::vector<Real> prev;
    if (st.n_prev == n - 1)
        prev = std::move(st.pi_prev);
    else if (n == 0)
        prev = {Real(1)};
    else
        prev = detail::threshold_stationary_t<Real>(s, p, n - 1);
    std::vector<Real> cur = detail::threshold_stationary_t<Real>(s, p, n);

    Real num(0), scale(0);
    for (int m = 0; m <= n; ++m) {
        num += st.costs[m] * (cur[m] - prev[m]);
        scale += abs(st.costs[m]) * (cur[m] + prev[m]);
    }
    num += st.costs[n + 1] * cur[n + 1];
    scale += abs(st.costs[n + 1]) * cur[n + 1];
    Real den = prev[n] - cur[n + 1];

    st.pi_prev = std::move(cur);
    st.n_prev = n;

    // GTH is componentwise accurate to a small multiple of N^3 units.
    const Real unit = pow(Real(10), -(digits - 1));
    const Real rel = Real(8) * Real(N) * Real(N) * Real(N) * unit;
    const Real err_den = rel * (prev[n] + st.pi_prev[n + 1]);
    const Real err_num = rel * scale;

    Eval e;
    if (den <= err_den) {
        if (den + err_den < Real(0) || (den == Real(0) && err_den == Real(0))) {
            throw DegeneracyError("cumulative active mass does not increase at n=" + std::to_string(n)
                                  + " on server " + s.discipline_name());
        }
        return e;
    }
    const Real ratio = num / den;
    const Real err = (err_num + abs(ratio) * err_den) / den;
    if (err > Real(1e-14) * (Real(1) + abs(ratio)))
        return e;
    e.ok = true;
    e.ratio = static_cast<double>(ratio);
    e.log10_den = static_cast<double>(log10(den));
    return e;
}

class GeneralEvaluator {
public:
    GeneralEvaluator(const ServerParams& s, const CostSpec& c, double p) : s_(s), c_(c), p_(p) {}

    GeneralIndex at(int n)
    {
        for (int t = tier_; t < kTierCount; ++t) {
            Eval e = dispatch(t, n);
            if (e.ok) {
                tier_ = t;
                return {-e.ratio, e.log10_den, kTierDigits[t]};
            }
        }
        throw DegeneracyError("index at n=" + std::to_string(n) + " on server " + s_.discipline_name()
                              + " cannot be certified with " + std::to_string(kTierDigits[kTierCount - 1])
                              + " digits");
    }

private:
    template <std::size_t I = 0>
    Eval dispatch(int t, int n)
    {
        if constexpr (I < kTierCount) {
            if (static_cast<int>(I) == t)
                return eval_at(s_, c_, p_, n, kTierDigits[I], std::get<I>(states_));
            return dispatch<I + 1>(t, n);
        } else {
            return {};
        }
    }

    template <class... R>
    static std::tuple<TierState<R>...> make_states(std::tuple<R...>*);

    ServerParams s_;
    CostSpec c_;
    double p_;
    int tier_ = 0;
    decltype(make_states(static_cast<Tiers*>(nullptr))) states_;
};

void check_inputs(const ServerParams& s, const CostSpec& c, double p)
{
    validate(s);
    validate(c);
    if (!(p > 0.0 && p < 1.0))
        throw ConfigError("arrival probability p must lie in (0,1)");
}

void check_fcfs(double p, double q)
{
    if (!(p > 0.0 && p < 1.0))
        throw ConfigError("arrival probability p must lie in (0,1)");
    if (!(q > 0.0 && q <= 1.0))
        throw ConfigError("service probability q must lie in (0,1]");
    if (std::abs(p - q) < 1e-9)
        throw DegenerateParameters("FCFS index has (q-p) denominators; use the general formula at p = q");
}

} // namespace

double IndexTable::at(int n) const
{
    if (n < 0 || n >= static_cast<int>(values.size()))
        throw TableRangeError("state " + std::to_string(n) + " outside index table 0.."
                              + std::to_string(static_cast<int>(values.size()) - 1) + " for server "
                              + params.discipline_name());
    return values[n];
}

int IndexTable::first_negative() const
{
    for (int n = 0; n < static_cast<int>(values.size()); ++n)
        if (values[n] < 0.0)
            return n;
    return -1;
}

GeneralIndex whittle_index_general_detail(const ServerParams& s, const CostSpec& c, double p,
                                          const BlockingCost& D, int n)
{
    check_inputs(s, c, p);
    if (n < 0)
        throw ConfigError("state must be non-negative");
    GeneralEvaluator ev(s, c, p);
    GeneralIndex g = ev.at(n);
    g.value += D.pD(p);
    return g;
}

double whittle_index_general(const ServerParams& s, const CostSpec& c, double p,
                             const BlockingCost& D, int n)
{
    return whittle_index_general_detail(s, c, p, D, n).value;
}

std::vector<GeneralIndex> whittle_index_general_range(const ServerParams& s, const CostSpec& c,
                                                      double p, const BlockingCost& D, int n_to)
{
    check_inputs(s, c, p);
    GeneralEvaluator ev(s, c, p);
    std::vector<GeneralIndex> out;
    out.reserve(n_to + 1);
    for (int n = 0; n <= n_to; ++n) {
        out.push_back(ev.at(n));
        out.back().value += D.pD(p);
    }
    return out;
}

double whittle_index_fcfs(double p, double q, const CostSpec& c, const BlockingCost& D, int n)
{
    check_fcfs(p, q);
    validate(c);
    const auto s = ServerParams::fcfs(q);
    const double rho = p * (1.0 - q) / (q * (1.0 - p));
    double sum = 0.0;
    for (int m = 0; m < n; ++m) {
        double cm = cost_value(c, s, m);
        if (cm != 0.0)
            sum += cm * std::pow(rho, m - 1);
    }
    const double t = std::pow(p / q, n + 1) * std::pow((1.0 - q) / (1.0 - p), n - 1);
    return D.pD(p) + p * p / (q * q * (1.0 - p)) * sum
        - cost_value(c, s, n) * q / (q - p) * (p + t * (p / q - p - 1.0))
        - cost_value(c, s, n + 1) * p * (1.0 - q) / (q - p) * (1.0 - t);
}

double whittle_index_fcfs_linear(double p, double q, double C, const BlockingCost& D, int n)
{
    check_fcfs(p, q);
    const double rho = p * (1.0 - q) / (q * (1.0 - p));
    const double qp = q - p;
    return D.pD(p) + C * p * p * (1.0 - p) / (qp * qp) - C * p * (1.0 - q) / qp - n * C * p / qp
        - C * p * p * p * (1.0 - p) / (q * qp * qp) * std::pow(rho, n);
}

double fcfs_index_difference(double p, double q, const CostSpec& c, int n)
{
    check_fcfs(p, q);
    const auto s = ServerParams::fcfs(q);
    const double rho = p * (1.0 - q) / (q * (1.0 - p));
    const double c0 = cost_value(c, s, n), c1 = cost_value(c, s, n + 1), c2 = cost_value(c, s, n + 2);
    return (p * q * (c0 - c1) + p * (1.0 - q) * (c1 - c2)) / (q - p)
        * (1.0 - (p / q) * (p / q) * std::pow(rho, n));
}

double subsidy_cost(const ServerParams& s, const CostSpec& c, double p, const BlockingCost& D,
                    int n, double W)
{
    check_inputs(s, c, p);
    if (n < -1)
        throw ConfigError("threshold must be at least -1");
    if (n == -1)
        return -(W - D.pD(p));
    auto pi = threshold_stationary(s, p, n);
    return expected_cost(pi, c, s) - (W - D.pD(p)) * pi[n + 1];
}

IndexTable indexability_report(const ServerParams& s, const CostSpec& c, double p,
                               const BlockingCost& D, ReportOptions opt)
{
    check_inputs(s, c, p);
    if (opt.n_max < 1)
        throw ConfigError("n_max must be at least 1");
    check_cost_monotone(c, s, opt.n_max + 2);

    IndexTable t;
    t.params = s;
    t.cost = c;
    t.p = p;
    t.D = D;
    const bool closed = s.is_fcfs() && std::abs(p - s.q) >= 1e-9;

    GeneralEvaluator ev(s, c, p);
    for (int n = 0; n <= opt.n_max; ++n) {
        GeneralIndex g = ev.at(n);
        double w = g.value + D.pD(p);
        // the closed form disagrees with the never-accept convention at n = 0
        if (closed && n >= 1)
            w = whittle_index_fcfs(p, s.q, c, D, n);
        t.values.push_back(w);
        t.log10_mass_increment.push_back(g.log10_mass_increment);
        if (opt.early_stop && n >= 1 && w < -10.0 * std::abs(t.values[0]) - 10.0)
            break;
    }
    t.n_max = static_cast<int>(t.values.size()) - 1;
    // every increment was certified positive, otherwise ev.at threw
    t.diagnostics.cumulative_mass_strictly_increasing = true;
    t.diagnostics.index_non_increasing = true;
    for (int n = 0; n < t.n_max; ++n) {
        if (t.values[n + 1] > t.values[n] + 1e-9 * std::max(1.0, std::abs(t.values[n])))
            t.diagnostics.index_non_increasing = false;
    }
    return t;
}

IndexTable extend_table(const IndexTable& t, int n)
{
    int target = std::max(1, t.n_max);
    while (target < n)
        target *= 2;
    return indexability_report(t.params, t.cost, t.p, t.D, ReportOptions{target, false});
}

} // namespace lbw
