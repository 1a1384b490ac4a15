#pragma once

// Precision-generic building blocks shared by the double and multiprecision paths.

#include "lbw/cost_model.hpp"
#include "lbw/queue_model.hpp"

#include <cmath>
#include <vector>

namespace lbw::detail {

// Binomial(trials, r) pmf by the ratio recurrence; no factorials.
template <class Real>
std::vector<Real> binomial_pmf(int trials, const Real& r)
{
    std::vector<Real> pmf(trials + 1, Real(0));
    if (trials == 0) {
        pmf[0] = Real(1);
        return pmf;
    }
    if (r >= Real(1)) {
        pmf[trials] = Real(1);
        return pmf;
    }
    using std::pow;
    Real s = Real(1) - r;
    Real ratio = r / s;
    pmf[0] = pow(s, trials);
    for (int i = 0; i < trials; ++i)
        pmf[i + 1] = pmf[i] * Real(trials - i) / Real(i + 1) * ratio;
    return pmf;
}

template <class Real>
std::vector<Real> kernel_pmf(const ServerParams& s, int n)
{
    int m = s.shares(n);
    if (m == 0)
        return {Real(1)};
    return binomial_pmf<Real>(m, Real(s.q) / Real(m));
}

template <class Real>
Real cost_at(const CostSpec& c, const ServerParams& s, int n)
{
    if (auto* lin = std::get_if<Linear>(&c))
        return Real(lin->C) * Real(n);
    const auto& mv = std::get<MeanVariance>(c);
    auto k = kernel_pmf<Real>(s, n);
    Real acc(0);
    for (int i = 1; i < static_cast<int>(k.size()); ++i)
        acc += (Real(i) * Real(i) - Real(i) * Real(mv.theta)) * k[i];
    return Real(mv.beta) * Real(n) + (Real(1) - Real(mv.beta)) * acc;
}

// Threshold chain over 0..n+1 in Hessenberg form: each row has one entry above
// the diagonal (the up-move) and a band below it.
template <class Real>
struct HessenbergChain {
    std::vector<int> lo;               // first nonzero column below the diagonal
    std::vector<std::vector<Real>> low; // columns lo[m]..m-1
    std::vector<Real> up;              // P[m][m+1]
};

template <class Real>
HessenbergChain<Real> build_threshold_chain(const ServerParams& s, const Real& p, int n)
{
    const int N = n + 2;
    HessenbergChain<Real> h;
    h.lo.resize(N);
    h.low.resize(N);
    h.up.assign(N, Real(0));
    const Real p_bar = Real(1) - p;
    for (int m = 0; m < N; ++m) {
        auto k = kernel_pmf<Real>(s, m);
        const int sh = static_cast<int>(k.size()) - 1;
        h.lo[m] = m - sh;
        h.low[m].assign(sh, Real(0));
        auto& row = h.low[m];
        const int lo = h.lo[m];
        if (m <= n) {
            h.up[m] = p * k[0];
            for (int i = 2; i <= sh; ++i)
                row[m + 1 - i - lo] += p * k[i];
            for (int i = 1; i <= sh; ++i)
                row[m - i - lo] += p_bar * k[i];
        } else {
            for (int i = 1; i <= sh; ++i)
                row[m - i - lo] += k[i];
        }
    }
    return h;
}

// GTH elimination from the top state down. Column k only has a nonzero above
// the diagonal in row k-1, so the back substitution is a product of ratios.
template <class Real>
std::vector<Real> gth_stationary(HessenbergChain<Real> h)
{
    const int N = static_cast<int>(h.up.size());
    std::vector<Real> pi(N, Real(0));
    pi[0] = Real(1);
    std::vector<Real> ratio(N, Real(0));
    for (int k = N - 1; k >= 1; --k) {
        Real S(0);
        for (const auto& v : h.low[k])
            S += v;
        const Real& a = h.up[k - 1];
        if (S > Real(0) && a > Real(0)) {
            ratio[k] = a / S;
            const Real f = ratio[k];
            const int lo_k = h.lo[k];
            const int lo_prev = h.lo[k - 1];
            auto& prev = h.low[k - 1];
            for (int j = lo_k; j < k - 1; ++j)
                prev[j - lo_prev] += f * h.low[k][j - lo_k];
        }
    }
    Real total = pi[0];
    for (int k = 1; k < N; ++k) {
        pi[k] = pi[k - 1] * ratio[k];
        total += pi[k];
    }
    for (auto& v : pi)
        v /= total;
    return pi;
}

template <class Real>
std::vector<Real> threshold_stationary_t(const ServerParams& s, double p, int n)
{
    return gth_stationary(build_threshold_chain<Real>(s, Real(p), n));
}

} // namespace lbw::detail
