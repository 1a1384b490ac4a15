#pragma once

#include "lbw/cost_model.hpp"
#include "lbw/policies.hpp"
#include "lbw/queue_model.hpp"

#include <cstddef>
#include <vector>

namespace lbw {

inline constexpr std::size_t kDefaultStateCap = 4'000'000;
// Sparse LU fill-in grows faster than the state count; policy evaluation stops earlier.
inline constexpr std::size_t kEvalStateCap = 500'000;

// Truncated K-server MDP on {0..B_1} x ... x {0..B_K}. Actions 0..K-1 route to
// a server; action K blocks (only when D is finite). A job routed to a full
// server is lost.
struct JointMdp {
    std::vector<ServerParams> servers;
    double p = 0.0;
    std::vector<CostSpec> costs;
    BlockingCost D;
    std::vector<int> B;

    std::vector<std::size_t> stride;
    std::size_t n_states = 0;
    std::vector<double> stage;                           // sum_k C_k(s_k)
    std::vector<std::vector<std::vector<double>>> pmf;   // pmf[k][n][i]

    int K() const { return static_cast<int>(servers.size()); }
    int n_actions() const { return K() + (D.is_infinite() ? 0 : 1); }
    bool is_block(int a) const { return a == K(); }
    std::vector<int> decode(std::size_t idx) const;
    std::size_t encode(const std::vector<int>& s) const;
    double stage_cost(std::size_t idx, int a) const;

    struct Transition {
        std::size_t to;
        double prob;
    };
    // Full product-form row for (state, action); used for checks and exact evaluation.
    std::vector<Transition> transitions(std::size_t idx, int a) const;
};

JointMdp build_joint_mdp(const std::vector<ServerParams>& servers, double p,
                         const std::vector<CostSpec>& costs, const BlockingCost& D,
                         const std::vector<int>& B, std::size_t state_cap = kDefaultStateCap);

struct SolveResult {
    double g = 0.0;
    std::vector<double> h;
    std::vector<int> action;
    long iterations = 0;
    double span = 0.0;
    std::vector<double> span_trace;
};

struct ViOptions {
    double epsilon = 1e-8;
    long max_iterations = 1'000'000;
    bool keep_trace = false;
};

// Relative value iteration; sweeps run in parallel over states.
SolveResult value_iteration(const JointMdp& mdp, ViOptions opt = {});

// Same fixed point by direct product enumeration, single-threaded. Kept as the
// reference the parallel kernel is tested and benchmarked against.
SolveResult value_iteration_reference(const JointMdp& mdp, ViOptions opt = {});

// One Bellman sweep each, exposed for the benchmark: out = T(v).
void bellman_sweep(const JointMdp& mdp, const std::vector<double>& v, std::vector<double>& out,
                   std::vector<int>* action);
void bellman_sweep_reference(const JointMdp& mdp, const std::vector<double>& v,
                             std::vector<double>& out, std::vector<int>* action);

struct PolicyValue {
    double g = 0.0;
    std::vector<double> mean_queue;
    double blocking_fraction = 0.0; // blocked arrivals / arrivals
    double loss_fraction = 0.0;     // arrivals routed to a full server / arrivals
    double tail_mass = 0.0;         // mass on states with some s_k > B_k - 5
    std::vector<double> pi;
};

PolicyValue policy_evaluation(const JointMdp& mdp, const PolicySpec& pol);
PolicyValue policy_evaluation(const JointMdp& mdp, const std::vector<int>& action_map);

struct TruncatedValue {
    PolicyValue value;
    std::vector<int> B;
};

// Evaluates pol, doubling B until the tail mass is below tol.
// Throws TruncationError when the state cap is reached first.
TruncatedValue evaluate_truncated(const std::vector<ServerParams>& servers, double p,
                                  const std::vector<CostSpec>& costs, const BlockingCost& D,
                                  const PolicySpec& pol, std::vector<int> B, double tol = 1e-8,
                                  std::size_t state_cap = kEvalStateCap);

// Random allocation splits the Bernoulli(p) stream into independent Bernoulli(p/K)
// streams, so each queue is its own chain. Returns +inf cost when a server is unstable.
PolicyValue rsa_exact(const std::vector<ServerParams>& servers, double p,
                      const std::vector<CostSpec>& costs);

} // namespace lbw
