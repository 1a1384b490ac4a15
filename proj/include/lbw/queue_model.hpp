#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

namespace lbw {

struct Finite {
    int d = 1;
};
struct InfinitePS {};

using Discipline = std::variant<Finite, InfinitePS>;

inline constexpr int kMaxFiniteD = 64;

struct ServerParams {
    Discipline discipline{Finite{1}};
    double q = 1.0;
    std::string label;

    static ServerParams fcfs(double q, std::string label = {});
    static ServerParams lps(int d, double q, std::string label = {});
    static ServerParams ps(double q, std::string label = {});

    bool is_ps() const { return std::holds_alternative<InfinitePS>(discipline); }
    bool is_fcfs() const;
    // min{n, d}; n itself under PS
    int shares(int n) const;
    // "FCFS", "LPS-4", "PS"
    std::string discipline_name() const;
};

// Throws ConfigError unless 0 < q <= 1 and 1 <= d <= 64.
void validate(const ServerParams& s);

using Matrix = Eigen::MatrixXd;

// Probability of i departures in a slot with n jobs present.
double departure_kernel(const ServerParams& s, int n, int i);

// Full pmf over i = 0..min{n,d}.
std::vector<double> departure_pmf(const ServerParams& s, int n);

// States 0..n are active (arrivals accepted), n+1 is passive.
Matrix threshold_transition_matrix(const ServerParams& s, double p, int n);

// Dense LU on (P^T - I) with the last equation replaced by sum(pi) = 1.
std::vector<double> stationary_distribution(const Matrix& P);

// Stationary vector of the threshold chain by GTH elimination (no subtractions,
// componentwise accurate even for vanishing tail mass).
std::vector<double> threshold_stationary(const ServerParams& s, double p, int n);

std::vector<double> fcfs_stationary_closed_form(double p, double q, int n);

struct ThresholdChain {
    ServerParams params;
    int threshold = 0;
    double arrival_prob = 0.0;
    Matrix matrix;
    std::vector<double> stationary;
};

ThresholdChain make_threshold_chain(const ServerParams& s, double p, int n);

// Sum_{m<=n} pi^n(m).
double cumulative_active_mass(const std::vector<double>& pi);

} // namespace lbw
