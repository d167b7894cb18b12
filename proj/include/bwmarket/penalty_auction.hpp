#pragma once

#include <span>
#include <string>
#include <vector>

namespace bwmarket {

// Shannon spectral efficiency log2(1 + power*gain/noise_density).
double shannon_spectral_efficiency(double power, double gain, double noise_density);

// Log valuation ln(1 + r*se) of receiving bandwidth r, and its derivative
// se / (1 + r*se).
double log_valuation(double r, double se);
double log_valuation_derivative(double r, double se);

// r_i = R * bid_i / sum(bids). Requires at least one positive bid.
std::vector<double> proportional_share(std::span<const double> bids, double total_bandwidth);

// Sum of log valuations, the social-welfare objective.
double social_welfare(std::span<const double> allocation, std::span<const double> se);

// Proportional-share-with-penalty auction instance.
struct PenaltyAuctionInstance {
    double total_bandwidth = 0.0;         // R
    std::vector<double> spectral_efficiency;
    std::vector<double> initial_penalties; // empty = uniform 1/n
    double step_size = 0.01;
    double tolerance = 1e-8;
    long max_iterations = 1'000'000;

    // Strict JSON: { R, se, q0?, delta?, tol?, max_iters? }. Unknown keys rejected.
    static PenaltyAuctionInstance from_json(const std::string& text);
};

struct NeAllocation {
    std::vector<double> allocation;
    double x_total = 0.0; // root of the clearing equation
};

// Nash-equilibrium allocation under penalties: normalizes the penalties,
// finds the unique positive root of the clearing equation (whose left side
// minus R is strictly decreasing, positive at zero), and maps it back to the
// per-user allocations. Throws infeasible_ne_error if any allocation comes
// out negative.
NeAllocation solve_ne_allocation(std::span<const double> penalties,
                                 std::span<const double> se,
                                 double total_bandwidth);

struct PenaltyIterationStep {
    long iteration = 0;
    std::vector<double> penalties;
    std::vector<double> allocation;
    double x_total = 0.0;
    double welfare = 0.0;
};

struct PenaltyAuctionResult {
    std::vector<double> penalties;  // final q
    std::vector<double> allocation; // final r
    std::vector<double> bids;       // NE bids recovering the allocation
    double x_total = 0.0;
    bool converged = false;
    long iterations = 0;
    double final_update_norm = 0.0; // max |update direction| at exit
    std::vector<PenaltyIterationStep> trace;
};

// Repeats {solve NE allocation; penalty gradient step} until the update
// direction falls below the tolerance. Convergence is measured on the
// unscaled direction (the step divided by step_size), so the reported
// fixed-point residual does not depend on the step size chosen.
PenaltyAuctionResult penalty_iteration(const PenaltyAuctionInstance& instance,
                                       long trace_stride = 0);

// CSV trace: iter, q1..qn, r1..rn, X, welfare.
std::string penalty_trace_csv(const PenaltyAuctionResult& result);

// Exact maximizer of the social welfare under sum(r) <= R, r >= 0:
// r_i = max(0, level - 1/se_i) with the water level fixed by the active set.
// Closed form; shares no code with the iterative solver.
std::vector<double> water_filling_oracle(std::span<const double> se, double total_bandwidth);

} // namespace bwmarket
