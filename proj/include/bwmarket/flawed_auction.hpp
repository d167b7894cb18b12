#pragma once

#include <span>
#include <string>
#include <vector>

namespace bwmarket {

// Parameters for the transcribed iterative auction. The update order per
// iteration is fixed: bid discount, penalty step, bid, proportional-share
// allocation.
struct FlawedRunParams {
    double total_bandwidth = 0.0;          // R
    std::vector<double> spectral_efficiency;
    std::vector<double> initial_allocation; // positive, sums to R
    std::vector<double> initial_penalties;  // empty = all 0.1
    double step_size = 0.01;
    double diagnosis_tolerance = 1e-8;
    long iterations = 100'000;
    long trace_stride = 1;                  // 0 = keep finals only
};

struct FlawedAuctionTrace {
    double total_bandwidth = 0.0;
    std::vector<double> spectral_efficiency;
    double step_size = 0.0;

    // bid * penalty stays pinned to these per-user products for the whole
    // run; everything after the first iteration is determined by them.
    std::vector<double> conserved_products;

    std::vector<long> trace_iterations;
    std::vector<std::vector<double>> penalties_trace;
    std::vector<std::vector<double>> discount_trace;
    std::vector<std::vector<double>> bids_trace;
    std::vector<std::vector<double>> allocation_trace;

    std::vector<double> penalties;  // final q
    std::vector<double> discount;   // final mu
    std::vector<double> bids;       // final b
    std::vector<double> allocation; // final r

    double invariant_residual = 0.0; // max over iterations of |b q - c| / c
    long iterations = 0;
    std::string diagnosis;           // converged | oscillating | drifting
    double trailing_max_update = 0.0;
};

// Runs the algorithm exactly as written. Throws numeric_error when a penalty
// leaves the positive domain or any intermediate stops being finite.
FlawedAuctionTrace flawed_run(const FlawedRunParams& params);

// Equivalent reduced recursion: only the penalties are iterated; allocations
// are reported as R*(c_i/q_i)/H with H = sum(c_j/q_j).
struct ReducedRunParams {
    std::vector<double> conserved_products; // c
    std::vector<double> initial_penalties;  // empty = all 0.1
    double total_bandwidth = 0.0;
    double step_size = 0.01;
    double diagnosis_tolerance = 1e-8;
    long iterations = 100'000;
    long trace_stride = 1;
};

struct AllocationTrajectory {
    std::vector<long> trace_iterations;
    std::vector<std::vector<double>> penalties_trace;
    std::vector<std::vector<double>> allocation_trace;
    std::vector<double> penalties;
    std::vector<double> allocation;
    long iterations = 0;
    std::string diagnosis;
    double trailing_max_update = 0.0;
};

AllocationTrajectory reduced_form_run(const ReducedRunParams& params);

struct PathologySample {
    std::vector<double> initial_allocation;
    std::vector<double> final_allocation;
    std::vector<double> final_penalties;
    std::string diagnosis;           // the three labels, or numeric-breakdown
    double invariant_residual = 0.0;
    double distance_to_optimum = 0.0; // max norm vs water filling
    bool completed = true;
    long completed_iterations = 0;
    std::string error;
};

struct PathologyReport {
    double total_bandwidth = 0.0;
    std::vector<double> spectral_efficiency;
    std::vector<double> welfare_optimum;  // water-filling allocation
    std::vector<PathologySample> samples;
    std::vector<std::vector<double>> pairwise_distance; // max norm between finals
    double max_invariant_residual = 0.0;
};

// Runs one trajectory per initial allocation (shared se, penalties, step) and
// reports how far the finals land from each other and from the welfare
// optimum. A sample that breaks down numerically is reported, not thrown.
PathologyReport pathology_report(std::span<const double> se, double total_bandwidth,
                                 const std::vector<std::vector<double>>& initial_allocations,
                                 std::span<const double> initial_penalties,
                                 double step_size, long iterations,
                                 double diagnosis_tolerance = 1e-8);

// Strict JSON: { R, se, q0?, delta?, tol?, max_iters?, r0? } where r0 is a
// list of initial allocations.
struct FlawedInstance {
    double total_bandwidth = 0.0;
    std::vector<double> spectral_efficiency;
    std::vector<double> initial_penalties;
    double step_size = 0.01;
    double diagnosis_tolerance = 1e-8;
    long iterations = 100'000;
    std::vector<std::vector<double>> initial_allocations;

    static FlawedInstance from_json(const std::string& text);
};

// CSV with one row per recorded iteration: iter, q1..qn, r1..rn.
std::string flawed_trace_csv(const FlawedAuctionTrace& trace);

} // namespace bwmarket
