#include "bwmarket/flawed_auction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bwmarket/errors.hpp"
#include "bwmarket/format.hpp"
#include "bwmarket/penalty_auction.hpp"
#include "json.hpp"

namespace bwmarket {

namespace {

// Classifies the trailing-window movement of the penalty vector.
class WindowDiagnosis {
public:
    WindowDiagnosis(std::size_t n, long iterations)
        : window_start_(iterations - std::min<long>(iterations, std::max<long>(10, iterations / 10))),
          sum_update_(n, 0.0), sum_abs_update_(n, 0.0) {}

    void observe(long k, std::span<const double> update) {
        if (k < window_start_) return;
        ++observed_;
        for (std::size_t i = 0; i < update.size(); ++i) {
            sum_update_[i] += update[i];
            sum_abs_update_[i] += std::abs(update[i]);
            max_update_ = std::max(max_update_, std::abs(update[i]));
        }
    }

    double max_update() const { return max_update_; }

    std::string label(double tolerance) const {
        if (observed_ == 0 || max_update_ <= tolerance) return "converged";
        const double noise_floor = static_cast<double>(observed_) * tolerance;
        for (std::size_t i = 0; i < sum_update_.size(); ++i) {
            if (sum_abs_update_[i] >= noise_floor &&
                std::abs(sum_update_[i]) >= 0.5 * sum_abs_update_[i]) {
                return "drifting";
            }
        }
        return "oscillating";
    }

private:
    long window_start_;
    long observed_ = 0;
    std::vector<double> sum_update_;
    std::vector<double> sum_abs_update_;
    double max_update_ = 0.0;
};

std::vector<double> default_penalties(std::size_t n) {
    return std::vector<double>(n, 0.1);
}

void validate_common(std::size_t n, double total_bandwidth, double step_size, long iterations) {
    if (n < 2) throw std::domain_error("flawed auction: needs more than one user");
    if (!(total_bandwidth > 0.0)) {
        throw std::domain_error("flawed auction: total bandwidth must be positive");
    }
    if (!(step_size > 0.0)) throw std::domain_error("flawed auction: step size must be positive");
    if (iterations < 0) throw std::domain_error("flawed auction: iteration count must be nonnegative");
}

struct InternalOutcome {
    FlawedAuctionTrace trace;
    bool completed = true;
    std::string error;
};

InternalOutcome run_internal(const FlawedRunParams& params) {
    const std::size_t n = params.spectral_efficiency.size();
    validate_common(n, params.total_bandwidth, params.step_size, params.iterations);
    if (params.initial_allocation.size() != n) {
        throw std::invalid_argument("flawed_run: r0/se size mismatch");
    }
    std::vector<double> penalties =
        params.initial_penalties.empty() ? default_penalties(n) : params.initial_penalties;
    if (penalties.size() != n) throw std::invalid_argument("flawed_run: q0/se size mismatch");

    double r0_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(params.initial_allocation[i] > 0.0)) {
            throw std::domain_error("flawed_run: initial allocation must be strictly positive");
        }
        if (!(params.spectral_efficiency[i] > 0.0)) {
            throw std::domain_error("flawed_run: spectral efficiencies must be positive");
        }
        if (!(penalties[i] > 0.0)) {
            throw std::domain_error("flawed_run: initial penalties must be positive");
        }
        r0_sum += params.initial_allocation[i];
    }
    if (std::abs(r0_sum - params.total_bandwidth) > 1e-9 * params.total_bandwidth) {
        throw std::domain_error("flawed_run: initial allocation must sum to the total bandwidth");
    }

    const double r_total = params.total_bandwidth;
    const auto& se = params.spectral_efficiency;
    std::vector<double> allocation = params.initial_allocation;
    std::vector<double> bids(n), discount(n, 0.0), marginal(n), update(n);

    InternalOutcome out;
    auto& trace = out.trace;
    trace.total_bandwidth = r_total;
    trace.spectral_efficiency = se;
    trace.step_size = params.step_size;
    trace.conserved_products.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = allocation[i] * log_valuation_derivative(allocation[i], se[i]);
        trace.conserved_products[i] = c;
        bids[i] = c / penalties[i];
    }

    const auto record = [&](long k) {
        trace.trace_iterations.push_back(k);
        trace.penalties_trace.push_back(penalties);
        trace.discount_trace.push_back(discount);
        trace.bids_trace.push_back(bids);
        trace.allocation_trace.push_back(allocation);
    };
    if (params.trace_stride > 0) record(0);

    WindowDiagnosis window(n, params.iterations);
    std::vector<double> next_penalty(n), next_discount(n), next_bid(n), next_allocation(n);
    long completed = 0;
    for (long k = 1; k <= params.iterations; ++k) {
        const double penalty_sum = std::accumulate(penalties.begin(), penalties.end(), 0.0);
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            marginal[i] = allocation[i] * log_valuation_derivative(allocation[i], se[i]);
            next_discount[i] = 1.0 - bids[i] * penalties[i] / marginal[i];
            update[i] = params.step_size *
                        ((r_total - allocation[i]) / static_cast<double>(n - 1)
                         - r_total * penalties[i] / penalty_sum);
            next_penalty[i] = penalties[i] + update[i];
            if (!(next_penalty[i] > 0.0) || !std::isfinite(next_penalty[i])) ok = false;
        }
        double bid_sum = 0.0;
        if (ok) {
            for (std::size_t i = 0; i < n; ++i) {
                next_bid[i] = marginal[i] * (1.0 - next_discount[i]) / next_penalty[i];
                bid_sum += next_bid[i];
                if (!std::isfinite(next_bid[i])) ok = false;
            }
            if (!(bid_sum > 0.0) || !std::isfinite(bid_sum)) ok = false;
        }
        if (ok) {
            for (std::size_t i = 0; i < n; ++i) {
                next_allocation[i] = r_total * next_bid[i] / bid_sum;
                if (!std::isfinite(next_allocation[i])) ok = false;
            }
        }
        if (!ok) {
            out.completed = false;
            out.error = "flawed_run: iteration " + std::to_string(k) +
                        " left the positive domain (step size too large or penalties underflowed)";
            break;
        }

        penalties.swap(next_penalty);
        discount.swap(next_discount);
        bids.swap(next_bid);
        allocation.swap(next_allocation);
        completed = k;

        window.observe(k - 1, update);
        for (std::size_t i = 0; i < n; ++i) {
            const double residual =
                std::abs(bids[i] * penalties[i] - trace.conserved_products[i]) /
                trace.conserved_products[i];
            trace.invariant_residual = std::max(trace.invariant_residual, residual);
        }
        if (params.trace_stride > 0 && k % params.trace_stride == 0) record(k);
    }

    trace.iterations = completed;
    trace.penalties = std::move(penalties);
    trace.discount = std::move(discount);
    trace.bids = std::move(bids);
    trace.allocation = std::move(allocation);
    trace.trailing_max_update = window.max_update();
    trace.diagnosis = out.completed ? window.label(params.diagnosis_tolerance)
                                    : "numeric-breakdown";
    return out;
}

} // namespace

FlawedAuctionTrace flawed_run(const FlawedRunParams& params) {
    InternalOutcome out = run_internal(params);
    if (!out.completed) throw numeric_error(out.error);
    return std::move(out.trace);
}

AllocationTrajectory reduced_form_run(const ReducedRunParams& params) {
    const std::size_t n = params.conserved_products.size();
    validate_common(n, params.total_bandwidth, params.step_size, params.iterations);
    std::vector<double> penalties =
        params.initial_penalties.empty() ? default_penalties(n) : params.initial_penalties;
    if (penalties.size() != n) throw std::invalid_argument("reduced_form_run: q0/c size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(params.conserved_products[i] > 0.0)) {
            throw std::domain_error("reduced_form_run: products must be positive");
        }
        if (!(penalties[i] > 0.0)) {
            throw std::domain_error("reduced_form_run: initial penalties must be positive");
        }
    }

    const double r_total = params.total_bandwidth;
    const auto& products = params.conserved_products;
    AllocationTrajectory traj;

    const auto harmonic = [&]() {
        double h = 0.0;
        for (std::size_t i = 0; i < n; ++i) h += products[i] / penalties[i];
        return h;
    };
    std::vector<double> allocation(n);
    const auto refresh_allocation = [&]() {
        const double h = harmonic();
        for (std::size_t i = 0; i < n; ++i) {
            allocation[i] = r_total * (products[i] / penalties[i]) / h;
        }
    };
    const auto record = [&](long k) {
        traj.trace_iterations.push_back(k);
        traj.penalties_trace.push_back(penalties);
        traj.allocation_trace.push_back(allocation);
    };

    refresh_allocation();
    if (params.trace_stride > 0) record(0);

    WindowDiagnosis window(n, params.iterations);
    std::vector<double> update(n), next_penalty(n);
    long completed = 0;
    for (long k = 1; k <= params.iterations; ++k) {
        const double h = harmonic();
        const double scaled_sum =
            std::accumulate(penalties.begin(), penalties.end(), 0.0) / static_cast<double>(n - 1);
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            update[i] = params.step_size * (r_total / static_cast<double>(n - 1)) *
                        (1.0 - (products[i] / penalties[i]) / h - penalties[i] / scaled_sum);
            next_penalty[i] = penalties[i] + update[i];
            if (!(next_penalty[i] > 0.0) || !std::isfinite(next_penalty[i])) ok = false;
        }
        if (!ok) {
            throw numeric_error("reduced_form_run: iteration " + std::to_string(k) +
                                " left the positive domain");
        }
        penalties.swap(next_penalty);
        completed = k;
        refresh_allocation();
        window.observe(k - 1, update);
        if (params.trace_stride > 0 && k % params.trace_stride == 0) record(k);
    }

    traj.iterations = completed;
    traj.penalties = std::move(penalties);
    traj.allocation = std::move(allocation);
    traj.trailing_max_update = window.max_update();
    traj.diagnosis = window.label(params.diagnosis_tolerance);
    return traj;
}

PathologyReport pathology_report(std::span<const double> se, double total_bandwidth,
                                 const std::vector<std::vector<double>>& initial_allocations,
                                 std::span<const double> initial_penalties,
                                 double step_size, long iterations,
                                 double diagnosis_tolerance) {
    if (initial_allocations.size() < 2) {
        throw std::invalid_argument("pathology_report: needs at least two initial allocations");
    }
    PathologyReport report;
    report.total_bandwidth = total_bandwidth;
    report.spectral_efficiency.assign(se.begin(), se.end());
    report.welfare_optimum = water_filling_oracle(se, total_bandwidth);

    for (const auto& r0 : initial_allocations) {
        FlawedRunParams params;
        params.total_bandwidth = total_bandwidth;
        params.spectral_efficiency.assign(se.begin(), se.end());
        params.initial_allocation = r0;
        params.initial_penalties.assign(initial_penalties.begin(), initial_penalties.end());
        params.step_size = step_size;
        params.diagnosis_tolerance = diagnosis_tolerance;
        params.iterations = iterations;
        params.trace_stride = 0;

        InternalOutcome out = run_internal(params);
        PathologySample sample;
        sample.initial_allocation = r0;
        sample.final_allocation = out.trace.allocation;
        sample.final_penalties = out.trace.penalties;
        sample.diagnosis = out.trace.diagnosis;
        sample.invariant_residual = out.trace.invariant_residual;
        sample.completed = out.completed;
        sample.completed_iterations = out.trace.iterations;
        sample.error = out.error;
        double dist = 0.0;
        for (std::size_t i = 0; i < sample.final_allocation.size(); ++i) {
            dist = std::max(dist, std::abs(sample.final_allocation[i] - report.welfare_optimum[i]));
        }
        sample.distance_to_optimum = dist;
        report.max_invariant_residual =
            std::max(report.max_invariant_residual, sample.invariant_residual);
        report.samples.push_back(std::move(sample));
    }

    const std::size_t m = report.samples.size();
    report.pairwise_distance.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            double dist = 0.0;
            const auto& ra = report.samples[a].final_allocation;
            const auto& rb = report.samples[b].final_allocation;
            for (std::size_t i = 0; i < ra.size(); ++i) {
                dist = std::max(dist, std::abs(ra[i] - rb[i]));
            }
            report.pairwise_distance[a][b] = dist;
            report.pairwise_distance[b][a] = dist;
        }
    }
    return report;
}

FlawedInstance FlawedInstance::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("instance JSON: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("instance JSON: expected an object");

    FlawedInstance inst;
    std::vector<std::string> unknown;
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "R") inst.total_bandwidth = value.get<double>();
            else if (key == "se") inst.spectral_efficiency = value.get<std::vector<double>>();
            else if (key == "q0") inst.initial_penalties = value.get<std::vector<double>>();
            else if (key == "delta") inst.step_size = value.get<double>();
            else if (key == "tol") inst.diagnosis_tolerance = value.get<double>();
            else if (key == "max_iters") inst.iterations = value.get<long>();
            else if (key == "r0") inst.initial_allocations = value.get<std::vector<std::vector<double>>>();
            else unknown.push_back(key);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("instance JSON: bad value for '" + key + "': " + e.what());
        }
    }
    if (!unknown.empty()) {
        std::string msg = "instance JSON: unknown keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw std::invalid_argument(msg);
    }
    if (!doc.contains("R") || !doc.contains("se")) {
        throw std::invalid_argument("instance JSON: R and se are required");
    }
    return inst;
}

std::string flawed_trace_csv(const FlawedAuctionTrace& trace) {
    const std::size_t n = trace.spectral_efficiency.size();
    std::string out = "iter";
    for (std::size_t i = 0; i < n; ++i) out += ",q" + std::to_string(i + 1);
    for (std::size_t i = 0; i < n; ++i) out += ",r" + std::to_string(i + 1);
    out += '\n';
    for (std::size_t row = 0; row < trace.trace_iterations.size(); ++row) {
        out += std::to_string(trace.trace_iterations[row]);
        for (double q : trace.penalties_trace[row]) { out += ','; out += format_double(q); }
        for (double r : trace.allocation_trace[row]) { out += ','; out += format_double(r); }
        out += '\n';
    }
    return out;
}

} // namespace bwmarket
