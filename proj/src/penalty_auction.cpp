#include "bwmarket/penalty_auction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bwmarket/errors.hpp"
#include "bwmarket/format.hpp"
#include "json.hpp"

namespace bwmarket {

double shannon_spectral_efficiency(double power, double gain, double noise_density) {
    if (!(noise_density > 0.0)) {
        throw std::domain_error("shannon_spectral_efficiency: noise density must be positive");
    }
    if (power < 0.0 || gain < 0.0) {
        throw std::domain_error("shannon_spectral_efficiency: power and gain must be nonnegative");
    }
    return std::log2(1.0 + power * gain / noise_density);
}

double log_valuation(double r, double se) {
    if (r < 0.0) throw std::domain_error("log_valuation: bandwidth must be nonnegative");
    if (!(se > 0.0)) throw std::domain_error("log_valuation: spectral efficiency must be positive");
    return std::log1p(r * se);
}

double log_valuation_derivative(double r, double se) {
    if (r < 0.0) throw std::domain_error("log_valuation: bandwidth must be nonnegative");
    if (!(se > 0.0)) throw std::domain_error("log_valuation: spectral efficiency must be positive");
    return se / (1.0 + r * se);
}

std::vector<double> proportional_share(std::span<const double> bids, double total_bandwidth) {
    double total = 0.0;
    for (double b : bids) {
        if (b < 0.0) throw std::domain_error("proportional_share: bids must be nonnegative");
        total += b;
    }
    if (!(total > 0.0)) {
        throw std::domain_error("proportional_share: at least one bid must be positive");
    }
    std::vector<double> allocation(bids.size());
    for (std::size_t i = 0; i < bids.size(); ++i) {
        allocation[i] = total_bandwidth * bids[i] / total;
    }
    return allocation;
}

double social_welfare(std::span<const double> allocation, std::span<const double> se) {
    if (allocation.size() != se.size()) {
        throw std::invalid_argument("social_welfare: size mismatch");
    }
    double welfare = 0.0;
    for (std::size_t i = 0; i < allocation.size(); ++i) {
        welfare += log_valuation(allocation[i], se[i]);
    }
    return welfare;
}

PenaltyAuctionInstance PenaltyAuctionInstance::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("instance JSON: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("instance JSON: expected an object");

    PenaltyAuctionInstance inst;
    std::vector<std::string> unknown;
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "R") inst.total_bandwidth = value.get<double>();
            else if (key == "se") inst.spectral_efficiency = value.get<std::vector<double>>();
            else if (key == "q0") inst.initial_penalties = value.get<std::vector<double>>();
            else if (key == "delta") inst.step_size = value.get<double>();
            else if (key == "tol") inst.tolerance = value.get<double>();
            else if (key == "max_iters") inst.max_iterations = value.get<long>();
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

namespace {

void check_instance_vectors(std::span<const double> penalties, std::span<const double> se,
                            double total_bandwidth) {
    if (se.size() != penalties.size()) {
        throw std::invalid_argument("solve_ne_allocation: penalty/se size mismatch");
    }
    if (penalties.size() < 2) {
        throw std::domain_error("solve_ne_allocation: needs more than one user");
    }
    if (!(total_bandwidth > 0.0)) {
        throw std::domain_error("solve_ne_allocation: total bandwidth must be positive");
    }
    for (double q : penalties) {
        if (!(q > 0.0)) throw std::domain_error("solve_ne_allocation: penalties must be positive");
    }
    for (double s : se) {
        if (!(s > 0.0)) {
            throw std::domain_error("solve_ne_allocation: spectral efficiencies must be positive");
        }
    }
}

} // namespace

NeAllocation solve_ne_allocation(std::span<const double> penalties,
                                 std::span<const double> se,
                                 double total_bandwidth) {
    check_instance_vectors(penalties, se, total_bandwidth);
    const std::size_t n = penalties.size();
    const double r_total = total_bandwidth;

    const double penalty_sum = std::accumulate(penalties.begin(), penalties.end(), 0.0);
    std::vector<double> share(n); // penalties normalized by their sum
    for (std::size_t i = 0; i < n; ++i) share[i] = penalties[i] / penalty_sum;

    // clearing(x) = sum_i (R - share_i x / se_i) / (1 + share_i x) - R.
    // Each term's derivative is -share_i (1/se_i + R) / (1 + share_i x)^2,
    // so clearing is strictly decreasing; clearing(0) = (n-1) R > 0.
    const auto clearing = [&](double x) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += (r_total - share[i] * x / se[i]) / (1.0 + share[i] * x);
        }
        return sum - r_total;
    };

    if (!(clearing(0.0) > 0.0)) {
        throw numeric_error("solve_ne_allocation: sign condition failed at x = 0");
    }
    double hi = 1.0;
    while (clearing(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e300) {
            throw numeric_error("solve_ne_allocation: root not bracketed");
        }
    }
    double lo = hi > 1.0 ? hi / 2.0 : 0.0;

    // bisection to 1e-12 relative; the bracket [lo, hi] keeps clearing(lo) > 0 >= clearing(hi)
    for (int iter = 0; iter < 2000 && (hi - lo) > 1e-12 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (clearing(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    const double x_total = 0.5 * (lo + hi);

    NeAllocation result;
    result.x_total = x_total;
    result.allocation.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (r_total - share[i] * x_total / se[i]) / (1.0 + share[i] * x_total);
        if (r < 0.0) {
            throw infeasible_ne_error("solve_ne_allocation: equilibrium requires a negative allocation");
        }
        result.allocation[i] = r;
    }
    return result;
}

PenaltyAuctionResult penalty_iteration(const PenaltyAuctionInstance& instance, long trace_stride) {
    const std::size_t n = instance.spectral_efficiency.size();
    if (n < 2) throw std::domain_error("penalty_iteration: needs more than one user");
    if (!(instance.step_size > 0.0)) {
        throw std::domain_error("penalty_iteration: step size must be positive");
    }
    if (!(instance.tolerance > 0.0)) {
        throw std::domain_error("penalty_iteration: tolerance must be positive");
    }

    std::vector<double> penalties = instance.initial_penalties;
    if (penalties.empty()) {
        penalties.assign(n, 1.0 / static_cast<double>(n));
    }
    if (penalties.size() != n) {
        throw std::invalid_argument("penalty_iteration: q0/se size mismatch");
    }

    const double r_total = instance.total_bandwidth;
    PenaltyAuctionResult result;
    std::vector<double> direction(n);

    NeAllocation ne;
    long k = 0;
    long last_traced = -1;
    for (;;) {
        ne = solve_ne_allocation(penalties, instance.spectral_efficiency, r_total);

        const double penalty_sum = std::accumulate(penalties.begin(), penalties.end(), 0.0);
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            direction[i] = (r_total - ne.allocation[i]) / static_cast<double>(n - 1)
                         - r_total * penalties[i] / penalty_sum;
            norm = std::max(norm, std::abs(direction[i]));
        }

        if (trace_stride > 0 && k % trace_stride == 0) {
            result.trace.push_back(PenaltyIterationStep{
                k, penalties, ne.allocation, ne.x_total,
                social_welfare(ne.allocation, instance.spectral_efficiency)});
            last_traced = k;
        }

        result.final_update_norm = norm;
        if (norm <= instance.tolerance) {
            result.converged = true;
            break;
        }
        if (k >= instance.max_iterations) break;

        for (std::size_t i = 0; i < n; ++i) {
            penalties[i] += instance.step_size * direction[i];
            if (!(penalties[i] > 0.0) || !std::isfinite(penalties[i])) {
                throw numeric_error("penalty_iteration: penalty left the positive domain; reduce the step size");
            }
        }
        ++k;
    }

    result.iterations = k;
    if (trace_stride > 0 && last_traced != k) {
        result.trace.push_back(PenaltyIterationStep{
            k, penalties, ne.allocation, ne.x_total,
            social_welfare(ne.allocation, instance.spectral_efficiency)});
    }
    result.penalties = std::move(penalties);
    result.allocation = std::move(ne.allocation);
    result.x_total = ne.x_total;

    // NE bids behind the final allocation: sum(bids) = X / sum(q), each bid
    // proportional to its allocation.
    const double penalty_sum = std::accumulate(result.penalties.begin(), result.penalties.end(), 0.0);
    result.bids.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        result.bids[i] = result.allocation[i] * result.x_total / (r_total * penalty_sum);
    }
    return result;
}

std::string penalty_trace_csv(const PenaltyAuctionResult& result) {
    const std::size_t n = result.penalties.size();
    std::string out = "iter";
    for (std::size_t i = 0; i < n; ++i) out += ",q" + std::to_string(i + 1);
    for (std::size_t i = 0; i < n; ++i) out += ",r" + std::to_string(i + 1);
    out += ",X,welfare\n";
    for (const auto& step : result.trace) {
        out += std::to_string(step.iteration);
        for (double q : step.penalties) { out += ','; out += format_double(q); }
        for (double r : step.allocation) { out += ','; out += format_double(r); }
        out += ',';
        out += format_double(step.x_total);
        out += ',';
        out += format_double(step.welfare);
        out += '\n';
    }
    return out;
}

std::vector<double> water_filling_oracle(std::span<const double> se, double total_bandwidth) {
    if (!(total_bandwidth > 0.0)) {
        throw std::domain_error("water_filling_oracle: total bandwidth must be positive");
    }
    const std::size_t n = se.size();
    std::vector<double> inverse(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(se[i] > 0.0)) {
            throw std::domain_error("water_filling_oracle: spectral efficiencies must be positive");
        }
        inverse[i] = 1.0 / se[i];
    }

    // users sorted by 1/se; shrink the active set from the weakest end until
    // the water level clears everyone kept
    std::vector<std::size_t> by_inverse(n);
    std::iota(by_inverse.begin(), by_inverse.end(), std::size_t{0});
    std::sort(by_inverse.begin(), by_inverse.end(),
              [&](std::size_t a, std::size_t b) { return inverse[a] < inverse[b]; });

    std::size_t active = n;
    double level = 0.0;
    while (active > 0) {
        double inv_sum = 0.0;
        for (std::size_t k = 0; k < active; ++k) inv_sum += inverse[by_inverse[k]];
        level = (total_bandwidth + inv_sum) / static_cast<double>(active);
        if (level > inverse[by_inverse[active - 1]]) break;
        --active;
    }

    std::vector<double> allocation(n, 0.0);
    for (std::size_t k = 0; k < active; ++k) {
        const std::size_t i = by_inverse[k];
        allocation[i] = level - inverse[i];
    }
    return allocation;
}

} // namespace bwmarket
