#include "bwmarket.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <limits>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "bwmarket/comp_simulator.hpp"
#include "bwmarket/errors.hpp"
#include "bwmarket/figure1.hpp"
#include "bwmarket/flawed_auction.hpp"
#include "bwmarket/format.hpp"
#include "bwmarket/market_core.hpp"
#include "bwmarket/penalty_auction.hpp"
#include "bwmarket/rng.hpp"
#include "bwmarket/version.hpp"
#include "json.hpp"

using nlohmann::json;

struct bwm_scenario {
    bwmarket::ScenarioConfig config;
};

struct bwm_report {
    bwmarket::SimulationReport report;
};

namespace {

thread_local std::string t_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

bwm_status fail(bwm_status status, const char* what) {
    t_last_error = what;
    return status;
}

// Runs `body` and maps C++ exceptions onto status codes.
template <typename Fn>
bwm_status guarded(Fn&& body) {
    try {
        t_last_error.clear();
        return body();
    } catch (const bwmarket::infeasible_ne_error& e) {
        return fail(BWM_ERR_INFEASIBLE, e.what());
    } catch (const bwmarket::numeric_error& e) {
        return fail(BWM_ERR_NUMERIC, e.what());
    } catch (const std::domain_error& e) {
        return fail(BWM_ERR_DOMAIN, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(BWM_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(BWM_ERR_UNKNOWN, e.what());
    } catch (...) {
        return fail(BWM_ERR_UNKNOWN, "unknown error");
    }
}

std::string instance_hash(const std::string& canonical) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

json penalty_instance_json(const bwmarket::PenaltyAuctionInstance& inst) {
    json doc;
    doc["R"] = inst.total_bandwidth;
    doc["se"] = inst.spectral_efficiency;
    doc["q0"] = inst.initial_penalties;
    doc["delta"] = inst.step_size;
    doc["tol"] = inst.tolerance;
    doc["max_iters"] = inst.max_iterations;
    return doc;
}

json flawed_instance_json(const bwmarket::FlawedInstance& inst,
                          const std::vector<std::vector<double>>& samples) {
    json doc;
    doc["R"] = inst.total_bandwidth;
    doc["se"] = inst.spectral_efficiency;
    doc["q0"] = inst.initial_penalties;
    doc["delta"] = inst.step_size;
    doc["tol"] = inst.diagnosis_tolerance;
    doc["max_iters"] = inst.iterations;
    doc["r0"] = samples;
    return doc;
}

// Explicit r0 entries from the instance followed by `extra_inits` generated
// ones (uniform draws normalized to sum R).
std::vector<std::vector<double>> resolve_samples(const bwmarket::FlawedInstance& inst,
                                                 int extra_inits, std::uint64_t seed) {
    std::vector<std::vector<double>> samples = inst.initial_allocations;
    const std::size_t n = inst.spectral_efficiency.size();
    bwmarket::Rng rng(seed, 0xB1D5);
    for (int k = 0; k < extra_inits; ++k) {
        std::vector<double> r0(n);
        double sum = 0.0;
        for (auto& v : r0) {
            v = rng.uniform_open01();
            sum += v;
        }
        for (auto& v : r0) v = inst.total_bandwidth * v / sum;
        samples.push_back(std::move(r0));
    }
    return samples;
}

} // namespace

extern "C" {

const char* bwm_version(void) { return bwmarket::kVersion; }

const char* bwm_status_name(bwm_status status) {
    switch (status) {
        case BWM_OK: return "ok";
        case BWM_ERR_INVALID_ARGUMENT: return "invalid-argument";
        case BWM_ERR_DOMAIN: return "domain-error";
        case BWM_ERR_NUMERIC: return "numeric-error";
        case BWM_ERR_INFEASIBLE: return "infeasible";
        case BWM_ERR_UNKNOWN: return "unknown-error";
    }
    return "unknown-status";
}

const char* bwm_last_error(void) { return t_last_error.c_str(); }

void bwm_string_free(char* s) { std::free(s); }

bwm_status bwm_scenario_default(bwm_scenario** out) {
    return guarded([&]() {
        if (!out) return fail(BWM_ERR_INVALID_ARGUMENT, "null out pointer");
        *out = new bwm_scenario{};
        return BWM_OK;
    });
}

bwm_status bwm_scenario_parse(const char* json_text, bwm_scenario** out) {
    return guarded([&]() {
        if (!json_text || !out) return fail(BWM_ERR_INVALID_ARGUMENT, "null argument");
        auto config = bwmarket::ScenarioConfig::from_json(json_text);
        *out = new bwm_scenario{std::move(config)};
        return BWM_OK;
    });
}

static bwm_status override_field(bwm_scenario* sc, const char* key, const json& value) {
    if (!sc || !key) return fail(BWM_ERR_INVALID_ARGUMENT, "null argument");
    json doc = json::parse(sc->config.to_json());
    if (!doc.contains(key)) {
        return fail(BWM_ERR_INVALID_ARGUMENT,
                    (std::string("unknown scenario field: ") + key).c_str());
    }
    doc[key] = value;
    sc->config = bwmarket::ScenarioConfig::from_json(doc.dump());
    return BWM_OK;
}

bwm_status bwm_scenario_override_u64(bwm_scenario* sc, const char* key, uint64_t value) {
    return guarded([&]() { return override_field(sc, key, json(value)); });
}

bwm_status bwm_scenario_override_f64(bwm_scenario* sc, const char* key, double value) {
    return guarded([&]() { return override_field(sc, key, json(value)); });
}

bwm_status bwm_scenario_json(const bwm_scenario* sc, char** out) {
    return guarded([&]() {
        if (!sc || !out) return fail(BWM_ERR_INVALID_ARGUMENT, "null argument");
        *out = dup_string(sc->config.to_json());
        return BWM_OK;
    });
}

void bwm_scenario_free(bwm_scenario* sc) { delete sc; }

bwm_status bwm_run_simulation(const bwm_scenario* sc, int baseline, bwm_report** out) {
    return guarded([&]() {
        if (!sc || !out) return fail(BWM_ERR_INVALID_ARGUMENT, "null argument");
        auto report = baseline ? bwmarket::run_baseline(sc->config)
                               : bwmarket::run_simulation(sc->config);
        *out = new bwm_report{std::move(report)};
        return BWM_OK;
    });
}

bwm_status bwm_report_csv(const bwm_report* rep, char** out) {
    return guarded([&]() {
        if (!rep || !out) return fail(BWM_ERR_INVALID_ARGUMENT, "null argument");
        *out = dup_string(rep->report.to_csv());
        return BWM_OK;
    });
}

bwm_status bwm_report_summary_json(const bwm_report* rep, char** out) {
    return guarded([&]() {
        if (!rep || !out) return fail(BWM_ERR_INVALID_ARGUMENT, "null argument");
        *out = dup_string(rep->report.summary_json());
        return BWM_OK;
    });
}

bwm_status bwm_report_cumulative_data(const bwm_report* rep, double* out) {
    return guarded([&]() {
        if (!rep || !out) return fail(BWM_ERR_INVALID_ARGUMENT, "null argument");
        *out = rep->report.cumulative_data;
        return BWM_OK;
    });
}

void bwm_report_free(bwm_report* rep) { delete rep; }

bwm_status bwm_market_clear(const double* bids, size_t n_bids,
                            const double* conservations, size_t n_conservations,
                            double* price, int* market_held,
                            double* purchases, double* supplies) {
    return guarded([&]() {
        if ((!bids && n_bids > 0) || !conservations || !price || !market_held) {
            return fail(BWM_ERR_INVALID_ARGUMENT, "null argument");
        }
        const std::span<const double> bid_span(bids, n_bids);
        const std::span<const double> cons_span(conservations, n_conservations);
        const auto cleared = bwmarket::equilibrium_price(bid_span, cons_span);
        if (!cleared) {
            *price = 0.0;
            *market_held = 0;
            if (purchases) std::memset(purchases, 0, n_bids * sizeof(double));
            if (supplies) std::memset(supplies, 0, n_conservations * sizeof(double));
            return BWM_OK;
        }
        *price = *cleared;
        *market_held = 1;
        if (purchases) {
            for (size_t i = 0; i < n_bids; ++i) purchases[i] = bids[i] / *cleared;
        }
        if (supplies) {
            for (size_t j = 0; j < n_conservations; ++j) {
                supplies[j] = bwmarket::optimal_supply(conservations[j], *cleared);
            }
        }
        return BWM_OK;
    });
}

bwm_status bwm_figure1(const bwm_scenario* base,
                       const double* budgets, size_t n_budgets,
                       const uint64_t* epoch_counts, size_t n_epoch_counts,
                       const uint64_t* seeds, size_t n_seeds,
                       int jobs, char** rows_csv, char** medians_csv) {
    return guarded([&]() {
        if (!base || !budgets || !epoch_counts || !seeds || !rows_csv || !medians_csv) {
            return fail(BWM_ERR_INVALID_ARGUMENT, "null argument");
        }
        bwmarket::Figure1Params params;
        params.base = base->config;
        params.budgets.assign(budgets, budgets + n_budgets);
        for (size_t i = 0; i < n_epoch_counts; ++i) {
            if (epoch_counts[i] > static_cast<uint64_t>(std::numeric_limits<int>::max())) {
                return fail(BWM_ERR_INVALID_ARGUMENT, "epoch count out of range");
            }
            params.epoch_counts.push_back(static_cast<int>(epoch_counts[i]));
        }
        params.seeds.assign(seeds, seeds + n_seeds);
        params.jobs = jobs;
        const auto dataset = bwmarket::run_figure1(params);
        *rows_csv = dup_string(dataset.rows_csv());
        *medians_csv = dup_string(dataset.medians_csv());
        return BWM_OK;
    });
}

bwm_status bwm_penalty_auction(const char* instance_json, char** result_json, char** trace_csv) {
    return guarded([&]() {
        if (!instance_json || !result_json) {
            return fail(BWM_ERR_INVALID_ARGUMENT, "null argument");
        }
        auto inst = bwmarket::PenaltyAuctionInstance::from_json(instance_json);
        // keep opt-in traces bounded to ~1e5 rows
        const long stride = trace_csv ? std::max(1L, inst.max_iterations / 100000L) : 0L;
        const auto result = bwmarket::penalty_iteration(inst, stride);
        const auto optimum =
            bwmarket::water_filling_oracle(inst.spectral_efficiency, inst.total_bandwidth);

        double max_dev = 0.0;
        for (std::size_t i = 0; i < optimum.size(); ++i) {
            max_dev = std::max(max_dev, std::abs(result.allocation[i] - optimum[i]));
        }

        json doc;
        doc["version"] = bwmarket::kVersion;
        doc["seed"] = 0;
        const json inst_echo = penalty_instance_json(inst);
        doc["config_hash"] = instance_hash(inst_echo.dump());
        doc["instance"] = inst_echo;
        doc["converged"] = result.converged;
        doc["iterations"] = result.iterations;
        doc["final_update_norm"] = result.final_update_norm;
        doc["X"] = result.x_total;
        doc["q"] = result.penalties;
        doc["r"] = result.allocation;
        doc["bids"] = result.bids;
        doc["welfare"] = bwmarket::social_welfare(result.allocation, inst.spectral_efficiency);
        doc["water_filling"] = optimum;
        doc["max_deviation_from_water_filling"] = max_dev;
        *result_json = dup_string(doc.dump(2) + "\n");

        if (trace_csv) {
            std::string csv;
            csv += "# seed=0\n";
            csv += "# config_hash=" + instance_hash(inst_echo.dump()) + "\n";
            csv += std::string("# version=") + bwmarket::kVersion + "\n";
            csv += bwmarket::penalty_trace_csv(result);
            *trace_csv = dup_string(csv);
        }
        return BWM_OK;
    });
}

bwm_status bwm_flawed_demo(const char* instance_json, int extra_inits,
                           uint64_t seed, char** report_json) {
    return guarded([&]() {
        if (!instance_json || !report_json || extra_inits < 0) {
            return fail(BWM_ERR_INVALID_ARGUMENT, "null argument");
        }
        auto inst = bwmarket::FlawedInstance::from_json(instance_json);
        const auto samples = resolve_samples(inst, extra_inits, seed);
        std::vector<double> q0 = inst.initial_penalties;
        if (q0.empty()) q0.assign(inst.spectral_efficiency.size(), 0.1);

        const auto report = bwmarket::pathology_report(
            inst.spectral_efficiency, inst.total_bandwidth, samples, q0,
            inst.step_size, inst.iterations, inst.diagnosis_tolerance);

        json doc;
        doc["version"] = bwmarket::kVersion;
        doc["seed"] = seed;
        doc["config_hash"] = instance_hash(flawed_instance_json(inst, samples).dump());
        doc["R"] = report.total_bandwidth;
        doc["se"] = report.spectral_efficiency;
        doc["q0"] = q0;
        doc["delta"] = inst.step_size;
        doc["iters"] = inst.iterations;
        doc["welfare_optimum"] = report.welfare_optimum;
        doc["max_invariant_residual"] = report.max_invariant_residual;
        doc["pairwise_distance"] = report.pairwise_distance;
        doc["samples"] = json::array();
        for (const auto& s : report.samples) {
            json sample;
            sample["r0"] = s.initial_allocation;
            sample["final_allocation"] = s.final_allocation;
            sample["final_penalties"] = s.final_penalties;
            sample["diagnosis"] = s.diagnosis;
            sample["invariant_residual"] = s.invariant_residual;
            sample["distance_to_optimum"] = s.distance_to_optimum;
            sample["completed"] = s.completed;
            sample["completed_iterations"] = s.completed_iterations;
            sample["error"] = s.error;
            doc["samples"].push_back(std::move(sample));
        }
        *report_json = dup_string(doc.dump(2) + "\n");
        return BWM_OK;
    });
}

bwm_status bwm_flawed_trace(const char* instance_json, int extra_inits,
                            uint64_t seed, size_t sample_index, char** trace_csv) {
    return guarded([&]() {
        if (!instance_json || !trace_csv || extra_inits < 0) {
            return fail(BWM_ERR_INVALID_ARGUMENT, "null argument");
        }
        auto inst = bwmarket::FlawedInstance::from_json(instance_json);
        const auto samples = resolve_samples(inst, extra_inits, seed);
        if (sample_index >= samples.size()) {
            return fail(BWM_ERR_INVALID_ARGUMENT, "sample index out of range");
        }
        bwmarket::FlawedRunParams params;
        params.total_bandwidth = inst.total_bandwidth;
        params.spectral_efficiency = inst.spectral_efficiency;
        params.initial_allocation = samples[sample_index];
        params.initial_penalties = inst.initial_penalties;
        params.step_size = inst.step_size;
        params.diagnosis_tolerance = inst.diagnosis_tolerance;
        params.iterations = inst.iterations;
        params.trace_stride = std::max(1L, inst.iterations / 100000L);
        const auto trace = bwmarket::flawed_run(params);

        std::string csv;
        csv += "# seed=" + std::to_string(seed) + "\n";
        csv += "# config_hash=" + instance_hash(flawed_instance_json(inst, samples).dump()) + "\n";
        csv += std::string("# version=") + bwmarket::kVersion + "\n";
        csv += bwmarket::flawed_trace_csv(trace);
        *trace_csv = dup_string(csv);
        return BWM_OK;
    });
}

} // extern "C"
