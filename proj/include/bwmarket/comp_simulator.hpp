#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bwmarket/allocation_engine.hpp"
#include "bwmarket/market_core.hpp"
#include "bwmarket/rng.hpp"

namespace bwmarket {

// Buyers either replace their default bandwidth with the purchase or stack
// the purchase on top of it.
enum class PurchaseMode { exclusive, additional };

// aggregate_cap: each BS sells at most its capacity per epoch.
// per_ue_reuse: beamforming lets every BS offer its full capacity to each UE.
enum class CapacityMode { aggregate_cap, per_ue_reuse };

// Where the per-epoch need comes from: drawn uniform on (0,1), or derived
// from a drawn channel deterioration gated by the trigger threshold.
enum class NeedMode { uniform, deterioration };

enum class RunMode { market, baseline };

struct ScenarioConfig {
    int n_ues = 10;
    int n_bs = 4;
    double bs_capacity = 25.0;
    double initial_budget = 100.0;
    double default_bandwidth = 10.0;
    int epochs = 100;
    double file_probability = 0.5;
    double file_length_mean = 150.0;
    double file_length_std = 50.0;
    double theta = 3.0;    // trigger threshold, dB
    double tau_max = 20.0; // tolerable deterioration, dB
    int timer_T = 10;      // purchase-window timer, epochs
    int window_t = 2;      // observation sub-interval, epochs
    PurchaseMode purchase_mode = PurchaseMode::exclusive;
    CapacityMode capacity_mode = CapacityMode::aggregate_cap;
    int budget_refresh = 0; // refresh period in epochs; 0 = never
    double exhaustion_threshold = 1.0;
    NeedMode need_mode = NeedMode::uniform;
    std::uint64_t seed = 1;

    // Throws std::invalid_argument listing every offending field.
    void validate() const;

    // Strict parse: keys must match field names exactly; unknown keys are
    // rejected. Missing keys keep their defaults.
    static ScenarioConfig from_json(const std::string& text);

    std::string to_json() const;

    // FNV-1a over the canonical JSON form, as a 16-digit hex string.
    std::string config_hash() const;
};

struct UeEpochStats {
    double purchased = 0.0;
    double spend = 0.0;
    double data = 0.0;
    double budget_after = 0.0;
};

struct BsEpochStats {
    double sold = 0.0;
    double profit = 0.0;
};

struct EpochReport {
    int epoch = 0;
    std::optional<double> price; // nullopt = no market held
    std::vector<UeEpochStats> ues;
    std::vector<BsEpochStats> bss;
    double total_bid = 0.0;
    double total_sold = 0.0;
    double total_data = 0.0;
    double total_spend = 0.0;
};

struct SimulationReport {
    ScenarioConfig config;
    RunMode mode = RunMode::market;
    std::vector<EpochReport> epochs;
    double cumulative_data = 0.0;
    double saturated_reference = 0.0; // n_ues * default_bandwidth * epochs
    std::vector<double> final_budgets;

    // Per-epoch rows: epoch, price, total_bid, total_sold, total_data, then
    // one budget column per UE. Seed, config hash, and version ride in
    // comment lines so reruns are verifiable.
    std::string to_csv() const;
    std::string summary_json() const;
};

// One draw per UE: arrival coin, then a Gaussian length resampled until
// positive.
std::vector<std::optional<double>> generate_traffic(Rng& rng, const ScenarioConfig& config);

// Market phase of one epoch as a pure function of the drawn values.
struct EpochMarketInputs {
    std::vector<int> buyer_ids;
    std::vector<double> wealths;
    std::vector<double> needs;
    std::vector<double> conservations; // one per BS, indexed by BS id
    BsOrder order;
};

std::optional<MarketOutcome> clear_epoch_market(const EpochMarketInputs& inputs,
                                                const ScenarioConfig& config);

// Owns the per-UE ledgers and backlogs and the four RNG streams (traffic,
// needs, conservations, serving order). Baseline runs consume only the
// traffic stream, so a (seed, mode) pair fixes the whole run.
class Simulator {
public:
    Simulator(const ScenarioConfig& config, RunMode mode);

    EpochReport run_epoch();
    SimulationReport run(); // runs the remaining epochs

    const std::vector<UeAgent>& agents() const { return ues_; }
    const std::vector<BsAgent>& stations() const { return bss_; }
    int current_epoch() const { return epoch_; }

private:
    ScenarioConfig cfg_;
    RunMode mode_;
    Rng traffic_;
    Rng needs_;
    Rng conservations_;
    Rng order_;
    std::vector<UeAgent> ues_;
    std::vector<BsAgent> bss_;
    std::vector<int> bs_ids_;
    std::vector<EpochReport> history_;
    int epoch_ = 0;
};

SimulationReport run_simulation(const ScenarioConfig& config);
SimulationReport run_baseline(const ScenarioConfig& config);

} // namespace bwmarket
