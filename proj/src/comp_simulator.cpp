#include "bwmarket/comp_simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

#include "bwmarket/format.hpp"
#include "bwmarket/version.hpp"
#include "json.hpp"

namespace bwmarket {

namespace {

constexpr std::uint64_t kTrafficStream = 0;
constexpr std::uint64_t kNeedsStream = 1;
constexpr std::uint64_t kConservationsStream = 2;
constexpr std::uint64_t kOrderStream = 3;

const char* to_string(PurchaseMode mode) {
    return mode == PurchaseMode::exclusive ? "exclusive" : "additional";
}
const char* to_string(CapacityMode mode) {
    return mode == CapacityMode::aggregate_cap ? "aggregate_cap" : "per_ue_reuse";
}
const char* to_string(NeedMode mode) {
    return mode == NeedMode::uniform ? "uniform" : "deterioration";
}
const char* to_string(RunMode mode) {
    return mode == RunMode::market ? "market" : "baseline";
}

PurchaseMode purchase_mode_from(const std::string& s) {
    if (s == "exclusive") return PurchaseMode::exclusive;
    if (s == "additional") return PurchaseMode::additional;
    throw std::invalid_argument("purchase_mode must be 'exclusive' or 'additional'");
}
CapacityMode capacity_mode_from(const std::string& s) {
    if (s == "aggregate_cap") return CapacityMode::aggregate_cap;
    if (s == "per_ue_reuse") return CapacityMode::per_ue_reuse;
    throw std::invalid_argument("capacity_mode must be 'aggregate_cap' or 'per_ue_reuse'");
}
NeedMode need_mode_from(const std::string& s) {
    if (s == "uniform") return NeedMode::uniform;
    if (s == "deterioration") return NeedMode::deterioration;
    throw std::invalid_argument("need_mode must be 'uniform' or 'deterioration'");
}

} // namespace

void ScenarioConfig::validate() const {
    std::vector<std::string> bad;
    if (n_ues < 1) bad.push_back("n_ues (must be >= 1)");
    if (n_bs < 1) bad.push_back("n_bs (must be >= 1)");
    if (!(bs_capacity > 0.0)) bad.push_back("bs_capacity (must be > 0)");
    if (initial_budget < 0.0) bad.push_back("initial_budget (must be >= 0)");
    if (default_bandwidth < 0.0) bad.push_back("default_bandwidth (must be >= 0)");
    if (epochs < 0) bad.push_back("epochs (must be >= 0)");
    if (!(file_probability >= 0.0 && file_probability <= 1.0)) {
        bad.push_back("file_probability (must be in [0, 1])");
    }
    if (!(file_length_mean > 0.0)) bad.push_back("file_length_mean (must be > 0)");
    if (file_length_std < 0.0) bad.push_back("file_length_std (must be >= 0)");
    if (!(theta > 0.0)) bad.push_back("theta (must be > 0)");
    if (!(tau_max > 0.0)) bad.push_back("tau_max (must be > 0)");
    if (timer_T < 1) bad.push_back("timer_T (must be >= 1)");
    if (window_t < 1 || window_t > timer_T) bad.push_back("window_t (must be in [1, timer_T])");
    if (budget_refresh < 0) bad.push_back("budget_refresh (must be >= 0)");
    if (exhaustion_threshold < 0.0) bad.push_back("exhaustion_threshold (must be >= 0)");
    if (!bad.empty()) {
        std::string msg = "invalid scenario config:";
        for (std::size_t i = 0; i < bad.size(); ++i) {
            msg += (i == 0 ? " " : "; ") + bad[i];
        }
        throw std::invalid_argument(msg);
    }
}

ScenarioConfig ScenarioConfig::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("scenario JSON: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("scenario JSON: expected an object");

    ScenarioConfig cfg;
    std::vector<std::string> unknown;
    const auto as_int = [](const nlohmann::json& v, const char* key) {
        if (!v.is_number_integer()) {
            throw std::invalid_argument(std::string("scenario JSON: ") + key + " must be an integer");
        }
        const auto wide = v.get<long long>();
        if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max()) {
            throw std::invalid_argument(std::string("scenario JSON: ") + key + " is out of range");
        }
        return static_cast<int>(wide);
    };
    const auto as_double = [](const nlohmann::json& v, const char* key) {
        if (!v.is_number()) {
            throw std::invalid_argument(std::string("scenario JSON: ") + key + " must be a number");
        }
        return v.get<double>();
    };
    const auto as_string = [](const nlohmann::json& v, const char* key) {
        if (!v.is_string()) {
            throw std::invalid_argument(std::string("scenario JSON: ") + key + " must be a string");
        }
        return v.get<std::string>();
    };

    for (const auto& [key, value] : doc.items()) {
        if (key == "n_ues") cfg.n_ues = as_int(value, "n_ues");
        else if (key == "n_bs") cfg.n_bs = as_int(value, "n_bs");
        else if (key == "bs_capacity") cfg.bs_capacity = as_double(value, "bs_capacity");
        else if (key == "initial_budget") cfg.initial_budget = as_double(value, "initial_budget");
        else if (key == "default_bandwidth") cfg.default_bandwidth = as_double(value, "default_bandwidth");
        else if (key == "epochs") cfg.epochs = as_int(value, "epochs");
        else if (key == "file_probability") cfg.file_probability = as_double(value, "file_probability");
        else if (key == "file_length_mean") cfg.file_length_mean = as_double(value, "file_length_mean");
        else if (key == "file_length_std") cfg.file_length_std = as_double(value, "file_length_std");
        else if (key == "theta") cfg.theta = as_double(value, "theta");
        else if (key == "tau_max") cfg.tau_max = as_double(value, "tau_max");
        else if (key == "timer_T") cfg.timer_T = as_int(value, "timer_T");
        else if (key == "window_t") cfg.window_t = as_int(value, "window_t");
        else if (key == "purchase_mode") cfg.purchase_mode = purchase_mode_from(as_string(value, "purchase_mode"));
        else if (key == "capacity_mode") cfg.capacity_mode = capacity_mode_from(as_string(value, "capacity_mode"));
        else if (key == "budget_refresh") cfg.budget_refresh = as_int(value, "budget_refresh");
        else if (key == "exhaustion_threshold") cfg.exhaustion_threshold = as_double(value, "exhaustion_threshold");
        else if (key == "need_mode") cfg.need_mode = need_mode_from(as_string(value, "need_mode"));
        else if (key == "seed") {
            if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0)) {
                throw std::invalid_argument("scenario JSON: seed must be a nonnegative integer");
            }
            cfg.seed = value.get<std::uint64_t>();
        } else {
            unknown.push_back(key);
        }
    }
    if (!unknown.empty()) {
        std::string msg = "scenario JSON: unknown keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw std::invalid_argument(msg);
    }
    cfg.validate();
    return cfg;
}

std::string ScenarioConfig::to_json() const {
    nlohmann::json doc;
    doc["n_ues"] = n_ues;
    doc["n_bs"] = n_bs;
    doc["bs_capacity"] = bs_capacity;
    doc["initial_budget"] = initial_budget;
    doc["default_bandwidth"] = default_bandwidth;
    doc["epochs"] = epochs;
    doc["file_probability"] = file_probability;
    doc["file_length_mean"] = file_length_mean;
    doc["file_length_std"] = file_length_std;
    doc["theta"] = theta;
    doc["tau_max"] = tau_max;
    doc["timer_T"] = timer_T;
    doc["window_t"] = window_t;
    doc["purchase_mode"] = to_string(purchase_mode);
    doc["capacity_mode"] = to_string(capacity_mode);
    doc["budget_refresh"] = budget_refresh;
    doc["exhaustion_threshold"] = exhaustion_threshold;
    doc["need_mode"] = to_string(need_mode);
    doc["seed"] = seed;
    return doc.dump();
}

std::string ScenarioConfig::config_hash() const {
    const std::string canonical = to_json();
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

std::vector<std::optional<double>> generate_traffic(Rng& rng, const ScenarioConfig& config) {
    std::vector<std::optional<double>> arrivals(config.n_ues);
    for (int i = 0; i < config.n_ues; ++i) {
        if (rng.next_double() < config.file_probability) {
            double length = rng.normal(config.file_length_mean, config.file_length_std);
            while (!(length > 0.0)) {
                length = rng.normal(config.file_length_mean, config.file_length_std);
            }
            arrivals[i] = length;
        }
    }
    return arrivals;
}

std::optional<MarketOutcome> clear_epoch_market(const EpochMarketInputs& inputs,
                                                const ScenarioConfig& config) {
    const std::size_t n = inputs.buyer_ids.size();
    if (inputs.wealths.size() != n || inputs.needs.size() != n) {
        throw std::invalid_argument("clear_epoch_market: buyer vector size mismatch");
    }
    if (n == 0) return std::nullopt;

    std::vector<double> bids(n);
    for (std::size_t i = 0; i < n; ++i) bids[i] = inputs.wealths[i] * inputs.needs[i];

    const auto price = equilibrium_price(bids, inputs.conservations);
    if (!price) return std::nullopt;

    std::vector<BuyerRequest> buyers(n);
    for (std::size_t i = 0; i < n; ++i) {
        buyers[i] = BuyerRequest{inputs.buyer_ids[i], inputs.wealths[i], inputs.needs[i]};
    }
    BidTable table = build_bid_table(buyers, *price);

    std::vector<Assignment> assignments;
    if (config.capacity_mode == CapacityMode::aggregate_cap) {
        std::map<int, double> capacities;
        for (int id : inputs.order.permutation) capacities[id] = config.bs_capacity;
        assignments = serve_bid_table(std::move(table), inputs.order, capacities);
    } else {
        // per_ue_reuse: every BS can offer its full capacity to each UE
        for (const auto& entry : table.entries) {
            double remaining = entry.remaining_demand;
            for (int bs : inputs.order.permutation) {
                if (remaining <= 0.0) break;
                const double amount = std::min(remaining, config.bs_capacity);
                assignments.push_back(Assignment{entry.ue_id, bs, amount});
                remaining -= amount;
            }
        }
    }
    return make_outcome(*price, std::move(assignments));
}

Simulator::Simulator(const ScenarioConfig& config, RunMode mode)
    : cfg_(config), mode_(mode),
      traffic_(config.seed, kTrafficStream),
      needs_(config.seed, kNeedsStream),
      conservations_(config.seed, kConservationsStream),
      order_(config.seed, kOrderStream) {
    cfg_.validate();
    ues_.resize(cfg_.n_ues);
    for (int i = 0; i < cfg_.n_ues; ++i) {
        ues_[i].id = i;
        ues_[i].wealth = cfg_.initial_budget;
        ues_[i].default_bandwidth = cfg_.default_bandwidth;
    }
    bss_.resize(cfg_.n_bs);
    bs_ids_.resize(cfg_.n_bs);
    for (int j = 0; j < cfg_.n_bs; ++j) {
        bss_[j].id = j;
        bss_[j].capacity = cfg_.bs_capacity;
        bs_ids_[j] = j;
    }
}

EpochReport Simulator::run_epoch() {
    EpochReport report;
    report.epoch = epoch_;
    report.ues.resize(cfg_.n_ues);
    report.bss.resize(cfg_.n_bs);

    if (cfg_.budget_refresh > 0 && epoch_ > 0 && epoch_ % cfg_.budget_refresh == 0) {
        for (auto& ue : ues_) ue.wealth = cfg_.initial_budget;
    }

    const auto arrivals = generate_traffic(traffic_, cfg_);
    for (int i = 0; i < cfg_.n_ues; ++i) {
        if (arrivals[i]) ues_[i].file_backlog += *arrivals[i];
    }

    std::vector<bool> bought(cfg_.n_ues, false);
    std::vector<double> purchased(cfg_.n_ues, 0.0);
    for (auto& bs : bss_) bs.sold_this_epoch = 0.0;

    if (mode_ == RunMode::market) {
        EpochMarketInputs inputs;
        for (auto& ue : ues_) {
            if (!(ue.file_backlog > 0.0) || ue.wealth < cfg_.exhaustion_threshold) continue;
            if (cfg_.need_mode == NeedMode::uniform) {
                ue.need = needs_.uniform_open01();
            } else {
                // deterioration drawn on (0, tau_max); only a worsening past
                // theta pulls the UE into the market
                ue.deterioration = needs_.uniform_open01() * cfg_.tau_max;
                if (!market_trigger(ue.deterioration, cfg_.theta)) continue;
                ue.need = need_from_deterioration(ue.deterioration, cfg_.tau_max);
            }
            inputs.buyer_ids.push_back(ue.id);
            inputs.wealths.push_back(ue.wealth);
            inputs.needs.push_back(ue.need);
        }

        if (!inputs.buyer_ids.empty()) {
            inputs.conservations.resize(cfg_.n_bs);
            for (int j = 0; j < cfg_.n_bs; ++j) {
                bss_[j].conservation = conservations_.uniform_open01();
                inputs.conservations[j] = bss_[j].conservation;
            }
            inputs.order = draw_bs_order(bs_ids_, order_);

            const auto outcome = clear_epoch_market(inputs, cfg_);
            if (outcome) {
                report.price = outcome->price;
                for (std::size_t i = 0; i < inputs.buyer_ids.size(); ++i) {
                    report.total_bid += inputs.wealths[i] * inputs.needs[i];
                }
                for (const auto& [ue_id, amount] : outcome->purchases) {
                    bought[ue_id] = true;
                    purchased[ue_id] = amount;
                    const double spend = outcome->price * amount;
                    ues_[ue_id].wealth = std::max(0.0, ues_[ue_id].wealth - spend);
                    report.ues[ue_id].purchased = amount;
                    report.ues[ue_id].spend = spend;
                    report.total_spend += spend;
                }
                // UEs whose bid entered the table but got nothing still count
                // as buyers for this epoch
                for (std::size_t i = 0; i < inputs.buyer_ids.size(); ++i) {
                    if (inputs.wealths[i] * inputs.needs[i] > 0.0) {
                        bought[inputs.buyer_ids[i]] = true;
                    }
                }
                for (const auto& [bs_id, amount] : outcome->sales) {
                    const auto seller = seller_profit(amount, inputs.conservations[bs_id],
                                                      outcome->price);
                    bss_[bs_id].sold_this_epoch = amount;
                    report.bss[bs_id].sold = amount;
                    report.bss[bs_id].profit = seller.profit;
                    report.total_sold += amount;
                }
            }
        }
    }

    for (int i = 0; i < cfg_.n_ues; ++i) {
        double bandwidth = cfg_.default_bandwidth;
        if (mode_ == RunMode::market && bought[i]) {
            bandwidth = cfg_.purchase_mode == PurchaseMode::exclusive
                            ? purchased[i]
                            : cfg_.default_bandwidth + purchased[i];
        }
        const double data = std::min(ues_[i].file_backlog, bandwidth);
        ues_[i].file_backlog -= data;
        report.ues[i].data = data;
        report.ues[i].budget_after = ues_[i].wealth;
        report.total_data += data;
    }

    ++epoch_;
    history_.push_back(report);
    return report;
}

SimulationReport Simulator::run() {
    while (epoch_ < cfg_.epochs) run_epoch();

    SimulationReport report;
    report.config = cfg_;
    report.mode = mode_;
    report.epochs = history_;
    for (const auto& ep : history_) report.cumulative_data += ep.total_data;
    report.saturated_reference =
        static_cast<double>(cfg_.n_ues) * cfg_.default_bandwidth * cfg_.epochs;
    for (const auto& ue : ues_) report.final_budgets.push_back(ue.wealth);
    return report;
}

SimulationReport run_simulation(const ScenarioConfig& config) {
    return Simulator(config, RunMode::market).run();
}

SimulationReport run_baseline(const ScenarioConfig& config) {
    return Simulator(config, RunMode::baseline).run();
}

std::string SimulationReport::to_csv() const {
    std::string out;
    out += "# seed=" + std::to_string(config.seed) + "\n";
    out += "# config_hash=" + config.config_hash() + "\n";
    out += std::string("# version=") + kVersion + "\n";
    out += std::string("# mode=") + to_string(mode) + "\n";
    out += "epoch,price,total_bid,total_sold,total_data";
    for (int i = 0; i < config.n_ues; ++i) out += ",budget_ue" + std::to_string(i);
    out += '\n';
    for (const auto& ep : epochs) {
        out += std::to_string(ep.epoch);
        out += ',';
        if (ep.price) out += format_double(*ep.price);
        out += ',';
        out += format_double(ep.total_bid);
        out += ',';
        out += format_double(ep.total_sold);
        out += ',';
        out += format_double(ep.total_data);
        for (const auto& ue : ep.ues) {
            out += ',';
            out += format_double(ue.budget_after);
        }
        out += '\n';
    }
    return out;
}

std::string SimulationReport::summary_json() const {
    nlohmann::json doc;
    doc["version"] = kVersion;
    doc["seed"] = config.seed;
    doc["config_hash"] = config.config_hash();
    doc["mode"] = to_string(mode);
    doc["epochs_run"] = epochs.size();
    doc["cumulative_data"] = cumulative_data;
    doc["saturated_reference"] = saturated_reference;
    doc["final_budgets"] = final_budgets;
    double total_spend = 0.0, total_sold = 0.0;
    long markets_held = 0;
    for (const auto& ep : epochs) {
        total_spend += ep.total_spend;
        total_sold += ep.total_sold;
        if (ep.price) ++markets_held;
    }
    doc["total_spend"] = total_spend;
    doc["total_sold"] = total_sold;
    doc["markets_held"] = markets_held;
    doc["config"] = nlohmann::json::parse(config.to_json());
    return doc.dump(2) + "\n";
}

} // namespace bwmarket
