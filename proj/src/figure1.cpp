#include "bwmarket/figure1.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

#include "bwmarket/format.hpp"
#include "bwmarket/version.hpp"

namespace bwmarket {

namespace {

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string csv_header(const ScenarioConfig& base) {
    std::string out;
    out += "# seed=" + std::to_string(base.seed) + "\n";
    out += "# config_hash=" + base.config_hash() + "\n";
    out += std::string("# version=") + kVersion + "\n";
    return out;
}

} // namespace

Figure1Dataset run_figure1(const Figure1Params& params) {
    if (params.budgets.empty() || params.epoch_counts.empty() || params.seeds.empty()) {
        throw std::invalid_argument("run_figure1: budgets, epoch counts, and seeds must be non-empty");
    }
    params.base.validate();

    Figure1Dataset dataset;
    dataset.base = params.base;
    for (double budget : params.budgets) {
        for (int epochs : params.epoch_counts) {
            for (std::uint64_t seed : params.seeds) {
                Figure1Cell cell;
                cell.budget = budget;
                cell.epochs = epochs;
                cell.seed = seed;
                dataset.cells.push_back(cell);
            }
        }
    }

    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= dataset.cells.size()) return;
            Figure1Cell& cell = dataset.cells[idx];
            ScenarioConfig cfg = params.base;
            cfg.initial_budget = cell.budget;
            cfg.epochs = cell.epochs;
            cfg.seed = cell.seed;
            const SimulationReport market = run_simulation(cfg);
            const SimulationReport baseline = run_baseline(cfg);
            cell.market_total = market.cumulative_data;
            cell.baseline_total = baseline.cumulative_data;
            cell.saturated_reference = market.saturated_reference;
            cell.final_budgets = market.final_budgets;
        }
    };

    const int jobs = std::max(1, params.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (double budget : params.budgets) {
        for (int epochs : params.epoch_counts) {
            std::vector<double> market_totals, baseline_totals;
            double saturated = 0.0;
            for (const auto& cell : dataset.cells) {
                if (cell.budget == budget && cell.epochs == epochs) {
                    market_totals.push_back(cell.market_total);
                    baseline_totals.push_back(cell.baseline_total);
                    saturated = cell.saturated_reference;
                }
            }
            dataset.medians.push_back(Figure1Medians{
                budget, epochs, market_totals.size(),
                median(std::move(market_totals)), median(std::move(baseline_totals)), saturated});
        }
    }
    return dataset;
}

std::string Figure1Dataset::rows_csv() const {
    std::string out = csv_header(base);
    out += "budget,epochs,seed,market_total,baseline_total,saturated_reference";
    for (int i = 0; i < base.n_ues; ++i) out += ",final_budget_ue" + std::to_string(i);
    out += '\n';
    for (const auto& cell : cells) {
        out += format_double(cell.budget);
        out += ',' + std::to_string(cell.epochs);
        out += ',' + std::to_string(cell.seed);
        out += ',';
        out += format_double(cell.market_total);
        out += ',';
        out += format_double(cell.baseline_total);
        out += ',';
        out += format_double(cell.saturated_reference);
        for (double b : cell.final_budgets) {
            out += ',';
            out += format_double(b);
        }
        out += '\n';
    }
    return out;
}

std::string Figure1Dataset::medians_csv() const {
    std::string out = csv_header(base);
    out += "budget,epochs,n_seeds,median_market_total,median_baseline_total,saturated_reference\n";
    for (const auto& m : medians) {
        out += format_double(m.budget);
        out += ',' + std::to_string(m.epochs);
        out += ',' + std::to_string(m.n_seeds);
        out += ',';
        out += format_double(m.market_median);
        out += ',';
        out += format_double(m.baseline_median);
        out += ',';
        out += format_double(m.saturated_reference);
        out += '\n';
    }
    return out;
}

} // namespace bwmarket
