#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bwmarket/comp_simulator.hpp"

namespace bwmarket {

// Budget sweep dataset: one market run plus one
// paired baseline run (identical traffic) per (budget, epochs, seed) cell.
struct Figure1Params {
    ScenarioConfig base;
    std::vector<double> budgets;
    std::vector<int> epoch_counts;
    std::vector<std::uint64_t> seeds;
    int jobs = 1;
};

struct Figure1Cell {
    double budget = 0.0;
    int epochs = 0;
    std::uint64_t seed = 0;
    double market_total = 0.0;
    double baseline_total = 0.0;
    double saturated_reference = 0.0;
    std::vector<double> final_budgets; // market run
};

struct Figure1Medians {
    double budget = 0.0;
    int epochs = 0;
    std::size_t n_seeds = 0;
    double market_median = 0.0;
    double baseline_median = 0.0;
    double saturated_reference = 0.0;
};

struct Figure1Dataset {
    ScenarioConfig base;
    std::vector<Figure1Cell> cells; // budget-major, then epochs, then seed
    std::vector<Figure1Medians> medians;

    std::string rows_csv() const;
    std::string medians_csv() const;
};

Figure1Dataset run_figure1(const Figure1Params& params);

} // namespace bwmarket
