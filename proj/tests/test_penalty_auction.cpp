#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bwmarket/errors.hpp"
#include "bwmarket/penalty_auction.hpp"
#include "bwmarket/rng.hpp"

using namespace bwmarket;

TEST_CASE("shannon spectral efficiency") {
    CHECK(shannon_spectral_efficiency(0.0, 5.0, 1.0) == 0.0);
    CHECK(shannon_spectral_efficiency(1.0, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(shannon_spectral_efficiency(7.0, 1.0, 1.0) == doctest::Approx(3.0));
    CHECK_THROWS_AS(shannon_spectral_efficiency(1.0, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(shannon_spectral_efficiency(-1.0, 1.0, 1.0), std::domain_error);
}

TEST_CASE("log valuation and derivative") {
    CHECK(log_valuation(0.0, 2.0) == 0.0);
    CHECK(log_valuation(std::exp(1.0) - 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(log_valuation(-0.1, 1.0), std::domain_error);
    CHECK_THROWS_AS(log_valuation(1.0, 0.0), std::domain_error);

    // central finite differences
    Rng rng(3);
    const double h = 1e-6;
    for (int trial = 0; trial < 200; ++trial) {
        const double r = rng.uniform_open01() * 10.0 + h;
        const double se = rng.uniform_open01() * 4.0 + 0.1;
        const double numeric = (log_valuation(r + h, se) - log_valuation(r - h, se)) / (2.0 * h);
        const double analytic = log_valuation_derivative(r, se);
        CHECK(std::abs(numeric - analytic) <= 1e-6 * std::abs(analytic));
    }
}

TEST_CASE("proportional share") {
    {
        const std::vector<double> bids(4, 3.0);
        const auto r = proportional_share(bids, 100.0);
        for (double v : r) CHECK(v == doctest::Approx(25.0));
    }
    {
        const std::vector<double> bids{3.0, 1.0};
        const auto r = proportional_share(bids, 8.0);
        CHECK(r[0] == doctest::Approx(6.0));
        CHECK(r[1] == doctest::Approx(2.0));
    }
    {
        // scale invariance
        Rng rng(5);
        std::vector<double> bids(6), scaled(6);
        for (std::size_t i = 0; i < bids.size(); ++i) {
            bids[i] = rng.uniform_open01() * 10.0;
            scaled[i] = 7.0 * bids[i];
        }
        const auto a = proportional_share(bids, 42.0);
        const auto b = proportional_share(scaled, 42.0);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
        }
    }
    const std::vector<double> zeros{0.0, 0.0};
    CHECK_THROWS_AS(proportional_share(zeros, 1.0), std::domain_error);
}

TEST_CASE("ne allocation: two symmetric users") {
    const std::vector<double> q{0.5, 0.5};
    const std::vector<double> se{1.0, 1.0};
    const auto ne = solve_ne_allocation(q, se, 1.0);
    CHECK(std::abs(ne.x_total - 2.0 / 3.0) <= 1e-10);
    CHECK(std::abs(ne.allocation[0] - 0.5) <= 1e-10);
    CHECK(std::abs(ne.allocation[1] - 0.5) <= 1e-10);
}

TEST_CASE("ne allocation: symmetry for any n") {
    for (std::size_t n : {2, 3, 5, 8}) {
        const std::vector<double> q(n, 0.3);
        const std::vector<double> se(n, 2.0);
        const double total = 12.0;
        const auto ne = solve_ne_allocation(q, se, total);
        for (double r : ne.allocation) {
            CHECK(r == doctest::Approx(total / static_cast<double>(n)).epsilon(1e-10));
        }
    }
}

TEST_CASE("ne allocation: equal ratios and conservation on random instances") {
    Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.below(5);
        std::vector<double> q(n), se(n);
        for (std::size_t i = 0; i < n; ++i) {
            q[i] = rng.uniform_open01() + 0.05;
            se[i] = 0.5 + rng.uniform_open01() * 3.5;
        }
        const double total = 10.0;
        NeAllocation ne;
        try {
            ne = solve_ne_allocation(q, se, total);
        } catch (const infeasible_ne_error&) {
            continue; // extreme penalty spreads: nothing to check
        }

        double sum = 0.0;
        for (double r : ne.allocation) sum += r;
        CHECK(std::abs(sum - total) <= 1e-9 * total);

        // the defining ratio (R - r_i) v'(r_i) / q_i is a constant
        double first = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ratio =
                (total - ne.allocation[i]) * log_valuation_derivative(ne.allocation[i], se[i]) / q[i];
            if (i == 0) first = ratio;
            else CHECK(std::abs(ratio - first) <= 1e-9 * std::abs(first));
        }
    }
}

TEST_CASE("ne allocation: infeasible equilibrium surfaces as an error") {
    const std::vector<double> q{0.9, 0.05, 0.05};
    const std::vector<double> se{0.01, 5.0, 5.0};
    CHECK_THROWS_AS(solve_ne_allocation(q, se, 1.0), infeasible_ne_error);
}

TEST_CASE("ne allocation: input validation") {
    const std::vector<double> one{1.0};
    const std::vector<double> se1{1.0};
    CHECK_THROWS_AS(solve_ne_allocation(one, se1, 1.0), std::domain_error);
    const std::vector<double> q{1.0, 0.0};
    const std::vector<double> se{1.0, 1.0};
    CHECK_THROWS_AS(solve_ne_allocation(q, se, 1.0), std::domain_error);
    const std::vector<double> good{1.0, 1.0};
    CHECK_THROWS_AS(solve_ne_allocation(good, se, 0.0), std::domain_error);
}

TEST_CASE("water filling oracle") {
    {
        const std::vector<double> se(4, 2.0);
        for (double r : water_filling_oracle(se, 8.0)) CHECK(r == doctest::Approx(2.0));
    }
    {
        const std::vector<double> se{1.0, 4.0};
        const auto r = water_filling_oracle(se, 1.0);
        CHECK(r[0] == doctest::Approx(0.125).epsilon(1e-12));
        CHECK(r[1] == doctest::Approx(0.875).epsilon(1e-12));
    }
    {
        // weak user shut off: the level 0.6 sits below 1/se2 = 100
        const std::vector<double> se{10.0, 0.01};
        const auto r = water_filling_oracle(se, 0.5);
        CHECK(r[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(r[1] == 0.0);
    }
}

TEST_CASE("water filling satisfies the KKT conditions") {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.below(6);
        std::vector<double> se(n);
        for (auto& s : se) s = 0.01 + rng.uniform_open01() * 10.0;
        const double total = 0.1 + rng.uniform_open01() * 20.0;
        const auto r = water_filling_oracle(se, total);

        double sum = 0.0;
        double common = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(r[i] >= 0.0);
            sum += r[i];
            if (r[i] > 0.0) {
                const double v = log_valuation_derivative(r[i], se[i]);
                if (common < 0.0) common = v;
                else CHECK(std::abs(v - common) <= 1e-9 * common);
            }
        }
        CHECK(sum == doctest::Approx(total).epsilon(1e-12));
        for (std::size_t i = 0; i < n; ++i) {
            if (r[i] == 0.0) {
                CHECK(log_valuation_derivative(0.0, se[i]) <= common + 1e-9);
            }
        }
    }
}

TEST_CASE("penalty iteration: symmetric instance stays symmetric") {
    PenaltyAuctionInstance inst;
    inst.total_bandwidth = 6.0;
    inst.spectral_efficiency = {2.0, 2.0, 2.0};
    const auto result = penalty_iteration(inst);
    CHECK(result.converged);
    for (double r : result.allocation) CHECK(r == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("penalty iteration: hand-solved two-user instance") {
    PenaltyAuctionInstance inst;
    inst.total_bandwidth = 1.0;
    inst.spectral_efficiency = {1.0, 4.0};
    const auto result = penalty_iteration(inst);
    CHECK(result.converged);
    CHECK(std::abs(result.allocation[0] - 0.125) <= 1e-3);
    CHECK(std::abs(result.allocation[1] - 0.875) <= 1e-3);
}

TEST_CASE("penalty iteration: fixed point satisfies the indirect expression") {
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng.below(4);
        PenaltyAuctionInstance inst;
        inst.total_bandwidth = 10.0;
        inst.spectral_efficiency.resize(n);
        for (auto& s : inst.spectral_efficiency) s = 0.5 + rng.uniform_open01() * 3.5;

        const auto result = penalty_iteration(inst);
        REQUIRE(result.converged);

        double penalty_sum = 0.0;
        for (double q : result.penalties) penalty_sum += q;
        for (std::size_t i = 0; i < n; ++i) {
            const double indirect = inst.total_bandwidth *
                (1.0 - static_cast<double>(n - 1) * result.penalties[i] / penalty_sum);
            CHECK(std::abs(result.allocation[i] - indirect) <= 10.0 * inst.tolerance);
        }

        // the converged allocation is the welfare optimum
        const auto optimum = water_filling_oracle(inst.spectral_efficiency, inst.total_bandwidth);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(result.allocation[i] - optimum[i]) <= 1e-3 * inst.total_bandwidth);
        }

        // proportional share of the equilibrium bids reproduces the allocation
        const auto shares = proportional_share(result.bids, inst.total_bandwidth);
        const double welfare_ne = social_welfare(result.allocation, inst.spectral_efficiency);
        const double welfare_ps = social_welfare(shares, inst.spectral_efficiency);
        CHECK(welfare_ne >= welfare_ps - 1e-12 * std::abs(welfare_ps));
    }
}

TEST_CASE("penalty iteration: non-convergence is a status, not a crash") {
    PenaltyAuctionInstance inst;
    inst.total_bandwidth = 1.0;
    inst.spectral_efficiency = {1.0, 4.0};
    inst.max_iterations = 3;
    const auto result = penalty_iteration(inst);
    CHECK_FALSE(result.converged);
    CHECK(result.iterations == 3);
    CHECK(result.allocation.size() == 2);
}

TEST_CASE("penalty iteration: trace records iterations") {
    PenaltyAuctionInstance inst;
    inst.total_bandwidth = 1.0;
    inst.spectral_efficiency = {1.0, 4.0};
    const auto result = penalty_iteration(inst, 100);
    REQUIRE(!result.trace.empty());
    CHECK(result.trace.front().iteration == 0);
    CHECK(result.trace.back().iteration == result.iterations);
    const std::string csv = penalty_trace_csv(result);
    CHECK(csv.rfind("iter,q1,q2,r1,r2,X,welfare\n", 0) == 0);
}

TEST_CASE("instance json parsing") {
    const auto inst = PenaltyAuctionInstance::from_json(
        R"({"R": 10.0, "se": [1.0, 2.0], "q0": [0.4, 0.6], "delta": 0.02, "tol": 1e-9, "max_iters": 500})");
    CHECK(inst.total_bandwidth == 10.0);
    CHECK(inst.spectral_efficiency.size() == 2);
    CHECK(inst.initial_penalties[1] == 0.6);
    CHECK(inst.step_size == 0.02);
    CHECK(inst.tolerance == 1e-9);
    CHECK(inst.max_iterations == 500);

    CHECK_THROWS_AS(PenaltyAuctionInstance::from_json("not json"), std::invalid_argument);
    CHECK_THROWS_AS(PenaltyAuctionInstance::from_json(R"({"R": 1.0})"), std::invalid_argument);
    CHECK_THROWS_AS(PenaltyAuctionInstance::from_json(R"({"R": 1.0, "se": [1, 2], "bogus": 3})"),
                    std::invalid_argument);
}
