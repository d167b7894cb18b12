#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "bwmarket/allocation_engine.hpp"

using namespace bwmarket;

namespace {

std::map<int, double> served_per_ue(const std::vector<Assignment>& assignments) {
    std::map<int, double> totals;
    for (const auto& a : assignments) totals[a.ue_id] += a.amount;
    return totals;
}

std::map<int, double> served_per_bs(const std::vector<Assignment>& assignments) {
    std::map<int, double> totals;
    for (const auto& a : assignments) totals[a.bs_id] += a.amount;
    return totals;
}

} // namespace

TEST_CASE("bs order: single id and determinism") {
    Rng rng(5);
    const std::vector<int> one{7};
    CHECK(draw_bs_order(one, rng).permutation == std::vector<int>{7});

    const std::vector<int> ids{1, 2, 3, 4};
    Rng a(99), b(99);
    CHECK(draw_bs_order(ids, a).permutation == draw_bs_order(ids, b).permutation);

    const std::vector<int> dup{1, 2, 2};
    CHECK_THROWS_AS(draw_bs_order(dup, rng), std::domain_error);
    CHECK_THROWS_AS(draw_bs_order({}, rng), std::domain_error);
}

TEST_CASE("bs order: permutations are uniform") {
    Rng rng(1234);
    const std::vector<int> ids{0, 1, 2};
    std::map<std::vector<int>, int> counts;
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
        counts[draw_bs_order(ids, rng).permutation]++;
    }
    CHECK(counts.size() == 6);
    for (const auto& [perm, count] : counts) {
        const double freq = static_cast<double>(count) / draws;
        CHECK(std::abs(freq - 1.0 / 6.0) < 0.01);
    }
}

TEST_CASE("bid table construction") {
    const std::vector<BuyerRequest> buyers{{1, 30.0, 1.0}, {2, 20.0, 1.0}};
    const BidTable table = build_bid_table(buyers, 1.0);
    REQUIRE(table.entries.size() == 2);
    CHECK(table.entries[0].ue_id == 1);
    CHECK(table.entries[0].bid == doctest::Approx(30.0));
    CHECK(table.entries[0].demand == doctest::Approx(30.0));
    CHECK(table.entries[1].ue_id == 2);
    CHECK(table.entries[1].bid == doctest::Approx(20.0));

    CHECK_THROWS_AS(build_bid_table(buyers, 0.0), std::domain_error);
}

TEST_CASE("bid table: ties broken by ascending ue id") {
    const std::vector<BuyerRequest> buyers{{7, 10.0, 0.5}, {3, 5.0, 1.0}};
    const BidTable table = build_bid_table(buyers, 2.0);
    REQUIRE(table.entries.size() == 2);
    CHECK(table.entries[0].ue_id == 3);
    CHECK(table.entries[1].ue_id == 7);
}

TEST_CASE("bid table: zero bids dropped, demand matches the market example") {
    const std::vector<BuyerRequest> buyers{{0, 0.0, 0.9}, {1, 500.0, 0.5}};
    const double price = 11.180339887498949; // sqrt(125)
    const BidTable table = build_bid_table(buyers, price);
    REQUIRE(table.entries.size() == 1);
    CHECK(table.entries[0].ue_id == 1);
    CHECK(table.entries[0].bid == doctest::Approx(250.0));
    CHECK(table.entries[0].demand == doctest::Approx(22.360679774997894).epsilon(1e-12));
}

TEST_CASE("serving: split across stations") {
    BidTable table;
    table.entries = {{1, 30.0, 30.0, 30.0}, {2, 20.0, 20.0, 20.0}};
    const BsOrder order{{1, 2}};
    const std::map<int, double> caps{{1, 25.0}, {2, 25.0}};
    const auto assignments = serve_bid_table(table, order, caps);

    REQUIRE(assignments.size() == 3);
    CHECK(assignments[0].ue_id == 1);
    CHECK(assignments[0].bs_id == 1);
    CHECK(assignments[0].amount == doctest::Approx(25.0));
    CHECK(assignments[1].ue_id == 1);
    CHECK(assignments[1].bs_id == 2);
    CHECK(assignments[1].amount == doctest::Approx(5.0));
    CHECK(assignments[2].ue_id == 2);
    CHECK(assignments[2].bs_id == 2);
    CHECK(assignments[2].amount == doctest::Approx(20.0));
}

TEST_CASE("serving: request smaller than the first station") {
    BidTable table;
    table.entries = {{1, 10.0, 10.0, 10.0}};
    const BsOrder order{{1, 2}};
    const std::map<int, double> caps{{1, 25.0}, {2, 25.0}};
    const auto assignments = serve_bid_table(table, order, caps);
    REQUIRE(assignments.size() == 1);
    CHECK(assignments[0].bs_id == 1);
    CHECK(assignments[0].amount == doctest::Approx(10.0));
}

TEST_CASE("serving: cluster capacity exhausted mid-table") {
    BidTable table;
    table.entries = {{1, 60.0, 60.0, 60.0}, {2, 50.0, 50.0, 50.0}};
    const BsOrder order{{1, 2}};
    const std::map<int, double> caps{{1, 25.0}, {2, 25.0}};
    const auto assignments = serve_bid_table(table, order, caps);

    const auto by_ue = served_per_ue(assignments);
    CHECK(by_ue.at(1) == doctest::Approx(50.0));
    CHECK(by_ue.count(2) == 0);
}

TEST_CASE("serving: missing or nonpositive capacity rejected") {
    BidTable table;
    table.entries = {{1, 1.0, 1.0, 1.0}};
    const BsOrder order{{1, 2}};
    const std::map<int, double> missing{{1, 25.0}};
    CHECK_THROWS_AS(serve_bid_table(table, order, missing), std::domain_error);
    const std::map<int, double> zero{{1, 25.0}, {2, 0.0}};
    CHECK_THROWS_AS(serve_bid_table(table, order, zero), std::domain_error);
}

TEST_CASE("serving properties on random dyadic instances") {
    Rng rng(31337);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n_ues = 1 + rng.below(15);
        const std::size_t n_bs = 1 + rng.below(6);

        // demands and capacities on a 1/1024 grid keep every partial sum exact
        BidTable table;
        for (std::size_t i = 0; i < n_ues; ++i) {
            const double demand = static_cast<double>(1 + rng.below(64 * 1024)) / 1024.0;
            const double bid = static_cast<double>(n_ues - i); // strictly descending
            table.entries.push_back(BidEntry{static_cast<int>(i), bid, demand, demand});
        }
        std::vector<int> ids(n_bs);
        std::map<int, double> caps;
        for (std::size_t j = 0; j < n_bs; ++j) {
            ids[j] = static_cast<int>(j);
            caps[ids[j]] = static_cast<double>(1 + rng.below(64 * 1024)) / 1024.0;
        }
        const BsOrder order = draw_bs_order(ids, rng);

        const auto assignments = serve_bid_table(table, order, caps);
        const auto repeat = serve_bid_table(table, order, caps);

        // determinism
        REQUIRE(assignments.size() == repeat.size());
        for (std::size_t k = 0; k < assignments.size(); ++k) {
            CHECK(assignments[k].ue_id == repeat[k].ue_id);
            CHECK(assignments[k].bs_id == repeat[k].bs_id);
            CHECK(assignments[k].amount == repeat[k].amount);
        }

        // single pass: each triple completes a UE or exhausts a BS
        CHECK(assignments.size() <= n_ues + n_bs);

        double total_demand = 0.0, total_capacity = 0.0, total_assigned = 0.0;
        for (const auto& e : table.entries) total_demand += e.demand;
        for (const auto& [id, c] : caps) total_capacity += c;
        for (const auto& a : assignments) {
            CHECK(a.amount > 0.0);
            total_assigned += a.amount;
        }
        CHECK(std::abs(total_assigned - std::min(total_demand, total_capacity)) <= 1e-12);

        // no BS oversold
        for (const auto& [bs, sold] : served_per_bs(assignments)) {
            CHECK(sold <= caps.at(bs) + 1e-12);
        }

        // fully served UEs form a prefix of the bid order
        const auto by_ue = served_per_ue(assignments);
        bool saw_partial = false;
        for (const auto& e : table.entries) {
            const auto it = by_ue.find(e.ue_id);
            const double got = it == by_ue.end() ? 0.0 : it->second;
            CHECK(got <= e.demand + 1e-12);
            if (saw_partial) {
                CHECK(got == 0.0);
            } else if (got != e.demand) {
                saw_partial = true;
            }
        }
    }
}
