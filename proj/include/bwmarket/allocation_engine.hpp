#pragma once

#include <map>
#include <span>
#include <vector>

#include "bwmarket/market_core.hpp"
#include "bwmarket/rng.hpp"

namespace bwmarket {

// One row of the shared bid table.
struct BidEntry {
    int ue_id = 0;
    double bid = 0.0;              // wealth * need
    double demand = 0.0;           // bid / price
    double remaining_demand = 0.0;
};

// Bid-descending queue of requests; ties broken by ascending UE id.
struct BidTable {
    std::vector<BidEntry> entries;
};

// The random order in which base stations serve requests this epoch.
struct BsOrder {
    std::vector<int> permutation;
};

struct BuyerRequest {
    int ue_id = 0;
    double wealth = 0.0;
    double need = 0.0;
};

// Uniformly random serving order. Deterministic for a given generator state;
// rejects duplicate ids.
BsOrder draw_bs_order(std::span<const int> bs_ids, Rng& rng);

// One entry per buyer with bid = wealth*need and demand = bid/price, sorted
// by bid descending (ties by ascending id). Zero bids are dropped. Demand is
// capped so a buyer never requests more than its wealth can pay for.
BidTable build_bid_table(std::span<const BuyerRequest> buyers, double price);

// Single greedy pass: highest bid first, drawing from the current BS in
// `order` until its residual capacity runs out, then the next BS picks up the
// remainder. Entries left when all capacity is gone receive nothing.
std::vector<Assignment> serve_bid_table(BidTable table, const BsOrder& order,
                                        const std::map<int, double>& capacities);

} // namespace bwmarket
