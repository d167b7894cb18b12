#include "bwmarket/allocation_engine.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace bwmarket {

BsOrder draw_bs_order(std::span<const int> bs_ids, Rng& rng) {
    if (bs_ids.empty()) {
        throw std::domain_error("draw_bs_order: empty id list");
    }
    std::unordered_set<int> seen(bs_ids.begin(), bs_ids.end());
    if (seen.size() != bs_ids.size()) {
        throw std::domain_error("draw_bs_order: duplicate ids");
    }
    BsOrder order;
    order.permutation.assign(bs_ids.begin(), bs_ids.end());
    rng.shuffle(order.permutation);
    return order;
}

BidTable build_bid_table(std::span<const BuyerRequest> buyers, double price) {
    if (!(price > 0.0)) {
        throw std::domain_error("build_bid_table: price must be positive");
    }
    BidTable table;
    for (const auto& buyer : buyers) {
        const double bid = buyer.wealth * buyer.need;
        if (bid <= 0.0) continue;
        // a buyer cannot spend beyond its wealth
        const double spend = std::min(bid, buyer.wealth);
        const double demand = spend / price;
        table.entries.push_back(BidEntry{buyer.ue_id, bid, demand, demand});
    }
    std::sort(table.entries.begin(), table.entries.end(),
              [](const BidEntry& a, const BidEntry& b) {
                  if (a.bid != b.bid) return a.bid > b.bid;
                  return a.ue_id < b.ue_id;
              });
    return table;
}

std::vector<Assignment> serve_bid_table(BidTable table, const BsOrder& order,
                                        const std::map<int, double>& capacities) {
    std::vector<double> residual(order.permutation.size());
    for (std::size_t j = 0; j < order.permutation.size(); ++j) {
        const auto it = capacities.find(order.permutation[j]);
        if (it == capacities.end() || !(it->second > 0.0)) {
            throw std::domain_error("serve_bid_table: every BS in order needs positive capacity");
        }
        residual[j] = it->second;
    }

    std::vector<Assignment> assignments;
    std::size_t cursor = 0; // never rewinds: the single-pass guarantee
    for (auto& entry : table.entries) {
        while (entry.remaining_demand > 0.0 && cursor < residual.size()) {
            const double amount = std::min(entry.remaining_demand, residual[cursor]);
            assignments.push_back(Assignment{entry.ue_id, order.permutation[cursor], amount});
            entry.remaining_demand -= amount;
            residual[cursor] -= amount;
            if (residual[cursor] <= 0.0) ++cursor;
        }
        if (cursor >= residual.size()) break; // cluster capacity exhausted
    }
    return assignments;
}

} // namespace bwmarket
