#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

namespace bwmarket {

// A buyer on the bandwidth market.
struct UeAgent {
    int id = 0;
    double wealth = 0.0;              // virtual-currency budget, >= 0
    double need = 1.0;                // urgency in (0, 1]
    double deterioration = 0.0;       // channel worsening, dB
    double spectral_efficiency = 1.0; // bits/s/Hz, > 0
    double default_bandwidth = 0.0;
    double file_backlog = 0.0;        // pending file length, bandwidth*epoch units
};

// A seller on the bandwidth market.
struct BsAgent {
    int id = 0;
    double capacity = 0.0;       // bandwidth units, > 0
    double conservation = 1.0;   // reluctance to sell, > 0
    double sold_this_epoch = 0.0;
};

struct Assignment {
    int ue_id = 0;
    int bs_id = 0;
    double amount = 0.0;
};

// Result of one cleared market: price, per-agent totals, and the
// (ue, bs, amount) triples the totals are aggregated from.
struct MarketOutcome {
    double price = 0.0;
    std::map<int, double> purchases; // UE id -> bandwidth bought
    std::map<int, double> sales;     // BS id -> bandwidth sold
    std::vector<Assignment> assignments;
};

// need = 10^((tau - tau_max)/10), the deterioration ratio in linear scale.
// Requires 0 < tau <= tau_max.
double need_from_deterioration(double tau, double tau_max);

// True when the channel worsened by strictly more than theta dB.
bool market_trigger(double tau, double theta);

// Buyer utility: need*B - price*B^2 / (2*wealth).
double buyer_utility(double bandwidth, double need, double wealth, double price);

// Utility-maximizing purchase wealth*need/price; the buyer spends exactly
// wealth*need.
double optimal_purchase(double wealth, double need, double price);

struct SellerResult {
    double cost = 0.0;
    double profit = 0.0;
};

// cost = B^2/(2a); profit = price*B - cost.
SellerResult seller_profit(double supplied, double conservation, double price);

// Profit-maximizing supply conservation*price.
double optimal_supply(double conservation, double price);

// Price equating total demand and total supply: sqrt(sum bids / sum a_j).
// Returns nullopt when no positive bid exists (no market is held).
std::optional<double> equilibrium_price(std::span<const double> bids,
                                        std::span<const double> conservations);

// Price per unit of data, price/spectral_efficiency. Satisfies
// data_price * (B * S) == price * B.
double data_price_equivalent(double price, double spectral_efficiency);

// Aggregates assignment triples into per-UE purchases and per-BS sales.
MarketOutcome make_outcome(double price, std::vector<Assignment> assignments);

} // namespace bwmarket
