#include "bwmarket/market_core.hpp"

#include <cmath>
#include <stdexcept>

namespace bwmarket {

double need_from_deterioration(double tau, double tau_max) {
    if (!(tau > 0.0) || !(tau <= tau_max)) {
        throw std::domain_error("need_from_deterioration: requires 0 < tau <= tau_max");
    }
    return std::pow(10.0, (tau - tau_max) / 10.0);
}

bool market_trigger(double tau, double theta) {
    return tau > theta;
}

double buyer_utility(double bandwidth, double need, double wealth, double price) {
    if (!(wealth > 0.0)) {
        throw std::domain_error("buyer_utility: wealth must be positive");
    }
    if (!(price > 0.0) || bandwidth < 0.0) {
        throw std::domain_error("buyer_utility: requires price > 0 and bandwidth >= 0");
    }
    return need * bandwidth - price * bandwidth * bandwidth / (2.0 * wealth);
}

double optimal_purchase(double wealth, double need, double price) {
    if (!(price > 0.0)) {
        throw std::domain_error("optimal_purchase: price must be positive");
    }
    if (wealth < 0.0 || !(need > 0.0) || !(need <= 1.0)) {
        throw std::domain_error("optimal_purchase: requires wealth >= 0 and need in (0, 1]");
    }
    return wealth * need / price;
}

SellerResult seller_profit(double supplied, double conservation, double price) {
    if (!(conservation > 0.0)) {
        throw std::domain_error("seller_profit: conservation must be positive");
    }
    if (!(price > 0.0) || supplied < 0.0) {
        throw std::domain_error("seller_profit: requires price > 0 and supplied >= 0");
    }
    const double cost = supplied * supplied / (2.0 * conservation);
    return SellerResult{cost, price * supplied - cost};
}

double optimal_supply(double conservation, double price) {
    return conservation * price;
}

std::optional<double> equilibrium_price(std::span<const double> bids,
                                        std::span<const double> conservations) {
    if (conservations.empty()) {
        throw std::domain_error("equilibrium_price: no sellers");
    }
    double total_conservation = 0.0;
    for (double a : conservations) {
        if (!(a > 0.0)) {
            throw std::domain_error("equilibrium_price: conservation values must be positive");
        }
        total_conservation += a;
    }
    double total_bids = 0.0;
    for (double bid : bids) {
        if (bid < 0.0) {
            throw std::domain_error("equilibrium_price: bids must be nonnegative");
        }
        total_bids += bid;
    }
    if (total_bids == 0.0) {
        return std::nullopt; // no market is held
    }
    return std::sqrt(total_bids / total_conservation);
}

double data_price_equivalent(double price, double spectral_efficiency) {
    if (!(spectral_efficiency > 0.0)) {
        throw std::domain_error("data_price_equivalent: spectral efficiency must be positive");
    }
    return price / spectral_efficiency;
}

MarketOutcome make_outcome(double price, std::vector<Assignment> assignments) {
    MarketOutcome out;
    out.price = price;
    for (const auto& a : assignments) {
        out.purchases[a.ue_id] += a.amount;
        out.sales[a.bs_id] += a.amount;
    }
    out.assignments = std::move(assignments);
    return out;
}

} // namespace bwmarket
