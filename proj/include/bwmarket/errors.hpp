#pragma once

#include <stdexcept>
#include <string>

namespace bwmarket {

// Iterative solver failed: overflow, lost bracket, or a penalty driven to zero.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// The equilibrium system has no strictly positive allocation.
class infeasible_ne_error : public numeric_error {
public:
    explicit infeasible_ne_error(const std::string& what) : numeric_error(what) {}
};

} // namespace bwmarket
