#pragma once

#include <string>
#include <variant>

namespace sld::uq {

struct Fixed {
    double value = 0.0;
};

struct Uniform {
    double lo = 0.0;
    double hi = 0.0;
};

struct Normal {
    double mean = 0.0;
    double std = 0.0;
};

/// Marginal distribution of one uncertain scalar input.
using Distribution = std::variant<Fixed, Uniform, Normal>;

/// Central value: the fixed value, the interval midpoint, or the mean.
double central_value(const Distribution& d);

/// True when the distribution can only produce its central value.
bool is_degenerate(const Distribution& d);

/// Throws invalid-input when lo >= hi or std < 0 (or non-finite parameters).
void validate(const Distribution& d, const std::string& name);

/// Uniform on nominal*(1 -/+ rel).
Distribution relative_uniform(double nominal, double rel);

std::string describe(const Distribution& d);

}  // namespace sld::uq
