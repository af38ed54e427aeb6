#pragma once

// Sampling oracles for the POT tests: GPD via inverse CDF and exponential.

#include <cmath>
#include <vector>

#include "dtaad/rng.hpp"

namespace dtaad::testing {

/// Inverse CDF draw: x = beta*((1-u)^(-gamma) - 1)/gamma, exponential at gamma=0.
inline double gpd_sample(double gamma, double beta, dtaad::Rng& rng) {
    double u = rng.u01();
    if (u >= 1.0) u = 0.5;
    if (gamma == 0.0) return -beta * std::log(1.0 - u);
    return beta * (std::pow(1.0 - u, -gamma) - 1.0) / gamma;
}

inline std::vector<double> gpd_samples(double gamma, double beta, int n, std::uint64_t seed) {
    dtaad::Rng rng(seed);
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (auto& x : xs) x = gpd_sample(gamma, beta, rng);
    return xs;
}

}  // namespace dtaad::testing
