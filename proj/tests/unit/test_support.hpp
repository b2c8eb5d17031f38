// SPDX-License-Identifier: Apache-2.0
/**
 * @file test_support.hpp
 * @brief Panel builders shared by the unit tests
 */

#pragma once

#include "hjm2f/simulator.hpp"

#include <cmath>
#include <vector>

namespace hjm2f::test {

/// Builds a panel from per-row increments, starting every row at `x0`.
inline PricePanel panel_from_increments(const MaturityGrid& grid,
                                        const std::vector<std::vector<double>>& dx,
                                        double x0 = 3.0) {
    std::vector<double> v;
    for (const auto& row : dx) {
        double x = x0;
        v.push_back(x);
        for (double d : row) v.push_back(x += d);
    }
    return {grid, std::move(v)};
}

/// Noiseless two-row panel under constant (sigma^2, sigma_bar^2): every squared
/// increment equals the exact integral of the spot density over its cell.
inline PricePanel noiseless_panel(const MaturityGrid& grid, double theta, double s2, double b2) {
    const double delta = grid.delta();
    std::vector<std::vector<double>> dx(2);
    for (std::size_t j = 0; j < 2; ++j) {
        const double Tj = grid.maturity(j);
        for (std::size_t m = 0; m < grid.n_obs(); ++m) {
            const double a = delta * static_cast<double>(m);
            const double b = a + delta;
            const double ex = (std::exp(-2 * theta * (Tj - b)) - std::exp(-2 * theta * (Tj - a))) /
                              (2 * theta);
            dx[j].push_back(std::sqrt(s2 * ex + b2 * delta));
        }
    }
    return panel_from_increments(grid, dx);
}

} // namespace hjm2f::test
