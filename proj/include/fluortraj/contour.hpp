#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace fluortraj {

// Samples on a regular grid, x index fastest: values[j * nx + i] at (x(i), y(j)).
struct Grid2D {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    std::size_t nx = 0, ny = 0;
    std::vector<double> values;

    double x(std::size_t i) const { return x0 + (x1 - x0) * double(i) / double(nx - 1); }
    double y(std::size_t j) const { return y0 + (y1 - y0) * double(j) / double(ny - 1); }
    double at(std::size_t i, std::size_t j) const { return values[j * nx + i]; }
};

using Polyline = std::vector<std::array<double, 2>>;

// Marching squares; ambiguous cells resolved by the cell-centre average. Closed curves
// repeat their first point at the end.
std::vector<Polyline> marching_squares(const Grid2D& g, double level);

// Sizes of 4-connected components of cells with open[k] != 0, largest first.
std::vector<std::size_t> connected_components(const std::vector<char>& open, std::size_t nx, std::size_t ny);

}  // namespace fluortraj
