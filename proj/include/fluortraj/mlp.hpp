#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fluortraj/distance.hpp"
#include "fluortraj/ensemble.hpp"
#include "fluortraj/trajectory.hpp"

namespace fluortraj {

struct DistanceMatrix {
    std::size_t n = 0;
    std::vector<double> values;    // row-major n x n
    std::vector<double> row_sums;

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

// Sum over the shared time grid; throws Shape on mismatched grids, Config for asymmetric measures.
double trajectory_distance(const Trajectory& a, const Trajectory& b, const DistanceMeasure& d);

DistanceMatrix build_distance_matrix(const std::vector<const Trajectory*>& trs, const DistanceMeasure& d,
                                     unsigned threads = 0);
DistanceMatrix build_distance_matrix(const Ensemble& e, const DistanceMeasure& d, unsigned threads = 0);

struct MlpOptions {
    double fraction = 0.075;
    DistanceMeasure measure = trace_distance_measure();
    std::size_t min_group = 100;   // warn when fewer trajectories are averaged
    std::size_t cap = 20000;       // larger subsets are subsampled
    unsigned threads = 0;
};

struct MlpResult {
    MeanTrajectory path;
    std::vector<std::size_t> selected;  // positions in the input subset, closest first
    std::size_t n_input = 0;
    std::size_t n_ranked = 0;
    bool subsampled = false;
    double fraction = 0.0;
    std::string measure;
    std::vector<std::string> warnings;
};

// Averages the ceil(f n) trajectories with the smallest distance row sums; throws EmptySubset on an empty input.
MlpResult extract_mlp(const Ensemble& subset, const MlpOptions& opts = {});

}  // namespace fluortraj
