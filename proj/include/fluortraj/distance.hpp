#pragma once

#include <functional>
#include <string>

#include "fluortraj/bloch.hpp"

namespace fluortraj {

struct DistanceMeasure {
    std::string name;
    std::function<double(const BlochVector&, const BlochVector&)> fn;
    bool symmetric = true;

    double operator()(const BlochVector& a, const BlochVector& b) const { return fn(a, b); }
};

DistanceMeasure trace_distance_measure();
// sqrt(2(1 - sqrt F)) with the qubit fidelity F = tr(rho sigma) + 2 sqrt(det rho det sigma).
DistanceMeasure bures_distance_measure();
DistanceMeasure distance_measure_from_name(const std::string& name);

}  // namespace fluortraj
