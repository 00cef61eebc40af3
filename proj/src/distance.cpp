#include "fluortraj/distance.hpp"

#include <algorithm>
#include <cmath>

#include "fluortraj/error.hpp"

namespace fluortraj {

DistanceMeasure trace_distance_measure() {
    return {"trace", [](const BlochVector& a, const BlochVector& b) { return trace_distance(a, b); }, true};
}

DistanceMeasure bures_distance_measure() {
    return {"bures",
            [](const BlochVector& a, const BlochVector& b) {
                const double dot = a.x * b.x + a.y * b.y + a.z * b.z;
                const double da = std::max(0.0, 1.0 - a.norm() * a.norm());
                const double db = std::max(0.0, 1.0 - b.norm() * b.norm());
                const double f = std::clamp(0.5 * (1.0 + dot + std::sqrt(da * db)), 0.0, 1.0);
                return std::sqrt(std::max(0.0, 2.0 * (1.0 - std::sqrt(f))));
            },
            true};
}

DistanceMeasure distance_measure_from_name(const std::string& name) {
    if (name == "trace") return trace_distance_measure();
    if (name == "bures") return bures_distance_measure();
    throw Error(ErrorKind::Config, "unknown distance measure '" + name + "'");
}

}  // namespace fluortraj
