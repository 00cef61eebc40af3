#pragma once

#include <cstdint>
#include <vector>

#include "fluortraj/bloch.hpp"
#include "fluortraj/measure.hpp"

namespace fluortraj {

struct Trajectory {
    std::vector<double> times;
    std::vector<BlochVector> states;
    // Empty when readouts were not kept; otherwise one per step between stored states.
    std::vector<Readout> readouts;
    Scheme scheme = Scheme::Homodyne;
    std::uint64_t seed = 0;

    std::size_t size() const { return states.size(); }
};

}  // namespace fluortraj
