#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "fluortraj/bloch.hpp"
#include "fluortraj/io.hpp"
#include "fluortraj/measure.hpp"

namespace fluortraj {

struct PostSelectConfig {
    std::string kind = "theta";  // "theta" or "bloch"
    double theta_f = 0.0;
    BlochVector target;
    double window = 0.01;
    double fraction = 0.075;
};

// Times in units of T1; gamma stays 1.
struct RunConfig {
    SchemeConfig scheme;
    std::string initial = "e";
    double T = 1.0;
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    std::string out = "out";
    std::size_t decimation = 10;
    PostSelectConfig post;

    BlochVector initial_state() const;
    Json to_json() const;
    // Missing keys keep the values of `base`.
    static RunConfig from_json(const Json& j, const RunConfig& base);
    // Throws Config; eps >= 0.01 only adds a warning.
    void validate(std::vector<std::string>& warnings) const;
};

// Named state (e, g, x+, x-, y+, y-, mixed) or "x,y,z".
BlochVector parse_state(const std::string& text);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fluortraj
