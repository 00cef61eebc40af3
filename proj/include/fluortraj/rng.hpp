#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace fluortraj {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key);

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based stream. Stream (seed, index) is independent of how many other streams exist
// or which thread draws them.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t master_seed, std::uint64_t stream);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();
    double uniform();           // [0, 1)
    double uniform_open0();     // (0, 1]
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    Philox4x32Key key_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fluortraj
