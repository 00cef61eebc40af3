#include "fluortraj/rng.hpp"

#include <cmath>
#include <numbers>

namespace fluortraj {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void round(Philox4x32Counter& c, const Philox4x32Key& k) {
    const std::uint64_t p0 = std::uint64_t(kM0) * c[0];
    const std::uint64_t p1 = std::uint64_t(kM1) * c[2];
    const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
    const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) {
    round(ctr, key);
    for (int i = 1; i < 10; ++i) {
        key[0] += kW0;
        key[1] += kW1;
        round(ctr, key);
    }
    return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t master_seed, std::uint64_t stream)
    : seed_(master_seed), stream_(stream) {
    const std::uint64_t k = splitmix64(master_seed);
    key_ = {std::uint32_t(k), std::uint32_t(k >> 32)};
}

void CounterRng::refill() {
    const Philox4x32Counter ctr = {std::uint32_t(block_), std::uint32_t(block_ >> 32),
                                   std::uint32_t(stream_), std::uint32_t(stream_ >> 32)};
    buf_ = philox4x32_10(ctr, key_);
    ++block_;
    pos_ = 0;
}

CounterRng::result_type CounterRng::operator()() {
    if (pos_ > 2) refill();
    const std::uint64_t lo = buf_[pos_];
    const std::uint64_t hi = buf_[pos_ + 1];
    pos_ += 2;
    return (hi << 32) | lo;
}

double CounterRng::uniform() { return double((*this)() >> 11) * 0x1.0p-53; }

double CounterRng::uniform_open0() { return (double((*this)() >> 11) + 1.0) * 0x1.0p-53; }

double CounterRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform_open0();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(phi);
    has_spare_ = true;
    return rad * std::cos(phi);
}

}  // namespace fluortraj
