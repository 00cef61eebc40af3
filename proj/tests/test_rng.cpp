#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fluortraj/rng.hpp"

using namespace fluortraj;

TEST_CASE("philox4x32-10 known answers") {
    const auto z = philox4x32_10({0, 0, 0, 0}, {0, 0});
    CHECK(z[0] == 0x6627e8d5u);
    CHECK(z[1] == 0xe169c58du);
    CHECK(z[2] == 0xbc57ac4cu);
    CHECK(z[3] == 0x9b00dbd8u);

    const auto f = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                 {0xffffffffu, 0xffffffffu});
    CHECK(f[0] == 0x408f276du);
    CHECK(f[1] == 0x41c83b0eu);
    CHECK(f[2] == 0xa20bc7c6u);
    CHECK(f[3] == 0x6d5451fdu);
}

TEST_CASE("streams are reproducible and distinct") {
    CounterRng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    for (int i = 0; i < 100; ++i) {
        const auto va = a();
        CHECK(va == b());
        CHECK(va != c());
        CHECK(va != d());
    }
}

TEST_CASE("uniform and normal moments") {
    CounterRng r(1, 0);
    const int n = 400000;
    double su = 0, sn = 0, sn2 = 0;
    double umin = 1, umax = 0;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        su += u;
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        const double g = r.normal();
        sn += g;
        sn2 += g * g;
    }
    CHECK(umin >= 0.0);
    CHECK(umax < 1.0);
    CHECK(std::abs(su / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(sn / n) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(sn2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}
