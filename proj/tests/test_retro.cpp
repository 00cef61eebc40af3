#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fluortraj/dynamics.hpp"
#include "fluortraj/ensemble.hpp"
#include "fluortraj/error.hpp"
#include "fluortraj/retro.hpp"

using namespace fluortraj;

namespace {

SchemeConfig homodyne(double dt, double theta = 0.0) {
    SchemeConfig c;
    c.scheme = Scheme::Homodyne;
    c.dt = dt;
    c.theta = theta;
    return c;
}

BlochVector random_ball(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        BlochVector q{u(gen), u(gen), u(gen)};
        if (q.norm() <= 1.0) return q;
    }
}

}  // namespace

TEST_CASE("excited state is the backward fixed point") {
    for (double r : {-3.0, -0.2, 0.0, 1.0, 5.0}) {
        const SchemeConfig c = homodyne(1e-2);
        const RetroState s = retro_update(RetroState::from(states::excited()), kraus_for(c, Readout{Dyne{r}, c.dt}));
        CHECK(s.bloch() == states::excited());
        CHECK(retro_rhs(RetroState::from(states::excited()), r, 0.0).norm() == 0.0);
    }
}

TEST_CASE("single retrodicted step") {
    const SchemeConfig c = homodyne(1e-2);
    const RetroState s = retro_update(RetroState{0, 0, 0}, kraus_for(c, Readout{Dyne{1.0}, c.dt}));
    // rho' is proportional to M^dag M = [[0.99 + 1e-4, 0.01], [0.01, 1]]
    CHECK(s.x == doctest::Approx(0.02 / 1.9901).epsilon(1e-13));
    CHECK(s.y == doctest::Approx(0.0));
    CHECK(s.z == doctest::Approx(-0.0099 / 1.9901).epsilon(1e-13));

    const SchemeConfig tiny = homodyne(1e-14);
    const BlochVector q{0.3, -0.2, 0.4};
    const RetroState same = retro_update(RetroState::from(q), kraus_for(tiny, Readout{Dyne{0.0}, tiny.dt}));
    CHECK(std::abs(same.x - q.x) < 1e-12);
    CHECK(std::abs(same.z - q.z) < 1e-12);

    SchemeConfig pd;
    pd.scheme = Scheme::Photodetect;
    CHECK_THROWS_AS(retro_update(RetroState{}, kraus_photodetect(pd)), Error);
}

TEST_CASE("retro_rhs is the small-step limit of retro_update") {
    std::mt19937_64 gen(29);
    for (int i = 0; i < 20; ++i) {
        const BlochVector q = random_ball(gen);
        const double r = 1.5 - 0.15 * i, th = 0.1 * i;
        const Vec3 rhs = retro_rhs(RetroState::from(q), r, th);
        double err[2];
        for (int k = 0; k < 2; ++k) {
            const SchemeConfig c = homodyne(k == 0 ? 1e-4 : 5e-5, th);
            const RetroState s = retro_update(RetroState::from(q), kraus_for(c, Readout{Dyne{r}, c.dt}));
            err[k] = ((s.bloch().vec() - q.vec()) / c.dt - rhs).cwiseAbs().maxCoeff();
        }
        CHECK(err[0] < 1e-2);
        CHECK(err[1] / err[0] == doctest::Approx(0.5).epsilon(0.05));
    }
}

TEST_CASE("ydot vanishes on the y = 0 circle at theta = 0") {
    std::mt19937_64 gen(31);
    for (int i = 0; i < 50; ++i) {
        BlochVector q = random_ball(gen);
        q.y = 0.0;
        CHECK(retro_rhs(RetroState::from(q), 0.7 * i - 10.0, 0.0).y() == 0.0);
    }
}

TEST_CASE("time reversal maps backward equations onto forward ones") {
    std::mt19937_64 gen(37);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i)
        worst = std::max(worst, reversal_symmetry_residual(random_ball(gen), 5 * u(gen), std::numbers::pi * u(gen)));
    CHECK(worst <= 1e-12);
    CHECK(reversal_symmetry_residual({0.5, 0.25, -0.5}, 2.0, 0.0) == 0.0);
    CHECK(reversal_symmetry_residual({-0.25, 0.5, 0.125}, -1.0, 0.0) == 0.0);

    CHECK(time_reverse(states::ground()).bloch() == states::excited());
    const SchemeConfig c = homodyne(1e-3);
    CHECK(kraus_rhs(states::ground(), Readout{Dyne{0.8}, c.dt}, c).norm() == 0.0);
}

TEST_CASE("uncollapse round trip") {
    for (const BlochVector& q0 : {states::plus_x(), BlochVector{std::sin(2.0), 0.0, std::cos(2.0)}}) {
        const SchemeConfig c = homodyne(1e-3);
        SimulationOptions so;
        so.keep_readouts = true;
        const Trajectory tr = simulate_trajectory(c, q0, 1.0, 41, 0, so);
        REQUIRE(tr.readouts.size() + 1 == tr.size());
        const auto back = retro_run(time_reverse(tr.states.back()), tr.readouts, c);
        REQUIRE(back.size() == tr.size());
        double worst = 0.0;
        for (std::size_t k = 0; k < back.size(); ++k)
            worst = std::max(worst, trace_distance(back[k].bloch(), time_reverse(tr.states[tr.size() - 1 - k]).bloch()));
        CHECK(trace_distance(back.back().bloch(), time_reverse(q0).bloch()) <= c.dt);
        CHECK(worst <= c.dt);
    }
}
