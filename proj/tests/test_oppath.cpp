#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fluortraj/dynamics.hpp"
#include "fluortraj/ensemble.hpp"
#include "fluortraj/error.hpp"
#include "fluortraj/oppath.hpp"

using namespace fluortraj;
using std::numbers::pi;

namespace {

const OpModel kPolar{};
const OpModel kPlanar{OpCoordinates::Planar, 1.0, 0.45};
const OpModel kPlanarIdeal{OpCoordinates::Planar, 1.0, 1.0};

PhasePoint random_planar(std::mt19937_64& g) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        const double x = u(g), z = u(g);
        if (x * x + z * z <= 1.0) return PhasePoint::planar(x, z, 2 * u(g), 2 * u(g));
    }
}

double golden_max(const std::function<double(double)>& f, double a, double b) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-7) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - phi * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + phi * (b - a); fd = f(d);
        }
    }
    // one parabolic step through wide points removes the flat-top rounding
    const double m = 0.5 * (a + b), h = 0.5;
    const double y0 = f(m - h), y1 = f(m), y2 = f(m + h);
    return m + 0.5 * h * (y0 - y2) / (y0 - 2 * y1 + y2);
}

// Fourth-order central difference of a sampled series.
double d5(const std::vector<double>& v, std::size_t k, double h) {
    return (v[k - 2] - 8 * v[k - 1] + 8 * v[k + 1] - v[k + 2]) / (12 * h);
}

}  // namespace

TEST_CASE("optimal readout closed forms") {
    CHECK(optimal_readout(PhasePoint::planar(0, -1, 0.7, -1.3), kPlanarIdeal) == 0.0);
    CHECK(optimal_readout(PhasePoint::planar(0, -1, 0.7, -1.3), kPlanar) == 0.0);
    CHECK(std::abs(optimal_readout(PhasePoint::polar(pi, 2.0), kPolar)) < 1e-15);
    const OpModel g2{OpCoordinates::Planar, 2.0, 1.0};
    CHECK(optimal_readout(PhasePoint::planar(0.3, 0.1, 0, 0), g2) == doctest::Approx(std::sqrt(2.0) * 0.3));
    std::mt19937_64 gen(3);
    for (int i = 0; i < 50; ++i) {
        const PhasePoint pt = random_planar(gen);
        const double x = pt.q[0], z = pt.q[1];
        const double want = x + pt.p[0] * (1 + z - x * x) - x * pt.p[1] * (1 + z);
        CHECK(optimal_readout(pt, kPlanarIdeal) == doctest::Approx(want).epsilon(1e-13));
    }
}

TEST_CASE("optimal readout maximizes the composed hamiltonian") {
    std::mt19937_64 gen(5);
    for (const OpModel& m : {kPlanar, kPlanarIdeal}) {
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const PhasePoint pt = random_planar(gen);
            const double rs = optimal_readout(pt, m);
            const double oracle = golden_max([&](double r) { return composed_hamiltonian(pt, r, m); }, rs - 20, rs + 20);
            worst = std::max(worst, std::abs(oracle - rs));
        }
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("hamiltonian is concave in r with unit curvature") {
    std::mt19937_64 gen(7);
    for (int i = 0; i < 20; ++i) {
        const PhasePoint pt = random_planar(gen);
        const double r = 0.3 * i - 2.0, h = 0.5;
        const double d2 = (composed_hamiltonian(pt, r + h, kPlanar) - 2 * composed_hamiltonian(pt, r, kPlanar) +
                           composed_hamiltonian(pt, r - h, kPlanar)) / (h * h);
        CHECK(d2 == doctest::Approx(-1.0).epsilon(1e-9));
    }
}

TEST_CASE("eliminated hamiltonian equals the composition at r*") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const PhasePoint pt = PhasePoint::polar(pi * u(gen), 3 * u(gen));
        worst = std::max(worst, std::abs(stochastic_hamiltonian(pt, kPolar) -
                                         composed_hamiltonian(pt, optimal_readout(pt, kPolar), kPolar)));
        const PhasePoint pp = random_planar(gen);
        worst = std::max(worst, std::abs(stochastic_hamiltonian(pp, kPlanar) -
                                         composed_hamiltonian(pp, optimal_readout(pp, kPlanar), kPlanar)));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("polar and planar forms agree on the pure circle") {
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const double th = pi * u(gen), p = 2 * u(gen);
        const PhasePoint pl = PhasePoint::planar(std::sin(th), std::cos(th), p * std::cos(th), -p * std::sin(th));
        CHECK(stochastic_hamiltonian(PhasePoint::polar(th, p), kPolar) ==
              doctest::Approx(stochastic_hamiltonian(pl, kPlanarIdeal)).epsilon(1e-12));
        CHECK(optimal_readout(PhasePoint::polar(th, p), kPolar) ==
              doctest::Approx(optimal_readout(pl, kPlanarIdeal)).epsilon(1e-12));
    }
}

TEST_CASE("analytic gradients match finite differences") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double h = 1e-6;
    for (int i = 0; i < 30; ++i) {
        const PhasePoint pt = PhasePoint::polar(pi * u(gen), 2 * u(gen));
        const auto v = hamilton_rhs(pt, kPolar);
        auto H = [&](double th, double p) { return stochastic_hamiltonian(PhasePoint::polar(th, p), kPolar); };
        CHECK(v.qdot[0] == doctest::Approx((H(pt.q[0], pt.p[0] + h) - H(pt.q[0], pt.p[0] - h)) / (2 * h)).epsilon(1e-6));
        CHECK(v.pdot[0] == doctest::Approx(-(H(pt.q[0] + h, pt.p[0]) - H(pt.q[0] - h, pt.p[0])) / (2 * h)).epsilon(1e-6));

        const PhasePoint pp = random_planar(gen);
        const auto w = hamilton_rhs(pp, kPlanar);
        for (int c = 0; c < 2; ++c) {
            PhasePoint a = pp, b = pp;
            a.p[c] += h;
            b.p[c] -= h;
            CHECK(w.qdot[c] == doctest::Approx((stochastic_hamiltonian(a, kPlanar) - stochastic_hamiltonian(b, kPlanar)) / (2 * h)).epsilon(1e-6));
            a = pp;
            b = pp;
            a.q[c] += h;
            b.q[c] -= h;
            CHECK(w.pdot[c] == doctest::Approx(-(stochastic_hamiltonian(a, kPlanar) - stochastic_hamiltonian(b, kPlanar)) / (2 * h)).epsilon(1e-6));
        }
    }
}

TEST_CASE("fixed points of the polar hamiltonian") {
    CHECK(stochastic_hamiltonian(PhasePoint::polar(0, 0), kPolar) == -1.0);
    CHECK(std::abs(stochastic_hamiltonian(PhasePoint::polar(pi, 0), kPolar)) < 1e-15);
    const OpModel g3{OpCoordinates::Polar, 3.0, 1.0};
    CHECK(stochastic_hamiltonian(PhasePoint::polar(0, 0), g3) == -3.0);
    for (double th : {0.0, pi}) {
        const auto v = hamilton_rhs(PhasePoint::polar(th, 0), kPolar);
        CHECK(std::hypot(v.qdot[0], v.pdot[0]) < 1e-15);
    }
    const auto sp = stationary_points(kPolar, -pi, pi, -3, 3);
    REQUIRE(sp.size() == 2);
    CHECK(std::abs(sp[0].theta) < 1e-10);
    CHECK(std::abs(sp[1].theta - pi) < 1e-10);
    CHECK(sp[0].energy == doctest::Approx(-1.0));
    CHECK(std::abs(sp[1].energy) < 1e-12);
}

TEST_CASE("mirror symmetry") {
    std::mt19937_64 gen(19);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double th = pi * u(gen), p = 3 * u(gen);
        CHECK(std::abs(stochastic_hamiltonian(PhasePoint::polar(th, p), kPolar) -
                       stochastic_hamiltonian(PhasePoint::polar(-th, -p), kPolar)) < 1e-12);
    }
}

TEST_CASE("hamilton flow basics") {
    const auto fixed = hamilton_flow(PhasePoint::polar(pi, 0), kPolar, 2.0, 1e-3);
    for (const auto& pt : fixed.points) {
        CHECK(std::abs(pt.q[0] - pi) < 1e-12);
        CHECK(std::abs(pt.p[0]) < 1e-12);
    }

    const auto um = hamilton_flow(PhasePoint::polar(1e-6, 0), kPolar, 40.0, 1e-3);
    CHECK(um.points.back().q[0] > 3.0);
    for (double e : um.energy) CHECK(std::abs(e - um.energy.front()) < 1e-8);
    CHECK(um.energy.front() == doctest::Approx(-1.0).epsilon(1e-9));

    for (double th : {-2.0, -0.5, 0.4, 1.9}) {
        const PhasePoint pt = PhasePoint::polar(th, 0);
        CHECK(action_rate(pt, kPolar) == stochastic_hamiltonian(pt, kPolar));
    }

    CHECK_THROWS_AS(hamilton_flow(PhasePoint::polar(pi - 1e-3, 5e5), kPolar, 5.0, 1e-3), Error);
    try {
        hamilton_flow(PhasePoint::polar(pi - 1e-3, 5e5), kPolar, 5.0, 1e-3);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BlowUp);
    }
    CHECK_THROWS_AS(hamilton_flow(PhasePoint::polar(0, 0), OpModel{OpCoordinates::Polar, 1.0, 0.5}, 1.0, 1e-3), Error);
}

TEST_CASE("energy conservation along random flows") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        const auto s = hamilton_flow(PhasePoint::polar(pi * u(gen), u(gen)), kPolar, 10.0, 1e-3);
        const double e0 = s.energy.front();
        double worst = 0.0;
        for (double e : s.energy) worst = std::max(worst, std::abs(e - e0));
        CHECK(worst <= 1e-8 * std::max(1.0, std::abs(e0)));
    }
    for (int i = 0; i < 5; ++i) {
        PhasePoint pt = random_planar(gen);
        pt.p = {0.5 * pt.p[0], 0.5 * pt.p[1]};
        const auto s = hamilton_flow(pt, kPlanar, 4.0, 1e-3);
        for (double e : s.energy) CHECK(std::abs(e - s.energy.front()) <= 1e-8 * std::max(1.0, std::abs(s.energy.front())));
    }
}

TEST_CASE("optimal paths are trajectories of the readout equations") {
    const double dt = 1e-3;
    const SchemeConfig ci = kPlanar.scheme_config();
    const auto s = hamilton_flow(PhasePoint::planar(0.0, 1.0, 0.6, -0.2), kPlanar, 2.0, dt);
    std::vector<double> xs, zs;
    for (const auto& p : s.points) {
        xs.push_back(p.q[0]);
        zs.push_back(p.q[1]);
    }
    double worst = 0.0;
    for (std::size_t k = 2; k + 2 < s.size(); ++k) {
        const Vec3 f = kraus_rhs(s.state(k), Readout{Dyne{s.readout[k]}, dt}, ci);
        worst = std::max({worst, std::abs(d5(xs, k, dt) - f.x()), std::abs(d5(zs, k, dt) - f.z())});
    }
    CHECK(worst < 1e-8);

    const SchemeConfig cp = kPolar.scheme_config();
    const auto sp = hamilton_flow(PhasePoint::polar(0.5, -0.4), kPolar, 2.0, dt);
    xs.clear();
    zs.clear();
    for (const auto& p : sp.points) {
        xs.push_back(std::sin(p.q[0]));
        zs.push_back(std::cos(p.q[0]));
    }
    worst = 0.0;
    for (std::size_t k = 2; k + 2 < sp.size(); ++k) {
        const Vec3 f = kraus_rhs(sp.state(k), Readout{Dyne{sp.readout[k]}, dt}, cp);
        worst = std::max({worst, std::abs(d5(xs, k, dt) - f.x()), std::abs(d5(zs, k, dt) - f.z())});
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("action accounting") {
    const auto s = hamilton_flow(PhasePoint::polar(0.3, 0.2), kPolar, 1.0, 1e-3);
    CHECK(s.action.front() == 0.0);
    double sum = 0.0;
    for (std::size_t k = 1; k < s.size(); ++k) sum += 0.5 * 1e-3 * (s.action_rate[k] + s.action_rate[k - 1]);
    CHECK(s.total_action() == doctest::Approx(sum).epsilon(1e-12));
    for (std::size_t k = 0; k < s.size(); k += 100) {
        const auto v = hamilton_rhs(s.points[k], kPolar);
        CHECK(s.action_rate[k] == doctest::Approx(s.energy[k] - s.points[k].p[0] * v.qdot[0]));
    }
}

TEST_CASE("phase portrait topology") {
    PortraitOptions o;
    o.n_theta = o.n_p = 301;
    o.levels = {-0.5, 0.5};
    const auto pp = phase_portrait(kPolar, o);
    REQUIRE(pp.stationary.size() == 2);
    CHECK(pp.regions.size() == 6);
    REQUIRE(pp.contours.size() == 4);
    CHECK(pp.contours[2].separatrix);
    CHECK(pp.contours[2].level == -1.0);
    CHECK(pp.contours[3].level == 0.0);
    for (const auto& c : pp.contours) CHECK(!c.lines.empty());
    const auto& g = pp.energy;
    for (std::size_t j = 0; j < g.ny; j += 7)
        for (std::size_t i = 0; i < g.nx; i += 7)
            CHECK(std::abs(g.at(i, j) - g.at(g.nx - 1 - i, g.ny - 1 - j)) < 1e-12);
    for (const auto& c : pp.contours)
        for (const auto& line : c.lines)
            for (std::size_t k = 0; k < line.size(); k += 5)
                CHECK(stochastic_hamiltonian(PhasePoint::polar(line[k][0], line[k][1]), kPolar) ==
                      doctest::Approx(c.level).epsilon(0.02).scale(1.0));
    // the p = 0 row of the action-rate grid equals the energy row
    const std::size_t mid = g.ny / 2;
    for (std::size_t i = 0; i < g.nx; ++i) CHECK(pp.action_rate.at(i, mid) == doctest::Approx(g.at(i, mid)));
}

TEST_CASE("lagrangian manifold") {
    std::vector<double> times{0.0};
    for (int k = 1; k <= 8; ++k) times.push_back(0.5 * k);
    MomentumGrid grid;
    grid.n = 9;
    const auto lm = propagate_lm(states::excited(), grid, kPlanar, times, 1e-3, 1);
    CHECK(lm.points.size() + lm.dropped.size() == 81);
    CHECK(lm.dropped.empty());
    const EllipseLaw law = EllipseLaw::from_initial(states::excited(), 0.45, 1.0);
    double worst = 0.0;
    for (const auto& p : lm.points) {
        CHECK(p.states[0] == states::excited());
        for (std::size_t k = 1; k < times.size(); ++k) worst = std::max(worst, ellipse_residual(p.states[k], times[k], law));
    }
    CHECK(worst < 1e-6);

    const auto pure = propagate_lm(states::excited(), grid, kPlanarIdeal, {1.0, 2.0}, 1e-3, 1);
    for (const auto& p : pure.points)
        for (const auto& q : p.states) CHECK(std::abs(q.norm() - 1.0) < 1e-8);

    CHECK_THROWS_AS(propagate_lm(states::excited(), grid, kPolar, times, 1e-3), Error);
    CHECK_THROWS_AS(propagate_lm(states::excited(), grid, kPlanar, {1.0, 0.5}, 1e-3), Error);
}

TEST_CASE("polar shooting") {
    ShootOptions o;
    o.grid = 200;
    const double thf = -pi + 0.5;
    const auto res = shoot(0.0, thf, 3.0, kPolar, o);
    REQUIRE(res.found());
    for (const auto& s : res.roots) {
        CHECK(std::abs(wrap_angle(s.points.back().q[0] - thf)) < 1e-6);
        CHECK(s.points.front().q[0] == 0.0);
    }
    for (std::size_t i = 1; i < res.roots.size(); ++i)
        CHECK(res.roots[i - 1].total_action() >= res.roots[i].total_action());
    CHECK(res.profile.size() == 200);

    const auto shortt = shoot(0.3, 0.3, 0.01, kPolar, o);
    REQUIRE(shortt.found());
    for (const auto& pt : shortt.roots.front().points) CHECK(std::abs(pt.q[0] - 0.3) < 1e-3);

    o.p_lo = 0.0;
    o.p_hi = 0.01;
    o.grid = 3;
    const auto none = shoot(0.0, 2.0, 0.1, kPolar, o);
    CHECK_FALSE(none.found());
    CHECK(none.profile.size() == 3);
}

TEST_CASE("planar shooting recovers a known endpoint") {
    const PhasePoint start = PhasePoint::planar(0.0, 1.0, 0.7, -0.3);
    const auto ref = hamilton_flow(start, kPlanar, 1.0, 1e-3);
    ShootOptions o;
    o.p_lo = -2;
    o.p_hi = 2;
    o.grid_2d = 21;
    const auto res = shoot(states::excited(), ref.q_f, 1.0, kPlanar, o);
    REQUIRE(res.found());
    bool recovered = false;
    for (const auto& s : res.roots) {
        CHECK(std::abs(s.state(s.size() - 1).x - ref.q_f.x) < 1e-6);
        CHECK(std::abs(s.state(s.size() - 1).z - ref.q_f.z) < 1e-6);
        double gap = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k)
            gap = std::max(gap, (s.state(k).vec() - ref.state(k).vec()).norm());
        if (gap < 1e-5) recovered = true;
    }
    CHECK(recovered);
}
