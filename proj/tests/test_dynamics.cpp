#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fluortraj/dynamics.hpp"
#include "fluortraj/error.hpp"

using namespace fluortraj;

namespace {

SchemeConfig config(Scheme s, double eta = 1.0, double theta = 0.0) {
    SchemeConfig c;
    c.scheme = s;
    c.dt = 1e-3;
    c.eta = eta;
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

double max_diff(const Vec3& a, const Vec3& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Central differences of a diffusion column.
Jacobian3 fd_jacobian(const BlochVector& q, const SchemeConfig& c, std::size_t ch, double h = 1e-6) {
    Jacobian3 J;
    for (int k = 0; k < 3; ++k) {
        Vec3 p = q.vec(), m = q.vec();
        p[k] += h;
        m[k] -= h;
        J.col(k) = (sme_coefficients(BlochVector::from(p), c).b[ch] - sme_coefficients(BlochVector::from(m), c).b[ch]) / (2 * h);
    }
    return J;
}

}  // namespace

TEST_CASE("lindblad right-hand side") {
    CHECK(lindblad_rhs(states::ground(), 1.0) == Vec3(0, 0, 0));
    CHECK(lindblad_rhs(states::excited(), 1.3) == Vec3(0, 0, -2.6));
    CHECK(lindblad_rhs(states::plus_x(), 2.0) == Vec3(-1.0, 0, -2.0));
}

TEST_CASE("analytic decay") {
    for (double t : {0.0, 0.3, 1.0, 4.0}) CHECK(analytic_decay(states::excited(), t, 1.0).z == doctest::Approx(2 * std::exp(-t) - 1));
    const BlochVector q0{0.2, -0.4, 0.5};
    CHECK(analytic_decay(q0, 0.0, 1.0) == q0);
    const BlochVector d = analytic_decay(states::plus_x(), 1.0, 1.0);
    CHECK(d.x == doctest::Approx(0.60653).epsilon(1e-5));
    CHECK(d.z == doctest::Approx(-0.63212).epsilon(1e-5));
}

TEST_CASE("SME coefficients") {
    const BlochVector q{0.3, -0.2, 0.4};
    const DriftDiffusion het = sme_coefficients(q, config(Scheme::Heterodyne));
    CHECK(het.channels == 2);
    const double k = std::sqrt(0.5);
    CHECK(het.b[0][0] == doctest::Approx(k * (1 + q.z - q.x * q.x)));
    CHECK(het.b[1][0] == doctest::Approx(-k * q.x * q.y));
    CHECK(het.b[0][2] == doctest::Approx(-k * (1 + q.z) * q.x));
    CHECK(het.b[1][2] == doctest::Approx(-k * (1 + q.z) * q.y));

    const DriftDiffusion hom = sme_coefficients(q, config(Scheme::Homodyne));
    CHECK(hom.channels == 1);

    for (Scheme s : {Scheme::Heterodyne, Scheme::Homodyne, Scheme::HomodyneInefficient}) {
        const DriftDiffusion g = sme_coefficients(states::ground(), config(s, 0.5, 0.7));
        CHECK(g.a.norm() == 0.0);
        CHECK(g.b[0].norm() == 0.0);
        CHECK(g.b[1].norm() == 0.0);
    }

    const DriftDiffusion blind = sme_coefficients(q, config(Scheme::Homodyne, 0.0));
    CHECK(blind.b[0].norm() == 0.0);
    CHECK(blind.a == lindblad_rhs(q, 1.0));

    CHECK_THROWS_AS(sme_coefficients(q, config(Scheme::Photodetect)), Error);
}

TEST_CASE("heterodyne Ito equations: y row pairs (1+z-y^2) with the P channel") {
    // The y equation printed alongside x reuses the X noise in its first term; the
    // backaction recomputed from L_P puts (1+z-y^2) on xi_P and -xy on xi_X.
    const BlochVector q{0.3, -0.2, 0.4};
    const DriftDiffusion het = sme_coefficients(q, config(Scheme::Heterodyne));
    const double k = std::sqrt(0.5);
    CHECK(het.b[1][1] == doctest::Approx(k * (1 + q.z - q.y * q.y)));
    CHECK(het.b[0][1] == doctest::Approx(-k * q.x * q.y));
    const double printed_x_coeff = k * (1 + q.z - q.y * q.y);
    const bool printed_matches = std::abs(het.b[0][1] - printed_x_coeff) < 1e-12;
    CHECK_FALSE(printed_matches);
    MESSAGE("heterodyne Ito y equation: the printed form pairs (1+z-y^2) with xi_X and -xy with xi_P; "
            "the operator-derived form swaps them. The operator-derived form is used.");
}

TEST_CASE("analytic diffusion Jacobian agrees with central differences") {
    std::mt19937_64 gen(1);
    for (int i = 0; i < 200; ++i) {
        const BlochVector q = random_ball(gen);
        const SchemeConfig c = i % 2 ? config(Scheme::Heterodyne, 1.0, 0.1 * i) : config(Scheme::Homodyne, 0.45, 0.05 * i);
        const std::size_t n = sme_coefficients(q, c).channels;
        for (std::size_t ch = 0; ch < n; ++ch)
            CHECK((diffusion_jacobian(q, c, ch) - fd_jacobian(q, c, ch)).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("Stratonovich drift") {
    const double x = 0.6, z = 0.3, g = 1.0;
    const BlochVector q{x, 0.0, z};
    const SchemeConfig c = config(Scheme::Homodyne);
    // With r = sqrt(g) x + xi, the Kraus equations at xi = 0 are the Stratonovich drift itself.
    const Vec3 total = strato_drift(q, c).A;
    CHECK(total[0] == doctest::Approx(g * x * z / 2 + g * x * (1 + z - x * x)).epsilon(1e-14));
    CHECK(std::abs(total[1]) < 1e-15);
    CHECK(total[2] == doctest::Approx(g * (z * z - 1) / 2 - g * x * x * (1 + z)).epsilon(1e-14));

    CHECK(strato_drift(states::ground(), config(Scheme::Heterodyne)).A.norm() == 0.0);

    // Conversion with numerically differentiated columns.
    const SchemeConfig h = config(Scheme::Heterodyne);
    const BlochVector e = states::excited();
    const DriftDiffusion dd = sme_coefficients(e, h);
    Vec3 oracle = dd.a;
    for (std::size_t ch = 0; ch < 2; ++ch) oracle -= 0.5 * fd_jacobian(e, h, ch) * dd.b[ch];
    CHECK(max_diff(strato_drift(e, h).A, oracle) < 1e-8);
    // a_z = -2 and the two channel corrections contribute +1 each.
    CHECK(std::abs(strato_drift(e, h).A[2]) < 1e-15);
}

TEST_CASE("displayed homodyne equations") {
    const double x = 0.4, z = -0.5, r = 1.7, om = 0.8;
    SchemeConfig c = config(Scheme::Homodyne);
    c.omega = om;
    const Vec3 v = kraus_rhs({x, 0.0, z}, {Dyne{r}, c.dt}, c);
    CHECK(v[0] == doctest::Approx(x * z / 2 + om * z + r * (1 + z - x * x)).epsilon(1e-14));
    CHECK(v[1] == 0.0);
    CHECK(v[2] == doctest::Approx((z * z - 1) / 2 - om * x - r * x * (1 + z)).epsilon(1e-14));

    CHECK(kraus_rhs(states::ground(), {Dyne{12.0}, c.dt}, config(Scheme::Homodyne)).norm() == 0.0);
    CHECK_THROWS_AS(kraus_rhs(states::ground(), {DualDyne{}, c.dt}, config(Scheme::Homodyne)), Error);
}

TEST_CASE("displayed inefficient homodyne equations") {
    const double eta = 0.45, x = 0.3, z = 0.2, r = -0.9;
    const SchemeConfig c = config(Scheme::HomodyneInefficient, eta);
    const Vec3 v = kraus_rhs({x, 0.0, z}, {Dyne{r}, c.dt}, c);
    const double k = std::sqrt(eta);
    CHECK(v[0] == doctest::Approx(0.5 * x * (eta + eta * z - 1) + k * r * (1 + z - x * x)).epsilon(1e-14));
    CHECK(v[2] == doctest::Approx(0.5 * (1 + z) * (eta + eta * z - 2) - k * r * x * (1 + z)).epsilon(1e-14));
}

TEST_CASE("property: Kraus equations equal Stratonovich drift plus diffusion") {
    std::mt19937_64 gen(99);
    std::normal_distribution<double> xi(0.0, 5.0);
    std::uniform_real_distribution<double> ang(-3.2, 3.2);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const BlochVector q = random_ball(gen);
        const int kind = i % 3;
        SchemeConfig c = kind == 0 ? config(Scheme::Heterodyne, 1.0, ang(gen))
                       : kind == 1 ? config(Scheme::Homodyne, 1.0, ang(gen))
                                   : config(Scheme::HomodyneInefficient, std::array{0.2, 0.45, 1.0}[i % 4 % 3], ang(gen));
        c.omega = (i % 5) * 0.3;
        c.delta = (i % 7) * 0.2 - 0.5;
        const DriftDiffusion dd = sme_coefficients(q, c);
        const auto sig = sme_signal(q, c);
        const double a = xi(gen), b = xi(gen);
        Readout ro;
        ro.dt = c.dt;
        Vec3 expected = strato_drift(q, c).A + dd.b[0] * a;
        if (dd.channels == 2) {
            expected += dd.b[1] * b;
            ro.value = DualDyne{sig[0] + a, sig[1] + b};
        } else {
            ro.value = Dyne{sig[0] + a};
        }
        const double d = max_diff(kraus_rhs(q, ro, c), expected);
        worst = std::max(worst, d);
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("averaging identity: drift without backaction is the Lindblad flow") {
    std::mt19937_64 gen(3);
    for (int i = 0; i < 100; ++i) {
        const BlochVector q = random_ball(gen);
        for (Scheme s : {Scheme::Heterodyne, Scheme::Homodyne, Scheme::HomodyneInefficient}) {
            CHECK(sme_coefficients(q, config(s, 0.45, 0.3 * i)).a == lindblad_rhs(q, 1.0));
        }
    }
}

TEST_CASE("RK4 integration") {
    const Rhs lind = [](const BlochVector& q) { return lindblad_rhs(q, 1.0); };
    const Trajectory t = integrate_deterministic(lind, states::excited(), 5.0, 1e-3);
    REQUIRE(t.size() == 5001);
    CHECK(std::abs(t.states.back().z - analytic_decay(states::excited(), 5.0, 1.0).z) < 1e-10);

    const Trajectory zero = integrate_deterministic([](const BlochVector&) { return Vec3::Zero(); }, {0.1, 0.2, 0.3}, 1.0, 0.1);
    for (const auto& s : zero.states) CHECK(s == BlochVector{0.1, 0.2, 0.3});

    const BlochVector q0{0.8, 0.1, 0.5};
    auto err = [&](double dt) {
        const Trajectory tr = integrate_deterministic(lind, q0, 2.0, dt);
        return (tr.states.back().vec() - analytic_decay(q0, 2.0, 1.0).vec()).norm();
    };
    const double e1 = err(0.2), e2 = err(0.1), e3 = err(0.05);
    CHECK(e1 / e2 >= 8.0);
    CHECK(e2 / e3 >= 8.0);
    CHECK(std::log2(e2 / e3) >= 3.9);

    const Rhs grow = [](const BlochVector& q) { return Vec3(0.0, 0.0, 1.0 + 0.0 * q.z); };
    CHECK_THROWS_AS(integrate_deterministic(grow, states::excited(), 1.0, 0.01), Error);
}

TEST_CASE("Euler-Maruyama SME integration") {
    const SchemeConfig blind = config(Scheme::Homodyne, 0.0);
    CounterRng rng(5, 0);
    const Trajectory t = integrate_sme(states::excited(), blind, 5.0, 1e-3, rng);
    const Trajectory ref = integrate_deterministic([](const BlochVector& q) { return lindblad_rhs(q, 1.0); }, states::excited(), 5.0, 1e-3);
    double worst = 0;
    for (std::size_t k = 0; k < t.size(); ++k) worst = std::max(worst, (t.states[k].vec() - ref.states[k].vec()).norm());
    CHECK(worst < 5e-3);
    CHECK(t.readouts.size() == t.size() - 1);

    // Mixed-state unraveling: the ball clamp is essentially inactive here.
    const SchemeConfig hom = config(Scheme::Homodyne, 0.45);
    const int n = 10000;
    const double T = 2.0, dt = 1e-3;
    const std::size_t every = 250;
    const std::size_t m = std::size_t(T / dt) / every + 1;
    std::vector<double> s(m, 0.0), s2(m, 0.0);
    for (int i = 0; i < n; ++i) {
        CounterRng r(11, std::uint64_t(i));
        const Trajectory tr = integrate_sme(states::excited(), hom, T, dt, r);
        for (std::size_t j = 0; j < m; ++j) {
            const double z = tr.states[j * every].z;
            s[j] += z;
            s2[j] += z * z;
        }
    }
    for (std::size_t j = 1; j < m; ++j) {
        const double mean = s[j] / n;
        const double se = std::sqrt((s2[j] / n - mean * mean) / (n - 1));
        const double t_j = double(j * every) * dt;
        CHECK(std::abs(mean - (2 * std::exp(-t_j) - 1)) <= 3.0 * se);
    }
}

TEST_CASE("Euler-Maruyama weak order on the mean of z") {
    // Coupled Brownian paths across step sizes; the differences of means carry the O(dt) bias.
    const SchemeConfig c = config(Scheme::Homodyne, 0.2);
    const double T = 1.0, base = 0.005;
    const int n = 10000;
    const int levels = 3;  // dt = 4*base, 2*base, base
    double means[levels] = {0, 0, 0};
    const std::size_t fine = std::size_t(T / base);
    for (int i = 0; i < n; ++i) {
        CounterRng r(31, std::uint64_t(i));
        std::vector<double> dw(fine);
        for (auto& w : dw) w = std::sqrt(base) * r.normal();
        for (int l = 0; l < levels; ++l) {
            const std::size_t agg = std::size_t(1) << (levels - 1 - l);
            const double dt = base * double(agg);
            Vec3 q = states::excited().vec();
            for (std::size_t k = 0; k < fine / agg; ++k) {
                double w = 0;
                for (std::size_t a = 0; a < agg; ++a) w += dw[k * agg + a];
                const DriftDiffusion dd = sme_coefficients(BlochVector::from(q), c);
                q += dd.a * dt + dd.b[0] * w;
                const double nq = q.norm();
                if (nq > 1.0) q /= nq;
            }
            means[l] += q[2] / n;
        }
    }
    const double d1 = means[0] - means[1];
    const double d2 = means[1] - means[2];
    const double ratio = d1 / d2;
    MESSAGE("weak-order ratio of successive mean differences: " << ratio);
    CHECK(ratio > 1.5);
    CHECK(ratio < 2.5);
}

TEST_CASE("ball clamp bias for pure-state unravelings shrinks with dt") {
    // Ideal homodyne keeps states on the sphere, so the clamp acts on every outward
    // fluctuation and biases ensemble means. The bias must vanish as dt -> 0.
    const SchemeConfig c = config(Scheme::Homodyne, 1.0);
    const double T = 1.0;
    const int n = 4000;
    auto bias = [&](double dt) {
        double s = 0;
        for (int i = 0; i < n; ++i) {
            CounterRng r(41, std::uint64_t(i));
            s += integrate_sme(states::excited(), c, T, dt, r).states.back().z;
        }
        return s / n - (2 * std::exp(-T) - 1);
    };
    const double b_coarse = bias(4e-3), b_fine = bias(2.5e-4);
    MESSAGE("mean-z bias with clamp: dt=4e-3 -> " << b_coarse << ", dt=2.5e-4 -> " << b_fine);
    CHECK(std::abs(b_fine) < std::abs(b_coarse));
    CHECK(std::abs(b_fine) < 0.015);
}
