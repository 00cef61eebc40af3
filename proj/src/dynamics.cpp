#include "fluortraj/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "fluortraj/error.hpp"

namespace fluortraj {

namespace {

const Complex kI(0.0, 1.0);

struct Channel {
    Complex l;
    double sqrt_eta;
};

// Measurement channels l_c (coefficient of sigma_minus) for the SME picture.
std::array<Channel, 2> channels(const SchemeConfig& cfg, std::size_t& n) {
    const Complex phase = std::exp(-kI * cfg.theta);
    switch (cfg.scheme) {
    case Scheme::Heterodyne: {
        n = 2;
        const double k = std::sqrt(cfg.gamma / 2.0);
        return {Channel{k * phase, 1.0}, Channel{kI * k * phase, 1.0}};
    }
    case Scheme::Homodyne:
    case Scheme::HomodyneInefficient:
        n = 1;
        return {Channel{std::sqrt(cfg.gamma) * phase, std::sqrt(cfg.eta)}, Channel{}};
    case Scheme::Photodetect: break;
    }
    throw Error(ErrorKind::Unsupported, "photodetection has no diffusive SME form");
}

Vec3 backaction(const BlochVector& q, const Channel& ch) {
    const double lr = ch.l.real(), li = ch.l.imag();
    const double s = lr * q.x + li * q.y;
    const double w = 1.0 + q.z;
    return ch.sqrt_eta * Vec3(-q.x * s + w * lr, -q.y * s + w * li, -w * s);
}

}  // namespace

std::size_t step_count(double T, double dt) {
    if (!(T >= 0.0) || !(dt > 0.0) || !std::isfinite(T))
        throw Error(ErrorKind::Config, "integration span requires T >= 0 and dt > 0");
    return std::size_t(std::llround(T / dt));
}

Vec3 lindblad_rhs(const BlochVector& q, double gamma) {
    return {-0.5 * gamma * q.x, -0.5 * gamma * q.y, -gamma * (1.0 + q.z)};
}

Vec3 drive_rhs(const BlochVector& q, double omega, double delta) {
    return {omega * q.z - delta * q.y, delta * q.x, -omega * q.x};
}

BlochVector analytic_decay(const BlochVector& q0, double t, double gamma) {
    const double h = std::exp(-0.5 * gamma * t);
    return {q0.x * h, q0.y * h, (1.0 + q0.z) * std::exp(-gamma * t) - 1.0};
}

DriftDiffusion sme_coefficients(const BlochVector& q, const SchemeConfig& cfg) {
    std::size_t n = 0;
    const auto chs = channels(cfg, n);
    DriftDiffusion dd;
    dd.a = lindblad_rhs(q, cfg.gamma) + drive_rhs(q, cfg.omega, cfg.delta);
    dd.channels = n;
    for (std::size_t c = 0; c < n; ++c) dd.b[c] = backaction(q, chs[c]);
    if (n == 2) dd.labels = {"I", "Q"};
    else dd.labels = {"r", ""};
    return dd;
}

Jacobian3 diffusion_jacobian(const BlochVector& q, const SchemeConfig& cfg, std::size_t channel) {
    std::size_t n = 0;
    const auto chs = channels(cfg, n);
    if (channel >= n) throw Error(ErrorKind::Config, "diffusion channel out of range");
    const double lr = chs[channel].l.real(), li = chs[channel].l.imag();
    const double s = lr * q.x + li * q.y;
    const double w = 1.0 + q.z;
    Jacobian3 J;
    J << -s - q.x * lr, -q.x * li, lr,
         -q.y * lr, -s - q.y * li, li,
         -w * lr, -w * li, -s;
    return chs[channel].sqrt_eta * J;
}

std::array<double, 2> sme_signal(const BlochVector& q, const SchemeConfig& cfg) {
    std::size_t n = 0;
    const auto chs = channels(cfg, n);
    std::array<double, 2> out{0.0, 0.0};
    for (std::size_t c = 0; c < n; ++c)
        out[c] = chs[c].sqrt_eta * (chs[c].l.real() * q.x + chs[c].l.imag() * q.y);
    return out;
}

StratonovichDrift strato_drift(const BlochVector& q, const SchemeConfig& cfg) {
    const DriftDiffusion dd = sme_coefficients(q, cfg);
    StratonovichDrift out;
    out.A = dd.a;
    for (std::size_t c = 0; c < dd.channels; ++c) out.A -= 0.5 * diffusion_jacobian(q, cfg, c) * dd.b[c];
    return out;
}

Vec3 kraus_rhs(const BlochVector& q, const Readout& ro, const SchemeConfig& cfg) {
    Complex c;
    double j = 0.0;
    const Complex phase = std::exp(-kI * cfg.theta);
    switch (cfg.scheme) {
    case Scheme::Heterodyne: {
        const auto* d = std::get_if<DualDyne>(&ro.value);
        if (!d) throw Error(ErrorKind::Config, "heterodyne equations need a two-quadrature readout");
        c = std::sqrt(cfg.gamma / 2.0) * phase * Complex(d->r_i, d->r_q);
        break;
    }
    case Scheme::Homodyne:
    case Scheme::HomodyneInefficient: {
        const auto* d = std::get_if<Dyne>(&ro.value);
        if (!d) throw Error(ErrorKind::Config, "homodyne equations need a single-quadrature readout");
        c = std::sqrt(cfg.gamma * cfg.eta) * d->r * phase;
        j = 0.5 * cfg.gamma * (1.0 - cfg.eta) * (1.0 + q.z);
        break;
    }
    case Scheme::Photodetect:
        throw Error(ErrorKind::Unsupported, "photodetection has no continuous readout equations");
    }
    const double a = 0.5 * cfg.gamma;
    const double s = c.real() * q.x + c.imag() * q.y;
    const double w = 1.0 + q.z;
    const double k = a * q.z - s - j;
    Vec3 v(q.x * k + w * c.real(), q.y * k + w * c.imag(), -a * (1.0 - q.z * q.z) - w * (s + j));
    return v + drive_rhs(q, cfg.omega, cfg.delta);
}

Trajectory integrate_deterministic(const Rhs& rhs, const BlochVector& q0, double T, double dt) {
    const std::size_t n = step_count(T, dt);
    Trajectory tr;
    tr.times.reserve(n + 1);
    tr.states.reserve(n + 1);
    Vec3 q = checked_ball(q0).vec();
    tr.times.push_back(0.0);
    tr.states.push_back(BlochVector::from(q));
    for (std::size_t k = 0; k < n; ++k) {
        const Vec3 k1 = rhs(BlochVector::from(q));
        const Vec3 k2 = rhs(BlochVector::from(q + 0.5 * dt * k1));
        const Vec3 k3 = rhs(BlochVector::from(q + 0.5 * dt * k2));
        const Vec3 k4 = rhs(BlochVector::from(q + dt * k3));
        q += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double norm = q.norm();
        if (!std::isfinite(norm) || norm > 1.0 + kBallTolerance) {
            std::ostringstream os;
            os << "deterministic integration left the Bloch ball at step " << k + 1 << " (|q| = " << norm
               << ")";
            throw Error(ErrorKind::Integration, os.str());
        }
        if (norm > 1.0) q /= norm;
        tr.times.push_back(double(k + 1) * dt);
        tr.states.push_back(BlochVector::from(q));
    }
    return tr;
}

Trajectory integrate_sme(const BlochVector& q0, const SchemeConfig& cfg, double T, double dt,
                         CounterRng& rng) {
    SchemeConfig c = cfg;
    c.dt = dt;
    c.validate();
    const std::size_t n = step_count(T, dt);
    Trajectory tr;
    tr.scheme = cfg.scheme;
    tr.seed = rng.seed();
    tr.times.reserve(n + 1);
    tr.states.reserve(n + 1);
    tr.readouts.reserve(n);
    Vec3 q = checked_ball(q0).vec();
    tr.times.push_back(0.0);
    tr.states.push_back(BlochVector::from(q));
    const double sdt = std::sqrt(dt);
    for (std::size_t k = 0; k < n; ++k) {
        const BlochVector cur = BlochVector::from(q);
        const DriftDiffusion dd = sme_coefficients(cur, c);
        const auto sig = sme_signal(cur, c);
        std::array<double, 2> dw{0.0, 0.0};
        for (std::size_t ch = 0; ch < dd.channels; ++ch) dw[ch] = sdt * rng.normal();
        Vec3 next = q + dd.a * dt;
        for (std::size_t ch = 0; ch < dd.channels; ++ch) next += dd.b[ch] * dw[ch];
        const double norm = next.norm();
        if (!std::isfinite(norm)) {
            std::ostringstream os;
            os << "SME integration produced a non-finite state at step " << k + 1;
            throw Error(ErrorKind::Integration, os.str());
        }
        if (norm > 1.0) next /= norm;
        q = next;
        Readout ro;
        ro.dt = dt;
        if (dd.channels == 2) ro.value = DualDyne{sig[0] + dw[0] / dt, sig[1] + dw[1] / dt};
        else ro.value = Dyne{sig[0] + dw[0] / dt};
        tr.readouts.push_back(ro);
        tr.times.push_back(double(k + 1) * dt);
        tr.states.push_back(BlochVector::from(q));
    }
    return tr;
}

}  // namespace fluortraj
