#include "fluortraj/measure.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "fluortraj/error.hpp"

namespace fluortraj {

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI(0.0, 1.0);

KrausSet make_set(Scheme s, std::string_view l0, const Matrix2c& m0) {
    KrausSet ks;
    ks.scheme = s;
    ks.slots[0] = {l0, m0};
    ks.count = 1;
    return ks;
}

KrausSet make_set(Scheme s, std::string_view l0, const Matrix2c& m0, std::string_view l1,
                  const Matrix2c& m1) {
    KrausSet ks = make_set(s, l0, m0);
    ks.slots[1] = {l1, m1};
    ks.count = 2;
    return ks;
}

const Dyne& expect_dyne(const Readout& ro) {
    if (const auto* d = std::get_if<Dyne>(&ro.value)) return *d;
    throw Error(ErrorKind::Config, "readout does not match a single-quadrature scheme");
}

const DualDyne& expect_dual(const Readout& ro) {
    if (const auto* d = std::get_if<DualDyne>(&ro.value)) return *d;
    throw Error(ErrorKind::Config, "readout does not match the heterodyne scheme");
}

const Jump& expect_jump(const Readout& ro) {
    if (const auto* d = std::get_if<Jump>(&ro.value)) return *d;
    throw Error(ErrorKind::Config, "readout does not match the photodetection scheme");
}

// Rotated quadratures (x cos - y sin, y cos + x sin).
std::array<double, 2> quadratures(const BlochVector& q, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {q.x * c - q.y * s, q.y * c + q.x * s};
}

}  // namespace

const char* to_string(Scheme s) {
    switch (s) {
    case Scheme::Photodetect: return "photodetect";
    case Scheme::Heterodyne: return "heterodyne";
    case Scheme::Homodyne: return "homodyne";
    case Scheme::HomodyneInefficient: return "homodyne-inefficient";
    }
    return "unknown";
}

Scheme scheme_from_string(std::string_view name) {
    if (name == "photodetect" || name == "photodetection") return Scheme::Photodetect;
    if (name == "heterodyne") return Scheme::Heterodyne;
    if (name == "homodyne") return Scheme::Homodyne;
    if (name == "homodyne-inefficient" || name == "inefficient") return Scheme::HomodyneInefficient;
    throw Error(ErrorKind::Config, "unknown scheme '" + std::string(name) + "'");
}

void SchemeConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
    if (!std::isfinite(gamma) || !std::isfinite(dt) || !std::isfinite(theta) || !std::isfinite(eta) ||
        !std::isfinite(omega) || !std::isfinite(delta))
        fail("scheme configuration has non-finite fields");
    if (gamma <= 0.0) fail("gamma must be positive");
    if (dt <= 0.0) fail("dt must be positive");
    const double eps = epsilon();
    if (!(eps > 0.0 && eps < 1.0)) {
        std::ostringstream os;
        os << "epsilon = gamma*dt = " << eps << " must lie in (0, 1)";
        fail(os.str());
    }
    if (eta < 0.0 || eta > 1.0) fail("eta must lie in [0, 1]");
}

KrausSet kraus_photodetect(const SchemeConfig& cfg) {
    cfg.validate();
    const double eps = cfg.epsilon();
    Matrix2c m0 = Matrix2c::Zero(), m1 = Matrix2c::Zero();
    m0(0, 0) = std::sqrt(1.0 - eps);
    m0(1, 1) = 1.0;
    m1(1, 0) = std::sqrt(eps);
    return make_set(Scheme::Photodetect, "M0", m0, "M1", m1);
}

KrausSet kraus_heterodyne(const SchemeConfig& cfg, const DualDyne& ro) {
    cfg.validate();
    const double eps = cfg.epsilon();
    const Complex alpha =
        std::sqrt(cfg.dt / 2.0) * std::exp(kI * cfg.theta) * Complex(ro.r_i, -ro.r_q);
    const double g = std::exp(-0.5 * std::norm(alpha));
    Matrix2c m;
    m << std::sqrt(1.0 - eps), 0.0, std::sqrt(eps) * std::conj(alpha), 1.0;
    return make_set(Scheme::Heterodyne, "M_alpha", g * m);
}

KrausSet kraus_homodyne(const SchemeConfig& cfg, const Dyne& ro) {
    cfg.validate();
    const double dt = cfg.dt;
    const double pre = std::pow(dt / (2.0 * kPi), 0.25) * std::exp(-ro.r * ro.r * dt / 4.0);
    Matrix2c m;
    m << std::sqrt(1.0 - cfg.epsilon()), 0.0,
        dt * std::sqrt(cfg.gamma) * ro.r * std::exp(-kI * cfg.theta), 1.0;
    return make_set(Scheme::Homodyne, "M_x", pre * m);
}

KrausSet kraus_homodyne_inefficient(const SchemeConfig& cfg, const Dyne& ro) {
    cfg.validate();
    const double eps = cfg.epsilon();
    const double X = std::sqrt(cfg.dt / 2.0) * ro.r;
    const double g = std::exp(-0.5 * X * X);
    Matrix2c m0, m1;
    m0 << std::sqrt(1.0 - eps), 0.0, std::sqrt(2.0 * eps * cfg.eta) * X * std::exp(-kI * cfg.theta), 1.0;
    m1 << 0.0, 0.0, std::sqrt(eps * (1.0 - cfg.eta)), 0.0;
    return make_set(Scheme::HomodyneInefficient, "M_x0", g * m0, "M_x1", g * m1);
}

KrausSet kraus_for(const SchemeConfig& cfg, const Readout& ro) {
    switch (cfg.scheme) {
    case Scheme::Photodetect: expect_jump(ro); return kraus_photodetect(cfg);
    case Scheme::Heterodyne: return kraus_heterodyne(cfg, expect_dual(ro));
    case Scheme::Homodyne:
        if (cfg.eta < 1.0) return kraus_homodyne_inefficient(cfg, expect_dyne(ro));
        return kraus_homodyne(cfg, expect_dyne(ro));
    case Scheme::HomodyneInefficient: return kraus_homodyne_inefficient(cfg, expect_dyne(ro));
    }
    throw Error(ErrorKind::Config, "unknown scheme");
}

std::optional<std::size_t> branch_for(const SchemeConfig& cfg, const Readout& ro) {
    if (cfg.scheme == Scheme::Photodetect) return expect_jump(ro).clicked ? 1u : 0u;
    return std::nullopt;
}

DensityMatrix apply_update(const DensityMatrix& rho, const KrausSet& ks,
                           std::optional<std::size_t> branch) {
    const Matrix2c& r = rho.matrix();
    Matrix2c out = Matrix2c::Zero();
    if (branch) {
        if (*branch >= ks.count) throw Error(ErrorKind::Config, "Kraus branch index out of range");
        const Matrix2c& m = ks.slots[*branch].m;
        out = m * r * m.adjoint();
    } else {
        for (const auto& op : ks.ops()) out += op.m * r * op.m.adjoint();
    }
    const double tr = out.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr))
        throw Error(ErrorKind::ImpossibleOutcome, "selected measurement outcome has zero probability");
    out /= tr;
    out = 0.5 * (out + out.adjoint()).eval();
    return DensityMatrix(out);
}

Matrix2c drive_unitary(const SchemeConfig& cfg) {
    const double w = std::hypot(cfg.omega, cfg.delta);
    if (w == 0.0) return Matrix2c::Identity();
    const double phi = 0.5 * w * cfg.dt;
    const double ny = cfg.omega / w, nz = cfg.delta / w;
    Matrix2c sy, sz;
    sy << 0.0, -kI, kI, 0.0;
    sz << 1.0, 0.0, 0.0, -1.0;
    return std::cos(phi) * Matrix2c::Identity() - kI * std::sin(phi) * (ny * sy + nz * sz);
}

DensityMatrix apply_unitary(const DensityMatrix& rho, const Matrix2c& u) {
    Matrix2c out = u * rho.matrix() * u.adjoint();
    out = 0.5 * (out + out.adjoint()).eval();
    return DensityMatrix(out);
}

double click_probability(const BlochVector& q, const SchemeConfig& cfg) {
    return cfg.epsilon() * (1.0 + q.z) / 2.0;
}

double effective_eta(const SchemeConfig& cfg) {
    switch (cfg.scheme) {
    case Scheme::Homodyne:
    case Scheme::HomodyneInefficient: return cfg.eta;
    default: return 1.0;
    }
}

std::array<double, 2> readout_mean(const BlochVector& q, const SchemeConfig& cfg) {
    const auto s = quadratures(q, cfg.theta);
    switch (cfg.scheme) {
    case Scheme::Heterodyne: {
        const double k = std::sqrt(cfg.gamma / 2.0);
        return {k * s[0], k * s[1]};
    }
    case Scheme::Homodyne:
    case Scheme::HomodyneInefficient: return {std::sqrt(cfg.eta * cfg.gamma) * s[0], 0.0};
    case Scheme::Photodetect: break;
    }
    throw Error(ErrorKind::Config, "photodetection has no dyne signal mean");
}

Readout sample_readout(const BlochVector& q, const SchemeConfig& cfg, CounterRng& rng) {
    Readout ro;
    ro.dt = cfg.dt;
    const double sd = 1.0 / std::sqrt(cfg.dt);
    switch (cfg.scheme) {
    case Scheme::Photodetect: ro.value = Jump{rng.uniform() < click_probability(q, cfg)}; break;
    case Scheme::Heterodyne: {
        const auto m = readout_mean(q, cfg);
        const double a = rng.normal();
        const double b = rng.normal();
        ro.value = DualDyne{m[0] + sd * a, m[1] + sd * b};
        break;
    }
    case Scheme::Homodyne:
    case Scheme::HomodyneInefficient: ro.value = Dyne{readout_mean(q, cfg)[0] + sd * rng.normal()}; break;
    }
    return ro;
}

Readout sample_readout(const DensityMatrix& rho, const SchemeConfig& cfg, CounterRng& rng) {
    return sample_readout(density_to_bloch(rho), cfg, rng);
}

double log_prob_rate(const BlochVector& q, const Readout& ro, const SchemeConfig& cfg) {
    switch (cfg.scheme) {
    case Scheme::Photodetect:
        expect_jump(ro);
        throw Error(ErrorKind::Config, "jump outcomes have no O(dt) log-probability rate");
    case Scheme::Heterodyne: {
        const auto& d = expect_dual(ro);
        const auto m = readout_mean(q, cfg);
        const double ei = d.r_i - m[0], eq = d.r_q - m[1];
        return -0.5 * (ei * ei + eq * eq) + 0.5 * (m[0] * m[0] + m[1] * m[1]) -
               0.5 * cfg.gamma * (1.0 + q.z);
    }
    case Scheme::Homodyne:
    case Scheme::HomodyneInefficient: {
        const auto& d = expect_dyne(ro);
        const double m = readout_mean(q, cfg)[0];
        const double e = d.r - m;
        return -0.5 * e * e + 0.5 * m * m - 0.5 * cfg.eta * cfg.gamma * (1.0 + q.z);
    }
    }
    throw Error(ErrorKind::Config, "unknown scheme");
}

double log_prob_rate(const DensityMatrix& rho, const Readout& ro, const SchemeConfig& cfg) {
    return log_prob_rate(density_to_bloch(rho), ro, cfg);
}

double log_prob_offset(const SchemeConfig& cfg) {
    switch (cfg.scheme) {
    case Scheme::Heterodyne: return std::log(cfg.dt / (2.0 * kPi));
    case Scheme::Homodyne:
    case Scheme::HomodyneInefficient: return 0.5 * std::log(cfg.dt / (2.0 * kPi));
    case Scheme::Photodetect: break;
    }
    throw Error(ErrorKind::Config, "jump outcomes have no density offset");
}

GaussHermite gauss_hermite(std::size_t n) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t i = 1; i < n; ++i) {
        const double b = std::sqrt(double(i) / 2.0);
        J(Eigen::Index(i), Eigen::Index(i - 1)) = b;
        J(Eigen::Index(i - 1), Eigen::Index(i)) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussHermite gh;
    gh.nodes.resize(n);
    gh.weights.resize(n);
    const double mu0 = std::sqrt(kPi);
    for (std::size_t i = 0; i < n; ++i) {
        gh.nodes[i] = es.eigenvalues()(Eigen::Index(i));
        const double v = es.eigenvectors()(0, Eigen::Index(i));
        gh.weights[i] = mu0 * v * v;
    }
    return gh;
}

PovmReport povm_completeness(const SchemeConfig& cfg, std::size_t nodes) {
    cfg.validate();
    using Matrix2ld = Eigen::Matrix<std::complex<long double>, 2, 2>;
    auto accumulate = [](Matrix2ld& acc, const Matrix2c& m, long double w) {
        const Matrix2ld ml = m.cast<std::complex<long double>>();
        acc += std::complex<long double>(w) * (ml.adjoint() * ml);
    };
    Matrix2ld acc = Matrix2ld::Zero();
    double scale = 1.0;
    if (cfg.scheme == Scheme::Photodetect) {
        for (const auto& op : kraus_photodetect(cfg).ops()) accumulate(acc, op.m, 1.0L);
    } else {
        const GaussHermite gh = gauss_hermite(nodes);
        // r = s*sqrt(2/dt) maps the readout Gaussian onto exp(-s^2); each operator carries
        // exp(-s^2/2) per readout axis, which is stripped before squaring.
        const double jac = std::sqrt(2.0 / cfg.dt);
        const bool ideal_hom = cfg.scheme == Scheme::Homodyne && cfg.eta >= 1.0;
        if (cfg.scheme == Scheme::Heterodyne) {
            const long double norm = (long double)(jac * jac * cfg.dt / (2.0 * kPi));
            for (std::size_t i = 0; i < nodes; ++i) {
                for (std::size_t j = 0; j < nodes; ++j) {
                    const double si = gh.nodes[i], sj = gh.nodes[j];
                    const Matrix2c m = kraus_heterodyne(cfg, {si * jac, sj * jac})[0].m *
                                       std::exp(0.5 * (si * si + sj * sj));
                    accumulate(acc, m, (long double)gh.weights[i] * gh.weights[j] * norm);
                }
            }
        } else {
            for (std::size_t i = 0; i < nodes; ++i) {
                const double s = gh.nodes[i];
                const KrausSet ks = ideal_hom ? kraus_homodyne(cfg, {s * jac}) : kraus_homodyne_inefficient(cfg, {s * jac});
                for (const auto& op : ks.ops()) accumulate(acc, op.m * std::exp(0.5 * s * s), gh.weights[i] * jac);
            }
            if (!ideal_hom) scale = double(0.5L * (acc(0, 0).real() + acc(1, 1).real()));
        }
    }
    PovmReport rep;
    rep.scale = scale;
    if (scale != 1.0) rep.nominal_scale = std::sqrt(2.0 * kPi / cfg.dt);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) rep.integral(i, j) = Complex(acc(i, j));
    const Matrix2c dev = rep.integral / scale - Matrix2c::Identity();
    rep.deviation = dev.cwiseAbs().maxCoeff();
    return rep;
}

}  // namespace fluortraj
