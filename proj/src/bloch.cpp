#include "fluortraj/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fluortraj/error.hpp"

namespace fluortraj {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidState: return "invalid-state";
    case ErrorKind::Config: return "config";
    case ErrorKind::ImpossibleOutcome: return "impossible-outcome";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Integration: return "integration";
    case ErrorKind::BlowUp: return "blow-up";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Io: return "io";
    case ErrorKind::EmptySubset: return "empty-subset";
    }
    return "unknown";
}

double BlochVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

bool BlochVector::finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

bool StateDiagnostics::valid(double tol) const {
    return hermiticity_deviation <= tol && trace_deviation <= tol && min_eigenvalue >= -tol;
}

BlochVector checked_ball(const BlochVector& q) {
    if (!q.finite()) throw Error(ErrorKind::InvalidState, "Bloch vector has non-finite components");
    const double n = q.norm();
    if (n > 1.0 + kBallTolerance) {
        std::ostringstream os;
        os << "Bloch vector norm " << n << " exceeds 1 + " << kBallTolerance;
        throw Error(ErrorKind::InvalidState, os.str());
    }
    if (n > 1.0) return {q.x / n, q.y / n, q.z / n};
    return q;
}

DensityMatrix bloch_to_density(const BlochVector& in) {
    const BlochVector q = checked_ball(in);
    Matrix2c m;
    m(0, 0) = 0.5 * (1.0 + q.z);
    m(0, 1) = Complex(0.5 * q.x, -0.5 * q.y);
    m(1, 0) = Complex(0.5 * q.x, 0.5 * q.y);
    m(1, 1) = 0.5 * (1.0 - q.z);
    return DensityMatrix(m);
}

StateDiagnostics validate_state(const DensityMatrix& rho) {
    const Matrix2c& m = rho.matrix();
    StateDiagnostics d;
    d.hermiticity_deviation = std::max({std::abs(m(0, 1) - std::conj(m(1, 0))),
                                        std::abs(m(0, 0).imag()), std::abs(m(1, 1).imag())});
    const Complex tr = m(0, 0) + m(1, 1);
    d.trace_deviation = std::abs(tr - 1.0);
    const double a = m(0, 0).real();
    const double b = m(1, 1).real();
    const Complex off = 0.5 * (m(0, 1) + std::conj(m(1, 0)));
    const double half = 0.5 * (a - b);
    d.min_eigenvalue = 0.5 * (a + b) - std::sqrt(half * half + std::norm(off));
    d.purity = (m * m).trace().real();
    return d;
}

BlochVector density_to_bloch(const DensityMatrix& rho) {
    const StateDiagnostics d = validate_state(rho);
    if (d.hermiticity_deviation > kMatrixTolerance || d.trace_deviation > kMatrixTolerance) {
        std::ostringstream os;
        os << "density matrix fails validation (hermiticity " << d.hermiticity_deviation
           << ", trace " << d.trace_deviation << ")";
        throw Error(ErrorKind::InvalidState, os.str());
    }
    const Matrix2c& m = rho.matrix();
    const Complex off = 0.5 * (m(1, 0) + std::conj(m(0, 1)));
    return {2.0 * off.real(), 2.0 * off.imag(), m(0, 0).real() - m(1, 1).real()};
}

double purity(const BlochVector& q) { return 0.5 * (1.0 + q.x * q.x + q.y * q.y + q.z * q.z); }

double trace_distance(const BlochVector& a, const BlochVector& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return 0.5 * std::sqrt(dx * dx + dy * dy + dz * dz);
}

double wrap_angle(double theta) {
    constexpr double pi = std::numbers::pi;
    double t = std::remainder(theta, 2.0 * pi);
    if (t <= -pi) t += 2.0 * pi;
    return t;
}

PolarCoordinate to_polar(const BlochVector& q) { return {wrap_angle(std::atan2(q.x, q.z))}; }

BlochVector from_polar(const PolarCoordinate& p) { return {std::sin(p.theta), 0.0, std::cos(p.theta)}; }

}  // namespace fluortraj
