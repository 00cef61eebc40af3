#pragma once

#include <Eigen/Core>
#include <complex>

namespace fluortraj {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kBallTolerance = 1e-9;
inline constexpr double kMatrixTolerance = 1e-12;

struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const;
    bool finite() const;
    Vec3 vec() const { return {x, y, z}; }
    static BlochVector from(const Vec3& v) { return {v[0], v[1], v[2]}; }

    friend bool operator==(const BlochVector&, const BlochVector&) = default;
};

// Basis order (|e>, |g>): rho(0,0) = rho_ee.
class DensityMatrix {
public:
    DensityMatrix() : m_(Matrix2c::Zero()) { m_(0, 0) = 1.0; }
    explicit DensityMatrix(const Matrix2c& m) : m_(m) {}

    const Matrix2c& matrix() const { return m_; }
    Complex ee() const { return m_(0, 0); }
    Complex eg() const { return m_(0, 1); }
    Complex ge() const { return m_(1, 0); }
    Complex gg() const { return m_(1, 1); }

private:
    Matrix2c m_;
};

struct StateDiagnostics {
    double hermiticity_deviation = 0.0;
    double trace_deviation = 0.0;
    double min_eigenvalue = 0.0;
    double purity = 0.0;

    bool valid(double tol = kMatrixTolerance) const;
};

struct PolarCoordinate {
    double theta = 0.0;
};

DensityMatrix bloch_to_density(const BlochVector& q);
BlochVector density_to_bloch(const DensityMatrix& rho);
StateDiagnostics validate_state(const DensityMatrix& rho);

// Throws InvalidState for norms beyond 1 + kBallTolerance, pulls marginal overshoot back onto the sphere.
BlochVector checked_ball(const BlochVector& q);

double purity(const BlochVector& q);
double trace_distance(const BlochVector& a, const BlochVector& b);

// Maps into (-pi, pi].
double wrap_angle(double theta);
PolarCoordinate to_polar(const BlochVector& q);
BlochVector from_polar(const PolarCoordinate& p);

namespace states {
inline BlochVector excited() { return {0.0, 0.0, 1.0}; }
inline BlochVector ground() { return {0.0, 0.0, -1.0}; }
inline BlochVector plus_x() { return {1.0, 0.0, 0.0}; }
inline BlochVector minus_x() { return {-1.0, 0.0, 0.0}; }
inline BlochVector plus_y() { return {0.0, 1.0, 0.0}; }
inline BlochVector mixed() { return {0.0, 0.0, 0.0}; }
}  // namespace states

}  // namespace fluortraj
