#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string_view>

#include "fluortraj/bloch.hpp"
#include "fluortraj/measure.hpp"
#include "fluortraj/rng.hpp"
#include "fluortraj/trajectory.hpp"

namespace fluortraj {

struct DriftDiffusion {
    Vec3 a = Vec3::Zero();
    std::array<Vec3, 2> b{Vec3::Zero(), Vec3::Zero()};
    std::array<std::string_view, 2> labels{};
    std::size_t channels = 0;
};

struct StratonovichDrift {
    Vec3 A = Vec3::Zero();
};

using Jacobian3 = Eigen::Matrix3d;

Vec3 lindblad_rhs(const BlochVector& q, double gamma);
// omega x q for the drive H = delta sz/2 + Omega sy/2.
Vec3 drive_rhs(const BlochVector& q, double omega, double delta);
BlochVector analytic_decay(const BlochVector& q0, double t, double gamma);

DriftDiffusion sme_coefficients(const BlochVector& q, const SchemeConfig& cfg);
// d b_c / d q, rows are components of b, columns are derivatives.
Jacobian3 diffusion_jacobian(const BlochVector& q, const SchemeConfig& cfg, std::size_t channel);
// Mean readout per channel in the SME picture, r_c = signal_c + xi_c.
std::array<double, 2> sme_signal(const BlochVector& q, const SchemeConfig& cfg);
StratonovichDrift strato_drift(const BlochVector& q, const SchemeConfig& cfg);

Vec3 kraus_rhs(const BlochVector& q, const Readout& ro, const SchemeConfig& cfg);

using Rhs = std::function<Vec3(const BlochVector&)>;

Trajectory integrate_deterministic(const Rhs& rhs, const BlochVector& q0, double T, double dt);
Trajectory integrate_sme(const BlochVector& q0, const SchemeConfig& cfg, double T, double dt,
                         CounterRng& rng);

std::size_t step_count(double T, double dt);

}  // namespace fluortraj
