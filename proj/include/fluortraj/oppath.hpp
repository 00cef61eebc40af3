#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "fluortraj/bloch.hpp"
#include "fluortraj/contour.hpp"
#include "fluortraj/measure.hpp"

namespace fluortraj {

// Homodyne at theta = 0. Polar lives on the pure circle (needs eta = 1); planar is (x, z).
enum class OpCoordinates { Polar, Planar };

struct OpModel {
    OpCoordinates coords = OpCoordinates::Polar;
    double gamma = 1.0;
    double eta = 1.0;

    SchemeConfig scheme_config() const;
    void validate() const;
    std::size_t dim() const { return coords == OpCoordinates::Polar ? 1 : 2; }
};

// Polar: q[0] = theta, p[0] = p_theta. Planar: q = (x, z), p = (p_x, p_z).
struct PhasePoint {
    std::array<double, 2> q{};
    std::array<double, 2> p{};

    static PhasePoint polar(double theta, double p) { return {{theta, 0.0}, {p, 0.0}}; }
    static PhasePoint planar(double x, double z, double px, double pz) { return {{x, z}, {px, pz}}; }
};

struct PhaseVelocity {
    std::array<double, 2> qdot{};
    std::array<double, 2> pdot{};
};

BlochVector op_state(const PhasePoint& pt, const OpModel& m);

double optimal_readout(const PhasePoint& pt, const OpModel& m);
// r eliminated at r*.
double stochastic_hamiltonian(const PhasePoint& pt, const OpModel& m);
// p.F(q, r) + G(q, r) built from kraus_rhs and log_prob_rate.
double composed_hamiltonian(const PhasePoint& pt, double r, const OpModel& m);
PhaseVelocity hamilton_rhs(const PhasePoint& pt, const OpModel& m);
// H - p.qdot
double action_rate(const PhasePoint& pt, const OpModel& m);

struct OPSolution {
    OpModel model;
    std::vector<double> times;
    std::vector<PhasePoint> points;  // polar theta is not wrapped
    std::vector<double> readout;
    std::vector<double> energy;
    std::vector<double> action_rate;
    std::vector<double> action;      // running integral, trapezoid
    double T = 0.0;
    PhasePoint initial;
    BlochVector q_i, q_f;            // boundary data; q_f is the target when produced by shoot

    std::size_t size() const { return times.size(); }
    double total_action() const { return action.empty() ? 0.0 : action.back(); }
    BlochVector state(std::size_t k) const { return op_state(points[k], model); }
};

// RK4; throws BlowUp once |p| exceeds 1e6.
OPSolution hamilton_flow(const PhasePoint& pt0, const OpModel& m, double T, double dt);
PhasePoint advance(const PhasePoint& pt0, const OpModel& m, double T, double dt);

struct StationaryPoint {
    double theta = 0.0;
    double p = 0.0;
    double energy = 0.0;
    double grad_norm = 0.0;
};

struct LevelContours {
    double level = 0.0;
    bool separatrix = false;
    std::vector<Polyline> lines;
};

struct PortraitOptions {
    double theta_lo = -3.141592653589793, theta_hi = 3.141592653589793;
    double p_lo = -3.0, p_hi = 3.0;
    std::size_t n_theta = 401, n_p = 401;
    std::vector<double> levels;
    unsigned threads = 0;
};

struct PhasePortrait {
    Grid2D energy;       // x = theta, y = p
    Grid2D action_rate;
    std::vector<LevelContours> contours;
    std::vector<StationaryPoint> stationary;
    std::vector<std::size_t> regions;  // sizes in cells, largest first
};

// Newton from a seed grid; theta reported in (-pi, pi].
std::vector<StationaryPoint> stationary_points(const OpModel& m, double theta_lo, double theta_hi,
                                               double p_lo, double p_hi);
// Flood fill between the separatrix levels {-gamma, 0}; components under min_fraction of the grid are dropped.
std::vector<std::size_t> separatrix_regions(const Grid2D& energy, double gamma,
                                            const std::vector<StationaryPoint>& fixed,
                                            double min_fraction = 1e-3);
PhasePortrait phase_portrait(const OpModel& m, const PortraitOptions& opts);

struct MomentumGrid {
    double lo = -2.0, hi = 2.0;
    std::size_t n = 21;  // n x n over (p_x, p_z)
    double at(std::size_t i) const { return n == 1 ? lo : lo + (hi - lo) * double(i) / double(n - 1); }
};

struct LmPoint {
    double px = 0.0, pz = 0.0;
    std::vector<BlochVector> states;  // one per requested time
};

struct LmDrop {
    double px = 0.0, pz = 0.0;
    std::string reason;
};

struct LagrangianManifold {
    OpModel model;
    BlochVector q0;
    MomentumGrid grid;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<LmPoint> points;
    std::vector<LmDrop> dropped;
};

LagrangianManifold propagate_lm(const BlochVector& q0, const MomentumGrid& grid, const OpModel& m,
                                const std::vector<double>& times, double dt, unsigned threads = 0);

struct ShootOptions {
    double p_lo = -8.0, p_hi = 8.0;
    std::size_t grid = 400;        // polar scan points; planar uses grid_2d per axis
    std::size_t grid_2d = 41;
    std::size_t refine_iterations = 200;
    double tol = 1e-8;
    double dt = 1e-3;
    unsigned threads = 0;
};

struct ProfileEntry {
    double px = 0.0, pz = 0.0;
    double mismatch = 0.0;  // NaN where the flow blew up
};

struct ShootResult {
    std::vector<OPSolution> roots;  // by action, largest first
    std::vector<ProfileEntry> profile;

    bool found() const { return !roots.empty(); }
};

ShootResult shoot(double theta_i, double theta_f, double T, const OpModel& m, const ShootOptions& opts = {});
ShootResult shoot(const BlochVector& q_i, const BlochVector& q_f, double T, const OpModel& m,
                  const ShootOptions& opts = {});

}  // namespace fluortraj
