#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fluortraj/bloch.hpp"
#include "fluortraj/distance.hpp"
#include "fluortraj/measure.hpp"
#include "fluortraj/trajectory.hpp"

namespace fluortraj {

struct SimulationOptions {
    std::size_t decimation = 1;  // store every k-th state (the final state is always stored)
    bool keep_readouts = false;  // only honored when decimation == 1
    unsigned threads = 0;
};

struct TrajectoryFailure {
    std::size_t index = 0;
    std::string message;
};

struct Ensemble {
    std::uint64_t master_seed = 0;
    SchemeConfig cfg;
    BlochVector initial;
    double T = 0.0;
    std::size_t decimation = 1;
    std::vector<Trajectory> trajectories;
    std::vector<std::size_t> indices;  // stream index of each stored trajectory
    std::vector<TrajectoryFailure> failures;
    std::size_t simulated = 0;         // trajectories generated, before any post-selection

    std::size_t size() const { return trajectories.size(); }
    bool empty() const { return trajectories.empty(); }
};

std::vector<std::size_t> stored_steps(std::size_t steps, std::size_t decimation);

Trajectory simulate_trajectory(const SchemeConfig& cfg, const BlochVector& q0, double T,
                               std::uint64_t master_seed, std::size_t index,
                               const SimulationOptions& opts = {});

// cfg.dt is the step size.
Ensemble simulate_ensemble(const SchemeConfig& cfg, const BlochVector& q0, double T, std::size_t n,
                           std::uint64_t master_seed, const SimulationOptions& opts = {});

// Simulates indices [first, first + n) and keeps only trajectories whose final state passes `keep`.
Ensemble simulate_selected(const SchemeConfig& cfg, const BlochVector& q0, double T, std::size_t first,
                           std::size_t n, std::uint64_t master_seed,
                           const std::function<bool(const BlochVector&)>& keep,
                           const SimulationOptions& opts = {});

struct MeanTrajectory {
    std::vector<double> times;
    std::vector<BlochVector> mean;
    std::vector<Vec3> standard_error;
    std::size_t count = 0;
};

MeanTrajectory ensemble_mean(const Ensemble& e);
MeanTrajectory mean_of(const std::vector<const Trajectory*>& trajectories);

struct PostSelection {
    enum class Kind { Bloch, Theta };
    Kind kind = Kind::Theta;
    BlochVector target;
    double theta_f = 0.0;
    double window = 0.01;
    DistanceMeasure measure = trace_distance_measure();

    bool accepts(const BlochVector& final_state) const;
};

Ensemble post_select(const Ensemble& e, const PostSelection& ps);

struct Histogram2D {
    std::size_t bins = 0;
    double lo = -1.0;
    double hi = 1.0;
    double time = 0.0;
    std::vector<double> density;  // row-major [iz * bins + ix], sums to 1

    double at(std::size_t ix, std::size_t iz) const { return density[iz * bins + ix]; }
    double center(std::size_t i) const { return lo + (double(i) + 0.5) * (hi - lo) / double(bins); }
    double width() const { return (hi - lo) / double(bins); }
};

// Uses the stored sample nearest to t.
Histogram2D density_histogram(const Ensemble& e, double t, std::size_t bins);
std::size_t nearest_sample(const Trajectory& tr, double t);

struct EllipseLaw {
    double eta = 1.0;
    double u0 = 1.0;
    double gamma = 1.0;

    static EllipseLaw from_initial(const BlochVector& q0, double eta, double gamma);
    double u(double t) const;
    double z_plus(double x, double t) const;
    double z_minus(double x, double t) const;
};

double ellipse_residual(const BlochVector& q, double t, const EllipseLaw& law);

}  // namespace fluortraj
