#include "fluortraj/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "fluortraj/dynamics.hpp"
#include "fluortraj/error.hpp"
#include "fluortraj/parallel.hpp"

namespace fluortraj {

namespace {

BlochVector raw_bloch(const DensityMatrix& rho) {
    const Matrix2c& m = rho.matrix();
    return {2.0 * m(1, 0).real(), 2.0 * m(1, 0).imag(), m(0, 0).real() - m(1, 1).real()};
}

}  // namespace

std::vector<std::size_t> stored_steps(std::size_t steps, std::size_t decimation) {
    if (decimation == 0) throw Error(ErrorKind::Config, "decimation must be at least 1");
    std::vector<std::size_t> out;
    out.reserve(steps / decimation + 2);
    for (std::size_t k = 0; k <= steps; k += decimation) out.push_back(k);
    if (out.back() != steps) out.push_back(steps);
    return out;
}

Trajectory simulate_trajectory(const SchemeConfig& cfg, const BlochVector& q0, double T,
                               std::uint64_t master_seed, std::size_t index, const SimulationOptions& opts) {
    cfg.validate();
    const std::size_t steps = step_count(T, cfg.dt);
    const std::size_t dec = opts.decimation == 0 ? 1 : opts.decimation;
    const bool keep_ro = opts.keep_readouts && dec == 1;
    CounterRng rng(master_seed, index);

    Trajectory tr;
    tr.scheme = cfg.scheme;
    tr.seed = master_seed;
    const std::size_t stored = steps / dec + 2;
    tr.times.reserve(stored);
    tr.states.reserve(stored);
    if (keep_ro) tr.readouts.reserve(steps);

    DensityMatrix rho = bloch_to_density(q0);
    tr.times.push_back(0.0);
    tr.states.push_back(density_to_bloch(rho));

    const bool driven = cfg.driven();
    const Matrix2c u = drive_unitary(cfg);
    for (std::size_t k = 1; k <= steps; ++k) {
        if (driven) rho = apply_unitary(rho, u);
        const Readout ro = sample_readout(raw_bloch(rho), cfg, rng);
        rho = apply_update(rho, kraus_for(cfg, ro), branch_for(cfg, ro));
        if (keep_ro) tr.readouts.push_back(ro);
        if (k % dec == 0 || k == steps) {
            const BlochVector q = density_to_bloch(rho);
            if (!q.finite() || q.norm() > 1.0 + kBallTolerance) {
                std::ostringstream os;
                os << "trajectory " << index << " left the Bloch ball at step " << k;
                throw Error(ErrorKind::Integration, os.str());
            }
            tr.times.push_back(double(k) * cfg.dt);
            tr.states.push_back(checked_ball(q));
        }
    }
    return tr;
}

Ensemble simulate_selected(const SchemeConfig& cfg, const BlochVector& q0, double T, std::size_t first,
                           std::size_t n, std::uint64_t master_seed,
                           const std::function<bool(const BlochVector&)>& keep, const SimulationOptions& opts) {
    cfg.validate();
    checked_ball(q0);
    step_count(T, cfg.dt);
    Ensemble e;
    e.master_seed = master_seed;
    e.cfg = cfg;
    e.initial = q0;
    e.T = T;
    e.decimation = opts.decimation == 0 ? 1 : opts.decimation;
    e.simulated = n;

    std::vector<std::optional<Trajectory>> slots(n);
    std::vector<std::optional<std::string>> errors(n);
    parallel_for(n, opts.threads, [&](std::size_t i) {
        try {
            Trajectory tr = simulate_trajectory(cfg, q0, T, master_seed, first + i, opts);
            if (!keep || keep(tr.states.back())) slots[i] = std::move(tr);
        } catch (const Error& err) {
            if (err.kind() != ErrorKind::Integration) throw;
            errors[i] = err.what();
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i]) {
            e.trajectories.push_back(std::move(*slots[i]));
            e.indices.push_back(first + i);
        }
        if (errors[i]) e.failures.push_back({first + i, *errors[i]});
    }
    return e;
}

Ensemble simulate_ensemble(const SchemeConfig& cfg, const BlochVector& q0, double T, std::size_t n,
                           std::uint64_t master_seed, const SimulationOptions& opts) {
    if (n == 0) throw Error(ErrorKind::Config, "ensemble size must be at least 1");
    return simulate_selected(cfg, q0, T, 0, n, master_seed, nullptr, opts);
}

MeanTrajectory mean_of(const std::vector<const Trajectory*>& trs) {
    if (trs.empty()) throw Error(ErrorKind::Shape, "mean of an empty set of trajectories");
    const Trajectory& ref = *trs.front();
    const std::size_t m = ref.size();
    for (const Trajectory* t : trs)
        if (t->size() != m || t->times != ref.times) throw Error(ErrorKind::Shape, "trajectories have different time grids");
    MeanTrajectory out;
    out.times = ref.times;
    out.count = trs.size();
    out.mean.resize(m);
    out.standard_error.resize(m);
    const double n = double(trs.size());
    for (std::size_t k = 0; k < m; ++k) {
        Vec3 s = Vec3::Zero();
        for (const Trajectory* t : trs) s += t->states[k].vec();
        const Vec3 mean = s / n;
        Vec3 ss = Vec3::Zero();
        for (const Trajectory* t : trs) {
            const Vec3 d = t->states[k].vec() - mean;
            ss += d.cwiseProduct(d);
        }
        out.mean[k] = BlochVector::from(mean);
        out.standard_error[k] = trs.size() > 1 ? Vec3((ss / (n - 1.0) / n).cwiseSqrt()) : Vec3(Vec3::Zero());
    }
    return out;
}

MeanTrajectory ensemble_mean(const Ensemble& e) {
    std::vector<const Trajectory*> p;
    p.reserve(e.size());
    for (const auto& t : e.trajectories) p.push_back(&t);
    return mean_of(p);
}

bool PostSelection::accepts(const BlochVector& q) const {
    if (kind == Kind::Theta) return std::abs(wrap_angle(to_polar(q).theta - theta_f)) <= window;
    return measure(q, target) <= window;
}

Ensemble post_select(const Ensemble& e, const PostSelection& ps) {
    if (!(ps.window > 0.0)) throw Error(ErrorKind::Config, "post-selection window must be positive");
    Ensemble out;
    out.master_seed = e.master_seed;
    out.cfg = e.cfg;
    out.initial = e.initial;
    out.T = e.T;
    out.decimation = e.decimation;
    out.simulated = e.simulated;
    out.failures = e.failures;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (ps.accepts(e.trajectories[i].states.back())) {
            out.trajectories.push_back(e.trajectories[i]);
            out.indices.push_back(i < e.indices.size() ? e.indices[i] : i);
        }
    }
    return out;
}

std::size_t nearest_sample(const Trajectory& tr, double t) {
    if (tr.times.empty()) throw Error(ErrorKind::Shape, "empty trajectory");
    const double half = tr.times.size() > 1 ? 0.5 * (tr.times[1] - tr.times[0]) : 0.0;
    if (t < tr.times.front() - half - 1e-12 || t > tr.times.back() + half + 1e-12)
        throw Error(ErrorKind::Domain, "time lies outside the trajectory span");
    const auto it = std::lower_bound(tr.times.begin(), tr.times.end(), t);
    if (it == tr.times.begin()) return 0;
    if (it == tr.times.end()) return tr.times.size() - 1;
    const std::size_t hi = std::size_t(it - tr.times.begin());
    return (*it - t) < (t - tr.times[hi - 1]) ? hi : hi - 1;
}

Histogram2D density_histogram(const Ensemble& e, double t, std::size_t bins) {
    if (bins == 0) throw Error(ErrorKind::Config, "histogram needs at least one bin");
    if (e.empty()) throw Error(ErrorKind::Shape, "histogram of an empty ensemble");
    Histogram2D h;
    h.bins = bins;
    h.density.assign(bins * bins, 0.0);
    auto bin = [&](double v) {
        const double f = (v - h.lo) / (h.hi - h.lo) * double(bins);
        return std::size_t(std::clamp(f, 0.0, double(bins) - 1.0));
    };
    const std::size_t k = nearest_sample(e.trajectories.front(), t);
    h.time = e.trajectories.front().times[k];
    for (const auto& tr : e.trajectories) {
        const BlochVector& q = tr.states.at(k);
        h.density[bin(q.z) * bins + bin(q.x)] += 1.0;
    }
    for (double& d : h.density) d /= double(e.size());
    return h;
}

EllipseLaw EllipseLaw::from_initial(const BlochVector& q0, double eta, double gamma) {
    const double w = 1.0 + q0.z;
    if (!(w > 0.0)) throw Error(ErrorKind::Domain, "ellipse law is undefined for the ground state");
    return {eta, 2.0 / w - q0.x * q0.x / (w * w), gamma};
}

double EllipseLaw::u(double t) const { return eta + (u0 - eta) * std::exp(gamma * t); }

namespace {

double ellipse_root(const EllipseLaw& law, double x, double t) {
    const double d = 1.0 - law.u(t) * x * x;
    if (d < 0.0) {
        std::ostringstream os;
        os << "x = " << x << " lies outside the reachable ellipse at t = " << t;
        throw Error(ErrorKind::Domain, os.str());
    }
    return std::sqrt(d);
}

}  // namespace

double EllipseLaw::z_plus(double x, double t) const { return (1.0 + ellipse_root(*this, x, t)) / u(t) - 1.0; }

double EllipseLaw::z_minus(double x, double t) const { return (1.0 - ellipse_root(*this, x, t)) / u(t) - 1.0; }

double ellipse_residual(const BlochVector& q, double t, const EllipseLaw& law) {
    if (std::abs(q.y) > kBallTolerance) throw Error(ErrorKind::Domain, "ellipse law applies to the y = 0 plane");
    const double s = ellipse_root(law, q.x, t);
    const double u = law.u(t);
    const double zp = (1.0 + s) / u - 1.0, zm = (1.0 - s) / u - 1.0;
    return std::min(std::abs(q.z - zp), std::abs(q.z - zm));
}

}  // namespace fluortraj
