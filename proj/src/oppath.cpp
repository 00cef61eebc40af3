#include "fluortraj/oppath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "fluortraj/dynamics.hpp"
#include "fluortraj/error.hpp"
#include "fluortraj/parallel.hpp"

namespace fluortraj {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kBlowUp = 1e6;

bool polar(const OpModel& m) { return m.coords == OpCoordinates::Polar; }

struct PolarTerms {
    double s, c, w;
};

PolarTerms polar_terms(double theta) { return {std::sin(theta), std::cos(theta), 1.0 + std::cos(theta)}; }

PhasePoint axpy(const PhasePoint& a, double h, const PhaseVelocity& v) {
    PhasePoint r = a;
    for (int i = 0; i < 2; ++i) {
        r.q[i] += h * v.qdot[i];
        r.p[i] += h * v.pdot[i];
    }
    return r;
}

PhasePoint rk4(const PhasePoint& x, const OpModel& m, double h) {
    const PhaseVelocity k1 = hamilton_rhs(x, m);
    const PhaseVelocity k2 = hamilton_rhs(axpy(x, 0.5 * h, k1), m);
    const PhaseVelocity k3 = hamilton_rhs(axpy(x, 0.5 * h, k2), m);
    const PhaseVelocity k4 = hamilton_rhs(axpy(x, h, k3), m);
    PhasePoint r = x;
    for (int i = 0; i < 2; ++i) {
        r.q[i] += h / 6.0 * (k1.qdot[i] + 2.0 * k2.qdot[i] + 2.0 * k3.qdot[i] + k4.qdot[i]);
        r.p[i] += h / 6.0 * (k1.pdot[i] + 2.0 * k2.pdot[i] + 2.0 * k3.pdot[i] + k4.pdot[i]);
    }
    return r;
}

void check_blowup(const PhasePoint& x, double t) {
    for (int i = 0; i < 2; ++i) {
        if (!std::isfinite(x.q[i]) || !std::isfinite(x.p[i]) || std::abs(x.p[i]) > kBlowUp) {
            std::ostringstream os;
            os << "optimal-path flow diverged at t = " << t;
            throw Error(ErrorKind::BlowUp, os.str());
        }
    }
}

std::size_t flow_steps(double T, double dt) {
    if (!(T >= 0.0) || !(dt > 0.0) || !std::isfinite(T))
        throw Error(ErrorKind::Config, "flow span requires T >= 0 and dt > 0");
    return std::max<std::size_t>(T > 0.0 ? 1 : 0, std::size_t(std::llround(T / dt)));
}

std::array<double, 2> polar_gradient(const OpModel& m, double theta, double p) {
    const PhaseVelocity v = hamilton_rhs(PhasePoint::polar(theta, p), m);
    return {-v.pdot[0], v.qdot[0]};
}

}  // namespace

SchemeConfig OpModel::scheme_config() const {
    SchemeConfig cfg;
    cfg.scheme = eta < 1.0 ? Scheme::HomodyneInefficient : Scheme::Homodyne;
    cfg.gamma = gamma;
    cfg.eta = eta;
    cfg.theta = 0.0;
    return cfg;
}

void OpModel::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorKind::Config, "gamma must be positive");
    if (!(eta > 0.0 && eta <= 1.0)) throw Error(ErrorKind::Config, "optimal paths need eta in (0, 1]");
    if (coords == OpCoordinates::Polar && eta != 1.0)
        throw Error(ErrorKind::Config, "the polar restriction only holds for eta = 1");
}

BlochVector op_state(const PhasePoint& pt, const OpModel& m) {
    if (polar(m)) return {std::sin(pt.q[0]), 0.0, std::cos(pt.q[0])};
    return {pt.q[0], 0.0, pt.q[1]};
}

double optimal_readout(const PhasePoint& pt, const OpModel& m) {
    if (polar(m)) {
        const auto t = polar_terms(pt.q[0]);
        return std::sqrt(m.gamma) * (t.s + pt.p[0] * t.w);
    }
    const double x = pt.q[0], z = pt.q[1], w = 1.0 + z;
    const double k = std::sqrt(m.gamma * m.eta);
    return k * x + k * (pt.p[0] * (w - x * x) - pt.p[1] * w * x);
}

double stochastic_hamiltonian(const PhasePoint& pt, const OpModel& m) {
    const double g = m.gamma;
    if (polar(m)) {
        const auto t = polar_terms(pt.q[0]);
        const double p = pt.p[0];
        return g * (0.5 * p * p * t.w * t.w + p * t.s * (1.5 + t.c) - 0.5 * t.c * t.w);
    }
    const double x = pt.q[0], z = pt.q[1], w = 1.0 + z, eta = m.eta;
    const double k = std::sqrt(g * eta);
    const double px = pt.p[0], pz = pt.p[1];
    const double f0x = 0.5 * g * x * (eta + eta * z - 1.0);
    const double f0z = 0.5 * g * w * (eta + eta * z - 2.0);
    const double P = k * (px * (w - x * x) - pz * w * x);
    const double mu = k * x;
    return px * f0x + pz * f0z + mu * P + 0.5 * P * P + 0.5 * eta * g * (x * x - z - 1.0);
}

double composed_hamiltonian(const PhasePoint& pt, double r, const OpModel& m) {
    const SchemeConfig cfg = m.scheme_config();
    const BlochVector q = op_state(pt, m);
    const Readout ro{Dyne{r}, cfg.dt};
    const Vec3 F = kraus_rhs(q, ro, cfg);
    const double G = log_prob_rate(q, ro, cfg);
    if (polar(m)) {
        const double fth = q.z * F.x() - q.x * F.z();
        return pt.p[0] * fth + G;
    }
    return pt.p[0] * F.x() + pt.p[1] * F.z() + G;
}

PhaseVelocity hamilton_rhs(const PhasePoint& pt, const OpModel& m) {
    const double g = m.gamma;
    PhaseVelocity v;
    if (polar(m)) {
        const double th = pt.q[0], p = pt.p[0];
        const auto t = polar_terms(th);
        v.qdot[0] = g * (p * t.w * t.w + t.s * (1.5 + t.c));
        const double dth = -p * p * t.w * t.s + p * (1.5 * t.c + std::cos(2.0 * th)) + 0.5 * t.s +
                           0.5 * std::sin(2.0 * th);
        v.pdot[0] = -g * dth;
        return v;
    }
    const double x = pt.q[0], z = pt.q[1], w = 1.0 + z, eta = m.eta;
    const double k = std::sqrt(g * eta);
    const double px = pt.p[0], pz = pt.p[1];
    const double r = optimal_readout(pt, m);
    v.qdot[0] = 0.5 * g * x * (eta + eta * z - 1.0) + r * k * (w - x * x);
    v.qdot[1] = 0.5 * g * w * (eta + eta * z - 2.0) - r * k * w * x;
    const double fxx = 0.5 * g * (eta + eta * z - 1.0) - 2.0 * r * k * x;
    const double fxz = 0.5 * g * eta * x + r * k;
    const double fzx = -r * k * w;
    const double fzz = 0.5 * g * (eta + eta * z - 2.0) + 0.5 * g * eta * w - r * k * x;
    const double gx = k * (r - k * x) + eta * g * x;
    const double gz = -0.5 * eta * g;
    v.pdot[0] = -(px * fxx + pz * fzx + gx);
    v.pdot[1] = -(px * fxz + pz * fzz + gz);
    return v;
}

double action_rate(const PhasePoint& pt, const OpModel& m) {
    const PhaseVelocity v = hamilton_rhs(pt, m);
    return stochastic_hamiltonian(pt, m) - (pt.p[0] * v.qdot[0] + pt.p[1] * v.qdot[1]);
}

PhasePoint advance(const PhasePoint& pt0, const OpModel& m, double T, double dt) {
    const std::size_t n = flow_steps(T, dt);
    const double h = n ? T / double(n) : 0.0;
    PhasePoint x = pt0;
    check_blowup(x, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        x = rk4(x, m, h);
        check_blowup(x, double(k + 1) * h);
    }
    return x;
}

OPSolution hamilton_flow(const PhasePoint& pt0, const OpModel& m, double T, double dt) {
    m.validate();
    const std::size_t n = flow_steps(T, dt);
    const double h = n ? T / double(n) : 0.0;
    OPSolution sol;
    sol.model = m;
    sol.T = T;
    sol.initial = pt0;
    sol.q_i = op_state(pt0, m);
    auto record = [&](const PhasePoint& x, double t) {
        sol.times.push_back(t);
        sol.points.push_back(x);
        sol.readout.push_back(optimal_readout(x, m));
        sol.energy.push_back(stochastic_hamiltonian(x, m));
        sol.action_rate.push_back(action_rate(x, m));
        if (sol.action.empty())
            sol.action.push_back(0.0);
        else {
            const std::size_t k = sol.action_rate.size() - 1;
            sol.action.push_back(sol.action.back() + 0.5 * h * (sol.action_rate[k] + sol.action_rate[k - 1]));
        }
    };
    PhasePoint x = pt0;
    check_blowup(x, 0.0);
    record(x, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        x = rk4(x, m, h);
        check_blowup(x, double(k + 1) * h);
        record(x, double(k + 1) * h);
    }
    sol.q_f = op_state(x, m);
    return sol;
}

std::vector<StationaryPoint> stationary_points(const OpModel& m, double theta_lo, double theta_hi,
                                               double p_lo, double p_hi) {
    if (!polar(m)) throw Error(ErrorKind::Config, "stationary-point search is for the polar Hamiltonian");
    std::vector<StationaryPoint> found;
    const int nt = 48, np = 24;
    const double slack = 1e-9;
    for (int i = 0; i <= nt; ++i) {
        for (int j = 0; j <= np; ++j) {
            double th = theta_lo + (theta_hi - theta_lo) * i / nt;
            double p = p_lo + (p_hi - p_lo) * j / np;
            bool ok = false;
            for (int it = 0; it < 60; ++it) {
                const auto gr = polar_gradient(m, th, p);
                if (std::hypot(gr[0], gr[1]) < 1e-14) {
                    ok = true;
                    break;
                }
                const double e = 1e-6;
                const auto a1 = polar_gradient(m, th + e, p), a0 = polar_gradient(m, th - e, p);
                const auto b1 = polar_gradient(m, th, p + e), b0 = polar_gradient(m, th, p - e);
                Eigen::Matrix2d J;
                J << (a1[0] - a0[0]) / (2 * e), (b1[0] - b0[0]) / (2 * e),
                     (a1[1] - a0[1]) / (2 * e), (b1[1] - b0[1]) / (2 * e);
                const Eigen::Vector2d d = J.completeOrthogonalDecomposition().solve(Eigen::Vector2d(gr[0], gr[1]));
                th -= d[0];
                p -= d[1];
                if (!std::isfinite(th) || !std::isfinite(p) || std::abs(p) > 1e3) break;
                if (it == 59) {
                    const auto g2 = polar_gradient(m, th, p);
                    ok = std::hypot(g2[0], g2[1]) < 1e-10;
                }
            }
            if (!ok) continue;
            th = wrap_angle(th);
            if (p < p_lo - slack || p > p_hi + slack) continue;
            const bool in_range = (th >= theta_lo - slack && th <= theta_hi + slack) ||
                                  (theta_hi - theta_lo >= 2 * kPi - 1e-12);
            if (!in_range) continue;
            bool dup = false;
            for (const auto& s : found)
                if (std::abs(wrap_angle(s.theta - th)) < 1e-6 && std::abs(s.p - p) < 1e-6) dup = true;
            if (dup) continue;
            const auto gr = polar_gradient(m, th, p);
            found.push_back({th, p, stochastic_hamiltonian(PhasePoint::polar(th, p), m), std::hypot(gr[0], gr[1])});
        }
    }
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.theta < b.theta; });
    return found;
}

std::vector<std::size_t> separatrix_regions(const Grid2D& energy, double gamma,
                                            const std::vector<StationaryPoint>& fixed, double min_fraction) {
    const std::size_t cx = energy.nx - 1, cy = energy.ny - 1;
    std::vector<char> open(cx * cy, 1);
    const double levels[2] = {-gamma, 0.0};
    const double wt = energy.x1 - energy.x0, wp = energy.y1 - energy.y0;
    for (std::size_t j = 0; j < cy; ++j) {
        for (std::size_t i = 0; i < cx; ++i) {
            const double v[4] = {energy.at(i, j), energy.at(i + 1, j), energy.at(i + 1, j + 1), energy.at(i, j + 1)};
            const double lo = *std::min_element(v, v + 4), hi = *std::max_element(v, v + 4);
            for (double L : levels)
                if (lo <= L && L <= hi) open[j * cx + i] = 0;
            const double tc = 0.5 * (energy.x(i) + energy.x(i + 1)), pc = 0.5 * (energy.y(j) + energy.y(j + 1));
            for (const auto& f : fixed) {
                for (double shift : {-2 * kPi, 0.0, 2 * kPi}) {
                    const double dt = (tc - f.theta - shift) / wt, dp = (pc - f.p) / wp;
                    if (std::hypot(dt, dp) < 0.03) open[j * cx + i] = 0;
                }
            }
        }
    }
    auto sizes = connected_components(open, cx, cy);
    const double floor = min_fraction * double(cx * cy);
    sizes.erase(std::remove_if(sizes.begin(), sizes.end(), [&](std::size_t s) { return double(s) <= floor; }),
                sizes.end());
    return sizes;
}

PhasePortrait phase_portrait(const OpModel& m, const PortraitOptions& o) {
    m.validate();
    if (!polar(m)) throw Error(ErrorKind::Config, "phase portraits use the polar Hamiltonian");
    if (!std::isfinite(o.theta_lo) || !std::isfinite(o.theta_hi) || !std::isfinite(o.p_lo) ||
        !std::isfinite(o.p_hi) || o.theta_hi <= o.theta_lo || o.p_hi <= o.p_lo || o.n_theta < 2 || o.n_p < 2)
        throw Error(ErrorKind::Config, "portrait ranges must be finite and non-empty");
    PhasePortrait out;
    out.energy = Grid2D{o.theta_lo, o.theta_hi, o.p_lo, o.p_hi, o.n_theta, o.n_p, {}};
    out.energy.values.assign(o.n_theta * o.n_p, 0.0);
    out.action_rate = out.energy;
    parallel_for(o.n_p, resolve_threads(o.threads), [&](std::size_t j) {
        for (std::size_t i = 0; i < o.n_theta; ++i) {
            const PhasePoint pt = PhasePoint::polar(out.energy.x(i), out.energy.y(j));
            out.energy.values[j * o.n_theta + i] = stochastic_hamiltonian(pt, m);
            out.action_rate.values[j * o.n_theta + i] = action_rate(pt, m);
        }
    });
    for (double L : o.levels) out.contours.push_back({L, false, marching_squares(out.energy, L)});
    for (double L : {-m.gamma, 0.0}) out.contours.push_back({L, true, marching_squares(out.energy, L)});
    out.stationary = stationary_points(m, o.theta_lo, o.theta_hi, o.p_lo, o.p_hi);
    out.regions = separatrix_regions(out.energy, m.gamma, out.stationary);
    return out;
}

LagrangianManifold propagate_lm(const BlochVector& q0, const MomentumGrid& grid, const OpModel& m,
                                const std::vector<double>& times, double dt, unsigned threads) {
    m.validate();
    if (polar(m)) throw Error(ErrorKind::Config, "Lagrangian manifolds are propagated in (x, z)");
    if (grid.n == 0) throw Error(ErrorKind::Config, "momentum grid is empty");
    for (std::size_t k = 0; k < times.size(); ++k)
        if (!(times[k] >= 0.0) || (k && times[k] < times[k - 1]))
            throw Error(ErrorKind::Config, "manifold times must be non-negative and sorted");
    const BlochVector start = checked_ball(q0);
    LagrangianManifold lm;
    lm.model = m;
    lm.q0 = start;
    lm.grid = grid;
    lm.dt = dt;
    lm.times = times;
    const std::size_t total = grid.n * grid.n;
    std::vector<LmPoint> pts(total);
    std::vector<std::string> why(total);
    parallel_for(total, resolve_threads(threads), [&](std::size_t idx) {
        const double px = grid.at(idx % grid.n), pz = grid.at(idx / grid.n);
        LmPoint& lp = pts[idx];
        lp.px = px;
        lp.pz = pz;
        PhasePoint x = PhasePoint::planar(start.x, start.z, px, pz);
        double t = 0.0;
        try {
            for (double target : times) {
                x = advance(x, m, target - t, dt);
                t = target;
                lp.states.push_back(op_state(x, m));
            }
        } catch (const Error& e) {
            why[idx] = e.what();
        }
    });
    for (std::size_t idx = 0; idx < total; ++idx) {
        if (why[idx].empty())
            lm.points.push_back(std::move(pts[idx]));
        else
            lm.dropped.push_back({pts[idx].px, pts[idx].pz, why[idx]});
    }
    return lm;
}

namespace {

double polar_mismatch(double p0, double theta_i, double theta_f, double T, const OpModel& m, double dt) {
    try {
        const PhasePoint x = advance(PhasePoint::polar(theta_i, p0), m, T, dt);
        return wrap_angle(x.q[0] - theta_f);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::BlowUp) return std::numeric_limits<double>::quiet_NaN();
        throw;
    }
}

std::array<double, 2> planar_mismatch(double px, double pz, const BlochVector& qi, const BlochVector& qf,
                                      double T, const OpModel& m, double dt) {
    try {
        const PhasePoint x = advance(PhasePoint::planar(qi.x, qi.z, px, pz), m, T, dt);
        return {x.q[0] - qf.x, x.q[1] - qf.z};
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::BlowUp) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            return {nan, nan};
        }
        throw;
    }
}

void rank(ShootResult& res) {
    std::stable_sort(res.roots.begin(), res.roots.end(),
                     [](const OPSolution& a, const OPSolution& b) { return a.total_action() > b.total_action(); });
}

}  // namespace

ShootResult shoot(double theta_i, double theta_f, double T, const OpModel& m, const ShootOptions& o) {
    m.validate();
    if (!polar(m)) throw Error(ErrorKind::Config, "angle boundary data needs the polar model");
    if (!(T > 0.0)) throw Error(ErrorKind::Config, "shooting needs T > 0");
    if (o.grid < 2 || !(o.p_hi > o.p_lo)) throw Error(ErrorKind::Config, "shooting grid is empty");
    ShootResult res;
    const std::size_t n = o.grid;
    std::vector<double> ps(n), ms(n);
    for (std::size_t i = 0; i < n; ++i) ps[i] = o.p_lo + (o.p_hi - o.p_lo) * double(i) / double(n - 1);
    parallel_for(n, resolve_threads(o.threads),
                 [&](std::size_t i) { ms[i] = polar_mismatch(ps[i], theta_i, theta_f, T, m, o.dt); });
    for (std::size_t i = 0; i < n; ++i) res.profile.push_back({ps[i], 0.0, ms[i]});

    std::vector<double> roots;
    for (std::size_t i = 0; i < n; ++i) {
        if (ms[i] == 0.0) {
            roots.push_back(ps[i]);
            continue;
        }
        if (i + 1 == n) break;
        double a = ps[i], b = ps[i + 1], ma = ms[i], mb = ms[i + 1];
        if (!std::isfinite(ma) || !std::isfinite(mb) || mb == 0.0) continue;
        if ((ma > 0) == (mb > 0) || std::abs(ma - mb) >= kPi) continue;
        double mid = a, mm = ma;
        for (std::size_t it = 0; it < o.refine_iterations; ++it) {
            mid = 0.5 * (a + b);
            mm = polar_mismatch(mid, theta_i, theta_f, T, m, o.dt);
            if (!std::isfinite(mm) || std::abs(mm) < o.tol || b - a < 1e-15) break;
            if ((mm > 0) == (ma > 0)) {
                a = mid;
                ma = mm;
            } else {
                b = mid;
            }
        }
        if (std::isfinite(mm) && std::abs(mm) < 1e-6) roots.push_back(mid);
    }
    for (double p0 : roots) {
        OPSolution sol = hamilton_flow(PhasePoint::polar(theta_i, p0), m, T, o.dt);
        sol.q_f = from_polar({theta_f});
        res.roots.push_back(std::move(sol));
    }
    rank(res);
    return res;
}

ShootResult shoot(const BlochVector& q_i, const BlochVector& q_f, double T, const OpModel& m,
                  const ShootOptions& o) {
    m.validate();
    if (polar(m)) throw Error(ErrorKind::Config, "Bloch boundary data needs the planar model");
    if (!(T > 0.0)) throw Error(ErrorKind::Config, "shooting needs T > 0");
    if (o.grid_2d < 2 || !(o.p_hi > o.p_lo)) throw Error(ErrorKind::Config, "shooting grid is empty");
    const std::size_t n = o.grid_2d;
    auto pv = [&](std::size_t i) { return o.p_lo + (o.p_hi - o.p_lo) * double(i) / double(n - 1); };
    std::vector<double> norm(n * n);
    parallel_for(n * n, resolve_threads(o.threads), [&](std::size_t k) {
        const auto f = planar_mismatch(pv(k % n), pv(k / n), q_i, q_f, T, m, o.dt);
        norm[k] = std::hypot(f[0], f[1]);
    });
    ShootResult res;
    for (std::size_t k = 0; k < n * n; ++k) res.profile.push_back({pv(k % n), pv(k / n), norm[k]});

    std::vector<std::size_t> seeds;
    for (std::size_t k = 0; k < n * n; ++k) {
        if (!std::isfinite(norm[k])) continue;
        const long i = long(k % n), j = long(k / n);
        bool minimum = true;
        for (long dj = -1; dj <= 1; ++dj)
            for (long di = -1; di <= 1; ++di) {
                const long a = i + di, b = j + dj;
                if ((di || dj) && a >= 0 && b >= 0 && a < long(n) && b < long(n)) {
                    const double v = norm[std::size_t(b) * n + std::size_t(a)];
                    if (std::isfinite(v) && v < norm[k]) minimum = false;
                }
            }
        if (minimum) seeds.push_back(k);
    }
    std::sort(seeds.begin(), seeds.end(), [&](std::size_t a, std::size_t b) { return norm[a] < norm[b]; });
    if (seeds.size() > 16) seeds.resize(16);

    for (std::size_t k : seeds) {
        double px = pv(k % n), pz = pv(k / n);
        auto f = planar_mismatch(px, pz, q_i, q_f, T, m, o.dt);
        double fn = std::hypot(f[0], f[1]);
        for (std::size_t it = 0; it < o.refine_iterations && fn >= o.tol; ++it) {
            const double e = 1e-7;
            const auto a1 = planar_mismatch(px + e, pz, q_i, q_f, T, m, o.dt);
            const auto a0 = planar_mismatch(px - e, pz, q_i, q_f, T, m, o.dt);
            const auto b1 = planar_mismatch(px, pz + e, q_i, q_f, T, m, o.dt);
            const auto b0 = planar_mismatch(px, pz - e, q_i, q_f, T, m, o.dt);
            Eigen::Matrix2d J;
            J << (a1[0] - a0[0]) / (2 * e), (b1[0] - b0[0]) / (2 * e),
                 (a1[1] - a0[1]) / (2 * e), (b1[1] - b0[1]) / (2 * e);
            if (!J.allFinite()) break;
            Eigen::CompleteOrthogonalDecomposition<Eigen::Matrix2d> cod(J);
            cod.setThreshold(1e-6);
            const Eigen::Vector2d d = cod.solve(Eigen::Vector2d(f[0], f[1]));
            double lam = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 30; ++ls, lam *= 0.5) {
                const double nx = px - lam * d[0], nz = pz - lam * d[1];
                const auto g = planar_mismatch(nx, nz, q_i, q_f, T, m, o.dt);
                const double gn = std::hypot(g[0], g[1]);
                if (std::isfinite(gn) && gn < fn) {
                    px = nx;
                    pz = nz;
                    f = g;
                    fn = gn;
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
        }
        if (!(fn < o.tol)) continue;
        OPSolution sol = hamilton_flow(PhasePoint::planar(q_i.x, q_i.z, px, pz), m, T, o.dt);
        sol.q_f = q_f;
        bool dup = false;
        for (const auto& other : res.roots) {
            double gap = 0.0;
            for (std::size_t k = 0; k < sol.size(); ++k)
                gap = std::max({gap, std::abs(sol.points[k].q[0] - other.points[k].q[0]),
                                std::abs(sol.points[k].q[1] - other.points[k].q[1])});
            if (gap < 1e-6) dup = true;
        }
        if (!dup) res.roots.push_back(std::move(sol));
    }
    rank(res);
    return res;
}

}  // namespace fluortraj
