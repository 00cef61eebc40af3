#include "fluortraj/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "fluortraj/dynamics.hpp"
#include "fluortraj/ensemble.hpp"
#include "fluortraj/error.hpp"
#include "fluortraj/mlp.hpp"
#include "fluortraj/oppath.hpp"
#include "fluortraj/parallel.hpp"
#include "fluortraj/retro.hpp"
#include "fluortraj/rng.hpp"

#ifndef FLUORTRAJ_VERSION
#define FLUORTRAJ_VERSION "0.0.0"
#endif

namespace fluortraj {

namespace fs = std::filesystem;

BlochVector parse_state(const std::string& text) {
    static const std::map<std::string, BlochVector> named{
        {"e", states::excited()},  {"excited", states::excited()}, {"g", states::ground()},
        {"ground", states::ground()}, {"x+", states::plus_x()},    {"x-", states::minus_x()},
        {"y+", states::plus_y()},  {"y-", {0.0, -1.0, 0.0}},       {"mixed", states::mixed()}};
    if (auto it = named.find(text); it != named.end()) return it->second;
    std::vector<double> v;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            v.push_back(parse_double(part));
        } catch (const Error&) {
            throw Error(ErrorKind::Config, "cannot parse state '" + text + "'");
        }
    }
    if (v.size() != 3) throw Error(ErrorKind::Config, "state must be a name or x,y,z: '" + text + "'");
    const BlochVector q{v[0], v[1], v[2]};
    if (!q.finite() || q.norm() > 1.0 + 1e-9) throw Error(ErrorKind::Config, "state lies outside the Bloch ball");
    return q;
}

BlochVector RunConfig::initial_state() const { return parse_state(initial); }

Json RunConfig::to_json() const {
    Json j = fluortraj::to_json(scheme);
    j["initial"] = initial;
    j["T"] = T;
    j["n"] = n;
    j["seed"] = seed;
    j["out"] = out;
    j["decimation"] = decimation;
    j["post_select"] = Json{{"kind", post.kind},
                            {"theta_f", post.theta_f},
                            {"target", fluortraj::to_json(post.target)},
                            {"window", post.window},
                            {"fraction", post.fraction}};
    return j;
}

RunConfig RunConfig::from_json(const Json& j, const RunConfig& base) {
    RunConfig c = base;
    try {
        Json sc = fluortraj::to_json(base.scheme);
        for (const char* k : {"scheme", "gamma", "dt", "theta", "eta", "omega", "delta"})
            if (j.contains(k)) sc[k] = j.at(k);
        c.scheme = scheme_config_from_json(sc);
        if (j.contains("initial")) {
            const auto& v = j.at("initial");
            if (v.is_array())
                c.initial = format_double(v.at(0).get<double>(), false) + "," + format_double(v.at(1).get<double>(), false) +
                            "," + format_double(v.at(2).get<double>(), false);
            else
                c.initial = v.get<std::string>();
        }
        c.T = j.value("T", c.T);
        c.n = j.value("n", c.n);
        c.seed = j.value("seed", c.seed);
        c.out = j.value("out", c.out);
        c.decimation = j.value("decimation", c.decimation);
        if (j.contains("post_select")) {
            const auto& p = j.at("post_select");
            c.post.kind = p.value("kind", c.post.kind);
            c.post.theta_f = p.value("theta_f", c.post.theta_f);
            if (p.contains("target")) {
                const auto& t = p.at("target");
                c.post.target = {t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()};
            }
            c.post.window = p.value("window", c.post.window);
            c.post.fraction = p.value("fraction", c.post.fraction);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("bad config value: ") + e.what());
    }
    return c;
}

void RunConfig::validate(std::vector<std::string>& warnings) const {
    if (scheme.gamma != 1.0)
        throw Error(ErrorKind::Config, "times are in units of T1 with gamma = 1; use --gamma-mhz to label output");
    if (!(scheme.eta >= 0.0 && scheme.eta <= 1.0)) throw Error(ErrorKind::Config, "eta must lie in [0, 1]");
    if (!(scheme.dt > 0.0) || scheme.epsilon() >= 1.0) throw Error(ErrorKind::Config, "gamma dt must lie in (0, 1)");
    scheme.validate();
    if (scheme.epsilon() >= 0.01)
        warnings.push_back("gamma dt = " + format_double(scheme.epsilon(), false) +
                           " is not small; O(dt) corrections are visible");
    if (!(T >= 0.0) || !std::isfinite(T)) throw Error(ErrorKind::Config, "T must be non-negative");
    if (decimation == 0) throw Error(ErrorKind::Config, "decimation must be at least 1");
    if (post.kind != "theta" && post.kind != "bloch")
        throw Error(ErrorKind::Config, "post_select.kind must be 'theta' or 'bloch'");
    if (!(post.window > 0.0)) throw Error(ErrorKind::Config, "post-selection window must be positive");
    if (!(post.fraction > 0.0 && post.fraction <= 1.0)) throw Error(ErrorKind::Config, "fraction must lie in (0, 1]");
    parse_state(initial);
}

namespace {

struct Flags {
    std::string config, scheme, initial, out, post_kind, target;
    double dt = 0, theta = 0, eta = 0, omega = 0, delta = 0, T = 0, theta_f = 0, window = 0, fraction = 0;
    std::size_t n = 0, decimation = 0;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool exact = false;
    double gamma_mhz = 1.0;
};

struct Extra {
    double theta_i = 0.0, theta_f_op = -std::numbers::pi + 0.5;
    std::string q_i = "e", q_f = "0,0,0";
    double p_lo = -8, p_hi = 8, p_max = 3;
    std::size_t grid = 400, grid_2d = 41, refine = 200, portrait_n = 401;
    std::vector<double> levels;
    double lm_lo = -2, lm_hi = 2;
    std::size_t lm_n = 21;
    double lm_step = 0.5;
    bool keep_readouts = false;
    std::size_t min_group = 100, batch = 20000, max_n = 2000000;
    bool compare_op = false;
    std::size_t samples = 1000, nodes = 200;
    double c_bound = 15.0;
};

class Context {
public:
    Context(std::string command, RunConfig cfg, const Flags& f, std::ostream& out, std::ostream& err)
        : command(std::move(command)), cfg(std::move(cfg)), flags(f), out(out), err(err) {}

    std::string command;
    RunConfig cfg;
    const Flags& flags;
    std::ostream& out;
    std::ostream& err;
    std::vector<std::string> files;
    std::vector<std::string> warnings;
    Json tolerances = Json::object();
    Json results = Json::object();

    unsigned threads() const { return resolve_threads(flags.threads); }
    bool exact() const { return flags.exact; }

    std::string path(const std::string& name) {
        files.push_back(name);
        return (fs::path(cfg.out) / name).string();
    }
    std::ofstream open(const std::string& name) {
        std::ofstream s(path(name), std::ios::binary);
        if (!s) throw Error(ErrorKind::Io, "cannot write " + name + " in " + cfg.out);
        return s;
    }
    void warn(const std::string& w) {
        warnings.push_back(w);
        err << "warning: " << w << "\n";
    }
    void verdict(const std::string& name, bool pass, const std::string& detail) {
        out << (pass ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
        results[name] = Json{{"pass", pass}, {"detail", detail}};
    }
};

std::string fmt(double v) { return format_double(v, false); }

void write_manifest(const Context& c, const std::vector<std::string>& argv, const std::string& status) {
    Json m;
    m["tool"] = "fluortraj";
    m["version"] = FLUORTRAJ_VERSION;
    m["command"] = c.command;
    m["argv"] = argv;
    m["status"] = status;
    m["config"] = c.cfg.to_json();
    m["seeds"] = Json{{"master_seed", c.cfg.seed}, {"rng", "philox4x32-10, stream = trajectory index"}};
    m["time_unit"] = "T1";
    m["gamma_mhz"] = c.flags.gamma_mhz;
    m["T1_us"] = 1.0 / c.flags.gamma_mhz;
    m["threads"] = c.threads();
    m["exact_floats"] = c.flags.exact;
    m["tolerances"] = c.tolerances;
    m["results"] = c.results;
    m["warnings"] = c.warnings;
    m["files"] = c.files;
    write_json((fs::path(c.cfg.out) / "manifest.json").string(), m);
}

SimulationOptions sim_options(const Context& c) {
    SimulationOptions so;
    so.decimation = c.cfg.decimation;
    so.threads = c.threads();
    return so;
}

void report_failures(Context& c, const Ensemble& e) {
    for (const auto& f : e.failures) c.warn("trajectory " + std::to_string(f.index) + " failed: " + f.message);
    if (e.empty() && !e.failures.empty()) throw Error(ErrorKind::Integration, "every trajectory failed");
}

// ---- subcommands ----

int cmd_decay(Context& c) {
    const RunConfig& r = c.cfg;
    const BlochVector q0 = r.initial_state();
    const SchemeConfig s = r.scheme;
    const Trajectory tr = integrate_deterministic(
        [&](const BlochVector& q) { return Vec3(lindblad_rhs(q, s.gamma) + drive_rhs(q, s.omega, s.delta)); }, q0, r.T,
        s.dt);
    auto os = c.open("decay.csv");
    const bool analytic = !s.driven();
    std::vector<std::string> head{"t", "x", "y", "z"};
    if (analytic) head.insert(head.end(), {"x_exact", "y_exact", "z_exact"});
    CsvWriter w(os, head, c.exact());
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const auto& q = tr.states[k];
        std::vector<double> row{tr.times[k], q.x, q.y, q.z};
        if (analytic) {
            const BlochVector a = analytic_decay(q0, tr.times[k], s.gamma);
            row.insert(row.end(), {a.x, a.y, a.z});
            worst = std::max(worst, (a.vec() - q.vec()).cwiseAbs().maxCoeff());
        }
        w.row(row);
    }
    c.out << "decay: " << tr.size() << " samples written\n";
    if (analytic) {
        c.tolerances["decay_max_error"] = 1e-9;
        c.verdict("decay", worst <= 1e-9, "max |RK4 - closed form| = " + fmt(worst));
    }
    return 0;
}

int cmd_simulate(Context& c, const Extra& x) {
    SimulationOptions so = sim_options(c);
    so.keep_readouts = x.keep_readouts;
    if (x.keep_readouts && so.decimation != 1) {
        c.warn("readouts are only kept at decimation 1; switching decimation to 1");
        so.decimation = 1;
        c.cfg.decimation = 1;
    }
    const Ensemble e = simulate_ensemble(c.cfg.scheme, c.cfg.initial_state(), c.cfg.T, c.cfg.n, c.cfg.seed, so);
    report_failures(c, e);
    {
        auto os = c.open("ensemble.csv");
        write_ensemble_csv(os, e, c.exact());
    }
    write_json(c.path("ensemble.json"), ensemble_sidecar(e));
    c.out << "simulate: " << e.size() << " trajectories, " << e.failures.size() << " failures\n";
    return 0;
}

int cmd_avg_check(Context& c) {
    const RunConfig& r = c.cfg;
    const BlochVector q0 = r.initial_state();
    const Ensemble e = simulate_ensemble(r.scheme, q0, r.T, r.n, r.seed, sim_options(c));
    report_failures(c, e);
    const MeanTrajectory mt = ensemble_mean(e);
    std::vector<BlochVector> ref;
    if (r.scheme.driven()) {
        const SchemeConfig s = r.scheme;
        const Trajectory d = integrate_deterministic(
            [&](const BlochVector& q) { return Vec3(lindblad_rhs(q, s.gamma) + drive_rhs(q, s.omega, s.delta)); }, q0,
            r.T, s.dt);
        for (double t : mt.times) ref.push_back(d.states[std::size_t(std::llround(t / s.dt))]);
    } else {
        for (double t : mt.times) ref.push_back(analytic_decay(q0, t, r.scheme.gamma));
    }
    auto os = c.open("avg.csv");
    CsvWriter w(os, {"t", "mean_x", "mean_y", "mean_z", "se_x", "se_y", "se_z", "ref_z", "z_deviation_over_se"},
                c.exact());
    double worst = 0.0, worst_abs = 0.0;
    for (std::size_t k = 0; k < mt.times.size(); ++k) {
        const double dev = std::abs(mt.mean[k].z - ref[k].z);
        const double se = mt.standard_error[k].z();
        const double ratio = se > 0.0 ? dev / se : (dev > 1e-12 ? INFINITY : 0.0);
        worst = std::max(worst, ratio);
        worst_abs = std::max(worst_abs, dev);
        w.row({mt.times[k], mt.mean[k].x, mt.mean[k].y, mt.mean[k].z, mt.standard_error[k].x(),
               mt.standard_error[k].y(), mt.standard_error[k].z(), ref[k].z, ratio});
    }
    c.tolerances["sigma"] = 3.0;
    c.verdict("avg-check", worst <= 3.0,
              "n = " + std::to_string(mt.count) + ", max |mean z - reference| / SE = " + fmt(worst) +
                  " (max abs " + fmt(worst_abs) + ")");
    return 0;
}

int cmd_ellipse_check(Context& c, const Extra& x) {
    RunConfig& r = c.cfg;
    if (r.scheme.scheme != Scheme::Homodyne && r.scheme.scheme != Scheme::HomodyneInefficient)
        throw Error(ErrorKind::Config, "ellipse-check needs a homodyne scheme");
    const BlochVector q0 = r.initial_state();
    const EllipseLaw law = EllipseLaw::from_initial(q0, r.scheme.eta, r.scheme.gamma);
    std::vector<double> checks;
    for (double t : {0.5, 1.0, 1.5, 2.0})
        if (t <= r.T + 1e-12) checks.push_back(t);
    if (checks.empty()) throw Error(ErrorKind::Config, "ellipse-check needs T >= 0.5");
    auto os = c.open("ellipse.csv");
    CsvWriter w(os, {"dt", "t", "max_residual", "median_residual"}, c.exact());
    double maxes[2] = {0, 0}, medians[2] = {0, 0};
    for (int pass = 0; pass < 2; ++pass) {
        SchemeConfig s = r.scheme;
        s.dt = pass == 0 ? r.scheme.dt : 0.5 * r.scheme.dt;
        SimulationOptions so;
        std::vector<std::vector<double>> res(checks.size(), std::vector<double>(r.n));
        parallel_for(r.n, c.threads(), [&](std::size_t i) {
            const Trajectory tr = simulate_trajectory(s, q0, checks.back(), r.seed, i, so);
            for (std::size_t k = 0; k < checks.size(); ++k)
                res[k][i] = ellipse_residual(tr.states[std::size_t(std::llround(checks[k] / s.dt))], checks[k], law);
        });
        std::vector<double> all;
        for (std::size_t k = 0; k < checks.size(); ++k) {
            auto v = res[k];
            std::sort(v.begin(), v.end());
            w.row({s.dt, checks[k], v.back(), v[v.size() / 2]});
            all.insert(all.end(), v.begin(), v.end());
        }
        std::sort(all.begin(), all.end());
        maxes[pass] = all.back();
        medians[pass] = all[all.size() / 2];
    }
    const double dt = r.scheme.dt;
    c.tolerances["c_bound"] = x.c_bound;
    c.tolerances["halving_band"] = Json::array({0.35, 0.65});
    c.verdict("ellipse-bound", maxes[0] <= x.c_bound * dt,
              "max residual " + fmt(maxes[0]) + " = " + fmt(maxes[0] / dt) + " dt");
    const double rmax = maxes[1] / maxes[0], rmed = medians[1] / medians[0];
    c.verdict("ellipse-halving-max", rmax >= 0.35 && rmax <= 0.65, "max residual ratio at dt/2: " + fmt(rmax));
    c.verdict("ellipse-halving-median", rmed >= 0.35 && rmed <= 0.65, "median residual ratio at dt/2: " + fmt(rmed));
    c.out << "top of ellipse at t = 1: z = " << fmt(law.z_plus(0.0, 1.0)) << "\n";
    return 0;
}

int cmd_portrait(Context& c, const Extra& x) {
    const OpModel m{};
    PortraitOptions o;
    o.p_lo = -x.p_max;
    o.p_hi = x.p_max;
    o.n_theta = o.n_p = x.portrait_n;
    o.levels = x.levels;
    o.threads = c.threads();
    const PhasePortrait pp = phase_portrait(m, o);
    {
        auto os = c.open("portrait_grid.csv");
        CsvWriter w(os, {"theta", "p", "E", "Sdot"}, c.exact());
        for (std::size_t j = 0; j < pp.energy.ny; ++j)
            for (std::size_t i = 0; i < pp.energy.nx; ++i)
                w.row({pp.energy.x(i), pp.energy.y(j), pp.energy.at(i, j), pp.action_rate.at(i, j)});
    }
    {
        auto os = c.open("contours.csv");
        CsvWriter w(os, {"level", "separatrix", "line", "theta", "p"}, c.exact());
        std::size_t id = 0;
        for (const auto& lc : pp.contours)
            for (const auto& line : lc.lines) {
                for (const auto& pt : line) w.row({lc.level, lc.separatrix ? 1.0 : 0.0, double(id), pt[0], pt[1]});
                ++id;
            }
    }
    {
        auto os = c.open("stationary.csv");
        CsvWriter w(os, {"theta", "p", "E", "grad_norm"}, c.exact());
        for (const auto& s : pp.stationary) w.row({s.theta, s.p, s.energy, s.grad_norm});
    }
    Json meta{{"theta_range", Json::array({o.theta_lo, o.theta_hi})},
              {"p_range", Json::array({o.p_lo, o.p_hi})},
              {"grid", o.n_theta},
              {"levels", o.levels},
              {"separatrix_levels", Json::array({-m.gamma, 0.0})},
              {"regions", pp.regions}};
    write_json(c.path("portrait.json"), meta);
    c.verdict("portrait", pp.stationary.size() == 2 && pp.regions.size() == 6,
              std::to_string(pp.stationary.size()) + " stationary points, " + std::to_string(pp.regions.size()) +
                  " regions");
    return 0;
}

int cmd_lm(Context& c, const Extra& x) {
    const RunConfig& r = c.cfg;
    const OpModel m{OpCoordinates::Planar, 1.0, r.scheme.eta};
    MomentumGrid g{x.lm_lo, x.lm_hi, x.lm_n};
    std::vector<double> times;
    for (double t = x.lm_step; t <= r.T + 1e-9; t += x.lm_step) times.push_back(t);
    const BlochVector q0 = r.initial_state();
    const LagrangianManifold lm = propagate_lm(q0, g, m, times, r.scheme.dt, c.threads());
    const EllipseLaw law = EllipseLaw::from_initial(q0, m.eta, m.gamma);
    double worst = 0.0;
    {
        auto os = c.open("lm.csv");
        CsvWriter w(os, {"px0", "pz0", "t", "x", "z", "ellipse_residual"}, c.exact());
        for (const auto& p : lm.points)
            for (std::size_t k = 0; k < times.size(); ++k) {
                double res = NAN;
                try {
                    res = ellipse_residual(p.states[k], times[k], law);
                    worst = std::max(worst, res);
                } catch (const Error&) {
                }
                w.row({p.px, p.pz, times[k], p.states[k].x, p.states[k].z, res});
            }
    }
    Json dropped = Json::array();
    for (const auto& d : lm.dropped) dropped.push_back({{"px0", d.px}, {"pz0", d.pz}, {"reason", d.reason}});
    write_json(c.path("lm.json"), Json{{"p_range", Json::array({g.lo, g.hi})},
                                       {"p_points", g.n},
                                       {"times", times},
                                       {"dt", r.scheme.dt},
                                       {"eta", m.eta},
                                       {"max_ellipse_residual", worst},
                                       {"dropped", dropped}});
    c.tolerances["lm_residual"] = 1e-6;
    c.verdict("lm", worst < 1e-6,
              std::to_string(lm.points.size()) + " points kept, " + std::to_string(lm.dropped.size()) +
                  " dropped, max ellipse residual " + fmt(worst));
    return 0;
}

void write_op_csv(Context& c, const std::string& name, const std::vector<OPSolution>& roots) {
    auto os = c.open(name);
    CsvWriter w(os, {"root", "t", "theta", "x", "z", "p1", "p2", "r_star", "E", "Sdot", "S"}, c.exact());
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const auto& s = roots[i];
        for (std::size_t k = 0; k < s.size(); ++k) {
            const BlochVector q = s.state(k);
            const double th = s.model.coords == OpCoordinates::Polar ? s.points[k].q[0] : std::atan2(q.x, q.z);
            w.row({double(i), s.times[k], th, q.x, q.z, s.points[k].p[0], s.points[k].p[1], s.readout[k], s.energy[k],
                   s.action_rate[k], s.action[k]});
        }
    }
}

int cmd_op_shoot(Context& c, const Extra& x) {
    const RunConfig& r = c.cfg;
    ShootOptions o;
    o.p_lo = x.p_lo;
    o.p_hi = x.p_hi;
    o.grid = x.grid;
    o.grid_2d = x.grid_2d;
    o.refine_iterations = x.refine;
    o.dt = r.scheme.dt;
    o.threads = c.threads();
    ShootResult res;
    Json bc;
    if (r.scheme.eta == 1.0) {
        res = shoot(x.theta_i, x.theta_f_op, r.T, OpModel{}, o);
        bc = Json{{"theta_i", x.theta_i}, {"theta_f", x.theta_f_op}};
    } else {
        const BlochVector qi = parse_state(x.q_i), qf = parse_state(x.q_f);
        res = shoot(qi, qf, r.T, OpModel{OpCoordinates::Planar, 1.0, r.scheme.eta}, o);
        bc = Json{{"q_i", to_json(qi)}, {"q_f", to_json(qf)}};
    }
    {
        auto os = c.open("op_profile.csv");
        CsvWriter w(os, {"p1", "p2", "mismatch"}, c.exact());
        for (const auto& e : res.profile) w.row({e.px, e.pz, e.mismatch});
    }
    Json roots = Json::array();
    for (const auto& s : res.roots)
        roots.push_back({{"p_i", Json::array({s.initial.p[0], s.initial.p[1]})}, {"S", s.total_action()}});
    c.tolerances["boundary"] = o.tol;
    write_json(c.path("op.json"), Json{{"boundary", bc},
                                       {"T", r.T},
                                       {"p_range", Json::array({o.p_lo, o.p_hi})},
                                       {"grid", r.scheme.eta == 1.0 ? o.grid : o.grid_2d},
                                       {"roots", roots}});
    if (!res.found()) {
        c.err << "op-shoot: no root in the momentum grid; see op_profile.csv\n";
        return 3;
    }
    write_op_csv(c, "op_roots.csv", res.roots);
    c.out << "op-shoot: " << res.roots.size() << " root(s); most likely p_i = " << fmt(res.roots[0].initial.p[0])
          << ", S = " << fmt(res.roots[0].total_action()) << "\n";
    return 0;
}

int cmd_mlp(Context& c, const Extra& x) {
    RunConfig& r = c.cfg;
    const BlochVector q0 = r.initial_state();
    PostSelection ps;
    ps.kind = r.post.kind == "theta" ? PostSelection::Kind::Theta : PostSelection::Kind::Bloch;
    ps.theta_f = r.post.theta_f;
    ps.target = r.post.target;
    ps.window = r.post.window;
    const std::size_t want = std::size_t(std::ceil(double(x.min_group) / r.post.fraction - 1e-9));
    Ensemble acc;
    std::size_t simulated = 0;
    const auto keep = [&](const BlochVector& q) { return ps.accepts(q); };
    while (acc.size() < want && simulated < x.max_n) {
        const std::size_t m = std::min(x.batch, x.max_n - simulated);
        Ensemble e = simulate_selected(r.scheme, q0, r.T, simulated, m, r.seed, keep, sim_options(c));
        report_failures(c, e);
        if (simulated == 0) {
            acc = std::move(e);
        } else {
            for (std::size_t i = 0; i < e.size(); ++i) {
                acc.trajectories.push_back(std::move(e.trajectories[i]));
                acc.indices.push_back(e.indices[i]);
            }
            acc.failures.insert(acc.failures.end(), e.failures.begin(), e.failures.end());
        }
        simulated += m;
        c.err << "mlp: " << simulated << " simulated, " << acc.size() << " accepted\n";
    }
    acc.simulated = simulated;
    if (acc.empty()) {
        c.results["simulated"] = simulated;
        throw Error(ErrorKind::EmptySubset, "post-selection kept no trajectories out of " + std::to_string(simulated));
    }
    MlpOptions mo;
    mo.fraction = r.post.fraction;
    mo.min_group = x.min_group;
    mo.threads = c.threads();
    const MlpResult res = extract_mlp(acc, mo);
    for (const auto& w : res.warnings) c.warn(w);
    {
        auto os = c.open("mlp.csv");
        CsvWriter w(os, {"t", "x", "y", "z"}, c.exact());
        for (std::size_t k = 0; k < res.path.times.size(); ++k)
            w.row({res.path.times[k], res.path.mean[k].x, res.path.mean[k].y, res.path.mean[k].z});
    }
    Json meta{{"fraction", res.fraction},
              {"n_selected", res.selected.size()},
              {"n_post_selected", acc.size()},
              {"n_ranked", res.n_ranked},
              {"subsampled", res.subsampled},
              {"simulated", simulated},
              {"distance_measure", res.measure},
              {"window", r.post.window},
              {"master_seed", r.seed}};
    if (x.compare_op) {
        if (ps.kind != PostSelection::Kind::Theta || r.scheme.eta != 1.0)
            throw Error(ErrorKind::Config, "--compare-op needs theta post-selection and eta = 1");
        ShootOptions so;
        so.dt = r.scheme.dt;
        so.threads = c.threads();
        const ShootResult sr = shoot(to_polar(q0).theta, ps.theta_f, r.T, OpModel{}, so);
        if (!sr.found()) throw Error(ErrorKind::Integration, "no optimal path connects the boundary states");
        const OPSolution& op = sr.roots.front();
        double sum = 0.0;
        for (std::size_t k = 0; k < res.path.times.size(); ++k) {
            const std::size_t j = std::size_t(std::llround(res.path.times[k] / r.scheme.dt));
            const auto& q = res.path.mean[k];
            sum += std::abs(wrap_angle(std::atan2(q.x, q.z) - op.points[j].q[0]));
        }
        const double mean_gap = sum / double(res.path.times.size());
        write_op_csv(c, "op_roots.csv", sr.roots);
        meta["mean_abs_theta_gap"] = mean_gap;
        c.tolerances["mlp_op_theta"] = 0.15;
        c.verdict("mlp-vs-op", mean_gap < 0.15, "mean |theta_MLP - theta_OP| = " + fmt(mean_gap) + " rad");
    }
    write_json(c.path("mlp.json"), meta);
    c.out << "mlp: averaged " << res.selected.size() << " of " << acc.size() << " post-selected trajectories\n";
    return 0;
}

int cmd_retro_check(Context& c, const Extra& x) {
    const RunConfig& r = c.cfg;
    CounterRng rng(r.seed, 0);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.samples; ++i) {
        BlochVector q;
        do q = {2 * rng.uniform() - 1, 2 * rng.uniform() - 1, 2 * rng.uniform() - 1};
        while (q.norm() > 1.0);
        worst = std::max(worst, reversal_symmetry_residual(q, 10 * rng.uniform() - 5,
                                                           std::numbers::pi * (2 * rng.uniform() - 1)));
    }
    c.tolerances["reversal_residual"] = 1e-12;
    c.verdict("reversal-symmetry", worst <= 1e-12,
              std::to_string(x.samples) + " samples, max residual " + fmt(worst));

    SchemeConfig s = r.scheme;
    s.scheme = Scheme::Homodyne;
    s.eta = 1.0;
    SimulationOptions so;
    so.keep_readouts = true;
    const BlochVector q0 = r.initial_state();
    if (std::abs(q0.norm() - 1.0) > 1e-9) throw Error(ErrorKind::Config, "the uncollapse round trip needs a pure state");
    const Trajectory tr = simulate_trajectory(s, q0, r.T, r.seed, 0, so);
    const auto back = retro_run(time_reverse(tr.states.back()), tr.readouts, s);
    const double gap = trace_distance(back.back().bloch(), time_reverse(q0).bloch());
    c.verdict("uncollapse", gap <= s.dt, "trace distance after the backward run " + fmt(gap));
    return 0;
}

int cmd_povm_check(Context& c, const Extra& x) {
    const RunConfig& r = c.cfg;
    Json rows = Json::array();
    bool ok = true;
    for (Scheme sc : {Scheme::Photodetect, Scheme::Heterodyne, Scheme::Homodyne, Scheme::HomodyneInefficient}) {
        SchemeConfig s = r.scheme;
        s.scheme = sc;
        s.eta = sc == Scheme::HomodyneInefficient ? (r.scheme.eta < 1.0 ? r.scheme.eta : 0.45) : 1.0;
        const PovmReport rep = povm_completeness(s, x.nodes);
        const double tol = sc == Scheme::Photodetect ? 0.0 : 1e-6;
        const bool pass = sc == Scheme::Photodetect ? rep.deviation == 0.0 : rep.deviation < tol;
        ok = ok && pass;
        rows.push_back({{"scheme", to_string(sc)},
                        {"eta", s.eta},
                        {"deviation", rep.deviation},
                        {"scale", rep.scale},
                        {"nominal_scale", rep.nominal_scale}});
        c.verdict(std::string("povm-") + to_string(sc), pass, "deviation " + fmt(rep.deviation));
    }
    c.tolerances["povm"] = 1e-6;
    write_json(c.path("povm.json"), Json{{"epsilon", r.scheme.epsilon()}, {"nodes", x.nodes}, {"schemes", rows}});
    c.out << (ok ? "povm-check: all schemes complete\n" : "povm-check: completeness violated\n");
    return 0;
}

int exit_code(ErrorKind k) {
    switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Io:
    case ErrorKind::Shape:
    case ErrorKind::Unsupported: return 2;
    case ErrorKind::EmptySubset: return 4;
    default: return 3;
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"fluortraj: quantum trajectories of a fluorescing qubit", "fluortraj"};
    app.set_version_flag("--version", FLUORTRAJ_VERSION);
    app.require_subcommand(1);

    Flags f;
    Extra x;

    auto common = [&](CLI::App* s) {
        s->add_option("--config", f.config, "JSON run configuration");
        s->add_option("--scheme", f.scheme, "photodetect | heterodyne | homodyne | homodyne-inefficient");
        s->add_option("--dt", f.dt, "time step in T1");
        s->add_option("--theta", f.theta, "local-oscillator phase");
        s->add_option("--eta", f.eta, "detection efficiency");
        s->add_option("--omega", f.omega, "Rabi drive");
        s->add_option("--delta", f.delta, "detuning");
        s->add_option("--initial", f.initial, "e, g, x+, x-, y+, y-, mixed or x,y,z");
        s->add_option("--T", f.T, "duration in T1");
        s->add_option("--n", f.n, "number of trajectories");
        s->add_option("--seed", f.seed, "master seed");
        s->add_option("--out", f.out, "output directory");
        s->add_option("--decimation", f.decimation, "store every k-th state");
        s->add_option("--post-kind", f.post_kind, "theta | bloch");
        s->add_option("--theta-f", f.theta_f, "final angle for post-selection or shooting");
        s->add_option("--target", f.target, "final Bloch target for post-selection");
        s->add_option("--window", f.window, "post-selection window");
        s->add_option("--fraction", f.fraction, "MLP cluster fraction");
        s->add_option("--threads", f.threads, "worker threads (0: FLUORTRAJ_THREADS or all cores)");
        s->add_flag("--exact-floats", f.exact, "hexadecimal floats in CSV output");
        s->add_option("--gamma-mhz", f.gamma_mhz, "gamma in MHz, used only to label output");
    };

    struct Spec {
        const char* name;
        const char* help;
        std::function<void(RunConfig&)> defaults;
    };
    const std::vector<Spec> specs{
        {"decay", "unmonitored Bloch decay against the closed form", [](RunConfig& c) { c.T = 5.0; }},
        {"simulate", "simulate an ensemble of trajectories", [](RunConfig& c) { c.T = 2.0; }},
        {"avg-check", "ensemble mean against the unmonitored decay",
         [](RunConfig& c) {
             c.T = 5.0;
             c.n = 10000;
         }},
        {"ellipse-check", "homodyne ellipse-law residuals",
         [](RunConfig& c) {
             c.scheme.eta = 0.45;
             c.T = 2.0;
             c.n = 2000;
         }},
        {"portrait", "phase portrait of the polar stochastic hamiltonian", [](RunConfig&) {}},
        {"lm", "Lagrangian manifold from the initial state",
         [](RunConfig& c) {
             c.scheme.eta = 0.45;
             c.T = 4.0;
         }},
        {"op-shoot", "optimal paths between boundary states", [](RunConfig& c) { c.T = 3.0; }},
        {"mlp", "most-likely path from a post-selected ensemble",
         [](RunConfig& c) {
             c.T = 3.0;
             c.post.theta_f = -std::numbers::pi + 0.5;
         }},
        {"retro-check", "time-reversal symmetry of the retrodicted equations",
         [](RunConfig& c) { c.initial = "x+"; }},
        {"povm-check", "POVM completeness by quadrature", [](RunConfig& c) { c.scheme.dt = 0.01; }},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& s : specs) subs[s.name] = app.add_subcommand(s.name, s.help);
    for (auto& [name, s] : subs) common(s);

    subs["simulate"]->add_flag("--keep-readouts", x.keep_readouts, "store readouts (forces decimation 1)");
    subs["ellipse-check"]->add_option("--c-bound", x.c_bound, "residual bound in units of dt");
    subs["portrait"]->add_option("--p-max", x.p_max, "momentum range [-p, p]");
    subs["portrait"]->add_option("--grid", x.portrait_n, "samples per axis");
    subs["portrait"]->add_option("--levels", x.levels, "extra energy levels")->delimiter(',');
    subs["lm"]->add_option("--p-lo", x.lm_lo, "lowest initial momentum");
    subs["lm"]->add_option("--p-hi", x.lm_hi, "highest initial momentum");
    subs["lm"]->add_option("--p-n", x.lm_n, "momenta per axis");
    subs["lm"]->add_option("--step", x.lm_step, "sampling interval in T1");
    auto* op = subs["op-shoot"];
    op->add_option("--theta-i", x.theta_i, "initial angle (eta = 1)");
    op->add_option("--q-i", x.q_i, "initial state x,y,z (eta < 1)");
    op->add_option("--q-f", x.q_f, "final state x,y,z (eta < 1)");
    op->add_option("--p-lo", x.p_lo, "lowest initial momentum");
    op->add_option("--p-hi", x.p_hi, "highest initial momentum");
    op->add_option("--grid", x.grid, "scan points (eta = 1)");
    op->add_option("--grid-2d", x.grid_2d, "scan points per axis (eta < 1)");
    op->add_option("--refine", x.refine, "refinement iterations");
    subs["mlp"]->add_option("--min-group", x.min_group, "minimum averaged group");
    subs["mlp"]->add_option("--batch", x.batch, "trajectories per batch");
    subs["mlp"]->add_option("--max-n", x.max_n, "simulation budget");
    subs["mlp"]->add_flag("--compare-op", x.compare_op, "compare with the shooting optimal path");
    subs["retro-check"]->add_option("--samples", x.samples, "random sample points");
    subs["povm-check"]->add_option("--nodes", x.nodes, "Gauss-Hermite nodes per axis");

    std::vector<std::string> args;
    for (int i = 0; i < argc; ++i) args.emplace_back(argv[i]);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << FLUORTRAJ_VERSION << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 1;
    }

    const Spec* spec = nullptr;
    CLI::App* sub = nullptr;
    for (const auto& s : specs)
        if (subs[s.name]->parsed()) {
            spec = &s;
            sub = subs[s.name];
        }
    if (!spec) {
        err << app.help();
        return 1;
    }
    auto set = [&](const char* flag) { return sub->get_option(flag)->count() > 0; };
    if (set("--theta-f") && std::string(spec->name) == "op-shoot") x.theta_f_op = f.theta_f;

    RunConfig cfg;
    std::vector<std::string> warnings;
    try {
        spec->defaults(cfg);
        if (set("--config")) cfg = RunConfig::from_json(read_json(f.config), cfg);
        if (set("--scheme")) cfg.scheme.scheme = scheme_from_string(f.scheme);
        if (set("--dt")) cfg.scheme.dt = f.dt;
        if (set("--theta")) cfg.scheme.theta = f.theta;
        if (set("--eta")) cfg.scheme.eta = f.eta;
        if (set("--omega")) cfg.scheme.omega = f.omega;
        if (set("--delta")) cfg.scheme.delta = f.delta;
        if (set("--initial")) cfg.initial = f.initial;
        if (set("--T")) cfg.T = f.T;
        if (set("--n")) cfg.n = f.n;
        if (set("--seed")) cfg.seed = f.seed;
        if (set("--out")) cfg.out = f.out;
        if (set("--decimation")) cfg.decimation = f.decimation;
        if (set("--post-kind")) cfg.post.kind = f.post_kind;
        if (set("--theta-f")) cfg.post.theta_f = f.theta_f;
        if (set("--target")) {
            cfg.post.target = parse_state(f.target);
            if (!set("--post-kind")) cfg.post.kind = "bloch";
        }
        if (set("--window")) cfg.post.window = f.window;
        if (set("--fraction")) cfg.post.fraction = f.fraction;
        if (!(f.gamma_mhz > 0.0)) throw Error(ErrorKind::Config, "--gamma-mhz must be positive");
        cfg.validate(warnings);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.kind()) == 3 ? 2 : exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    Context ctx(spec->name, cfg, f, out, err);
    for (const auto& w : warnings) ctx.warn(w);
    try {
        fs::create_directories(cfg.out);
    } catch (const fs::filesystem_error& e) {
        err << "error: cannot create output directory: " << e.what() << "\n";
        return 2;
    }

    int code = 0;
    std::string status = "ok";
    try {
        const std::string name = spec->name;
        if (name == "decay") code = cmd_decay(ctx);
        else if (name == "simulate") code = cmd_simulate(ctx, x);
        else if (name == "avg-check") code = cmd_avg_check(ctx);
        else if (name == "ellipse-check") code = cmd_ellipse_check(ctx, x);
        else if (name == "portrait") code = cmd_portrait(ctx, x);
        else if (name == "lm") code = cmd_lm(ctx, x);
        else if (name == "op-shoot") code = cmd_op_shoot(ctx, x);
        else if (name == "mlp") code = cmd_mlp(ctx, x);
        else if (name == "retro-check") code = cmd_retro_check(ctx, x);
        else code = cmd_povm_check(ctx, x);
        if (code != 0) status = "failed";
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        code = exit_code(e.kind());
        status = to_string(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        code = 3;
        status = "error";
    }
    try {
        write_manifest(ctx, args, status);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        if (code == 0) code = 2;
    }
    return code;
}

}  // namespace fluortraj
