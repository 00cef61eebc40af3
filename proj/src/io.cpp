#include "fluortraj/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "fluortraj/error.hpp"

namespace fluortraj {

std::string format_double(double v, bool exact) {
    char buf[64];
    if (exact) {
        std::snprintf(buf, sizeof buf, "%a", v);
        return buf;
    }
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    if (s.empty()) throw Error(ErrorKind::Io, "empty numeric field");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw Error(ErrorKind::Io, "malformed numeric field '" + s + "'");
    return v;
}

std::string csv_escape(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> header, bool exact)
    : out_(out), columns_(header.size()), exact_(exact) {
    row_fields(header);
}

void CsvWriter::row_fields(const std::vector<std::string>& fields) {
    if (fields.size() != columns_) throw Error(ErrorKind::Shape, "CSV row width does not match header");
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << csv_escape(fields[i]);
    }
    out_ << "\r\n";
}

void CsvWriter::row(const std::vector<double>& values) {
    std::vector<std::string> f;
    f.reserve(values.size());
    for (double v : values) f.push_back(format_double(v, exact_));
    row_fields(f);
}

Json to_json(const SchemeConfig& c) {
    return Json{{"scheme", to_string(c.scheme)}, {"gamma", c.gamma}, {"dt", c.dt},   {"theta", c.theta},
                {"eta", c.eta},                  {"omega", c.omega}, {"delta", c.delta}};
}

SchemeConfig scheme_config_from_json(const Json& j) {
    SchemeConfig c;
    if (j.contains("scheme")) c.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    c.gamma = j.value("gamma", c.gamma);
    c.dt = j.value("dt", c.dt);
    c.theta = j.value("theta", c.theta);
    c.eta = j.value("eta", c.eta);
    c.omega = j.value("omega", c.omega);
    c.delta = j.value("delta", c.delta);
    return c;
}

Json to_json(const BlochVector& q) { return Json::array({q.x, q.y, q.z}); }

namespace {

std::vector<std::string> readout_columns(Scheme s) {
    switch (s) {
    case Scheme::Photodetect: return {"clicked"};
    case Scheme::Heterodyne: return {"r_i", "r_q"};
    default: return {"r"};
    }
}

std::string hex(double v) { return format_double(v, true); }

}  // namespace

Json ensemble_sidecar(const Ensemble& e) {
    Json j;
    j["cfg"] = to_json(e.cfg);
    j["master_seed"] = e.master_seed;
    j["initial_state"] = to_json(e.initial);
    j["initial_state_hex"] = Json::array({hex(e.initial.x), hex(e.initial.y), hex(e.initial.z)});
    j["T"] = e.T;
    j["dt_hex"] = hex(e.cfg.dt);
    j["decimation"] = e.decimation;
    j["trajectories"] = e.size();
    j["simulated"] = e.simulated;
    j["indices"] = e.indices;
    j["readouts_kept"] = !e.empty() && !e.trajectories.front().readouts.empty();
    Json fails = Json::array();
    for (const auto& f : e.failures) fails.push_back({{"index", f.index}, {"message", f.message}});
    j["failures"] = fails;
    j["distance_measure"] = "trace";
    return j;
}

void write_ensemble_csv(std::ostream& out, const Ensemble& e, bool exact) {
    std::vector<std::string> header{"index", "t", "x", "y", "z"};
    const auto rc = readout_columns(e.cfg.scheme);
    header.insert(header.end(), rc.begin(), rc.end());
    CsvWriter w(out, header, exact);
    for (std::size_t i = 0; i < e.size(); ++i) {
        const Trajectory& tr = e.trajectories[i];
        const std::size_t idx = i < e.indices.size() ? e.indices[i] : i;
        const bool has_ro = !tr.readouts.empty();
        for (std::size_t k = 0; k < tr.size(); ++k) {
            std::vector<std::string> f{std::to_string(idx), format_double(tr.times[k], exact),
                                       format_double(tr.states[k].x, exact), format_double(tr.states[k].y, exact),
                                       format_double(tr.states[k].z, exact)};
            if (has_ro && k > 0) {
                const Readout& ro = tr.readouts[k - 1];
                if (const auto* j = std::get_if<Jump>(&ro.value)) f.push_back(j->clicked ? "1" : "0");
                else if (const auto* d = std::get_if<Dyne>(&ro.value)) f.push_back(format_double(d->r, exact));
                else {
                    const auto& dd = std::get<DualDyne>(ro.value);
                    f.push_back(format_double(dd.r_i, exact));
                    f.push_back(format_double(dd.r_q, exact));
                }
            } else {
                for (std::size_t c = 0; c < rc.size(); ++c) f.emplace_back();
            }
            w.row_fields(f);
        }
    }
}

Ensemble read_ensemble_csv(std::istream& in, const Json& sidecar) {
    Ensemble e;
    e.cfg = scheme_config_from_json(sidecar.at("cfg"));
    if (sidecar.contains("dt_hex")) e.cfg.dt = parse_double(sidecar.at("dt_hex").get<std::string>());
    e.master_seed = sidecar.at("master_seed").get<std::uint64_t>();
    if (sidecar.contains("initial_state_hex")) {
        const auto& h = sidecar.at("initial_state_hex");
        e.initial = {parse_double(h[0].get<std::string>()), parse_double(h[1].get<std::string>()),
                     parse_double(h[2].get<std::string>())};
    } else {
        const auto& s = sidecar.at("initial_state");
        e.initial = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
    }
    e.T = sidecar.value("T", 0.0);
    e.decimation = sidecar.value("decimation", std::size_t(1));
    e.simulated = sidecar.value("simulated", std::size_t(0));
    if (sidecar.contains("failures"))
        for (const auto& f : sidecar.at("failures"))
            e.failures.push_back({f.at("index").get<std::size_t>(), f.at("message").get<std::string>()});

    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::Io, "ensemble CSV is empty");
    const auto header = csv_split(line);
    const auto rc = readout_columns(e.cfg.scheme);
    if (header.size() != 5 + rc.size() || header[0] != "index")
        throw Error(ErrorKind::Io, "ensemble CSV header does not match the scheme");
    std::map<std::size_t, std::size_t> slot;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = csv_split(line);
        if (f.size() != header.size()) throw Error(ErrorKind::Io, "ensemble CSV row has the wrong width");
        const std::size_t idx = std::stoull(f[0]);
        auto it = slot.find(idx);
        if (it == slot.end()) {
            it = slot.emplace(idx, e.trajectories.size()).first;
            e.trajectories.emplace_back();
            e.trajectories.back().scheme = e.cfg.scheme;
            e.trajectories.back().seed = e.master_seed;
            e.indices.push_back(idx);
        }
        Trajectory& tr = e.trajectories[it->second];
        tr.times.push_back(parse_double(f[1]));
        tr.states.push_back({parse_double(f[2]), parse_double(f[3]), parse_double(f[4])});
        if (!f[5].empty()) {
            Readout ro;
            ro.dt = e.cfg.dt * double(e.decimation);
            if (e.cfg.scheme == Scheme::Photodetect) ro.value = Jump{f[5] == "1"};
            else if (e.cfg.scheme == Scheme::Heterodyne) ro.value = DualDyne{parse_double(f[5]), parse_double(f[6])};
            else ro.value = Dyne{parse_double(f[5])};
            tr.readouts.push_back(ro);
        }
    }
    return e;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw Error(ErrorKind::Io, "failed writing '" + path + "'");
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::Io, "invalid JSON in '" + path + "': " + ex.what());
    }
}

}  // namespace fluortraj
