#include "fluortraj/contour.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "fluortraj/error.hpp"

namespace fluortraj {

namespace {

struct Segment {
    std::uint64_t a, b;
    std::array<double, 2> pa, pb;
    bool used = false;
};

}  // namespace

std::vector<Polyline> marching_squares(const Grid2D& g, double level) {
    if (g.nx < 2 || g.ny < 2 || g.values.size() != g.nx * g.ny)
        throw Error(ErrorKind::Shape, "contour grid needs at least 2x2 samples");
    const std::size_t nx = g.nx;
    // Edge keys: horizontal edge from (i,j) to (i+1,j) -> 2k, vertical (i,j) to (i,j+1) -> 2k+1.
    auto hkey = [&](std::size_t i, std::size_t j) { return std::uint64_t(2 * (j * nx + i)); };
    auto vkey = [&](std::size_t i, std::size_t j) { return std::uint64_t(2 * (j * nx + i) + 1); };
    auto lerp = [&](double va, double vb) { return (level - va) / (vb - va); };
    auto hpoint = [&](std::size_t i, std::size_t j) {
        const double t = lerp(g.at(i, j), g.at(i + 1, j));
        return std::array<double, 2>{g.x(i) + t * (g.x(i + 1) - g.x(i)), g.y(j)};
    };
    auto vpoint = [&](std::size_t i, std::size_t j) {
        const double t = lerp(g.at(i, j), g.at(i, j + 1));
        return std::array<double, 2>{g.x(i), g.y(j) + t * (g.y(j + 1) - g.y(j))};
    };

    std::vector<Segment> segs;
    for (std::size_t j = 0; j + 1 < g.ny; ++j) {
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const double v0 = g.at(i, j), v1 = g.at(i + 1, j), v2 = g.at(i + 1, j + 1), v3 = g.at(i, j + 1);
            const int c = (v0 >= level) | (v1 >= level) << 1 | (v2 >= level) << 2 | (v3 >= level) << 3;
            if (c == 0 || c == 15) continue;
            // Edges: 0 bottom, 1 right, 2 top, 3 left.
            const std::uint64_t key[4] = {hkey(i, j), vkey(i + 1, j), hkey(i, j + 1), vkey(i, j)};
            auto pt = [&](int e) {
                switch (e) {
                case 0: return hpoint(i, j);
                case 1: return vpoint(i + 1, j);
                case 2: return hpoint(i, j + 1);
                default: return vpoint(i, j);
                }
            };
            auto add = [&](int e0, int e1) { segs.push_back({key[e0], key[e1], pt(e0), pt(e1)}); };
            const bool centre_high = 0.25 * (v0 + v1 + v2 + v3) >= level;
            switch (c) {
            case 1: case 14: add(3, 0); break;
            case 2: case 13: add(0, 1); break;
            case 3: case 12: add(3, 1); break;
            case 4: case 11: add(1, 2); break;
            case 6: case 9: add(0, 2); break;
            case 7: case 8: add(3, 2); break;
            case 5:
                if (centre_high) { add(3, 2); add(0, 1); }
                else { add(3, 0); add(1, 2); }
                break;
            case 10:
                if (centre_high) { add(3, 0); add(1, 2); }
                else { add(0, 1); add(3, 2); }
                break;
            default: break;
            }
        }
    }

    std::unordered_multimap<std::uint64_t, std::size_t> by_key;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        by_key.emplace(segs[s].a, s);
        by_key.emplace(segs[s].b, s);
    }
    auto next_from = [&](std::uint64_t key, std::size_t self) -> long {
        auto range = by_key.equal_range(key);
        for (auto it = range.first; it != range.second; ++it)
            if (it->second != self && !segs[it->second].used) return long(it->second);
        return -1;
    };

    std::vector<Polyline> lines;
    for (std::size_t s0 = 0; s0 < segs.size(); ++s0) {
        if (segs[s0].used) continue;
        segs[s0].used = true;
        std::vector<std::array<double, 2>> fwd{segs[s0].pa, segs[s0].pb};
        std::vector<std::array<double, 2>> back;
        // Grow forward from b, then backward from a.
        for (int dir = 0; dir < 2; ++dir) {
            std::uint64_t key = dir == 0 ? segs[s0].b : segs[s0].a;
            std::size_t cur = s0;
            for (;;) {
                const long n = next_from(key, cur);
                if (n < 0) break;
                Segment& sg = segs[std::size_t(n)];
                sg.used = true;
                const bool forward = sg.a == key;
                const auto& p = forward ? sg.pb : sg.pa;
                key = forward ? sg.b : sg.a;
                (dir == 0 ? fwd : back).push_back(p);
                cur = std::size_t(n);
            }
        }
        Polyline line(back.rbegin(), back.rend());
        line.insert(line.end(), fwd.begin(), fwd.end());
        lines.push_back(std::move(line));
    }
    return lines;
}

std::vector<std::size_t> connected_components(const std::vector<char>& open, std::size_t nx, std::size_t ny) {
    if (open.size() != nx * ny) throw Error(ErrorKind::Shape, "mask size does not match the grid");
    std::vector<char> seen(open.size(), 0);
    std::vector<std::size_t> sizes, stack;
    for (std::size_t s = 0; s < open.size(); ++s) {
        if (!open[s] || seen[s]) continue;
        std::size_t count = 0;
        stack.push_back(s);
        seen[s] = 1;
        while (!stack.empty()) {
            const std::size_t k = stack.back();
            stack.pop_back();
            ++count;
            const std::size_t i = k % nx, j = k / nx;
            auto visit = [&](std::size_t m) {
                if (open[m] && !seen[m]) {
                    seen[m] = 1;
                    stack.push_back(m);
                }
            };
            if (i > 0) visit(k - 1);
            if (i + 1 < nx) visit(k + 1);
            if (j > 0) visit(k - nx);
            if (j + 1 < ny) visit(k + nx);
        }
        sizes.push_back(count);
    }
    std::sort(sizes.rbegin(), sizes.rend());
    return sizes;
}

}  // namespace fluortraj
