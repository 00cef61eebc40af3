#include "fluortraj/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fluortraj/error.hpp"
#include "fluortraj/parallel.hpp"
#include "fluortraj/rng.hpp"

namespace fluortraj {

namespace {

void check_grid(const Trajectory& a, const Trajectory& b) {
    if (a.times.size() != b.times.size() || a.states.size() != b.states.size() ||
        a.states.size() != a.times.size())
        throw Error(ErrorKind::Shape, "trajectories are stored on different time grids");
    for (std::size_t k = 0; k < a.times.size(); ++k)
        if (std::abs(a.times[k] - b.times[k]) > 1e-12 * std::max(1.0, std::abs(a.times[k])))
            throw Error(ErrorKind::Shape, "trajectories are stored on different time grids");
}

}  // namespace

double trajectory_distance(const Trajectory& a, const Trajectory& b, const DistanceMeasure& d) {
    if (!d.symmetric) throw Error(ErrorKind::Config, "asymmetric distance measures are rejected: " + d.name);
    check_grid(a, b);
    double sum = 0.0;
    for (std::size_t k = 0; k < a.states.size(); ++k) sum += d(a.states[k], b.states[k]);
    return sum;
}

DistanceMatrix build_distance_matrix(const std::vector<const Trajectory*>& trs, const DistanceMeasure& d,
                                     unsigned threads) {
    if (!d.symmetric) throw Error(ErrorKind::Config, "asymmetric distance measures are rejected: " + d.name);
    const std::size_t n = trs.size();
    if (n < 2) throw Error(ErrorKind::Shape, "distance matrix needs at least two trajectories");
    for (std::size_t i = 1; i < n; ++i) check_grid(*trs[0], *trs[i]);
    DistanceMatrix dm;
    dm.n = n;
    dm.values.assign(n * n, 0.0);
    parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            const auto& a = trs[i]->states;
            const auto& b = trs[j]->states;
            for (std::size_t k = 0; k < a.size(); ++k) s += d(a[k], b[k]);
            dm.values[i * n + j] = s;
            dm.values[j * n + i] = s;
        }
    });
    dm.row_sums.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) dm.row_sums[i] += dm.values[i * n + j];
    return dm;
}

DistanceMatrix build_distance_matrix(const Ensemble& e, const DistanceMeasure& d, unsigned threads) {
    std::vector<const Trajectory*> trs;
    for (const auto& t : e.trajectories) trs.push_back(&t);
    return build_distance_matrix(trs, d, threads);
}

MlpResult extract_mlp(const Ensemble& subset, const MlpOptions& o) {
    if (!(o.fraction > 0.0 && o.fraction <= 1.0)) throw Error(ErrorKind::Config, "MLP fraction must lie in (0, 1]");
    if (subset.empty()) throw Error(ErrorKind::EmptySubset, "no trajectories survived post-selection");
    MlpResult res;
    res.n_input = subset.size();
    res.fraction = o.fraction;
    res.measure = o.measure.name;

    std::vector<std::size_t> pool(subset.size());
    std::iota(pool.begin(), pool.end(), 0);
    if (o.cap > 0 && pool.size() > o.cap) {
        CounterRng rng(subset.master_seed, ~std::uint64_t(0));
        for (std::size_t i = 0; i < o.cap; ++i) {
            const std::size_t j = i + std::size_t(rng.uniform() * double(pool.size() - i));
            std::swap(pool[i], pool[std::min(j, pool.size() - 1)]);
        }
        pool.resize(o.cap);
        std::sort(pool.begin(), pool.end());
        res.subsampled = true;
    }
    res.n_ranked = pool.size();

    const std::size_t take = std::size_t(std::ceil(o.fraction * double(pool.size()) - 1e-9));
    if (take == 0) throw Error(ErrorKind::Config, "fraction selects no trajectories");
    std::vector<const Trajectory*> trs;
    for (std::size_t i : pool) trs.push_back(&subset.trajectories[i]);

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    if (pool.size() >= 2) {
        const DistanceMatrix dm = build_distance_matrix(trs, o.measure, o.threads);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return dm.row_sums[a] < dm.row_sums[b]; });
    }
    order.resize(take);
    std::vector<const Trajectory*> chosen;
    for (std::size_t k : order) {
        res.selected.push_back(pool[k]);
        chosen.push_back(trs[k]);
    }
    res.path = mean_of(chosen);
    if (take < o.min_group)
        res.warnings.push_back("averaged group has " + std::to_string(take) + " trajectories, below " +
                               std::to_string(o.min_group));
    return res;
}

}  // namespace fluortraj
