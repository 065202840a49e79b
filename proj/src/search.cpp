#include "trueknn/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <thread>

namespace trueknn {

namespace {

using Clock = std::chrono::steady_clock;

std::size_t resolve_threads(std::size_t requested) {
    if (requested != 0) return requested;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void require_queryable(const PointSet& points, std::size_t k) {
    if (points.size() <= k)
        throw InvalidInput("k = " + std::to_string(k) + " needs at least k+1 points, dataset has n = " +
                           std::to_string(points.size()));
}

KnnResult collect(const std::vector<NeighborHeap>& heaps) {
    KnnResult result;
    result.indices.resize(heaps.size());
    result.distances.resize(heaps.size());
    result.resolved.resize(heaps.size());
    for (std::size_t q = 0; q < heaps.size(); ++q) {
        for (const Neighbor& nb : heaps[q].sorted()) {
            result.indices[q].push_back(nb.index);
            result.distances[q].push_back(std::sqrt(nb.squared_distance));
        }
        result.resolved[q] = heaps[q].full();
    }
    return result;
}

std::vector<NeighborHeap> make_heaps(std::size_t n, std::size_t k) {
    std::vector<NeighborHeap> heaps;
    heaps.reserve(n);
    for (std::size_t q = 0; q < n; ++q) heaps.emplace_back(k, static_cast<std::uint32_t>(q));
    return heaps;
}

KnnResult run_rounds(const PointSet& points, const SearchConfig& config, std::optional<double> cap) {
    config.validate();
    require_queryable(points, config.k);
    if (cap && !(*cap > 0.0 && std::isfinite(*cap))) throw InvalidArgument("radius_cap must be positive and finite");

    const auto t_start = Clock::now();
    const double start_radius = config.start_radius
                                    ? *config.start_radius
                                    : sample_start_radius(points, config.sample_size, config.sample_k, config.rng_seed);
    const std::size_t threads = resolve_threads(config.threads);
    const std::size_t n = points.size();

    std::vector<NeighborHeap> heaps = make_heaps(n, config.k);
    std::vector<std::uint32_t> active(n);
    std::iota(active.begin(), active.end(), 0u);

    double radius = start_radius;
    auto round_radius = [&] { return cap ? std::min(radius, *cap) : radius; };

    const auto t_build = Clock::now();
    Bvh bvh = Bvh::build(points.points(), round_radius(), config.leaf_capacity);
    const auto build_time = Clock::now() - t_build;

    std::vector<SearchRound> rounds;
    std::vector<std::uint32_t> searched;
    for (std::size_t round = 0;; ++round) {
        if (config.max_rounds && round >= *config.max_rounds) {
            const std::string what = "max_rounds = " + std::to_string(*config.max_rounds) + " reached with " +
                                     std::to_string(active.size()) + " unresolved queries at radius " +
                                     std::to_string(rounds.back().radius);
            throw MaxRoundsExceeded(what, std::move(rounds));
        }
        const bool last = cap && radius >= *cap;
        const double r = round_radius();

        SearchRound log;
        log.round_index = round;
        log.radius = r;
        log.active_queries = active.size();

        if (round > 0) {
            const auto t_update = Clock::now();
            if (config.refit_mode == RefitMode::kRefit)
                bvh.refit(r);
            else
                bvh = Bvh::build(points.points(), r, config.leaf_capacity);
            log.bvh_update = Clock::now() - t_update;
        }

        const auto t_round = Clock::now();
        log.counters = fixed_radius_knns(points, active, heaps, bvh, threads);
        if (config.on_round) searched.assign(active.begin(), active.end());
        const auto kept = std::remove_if(active.begin(), active.end(), [&](std::uint32_t q) { return heaps[q].full(); });
        log.resolved_this_round = static_cast<std::size_t>(active.end() - kept);
        active.erase(kept, active.end());
        log.elapsed = Clock::now() - t_round;
        rounds.push_back(log);
        if (config.on_round) config.on_round(log, searched);

        if (active.empty() || last) break;
        radius *= config.growth_factor;
    }

    KnnResult result = collect(heaps);
    result.rounds = std::move(rounds);
    for (const SearchRound& r : result.rounds) result.totals += r.counters;
    result.start_radius = start_radius;
    result.final_radius = result.rounds.back().radius;
    result.build_time = std::chrono::duration_cast<std::chrono::nanoseconds>(build_time);
    result.total_time = Clock::now() - t_start;
    return result;
}

}  // namespace

void SearchConfig::validate() const {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (!(growth_factor > 1.0) || !std::isfinite(growth_factor)) throw InvalidArgument("growth_factor must be > 1");
    if (sample_size < 1) throw InvalidArgument("sample_size must be >= 1");
    if (sample_k < 1) throw InvalidArgument("sample_k must be >= 1");
    if (leaf_capacity < 1) throw InvalidArgument("leaf_capacity must be >= 1");
    if (start_radius && !(*start_radius > 0.0 && std::isfinite(*start_radius)))
        throw InvalidArgument("start_radius must be positive and finite");
    if (max_rounds && *max_rounds < 1) throw InvalidArgument("max_rounds must be >= 1");
}

std::size_t KnnResult::resolved_count() const {
    return static_cast<std::size_t>(std::count(resolved.begin(), resolved.end(), true));
}

TraversalCounters fixed_radius_knns(const PointSet& points, std::span<const std::uint32_t> queries,
                                    std::span<NeighborHeap> heaps, const Bvh& bvh, std::size_t threads) {
    auto run = [&](std::size_t begin, std::size_t end, TraversalCounters& counters) {
        for (std::size_t i = begin; i < end; ++i) {
            NeighborHeap& heap = heaps[queries[i]];
            heap.clear();
            bvh.query_point(points[queries[i]], counters,
                            [&heap](std::uint32_t primitive, double d2) { heap.push(primitive, d2); });
        }
    };

    threads = std::min(resolve_threads(threads), std::max<std::size_t>(1, queries.size() / 256));
    if (threads <= 1) {
        TraversalCounters counters;
        run(0, queries.size(), counters);
        return counters;
    }

    std::vector<TraversalCounters> partial(threads);
    {
        std::vector<std::jthread> workers;
        const std::size_t chunk = (queries.size() + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(queries.size(), t * chunk);
            const std::size_t end = std::min(queries.size(), begin + chunk);
            workers.emplace_back([&, begin, end, t] { run(begin, end, partial[t]); });
        }
    }
    TraversalCounters total;
    for (const auto& c : partial) total += c;
    return total;
}

std::vector<std::uint32_t> sample_indices(std::size_t n, std::size_t sample_size, std::uint64_t seed) {
    const std::size_t m = std::min(sample_size, n);
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(m);
    return pool;
}

double sample_start_radius(const PointSet& points, std::size_t sample_size, std::size_t sample_k, std::uint64_t seed) {
    if (points.size() < 2) throw InvalidInput("start radius sampling needs at least 2 points");
    if (sample_size < 1 || sample_k < 1) throw InvalidArgument("sample_size and sample_k must be >= 1");
    const std::size_t k = std::min(sample_k, points.size() - 1);

    double min_any = std::numeric_limits<double>::infinity();
    double min_positive = std::numeric_limits<double>::infinity();
    for (std::uint32_t s : sample_indices(points.size(), sample_size, seed)) {
        NeighborHeap heap(k, s);
        for (std::uint32_t i = 0; i < points.size(); ++i) heap.push(i, squared_distance(points[s], points[i]));
        for (const Neighbor& nb : heap.entries()) {
            min_any = std::min(min_any, nb.squared_distance);
            if (nb.squared_distance > 0.0) min_positive = std::min(min_positive, nb.squared_distance);
        }
    }
    if (min_any > 0.0) return std::sqrt(min_any);
    if (std::isinf(min_positive))
        throw DegenerateDataset("every sampled neighbor distance is zero; cannot choose a start radius");
    return std::sqrt(min_positive);
}

KnnResult true_knn(const PointSet& points, const SearchConfig& config) {
    return run_rounds(points, config, std::nullopt);
}

KnnResult true_knn_bounded(const PointSet& points, const SearchConfig& config) {
    if (!config.radius_cap) throw InvalidArgument("true_knn_bounded requires radius_cap");
    return run_rounds(points, config, config.radius_cap);
}

KnnResult baseline_fixed_radius(const PointSet& points, std::size_t k, double radius, std::size_t leaf_capacity,
                                std::size_t threads) {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    const auto t_start = Clock::now();
    Bvh bvh = Bvh::build(points.points(), radius, leaf_capacity);
    const auto build_time = Clock::now() - t_start;

    std::vector<NeighborHeap> heaps = make_heaps(points.size(), k);
    std::vector<std::uint32_t> queries(points.size());
    std::iota(queries.begin(), queries.end(), 0u);

    SearchRound log;
    log.radius = radius;
    log.active_queries = queries.size();
    const auto t_round = Clock::now();
    log.counters = fixed_radius_knns(points, queries, heaps, bvh, threads);
    log.elapsed = Clock::now() - t_round;

    KnnResult result = collect(heaps);
    log.resolved_this_round = result.resolved_count();
    result.rounds.push_back(log);
    result.totals = log.counters;
    result.start_radius = radius;
    result.final_radius = radius;
    result.build_time = std::chrono::duration_cast<std::chrono::nanoseconds>(build_time);
    result.total_time = Clock::now() - t_start;
    return result;
}

}  // namespace trueknn
