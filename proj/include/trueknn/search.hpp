#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "trueknn/bvh.hpp"
#include "trueknn/dataset.hpp"
#include "trueknn/error.hpp"
#include "trueknn/neighbor_heap.hpp"

namespace trueknn {

enum class RefitMode { kRefit, kRebuild };

struct SearchRound {
    std::size_t round_index = 0;
    double radius = 0.0;
    std::size_t active_queries = 0;
    std::size_t resolved_this_round = 0;
    TraversalCounters counters;
    std::chrono::nanoseconds elapsed{0};
    /// Time spent refitting (or rebuilding) the tree before this round; zero for round 0.
    std::chrono::nanoseconds bvh_update{0};
};

struct SearchConfig {
    std::size_t k = 5;
    /// Sampled with sample_start_radius when absent.
    std::optional<double> start_radius;
    double growth_factor = 2.0;
    std::optional<std::size_t> max_rounds;
    /// Only consulted by true_knn_bounded.
    std::optional<double> radius_cap;
    std::size_t sample_size = 100;
    std::size_t sample_k = 4;
    std::uint64_t rng_seed = 0;
    std::size_t leaf_capacity = Bvh::kDefaultLeafCapacity;
    /// How the tree follows the radius between rounds.
    RefitMode refit_mode = RefitMode::kRefit;
    /// Worker threads for per-query work inside a round; 0 = hardware concurrency.
    std::size_t threads = 1;
    /// Called after each round with that round's log and the queries it searched.
    std::function<void(const SearchRound&, std::span<const std::uint32_t>)> on_round;

    /// Throws InvalidArgument when a field is outside its domain.
    void validate() const;
};

struct KnnResult {
    /// Per query, ascending by (distance, index). Length k when resolved.
    std::vector<std::vector<std::uint32_t>> indices;
    std::vector<std::vector<double>> distances;
    std::vector<bool> resolved;
    std::vector<SearchRound> rounds;
    TraversalCounters totals;
    double start_radius = 0.0;
    double final_radius = 0.0;
    std::chrono::nanoseconds build_time{0};
    std::chrono::nanoseconds total_time{0};

    std::size_t query_count() const { return indices.size(); }
    std::size_t resolved_count() const;
};

/// Raised when max_rounds is hit with queries still unresolved.
class MaxRoundsExceeded : public Error {
public:
    MaxRoundsExceeded(const std::string& what, std::vector<SearchRound> rounds)
        : Error(what), rounds_(std::move(rounds)) {}
    const std::vector<SearchRound>& rounds() const { return rounds_; }

private:
    std::vector<SearchRound> rounds_;
};

/// One fixed-radius pass: for every query q in `queries`, heaps[q] is cleared
/// and refilled with the k nearest points among {i != q : dist(q, i) <= r},
/// where r is the tree's current radius. `heaps` is indexed by point index.
TraversalCounters fixed_radius_knns(const PointSet& points, std::span<const std::uint32_t> queries,
                                    std::span<NeighborHeap> heaps, const Bvh& bvh, std::size_t threads = 1);

/// Indices drawn uniformly without replacement: min(sample_size, n) of them,
/// by a partial Fisher-Yates shuffle over a seeded mt19937_64.
std::vector<std::uint32_t> sample_indices(std::size_t n, std::size_t sample_size, std::uint64_t seed);

/// Minimum sample_k-nearest-neighbor distance over a random sample of the
/// dataset, neighbors taken exactly over the full set with self excluded.
/// Zero minima (duplicate points) fall back to the smallest positive sampled
/// distance; DegenerateDataset if there is none.
double sample_start_radius(const PointSet& points, std::size_t sample_size = 100, std::size_t sample_k = 4,
                           std::uint64_t seed = 0);

/// Unbounded k-nearest-neighbor search by repeated fixed-radius rounds,
/// dropping resolved queries and growing the radius between rounds.
KnnResult true_knn(const PointSet& points, const SearchConfig& config);

/// As true_knn, but the round whose radius reaches config.radius_cap runs at
/// exactly the cap and is the last. Unresolved queries keep partial lists.
KnnResult true_knn_bounded(const PointSet& points, const SearchConfig& config);

/// Single fixed-radius round over every query.
KnnResult baseline_fixed_radius(const PointSet& points, std::size_t k, double radius,
                                std::size_t leaf_capacity = Bvh::kDefaultLeafCapacity, std::size_t threads = 1);

}  // namespace trueknn
