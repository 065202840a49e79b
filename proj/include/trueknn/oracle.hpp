#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "trueknn/dataset.hpp"

// Brute-force reference answers. Nothing here touches the bvh or the search
// code; distances are computed by a private scan.
namespace trueknn::oracle {

struct ExactKnn {
    std::size_t k = 0;
    /// Per query: k neighbors ascending by (distance, index), self excluded.
    std::vector<std::vector<std::uint32_t>> indices;
    std::vector<std::vector<double>> distances;
};

/// O(n^2) exact kNN. Throws InvalidInput when n <= k or k == 0.
ExactKnn exact_knn(const PointSet& points, std::size_t k);

/// {i != q : dist(q, i) <= radius}, ascending by index.
std::vector<std::uint32_t> exact_fixed_radius(const PointSet& points, std::uint32_t q, double radius);

/// Largest kth-nearest-neighbor distance: the smallest fixed radius that
/// resolves every query.
double max_knn_distance(const PointSet& points, std::size_t k);
double max_knn_distance(const ExactKnn& knn);

/// Nearest-rank percentile of the per-query kth-nearest distances:
/// the value at 1-based rank ceil(pct * n / 100) of the ascending list.
double percentile_knn_distance(const PointSet& points, std::size_t k, double pct);
double percentile_knn_distance(const ExactKnn& knn, double pct);

struct Comparison {
    std::size_t compared = 0;
    std::size_t mismatched = 0;
    std::string first_mismatch;  ///< empty when everything matched

    bool ok() const { return mismatched == 0; }
};

/// Checks neighbor lists against the oracle. Per query: the list must hold k
/// distinct non-self indices; distances must agree position by position within
/// `rel_tol`; indices strictly closer than the kth distance must match the
/// oracle's as a set (membership at the kth distance may differ by ties).
/// When `only` is given, queries with only[q] == false are skipped.
Comparison compare(const std::vector<std::vector<std::uint32_t>>& indices,
                   const std::vector<std::vector<double>>& distances, const ExactKnn& expected,
                   double rel_tol = 1e-9, const std::vector<bool>* only = nullptr);

}  // namespace trueknn::oracle
