#include "trueknn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "trueknn/error.hpp"

namespace trueknn::oracle {

namespace {

double dist2(const Point3& a, const Point3& b) {
    double sum = 0.0;
    for (int d = 0; d < 3; ++d) {
        const double diff = a[d] - b[d];
        sum += diff * diff;
    }
    return sum;
}

void check_k(const PointSet& points, std::size_t k) {
    if (k == 0) throw InvalidInput("k must be >= 1");
    if (points.size() <= k)
        throw InvalidInput("exact kNN needs n > k (n = " + std::to_string(points.size()) +
                           ", k = " + std::to_string(k) + ")");
}

}  // namespace

ExactKnn exact_knn(const PointSet& points, std::size_t k) {
    check_k(points, k);
    const std::size_t n = points.size();
    ExactKnn out;
    out.k = k;
    out.indices.resize(n);
    out.distances.resize(n);

    std::vector<std::pair<double, std::uint32_t>> row;
    row.reserve(n - 1);
    for (std::size_t q = 0; q < n; ++q) {
        row.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (i != q) row.emplace_back(dist2(points[q], points[i]), static_cast<std::uint32_t>(i));
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
        out.indices[q].reserve(k);
        out.distances[q].reserve(k);
        for (std::size_t j = 0; j < k; ++j) {
            out.indices[q].push_back(row[j].second);
            out.distances[q].push_back(std::sqrt(row[j].first));
        }
    }
    return out;
}

std::vector<std::uint32_t> exact_fixed_radius(const PointSet& points, std::uint32_t q, double radius) {
    if (!(radius >= 0.0)) throw InvalidArgument("radius must be non-negative");
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (i != q && std::sqrt(dist2(points[q], points[i])) <= radius) out.push_back(static_cast<std::uint32_t>(i));
    return out;
}

double max_knn_distance(const ExactKnn& knn) {
    double best = 0.0;
    for (const auto& d : knn.distances) best = std::max(best, d.back());
    return best;
}

double max_knn_distance(const PointSet& points, std::size_t k) { return max_knn_distance(exact_knn(points, k)); }

double percentile_knn_distance(const ExactKnn& knn, double pct) {
    if (!(pct > 0.0 && pct <= 100.0)) throw InvalidArgument("percentile must be in (0, 100]");
    std::vector<double> kth;
    kth.reserve(knn.distances.size());
    for (const auto& d : knn.distances) kth.push_back(d.back());
    std::sort(kth.begin(), kth.end());
    const auto n = static_cast<double>(kth.size());
    auto rank = static_cast<std::size_t>(std::ceil(pct * n / 100.0));
    rank = std::clamp<std::size_t>(rank, 1, kth.size());
    return kth[rank - 1];
}

double percentile_knn_distance(const PointSet& points, std::size_t k, double pct) {
    return percentile_knn_distance(exact_knn(points, k), pct);
}

namespace {

bool close(double a, double b, double rel_tol) {
    return a == b || std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b));
}

std::string check_query(std::size_t q, const std::vector<std::uint32_t>& idx, const std::vector<double>& dist,
                        const ExactKnn& expected, double rel_tol) {
    const auto& want_idx = expected.indices[q];
    const auto& want_dist = expected.distances[q];
    const std::string who = "query " + std::to_string(q) + ": ";
    if (idx.size() != want_idx.size() || dist.size() != want_dist.size())
        return who + "expected " + std::to_string(want_idx.size()) + " neighbors, got " + std::to_string(idx.size());

    std::vector<std::uint32_t> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return who + "duplicate neighbor";
    if (std::binary_search(sorted.begin(), sorted.end(), static_cast<std::uint32_t>(q)))
        return who + "lists itself as a neighbor";

    for (std::size_t j = 0; j < dist.size(); ++j)
        if (!close(dist[j], want_dist[j], rel_tol))
            return who + "distance #" + std::to_string(j) + " is " + std::to_string(dist[j]) + ", expected " +
                   std::to_string(want_dist[j]);

    if (want_dist.empty()) return {};
    const double kth = want_dist.back();
    auto strict = [&](const std::vector<std::uint32_t>& ids, const std::vector<double>& ds) {
        std::vector<std::uint32_t> out;
        for (std::size_t j = 0; j < ids.size(); ++j)
            if (ds[j] < kth && !close(ds[j], kth, rel_tol)) out.push_back(ids[j]);
        std::sort(out.begin(), out.end());
        return out;
    };
    if (strict(idx, dist) != strict(want_idx, want_dist)) return who + "neighbor set differs from oracle";
    return {};
}

}  // namespace

Comparison compare(const std::vector<std::vector<std::uint32_t>>& indices,
                   const std::vector<std::vector<double>>& distances, const ExactKnn& expected, double rel_tol,
                   const std::vector<bool>* only) {
    Comparison out;
    if (indices.size() != expected.indices.size() || distances.size() != expected.indices.size()) {
        out.mismatched = 1;
        out.first_mismatch = "query count " + std::to_string(indices.size()) + " differs from oracle's " +
                             std::to_string(expected.indices.size());
        return out;
    }
    for (std::size_t q = 0; q < indices.size(); ++q) {
        if (only && !(*only)[q]) continue;
        ++out.compared;
        std::string why = check_query(q, indices[q], distances[q], expected, rel_tol);
        if (!why.empty()) {
            if (out.mismatched == 0) out.first_mismatch = std::move(why);
            ++out.mismatched;
        }
    }
    return out;
}

}  // namespace trueknn::oracle
