#include "trueknn/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "trueknn/error.hpp"

namespace trueknn {

namespace {

void check_radius(double radius) {
    if (!(radius >= 0.0) || std::isinf(radius))
        throw InvalidArgument("bvh radius must be finite and non-negative, got " + std::to_string(radius));
}

}  // namespace

Bvh Bvh::build(std::span<const Point3> centers, double radius, std::size_t leaf_capacity) {
    if (centers.empty()) throw InvalidInput("cannot build a bvh over an empty point set");
    if (centers.size() > std::numeric_limits<std::uint32_t>::max() / 2)
        throw InvalidInput("point set too large for 32-bit primitive indices");
    if (leaf_capacity == 0) throw InvalidArgument("leaf capacity must be >= 1");
    check_radius(radius);

    Bvh bvh;
    bvh.radius_ = radius;
    bvh.radius_bound_ = squared_radius_bound(radius);
    bvh.leaf_capacity_ = leaf_capacity;
    bvh.centers_.assign(centers.begin(), centers.end());
    bvh.order_.resize(centers.size());
    std::iota(bvh.order_.begin(), bvh.order_.end(), 0u);
    bvh.nodes_.reserve(2 * centers.size() / leaf_capacity + 1);

    bvh.build_node(0, static_cast<std::uint32_t>(centers.size()));

    // Store centers in slot order so leaf scans read contiguous memory.
    std::vector<Point3> by_slot(centers.size());
    bvh.slot_of_.resize(centers.size());
    for (std::uint32_t slot = 0; slot < bvh.order_.size(); ++slot) {
        by_slot[slot] = centers[bvh.order_[slot]];
        bvh.slot_of_[bvh.order_[slot]] = slot;
    }
    bvh.centers_ = std::move(by_slot);

    bvh.refit(radius);
    return bvh;
}

std::uint32_t Bvh::build_node(std::uint32_t begin, std::uint32_t end) {
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();

    const std::uint32_t count = end - begin;
    if (count <= leaf_capacity_) {
        nodes_[index].first = begin;
        nodes_[index].count = count;
        return index;
    }

    // centers_ is still in original index order here.
    Aabb centroid_bounds;
    for (std::uint32_t slot = begin; slot < end; ++slot) centroid_bounds.merge(centers_[order_[slot]]);
    const int axis = centroid_bounds.longest_axis();

    const std::uint32_t mid = begin + count / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = centers_[a][axis];
                         const double cb = centers_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });

    const std::uint32_t left = build_node(begin, mid);
    const std::uint32_t right = build_node(mid, end);
    nodes_[index].first = left;
    nodes_[index].count = 0;
    nodes_[index].right = right;
    return index;
}

Aabb Bvh::leaf_bounds(const BvhNode& node) const {
    Aabb box;
    for (std::uint32_t slot = node.first; slot < node.first + node.count; ++slot)
        box.merge(aabb_of_sphere({centers_[slot], radius_}));
    return box;
}

void Bvh::refit(double new_radius) {
    check_radius(new_radius);
    if (new_radius < radius_)
        throw InvalidArgument("refit cannot shrink the radius (" + std::to_string(radius_) + " -> " +
                              std::to_string(new_radius) + ")");
    radius_ = new_radius;
    radius_bound_ = squared_radius_bound(new_radius);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        BvhNode& node = nodes_[i];
        if (node.is_leaf()) {
            node.bounds = leaf_bounds(node);
        } else {
            node.bounds = nodes_[node.first].bounds;
            node.bounds.merge(nodes_[node.right].bounds);
        }
    }
}

}  // namespace trueknn
