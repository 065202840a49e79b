#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "trueknn/geometry.hpp"

namespace trueknn {

/// Software stand-ins for the hardware intersection counters.
struct TraversalCounters {
    std::uint64_t aabb_tests = 0;    ///< node-bounds containment tests
    std::uint64_t sphere_tests = 0;  ///< primitive sphere tests

    TraversalCounters& operator+=(const TraversalCounters& other) {
        aabb_tests += other.aabb_tests;
        sphere_tests += other.sphere_tests;
        return *this;
    }
    friend bool operator==(const TraversalCounters&, const TraversalCounters&) = default;
};

struct BvhNode {
    Aabb bounds;
    /// Leaf: first slot in the primitive order. Internal: left child index.
    std::uint32_t first = 0;
    /// Leaf: primitive count (> 0). Internal: 0.
    std::uint32_t count = 0;
    /// Internal only: right child index.
    std::uint32_t right = 0;

    bool is_leaf() const { return count > 0; }
};

/// Binary BVH over equal-radius spheres centered on a point set.
///
/// Topology depends only on the centers: nodes are split at the median of the
/// longest axis of their centroid bounds until a node holds at most
/// `leaf_capacity` primitives. Nodes are stored in pre-order, so every child
/// has a larger index than its parent and a reverse sweep is bottom-up.
class Bvh {
public:
    static constexpr std::size_t kDefaultLeafCapacity = 4;

    /// Throws InvalidInput on an empty center set and InvalidArgument on a
    /// negative/non-finite radius or zero leaf capacity.
    static Bvh build(std::span<const Point3> centers, double radius,
                     std::size_t leaf_capacity = kDefaultLeafCapacity);

    /// Recomputes all bounds for `new_radius` without touching topology.
    /// Throws InvalidArgument if `new_radius` is smaller than the current radius.
    void refit(double new_radius);

    /// Calls `visit(primitive, squared_distance)` once for every sphere that
    /// contains `q`. Children are visited left first.
    template <typename Visit>
    void query_point(const Point3& q, TraversalCounters& counters, Visit&& visit) const;

    double radius() const { return radius_; }
    std::size_t leaf_capacity() const { return leaf_capacity_; }
    std::size_t primitive_count() const { return order_.size(); }
    std::span<const BvhNode> nodes() const { return nodes_; }
    std::span<const std::uint32_t> primitive_order() const { return order_; }
    /// Center of primitive `i` (original dataset index).
    const Point3& center(std::uint32_t i) const { return centers_[slot_of_[i]]; }
    Sphere sphere(std::uint32_t i) const { return {center(i), radius_}; }

private:
    Bvh() = default;
    std::uint32_t build_node(std::uint32_t begin, std::uint32_t end);
    Aabb leaf_bounds(const BvhNode& node) const;

    std::vector<BvhNode> nodes_;
    std::vector<std::uint32_t> order_;    // slot -> primitive
    std::vector<std::uint32_t> slot_of_;  // primitive -> slot
    std::vector<Point3> centers_;         // indexed by slot
    double radius_ = 0.0;
    double radius_bound_ = 0.0;  // squared_radius_bound(radius_)
    std::size_t leaf_capacity_ = kDefaultLeafCapacity;
};

template <typename Visit>
void Bvh::query_point(const Point3& q, TraversalCounters& counters, Visit&& visit) const {
    // Depth of a median-split tree is ~log2(n); 64 covers any 32-bit index space.
    std::uint32_t stack[64];
    std::size_t top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const BvhNode& node = nodes_[stack[--top]];
        ++counters.aabb_tests;
        if (!point_in_aabb(q, node.bounds)) continue;
        if (node.is_leaf()) {
            for (std::uint32_t slot = node.first; slot < node.first + node.count; ++slot) {
                ++counters.sphere_tests;
                const double d2 = squared_distance(q, centers_[slot]);
                if (d2 <= radius_bound_) visit(order_[slot], d2);
            }
        } else {
            stack[top++] = node.right;
            stack[top++] = node.first;
        }
    }
}

}  // namespace trueknn
