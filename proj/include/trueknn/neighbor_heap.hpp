#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace trueknn {

struct Neighbor {
    double squared_distance = 0.0;
    std::uint32_t index = 0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
    /// Closer first; equal distances prefer the lower index.
    friend bool operator<(const Neighbor& a, const Neighbor& b) {
        return a.squared_distance < b.squared_distance ||
               (a.squared_distance == b.squared_distance && a.index < b.index);
    }
};

/// Bounded max-heap holding the k best candidates for one query point.
/// The root is the current worst candidate. The owner's own index is never
/// admitted.
class NeighborHeap {
public:
    NeighborHeap() = default;
    NeighborHeap(std::size_t capacity, std::uint32_t owner) : capacity_(capacity), owner_(owner) {
        entries_.reserve(capacity);
    }

    /// Returns true if the candidate was kept.
    bool push(std::uint32_t index, double squared_distance) {
        if (index == owner_ || capacity_ == 0) return false;
        const Neighbor candidate{squared_distance, index};
        if (entries_.size() < capacity_) {
            entries_.push_back(candidate);
            std::push_heap(entries_.begin(), entries_.end());
            return true;
        }
        if (!(candidate < entries_.front())) return false;
        std::pop_heap(entries_.begin(), entries_.end());
        entries_.back() = candidate;
        std::push_heap(entries_.begin(), entries_.end());
        return true;
    }

    void clear() { entries_.clear(); }

    bool full() const { return entries_.size() == capacity_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint32_t owner() const { return owner_; }
    /// Heap-ordered view; front() is the worst entry.
    std::span<const Neighbor> entries() const { return entries_; }

    /// Entries in ascending (distance, index) order.
    std::vector<Neighbor> sorted() const {
        std::vector<Neighbor> out = entries_;
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::vector<Neighbor> entries_;
    std::size_t capacity_ = 0;
    std::uint32_t owner_ = 0;
};

}  // namespace trueknn
