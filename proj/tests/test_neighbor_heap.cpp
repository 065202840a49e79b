#include <doctest.h>

#include <algorithm>
#include <random>

#include "trueknn/neighbor_heap.hpp"

using namespace trueknn;

TEST_CASE("NeighborHeap keeps the k closest and rejects its owner") {
    NeighborHeap heap(3, 7);
    CHECK_FALSE(heap.full());
    CHECK_FALSE(heap.push(7, 0.0));
    CHECK(heap.push(1, 5.0));
    CHECK(heap.push(2, 1.0));
    CHECK(heap.push(3, 3.0));
    CHECK(heap.full());
    CHECK(heap.entries().front().squared_distance == 5.0);

    CHECK_FALSE(heap.push(4, 6.0));
    CHECK(heap.push(5, 2.0));
    CHECK(heap.size() == 3);
    const auto sorted = heap.sorted();
    CHECK(sorted[0] == Neighbor{1.0, 2});
    CHECK(sorted[1] == Neighbor{2.0, 5});
    CHECK(sorted[2] == Neighbor{3.0, 3});

    heap.clear();
    CHECK(heap.size() == 0);
    CHECK_FALSE(heap.full());
}

TEST_CASE("NeighborHeap breaks distance ties toward the lower index") {
    NeighborHeap heap(2, 0);
    heap.push(9, 1.0);
    heap.push(4, 1.0);
    heap.push(6, 1.0);
    heap.push(2, 1.0);
    const auto sorted = heap.sorted();
    CHECK(sorted[0].index == 2);
    CHECK(sorted[1].index == 4);
}

TEST_CASE("property: NeighborHeap equals sort-and-truncate in any insertion order") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = std::uniform_int_distribution<std::size_t>(0, 60)(rng);
        const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 10)(rng);
        std::vector<Neighbor> all;
        for (std::uint32_t i = 1; i <= m; ++i)
            all.push_back({static_cast<double>(std::uniform_int_distribution<int>(0, 9)(rng)), i});
        std::shuffle(all.begin(), all.end(), rng);

        NeighborHeap heap(k, 0);
        for (const auto& nb : all) heap.push(nb.index, nb.squared_distance);

        std::sort(all.begin(), all.end());
        all.resize(std::min(all.size(), k));
        CHECK(heap.sorted() == all);
        CHECK(heap.full() == (m >= k));
    }
}
