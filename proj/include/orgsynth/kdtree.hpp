#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "orgsynth/cloud.hpp"
#include "orgsynth/error.hpp"
#include "orgsynth/math.hpp"

namespace orgsynth {

struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;
};

// Immutable KD-tree over a point set.  Queries return neighbors sorted by
// ascending distance, ties broken by ascending index, matching a stable
// brute-force scan.
class SpatialIndex {
public:
    SpatialIndex() = default;

    explicit SpatialIndex(std::vector<Vec3> points) : pts_(std::move(points)) {
        if (pts_.empty()) throw Error(ErrorCode::EmptyCloud, "SpatialIndex over empty set");
        order_.resize(pts_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
        nodes_.reserve(pts_.size());
        root_ = build(0, order_.size());
    }

    std::size_t size() const { return pts_.size(); }
    const Vec3& point(std::size_t i) const { return pts_[i]; }

    std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const {
        k = std::min(k, pts_.size());
        std::vector<Neighbor> heap;  // max-heap on (distance, index)
        if (k == 0) return heap;
        heap.reserve(k + 1);
        search(root_, query, k, heap);
        std::sort(heap.begin(), heap.end(), [](const Neighbor& a, const Neighbor& b) {
            return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
        });
        return heap;
    }

    Neighbor nearest(const Vec3& query) const { return knn(query, 1).front(); }

private:
    struct Node {
        std::size_t begin = 0, count = 0;  // leaf payload into order_
        int split_dim = -1;
        double split_val = 0.0;
        std::int32_t left = -1, right = -1;
    };

    static bool heap_less(const Neighbor& a, const Neighbor& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
    }

    std::int32_t build(std::size_t begin, std::size_t end) {
        Node node;
        const std::size_t n = end - begin;
        if (n <= 8) {
            node.begin = begin;
            node.count = n;
            nodes_.push_back(node);
            return static_cast<std::int32_t>(nodes_.size() - 1);
        }
        Vec3 lo = pts_[order_[begin]], hi = lo;
        for (std::size_t i = begin; i < end; ++i) {
            const Vec3& p = pts_[order_[i]];
            for (int d = 0; d < 3; ++d) {
                lo[d] = std::min(lo[d], p[d]);
                hi[d] = std::max(hi[d], p[d]);
            }
        }
        int dim = 0;
        double width = hi.x - lo.x;
        if (hi.y - lo.y > width) { dim = 1; width = hi.y - lo.y; }
        if (hi.z - lo.z > width) dim = 2;
        const std::size_t mid = begin + n / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::size_t a, std::size_t b) { return pts_[a][dim] < pts_[b][dim]; });
        node.split_dim = dim;
        node.split_val = pts_[order_[mid]][dim];
        nodes_.push_back(node);
        const auto id = static_cast<std::int32_t>(nodes_.size() - 1);
        const std::int32_t l = build(begin, mid);
        const std::int32_t r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    void search(std::int32_t id, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const {
        const Node& node = nodes_[id];
        if (node.split_dim < 0) {
            for (std::size_t i = node.begin; i < node.begin + node.count; ++i) {
                const std::size_t idx = order_[i];
                Neighbor cand{idx, norm(pts_[idx] - q)};
                if (heap.size() < k) {
                    heap.push_back(cand);
                    std::push_heap(heap.begin(), heap.end(), heap_less);
                } else if (heap_less(cand, heap.front())) {
                    std::pop_heap(heap.begin(), heap.end(), heap_less);
                    heap.back() = cand;
                    std::push_heap(heap.begin(), heap.end(), heap_less);
                }
            }
            return;
        }
        const double delta = q[node.split_dim] - node.split_val;
        const std::int32_t near = delta < 0.0 ? node.left : node.right;
        const std::int32_t far = delta < 0.0 ? node.right : node.left;
        search(near, q, k, heap);
        // Equal plane distances must still be explored: index tie-breaking.
        if (heap.size() < k || std::abs(delta) <= heap.front().distance) search(far, q, k, heap);
    }

    std::vector<Vec3> pts_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

inline std::vector<Neighbor> knn(const SpatialIndex& index, const Vec3& query, std::size_t k) {
    return index.knn(query, k);
}

}  // namespace orgsynth
