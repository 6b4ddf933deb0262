#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "meshreg/core.hpp"

namespace meshreg {

struct Neighbor {
    std::uint32_t index;
    double distance;
};

/// Exact 3-D kd-tree over a point cloud snapshot. Queries are exhaustive up to
/// provable pruning, so results match a linear scan bit for bit; equidistant
/// neighbors are ordered by ascending point index. Read-only after build.
class NeighborIndex {
public:
    explicit NeighborIndex(const PointCloud& cloud) : points_(cloud.points) {
        if (points_.empty()) throw std::invalid_argument("NeighborIndex: empty input");
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), 0u);
        nodes_.reserve(points_.size() / kLeafSize * 2 + 1);
        root_ = build(0, static_cast<std::uint32_t>(points_.size()));
    }

    std::size_t size() const { return points_.size(); }

    /// k nearest neighbors, ascending (distance, index).
    std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const {
        if (k == 0 || k > points_.size())
            throw std::invalid_argument("knn: k must be in [1, cloud size]");
        KnnHeap heap(k);
        search_knn(root_, query, heap);
        return heap.sorted();
    }

    /// All points with distance <= radius, ascending (distance, index).
    std::vector<Neighbor> radius_search(const Vec3& query, double radius) const {
        if (!(radius > 0.0)) throw std::invalid_argument("radius_search: radius must be positive");
        std::vector<Entry> found;
        search_radius(root_, query, radius * radius, found);
        std::sort(found.begin(), found.end());
        std::vector<Neighbor> out;
        out.reserve(found.size());
        for (const auto& e : found) out.push_back({e.index, std::sqrt(e.d2)});
        return out;
    }

private:
    static constexpr std::uint32_t kLeafSize = 16;

    struct Entry {
        double d2;
        std::uint32_t index;
        bool operator<(const Entry& o) const {
            return d2 < o.d2 || (d2 == o.d2 && index < o.index);
        }
    };

    struct Node {
        double split = 0.0;
        std::int32_t axis = -1;  // -1 marks a leaf
        std::uint32_t begin = 0, end = 0;
        std::int32_t left = -1, right = -1;
    };

    // Bounded max-heap keeping the k lexicographically smallest (d2, index).
    class KnnHeap {
    public:
        explicit KnnHeap(std::size_t k) : k_(k) { entries_.reserve(k); }

        double worst_d2() const {
            return entries_.size() < k_ ? std::numeric_limits<double>::infinity()
                                        : entries_.front().d2;
        }

        void offer(const Entry& e) {
            if (entries_.size() < k_) {
                entries_.push_back(e);
                std::push_heap(entries_.begin(), entries_.end());
            } else if (e < entries_.front()) {
                std::pop_heap(entries_.begin(), entries_.end());
                entries_.back() = e;
                std::push_heap(entries_.begin(), entries_.end());
            }
        }

        std::vector<Neighbor> sorted() {
            std::sort(entries_.begin(), entries_.end());
            std::vector<Neighbor> out;
            out.reserve(entries_.size());
            for (const auto& e : entries_) out.push_back({e.index, std::sqrt(e.d2)});
            return out;
        }

    private:
        std::size_t k_;
        std::vector<Entry> entries_;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end) {
        Node node;
        node.begin = begin;
        node.end = end;
        const std::uint32_t count = end - begin;
        if (count > kLeafSize) {
            Aabb box;
            for (std::uint32_t i = begin; i < end; ++i) box.expand(points_[order_[i]]);
            int axis = 0;
            box.extent().maxCoeff(&axis);
            const std::uint32_t mid = begin + count / 2;
            std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                             [&](std::uint32_t a, std::uint32_t b) {
                                 return points_[a][axis] < points_[b][axis];
                             });
            node.axis = axis;
            node.split = points_[order_[mid]][axis];
            const auto id = static_cast<std::int32_t>(nodes_.size());
            nodes_.push_back(node);
            const std::int32_t left = build(begin, mid);
            const std::int32_t right = build(mid, end);
            nodes_[id].left = left;
            nodes_[id].right = right;
            return id;
        }
        nodes_.push_back(node);
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    void scan_leaf(const Node& node, const Vec3& query, KnnHeap& heap) const {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const std::uint32_t idx = order_[i];
            heap.offer({(points_[idx] - query).squaredNorm(), idx});
        }
    }

    void search_knn(std::int32_t node_id, const Vec3& query, KnnHeap& heap) const {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            scan_leaf(node, query, heap);
            return;
        }
        const double delta = query[node.axis] - node.split;
        const std::int32_t near = delta < 0.0 ? node.left : node.right;
        const std::int32_t far = delta < 0.0 ? node.right : node.left;
        search_knn(near, query, heap);
        // Equal plane distance may still hide a lower-index tie: prune strictly.
        if (delta * delta <= heap.worst_d2()) search_knn(far, query, heap);
    }

    void search_radius(std::int32_t node_id, const Vec3& query, double r2,
                       std::vector<Entry>& found) const {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) {
                const std::uint32_t idx = order_[i];
                const double d2 = (points_[idx] - query).squaredNorm();
                if (d2 <= r2) found.push_back({d2, idx});
            }
            return;
        }
        const double delta = query[node.axis] - node.split;
        const std::int32_t near = delta < 0.0 ? node.left : node.right;
        const std::int32_t far = delta < 0.0 ? node.right : node.left;
        search_radius(near, query, r2, found);
        if (delta * delta <= r2) search_radius(far, query, r2, found);
    }

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

inline NeighborIndex build_index(const PointCloud& cloud) { return NeighborIndex(cloud); }

}  // namespace meshreg
