#pragma once

// Brute-force reference implementations the fast paths are checked against,
// plus shared random-instance generators. Everything here is deliberately the
// dumbest possible O(n^2) code.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "meshreg/core.hpp"
#include "meshreg/kdtree.hpp"
#include "meshreg/rng.hpp"

namespace testing_oracles {

using meshreg::PointCloud;
using meshreg::Rng;
using meshreg::Vec3;

struct BruteHit {
    double d2;
    std::uint32_t index;
    bool operator<(const BruteHit& o) const {
        return d2 < o.d2 || (d2 == o.d2 && index < o.index);
    }
};

inline std::vector<meshreg::Neighbor> brute_knn(const std::vector<Vec3>& points, const Vec3& query,
                                                std::size_t k) {
    std::vector<BruteHit> hits;
    hits.reserve(points.size());
    for (std::uint32_t i = 0; i < points.size(); ++i)
        hits.push_back({(points[i] - query).squaredNorm(), i});
    std::sort(hits.begin(), hits.end());
    std::vector<meshreg::Neighbor> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back({hits[i].index, std::sqrt(hits[i].d2)});
    return out;
}

inline std::vector<meshreg::Neighbor> brute_radius(const std::vector<Vec3>& points,
                                                   const Vec3& query, double radius) {
    std::vector<BruteHit> hits;
    for (std::uint32_t i = 0; i < points.size(); ++i) {
        const double d2 = (points[i] - query).squaredNorm();
        if (d2 <= radius * radius) hits.push_back({d2, i});
    }
    std::sort(hits.begin(), hits.end());
    std::vector<meshreg::Neighbor> out;
    for (const auto& h : hits) out.push_back({h.index, std::sqrt(h.d2)});
    return out;
}

inline double brute_chamfer(const PointCloud& a, const PointCloud& b) {
    auto one_way = [](const PointCloud& from, const PointCloud& to) {
        double sum = 0.0;
        for (const auto& p : from.points) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to.points) best = std::min(best, (p - q).squaredNorm());
            sum += std::sqrt(best);
        }
        return sum / static_cast<double>(from.size());
    };
    return 0.5 * (one_way(a, b) + one_way(b, a));
}

struct BruteFscore {
    double precision, recall, fscore;
};

inline BruteFscore brute_fscore(const PointCloud& pred, const PointCloud& gt, double tau) {
    auto hit_fraction = [tau](const PointCloud& from, const PointCloud& to) {
        std::size_t hits = 0;
        for (const auto& p : from.points) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to.points) best = std::min(best, (p - q).squaredNorm());
            if (std::sqrt(best) <= tau) ++hits;
        }
        return 100.0 * static_cast<double>(hits) / static_cast<double>(from.size());
    };
    BruteFscore out{hit_fraction(pred, gt), hit_fraction(gt, pred), 0.0};
    if (out.precision + out.recall > 0)
        out.fscore = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

inline PointCloud random_cloud(Rng& rng, std::size_t n, double half_extent = 1.0) {
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        cloud.points.emplace_back(rng.uniform(-half_extent, half_extent),
                                  rng.uniform(-half_extent, half_extent),
                                  rng.uniform(-half_extent, half_extent));
    return cloud;
}

inline double rotation_angle(const meshreg::Mat3& r) {
    const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

}  // namespace testing_oracles
