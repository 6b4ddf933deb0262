#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "meshreg/core.hpp"
#include "meshreg/kdtree.hpp"

namespace meshreg {

inline constexpr int kFpfhBinsPerFeature = 11;
inline constexpr int kFpfhDimension = 3 * kFpfhBinsPerFeature;

/// 33-bin histogram: three Darboux-frame angle features, 11 bins each.
using FpfhDescriptor = std::array<double, kFpfhDimension>;

struct FeatureSet {
    std::vector<FpfhDescriptor> descriptors;  // aligned with the cloud's point order

    std::size_t size() const { return descriptors.size(); }
};

struct CorrespondenceSet {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // (source, target)
    std::vector<double> feature_distances;

    std::size_t size() const { return pairs.size(); }
};

namespace detail {

// Darboux-frame angles for the ordered pair (p, q):
//   u = n_p, v = (q - p) x u (normalized), w = u x v
//   alpha = v . n_q, phi = u . (q - p)/|q - p|, theta = atan2(w . n_q, u . n_q)
struct PairAngles {
    double alpha, phi, theta;
};

inline bool pair_angles(const Vec3& p, const Vec3& n_p, const Vec3& q, const Vec3& n_q,
                        PairAngles& out) {
    const Vec3 d = q - p;
    const double dist = d.norm();
    if (!(dist > 0.0)) return false;  // coincident points carry no frame
    const Vec3 u = n_p;
    Vec3 v = d.cross(u);
    const double v_len = v.norm();
    if (v_len > 1e-12) {
        v /= v_len;
    } else {
        // Displacement parallel to the normal: any direction orthogonal to u.
        v = u.unitOrthogonal();
    }
    const Vec3 w = u.cross(v);
    out.alpha = v.dot(n_q);
    out.phi = u.dot(d) / dist;
    double wn = w.dot(n_q);
    const double un = u.dot(n_q);
    // Coplanar anti-parallel normals give wn = +/-epsilon with un < 0; the
    // atan2 branch cut would flip theta between -pi and +pi on rounding noise.
    if (std::abs(wn) <= 1e-12 * std::abs(un)) wn = 0.0;
    out.theta = std::atan2(wn, un);
    return true;
}

// Right-open uniform bins over [lo, hi]; the last bin is closed.
inline int bin_of(double value, double lo, double hi) {
    const double t = (value - lo) / (hi - lo) * kFpfhBinsPerFeature;
    int b = static_cast<int>(std::floor(t));
    if (b < 0) b = 0;
    if (b >= kFpfhBinsPerFeature) b = kFpfhBinsPerFeature - 1;
    return b;
}

inline void accumulate_angles(const PairAngles& a, double weight, FpfhDescriptor& hist) {
    hist[bin_of(a.alpha, -1.0, 1.0)] += weight;
    hist[kFpfhBinsPerFeature + bin_of(a.phi, -1.0, 1.0)] += weight;
    hist[2 * kFpfhBinsPerFeature +
         bin_of(a.theta, -std::numbers::pi, std::numbers::pi)] += weight;
}

}  // namespace detail

/// Simplified point feature histograms: each point's descriptor aggregates the
/// angle triple against every neighbor within the radius (itself excluded).
/// Each 11-bin feature block is normalized to sum 100; isolated points are
/// all-zero.
inline FeatureSet compute_spfh(const PointCloud& cloud, double radius) {
    if (!cloud.has_normals()) throw std::invalid_argument("compute_spfh: cloud has no normals");
    if (!(radius > 0.0)) throw std::invalid_argument("compute_spfh: radius must be positive");

    const NeighborIndex index(cloud);
    FeatureSet out;
    out.descriptors.assign(cloud.size(), FpfhDescriptor{});

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        FpfhDescriptor& hist = out.descriptors[i];
        int pair_count = 0;
        detail::PairAngles angles;
        for (const auto& nb : index.radius_search(cloud.points[i], radius)) {
            if (nb.index == i) continue;
            if (!detail::pair_angles(cloud.points[i], cloud.normals[i], cloud.points[nb.index],
                                     cloud.normals[nb.index], angles))
                continue;
            detail::accumulate_angles(angles, 1.0, hist);
            ++pair_count;
        }
        if (pair_count > 0) {
            const double norm = 100.0 / pair_count;
            for (double& v : hist) v *= norm;
        }
    }
    return out;
}

/// FPFH(p) = SPFH(p) + (1/k) * sum_i SPFH(q_i)/|p - q_i| over the k in-radius
/// neighbors of p.
inline FeatureSet compute_fpfh(const PointCloud& cloud, double radius) {
    const FeatureSet spfh = compute_spfh(cloud, radius);
    const NeighborIndex index(cloud);

    FeatureSet out;
    out.descriptors.assign(cloud.size(), FpfhDescriptor{});
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        FpfhDescriptor weighted{};
        int neighbor_count = 0;
        for (const auto& nb : index.radius_search(cloud.points[i], radius)) {
            if (nb.index == i || !(nb.distance > 0.0)) continue;
            const double w = 1.0 / nb.distance;
            const FpfhDescriptor& nspfh = spfh.descriptors[nb.index];
            for (int b = 0; b < kFpfhDimension; ++b) weighted[b] += w * nspfh[b];
            ++neighbor_count;
        }
        FpfhDescriptor& dst = out.descriptors[i];
        dst = spfh.descriptors[i];
        if (neighbor_count > 0) {
            const double inv_k = 1.0 / neighbor_count;
            for (int b = 0; b < kFpfhDimension; ++b) dst[b] += inv_k * weighted[b];
        }
    }
    return out;
}

namespace detail {

inline double descriptor_d2(const FpfhDescriptor& a, const FpfhDescriptor& b) {
    double d2 = 0.0;
    for (int i = 0; i < kFpfhDimension; ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return d2;
}

// Argmin over rows of the cross-distance; ties go to the lowest index.
inline std::vector<std::uint32_t> nearest_in(const FeatureSet& from, const FeatureSet& to) {
    std::vector<std::uint32_t> best(from.size(), 0);
    for (std::size_t i = 0; i < from.size(); ++i) {
        double best_d2 = std::numeric_limits<double>::infinity();
        std::uint32_t best_j = 0;
        for (std::size_t j = 0; j < to.size(); ++j) {
            const double d2 = descriptor_d2(from.descriptors[i], to.descriptors[j]);
            if (d2 < best_d2) {
                best_d2 = d2;
                best_j = static_cast<std::uint32_t>(j);
            }
        }
        best[i] = best_j;
    }
    return best;
}

}  // namespace detail

/// Keeps (i, j) only when i and j are each other's nearest descriptor.
inline CorrespondenceSet mutual_match(const FeatureSet& source_feats, const FeatureSet& target_feats) {
    if (source_feats.size() == 0 || target_feats.size() == 0)
        throw std::invalid_argument("mutual_match: empty feature set");

    const auto source_to_target = detail::nearest_in(source_feats, target_feats);
    const auto target_to_source = detail::nearest_in(target_feats, source_feats);

    CorrespondenceSet out;
    for (std::uint32_t i = 0; i < source_to_target.size(); ++i) {
        const std::uint32_t j = source_to_target[i];
        if (target_to_source[j] == i) {
            out.pairs.emplace_back(i, j);
            out.feature_distances.push_back(std::sqrt(
                detail::descriptor_d2(source_feats.descriptors[i], target_feats.descriptors[j])));
        }
    }
    return out;
}

}  // namespace meshreg
