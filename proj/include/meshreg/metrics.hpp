#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "meshreg/core.hpp"
#include "meshreg/kdtree.hpp"
#include "meshreg/rng.hpp"

namespace meshreg {

struct MetricsConfig {
    double fscore_threshold = 0.02;  // meters
    std::size_t sample_count = 10000;
    std::uint64_t seed = 0;
};

struct MetricsReport {
    double chamfer_mm = 0.0;
    double fscore_pct = 0.0;
    double precision_pct = 0.0;
    double recall_pct = 0.0;
};

/// Area-uniform surface sampling: faces chosen proportionally to area, points
/// by barycentric coordinates, normals from the face planes. Deterministic for
/// a given seed.
inline PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
    if (mesh.faces.empty()) throw std::invalid_argument("sample_surface: mesh has no faces");

    std::vector<double> cumulative_area;
    cumulative_area.reserve(mesh.faces.size());
    std::vector<Vec3> face_normals(mesh.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        const Vec3& a = mesh.vertices[face[0]];
        const Vec3 cross = (mesh.vertices[face[1]] - a).cross(mesh.vertices[face[2]] - a);
        const double area = 0.5 * cross.norm();
        total += area;
        cumulative_area.push_back(total);
        face_normals[f] = area > 0.0 ? Vec3(cross.normalized()) : Vec3(0, 0, 1);
    }
    if (!(total > 0.0)) throw std::invalid_argument("sample_surface: zero total area");

    Rng rng(seed);
    PointCloud out;
    out.points.reserve(n);
    out.normals.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = rng.uniform() * total;
        const std::size_t f = static_cast<std::size_t>(
            std::upper_bound(cumulative_area.begin(), cumulative_area.end(), pick) -
            cumulative_area.begin());
        const auto& face = mesh.faces[std::min(f, mesh.faces.size() - 1)];
        double u = rng.uniform(), v = rng.uniform();
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        const Vec3& a = mesh.vertices[face[0]];
        out.points.push_back(a + u * (mesh.vertices[face[1]] - a) + v * (mesh.vertices[face[2]] - a));
        out.normals.push_back(face_normals[std::min(f, mesh.faces.size() - 1)]);
    }
    return out;
}

/// Symmetric mean closest-point distance, unsquared:
///   CD = 1/2 (mean_a min_b |a-b| + mean_b min_a |a-b|), in meters.
inline double chamfer(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer: empty cloud");
    const NeighborIndex index_a(a), index_b(b);

    double sum_ab = 0.0;
    for (const auto& p : a.points) sum_ab += index_b.knn(p, 1).front().distance;
    double sum_ba = 0.0;
    for (const auto& q : b.points) sum_ba += index_a.knn(q, 1).front().distance;

    return 0.5 * (sum_ab / static_cast<double>(a.size()) + sum_ba / static_cast<double>(b.size()));
}

struct FscoreResult {
    double precision_pct = 0.0;
    double recall_pct = 0.0;
    double fscore_pct = 0.0;
};

/// Precision/recall at threshold tau (inclusive), as percentages; the F-score
/// is their harmonic mean and 0 when both vanish.
inline FscoreResult fscore(const PointCloud& pred, const PointCloud& gt, double tau) {
    if (pred.empty() || gt.empty()) throw std::invalid_argument("fscore: empty cloud");
    if (!(tau > 0.0)) throw std::invalid_argument("fscore: tau must be positive");
    const NeighborIndex index_pred(pred), index_gt(gt);

    std::size_t pred_hits = 0;
    for (const auto& p : pred.points)
        if (index_gt.knn(p, 1).front().distance <= tau) ++pred_hits;
    std::size_t gt_hits = 0;
    for (const auto& q : gt.points)
        if (index_pred.knn(q, 1).front().distance <= tau) ++gt_hits;

    FscoreResult out;
    out.precision_pct = 100.0 * static_cast<double>(pred_hits) / static_cast<double>(pred.size());
    out.recall_pct = 100.0 * static_cast<double>(gt_hits) / static_cast<double>(gt.size());
    const double pr = out.precision_pct + out.recall_pct;
    out.fscore_pct = pr > 0.0 ? 2.0 * out.precision_pct * out.recall_pct / pr : 0.0;
    return out;
}

inline MetricsReport evaluate_metrics(const PointCloud& pred, const PointCloud& gt,
                                      const MetricsConfig& cfg) {
    MetricsReport report;
    report.chamfer_mm = 1000.0 * chamfer(pred, gt);
    const FscoreResult f = fscore(pred, gt, cfg.fscore_threshold);
    report.precision_pct = f.precision_pct;
    report.recall_pct = f.recall_pct;
    report.fscore_pct = f.fscore_pct;
    return report;
}

}  // namespace meshreg
