#pragma once

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "meshreg/core.hpp"
#include "meshreg/kdtree.hpp"

namespace meshreg {

struct NormalEstimate {
    PointCloud cloud;                        // input points + estimated normals
    std::vector<std::uint8_t> low_confidence;  // set where the neighborhood was rank-deficient
};

/// Per-point normal from the smallest eigenvector of the k-NN covariance
/// (the query point is its own first neighbor). Signs are flipped so that
/// n . (viewpoint - p) >= 0. Rank-deficient neighborhoods (collinear or
/// coincident points) keep an arbitrary unit normal and are flagged.
inline NormalEstimate estimate_normals(const PointCloud& cloud, std::size_t k, const Vec3& viewpoint) {
    if (k < 3) throw std::invalid_argument("estimate_normals: k must be >= 3");
    if (cloud.size() < k) throw std::invalid_argument("estimate_normals: cloud smaller than k");

    const NeighborIndex index(cloud);
    NormalEstimate out;
    out.cloud.points = cloud.points;
    out.cloud.normals.resize(cloud.size());
    out.low_confidence.assign(cloud.size(), 0);

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto neighbors = index.knn(cloud.points[i], k);
        Vec3 mean = Vec3::Zero();
        for (const auto& nb : neighbors) mean += cloud.points[nb.index];
        mean /= static_cast<double>(neighbors.size());

        Mat3 cov = Mat3::Zero();
        for (const auto& nb : neighbors) {
            const Vec3 d = cloud.points[nb.index] - mean;
            cov += d * d.transpose();
        }
        cov /= static_cast<double>(neighbors.size());

        Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
        const Vec3 eigenvalues = solver.eigenvalues();  // ascending
        Vec3 normal = solver.eigenvectors().col(0);

        // rank < 2: the two smallest eigenvalues vanish relative to the largest.
        const double scale = eigenvalues[2];
        if (!(scale > 0.0) || eigenvalues[1] <= 1e-9 * scale) {
            out.low_confidence[i] = 1;
            if (!normal.allFinite() || normal.norm() < 0.5) normal = Vec3(0, 0, 1);
        }
        normal.normalize();
        if (normal.dot(viewpoint - cloud.points[i]) < 0.0) normal = -normal;
        out.cloud.normals[i] = normal;
    }
    return out;
}

}  // namespace meshreg
