#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

namespace meshreg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Point set in meters, with optional per-point unit normals.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // empty, or same length as points

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }
};

/// Indexed triangle mesh. Faces are CCW when viewed from outside.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;

    bool empty() const { return faces.empty(); }
};

/// Similarity transform p -> scale * rotation * p + translation.
struct RigidScaleTransform {
    double scale = 1.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidScaleTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }

    bool valid(double tol = 1e-9) const {
        if (!(scale > 0.0) || !std::isfinite(scale)) return false;
        Mat3 rtr = rotation.transpose() * rotation;
        if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
        return std::abs(rotation.determinant() - 1.0) <= tol;
    }
};

/// Applies inner first, then outer.
inline RigidScaleTransform compose(const RigidScaleTransform& outer,
                                   const RigidScaleTransform& inner) {
    RigidScaleTransform out;
    out.scale = outer.scale * inner.scale;
    out.rotation = outer.rotation * inner.rotation;
    out.translation = outer.scale * (outer.rotation * inner.translation) + outer.translation;
    return out;
}

inline RigidScaleTransform inverse(const RigidScaleTransform& t) {
    RigidScaleTransform out;
    out.scale = 1.0 / t.scale;
    out.rotation = t.rotation.transpose();
    out.translation = -(out.scale * (out.rotation * t.translation));
    return out;
}

struct Aabb {
    Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

    void expand(const Vec3& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
    Vec3 extent() const { return max - min; }
    Vec3 center() const { return 0.5 * (min + max); }
    double diagonal() const { return extent().norm(); }
    bool valid() const { return (min.array() <= max.array()).all(); }
};

inline Aabb bounding_box(const std::vector<Vec3>& pts) {
    if (pts.empty()) throw std::invalid_argument("bounding_box: empty input");
    Aabb box;
    for (const auto& p : pts) box.expand(p);
    return box;
}

/// Length of the axis-aligned bounding box diagonal.
inline double bbox_diagonal(const PointCloud& cloud) {
    if (cloud.empty()) throw std::invalid_argument("bbox_diagonal: empty input");
    return bounding_box(cloud.points).diagonal();
}

/// Points are scaled+rotated+translated; normals are rotated only and renormalized.
inline PointCloud apply_transform(const PointCloud& cloud, const RigidScaleTransform& t) {
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
    if (cloud.has_normals()) {
        out.normals.reserve(cloud.normals.size());
        for (const auto& n : cloud.normals) out.normals.push_back((t.rotation * n).normalized());
    }
    return out;
}

inline TriangleMesh apply_transform(const TriangleMesh& mesh, const RigidScaleTransform& t) {
    TriangleMesh out;
    out.vertices.reserve(mesh.vertices.size());
    for (const auto& v : mesh.vertices) out.vertices.push_back(t.apply(v));
    out.faces = mesh.faces;
    return out;
}

/// Grid-bucket downsampling; each occupied voxel contributes the centroid of its
/// members (mean normal, renormalized, when normals are present). Output is
/// ordered by voxel key so the result does not depend on bucket iteration order.
inline PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
    if (!(voxel_size > 0.0)) throw std::invalid_argument("voxel_downsample: voxel size must be positive");
    if (cloud.empty()) return {};
    const Aabb box = bounding_box(cloud.points);
    const bool with_normals = cloud.has_normals();

    struct Bucket {
        Vec3 pos_sum = Vec3::Zero();
        Vec3 nrm_sum = Vec3::Zero();
        std::size_t count = 0;
    };
    std::map<std::array<std::int64_t, 3>, Bucket> buckets;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3 rel = (cloud.points[i] - box.min) / voxel_size;
        std::array<std::int64_t, 3> key{static_cast<std::int64_t>(std::floor(rel.x())),
                                        static_cast<std::int64_t>(std::floor(rel.y())),
                                        static_cast<std::int64_t>(std::floor(rel.z()))};
        Bucket& b = buckets[key];
        b.pos_sum += cloud.points[i];
        if (with_normals) b.nrm_sum += cloud.normals[i];
        b.count++;
    }

    PointCloud out;
    out.points.reserve(buckets.size());
    if (with_normals) out.normals.reserve(buckets.size());
    for (const auto& [key, b] : buckets) {
        out.points.push_back(b.pos_sum / static_cast<double>(b.count));
        if (with_normals) {
            const double len = b.nrm_sum.norm();
            out.normals.push_back(len > 1e-12 ? Vec3(b.nrm_sum / len) : Vec3(0, 0, 1));
        }
    }
    return out;
}

/// Mean point spacing estimate for a cloud occupying its bounding box.
inline double estimate_point_spacing(const PointCloud& cloud) {
    if (cloud.empty()) throw std::invalid_argument("estimate_point_spacing: empty input");
    return bbox_diagonal(cloud) / std::cbrt(static_cast<double>(cloud.size()));
}

}  // namespace meshreg
