#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "meshreg/core.hpp"
#include "meshreg/depth.hpp"
#include "meshreg/marching_cubes.hpp"
#include "meshreg/metrics.hpp"
#include "meshreg/rng.hpp"
#include "meshreg/sdf.hpp"

namespace meshreg {

enum class ShapeKind { Sphere, Box, Torus };

/// One analytic primitive in the canonical [-1,1]^3 frame.
/// size: sphere = (radius, -, -); box = half extents; torus = (major, minor, -).
struct PrimitiveSpec {
    ShapeKind kind = ShapeKind::Sphere;
    Vec3 center = Vec3::Zero();
    Vec3 size = Vec3(0.5, 0.5, 0.5);
};

enum class SymmetryClass {
    None,       // orientation fully identifiable
    Discrete,   // finite proper symmetry group (axis-aligned box: 180-degree flips)
    Continuous  // rotations cannot be pinned down at all (sphere, torus axis)
};

/// A shape is one primitive or the union of several.
struct ShapeSpec {
    std::string name = "sphere";
    std::vector<PrimitiveSpec> primitives{PrimitiveSpec{}};

    /// Proper symmetries of the shape; pose errors must be taken modulo these.
    SymmetryClass symmetry() const {
        if (primitives.size() != 1) return SymmetryClass::None;  // compounds are kept asymmetric
        switch (primitives[0].kind) {
            case ShapeKind::Sphere:
            case ShapeKind::Torus:
                return SymmetryClass::Continuous;
            case ShapeKind::Box:
                return SymmetryClass::Discrete;
        }
        return SymmetryClass::None;
    }

    /// Canonical-frame rotations mapping the shape onto itself (identity
    /// included); meaningful for Discrete symmetry.
    std::vector<Mat3> discrete_symmetries() const {
        std::vector<Mat3> group{Mat3::Identity()};
        if (symmetry() == SymmetryClass::Discrete) {
            for (int axis = 0; axis < 3; ++axis) {
                Mat3 flip = -Mat3::Identity();
                flip(axis, axis) = 1.0;  // 180-degree turn about this axis
                group.push_back(flip);
            }
        }
        return group;
    }

    bool rotation_ambiguous() const { return symmetry() != SymmetryClass::None; }

    static ShapeSpec preset(const std::string& name);
};

inline SdfOraclePtr make_oracle(const PrimitiveSpec& p) {
    switch (p.kind) {
        case ShapeKind::Sphere:
            return make_sphere(p.center, p.size.x());
        case ShapeKind::Box:
            return make_box(p.center, p.size);
        case ShapeKind::Torus:
            return make_torus(p.center, p.size.x(), p.size.y());
    }
    throw std::invalid_argument("make_oracle: unknown primitive kind");
}

inline SdfOraclePtr make_oracle(const ShapeSpec& shape) {
    if (shape.primitives.empty()) throw std::invalid_argument("make_oracle: no primitives");
    SdfOraclePtr oracle = make_oracle(shape.primitives[0]);
    for (std::size_t i = 1; i < shape.primitives.size(); ++i)
        oracle = make_union(oracle, make_oracle(shape.primitives[i]));
    return oracle;
}

inline ShapeSpec ShapeSpec::preset(const std::string& name) {
    ShapeSpec spec;
    spec.name = name;
    if (name == "sphere") {
        spec.primitives = {{ShapeKind::Sphere, Vec3::Zero(), Vec3(0.5, 0, 0)}};
    } else if (name == "box") {
        spec.primitives = {{ShapeKind::Box, Vec3::Zero(), Vec3(0.5, 0.35, 0.25)}};
    } else if (name == "torus") {
        spec.primitives = {{ShapeKind::Torus, Vec3::Zero(), Vec3(0.5, 0.2, 0)}};
    } else if (name == "union") {
        spec.primitives = {{ShapeKind::Sphere, Vec3(-0.25, 0, 0.05), Vec3(0.35, 0, 0)},
                           {ShapeKind::Box, Vec3(0.3, 0, -0.1), Vec3(0.3, 0.28, 0.22)}};
    } else {
        throw std::invalid_argument("unknown shape preset '" + name + "'");
    }
    return spec;
}

struct SceneSpec {
    ShapeSpec shape;
    double object_diagonal = 0.15;  // meters, bounding box diagonal of the posed object
    std::optional<RigidScaleTransform> pose;  // unset = random placement in front of the camera
    Vec3 view_direction = Vec3(0, 0, -1);     // canonical frame, toward the surface kept
    double partial_fraction = 0.5;            // target kept fraction; <= 0 keeps the full surface
    double noise_sigma = 0.0;                 // meters
    double outlier_fraction = 0.0;
    std::size_t sample_count = 20000;
    int mesh_resolution = 128;
    bool make_depth_raster = false;
    std::uint64_t seed = 0;
};

struct DepthRaster {
    DepthImage depth;
    CameraIntrinsics intrinsics;
    BinaryMask mask;
};

struct Scene {
    SceneSpec spec;
    TriangleMesh source_mesh;  // canonical frame, bbox diagonal = spec.object_diagonal
    PointCloud target_cloud;   // sensor frame
    RigidScaleTransform gt_transform;
    double retained_fraction = 1.0;
    bool rotation_ambiguous = false;
    std::optional<DepthRaster> depth;
};

namespace detail {

inline DepthRaster splat_depth(const PointCloud& cloud) {
    DepthRaster out;
    out.intrinsics = {525.0, 525.0, 319.5, 239.5, 640, 480};
    out.depth = DepthImage(640, 480);
    out.mask = BinaryMask(640, 480);
    for (const auto& p : cloud.points) {
        if (!(p.z() > 0.0)) continue;
        const int u = static_cast<int>(std::lround(out.intrinsics.fx * p.x() / p.z() + out.intrinsics.cx));
        const int v = static_cast<int>(std::lround(out.intrinsics.fy * p.y() / p.z() + out.intrinsics.cy));
        if (u < 0 || v < 0 || u >= 640 || v >= 480) continue;
        double& d = out.depth.at(u, v);
        if (d == 0.0 || p.z() < d) d = p.z();  // nearest point wins the pixel
        out.mask.set(u, v, true);
    }
    return out;
}

}  // namespace detail

/// Builds a synthetic scene: meshes the analytic shape, rescales it to the
/// requested diagonal, samples a (possibly single-view) target cloud, poses it,
/// and corrupts it with noise and outliers. Bit-reproducible for a given seed.
inline Scene synth_scene(const SceneSpec& spec) {
    if (spec.noise_sigma < 0.0) throw std::invalid_argument("synth_scene: negative noise sigma");
    if (spec.outlier_fraction < 0.0 || spec.outlier_fraction >= 1.0)
        throw std::invalid_argument("synth_scene: outlier fraction must be in [0,1)");
    if (!(spec.object_diagonal > 0.0))
        throw std::invalid_argument("synth_scene: object diagonal must be positive");

    Scene scene;
    scene.spec = spec;
    scene.rotation_ambiguous = spec.shape.rotation_ambiguous();

    // Canonical mesh, centered and rescaled to the requested diagonal.
    const Aabb canonical_bounds{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
    const SdfOraclePtr oracle = make_oracle(spec.shape);
    const DecodeResult decoded = dense_decode(*oracle, spec.mesh_resolution, canonical_bounds);
    scene.source_mesh = marching_cubes(decoded.grid);
    if (scene.source_mesh.faces.empty())
        throw std::runtime_error("synth_scene: shape produced an empty mesh");
    {
        const Aabb box = bounding_box(scene.source_mesh.vertices);
        const double s = spec.object_diagonal / box.diagonal();
        const Vec3 center = box.center();
        for (auto& v : scene.source_mesh.vertices) v = (v - center) * s;
    }

    PointCloud samples = sample_surface(scene.source_mesh, spec.sample_count, substream(spec.seed, 1));

    // Single-view cull: drop points whose normals face away from the camera.
    if (spec.partial_fraction > 0.0) {
        PointCloud kept;
        const Vec3 view = spec.view_direction.normalized();
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples.normals[i].dot(-view) > 0.0) {
                kept.points.push_back(samples.points[i]);
                kept.normals.push_back(samples.normals[i]);
            }
        }
        if (kept.empty()) throw std::runtime_error("synth_scene: degenerate view");
        scene.retained_fraction =
            static_cast<double>(kept.size()) / static_cast<double>(samples.size());
        samples = std::move(kept);
    }

    // Pose: given, or a random placement that keeps the retained surface
    // facing the sensor origin.
    if (spec.pose) {
        scene.gt_transform = *spec.pose;
    } else {
        Rng rng(substream(spec.seed, 0));
        scene.gt_transform.scale = 1.0;
        scene.gt_transform.rotation = rng.rotation();
        const double distance = rng.uniform(0.45, 0.7);
        const Vec3 lateral(0.04 * rng.normal(), 0.04 * rng.normal(), 0.02 * rng.normal());
        scene.gt_transform.translation =
            distance * (scene.gt_transform.rotation * spec.view_direction.normalized()) + lateral;
    }

    scene.target_cloud = apply_transform(samples, scene.gt_transform);

    if (spec.noise_sigma > 0.0) {
        Rng rng(substream(spec.seed, 2));
        for (auto& p : scene.target_cloud.points) p += rng.normal_vec3(spec.noise_sigma);
    }

    const std::size_t outliers =
        static_cast<std::size_t>(spec.outlier_fraction * static_cast<double>(scene.target_cloud.size()));
    if (outliers > 0) {
        Rng rng(substream(spec.seed, 3));
        Aabb box = bounding_box(scene.target_cloud.points);
        const Vec3 center = box.center();
        const Vec3 half = 0.75 * box.extent();  // 1.5x the bounding box
        // Partial Fisher-Yates pick of distinct victims.
        std::vector<std::uint32_t> order(scene.target_cloud.size());
        for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = 0; i < outliers; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.index(order.size() - i));
            std::swap(order[i], order[j]);
            scene.target_cloud.points[order[i]] =
                center + Vec3(half.x() * rng.uniform(-1.0, 1.0), half.y() * rng.uniform(-1.0, 1.0),
                              half.z() * rng.uniform(-1.0, 1.0));
        }
    }

    // Targets are positions only: normals do not survive a real sensor.
    scene.target_cloud.normals.clear();

    if (spec.make_depth_raster) scene.depth = detail::splat_depth(scene.target_cloud);
    return scene;
}

}  // namespace meshreg
