#pragma once

#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "meshreg/core.hpp"
#include "meshreg/fpfh.hpp"
#include "meshreg/kdtree.hpp"
#include "meshreg/metrics.hpp"
#include "meshreg/normals.hpp"
#include "meshreg/rng.hpp"

namespace meshreg {

namespace defaults {
inline constexpr double kVoxelSize = 0.005;            // tabletop-scale downsampling, meters
inline constexpr double kInlierThresholdFactor = 1.5;  // x voxel size
inline constexpr double kIcpMaxDistFactor = 2.5;       // x voxel size
inline constexpr double kFpfhRadiusFactor = 5.0;       // x estimated point spacing
inline constexpr std::size_t kNormalsK = 30;
inline constexpr std::size_t kSourceSamples = 20000;
}  // namespace defaults

/// Closed-form least-squares rigid fit of matched point lists, with the SVD
/// factors kept for inspection.
struct ProcrustesFit {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    Vec3 source_centroid = Vec3::Zero();
    Vec3 target_centroid = Vec3::Zero();
    Mat3 cross_covariance = Mat3::Zero();
    Mat3 svd_u = Mat3::Identity();
    Vec3 svd_s = Vec3::Zero();
    Mat3 svd_v = Mat3::Identity();
    double rmse = 0.0;
};

namespace detail {

/// Non-throwing core; nullopt when the paired sets are rank-deficient
/// (collinear or coincident), where the rotation is not identifiable.
inline std::optional<ProcrustesFit> try_fit_rigid(const std::vector<Vec3>& xs,
                                                  const std::vector<Vec3>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit_rigid: size mismatch");
    if (xs.size() < 3) throw std::invalid_argument("fit_rigid: need at least 3 pairs");

    const double n = static_cast<double>(xs.size());
    Vec3 x_bar = Vec3::Zero(), y_bar = Vec3::Zero();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        x_bar += xs[i];
        y_bar += ys[i];
    }
    x_bar /= n;
    y_bar /= n;

    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < xs.size(); ++i) h += (xs[i] - x_bar) * (ys[i] - y_bar).transpose();

    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sigma = svd.singularValues();  // descending
    if (!(sigma[0] > 0.0) || sigma[1] <= 1e-9 * sigma[0]) return std::nullopt;

    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;

    ProcrustesFit fit;
    fit.rotation = v * d * u.transpose();
    fit.translation = y_bar - fit.rotation * x_bar;
    fit.source_centroid = x_bar;
    fit.target_centroid = y_bar;
    fit.cross_covariance = h;
    fit.svd_u = u;
    fit.svd_s = sigma;
    fit.svd_v = v;

    double sq_sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        sq_sum += (fit.rotation * xs[i] + fit.translation - ys[i]).squaredNorm();
    fit.rmse = std::sqrt(sq_sum / n);
    return fit;
}

}  // namespace detail

/// Orthogonal Procrustes: minimizes sum |R x_i + t - y_i|^2 over R in SO(3)
/// and t, via the SVD of the centered cross-covariance with the determinant
/// correction that rules out reflections.
inline ProcrustesFit fit_rigid(const std::vector<Vec3>& xs, const std::vector<Vec3>& ys) {
    auto fit = detail::try_fit_rigid(xs, ys);
    if (!fit) throw std::invalid_argument("fit_rigid: degenerate sample");
    return *fit;
}

/// Initial scale: ratio of bounding box diagonals (target over source).
inline double init_scale(const PointCloud& source, const PointCloud& target) {
    const double source_diag = bbox_diagonal(source);
    const double target_diag = bbox_diagonal(target);
    if (!(source_diag > 0.0)) throw std::invalid_argument("init_scale: degenerate source");
    return target_diag / source_diag;
}

struct RansacConfig {
    int max_iterations = 10000;
    double inlier_threshold = defaults::kInlierThresholdFactor * defaults::kVoxelSize;
    static constexpr int sample_size = 3;
    double confidence = 0.999;
    std::uint64_t seed = 0;
};

struct IcpConfig {
    int max_iterations = 50;
    double max_correspondence_distance = defaults::kIcpMaxDistFactor * defaults::kVoxelSize;
    double convergence_rel_change = 1e-6;
};

struct RegistrationResult {
    RigidScaleTransform transform;
    std::size_t inlier_count = 0;
    double inlier_rmse = 0.0;
    int iterations_used = 0;
    bool converged = false;
};

/// RANSAC over putative correspondences. The source cloud is expected to carry
/// the initial scale already; hypotheses are rigid only (the scale is never
/// re-estimated). Deterministic: iteration i draws from substream(seed, i) and
/// ties are resolved by (more inliers, lower inlier RMSE, earlier iteration).
inline RegistrationResult ransac_register(const CorrespondenceSet& correspondences,
                                          const PointCloud& source, const PointCloud& target,
                                          const RansacConfig& cfg) {
    const std::size_t n_corr = correspondences.size();
    if (n_corr < 3) throw std::invalid_argument("ransac_register: need at least 3 correspondences");
    if (!(cfg.inlier_threshold > 0.0))
        throw std::invalid_argument("ransac_register: inlier threshold must be positive");
    if (!(cfg.confidence > 0.0) || !(cfg.confidence < 1.0))
        throw std::invalid_argument("ransac_register: confidence must be in (0,1)");

    std::vector<Vec3> src_pts(n_corr), tgt_pts(n_corr);
    for (std::size_t i = 0; i < n_corr; ++i) {
        src_pts[i] = source.points[correspondences.pairs[i].first];
        tgt_pts[i] = target.points[correspondences.pairs[i].second];
    }

    const double thresh2 = cfg.inlier_threshold * cfg.inlier_threshold;
    auto score = [&](const Mat3& r, const Vec3& t, std::vector<std::uint32_t>* inliers,
                     double& rmse) {
        std::size_t count = 0;
        double sq_sum = 0.0;
        for (std::size_t i = 0; i < n_corr; ++i) {
            const double d2 = (r * src_pts[i] + t - tgt_pts[i]).squaredNorm();
            if (d2 <= thresh2) {
                ++count;
                sq_sum += d2;
                if (inliers) inliers->push_back(static_cast<std::uint32_t>(i));
            }
        }
        rmse = count > 0 ? std::sqrt(sq_sum / static_cast<double>(count)) : 0.0;
        return count;
    };

    std::size_t best_count = 0;
    double best_rmse = std::numeric_limits<double>::infinity();
    Mat3 best_r = Mat3::Identity();
    Vec3 best_t = Vec3::Zero();
    int iterations_done = 0;

    std::vector<Vec3> sample_x(3), sample_y(3);
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        iterations_done = iter + 1;
        Rng rng(substream(cfg.seed, static_cast<std::uint64_t>(iter)));

        // Degenerate draws retry within the iteration, bounded by a fixed cap.
        std::optional<ProcrustesFit> fit;
        for (int attempt = 0; attempt < 10 && !fit; ++attempt) {
            const std::uint64_t i0 = rng.index(n_corr);
            std::uint64_t i1 = rng.index(n_corr);
            std::uint64_t i2 = rng.index(n_corr);
            if (i1 == i0 || i2 == i0 || i2 == i1) continue;
            sample_x = {src_pts[i0], src_pts[i1], src_pts[i2]};
            sample_y = {tgt_pts[i0], tgt_pts[i1], tgt_pts[i2]};
            fit = detail::try_fit_rigid(sample_x, sample_y);
        }
        if (fit) {
            double rmse = 0.0;
            const std::size_t count = score(fit->rotation, fit->translation, nullptr, rmse);
            if (count > best_count || (count == best_count && rmse < best_rmse)) {
                best_count = count;
                best_rmse = rmse;
                best_r = fit->rotation;
                best_t = fit->translation;
            }
        }

        const double w = static_cast<double>(best_count) / static_cast<double>(n_corr);
        if (std::pow(1.0 - w * w * w, static_cast<double>(iterations_done)) <= 1.0 - cfg.confidence)
            break;
    }

    RegistrationResult result;
    result.iterations_used = iterations_done;
    if (best_count < 3) {
        result.inlier_count = best_count;
        result.inlier_rmse = std::numeric_limits<double>::infinity();
        result.converged = false;
        return result;
    }

    // Refit on the full inlier set of the winning hypothesis.
    std::vector<std::uint32_t> inliers;
    double rmse_unused = 0.0;
    score(best_r, best_t, &inliers, rmse_unused);
    std::vector<Vec3> in_x, in_y;
    in_x.reserve(inliers.size());
    in_y.reserve(inliers.size());
    for (std::uint32_t idx : inliers) {
        in_x.push_back(src_pts[idx]);
        in_y.push_back(tgt_pts[idx]);
    }
    if (auto refit = detail::try_fit_rigid(in_x, in_y)) {
        best_r = refit->rotation;
        best_t = refit->translation;
    }

    result.transform.scale = 1.0;
    result.transform.rotation = best_r;
    result.transform.translation = best_t;
    result.inlier_count = score(best_r, best_t, nullptr, result.inlier_rmse);
    result.converged = true;
    return result;
}

/// Point-to-point ICP. The scale component of the initial transform is held
/// fixed; every iteration re-matches transformed source points to their
/// nearest target neighbors (pairs beyond the distance cap are dropped) and
/// composes a Procrustes update onto the current estimate.
inline RegistrationResult icp_refine(const PointCloud& source, const PointCloud& target,
                                     const RigidScaleTransform& init, const IcpConfig& cfg) {
    if (source.empty() || target.empty()) throw std::invalid_argument("icp_refine: empty cloud");
    if (cfg.max_iterations <= 0 || !(cfg.max_correspondence_distance > 0.0) ||
        !(cfg.convergence_rel_change > 0.0))
        throw std::invalid_argument("icp_refine: config values must be positive");

    const NeighborIndex target_index(target);

    RegistrationResult result;
    result.transform = init;
    double prev_rmse = -1.0;

    std::vector<Vec3> xs, ys;
    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        result.iterations_used = iter;
        xs.clear();
        ys.clear();
        double sq_sum = 0.0;
        for (const auto& p : source.points) {
            const Vec3 moved = result.transform.apply(p);
            const Neighbor nb = target_index.knn(moved, 1).front();
            if (nb.distance <= cfg.max_correspondence_distance) {
                xs.push_back(moved);
                ys.push_back(target.points[nb.index]);
                sq_sum += nb.distance * nb.distance;
            }
        }
        if (xs.empty()) {
            result.inlier_count = 0;
            result.inlier_rmse = std::numeric_limits<double>::infinity();
            result.converged = false;
            return result;
        }

        const double current_rmse = std::sqrt(sq_sum / static_cast<double>(xs.size()));
        result.inlier_count = xs.size();
        result.inlier_rmse = current_rmse;
        if (current_rmse == 0.0 ||
            (prev_rmse >= 0.0 && std::abs(prev_rmse - current_rmse) <=
                                     cfg.convergence_rel_change * std::max(prev_rmse, current_rmse))) {
            result.converged = true;
            return result;
        }

        const auto fit = detail::try_fit_rigid(xs, ys);
        if (!fit) {
            result.converged = false;
            return result;
        }
        RigidScaleTransform update;
        update.rotation = fit->rotation;
        update.translation = fit->translation;
        result.transform = compose(update, result.transform);
        prev_rmse = current_rmse;
    }
    result.converged = false;
    return result;
}

/// Per-stage wall-clock record of a full registration run.
struct RegisterTrace {
    std::vector<std::pair<std::string, double>> stage_ms;
    double initial_scale = 0.0;
    double voxel_size = 0.0;
    double fpfh_radius = 0.0;
    std::size_t source_samples = 0;
    std::size_t source_down = 0;
    std::size_t target_down = 0;
    std::size_t correspondences = 0;
    RegistrationResult ransac;
};

struct RegistrationOutcome {
    RegistrationResult result;
    RegisterTrace trace;
};

/// Full pipeline: sample the source mesh, estimate target normals, match the
/// bounding box diagonals for scale, downsample, FPFH + mutual matching,
/// RANSAC, then ICP against the full-resolution clouds. The returned transform
/// maps the canonical mesh frame into the sensor frame.
inline RegistrationOutcome register_object(const TriangleMesh& source_mesh,
                                           const PointCloud& target,
                                           const RansacConfig& ransac_cfg = {},
                                           const IcpConfig& icp_cfg = {}) {
    if (source_mesh.faces.empty()) throw std::invalid_argument("register_object: empty source mesh");
    if (target.empty()) throw std::invalid_argument("register_object: empty target cloud");

    using Clock = std::chrono::steady_clock;
    RegistrationOutcome out;
    auto mark = Clock::now();
    auto record = [&](const char* name) {
        const auto now = Clock::now();
        out.trace.stage_ms.emplace_back(
            name, std::chrono::duration<double, std::milli>(now - mark).count());
        mark = now;
    };

    // Both clouds get k-NN PCA normals so their descriptors see the same
    // smoothing. Signs: the source keeps the sampled face orientation, the
    // target points toward the sensor origin.
    PointCloud source_cloud =
        sample_surface(source_mesh, defaults::kSourceSamples, substream(ransac_cfg.seed, 0x5a3f));
    {
        PointCloud smoothed =
            estimate_normals(source_cloud, std::min(defaults::kNormalsK, source_cloud.size()),
                             Vec3::Zero())
                .cloud;
        for (std::size_t i = 0; i < smoothed.size(); ++i)
            if (smoothed.normals[i].dot(source_cloud.normals[i]) < 0.0)
                smoothed.normals[i] = -smoothed.normals[i];
        source_cloud.normals = std::move(smoothed.normals);
    }
    const PointCloud target_with_normals =
        estimate_normals(target, std::min(defaults::kNormalsK, target.size()), Vec3::Zero()).cloud;
    record("normals");

    const double voxel = defaults::kVoxelSize;
    out.trace.voxel_size = voxel;
    const PointCloud target_down = voxel_downsample(target_with_normals, voxel);

    // Scale from bounding box diagonals: mesh vertices span the source surface
    // exactly, and the voxel-averaged target suppresses the upward bias that
    // per-point noise puts on raw bounding box extremes.
    PointCloud source_vertex_cloud;
    source_vertex_cloud.points = source_mesh.vertices;
    const double s0 = init_scale(source_vertex_cloud, target_down);
    out.trace.initial_scale = s0;

    RigidScaleTransform scale_only;
    scale_only.scale = s0;
    const PointCloud source_scaled = apply_transform(source_cloud, scale_only);
    const PointCloud source_down = voxel_downsample(source_scaled, voxel);
    out.trace.source_samples = source_cloud.size();
    out.trace.source_down = source_down.size();
    out.trace.target_down = target_down.size();
    record("downsample");

    // After voxel downsampling the grid pitch is the point spacing; a
    // bounding-box-based estimate would treat the surface cloud as volumetric
    // and blow the radius up to object scale.
    const double radius = defaults::kFpfhRadiusFactor * voxel;
    out.trace.fpfh_radius = radius;
    const FeatureSet source_feats = compute_fpfh(source_down, radius);
    const FeatureSet target_feats = compute_fpfh(target_down, radius);
    record("fpfh");

    const CorrespondenceSet correspondences = mutual_match(source_feats, target_feats);
    out.trace.correspondences = correspondences.size();
    record("matching");

    if (correspondences.size() < 3) {
        record("ransac");
        record("icp");
        out.result.converged = false;
        out.result.inlier_rmse = std::numeric_limits<double>::infinity();
        return out;
    }

    RansacConfig rcfg = ransac_cfg;
    if (!(rcfg.inlier_threshold > 0.0))
        rcfg.inlier_threshold = defaults::kInlierThresholdFactor * voxel;
    const RegistrationResult ransac = ransac_register(correspondences, source_down, target_down, rcfg);
    out.trace.ransac = ransac;
    record("ransac");

    if (!ransac.converged) {
        record("icp");
        out.result = ransac;
        out.result.converged = false;
        return out;
    }

    RigidScaleTransform icp_init;
    icp_init.scale = s0;
    icp_init.rotation = ransac.transform.rotation;
    icp_init.translation = ransac.transform.translation;

    IcpConfig icfg = icp_cfg;
    if (!(icfg.max_correspondence_distance > 0.0))
        icfg.max_correspondence_distance = defaults::kIcpMaxDistFactor * voxel;
    out.result = icp_refine(source_cloud, target, icp_init, icfg);
    record("icp");
    return out;
}

}  // namespace meshreg
