#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "meshreg/core.hpp"

namespace meshreg {

/// Batched signed distance source (negative inside). Implementations must be
/// deterministic; the query counter is atomic so batches may run concurrently.
class SdfOracle {
public:
    virtual ~SdfOracle() = default;

    void evaluate(std::span<const Vec3> points, std::span<double> out) const {
        if (points.size() != out.size()) throw std::invalid_argument("SdfOracle: batch size mismatch");
        evaluate_impl(points, out);
        query_count_.fetch_add(points.size(), std::memory_order_relaxed);
    }

    double evaluate_one(const Vec3& p) const {
        double value = 0.0;
        evaluate({&p, 1}, {&value, 1});
        return value;
    }

    std::uint64_t query_count() const { return query_count_.load(std::memory_order_relaxed); }

protected:
    virtual void evaluate_impl(std::span<const Vec3> points, std::span<double> out) const = 0;

private:
    mutable std::atomic<std::uint64_t> query_count_{0};
};

using SdfOraclePtr = std::shared_ptr<SdfOracle>;

namespace detail {

class SphereSdf final : public SdfOracle {
public:
    SphereSdf(const Vec3& center, double radius) : center_(center), radius_(radius) {
        if (!(radius > 0.0)) throw std::invalid_argument("make_sphere: radius must be positive");
    }

protected:
    void evaluate_impl(std::span<const Vec3> points, std::span<double> out) const override {
        for (std::size_t i = 0; i < points.size(); ++i)
            out[i] = (points[i] - center_).norm() - radius_;
    }

private:
    Vec3 center_;
    double radius_;
};

class BoxSdf final : public SdfOracle {
public:
    BoxSdf(const Vec3& center, const Vec3& half_extents) : center_(center), half_(half_extents) {
        if (!(half_extents.minCoeff() > 0.0))
            throw std::invalid_argument("make_box: half extents must be positive");
    }

protected:
    void evaluate_impl(std::span<const Vec3> points, std::span<double> out) const override {
        for (std::size_t i = 0; i < points.size(); ++i) {
            const Vec3 q = (points[i] - center_).cwiseAbs() - half_;
            const double outside = q.cwiseMax(0.0).norm();
            const double inside = std::min(q.maxCoeff(), 0.0);
            out[i] = outside + inside;
        }
    }

private:
    Vec3 center_;
    Vec3 half_;
};

class TorusSdf final : public SdfOracle {
public:
    TorusSdf(const Vec3& center, double major_radius, double minor_radius)
        : center_(center), major_(major_radius), minor_(minor_radius) {
        if (!(major_radius > 0.0) || !(minor_radius > 0.0))
            throw std::invalid_argument("make_torus: radii must be positive");
    }

protected:
    void evaluate_impl(std::span<const Vec3> points, std::span<double> out) const override {
        for (std::size_t i = 0; i < points.size(); ++i) {
            const Vec3 p = points[i] - center_;
            const double ring = std::hypot(p.x(), p.y()) - major_;
            out[i] = std::hypot(ring, p.z()) - minor_;
        }
    }

private:
    Vec3 center_;
    double major_, minor_;
};

class UnionSdf final : public SdfOracle {
public:
    UnionSdf(SdfOraclePtr a, SdfOraclePtr b) : a_(std::move(a)), b_(std::move(b)) {
        if (!a_ || !b_) throw std::invalid_argument("make_union: null operand");
    }

protected:
    void evaluate_impl(std::span<const Vec3> points, std::span<double> out) const override {
        std::vector<double> other(points.size());
        a_->evaluate(points, out);
        b_->evaluate(points, {other.data(), other.size()});
        for (std::size_t i = 0; i < points.size(); ++i) out[i] = std::min(out[i], other[i]);
    }

private:
    SdfOraclePtr a_, b_;
};

}  // namespace detail

inline SdfOraclePtr make_sphere(const Vec3& center, double radius) {
    return std::make_shared<detail::SphereSdf>(center, radius);
}
inline SdfOraclePtr make_box(const Vec3& center, const Vec3& half_extents) {
    return std::make_shared<detail::BoxSdf>(center, half_extents);
}
inline SdfOraclePtr make_torus(const Vec3& center, double major_radius, double minor_radius) {
    return std::make_shared<detail::TorusSdf>(center, major_radius, minor_radius);
}
inline SdfOraclePtr make_union(SdfOraclePtr a, SdfOraclePtr b) {
    return std::make_shared<detail::UnionSdf>(std::move(a), std::move(b));
}

/// Sampled SDF lattice of (resolution+1)^3 points over an axis-aligned box.
/// Dense grids store every lattice value; sparse grids (from the hierarchical
/// decoder) store decoded values plus the coarse base grid, and unevaluated
/// points fall back to trilinear interpolation of the coarse values.
struct VoxelGrid {
    int resolution = 0;  // cells per axis
    Aabb bounds;

    std::vector<double> dense_values;  // (resolution+1)^3, lexicographic (z, y, x)

    int coarse_resolution = 0;  // nonzero marks a sparse grid
    std::vector<double> coarse_values;
    std::unordered_map<std::uint64_t, double> sparse_values;
    std::vector<std::uint64_t> surface_cells;  // sorted cell ids of the refined band

    bool dense() const { return coarse_resolution == 0; }

    std::uint64_t lattice_index(int i, int j, int k) const {
        const std::uint64_t n = static_cast<std::uint64_t>(resolution) + 1;
        return (static_cast<std::uint64_t>(k) * n + static_cast<std::uint64_t>(j)) * n +
               static_cast<std::uint64_t>(i);
    }

    std::uint64_t cell_index(int i, int j, int k) const {
        const std::uint64_t n = static_cast<std::uint64_t>(resolution);
        return (static_cast<std::uint64_t>(k) * n + static_cast<std::uint64_t>(j)) * n +
               static_cast<std::uint64_t>(i);
    }

    Vec3 lattice_point(int i, int j, int k) const {
        const Vec3 extent = bounds.extent();
        const double r = static_cast<double>(resolution);
        return Vec3(bounds.min.x() + extent.x() * (static_cast<double>(i) / r),
                    bounds.min.y() + extent.y() * (static_cast<double>(j) / r),
                    bounds.min.z() + extent.z() * (static_cast<double>(k) / r));
    }

    bool evaluated_at(int i, int j, int k) const {
        if (dense()) return true;
        return sparse_values.count(lattice_index(i, j, k)) != 0;
    }

    double value_at(int i, int j, int k) const {
        if (dense()) return dense_values[lattice_index(i, j, k)];
        const auto it = sparse_values.find(lattice_index(i, j, k));
        if (it != sparse_values.end()) return it->second;
        return coarse_interpolated(i, j, k);
    }

    /// Trilinear interpolation of the coarse base grid at a fine lattice point.
    double coarse_interpolated(int i, int j, int k) const {
        const int stride = resolution / coarse_resolution;
        const auto cell_of = [&](int v) {
            return std::min(v / stride, coarse_resolution - 1);
        };
        const int ci = cell_of(i), cj = cell_of(j), ck = cell_of(k);
        const double tx = (static_cast<double>(i) - static_cast<double>(ci) * stride) / stride;
        const double ty = (static_cast<double>(j) - static_cast<double>(cj) * stride) / stride;
        const double tz = (static_cast<double>(k) - static_cast<double>(ck) * stride) / stride;
        const std::uint64_t n = static_cast<std::uint64_t>(coarse_resolution) + 1;
        const auto at = [&](int a, int b, int c) {
            return coarse_values[(static_cast<std::uint64_t>(c) * n + b) * n + a];
        };
        const double c00 = at(ci, cj, ck) * (1 - tx) + at(ci + 1, cj, ck) * tx;
        const double c10 = at(ci, cj + 1, ck) * (1 - tx) + at(ci + 1, cj + 1, ck) * tx;
        const double c01 = at(ci, cj, ck + 1) * (1 - tx) + at(ci + 1, cj, ck + 1) * tx;
        const double c11 = at(ci, cj + 1, ck + 1) * (1 - tx) + at(ci + 1, cj + 1, ck + 1) * tx;
        return (c00 * (1 - ty) + c10 * ty) * (1 - tz) + (c01 * (1 - ty) + c11 * ty) * tz;
    }
};

struct DecodeStats {
    std::uint64_t queries_issued = 0;
    std::uint64_t dense_equivalent = 0;  // (resolution+1)^3
    double reduction = 0.0;              // 1 - queries / dense_equivalent
    double wall_time = 0.0;              // seconds
    bool surface_found = true;
};

struct DecodeResult {
    VoxelGrid grid;
    DecodeStats stats;
};

struct HierarchicalConfig {
    int coarse_resolution = 0;  // 0 = auto: resolution / 8 (largest power-of-two ratio that divides)
    double band_halfwidth_voxels = 1.5;
    int dilation_cells = 1;
};

namespace detail {

inline constexpr std::size_t kDecodeBatch = 1 << 16;

inline void batched_evaluate(const SdfOracle& oracle, const std::vector<Vec3>& points,
                             std::vector<double>& out) {
    out.resize(points.size());
    for (std::size_t begin = 0; begin < points.size(); begin += kDecodeBatch) {
        const std::size_t count = std::min(kDecodeBatch, points.size() - begin);
        oracle.evaluate({points.data() + begin, count}, {out.data() + begin, count});
    }
}

}  // namespace detail

/// Evaluates every lattice point of the target resolution.
inline DecodeResult dense_decode(const SdfOracle& oracle, int resolution, const Aabb& bounds) {
    if (resolution < 2) throw std::invalid_argument("dense_decode: resolution must be >= 2");
    if (!bounds.valid()) throw std::invalid_argument("dense_decode: invalid bounds");

    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t before = oracle.query_count();

    DecodeResult out;
    out.grid.resolution = resolution;
    out.grid.bounds = bounds;
    const std::uint64_t n = static_cast<std::uint64_t>(resolution) + 1;
    out.grid.dense_values.resize(n * n * n);

    std::vector<Vec3> batch;
    batch.reserve(detail::kDecodeBatch);
    std::vector<double> values;
    std::uint64_t write_pos = 0;
    auto flush = [&]() {
        if (batch.empty()) return;
        detail::batched_evaluate(oracle, batch, values);
        std::copy(values.begin(), values.end(), out.grid.dense_values.begin() + write_pos);
        write_pos += values.size();
        batch.clear();
    };
    for (int k = 0; k <= resolution; ++k)
        for (int j = 0; j <= resolution; ++j)
            for (int i = 0; i <= resolution; ++i) {
                batch.push_back(out.grid.lattice_point(i, j, k));
                if (batch.size() == detail::kDecodeBatch) flush();
            }
    flush();

    out.stats.queries_issued = oracle.query_count() - before;
    out.stats.dense_equivalent = n * n * n;
    out.stats.reduction =
        1.0 - static_cast<double>(out.stats.queries_issued) / static_cast<double>(out.stats.dense_equivalent);
    out.stats.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

namespace detail {

struct LevelGeometry {
    Vec3 cell_edge;
    double half_cell_diag;
};

inline LevelGeometry level_geometry(const Aabb& bounds, int level_resolution) {
    LevelGeometry g;
    g.cell_edge = bounds.extent() / static_cast<double>(level_resolution);
    g.half_cell_diag = 0.5 * g.cell_edge.norm();
    return g;
}

// Cell refinement test. The half-cell-diagonal term guarantees every cell the
// surface passes through is kept (SDF values are 1-Lipschitz), the band term
// keeps a cushion of true values around the surface, and the sign test is a
// cheap shortcut for cells that straddle the level set.
inline bool cell_in_band(const double* corner_values, double band_distance, double half_cell_diag) {
    double min_v = corner_values[0], max_v = corner_values[0], min_abs = std::abs(corner_values[0]);
    for (int c = 1; c < 8; ++c) {
        min_v = std::min(min_v, corner_values[c]);
        max_v = std::max(max_v, corner_values[c]);
        min_abs = std::min(min_abs, std::abs(corner_values[c]));
    }
    if (min_v < 0.0 && max_v >= 0.0) return true;
    return min_abs <= std::max(band_distance, half_cell_diag * (1.0 + 1e-12));
}

inline int auto_coarse_resolution(int resolution) {
    for (int ratio : {8, 4, 2}) {
        if (resolution % ratio == 0 && resolution / ratio >= 2) return resolution / ratio;
    }
    return resolution;
}

}  // namespace detail

/// Coarse-to-fine decoding: a dense pass at the coarse resolution, then
/// level-by-level doubling where only cells near the zero level set are
/// re-examined. Points never touched by refinement inherit interpolated
/// coarse values through the returned grid.
inline DecodeResult hierarchical_decode(const SdfOracle& oracle, int resolution, const Aabb& bounds,
                                        const HierarchicalConfig& cfg = {}) {
    if (resolution < 2) throw std::invalid_argument("hierarchical_decode: resolution must be >= 2");
    if (!bounds.valid()) throw std::invalid_argument("hierarchical_decode: invalid bounds");
    if (!(cfg.band_halfwidth_voxels > 0.0))
        throw std::invalid_argument("hierarchical_decode: band halfwidth must be positive");
    if (cfg.dilation_cells < 0)
        throw std::invalid_argument("hierarchical_decode: dilation must be non-negative");

    const int coarse =
        cfg.coarse_resolution > 0 ? cfg.coarse_resolution : detail::auto_coarse_resolution(resolution);
    if (coarse < 1 || coarse > resolution || resolution % coarse != 0)
        throw std::invalid_argument("hierarchical_decode: coarse resolution must divide resolution");
    const int ratio = resolution / coarse;
    if ((ratio & (ratio - 1)) != 0)
        throw std::invalid_argument("hierarchical_decode: resolution / coarse must be a power of two");

    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t before = oracle.query_count();

    const std::uint64_t fine_n = static_cast<std::uint64_t>(resolution) + 1;
    const double fine_diag = (bounds.extent() / static_cast<double>(resolution)).norm();
    const double band_distance = cfg.band_halfwidth_voxels * fine_diag;

    // Level 0: dense coarse lattice, kept both as the interpolation base and
    // as fine-lattice entries.
    DecodeResult coarse_pass = dense_decode(oracle, coarse, bounds);

    DecodeResult out;
    out.grid.resolution = resolution;
    out.grid.bounds = bounds;
    out.grid.coarse_resolution = coarse;
    out.grid.coarse_values = coarse_pass.grid.dense_values;

    const int base_stride = resolution / coarse;
    const std::uint64_t coarse_n = static_cast<std::uint64_t>(coarse) + 1;
    out.grid.sparse_values.reserve(out.grid.coarse_values.size() * 2);
    for (int k = 0; k <= coarse; ++k)
        for (int j = 0; j <= coarse; ++j)
            for (int i = 0; i <= coarse; ++i)
                out.grid.sparse_values.emplace(
                    out.grid.lattice_index(i * base_stride, j * base_stride, k * base_stride),
                    out.grid.coarse_values[(static_cast<std::uint64_t>(k) * coarse_n + j) * coarse_n + i]);

    auto finish = [&](bool surface) {
        out.stats.queries_issued = oracle.query_count() - before;
        out.stats.dense_equivalent = fine_n * fine_n * fine_n;
        out.stats.reduction = 1.0 - static_cast<double>(out.stats.queries_issued) /
                                        static_cast<double>(out.stats.dense_equivalent);
        out.stats.surface_found = surface;
        out.stats.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    // Mark coarse cells near the surface.
    const detail::LevelGeometry coarse_geom = detail::level_geometry(bounds, coarse);
    std::vector<std::uint8_t> marked(static_cast<std::size_t>(coarse) * coarse * coarse, 0);
    const auto coarse_value = [&](int i, int j, int k) {
        return out.grid.coarse_values[(static_cast<std::uint64_t>(k) * coarse_n + j) * coarse_n + i];
    };
    bool any_marked = false;
    for (int k = 0; k < coarse; ++k)
        for (int j = 0; j < coarse; ++j)
            for (int i = 0; i < coarse; ++i) {
                double corners[8];
                int c = 0;
                for (int dk = 0; dk <= 1; ++dk)
                    for (int dj = 0; dj <= 1; ++dj)
                        for (int di = 0; di <= 1; ++di)
                            corners[c++] = coarse_value(i + di, j + dj, k + dk);
                if (detail::cell_in_band(corners, band_distance, coarse_geom.half_cell_diag)) {
                    marked[(static_cast<std::size_t>(k) * coarse + j) * coarse + i] = 1;
                    any_marked = true;
                }
            }

    if (!any_marked || ratio == 1) {
        if (!any_marked) {
            // Nothing near the level set: return the coarse-only grid.
            out.grid = std::move(coarse_pass.grid);
            finish(false);
            return out;
        }
        // Degenerate hierarchy (coarse == fine): the marked cells are final.
        bool straddle = false;
        for (int k = 0; k < coarse; ++k)
            for (int j = 0; j < coarse; ++j)
                for (int i = 0; i < coarse; ++i)
                    if (marked[(static_cast<std::size_t>(k) * coarse + j) * coarse + i]) {
                        out.grid.surface_cells.push_back(out.grid.cell_index(i, j, k));
                        double lo = 0, hi = 0;
                        for (int c = 0; c < 8; ++c) {
                            const double v = coarse_value(i + ((c & 1) ? 1 : 0), j + ((c & 2) ? 1 : 0),
                                                          k + ((c & 4) ? 1 : 0));
                            lo = std::min(c ? lo : v, v);
                            hi = std::max(c ? hi : v, v);
                        }
                        straddle = straddle || (lo < 0.0 && hi >= 0.0);
                    }
        std::sort(out.grid.surface_cells.begin(), out.grid.surface_cells.end());
        finish(straddle);
        return out;
    }

    // Chebyshev dilation of the coarse marked set.
    for (int pass = 0; pass < cfg.dilation_cells; ++pass) {
        std::vector<std::uint8_t> grown = marked;
        for (int k = 0; k < coarse; ++k)
            for (int j = 0; j < coarse; ++j)
                for (int i = 0; i < coarse; ++i) {
                    if (!marked[(static_cast<std::size_t>(k) * coarse + j) * coarse + i]) continue;
                    for (int dk = -1; dk <= 1; ++dk)
                        for (int dj = -1; dj <= 1; ++dj)
                            for (int di = -1; di <= 1; ++di) {
                                const int ni = i + di, nj = j + dj, nk = k + dk;
                                if (ni < 0 || nj < 0 || nk < 0 || ni >= coarse || nj >= coarse ||
                                    nk >= coarse)
                                    continue;
                                grown[(static_cast<std::size_t>(nk) * coarse + nj) * coarse + ni] = 1;
                            }
                }
        marked.swap(grown);
    }

    struct CellId {
        int i, j, k;
    };
    std::vector<CellId> active;
    for (int k = 0; k < coarse; ++k)
        for (int j = 0; j < coarse; ++j)
            for (int i = 0; i < coarse; ++i)
                if (marked[(static_cast<std::size_t>(k) * coarse + j) * coarse + i])
                    active.push_back({i, j, k});

    // Refinement levels: resolution doubles until the target is reached.
    int levels = 0;
    for (int r = ratio; r > 1; r >>= 1) ++levels;

    std::vector<Vec3> batch_points;
    std::vector<double> batch_values;
    std::vector<std::uint64_t> wanted;
    bool final_straddle = false;

    int level_res = coarse;
    for (int level = 1; level <= levels; ++level) {
        level_res *= 2;
        const int stride = resolution / level_res;
        const detail::LevelGeometry geom = detail::level_geometry(bounds, level_res);

        // Children of the active cells.
        std::vector<CellId> candidates;
        candidates.reserve(active.size() * 8);
        for (const CellId& cell : active)
            for (int dk = 0; dk <= 1; ++dk)
                for (int dj = 0; dj <= 1; ++dj)
                    for (int di = 0; di <= 1; ++di)
                        candidates.push_back({2 * cell.i + di, 2 * cell.j + dj, 2 * cell.k + dk});

        // Evaluate lattice points of candidate cells that are still unknown.
        wanted.clear();
        for (const CellId& cell : candidates)
            for (int dk = 0; dk <= 1; ++dk)
                for (int dj = 0; dj <= 1; ++dj)
                    for (int di = 0; di <= 1; ++di)
                        wanted.push_back(out.grid.lattice_index(
                            (cell.i + di) * stride, (cell.j + dj) * stride, (cell.k + dk) * stride));
        std::sort(wanted.begin(), wanted.end());
        wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

        batch_points.clear();
        std::vector<std::uint64_t> new_ids;
        for (std::uint64_t id : wanted) {
            if (out.grid.sparse_values.count(id)) continue;
            const int i = static_cast<int>(id % fine_n);
            const int j = static_cast<int>((id / fine_n) % fine_n);
            const int k = static_cast<int>(id / (fine_n * fine_n));
            batch_points.push_back(out.grid.lattice_point(i, j, k));
            new_ids.push_back(id);
        }
        detail::batched_evaluate(oracle, batch_points, batch_values);
        for (std::size_t idx = 0; idx < new_ids.size(); ++idx)
            out.grid.sparse_values.emplace(new_ids[idx], batch_values[idx]);

        const auto fetch = [&](const CellId& cell, double* corners) {
            int c = 0;
            for (int dk = 0; dk <= 1; ++dk)
                for (int dj = 0; dj <= 1; ++dj)
                    for (int di = 0; di <= 1; ++di)
                        corners[c++] = out.grid.sparse_values.at(out.grid.lattice_index(
                            (cell.i + di) * stride, (cell.j + dj) * stride, (cell.k + dk) * stride));
        };

        if (level == levels) {
            out.grid.surface_cells.reserve(candidates.size());
            for (const CellId& cell : candidates) {
                double corners[8];
                fetch(cell, corners);
                double lo = corners[0], hi = corners[0];
                for (int c = 1; c < 8; ++c) {
                    lo = std::min(lo, corners[c]);
                    hi = std::max(hi, corners[c]);
                }
                final_straddle = final_straddle || (lo < 0.0 && hi >= 0.0);
                out.grid.surface_cells.push_back(out.grid.cell_index(cell.i, cell.j, cell.k));
            }
            std::sort(out.grid.surface_cells.begin(), out.grid.surface_cells.end());
        } else {
            std::vector<CellId> next;
            next.reserve(candidates.size());
            for (const CellId& cell : candidates) {
                double corners[8];
                fetch(cell, corners);
                if (detail::cell_in_band(corners, band_distance, geom.half_cell_diag))
                    next.push_back(cell);
            }
            active.swap(next);
            if (active.empty()) break;
        }
    }

    finish(final_straddle);
    return out;
}

}  // namespace meshreg
