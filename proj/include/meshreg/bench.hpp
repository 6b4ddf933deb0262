#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "meshreg/pipeline.hpp"
#include "meshreg/ply_io.hpp"
#include "meshreg/scene.hpp"
#include "meshreg/transform_io.hpp"

namespace meshreg {

struct SuiteSpec {
    std::string name = "default";
    std::uint64_t seed = 42;
    int threads = 1;
    int runs = 1;  // timing runs per scene; results are identical, timings averaged
    double object_diagonal = 0.15;
    double noise_fraction = 0.005;  // sigma = fraction x object diagonal
    double partial_fraction = 0.5;
    double outlier_fraction = 0.0;
};

struct SceneRecord {
    int index = 0;
    std::string shape_name;
    SceneSpec spec;
    double retained_fraction = 1.0;
    PipelineResult result;
};

struct BenchAggregate {
    double mean = 0.0;
    double stdev = 0.0;  // sample standard deviation
};

struct BenchReport {
    SuiteSpec suite;
    std::vector<SceneRecord> scenes;
    BenchAggregate total_time_ms;
    BenchAggregate chamfer_mm;
    BenchAggregate fscore_pct;
    double success_rate_pct = 0.0;
    int failure_count = 0;
};

namespace detail {

inline double g17(double v) { return v; }

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline BenchAggregate aggregate(const std::vector<double>& values) {
    BenchAggregate agg;
    if (values.empty()) return agg;
    double sum = 0.0;
    for (double v : values) sum += v;
    agg.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - agg.mean) * (v - agg.mean);
        agg.stdev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return agg;
}

}  // namespace detail

/// The 25 default scenes: a few deliberately symmetric canaries (spheres), and
/// boxes, tori, and asymmetric two-primitive unions with varied proportions.
/// View directions are generic for boxes/unions (every axis extreme stays
/// visible) and near the symmetry axis for tori.
inline std::vector<ShapeSpec> default_suite_shapes() {
    std::vector<ShapeSpec> shapes;
    auto add = [&](const std::string& name, std::vector<PrimitiveSpec> prims) {
        ShapeSpec spec;
        spec.name = name;
        spec.primitives = std::move(prims);
        shapes.push_back(std::move(spec));
    };

    add("sphere", {{ShapeKind::Sphere, Vec3(0, 0, 0), Vec3(0.5, 0, 0)}});
    add("sphere", {{ShapeKind::Sphere, Vec3(0, 0, 0), Vec3(0.42, 0, 0)}});

    add("box", {{ShapeKind::Box, Vec3(0, 0, 0), Vec3(0.5, 0.35, 0.25)}});
    add("box", {{ShapeKind::Box, Vec3(0, 0, 0), Vec3(0.55, 0.4, 0.18)}});
    add("box", {{ShapeKind::Box, Vec3(0, 0, 0), Vec3(0.45, 0.3, 0.3)}});
    add("box", {{ShapeKind::Box, Vec3(0, 0, 0), Vec3(0.6, 0.25, 0.2)}});
    add("box", {{ShapeKind::Box, Vec3(0, 0, 0), Vec3(0.4, 0.38, 0.33)}});
    add("box", {{ShapeKind::Box, Vec3(0, 0, 0), Vec3(0.5, 0.45, 0.15)}});

    add("torus", {{ShapeKind::Torus, Vec3(0, 0, 0), Vec3(0.5, 0.2, 0)}});
    add("torus", {{ShapeKind::Torus, Vec3(0, 0, 0), Vec3(0.5, 0.15, 0)}});
    add("torus", {{ShapeKind::Torus, Vec3(0, 0, 0), Vec3(0.55, 0.18, 0)}});
    add("torus", {{ShapeKind::Torus, Vec3(0, 0, 0), Vec3(0.45, 0.25, 0)}});
    add("torus", {{ShapeKind::Torus, Vec3(0, 0, 0), Vec3(0.6, 0.14, 0)}});
    add("torus", {{ShapeKind::Torus, Vec3(0, 0, 0), Vec3(0.5, 0.24, 0)}});

    add("union", {{ShapeKind::Sphere, Vec3(-0.25, 0.05, 0.05), Vec3(0.35, 0, 0)},
                  {ShapeKind::Box, Vec3(0.3, -0.05, -0.1), Vec3(0.3, 0.28, 0.22)}});
    add("union", {{ShapeKind::Box, Vec3(-0.3, 0.1, 0), Vec3(0.28, 0.4, 0.2)},
                  {ShapeKind::Box, Vec3(0.3, -0.15, 0.05), Vec3(0.3, 0.2, 0.3)}});
    add("union", {{ShapeKind::Torus, Vec3(0, 0.05, -0.15), Vec3(0.45, 0.15, 0)},
                  {ShapeKind::Box, Vec3(0.1, -0.1, 0.25), Vec3(0.35, 0.22, 0.18)}});
    add("union", {{ShapeKind::Sphere, Vec3(0.2, 0.2, -0.1), Vec3(0.3, 0, 0)},
                  {ShapeKind::Torus, Vec3(-0.1, -0.1, 0.1), Vec3(0.4, 0.16, 0)}});
    add("union", {{ShapeKind::Box, Vec3(0, 0.08, -0.2), Vec3(0.5, 0.3, 0.12)},
                  {ShapeKind::Sphere, Vec3(0.15, -0.12, 0.18), Vec3(0.28, 0, 0)}});
    add("union", {{ShapeKind::Sphere, Vec3(-0.3, -0.08, 0), Vec3(0.3, 0, 0)},
                  {ShapeKind::Sphere, Vec3(0.28, 0.1, 0.06), Vec3(0.38, 0, 0)}});
    add("union", {{ShapeKind::Box, Vec3(-0.2, 0, 0.1), Vec3(0.25, 0.25, 0.25)},
                  {ShapeKind::Torus, Vec3(0.25, 0.05, -0.12), Vec3(0.38, 0.13, 0)}});
    add("union", {{ShapeKind::Box, Vec3(0, -0.05, 0), Vec3(0.55, 0.2, 0.15)},
                  {ShapeKind::Box, Vec3(0.1, 0.22, 0.1), Vec3(0.2, 0.18, 0.25)}});
    add("union", {{ShapeKind::Sphere, Vec3(0, 0.15, 0.1), Vec3(0.33, 0, 0)},
                  {ShapeKind::Box, Vec3(0.05, -0.25, -0.08), Vec3(0.42, 0.18, 0.2)}});
    add("union", {{ShapeKind::Torus, Vec3(-0.05, 0, 0.1), Vec3(0.5, 0.12, 0)},
                  {ShapeKind::Sphere, Vec3(0.2, 0.15, -0.15), Vec3(0.26, 0, 0)}});
    add("union", {{ShapeKind::Box, Vec3(-0.15, -0.1, -0.05), Vec3(0.35, 0.3, 0.28)},
                  {ShapeKind::Sphere, Vec3(0.35, 0.18, 0.12), Vec3(0.24, 0, 0)}});
    return shapes;
}

inline Vec3 default_view_direction(const ShapeSpec& shape, int index) {
    if (shape.primitives.size() == 1) {
        switch (shape.primitives[0].kind) {
            case ShapeKind::Sphere:
                return Vec3(0, 0, -1);
            case ShapeKind::Torus:
                // Near the symmetry axis, tilted a little per scene.
                return Vec3(0.18 * std::cos(0.7 * index), 0.15 * std::sin(0.9 * index), -1.0)
                    .normalized();
            case ShapeKind::Box:
                break;
        }
    }
    // Generic oblique view; all components stay well away from zero so every
    // axis extreme remains visible.
    const double sx = (index % 2 == 0) ? 1.0 : -1.0;
    const double sy = (index % 4 < 2) ? 1.0 : -1.0;
    return Vec3(sx * (0.45 + 0.05 * (index % 3)), sy * (0.4 + 0.04 * (index % 5)), -0.8).normalized();
}

inline std::vector<SceneSpec> default_suite_scenes(const SuiteSpec& suite) {
    const std::vector<ShapeSpec> shapes = default_suite_shapes();
    std::vector<SceneSpec> scenes;
    scenes.reserve(shapes.size());
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        SceneSpec spec;
        spec.shape = shapes[i];
        spec.object_diagonal = suite.object_diagonal;
        spec.view_direction = default_view_direction(shapes[i], static_cast<int>(i));
        spec.partial_fraction = suite.partial_fraction;
        spec.noise_sigma = suite.noise_fraction * suite.object_diagonal;
        spec.outlier_fraction = suite.outlier_fraction;
        spec.seed = substream(suite.seed, i);
        scenes.push_back(std::move(spec));
    }
    return scenes;
}

namespace detail {

inline SceneRecord run_suite_scene(const SuiteSpec& suite, const SceneSpec& spec, int index,
                                   const std::filesystem::path& outdir) {
    SceneRecord record;
    record.index = index;
    record.shape_name = spec.shape.name;
    record.spec = spec;
    try {
        const Scene scene = synth_scene(spec);
        record.retained_fraction = scene.retained_fraction;

        PipelineConfig cfg;
        cfg.ransac.seed = substream(spec.seed, 7);
        cfg.metrics.seed = substream(spec.seed, 8);
        record.result = run_pipeline(scene, cfg);
        for (int extra = 1; extra < suite.runs; ++extra) {
            const PipelineResult repeat = run_pipeline(scene, cfg);
            for (std::size_t s = 0; s < record.result.timing.stages.size() &&
                                    s < repeat.timing.stages.size();
                 ++s)
                record.result.timing.stages[s].ms += repeat.timing.stages[s].ms;
            record.result.timing.total_ms += repeat.timing.total_ms;
        }
        if (suite.runs > 1) {
            for (auto& stage : record.result.timing.stages) stage.ms /= suite.runs;
            record.result.timing.total_ms /= suite.runs;
            for (auto& stage : record.result.timing.stages)
                stage.share_pct = record.result.timing.total_ms > 0.0
                                      ? 100.0 * stage.ms / record.result.timing.total_ms
                                      : 0.0;
        }

        if (!outdir.empty()) {
            char dir_name[32];
            std::snprintf(dir_name, sizeof(dir_name), "scene_%02d", index);
            const std::filesystem::path scene_dir = outdir / dir_name;
            std::filesystem::create_directories(scene_dir);
            write_ply((scene_dir / "source_mesh.ply").string(), scene.source_mesh);
            write_ply((scene_dir / "target.ply").string(), scene.target_cloud);
            write_transform((scene_dir / "gt_transform.json").string(), scene.gt_transform);
            if (record.result.registration.converged)
                write_transform((scene_dir / "est_transform.json").string(),
                                record.result.registration.transform);
        }
    } catch (const std::exception& e) {
        record.result.failed = true;
        record.result.failure = e.what();
        record.result.success = false;
    }
    return record;
}

}  // namespace detail

inline const std::vector<std::string>& bench_csv_timing_columns() {
    static const std::vector<std::string> cols{"normals_ms", "downsample_ms", "fpfh_ms",
                                               "matching_ms", "ransac_ms",    "icp_ms",
                                               "total_ms"};
    return cols;
}

inline std::string bench_csv_header() {
    std::string header =
        "index,shape,symmetric,retained_fraction,converged,success,add_mm,add_sym_mm,"
        "chamfer_mm,fscore_pct,precision_pct,recall_pct,init_scale,est_scale,"
        "r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz,"
        "correspondences,ransac_inliers,icp_rmse_mm,icp_iterations,failed,failure";
    for (const auto& col : bench_csv_timing_columns()) header += "," + col;
    return header;
}

inline std::string bench_csv_row(const SceneRecord& record) {
    using detail::format_g17;
    const PipelineResult& r = record.result;
    const RigidScaleTransform& t = r.registration.transform;
    std::ostringstream row;
    row << record.index << ',' << record.shape_name << ',' << (r.rotation_ambiguous ? 1 : 0) << ','
        << format_g17(record.retained_fraction) << ',' << (r.registration.converged ? 1 : 0) << ','
        << (r.success ? 1 : 0) << ',' << format_g17(1000.0 * r.pose.add) << ','
        << format_g17(1000.0 * r.pose.add_symmetry_aware) << ',' << format_g17(r.metrics.chamfer_mm)
        << ',' << format_g17(r.metrics.fscore_pct) << ',' << format_g17(r.metrics.precision_pct)
        << ',' << format_g17(r.metrics.recall_pct) << ',' << format_g17(r.trace.initial_scale)
        << ',' << format_g17(t.scale);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) row << ',' << format_g17(t.rotation(i, j));
    for (int i = 0; i < 3; ++i) row << ',' << format_g17(t.translation[i]);
    row << ',' << r.trace.correspondences << ',' << r.trace.ransac.inlier_count << ','
        << format_g17(1000.0 * r.registration.inlier_rmse) << ',' << r.registration.iterations_used
        << ',' << (r.failed ? 1 : 0) << ',' << (r.failed ? r.failure : "");
    // Timing columns stay last so determinism checks can strip them.
    double by_name[6] = {0, 0, 0, 0, 0, 0};
    static const char* names[6] = {"normals", "downsample", "fpfh", "matching", "ransac", "icp"};
    for (const auto& stage : r.timing.stages)
        for (int i = 0; i < 6; ++i)
            if (stage.name == names[i]) by_name[i] = stage.ms;
    for (double ms : by_name) row << ',' << format_g17(ms);
    row << ',' << format_g17(r.timing.total_ms);
    return row.str();
}

inline std::string bench_report_text(const BenchReport& report);

/// Runs the whole suite (optionally across threads; the schedule never affects
/// results) and optionally writes per-scene artifacts plus report files.
inline BenchReport bench_suite(const SuiteSpec& suite, const std::string& output_dir = "") {
    const std::filesystem::path outdir = output_dir;
    if (!outdir.empty()) std::filesystem::create_directories(outdir);

    const std::vector<SceneSpec> scene_specs = default_suite_scenes(suite);
    BenchReport report;
    report.suite = suite;
    report.scenes.resize(scene_specs.size());

    const int threads = std::max(1, suite.threads);
    if (threads == 1) {
        for (std::size_t i = 0; i < scene_specs.size(); ++i)
            report.scenes[i] =
                detail::run_suite_scene(suite, scene_specs[i], static_cast<int>(i), outdir);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= scene_specs.size()) return;
                report.scenes[i] =
                    detail::run_suite_scene(suite, scene_specs[i], static_cast<int>(i), outdir);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<double> times, chamfers, fscores;
    int successes = 0;
    for (const auto& record : report.scenes) {
        if (record.result.failed) {
            ++report.failure_count;
            continue;
        }
        times.push_back(record.result.timing.total_ms);
        chamfers.push_back(record.result.metrics.chamfer_mm);
        fscores.push_back(record.result.metrics.fscore_pct);
        if (record.result.success) ++successes;
    }
    report.total_time_ms = detail::aggregate(times);
    report.chamfer_mm = detail::aggregate(chamfers);
    report.fscore_pct = detail::aggregate(fscores);
    report.success_rate_pct =
        100.0 * static_cast<double>(successes) / static_cast<double>(report.scenes.size());

    if (!outdir.empty()) {
        std::ofstream csv(outdir / "report.csv");
        csv << bench_csv_header() << "\n";
        for (const auto& record : report.scenes) csv << bench_csv_row(record) << "\n";

        std::ofstream txt(outdir / "report.txt");
        txt << bench_report_text(report);
    }
    return report;
}

inline std::string bench_report_text(const BenchReport& report) {
    char line[256];
    std::string out;
    std::snprintf(line, sizeof(line), "suite %s | seed %llu | %zu scenes | threads %d\n",
                  report.suite.name.c_str(),
                  static_cast<unsigned long long>(report.suite.seed), report.scenes.size(),
                  report.suite.threads);
    out += line;
    std::snprintf(line, sizeof(line), "%-28s %10.2f +/- %.2f\n", "registration time (ms)",
                  report.total_time_ms.mean, report.total_time_ms.stdev);
    out += line;
    std::snprintf(line, sizeof(line), "%-28s %10.3f +/- %.3f\n", "chamfer distance (mm)",
                  report.chamfer_mm.mean, report.chamfer_mm.stdev);
    out += line;
    std::snprintf(line, sizeof(line), "%-28s %10.2f +/- %.2f\n", "f-score @ 2cm (%)",
                  report.fscore_pct.mean, report.fscore_pct.stdev);
    out += line;
    std::snprintf(line, sizeof(line), "%-28s %10.1f%% (threshold: ADD < 2%% of diagonal)\n",
                  "success rate", report.success_rate_pct);
    out += line;
    std::snprintf(line, sizeof(line), "%-28s %10d\n", "failed scenes", report.failure_count);
    out += line;
    out += "\nidx shape      sym  time_ms   cd_mm   f_pct  add_sym_mm  ok\n";
    for (const auto& r : report.scenes) {
        std::snprintf(line, sizeof(line), "%3d %-10s %3s %8.1f %7.3f %7.2f %11.3f  %s\n", r.index,
                      r.shape_name.c_str(), r.result.rotation_ambiguous ? "yes" : "no",
                      r.result.timing.total_ms, r.result.metrics.chamfer_mm,
                      r.result.metrics.fscore_pct, 1000.0 * r.result.pose.add_symmetry_aware,
                      r.result.failed ? "FAIL(error)" : (r.result.success ? "yes" : "NO"));
        out += line;
    }
    return out;
}

}  // namespace meshreg
