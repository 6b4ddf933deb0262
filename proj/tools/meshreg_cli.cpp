// meshreg command-line tool: synthetic scenes, SDF decoding, depth alignment,
// registration, evaluation, and the benchmark suite.
//
// Exit codes: 0 success, 2 input validation error, 3 registration did not
// converge, 4 I/O error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "meshreg/meshreg.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitIo = 4;

meshreg::SdfOraclePtr oracle_for(const std::string& shape) {
    return meshreg::make_oracle(meshreg::ShapeSpec::preset(shape));
}

int cmd_scene_synth(const std::string& shape, double diag, double noise, double outliers,
                    bool partial, std::uint64_t seed, const std::string& out_dir, int samples,
                    bool with_depth) {
    namespace fs = std::filesystem;
    meshreg::SceneSpec spec;
    spec.shape = meshreg::ShapeSpec::preset(shape);
    spec.object_diagonal = diag;
    spec.noise_sigma = noise;
    spec.outlier_fraction = outliers;
    spec.partial_fraction = partial ? 0.5 : 0.0;
    spec.sample_count = static_cast<std::size_t>(samples);
    spec.make_depth_raster = with_depth;
    spec.seed = seed;

    const meshreg::Scene scene = meshreg::synth_scene(spec);
    fs::create_directories(out_dir);
    meshreg::write_ply((fs::path(out_dir) / "source_mesh.ply").string(), scene.source_mesh);
    meshreg::write_ply((fs::path(out_dir) / "target.ply").string(), scene.target_cloud);
    meshreg::write_transform((fs::path(out_dir) / "gt_transform.json").string(),
                             scene.gt_transform);
    if (scene.depth) {
        meshreg::write_depth((fs::path(out_dir) / "depth.f32").string(), scene.depth->depth,
                             scene.depth->intrinsics);
        meshreg::write_mask((fs::path(out_dir) / "mask.u8").string(), scene.depth->mask);
    }
    std::cout << "scene: shape=" << shape << " points=" << scene.target_cloud.size()
              << " retained=" << scene.retained_fraction << " -> " << out_dir << "\n";
    return 0;
}

int cmd_register(const std::string& source_path, const std::string& target_path,
                 const std::string& out_path, int ransac_iters, double inlier_thresh,
                 int icp_iters, std::uint64_t seed) {
    const meshreg::TriangleMesh source = meshreg::read_ply_mesh(source_path);
    const meshreg::PointCloud target = meshreg::read_ply_cloud(target_path);

    meshreg::RansacConfig rcfg;
    rcfg.max_iterations = ransac_iters;
    if (inlier_thresh > 0) rcfg.inlier_threshold = inlier_thresh;
    rcfg.seed = seed;
    meshreg::IcpConfig icfg;
    icfg.max_iterations = icp_iters;

    const meshreg::RegistrationOutcome outcome =
        meshreg::register_object(source, target, rcfg, icfg);

    const meshreg::StageTiming timing = meshreg::make_stage_timing(outcome.trace);
    for (const auto& stage : timing.stages)
        std::printf("%-12s %8.2f ms  %5.1f%%\n", stage.name.c_str(), stage.ms, stage.share_pct);
    std::printf("%-12s %8.2f ms\n", "total", timing.total_ms);
    std::printf("scale=%.6f inliers=%zu rmse=%.3f mm iterations=%d converged=%s\n",
                outcome.result.transform.scale, outcome.result.inlier_count,
                1000.0 * outcome.result.inlier_rmse, outcome.result.iterations_used,
                outcome.result.converged ? "yes" : "no");

    if (outcome.result.converged && !out_path.empty())
        meshreg::write_transform(out_path, outcome.result.transform);
    return outcome.result.converged ? 0 : kExitNotConverged;
}

int cmd_decode(const std::string& shape, int resolution, const std::string& mode, int coarse,
               double band, const std::string& out_mesh, const std::string& stats_path) {
    const meshreg::SdfOraclePtr oracle = oracle_for(shape);
    const meshreg::Aabb bounds{meshreg::Vec3(-1, -1, -1), meshreg::Vec3(1, 1, 1)};

    meshreg::DecodeResult decoded;
    if (mode == "dense") {
        decoded = meshreg::dense_decode(*oracle, resolution, bounds);
    } else if (mode == "hier") {
        meshreg::HierarchicalConfig cfg;
        cfg.coarse_resolution = coarse;
        if (band > 0) cfg.band_halfwidth_voxels = band;
        decoded = meshreg::hierarchical_decode(*oracle, resolution, bounds, cfg);
    } else {
        std::cerr << "decode: mode must be dense or hier\n";
        return kExitValidation;
    }

    const meshreg::TriangleMesh mesh = meshreg::marching_cubes(decoded.grid);
    if (!out_mesh.empty()) meshreg::write_ply(out_mesh, mesh);

    nlohmann::json stats{{"queries_issued", decoded.stats.queries_issued},
                         {"dense_equivalent", decoded.stats.dense_equivalent},
                         {"reduction", decoded.stats.reduction},
                         {"wall_time_s", decoded.stats.wall_time},
                         {"surface_found", decoded.stats.surface_found},
                         {"vertices", mesh.vertices.size()},
                         {"faces", mesh.faces.size()}};
    if (!stats_path.empty()) {
        std::ofstream out(stats_path);
        if (!out) throw meshreg::io_error("decode: cannot write stats '" + stats_path + "'");
        out << stats.dump(2) << "\n";
    }
    std::cout << stats.dump(2) << "\n";
    return 0;
}

int cmd_depth_align(const std::string& sensor_path, const std::string& pred_path,
                    const std::string& mask_path, const std::string& out_path) {
    auto [sensor, sensor_intr] = meshreg::read_depth(sensor_path);
    auto [pred, pred_intr] = meshreg::read_depth(pred_path);
    const meshreg::BinaryMask mask = meshreg::read_mask(mask_path, sensor.width, sensor.height);

    const meshreg::ScaleAlignResult aligned = meshreg::median_scale_align(sensor, pred, mask);
    meshreg::write_depth(out_path, aligned.metric, sensor_intr);
    std::cout << "scale=" << aligned.scale << " -> " << out_path << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& gt_transform_path, double tau, int samples, std::uint64_t seed) {
    const meshreg::TriangleMesh pred = meshreg::read_ply_mesh(pred_path);
    meshreg::TriangleMesh gt = meshreg::read_ply_mesh(gt_path);
    if (!gt_transform_path.empty())
        gt = meshreg::apply_transform(gt, meshreg::read_transform(gt_transform_path));

    meshreg::MetricsConfig cfg;
    cfg.fscore_threshold = tau;
    cfg.sample_count = static_cast<std::size_t>(samples);
    cfg.seed = seed;
    const meshreg::PointCloud pred_pts =
        meshreg::sample_surface(pred, cfg.sample_count, meshreg::substream(seed, 11));
    const meshreg::PointCloud gt_pts =
        meshreg::sample_surface(gt, cfg.sample_count, meshreg::substream(seed, 12));
    const meshreg::MetricsReport report = meshreg::evaluate_metrics(pred_pts, gt_pts, cfg);

    nlohmann::json j{{"chamfer_mm", report.chamfer_mm},
                     {"fscore_pct", report.fscore_pct},
                     {"precision_pct", report.precision_pct},
                     {"recall_pct", report.recall_pct},
                     {"tau_m", tau},
                     {"samples", samples}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_bench(const std::string& suite_name, const std::string& out_dir, std::uint64_t seed,
              int threads, int runs) {
    if (suite_name != "default") {
        std::cerr << "bench: unknown suite '" << suite_name << "'\n";
        return kExitValidation;
    }
    meshreg::SuiteSpec suite;
    suite.seed = seed;
    suite.threads = threads;
    suite.runs = runs;
    const meshreg::BenchReport report = meshreg::bench_suite(suite, out_dir);
    std::cout << meshreg::bench_report_text(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"meshreg: depth alignment, SDF decoding, registration, evaluation"};
    app.require_subcommand(1);

    // scene synth
    auto* scene = app.add_subcommand("scene", "synthetic scene tools");
    scene->require_subcommand(1);
    auto* synth = scene->add_subcommand("synth", "generate a synthetic scene");
    std::string shape = "box", out_dir = "scene_out";
    double diag = 0.15, noise = 0.0, outliers = 0.0;
    bool partial = false, with_depth = false;
    std::uint64_t seed = 0;
    int samples = 20000;
    synth->add_option("--shape", shape, "sphere|box|torus|union")->required();
    synth->add_option("--diag", diag, "object bounding box diagonal, meters");
    synth->add_option("--noise", noise, "gaussian noise sigma, meters");
    synth->add_option("--outliers", outliers, "outlier fraction in [0,1)");
    synth->add_flag("--partial", partial, "keep only the camera-facing surface");
    synth->add_flag("--depth", with_depth, "also write a depth raster + mask");
    synth->add_option("--seed", seed, "random seed");
    synth->add_option("--samples", samples, "target sample count");
    synth->add_option("--out", out_dir, "output directory")->required();

    // register
    auto* reg = app.add_subcommand("register", "register a mesh against a point cloud");
    std::string reg_source, reg_target, reg_out;
    int ransac_iters = 10000, icp_iters = 50;
    double inlier_thresh = 0.0;
    std::uint64_t reg_seed = 0;
    reg->add_option("--source", reg_source, "source mesh (.ply)")->required();
    reg->add_option("--target", reg_target, "target cloud (.ply)")->required();
    reg->add_option("--ransac-iters", ransac_iters, "RANSAC iteration budget");
    reg->add_option("--inlier-thresh", inlier_thresh, "RANSAC inlier threshold, meters");
    reg->add_option("--icp-iters", icp_iters, "ICP iteration budget");
    reg->add_option("--seed", reg_seed, "random seed");
    reg->add_option("--out", reg_out, "output transform JSON");

    // decode
    auto* decode = app.add_subcommand("decode", "decode an SDF into a mesh");
    std::string dec_shape = "sphere", dec_mode = "hier", dec_mesh, dec_stats;
    int dec_res = 128, dec_coarse = 0;
    double dec_band = 0.0;
    decode->add_option("--shape", dec_shape, "sphere|box|torus|union")->required();
    decode->add_option("--resolution", dec_res, "voxel resolution per axis")->required();
    decode->add_option("--mode", dec_mode, "dense|hier");
    decode->add_option("--coarse", dec_coarse, "coarse resolution (hier mode)");
    decode->add_option("--band", dec_band, "band halfwidth in fine-voxel diagonals");
    decode->add_option("--out", dec_mesh, "output mesh (.ply)");
    decode->add_option("--stats", dec_stats, "output decode stats (.json)");

    // depth align
    auto* depth = app.add_subcommand("depth", "depth raster tools");
    depth->require_subcommand(1);
    auto* align = depth->add_subcommand("align", "median-based metric scale alignment");
    std::string d_sensor, d_pred, d_mask, d_out;
    align->add_option("--sensor", d_sensor, "sensor depth raster")->required();
    align->add_option("--pred", d_pred, "predicted depth raster")->required();
    align->add_option("--mask", d_mask, "object mask raster")->required();
    align->add_option("--out", d_out, "output metric raster")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "chamfer distance and f-score between meshes");
    std::string e_pred, e_gt, e_gt_transform;
    double tau = 0.02;
    int e_samples = 10000;
    std::uint64_t e_seed = 0;
    eval->add_option("--pred", e_pred, "predicted mesh (.ply)")->required();
    eval->add_option("--gt", e_gt, "ground truth mesh (.ply)")->required();
    eval->add_option("--gt-transform", e_gt_transform, "transform applied to the gt mesh");
    eval->add_option("--tau", tau, "f-score threshold, meters");
    eval->add_option("--samples", e_samples, "surface samples per mesh");
    eval->add_option("--seed", e_seed, "sampling seed");

    // bench
    auto* bench = app.add_subcommand("bench", "run the synthetic benchmark suite");
    std::string b_suite = "default", b_out;
    std::uint64_t b_seed = 42;
    int b_threads = 1, b_runs = 1;
    bench->add_option("--suite", b_suite, "suite name (default)");
    bench->add_option("--out", b_out, "output directory")->required();
    bench->add_option("--seed", b_seed, "suite seed");
    bench->add_option("--threads", b_threads, "worker threads");
    bench->add_option("--runs", b_runs, "timing runs per scene (results identical)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed())
            return cmd_scene_synth(shape, diag, noise, outliers, partial, seed, out_dir, samples,
                                   with_depth);
        if (reg->parsed())
            return cmd_register(reg_source, reg_target, reg_out, ransac_iters, inlier_thresh,
                                icp_iters, reg_seed);
        if (decode->parsed())
            return cmd_decode(dec_shape, dec_res, dec_mode, dec_coarse, dec_band, dec_mesh,
                              dec_stats);
        if (align->parsed()) return cmd_depth_align(d_sensor, d_pred, d_mask, d_out);
        if (eval->parsed()) return cmd_eval(e_pred, e_gt, e_gt_transform, tau, e_samples, e_seed);
        if (bench->parsed()) return cmd_bench(b_suite, b_out, b_seed, b_threads, b_runs);
    } catch (const meshreg::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
