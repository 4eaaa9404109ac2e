// hflow: generation, scoring, evaluation, optimization, and gradient
// checking for the dense human scene-flow physics-priors library.
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hflow/clip_io.hpp"
#include "hflow/constraints.hpp"
#include "hflow/metrics.hpp"
#include "hflow/optimizer.hpp"
#include "hflow/parallel.hpp"
#include "hflow/report.hpp"
#include "hflow/scene.hpp"
#include "hflow/skeleton.hpp"

namespace {

using namespace hflow;

Grid parse_size(const std::string& text) {
    size_t x = text.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= text.size())
        throw ValidationError("size must look like 128x128, got '" + text + "'");
    int w = std::atoi(text.substr(0, x).c_str());
    int h = std::atoi(text.substr(x + 1).c_str());
    return Grid(w, h);  // Grid validates the bounds
}

void require_comparable(const SceneClip& pred, const SceneClip& gt) {
    if (pred.frame_count() != gt.frame_count())
        throw ValidationError("clips differ in frame count");
    if (pred.grid() != gt.grid()) throw ValidationError("clips differ in grid size");
}

// Clip-level metrics via vertical frame concatenation, so every mean is a
// true mean over the union of masked pixels rather than a mean of means.
EvalReport eval_clips(const SceneClip& pred, const SceneClip& gt) {
    require_comparable(pred, gt);
    const Grid g = gt.grid();
    const int frames = gt.frame_count();
    Grid big(g.width, g.height * frames);
    Vec3Map flow_pred(big), flow_gt(big);
    ScalarMap depth_pred(big), depth_gt(big);
    MaskField mask(big);
    for (int t = 0; t < frames; ++t) {
        const FrameRecord& fp = pred.frames[size_t(t)];
        const FrameRecord& fg = gt.frames[size_t(t)];
        for (int v = 0; v < g.height; ++v)
            for (int u = 0; u < g.width; ++u) {
                int src = g.index(u, v);
                int dst = big.index(u, v + t * g.height);
                flow_pred.values[size_t(dst)] = fp.flow.vec(u, v);
                flow_gt.values[size_t(dst)] = fg.flow.vec(u, v);
                depth_pred.values[size_t(dst)] = double(fp.depth.values[size_t(src)]);
                depth_gt.values[size_t(dst)] = double(fg.depth.values[size_t(src)]);
                mask.values[size_t(dst)] = fg.mask.values[size_t(src)];
            }
    }
    std::vector<Pose> poses_pred, poses_gt;
    for (int t = 0; t < frames; ++t) {
        poses_pred.push_back(pred.frames[size_t(t)].pose());
        poses_gt.push_back(gt.frames[size_t(t)].pose());
    }
    EvalReport report;
    report.flow = flow_metrics(flow_pred, flow_gt, mask);
    report.pose = pose_metrics(poses_pred, poses_gt);
    report.depth = depth_metrics(depth_pred, depth_gt, mask);
    return report;
}

// Grayscale flow-magnitude frames, normalized by the clip-wide maximum.
// Stored rows have world +y at larger v, so rows are flipped for display.
void dump_flow_ppm(const SceneClip& clip, const std::string& prefix) {
    const Grid g = clip.grid();
    double max_mag = 0.0;
    for (const FrameRecord& f : clip.frames)
        for (int v = 0; v < g.height; ++v)
            for (int u = 0; u < g.width; ++u)
                max_mag = std::max(max_mag, f.flow.vec(u, v).norm());
    for (int t = 0; t < clip.frame_count(); ++t) {
        char name[64];
        std::snprintf(name, sizeof(name), "_f%03d.ppm", t);
        std::string path = prefix + name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open '" + path + "' for writing");
        out << "P6\n" << g.width << " " << g.height << "\n255\n";
        for (int v = g.height - 1; v >= 0; --v)
            for (int u = 0; u < g.width; ++u) {
                double mag = clip.frames[size_t(t)].flow.vec(u, v).norm();
                double s = max_mag > 0.0 ? mag / max_mag : 0.0;
                unsigned char byte = static_cast<unsigned char>(s * 255.0 + 0.5);
                unsigned char px[3] = {byte, byte, byte};
                out.write(reinterpret_cast<const char*>(px), 3);
            }
        if (!out) throw IoError("short write on '" + path + "'");
        std::printf("wrote %s\n", path.c_str());
    }
}

void apply_disables(PriorWeights& weights, const std::vector<std::string>& disables) {
    for (const std::string& name : disables) weights.by_name(name) = 0.0;
}

int run_gen(const std::string& preset, const std::string& size, int frames, uint64_t seed,
            bool orbit, int subdiv, const std::string& out_path) {
    SceneOptions opt;
    opt.grid = parse_size(size);
    opt.frames = frames;
    opt.seed = seed;
    opt.orbit = orbit;
    opt.subdivisions = subdiv;
    SceneClip clip = generate_scene(preset, opt);
    size_t bytes = write_clip_file(clip, out_path);
    std::printf("wrote %s: %d frames %dx%d, %zu bytes\n", out_path.c_str(), clip.frame_count(),
                clip.grid().width, clip.grid().height, bytes);
    return 0;
}

int run_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& ppm_prefix) {
    SceneClip pred = read_clip_file(pred_path);
    SceneClip gt = read_clip_file(gt_path);
    EvalReport report = eval_clips(pred, gt);
    std::printf("%s", render_report(report).c_str());
    if (!ppm_prefix.empty()) dump_flow_ppm(pred, ppm_prefix);
    return 0;
}

int run_score(const std::string& clip_path, const std::vector<std::string>& disables,
              const std::string& config_path, uint64_t seed) {
    SceneClip clip = read_clip_file(clip_path);
    Tolerances tol;
    PriorWeights weights;
    if (!config_path.empty()) load_prior_config_file(config_path, tol, weights);
    apply_disables(weights, disables);
    SceneState state = SceneState::from_clip(clip);
    // Scoring anchors the distillation term to the clip's own depth and
    // pose, i.e. zero-noise teachers.
    TeacherSet teachers = make_teachers(clip, 0.0, 0.0, 0.0, 0);
    ObjectiveBreakdown b = total_objective(state, teachers, weights, tol, default_skeleton(),
                                           default_mass_profile(), seed, nullptr);
    std::printf("c_silh = %.17g\n", b.silh);
    std::printf("c_skel = %.17g\n", b.skel);
    std::printf("c_com = %.17g\n", b.com);
    std::printf("c_eff = %.17g\n", b.eff);
    std::printf("c_dist = %.17g\n", b.dist);
    std::printf("c_cam = %.17g\n", b.cam);
    std::printf("total = %.17g\n", b.total);
    return 0;
}

int run_optimize(const std::string& clip_path, const std::vector<std::string>& disables,
                 const std::string& config_path, int steps, uint64_t seed,
                 const std::string& log_path) {
    SceneClip clip = read_clip_file(clip_path);
    OptimConfig cfg;
    if (!config_path.empty()) load_prior_config_file(config_path, cfg.tol, cfg.weights);
    apply_disables(cfg.weights, disables);
    cfg.iterations = steps;
    cfg.seed = seed;
    Trajectory traj = optimize(clip, cfg, nullptr);
    std::string text = traj.render();
    if (!log_path.empty()) {
        std::ofstream out(log_path, std::ios::binary);
        if (!out) throw IoError("cannot open '" + log_path + "' for writing");
        out << text;
        if (!out) throw IoError("short write on '" + log_path + "'");
    } else {
        std::printf("%s", text.c_str());
    }
    const TrajectoryRow& first = traj.rows.front();
    const TrajectoryRow& last = traj.rows.back();
    std::printf("steps = %d\n", last.step);
    std::printf("epe_initial_m = %.17g\n", first.epe_m);
    std::printf("epe_final_m = %.17g\n", last.epe_m);
    std::printf("mpjpe_initial_m = %.17g\n", first.mpjpe_m);
    std::printf("mpjpe_final_m = %.17g\n", last.mpjpe_m);
    return 0;
}

int run_gradcheck(const std::string& constraint, uint64_t seed, double step) {
    ConstraintId id = constraint_from_name(constraint);
    double err = finite_difference_check(id, seed, step);
    double threshold = (id == ConstraintId::kCam) ? 1e-6 : 1e-4;
    bool pass = err <= threshold;
    std::printf("c_%s max relative error = %.3g (threshold %g): %s\n", constraint.c_str(), err,
                threshold, pass ? "PASS" : "FAIL");
    if (!pass) throw NumericError("gradient check failed for c_" + constraint);
    return 0;
}

int run_info(const std::string& clip_path, const std::string& ppm_prefix) {
    std::vector<std::string> warnings;
    SceneClip clip = read_clip_file(clip_path, &warnings);
    std::printf("frames = %d\n", clip.frame_count());
    std::printf("width = %d\n", clip.grid().width);
    std::printf("height = %d\n", clip.grid().height);
    std::printf("version = %u\n", clip.meta.version);
    std::printf("seed = %llu\n", static_cast<unsigned long long>(clip.meta.seed));
    std::printf("dt_seconds = %.17g\n", clip.meta.dt_seconds);
    int raster_chunks = 0;
    long long foreground = 0;
    for (const FrameRecord& f : clip.frames) {
        raster_chunks += f.raster.has_value() ? 1 : 0;
        foreground += f.mask.foreground_count();
    }
    std::printf("raster_chunks = %d\n", raster_chunks);
    std::printf("foreground_px_total = %lld\n", foreground);
    for (const std::string& w : warnings) std::printf("warning: %s\n", w.c_str());
    std::vector<std::string> issues = validate_clip(clip);
    for (const std::string& issue : issues) std::printf("invalid: %s\n", issue.c_str());
    std::printf("valid = %s\n", issues.empty() ? "yes" : "no");
    if (!ppm_prefix.empty()) dump_flow_ppm(clip, ppm_prefix);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* env = std::getenv("HFLOW_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) set_worker_threads(n);
    }

    CLI::App app{"hflow: dense human scene-flow physics priors"};
    app.require_subcommand(1);

    std::string preset = "walk", size = "128x128", out_path = "clip.hfsf";
    int frames = 16, subdiv = 8;
    uint64_t seed = 0;
    bool orbit = false;
    CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic clip");
    gen->add_option("--preset", preset, "idle, walk, or swing");
    gen->add_option("--frames", frames, "frame count (>= 2)");
    gen->add_option("--size", size, "grid as WxH, e.g. 128x128");
    gen->add_option("--seed", seed, "generation seed");
    gen->add_flag("--orbit", orbit, "pure-yaw camera orbit");
    gen->add_option("--subdiv", subdiv, "humanoid tessellation level");
    gen->add_option("--out", out_path, "output container path");

    std::string pred_path, gt_path, ppm_prefix;
    CLI::App* eval = app.add_subcommand("eval", "Metrics between two clips");
    eval->add_option("--pred", pred_path, "predicted clip")->required();
    eval->add_option("--gt", gt_path, "ground-truth clip")->required();
    eval->add_option("--dump-ppm", ppm_prefix, "write flow-magnitude frames to PREFIX_fNNN.ppm");

    std::string clip_path, config_path, log_path, constraint = "skel";
    std::vector<std::string> disables;
    uint64_t score_seed = 0;
    CLI::App* score = app.add_subcommand("score", "Constraint values on one clip");
    score->add_option("--clip", clip_path, "input clip")->required();
    score->add_option("--disable", disables, "zero one prior weight (repeatable)");
    score->add_option("--config", config_path, "tolerances/weights key = value file");
    score->add_option("--seed", score_seed, "window and RANSAC seed");

    int steps = 500;
    CLI::App* optimize_cmd = app.add_subcommand("optimize", "Run the descent demo");
    optimize_cmd->add_option("--clip", clip_path, "ground-truth clip")->required();
    optimize_cmd->add_option("--disable", disables, "zero one prior weight (repeatable)");
    optimize_cmd->add_option("--config", config_path, "tolerances/weights key = value file");
    optimize_cmd->add_option("--steps", steps, "descent iterations");
    optimize_cmd->add_option("--seed", score_seed, "perturbation/window seed");
    optimize_cmd->add_option("--log", log_path, "write the trajectory log here");

    double fd_step = 1e-5;
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
    gradcheck->add_option("--constraint", constraint, "silh, skel, com, eff, dist, or cam");
    gradcheck->add_option("--seed", score_seed, "fixture seed");
    gradcheck->add_option("--step", fd_step, "central-difference step");

    CLI::App* info = app.add_subcommand("info", "Container inspection");
    info->add_option("--clip", clip_path, "input clip")->required();
    info->add_option("--dump-ppm", ppm_prefix, "write flow-magnitude frames to PREFIX_fNNN.ppm");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "%s\n%s", e.what(), app.help().c_str());
        return 1;
    }

    try {
        if (gen->parsed())
            return run_gen(preset, size, frames, seed, orbit, subdiv, out_path);
        if (eval->parsed()) return run_eval(pred_path, gt_path, ppm_prefix);
        if (score->parsed()) return run_score(clip_path, disables, config_path, score_seed);
        if (optimize_cmd->parsed())
            return run_optimize(clip_path, disables, config_path, steps, score_seed, log_path);
        if (gradcheck->parsed()) return run_gradcheck(constraint, score_seed, fd_step);
        if (info->parsed()) return run_info(clip_path, ppm_prefix);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 1;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    }
    std::fprintf(stderr, "no subcommand\n%s", app.help().c_str());
    return 1;
}
