#include "hflow/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "hflow/metrics.hpp"
#include "hflow/rng.hpp"
#include "hflow/skeleton.hpp"

namespace hflow {

namespace {

// Substream tags; any fixed distinct constants work, they only have to keep
// teacher noise, init noise, and per-step window draws uncorrelated.
constexpr uint64_t kTeacherTag = 0x7eac4e55ull;
constexpr uint64_t kPerturbTag = 0x9e27b001ull;
constexpr uint64_t kStepTag = 0x57e90000ull;

// Separable binomial blur [1,4,6,4,1]/16 with periodic borders.  Periodic
// wrap keeps every output pixel's weight profile identical, so one global
// rescale restores unit variance exactly: each axis attenuates the variance
// of white noise by sum(k^2) = 70/256.
constexpr double kBlurRescale = 256.0 / 70.0;

void blur_axis(const Grid& g, bool horizontal, std::vector<double>& f) {
    static const double k[5] = {1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0};
    const int n = horizontal ? g.width : g.height;
    const int lines = horizontal ? g.height : g.width;
    std::vector<double> line(static_cast<size_t>(n));
    for (int l = 0; l < lines; ++l) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int d = -2; d <= 2; ++d) {
                int j = (i + d + n) % n;
                int u = horizontal ? j : l;
                int v = horizontal ? l : j;
                acc += k[d + 2] * f[size_t(g.index(u, v))];
            }
            line[size_t(i)] = acc;
        }
        for (int i = 0; i < n; ++i) {
            int u = horizontal ? i : l;
            int v = horizontal ? l : i;
            f[size_t(g.index(u, v))] = line[size_t(i)];
        }
    }
}

// Unit-variance smooth noise field.  Draw order is pixel-sequential so the
// field is a pure function of the stream position.
std::vector<double> smooth_unit_noise(const Grid& g, SplitMix64& rng) {
    std::vector<double> f(size_t(g.pixels()));
    for (double& v : f) v = rng.next_gaussian();
    blur_axis(g, true, f);
    blur_axis(g, false, f);
    for (double& v : f) v *= kBlurRescale;
    return f;
}

// Projects raw joint positions back onto the pose invariant (bone lengths
// inside (0.01, 1.0) m) by rescaling each out-of-range child about its
// parent, root to leaves.  Mirrors the depth positivity projection; a no-op
// on any pose that already satisfies the invariant, so stationary points
// are unaffected.
constexpr double kMinBoneLen = 0.012;
constexpr double kMaxBoneLen = 0.98;

void project_pose_lengths(Pose& pose, const Skeleton& skeleton) {
    for (int b = 0; b < kBoneCount; ++b) {
        int pj = skeleton.bone_parent(b);
        int cj = skeleton.bone_child(b);
        Eigen::Vector3d d = pose[cj] - pose[pj];
        double len = d.norm();
        if (len < 1e-12) {
            pose[cj] = pose[pj] + kMinBoneLen * skeleton.rest_dir(b);
        } else if (len < kMinBoneLen) {
            pose[cj] = pose[pj] + (kMinBoneLen / len) * d;
        } else if (len > kMaxBoneLen) {
            pose[cj] = pose[pj] + (kMaxBoneLen / len) * d;
        }
    }
}

bool all_finite(const SceneGradient& g) {
    for (const auto& frame : g.depth)
        for (double v : frame)
            if (!std::isfinite(v)) return false;
    for (const auto& frame : g.flow)
        for (const auto& v : frame)
            if (!v.allFinite()) return false;
    for (const auto& frame : g.pose)
        for (int j = 0; j < kJointCount; ++j)
            if (!frame[j].allFinite()) return false;
    for (const auto& v : g.intrinsics)
        if (!v.allFinite()) return false;
    return true;
}

// Re-runs the objective one prior at a time to name the term that went
// non-finite.  Only reached on the failure path, so the extra passes are
// acceptable.
std::string diagnose_nonfinite(const SceneState& state, const TeacherSet& teachers,
                               const Tolerances& tol, const Skeleton& skeleton,
                               const MassProfile& mass, uint64_t seed) {
    static const char* kNames[] = {"silh", "skel", "com", "eff", "dist", "cam"};
    for (const char* name : kNames) {
        PriorWeights w;
        w.silh = w.skel = w.com = w.eff = w.dist = w.cam = 0.0;
        w.by_name(name) = 1.0;
        SceneGradient grad;
        try {
            ObjectiveBreakdown b =
                total_objective(state, teachers, w, tol, skeleton, mass, seed, &grad);
            if (!std::isfinite(b.total) || !all_finite(grad)) return name;
        } catch (const std::exception&) {
            return name;
        }
    }
    return "combined objective";
}

double weighted_mean_epe(const SceneState& pred, const SceneState& gt) {
    double num = 0.0;
    long long count = 0;
    for (int t = 0; t < gt.frame_count(); ++t) {
        FlowReport r = flow_metrics(pred.flow[size_t(t)], gt.flow[size_t(t)], gt.mask[size_t(t)]);
        num += r.epe * double(r.pixel_count);
        count += r.pixel_count;
    }
    return count > 0 ? num / double(count) : 0.0;
}

double weighted_mean_mae(const SceneState& pred, const SceneState& gt) {
    double num = 0.0;
    long long count = 0;
    for (int t = 0; t < gt.frame_count(); ++t) {
        DepthReport r =
            depth_metrics(pred.depth[size_t(t)], gt.depth[size_t(t)], gt.mask[size_t(t)]);
        num += r.mae * double(r.pixel_count);
        count += r.pixel_count;
    }
    return count > 0 ? num / double(count) : 0.0;
}

double evaluate_objective(const SceneState& state, const TeacherSet& teachers,
                          const OptimConfig& config, const Skeleton& skeleton,
                          const MassProfile& mass, int step_index) {
    uint64_t step_seed = mix_seed(config.seed, kStepTag + uint64_t(uint32_t(step_index)));
    return total_objective(state, teachers, config.weights, config.tol, skeleton, mass,
                           step_seed, nullptr)
        .total;
}

}  // namespace

void OptimConfig::validate() const {
    if (!(step_flow > 0.0) || !(step_depth > 0.0) || !(step_pose > 0.0))
        throw ValidationError("optimizer config: step scales must be positive");
    if (iterations < 1) throw ValidationError("optimizer config: iterations must be >= 1");
    if (log_every < 1) throw ValidationError("optimizer config: log_every must be >= 1");
    const double sigmas[] = {sigma_flow, sigma_depth, sigma_pose, teach_sigma_depth,
                             teach_sigma_pose};
    for (double s : sigmas)
        if (!(s >= 0.0) || !std::isfinite(s))
            throw ValidationError("optimizer config: sigmas must be finite and >= 0");
    if (!std::isfinite(teach_bias_depth))
        throw ValidationError("optimizer config: teacher depth bias must be finite");
    weights.validate();
    if (weights.all_zero())
        throw ValidationError("optimizer config: at least one prior weight must be positive");
    tol.validate();
}

void OptimState::validate() const {
    if (steps_taken < 0) throw ValidationError("optimizer state: negative step count");
    for (int t = 0; t < vars.frame_count(); ++t) {
        for (double d : vars.depth[size_t(t)].values)
            if (!(d > 1e-4) || !std::isfinite(d))
                throw ValidationError("optimizer state: depth must stay above 1e-4 m");
        for (const auto& v : vars.flow[size_t(t)].values)
            if (!v.allFinite()) throw ValidationError("optimizer state: non-finite flow");
        for (int j = 0; j < kJointCount; ++j)
            if (!vars.pose[size_t(t)][j].allFinite())
                throw ValidationError("optimizer state: non-finite pose");
    }
}

std::string Trajectory::render() const {
    std::string out = "step, objective, epe_m, mpjpe_m, mae_m\n";
    char buf[256];
    for (const TrajectoryRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d, %.17g, %.17g, %.17g, %.17g\n", r.step, r.objective,
                      r.epe_m, r.mpjpe_m, r.mae_m);
        out += buf;
    }
    return out;
}

TeacherSet make_teachers(const SceneClip& clip, double sigma_depth, double bias_depth,
                         double sigma_pose, uint64_t seed) {
    const Grid grid = clip.grid();
    const int frames = clip.frame_count();
    TeacherSet teachers;
    teachers.depth.reserve(size_t(frames));
    teachers.pose.reserve(size_t(frames));
    SplitMix64 rng(seed);
    for (int t = 0; t < frames; ++t) {
        ScalarMap d(clip.frames[size_t(t)].depth);
        std::vector<double> noise = smooth_unit_noise(grid, rng);
        for (int i = 0; i < grid.pixels(); ++i) {
            // Tail clamp keeps every anchor strictly inside the rho_depth
            // hinge, so ground truth stays a zero of c_dist.
            double z = std::clamp(noise[size_t(i)], -4.0, 4.0);
            d.values[size_t(i)] += sigma_depth * z + bias_depth;
        }
        teachers.depth.push_back(std::move(d));
    }
    for (int t = 0; t < frames; ++t) {
        Pose p = clip.frames[size_t(t)].pose();
        for (int j = 0; j < kJointCount; ++j)
            for (int a = 0; a < 3; ++a) {
                double z = std::clamp(rng.next_gaussian(), -3.0, 3.0);
                p[j][a] += sigma_pose * z;
            }
        teachers.pose.push_back(p);
    }
    return teachers;
}

OptimState perturb(const SceneClip& clip, double sigma_flow, double sigma_depth,
                   double sigma_pose, uint64_t seed) {
    OptimState state;
    state.vars = SceneState::from_clip(clip);
    const Grid& grid = state.vars.grid;
    SplitMix64 rng(seed);
    for (int t = 0; t < state.vars.frame_count(); ++t)
        for (auto& v : state.vars.flow[size_t(t)].values)
            for (int a = 0; a < 3; ++a) v[a] += sigma_flow * rng.next_gaussian();
    for (int t = 0; t < state.vars.frame_count(); ++t) {
        std::vector<double> noise = smooth_unit_noise(grid, rng);
        auto& depth = state.vars.depth[size_t(t)].values;
        for (int i = 0; i < grid.pixels(); ++i)
            depth[size_t(i)] =
                std::max(1e-4, depth[size_t(i)] + sigma_depth * noise[size_t(i)]);
    }
    const Skeleton& skeleton = default_skeleton();
    for (int t = 0; t < state.vars.frame_count(); ++t) {
        for (int j = 0; j < kJointCount; ++j)
            for (int a = 0; a < 3; ++a)
                state.vars.pose[size_t(t)][j][a] += sigma_pose * rng.next_gaussian();
        project_pose_lengths(state.vars.pose[size_t(t)], skeleton);
    }
    return state;
}

double optimizer_step(OptimState& state, const TeacherSet& teachers, const Skeleton& skeleton,
                      const MassProfile& mass, const OptimConfig& config, int step_index) {
    const Grid& grid = state.vars.grid;
    const int frames = state.vars.frame_count();
    SceneGradient grad;
    grad.resize_zero(grid, frames);
    uint64_t step_seed = mix_seed(config.seed, kStepTag + uint64_t(uint32_t(step_index)));
    ObjectiveBreakdown obj = total_objective(state.vars, teachers, config.weights, config.tol,
                                             skeleton, mass, step_seed, &grad);
    if (!std::isfinite(obj.total) || !all_finite(grad))
        throw NumericError("optimizer diverged: non-finite gradient from c_" +
                           diagnose_nonfinite(state.vars, teachers, config.tol, skeleton, mass,
                                              step_seed));
    for (int t = 0; t < frames; ++t) {
        auto& flow = state.vars.flow[size_t(t)].values;
        for (int i = 0; i < grid.pixels(); ++i)
            flow[size_t(i)] -= config.step_flow * grad.flow[size_t(t)][size_t(i)];
        auto& depth = state.vars.depth[size_t(t)].values;
        for (int i = 0; i < grid.pixels(); ++i)
            depth[size_t(i)] = std::max(
                1e-4, depth[size_t(i)] - config.step_depth * grad.depth[size_t(t)][size_t(i)]);
        for (int j = 0; j < kJointCount; ++j)
            state.vars.pose[size_t(t)][j] -= config.step_pose * grad.pose[size_t(t)][j];
        project_pose_lengths(state.vars.pose[size_t(t)], skeleton);
    }
    // Cameras stay fixed, so intrinsics gradients are accumulated but spent
    // nowhere.
    state.steps_taken += 1;
    return obj.total;
}

Trajectory optimize(const SceneClip& clip, const OptimConfig& config, OptimState* final_state) {
    config.validate();
    std::vector<std::string> errors = validate_clip(clip);
    if (!errors.empty()) throw ValidationError("optimize: invalid clip: " + errors.front());
    const Skeleton& skeleton = default_skeleton();
    const MassProfile& mass = default_mass_profile();
    TeacherSet teachers =
        make_teachers(clip, config.teach_sigma_depth, config.teach_bias_depth,
                      config.teach_sigma_pose, mix_seed(config.seed, kTeacherTag));
    OptimState state = perturb(clip, config.sigma_flow, config.sigma_depth, config.sigma_pose,
                               mix_seed(config.seed, kPerturbTag));
    SceneState gt = SceneState::from_clip(clip);

    Trajectory traj;
    auto measure = [&](int step, double objective) {
        TrajectoryRow row;
        row.step = step;
        row.objective = objective;
        row.epe_m = weighted_mean_epe(state.vars, gt);
        row.mpjpe_m = pose_metrics(state.vars.pose, gt.pose).mpjpe;
        row.mae_m = weighted_mean_mae(state.vars, gt);
        traj.rows.push_back(row);
    };

    for (int s = 0; s < config.iterations; ++s) {
        // The row at step s describes the state after s steps: metrics are
        // taken before the update, and optimizer_step reports the objective
        // of the state it departs from.
        bool log_this = (s % config.log_every == 0);
        double epe = 0.0, mpjpe = 0.0, mae = 0.0;
        if (log_this) {
            epe = weighted_mean_epe(state.vars, gt);
            mpjpe = pose_metrics(state.vars.pose, gt.pose).mpjpe;
            mae = weighted_mean_mae(state.vars, gt);
        }
        double objective = optimizer_step(state, teachers, skeleton, mass, config, s);
        if (log_this) traj.rows.push_back({s, objective, epe, mpjpe, mae});
    }
    measure(config.iterations,
            evaluate_objective(state.vars, teachers, config, skeleton, mass, config.iterations));

    if (final_state != nullptr) *final_state = state;
    return traj;
}

}  // namespace hflow
