#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hflow/clip.hpp"
#include "hflow/constraints.hpp"

namespace hflow {

// ===== descent demo =====
//
// Desk-scale analog of constraint-sum training: the decision variables are
// the per-frame depth, flow, and pose fields directly; masks, cameras, and
// the skeleton stay fixed as data.  Plain momentum-free gradient descent
// with one step scale per variable class.

struct OptimConfig {
    double step_flow = 40.0;    // meters of flow update per unit gradient
    double step_depth = 25.0;   // meters of depth update per unit gradient
    double step_pose = 0.05;    // meters of joint update per unit gradient
    int iterations = 500;
    int log_every = 10;
    PriorWeights weights;
    Tolerances tol;
    double sigma_flow = 0.10;   // perturbation magnitudes, meters
    double sigma_depth = 0.05;
    double sigma_pose = 0.05;
    double teach_sigma_depth = 0.01;  // teacher noise, within hinge margins
    double teach_bias_depth = 0.03;
    double teach_sigma_pose = 0.005;
    uint64_t seed = 0;

    void validate() const;  // positive steps, iterations >= 1, sigmas >= 0
};

struct OptimState {
    SceneState vars;
    int steps_taken = 0;

    void validate() const;  // finite variables, depth > 1e-4
};

struct TrajectoryRow {
    int step = 0;
    double objective = 0.0;
    double epe_m = 0.0;
    double mpjpe_m = 0.0;
    double mae_m = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryRow> rows;

    // UTF-8 lines `step, objective, epe_m, mpjpe_m, mae_m` with %.17g
    // payloads, bit-identical across thread-count settings.
    std::string render() const;
};

// Synthetic teacher stand-ins: depth gets blur-smoothed Gaussian noise plus
// a constant bias, pose gets per-joint Gaussian noise, all sized to stay
// within the c_dist hinge margins.  The depth noise is smoothed with the
// separable 5-tap binomial kernel [1,4,6,4,1]/16 and rescaled to restore
// unit variance, so sigma is the per-pixel standard deviation either way.
// Noise tails are clamped so every anchor stays strictly inside its hinge
// margin and ground truth remains a zero of c_dist.
TeacherSet make_teachers(const SceneClip& clip, double sigma_depth, double bias_depth,
                         double sigma_pose, uint64_t seed);

// Initialization for the descent demo: i.i.d. Gaussian flow noise per pixel
// per axis, blur-smoothed depth noise (same kernel as make_teachers), and
// i.i.d. Gaussian joint noise.  Masks and cameras are untouched.
OptimState perturb(const SceneClip& clip, double sigma_flow, double sigma_depth,
                   double sigma_pose, uint64_t seed);

// One descent step: total_objective with a freshly drawn c_eff window
// (seeded from config.seed and the step index), one scaled gradient update,
// depth projected above 1e-4 m and bone lengths projected back into the
// pose invariant.  Returns the objective value at the state
// the step departed from.  A non-finite gradient raises NumericError naming
// the constraint that produced it.
double optimizer_step(OptimState& state, const TeacherSet& teachers, const Skeleton& skeleton,
                      const MassProfile& mass, const OptimConfig& config, int step_index);

// perturb, iterate, and log flow EPE / MPJPE / depth MAE against the clip's
// ground truth every log_every steps (plus step 0 and the final step).
Trajectory optimize(const SceneClip& clip, const OptimConfig& config, OptimState* final_state);

}  // namespace hflow
