#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hflow/camera.hpp"
#include "hflow/clip.hpp"
#include "hflow/grid.hpp"
#include "hflow/kinematics.hpp"
#include "hflow/skeleton.hpp"

namespace hflow {

// ===== constraint terms =====
//
// Six penalty terms, each non-negative with an exactly reachable zero set.
// Every term returns its value plus analytic gradients for the variables it
// reads; discrete selections made along the way (nearest bone and its
// closest-point parameter, ground plane, contact set, support hull, the
// minimum-jerk reference of a window) are frozen per evaluation, so the
// reported gradient is the derivative of the frozen-selection evaluation.
// Hinge and absolute-value subgradients at their kinks are taken as zero,
// which keeps every zero certificate exactly stationary.

struct Tolerances {
    double rho_min = 0.01;        // on-skin hinge floor, meters
    double alpha = 0.5;           // margin growth per meter of bone distance
    double rho_eff = 0.05;        // trajectory tolerance, meters
    double tau_sat = 32.0;        // silhouette SDF saturation, pixels
    double sigma_contact = 0.05;  // contact weight length scale, meters
    double rho_depth = 0.10;      // teacher depth margin, meters
    double rho_pose = 0.03;       // teacher pose margin, meters
    int window_min = 8;           // frames
    int window_max = 32;          // frames

    void validate() const;  // all positive, window_min <= window_max
};

struct PriorWeights {
    double silh = 1.0;
    double skel = 1.0;
    double com = 1.0;
    double eff = 1.0;
    double dist = 1.0;
    double cam = 1.0;

    void validate() const;  // all >= 0
    bool all_zero() const;
    double& by_name(const std::string& name);  // "silh", "skel", ...
};

// UTF-8 `key = value` lines, '#' comments; accepts every Tolerances field
// by name plus lambda_silh .. lambda_cam; unknown keys are an error.
void parse_prior_config(std::istream& in, Tolerances& tol, PriorWeights& weights);
void load_prior_config_file(const std::string& path, Tolerances& tol, PriorWeights& weights);

// Synthetic stand-ins for the distillation anchors.
struct TeacherSet {
    std::vector<ScalarMap> depth;  // per frame
    std::vector<Pose> pose;        // per frame
};

// Value plus one gradient block per differentiated input, in the order the
// inputs appear in the constraint's signature:
//   c_silh: grad_depth[0], grad_flow[0]
//   c_skel: grad_flow[0], grad_depth[0], grad_pose[0] = frame t, [1] = t+1
//   c_com:  grad_pose[0]
//   c_eff:  grad_pose[i] per window frame (endpoints identically zero)
//   c_dist: grad_depth[0], grad_pose[0]
//   c_cam:  grad_intrinsics[i] per frame
struct ConstraintResult {
    double value = 0.0;
    std::vector<std::vector<double>> grad_depth;
    std::vector<std::vector<Eigen::Vector3d>> grad_flow;
    std::vector<Pose> grad_pose;
    std::vector<Eigen::Vector4d> grad_intrinsics;
};

// Silhouette-distance alignment: mean over all pixels of the Sobel edge
// response of depth and flow, weighted by |saturated mask SDF|.  The SDF is
// data (the mask is an observation), so gradients reach depth and flow only,
// through the exact Sobel adjoint.
ConstraintResult c_silh(const ScalarMap& depth, const Vec3Map& flow, const MaskField& mask,
                        const Tolerances& tol);
ConstraintResult c_silh(const DepthField& depth, const FlowField& flow, const MaskField& mask,
                        const Tolerances& tol);

// Skeleton consistency: per foreground pixel, the flow must match the
// interpolated motion of the nearest bone point up to a margin that widens
// with distance from the bone, [|F - m| - (rho_min + alpha * d)]+, averaged
// over the mask.  Bone index and closest-point parameter are frozen;
// gradients reach the flow, the depth (through d only) and both poses.
ConstraintResult c_skel(const Vec3Map& flow, const ScalarMap& depth, const Pose& pose,
                        const Pose& pose_next, const MaskField& mask, const CameraParams& camera,
                        const Skeleton& skeleton, const Tolerances& tol);

// Static balance: the mass-weighted joint centroid, projected onto the
// RANSAC ground plane, must stay inside the support polygon spanned by
// end effectors whose contact weight exp(-h^2/sigma^2) passes  0.5.  Value
// is the hinged exterior distance; airborne frames (no contacts) cost zero.
// Plane, contact set and hull are frozen; the gradient reaches the pose
// only through the centroid.
ConstraintResult c_com(const Pose& pose, const ScalarMap& depth, const MaskField& mask,
                       const CameraParams& camera, const MassProfile& mass,
                       const Skeleton& skeleton, const Tolerances& tol, uint64_t seed);

// End-effector smoothness: each window pose is compared against the closed
// form minimum-jerk arc between the window endpoints, [|P_i - P*_i|_F -
// rho_eff]+, averaged over the window.  The reference is frozen (endpoint
// stop-gradient); endpoint frames receive exactly zero gradient.
ConstraintResult c_eff(const std::vector<Pose>& window, const Skeleton& skeleton,
                       const Tolerances& tol);

// Distillation anchor: margin hinges against teacher depth (per pixel, the
// whole frame) and teacher pose (per joint).
ConstraintResult c_dist(const ScalarMap& depth, const Pose& pose, const ScalarMap& teacher_depth,
                        const Pose& teacher_pose, const Tolerances& tol);

// Camera-intrinsic agreement: mean squared pairwise distance of the
// normalized 4-vector intrinsics across frames, (1/T^2) sum_ij |K_i - K_j|^2.
// Rotations and translations are untouched.
ConstraintResult c_cam(const std::vector<CameraParams>& cameras);

// ===== scene-level objective =====

// The optimizer's decision variables plus the fixed observations, all at
// 64-bit.  Masks, camera rotations/translations and the skeleton are data.
struct SceneState {
    Grid grid;
    std::vector<ScalarMap> depth;
    std::vector<Vec3Map> flow;
    std::vector<Pose> pose;
    std::vector<CameraParams> camera;
    std::vector<MaskField> mask;

    int frame_count() const { return int(depth.size()); }
    static SceneState from_clip(const SceneClip& clip);
};

struct SceneGradient {
    std::vector<std::vector<double>> depth;            // [frame][pixel]
    std::vector<std::vector<Eigen::Vector3d>> flow;    // [frame][pixel]
    std::vector<Pose> pose;                            // [frame][joint]
    std::vector<Eigen::Vector4d> intrinsics;           // [frame]

    void resize_zero(const Grid& grid, int frames);
    double max_abs() const;
};

// Raw (unweighted) per-term values alongside the weighted total.
struct ObjectiveBreakdown {
    double total = 0.0;
    double silh = 0.0;
    double skel = 0.0;
    double com = 0.0;
    double eff = 0.0;
    double dist = 0.0;
    double cam = 0.0;
};

// Weighted sum over the clip: c_silh summed over all frames, c_skel summed
// over frames 0..T-2, c_dist summed over frames, c_com averaged over frames,
// c_eff on one window whose length is uniform in [min(window_min, T),
// min(window_max, T)] and whose start is uniform over valid positions (drawn
// from `seed`; skipped entirely when T < 3), c_cam once.  Per-frame RANSAC
// seeds derive deterministically from `seed`.  Gradients accumulate into
// `grad` when non-null.  Terms with zero weight are skipped.
ObjectiveBreakdown total_objective(const SceneState& state, const TeacherSet& teachers,
                                   const PriorWeights& weights, const Tolerances& tol,
                                   const Skeleton& skeleton, const MassProfile& mass,
                                   uint64_t seed, SceneGradient* grad);

// ===== finite-difference oracle =====

enum class ConstraintId { kSilh, kSkel, kCom, kEff, kDist, kCam };

ConstraintId constraint_from_name(const std::string& name);  // "silh", "skel", ...
const char* constraint_name(ConstraintId id);

// Central differences over every gradient slot of a seeded fixture, with
// selections frozen; returns max over slots of |g_a - g_fd| / max(|g_fd|,
// 1e-8).  Fixtures whose hinge or norm margins sit within the perturbation's
// reach are redrawn, as are samples whose active set flips during the sweep;
// ten failed redraws raise a numeric error.  Step must lie in [1e-8, 1e-3].
double finite_difference_check(ConstraintId id, uint64_t fixture_seed, double step);

}  // namespace hflow
