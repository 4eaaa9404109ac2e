#pragma once

// Two-stage decomposition of the constraint terms, shared by the production
// evaluators and the finite-difference harness.  Stage one makes every
// discrete selection (nearest bone, ground plane, contact hull, minimum-jerk
// reference); stage two evaluates the frozen-selection objective, optionally
// filling gradients and appending the active-set bits that the harness uses
// to detect branch flips between perturbed evaluations.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "hflow/constraints.hpp"
#include "hflow/geometry.hpp"

namespace hflow::detail {

using Signature = std::vector<uint8_t>;

// --- silhouette ---

// |saturated SDF| per pixel; the mask is data, so this is stage one.
std::vector<double> silh_weights(const MaskField& mask, double tau_sat);

// One pixel's weighted edge response.  The full value is the mean of this
// over all pixels; the FD harness re-evaluates it only on the 3x3
// neighbourhood a perturbed pixel can reach through the Sobel stencil.
double silh_term(const ScalarMap& depth, const Vec3Map& flow, const std::vector<double>& weights,
                 int u, int v);

double silh_value(const ScalarMap& depth, const Vec3Map& flow, const std::vector<double>& weights);

// Sobel response norms at one pixel; fixtures use these to keep every norm
// away from its kink at zero.
void silh_norms(const ScalarMap& depth, const Vec3Map& flow, int u, int v, double& norm_depth,
                double& norm_flow);

// --- skeleton ---

struct SkelFrozen {
    struct Sel {
        int pixel = 0;                               // row-major index
        int ja = 0, jb = 0;                          // bone endpoints, parent/child
        double alpha = 0.0;                          // frozen closest-point parameter
        Eigen::Vector3d ray = Eigen::Vector3d::Zero();  // d(point)/d(depth)
    };
    std::vector<Sel> sel;  // one per foreground pixel, row-major order
};

SkelFrozen skel_freeze(const ScalarMap& depth, const MaskField& mask, const Pose& pose,
                       const CameraParams& camera, const Skeleton& skeleton);

double skel_stage2(const SkelFrozen& frozen, const Vec3Map& flow, const ScalarMap& depth,
                   const Pose& pose, const Pose& pose_next, const Eigen::Vector3d& cam_center,
                   const Tolerances& tol, ConstraintResult* out, Signature* sig);

// --- center of mass ---

struct ComFrozen {
    bool airborne = true;
    Eigen::Vector3d e1 = Eigen::Vector3d::Zero();  // plane basis rows
    Eigen::Vector3d e2 = Eigen::Vector3d::Zero();
    Eigen::Vector3d shift = Eigen::Vector3d::Zero();  // offset * normal
    Polygon2D hull;
};

ComFrozen com_freeze(const Pose& pose, const ScalarMap& depth, const MaskField& mask,
                     const CameraParams& camera, const Skeleton& skeleton, const Tolerances& tol,
                     uint64_t seed);

double com_stage2(const ComFrozen& frozen, const Pose& pose, const MassProfile& mass,
                  ConstraintResult* out, Signature* sig);

// --- end effector ---

struct EffFrozen {
    std::vector<Pose> reference;
};

EffFrozen eff_freeze(const std::vector<Pose>& window, const Skeleton& skeleton);

double eff_stage2(const EffFrozen& frozen, const std::vector<Pose>& window, const Tolerances& tol,
                  ConstraintResult* out, Signature* sig);

// --- distillation ---

double dist_stage2(const ScalarMap& depth, const Pose& pose, const ScalarMap& teacher_depth,
                   const Pose& teacher_pose, const Tolerances& tol, ConstraintResult* out,
                   Signature* sig);

// --- camera ---

double cam_stage2(const std::vector<Eigen::Vector4d>& intrinsics, ConstraintResult* out);

}  // namespace hflow::detail
