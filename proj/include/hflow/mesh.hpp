#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "hflow/kinematics.hpp"
#include "hflow/skeleton.hpp"

namespace hflow {

// ===== capsule humanoid =====

// Flesh profile for the default humanoid.  Geometry and topology depend only
// on these values, never on the build seed.
struct HumanoidParams {
    std::array<double, kBoneCount> radii{};  // capsule radius per bone, meters
    int subdivisions = 8;                    // >= 4, scales ring and cap tessellation
    int pixel_footprint_target = 4000;       // expected peak foreground pixel count

    static HumanoidParams defaults();
    void validate() const;  // throws ValidationError on a degenerate capsule
};

// Per-vertex skinning: at most 4 (bone, weight) pairs, weights sum to 1.
struct VertexSkin {
    std::array<int, 4> bone{{-1, -1, -1, -1}};
    std::array<double, 4> weight{{0.0, 0.0, 0.0, 0.0}};
    int count = 0;
};

struct Humanoid {
    Skeleton skeleton;
    HumanoidParams params;
    std::array<Eigen::Vector3d, kJointCount> rest_joints{};
    std::vector<Eigen::Vector3d> rest_vertices;
    std::vector<std::array<uint32_t, 3>> triangles;
    std::vector<VertexSkin> skinning;
    std::vector<double> garment_scale;  // 0 rigid flesh, (0, 1] garment amplitude

    void validate() const;  // throws ValidationError
};

// One closed capsule per bone with welded caps; rings near the parent joint
// blend their skin weights with the parent bone.  `seed` only jitters the
// per-vertex garment amplitudes: rest geometry, topology and skinning are
// byte-identical across seeds.
Humanoid build_humanoid(const HumanoidParams& params, uint64_t seed);

// ===== garment offsets =====

// Bounded first-order lag: per-bone state decays toward zero and is excited
// by the bone direction's frame-to-frame change, standing in for cloth while
// keeping every offset inside the c_skel margin budget.
struct GarmentParams {
    double time_constant = 0.12;  // seconds
    double gain = 0.35;           // excitation scale, dimensionless
    double max_offset = 0.010;    // meters, hard cap per vertex

    void validate() const;
};

struct GarmentState {
    std::array<Eigen::Vector3d, kBoneCount> lag;  // world frame, zero at rest

    GarmentState() { lag.fill(Eigen::Vector3d::Zero()); }
    void advance(const Skeleton& skeleton, const Pose& prev, const Pose& next, double dt,
                 const GarmentParams& params);
};

// Linear blend skinning v = sum_b w_b T_b(v_rest) with rigid bone transforms
// from fk_transforms, plus the garment offset projected orthogonal to the
// posed bone and clamped to max_offset.  Rest angles with a zero garment
// state reproduce the template exactly.
std::vector<Eigen::Vector3d> skin_vertices(const Humanoid& h, const JointAngles& q,
                                           const GarmentState& garment,
                                           const GarmentParams& params);

}  // namespace hflow
