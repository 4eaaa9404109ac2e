#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "hflow/skeleton.hpp"

namespace hflow {

// World-frame joint positions, meters.
struct Pose {
    // Eigen vectors do not zero themselves on default construction, so the
    // constructor fills explicitly; gradient code relies on fresh zeros.
    std::array<Eigen::Vector3d, kJointCount> joints;

    Pose() { joints.fill(Eigen::Vector3d::Zero()); }
    const Eigen::Vector3d& operator[](int j) const { return joints[size_t(j)]; }
    Eigen::Vector3d& operator[](int j) { return joints[size_t(j)]; }
};

// Root position plus per-bone axis-angle and length.  Axis-angle vectors
// produced by ik() are minimal rotations from the rest direction, so their
// magnitude never exceeds pi.
struct JointAngles {
    Eigen::Vector3d root = Eigen::Vector3d::Zero();
    std::array<Eigen::Vector3d, kBoneCount> angles;
    std::array<double, kBoneCount> lengths{};

    JointAngles() { angles.fill(Eigen::Vector3d::Zero()); }
    void validate() const;  // throws ValidationError
};

struct BoneHit {
    int bone = -1;
    double alpha = 0.0;   // closest-point parameter along the bone, in [0, 1]
    double distance = 0.0;
};

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle);

// Canonical axis least aligned with v, crossed with v and normalized.  The
// shared fallback rule for IK anti-parallel bones and plane bases.
Eigen::Vector3d least_aligned_axis_cross(const Eigen::Vector3d& v);

// Minimal rotation taking unit vector `from` to unit vector `to`; for the
// anti-parallel case returns pi about least_aligned_axis_cross(from).
Eigen::Vector3d minimal_axis_angle(const Eigen::Vector3d& from, const Eigen::Vector3d& to);

// Joint positions plus the accumulated world rotation of every bone, the
// rigid transforms linear blend skinning reuses.
struct BoneTransforms {
    Pose pose;
    std::array<Eigen::Matrix3d, kBoneCount> rotation{};
};

BoneTransforms fk_transforms(const Skeleton& skeleton, const JointAngles& q);

Pose fk(const Skeleton& skeleton, const JointAngles& q);

// Root-to-leaves closed-form inverse with zero bone roll; fk(ik(p)) == p up
// to floating point.  Throws ValidationError when an observed bone length
// falls outside (0.01, 1.0).
JointAngles ik(const Skeleton& skeleton, const Pose& pose);

// Quintic ease 10 t^3 - 15 t^4 + 6 t^5 on [0, 1] plus derivatives; tau
// outside the interval is a domain error.
double min_jerk_phi(double tau);
double min_jerk_phi_d1(double tau);
double min_jerk_phi_d2(double tau);

// IK both endpoint poses, interpolate axis-angles and root with the quintic
// ease (bone lengths linearly), FK each of `count` frames.  count >= 2.
std::vector<Pose> min_jerk_reference(const Skeleton& skeleton, const Pose& first,
                                     const Pose& last, int count);

// Closest bone segment; ties broken toward the lowest bone index.
BoneHit nearest_bone(const Eigen::Vector3d& point, const Skeleton& skeleton, const Pose& pose);

std::array<Eigen::Vector3d, kJointCount> joint_motion(const Pose& pose, const Pose& pose_next);

Eigen::Vector3d center_of_mass(const Pose& pose, const MassProfile& profile);

}  // namespace hflow
