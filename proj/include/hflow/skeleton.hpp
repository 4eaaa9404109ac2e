#pragma once

#include <array>
#include <istream>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hflow {

inline constexpr int kJointCount = 24;
inline constexpr int kBoneCount = 23;

// Kinematic tree in the standard SMPL 24-joint convention: pelvis root,
// parents precede children, bone b connects parent(b+1) -> joint b+1.
struct Skeleton {
    std::array<std::string, kJointCount> names;
    std::array<int, kJointCount> parents;              // -1 for the root
    std::array<Eigen::Vector3d, kJointCount> rest_offsets;  // child - parent, meters

    int bone_child(int bone) const { return bone + 1; }
    int bone_parent(int bone) const { return parents[size_t(bone + 1)]; }
    // Bone whose child joint is this bone's parent joint; -1 at the root.
    int parent_bone(int bone) const {
        int p = bone_parent(bone);
        return p <= 0 ? -1 : p - 1;
    }
    Eigen::Vector3d rest_dir(int bone) const {
        return rest_offsets[size_t(bone + 1)].normalized();
    }
    double rest_length(int bone) const { return rest_offsets[size_t(bone + 1)].norm(); }

    int joint_index(const std::string& name) const;  // -1 when absent

    // left/right foot, left/right hand, head.
    std::array<int, 5> end_effectors() const;

    void validate() const;  // throws ValidationError
};

// Per-joint mass fractions used for the center of mass; nonnegative, sum 1.
struct MassProfile {
    std::array<double, kJointCount> weights{};

    void validate(const Skeleton& skeleton) const;
};

// Config format: one joint per line, "name parent_index dx dy dz", '#'
// comments and blank lines ignored.  Order defines joint indices.
Skeleton load_skeleton(std::istream& in);
Skeleton load_skeleton_file(const std::string& path);

// Config format: "name weight" per line, names must match the skeleton
// order; weights are renormalized to sum exactly 1.
MassProfile load_mass_profile(std::istream& in, const Skeleton& skeleton);
MassProfile load_mass_profile_file(const std::string& path, const Skeleton& skeleton);

// Built-in defaults, identical to the copies shipped under data/.
const std::string& default_skeleton_text();
const std::string& default_mass_profile_text();
const Skeleton& default_skeleton();
const MassProfile& default_mass_profile();

}  // namespace hflow
