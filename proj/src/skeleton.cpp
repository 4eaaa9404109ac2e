#include "hflow/skeleton.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hflow/errors.hpp"

namespace hflow {

namespace {

// Rest offsets keep every joint in the x = +-const, z = 0 layout: presets
// rely on exact left/right mirror arithmetic, which needs the rest skeleton
// itself to be mirror-exact in floating point.
const char* const kDefaultSkeleton =
    "# 24-joint humanoid, SMPL joint convention\n"
    "# name parent_index rest_dx rest_dy rest_dz (meters, child - parent)\n"
    "pelvis          -1    0.00  0.00  0.00\n"
    "left_hip         0    0.09 -0.06  0.00\n"
    "right_hip        0   -0.09 -0.06  0.00\n"
    "spine1           0    0.00  0.11  0.00\n"
    "left_knee        1    0.00 -0.40  0.00\n"
    "right_knee       2    0.00 -0.40  0.00\n"
    "spine2           3    0.00  0.13  0.00\n"
    "left_ankle       4    0.00 -0.41  0.00\n"
    "right_ankle      5    0.00 -0.41  0.00\n"
    "spine3           6    0.00  0.12  0.00\n"
    "left_foot        7    0.00 -0.06  0.00\n"
    "right_foot       8    0.00 -0.06  0.00\n"
    "neck             9    0.00  0.14  0.00\n"
    "left_collar      9    0.08  0.08  0.00\n"
    "right_collar     9   -0.08  0.08  0.00\n"
    "head            12    0.00  0.16  0.00\n"
    "left_shoulder   13    0.12  0.02  0.00\n"
    "right_shoulder  14   -0.12  0.02  0.00\n"
    "left_elbow      16    0.27  0.00  0.00\n"
    "right_elbow     17   -0.27  0.00  0.00\n"
    "left_wrist      18    0.25  0.00  0.00\n"
    "right_wrist     19   -0.25  0.00  0.00\n"
    "left_hand       20    0.08  0.00  0.00\n"
    "right_hand      21   -0.08  0.00  0.00\n";

// De Leva segment masses assigned to the distal joint of each segment,
// girdle joints carry zero; fractions of total body mass before
// renormalization.
const char* const kDefaultMassProfile =
    "# name weight (De Leva segment mass fractions at distal joints)\n"
    "pelvis          0.0000\n"
    "left_hip        0.0000\n"
    "right_hip       0.0000\n"
    "spine1          0.1117\n"
    "left_knee       0.1416\n"
    "right_knee      0.1416\n"
    "spine2          0.1633\n"
    "left_ankle      0.0433\n"
    "right_ankle     0.0433\n"
    "spine3          0.1596\n"
    "left_foot       0.0137\n"
    "right_foot      0.0137\n"
    "neck            0.0000\n"
    "left_collar     0.0000\n"
    "right_collar    0.0000\n"
    "head            0.0694\n"
    "left_shoulder   0.0000\n"
    "right_shoulder  0.0000\n"
    "left_elbow      0.0271\n"
    "right_elbow     0.0271\n"
    "left_wrist      0.0162\n"
    "right_wrist     0.0162\n"
    "left_hand       0.0061\n"
    "right_hand      0.0061\n";

bool content_line(const std::string& line, std::istringstream& fields) {
    std::string stripped = line;
    size_t hash = stripped.find('#');
    if (hash != std::string::npos) stripped.resize(hash);
    fields.clear();
    fields.str(stripped);
    std::string probe;
    if (!(fields >> probe)) return false;
    fields.clear();
    fields.str(stripped);
    return true;
}

}  // namespace

int Skeleton::joint_index(const std::string& name) const {
    for (int j = 0; j < kJointCount; ++j)
        if (names[size_t(j)] == name) return j;
    return -1;
}

std::array<int, 5> Skeleton::end_effectors() const {
    std::array<int, 5> out{};
    const char* const wanted[5] = {"left_foot", "right_foot", "left_hand", "right_hand", "head"};
    for (int k = 0; k < 5; ++k) {
        out[size_t(k)] = joint_index(wanted[k]);
        if (out[size_t(k)] < 0)
            throw ValidationError(std::string("skeleton is missing end effector ") + wanted[k]);
    }
    return out;
}

void Skeleton::validate() const {
    if (parents[0] != -1) throw ValidationError("skeleton joint 0 must be the root");
    std::set<std::string> seen;
    for (int j = 0; j < kJointCount; ++j) {
        const std::string& name = names[size_t(j)];
        if (name.empty()) throw ValidationError("skeleton joint name must not be empty");
        if (!seen.insert(name).second)
            throw ValidationError("duplicate skeleton joint name: " + name);
        if (j > 0) {
            int p = parents[size_t(j)];
            if (p < 0 || p >= j)
                throw ValidationError("skeleton parents must precede children (joint " + name + ")");
            double len = rest_offsets[size_t(j)].norm();
            if (!(len > 0.01 && len < 1.0))
                throw ValidationError("skeleton rest bone length out of (0.01, 1.0): " + name);
        }
    }
    end_effectors();
}

void MassProfile::validate(const Skeleton&) const {
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ValidationError("mass profile weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("mass profile weights must sum to 1");
}

Skeleton load_skeleton(std::istream& in) {
    Skeleton sk;
    std::string line;
    int row = 0;
    std::istringstream fields;
    while (std::getline(in, line)) {
        if (!content_line(line, fields)) continue;
        if (row >= kJointCount)
            throw ValidationError("skeleton config has more than 24 joint rows");
        std::string name;
        int parent = 0;
        double dx = 0, dy = 0, dz = 0;
        if (!(fields >> name >> parent >> dx >> dy >> dz))
            throw ValidationError("malformed skeleton config row: " + line);
        sk.names[size_t(row)] = name;
        sk.parents[size_t(row)] = parent;
        sk.rest_offsets[size_t(row)] = Eigen::Vector3d(dx, dy, dz);
        ++row;
    }
    if (row != kJointCount)
        throw ValidationError("skeleton config must define exactly 24 joints");
    sk.validate();
    return sk;
}

Skeleton load_skeleton_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open skeleton config: " + path);
    return load_skeleton(in);
}

MassProfile load_mass_profile(std::istream& in, const Skeleton& skeleton) {
    MassProfile mp;
    std::string line;
    int row = 0;
    std::istringstream fields;
    while (std::getline(in, line)) {
        if (!content_line(line, fields)) continue;
        if (row >= kJointCount)
            throw ValidationError("mass profile has more than 24 rows");
        std::string name;
        double w = 0.0;
        if (!(fields >> name >> w))
            throw ValidationError("malformed mass profile row: " + line);
        if (name != skeleton.names[size_t(row)])
            throw ValidationError("mass profile joint order mismatch at " + name);
        if (!(w >= 0.0)) throw ValidationError("mass profile weight must be nonnegative: " + name);
        mp.weights[size_t(row)] = w;
        ++row;
    }
    if (row != kJointCount)
        throw ValidationError("mass profile must define exactly 24 rows");
    double sum = 0.0;
    for (double w : mp.weights) sum += w;
    if (std::abs(sum - 1.0) > 1e-3)
        throw ValidationError("mass profile weights must sum to 1 within 1e-3 before renormalization");
    for (double& w : mp.weights) w /= sum;
    mp.validate(skeleton);
    return mp;
}

MassProfile load_mass_profile_file(const std::string& path, const Skeleton& skeleton) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mass profile: " + path);
    return load_mass_profile(in, skeleton);
}

const std::string& default_skeleton_text() {
    static const std::string text(kDefaultSkeleton);
    return text;
}

const std::string& default_mass_profile_text() {
    static const std::string text(kDefaultMassProfile);
    return text;
}

const Skeleton& default_skeleton() {
    static const Skeleton sk = [] {
        std::istringstream in(default_skeleton_text());
        return load_skeleton(in);
    }();
    return sk;
}

const MassProfile& default_mass_profile() {
    static const MassProfile mp = [] {
        std::istringstream in(default_mass_profile_text());
        return load_mass_profile(in, default_skeleton());
    }();
    return mp;
}

}  // namespace hflow
