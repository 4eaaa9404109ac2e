#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "hflow/skeleton.hpp"

using namespace hflow;

namespace {

std::string file_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("default skeleton structure") {
    const Skeleton& s = default_skeleton();
    s.validate();
    CHECK(kJointCount == 24);
    CHECK(kBoneCount == 23);
    CHECK(s.parents[0] == -1);
    int roots = 0;
    for (int j = 0; j < kJointCount; ++j) roots += (s.parents[size_t(j)] == -1);
    CHECK(roots == 1);
    // Parents precede children, so chains can be walked in index order.
    for (int j = 1; j < kJointCount; ++j) CHECK(s.parents[size_t(j)] < j);

    std::array<int, 5> ee = s.end_effectors();
    std::set<std::string> names;
    for (int j : ee) names.insert(s.names[size_t(j)]);
    CHECK(names ==
          std::set<std::string>{"left_foot", "right_foot", "left_hand", "right_hand", "head"});
}

TEST_CASE("joint lookup by name") {
    const Skeleton& s = default_skeleton();
    CHECK(s.joint_index("pelvis") == 0);
    CHECK(s.joint_index("no_such_joint") == -1);
    for (int j = 0; j < kJointCount; ++j) CHECK(s.joint_index(s.names[size_t(j)]) == j);
}

TEST_CASE("data files mirror the embedded defaults") {
    std::string base = HFLOW_SOURCE_DIR;
    CHECK(file_text(base + "/data/skeleton24.txt") == default_skeleton_text());
    CHECK(file_text(base + "/data/mass_deleva.txt") == default_mass_profile_text());
}

TEST_CASE("mass profile sums to one") {
    const MassProfile& m = default_mass_profile();
    m.validate(default_skeleton());
    double sum = 0.0;
    for (double w : m.weights) {
        CHECK(w >= 0.0);
        sum += w;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
}

TEST_CASE("skeleton parser rejects malformed input") {
    const Skeleton& s = default_skeleton();

    SUBCASE("second root") {
        std::string text = default_skeleton_text();
        // Reparent the last joint to itself being a root.
        size_t pos = text.rfind("\n", text.size() - 2);
        std::string head = text.substr(0, pos + 1);
        std::istringstream broken(head + "right_hand -1 0.1 0.0 0.0\n");
        CHECK_THROWS_AS(load_skeleton(broken), ValidationError);
    }
    SUBCASE("truncated file") {
        std::istringstream broken("pelvis -1 0 0 0\n");
        CHECK_THROWS_AS(load_skeleton(broken), ValidationError);
    }
    SUBCASE("mass with wrong sum") {
        std::ostringstream os;
        for (int j = 0; j < kJointCount; ++j) os << s.names[size_t(j)] << " 0.5\n";
        std::istringstream in(os.str());
        CHECK_THROWS_AS(load_mass_profile(in, s), ValidationError);
    }
    SUBCASE("negative mass") {
        std::ostringstream os;
        os << s.names[0] << " -0.04\n";
        for (int j = 1; j < kJointCount; ++j)
            os << s.names[size_t(j)] << " " << (1.04 / (kJointCount - 1)) << "\n";
        std::istringstream in(os.str());
        CHECK_THROWS_AS(load_mass_profile(in, s), ValidationError);
    }
    SUBCASE("unknown joint in mass table") {
        std::ostringstream os;
        os << "nonexistent 1.0\n";
        std::istringstream in(os.str());
        CHECK_THROWS_AS(load_mass_profile(in, s), ValidationError);
    }
}

TEST_CASE("bone helpers agree with the parent table") {
    const Skeleton& s = default_skeleton();
    for (int b = 0; b < kBoneCount; ++b) {
        CHECK(s.bone_child(b) == b + 1);
        CHECK(s.bone_parent(b) == s.parents[size_t(b + 1)]);
        CHECK(s.rest_length(b) > 0.01);
        CHECK(s.rest_length(b) < 1.0);
        CHECK(std::abs(s.rest_dir(b).norm() - 1.0) < 1e-12);
        int pb = s.parent_bone(b);
        if (pb >= 0) CHECK(s.bone_child(pb) == s.bone_parent(b));
    }
}
