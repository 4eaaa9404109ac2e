#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "hflow/camera.hpp"
#include "hflow/kinematics.hpp"
#include "hflow/rng.hpp"

using namespace hflow;

namespace {

CameraParams random_camera(SplitMix64& rng) {
    CameraParams cam;
    Eigen::Vector3d aa(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
    cam.R = rodrigues(0.3 * aa);
    cam.t = Eigen::Vector3d(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
    cam.intrinsics << 0.8 + 0.4 * rng.next_double(), 0.8 + 0.4 * rng.next_double(),
        0.4 + 0.2 * rng.next_double(), 0.4 + 0.2 * rng.next_double();
    return cam;
}

}  // namespace

TEST_CASE("unproject of the pixel origin at unit depth") {
    CameraParams cam;
    Grid grid(128, 128);
    // u = (fx_n X/Z + cx_n) W with the default (1,1,0.5,0.5): pixel (0,0) at
    // depth 1 sits at world (-0.5, -0.5, 1).
    Eigen::Vector3d p = unproject(0.0, 0.0, 1.0, cam, grid);
    CHECK(p.x() == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(p.y() == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(p.z() == doctest::Approx(1.0).epsilon(1e-12));

    PixelProjection center = project(Eigen::Vector3d(0, 0, 1), cam, grid);
    CHECK(center.u == doctest::Approx(64.0));
    CHECK(center.v == doctest::Approx(64.0));
    CHECK(center.depth == doctest::Approx(1.0));
}

TEST_CASE("project and unproject are mutually inverse") {
    SplitMix64 rng(11);
    Grid grid(96, 64);
    for (int i = 0; i < 200; ++i) {
        CameraParams cam = random_camera(rng);
        double u = rng.next_double() * grid.width;
        double v = rng.next_double() * grid.height;
        double depth = 0.2 + 5.0 * rng.next_double();
        Eigen::Vector3d p = unproject(u, v, depth, cam, grid);
        PixelProjection back = project(p, cam, grid);
        CHECK(std::abs(back.u - u) < 1e-9);
        CHECK(std::abs(back.v - v) < 1e-9);
        CHECK(std::abs(back.depth - depth) < 1e-9);
    }
}

TEST_CASE("unproject_dir factors the unprojection") {
    SplitMix64 rng(5);
    Grid grid(64, 64);
    for (int i = 0; i < 50; ++i) {
        CameraParams cam = random_camera(rng);
        double u = rng.next_double() * grid.width;
        double v = rng.next_double() * grid.height;
        double depth = 0.5 + rng.next_double();
        Eigen::Vector3d d = unproject_dir(u, v, cam, grid);
        Eigen::Vector3d p = unproject(u, v, depth, cam, grid);
        CHECK((cam.t + depth * d - p).norm() < 1e-12);
    }
}

TEST_CASE("points behind the camera are rejected") {
    CameraParams cam;
    Grid grid(32, 32);
    CHECK_THROWS_AS(project(Eigen::Vector3d(0, 0, -1), cam, grid), NumericError);
    CHECK_THROWS_AS(project(Eigen::Vector3d(0, 0, 0), cam, grid), NumericError);
}

TEST_CASE("extrinsics convention: p_cam = R (p - t)") {
    CameraParams cam;
    cam.R = rodrigues(Eigen::Vector3d(0.0, M_PI / 2.0, 0.0));
    cam.t = Eigen::Vector3d(1.0, 0.0, 0.0);
    Grid grid(64, 64);
    // World point chosen so the camera-frame point is (0, 0, 2): cam looks
    // along its own +z; R maps (p - t) = (-2, 0, 0) to (0, 0, 2).
    Eigen::Vector3d p_world = cam.t + cam.R.transpose() * Eigen::Vector3d(0.0, 0.0, 2.0);
    PixelProjection px = project(p_world, cam, grid);
    CHECK(px.u == doctest::Approx(32.0));
    CHECK(px.v == doctest::Approx(32.0));
    CHECK(px.depth == doctest::Approx(2.0));
}

TEST_CASE("camera pack and unpack round-trip") {
    SplitMix64 rng(17);
    for (int i = 0; i < 50; ++i) {
        CameraParams cam = random_camera(rng);
        CameraParams back = unpack_camera(pack_camera(cam));
        CHECK((back.R - cam.R).norm() < 1e-12);
        CHECK((back.t - cam.t).norm() < 1e-12);
        CHECK((back.intrinsics - cam.intrinsics).norm() < 1e-12);
    }
}

TEST_CASE("rot6d recovery rejects degenerate columns") {
    Eigen::Matrix<double, 6, 1> sixd;
    sixd << 0, 0, 0, 0, 1, 0;
    CHECK_THROWS_AS(rot6d_to_matrix(sixd), NumericError);
    sixd << 1, 0, 0, 1, 0, 0;  // parallel columns
    CHECK_THROWS_AS(rot6d_to_matrix(sixd), NumericError);
}

TEST_CASE("camera validation catches bad intrinsics") {
    CameraParams cam;
    cam.intrinsics << -1.0, 1.0, 0.5, 0.5;
    CHECK_THROWS_AS(cam.validate(), ValidationError);
    cam = CameraParams{};
    cam.R.col(0) *= 2.0;  // not a rotation
    CHECK_THROWS_AS(cam.validate(), ValidationError);
    CHECK(CameraParams{}.is_identity_anchor());
}
