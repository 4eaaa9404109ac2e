#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "hflow/errors.hpp"
#include "hflow/mesh.hpp"
#include "hflow/parallel.hpp"
#include "hflow/raster.hpp"
#include "hflow/rng.hpp"
#include "hflow/scene.hpp"

using namespace hflow;

namespace {

JointAngles rest_angles(const Skeleton& skel) {
    JointAngles q;
    for (int b = 0; b < kBoneCount; ++b) q.lengths[size_t(b)] = skel.rest_length(b);
    return q;
}

// All-pairs reference rasterizer: every (pixel, triangle) combination is
// tested with the documented coverage rules, no bounding box or scanline
// shortcuts.  Any disagreement with rasterize_frame is a bug in the latter.
RasterBuffers brute_raster(const std::vector<Eigen::Vector3d>& vertices,
                           const std::vector<std::array<uint32_t, 3>>& triangles,
                           const CameraParams& camera, const Grid& grid) {
    constexpr double kNear = 0.01;
    auto orient2d = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                       const Eigen::Vector2d& c) {
        return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    };
    auto top_left = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        if (b.y() == a.y()) return b.x() > a.x();
        return b.y() < a.y();
    };

    RasterBuffers out(grid);
    std::vector<Eigen::Vector2d> screen(vertices.size());
    std::vector<double> cam_z(vertices.size());
    for (size_t i = 0; i < vertices.size(); ++i) {
        Eigen::Vector3d pc = camera.R * (vertices[i] - camera.t);
        cam_z[i] = pc.z();
        if (pc.z() > kNear) {
            double inv_z = 1.0 / pc.z();
            screen[i] = Eigen::Vector2d(
                (camera.intrinsics[0] * pc.x() * inv_z + camera.intrinsics[2]) * grid.width,
                (camera.intrinsics[1] * pc.y() * inv_z + camera.intrinsics[3]) * grid.height);
        }
    }

    for (int v = 0; v < grid.height; ++v) {
        for (int u = 0; u < grid.width; ++u) {
            Eigen::Vector2d p(double(u), double(v));
            size_t idx = size_t(grid.index(u, v));
            for (size_t t = 0; t < triangles.size(); ++t) {
                const auto& tri = triangles[t];
                if (cam_z[tri[0]] <= kNear || cam_z[tri[1]] <= kNear || cam_z[tri[2]] <= kNear)
                    continue;
                std::array<uint32_t, 3> o = {tri[0], tri[1], tri[2]};
                std::array<int, 3> slot = {0, 1, 2};
                double area2 = orient2d(screen[o[0]], screen[o[1]], screen[o[2]]);
                if (area2 == 0.0) continue;
                if (area2 < 0.0) {
                    std::swap(o[1], o[2]);
                    std::swap(slot[1], slot[2]);
                    area2 = -area2;
                }
                const Eigen::Vector2d& p0 = screen[o[0]];
                const Eigen::Vector2d& p1 = screen[o[1]];
                const Eigen::Vector2d& p2 = screen[o[2]];
                double w0 = orient2d(p1, p2, p);
                double w1 = orient2d(p2, p0, p);
                double w2 = orient2d(p0, p1, p);
                bool in0 = w0 > 0.0 || (w0 == 0.0 && top_left(p1, p2));
                bool in1 = w1 > 0.0 || (w1 == 0.0 && top_left(p2, p0));
                bool in2 = w2 > 0.0 || (w2 == 0.0 && top_left(p0, p1));
                if (!(in0 && in1 && in2)) continue;
                double inv_area = 1.0 / area2;
                double s0 = w0 * inv_area, s1 = w1 * inv_area, s2 = w2 * inv_area;
                double inv_depth = s0 / cam_z[o[0]] + s1 / cam_z[o[1]] + s2 / cam_z[o[2]];
                double z = 1.0 / inv_depth;
                if (z < out.depth[idx]) {
                    out.depth[idx] = z;
                    out.tri_id[idx] = uint32_t(t);
                    Eigen::Vector3d b;
                    b[slot[0]] = (s0 / cam_z[o[0]]) * z;
                    b[slot[1]] = (s1 / cam_z[o[1]]) * z;
                    b[slot[2]] = (s2 / cam_z[o[2]]) * z;
                    out.bary[idx] = b;
                    out.any_coverage = true;
                }
            }
        }
    }
    return out;
}

}  // namespace

// ===== humanoid template =====

TEST_CASE("humanoid template invariants") {
    Humanoid h = build_humanoid(HumanoidParams::defaults(), 5);
    h.validate();
    CHECK(int(h.triangles.size()) >= 24000);
    REQUIRE(h.rest_vertices.size() == h.skinning.size());
    REQUIRE(h.rest_vertices.size() == h.garment_scale.size());
    for (const VertexSkin& s : h.skinning) {
        REQUIRE(s.count >= 1);
        double sum = 0.0;
        for (int k = 0; k < s.count; ++k) {
            CHECK(s.bone[size_t(k)] >= 0);
            CHECK(s.bone[size_t(k)] < kBoneCount);
            CHECK(s.weight[size_t(k)] >= 0.0);
            sum += s.weight[size_t(k)];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("seed moves only the garment amplitudes") {
        Humanoid again = build_humanoid(HumanoidParams::defaults(), 5);
        CHECK(again.rest_vertices == h.rest_vertices);
        CHECK(again.triangles == h.triangles);
        CHECK(again.garment_scale == h.garment_scale);

        Humanoid other = build_humanoid(HumanoidParams::defaults(), 6);
        CHECK(other.rest_vertices == h.rest_vertices);
        CHECK(other.triangles == h.triangles);
        CHECK(other.garment_scale != h.garment_scale);
    }
    SUBCASE("tessellation scales quadratically with subdivisions") {
        HumanoidParams fine = HumanoidParams::defaults();
        fine.subdivisions = 16;
        Humanoid hf = build_humanoid(fine, 5);
        double ratio = double(hf.triangles.size()) / double(h.triangles.size());
        CHECK(ratio > 3.5);
        CHECK(ratio < 4.5);
    }
    SUBCASE("parameter validation") {
        HumanoidParams bad = HumanoidParams::defaults();
        bad.subdivisions = 3;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
        bad = HumanoidParams::defaults();
        bad.radii[4] = 0.0;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
    }
}

// ===== skinning and garment =====

TEST_CASE("skinning reproduces the rest template bitwise") {
    Humanoid h = build_humanoid(HumanoidParams::defaults(), 5);
    JointAngles q = rest_angles(h.skeleton);
    std::vector<Eigen::Vector3d> skinned = skin_vertices(h, q, GarmentState{}, GarmentParams{});
    REQUIRE(skinned.size() == h.rest_vertices.size());
    bool exact = true;
    for (size_t i = 0; i < skinned.size(); ++i)
        exact = exact && skinned[i] == h.rest_vertices[i];
    CHECK(exact);

    SUBCASE("root translation is exact equivariance") {
        q.root = Eigen::Vector3d(0.25, -0.125, 0.5);  // dyadic, so sums stay exact
        std::vector<Eigen::Vector3d> moved = skin_vertices(h, q, GarmentState{}, GarmentParams{});
        bool ok = true;
        for (size_t i = 0; i < moved.size(); ++i)
            ok = ok && (moved[i] - skinned[i] - q.root).norm() < 1e-12;
        CHECK(ok);
    }
}

TEST_CASE("garment offsets are excited by motion and hard capped") {
    Humanoid h = build_humanoid(HumanoidParams::defaults(), 5);
    GarmentParams params;
    JointAngles q0 = rest_angles(h.skeleton);
    JointAngles q1 = q0;
    q1.angles[3] = Eigen::Vector3d(0, 0, 1.2);  // swing a limb hard
    q1.angles[16] = Eigen::Vector3d(1.0, 0, 0);
    Pose p0 = fk(h.skeleton, q0);
    Pose p1 = fk(h.skeleton, q1);

    GarmentState state;
    state.advance(h.skeleton, p0, p1, 1.0 / 30.0, params);
    double lag_norm = 0.0;
    for (int b = 0; b < kBoneCount; ++b) lag_norm += state.lag[size_t(b)].norm();
    CHECK(lag_norm > 0.0);

    std::vector<Eigen::Vector3d> rigid = skin_vertices(h, q1, GarmentState{}, params);
    std::vector<Eigen::Vector3d> draped = skin_vertices(h, q1, state, params);
    double moved = 0.0;
    for (size_t i = 0; i < rigid.size(); ++i) {
        double d = (draped[i] - rigid[i]).norm();
        moved = std::max(moved, d);
        CHECK(d <= params.max_offset + 1e-12);
    }
    CHECK(moved > 0.0);

    SUBCASE("repeated excitation stays within the cap") {
        for (int it = 0; it < 40; ++it) state.advance(h.skeleton, it % 2 ? p0 : p1, it % 2 ? p1 : p0, 1.0 / 30.0, params);
        std::vector<Eigen::Vector3d> wild = skin_vertices(h, q1, state, params);
        for (size_t i = 0; i < rigid.size(); ++i)
            CHECK((wild[i] - rigid[i]).norm() <= params.max_offset + 1e-12);
    }
    SUBCASE("garment parameter validation") {
        GarmentParams bad;
        bad.max_offset = 0.02;  // must stay below the margin budget
        CHECK_THROWS_AS(bad.validate(), ValidationError);
        bad.max_offset = 0.0;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
        GarmentState s;
        CHECK_THROWS_AS(s.advance(h.skeleton, p0, p1, 0.0, GarmentParams{}), ValidationError);
        Pose degenerate;  // coincident joints have no bone direction
        CHECK_THROWS_AS(s.advance(h.skeleton, degenerate, p1, 1.0 / 30.0, GarmentParams{}),
                        NumericError);
    }
}

// ===== rasterizer =====

TEST_CASE("rasterizer agrees with the all-pairs oracle everywhere") {
    Grid g(32, 32);
    SplitMix64 rng(77);
    std::vector<Eigen::Vector3d> verts;
    std::vector<std::array<uint32_t, 3>> tris;
    for (int t = 0; t < 60; ++t) {
        uint32_t base = uint32_t(verts.size());
        for (int k = 0; k < 3; ++k)
            verts.emplace_back(2.0 * (rng.next_double() - 0.5), 2.0 * (rng.next_double() - 0.5),
                               1.0 + 3.0 * rng.next_double());
        tris.push_back({base, base + 1, base + 2});
    }
    CameraParams cam;
    cam.R = Eigen::AngleAxisd(0.1, Eigen::Vector3d::UnitY()).toRotationMatrix();
    cam.t = Eigen::Vector3d(0.1, -0.2, -2.5);

    RasterBuffers fast = rasterize_frame(verts, tris, cam, g);
    RasterBuffers slow = brute_raster(verts, tris, cam, g);
    REQUIRE(fast.any_coverage);
    CHECK(fast.any_coverage == slow.any_coverage);
    bool identical = true;
    for (int i = 0; i < g.pixels(); ++i) {
        identical = identical && fast.tri_id[size_t(i)] == slow.tri_id[size_t(i)];
        identical = identical && fast.bary[size_t(i)] == slow.bary[size_t(i)];
        identical = identical &&
                    (fast.depth[size_t(i)] == slow.depth[size_t(i)] ||
                     (std::isinf(fast.depth[size_t(i)]) && std::isinf(slow.depth[size_t(i)])));
    }
    CHECK(identical);
}

TEST_CASE("single triangle coverage, weights and depth") {
    Grid g(4, 4);
    CameraParams cam;
    std::vector<Eigen::Vector3d> now = {{-0.75, -0.75, 2.0}, {0.75, -0.75, 2.0},
                                        {-0.75, 0.75, 2.0}};
    std::vector<std::array<uint32_t, 3>> tris = {{0, 1, 2}};
    RasterBuffers rb = rasterize_frame(now, tris, cam, g);

    size_t idx = size_t(g.index(1, 1));
    REQUIRE(rb.tri_id[idx] == 0);
    CHECK(rb.bary[idx].x() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(rb.bary[idx].y() == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(rb.bary[idx].z() == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(rb.depth[idx] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rb.tri_id[size_t(g.index(0, 0))] == kBackgroundTri);

    SUBCASE("exact flow interpolation") {
        std::vector<Eigen::Vector3d> next = now;
        for (Eigen::Vector3d& v : next) v += Eigen::Vector3d(0.1, 0, 0);
        FlowField flow = pixel_flow_gt(rb, now, next, tris);
        CHECK(std::abs(double(flow.at(1, 1)[0]) - 0.1) < 1e-7);
        CHECK(flow.at(1, 1)[1] == 0.0f);
        CHECK(flow.at(0, 0)[0] == 0.0f);  // background stays zero
    }
    SUBCASE("stale triangle ids are an io error") {
        RasterBuffers broken = rb;
        broken.tri_id[idx] = 7;
        std::vector<Eigen::Vector3d> next = now;
        CHECK_THROWS_AS(pixel_flow_gt(broken, now, next, tris), IoError);
    }
}

TEST_CASE("depth test prefers nearer surfaces and earlier ties") {
    Grid g(4, 4);
    CameraParams cam;
    std::vector<Eigen::Vector3d> far = {{-0.75, -0.75, 2.0}, {0.75, -0.75, 2.0},
                                        {-0.75, 0.75, 2.0}};
    // The same screen footprint at three quarters of the depth.
    std::vector<Eigen::Vector3d> verts = far;
    for (const Eigen::Vector3d& v : far) verts.push_back(0.75 * v);
    std::vector<std::array<uint32_t, 3>> tris = {{0, 1, 2}, {3, 4, 5}};
    RasterBuffers rb = rasterize_frame(verts, tris, cam, g);
    CHECK(rb.tri_id[size_t(g.index(1, 1))] == 1);
    CHECK(rb.depth[size_t(g.index(1, 1))] == doctest::Approx(1.5).epsilon(1e-12));

    SUBCASE("exact depth ties keep the earlier triangle") {
        std::vector<Eigen::Vector3d> dup = far;
        for (const Eigen::Vector3d& v : far) dup.push_back(v);
        RasterBuffers tie = rasterize_frame(dup, tris, cam, g);
        CHECK(tie.tri_id[size_t(g.index(1, 1))] == 0);
    }
    SUBCASE("near-plane triangles are skipped, not clipped") {
        std::vector<Eigen::Vector3d> behind = far;
        behind[0].z() = 0.005;
        RasterBuffers rb2 = rasterize_frame(behind, {{0, 1, 2}}, cam, g);
        CHECK_FALSE(rb2.any_coverage);
    }
    SUBCASE("triangle indices are validated") {
        CHECK_THROWS_AS(rasterize_frame(far, {{0, 1, 9}}, cam, g), ValidationError);
    }
}

// ===== generated scenes =====

TEST_CASE("static scenes store exactly zero flow, orbiting camera included") {
    SceneOptions opt;
    opt.grid = Grid(32, 32);
    opt.frames = 3;
    opt.seed = 9;
    for (bool orbit : {false, true}) {
        opt.orbit = orbit;
        SceneClip clip = generate_scene("idle", opt);
        CHECK(validate_clip(clip).empty());
        bool all_zero = true;
        for (const FrameRecord& f : clip.frames)
            for (float v : f.flow.values) all_zero = all_zero && v == 0.0f;
        CHECK(all_zero);
    }
}

TEST_CASE("every preset produces a well-formed clip") {
    for (const char* preset : {"idle", "walk", "swing"}) {
        for (bool orbit : {false, true}) {
            SceneOptions opt;
            opt.grid = Grid(32, 32);
            opt.frames = 3;
            opt.seed = 9;
            opt.orbit = orbit;
            SceneClip clip = generate_scene(preset, opt);
            CHECK(validate_clip(clip).empty());
        }
    }
    SceneOptions opt;
    opt.grid = Grid(32, 32);
    opt.frames = 3;
    CHECK_THROWS_AS(generate_scene("moonwalk", opt), ValidationError);

    SUBCASE("walking actually moves pixels") {
        SceneClip clip = generate_scene("walk", opt);
        bool any = false;
        for (float v : clip.frames[0].flow.values) any = any || v != 0.0f;
        CHECK(any);
    }
    SUBCASE("the tessellation budget is enforced") {
        SceneOptions coarse = opt;
        coarse.subdivisions = 4;
        CHECK_THROWS_AS(generate_scene("idle", coarse), ValidationError);
    }
}

TEST_CASE("generation is deterministic and thread invariant") {
    SceneOptions opt;
    opt.grid = Grid(32, 32);
    opt.frames = 3;
    opt.seed = 9;
    SceneClip a = generate_scene("walk", opt);
    SceneClip b = generate_scene("walk", opt);
    CHECK(a == b);

    set_worker_threads(4);
    SceneClip c = generate_scene("walk", opt);
    set_worker_threads(1);
    CHECK(c == a);

    opt.seed = 10;
    SceneClip d = generate_scene("walk", opt);
    CHECK_FALSE(d == a);
}

TEST_CASE("stored depth and flow advect onto the next frame surface") {
    SceneOptions opt;
    opt.grid = Grid(32, 32);
    opt.frames = 4;
    opt.seed = 9;
    std::vector<FrameScratch> scratch;
    SceneClip clip = generate_scene("walk", opt, &scratch);
    REQUIRE(scratch.size() == size_t(opt.frames));
    Humanoid body = scene_humanoid(opt);

    double worst = 0.0;
    for (int t = 0; t + 1 < opt.frames; ++t) {
        const FrameRecord& f = clip.frames[size_t(t)];
        REQUIRE(f.raster.has_value());
        const CameraParams cam = scratch[size_t(t)].camera;
        for (int v = 0; v < opt.grid.height; ++v) {
            for (int u = 0; u < opt.grid.width; ++u) {
                size_t i = size_t(opt.grid.index(u, v));
                if (!f.mask.values[i]) continue;
                Eigen::Vector3d x =
                    unproject(double(u), double(v), double(f.depth.values[i]), cam, opt.grid);
                x += f.flow.vec(u, v);
                const auto& tri = body.triangles[f.raster->tri_id[i]];
                Eigen::Vector3d target = Eigen::Vector3d::Zero();
                for (int k = 0; k < 3; ++k)
                    target += double(f.raster->bary[i * 3 + size_t(k)]) *
                              scratch[size_t(t) + 1].vertices[tri[size_t(k)]];
                worst = std::max(worst, (x - target).norm());
            }
        }
    }
    CHECK(worst <= 1e-6);
}
