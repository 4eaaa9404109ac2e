#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstring>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "hflow/clip_io.hpp"
#include "hflow/scene.hpp"

using namespace hflow;

namespace {

SceneClip small_clip() {
    SceneOptions opt;
    opt.grid = Grid(32, 32);
    opt.frames = 3;
    opt.seed = 5;
    return generate_scene("idle", opt);
}

std::string clip_bytes(const SceneClip& clip) {
    std::ostringstream os(std::ios::binary);
    write_clip(clip, os);
    return os.str();
}

void put_u32_at(std::string& buf, size_t pos, uint32_t v) {
    buf[pos] = char(v & 0xFF);
    buf[pos + 1] = char((v >> 8) & 0xFF);
    buf[pos + 2] = char((v >> 16) & 0xFF);
    buf[pos + 3] = char((v >> 24) & 0xFF);
}

uint32_t get_u32_at(const std::string& buf, size_t pos) {
    return uint32_t(uint8_t(buf[pos])) | uint32_t(uint8_t(buf[pos + 1])) << 8 |
           uint32_t(uint8_t(buf[pos + 2])) << 16 | uint32_t(uint8_t(buf[pos + 3])) << 24;
}

}  // namespace

TEST_CASE("write read round-trip is bit exact") {
    SceneClip clip = small_clip();
    std::string bytes = clip_bytes(clip);

    std::istringstream in(bytes, std::ios::binary);
    std::vector<std::string> warnings;
    SceneClip back = read_clip(in, &warnings);
    CHECK(warnings.empty());
    CHECK(back == clip);

    // Re-serialization of the parsed clip reproduces the exact bytes.
    CHECK(clip_bytes(back) == bytes);
}

TEST_CASE("serialization is deterministic") {
    SceneClip clip = small_clip();
    CHECK(clip_bytes(clip) == clip_bytes(clip));
    // And refuses degenerate clips.
    SceneClip tiny;
    tiny.frames.resize(1);
    std::ostringstream os;
    CHECK_THROWS_AS(write_clip(tiny, os), ValidationError);
}

TEST_CASE("unknown chunk tags are skipped with a warning") {
    SceneClip clip = small_clip();
    std::string bytes = clip_bytes(clip);
    uint32_t count = get_u32_at(bytes, 8);
    put_u32_at(bytes, 8, count + 1);
    // Appended chunk: tag ZZZZ, global frame, f32, one dim of 2, 8 bytes.
    bytes.append("ZZZZ", 4);
    std::string tail;
    tail.push_back(char(0xFF));
    tail.push_back(char(0xFF));
    tail.push_back(char(0xFF));
    tail.push_back(char(0xFF));
    tail.push_back(char(0));  // dtype f32
    tail.push_back(char(1));  // ndim
    bytes += tail;
    bytes.push_back(char(2));
    bytes.push_back(char(0));
    bytes.push_back(char(0));
    bytes.push_back(char(0));
    bytes.append(8, char(0));

    std::istringstream in(bytes, std::ios::binary);
    std::vector<std::string> warnings;
    SceneClip back = read_clip(in, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("ZZZZ") != std::string::npos);
    CHECK(back == clip);
}

TEST_CASE("corrupt containers fail with io errors") {
    SceneClip clip = small_clip();
    std::string bytes = clip_bytes(clip);

    SUBCASE("bad magic") {
        std::string bad = bytes;
        bad[0] = 'X';
        std::istringstream in(bad, std::ios::binary);
        CHECK_THROWS_AS(read_clip(in), IoError);
    }
    SUBCASE("unsupported version") {
        std::string bad = bytes;
        put_u32_at(bad, 4, 2);
        std::istringstream in(bad, std::ios::binary);
        CHECK_THROWS_AS(read_clip(in), IoError);
    }
    SUBCASE("truncated payload") {
        std::string bad = bytes.substr(0, bytes.size() / 2);
        std::istringstream in(bad, std::ios::binary);
        CHECK_THROWS_AS(read_clip(in), IoError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(read_clip_file("/no/such/file.hfsf"), IoError); }
}

TEST_CASE("frame records expose f32-exact camera and pose") {
    SceneClip clip = small_clip();
    const FrameRecord& f = clip.frames[1];
    CameraParams cam = f.camera();
    Pose pose = f.pose();
    // Raw payloads are authoritative: re-packing what the accessors return
    // must reproduce the stored floats exactly.
    FrameRecord copy = f;
    copy.set_camera(cam);
    copy.set_pose(pose);
    CHECK(copy.cam_intrinsics_raw == f.cam_intrinsics_raw);
    CHECK(copy.cam_rotation_raw == f.cam_rotation_raw);
    CHECK(copy.cam_translation_raw == f.cam_translation_raw);
    CHECK(copy.pose_raw == f.pose_raw);
}

TEST_CASE("validate_clip flags exactly the broken rule") {
    SceneClip clip = small_clip();
    CHECK(validate_clip(clip).empty());

    SUBCASE("negative depth") {
        clip.frames[1].depth.values[10] = -0.5f;
        auto issues = validate_clip(clip);
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].find("depth") != std::string::npos);
        CHECK(issues[0].find("frame 1") != std::string::npos);
    }
    SUBCASE("non-finite flow") {
        clip.frames[0].flow.values[3] = std::numeric_limits<float>::quiet_NaN();
        auto issues = validate_clip(clip);
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].find("flow") != std::string::npos);
    }
    SUBCASE("mask out of range") {
        // A foreground pixel keeps raster coverage consistent, so only the
        // value-range rule can fire.
        for (uint8_t& m : clip.frames[1].mask.values) {
            if (m == 1) {
                m = 7;
                break;
            }
        }
        auto issues = validate_clip(clip);
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].find("mask values") != std::string::npos);
    }
    SUBCASE("empty mask") {
        clip.frames[1].raster.reset();
        std::fill(clip.frames[1].mask.values.begin(), clip.frames[1].mask.values.end(),
                  uint8_t(0));
        auto issues = validate_clip(clip);
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].find("foreground") != std::string::npos);
    }
    SUBCASE("nonzero flow on the last frame") {
        clip.frames.back().flow.values[0] = 0.25f;
        auto issues = validate_clip(clip);
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].find("last frame") != std::string::npos);
    }
    SUBCASE("broken identity anchor") {
        clip.frames[0].cam_translation_raw[0] = 0.5f;
        auto issues = validate_clip(clip);
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].find("identity anchor") != std::string::npos);
    }
    SUBCASE("raster coverage must match the mask") {
        REQUIRE(clip.frames[1].raster.has_value());
        // Claim coverage on a background pixel.
        for (int i = 0; i < clip.grid().pixels(); ++i) {
            if (clip.frames[1].raster->tri_id[size_t(i)] == kBackgroundTri) {
                clip.frames[1].raster->tri_id[size_t(i)] = 0;
                clip.frames[1].raster->bary[size_t(i) * 3] = 1.0f;
                break;
            }
        }
        auto issues = validate_clip(clip);
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].find("raster") != std::string::npos);
    }
}
