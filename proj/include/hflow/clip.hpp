#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hflow/camera.hpp"
#include "hflow/grid.hpp"
#include "hflow/kinematics.hpp"

namespace hflow {

// Per-pixel triangle id and barycentric weights from the generator's
// rasterizer.  0xFFFFFFFF marks background pixels.
inline constexpr uint32_t kBackgroundTri = 0xFFFFFFFFu;

struct RasterChunks {
    Grid grid;
    std::vector<uint32_t> tri_id;  // H*W
    std::vector<float> bary;       // H*W*3, weights in the stored vertex order

    RasterChunks() = default;
    explicit RasterChunks(const Grid& g)
        : grid(g), tri_id(size_t(g.pixels()), kBackgroundTri), bary(size_t(g.pixels()) * 3, 0.0f) {}
};

// One observed frame.  File payloads are 32-bit, so the float buffers here
// are authoritative: serialization re-emits them bit-for-bit, and the
// double-precision accessors derive from them deterministically.
struct FrameRecord {
    DepthField depth;
    FlowField flow;
    MaskField mask;
    std::array<float, kJointCount * 3> pose_raw{};
    std::array<float, 4> cam_intrinsics_raw{1.0f, 1.0f, 0.5f, 0.5f};
    std::array<float, 9> cam_rotation_raw{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
    std::array<float, 3> cam_translation_raw{0, 0, 0};
    std::optional<RasterChunks> raster;

    Pose pose() const;
    void set_pose(const Pose& p);

    // Rotation is re-orthonormalized from the stored 32-bit rows, so the
    // returned params always satisfy the rotation invariants.
    CameraParams camera() const;
    void set_camera(const CameraParams& cam);
};

struct ClipMeta {
    uint64_t seed = 0;
    double dt_seconds = 1.0 / 30.0;
    uint32_t version = 1;
};

struct SceneClip {
    std::vector<FrameRecord> frames;
    ClipMeta meta;

    const Grid& grid() const { return frames.at(0).depth.grid; }
    int frame_count() const { return int(frames.size()); }
};

bool operator==(const FrameRecord& a, const FrameRecord& b);
bool operator==(const SceneClip& a, const SceneClip& b);

// Every violated type invariant as one line naming frame, field and rule;
// empty means the clip is well formed.
std::vector<std::string> validate_clip(const SceneClip& clip);

}  // namespace hflow
