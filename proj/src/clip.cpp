#include "hflow/clip.hpp"

#include <cmath>
#include <sstream>

namespace hflow {

Pose FrameRecord::pose() const {
    Pose p;
    for (int j = 0; j < kJointCount; ++j)
        p[j] = Eigen::Vector3d(pose_raw[size_t(j) * 3 + 0], pose_raw[size_t(j) * 3 + 1],
                               pose_raw[size_t(j) * 3 + 2]);
    return p;
}

void FrameRecord::set_pose(const Pose& p) {
    for (int j = 0; j < kJointCount; ++j) {
        pose_raw[size_t(j) * 3 + 0] = float(p[j].x());
        pose_raw[size_t(j) * 3 + 1] = float(p[j].y());
        pose_raw[size_t(j) * 3 + 2] = float(p[j].z());
    }
}

CameraParams FrameRecord::camera() const {
    CameraParams cam;
    Eigen::Matrix3d stored;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            stored(r, c) = double(cam_rotation_raw[size_t(r) * 3 + c]);
    Eigen::Matrix<double, 6, 1> sixd;
    sixd.head<3>() = stored.col(0);
    sixd.tail<3>() = stored.col(1);
    cam.R = rot6d_to_matrix(sixd);
    cam.t = Eigen::Vector3d(cam_translation_raw[0], cam_translation_raw[1],
                            cam_translation_raw[2]);
    cam.intrinsics = Eigen::Vector4d(cam_intrinsics_raw[0], cam_intrinsics_raw[1],
                                     cam_intrinsics_raw[2], cam_intrinsics_raw[3]);
    return cam;
}

void FrameRecord::set_camera(const CameraParams& cam) {
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) cam_rotation_raw[size_t(r) * 3 + c] = float(cam.R(r, c));
    for (int i = 0; i < 3; ++i) cam_translation_raw[size_t(i)] = float(cam.t[i]);
    for (int i = 0; i < 4; ++i) cam_intrinsics_raw[size_t(i)] = float(cam.intrinsics[i]);
}

bool operator==(const FrameRecord& a, const FrameRecord& b) {
    bool raster_eq = a.raster.has_value() == b.raster.has_value() &&
                     (!a.raster || (a.raster->tri_id == b.raster->tri_id &&
                                    a.raster->bary == b.raster->bary));
    return a.depth.grid == b.depth.grid && a.depth.values == b.depth.values &&
           a.flow.values == b.flow.values && a.mask.values == b.mask.values &&
           a.pose_raw == b.pose_raw && a.cam_intrinsics_raw == b.cam_intrinsics_raw &&
           a.cam_rotation_raw == b.cam_rotation_raw &&
           a.cam_translation_raw == b.cam_translation_raw && raster_eq;
}

bool operator==(const SceneClip& a, const SceneClip& b) {
    return a.frames == b.frames && a.meta.seed == b.meta.seed &&
           a.meta.dt_seconds == b.meta.dt_seconds && a.meta.version == b.meta.version;
}

namespace {

void check_frame(const FrameRecord& f, int i, std::vector<std::string>& out) {
    auto note = [&](const std::string& field, const std::string& rule) {
        std::ostringstream os;
        os << "frame " << i << ": " << field << ": " << rule;
        out.push_back(os.str());
    };
    const Grid& g = f.depth.grid;
    if (f.flow.grid != g || f.mask.grid != g) note("grids", "all grids equal");
    if (f.raster && f.raster->grid != g) note("raster", "all grids equal");

    bool depth_ok = true;
    for (float d : f.depth.values)
        if (!std::isfinite(d) || d <= 0.0f) depth_ok = false;
    if (!depth_ok) note("depth", "depth > 0 and finite");

    bool flow_ok = true;
    for (float v : f.flow.values)
        if (!std::isfinite(v)) flow_ok = false;
    if (!flow_ok) note("flow", "flow finite");

    bool mask_ok = true;
    for (uint8_t m : f.mask.values)
        if (m > 1) mask_ok = false;
    if (!mask_ok) note("mask", "mask values in {0, 1}");
    if (f.mask.foreground_count() == 0) note("mask", "at least one foreground pixel");

    bool pose_ok = true;
    for (float v : f.pose_raw)
        if (!std::isfinite(v)) pose_ok = false;
    if (!pose_ok) note("pose", "pose finite");

    try {
        f.camera().validate();
    } catch (const std::exception& e) {
        note("camera", e.what());
    }

    if (f.raster) {
        bool bary_ok = true;
        for (int px = 0; px < g.pixels(); ++px) {
            bool covered = f.raster->tri_id[size_t(px)] != kBackgroundTri;
            if (covered != (f.mask.values[size_t(px)] != 0)) {
                note("raster", "triangle ids cover exactly the mask");
                break;
            }
        }
        for (int px = 0; px < g.pixels() && bary_ok; ++px) {
            if (f.raster->tri_id[size_t(px)] == kBackgroundTri) continue;
            double s = 0.0;
            for (int c = 0; c < 3; ++c) {
                float b = f.raster->bary[size_t(px) * 3 + size_t(c)];
                if (!std::isfinite(b)) bary_ok = false;
                s += double(b);
            }
            if (std::abs(s - 1.0) > 1e-6) bary_ok = false;
        }
        if (!bary_ok) note("raster", "barycentric weights finite and sum to 1");
    }
}

}  // namespace

std::vector<std::string> validate_clip(const SceneClip& clip) {
    std::vector<std::string> out;
    if (clip.frames.size() < 2) {
        out.push_back("clip: frames: frame count >= 2");
        return out;
    }
    if (!clip.frames[0].camera().is_identity_anchor())
        out.push_back("clip: camera: frame 0 camera must be the identity anchor");
    for (int i = 0; i < clip.frame_count(); ++i) check_frame(clip.frames[size_t(i)], i, out);

    const FrameRecord& last = clip.frames.back();
    for (float v : last.flow.values) {
        if (v != 0.0f) {
            out.push_back("frame " + std::to_string(clip.frame_count() - 1) +
                          ": flow: last frame stores all-zero flow");
            break;
        }
    }
    return out;
}

}  // namespace hflow
