#include "hflow/scene.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Geometry>

#include "hflow/errors.hpp"
#include "hflow/parallel.hpp"

namespace hflow {

namespace {

// ===== scene layout =====

constexpr double kBodyZ = 3.2;       // body center distance from the anchor camera
constexpr double kGroundY = -1.2;    // ground plane height, world meters
// Straight-leg foot joints sit 0.93 m below the root; this root height keeps
// them 2 mm above the ground, well inside the 4.16 cm contact cutoff.
constexpr double kRootY = -0.268;
constexpr double kSkyDepth = 20.0;   // depth for pixels neither body nor ground
constexpr double kOrbitTotal = 0.25; // radians of yaw across an orbit clip
constexpr size_t kTriangleBudget = 24000;

Eigen::Matrix3d yaw_matrix(double psi) {
    return rodrigues(Eigen::Vector3d(0.0, psi, 0.0));
}

// Ground trapezoid on y = kGroundY, built in the camera frame so it always
// carpets the visible part of the plane without near-plane crossings.  Valid
// for cameras with world-level y axis (static and pure-yaw orbit).
void append_ground(const CameraParams& cam, std::vector<Eigen::Vector3d>& vertices,
                   std::vector<std::array<uint32_t, 3>>& triangles) {
    const double y = kGroundY - cam.t.y();
    const double z_near = 1.6, z_far = 400.0;
    const double x_near = 1.6, x_far = 260.0;
    std::array<Eigen::Vector3d, 6> cam_pts = {
        Eigen::Vector3d(-x_near, y, z_near), Eigen::Vector3d(x_near, y, z_near),
        Eigen::Vector3d(-x_far, y, z_far),   Eigen::Vector3d(x_far, y, z_far),
        Eigen::Vector3d(0.0, y, z_near),     Eigen::Vector3d(0.0, y, z_far)};
    uint32_t base = uint32_t(vertices.size());
    for (const auto& pc : cam_pts) vertices.push_back(cam.R.transpose() * pc + cam.t);
    const uint32_t a = base + 0, b = base + 1, d = base + 2, c = base + 3;
    const uint32_t m1 = base + 4, m2 = base + 5;
    triangles.push_back({a, m1, m2});
    triangles.push_back({a, m2, d});
    triangles.push_back({b, m1, m2});
    triangles.push_back({b, m2, c});
}

// ===== preset authoring =====

// Left-bone indices; the right side uses x-mirrored target directions.
constexpr int kLeftThigh = 3;
constexpr int kLeftUpperArm = 17, kLeftForearm = 19, kLeftHandBone = 21;
constexpr int kRightThigh = 4;
constexpr int kRightUpperArm = 18, kRightForearm = 20, kRightHandBone = 22;

Eigen::Vector3d rot_x(double phi, const Eigen::Vector3d& v) {
    return {v.x(), std::cos(phi) * v.y() - std::sin(phi) * v.z(),
            std::sin(phi) * v.y() + std::cos(phi) * v.z()};
}

Eigen::Vector3d mirror_x(const Eigen::Vector3d& v) { return {-v.x(), v.y(), v.z()}; }

// Desired world direction per bone; bones without a target keep their rest
// heading relative to the parent.
struct AimTargets {
    std::array<std::optional<Eigen::Vector3d>, kBoneCount> dir;

    void set(int bone, const Eigen::Vector3d& d) { dir[size_t(bone)] = d; }
};

// Local angles that realize the requested world directions: each target is
// pulled back through the accumulated parent rotation before the minimal
// aim, so composed chains point where authored.
JointAngles aim_pose(const Skeleton& s, const Eigen::Vector3d& root, const AimTargets& t) {
    JointAngles q;
    q.root = root;
    for (int b = 0; b < kBoneCount; ++b) q.lengths[size_t(b)] = s.rest_length(b);
    std::array<Eigen::Matrix3d, kBoneCount> global;
    for (int b = 0; b < kBoneCount; ++b) {
        int pb = s.parent_bone(b);
        const Eigen::Matrix3d parent =
            pb < 0 ? Eigen::Matrix3d::Identity() : global[size_t(pb)];
        if (t.dir[size_t(b)]) {
            Eigen::Vector3d local = parent.transpose() * *t.dir[size_t(b)];
            q.angles[size_t(b)] = minimal_axis_angle(s.rest_dir(b), local.normalized());
        }
        global[size_t(b)] = parent * rodrigues(q.angles[size_t(b)]);
    }
    return q;
}

// Arms hang beside the body with a slight outward spread; the clearance from
// the hand chain to the torso surface keeps nearest-bone checks unambiguous.
const Eigen::Vector3d kHangUpper(0.26, -0.966, 0.0);
const Eigen::Vector3d kHangLower(0.19, -0.98, 0.0);

void author_arms(AimTargets& t, const Eigen::Vector3d& upper, const Eigen::Vector3d& lower) {
    t.set(kLeftUpperArm, upper);
    t.set(kLeftForearm, lower);
    t.set(kLeftHandBone, lower);
    t.set(kRightUpperArm, mirror_x(upper));
    t.set(kRightForearm, mirror_x(lower));
    t.set(kRightHandBone, mirror_x(lower));
}

JointAngles idle_pose(const Skeleton& s) {
    AimTargets t;
    author_arms(t, kHangUpper, kHangLower);
    return aim_pose(s, {0.0, kRootY, kBodyZ}, t);
}

// Walk phase: straight legs swung fore/aft about the hips, arms
// counter-swung; opposite limbs take the point-mirrored direction, keeping
// the mass center between the feet at every interpolated frame.
JointAngles walk_pose(const Skeleton& s, double leg, double arm) {
    AimTargets t;
    t.set(kLeftThigh, {0.0, -std::cos(leg), std::sin(leg)});
    t.set(kRightThigh, {0.0, -std::cos(leg), -std::sin(leg)});
    Eigen::Vector3d upper = rot_x(arm, kHangUpper);
    Eigen::Vector3d lower = rot_x(1.4 * arm, kHangLower);
    t.set(kLeftUpperArm, upper);
    t.set(kLeftForearm, lower);
    t.set(kLeftHandBone, lower);
    t.set(kRightUpperArm, rot_x(-arm, mirror_x(kHangUpper)));
    t.set(kRightForearm, rot_x(-1.4 * arm, mirror_x(kHangLower)));
    t.set(kRightHandBone, rot_x(-1.4 * arm, mirror_x(kHangLower)));
    return aim_pose(s, {0.0, kRootY, kBodyZ}, t);
}

// Swing phase: arms sweep from hanging to raised out-forward, mirror
// symmetric, exciting the garment lag without tightening any skel margin.
JointAngles swing_pose(const Skeleton& s, double raise) {
    Eigen::Vector3d upper =
        (1.0 - raise) * kHangUpper + raise * Eigen::Vector3d(0.93, 0.34, 0.18);
    Eigen::Vector3d lower =
        (1.0 - raise) * kHangLower + raise * Eigen::Vector3d(0.95, 0.30, 0.08);
    AimTargets t;
    author_arms(t, upper, lower);
    return aim_pose(s, {0.0, kRootY, kBodyZ}, t);
}

}  // namespace

void MotionScript::validate(int frame_count) const {
    garment.validate();
    if (keyposes.empty()) throw ValidationError("motion script: at least one keypose");
    for (size_t i = 0; i < keyposes.size(); ++i) {
        keyposes[i].q.validate();
        if (i > 0 && keyposes[i].frame <= keyposes[i - 1].frame)
            throw ValidationError("motion script: frame stamps must be strictly increasing");
    }
    if (keyposes.front().frame != 0 || keyposes.back().frame != frame_count - 1)
        if (keyposes.size() > 1 || frame_count < 1)
            throw ValidationError("motion script: keyposes must span the clip");
}

JointAngles MotionScript::sample(int frame) const {
    if (keyposes.size() == 1 || frame <= keyposes.front().frame) return keyposes.front().q;
    if (frame >= keyposes.back().frame) return keyposes.back().q;
    size_t hi = 1;
    while (keyposes[hi].frame < frame) ++hi;
    const Key& k0 = keyposes[hi - 1];
    const Key& k1 = keyposes[hi];
    // Same interpolation grid and formulas as min_jerk_reference, so the
    // c_eff reference reproduces keypose-aligned windows.
    int count = k1.frame - k0.frame + 1;
    double tau = double(frame - k0.frame) / double(count - 1);
    double phi = min_jerk_phi(tau);
    JointAngles q;
    q.root = k0.q.root + (k1.q.root - k0.q.root) * phi;
    for (int b = 0; b < kBoneCount; ++b) {
        q.angles[size_t(b)] =
            k0.q.angles[size_t(b)] + (k1.q.angles[size_t(b)] - k0.q.angles[size_t(b)]) * phi;
        q.lengths[size_t(b)] =
            k0.q.lengths[size_t(b)] + (k1.q.lengths[size_t(b)] - k0.q.lengths[size_t(b)]) * tau;
    }
    return q;
}

void SceneOptions::validate() const {
    if (frames < 2) throw ValidationError("scene: at least 2 frames");
    if (!(dt > 0.0)) throw ValidationError("scene: dt must be positive");
    if (subdivisions < 4) throw ValidationError("scene: subdivisions must be at least 4");
}

MotionScript preset_script(const std::string& name, int frames) {
    if (frames < 2) throw ValidationError("scene: at least 2 frames");
    const Skeleton& s = default_skeleton();
    MotionScript script;
    int last = frames - 1;
    int mid = last / 2;
    if (name == "idle") {
        script.keyposes.push_back({0, idle_pose(s)});
        script.garment.gain = 0.0;
    } else if (name == "walk") {
        JointAngles a = walk_pose(s, 0.22, -0.25);
        JointAngles b = walk_pose(s, -0.22, 0.25);
        script.keyposes.push_back({0, a});
        if (mid > 0 && mid < last) script.keyposes.push_back({mid, b});
        script.keyposes.push_back({last, mid > 0 && mid < last ? a : b});
        script.garment.gain = 0.30;
    } else if (name == "swing") {
        JointAngles a = swing_pose(s, 0.0);
        JointAngles b = swing_pose(s, 1.0);
        script.keyposes.push_back({0, a});
        if (mid > 0 && mid < last) script.keyposes.push_back({mid, b});
        script.keyposes.push_back({last, mid > 0 && mid < last ? a : b});
        script.garment.gain = 0.35;
    } else {
        throw ValidationError("scene: unknown preset '" + name + "'");
    }
    script.validate(frames);
    return script;
}

Humanoid scene_humanoid(const SceneOptions& options) {
    HumanoidParams params = HumanoidParams::defaults();
    params.subdivisions = options.subdivisions;
    return build_humanoid(params, options.seed);
}

SceneClip generate_scene(const std::string& preset, const SceneOptions& options,
                         std::vector<FrameScratch>* scratch) {
    options.validate();
    const int frames = options.frames;
    Humanoid body = scene_humanoid(options);
    if (body.triangles.size() < kTriangleBudget)
        throw ValidationError("scene: tessellation below the triangle budget");
    MotionScript script = preset_script(preset, frames);

    // Cameras: frame 0 is the identity anchor; an orbit yaws the rig about
    // the vertical axis through the body center.
    std::vector<CameraParams> cams(static_cast<size_t>(frames));
    const Eigen::Vector3d pivot(0.0, 0.0, kBodyZ);
    for (int k = 0; k < frames; ++k) {
        CameraParams cam;
        if (options.orbit && k > 0) {
            double psi = kOrbitTotal * double(k) / double(frames - 1);
            Eigen::Matrix3d q = yaw_matrix(psi);
            cam.R = q.transpose();
            cam.t = pivot - q * pivot;
        }
        cams[size_t(k)] = cam;
    }

    // Pose and garment trajectories are sequential; rendering is per-frame.
    std::vector<FrameScratch> local;
    std::vector<FrameScratch>& fs = scratch ? *scratch : local;
    fs.assign(size_t(frames), FrameScratch{});
    GarmentState garment;
    for (int k = 0; k < frames; ++k) {
        fs[size_t(k)].angles = script.sample(k);
        fs[size_t(k)].pose = fk(body.skeleton, fs[size_t(k)].angles);
        if (k > 0)
            garment.advance(body.skeleton, fs[size_t(k - 1)].pose, fs[size_t(k)].pose,
                            options.dt, script.garment);
        fs[size_t(k)].vertices =
            skin_vertices(body, fs[size_t(k)].angles, garment, script.garment);
    }

    SceneClip clip;
    clip.meta.seed = options.seed;
    clip.meta.dt_seconds = options.dt;
    clip.frames.assign(size_t(frames), FrameRecord{});

    const uint32_t body_tris = uint32_t(body.triangles.size());
    parallel_for(size_t(frames), [&](size_t k) {
        FrameRecord& rec = clip.frames[k];
        rec.set_camera(cams[k]);
        CameraParams cam = rec.camera();  // render with the stored camera
        fs[k].camera = cam;

        std::vector<Eigen::Vector3d> verts = fs[k].vertices;
        std::vector<std::array<uint32_t, 3>> tris = body.triangles;
        append_ground(cam, verts, tris);
        RasterBuffers raster = rasterize_frame(verts, tris, cam, options.grid);

        rec.depth = DepthField(options.grid);
        rec.mask = MaskField(options.grid);
        RasterChunks chunks(options.grid);
        for (int px = 0; px < options.grid.pixels(); ++px) {
            uint32_t id = raster.tri_id[size_t(px)];
            bool is_body = id != kBackgroundTri && id < body_tris;
            rec.depth.values[size_t(px)] =
                id == kBackgroundTri ? float(kSkyDepth) : float(raster.depth[size_t(px)]);
            rec.mask.values[size_t(px)] = is_body ? 1 : 0;
            if (is_body) {
                chunks.tri_id[size_t(px)] = id;
                for (int c = 0; c < 3; ++c)
                    chunks.bary[size_t(px) * 3 + size_t(c)] = float(raster.bary[size_t(px)][c]);
            } else {
                raster.tri_id[size_t(px)] = kBackgroundTri;
                raster.bary[size_t(px)].setZero();
            }
        }
        rec.raster = std::move(chunks);
        fs[k].raster = std::move(raster);
        rec.set_pose(fs[k].pose);
        rec.flow = FlowField(options.grid);
    });

    for (int k = 0; k + 1 < frames; ++k)
        clip.frames[size_t(k)].flow = pixel_flow_gt(fs[size_t(k)].raster, fs[size_t(k)].vertices,
                                                    fs[size_t(k + 1)].vertices, body.triangles);

    std::vector<std::string> violations = validate_clip(clip);
    if (!violations.empty())
        throw NumericError("scene: generator produced an invalid clip: " + violations.front());
    return clip;
}

}  // namespace hflow
