#pragma once

#include <string>
#include <vector>

#include "hflow/clip.hpp"
#include "hflow/mesh.hpp"
#include "hflow/raster.hpp"

namespace hflow {

// Keyposes with strictly increasing frame stamps spanning the whole clip;
// motion between stamps follows the min-jerk quintic in joint-angle space,
// matching the c_eff reference construction.
struct MotionScript {
    struct Key {
        int frame = 0;
        JointAngles q;
    };
    std::vector<Key> keyposes;
    GarmentParams garment;

    void validate(int frame_count) const;  // throws ValidationError
    JointAngles sample(int frame) const;
};

struct SceneOptions {
    Grid grid{128, 128};
    int frames = 16;
    double dt = 1.0 / 30.0;
    uint64_t seed = 0;
    bool orbit = false;    // pure-yaw camera orbit about the body center
    int subdivisions = 8;  // humanoid tessellation

    void validate() const;
};

// Presets: "idle" (static stand), "walk" (gliding gait, instantaneously
// point-symmetric so the mass center tracks the support segment midpoint),
// "swing" (mirror-symmetric arm raises with strong garment excitation).
MotionScript preset_script(const std::string& name, int frames);

Humanoid scene_humanoid(const SceneOptions& options);

// Per-frame double-precision generation products for the exactness oracles;
// the returned clip stores their 32-bit quantizations.
struct FrameScratch {
    JointAngles angles;
    Pose pose;
    std::vector<Eigen::Vector3d> vertices;  // body only, garment applied
    CameraParams camera;                    // as rendered (after f32 round trip)
    RasterBuffers raster;                   // body triangle ids only
};

SceneClip generate_scene(const std::string& preset, const SceneOptions& options,
                         std::vector<FrameScratch>* scratch = nullptr);

}  // namespace hflow
