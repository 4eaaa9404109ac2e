#include "hflow/mesh.hpp"

#include <cmath>
#include <map>
#include <utility>

#include <Eigen/Geometry>

#include "hflow/errors.hpp"
#include "hflow/rng.hpp"

namespace hflow {

namespace {

// Bones wearing the loose-garment shell: torso column plus both arms.
constexpr std::array<int, 7> kGarmentBones = {5, 8, 11, 17, 18, 19, 20};

// Hinge headroom for garment motion: the slimmest garment capsule has
// radius 0.035, so every garment pixel sees a margin of at least
// rho_min + 0.5 * (0.035 - max_offset).  Offsets and their per-frame deltas
// must stay strictly below this budget for c_skel(GT) to sit at zero.
constexpr double kGarmentBudget = 0.02;

bool is_garment_bone(int bone) {
    for (int g : kGarmentBones)
        if (g == bone) return true;
    return false;
}

}  // namespace

HumanoidParams HumanoidParams::defaults() {
    HumanoidParams p;
    p.radii = {0.07, 0.07, 0.10,    // hip links, pelvis->spine1
               0.065, 0.065, 0.11,  // thighs, spine1->spine2
               0.05, 0.05, 0.105,   // shins, spine2->spine3
               0.045, 0.045, 0.085,  // feet, spine3->neck
               0.05, 0.05, 0.07,    // collars, neck->head
               0.045, 0.045,        // collar->shoulder links
               0.042, 0.042,        // upper arms
               0.035, 0.035,        // forearms
               0.03, 0.03};         // hands
    return p;
}

void HumanoidParams::validate() const {
    if (subdivisions < 4) throw ValidationError("humanoid: subdivisions must be at least 4");
    if (pixel_footprint_target <= 0)
        throw ValidationError("humanoid: pixel footprint target must be positive");
    for (int b = 0; b < kBoneCount; ++b) {
        double r = radii[size_t(b)];
        if (!std::isfinite(r) || r <= 0.005 || r >= 0.5)
            throw ValidationError("humanoid: capsule radius outside (0.005, 0.5) at bone " +
                                  std::to_string(b));
    }
}

void Humanoid::validate() const {
    params.validate();
    size_t n = rest_vertices.size();
    if (skinning.size() != n || garment_scale.size() != n)
        throw ValidationError("humanoid: per-vertex arrays must match the vertex count");
    for (size_t v = 0; v < n; ++v) {
        const VertexSkin& s = skinning[v];
        if (s.count < 1 || s.count > 4) throw ValidationError("humanoid: 1..4 weights per vertex");
        double sum = 0.0;
        for (int k = 0; k < s.count; ++k) {
            if (s.bone[size_t(k)] < 0 || s.bone[size_t(k)] >= kBoneCount)
                throw ValidationError("humanoid: skin bone index out of range");
            if (s.weight[size_t(k)] < 0.0) throw ValidationError("humanoid: negative skin weight");
            sum += s.weight[size_t(k)];
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw ValidationError("humanoid: skin weights must sum to 1");
        double g = garment_scale[v];
        if (!(g >= 0.0 && g <= 1.0)) throw ValidationError("humanoid: garment scale outside [0, 1]");
    }
    // Watertightness per capsule: every edge borders exactly two triangles.
    std::map<std::pair<uint32_t, uint32_t>, int> edge_use;
    for (const auto& t : triangles) {
        for (int e = 0; e < 3; ++e) {
            uint32_t a = t[size_t(e)];
            uint32_t b = t[size_t((e + 1) % 3)];
            if (a >= n || b >= n) throw ValidationError("humanoid: triangle index out of range");
            ++edge_use[{std::min(a, b), std::max(a, b)}];
        }
    }
    for (const auto& [edge, uses] : edge_use) {
        (void)edge;
        if (uses != 2) throw ValidationError("humanoid: capsule surface is not closed");
    }
}

Humanoid build_humanoid(const HumanoidParams& params, uint64_t seed) {
    params.validate();
    Humanoid h;
    h.skeleton = default_skeleton();
    h.params = params;

    // Accumulated with the same arithmetic as fk at rest angles, so rest-pose
    // skinning cancels bitwise.
    h.rest_joints[0] = Eigen::Vector3d::Zero();
    for (int b = 0; b < kBoneCount; ++b)
        h.rest_joints[size_t(h.skeleton.bone_child(b))] =
            h.rest_joints[size_t(h.skeleton.bone_parent(b))] +
            h.skeleton.rest_length(b) * h.skeleton.rest_dir(b);

    SplitMix64 jitter(mix_seed(seed, 0x6761726du));  // garment amplitude only

    const int n = params.subdivisions;
    const int ring_verts = 4 * n;  // vertices per latitude ring
    const int cap_rings = n;       // rings per hemisphere, equator included
    const int shaft_rings = n;     // shaft segments between the equators

    for (int b = 0; b < kBoneCount; ++b) {
        const double r = params.radii[size_t(b)];
        const double len = h.skeleton.rest_length(b);
        const Eigen::Vector3d dir = h.skeleton.rest_dir(b);
        const Eigen::Vector3d a = h.rest_joints[size_t(h.skeleton.bone_parent(b))];
        if (!(len > 2.0 * std::numeric_limits<double>::epsilon()))
            throw ValidationError("humanoid: degenerate capsule at bone " + std::to_string(b));
        const Eigen::Vector3d e1 = least_aligned_axis_cross(dir);
        const Eigen::Vector3d e2 = dir.cross(e1);

        const uint32_t base = uint32_t(h.rest_vertices.size());
        const int pb = h.skeleton.parent_bone(b);
        const bool garment = is_garment_bone(b);
        const double axial_span = len + 2.0 * r;

        // parent_blend > 0 only near the parent joint; rings above the
        // bottom equator belong fully to this bone.
        auto push_vertex = [&](const Eigen::Vector3d& p, double axial, double parent_blend) {
            h.rest_vertices.push_back(p);
            VertexSkin s;
            if (pb >= 0 && parent_blend > 0.0) {
                s.bone = {b, pb, -1, -1};
                s.weight = {1.0 - parent_blend, parent_blend, 0.0, 0.0};
                s.count = 2;
            } else {
                s.bone = {b, -1, -1, -1};
                s.weight = {1.0, 0.0, 0.0, 0.0};
                s.count = 1;
            }
            h.skinning.push_back(s);
            double g = 0.0;
            if (garment) {
                double axial_frac = (axial + r) / axial_span;
                g = std::sin(M_PI * axial_frac);
                g *= 0.75 + 0.25 * jitter.next_double();
                g = std::max(0.0, std::min(1.0, g));
            }
            h.garment_scale.push_back(g);
        };

        auto ring_point = [&](double axial, double radial, int k) {
            double theta = 2.0 * M_PI * double(k) / double(ring_verts);
            return Eigen::Vector3d(a + axial * dir +
                                   radial * (std::cos(theta) * e1 + std::sin(theta) * e2));
        };

        push_vertex(a - r * dir, -r, pb >= 0 ? 0.5 : 0.0);  // bottom apex
        int total_rings = 0;
        for (int j = 1; j <= cap_rings; ++j) {  // bottom hemisphere, equator last
            double phi = 0.5 * M_PI * double(j) / double(cap_rings);
            double blend = pb >= 0 ? 0.5 * (1.0 - double(j) / double(cap_rings)) : 0.0;
            for (int k = 0; k < ring_verts; ++k)
                push_vertex(ring_point(-r * std::cos(phi), r * std::sin(phi), k),
                            -r * std::cos(phi), blend);
            ++total_rings;
        }
        for (int i = 1; i < shaft_rings; ++i) {
            double axial = len * double(i) / double(shaft_rings);
            for (int k = 0; k < ring_verts; ++k)
                push_vertex(ring_point(axial, r, k), axial, 0.0);
            ++total_rings;
        }
        for (int j = 0; j < cap_rings; ++j) {  // top hemisphere, equator first
            double phi = 0.5 * M_PI * double(cap_rings - j) / double(cap_rings);
            for (int k = 0; k < ring_verts; ++k)
                push_vertex(ring_point(len + r * std::cos(phi), r * std::sin(phi), k),
                            len + r * std::cos(phi), 0.0);
            ++total_rings;
        }
        const uint32_t apex_top = uint32_t(h.rest_vertices.size());
        push_vertex(a + (len + r) * dir, len + r, 0.0);

        auto ring_vertex = [&](int ring, int k) {
            return base + 1 + uint32_t(ring) * uint32_t(ring_verts) +
                   uint32_t((k % ring_verts + ring_verts) % ring_verts);
        };
        for (int k = 0; k < ring_verts; ++k)
            h.triangles.push_back({base, ring_vertex(0, k + 1), ring_vertex(0, k)});
        for (int m = 0; m + 1 < total_rings; ++m) {
            for (int k = 0; k < ring_verts; ++k) {
                uint32_t a0 = ring_vertex(m, k);
                uint32_t a1 = ring_vertex(m, k + 1);
                uint32_t b0 = ring_vertex(m + 1, k);
                uint32_t b1 = ring_vertex(m + 1, k + 1);
                h.triangles.push_back({a0, a1, b1});
                h.triangles.push_back({a0, b1, b0});
            }
        }
        for (int k = 0; k < ring_verts; ++k)
            h.triangles.push_back({apex_top, ring_vertex(total_rings - 1, k),
                                   ring_vertex(total_rings - 1, k + 1)});
    }

    if (int(h.rest_vertices.size()) < 3 * params.pixel_footprint_target)
        throw ValidationError("humanoid: vertex budget below 3x the pixel footprint target");
    return h;
}

void GarmentParams::validate() const {
    if (!(time_constant > 0.0)) throw ValidationError("garment: time constant must be positive");
    if (!(gain >= 0.0)) throw ValidationError("garment: gain must be non-negative");
    if (!(max_offset > 0.0 && max_offset < kGarmentBudget))
        throw ValidationError("garment: max offset outside (0, margin budget)");
}

void GarmentState::advance(const Skeleton& skeleton, const Pose& prev, const Pose& next,
                           double dt, const GarmentParams& params) {
    params.validate();
    if (!(dt > 0.0)) throw ValidationError("garment: dt must be positive");
    double decay = std::exp(-dt / params.time_constant);
    for (int b = 0; b < kBoneCount; ++b) {
        int parent = skeleton.bone_parent(b);
        int child = skeleton.bone_child(b);
        Eigen::Vector3d d0 = prev[child] - prev[parent];
        Eigen::Vector3d d1 = next[child] - next[parent];
        double n0 = d0.norm();
        double n1 = d1.norm();
        if (n0 < 1e-9 || n1 < 1e-9) throw NumericError("garment: degenerate bone direction");
        Eigen::Vector3d excite = d1 / n1 - d0 / n0;
        lag[size_t(b)] = decay * lag[size_t(b)] -
                         params.gain * skeleton.rest_length(b) * excite;
    }
}

std::vector<Eigen::Vector3d> skin_vertices(const Humanoid& h, const JointAngles& q,
                                           const GarmentState& garment,
                                           const GarmentParams& params) {
    params.validate();
    BoneTransforms tf = fk_transforms(h.skeleton, q);
    std::array<Eigen::Vector3d, kBoneCount> anchor_rest;
    std::array<Eigen::Vector3d, kBoneCount> anchor_posed;
    std::array<Eigen::Vector3d, kBoneCount> posed_dir;
    std::array<Eigen::Vector3d, kBoneCount> lag_perp;
    for (int b = 0; b < kBoneCount; ++b) {
        int parent = h.skeleton.bone_parent(b);
        anchor_rest[size_t(b)] = h.rest_joints[size_t(parent)];
        anchor_posed[size_t(b)] = tf.pose[parent];
        Eigen::Vector3d d = tf.rotation[size_t(b)] * h.skeleton.rest_dir(b);
        posed_dir[size_t(b)] = d;
        Eigen::Vector3d off = garment.lag[size_t(b)];
        off -= off.dot(d) * d;
        double mag = off.norm();
        if (mag > params.max_offset) off *= params.max_offset / mag;
        lag_perp[size_t(b)] = off;
    }

    // Displacement form of v = sum_b w_b T_b(v): every summand vanishes
    // bitwise at rest angles, so the rest template is reproduced exactly.
    std::vector<Eigen::Vector3d> out(h.rest_vertices.size());
    for (size_t v = 0; v < h.rest_vertices.size(); ++v) {
        const VertexSkin& s = h.skinning[v];
        Eigen::Vector3d p = h.rest_vertices[v];
        for (int k = 0; k < s.count; ++k) {
            int b = s.bone[size_t(k)];
            Eigen::Vector3d arm = h.rest_vertices[v] - anchor_rest[size_t(b)];
            p += s.weight[size_t(k)] *
                 ((anchor_posed[size_t(b)] - anchor_rest[size_t(b)]) +
                  (tf.rotation[size_t(b)] * arm - arm));
        }
        double g = h.garment_scale[v];
        if (g > 0.0) p += g * lag_perp[size_t(s.bone[0])];
        out[v] = p;
    }
    return out;
}

}  // namespace hflow
