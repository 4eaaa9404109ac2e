#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "constraints_internal.hpp"
#include "hflow/constraints.hpp"
#include "hflow/errors.hpp"
#include "hflow/geometry.hpp"
#include "hflow/rng.hpp"

// Central-difference verification of the analytic gradients.  Each fixture
// is drawn from a seed with every hinge slack, norm and closest-point
// distance kept well clear of its kink, so a +-h probe cannot cross a
// branch; probes re-check the active-set signature anyway and a flip (or a
// fixture that fails its margin checks) discards the sample and redraws.

namespace hflow {

namespace {

using detail::Signature;

struct BadSample {};

struct Slot {
    double* x = nullptr;
    double analytic = 0.0;
};

struct Problem {
    std::vector<Slot> slots;
    // Evaluates the frozen-selection objective at the current inputs; the
    // slot index lets c_silh restrict the sum to the perturbed pixel's
    // Sobel footprint (unperturbed terms cancel in the central difference).
    std::function<double(size_t)> value_at;
    // Recomputed by value_at when branch tracking is on.
    Signature* sig = nullptr;
};

double sweep(Problem& p, double h) {
    Signature base;
    if (p.sig) {
        p.value_at(0);
        base = *p.sig;
    }
    double worst = 0.0;
    for (size_t k = 0; k < p.slots.size(); ++k) {
        double* x = p.slots[k].x;
        const double x0 = *x;
        *x = x0 + h;
        double fp = p.value_at(k);
        bool flipped = p.sig && *p.sig != base;
        *x = x0 - h;
        double fm = p.value_at(k);
        flipped = flipped || (p.sig && *p.sig != base);
        *x = x0;
        if (flipped) throw BadSample{};
        double fd = (fp - fm) / (2.0 * h);
        double err = std::abs(p.slots[k].analytic - fd) / std::max(std::abs(fd), 1e-8);
        worst = std::max(worst, err);
    }
    return worst;
}

double* vec_slot(Eigen::Vector3d& v, int c) { return &v[c]; }

// --- silhouette ---

double check_silh(uint64_t seed, double h) {
    const Grid g(64, 64);
    SplitMix64 rng(seed);
    Tolerances tol;

    MaskField mask(g);
    double cu = 28.0 + 8.0 * rng.next_double();
    double cv = 28.0 + 8.0 * rng.next_double();
    double ru = 10.0 + 8.0 * rng.next_double();
    double rv = 10.0 + 8.0 * rng.next_double();
    for (int v = 0; v < g.height; ++v)
        for (int u = 0; u < g.width; ++u) {
            double du = (u - cu) / ru, dv = (v - cv) / rv;
            mask.at(u, v) = du * du + dv * dv <= 1.0 ? 1 : 0;
        }

    auto slope = [&] { return (rng.next_double() < 0.5 ? -1.0 : 1.0) * (0.08 + 0.06 * rng.next_double()); };
    double au = slope(), av = slope();
    Eigen::Vector3d bu(slope(), slope(), slope()), bv(slope(), slope(), slope());

    ScalarMap depth(g);
    Vec3Map flow(g);
    for (int v = 0; v < g.height; ++v)
        for (int u = 0; u < g.width; ++u) {
            depth.at(u, v) = 12.0 + au * (u - 32) + av * (v - 32) + 0.02 * rng.next_gaussian();
            flow.at(u, v) = bu * 0.1 * (u - 32) + bv * 0.1 * (v - 32) +
                            0.02 * Eigen::Vector3d(rng.next_gaussian(), rng.next_gaussian(),
                                                   rng.next_gaussian());
        }

    std::vector<double> w = detail::silh_weights(mask, tol.tau_sat);
    // Keep every gradient norm well away from its kink at zero.
    for (int v = 0; v < g.height; ++v)
        for (int u = 0; u < g.width; ++u) {
            double nd, nf;
            detail::silh_norms(depth, flow, u, v, nd, nf);
            if (nd < 0.01 || nf < 0.01) throw BadSample{};
        }

    ConstraintResult res = c_silh(depth, flow, mask, tol);

    const int n = g.pixels();
    Problem p;
    std::vector<int> slot_pixel;
    for (int i = 0; i < n; ++i) {
        p.slots.push_back({&depth.values[size_t(i)], res.grad_depth[0][size_t(i)]});
        slot_pixel.push_back(i);
    }
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) {
            p.slots.push_back({vec_slot(flow.values[size_t(i)], c),
                               res.grad_flow[0][size_t(i)][c]});
            slot_pixel.push_back(i);
        }
    const double inv_n = 1.0 / double(n);
    p.value_at = [&, inv_n](size_t k) {
        int pix = slot_pixel[k];
        int u = pix % g.width, v = pix / g.width;
        double sum = 0.0;
        for (int dv = -1; dv <= 1; ++dv)
            for (int du = -1; du <= 1; ++du) {
                int uu = u + du, vv = v + dv;
                if (g.contains(uu, vv)) sum += detail::silh_term(depth, flow, w, uu, vv);
            }
        return sum * inv_n;
    };
    return sweep(p, h);
}

// --- skeleton ---

double check_skel(uint64_t seed, double h) {
    const Grid g(64, 64);
    SplitMix64 rng(seed);
    Tolerances tol;
    const Skeleton& skel = default_skeleton();
    CameraParams cam;

    JointAngles qa;
    qa.root = Eigen::Vector3d(0.05 * rng.next_gaussian(), 0.05 * rng.next_gaussian(),
                              3.0 + 0.1 * rng.next_gaussian());
    for (int b = 0; b < kBoneCount; ++b) {
        qa.angles[size_t(b)] = 0.25 * Eigen::Vector3d(rng.next_gaussian(), rng.next_gaussian(),
                                                      rng.next_gaussian());
        if (qa.angles[size_t(b)].norm() > 2.5)
            qa.angles[size_t(b)] *= 2.5 / qa.angles[size_t(b)].norm();
        qa.lengths[size_t(b)] = skel.rest_length(b);
    }
    JointAngles qb = qa;
    qb.root += 0.02 * Eigen::Vector3d(rng.next_gaussian(), rng.next_gaussian(),
                                      rng.next_gaussian());
    for (int b = 0; b < kBoneCount; ++b) {
        qb.angles[size_t(b)] += 0.06 * Eigen::Vector3d(rng.next_gaussian(), rng.next_gaussian(),
                                                       rng.next_gaussian());
        if (qb.angles[size_t(b)].norm() > 2.5)
            qb.angles[size_t(b)] *= 2.5 / qb.angles[size_t(b)].norm();
    }
    Pose pose = fk(skel, qa);
    Pose pose_next = fk(skel, qb);

    MaskField mask(g);
    std::set<int> chosen;
    while (chosen.size() < 24) {
        int u = 24 + int(rng.next_below(16));
        int v = 24 + int(rng.next_below(16));
        chosen.insert(g.index(u, v));
    }
    for (int i : chosen) mask.values[size_t(i)] = 1;

    ScalarMap depth(g, 6.0);
    for (int i = 0; i < g.pixels(); ++i) depth.values[size_t(i)] += rng.next_double();
    for (int i : chosen) depth.values[size_t(i)] = 2.6 + 0.8 * rng.next_double();

    detail::SkelFrozen fz = detail::skel_freeze(depth, mask, pose, cam, skel);

    Vec3Map flow(g);
    for (const detail::SkelFrozen::Sel& s : fz.sel) {
        double wa = 1.0 - s.alpha, wb = s.alpha;
        Eigen::Vector3d x = cam.t + depth.values[size_t(s.pixel)] * s.ray;
        Eigen::Vector3d q = wa * pose[s.ja] + wb * pose[s.jb];
        double d = (x - q).norm();
        if (d < 1e-3) throw BadSample{};
        Eigen::Vector3d m =
            wa * (pose_next[s.ja] - pose[s.ja]) + wb * (pose_next[s.jb] - pose[s.jb]);
        Eigen::Vector3d dir(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
        if (dir.norm() < 1e-3) throw BadSample{};
        dir.normalize();
        double rho = tol.rho_min + tol.alpha * d;
        flow.values[size_t(s.pixel)] = m + dir * (rho + 0.02 + 0.15 * rng.next_double());
    }

    ConstraintResult res = c_skel(flow, depth, pose, pose_next, mask, cam, skel, tol);

    Problem p;
    Signature sig;
    p.sig = &sig;
    for (int i = 0; i < g.pixels(); ++i)
        p.slots.push_back({&depth.values[size_t(i)], res.grad_depth[0][size_t(i)]});
    for (int i = 0; i < g.pixels(); ++i)
        for (int c = 0; c < 3; ++c)
            p.slots.push_back({vec_slot(flow.values[size_t(i)], c),
                               res.grad_flow[0][size_t(i)][c]});
    for (int j = 0; j < kJointCount; ++j)
        for (int c = 0; c < 3; ++c) {
            p.slots.push_back({vec_slot(pose[j], c), res.grad_pose[0][j][c]});
            p.slots.push_back({vec_slot(pose_next[j], c), res.grad_pose[1][j][c]});
        }
    p.value_at = [&](size_t) {
        sig.clear();
        return detail::skel_stage2(fz, flow, depth, pose, pose_next, cam.t, tol, nullptr, &sig);
    };
    return sweep(p, h);
}

// --- center of mass ---

double check_com(uint64_t seed, double h) {
    const Grid g(64, 64);
    SplitMix64 rng(seed);
    Tolerances tol;
    const Skeleton& skel = default_skeleton();
    const MassProfile& mass = default_mass_profile();
    CameraParams cam;

    // Ground plane y = -1.2 across the rows that look downward, sky behind.
    ScalarMap depth(g, 20.0);
    MaskField mask(g);
    for (int v = 0; v < g.height; ++v) {
        double dy = (double(v) / g.height - cam.intrinsics[3]) / cam.intrinsics[1];
        for (int u = 0; u < g.width; ++u) {
            if (dy < -0.03) {
                double z = -1.2 / dy;
                if (z < 25.0) depth.at(u, v) = z * (1.0 + 2e-4 * (rng.next_double() - 0.5));
            }
        }
    }
    for (int v = 32; v < 48; ++v)
        for (int u = 24; u < 40; ++u) {
            double du = (u - 32.0) / 8.0, dv = (v - 40.0) / 8.0;
            if (du * du + dv * dv <= 1.0) {
                mask.at(u, v) = 1;
                depth.at(u, v) = 3.0 + 0.1 * rng.next_double();
            }
        }

    JointAngles q;
    q.root = Eigen::Vector3d(0.2 * rng.next_gaussian(), 0.0, 0.5 * rng.next_gaussian());
    for (int b = 0; b < kBoneCount; ++b) {
        q.angles[size_t(b)] = 0.2 * Eigen::Vector3d(rng.next_gaussian(), rng.next_gaussian(),
                                                    rng.next_gaussian());
        if (q.angles[size_t(b)].norm() > 2.5)
            q.angles[size_t(b)] *= 2.5 / q.angles[size_t(b)].norm();
        q.lengths[size_t(b)] = skel.rest_length(b);
    }
    Pose pose = fk(skel, q);

    // Drop the lowest end effector to just above the plane, then shear the
    // body sideways in proportion to height so the centroid leaves the
    // support polygon while the contacts stay put.
    double low = 1e9;
    for (int j : skel.end_effectors()) low = std::min(low, pose[j].y());
    double target = -1.2 + 0.005 + 0.015 * rng.next_double();
    for (int j = 0; j < kJointCount; ++j) pose[j].y() += target - low;
    double theta = 6.283185307179586477 * rng.next_double();
    double s = 0.25 + 0.25 * rng.next_double();
    for (int j = 0; j < kJointCount; ++j) {
        double lever = pose[j].y() + 1.2;
        pose[j].x() += s * lever * std::cos(theta);
        pose[j].z() += s * lever * std::sin(theta);
    }

    detail::ComFrozen fz = detail::com_freeze(pose, depth, mask, cam, skel, tol, seed);
    if (fz.airborne) throw BadSample{};
    {
        Signature sig;
        double value = detail::com_stage2(fz, pose, mass, nullptr, &sig);
        if (value < 0.01) throw BadSample{};
    }

    ConstraintResult res = c_com(pose, depth, mask, cam, mass, skel, tol, seed);

    Problem p;
    Signature sig;
    p.sig = &sig;
    for (int j = 0; j < kJointCount; ++j)
        for (int c = 0; c < 3; ++c)
            p.slots.push_back({vec_slot(pose[j], c), res.grad_pose[0][j][c]});
    p.value_at = [&](size_t) {
        sig.clear();
        return detail::com_stage2(fz, pose, mass, nullptr, &sig);
    };
    return sweep(p, h);
}

// --- end effector ---

double check_eff(uint64_t seed, double h) {
    SplitMix64 rng(seed);
    Tolerances tol;
    const Skeleton& skel = default_skeleton();

    auto draw_angles = [&](double root_spread) {
        JointAngles q;
        q.root = root_spread * Eigen::Vector3d(rng.next_gaussian(), rng.next_gaussian(),
                                               rng.next_gaussian());
        for (int b = 0; b < kBoneCount; ++b) {
            q.angles[size_t(b)] = 0.3 * Eigen::Vector3d(rng.next_gaussian(), rng.next_gaussian(),
                                                        rng.next_gaussian());
            if (q.angles[size_t(b)].norm() > 2.5)
                q.angles[size_t(b)] *= 2.5 / q.angles[size_t(b)].norm();
            q.lengths[size_t(b)] = skel.rest_length(b);
        }
        return q;
    };
    Pose first = fk(skel, draw_angles(0.1));
    Pose last = fk(skel, draw_angles(0.3));
    int n = 6 + int(rng.next_below(6));
    std::vector<Pose> reference = min_jerk_reference(skel, first, last, n);

    std::vector<Pose> window = reference;
    for (int i = 1; i + 1 < n; ++i) {
        double sigma = rng.next_double() < 0.4 ? 0.0024 : 0.0142;
        for (int j = 0; j < kJointCount; ++j)
            window[size_t(i)][j] += sigma * Eigen::Vector3d(rng.next_gaussian(),
                                                            rng.next_gaussian(),
                                                            rng.next_gaussian());
    }

    detail::EffFrozen fz = detail::eff_freeze(window, skel);
    for (int i = 0; i < n; ++i) {
        double sq = 0.0;
        for (int j = 0; j < kJointCount; ++j)
            sq += (window[size_t(i)][j] - fz.reference[size_t(i)][j]).squaredNorm();
        double slack = std::sqrt(sq) - tol.rho_eff;
        if (i != 0 && i != n - 1 && std::abs(slack) < 5e-3) throw BadSample{};
    }

    ConstraintResult res = c_eff(window, skel, tol);

    Problem p;
    Signature sig;
    p.sig = &sig;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < kJointCount; ++j)
            for (int c = 0; c < 3; ++c)
                p.slots.push_back({vec_slot(window[size_t(i)][j], c),
                                   res.grad_pose[size_t(i)][j][c]});
    p.value_at = [&](size_t) {
        sig.clear();
        return detail::eff_stage2(fz, window, tol, nullptr, &sig);
    };
    return sweep(p, h);
}

// --- distillation ---

double check_dist(uint64_t seed, double h) {
    const Grid g(64, 64);
    SplitMix64 rng(seed);
    Tolerances tol;
    const Skeleton& skel = default_skeleton();

    ScalarMap teacher_depth(g);
    for (int v = 0; v < g.height; ++v)
        for (int u = 0; u < g.width; ++u)
            teacher_depth.at(u, v) = 5.0 + 0.01 * u + 0.02 * v + 0.1 * rng.next_double();

    ScalarMap depth = teacher_depth;
    for (int i = 0; i < g.pixels(); ++i) {
        double mag = rng.next_double() < 0.5 ? 0.03 + 0.05 * rng.next_double()
                                             : 0.13 + 0.10 * rng.next_double();
        double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
        if (std::abs(mag - tol.rho_depth) < 5e-3) throw BadSample{};
        depth.values[size_t(i)] += sign * mag;
    }

    JointAngles q;
    q.root = Eigen::Vector3d(0, 0, 3);
    for (int b = 0; b < kBoneCount; ++b) {
        q.angles[size_t(b)] = 0.2 * Eigen::Vector3d(rng.next_gaussian(), rng.next_gaussian(),
                                                    rng.next_gaussian());
        if (q.angles[size_t(b)].norm() > 2.5)
            q.angles[size_t(b)] *= 2.5 / q.angles[size_t(b)].norm();
        q.lengths[size_t(b)] = skel.rest_length(b);
    }
    Pose teacher_pose = fk(skel, q);
    Pose pose = teacher_pose;
    for (int j = 0; j < kJointCount; ++j) {
        double mag = rng.next_double() < 0.5 ? 0.01 : 0.05 + 0.05 * rng.next_double();
        if (std::abs(mag - tol.rho_pose) < 5e-3) throw BadSample{};
        Eigen::Vector3d dir(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
        if (dir.norm() < 1e-3) throw BadSample{};
        pose[j] += mag * dir.normalized();
    }

    ConstraintResult res = c_dist(depth, pose, teacher_depth, teacher_pose, tol);

    Problem p;
    Signature sig;
    p.sig = &sig;
    for (int i = 0; i < g.pixels(); ++i)
        p.slots.push_back({&depth.values[size_t(i)], res.grad_depth[0][size_t(i)]});
    for (int j = 0; j < kJointCount; ++j)
        for (int c = 0; c < 3; ++c)
            p.slots.push_back({vec_slot(pose[j], c), res.grad_pose[0][j][c]});
    p.value_at = [&](size_t) {
        sig.clear();
        return detail::dist_stage2(depth, pose, teacher_depth, teacher_pose, tol, nullptr, &sig);
    };
    return sweep(p, h);
}

// --- camera ---

double check_cam(uint64_t seed, double h) {
    SplitMix64 rng(seed);
    std::vector<Eigen::Vector4d> intr(6);
    for (Eigen::Vector4d& k : intr)
        k = Eigen::Vector4d(1, 1, 0.5, 0.5) +
            0.05 * Eigen::Vector4d(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian(),
                                   rng.next_gaussian());

    ConstraintResult res;
    res.grad_intrinsics.assign(intr.size(), Eigen::Vector4d::Zero());
    detail::cam_stage2(intr, &res);

    Problem p;
    for (size_t i = 0; i < intr.size(); ++i)
        for (int c = 0; c < 4; ++c) p.slots.push_back({&intr[i][c], res.grad_intrinsics[i][c]});
    p.value_at = [&](size_t) { return detail::cam_stage2(intr, nullptr); };
    return sweep(p, h);
}

}  // namespace

double finite_difference_check(ConstraintId id, uint64_t fixture_seed, double step) {
    if (!(step >= 1e-8 && step <= 1e-3))
        throw ValidationError("finite_difference_check: step must lie in [1e-8, 1e-3]");
    for (int attempt = 0; attempt < 10; ++attempt) {
        uint64_t s = mix_seed(fixture_seed, uint64_t(attempt));
        try {
            switch (id) {
                case ConstraintId::kSilh: return check_silh(s, step);
                case ConstraintId::kSkel: return check_skel(s, step);
                case ConstraintId::kCom: return check_com(s, step);
                case ConstraintId::kEff: return check_eff(s, step);
                case ConstraintId::kDist: return check_dist(s, step);
                case ConstraintId::kCam: return check_cam(s, step);
            }
            throw ValidationError("finite_difference_check: unknown constraint id");
        } catch (const BadSample&) {
            continue;
        }
    }
    throw NumericError("finite_difference_check: inconclusive sample after 10 redraws");
}

}  // namespace hflow
