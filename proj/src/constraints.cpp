#include "hflow/constraints.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "constraints_internal.hpp"
#include "hflow/errors.hpp"
#include "hflow/geometry.hpp"
#include "hflow/parallel.hpp"
#include "hflow/rng.hpp"

namespace hflow {

namespace {
// Below this the closest-point direction is undefined and its (bounded)
// subgradient contribution is dropped.
constexpr double kTinyDistance = 1e-12;
}  // namespace

// ===== configuration =====

void Tolerances::validate() const {
    if (!(rho_min > 0.0 && alpha > 0.0 && rho_eff > 0.0 && tau_sat > 0.0 &&
          sigma_contact > 0.0 && rho_depth > 0.0 && rho_pose > 0.0))
        throw ValidationError("tolerances must all be positive");
    if (window_min < 3) throw ValidationError("window_min must be at least 3");
    if (window_min > window_max) throw ValidationError("window_min must not exceed window_max");
}

void PriorWeights::validate() const {
    if (silh < 0 || skel < 0 || com < 0 || eff < 0 || dist < 0 || cam < 0)
        throw ValidationError("prior weights must be non-negative");
}

bool PriorWeights::all_zero() const {
    return silh == 0 && skel == 0 && com == 0 && eff == 0 && dist == 0 && cam == 0;
}

double& PriorWeights::by_name(const std::string& name) {
    if (name == "silh") return silh;
    if (name == "skel") return skel;
    if (name == "com") return com;
    if (name == "eff") return eff;
    if (name == "dist") return dist;
    if (name == "cam") return cam;
    throw ValidationError("unknown prior name '" + name + "'");
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        double x = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return x;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "' has a malformed value '" + value + "'");
    }
}

}  // namespace

void parse_prior_config(std::istream& in, Tolerances& tol, PriorWeights& weights) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_no) +
                                  " is not a key = value pair");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        double x = parse_number(key, value);
        if (key == "rho_min") tol.rho_min = x;
        else if (key == "alpha") tol.alpha = x;
        else if (key == "rho_eff") tol.rho_eff = x;
        else if (key == "tau_sat") tol.tau_sat = x;
        else if (key == "sigma_contact") tol.sigma_contact = x;
        else if (key == "rho_depth") tol.rho_depth = x;
        else if (key == "rho_pose") tol.rho_pose = x;
        else if (key == "window_min") tol.window_min = int(x);
        else if (key == "window_max") tol.window_max = int(x);
        else if (key == "lambda_silh") weights.silh = x;
        else if (key == "lambda_skel") weights.skel = x;
        else if (key == "lambda_com") weights.com = x;
        else if (key == "lambda_eff") weights.eff = x;
        else if (key == "lambda_dist") weights.dist = x;
        else if (key == "lambda_cam") weights.cam = x;
        else throw ValidationError("unknown config key '" + key + "'");
    }
    tol.validate();
    weights.validate();
}

void load_prior_config_file(const std::string& path, Tolerances& tol, PriorWeights& weights) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    parse_prior_config(in, tol, weights);
}

// ===== silhouette =====

namespace detail {

std::vector<double> silh_weights(const MaskField& mask, double tau_sat) {
    SignedDistanceField sdf = mask_sdf(mask, tau_sat);
    std::vector<double> w(sdf.values.size());
    for (size_t i = 0; i < w.size(); ++i) w[i] = std::abs(sdf.values[i]);
    return w;
}

namespace {

// Sobel response of one scalar channel at (u, v), replicate border.
inline void sobel_at(const std::vector<double>& f, const Grid& g, int u, int v, double& gx,
                     double& gy) {
    constexpr double kS[3] = {1.0 / 8.0, 2.0 / 8.0, 1.0 / 8.0};
    gx = 0.0;
    gy = 0.0;
    for (int dv = -1; dv <= 1; ++dv) {
        int vv = std::min(std::max(v + dv, 0), g.height - 1);
        for (int du = -1; du <= 1; ++du) {
            int uu = std::min(std::max(u + du, 0), g.width - 1);
            double x = f[size_t(g.index(uu, vv))];
            gx += double(du) * kS[dv + 1] * x;
            gy += double(dv) * kS[du + 1] * x;
        }
    }
}

inline void sobel_at(const std::vector<Eigen::Vector3d>& f, const Grid& g, int u, int v,
                     Eigen::Vector3d& gx, Eigen::Vector3d& gy) {
    constexpr double kS[3] = {1.0 / 8.0, 2.0 / 8.0, 1.0 / 8.0};
    gx.setZero();
    gy.setZero();
    for (int dv = -1; dv <= 1; ++dv) {
        int vv = std::min(std::max(v + dv, 0), g.height - 1);
        for (int du = -1; du <= 1; ++du) {
            int uu = std::min(std::max(u + du, 0), g.width - 1);
            const Eigen::Vector3d& x = f[size_t(g.index(uu, vv))];
            gx += (double(du) * kS[dv + 1]) * x;
            gy += (double(dv) * kS[du + 1]) * x;
        }
    }
}

}  // namespace

double silh_term(const ScalarMap& depth, const Vec3Map& flow, const std::vector<double>& weights,
                 int u, int v) {
    double gx, gy;
    sobel_at(depth.values, depth.grid, u, v, gx, gy);
    Eigen::Vector3d fx, fy;
    sobel_at(flow.values, flow.grid, u, v, fx, fy);
    double nd = std::sqrt(gx * gx + gy * gy);
    double nf = std::sqrt(fx.squaredNorm() + fy.squaredNorm());
    return (nd + nf) * weights[size_t(depth.grid.index(u, v))];
}

void silh_norms(const ScalarMap& depth, const Vec3Map& flow, int u, int v, double& norm_depth,
                double& norm_flow) {
    double gx, gy;
    sobel_at(depth.values, depth.grid, u, v, gx, gy);
    Eigen::Vector3d fx, fy;
    sobel_at(flow.values, flow.grid, u, v, fx, fy);
    norm_depth = std::sqrt(gx * gx + gy * gy);
    norm_flow = std::sqrt(fx.squaredNorm() + fy.squaredNorm());
}

double silh_value(const ScalarMap& depth, const Vec3Map& flow,
                  const std::vector<double>& weights) {
    const Grid& g = depth.grid;
    double sum = 0.0;
    for (int v = 0; v < g.height; ++v)
        for (int u = 0; u < g.width; ++u) sum += silh_term(depth, flow, weights, u, v);
    return sum / double(g.pixels());
}

}  // namespace detail

ConstraintResult c_silh(const ScalarMap& depth, const Vec3Map& flow, const MaskField& mask,
                        const Tolerances& tol) {
    const Grid& g = depth.grid;
    if (flow.grid != g || mask.grid != g) throw ValidationError("c_silh: grid mismatch");
    std::vector<double> w = detail::silh_weights(mask, tol.tau_sat);

    ConstraintResult res;
    res.grad_depth.assign(1, std::vector<double>(size_t(g.pixels()), 0.0));
    res.grad_flow.assign(1, std::vector<Eigen::Vector3d>(size_t(g.pixels()),
                                                         Eigen::Vector3d::Zero()));

    const double inv_n = 1.0 / double(g.pixels());
    ScalarMap cdx(g), cdy(g);
    std::array<ScalarMap, 3> channel{ScalarMap(g), ScalarMap(g), ScalarMap(g)};
    std::array<ScalarMap, 3> cfx{ScalarMap(g), ScalarMap(g), ScalarMap(g)};
    std::array<ScalarMap, 3> cfy{ScalarMap(g), ScalarMap(g), ScalarMap(g)};

    double sum = 0.0;
    for (int v = 0; v < g.height; ++v) {
        for (int u = 0; u < g.width; ++u) {
            size_t i = size_t(g.index(u, v));
            double gx, gy;
            detail::sobel_at(depth.values, g, u, v, gx, gy);
            Eigen::Vector3d fx, fy;
            detail::sobel_at(flow.values, g, u, v, fx, fy);
            double nd = std::sqrt(gx * gx + gy * gy);
            double nf = std::sqrt(fx.squaredNorm() + fy.squaredNorm());
            sum += (nd + nf) * w[i];
            if (nd > 0.0) {
                cdx.values[i] = w[i] * gx / nd * inv_n;
                cdy.values[i] = w[i] * gy / nd * inv_n;
            }
            if (nf > 0.0) {
                for (int c = 0; c < 3; ++c) {
                    cfx[size_t(c)].values[i] = w[i] * fx[c] / nf * inv_n;
                    cfy[size_t(c)].values[i] = w[i] * fy[c] / nf * inv_n;
                }
            }
            for (int c = 0; c < 3; ++c) channel[size_t(c)].values[i] = flow.values[i][c];
        }
    }
    res.value = sum * inv_n;

    ScalarMap gd(g);
    sobel_adjoint(cdx, cdy, gd);
    res.grad_depth[0] = std::move(gd.values);

    for (int c = 0; c < 3; ++c) {
        ScalarMap gf(g);
        sobel_adjoint(cfx[size_t(c)], cfy[size_t(c)], gf);
        for (int i = 0; i < g.pixels(); ++i) res.grad_flow[0][size_t(i)][c] = gf.values[size_t(i)];
    }
    return res;
}

ConstraintResult c_silh(const DepthField& depth, const FlowField& flow, const MaskField& mask,
                        const Tolerances& tol) {
    return c_silh(ScalarMap(depth), Vec3Map(flow), mask, tol);
}

// ===== skeleton =====

namespace detail {

SkelFrozen skel_freeze(const ScalarMap& depth, const MaskField& mask, const Pose& pose,
                       const CameraParams& camera, const Skeleton& skeleton) {
    const Grid& g = depth.grid;
    SkelFrozen fz;
    for (int v = 0; v < g.height; ++v) {
        for (int u = 0; u < g.width; ++u) {
            if (!mask.at(u, v)) continue;
            double z = depth.at(u, v);
            Eigen::Vector3d x = unproject(double(u), double(v), z, camera, g);
            BoneHit hit = nearest_bone(x, skeleton, pose);
            SkelFrozen::Sel s;
            s.pixel = g.index(u, v);
            s.ja = skeleton.bone_parent(hit.bone);
            s.jb = skeleton.bone_child(hit.bone);
            s.alpha = hit.alpha;
            s.ray = unproject_dir(double(u), double(v), camera, g);
            fz.sel.push_back(s);
        }
    }
    if (fz.sel.empty()) throw NumericError("c_skel: empty mask");
    return fz;
}

double skel_stage2(const SkelFrozen& frozen, const Vec3Map& flow, const ScalarMap& depth,
                   const Pose& pose, const Pose& pose_next, const Eigen::Vector3d& cam_center,
                   const Tolerances& tol, ConstraintResult* out, Signature* sig) {
    const double inv_n = 1.0 / double(frozen.sel.size());
    double sum = 0.0;
    for (const SkelFrozen::Sel& s : frozen.sel) {
        double wa = 1.0 - s.alpha, wb = s.alpha;
        Eigen::Vector3d x = cam_center + depth.values[size_t(s.pixel)] * s.ray;
        Eigen::Vector3d q = wa * pose[s.ja] + wb * pose[s.jb];
        Eigen::Vector3d off = x - q;
        double d = off.norm();
        Eigen::Vector3d m = wa * (pose_next[s.ja] - pose[s.ja]) + wb * (pose_next[s.jb] - pose[s.jb]);
        Eigen::Vector3d r = flow.values[size_t(s.pixel)] - m;
        double rn = r.norm();
        double slack = rn - (tol.rho_min + tol.alpha * d);
        bool active = slack > 0.0;
        if (sig) sig->push_back(active ? 1 : 0);
        if (!active) continue;
        sum += slack;
        if (!out) continue;
        Eigen::Vector3d dir = r / rn;  // rn > rho_min when active
        out->grad_flow[0][size_t(s.pixel)] += dir * inv_n;
        out->grad_pose[0][s.ja] += wa * dir * inv_n;
        out->grad_pose[0][s.jb] += wb * dir * inv_n;
        out->grad_pose[1][s.ja] -= wa * dir * inv_n;
        out->grad_pose[1][s.jb] -= wb * dir * inv_n;
        if (d > kTinyDistance) {
            Eigen::Vector3d e = off / d;
            out->grad_depth[0][size_t(s.pixel)] -= tol.alpha * e.dot(s.ray) * inv_n;
            out->grad_pose[0][s.ja] += tol.alpha * wa * e * inv_n;
            out->grad_pose[0][s.jb] += tol.alpha * wb * e * inv_n;
        }
    }
    return sum * inv_n;
}

}  // namespace detail

ConstraintResult c_skel(const Vec3Map& flow, const ScalarMap& depth, const Pose& pose,
                        const Pose& pose_next, const MaskField& mask, const CameraParams& camera,
                        const Skeleton& skeleton, const Tolerances& tol) {
    const Grid& g = flow.grid;
    if (depth.grid != g || mask.grid != g) throw ValidationError("c_skel: grid mismatch");
    detail::SkelFrozen fz = detail::skel_freeze(depth, mask, pose, camera, skeleton);

    ConstraintResult res;
    res.grad_flow.assign(1, std::vector<Eigen::Vector3d>(size_t(g.pixels()),
                                                         Eigen::Vector3d::Zero()));
    res.grad_depth.assign(1, std::vector<double>(size_t(g.pixels()), 0.0));
    res.grad_pose.assign(2, Pose{});
    for (Pose& p : res.grad_pose)
        for (int j = 0; j < kJointCount; ++j) p[j].setZero();
    res.value = detail::skel_stage2(fz, flow, depth, pose, pose_next, camera.t, tol, &res, nullptr);
    return res;
}

// ===== center of mass =====

namespace detail {

ComFrozen com_freeze(const Pose& pose, const ScalarMap& depth, const MaskField& mask,
                     const CameraParams& camera, const Skeleton& skeleton, const Tolerances& tol,
                     uint64_t seed) {
    Plane plane = ransac_ground_plane(depth, mask, camera, seed);
    ComFrozen fz;
    plane.basis(fz.e1, fz.e2);
    fz.shift = plane.offset * plane.normal;

    std::vector<Eigen::Vector2d> contacts;
    for (int j : skeleton.end_effectors()) {
        double h = plane.height(pose[j]);
        double c = std::exp(-(h * h) / (tol.sigma_contact * tol.sigma_contact));
        if (c >= 0.5) contacts.push_back(plane.project(pose[j]));
    }
    if (contacts.empty()) return fz;  // airborne
    fz.airborne = false;
    fz.hull = convex_hull(contacts);
    return fz;
}

double com_stage2(const ComFrozen& frozen, const Pose& pose, const MassProfile& mass,
                  ConstraintResult* out, Signature* sig) {
    if (frozen.airborne) {
        if (sig) sig->push_back(0);
        return 0.0;
    }
    Eigen::Vector3d mu = Eigen::Vector3d::Zero();
    for (int j = 0; j < kJointCount; ++j) mu += mass.weights[size_t(j)] * pose[j];
    Eigen::Vector3d q = mu - frozen.shift;
    Eigen::Vector2d q2(q.dot(frozen.e1), q.dot(frozen.e2));
    PolygonDistance pd = polygon_signed_distance_grad(q2, frozen.hull);
    bool active = pd.value > 0.0;
    if (sig) sig->push_back(active ? 1 : 0);
    if (!active) return 0.0;
    if (out) {
        Eigen::Vector3d dq = pd.grad.x() * frozen.e1 + pd.grad.y() * frozen.e2;
        for (int j = 0; j < kJointCount; ++j) out->grad_pose[0][j] += mass.weights[size_t(j)] * dq;
    }
    return pd.value;
}

}  // namespace detail

ConstraintResult c_com(const Pose& pose, const ScalarMap& depth, const MaskField& mask,
                       const CameraParams& camera, const MassProfile& mass,
                       const Skeleton& skeleton, const Tolerances& tol, uint64_t seed) {
    detail::ComFrozen fz = detail::com_freeze(pose, depth, mask, camera, skeleton, tol, seed);
    ConstraintResult res;
    res.grad_pose.assign(1, Pose{});
    for (int j = 0; j < kJointCount; ++j) res.grad_pose[0][j].setZero();
    res.value = detail::com_stage2(fz, pose, mass, &res, nullptr);
    return res;
}

// ===== end effector =====

namespace detail {

EffFrozen eff_freeze(const std::vector<Pose>& window, const Skeleton& skeleton) {
    if (window.size() < 3) throw NumericError("c_eff: window must span at least 3 frames");
    EffFrozen fz;
    fz.reference =
        min_jerk_reference(skeleton, window.front(), window.back(), int(window.size()));
    return fz;
}

double eff_stage2(const EffFrozen& frozen, const std::vector<Pose>& window, const Tolerances& tol,
                  ConstraintResult* out, Signature* sig) {
    const int n = int(window.size());
    const double inv_n = 1.0 / double(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double sq = 0.0;
        for (int j = 0; j < kJointCount; ++j)
            sq += (window[size_t(i)][j] - frozen.reference[size_t(i)][j]).squaredNorm();
        double rn = std::sqrt(sq);
        double slack = rn - tol.rho_eff;
        bool active = slack > 0.0;
        if (sig) sig->push_back(active ? 1 : 0);
        if (!active) continue;
        sum += slack;
        // Endpoints are the reference's own anchors; they stay at zero.
        if (out && i != 0 && i != n - 1) {
            for (int j = 0; j < kJointCount; ++j)
                out->grad_pose[size_t(i)][j] +=
                    (window[size_t(i)][j] - frozen.reference[size_t(i)][j]) / rn * inv_n;
        }
    }
    return sum * inv_n;
}

}  // namespace detail

ConstraintResult c_eff(const std::vector<Pose>& window, const Skeleton& skeleton,
                       const Tolerances& tol) {
    detail::EffFrozen fz = detail::eff_freeze(window, skeleton);
    ConstraintResult res;
    res.grad_pose.assign(window.size(), Pose{});
    for (Pose& p : res.grad_pose)
        for (int j = 0; j < kJointCount; ++j) p[j].setZero();
    res.value = detail::eff_stage2(fz, window, tol, &res, nullptr);
    return res;
}

// ===== distillation =====

namespace detail {

double dist_stage2(const ScalarMap& depth, const Pose& pose, const ScalarMap& teacher_depth,
                   const Pose& teacher_pose, const Tolerances& tol, ConstraintResult* out,
                   Signature* sig) {
    const Grid& g = depth.grid;
    const double inv_n = 1.0 / double(g.pixels());
    double depth_sum = 0.0;
    for (int i = 0; i < g.pixels(); ++i) {
        double delta = depth.values[size_t(i)] - teacher_depth.values[size_t(i)];
        double slack = std::abs(delta) - tol.rho_depth;
        bool active = slack > 0.0;
        if (sig) sig->push_back(active ? 1 : 0);
        if (!active) continue;
        depth_sum += slack;
        if (out) out->grad_depth[0][size_t(i)] = (delta > 0.0 ? 1.0 : -1.0) * inv_n;
    }
    const double inv_j = 1.0 / double(kJointCount);
    double pose_sum = 0.0;
    for (int j = 0; j < kJointCount; ++j) {
        Eigen::Vector3d r = pose[j] - teacher_pose[j];
        double rn = r.norm();
        double slack = rn - tol.rho_pose;
        bool active = slack > 0.0;
        if (sig) sig->push_back(active ? 1 : 0);
        if (!active) continue;
        pose_sum += slack;
        if (out) out->grad_pose[0][j] += r / rn * inv_j;  // rn > rho_pose when active
    }
    return depth_sum * inv_n + pose_sum * inv_j;
}

}  // namespace detail

ConstraintResult c_dist(const ScalarMap& depth, const Pose& pose, const ScalarMap& teacher_depth,
                        const Pose& teacher_pose, const Tolerances& tol) {
    if (depth.grid != teacher_depth.grid) throw ValidationError("c_dist: teacher grid mismatch");
    ConstraintResult res;
    res.grad_depth.assign(1, std::vector<double>(size_t(depth.grid.pixels()), 0.0));
    res.grad_pose.assign(1, Pose{});
    for (int j = 0; j < kJointCount; ++j) res.grad_pose[0][j].setZero();
    res.value = detail::dist_stage2(depth, pose, teacher_depth, teacher_pose, tol, &res, nullptr);
    return res;
}

// ===== camera =====

namespace detail {

double cam_stage2(const std::vector<Eigen::Vector4d>& intrinsics, ConstraintResult* out) {
    const double n = double(intrinsics.size());
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    for (const Eigen::Vector4d& k : intrinsics) mean += k;
    mean /= n;
    // (1/T^2) sum_ij |K_i - K_j|^2 == (2/T) sum_i |K_i - mean|^2.
    double sum = 0.0;
    for (size_t i = 0; i < intrinsics.size(); ++i) {
        Eigen::Vector4d d = intrinsics[i] - mean;
        sum += d.squaredNorm();
        if (out) out->grad_intrinsics[i] = 4.0 / n * d;
    }
    return 2.0 / n * sum;
}

}  // namespace detail

ConstraintResult c_cam(const std::vector<CameraParams>& cameras) {
    if (cameras.size() < 2) throw ValidationError("c_cam: need at least two frames");
    std::vector<Eigen::Vector4d> intr;
    intr.reserve(cameras.size());
    for (const CameraParams& c : cameras) intr.push_back(c.intrinsics);
    ConstraintResult res;
    res.grad_intrinsics.assign(cameras.size(), Eigen::Vector4d::Zero());
    res.value = detail::cam_stage2(intr, &res);
    return res;
}

// ===== scene-level objective =====

SceneState SceneState::from_clip(const SceneClip& clip) {
    SceneState s;
    s.grid = clip.grid();
    for (const FrameRecord& f : clip.frames) {
        s.depth.emplace_back(f.depth);
        s.flow.emplace_back(f.flow);
        s.pose.push_back(f.pose());
        s.camera.push_back(f.camera());
        s.mask.push_back(f.mask);
    }
    return s;
}

void SceneGradient::resize_zero(const Grid& grid, int frames) {
    depth.assign(size_t(frames), std::vector<double>(size_t(grid.pixels()), 0.0));
    flow.assign(size_t(frames),
                std::vector<Eigen::Vector3d>(size_t(grid.pixels()), Eigen::Vector3d::Zero()));
    pose.assign(size_t(frames), Pose{});
    for (Pose& p : pose)
        for (int j = 0; j < kJointCount; ++j) p[j].setZero();
    intrinsics.assign(size_t(frames), Eigen::Vector4d::Zero());
}

double SceneGradient::max_abs() const {
    double m = 0.0;
    for (const auto& f : depth)
        for (double x : f) m = std::max(m, std::abs(x));
    for (const auto& f : flow)
        for (const Eigen::Vector3d& x : f) m = std::max(m, x.cwiseAbs().maxCoeff());
    for (const Pose& p : pose)
        for (int j = 0; j < kJointCount; ++j) m = std::max(m, p[j].cwiseAbs().maxCoeff());
    for (const Eigen::Vector4d& k : intrinsics) m = std::max(m, k.cwiseAbs().maxCoeff());
    return m;
}

namespace {

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
    for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void axpy(double a, const std::vector<Eigen::Vector3d>& x, std::vector<Eigen::Vector3d>& y) {
    for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void axpy(double a, const Pose& x, Pose& y) {
    for (int j = 0; j < kJointCount; ++j) y[j] += a * x[j];
}

}  // namespace

ObjectiveBreakdown total_objective(const SceneState& state, const TeacherSet& teachers,
                                   const PriorWeights& weights, const Tolerances& tol,
                                   const Skeleton& skeleton, const MassProfile& mass,
                                   uint64_t seed, SceneGradient* grad) {
    weights.validate();
    tol.validate();
    const int frames = state.frame_count();
    if (frames < 2) throw ValidationError("total_objective: need at least two frames");
    if (weights.dist > 0.0 &&
        (int(teachers.depth.size()) != frames || int(teachers.pose.size()) != frames))
        throw ValidationError("total_objective: teacher set does not cover the clip");
    if (grad) grad->resize_zero(state.grid, frames);

    ObjectiveBreakdown bd;

    // Frame-local terms evaluate independently and merge in frame order, so
    // the result is identical for any worker count.
    if (weights.silh > 0.0) {
        std::vector<ConstraintResult> per(static_cast<size_t>(frames));
        parallel_for(frames, [&](int t) {
            per[size_t(t)] = c_silh(state.depth[size_t(t)], state.flow[size_t(t)],
                                    state.mask[size_t(t)], tol);
        });
        for (int t = 0; t < frames; ++t) {
            bd.silh += per[size_t(t)].value;
            if (grad) {
                axpy(weights.silh, per[size_t(t)].grad_depth[0], grad->depth[size_t(t)]);
                axpy(weights.silh, per[size_t(t)].grad_flow[0], grad->flow[size_t(t)]);
            }
        }
    }

    if (weights.skel > 0.0) {
        std::vector<ConstraintResult> per(static_cast<size_t>(frames - 1));
        parallel_for(frames - 1, [&](int t) {
            per[size_t(t)] = c_skel(state.flow[size_t(t)], state.depth[size_t(t)],
                                    state.pose[size_t(t)], state.pose[size_t(t) + 1],
                                    state.mask[size_t(t)], state.camera[size_t(t)], skeleton, tol);
        });
        for (int t = 0; t + 1 < frames; ++t) {
            bd.skel += per[size_t(t)].value;
            if (grad) {
                axpy(weights.skel, per[size_t(t)].grad_flow[0], grad->flow[size_t(t)]);
                axpy(weights.skel, per[size_t(t)].grad_depth[0], grad->depth[size_t(t)]);
                axpy(weights.skel, per[size_t(t)].grad_pose[0], grad->pose[size_t(t)]);
                axpy(weights.skel, per[size_t(t)].grad_pose[1], grad->pose[size_t(t) + 1]);
            }
        }
    }

    if (weights.com > 0.0) {
        std::vector<ConstraintResult> per(static_cast<size_t>(frames));
        parallel_for(frames, [&](int t) {
            per[size_t(t)] = c_com(state.pose[size_t(t)], state.depth[size_t(t)],
                                   state.mask[size_t(t)], state.camera[size_t(t)], mass, skeleton,
                                   tol, mix_seed(seed, 0x636f6d00u + uint64_t(t)));
        });
        const double inv_t = 1.0 / double(frames);
        for (int t = 0; t < frames; ++t) {
            bd.com += per[size_t(t)].value * inv_t;
            if (grad) axpy(weights.com * inv_t, per[size_t(t)].grad_pose[0], grad->pose[size_t(t)]);
        }
    }

    if (weights.eff > 0.0 && frames >= 3) {
        SplitMix64 rng(mix_seed(seed, 0xeff00effu));
        int wmin = std::min(tol.window_min, frames);
        int wmax = std::min(tol.window_max, frames);
        int len = wmin + int(rng.next_below(uint64_t(wmax - wmin + 1)));
        int start = int(rng.next_below(uint64_t(frames - len + 1)));
        std::vector<Pose> window(state.pose.begin() + start, state.pose.begin() + start + len);
        ConstraintResult r = c_eff(window, skeleton, tol);
        bd.eff = r.value;
        if (grad)
            for (int i = 0; i < len; ++i)
                axpy(weights.eff, r.grad_pose[size_t(i)], grad->pose[size_t(start + i)]);
    }

    if (weights.dist > 0.0) {
        std::vector<ConstraintResult> per(static_cast<size_t>(frames));
        parallel_for(frames, [&](int t) {
            per[size_t(t)] = c_dist(state.depth[size_t(t)], state.pose[size_t(t)],
                                    teachers.depth[size_t(t)], teachers.pose[size_t(t)], tol);
        });
        for (int t = 0; t < frames; ++t) {
            bd.dist += per[size_t(t)].value;
            if (grad) {
                axpy(weights.dist, per[size_t(t)].grad_depth[0], grad->depth[size_t(t)]);
                axpy(weights.dist, per[size_t(t)].grad_pose[0], grad->pose[size_t(t)]);
            }
        }
    }

    if (weights.cam > 0.0) {
        ConstraintResult r = c_cam(state.camera);
        bd.cam = r.value;
        if (grad)
            for (int t = 0; t < frames; ++t)
                grad->intrinsics[size_t(t)] += weights.cam * r.grad_intrinsics[size_t(t)];
    }

    bd.total = weights.silh * bd.silh + weights.skel * bd.skel + weights.com * bd.com +
               weights.eff * bd.eff + weights.dist * bd.dist + weights.cam * bd.cam;
    return bd;
}

ConstraintId constraint_from_name(const std::string& name) {
    if (name == "silh") return ConstraintId::kSilh;
    if (name == "skel") return ConstraintId::kSkel;
    if (name == "com") return ConstraintId::kCom;
    if (name == "eff") return ConstraintId::kEff;
    if (name == "dist") return ConstraintId::kDist;
    if (name == "cam") return ConstraintId::kCam;
    throw ValidationError("unknown constraint name '" + name + "'");
}

const char* constraint_name(ConstraintId id) {
    switch (id) {
        case ConstraintId::kSilh: return "silh";
        case ConstraintId::kSkel: return "skel";
        case ConstraintId::kCom: return "com";
        case ConstraintId::kEff: return "eff";
        case ConstraintId::kDist: return "dist";
        case ConstraintId::kCam: return "cam";
    }
    throw ValidationError("unknown constraint id");
}

}  // namespace hflow
