#include "hflow/kinematics.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "hflow/errors.hpp"

namespace hflow {

namespace {
constexpr double kTinyAngle = 1e-12;
constexpr double kAngleCap = M_PI + 1e-9;  // anti-parallel bones land exactly on pi
}  // namespace

void JointAngles::validate() const {
    if (!root.allFinite()) throw ValidationError("joint angles: root must be finite");
    for (int b = 0; b < kBoneCount; ++b) {
        if (!angles[size_t(b)].allFinite())
            throw ValidationError("joint angles: axis-angle must be finite");
        if (angles[size_t(b)].norm() > kAngleCap)
            throw ValidationError("joint angles: axis-angle magnitude exceeds pi");
        double len = lengths[size_t(b)];
        if (!(len > 0.01 && len < 1.0))
            throw ValidationError("joint angles: bone length outside (0.01, 1.0)");
    }
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle) {
    double theta = axis_angle.norm();
    if (theta < kTinyAngle) return Eigen::Matrix3d::Identity();
    Eigen::Vector3d a = axis_angle / theta;
    Eigen::Matrix3d K;
    K << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
    return Eigen::Matrix3d::Identity() + std::sin(theta) * K +
           (1.0 - std::cos(theta)) * (K * K);
}

Eigen::Vector3d least_aligned_axis_cross(const Eigen::Vector3d& v) {
    Eigen::Vector3d a = v.cwiseAbs();
    int axis = 0;
    if (a.y() < a.x()) axis = 1;
    if (a.z() < a[axis]) axis = 2;
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e[axis] = 1.0;
    return e.cross(v).normalized();
}

Eigen::Vector3d minimal_axis_angle(const Eigen::Vector3d& from, const Eigen::Vector3d& to) {
    Eigen::Vector3d c = from.cross(to);
    double s = c.norm();
    double d = from.dot(to);
    if (s < kTinyAngle) {
        if (d >= 0.0) return Eigen::Vector3d::Zero();
        return M_PI * least_aligned_axis_cross(from);
    }
    return std::atan2(s, d) * (c / s);
}

BoneTransforms fk_transforms(const Skeleton& skeleton, const JointAngles& q) {
    q.validate();
    BoneTransforms out;
    out.pose[0] = q.root;
    for (int b = 0; b < kBoneCount; ++b) {
        Eigen::Matrix3d local = rodrigues(q.angles[size_t(b)]);
        int pb = skeleton.parent_bone(b);
        out.rotation[size_t(b)] =
            pb < 0 ? local : Eigen::Matrix3d(out.rotation[size_t(pb)] * local);
        int child = skeleton.bone_child(b);
        int parent = skeleton.bone_parent(b);
        out.pose[child] = out.pose[parent] +
                          q.lengths[size_t(b)] * (out.rotation[size_t(b)] * skeleton.rest_dir(b));
    }
    return out;
}

Pose fk(const Skeleton& skeleton, const JointAngles& q) { return fk_transforms(skeleton, q).pose; }

JointAngles ik(const Skeleton& skeleton, const Pose& pose) {
    JointAngles q;
    q.root = pose[0];
    std::array<Eigen::Matrix3d, kBoneCount> global;
    for (int b = 0; b < kBoneCount; ++b) {
        int child = skeleton.bone_child(b);
        int parent = skeleton.bone_parent(b);
        Eigen::Vector3d delta = pose[child] - pose[parent];
        double len = delta.norm();
        if (!(len > 0.01 && len < 1.0))
            throw ValidationError("ik: observed bone length outside (0.01, 1.0) at joint " +
                                  skeleton.names[size_t(child)]);
        int pb = skeleton.parent_bone(b);
        Eigen::Vector3d d_local =
            pb < 0 ? Eigen::Vector3d(delta / len)
                   : Eigen::Vector3d(global[size_t(pb)].transpose() * (delta / len));
        q.angles[size_t(b)] = minimal_axis_angle(skeleton.rest_dir(b), d_local);
        q.lengths[size_t(b)] = len;
        Eigen::Matrix3d local = rodrigues(q.angles[size_t(b)]);
        global[size_t(b)] = pb < 0 ? local : Eigen::Matrix3d(global[size_t(pb)] * local);
    }
    return q;
}

double min_jerk_phi(double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw NumericError("min_jerk_phi: tau outside [0, 1]");
    double t3 = tau * tau * tau;
    return t3 * (10.0 + tau * (-15.0 + 6.0 * tau));
}

double min_jerk_phi_d1(double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw NumericError("min_jerk_phi: tau outside [0, 1]");
    double t2 = tau * tau;
    return t2 * (30.0 + tau * (-60.0 + 30.0 * tau));
}

double min_jerk_phi_d2(double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw NumericError("min_jerk_phi: tau outside [0, 1]");
    return tau * (60.0 + tau * (-180.0 + 120.0 * tau));
}

std::vector<Pose> min_jerk_reference(const Skeleton& skeleton, const Pose& first,
                                     const Pose& last, int count) {
    if (count < 2) throw NumericError("min_jerk_reference: need at least 2 frames");
    JointAngles q0 = ik(skeleton, first);
    JointAngles qT = ik(skeleton, last);
    std::vector<Pose> out;
    out.reserve(size_t(count));
    for (int i = 0; i < count; ++i) {
        double tau = double(i) / double(count - 1);
        double phi = min_jerk_phi(tau);
        JointAngles q;
        q.root = q0.root + (qT.root - q0.root) * phi;
        for (int b = 0; b < kBoneCount; ++b) {
            q.angles[size_t(b)] =
                q0.angles[size_t(b)] + (qT.angles[size_t(b)] - q0.angles[size_t(b)]) * phi;
            q.lengths[size_t(b)] =
                q0.lengths[size_t(b)] + (qT.lengths[size_t(b)] - q0.lengths[size_t(b)]) * tau;
        }
        out.push_back(fk(skeleton, q));
    }
    return out;
}

BoneHit nearest_bone(const Eigen::Vector3d& point, const Skeleton& skeleton, const Pose& pose) {
    BoneHit best;
    double best_sq = std::numeric_limits<double>::infinity();
    for (int b = 0; b < kBoneCount; ++b) {
        const Eigen::Vector3d& a = pose[skeleton.bone_parent(b)];
        const Eigen::Vector3d& c = pose[skeleton.bone_child(b)];
        Eigen::Vector3d ab = c - a;
        double len_sq = ab.squaredNorm();
        double alpha = len_sq > 0.0 ? (point - a).dot(ab) / len_sq : 0.0;
        alpha = std::min(1.0, std::max(0.0, alpha));
        double d_sq = (point - (a + alpha * ab)).squaredNorm();
        if (d_sq < best_sq) {
            best_sq = d_sq;
            best.bone = b;
            best.alpha = alpha;
        }
    }
    best.distance = std::sqrt(best_sq);
    return best;
}

std::array<Eigen::Vector3d, kJointCount> joint_motion(const Pose& pose, const Pose& pose_next) {
    std::array<Eigen::Vector3d, kJointCount> delta;
    for (int j = 0; j < kJointCount; ++j) delta[size_t(j)] = pose_next[j] - pose[j];
    return delta;
}

Eigen::Vector3d center_of_mass(const Pose& pose, const MassProfile& profile) {
    Eigen::Vector3d com = Eigen::Vector3d::Zero();
    for (int j = 0; j < kJointCount; ++j) com += profile.weights[size_t(j)] * pose[j];
    return com;
}

}  // namespace hflow
