#include "hflow/camera.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "hflow/errors.hpp"

namespace hflow {

namespace {
constexpr double kOrthoTol = 1e-9;
constexpr double kDegenerate = 1e-12;
}  // namespace

void CameraParams::validate() const {
    Eigen::Matrix3d err = R.transpose() * R - Eigen::Matrix3d::Identity();
    if (err.cwiseAbs().maxCoeff() > kOrthoTol)
        throw ValidationError("camera rotation is not orthonormal");
    if (R.determinant() < 0.0)
        throw ValidationError("camera rotation is not proper (det < 0)");
    if (!intrinsics.allFinite() || intrinsics[0] <= 0.0 || intrinsics[1] <= 0.0)
        throw ValidationError("camera focal lengths must be positive");
    if (!t.allFinite()) throw ValidationError("camera center must be finite");
}

bool CameraParams::is_identity_anchor(double tol) const {
    return (R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
           t.cwiseAbs().maxCoeff() <= tol;
}

Eigen::Matrix3d rot6d_to_matrix(const Eigen::Matrix<double, 6, 1>& sixd) {
    Eigen::Vector3d a1 = sixd.head<3>();
    Eigen::Vector3d a2 = sixd.tail<3>();
    double n1 = a1.norm();
    if (n1 < kDegenerate) throw NumericError("rot6d: first column is degenerate");
    Eigen::Vector3d b1 = a1 / n1;
    Eigen::Vector3d r2 = a2 - b1.dot(a2) * b1;
    double n2 = r2.norm();
    if (n2 < kDegenerate) throw NumericError("rot6d: columns are near parallel");
    Eigen::Vector3d b2 = r2 / n2;
    Eigen::Matrix3d R;
    R.col(0) = b1;
    R.col(1) = b2;
    R.col(2) = b1.cross(b2);
    return R;
}

CameraVec pack_camera(const CameraParams& cam) {
    CameraVec v;
    v.segment<3>(0) = cam.R.col(0);
    v.segment<3>(3) = cam.R.col(1);
    v.segment<3>(6) = cam.t;
    v.segment<4>(9) = cam.intrinsics;
    return v;
}

CameraParams unpack_camera(const CameraVec& vec) {
    CameraParams cam;
    Eigen::Matrix<double, 6, 1> sixd;
    sixd.head<3>() = vec.segment<3>(0);
    sixd.tail<3>() = vec.segment<3>(3);
    cam.R = rot6d_to_matrix(sixd);
    cam.t = vec.segment<3>(6);
    cam.intrinsics = vec.segment<4>(9);
    cam.validate();
    return cam;
}

PixelProjection project(const Eigen::Vector3d& p_world, const CameraParams& cam,
                        const Grid& grid) {
    Eigen::Vector3d p = cam.R * (p_world - cam.t);
    if (p.z() <= 0.0) throw NumericError("project: point is not in front of the camera");
    PixelProjection out;
    out.u = cam.intrinsics[0] * (p.x() / p.z()) * grid.width + cam.intrinsics[2] * grid.width;
    out.v = cam.intrinsics[1] * (p.y() / p.z()) * grid.height + cam.intrinsics[3] * grid.height;
    out.depth = p.z();
    return out;
}

Eigen::Vector3d unproject(double u, double v, double depth, const CameraParams& cam,
                          const Grid& grid) {
    if (depth <= 0.0) throw NumericError("unproject: depth must be positive");
    Eigen::Vector3d p_cam;
    p_cam.x() = (u / grid.width - cam.intrinsics[2]) / cam.intrinsics[0] * depth;
    p_cam.y() = (v / grid.height - cam.intrinsics[3]) / cam.intrinsics[1] * depth;
    p_cam.z() = depth;
    return cam.R.transpose() * p_cam + cam.t;
}

Eigen::Vector3d unproject_dir(double u, double v, const CameraParams& cam, const Grid& grid) {
    Eigen::Vector3d d_cam;
    d_cam.x() = (u / grid.width - cam.intrinsics[2]) / cam.intrinsics[0];
    d_cam.y() = (v / grid.height - cam.intrinsics[3]) / cam.intrinsics[1];
    d_cam.z() = 1.0;
    return cam.R.transpose() * d_cam;
}

}  // namespace hflow
