#pragma once

#include <Eigen/Core>

#include "hflow/grid.hpp"

namespace hflow {

// Pinhole camera.  Extrinsics map world to camera as p_cam = R * (p - t),
// t being the camera center in world coordinates.  Intrinsics are stored
// normalized by the image size (fx/W, fy/H, cx/W, cy/H) so they are
// resolution independent; pixel centers sit at integer coordinates.
struct CameraParams {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
    Eigen::Vector4d intrinsics{1.0, 1.0, 0.5, 0.5};  // fx_n, fy_n, cx_n, cy_n

    void validate() const;  // throws ValidationError

    bool is_identity_anchor(double tol = 1e-6) const;
};

// 13-vector layout: first two columns of R (6), camera center (3),
// normalized intrinsics (4).
using CameraVec = Eigen::Matrix<double, 13, 1>;

// Gram-Schmidt recovery of a rotation from its first two (unnormalized)
// columns.  Throws NumericError when the columns are near zero or near
// parallel.
Eigen::Matrix3d rot6d_to_matrix(const Eigen::Matrix<double, 6, 1>& sixd);

CameraVec pack_camera(const CameraParams& cam);
CameraParams unpack_camera(const CameraVec& vec);

struct PixelProjection {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;  // camera-frame z, meters
};

// Throws NumericError if the point is at or behind the camera plane.
PixelProjection project(const Eigen::Vector3d& p_world, const CameraParams& cam, const Grid& grid);

// Inverse of project for a given pixel coordinate and positive depth.
Eigen::Vector3d unproject(double u, double v, double depth, const CameraParams& cam,
                          const Grid& grid);

// World-frame unit-less ray direction d, camera-frame z component 1, such
// that unproject(u, v, depth) == t + depth * d.  Used by evaluators that
// need d(point)/d(depth) without recomputing the full unprojection.
Eigen::Vector3d unproject_dir(double u, double v, const CameraParams& cam, const Grid& grid);

}  // namespace hflow
