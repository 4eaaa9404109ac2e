#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "hflow/camera.hpp"
#include "hflow/grid.hpp"

namespace hflow {

// World up direction.  The world frame is anchored to the first camera, so
// "up" is a convention of the generated scenes, not of the camera model.
inline const Eigen::Vector3d kWorldUp{0.0, 1.0, 0.0};

struct SignedDistanceField {
    Grid grid;
    std::vector<double> values;  // pixels, positive outside, |v| <= tau_sat

    double at(int u, int v) const { return values[size_t(grid.index(u, v))]; }
};

// Exact Euclidean distance transform of the mask boundary, signed and then
// saturated at tau_sat.  Outside pixels carry the distance to the nearest
// foreground pixel, inside pixels minus the distance to the nearest
// background pixel, so boundary-row magnitudes are <= 1.
SignedDistanceField mask_sdf(const MaskField& mask, double tau_sat);

// 3x3 Sobel with 1/8 normalization and replicate border padding, so a
// unit-slope ramp responds with exactly 1 per pixel.
void sobel_apply(const ScalarMap& in, ScalarMap& gx, ScalarMap& gy);

// Exact adjoint of sobel_apply (replicate padding folds border taps back
// onto edge pixels); accumulates into `out`.
void sobel_adjoint(const ScalarMap& coef_x, const ScalarMap& coef_y, ScalarMap& out);

ScalarMap grad_norm(const ScalarMap& field);
ScalarMap grad_norm(const Vec3Map& field);
ScalarMap grad_norm(const DepthField& field);
ScalarMap grad_norm(const FlowField& field);

struct Polygon2D {
    std::vector<Eigen::Vector2d> vertices;  // CCW, convex
};

// Monotone-chain hull, collinear interior points removed; one point makes a
// single-vertex polygon, two (or all collinear) a segment.
Polygon2D convex_hull(const std::vector<Eigen::Vector2d>& points);

// Negative inside, positive outside, magnitude = distance to the boundary.
// A segment uses its relative boundary, the endpoint pair: sign and distance
// are measured along the span, so straddled points count as interior.  A
// single vertex is all-outside.
double polygon_signed_distance(const Eigen::Vector2d& q, const Polygon2D& poly);

// Same plus d(value)/dq; the gradient is the unit vector away from the
// nearest boundary point (zero exactly on the boundary).
struct PolygonDistance {
    double value = 0.0;
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
};
PolygonDistance polygon_signed_distance_grad(const Eigen::Vector2d& q, const Polygon2D& poly);

struct Plane {
    Eigen::Vector3d normal = kWorldUp;  // unit, positive world-up component
    double offset = 0.0;                // plane = { x : normal . x = offset }

    double height(const Eigen::Vector3d& p) const { return normal.dot(p) - offset; }

    // Orthonormal in-plane basis built from the normal by the same
    // fallback-axis rule as the IK anti-parallel case.
    void basis(Eigen::Vector3d& e1, Eigen::Vector3d& e2) const;
    Eigen::Vector2d project(const Eigen::Vector3d& p) const;
};

// RANSAC plane over background pixels whose world-up coordinate is below
// the foreground minimum plus 5 cm slack: 256 iterations, 2 cm inlier
// threshold, 3-point samples, least-squares refit, deterministic per seed.
Plane ransac_ground_plane(const DepthField& depth, const MaskField& mask,
                          const CameraParams& camera, uint64_t seed);

// Same, but on a 64-bit depth map (the optimizer owns depth in doubles).
Plane ransac_ground_plane(const ScalarMap& depth, const MaskField& mask,
                          const CameraParams& camera, uint64_t seed);

}  // namespace hflow
