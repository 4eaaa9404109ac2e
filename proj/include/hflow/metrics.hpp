#pragma once

#include <vector>

#include "hflow/grid.hpp"
#include "hflow/kinematics.hpp"

namespace hflow {

// All metrics are mask-restricted and reported in meters; millimeter
// conversion belongs to the report formatter, nowhere else.

struct FlowReport {
    double epe = 0.0;            // mean 3D end-point error
    double one_minus_cos = 0.0;  // over pixels where both norms exceed 1e-6
    double acc_strict = 0.0;     // fraction below the strict threshold
    double acc_relaxed = 0.0;
    int pixel_count = 0;
};

struct PoseReport {
    double mpjpe = 0.0;
    double pa_mpjpe = 0.0;  // after per-frame similarity alignment
};

struct DepthReport {
    double mae = 0.0;
    double silog = 0.0;  // 100 * sqrt(var of log ratios)
    int pixel_count = 0;
    int clamped_count = 0;  // pred <= 0 values clamped to 1e-6 m
};

struct FlowThresholds {
    double strict = 0.05;
    double relaxed = 0.10;
};

FlowReport flow_metrics(const FlowField& pred, const FlowField& gt, const MaskField& mask,
                        const FlowThresholds& thresholds = {});
FlowReport flow_metrics(const Vec3Map& pred, const Vec3Map& gt, const MaskField& mask,
                        const FlowThresholds& thresholds = {});

PoseReport pose_metrics(const std::vector<Pose>& pred, const std::vector<Pose>& gt);

// Similarity-Procrustes residual for one frame; exposed for tests.
double procrustes_aligned_error(const Pose& pred, const Pose& gt);

DepthReport depth_metrics(const DepthField& pred, const DepthField& gt, const MaskField& region);
DepthReport depth_metrics(const ScalarMap& pred, const ScalarMap& gt, const MaskField& region);

}  // namespace hflow
