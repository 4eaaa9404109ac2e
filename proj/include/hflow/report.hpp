#pragma once

#include <string>

#include "hflow/metrics.hpp"

namespace hflow {

// Joint evaluation summary for one pred/GT clip pair.
struct EvalReport {
    FlowReport flow;
    PoseReport pose;
    DepthReport depth;
};

// Meters to a millimeter string with one decimal (0.0242 -> "24.2").
std::string format_mm(double meters);

// Fixed-width table (EPE, 1-Cos, Acc.S, Acc.R, MPJPE, PA, MAE, SiLog),
// length metrics in millimeters with one decimal, followed by a
// machine-readable `key = value` block at full precision.
std::string render_report(const EvalReport& report);

}  // namespace hflow
