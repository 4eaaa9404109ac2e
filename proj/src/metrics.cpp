#include "hflow/metrics.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "hflow/errors.hpp"

namespace hflow {

namespace {
constexpr double kCosFloor = 1e-6;   // vectors shorter than this have no angle
constexpr double kDepthFloor = 1e-6;
}  // namespace

FlowReport flow_metrics(const Vec3Map& pred, const Vec3Map& gt, const MaskField& mask,
                        const FlowThresholds& thresholds) {
    if (pred.grid != gt.grid || pred.grid != mask.grid)
        throw NumericError("flow_metrics: grids must match");
    FlowReport rep;
    double epe_sum = 0.0, cos_sum = 0.0;
    int cos_count = 0, strict = 0, relaxed = 0;
    for (int i = 0; i < mask.grid.pixels(); ++i) {
        if (!mask.values[size_t(i)]) continue;
        const Eigen::Vector3d& p = pred.values[size_t(i)];
        const Eigen::Vector3d& g = gt.values[size_t(i)];
        double err = (p - g).norm();
        epe_sum += err;
        ++rep.pixel_count;
        if (err < thresholds.strict) ++strict;
        if (err < thresholds.relaxed) ++relaxed;
        double np = p.norm(), ng = g.norm();
        if (np > kCosFloor && ng > kCosFloor) {
            cos_sum += 1.0 - p.dot(g) / (np * ng);
            ++cos_count;
        }
    }
    if (rep.pixel_count == 0) throw NumericError("flow_metrics: empty mask");
    rep.epe = epe_sum / rep.pixel_count;
    rep.one_minus_cos = cos_count > 0 ? cos_sum / cos_count : 0.0;
    rep.acc_strict = double(strict) / rep.pixel_count;
    rep.acc_relaxed = double(relaxed) / rep.pixel_count;
    return rep;
}

FlowReport flow_metrics(const FlowField& pred, const FlowField& gt, const MaskField& mask,
                        const FlowThresholds& thresholds) {
    return flow_metrics(Vec3Map(pred), Vec3Map(gt), mask, thresholds);
}

double procrustes_aligned_error(const Pose& pred, const Pose& gt) {
    Eigen::Vector3d cp = Eigen::Vector3d::Zero(), cg = Eigen::Vector3d::Zero();
    for (int j = 0; j < kJointCount; ++j) {
        cp += pred[j];
        cg += gt[j];
    }
    cp /= kJointCount;
    cg /= kJointCount;

    Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
    double pred_var = 0.0;
    for (int j = 0; j < kJointCount; ++j) {
        Eigen::Vector3d a = pred[j] - cp;
        Eigen::Vector3d b = gt[j] - cg;
        H += a * b.transpose();
        pred_var += a.squaredNorm();
    }

    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    double scale = 1.0;
    if (pred_var > 1e-18) {
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::Matrix3d U = svd.matrixU();
        Eigen::Matrix3d V = svd.matrixV();
        Eigen::Vector3d d(1.0, 1.0, (V * U.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
        R = V * d.asDiagonal() * U.transpose();
        scale = (svd.singularValues().cwiseProduct(d)).sum() / pred_var;
    }

    double err = 0.0;
    for (int j = 0; j < kJointCount; ++j)
        err += (scale * (R * (pred[j] - cp)) + cg - gt[j]).norm();
    return err / kJointCount;
}

PoseReport pose_metrics(const std::vector<Pose>& pred, const std::vector<Pose>& gt) {
    if (pred.size() != gt.size() || pred.empty())
        throw NumericError("pose_metrics: sequences must have equal nonzero length");
    PoseReport rep;
    for (size_t f = 0; f < pred.size(); ++f) {
        double frame_err = 0.0;
        for (int j = 0; j < kJointCount; ++j) frame_err += (pred[f][j] - gt[f][j]).norm();
        rep.mpjpe += frame_err / kJointCount;
        rep.pa_mpjpe += procrustes_aligned_error(pred[f], gt[f]);
    }
    rep.mpjpe /= double(pred.size());
    rep.pa_mpjpe /= double(pred.size());
    return rep;
}

DepthReport depth_metrics(const ScalarMap& pred, const ScalarMap& gt, const MaskField& region) {
    if (pred.grid != gt.grid || pred.grid != region.grid)
        throw NumericError("depth_metrics: grids must match");
    DepthReport rep;
    double abs_sum = 0.0, log_sum = 0.0, log_sq_sum = 0.0;
    for (int i = 0; i < region.grid.pixels(); ++i) {
        if (!region.values[size_t(i)]) continue;
        double g = gt.values[size_t(i)];
        if (!(g > 0.0)) throw NumericError("depth_metrics: ground truth must be positive on region");
        double p = pred.values[size_t(i)];
        if (p <= 0.0) {
            p = kDepthFloor;
            ++rep.clamped_count;
        }
        abs_sum += std::abs(pred.values[size_t(i)] - g);
        double delta = std::log(p) - std::log(g);
        log_sum += delta;
        log_sq_sum += delta * delta;
        ++rep.pixel_count;
    }
    if (rep.pixel_count == 0) throw NumericError("depth_metrics: empty region");
    rep.mae = abs_sum / rep.pixel_count;
    double mean = log_sum / rep.pixel_count;
    double var = log_sq_sum / rep.pixel_count - mean * mean;
    rep.silog = 100.0 * std::sqrt(std::max(0.0, var));
    return rep;
}

DepthReport depth_metrics(const DepthField& pred, const DepthField& gt, const MaskField& region) {
    return depth_metrics(ScalarMap(pred), ScalarMap(gt), region);
}

}  // namespace hflow
