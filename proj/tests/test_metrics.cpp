#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "hflow/errors.hpp"
#include "hflow/metrics.hpp"
#include "hflow/rng.hpp"
#include "hflow/skeleton.hpp"

using namespace hflow;

namespace {

MaskField full_mask(const Grid& g) {
    MaskField m(g);
    for (auto& v : m.values) v = 1;
    return m;
}

Pose random_pose(SplitMix64& rng) {
    Pose p;
    for (int j = 0; j < kJointCount; ++j)
        p[j] = Eigen::Vector3d(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
    return p;
}

Eigen::Matrix3d random_rotation(SplitMix64& rng) {
    Eigen::Quaterniond q(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian(),
                         rng.next_gaussian());
    q.normalize();
    return q.toRotationMatrix();
}

}  // namespace

TEST_CASE("a 3-4-0 mm offset scores five millimeters of epe") {
    Grid g(4, 4);
    Vec3Map gt(g), pred(g);
    MaskField mask(g);
    const Eigen::Vector3d offset(0.003, 0.004, 0.0);
    for (int i : {1, 6, 9, 14}) {
        mask.values[size_t(i)] = 1;
        gt.values[size_t(i)] = Eigen::Vector3d::Zero();
        pred.values[size_t(i)] = offset;
    }
    FlowReport rep = flow_metrics(pred, gt, mask);
    CHECK(rep.pixel_count == 4);
    CHECK(std::abs(rep.epe - 0.005) < 1e-15);
    CHECK(rep.acc_strict == 1.0);
    CHECK(rep.acc_relaxed == 1.0);
    // Zero ground truth has no direction, so no pixel enters the cosine mean.
    CHECK(rep.one_minus_cos == 0.0);
}

TEST_CASE("cosine term averages only over directed pixels") {
    Grid g(3, 1);
    Vec3Map gt(g), pred(g);
    MaskField mask = full_mask(g);
    pred.values[0] = {1, 0, 0};
    gt.values[0] = {0, 1, 0};  // orthogonal: contributes 1
    pred.values[1] = {2, 0, 0};
    gt.values[1] = {1, 0, 0};  // parallel: contributes 0
    pred.values[2] = {1e-9, 0, 0};
    gt.values[2] = {1, 0, 0};  // below the norm floor: excluded
    FlowReport rep = flow_metrics(pred, gt, mask);
    CHECK(rep.one_minus_cos == 0.5);
}

TEST_CASE("accuracy fractions follow the thresholds") {
    Grid g(3, 1);
    Vec3Map gt(g), pred(g);
    MaskField mask = full_mask(g);
    const double errs[3] = {0.04, 0.07, 0.20};
    for (int i = 0; i < 3; ++i) pred.values[size_t(i)] = Eigen::Vector3d(errs[i], 0, 0);
    FlowReport rep = flow_metrics(pred, gt, mask);
    CHECK(rep.acc_strict == 1.0 / 3.0);
    CHECK(rep.acc_relaxed == 2.0 / 3.0);
    CHECK(rep.acc_strict <= rep.acc_relaxed);
}

TEST_CASE("flow metrics agree with a naive loop on random fields") {
    SplitMix64 rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        int w = 3 + int(rng.next_below(10));
        int h = 3 + int(rng.next_below(10));
        Grid g(w, h);
        FlowField pred(g), gt(g);
        MaskField mask(g);
        for (int i = 0; i < g.pixels(); ++i) {
            mask.values[size_t(i)] = uint8_t(rng.next_below(2));
            for (int c = 0; c < 3; ++c) {
                pred.values[size_t(i) * 3 + size_t(c)] = float(0.1 * rng.next_gaussian());
                gt.values[size_t(i) * 3 + size_t(c)] = float(0.1 * rng.next_gaussian());
            }
        }
        mask.values[0] = 1;  // never empty

        double epe_sum = 0.0, cos_sum = 0.0;
        int n = 0, n_cos = 0, n_strict = 0, n_relaxed = 0;
        for (int i = 0; i < g.pixels(); ++i) {
            if (!mask.values[size_t(i)]) continue;
            double px = double(pred.values[size_t(i) * 3 + 0]);
            double py = double(pred.values[size_t(i) * 3 + 1]);
            double pz = double(pred.values[size_t(i) * 3 + 2]);
            double gx = double(gt.values[size_t(i) * 3 + 0]);
            double gy = double(gt.values[size_t(i) * 3 + 1]);
            double gz = double(gt.values[size_t(i) * 3 + 2]);
            double dx = px - gx, dy = py - gy, dz = pz - gz;
            double err = std::sqrt(dx * dx + dy * dy + dz * dz);
            epe_sum += err;
            ++n;
            if (err < 0.05) ++n_strict;
            if (err < 0.10) ++n_relaxed;
            double np = std::sqrt(px * px + py * py + pz * pz);
            double ng = std::sqrt(gx * gx + gy * gy + gz * gz);
            if (np > 1e-6 && ng > 1e-6) {
                cos_sum += 1.0 - (px * gx + py * gy + pz * gz) / (np * ng);
                ++n_cos;
            }
        }
        FlowReport rep = flow_metrics(pred, gt, mask);
        REQUIRE(rep.pixel_count == n);
        CHECK(std::abs(rep.epe - epe_sum / n) < 1e-12);
        CHECK(std::abs(rep.one_minus_cos - (n_cos ? cos_sum / n_cos : 0.0)) < 1e-12);
        CHECK(std::abs(rep.acc_strict - double(n_strict) / n) < 1e-12);
        CHECK(std::abs(rep.acc_relaxed - double(n_relaxed) / n) < 1e-12);
    }
}

TEST_CASE("pose metrics agree with a naive loop") {
    SplitMix64 rng(202);
    std::vector<Pose> pred, gt;
    for (int f = 0; f < 5; ++f) {
        pred.push_back(random_pose(rng));
        gt.push_back(random_pose(rng));
    }
    double mpjpe = 0.0;
    for (size_t f = 0; f < pred.size(); ++f) {
        double fe = 0.0;
        for (int j = 0; j < kJointCount; ++j) fe += (pred[f][j] - gt[f][j]).norm();
        mpjpe += fe / kJointCount;
    }
    mpjpe /= double(pred.size());
    PoseReport rep = pose_metrics(pred, gt);
    CHECK(std::abs(rep.mpjpe - mpjpe) < 1e-12);
    CHECK(rep.pa_mpjpe >= 0.0);
}

TEST_CASE("procrustes alignment removes any similarity transform") {
    SplitMix64 rng(303);
    for (int trial = 0; trial < 10; ++trial) {
        Pose gt = random_pose(rng);
        Eigen::Matrix3d R = random_rotation(rng);
        double s = 0.5 + 1.5 * rng.next_double();
        Eigen::Vector3d t(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
        Pose pred;
        for (int j = 0; j < kJointCount; ++j) pred[j] = s * (R * gt[j]) + t;
        CHECK(procrustes_aligned_error(pred, gt) <= 1e-9);
    }
}

TEST_CASE("translation moves mpjpe but not pa-mpjpe") {
    SplitMix64 rng(404);
    Pose gt = random_pose(rng);
    const Eigen::Vector3d t(0.3, -0.1, 0.2);
    Pose pred;
    for (int j = 0; j < kJointCount; ++j) pred[j] = gt[j] + t;
    PoseReport rep = pose_metrics({pred}, {gt});
    CHECK(std::abs(rep.mpjpe - t.norm()) < 1e-12);
    CHECK(rep.pa_mpjpe <= 1e-9);
}

TEST_CASE("depth fixture with symmetric offsets") {
    Grid g(2, 2);
    ScalarMap gt(g, 2.0), pred(g);
    MaskField mask = full_mask(g);
    pred.values = {2.1, 2.1, 1.9, 1.9};
    DepthReport rep = depth_metrics(pred, gt, mask);
    CHECK(rep.pixel_count == 4);
    CHECK(rep.clamped_count == 0);
    CHECK(rep.mae == doctest::Approx(0.1).epsilon(1e-12));
    // Two-level distribution: sigma is half the gap of the log ratios.
    CHECK(rep.silog == doctest::Approx(50.0 * std::log(2.1 / 1.9)).epsilon(1e-9));
}

TEST_CASE("silog is invariant to a global depth scale") {
    SplitMix64 rng(505);
    Grid g(8, 8);
    ScalarMap gt(g), pred(g), scaled(g);
    MaskField mask = full_mask(g);
    for (int i = 0; i < g.pixels(); ++i) {
        gt.values[size_t(i)] = 1.0 + rng.next_double();
        pred.values[size_t(i)] = 1.0 + rng.next_double();
        scaled.values[size_t(i)] = 3.7 * pred.values[size_t(i)];
    }
    DepthReport a = depth_metrics(pred, gt, mask);
    DepthReport b = depth_metrics(scaled, gt, mask);
    CHECK(std::abs(a.silog - b.silog) <= 1e-9);
}

TEST_CASE("depth metrics agree with a naive loop") {
    SplitMix64 rng(606);
    Grid g(9, 7);
    ScalarMap gt(g), pred(g);
    MaskField mask(g);
    for (int i = 0; i < g.pixels(); ++i) {
        mask.values[size_t(i)] = uint8_t(rng.next_below(2));
        gt.values[size_t(i)] = 0.5 + rng.next_double();
        pred.values[size_t(i)] = 0.5 + rng.next_double();
    }
    mask.values[0] = 1;
    double abs_sum = 0.0, d_sum = 0.0, d2_sum = 0.0;
    int n = 0;
    for (int i = 0; i < g.pixels(); ++i) {
        if (!mask.values[size_t(i)]) continue;
        abs_sum += std::abs(pred.values[size_t(i)] - gt.values[size_t(i)]);
        double d = std::log(pred.values[size_t(i)]) - std::log(gt.values[size_t(i)]);
        d_sum += d;
        d2_sum += d * d;
        ++n;
    }
    DepthReport rep = depth_metrics(pred, gt, mask);
    REQUIRE(rep.pixel_count == n);
    CHECK(std::abs(rep.mae - abs_sum / n) < 1e-12);
    double mean = d_sum / n;
    CHECK(std::abs(rep.silog - 100.0 * std::sqrt(d2_sum / n - mean * mean)) < 1e-9);
}

TEST_CASE("nonpositive predictions are clamped for the log term only") {
    Grid g(2, 1);
    ScalarMap gt(g, 1.0), pred(g);
    MaskField mask = full_mask(g);
    pred.values = {-0.5, 1.0};
    DepthReport rep = depth_metrics(pred, gt, mask);
    CHECK(rep.clamped_count == 1);
    // MAE keeps the raw difference; only the log ratio sees the floor.
    CHECK(rep.mae == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(std::isfinite(rep.silog));
}

TEST_CASE("metric domain errors") {
    Grid g(2, 2), other(3, 2);
    Vec3Map flow_a(g), flow_b(g);
    ScalarMap depth_a(g, 1.0), depth_b(g, 1.0);
    MaskField empty(g), mask_other(other);

    CHECK_THROWS_AS(flow_metrics(flow_a, flow_b, empty), NumericError);
    CHECK_THROWS_AS(depth_metrics(depth_a, depth_b, empty), NumericError);
    CHECK_THROWS_AS(flow_metrics(flow_a, flow_b, mask_other), NumericError);
    CHECK_THROWS_AS(depth_metrics(depth_a, depth_b, mask_other), NumericError);

    MaskField mask = full_mask(g);
    ScalarMap bad_gt(g, 0.0);
    CHECK_THROWS_AS(depth_metrics(depth_a, bad_gt, mask), NumericError);

    std::vector<Pose> one(1), two(2);
    CHECK_THROWS_AS(pose_metrics(one, two), NumericError);
    CHECK_THROWS_AS(pose_metrics({}, {}), NumericError);
}
