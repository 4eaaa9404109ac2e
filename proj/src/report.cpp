#include "hflow/report.hpp"

#include <cstdio>

namespace hflow {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

}  // namespace

std::string format_mm(double meters) { return fmt("%.1f", meters * 1000.0); }

std::string render_report(const EvalReport& r) {
    // Column headers use the conventional short metric names; the unitless
    // columns stay unscaled while length columns are shown in millimeters.
    const char* names[8] = {"EPE", "1-Cos", "Acc.S", "Acc.R", "MPJPE", "PA", "MAE", "SiLog"};
    const std::string values[8] = {
        format_mm(r.flow.epe),          fmt("%.4f", r.flow.one_minus_cos),
        fmt("%.3f", r.flow.acc_strict), fmt("%.3f", r.flow.acc_relaxed),
        format_mm(r.pose.mpjpe),        format_mm(r.pose.pa_mpjpe),
        format_mm(r.depth.mae),         fmt("%.3f", r.depth.silog),
    };
    const size_t kCol = 9;
    std::string head, row;
    for (int i = 0; i < 8; ++i) {
        std::string n = names[i], v = values[i];
        size_t w = kCol > n.size() ? kCol - n.size() : 1;
        size_t wv = kCol > v.size() ? kCol - v.size() : 1;
        head.append(w, ' ');
        head += n;
        row.append(wv, ' ');
        row += v;
    }
    std::string units = "  units: EPE/MPJPE/PA/MAE mm, Acc fractions, 1-Cos and SiLog unitless";
    std::string out = head + "\n" + row + "\n" + units + "\n";
    out += "[values]\n";
    char buf[96];
    auto kv = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%s = %.17g\n", key, v);
        out += buf;
    };
    kv("epe_m", r.flow.epe);
    kv("one_minus_cos", r.flow.one_minus_cos);
    kv("acc_strict", r.flow.acc_strict);
    kv("acc_relaxed", r.flow.acc_relaxed);
    kv("mpjpe_m", r.pose.mpjpe);
    kv("pa_mpjpe_m", r.pose.pa_mpjpe);
    kv("mae_m", r.depth.mae);
    kv("silog", r.depth.silog);
    std::snprintf(buf, sizeof(buf), "flow_pixels = %d\n", r.flow.pixel_count);
    out += buf;
    std::snprintf(buf, sizeof(buf), "depth_pixels = %d\n", r.depth.pixel_count);
    out += buf;
    std::snprintf(buf, sizeof(buf), "depth_clamped = %d\n", r.depth.clamped_count);
    out += buf;
    return out;
}

}  // namespace hflow
