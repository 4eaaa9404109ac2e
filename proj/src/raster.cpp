#include "hflow/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hflow/errors.hpp"

namespace hflow {

namespace {

constexpr double kNearPlane = 0.01;  // camera-frame z floor, meters

double orient2d(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// Raster rows grow with y.  For a positively oriented triangle the interior
// sits below horizontal rightward edges and right of upward edges, so those
// are the tie-winning sides.
bool top_left(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    if (b.y() == a.y()) return b.x() > a.x();
    return b.y() < a.y();
}

}  // namespace

RasterBuffers::RasterBuffers(const Grid& g)
    : grid(g),
      tri_id(size_t(g.pixels()), kBackgroundTri),
      bary(size_t(g.pixels()), Eigen::Vector3d::Zero()),
      depth(size_t(g.pixels()), std::numeric_limits<double>::infinity()) {}

RasterBuffers rasterize_frame(const std::vector<Eigen::Vector3d>& vertices,
                              const std::vector<std::array<uint32_t, 3>>& triangles,
                              const CameraParams& camera, const Grid& grid) {
    camera.validate();
    RasterBuffers out(grid);

    const size_t n = vertices.size();
    std::vector<Eigen::Vector2d> screen(n);
    std::vector<double> cam_z(n);
    for (size_t i = 0; i < n; ++i) {
        Eigen::Vector3d pc = camera.R * (vertices[i] - camera.t);
        cam_z[i] = pc.z();
        if (pc.z() > kNearPlane) {
            double inv_z = 1.0 / pc.z();
            screen[i] =
                Eigen::Vector2d((camera.intrinsics[0] * pc.x() * inv_z + camera.intrinsics[2]) *
                                    grid.width,
                                (camera.intrinsics[1] * pc.y() * inv_z + camera.intrinsics[3]) *
                                    grid.height);
        }
    }

    for (size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        const uint32_t i0 = tri[0], i1 = tri[1], i2 = tri[2];
        if (i0 >= n || i1 >= n || i2 >= n)
            throw ValidationError("rasterize_frame: triangle index out of range");
        if (cam_z[i0] <= kNearPlane || cam_z[i1] <= kNearPlane || cam_z[i2] <= kNearPlane)
            continue;  // no near-plane clipping; generated geometry stays in front

        // Order so the screen triangle is positively oriented; weights are
        // mapped back to the stored vertex order below.
        std::array<uint32_t, 3> o = {i0, i1, i2};
        std::array<int, 3> slot = {0, 1, 2};
        double area2 = orient2d(screen[i0], screen[i1], screen[i2]);
        if (area2 == 0.0) continue;
        if (area2 < 0.0) {
            std::swap(o[1], o[2]);
            std::swap(slot[1], slot[2]);
            area2 = -area2;
        }
        const Eigen::Vector2d& p0 = screen[o[0]];
        const Eigen::Vector2d& p1 = screen[o[1]];
        const Eigen::Vector2d& p2 = screen[o[2]];

        int u_min = std::max(0, int(std::ceil(std::min({p0.x(), p1.x(), p2.x()}))));
        int u_max = std::min(grid.width - 1, int(std::floor(std::max({p0.x(), p1.x(), p2.x()}))));
        int v_min = std::max(0, int(std::ceil(std::min({p0.y(), p1.y(), p2.y()}))));
        int v_max = std::min(grid.height - 1, int(std::floor(std::max({p0.y(), p1.y(), p2.y()}))));
        if (u_min > u_max || v_min > v_max) continue;

        const bool tl0 = top_left(p1, p2);  // edge opposite vertex 0
        const bool tl1 = top_left(p2, p0);
        const bool tl2 = top_left(p0, p1);
        const double inv_area = 1.0 / area2;
        const double z0 = cam_z[o[0]], z1 = cam_z[o[1]], z2 = cam_z[o[2]];

        for (int v = v_min; v <= v_max; ++v) {
            for (int u = u_min; u <= u_max; ++u) {
                Eigen::Vector2d p(static_cast<double>(u), static_cast<double>(v));
                double w0 = orient2d(p1, p2, p);
                double w1 = orient2d(p2, p0, p);
                double w2 = orient2d(p0, p1, p);
                bool in0 = w0 > 0.0 || (w0 == 0.0 && tl0);
                bool in1 = w1 > 0.0 || (w1 == 0.0 && tl1);
                bool in2 = w2 > 0.0 || (w2 == 0.0 && tl2);
                if (!(in0 && in1 && in2)) continue;

                double s0 = w0 * inv_area;
                double s1 = w1 * inv_area;
                double s2 = w2 * inv_area;
                double inv_depth = s0 / z0 + s1 / z1 + s2 / z2;
                double z = 1.0 / inv_depth;
                size_t idx = size_t(grid.index(u, v));
                if (z < out.depth[idx]) {
                    out.depth[idx] = z;
                    out.tri_id[idx] = uint32_t(t);
                    Eigen::Vector3d b;
                    b[slot[0]] = (s0 / z0) * z;
                    b[slot[1]] = (s1 / z1) * z;
                    b[slot[2]] = (s2 / z2) * z;
                    out.bary[idx] = b;
                    out.any_coverage = true;
                }
            }
        }
    }
    return out;
}

FlowField pixel_flow_gt(const RasterBuffers& buffers,
                        const std::vector<Eigen::Vector3d>& vertices_now,
                        const std::vector<Eigen::Vector3d>& vertices_next,
                        const std::vector<std::array<uint32_t, 3>>& triangles) {
    if (vertices_now.size() != vertices_next.size())
        throw ValidationError("pixel_flow_gt: vertex sets must share topology");
    FlowField flow(buffers.grid);
    for (int px = 0; px < buffers.grid.pixels(); ++px) {
        uint32_t id = buffers.tri_id[size_t(px)];
        if (id == kBackgroundTri) continue;
        if (id >= triangles.size()) throw IoError("pixel_flow_gt: stale triangle id");
        const auto& tri = triangles[id];
        Eigen::Vector3d f = Eigen::Vector3d::Zero();
        for (int k = 0; k < 3; ++k) {
            uint32_t vi = tri[size_t(k)];
            if (vi >= vertices_now.size()) throw IoError("pixel_flow_gt: stale triangle id");
            f += buffers.bary[size_t(px)][k] * (vertices_next[vi] - vertices_now[vi]);
        }
        float* dst = flow.at(px % buffers.grid.width, px / buffers.grid.width);
        dst[0] = float(f.x());
        dst[1] = float(f.y());
        dst[2] = float(f.z());
    }
    return flow;
}

}  // namespace hflow
