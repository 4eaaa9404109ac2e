#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "hflow/camera.hpp"
#include "hflow/clip.hpp"
#include "hflow/grid.hpp"

namespace hflow {

// Double-precision G-buffer from the software rasterizer; fields are
// quantized to the 32-bit clip payloads only at store time.
struct RasterBuffers {
    Grid grid;
    std::vector<uint32_t> tri_id;       // kBackgroundTri where uncovered
    std::vector<Eigen::Vector3d> bary;  // perspective-correct, sums to 1 on coverage
    std::vector<double> depth;          // camera-frame z, +inf where uncovered
    bool any_coverage = false;

    RasterBuffers() = default;
    explicit RasterBuffers(const Grid& g);
};

// Perspective-correct rasterizer: strict-less depth test (ties keep the
// earlier triangle), top-left fill rule at edge ties, pixel centers sampled
// at integer coordinates.  Triangles reaching behind the near plane are
// skipped rather than clipped; a mesh that covers nothing leaves
// any_coverage false.
RasterBuffers rasterize_frame(const std::vector<Eigen::Vector3d>& vertices,
                              const std::vector<std::array<uint32_t, 3>>& triangles,
                              const CameraParams& camera, const Grid& grid);

// Exact per-pixel scene flow: sum_k bary_k * (next[k] - now[k]) over the
// pixel's host triangle; background pixels stay zero.
FlowField pixel_flow_gt(const RasterBuffers& buffers,
                        const std::vector<Eigen::Vector3d>& vertices_now,
                        const std::vector<Eigen::Vector3d>& vertices_next,
                        const std::vector<std::array<uint32_t, 3>>& triangles);

}  // namespace hflow
