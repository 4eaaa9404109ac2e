#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "hflow/errors.hpp"

namespace hflow {

// Row-major raster layout, index = v * width + u, u = column, v = row.
// Pixel centers sit at integer coordinates.
struct Grid {
    int width = 0;
    int height = 0;

    Grid() = default;
    Grid(int w, int h) : width(w), height(h) {
        if (w < 8 || h < 8) throw ValidationError("grid dimensions must be at least 8x8");
    }

    int pixels() const { return width * height; }
    int index(int u, int v) const { return v * width + u; }
    bool contains(int u, int v) const { return u >= 0 && u < width && v >= 0 && v < height; }
    bool operator==(const Grid& o) const { return width == o.width && height == o.height; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

// Dense per-pixel fields.  File payloads are 32-bit, so these store f32/u8
// verbatim; gradient work converts to 64-bit maps below.
struct DepthField {
    Grid grid;
    std::vector<float> values;  // meters, positive finite

    DepthField() = default;
    explicit DepthField(const Grid& g, float fill = 1.0f)
        : grid(g), values(size_t(g.pixels()), fill) {}

    float at(int u, int v) const { return values[size_t(grid.index(u, v))]; }
    float& at(int u, int v) { return values[size_t(grid.index(u, v))]; }
};

struct FlowField {
    Grid grid;
    std::vector<float> values;  // 3 per pixel, world-frame meters

    FlowField() = default;
    explicit FlowField(const Grid& g) : grid(g), values(size_t(g.pixels()) * 3, 0.0f) {}

    const float* at(int u, int v) const { return &values[size_t(grid.index(u, v)) * 3]; }
    float* at(int u, int v) { return &values[size_t(grid.index(u, v)) * 3]; }
    Eigen::Vector3d vec(int u, int v) const {
        const float* p = at(u, v);
        return {double(p[0]), double(p[1]), double(p[2])};
    }
};

struct MaskField {
    Grid grid;
    std::vector<uint8_t> values;  // 1 foreground, 0 background

    MaskField() = default;
    explicit MaskField(const Grid& g) : grid(g), values(size_t(g.pixels()), 0) {}

    uint8_t at(int u, int v) const { return values[size_t(grid.index(u, v))]; }
    uint8_t& at(int u, int v) { return values[size_t(grid.index(u, v))]; }
    int foreground_count() const {
        int n = 0;
        for (uint8_t m : values) n += (m != 0);
        return n;
    }
};

// 64-bit working copies used by the constraint evaluators and the optimizer.
struct ScalarMap {
    Grid grid;
    std::vector<double> values;

    ScalarMap() = default;
    explicit ScalarMap(const Grid& g, double fill = 0.0)
        : grid(g), values(size_t(g.pixels()), fill) {}
    explicit ScalarMap(const DepthField& f) : grid(f.grid), values(f.values.begin(), f.values.end()) {}

    double at(int u, int v) const { return values[size_t(grid.index(u, v))]; }
    double& at(int u, int v) { return values[size_t(grid.index(u, v))]; }
};

struct Vec3Map {
    Grid grid;
    std::vector<Eigen::Vector3d> values;

    Vec3Map() = default;
    explicit Vec3Map(const Grid& g)
        : grid(g), values(size_t(g.pixels()), Eigen::Vector3d::Zero()) {}
    explicit Vec3Map(const FlowField& f) : grid(f.grid), values(size_t(f.grid.pixels())) {
        for (int i = 0; i < f.grid.pixels(); ++i)
            values[size_t(i)] = Eigen::Vector3d(f.values[size_t(i) * 3 + 0],
                                                f.values[size_t(i) * 3 + 1],
                                                f.values[size_t(i) * 3 + 2]);
    }

    const Eigen::Vector3d& at(int u, int v) const { return values[size_t(grid.index(u, v))]; }
    Eigen::Vector3d& at(int u, int v) { return values[size_t(grid.index(u, v))]; }
};

}  // namespace hflow
