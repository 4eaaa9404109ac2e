#include "hflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "hflow/errors.hpp"
#include "hflow/kinematics.hpp"
#include "hflow/rng.hpp"

namespace hflow {

namespace {

constexpr double kInf = 1e30;

// One-dimensional squared-distance transform (lower envelope of parabolas).
// Exact for integer-valued inputs, which is all the mask transform needs.
void dt_1d(const std::vector<double>& f, std::vector<double>& d, int n,
           std::vector<int>& v, std::vector<double>& z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        if (f[size_t(q)] >= kInf) continue;
        double s;
        while (true) {
            int p = v[size_t(k)];
            if (f[size_t(p)] >= kInf) {
                // Either nothing real in the envelope yet or a placeholder.
                v[size_t(k)] = q;
                z[size_t(k)] = -kInf;
                z[size_t(k) + 1] = kInf;
                break;
            }
            s = ((f[size_t(q)] + double(q) * q) - (f[size_t(p)] + double(p) * p)) /
                (2.0 * q - 2.0 * p);
            if (s <= z[size_t(k)]) {
                --k;
                continue;
            }
            ++k;
            v[size_t(k)] = q;
            z[size_t(k)] = s;
            z[size_t(k) + 1] = kInf;
            break;
        }
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[size_t(j) + 1] < double(q)) ++j;
        int p = v[size_t(j)];
        double fq = f[size_t(p)];
        d[size_t(q)] = fq >= kInf ? kInf : double(q - p) * double(q - p) + fq;
    }
}

// Squared distance from every pixel to the nearest pixel where source != 0.
std::vector<double> edt_squared(const MaskField& mask, bool to_foreground) {
    const Grid& g = mask.grid;
    std::vector<double> field(size_t(g.pixels()));
    for (int i = 0; i < g.pixels(); ++i) {
        bool src = (mask.values[size_t(i)] != 0) == to_foreground;
        field[size_t(i)] = src ? 0.0 : kInf;
    }
    int n = std::max(g.width, g.height);
    std::vector<double> f(static_cast<size_t>(n));
    std::vector<double> d(static_cast<size_t>(n));
    std::vector<double> z(static_cast<size_t>(n) + 1);
    std::vector<int> v(static_cast<size_t>(n));
    for (int row = 0; row < g.height; ++row) {
        for (int u = 0; u < g.width; ++u) f[size_t(u)] = field[size_t(g.index(u, row))];
        dt_1d(f, d, g.width, v, z);
        for (int u = 0; u < g.width; ++u) field[size_t(g.index(u, row))] = d[size_t(u)];
    }
    for (int col = 0; col < g.width; ++col) {
        for (int vrow = 0; vrow < g.height; ++vrow)
            f[size_t(vrow)] = field[size_t(g.index(col, vrow))];
        dt_1d(f, d, g.height, v, z);
        for (int vrow = 0; vrow < g.height; ++vrow)
            field[size_t(g.index(col, vrow))] = d[size_t(vrow)];
    }
    return field;
}

constexpr double kSobel[3] = {1.0 / 8.0, 2.0 / 8.0, 1.0 / 8.0};

inline int clamp_coord(int x, int hi) { return x < 0 ? 0 : (x > hi ? hi : x); }

double cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double point_segment_distance(const Eigen::Vector2d& q, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b, Eigen::Vector2d* closest) {
    Eigen::Vector2d ab = b - a;
    double len_sq = ab.squaredNorm();
    double t = len_sq > 0.0 ? (q - a).dot(ab) / len_sq : 0.0;
    t = std::min(1.0, std::max(0.0, t));
    Eigen::Vector2d c = a + t * ab;
    if (closest) *closest = c;
    return (q - c).norm();
}

Plane fit_plane_lsq(const std::vector<Eigen::Vector3d>& pts, const std::vector<int>& idx) {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (int i : idx) centroid += pts[size_t(i)];
    centroid /= double(idx.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int i : idx) {
        Eigen::Vector3d d = pts[size_t(i)] - centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Plane plane;
    plane.normal = eig.eigenvectors().col(0).normalized();
    if (plane.normal.dot(kWorldUp) < 0.0) plane.normal = -plane.normal;
    plane.offset = plane.normal.dot(centroid);
    return plane;
}

template <typename DepthLike>
Plane ransac_impl(const DepthLike& depth, const MaskField& mask, const CameraParams& camera,
                  uint64_t seed) {
    const Grid& g = mask.grid;
    if (depth.grid != g) throw ValidationError("ransac_ground_plane: depth/mask grid mismatch");

    double fg_min_up = std::numeric_limits<double>::infinity();
    std::vector<Eigen::Vector3d> background;
    background.reserve(size_t(g.pixels()));
    std::vector<char> is_bg(size_t(g.pixels()), 0);
    for (int v = 0; v < g.height; ++v) {
        for (int u = 0; u < g.width; ++u) {
            Eigen::Vector3d p = unproject(double(u), double(v), double(depth.at(u, v)), camera, g);
            if (mask.at(u, v)) {
                fg_min_up = std::min(fg_min_up, kWorldUp.dot(p));
            } else {
                background.push_back(p);
            }
        }
    }
    double cutoff = fg_min_up + 0.05;
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(background.size());
    for (const Eigen::Vector3d& p : background)
        if (kWorldUp.dot(p) < cutoff) pts.push_back(p);
    if (pts.size() < 50)
        throw NumericError("ransac_ground_plane: fewer than 50 candidate points below the "
                           "foreground bounding box");

    constexpr int kIterations = 256;
    constexpr double kInlierThresh = 0.02;
    SplitMix64 rng(seed);
    int best_count = -1;
    Eigen::Vector3d best_n = kWorldUp;
    double best_off = 0.0;
    const uint64_t n = pts.size();
    for (int it = 0; it < kIterations; ++it) {
        uint64_t i0 = rng.next_below(n);
        uint64_t i1 = rng.next_below(n);
        uint64_t i2 = rng.next_below(n);
        if (i0 == i1 || i0 == i2 || i1 == i2) continue;
        const Eigen::Vector3d& a = pts[size_t(i0)];
        Eigen::Vector3d nrm = (pts[size_t(i1)] - a).cross(pts[size_t(i2)] - a);
        double len = nrm.norm();
        if (len < 1e-12) continue;
        nrm /= len;
        double off = nrm.dot(a);
        int count = 0;
        for (const Eigen::Vector3d& p : pts)
            if (std::abs(nrm.dot(p) - off) <= kInlierThresh) ++count;
        if (count > best_count) {
            best_count = count;
            best_n = nrm;
            best_off = off;
        }
    }
    if (best_count < 3) throw NumericError("ransac_ground_plane: no plane hypothesis found");

    std::vector<int> inliers;
    inliers.reserve(size_t(best_count));
    for (int i = 0; i < int(pts.size()); ++i)
        if (std::abs(best_n.dot(pts[size_t(i)]) - best_off) <= kInlierThresh) inliers.push_back(i);
    return fit_plane_lsq(pts, inliers);
}

}  // namespace

SignedDistanceField mask_sdf(const MaskField& mask, double tau_sat) {
    if (tau_sat <= 0.0) throw NumericError("mask_sdf: tau_sat must be positive");
    int fg = mask.foreground_count();
    if (fg == 0 || fg == mask.grid.pixels())
        throw NumericError("mask_sdf: mask must contain both foreground and background");
    std::vector<double> to_fg = edt_squared(mask, true);
    std::vector<double> to_bg = edt_squared(mask, false);
    SignedDistanceField sdf;
    sdf.grid = mask.grid;
    sdf.values.resize(size_t(mask.grid.pixels()));
    for (int i = 0; i < mask.grid.pixels(); ++i) {
        double d = mask.values[size_t(i)] ? -std::sqrt(to_bg[size_t(i)])
                                          : std::sqrt(to_fg[size_t(i)]);
        sdf.values[size_t(i)] = std::min(tau_sat, std::max(-tau_sat, d));
    }
    return sdf;
}

void sobel_apply(const ScalarMap& in, ScalarMap& gx, ScalarMap& gy) {
    const Grid& g = in.grid;
    if (gx.grid != g) gx = ScalarMap(g);
    if (gy.grid != g) gy = ScalarMap(g);
    for (int v = 0; v < g.height; ++v) {
        for (int u = 0; u < g.width; ++u) {
            double sx = 0.0, sy = 0.0;
            for (int dv = -1; dv <= 1; ++dv) {
                int vv = clamp_coord(v + dv, g.height - 1);
                for (int du = -1; du <= 1; ++du) {
                    int uu = clamp_coord(u + du, g.width - 1);
                    double val = in.at(uu, vv);
                    sx += du * kSobel[size_t(dv + 1)] * val;
                    sy += dv * kSobel[size_t(du + 1)] * val;
                }
            }
            gx.at(u, v) = sx;
            gy.at(u, v) = sy;
        }
    }
}

void sobel_adjoint(const ScalarMap& coef_x, const ScalarMap& coef_y, ScalarMap& out) {
    const Grid& g = coef_x.grid;
    if (out.grid != g) out = ScalarMap(g);
    for (int v = 0; v < g.height; ++v) {
        for (int u = 0; u < g.width; ++u) {
            double cx = coef_x.at(u, v);
            double cy = coef_y.at(u, v);
            if (cx == 0.0 && cy == 0.0) continue;
            for (int dv = -1; dv <= 1; ++dv) {
                int vv = clamp_coord(v + dv, g.height - 1);
                for (int du = -1; du <= 1; ++du) {
                    int uu = clamp_coord(u + du, g.width - 1);
                    out.at(uu, vv) += du * kSobel[size_t(dv + 1)] * cx +
                                      dv * kSobel[size_t(du + 1)] * cy;
                }
            }
        }
    }
}

ScalarMap grad_norm(const ScalarMap& field) {
    if (field.grid.width < 3 || field.grid.height < 3)
        throw ValidationError("grad_norm: grid must be at least 3x3");
    ScalarMap gx, gy, out(field.grid);
    sobel_apply(field, gx, gy);
    for (size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = std::hypot(gx.values[i], gy.values[i]);
    return out;
}

ScalarMap grad_norm(const Vec3Map& field) {
    if (field.grid.width < 3 || field.grid.height < 3)
        throw ValidationError("grad_norm: grid must be at least 3x3");
    ScalarMap out(field.grid);
    ScalarMap chan(field.grid), gx, gy;
    std::vector<double> acc(size_t(field.grid.pixels()), 0.0);
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < field.grid.pixels(); ++i)
            chan.values[size_t(i)] = field.values[size_t(i)][c];
        sobel_apply(chan, gx, gy);
        for (size_t i = 0; i < acc.size(); ++i)
            acc[i] += gx.values[i] * gx.values[i] + gy.values[i] * gy.values[i];
    }
    for (size_t i = 0; i < acc.size(); ++i) out.values[i] = std::sqrt(acc[i]);
    return out;
}

ScalarMap grad_norm(const DepthField& field) { return grad_norm(ScalarMap(field)); }
ScalarMap grad_norm(const FlowField& field) { return grad_norm(Vec3Map(field)); }

Polygon2D convex_hull(const std::vector<Eigen::Vector2d>& points) {
    if (points.empty()) throw NumericError("convex_hull: empty input");
    std::vector<Eigen::Vector2d> pts = points;
    std::sort(pts.begin(), pts.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
                              return (a - b).norm() < 1e-12;
                          }),
              pts.end());
    Polygon2D poly;
    size_t n = pts.size();
    if (n == 1) {
        poly.vertices = {pts[0]};
        return poly;
    }
    std::vector<Eigen::Vector2d> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {  // lower chain
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {  // upper chain
        while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);  // last point equals the first
    poly.vertices = hull;
    return poly;
}

double polygon_signed_distance(const Eigen::Vector2d& q, const Polygon2D& poly) {
    return polygon_signed_distance_grad(q, poly).value;
}

PolygonDistance polygon_signed_distance_grad(const Eigen::Vector2d& q, const Polygon2D& poly) {
    const std::vector<Eigen::Vector2d>& v = poly.vertices;
    if (v.empty()) throw ValidationError("polygon_signed_distance: empty polygon");
    PolygonDistance out;
    if (v.size() == 1) {
        out.value = (q - v[0]).norm();
        if (out.value > 1e-12) out.grad = (q - v[0]) / out.value;
        return out;
    }
    if (v.size() == 2) {
        // Degenerate hull: the support is a segment, whose relative boundary
        // is its endpoint pair.  Sign and magnitude are measured along the
        // span (a point straddled by the endpoints is interior); the
        // perpendicular coordinate carries no balance information here.
        Eigen::Vector2d d = v[1] - v[0];
        double len = d.norm();
        if (len < 1e-12) {
            out.value = (q - v[0]).norm();
            if (out.value > 1e-12) out.grad = (q - v[0]) / out.value;
            return out;
        }
        Eigen::Vector2d dir = d / len;
        double t = (q - v[0]).dot(d) / (len * len);
        if (t - 0.5 >= 0.0) {
            out.value = (t - 1.0) * len;
            out.grad = dir;
        } else {
            out.value = -t * len;
            out.grad = -dir;
        }
        return out;
    }
    double best = std::numeric_limits<double>::infinity();
    Eigen::Vector2d best_closest = v[0];
    bool inside = true;
    size_t n = v.size();
    for (size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d& a = v[i];
        const Eigen::Vector2d& b = v[(i + 1) % n];
        Eigen::Vector2d closest;
        double d = point_segment_distance(q, a, b, &closest);
        if (d < best) {
            best = d;
            best_closest = closest;
        }
        if (inside && cross2(a, b, q) < 0.0) inside = false;
    }
    out.value = inside ? -best : best;
    if (best > 1e-12) {
        Eigen::Vector2d away = (q - best_closest) / best;
        out.grad = inside ? Eigen::Vector2d(-away) : away;
    }
    return out;
}

void Plane::basis(Eigen::Vector3d& e1, Eigen::Vector3d& e2) const {
    e1 = least_aligned_axis_cross(normal);
    e2 = normal.cross(e1);
}

Eigen::Vector2d Plane::project(const Eigen::Vector3d& p) const {
    Eigen::Vector3d e1, e2;
    basis(e1, e2);
    Eigen::Vector3d q = p - offset * normal;
    return {q.dot(e1), q.dot(e2)};
}

Plane ransac_ground_plane(const DepthField& depth, const MaskField& mask,
                          const CameraParams& camera, uint64_t seed) {
    return ransac_impl(depth, mask, camera, seed);
}

Plane ransac_ground_plane(const ScalarMap& depth, const MaskField& mask,
                          const CameraParams& camera, uint64_t seed) {
    return ransac_impl(depth, mask, camera, seed);
}

}  // namespace hflow
