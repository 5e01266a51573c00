#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace demorph {

// Ordered 2D landmark list in continuous image coordinates. Index k in one
// image corresponds semantically to index k in another, which is what makes
// landmark blending meaningful.
struct LandmarkSet {
    std::vector<Eigen::Vector2d> points;

    size_t count() const { return points.size(); }
};

inline void validate_landmarks(const LandmarkSet& lms, double width, double height) {
    if (lms.count() < 3) throw std::invalid_argument("LandmarkSet: need at least 3 points");
    for (const auto& p : lms.points)
        if (!(p.x() >= 0.0 && p.x() <= width && p.y() >= 0.0 && p.y() <= height))
            throw std::invalid_argument("LandmarkSet: point outside [0,W]x[0,H] frame");
}

// Triangles as index triples into a LandmarkSet. Stored CCW with the lowest
// index first and the list sorted, so meshes compare and reproduce exactly.
struct TriangleMesh {
    std::vector<std::array<int, 3>> triangles;
};

inline double signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

// > 0 when p lies strictly inside the circumcircle of CCW triangle (a,b,c);
// |result| <= tol is treated as on-circle.
inline double incircle_det(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                           const Eigen::Vector2d& p) {
    const double ax = a.x() - p.x(), ay = a.y() - p.y();
    const double bx = b.x() - p.x(), by = b.y() - p.y();
    const double cx = c.x() - p.x(), cy = c.y() - p.y();
    const double a2 = ax * ax + ay * ay;
    const double b2 = bx * bx + by * by;
    const double c2 = cx * cx + cy * cy;
    return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx);
}

// Appends the 4 frame corners and 4 edge midpoints, in this order:
// (0,0), (W,0), (0,H), (W,H), (W/2,0), (0,H/2), (W,H/2), (W/2,H).
// With the frame boundary pinned, a piecewise-affine warp covers every pixel.
inline LandmarkSet augment_boundary_points(const LandmarkSet& lms, double width, double height) {
    validate_landmarks(lms, width, height);
    LandmarkSet out = lms;
    const double w = width, h = height;
    out.points.emplace_back(0.0, 0.0);
    out.points.emplace_back(w, 0.0);
    out.points.emplace_back(0.0, h);
    out.points.emplace_back(w, h);
    out.points.emplace_back(w / 2.0, 0.0);
    out.points.emplace_back(0.0, h / 2.0);
    out.points.emplace_back(w, h / 2.0);
    out.points.emplace_back(w / 2.0, h);
    return out;
}

namespace detail {

struct DelaunayTri {
    int a, b, c;  // CCW, indices into the working point list
    bool alive = true;
};

inline double coord_scale(const std::vector<Eigen::Vector2d>& pts) {
    double s = 1.0;
    for (const auto& p : pts) s = std::max({s, std::abs(p.x()), std::abs(p.y())});
    return s;
}

}  // namespace detail

// Bowyer-Watson triangulation. Points are inserted in index order; exact
// cocircular ties are resolved afterwards by edge flips that hand the
// diagonal to the lowest-indexed vertex of the cocircular quad, so output is
// deterministic and documented. Throws on all-collinear input.
inline TriangleMesh delaunay_triangulate(const LandmarkSet& lms) {
    const size_t n = lms.count();
    if (n < 3) throw std::invalid_argument("delaunay_triangulate: need at least 3 points");

    std::vector<Eigen::Vector2d> pts = lms.points;
    const double scale = detail::coord_scale(pts);
    const double area_tol = 1e-12 * scale * scale;
    const double incircle_tol = 1e-9 * scale * scale * scale * scale;

    bool any_area = false;
    for (size_t i = 0; i < n && !any_area; ++i)
        for (size_t j = i + 1; j < n && !any_area; ++j)
            for (size_t k = j + 1; k < n && !any_area; ++k)
                if (std::abs(signed_area(pts[i], pts[j], pts[k])) > area_tol) any_area = true;
    if (!any_area) throw std::invalid_argument("delaunay_triangulate: all points are collinear");

    // super-triangle comfortably containing everything
    Eigen::Vector2d lo = pts[0], hi = pts[0];
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Eigen::Vector2d mid = 0.5 * (lo + hi);
    const double d = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1.0}) * 64.0;
    const int s0 = static_cast<int>(n), s1 = s0 + 1, s2 = s0 + 2;
    pts.emplace_back(mid.x() - 2.0 * d, mid.y() - d);
    pts.emplace_back(mid.x() + 2.0 * d, mid.y() - d);
    pts.emplace_back(mid.x(), mid.y() + 2.0 * d);

    std::vector<detail::DelaunayTri> tris;
    tris.push_back({s0, s1, s2});

    for (int pi = 0; pi < static_cast<int>(n); ++pi) {
        const Eigen::Vector2d& p = pts[pi];
        // cavity: every live triangle whose circumcircle strictly contains p
        std::vector<int> bad;
        for (int ti = 0; ti < static_cast<int>(tris.size()); ++ti) {
            if (!tris[ti].alive) continue;
            const auto& t = tris[ti];
            if (incircle_det(pts[t.a], pts[t.b], pts[t.c], p) > incircle_tol) bad.push_back(ti);
        }
        // boundary = edges appearing exactly once among cavity triangles
        std::vector<std::array<int, 2>> edges;
        for (int ti : bad) {
            const auto& t = tris[ti];
            edges.push_back({t.a, t.b});
            edges.push_back({t.b, t.c});
            edges.push_back({t.c, t.a});
            tris[ti].alive = false;
        }
        std::vector<std::array<int, 2>> boundary;
        for (const auto& e : edges) {
            bool shared = false;
            for (const auto& f : edges)
                if (e[0] == f[1] && e[1] == f[0]) {
                    shared = true;
                    break;
                }
            if (!shared) boundary.push_back(e);
        }
        for (const auto& e : boundary) {
            detail::DelaunayTri t{e[0], e[1], pi};
            if (signed_area(pts[t.a], pts[t.b], pts[t.c]) < 0.0) std::swap(t.b, t.c);
            tris.push_back(t);
        }
    }

    std::vector<std::array<int, 3>> result;
    for (const auto& t : tris) {
        if (!t.alive) continue;
        if (t.a >= s0 || t.b >= s0 || t.c >= s0) continue;
        if (std::abs(signed_area(pts[t.a], pts[t.b], pts[t.c])) <= area_tol) continue;
        result.push_back({t.a, t.b, t.c});
    }

    // cocircular tie-break: give the quad diagonal to the lowest vertex index
    bool flipped = true;
    int guard = 0;
    while (flipped && guard++ < 1000) {
        flipped = false;
        for (size_t i = 0; i < result.size() && !flipped; ++i) {
            for (size_t j = i + 1; j < result.size() && !flipped; ++j) {
                // shared edge (u,v) with opposite vertices (c0, c1)
                int shared[2], nshared = 0;
                for (int x : result[i])
                    for (int y : result[j])
                        if (x == y && nshared < 2) {
                            bool dup = nshared == 1 && shared[0] == x;
                            if (!dup) shared[nshared++] = x;
                        }
                if (nshared != 2) continue;
                auto opposite = [&](const std::array<int, 3>& t) {
                    for (int x : t)
                        if (x != shared[0] && x != shared[1]) return x;
                    return -1;
                };
                const int c0 = opposite(result[i]), c1 = opposite(result[j]);
                if (c0 < 0 || c1 < 0) continue;
                const Eigen::Vector2d &u = pts[shared[0]], &v = pts[shared[1]];
                const Eigen::Vector2d &q0 = pts[c0], &q1 = pts[c1];
                const double det = incircle_det(u, v, q0, q1) * (signed_area(u, v, q0) > 0 ? 1.0 : -1.0);
                const bool cocircular = std::abs(det) <= incircle_tol;
                if (!cocircular) continue;
                if (std::min(c0, c1) >= std::min(shared[0], shared[1])) continue;
                // flip only across a strictly convex quad
                const double sa = signed_area(q0, q1, u), sb = signed_area(q0, q1, v);
                if (!(sa * sb < 0.0)) continue;
                auto make = [&](int a, int b, int c) {
                    std::array<int, 3> t{a, b, c};
                    if (signed_area(pts[a], pts[b], pts[c]) < 0.0) std::swap(t[1], t[2]);
                    return t;
                };
                result[i] = make(c0, c1, shared[0]);
                result[j] = make(c0, c1, shared[1]);
                flipped = true;
            }
        }
    }

    // canonical form: lowest index first (keeping orientation), sorted list
    for (auto& t : result) {
        int k = 0;
        for (int i = 1; i < 3; ++i)
            if (t[i] < t[k]) k = i;
        std::array<int, 3> r{t[k], t[(k + 1) % 3], t[(k + 2) % 3]};
        t = r;
    }
    std::sort(result.begin(), result.end());

    TriangleMesh mesh;
    mesh.triangles = std::move(result);
    return mesh;
}

// Landmark file format: for each image one record of
//   <path>
//   <N>
//   <x> <y>          (N lines)
struct LandmarkRecord {
    std::string image_path;
    LandmarkSet landmarks;
};

inline std::vector<LandmarkRecord> read_landmark_file(std::istream& in) {
    std::vector<LandmarkRecord> records;
    std::string path;
    while (in >> path) {
        size_t n = 0;
        if (!(in >> n)) throw std::runtime_error("landmark file: missing point count after " + path);
        LandmarkRecord rec;
        rec.image_path = path;
        rec.landmarks.points.resize(n);
        for (size_t i = 0; i < n; ++i) {
            double x, y;
            if (!(in >> x >> y)) throw std::runtime_error("landmark file: truncated record for " + path);
            rec.landmarks.points[i] = {x, y};
        }
        records.push_back(std::move(rec));
    }
    return records;
}

inline void write_landmark_file(const std::vector<LandmarkRecord>& records, std::ostream& out) {
    out.precision(17);
    for (const auto& rec : records) {
        out << rec.image_path << '\n' << rec.landmarks.count() << '\n';
        for (const auto& p : rec.landmarks.points) out << p.x() << ' ' << p.y() << '\n';
    }
}

}  // namespace demorph
