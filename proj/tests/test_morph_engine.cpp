#include "demorph/landmarks.hpp"
#include "demorph/morph.hpp"
#include "demorph/synthetic.hpp"
#include "demorph/warp.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace demorph;

namespace {

// brute-force Delaunay oracle: no point may lie strictly inside any
// triangle's circumcircle
bool empty_circumcircle_property(const LandmarkSet& lms, const TriangleMesh& mesh, double tol = 1e-7) {
    for (const auto& t : mesh.triangles) {
        Eigen::Vector2d a = lms.points[t[0]], b = lms.points[t[1]], c = lms.points[t[2]];
        if (signed_area(a, b, c) < 0) std::swap(b, c);
        for (size_t p = 0; p < lms.count(); ++p) {
            if (static_cast<int>(p) == t[0] || static_cast<int>(p) == t[1] || static_cast<int>(p) == t[2]) continue;
            if (incircle_det(a, b, c, lms.points[p]) > tol) return false;
        }
    }
    return true;
}

double hull_area(std::vector<Eigen::Vector2d> pts) {
    // Andrew monotone chain
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    std::vector<Eigen::Vector2d> hull(2 * pts.size());
    size_t k = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const size_t lower = k + 1;
    for (size_t i = pts.size() - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    double area = 0.0;
    for (size_t i = 0; i < hull.size(); ++i) {
        const auto& p = hull[i];
        const auto& q = hull[(i + 1) % hull.size()];
        area += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * std::abs(area);
}

double mesh_area(const LandmarkSet& lms, const TriangleMesh& mesh) {
    double area = 0.0;
    for (const auto& t : mesh.triangles)
        area += std::abs(signed_area(lms.points[t[0]], lms.points[t[1]], lms.points[t[2]]));
    return area;
}

LandmarkSet random_landmarks(int n, double w, double h, Rng& rng) {
    LandmarkSet lms;
    for (int i = 0; i < n; ++i) lms.points.emplace_back(rng.uniform(0.0, w), rng.uniform(0.0, h));
    return lms;
}

}  // namespace

TEST_SUITE("morph_engine") {

TEST_CASE("boundary augmentation appends corners and midpoints in fixed order") {
    LandmarkSet lms;
    Rng rng(3);
    for (int i = 0; i < 68; ++i) lms.points.emplace_back(rng.uniform(0, 256), rng.uniform(0, 256));
    const LandmarkSet out = augment_boundary_points(lms, 256, 256);
    CHECK(out.count() == 76);
    const Eigen::Vector2d expect[8] = {{0, 0}, {256, 0}, {0, 256}, {256, 256},
                                       {128, 0}, {0, 128}, {256, 128}, {128, 256}};
    for (int k = 0; k < 8; ++k) CHECK((out.points[68 + k] - expect[k]).norm() == 0.0);

    SUBCASE("2x2 frame corners present") {
        LandmarkSet small;
        small.points = {{0.5, 0.5}, {1.0, 0.5}, {0.5, 1.0}};
        const LandmarkSet aug = augment_boundary_points(small, 2, 2);
        for (const Eigen::Vector2d corner : {Eigen::Vector2d{0, 0}, {2, 0}, {0, 2}, {2, 2}}) {
            bool found = false;
            for (const auto& p : aug.points)
                if ((p - corner).norm() == 0.0) found = true;
            CHECK(found);
        }
    }
    SUBCASE("too few landmarks refused") {
        LandmarkSet empty;
        CHECK_THROWS_AS(augment_boundary_points(empty, 2, 2), std::invalid_argument);
    }
    SUBCASE("points outside the frame refused") {
        LandmarkSet bad;
        bad.points = {{-1.0, 0.0}, {1.0, 0.5}, {0.5, 1.0}};
        CHECK_THROWS_AS(augment_boundary_points(bad, 2, 2), std::invalid_argument);
    }
}

TEST_CASE("delaunay: minimal case") {
    LandmarkSet lms;
    lms.points = {{0, 0}, {4, 0}, {0, 3}};
    const TriangleMesh mesh = delaunay_triangulate(lms);
    REQUIRE(mesh.triangles.size() == 1);
    CHECK(mesh.triangles[0][0] == 0);
}

TEST_CASE("delaunay: unit square tie-break gives the diagonal to vertex 0") {
    LandmarkSet lms;
    lms.points = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    const TriangleMesh mesh = delaunay_triangulate(lms);
    REQUIRE(mesh.triangles.size() == 2);
    // both triangles share the 0-3 diagonal
    for (const auto& t : mesh.triangles) {
        CHECK(std::count(t.begin(), t.end(), 0) == 1);
        CHECK(std::count(t.begin(), t.end(), 3) == 1);
    }
    // brute force: both diagonal choices satisfy the (degenerate) circle
    // property, so the oracle must accept the tie-break result
    CHECK(empty_circumcircle_property(lms, mesh));
}

TEST_CASE("delaunay: circumcircle oracle on random point sets") {
    for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        Rng rng(seed);
        const LandmarkSet lms = random_landmarks(5 + static_cast<int>(seed), 64, 64, rng);
        const TriangleMesh mesh = delaunay_triangulate(lms);
        CHECK(empty_circumcircle_property(lms, mesh));
    }
}

TEST_CASE("delaunay: triangles partition the convex hull (<=30 points)") {
    for (uint64_t seed : {11u, 12u, 13u}) {
        Rng rng(seed);
        const int n = 10 + static_cast<int>(rng.uniform_int(0, 20));
        const LandmarkSet lms = random_landmarks(n, 100, 80, rng);
        const TriangleMesh mesh = delaunay_triangulate(lms);
        CHECK(empty_circumcircle_property(lms, mesh));
        CHECK(mesh_area(lms, mesh) == doctest::Approx(hull_area(lms.points)).epsilon(1e-9));
        // non-degenerate triangles only
        for (const auto& t : mesh.triangles)
            CHECK(std::abs(signed_area(lms.points[t[0]], lms.points[t[1]], lms.points[t[2]])) > 0.0);
    }
}

TEST_CASE("delaunay: determinism and collinear rejection") {
    Rng rng(77);
    const LandmarkSet lms = random_landmarks(12, 50, 50, rng);
    const TriangleMesh a = delaunay_triangulate(lms);
    const TriangleMesh b = delaunay_triangulate(lms);
    CHECK(a.triangles == b.triangles);

    LandmarkSet line;
    line.points = {{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    CHECK_THROWS_AS(delaunay_triangulate(line), std::invalid_argument);
}

TEST_CASE("warp: identity landmarks reproduce the image") {
    Rng rng(8);
    const auto face = make_synthetic_face<float>(1234, 32);
    const LandmarkSet aug = augment_boundary_points(face.landmarks, 32, 32);
    const TriangleMesh mesh = delaunay_triangulate(aug);
    const Tensor<float> warped = warp_piecewise_affine(face.image, aug, aug, mesh);
    CHECK(max_abs_diff(warped, face.image) <= 1.0f / 255.0f);
}

TEST_CASE("warp: constant image stays constant under any warp") {
    Rng rng(9);
    const Tensor<float> img = Tensor<float>::constant(3, 24, 24, 0.63f);
    const LandmarkSet src = augment_boundary_points(random_landmarks(6, 24, 24, rng), 24, 24);
    const LandmarkSet dst = augment_boundary_points(random_landmarks(6, 24, 24, rng), 24, 24);
    const TriangleMesh mesh = delaunay_triangulate(dst);
    const Tensor<float> warped = warp_piecewise_affine(img, src, dst, mesh);
    CHECK(max_abs_diff(warped, img) < 1e-6f);
}

TEST_CASE("warp: single-triangle rotation moves a marker to hand-computed coordinates") {
    // map T with T(0,0)=(7,0), T(7,0)=(7,7), T(0,7)=(0,0): T(x,y) = (7-y, x)
    Tensor<float> img(3, 8, 8);
    img.at(0, 1, 2) = 1.0f;  // marker at (x=2, y=1)
    img.at(0, 1, 3) = 1.0f;  // marker at (x=3, y=1)
    LandmarkSet src, dst;
    src.points = {{0, 0}, {7, 0}, {0, 7}};
    dst.points = {{7, 0}, {7, 7}, {0, 0}};
    TriangleMesh mesh;
    mesh.triangles = {{0, 1, 2}};
    const Tensor<float> out = warp_piecewise_affine(img, src, dst, mesh);
    // T(2,1) = (6,2); T(3,1) = (6,3)
    CHECK(out.at(0, 2, 6) == doctest::Approx(1.0f));
    CHECK(out.at(0, 3, 6) == doctest::Approx(1.0f));
    CHECK(out.at(0, 1, 2) == doctest::Approx(0.0f));  // inside dst triangle, pulled from empty src
}

TEST_CASE("warp: landmark count mismatch rejected") {
    const Tensor<float> img(3, 8, 8);
    LandmarkSet a, b;
    a.points = {{0, 0}, {7, 0}, {0, 7}};
    b.points = {{0, 0}, {7, 0}, {0, 7}, {7, 7}};
    TriangleMesh mesh;
    mesh.triangles = {{0, 1, 2}};
    CHECK_THROWS_AS(warp_piecewise_affine(img, a, b, mesh), std::invalid_argument);
    TriangleMesh bad;
    bad.triangles = {{0, 1, 9}};
    CHECK_THROWS_AS(warp_piecewise_affine(img, a, a, bad), std::invalid_argument);
}

TEST_CASE("morph_pair: self-morph is the identity") {
    const auto face = make_synthetic_face<float>(999, 32);
    const Tensor<float> m = morph_pair(face.image, face.landmarks, face.image, face.landmarks, 0.5);
    CHECK(max_abs_diff(m, face.image) <= 1.0f / 255.0f);
}

TEST_CASE("morph_pair: constant images blend linearly") {
    const auto face = make_synthetic_face<float>(1000, 16);
    const Tensor<float> black(3, 16, 16);
    const Tensor<float> white = Tensor<float>::constant(3, 16, 16, 1.0f);
    const Tensor<float> m = morph_pair(black, face.landmarks, white, face.landmarks, 0.5);
    CHECK(max_abs_diff(m, Tensor<float>::constant(3, 16, 16, 0.5f)) < 1e-6f);
}

TEST_CASE("morph_pair: alpha=0 with shared landmarks returns the first image") {
    const auto fa = make_synthetic_face<float>(1, 32);
    const auto fb = make_synthetic_face<float>(2, 32);
    const Tensor<float> m = morph_pair(fa.image, fa.landmarks, fb.image, fa.landmarks, 0.0);
    CHECK(max_abs_diff(m, fa.image) <= 1.0f / 255.0f);
}

TEST_CASE("morph_pair: blend symmetry and range preservation") {
    for (uint64_t seed : {100u, 200u, 300u}) {
        const auto fa = make_synthetic_face<float>(seed, 32);
        const auto fb = make_synthetic_face<float>(seed + 50, 32);
        for (double alpha : {0.3, 0.5}) {
            const Tensor<float> m1 = morph_pair(fa.image, fa.landmarks, fb.image, fb.landmarks, alpha);
            const Tensor<float> m2 = morph_pair(fb.image, fb.landmarks, fa.image, fa.landmarks, 1.0 - alpha);
            CHECK(max_abs_diff(m1, m2) <= 1.0f / 255.0f);
            CHECK(m1.data.minCoeff() >= 0.0f);
            CHECK(m1.data.maxCoeff() <= 1.0f);
        }
    }
}

TEST_CASE("morph_pair: contract errors") {
    const auto fa = make_synthetic_face<float>(5, 32);
    const auto fb = make_synthetic_face<float>(6, 16);
    CHECK_THROWS_AS(morph_pair(fa.image, fa.landmarks, fb.image, fb.landmarks, 0.5), std::invalid_argument);
    const auto fc = make_synthetic_face<float>(7, 32);
    LandmarkSet fewer = fc.landmarks;
    fewer.points.pop_back();
    CHECK_THROWS_AS(morph_pair(fa.image, fa.landmarks, fc.image, fewer, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(morph_pair(fa.image, fa.landmarks, fc.image, fc.landmarks, 1.5), std::invalid_argument);
}

TEST_CASE("landmark file round trip") {
    std::vector<LandmarkRecord> records(2);
    records[0].image_path = "faces/a.png";
    records[0].landmarks.points = {{1.5, 2.25}, {3, 4}, {5, 6}};
    records[1].image_path = "faces/b.png";
    records[1].landmarks.points = {{0, 0}, {10, 0}, {0, 10}, {10, 10}};
    std::stringstream buf;
    write_landmark_file(records, buf);
    const auto back = read_landmark_file(buf);
    REQUIRE(back.size() == 2);
    CHECK(back[0].image_path == "faces/a.png");
    CHECK(back[0].landmarks.count() == 3);
    CHECK(back[0].landmarks.points[0].x() == 1.5);
    CHECK(back[1].landmarks.count() == 4);
}

}  // TEST_SUITE
