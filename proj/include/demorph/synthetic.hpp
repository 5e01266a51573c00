#pragma once

#include "demorph/landmarks.hpp"
#include "demorph/rng.hpp"
#include "demorph/tensor.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace demorph {

// Procedural face-like images: ellipse head on a plain background with eyes,
// nose and mouth. Geometry and palette are drawn from the identity seed, so
// identities are visually distinct and every image is reproducible with zero
// external assets. Landmark order (fixed):
//   0 left eye, 1 right eye, 2 nose tip, 3 mouth center, 4 mouth left,
//   5 mouth right, 6..13 face ellipse boundary at 45-degree steps.
namespace synth {

inline std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
    h = h - std::floor(h);
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1) { r = c; g = x; }
    else if (hp < 2) { r = x; g = c; }
    else if (hp < 3) { g = c; b = x; }
    else if (hp < 4) { g = x; b = c; }
    else if (hp < 5) { r = x; b = c; }
    else { r = c; b = x; }
    const double m = v - c;
    return {r + m, g + m, b + m};
}

struct FaceParams {
    double cx, cy, ax, ay;            // head ellipse (fractions of resolution)
    double eye_dx, eye_y, eye_r;      // eyes
    double nose_y, nose_r;
    double mouth_y, mouth_w, mouth_h;
    std::array<double, 3> bg, skin, eye, pupil, mouth, nose;
};

inline FaceParams face_params(uint64_t identity_seed) {
    Rng rng(identity_seed);
    FaceParams p;
    p.cx = 0.5 + rng.uniform(-0.04, 0.04);
    p.cy = 0.52 + rng.uniform(-0.03, 0.03);
    p.ax = rng.uniform(0.26, 0.36);
    p.ay = rng.uniform(0.34, 0.44);
    p.eye_dx = rng.uniform(0.10, 0.16);
    p.eye_y = p.cy - rng.uniform(0.08, 0.14);
    p.eye_r = rng.uniform(0.030, 0.055);
    p.nose_y = p.cy + rng.uniform(0.00, 0.06);
    p.nose_r = rng.uniform(0.025, 0.045);
    p.mouth_y = p.cy + rng.uniform(0.16, 0.24);
    p.mouth_w = rng.uniform(0.10, 0.18);
    p.mouth_h = rng.uniform(0.025, 0.05);
    const double bg_h = rng.uniform(), skin_h = rng.uniform();
    p.bg = hsv_to_rgb(bg_h, rng.uniform(0.25, 0.7), rng.uniform(0.25, 0.9));
    p.skin = hsv_to_rgb(skin_h, rng.uniform(0.25, 0.8), rng.uniform(0.45, 0.95));
    p.eye = hsv_to_rgb(rng.uniform(), rng.uniform(0.1, 0.4), rng.uniform(0.85, 1.0));
    p.pupil = hsv_to_rgb(rng.uniform(), rng.uniform(0.5, 1.0), rng.uniform(0.05, 0.3));
    p.mouth = hsv_to_rgb(rng.uniform(0.9, 1.05), rng.uniform(0.5, 0.9), rng.uniform(0.3, 0.8));
    p.nose = hsv_to_rgb(skin_h, rng.uniform(0.3, 0.9), rng.uniform(0.2, 0.5));
    return p;
}

// ~1px anti-aliased ellipse coverage
inline double ellipse_alpha(double x, double y, double cx, double cy, double ax, double ay) {
    const double qx = (x - cx) / ax, qy = (y - cy) / ay;
    const double q = std::sqrt(qx * qx + qy * qy);
    const double d = (q - 1.0) * std::min(ax, ay);
    return std::min(1.0, std::max(0.0, 0.5 - d));
}

}  // namespace synth

template <typename Scalar>
struct SyntheticFace {
    Tensor<Scalar> image;    // 3 x R x R in [0,1]
    LandmarkSet landmarks;   // 14 points, fixed order
    // analytic face bounding box, usable in place of a detector
    double box_x0, box_y0, box_x1, box_y1;
};

template <typename Scalar>
SyntheticFace<Scalar> make_synthetic_face(uint64_t identity_seed, int resolution) {
    const synth::FaceParams p = synth::face_params(identity_seed);
    const double R = resolution;

    SyntheticFace<Scalar> face;
    face.image = Tensor<Scalar>(3, resolution, resolution);
    Tensor<Scalar>& img = face.image;

    auto blend = [&](int y, int x, const std::array<double, 3>& col, double a) {
        if (a <= 0.0) return;
        for (int c = 0; c < 3; ++c)
            img.at(c, y, x) = static_cast<Scalar>((1.0 - a) * img.at(c, y, x) + a * col[c]);
    };

    for (int y = 0; y < resolution; ++y) {
        for (int x = 0; x < resolution; ++x) {
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = static_cast<Scalar>(p.bg[c]);
            const double px = x, py = y;
            blend(y, x, p.skin, synth::ellipse_alpha(px, py, p.cx * R, p.cy * R, p.ax * R, p.ay * R));
            for (int side = -1; side <= 1; side += 2) {
                const double ex = (p.cx + side * p.eye_dx) * R;
                blend(y, x, p.eye, synth::ellipse_alpha(px, py, ex, p.eye_y * R, p.eye_r * R, p.eye_r * R));
                blend(y, x, p.pupil, synth::ellipse_alpha(px, py, ex, p.eye_y * R, p.eye_r * R * 0.45, p.eye_r * R * 0.45));
            }
            blend(y, x, p.nose, synth::ellipse_alpha(px, py, p.cx * R, p.nose_y * R, p.nose_r * R * 0.7, p.nose_r * R));
            blend(y, x, p.mouth, synth::ellipse_alpha(px, py, p.cx * R, p.mouth_y * R, p.mouth_w * R, p.mouth_h * R));
        }
    }

    auto& pts = face.landmarks.points;
    pts.emplace_back((p.cx - p.eye_dx) * R, p.eye_y * R);
    pts.emplace_back((p.cx + p.eye_dx) * R, p.eye_y * R);
    pts.emplace_back(p.cx * R, p.nose_y * R);
    pts.emplace_back(p.cx * R, p.mouth_y * R);
    pts.emplace_back((p.cx - p.mouth_w) * R, p.mouth_y * R);
    pts.emplace_back((p.cx + p.mouth_w) * R, p.mouth_y * R);
    for (int k = 0; k < 8; ++k) {
        const double ang = k * (3.14159265358979323846 / 4.0);
        double lx = p.cx * R + std::cos(ang) * p.ax * R;
        double ly = p.cy * R + std::sin(ang) * p.ay * R;
        // keep landmarks inside the frame even for off-center heads
        lx = std::min(std::max(lx, 0.0), R);
        ly = std::min(std::max(ly, 0.0), R);
        pts.emplace_back(lx, ly);
    }

    face.box_x0 = std::max(0.0, (p.cx - p.ax) * R);
    face.box_y0 = std::max(0.0, (p.cy - p.ay) * R);
    face.box_x1 = std::min(R, (p.cx + p.ax) * R);
    face.box_y1 = std::min(R, (p.cy + p.ay) * R);
    return face;
}

template <typename Scalar>
struct PoolEntry {
    std::string identity;
    Tensor<Scalar> image;
    LandmarkSet landmarks;
};

template <typename Scalar>
std::vector<PoolEntry<Scalar>> make_synthetic_pool(int n_identities, int resolution, uint64_t seed) {
    std::vector<PoolEntry<Scalar>> pool;
    pool.reserve(n_identities);
    for (int i = 0; i < n_identities; ++i) {
        SyntheticFace<Scalar> f = make_synthetic_face<Scalar>(derive_seed(seed, 0x5f0e + i), resolution);
        char label[32];
        std::snprintf(label, sizeof(label), "synth_%03d", i);
        pool.push_back({label, std::move(f.image), std::move(f.landmarks)});
    }
    return pool;
}

}  // namespace demorph
