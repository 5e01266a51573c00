#pragma once

#include "demorph/landmarks.hpp"
#include "demorph/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace demorph {

// Piecewise-affine warp: each mesh triangle of `dst` is rasterized in the
// output frame and its pixels are pulled from the corresponding `src`
// triangle via barycentric transfer with bilinear sampling (edge clamp).
// Pixels not covered by any triangle are copied from the source image.
// Pixel (row y, col x) sits at continuous coordinate (x, y).
template <typename Scalar>
Tensor<Scalar> warp_piecewise_affine(const Tensor<Scalar>& image, const LandmarkSet& src, const LandmarkSet& dst,
                                     const TriangleMesh& mesh) {
    if (src.count() != dst.count()) throw std::invalid_argument("warp_piecewise_affine: landmark count mismatch");
    for (const auto& t : mesh.triangles)
        for (int v : t)
            if (v < 0 || v >= static_cast<int>(src.count()))
                throw std::invalid_argument("warp_piecewise_affine: mesh index out of range");

    Tensor<Scalar> out = image;  // uncovered pixels keep source values
    std::vector<unsigned char> filled(static_cast<size_t>(image.height) * image.width, 0);
    const double eps = 1e-9;

    for (const auto& tri : mesh.triangles) {
        const Eigen::Vector2d d0 = dst.points[tri[0]], d1 = dst.points[tri[1]], d2 = dst.points[tri[2]];
        const Eigen::Vector2d s0 = src.points[tri[0]], s1 = src.points[tri[1]], s2 = src.points[tri[2]];
        const double denom = (d1.y() - d2.y()) * (d0.x() - d2.x()) + (d2.x() - d1.x()) * (d0.y() - d2.y());
        if (std::abs(denom) < 1e-12) continue;  // degenerate in dst frame

        const int x_lo = std::max(0, static_cast<int>(std::floor(std::min({d0.x(), d1.x(), d2.x()}))));
        const int x_hi = std::min(image.width - 1, static_cast<int>(std::ceil(std::max({d0.x(), d1.x(), d2.x()}))));
        const int y_lo = std::max(0, static_cast<int>(std::floor(std::min({d0.y(), d1.y(), d2.y()}))));
        const int y_hi = std::min(image.height - 1, static_cast<int>(std::ceil(std::max({d0.y(), d1.y(), d2.y()}))));

        for (int y = y_lo; y <= y_hi; ++y) {
            for (int x = x_lo; x <= x_hi; ++x) {
                const double w0 = ((d1.y() - d2.y()) * (x - d2.x()) + (d2.x() - d1.x()) * (y - d2.y())) / denom;
                const double w1 = ((d2.y() - d0.y()) * (x - d2.x()) + (d0.x() - d2.x()) * (y - d2.y())) / denom;
                const double w2 = 1.0 - w0 - w1;
                if (w0 < -eps || w1 < -eps || w2 < -eps) continue;
                unsigned char& f = filled[static_cast<size_t>(y) * image.width + x];
                if (f) continue;  // shared edges: first triangle in mesh order wins
                f = 1;
                const double sx = w0 * s0.x() + w1 * s1.x() + w2 * s2.x();
                const double sy = w0 * s0.y() + w1 * s1.y() + w2 * s2.y();
                for (int c = 0; c < image.channels; ++c)
                    out.at(c, y, x) = sample_bilinear(image, c, static_cast<Scalar>(sx), static_cast<Scalar>(sy));
            }
        }
    }
    return out;
}

}  // namespace demorph
