#pragma once

#include "demorph/landmarks.hpp"
#include "demorph/tensor.hpp"
#include "demorph/warp.hpp"

#include <stdexcept>

namespace demorph {

// Landmark morph: blend the (boundary-augmented) landmark sets, warp both
// images onto the blended geometry and alpha-blend the result. Blending and
// bilinear sampling are convex combinations, so [0,1] inputs stay in [0,1].
template <typename Scalar>
Tensor<Scalar> morph_pair(const Tensor<Scalar>& img_a, const LandmarkSet& lms_a, const Tensor<Scalar>& img_b,
                          const LandmarkSet& lms_b, double alpha = 0.5) {
    if (!img_a.same_shape(img_b)) throw std::invalid_argument("morph_pair: image dimension mismatch");
    if (lms_a.count() != lms_b.count()) throw std::invalid_argument("morph_pair: landmark count mismatch");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("morph_pair: alpha must be in [0,1]");

    const double w = img_a.width, h = img_a.height;
    const LandmarkSet aug_a = augment_boundary_points(lms_a, w, h);
    const LandmarkSet aug_b = augment_boundary_points(lms_b, w, h);

    LandmarkSet blended;
    blended.points.reserve(aug_a.count());
    for (size_t k = 0; k < aug_a.count(); ++k)
        blended.points.push_back((1.0 - alpha) * aug_a.points[k] + alpha * aug_b.points[k]);

    const TriangleMesh mesh = delaunay_triangulate(blended);
    const Tensor<Scalar> wa = warp_piecewise_affine(img_a, aug_a, blended, mesh);
    const Tensor<Scalar> wb = warp_piecewise_affine(img_b, aug_b, blended, mesh);

    Tensor<Scalar> out = wa;
    out.data = wa.data * static_cast<Scalar>(1.0 - alpha) + wb.data * static_cast<Scalar>(alpha);
    return out;
}

}  // namespace demorph
