#pragma once

#include <Eigen/Core>

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace demorph {

// Planar C x H x W tensor. Each channel plane is stored row-major and
// contiguous, so plane(c) maps directly onto Eigen expressions.
// Index layout: data[(c*H + y)*W + x].
template <typename Scalar>
struct Tensor {
    using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    using PlaneMap = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>;
    using ConstPlaneMap = Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>;

    int channels = 0;
    int height = 0;
    int width = 0;
    Array data;

    Tensor() = default;
    Tensor(int c, int h, int w) : channels(c), height(h), width(w), data(Array::Zero(static_cast<Eigen::Index>(c) * h * w)) {}

    static Tensor constant(int c, int h, int w, Scalar v) {
        Tensor t(c, h, w);
        t.data.setConstant(v);
        return t;
    }

    Eigen::Index size() const { return data.size(); }
    bool empty() const { return data.size() == 0; }
    bool same_shape(const Tensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    Scalar& at(int c, int y, int x) {
        assert(c >= 0 && c < channels && y >= 0 && y < height && x >= 0 && x < width);
        return data[(static_cast<Eigen::Index>(c) * height + y) * width + x];
    }
    Scalar at(int c, int y, int x) const {
        assert(c >= 0 && c < channels && y >= 0 && y < height && x >= 0 && x < width);
        return data[(static_cast<Eigen::Index>(c) * height + y) * width + x];
    }

    PlaneMap plane(int c) {
        return PlaneMap(data.data() + static_cast<Eigen::Index>(c) * height * width, static_cast<Eigen::Index>(height) * width);
    }
    ConstPlaneMap plane(int c) const {
        return ConstPlaneMap(data.data() + static_cast<Eigen::Index>(c) * height * width, static_cast<Eigen::Index>(height) * width);
    }

    bool all_finite() const { return data.isFinite().all(); }
};

template <typename Scalar>
Tensor<Scalar> operator+(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
    assert(a.same_shape(b));
    Tensor<Scalar> r = a;
    r.data += b.data;
    return r;
}

template <typename Scalar>
Tensor<Scalar> operator-(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
    assert(a.same_shape(b));
    Tensor<Scalar> r = a;
    r.data -= b.data;
    return r;
}

template <typename Scalar>
Tensor<Scalar> operator*(Scalar s, const Tensor<Scalar>& a) {
    Tensor<Scalar> r = a;
    r.data *= s;
    return r;
}

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& a) {
    Tensor<To> r(a.channels, a.height, a.width);
    r.data = a.data.template cast<To>();
    return r;
}

template <typename Scalar>
Tensor<Scalar> clamp(const Tensor<Scalar>& a, Scalar lo, Scalar hi) {
    Tensor<Scalar> r = a;
    r.data = r.data.cwiseMax(lo).cwiseMin(hi);
    return r;
}

template <typename Scalar>
Scalar max_abs(const Tensor<Scalar>& a) {
    return a.size() == 0 ? Scalar(0) : a.data.abs().maxCoeff();
}

template <typename Scalar>
Scalar max_abs_diff(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
    assert(a.same_shape(b));
    return a.size() == 0 ? Scalar(0) : (a.data - b.data).abs().maxCoeff();
}

template <typename Scalar>
Scalar mean_sq_diff(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
    assert(a.same_shape(b));
    return a.size() == 0 ? Scalar(0) : (a.data - b.data).square().mean();
}

// Stacks tensors along the channel axis; all inputs must share H, W.
template <typename Scalar>
Tensor<Scalar> concat_channels(const std::vector<const Tensor<Scalar>*>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
    int h = parts[0]->height, w = parts[0]->width, c = 0;
    for (const auto* p : parts) {
        if (p->height != h || p->width != w) throw std::invalid_argument("concat_channels: spatial mismatch");
        c += p->channels;
    }
    Tensor<Scalar> r(c, h, w);
    Eigen::Index off = 0;
    for (const auto* p : parts) {
        r.data.segment(off, p->data.size()) = p->data;
        off += p->data.size();
    }
    return r;
}

template <typename Scalar>
Tensor<Scalar> concat_channels(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
    return concat_channels<Scalar>({&a, &b});
}

template <typename Scalar>
Tensor<Scalar> slice_channels(const Tensor<Scalar>& a, int first, int count) {
    assert(first >= 0 && count >= 0 && first + count <= a.channels);
    Tensor<Scalar> r(count, a.height, a.width);
    r.data = a.data.segment(static_cast<Eigen::Index>(first) * a.height * a.width,
                            static_cast<Eigen::Index>(count) * a.height * a.width);
    return r;
}

// Bilinear sample of one channel at continuous pixel coordinates, clamped at
// the border. Coordinates are in pixel-index units: (x, y) = (col, row).
template <typename Scalar>
Scalar sample_bilinear(const Tensor<Scalar>& img, int c, Scalar x, Scalar y) {
    const Scalar xm = static_cast<Scalar>(img.width - 1);
    const Scalar ym = static_cast<Scalar>(img.height - 1);
    x = std::min(std::max(x, Scalar(0)), xm);
    y = std::min(std::max(y, Scalar(0)), ym);
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const Scalar fx = x - static_cast<Scalar>(x0);
    const Scalar fy = y - static_cast<Scalar>(y0);
    const Scalar v00 = img.at(c, y0, x0), v01 = img.at(c, y0, x1);
    const Scalar v10 = img.at(c, y1, x0), v11 = img.at(c, y1, x1);
    return (Scalar(1) - fy) * ((Scalar(1) - fx) * v00 + fx * v01) + fy * ((Scalar(1) - fx) * v10 + fx * v11);
}

// Bilinear resize of all channels to new spatial dims.
template <typename Scalar>
Tensor<Scalar> resize_bilinear(const Tensor<Scalar>& img, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("resize_bilinear: bad output size");
    if (out_h == img.height && out_w == img.width) return img;
    Tensor<Scalar> r(img.channels, out_h, out_w);
    const Scalar sy = static_cast<Scalar>(img.height) / static_cast<Scalar>(out_h);
    const Scalar sx = static_cast<Scalar>(img.width) / static_cast<Scalar>(out_w);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < out_h; ++y)
            for (int x = 0; x < out_w; ++x) {
                // align sample positions to pixel centers
                const Scalar srcy = (static_cast<Scalar>(y) + Scalar(0.5)) * sy - Scalar(0.5);
                const Scalar srcx = (static_cast<Scalar>(x) + Scalar(0.5)) * sx - Scalar(0.5);
                r.at(c, y, x) = sample_bilinear(img, c, srcx, srcy);
            }
    return r;
}

// [0,1] image range <-> [-1,1] model range.
template <typename Scalar>
Tensor<Scalar> to_model_range(const Tensor<Scalar>& img01) {
    Tensor<Scalar> r = img01;
    r.data = r.data * Scalar(2) - Scalar(1);
    return r;
}

template <typename Scalar>
Tensor<Scalar> from_model_range(const Tensor<Scalar>& imgpm1) {
    Tensor<Scalar> r = imgpm1;
    r.data = ((r.data + Scalar(1)) * Scalar(0.5)).cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
    return r;
}

}  // namespace demorph
