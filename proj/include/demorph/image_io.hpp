#pragma once

#include "demorph/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace demorph {

// 8-bit RGB PNG round trip. Values are quantized to 8 bits on save, so
// load(save(img)) deviates by at most 1/255 per channel.
void save_png(const std::string& path, const std::vector<uint8_t>& rgb, int height, int width);
std::vector<uint8_t> load_png(const std::string& path, int& height, int& width);  // throws ImageIoError

struct ImageIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename Scalar>
void save_image(const std::string& path, const Tensor<Scalar>& img) {
    if (img.channels != 3) throw ImageIoError("save_image: expected 3 channels");
    std::vector<uint8_t> rgb(static_cast<size_t>(img.height) * img.width * 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const Scalar v = std::min(std::max(img.at(c, y, x), Scalar(0)), Scalar(1));
                rgb[(static_cast<size_t>(y) * img.width + x) * 3 + c] =
                    static_cast<uint8_t>(std::lround(static_cast<double>(v) * 255.0));
            }
    save_png(path, rgb, img.height, img.width);
}

template <typename Scalar>
Tensor<Scalar> load_image(const std::string& path) {
    int h = 0, w = 0;
    const std::vector<uint8_t> rgb = load_png(path, h, w);
    Tensor<Scalar> img(3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) = static_cast<Scalar>(rgb[(static_cast<size_t>(y) * w + x) * 3 + c]) / Scalar(255);
    return img;
}

}  // namespace demorph
