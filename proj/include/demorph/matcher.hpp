#pragma once

#include "demorph/tensor.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>

namespace demorph {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unit-L2 face embedding; similarity is cosine, i.e. the plain dot product.
struct Embedding {
    Eigen::VectorXd v;
};

inline double similarity(const Embedding& a, const Embedding& b) {
    if (a.v.size() != b.v.size()) throw std::invalid_argument("similarity: embedding dimension mismatch");
    return a.v.dot(b.v);
}

inline Embedding normalized_embedding(Eigen::VectorXd v) {
    const double n = v.norm();
    if (n < 1e-12) {
        // degenerate input (e.g. constant image): fixed fallback direction
        v.setZero();
        v[0] = 1.0;
        return {v};
    }
    return {v / n};
}

// 8x8 grayscale thumbnail features: the shared front end of the asset-free
// matchers below.
template <typename Scalar>
Eigen::VectorXd thumbnail_features(const Tensor<Scalar>& img) {
    if (img.channels != 3) throw std::invalid_argument("thumbnail_features: expected a 3-channel image");
    const Tensor<Scalar> small = resize_bilinear(img, 8, 8);
    Eigen::VectorXd f(64);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            f[y * 8 + x] = (static_cast<double>(small.at(0, y, x)) + static_cast<double>(small.at(1, y, x)) +
                            static_cast<double>(small.at(2, y, x))) / 3.0;
    f.array() -= f.mean();
    return f;
}

// Deterministic toy embedding: downsample to 8x8 grayscale, subtract the
// mean, L2-normalize. Dimension 64. Lets the whole pipeline run and be
// tested without any external model weights.
template <typename Scalar>
Embedding toy_embed(const Tensor<Scalar>& img) {
    return normalized_embedding(thumbnail_features(img));
}

class MatcherBackend {
   public:
    virtual ~MatcherBackend() = default;
    virtual std::string name() const = 0;
    virtual int dimension() const = 0;
    virtual Embedding embed(const Tensor<float>& image) const = 0;
};

class ToyMatcher final : public MatcherBackend {
   public:
    std::string name() const override { return "toy"; }
    int dimension() const override { return 64; }
    Embedding embed(const Tensor<float>& image) const override { return toy_embed(image); }
};

// File-backed linear projection over the thumbnail features. This is the
// stand-in for external embedding models (AdaFace/ArcFace style backends are
// loaded the same way: weights come from a declared model file, never bundled).
// Model file: JSON {"dimension": D, "matrix": [D*64 row-major doubles]}.
class LinearProjectionMatcher final : public MatcherBackend {
   public:
    explicit LinearProjectionMatcher(const std::string& model_path) {
        if (!std::filesystem::exists(model_path))
            throw ConfigError("matcher model file not found: " + model_path);
        std::ifstream in(model_path);
        nlohmann::json j;
        in >> j;
        dim_ = j.at("dimension").get<int>();
        const auto m = j.at("matrix").get<std::vector<double>>();
        if (dim_ < 1 || m.size() != static_cast<size_t>(dim_) * 64)
            throw ConfigError("matcher model file malformed: " + model_path);
        mat_.resize(dim_, 64);
        for (int r = 0; r < dim_; ++r)
            for (int c = 0; c < 64; ++c) mat_(r, c) = m[static_cast<size_t>(r) * 64 + c];
    }

    std::string name() const override { return "linear"; }
    int dimension() const override { return dim_; }
    Embedding embed(const Tensor<float>& image) const override {
        return normalized_embedding(mat_ * thumbnail_features(image));
    }

   private:
    int dim_ = 0;
    Eigen::MatrixXd mat_;
};

// Embeds through a backend and re-normalizes, so every backend obeys the
// unit-norm cosine convention regardless of its raw output scale.
inline Embedding external_embed(const Tensor<float>& image, const MatcherBackend& backend) {
    return normalized_embedding(backend.embed(image).v);
}

// Registry: backends are looked up by config name. External backends load
// from the declared model file and fail at startup, not mid-run.
inline std::unique_ptr<MatcherBackend> make_backend(const std::string& name, const std::string& model_path = "") {
    if (name == "toy") return std::make_unique<ToyMatcher>();
    if (name == "linear") return std::make_unique<LinearProjectionMatcher>(model_path);
    throw ConfigError("unknown matcher backend: " + name);
}

}  // namespace demorph
