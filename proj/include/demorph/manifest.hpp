#pragma once

#include "demorph/image_io.hpp"
#include "demorph/morph.hpp"
#include "demorph/rng.hpp"
#include "demorph/synthetic.hpp"
#include "demorph/tensor.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace demorph {

using ordered_json = nlohmann::ordered_json;

enum class Split { train, test, excluded };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::test: return "test";
        default: return "excluded";
    }
}

inline Split split_from_name(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    if (s == "excluded") return Split::excluded;
    throw std::invalid_argument("unknown split label: " + s);
}

// Provenance triple for one morph plus its split membership.
struct MorphRecord {
    std::string morph_path;
    std::string id_a, id_b;
    std::string path_a, path_b;
    std::string technique;
    Split split = Split::train;
};

struct Manifest {
    std::vector<MorphRecord> records;
    std::vector<std::string> train_identities;
    std::vector<std::string> test_identities;
    uint64_t seed = 0;
    int resolution = 0;
    std::string technique;
    ordered_json config_echo;  // audit trail: full config of the producing run
};

// --- JSONL serialization: one metadata header line, then one record per line.

inline ordered_json record_to_json(const MorphRecord& r) {
    ordered_json j;
    j["type"] = "record";
    j["morph_path"] = r.morph_path;
    j["id_a"] = r.id_a;
    j["id_b"] = r.id_b;
    j["path_a"] = r.path_a;
    j["path_b"] = r.path_b;
    j["technique"] = r.technique;
    j["split"] = split_name(r.split);
    return j;
}

inline MorphRecord record_from_json(const ordered_json& j) {
    MorphRecord r;
    r.morph_path = j.at("morph_path").get<std::string>();
    r.id_a = j.at("id_a").get<std::string>();
    r.id_b = j.at("id_b").get<std::string>();
    r.path_a = j.at("path_a").get<std::string>();
    r.path_b = j.at("path_b").get<std::string>();
    r.technique = j.at("technique").get<std::string>();
    r.split = split_from_name(j.at("split").get<std::string>());
    return r;
}

inline void save_manifest(const Manifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_manifest: cannot open " + path);
    ordered_json header;
    header["type"] = "manifest_header";
    header["seed"] = m.seed;
    header["resolution"] = m.resolution;
    header["technique"] = m.technique;
    header["identity_sets"] = {{"train", m.train_identities}, {"test", m.test_identities}};
    header["config"] = m.config_echo;
    out << header.dump() << '\n';
    for (const auto& r : m.records) out << record_to_json(r).dump() << '\n';
}

inline Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_manifest: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_manifest: empty file " + path);
    ordered_json header = ordered_json::parse(line);
    if (header.value("type", "") != "manifest_header")
        throw std::runtime_error("load_manifest: missing header line in " + path);
    Manifest m;
    m.seed = header.at("seed").get<uint64_t>();
    m.resolution = header.at("resolution").get<int>();
    m.technique = header.at("technique").get<std::string>();
    m.train_identities = header.at("identity_sets").at("train").get<std::vector<std::string>>();
    m.test_identities = header.at("identity_sets").at("test").get<std::vector<std::string>>();
    if (header.contains("config")) m.config_echo = header["config"];
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        m.records.push_back(record_from_json(ordered_json::parse(line)));
    }
    return m;
}

// --- Face preprocessing.

struct FaceBox {
    double x0, y0, x1, y1;
};

template <typename Scalar>
using DetectFn = std::function<std::optional<FaceBox>(const Tensor<Scalar>&)>;

// Crop the face region and resize to resolution x resolution. Returns nullopt
// when the detector finds no face (the record is discarded upstream and
// counted in the discard tally); I/O problems surface as exceptions instead.
template <typename Scalar>
std::optional<Tensor<Scalar>> crop_and_normalize(const Tensor<Scalar>& image, const std::optional<FaceBox>& box,
                                                 const DetectFn<Scalar>& detector, int resolution) {
    if (resolution < 8) throw std::invalid_argument("crop_and_normalize: resolution too small");
    std::optional<FaceBox> b = box;
    if (!b) {
        if (!detector) throw std::invalid_argument("crop_and_normalize: need a face box or a detector");
        b = detector(image);
        if (!b) return std::nullopt;
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(b->x0)));
    const int y0 = std::max(0, static_cast<int>(std::floor(b->y0)));
    const int x1 = std::min(image.width, static_cast<int>(std::ceil(b->x1)));
    const int y1 = std::min(image.height, static_cast<int>(std::ceil(b->y1)));
    if (x1 - x0 < 2 || y1 - y0 < 2) return std::nullopt;
    Tensor<Scalar> crop(image.channels, y1 - y0, x1 - x0);
    for (int c = 0; c < image.channels; ++c)
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) crop.at(c, y - y0, x - x0) = image.at(c, y, x);
    Tensor<Scalar> out = resize_bilinear(crop, resolution, resolution);
    out.data = out.data.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
    return out;
}

// Toy detector: bounding box of pixels deviating from the frame-corner color.
// Good enough for synthetic faces; real detectors plug in as DetectFn.
template <typename Scalar>
std::optional<FaceBox> blob_face_detector(const Tensor<Scalar>& img, double tol = 0.12, int min_pixels = 16) {
    std::array<double, 3> corner{};
    const int H = img.height, W = img.width;
    for (int c = 0; c < std::min(3, img.channels); ++c)
        corner[c] = 0.25 * (static_cast<double>(img.at(c, 0, 0)) + img.at(c, 0, W - 1) + img.at(c, H - 1, 0) +
                            img.at(c, H - 1, W - 1));
    int x0 = W, y0 = H, x1 = -1, y1 = -1, count = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double d = 0;
            for (int c = 0; c < std::min(3, img.channels); ++c) d += std::abs(img.at(c, y, x) - corner[c]);
            if (d > tol) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
                ++count;
            }
        }
    if (count < min_pixels) return std::nullopt;
    return FaceBox{static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1 + 1),
                   static_cast<double>(y1 + 1)};
}

// --- Identity handling.

inline std::pair<std::vector<std::string>, std::vector<std::string>> identity_disjoint_split(
    std::vector<std::string> identities, double train_fraction, uint64_t seed) {
    if (identities.empty()) throw std::invalid_argument("identity_disjoint_split: empty identity list");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("identity_disjoint_split: train_fraction must be in (0,1)");
    std::set<std::string> uniq(identities.begin(), identities.end());
    if (uniq.size() != identities.size())
        throw std::invalid_argument("identity_disjoint_split: duplicate identities");
    Rng rng(mix_seed(seed ^ 0x1d5f));
    for (size_t i = identities.size(); i > 1; --i)
        std::swap(identities[i - 1], identities[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1))]);
    const size_t n_train = static_cast<size_t>(std::floor(identities.size() * train_fraction));
    std::vector<std::string> train(identities.begin(), identities.begin() + n_train);
    std::vector<std::string> test(identities.begin() + n_train, identities.end());
    return {train, test};
}

// Scenario-3 labeling: a morph belongs to a split only when both identities
// do; morphs spanning the two sets are kept in the manifest as excluded.
inline std::vector<MorphRecord> filter_morphs_by_split(std::vector<MorphRecord> records,
                                                       const std::vector<std::string>& train_ids,
                                                       const std::vector<std::string>& test_ids) {
    const std::set<std::string> train(train_ids.begin(), train_ids.end());
    const std::set<std::string> test(test_ids.begin(), test_ids.end());
    for (const auto& id : train)
        if (test.count(id)) throw std::invalid_argument("filter_morphs_by_split: identity sets not disjoint");
    for (auto& r : records) {
        const bool a_train = train.count(r.id_a) > 0, a_test = test.count(r.id_a) > 0;
        const bool b_train = train.count(r.id_b) > 0, b_test = test.count(r.id_b) > 0;
        if ((!a_train && !a_test) || (!b_train && !b_test))
            throw std::invalid_argument("filter_morphs_by_split: record references unknown identity");
        if (a_train && b_train) r.split = Split::train;
        else if (a_test && b_test) r.split = Split::test;
        else r.split = Split::excluded;
    }
    return records;
}

// --- Morph synthesis.

struct SynthesisStats {
    int written = 0;
    int repeated_pairs = 0;  // draws that repeated an already-used identity pair
};

// Draws identity pairs (id_a != id_b within each draw), morphs them and
// writes images under out_dir. Pairs may repeat across draws unless
// allow_repeated_pairs is false, in which case exceeding the distinct-pair
// budget is an error and sampling is without replacement.
template <typename Scalar>
std::vector<MorphRecord> synthesize_morphs(const std::vector<PoolEntry<Scalar>>& pool, int n_morphs, uint64_t seed,
                                           const std::string& out_dir, const std::string& prefix, double alpha,
                                           const std::string& technique, SynthesisStats* stats = nullptr,
                                           bool allow_repeated_pairs = true) {
    namespace fs = std::filesystem;
    if (n_morphs < 0) throw std::invalid_argument("synthesize_morphs: negative count");
    if (n_morphs > 0 && pool.size() < 2) throw std::invalid_argument("synthesize_morphs: pool needs >= 2 identities");
    const size_t n = pool.size();
    const size_t budget = n * (n - 1) / 2;
    if (!allow_repeated_pairs && static_cast<size_t>(n_morphs) > budget)
        throw std::invalid_argument("synthesize_morphs: n_morphs exceeds distinct-pair budget");

    fs::create_directories(fs::path(out_dir) / "morphs");
    fs::create_directories(fs::path(out_dir) / "faces");

    // constituent images are part of the dataset contract; write each once
    std::map<std::string, std::string> face_paths;
    for (const auto& e : pool) {
        const std::string p = (fs::path(out_dir) / "faces" / (e.identity + ".png")).string();
        if (!face_paths.count(e.identity)) {
            save_image(p, e.image);
            face_paths[e.identity] = p;
        }
    }

    Rng rng(mix_seed(seed ^ 0x30f7));
    std::set<std::pair<size_t, size_t>> used;
    std::vector<MorphRecord> records;
    records.reserve(n_morphs);
    for (int k = 0; k < n_morphs; ++k) {
        size_t ia = 0, ib = 0;
        do {
            ia = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(n) - 1));
            ib = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(n) - 1));
            if (ia == ib) continue;
            if (!allow_repeated_pairs && used.count({std::min(ia, ib), std::max(ia, ib)})) continue;
            break;
        } while (true);
        const auto key = std::make_pair(std::min(ia, ib), std::max(ia, ib));
        if (stats && used.count(key)) stats->repeated_pairs++;
        used.insert(key);

        const auto& a = pool[ia];
        const auto& b = pool[ib];
        const Tensor<Scalar> morph = morph_pair(a.image, a.landmarks, b.image, b.landmarks, alpha);
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%05d.png", prefix.c_str(), k);
        const std::string morph_path = (fs::path(out_dir) / "morphs" / name).string();
        save_image(morph_path, morph);

        MorphRecord r;
        r.morph_path = morph_path;
        r.id_a = a.identity;
        r.id_b = b.identity;
        r.path_a = face_paths[a.identity];
        r.path_b = face_paths[b.identity];
        r.technique = technique;
        r.split = Split::train;
        records.push_back(std::move(r));
        if (stats) stats->written++;
    }
    return records;
}

// Spec-level entry point: morph training set from a face pool, deterministic
// in the seed.
template <typename Scalar>
Manifest build_training_set(const std::vector<PoolEntry<Scalar>>& pool, int n_morphs, uint64_t seed,
                            const std::string& out_dir, double alpha = 0.5,
                            const std::string& technique = "landmark-delaunay") {
    if (n_morphs > 0) {
        std::set<std::string> ids;
        for (const auto& e : pool) ids.insert(e.identity);
        if (ids.size() < 2) throw std::invalid_argument("build_training_set: pool needs >= 2 identities");
    }
    Manifest m;
    m.seed = seed;
    m.technique = technique;
    m.resolution = pool.empty() ? 0 : pool[0].image.height;
    SynthesisStats stats;
    m.records = synthesize_morphs(pool, n_morphs, seed, out_dir, "train", alpha, technique, &stats);
    for (const auto& e : pool) m.train_identities.push_back(e.identity);
    std::sort(m.train_identities.begin(), m.train_identities.end());
    m.train_identities.erase(std::unique(m.train_identities.begin(), m.train_identities.end()),
                             m.train_identities.end());
    return m;
}

inline std::vector<const MorphRecord*> records_in_split(const Manifest& m, Split s) {
    std::vector<const MorphRecord*> out;
    for (const auto& r : m.records)
        if (r.split == s) out.push_back(&r);
    return out;
}

}  // namespace demorph
