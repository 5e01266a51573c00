#pragma once

#include "demorph/adam.hpp"
#include "demorph/schedule.hpp"
#include "demorph/unet.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

namespace demorph {

// Self-describing checkpoint container:
//   8-byte magic, u64 header length, JSON header, then raw little-endian
//   parameter blobs in header order (optionally Adam moments and EMA weights).
// The header echoes the producing config, the run seed and the schedule hash
// so a sampler can refuse to run against a drifted schedule.
namespace ckpt {
inline constexpr char kMagic[8] = {'D', 'M', 'C', 'K', 'P', 'T', '0', '1'};
}

struct CheckpointMeta {
    nlohmann::ordered_json config_echo;
    uint64_t seed = 0;
    uint64_t schedule_hash = 0;
    int epochs_completed = 0;
};

template <typename Scalar>
void save_checkpoint(const std::string& path, const UNet<Scalar>& net, const CheckpointMeta& meta,
                     Adam<Scalar>* adam = nullptr, const std::vector<nn::Arr<Scalar>>* ema = nullptr) {
    nlohmann::ordered_json h;
    h["format"] = "demorph-checkpoint";
    h["scalar"] = sizeof(Scalar) == 4 ? "f32" : "f64";
    h["config"] = meta.config_echo;
    h["model"] = {{"in_channels", net.cfg.in_channels},   {"out_channels", net.cfg.out_channels},
                  {"base_width", net.cfg.base_width},     {"depth", net.cfg.depth},
                  {"time_embed_dim", net.cfg.time_embed_dim}, {"resolution", net.cfg.resolution},
                  {"channel_mult", net.cfg.channel_mult}, {"attention", net.cfg.attention}};
    h["seed"] = meta.seed;
    h["schedule_hash"] = meta.schedule_hash;
    h["epochs_completed"] = meta.epochs_completed;
    h["param_count"] = net.param_count();
    auto params_json = nlohmann::ordered_json::array();
    for (const auto& p : net.params) params_json.push_back({{"name", p.name}, {"size", p.value->size()}});
    h["params"] = params_json;
    h["adam"] = nullptr;
    if (adam) {
        h["adam"] = {{"step", adam->step_count()},
                     {"lr", adam->config().lr},
                     {"beta1", adam->config().beta1},
                     {"beta2", adam->config().beta2},
                     {"eps", adam->config().eps}};
    }
    h["ema"] = ema != nullptr;
    const std::string header = h.dump();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("save_checkpoint: cannot open " + tmp);
        out.write(ckpt::kMagic, 8);
        const uint64_t len = header.size();
        out.write(reinterpret_cast<const char*>(&len), 8);
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        for (const auto& p : net.params)
            out.write(reinterpret_cast<const char*>(p.value->data()),
                      static_cast<std::streamsize>(p.value->size() * sizeof(Scalar)));
        if (adam) {
            for (const auto& a : adam->moments1())
                out.write(reinterpret_cast<const char*>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(Scalar)));
            for (const auto& a : adam->moments2())
                out.write(reinterpret_cast<const char*>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(Scalar)));
        }
        if (ema)
            for (const auto& a : *ema)
                out.write(reinterpret_cast<const char*>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(Scalar)));
        if (!out) throw std::runtime_error("save_checkpoint: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline nlohmann::ordered_json read_checkpoint_header(std::ifstream& in, const std::string& path) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, ckpt::kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    std::string header(len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("checkpoint: truncated header in " + path);
    return nlohmann::ordered_json::parse(header);
}

inline nlohmann::ordered_json peek_checkpoint_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    return read_checkpoint_header(in, path);
}

// Loads parameters into an already-built net (shapes must match the header).
template <typename Scalar>
CheckpointMeta load_checkpoint(const std::string& path, UNet<Scalar>& net, Adam<Scalar>* adam = nullptr,
                               std::vector<nn::Arr<Scalar>>* ema = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    const auto h = read_checkpoint_header(in, path);
    const std::string scalar = h.at("scalar").get<std::string>();
    if ((sizeof(Scalar) == 4) != (scalar == "f32"))
        throw std::runtime_error("load_checkpoint: scalar type mismatch in " + path);
    const auto params_json = h.at("params");
    if (params_json.size() != net.params.size())
        throw std::runtime_error("load_checkpoint: parameter list mismatch in " + path);
    for (size_t i = 0; i < net.params.size(); ++i) {
        const auto& pj = params_json[i];
        if (pj.at("name").get<std::string>() != net.params[i].name ||
            pj.at("size").get<Eigen::Index>() != net.params[i].value->size())
            throw std::runtime_error("load_checkpoint: parameter " + net.params[i].name + " mismatch");
        in.read(reinterpret_cast<char*>(net.params[i].value->data()),
                static_cast<std::streamsize>(net.params[i].value->size() * sizeof(Scalar)));
    }
    const bool has_adam = !h.at("adam").is_null();
    if (adam) {
        if (!has_adam) throw std::runtime_error("load_checkpoint: no optimizer state in " + path);
        adam->set_step_count(h["adam"].at("step").get<int64_t>());
        for (auto& a : adam->moments1()) in.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(Scalar)));
        for (auto& a : adam->moments2()) in.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(Scalar)));
    } else if (has_adam) {
        // skip moments
        size_t total = 0;
        for (const auto& p : net.params) total += static_cast<size_t>(p.value->size());
        in.seekg(static_cast<std::streamoff>(2 * total * sizeof(Scalar)), std::ios::cur);
    }
    if (ema && h.value("ema", false))
        for (auto& a : *ema) in.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(Scalar)));
    if (!in) throw std::runtime_error("load_checkpoint: truncated blob in " + path);

    CheckpointMeta meta;
    meta.config_echo = h.value("config", nlohmann::ordered_json());
    meta.seed = h.at("seed").get<uint64_t>();
    meta.schedule_hash = h.at("schedule_hash").get<uint64_t>();
    meta.epochs_completed = h.at("epochs_completed").get<int>();
    return meta;
}

}  // namespace demorph
