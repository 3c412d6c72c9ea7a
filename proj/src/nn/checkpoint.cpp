#include "tanet/nn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "tanet/core/error.hpp"

namespace tanet::nn {
namespace {

constexpr char kMagic[8] = {'T', 'A', 'N', 'E', 'T', 'C', 'K', '1'};

// Doubles are written as raw IEEE-754 bytes in host order; this project
// targets little-endian hosts and the loader verifies via a sentinel value.
constexpr double kEndianSentinel = 1.0 / 3.0;

} // namespace

void save_checkpoint(const std::filesystem::path& file, const CheckpointData& data) {
    nlohmann::json header;
    header["meta"] = data.meta;
    auto& list = header["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 1; // slot 0 holds the endianness sentinel
    for (const auto& [name, t] : data.tensors) {
        list.push_back({{"name", name},
                        {"shape", t.shape()},
                        {"offset", offset},
                        {"numel", t.numel()}});
        offset += static_cast<std::uint64_t>(t.numel());
    }
    const std::string hs = header.dump();

    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint " + file.string() + " for writing");
    out.write(kMagic, sizeof kMagic);
    const std::uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    out.write(reinterpret_cast<const char*>(&kEndianSentinel), sizeof kEndianSentinel);
    for (const auto& [name, t] : data.tensors)
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!out) throw IoError("short write on checkpoint " + file.string());
}

CheckpointData load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw NotFoundError("checkpoint not found: " + file.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw FormatError("not a checkpoint file: " + file.string());
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
    if (!in || hlen > (1u << 30))
        throw FormatError("corrupt checkpoint header in " + file.string());
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw FormatError("truncated checkpoint header in " + file.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad checkpoint header in " + file.string() + ": " + e.what());
    }

    CheckpointData data;
    try {
        if (header.contains("meta"))
            data.meta = header["meta"].get<std::map<std::string, std::string>>();
        double sentinel = 0;
        in.read(reinterpret_cast<char*>(&sentinel), sizeof sentinel);
        if (!in || sentinel != kEndianSentinel)
            throw FormatError("checkpoint " + file.string() +
                              " was written on an incompatible host");
        for (const auto& e : header["tensors"]) {
            const auto shape = e["shape"].get<std::vector<int>>();
            Tensor t(shape);
            if (t.numel() != e["numel"].get<long>())
                throw FormatError("checkpoint tensor " + e["name"].get<std::string>() +
                                  " has inconsistent shape metadata");
            in.read(reinterpret_cast<char*>(t.data()),
                    static_cast<std::streamsize>(t.numel() * sizeof(double)));
            if (!in)
                throw FormatError("checkpoint " + file.string() + " truncated in tensor " +
                                  e["name"].get<std::string>());
            data.tensors.emplace_back(e["name"].get<std::string>(), std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad checkpoint header in " + file.string() + ": " + e.what());
    }
    return data;
}

} // namespace tanet::nn
