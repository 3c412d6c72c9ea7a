#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tanet/core/tensor.hpp"

namespace tanet::nn {

// Named-tensor archive with free-form string metadata. On-disk layout:
// magic, JSON header (names, shapes, offsets, metadata), then one raw
// little-endian double blob. Doubles round-trip bitwise.
struct CheckpointData {
    std::map<std::string, std::string> meta;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor* find(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return &t;
        return nullptr;
    }
};

void save_checkpoint(const std::filesystem::path& file, const CheckpointData& data);
CheckpointData load_checkpoint(const std::filesystem::path& file);

} // namespace tanet::nn
