#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "tanet/core/rng.hpp"
#include "tanet/data/geometry.hpp"

namespace tanet::testing {

// Unique per-test scratch directory under the build tree, wiped on entry.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("tanet-test-" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file);
    out << text;
}

inline BoundingBox random_box(Rng& rng, double span = 100.0) {
    return {rng.uniform(-span / 4, span), rng.uniform(-span / 4, span),
            rng.uniform(0.5, span / 2), rng.uniform(0.5, span / 2)};
}

} // namespace tanet::testing
