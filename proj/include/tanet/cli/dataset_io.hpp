#pragma once

#include <filesystem>
#include <vector>

#include "tanet/data/sequence.hpp"

namespace tanet::cli {

// Writes a sequence as zero-padded 1-based PNG frames plus groundtruth.txt
// (one "x,y,w,h" line per frame, "0,0,0,0" on target-absent frames): the
// directory layout load_sequence reads back with the annotation-beside-
// frames convention. Any existing directory content is replaced.
void write_sequence(const Sequence& seq, const std::filesystem::path& dir);

// True when dir itself carries an annotation file of either known layout.
bool is_sequence_dir(const std::filesystem::path& dir);

// Which annotation convention dir follows; NotFoundError when neither file
// is present.
SequenceLayout detect_layout(const std::filesystem::path& dir);

// Immediate subdirectories of root that hold a sequence, sorted by name.
// NotFoundError when root is missing or holds none.
std::vector<std::filesystem::path> list_sequence_dirs(const std::filesystem::path& root);

// Loads every sequence under root in name order.
std::vector<Sequence> load_dataset(const std::filesystem::path& root);

} // namespace tanet::cli
