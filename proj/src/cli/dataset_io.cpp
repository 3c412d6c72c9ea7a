#include "tanet/cli/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "tanet/cli/commands.hpp"
#include "tanet/core/error.hpp"
#include "tanet/data/image_io.hpp"

namespace tanet::cli {
namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_sequence(const Sequence& seq, const std::filesystem::path& dir) {
    seq.validate();
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create sequence directory " + dir.string());

    for (const Frame& f : seq.frames) write_png(dir / frame_file_name("", f.index), f.image);

    const auto ann_file = dir / "groundtruth.txt";
    std::ofstream out(ann_file);
    if (!out) throw IoError("cannot open " + ann_file.string() + " for writing");
    for (const auto& box : seq.annotations) {
        if (box)
            out << fmt_double(box->x) << ',' << fmt_double(box->y) << ',' << fmt_double(box->w)
                << ',' << fmt_double(box->h) << '\n';
        else
            out << "0,0,0,0\n"; // the target-not-visible encoding
    }
    if (!out) throw IoError("failed writing " + ann_file.string());
}

bool is_sequence_dir(const std::filesystem::path& dir) {
    return std::filesystem::is_regular_file(dir / "groundtruth.txt") ||
           std::filesystem::is_regular_file(dir / "groundtruth_rect.txt");
}

SequenceLayout detect_layout(const std::filesystem::path& dir) {
    if (std::filesystem::is_regular_file(dir / "groundtruth.txt"))
        return SequenceLayout::Got10kStyle;
    if (std::filesystem::is_regular_file(dir / "groundtruth_rect.txt"))
        return SequenceLayout::OtbStyle;
    throw NotFoundError("no annotation file (groundtruth.txt or groundtruth_rect.txt) in " +
                        dir.string());
}

std::vector<std::filesystem::path> list_sequence_dirs(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root))
        throw NotFoundError("dataset directory not found: " + root.string());
    std::vector<std::filesystem::path> dirs;
    for (const auto& e : std::filesystem::directory_iterator(root))
        if (e.is_directory() && is_sequence_dir(e.path())) dirs.push_back(e.path());
    if (dirs.empty()) throw NotFoundError("no sequence directories under " + root.string());
    std::sort(dirs.begin(), dirs.end(),
              [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
    return dirs;
}

std::vector<Sequence> load_dataset(const std::filesystem::path& root) {
    std::vector<Sequence> seqs;
    for (const auto& dir : list_sequence_dirs(root))
        seqs.push_back(load_sequence(dir, detect_layout(dir)));
    return seqs;
}

} // namespace tanet::cli
