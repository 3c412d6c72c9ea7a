#include "tanet/data/sequence.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tanet/core/error.hpp"
#include "tanet/data/image_io.hpp"

namespace tanet {
namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool is_frame_file(const std::filesystem::path& p) {
    const std::string ext = lower(p.extension().string());
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && is_frame_file(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
    return files;
}

// One annotation line: four numbers, comma or tab separated. Returns nullopt
// for the two target-not-visible encodings.
std::optional<BoundingBox> parse_annotation(const std::string& line, int line_no) {
    std::string cells = line;
    std::replace(cells.begin(), cells.end(), ',', ' ');
    std::replace(cells.begin(), cells.end(), '\t', ' ');
    std::istringstream is(cells);
    std::vector<std::string> tok;
    for (std::string t; is >> t;) tok.push_back(t);
    if (tok.size() != 4)
        throw FormatError("annotation line " + std::to_string(line_no) + " has " +
                          std::to_string(tok.size()) + " cells, expected x,y,w,h: \"" +
                          line + "\"");
    double v[4];
    for (int i = 0; i < 4; ++i) {
        // from_chars rather than stream extraction: accepts the nan spelling
        // and is locale-independent.
        const auto& s = tok[static_cast<std::size_t>(i)];
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v[i]);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw FormatError("annotation line " + std::to_string(line_no) +
                              " is not an x,y,w,h quad: \"" + line + "\"");
    }
    const bool all_nan = std::isnan(v[0]) && std::isnan(v[1]) && std::isnan(v[2]) && std::isnan(v[3]);
    const bool all_zero = v[0] == 0 && v[1] == 0 && v[2] == 0 && v[3] == 0;
    if (all_nan || all_zero) return std::nullopt;
    if (std::isnan(v[0]) || std::isnan(v[1]) || std::isnan(v[2]) || std::isnan(v[3]))
        throw FormatError("annotation line " + std::to_string(line_no) +
                          " mixes nan with numbers: \"" + line + "\"");
    if (v[2] <= 0 || v[3] <= 0)
        throw FormatError("annotation line " + std::to_string(line_no) +
                          " has non-positive size: \"" + line + "\"");
    return BoundingBox{v[0], v[1], v[2], v[3]};
}

std::vector<std::optional<BoundingBox>> load_annotations(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw NotFoundError("annotation file not found: " + file.string());
    std::vector<std::optional<BoundingBox>> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(parse_annotation(line, line_no));
    }
    return out;
}

} // namespace

void Sequence::validate() const {
    if (annotations.size() != frames.size())
        throw FormatError("sequence " + name + ": " + std::to_string(frames.size()) +
                          " frames vs " + std::to_string(annotations.size()) +
                          " annotations");
    if (frames.empty()) throw FormatError("sequence " + name + " has no frames");
    if (!annotations[0].has_value())
        throw FormatError("sequence " + name + ": frame 0 must be annotated");
    for (const auto& f : frames)
        if (f.original_h < 16 || f.original_w < 16)
            throw FormatError("sequence " + name + ": frame " + std::to_string(f.index) +
                              " smaller than 16x16");
}

Sequence load_sequence(const std::filesystem::path& dir, SequenceLayout layout) {
    if (!std::filesystem::is_directory(dir))
        throw NotFoundError("sequence directory not found: " + dir.string());
    const auto ann_file =
        dir / (layout == SequenceLayout::Got10kStyle ? "groundtruth.txt" : "groundtruth_rect.txt");
    const auto frame_dir = layout == SequenceLayout::Got10kStyle ? dir : dir / "img";
    if (layout == SequenceLayout::OtbStyle && !std::filesystem::is_directory(frame_dir))
        throw NotFoundError("frame directory not found: " + frame_dir.string());

    const auto files = list_frames(frame_dir);
    auto annotations = load_annotations(ann_file);
    if (files.size() != annotations.size())
        throw FormatError("sequence " + dir.filename().string() + ": " +
                          std::to_string(files.size()) + " frames vs " +
                          std::to_string(annotations.size()) + " annotation lines");

    Sequence seq;
    seq.name = dir.filename().string();
    seq.annotations = std::move(annotations);
    seq.frames.reserve(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        Frame f;
        f.index = static_cast<int>(i);
        f.image = read_image(files[i]);
        f.original_h = f.image.height();
        f.original_w = f.image.width();
        seq.frames.push_back(std::move(f));
    }
    seq.validate();
    return seq;
}

Tensor Clip::to_tensor() const {
    const int L = length();
    if (L == 0) throw ShapeError("empty clip");
    const int h = frames[0].height(), w = frames[0].width();
    Tensor t({3, L, h, w});
    for (int d = 0; d < L; ++d) {
        const Image& im = frames[static_cast<std::size_t>(d)];
        if (im.height() != h || im.width() != w)
            throw ShapeError("clip frames disagree in size");
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) t.at(c, d, y, x) = im.at(c, y, x);
    }
    return t;
}

Clip make_clip(const std::vector<Image>& resized_frames, int center, int L) {
    const int n = static_cast<int>(resized_frames.size());
    if (n == 0) throw ArgumentError("cannot build a clip from zero frames");
    if (center < 0 || center >= n)
        throw ArgumentError("clip center " + std::to_string(center) + " outside [0, " +
                            std::to_string(n) + ")");
    if (L < 1) throw ArgumentError("clip length must be >= 1, got " + std::to_string(L));
    Clip clip;
    clip.center_index = center;
    const int start = center - (L - 1) / 2;
    for (int k = 0; k < L; ++k) {
        const int idx = std::clamp(start + k, 0, n - 1);
        clip.frames.push_back(resized_frames[static_cast<std::size_t>(idx)]);
    }
    return clip;
}

} // namespace tanet
