#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tanet/data/geometry.hpp"
#include "tanet/data/image.hpp"

namespace tanet {

struct Frame {
    int index = 0;
    Image image;
    int original_h = 0;
    int original_w = 0;
};

// A video plus per-frame annotation. An absent annotation means the target
// is not visible in that frame. Frame 0 must be annotated: trackers
// initialize from it.
struct Sequence {
    std::string name;
    std::vector<Frame> frames;
    std::vector<std::optional<BoundingBox>> annotations;

    int size() const { return static_cast<int>(frames.size()); }
    void validate() const; // throws FormatError on broken invariants
};

enum class SequenceLayout {
    Got10kStyle, // groundtruth.txt next to the frame files
    OtbStyle,    // groundtruth_rect.txt, frames under img/
};

// Loads frames (lexicographic file order) and one annotation line per frame.
// Lines are "x,y,w,h", comma or tab separated; "0,0,0,0" and a nan quad both
// mean target-not-visible.
Sequence load_sequence(const std::filesystem::path& dir, SequenceLayout layout);

// L resized frames centered (as far as bounds allow) on one source frame.
// At sequence boundaries the edge frame is replicated so every clip has
// exactly L entries.
struct Clip {
    std::vector<Image> frames; // each R x R
    int center_index = 0;

    int length() const { return static_cast<int>(frames.size()); }

    // Stacks to (3, L, R, R): channel-major, depth = clip position.
    Tensor to_tensor() const;
};

// Builds the clip for `center` from already-resized frames.
Clip make_clip(const std::vector<Image>& resized_frames, int center, int L);

} // namespace tanet
