#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "tanet/core/rng.hpp"
#include "tanet/core/tensor.hpp"
#include "tanet/data/sequence.hpp"

namespace tanet::train {

// One optimization sample: a resized clip, the binary target mask for each
// clip frame, and the sequence's first-frame target patch.
struct TrainSample {
    Tensor clip;               // (3, L, R, R)
    std::vector<Tensor> masks; // L maps, each (1, R, R), values in {0,1}
    Tensor tmpl;               // (3, T, T)
    int sequence = 0;
    int center = 0;
};

// In-memory pool of eligible clip centers over a sequence set. A center is
// eligible when every frame its clip selects (after edge clamping) carries
// an annotation whose rasterized mask is non-empty: real adversarial
// samples need actual foreground.
class ClipDataset {
public:
    ClipDataset(const std::vector<Sequence>& seqs, int R, int L, int template_size);

    std::size_t size() const { return index_.size(); }
    TrainSample at(std::size_t i) const;
    TrainSample sample(Rng& rng) const;

    int resolution() const { return R_; }
    int clip_length() const { return L_; }
    int template_size() const { return T_; }

private:
    struct PerSequence {
        std::vector<Image> resized;                // every frame at R x R
        std::vector<std::optional<Tensor>> masks;  // (1,R,R) where usable
        Tensor tmpl;                               // (3,T,T)
    };
    std::vector<PerSequence> seqs_;
    std::vector<std::pair<int, int>> index_; // (sequence, center)
    int R_, L_, T_;
};

} // namespace tanet::train
