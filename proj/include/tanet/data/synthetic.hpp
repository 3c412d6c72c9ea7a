#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tanet/data/sequence.hpp"

namespace tanet {

enum class TargetShape { Square, Disc, TexturedPatch };
enum class MotionKind { Linear, RandomWalk, Sinusoidal };

// Recipe for a generated scene: one moving target over a static textured
// background, optional look-alike distractors, optional full-occlusion
// windows. The seed fully determines every pixel and annotation.
struct SyntheticSceneConfig {
    int frame_size = 64;
    int num_frames = 30;
    TargetShape target_shape = TargetShape::Square;
    int target_size = 12;
    MotionKind motion = MotionKind::Linear;
    double speed = 2.0; // pixels per frame
    std::vector<std::pair<int, int>> occlusion_windows; // [start, end) frame ranges
    int distractors = 0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;

    void validate() const; // throws ArgumentError
};

// Deterministic scene synthesis. Annotations are absent exactly on frames
// inside an occlusion window; distractor boxes are never reported.
Sequence make_synthetic_sequence(const SyntheticSceneConfig& cfg);

} // namespace tanet
