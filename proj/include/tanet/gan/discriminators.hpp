#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tanet/model/scale.hpp"
#include "tanet/nn/checkpoint.hpp"
#include "tanet/nn/layers.hpp"

namespace tanet::gan {

using model::NetScale;

// Architecture recipe for both critics. Faithful reproduces the published
// stacks: the appearance net's first dense layer consumes 57600 features,
// which pins its input at 240x240; the motion head's 900-wide flatten pins
// the clip resolution at 224x224. Tiny mirrors the wiring at 64x64.
struct DiscriminatorConfig {
    NetScale scale = NetScale::Faithful;
    int appearance_resolution = 240;
    int motion_resolution = 224;
    int clip_length = 3;

    // Appearance critic: conv(k1,s2) pool conv(3,s2) pool conv(3,s1), then
    // two dense layers. Widths are the three conv output channel counts.
    std::vector<int> appearance_widths;
    int appearance_first_kernel = 7;
    int appearance_fc_width = 256;

    // Motion critic: 3-D conv stack, depth-mean, one strided 2-D conv head,
    // then two dense layers.
    std::vector<int> motion_widths;
    int motion_head_channels = 100;
    int motion_fc_width = 256;

    static DiscriminatorConfig tiny(int resolution = 64);
    static DiscriminatorConfig faithful();

    // Throws ArgumentError when widths don't match the scale's stage count
    // or a resolution collapses below 1 pixel somewhere in the chain.
    void validate() const;

    // Feature count entering each critic's first dense layer, walked
    // layer-by-layer from the config. Shape oracle for tests.
    int appearance_flatten_dim() const;
    int motion_flatten_dim() const;

    std::map<std::string, std::string> echo() const;
    static DiscriminatorConfig from_echo(const std::map<std::string, std::string>& meta);
};

// Logistic output clamped into [eps, 1-eps] so both log terms stay finite.
struct RealismScore {
    static constexpr double kEps = 1e-7;

    double raw = 0.5;   // sigmoid output as computed
    double value = 0.5; // raw clamped into the open unit interval

    static RealismScore from_raw(double p);
    double log_score() const;     // log(value), finite
    double log_one_minus() const; // log(1 - value), finite
};

// Channel stacking convention shared by both critics: image channels first,
// attention map last. Maps may be (S,S) or (1,S,S).
Tensor stack_frame_and_map(const Tensor& frame, const Tensor& map);
Tensor stack_clip_and_maps(const Tensor& clip, const std::vector<Tensor>& maps);

// Attention-channel slices of an input gradient from backward().
Tensor attention_grad(const Tensor& ginput);               // (4,S,S) -> (1,S,S)
std::vector<Tensor> attention_grads(const Tensor& ginput); // (4,L,S,S) -> L x (1,S,S)

// Judges one (frame, attention) pair: 4-channel input through a strided
// conv stack into a logistic score of how mask-like the map looks.
class AppearanceDiscriminator {
public:
    AppearanceDiscriminator(DiscriminatorConfig cfg, std::uint64_t init_seed);

    const DiscriminatorConfig& config() const { return cfg_; }
    std::uint64_t init_seed() const { return init_seed_; }

    // frame (3,S,S), attention (S,S) or (1,S,S) at S = appearance_resolution.
    // Deterministic; cache may be null outside training.
    RealismScore score(const Tensor& frame, const Tensor& attention,
                       nn::Cache* cache = nullptr) const;

    // gscore = dLoss/d(score.value). Accumulates parameter gradients and
    // returns dLoss/d(stacked 4-channel input); slice the attention channel
    // with attention_grad(). Zero when the score was saturated past the clamp.
    Tensor backward(double gscore, const nn::Cache& cache);

    void collect_params(std::vector<nn::NamedParam>& out);
    void to_checkpoint(nn::CheckpointData& data) const;
    static AppearanceDiscriminator from_checkpoint(const nn::CheckpointData& data);

    static nn::Sequential build(const DiscriminatorConfig& cfg);

private:
    DiscriminatorConfig cfg_;
    std::uint64_t init_seed_;
    nn::Sequential net_;
};

// Judges a (clip, attention sequence) tube: per-frame 4-channel planes
// through a 3-D conv stack, collapsed over time, into a logistic score of
// whether the maps move like the object.
class MotionDiscriminator {
public:
    MotionDiscriminator(DiscriminatorConfig cfg, std::uint64_t init_seed);

    const DiscriminatorConfig& config() const { return cfg_; }
    std::uint64_t init_seed() const { return init_seed_; }

    // clip (3,L,S,S), maps = L attention maps at S = motion_resolution.
    // Throws ShapeError when the map count disagrees with the clip depth.
    RealismScore score(const Tensor& clip, const std::vector<Tensor>& maps,
                       nn::Cache* cache = nullptr) const;

    // As the appearance critic; returns dLoss/d(4,L,S,S) input.
    Tensor backward(double gscore, const nn::Cache& cache);

    void collect_params(std::vector<nn::NamedParam>& out);
    void to_checkpoint(nn::CheckpointData& data) const;
    static MotionDiscriminator from_checkpoint(const nn::CheckpointData& data);

    static nn::Sequential build(const DiscriminatorConfig& cfg);

private:
    DiscriminatorConfig cfg_;
    std::uint64_t init_seed_;
    nn::Sequential net_;
};

} // namespace tanet::gan
