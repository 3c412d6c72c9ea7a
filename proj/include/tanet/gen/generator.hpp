#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tanet/data/geometry.hpp"
#include "tanet/data/image.hpp"
#include "tanet/model/scale.hpp"
#include "tanet/nn/checkpoint.hpp"
#include "tanet/nn/layers.hpp"

namespace tanet::gen {

using model::NetScale;

// Architecture recipe for the attention network. Two presets share identical
// wiring: "faithful" mirrors the full-size design (stride-32 encoders, five
// upsample groups), "tiny" is a stride-4 two-group variant for fast tests.
struct GeneratorConfig {
    int R = 300;
    int L = 3;
    NetScale scale = NetScale::Faithful;
    int template_size = 128;
    std::vector<int> motion_widths;     // output channels per motion conv stage
    std::vector<int> appearance_widths; // output channels per 2D stage (template reuses)
    int decoder_groups = 5;

    static GeneratorConfig tiny(int R = 64);
    static GeneratorConfig faithful(int R = 300);

    // Throws ArgumentError on inconsistent settings. The full network needs
    // R to survive encode /s then decode x s exactly: R divisible by
    // 2^decoder_groups (32 for faithful, 4 for tiny).
    void validate() const;

    int encoder_stride() const { return 1 << decoder_groups; }
    int feature_hw() const { return R / encoder_stride(); }
    int motion_channels() const { return motion_widths.back(); }
    int appearance_channels() const { return appearance_widths.back(); }
    int template_channels() const { return appearance_widths.back(); }
    int fused_channels() const {
        return motion_channels() + appearance_channels() + template_channels();
    }

    std::map<std::string, std::string> echo() const;
    static GeneratorConfig from_echo(const std::map<std::string, std::string>& meta);
};

// Channel concatenation in fixed order [motion, appearance, template]; the
// template vector (C,1,1) is tiled across the spatial grid.
Tensor fuse_features(const Tensor& motion, const Tensor& appearance, const Tensor& tmpl);

// Adjoint of fuse_features: splits the fused gradient back into the three
// slices, summing the template slice over space.
void split_fused_grad(const Tensor& gfused, int cm, int ca, int ct, Tensor* gm, Tensor* ga,
                      Tensor* gt);

// Exact-box template crop, bilinearly resampled to side x side.
Image crop_template(const Image& frame, const BoundingBox& box, int side);

// Saved forward state for one training-mode pass (all L maps).
struct GeneratorCaches {
    nn::Cache motion, tmpl;
    std::vector<nn::Cache> appearance, decoder;
    Tensor motion_feat, template_feat;
    std::vector<Tensor> appearance_feats;
};

class TanetGenerator {
public:
    TanetGenerator(GeneratorConfig cfg, std::uint64_t init_seed);

    const GeneratorConfig& config() const { return cfg_; }
    std::uint64_t init_seed() const { return init_seed_; }

    // Encoder/decoder stages; cache may be null for inference.
    Tensor encode_motion(const Tensor& clip, nn::Cache* cache = nullptr) const;      // (3,L,R,R)
    Tensor encode_appearance(const Tensor& frame, nn::Cache* cache = nullptr) const; // (3,R,R)
    Tensor encode_template(const Tensor& tmpl, nn::Cache* cache = nullptr) const;    // (3,T,T)
    Tensor decode_attention(const Tensor& fused, nn::Cache* cache = nullptr) const;  // ->(1,R,R)

    // Training mode: one attention map per clip frame, decoder weights
    // shared across frames. Tracking mode: the center-frame map only.
    std::vector<Tensor> predict_training(const Tensor& clip, const Tensor& tmpl,
                                         GeneratorCaches* caches = nullptr) const;
    Tensor predict_tracking(const Tensor& clip, const Tensor& tmpl) const;

    // Accumulates parameter gradients for a training-mode pass; gmaps holds
    // dLoss/dmap for each of the L maps.
    void backward_training(const std::vector<Tensor>& gmaps, const GeneratorCaches& caches);

    void collect_params(std::vector<nn::NamedParam>& out);

    void to_checkpoint(nn::CheckpointData& data) const;
    static TanetGenerator from_checkpoint(const nn::CheckpointData& data);

    // Stage builders, exposed so shape tests can probe encoders standalone
    // (e.g. the appearance branch at resolutions the full net rejects).
    static nn::Sequential build_motion_encoder(const GeneratorConfig& cfg);
    static nn::Sequential build_appearance_encoder(const GeneratorConfig& cfg);
    static nn::Sequential build_template_encoder(const GeneratorConfig& cfg);
    static nn::Sequential build_decoder(const GeneratorConfig& cfg);

private:
    GeneratorConfig cfg_;
    std::uint64_t init_seed_;
    nn::Sequential motion_, appearance_, template_, decoder_;
};

} // namespace tanet::gen
