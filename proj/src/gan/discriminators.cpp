#include "tanet/gan/discriminators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tanet/core/error.hpp"

namespace tanet::gan {
namespace {

constexpr const char* kVersion = "1";

std::string join_ints(const std::vector<int>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        os << v[i];
    }
    return os.str();
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    for (std::string tok; std::getline(is, tok, ',');) out.push_back(std::stoi(tok));
    return out;
}

// Depth bookkeeping for the 3-D stack: kernels and pool extents clamp to the
// remaining depth so any clip length >= 1 flows through.
struct DepthState {
    int d;
};

void add_conv3d(nn::Sequential& seq, const std::string& name, int in_c, int out_c,
                DepthState& ds, int spatial_stride) {
    const int kd = std::min(3, ds.d);
    const int pd = kd == 3 ? 1 : 0;
    seq.emplace<nn::Conv3d>(name, in_c, out_c, kd, 3, 3, 1, spatial_stride, spatial_stride,
                            pd, 1, 1);
    ds.d = (ds.d + 2 * pd - kd) + 1;
    seq.emplace<nn::ReLU>(name + ".relu");
}

void add_pool3d(nn::Sequential& seq, const std::string& name, DepthState& ds) {
    const int kd = std::min(2, ds.d);
    seq.emplace<nn::MaxPool3d>(name, kd, 2, 2, kd, 2, 2);
    ds.d = (ds.d - kd) / kd + 1;
}

int checked_step(int s, int k, int stride, int p, const char* chain) {
    const int out = nn::conv_out_dim(s, k, stride, p);
    if (out < 1)
        throw ArgumentError(std::string(chain) +
                            " chain collapses below one pixel: stage input " +
                            std::to_string(s) + " with kernel " + std::to_string(k) +
                            " stride " + std::to_string(stride));
    return out;
}

const Tensor& require_map(const Tensor& map, int S, const char* who) {
    const bool ok = (map.rank() == 2 && map.dim(0) == S && map.dim(1) == S) ||
                    (map.rank() == 3 && map.dim(0) == 1 && map.dim(1) == S && map.dim(2) == S);
    if (!ok)
        throw ShapeError(std::string(who) + ": attention map must be (" + std::to_string(S) +
                         "," + std::to_string(S) + ") or (1," + std::to_string(S) + "," +
                         std::to_string(S) + "), got " + map.shape_string());
    return map;
}

RealismScore score_through(const nn::Sequential& net, const Tensor& input, nn::Cache* cache) {
    nn::Cache* kid = nullptr;
    if (cache) {
        cache->kids.assign(1, nn::Cache{});
        kid = &cache->kids[0];
    }
    const Tensor y = net.forward(input, kid);
    if (cache) cache->t.assign({y});
    return RealismScore::from_raw(y[0]);
}

Tensor backward_through(nn::Sequential& net, double gscore, const nn::Cache& cache) {
    const double raw = cache.t.at(0)[0];
    Tensor gy({1});
    // The clamp into [eps, 1-eps] is flat outside it, so saturated scores
    // pass no gradient.
    gy[0] = (raw < RealismScore::kEps || raw > 1.0 - RealismScore::kEps) ? 0.0 : gscore;
    return net.backward(gy, cache.kids.at(0));
}

std::map<std::string, std::string> section_meta(const nn::CheckpointData& data,
                                                const std::string& section) {
    std::map<std::string, std::string> out;
    const std::string prefix = section + ".cfg.";
    for (const auto& [k, v] : data.meta)
        if (k.rfind(prefix, 0) == 0) out[k.substr(prefix.size())] = v;
    if (out.empty()) throw FormatError("checkpoint has no " + section + " section");
    return out;
}

std::uint64_t section_seed(const nn::CheckpointData& data, const std::string& section) {
    if (auto it = data.meta.find(section + ".init_seed"); it != data.meta.end())
        return std::stoull(it->second);
    return 0;
}

void save_section(nn::CheckpointData& data, const std::string& section,
                  const DiscriminatorConfig& cfg, std::uint64_t seed,
                  const std::vector<nn::NamedParam>& params) {
    data.meta[section + ".version"] = kVersion;
    data.meta[section + ".init_seed"] = std::to_string(seed);
    for (const auto& [k, v] : cfg.echo()) data.meta[section + ".cfg." + k] = v;
    for (const auto& p : params)
        data.tensors.emplace_back(section + "." + p.name, p.param->value);
}

void load_section(const nn::CheckpointData& data, const std::string& section,
                  std::vector<nn::NamedParam>& params) {
    for (auto& p : params) {
        const Tensor* t = data.find(section + "." + p.name);
        if (!t) throw FormatError("checkpoint is missing tensor " + section + "." + p.name);
        if (t->shape() != p.param->value.shape())
            throw FormatError("checkpoint tensor " + section + "." + p.name + " has shape " +
                              t->shape_string() + ", expected " +
                              p.param->value.shape_string());
        p.param->value = *t;
    }
}

} // namespace

// --------------------------------------------------------------------- config

DiscriminatorConfig DiscriminatorConfig::tiny(int resolution) {
    DiscriminatorConfig cfg;
    cfg.scale = NetScale::Tiny;
    cfg.appearance_resolution = resolution;
    cfg.motion_resolution = resolution;
    cfg.clip_length = 3;
    cfg.appearance_widths = {8, 16, 16};
    cfg.appearance_first_kernel = 3;
    cfg.appearance_fc_width = 32;
    cfg.motion_widths = {8, 16};
    cfg.motion_head_channels = 8;
    cfg.motion_fc_width = 32;
    return cfg;
}

DiscriminatorConfig DiscriminatorConfig::faithful() {
    DiscriminatorConfig cfg;
    cfg.appearance_widths = {96, 256, 256};
    cfg.motion_widths = {64, 128, 256, 256, 512, 512, 512, 512};
    return cfg;
}

void DiscriminatorConfig::validate() const {
    if (clip_length < 1)
        throw ArgumentError("clip_length must be >= 1, got " + std::to_string(clip_length));
    if (appearance_resolution < 16 || motion_resolution < 16)
        throw ArgumentError("discriminator input resolutions must be >= 16, got " +
                            std::to_string(appearance_resolution) + " and " +
                            std::to_string(motion_resolution));
    if (appearance_widths.size() != 3)
        throw ArgumentError("appearance critic expects 3 conv widths, got " +
                            std::to_string(appearance_widths.size()));
    const std::size_t want_motion = scale == NetScale::Tiny ? 2 : 8;
    if (motion_widths.size() != want_motion)
        throw ArgumentError("motion critic expects " + std::to_string(want_motion) +
                            " conv widths at this scale, got " +
                            std::to_string(motion_widths.size()));
    if (appearance_first_kernel < 1 || appearance_first_kernel % 2 == 0)
        throw ArgumentError("appearance_first_kernel must be odd and positive");
    if (appearance_fc_width < 1 || motion_fc_width < 1 || motion_head_channels < 1)
        throw ArgumentError("dense and head widths must be positive");
    for (int w : appearance_widths)
        if (w < 1) throw ArgumentError("appearance conv widths must be positive");
    for (int w : motion_widths)
        if (w < 1) throw ArgumentError("motion conv widths must be positive");
    appearance_flatten_dim();
    motion_flatten_dim();
}

int DiscriminatorConfig::appearance_flatten_dim() const {
    int s = appearance_resolution;
    s = checked_step(s, appearance_first_kernel, 2, appearance_first_kernel / 2, "appearance");
    s = checked_step(s, 2, 2, 0, "appearance"); // pool1
    s = checked_step(s, 3, 2, 1, "appearance"); // conv2
    s = checked_step(s, 2, 2, 0, "appearance"); // pool2
    s = checked_step(s, 3, 1, 1, "appearance"); // conv3, size-preserving
    return appearance_widths.back() * s * s;
}

int DiscriminatorConfig::motion_flatten_dim() const {
    int s = motion_resolution;
    if (scale == NetScale::Faithful) {
        for (int stage = 1; stage <= 4; ++stage) s = checked_step(s, 2, 2, 0, "motion");
        s = checked_step(s, 3, 2, 1, "motion"); // 2-D head conv
        s = checked_step(s, 3, 2, 0, "motion"); // head pool
    } else {
        s = checked_step(s, 3, 2, 1, "motion"); // conv1, spatial stride 2
        s = checked_step(s, 2, 2, 0, "motion"); // pool1
        s = checked_step(s, 3, 2, 1, "motion"); // conv2
        s = checked_step(s, 3, 2, 1, "motion"); // 2-D head conv
    }
    return motion_head_channels * s * s;
}

std::map<std::string, std::string> DiscriminatorConfig::echo() const {
    return {{"scale", scale == NetScale::Tiny ? "tiny" : "faithful"},
            {"appearance_resolution", std::to_string(appearance_resolution)},
            {"motion_resolution", std::to_string(motion_resolution)},
            {"clip_length", std::to_string(clip_length)},
            {"appearance_widths", join_ints(appearance_widths)},
            {"appearance_first_kernel", std::to_string(appearance_first_kernel)},
            {"appearance_fc_width", std::to_string(appearance_fc_width)},
            {"motion_widths", join_ints(motion_widths)},
            {"motion_head_channels", std::to_string(motion_head_channels)},
            {"motion_fc_width", std::to_string(motion_fc_width)}};
}

DiscriminatorConfig DiscriminatorConfig::from_echo(
    const std::map<std::string, std::string>& meta) {
    DiscriminatorConfig cfg;
    try {
        const std::string& s = meta.at("scale");
        if (s == "tiny")
            cfg.scale = NetScale::Tiny;
        else if (s == "faithful")
            cfg.scale = NetScale::Faithful;
        else
            throw FormatError("unknown scale \"" + s + "\" in checkpoint");
        cfg.appearance_resolution = std::stoi(meta.at("appearance_resolution"));
        cfg.motion_resolution = std::stoi(meta.at("motion_resolution"));
        cfg.clip_length = std::stoi(meta.at("clip_length"));
        cfg.appearance_widths = split_ints(meta.at("appearance_widths"));
        cfg.appearance_first_kernel = std::stoi(meta.at("appearance_first_kernel"));
        cfg.appearance_fc_width = std::stoi(meta.at("appearance_fc_width"));
        cfg.motion_widths = split_ints(meta.at("motion_widths"));
        cfg.motion_head_channels = std::stoi(meta.at("motion_head_channels"));
        cfg.motion_fc_width = std::stoi(meta.at("motion_fc_width"));
    } catch (const std::out_of_range&) {
        throw FormatError("checkpoint is missing discriminator config keys");
    } catch (const std::invalid_argument&) {
        throw FormatError("checkpoint has malformed discriminator config values");
    }
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------- score

RealismScore RealismScore::from_raw(double p) {
    RealismScore s;
    s.raw = p;
    s.value = std::clamp(p, kEps, 1.0 - kEps);
    return s;
}

double RealismScore::log_score() const { return std::log(value); }

double RealismScore::log_one_minus() const { return std::log1p(-value); }

// ------------------------------------------------------------ input stacking

Tensor stack_frame_and_map(const Tensor& frame, const Tensor& map) {
    if (frame.rank() != 3 || frame.dim(0) != 3 || frame.dim(1) != frame.dim(2))
        throw ShapeError("expected a square (3,S,S) frame, got " + frame.shape_string());
    const int S = frame.dim(1);
    require_map(map, S, "stack_frame_and_map");
    const long plane = static_cast<long>(S) * S;
    Tensor out({4, S, S});
    std::copy(frame.data(), frame.data() + 3 * plane, out.data());
    std::copy(map.data(), map.data() + plane, out.data() + 3 * plane);
    return out;
}

Tensor stack_clip_and_maps(const Tensor& clip, const std::vector<Tensor>& maps) {
    if (clip.rank() != 4 || clip.dim(0) != 3 || clip.dim(2) != clip.dim(3))
        throw ShapeError("expected a square (3,L,S,S) clip, got " + clip.shape_string());
    const int L = clip.dim(1), S = clip.dim(2);
    if (static_cast<int>(maps.size()) != L)
        throw ShapeError("clip has " + std::to_string(L) + " frames but " +
                         std::to_string(maps.size()) + " attention maps were given");
    const long plane = static_cast<long>(S) * S;
    Tensor out({4, L, S, S});
    std::copy(clip.data(), clip.data() + 3 * L * plane, out.data());
    for (int i = 0; i < L; ++i) {
        const Tensor& m = require_map(maps[static_cast<std::size_t>(i)], S,
                                      "stack_clip_and_maps");
        std::copy(m.data(), m.data() + plane,
                  out.data() + (static_cast<long>(3) * L + i) * plane);
    }
    return out;
}

Tensor attention_grad(const Tensor& ginput) {
    if (ginput.rank() != 3 || ginput.dim(0) != 4)
        throw ShapeError("attention_grad expects a (4,S,S) gradient, got " +
                         ginput.shape_string());
    const int S = ginput.dim(1);
    const long plane = static_cast<long>(S) * ginput.dim(2);
    Tensor out({1, S, ginput.dim(2)});
    std::copy(ginput.data() + 3 * plane, ginput.data() + 4 * plane, out.data());
    return out;
}

std::vector<Tensor> attention_grads(const Tensor& ginput) {
    if (ginput.rank() != 4 || ginput.dim(0) != 4)
        throw ShapeError("attention_grads expects a (4,L,S,S) gradient, got " +
                         ginput.shape_string());
    const int L = ginput.dim(1), H = ginput.dim(2), W = ginput.dim(3);
    const long plane = static_cast<long>(H) * W;
    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i) {
        Tensor g({1, H, W});
        const double* src = ginput.data() + (static_cast<long>(3) * L + i) * plane;
        std::copy(src, src + plane, g.data());
        out.push_back(std::move(g));
    }
    return out;
}

// ----------------------------------------------------- AppearanceDiscriminator

nn::Sequential AppearanceDiscriminator::build(const DiscriminatorConfig& cfg) {
    const auto& w = cfg.appearance_widths;
    const int k1 = cfg.appearance_first_kernel;
    nn::Sequential seq;
    seq.emplace<nn::Conv2d>("conv1", 4, w[0], k1, 2, k1 / 2);
    seq.emplace<nn::ReLU>("conv1.relu");
    seq.emplace<nn::MaxPool2d>("pool1", 2, 2);
    seq.emplace<nn::Conv2d>("conv2", w[0], w[1], 3, 2, 1);
    seq.emplace<nn::ReLU>("conv2.relu");
    seq.emplace<nn::MaxPool2d>("pool2", 2, 2);
    seq.emplace<nn::Conv2d>("conv3", w[1], w[2], 3, 1, 1);
    seq.emplace<nn::ReLU>("conv3.relu");
    seq.emplace<nn::Linear>("fc1", cfg.appearance_flatten_dim(), cfg.appearance_fc_width);
    seq.emplace<nn::ReLU>("fc1.relu");
    seq.emplace<nn::Linear>("fc2", cfg.appearance_fc_width, 1);
    seq.emplace<nn::Sigmoid>("squash");
    return seq;
}

AppearanceDiscriminator::AppearanceDiscriminator(DiscriminatorConfig cfg,
                                                 std::uint64_t init_seed)
    : cfg_(std::move(cfg)), init_seed_(init_seed) {
    cfg_.validate();
    net_ = build(cfg_);
    Rng rng(init_seed_);
    net_.init_params(rng);
}

RealismScore AppearanceDiscriminator::score(const Tensor& frame, const Tensor& attention,
                                            nn::Cache* cache) const {
    const int S = cfg_.appearance_resolution;
    check_shape(frame, {3, S, S}, "appearance critic frame");
    require_map(attention, S, "appearance critic");
    return score_through(net_, stack_frame_and_map(frame, attention), cache);
}

Tensor AppearanceDiscriminator::backward(double gscore, const nn::Cache& cache) {
    return backward_through(net_, gscore, cache);
}

void AppearanceDiscriminator::collect_params(std::vector<nn::NamedParam>& out) {
    net_.collect_params("", out);
}

void AppearanceDiscriminator::to_checkpoint(nn::CheckpointData& data) const {
    auto& self = const_cast<AppearanceDiscriminator&>(*this); // params read, not mutated
    std::vector<nn::NamedParam> params;
    self.collect_params(params);
    save_section(data, "discriminator_a", cfg_, init_seed_, params);
}

AppearanceDiscriminator AppearanceDiscriminator::from_checkpoint(
    const nn::CheckpointData& data) {
    DiscriminatorConfig cfg = DiscriminatorConfig::from_echo(section_meta(data, "discriminator_a"));
    AppearanceDiscriminator d(cfg, section_seed(data, "discriminator_a"));
    std::vector<nn::NamedParam> params;
    d.collect_params(params);
    load_section(data, "discriminator_a", params);
    return d;
}

// --------------------------------------------------------- MotionDiscriminator

nn::Sequential MotionDiscriminator::build(const DiscriminatorConfig& cfg) {
    const auto& w = cfg.motion_widths;
    nn::Sequential seq;
    DepthState ds{cfg.clip_length};
    if (cfg.scale == NetScale::Faithful) {
        add_conv3d(seq, "conv1", 4, w[0], ds, 1);
        seq.emplace<nn::MaxPool3d>("pool1", 1, 2, 2, 1, 2, 2); // spatial only
        add_conv3d(seq, "conv2", w[0], w[1], ds, 1);
        add_pool3d(seq, "pool2", ds);
        add_conv3d(seq, "conv3a", w[1], w[2], ds, 1);
        add_conv3d(seq, "conv3b", w[2], w[3], ds, 1);
        add_pool3d(seq, "pool3", ds);
        add_conv3d(seq, "conv4a", w[3], w[4], ds, 1);
        add_conv3d(seq, "conv4b", w[4], w[5], ds, 1);
        add_pool3d(seq, "pool4", ds);
        add_conv3d(seq, "conv5a", w[5], w[6], ds, 1);
        add_conv3d(seq, "conv5b", w[6], w[7], ds, 1);
        seq.emplace<nn::MeanOverDepth>("collapse");
        seq.emplace<nn::Conv2d>("head", w[7], cfg.motion_head_channels, 3, 2, 1);
        seq.emplace<nn::ReLU>("head.relu");
        seq.emplace<nn::MaxPool2d>("head.pool", 3, 2);
    } else {
        add_conv3d(seq, "conv1", 4, w[0], ds, 2);
        add_pool3d(seq, "pool1", ds);
        add_conv3d(seq, "conv2", w[0], w[1], ds, 2);
        seq.emplace<nn::MeanOverDepth>("collapse");
        seq.emplace<nn::Conv2d>("head", w[1], cfg.motion_head_channels, 3, 2, 1);
        seq.emplace<nn::ReLU>("head.relu");
    }
    seq.emplace<nn::Linear>("fc1", cfg.motion_flatten_dim(), cfg.motion_fc_width);
    seq.emplace<nn::ReLU>("fc1.relu");
    seq.emplace<nn::Linear>("fc2", cfg.motion_fc_width, 1);
    seq.emplace<nn::Sigmoid>("squash");
    return seq;
}

MotionDiscriminator::MotionDiscriminator(DiscriminatorConfig cfg, std::uint64_t init_seed)
    : cfg_(std::move(cfg)), init_seed_(init_seed) {
    cfg_.validate();
    net_ = build(cfg_);
    Rng rng(init_seed_);
    net_.init_params(rng);
}

RealismScore MotionDiscriminator::score(const Tensor& clip, const std::vector<Tensor>& maps,
                                        nn::Cache* cache) const {
    const int S = cfg_.motion_resolution;
    check_shape(clip, {3, cfg_.clip_length, S, S}, "motion critic clip");
    return score_through(net_, stack_clip_and_maps(clip, maps), cache);
}

Tensor MotionDiscriminator::backward(double gscore, const nn::Cache& cache) {
    return backward_through(net_, gscore, cache);
}

void MotionDiscriminator::collect_params(std::vector<nn::NamedParam>& out) {
    net_.collect_params("", out);
}

void MotionDiscriminator::to_checkpoint(nn::CheckpointData& data) const {
    auto& self = const_cast<MotionDiscriminator&>(*this); // params read, not mutated
    std::vector<nn::NamedParam> params;
    self.collect_params(params);
    save_section(data, "discriminator_m", cfg_, init_seed_, params);
}

MotionDiscriminator MotionDiscriminator::from_checkpoint(const nn::CheckpointData& data) {
    DiscriminatorConfig cfg = DiscriminatorConfig::from_echo(section_meta(data, "discriminator_m"));
    MotionDiscriminator d(cfg, section_seed(data, "discriminator_m"));
    std::vector<nn::NamedParam> params;
    d.collect_params(params);
    load_section(data, "discriminator_m", params);
    return d;
}

} // namespace tanet::gan
