#include "tanet/gen/generator.hpp"

#include <algorithm>
#include <sstream>

#include "tanet/core/error.hpp"

namespace tanet::gen {
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

// Depth geometry for the faithful 3-D stack: kernels and pool strides clamp
// to the remaining depth so any L >= 1 works. Spatial factor is 2 per stage.
struct DepthState {
    int d;
};

void add_conv3d(nn::Sequential& seq, const std::string& name, int in_c, int out_c,
                DepthState& ds, int spatial_stride) {
    const int kd = std::min(3, ds.d);
    const int pd = kd == 3 ? 1 : 0;
    seq.emplace<nn::Conv3d>(name, in_c, out_c, kd, 3, 3, 1, spatial_stride, spatial_stride,
                            pd, 1, 1);
    ds.d = (ds.d + 2 * pd - kd) + 1; // stride 1 in depth
    seq.emplace<nn::ReLU>(name + ".relu");
}

void add_pool3d(nn::Sequential& seq, const std::string& name, DepthState& ds) {
    const int kd = std::min(2, ds.d);
    seq.emplace<nn::MaxPool3d>(name, kd, 2, 2, kd, 2, 2);
    ds.d = (ds.d - kd) / kd + 1;
}

} // namespace

GeneratorConfig GeneratorConfig::tiny(int R) {
    GeneratorConfig cfg;
    cfg.R = R;
    cfg.L = 3;
    cfg.scale = NetScale::Tiny;
    cfg.template_size = 32;
    cfg.motion_widths = {8, 16};
    cfg.appearance_widths = {8, 16};
    cfg.decoder_groups = 2;
    return cfg;
}

GeneratorConfig GeneratorConfig::faithful(int R) {
    GeneratorConfig cfg;
    cfg.R = R;
    cfg.L = 3;
    cfg.scale = NetScale::Faithful;
    cfg.template_size = 128;
    cfg.motion_widths = {64, 128, 256, 256, 512, 512, 512, 512};
    cfg.appearance_widths = {64, 64, 128, 256, 512};
    cfg.decoder_groups = 5;
    return cfg;
}

void GeneratorConfig::validate() const {
    if (R < 16) throw ArgumentError("working resolution R must be >= 16, got " + std::to_string(R));
    if (L < 1) throw ArgumentError("clip length L must be >= 1, got " + std::to_string(L));
    if (template_size < 8)
        throw ArgumentError("template_size must be >= 8, got " + std::to_string(template_size));
    if (decoder_groups < 1) throw ArgumentError("decoder_groups must be >= 1");
    const int stride = encoder_stride();
    if (R % stride != 0)
        throw ArgumentError("R=" + std::to_string(R) + " is not divisible by " +
                            std::to_string(stride) + " (" + std::to_string(decoder_groups) +
                            " upsample groups must reproduce R exactly)");
    if (scale == NetScale::Tiny) {
        if (motion_widths.size() != 2 || appearance_widths.size() != 2 || decoder_groups != 2)
            throw ArgumentError("tiny scale expects 2 encoder stages and 2 decoder groups");
    } else {
        if (motion_widths.size() != 8 || appearance_widths.size() != 5 || decoder_groups != 5)
            throw ArgumentError(
                "faithful scale expects 8 motion widths, 5 appearance widths, 5 groups");
    }
    const int fused = fused_channels();
    if (fused >> decoder_groups == 0)
        throw ArgumentError("fused channel count " + std::to_string(fused) +
                            " cannot halve across " + std::to_string(decoder_groups) +
                            " decoder groups");
}

std::map<std::string, std::string> GeneratorConfig::echo() const {
    return {{"R", std::to_string(R)},
            {"L", std::to_string(L)},
            {"scale", scale == NetScale::Tiny ? "tiny" : "faithful"},
            {"template_size", std::to_string(template_size)},
            {"motion_widths", join_ints(motion_widths)},
            {"appearance_widths", join_ints(appearance_widths)},
            {"decoder_groups", std::to_string(decoder_groups)}};
}

GeneratorConfig GeneratorConfig::from_echo(const std::map<std::string, std::string>& meta) {
    GeneratorConfig cfg;
    try {
        cfg.R = std::stoi(meta.at("R"));
        cfg.L = std::stoi(meta.at("L"));
        const std::string& s = meta.at("scale");
        if (s == "tiny")
            cfg.scale = NetScale::Tiny;
        else if (s == "faithful")
            cfg.scale = NetScale::Faithful;
        else
            throw FormatError("unknown scale \"" + s + "\" in checkpoint");
        cfg.template_size = std::stoi(meta.at("template_size"));
        cfg.motion_widths = split_ints(meta.at("motion_widths"));
        cfg.appearance_widths = split_ints(meta.at("appearance_widths"));
        cfg.decoder_groups = std::stoi(meta.at("decoder_groups"));
    } catch (const std::out_of_range&) {
        throw FormatError("checkpoint is missing generator config keys");
    } catch (const std::invalid_argument&) {
        throw FormatError("checkpoint has malformed generator config values");
    }
    cfg.validate();
    return cfg;
}

// ------------------------------------------------------------------ builders

nn::Sequential TanetGenerator::build_motion_encoder(const GeneratorConfig& cfg) {
    nn::Sequential seq;
    DepthState ds{cfg.L};
    if (cfg.scale == NetScale::Tiny) {
        int in_c = 3;
        for (std::size_t i = 0; i < cfg.motion_widths.size(); ++i) {
            const int kd = std::min(3, ds.d);
            const int pd = kd == 3 ? 1 : 0;
            seq.emplace<nn::Conv3d>("conv" + std::to_string(i + 1), in_c, cfg.motion_widths[i],
                                    kd, 3, 3, 1, 2, 2, pd, 1, 1);
            ds.d = (ds.d + 2 * pd - kd) + 1;
            seq.emplace<nn::ReLU>("relu" + std::to_string(i + 1));
            in_c = cfg.motion_widths[i];
        }
    } else {
        const auto& w = cfg.motion_widths;
        add_conv3d(seq, "conv1", 3, w[0], ds, 1);
        seq.emplace<nn::MaxPool3d>("pool1", 1, 2, 2, 1, 2, 2);
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
        add_pool3d(seq, "pool5", ds);
    }
    seq.emplace<nn::MeanOverDepth>("collapse");
    return seq;
}

namespace {

nn::Sequential build_2d_encoder(const GeneratorConfig& cfg) {
    nn::Sequential seq;
    if (cfg.scale == NetScale::Tiny) {
        int in_c = 3;
        for (std::size_t i = 0; i < cfg.appearance_widths.size(); ++i) {
            seq.emplace<nn::Conv2d>("conv" + std::to_string(i + 1), in_c,
                                    cfg.appearance_widths[i], 3, 2, 1);
            seq.emplace<nn::ReLU>("relu" + std::to_string(i + 1));
            in_c = cfg.appearance_widths[i];
        }
        return seq;
    }
    const auto& w = cfg.appearance_widths;
    seq.emplace<nn::Conv2d>("stem", 3, w[0], 7, 7, 2, 2, 3, 3);
    seq.emplace<nn::ReLU>("stem.relu");
    seq.emplace<nn::MaxPool2d>("stem.pool", 3, 3, 2, 2, 1, 1);
    int in_c = w[0];
    for (int stage = 1; stage <= 4; ++stage) {
        const int out_c = w[static_cast<std::size_t>(stage)];
        const int s = stage == 1 ? 1 : 2;
        const std::string base = "stage" + std::to_string(stage);
        seq.emplace<nn::Conv2d>(base + ".conv1", in_c, out_c, 3, s, 1);
        seq.emplace<nn::ReLU>(base + ".relu1");
        seq.emplace<nn::Conv2d>(base + ".conv2", out_c, out_c, 3, 1, 1);
        seq.emplace<nn::ReLU>(base + ".relu2");
        in_c = out_c;
    }
    return seq;
}

} // namespace

nn::Sequential TanetGenerator::build_appearance_encoder(const GeneratorConfig& cfg) {
    return build_2d_encoder(cfg);
}

nn::Sequential TanetGenerator::build_template_encoder(const GeneratorConfig& cfg) {
    nn::Sequential seq = build_2d_encoder(cfg);
    seq.emplace<nn::GlobalAvgPool2d>("gap");
    return seq;
}

nn::Sequential TanetGenerator::build_decoder(const GeneratorConfig& cfg) {
    nn::Sequential seq;
    int c = cfg.fused_channels();
    for (int g = 1; g <= cfg.decoder_groups; ++g) {
        const std::string base = "group" + std::to_string(g);
        const int half = c / 2;
        seq.emplace<nn::ConvTranspose2d>(base + ".deconv1", c, half, 3, 1, 1);
        seq.emplace<nn::ReLU>(base + ".relu1");
        seq.emplace<nn::ConvTranspose2d>(base + ".deconv2", half, half, 3, 1, 1);
        seq.emplace<nn::ReLU>(base + ".relu2");
        seq.emplace<nn::ConvTranspose2d>(base + ".deconv3", half, half, 3, 1, 1);
        seq.emplace<nn::ReLU>(base + ".relu3");
        seq.emplace<nn::NearestUpsample2d>(base + ".up");
        c = half;
    }
    seq.emplace<nn::Conv2d>("head", c, 1, 1, 1, 0);
    seq.emplace<nn::Sigmoid>("squash");
    return seq;
}

// ----------------------------------------------------------------- free ops

Tensor fuse_features(const Tensor& motion, const Tensor& appearance, const Tensor& tmpl) {
    if (motion.rank() != 3 || appearance.rank() != 3 || tmpl.rank() != 3)
        throw ShapeError("fuse_features expects rank-3 inputs");
    const int h = motion.dim(1), w = motion.dim(2);
    if (appearance.dim(1) != h || appearance.dim(2) != w)
        throw ShapeError("fuse_features: motion " + motion.shape_string() +
                         " vs appearance " + appearance.shape_string() +
                         " spatial size mismatch");
    if (tmpl.dim(1) != 1 || tmpl.dim(2) != 1)
        throw ShapeError("fuse_features: template must be (C,1,1), got " +
                         tmpl.shape_string());
    const int cm = motion.dim(0), ca = appearance.dim(0), ct = tmpl.dim(0);
    Tensor out({cm + ca + ct, h, w});
    const long hw = static_cast<long>(h) * w;
    std::copy(motion.data(), motion.data() + cm * hw, out.data());
    std::copy(appearance.data(), appearance.data() + ca * hw, out.data() + cm * hw);
    for (int c = 0; c < ct; ++c) {
        double* plane = out.data() + (static_cast<long>(cm + ca + c)) * hw;
        std::fill(plane, plane + hw, tmpl[c]);
    }
    return out;
}

void split_fused_grad(const Tensor& gfused, int cm, int ca, int ct, Tensor* gm, Tensor* ga,
                      Tensor* gt) {
    const int h = gfused.dim(1), w = gfused.dim(2);
    if (gfused.dim(0) != cm + ca + ct)
        throw ShapeError("split_fused_grad: channel count mismatch");
    const long hw = static_cast<long>(h) * w;
    *gm = Tensor({cm, h, w});
    *ga = Tensor({ca, h, w});
    *gt = Tensor({ct, 1, 1});
    std::copy(gfused.data(), gfused.data() + cm * hw, gm->data());
    std::copy(gfused.data() + cm * hw, gfused.data() + (cm + ca) * hw, ga->data());
    for (int c = 0; c < ct; ++c) {
        const double* plane = gfused.data() + (static_cast<long>(cm + ca + c)) * hw;
        double s = 0.0;
        for (long i = 0; i < hw; ++i) s += plane[i];
        (*gt)[c] = s;
    }
}

Image crop_template(const Image& frame, const BoundingBox& box, int side) {
    const double x0 = std::max(box.x, 0.0);
    const double y0 = std::max(box.y, 0.0);
    const double x1 = std::min(box.x + box.w, static_cast<double>(frame.width()));
    const double y1 = std::min(box.y + box.h, static_cast<double>(frame.height()));
    if (x1 - x0 < 1.0 || y1 - y0 < 1.0)
        throw ArgumentError("template crop is empty: box intersects less than one pixel");
    Image out(side, side);
    const int H = frame.height(), W = frame.width();
    for (int ty = 0; ty < side; ++ty)
        for (int tx = 0; tx < side; ++tx) {
            const double sx = std::clamp(x0 + (tx + 0.5) / side * (x1 - x0) - 0.5, 0.0, W - 1.0);
            const double sy = std::clamp(y0 + (ty + 0.5) / side * (y1 - y0) - 0.5, 0.0, H - 1.0);
            const int ix = static_cast<int>(sx), iy = static_cast<int>(sy);
            const int ix1 = std::min(ix + 1, W - 1), iy1 = std::min(iy + 1, H - 1);
            const double fx = sx - ix, fy = sy - iy;
            for (int c = 0; c < 3; ++c) {
                const double top = frame.at(c, iy, ix) * (1 - fx) + frame.at(c, iy, ix1) * fx;
                const double bot = frame.at(c, iy1, ix) * (1 - fx) + frame.at(c, iy1, ix1) * fx;
                out.at(c, ty, tx) = top * (1 - fy) + bot * fy;
            }
        }
    return out;
}

// ------------------------------------------------------------ TanetGenerator

TanetGenerator::TanetGenerator(GeneratorConfig cfg, std::uint64_t init_seed)
    : cfg_(std::move(cfg)), init_seed_(init_seed) {
    cfg_.validate();
    motion_ = build_motion_encoder(cfg_);
    appearance_ = build_appearance_encoder(cfg_);
    template_ = build_template_encoder(cfg_);
    decoder_ = build_decoder(cfg_);
    Rng rng(init_seed_);
    motion_.init_params(rng);
    appearance_.init_params(rng);
    template_.init_params(rng);
    decoder_.init_params(rng);
}

Tensor TanetGenerator::encode_motion(const Tensor& clip, nn::Cache* cache) const {
    check_shape(clip, {3, cfg_.L, cfg_.R, cfg_.R}, "motion encoder input");
    return motion_.forward(clip, cache);
}

Tensor TanetGenerator::encode_appearance(const Tensor& frame, nn::Cache* cache) const {
    check_shape(frame, {3, cfg_.R, cfg_.R}, "appearance encoder input");
    return appearance_.forward(frame, cache);
}

Tensor TanetGenerator::encode_template(const Tensor& tmpl, nn::Cache* cache) const {
    check_shape(tmpl, {3, cfg_.template_size, cfg_.template_size}, "template encoder input");
    return template_.forward(tmpl, cache);
}

Tensor TanetGenerator::decode_attention(const Tensor& fused, nn::Cache* cache) const {
    const int hw = cfg_.feature_hw();
    check_shape(fused, {cfg_.fused_channels(), hw, hw}, "decoder input");
    Tensor map = decoder_.forward(fused, cache);
    return map;
}

std::vector<Tensor> TanetGenerator::predict_training(const Tensor& clip, const Tensor& tmpl,
                                                     GeneratorCaches* caches) const {
    check_shape(clip, {3, cfg_.L, cfg_.R, cfg_.R}, "training-mode clip");
    const int L = cfg_.L, R = cfg_.R;
    if (caches) {
        caches->appearance.assign(static_cast<std::size_t>(L), nn::Cache{});
        caches->decoder.assign(static_cast<std::size_t>(L), nn::Cache{});
        caches->appearance_feats.clear();
    }
    Tensor mf = motion_.forward(clip, caches ? &caches->motion : nullptr);
    Tensor tf = template_.forward(tmpl, caches ? &caches->tmpl : nullptr);
    std::vector<Tensor> maps;
    maps.reserve(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i) {
        Tensor frame({3, R, R});
        for (int c = 0; c < 3; ++c)
            std::copy(clip.data() + (static_cast<long>(c) * L + i) * R * R,
                      clip.data() + (static_cast<long>(c) * L + i + 1) * R * R,
                      frame.data() + static_cast<long>(c) * R * R);
        Tensor af =
            appearance_.forward(frame, caches ? &caches->appearance[static_cast<std::size_t>(i)]
                                              : nullptr);
        Tensor fused = fuse_features(mf, af, tf);
        maps.push_back(decoder_.forward(
            fused, caches ? &caches->decoder[static_cast<std::size_t>(i)] : nullptr));
        if (caches) caches->appearance_feats.push_back(std::move(af));
    }
    if (caches) {
        caches->motion_feat = std::move(mf);
        caches->template_feat = std::move(tf);
    }
    return maps;
}

Tensor TanetGenerator::predict_tracking(const Tensor& clip, const Tensor& tmpl) const {
    check_shape(clip, {3, cfg_.L, cfg_.R, cfg_.R}, "tracking-mode clip");
    const int L = cfg_.L, R = cfg_.R;
    const int center = (L - 1) / 2;
    Tensor mf = motion_.forward(clip, nullptr);
    Tensor tf = template_.forward(tmpl, nullptr);
    Tensor frame({3, R, R});
    for (int c = 0; c < 3; ++c)
        std::copy(clip.data() + (static_cast<long>(c) * L + center) * R * R,
                  clip.data() + (static_cast<long>(c) * L + center + 1) * R * R,
                  frame.data() + static_cast<long>(c) * R * R);
    Tensor af = appearance_.forward(frame, nullptr);
    return decoder_.forward(fuse_features(mf, af, tf), nullptr);
}

void TanetGenerator::backward_training(const std::vector<Tensor>& gmaps,
                                       const GeneratorCaches& caches) {
    const int L = cfg_.L;
    if (static_cast<int>(gmaps.size()) != L)
        throw ShapeError("backward_training expects " + std::to_string(L) + " map gradients");
    const int cm = cfg_.motion_channels(), ca = cfg_.appearance_channels(),
              ct = cfg_.template_channels();
    Tensor gm_total, gt_total;
    for (int i = 0; i < L; ++i) {
        Tensor gfused =
            decoder_.backward(gmaps[static_cast<std::size_t>(i)],
                              caches.decoder.at(static_cast<std::size_t>(i)));
        Tensor gm, ga, gt;
        split_fused_grad(gfused, cm, ca, ct, &gm, &ga, &gt);
        appearance_.backward(ga, caches.appearance.at(static_cast<std::size_t>(i)));
        if (gm_total.empty()) {
            gm_total = std::move(gm);
            gt_total = std::move(gt);
        } else {
            for (long j = 0; j < gm_total.numel(); ++j) gm_total[j] += gm[j];
            for (long j = 0; j < gt_total.numel(); ++j) gt_total[j] += gt[j];
        }
    }
    motion_.backward(gm_total, caches.motion);
    template_.backward(gt_total, caches.tmpl);
}

void TanetGenerator::collect_params(std::vector<nn::NamedParam>& out) {
    motion_.collect_params("motion", out);
    appearance_.collect_params("appearance", out);
    template_.collect_params("template", out);
    decoder_.collect_params("decoder", out);
}

void TanetGenerator::to_checkpoint(nn::CheckpointData& data) const {
    auto& self = const_cast<TanetGenerator&>(*this); // params read, not mutated
    std::vector<nn::NamedParam> params;
    self.collect_params(params);
    data.meta["generator.version"] = kVersion;
    data.meta["generator.init_seed"] = std::to_string(init_seed_);
    for (const auto& [k, v] : cfg_.echo()) data.meta["generator.cfg." + k] = v;
    for (const auto& p : params) data.tensors.emplace_back("generator." + p.name, p.param->value);
}

TanetGenerator TanetGenerator::from_checkpoint(const nn::CheckpointData& data) {
    std::map<std::string, std::string> cfg_meta;
    const std::string prefix = "generator.cfg.";
    for (const auto& [k, v] : data.meta)
        if (k.rfind(prefix, 0) == 0) cfg_meta[k.substr(prefix.size())] = v;
    if (cfg_meta.empty())
        throw FormatError("checkpoint has no generator section");
    GeneratorConfig cfg = GeneratorConfig::from_echo(cfg_meta);
    std::uint64_t seed = 0;
    if (auto it = data.meta.find("generator.init_seed"); it != data.meta.end())
        seed = std::stoull(it->second);
    TanetGenerator g(cfg, seed);
    std::vector<nn::NamedParam> params;
    g.collect_params(params);
    for (auto& p : params) {
        const Tensor* t = data.find("generator." + p.name);
        if (!t) throw FormatError("checkpoint is missing generator tensor " + p.name);
        if (t->shape() != p.param->value.shape())
            throw FormatError("checkpoint tensor generator." + p.name + " has shape " +
                              t->shape_string() + ", expected " +
                              p.param->value.shape_string());
        p.param->value = *t;
    }
    return g;
}

} // namespace tanet::gen
