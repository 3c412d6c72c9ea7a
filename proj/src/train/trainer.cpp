#include "tanet/train/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tanet/core/error.hpp"
#include "tanet/nn/checkpoint.hpp"
#include "tanet/nn/layers.hpp"
#include "tanet/train/losses.hpp"

namespace tanet::train {
namespace {

constexpr const char* kVersion = "1";

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_finite(double v, const char* term, int iter) {
    if (!std::isfinite(v))
        throw TrainingError(std::string(term) + " became non-finite at iteration " +
                            std::to_string(iter));
}

int clip_depth(const Tensor& clip) {
    if (clip.rank() != 4 || clip.dim(0) != 3)
        throw ShapeError("expected a (3,L,H,W) clip, got " + clip.shape_string());
    return clip.dim(1);
}

// Frame i of a (3,L,H,W) clip as (3,H,W).
Tensor clip_frame(const Tensor& clip, int i) {
    const int L = clip_depth(clip);
    const long hw = static_cast<long>(clip.dim(2)) * clip.dim(3);
    Tensor out({3, clip.dim(2), clip.dim(3)});
    for (int c = 0; c < 3; ++c)
        std::copy(clip.data() + (static_cast<long>(c) * L + i) * hw,
                  clip.data() + (static_cast<long>(c) * L + i + 1) * hw, out.data() + c * hw);
    return out;
}

Tensor resample_clip(const Tensor& clip, int side) {
    const int L = clip_depth(clip);
    if (clip.dim(2) == side && clip.dim(3) == side) return clip;
    Tensor out({3, L, side, side});
    const long hw = static_cast<long>(side) * side;
    for (int i = 0; i < L; ++i) {
        const Tensor frame = resample_chw(clip_frame(clip, i), side);
        for (int c = 0; c < 3; ++c)
            std::copy(frame.data() + c * hw, frame.data() + (c + 1) * hw,
                      out.data() + (static_cast<long>(c) * L + i) * hw);
    }
    return out;
}

// The frame the single-image critic and the tracker treat as current.
int center_index(int L) { return (L - 1) / 2; }

// d(generator objective)/d(score value) and the objective's value itself,
// for one fake score. Saturating form: log(1 - D); non-saturating: -log D.
std::pair<double, double> g_objective(const gan::RealismScore& s, bool non_saturating) {
    if (non_saturating) return {-s.log_score(), -1.0 / s.value};
    return {s.log_one_minus(), -1.0 / (1.0 - s.value)};
}

void require_batch(const std::vector<TrainSample>& batch, const char* who) {
    if (batch.empty()) throw ArgumentError(std::string(who) + ": empty batch");
}

} // namespace

const char* role_name(StepRole role) {
    switch (role) {
    case StepRole::Generator: return "G-step";
    case StepRole::AppearanceCritic: return "Da-step";
    case StepRole::MotionCritic: return "Dm-step";
    }
    throw ArgumentError("unknown step role");
}

StepRole schedule_role(int iter, int n1, int n2) {
    if (n1 < 1 || n2 < 1) throw ArgumentError("schedule periods must be positive");
    if (iter % n1 == 1) return StepRole::AppearanceCritic;
    if (iter % n2 == 1) return StepRole::MotionCritic;
    return StepRole::Generator;
}

void TrainingConfig::validate() const {
    if (lambda1 < 0.0 || lambda2 < 0.0)
        throw ArgumentError("adversarial loss weights must be non-negative");
    if (n1 < 1 || n2 < 1) throw ArgumentError("schedule periods must be positive");
    if (batch_size < 1) throw ArgumentError("batch size must be positive");
    if (lr_g < 0.0 || lr_a < 0.0 || lr_m < 0.0)
        throw ArgumentError("learning rates must be non-negative");
    if (max_iters < 0) throw ArgumentError("max_iters must be non-negative");
    if (checkpoint_every < 0) throw ArgumentError("checkpoint_every must be non-negative");
}

std::map<std::string, std::string> TrainingConfig::echo() const {
    return {{"lambda1", fmt_double(lambda1)},
            {"lambda2", fmt_double(lambda2)},
            {"n1", std::to_string(n1)},
            {"n2", std::to_string(n2)},
            {"batch_size", std::to_string(batch_size)},
            {"lr_g", fmt_double(lr_g)},
            {"lr_a", fmt_double(lr_a)},
            {"lr_m", fmt_double(lr_m)},
            {"max_iters", std::to_string(max_iters)},
            {"seed", std::to_string(seed)},
            {"checkpoint_every", std::to_string(checkpoint_every)},
            {"two_sided_bce", two_sided_bce ? "1" : "0"},
            {"non_saturating_g", non_saturating_g ? "1" : "0"}};
}

TrainingConfig TrainingConfig::from_echo(const std::map<std::string, std::string>& meta) {
    TrainingConfig cfg;
    try {
        cfg.lambda1 = std::stod(meta.at("lambda1"));
        cfg.lambda2 = std::stod(meta.at("lambda2"));
        cfg.n1 = std::stoi(meta.at("n1"));
        cfg.n2 = std::stoi(meta.at("n2"));
        cfg.batch_size = std::stoi(meta.at("batch_size"));
        cfg.lr_g = std::stod(meta.at("lr_g"));
        cfg.lr_a = std::stod(meta.at("lr_a"));
        cfg.lr_m = std::stod(meta.at("lr_m"));
        cfg.max_iters = std::stoi(meta.at("max_iters"));
        cfg.seed = std::stoull(meta.at("seed"));
        cfg.checkpoint_every = std::stoi(meta.at("checkpoint_every"));
        cfg.two_sided_bce = meta.at("two_sided_bce") == "1";
        cfg.non_saturating_g = meta.at("non_saturating_g") == "1";
    } catch (const std::out_of_range&) {
        throw FormatError("training config echo is missing a key");
    } catch (const std::invalid_argument&) {
        throw FormatError("training config echo has a malformed value");
    }
    cfg.validate();
    return cfg;
}

void write_loss_log(const std::filesystem::path& file, const std::vector<LossBreakdown>& log) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open loss log " + file.string() + " for writing");
    out << "iter,role,bce,app,mot,total\n";
    for (const LossBreakdown& lb : log)
        out << lb.iter << ',' << role_name(lb.role) << ',' << fmt_double(lb.bce) << ','
            << fmt_double(lb.app_adv) << ',' << fmt_double(lb.mot_adv) << ','
            << fmt_double(lb.total) << '\n';
    if (!out) throw IoError("failed writing loss log " + file.string());
}

std::pair<double, double> appearance_adversarial_terms(const std::vector<TrainSample>& batch,
                                                       const gen::TanetGenerator& g,
                                                       const gan::AppearanceDiscriminator& da,
                                                       bool non_saturating) {
    require_batch(batch, "appearance_adversarial_terms");
    const int S = da.config().appearance_resolution;
    double d_loss = 0.0, g_term = 0.0;
    for (const TrainSample& s : batch) {
        const int ci = center_index(clip_depth(s.clip));
        const Tensor frame = resample_chw(clip_frame(s.clip, ci), S);
        const Tensor real = resample_chw(s.masks.at(ci), S);
        const Tensor fake = resample_chw(g.predict_training(s.clip, s.tmpl).at(ci), S);
        const gan::RealismScore sr = da.score(frame, real);
        const gan::RealismScore sf = da.score(frame, fake);
        d_loss -= sr.log_score() + sf.log_one_minus();
        g_term += g_objective(sf, non_saturating).first;
    }
    const double m = static_cast<double>(batch.size());
    return {d_loss / m, g_term / m};
}

std::pair<double, double> motion_adversarial_terms(const std::vector<TrainSample>& batch,
                                                   const gen::TanetGenerator& g,
                                                   const gan::MotionDiscriminator& dm,
                                                   bool non_saturating) {
    require_batch(batch, "motion_adversarial_terms");
    const int S = dm.config().motion_resolution;
    double d_loss = 0.0, g_term = 0.0;
    for (const TrainSample& s : batch) {
        const int L = clip_depth(s.clip);
        const Tensor clip = resample_clip(s.clip, S);
        std::vector<Tensor> real(L), fake(L);
        const std::vector<Tensor> maps = g.predict_training(s.clip, s.tmpl);
        for (int i = 0; i < L; ++i) {
            real[i] = resample_chw(s.masks.at(i), S);
            fake[i] = resample_chw(maps.at(i), S);
        }
        const gan::RealismScore sr = dm.score(clip, real);
        const gan::RealismScore sf = dm.score(clip, fake);
        d_loss -= sr.log_score() + sf.log_one_minus();
        g_term += g_objective(sf, non_saturating).first;
    }
    const double m = static_cast<double>(batch.size());
    return {d_loss / m, g_term / m};
}

LossBreakdown generator_total_loss(const std::vector<TrainSample>& batch,
                                   const gen::TanetGenerator& g,
                                   const gan::AppearanceDiscriminator& da,
                                   const gan::MotionDiscriminator& dm, const TrainingConfig& cfg,
                                   int iter) {
    require_batch(batch, "generator_total_loss");
    const int Sa = da.config().appearance_resolution;
    const int Sm = dm.config().motion_resolution;
    double bce = 0.0, app = 0.0, mot = 0.0;
    for (const TrainSample& s : batch) {
        const int L = clip_depth(s.clip);
        const int ci = center_index(L);
        const std::vector<Tensor> maps = g.predict_training(s.clip, s.tmpl);
        double sb = 0.0;
        for (int i = 0; i < L; ++i) sb += bce_loss(maps.at(i), s.masks.at(i), cfg.two_sided_bce);
        bce += sb / L;
        if (cfg.lambda1 != 0.0) {
            const Tensor frame = resample_chw(clip_frame(s.clip, ci), Sa);
            const gan::RealismScore sf = da.score(frame, resample_chw(maps.at(ci), Sa));
            app += g_objective(sf, cfg.non_saturating_g).first;
        }
        if (cfg.lambda2 != 0.0) {
            std::vector<Tensor> fake(L);
            for (int i = 0; i < L; ++i) fake[i] = resample_chw(maps.at(i), Sm);
            const gan::RealismScore sf = dm.score(resample_clip(s.clip, Sm), fake);
            mot += g_objective(sf, cfg.non_saturating_g).first;
        }
    }
    const double m = static_cast<double>(batch.size());
    bce /= m;
    app /= m;
    mot /= m;
    check_finite(bce, "pixel loss", iter);
    check_finite(app, "appearance adversarial term", iter);
    check_finite(mot, "motion adversarial term", iter);
    return {iter, StepRole::Generator, bce, app, mot,
            bce + cfg.lambda1 * app + cfg.lambda2 * mot};
}

LossBreakdown generator_loss_and_grads(const std::vector<TrainSample>& batch,
                                       gen::TanetGenerator& g, gan::AppearanceDiscriminator& da,
                                       gan::MotionDiscriminator& dm, const TrainingConfig& cfg,
                                       int iter) {
    require_batch(batch, "generator_loss_and_grads");
    const int Sa = da.config().appearance_resolution;
    const int Sm = dm.config().motion_resolution;
    const double m = static_cast<double>(batch.size());
    double bce = 0.0, app = 0.0, mot = 0.0;
    for (const TrainSample& s : batch) {
        const int L = clip_depth(s.clip);
        const int R = s.clip.dim(2);
        const int ci = center_index(L);
        gen::GeneratorCaches caches;
        const std::vector<Tensor> maps = g.predict_training(s.clip, s.tmpl, &caches);
        std::vector<Tensor> gmaps(L);
        for (int i = 0; i < L; ++i) gmaps[i] = Tensor(maps[i].shape());

        Tensor gpix;
        double sb = 0.0;
        for (int i = 0; i < L; ++i) {
            sb += bce_loss(maps[i], s.masks.at(i), cfg.two_sided_bce, &gpix);
            const double scale = 1.0 / (L * m);
            for (long k = 0; k < gpix.numel(); ++k) gmaps[i][k] += gpix[k] * scale;
        }
        bce += sb / L;

        if (cfg.lambda1 != 0.0) {
            const Tensor frame = resample_chw(clip_frame(s.clip, ci), Sa);
            nn::BilinearResize2d rz(Sa, Sa);
            nn::Cache rzc;
            const bool same = (R == Sa);
            const Tensor fake = same ? maps[ci] : rz.forward(maps[ci], &rzc);
            nn::Cache dac;
            const gan::RealismScore sf = da.score(frame, fake, &dac);
            const auto [term, dterm] = g_objective(sf, cfg.non_saturating_g);
            app += term;
            const Tensor gin = da.backward(cfg.lambda1 * dterm / m, dac);
            Tensor gmap = gan::attention_grad(gin);
            if (!same) gmap = rz.backward(gmap, rzc);
            for (long k = 0; k < gmap.numel(); ++k) gmaps[ci][k] += gmap[k];
        }

        if (cfg.lambda2 != 0.0) {
            nn::BilinearResize2d rz(Sm, Sm);
            std::vector<nn::Cache> rzcs(L);
            const bool same = (R == Sm);
            std::vector<Tensor> fake(L);
            for (int i = 0; i < L; ++i)
                fake[i] = same ? maps[i] : rz.forward(maps[i], &rzcs[i]);
            nn::Cache dmc;
            const gan::RealismScore sf = dm.score(resample_clip(s.clip, Sm), fake, &dmc);
            const auto [term, dterm] = g_objective(sf, cfg.non_saturating_g);
            mot += term;
            const Tensor gin = dm.backward(cfg.lambda2 * dterm / m, dmc);
            const std::vector<Tensor> gms = gan::attention_grads(gin);
            for (int i = 0; i < L; ++i) {
                const Tensor gmap = same ? gms[i] : rz.backward(gms[i], rzcs[i]);
                for (long k = 0; k < gmap.numel(); ++k) gmaps[i][k] += gmap[k];
            }
        }

        g.backward_training(gmaps, caches);
    }
    bce /= m;
    app /= m;
    mot /= m;
    check_finite(bce, "pixel loss", iter);
    check_finite(app, "appearance adversarial term", iter);
    check_finite(mot, "motion adversarial term", iter);
    return {iter, StepRole::Generator, bce, app, mot,
            bce + cfg.lambda1 * app + cfg.lambda2 * mot};
}

double appearance_critic_loss_and_grads(const std::vector<TrainSample>& batch,
                                        const gen::TanetGenerator& g,
                                        gan::AppearanceDiscriminator& da, int iter) {
    require_batch(batch, "appearance_critic_loss_and_grads");
    const int S = da.config().appearance_resolution;
    const double m = static_cast<double>(batch.size());
    double loss = 0.0;
    for (const TrainSample& s : batch) {
        const int ci = center_index(clip_depth(s.clip));
        const Tensor frame = resample_chw(clip_frame(s.clip, ci), S);
        const Tensor real = resample_chw(s.masks.at(ci), S);
        // The generator only supplies negatives here, so no caches and no
        // gradient path back into it.
        const Tensor fake = resample_chw(g.predict_training(s.clip, s.tmpl).at(ci), S);
        nn::Cache cr, cf;
        const gan::RealismScore sr = da.score(frame, real, &cr);
        const gan::RealismScore sf = da.score(frame, fake, &cf);
        loss -= sr.log_score() + sf.log_one_minus();
        da.backward(-1.0 / (sr.value * m), cr);
        da.backward(1.0 / ((1.0 - sf.value) * m), cf);
    }
    loss /= m;
    check_finite(loss, "appearance critic loss", iter);
    return loss;
}

double motion_critic_loss_and_grads(const std::vector<TrainSample>& batch,
                                    const gen::TanetGenerator& g, gan::MotionDiscriminator& dm,
                                    int iter) {
    require_batch(batch, "motion_critic_loss_and_grads");
    const int S = dm.config().motion_resolution;
    const double m = static_cast<double>(batch.size());
    double loss = 0.0;
    for (const TrainSample& s : batch) {
        const int L = clip_depth(s.clip);
        const Tensor clip = resample_clip(s.clip, S);
        std::vector<Tensor> real(L), fake(L);
        const std::vector<Tensor> maps = g.predict_training(s.clip, s.tmpl);
        for (int i = 0; i < L; ++i) {
            real[i] = resample_chw(s.masks.at(i), S);
            fake[i] = resample_chw(maps.at(i), S);
        }
        nn::Cache cr, cf;
        const gan::RealismScore sr = dm.score(clip, real, &cr);
        const gan::RealismScore sf = dm.score(clip, fake, &cf);
        loss -= sr.log_score() + sf.log_one_minus();
        dm.backward(-1.0 / (sr.value * m), cr);
        dm.backward(1.0 / ((1.0 - sf.value) * m), cf);
    }
    loss /= m;
    check_finite(loss, "motion critic loss", iter);
    return loss;
}

TrainSession::TrainSession(gen::TanetGenerator g, gan::AppearanceDiscriminator da,
                           gan::MotionDiscriminator dm, TrainingConfig cfg)
    : cfg_(cfg),
      g_(std::make_unique<gen::TanetGenerator>(std::move(g))),
      da_(std::make_unique<gan::AppearanceDiscriminator>(std::move(da))),
      dm_(std::make_unique<gan::MotionDiscriminator>(std::move(dm))),
      sampler_(cfg.seed) {
    cfg_.validate();
    if (dm_->config().clip_length != g_->config().L)
        throw ArgumentError("motion critic clip length " +
                            std::to_string(dm_->config().clip_length) +
                            " does not match generator clip length " +
                            std::to_string(g_->config().L));
    std::vector<nn::NamedParam> pg, pa, pm;
    g_->collect_params(pg);
    da_->collect_params(pa);
    dm_->collect_params(pm);
    opt_g_ = std::make_unique<nn::Adagrad>(std::move(pg), cfg_.lr_g);
    opt_a_ = std::make_unique<nn::Adagrad>(std::move(pa), cfg_.lr_a);
    opt_m_ = std::make_unique<nn::Adagrad>(std::move(pm), cfg_.lr_m);
}

LossBreakdown TrainSession::step(const ClipDataset& data) {
    const int it = ++iter_;
    // The batch is drawn before the role dispatch so the sampler advances
    // identically on every iteration; a resumed run sees the same batches.
    std::vector<TrainSample> batch;
    batch.reserve(cfg_.batch_size);
    for (int i = 0; i < cfg_.batch_size; ++i) batch.push_back(data.sample(sampler_));
    opt_g_->zero_grads();
    opt_a_->zero_grads();
    opt_m_->zero_grads();
    LossBreakdown lb;
    switch (schedule_role(it, cfg_.n1, cfg_.n2)) {
    case StepRole::Generator:
        lb = generator_loss_and_grads(batch, *g_, *da_, *dm_, cfg_, it);
        opt_g_->step();
        break;
    case StepRole::AppearanceCritic: {
        const double d = appearance_critic_loss_and_grads(batch, *g_, *da_, it);
        opt_a_->step();
        lb = {it, StepRole::AppearanceCritic, 0.0, d, 0.0, d};
        break;
    }
    case StepRole::MotionCritic: {
        const double d = motion_critic_loss_and_grads(batch, *g_, *dm_, it);
        opt_m_->step();
        lb = {it, StepRole::MotionCritic, 0.0, 0.0, d, d};
        break;
    }
    }
    log_.push_back(lb);
    return lb;
}

void TrainSession::run(const ClipDataset& data, const std::filesystem::path& checkpoint_dir) {
    while (iter_ < cfg_.max_iters) {
        step(data);
        if (cfg_.checkpoint_every > 0 && iter_ % cfg_.checkpoint_every == 0 &&
            !checkpoint_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof name, "state_%06d.ckpt", iter_);
            save(checkpoint_dir / name);
        }
    }
}

void TrainSession::save(const std::filesystem::path& file) const {
    nn::CheckpointData data;
    g_->to_checkpoint(data);
    da_->to_checkpoint(data);
    dm_->to_checkpoint(data);
    data.meta["training.version"] = kVersion;
    data.meta["training.iter"] = std::to_string(iter_);
    for (const auto& [k, v] : cfg_.echo()) data.meta["training.cfg." + k] = v;
    const Rng::State& st = sampler_.state();
    data.meta["training.sampler_state"] = std::to_string(st[0]) + "," + std::to_string(st[1]) +
                                          "," + std::to_string(st[2]) + "," +
                                          std::to_string(st[3]);
    const std::array<std::pair<const char*, nn::Adagrad*>, 3> opts = {
        {{"opt_g.", opt_g_.get()}, {"opt_a.", opt_a_.get()}, {"opt_m.", opt_m_.get()}}};
    for (const auto& [prefix, opt] : opts)
        for (const auto& [name, acc] : opt->named_accumulators())
            data.tensors.emplace_back(prefix + name, *acc);
    nn::save_checkpoint(file, data);
}

TrainSession TrainSession::load(const std::filesystem::path& file) {
    const nn::CheckpointData data = nn::load_checkpoint(file);
    std::map<std::string, std::string> cfg_meta;
    const std::string prefix = "training.cfg.";
    for (const auto& [k, v] : data.meta)
        if (k.rfind(prefix, 0) == 0) cfg_meta[k.substr(prefix.size())] = v;
    if (cfg_meta.empty()) throw FormatError("checkpoint has no training section");
    const TrainingConfig cfg = TrainingConfig::from_echo(cfg_meta);

    TrainSession sess(gen::TanetGenerator::from_checkpoint(data),
                      gan::AppearanceDiscriminator::from_checkpoint(data),
                      gan::MotionDiscriminator::from_checkpoint(data), cfg);

    try {
        sess.iter_ = std::stoi(data.meta.at("training.iter"));
        std::istringstream ss(data.meta.at("training.sampler_state"));
        Rng::State st{};
        char sep = ',';
        for (std::size_t i = 0; i < st.size(); ++i) {
            if (i > 0) ss >> sep;
            ss >> st[i];
        }
        if (!ss || sep != ',') throw FormatError("malformed sampler state in checkpoint");
        sess.sampler_.set_state(st);
    } catch (const std::out_of_range&) {
        throw FormatError("checkpoint training section is incomplete");
    } catch (const std::invalid_argument&) {
        throw FormatError("checkpoint training section has a malformed value");
    }

    const std::array<std::pair<const char*, nn::Adagrad*>, 3> opts = {
        {{"opt_g.", sess.opt_g_.get()},
         {"opt_a.", sess.opt_a_.get()},
         {"opt_m.", sess.opt_m_.get()}}};
    for (const auto& [pfx, opt] : opts)
        for (auto& [name, acc] : opt->named_accumulators()) {
            const Tensor* t = data.find(pfx + name);
            if (!t)
                throw FormatError(std::string("checkpoint is missing optimizer tensor ") + pfx +
                                  name);
            if (t->shape() != acc->shape())
                throw FormatError(std::string("checkpoint optimizer tensor ") + pfx + name +
                                  " has the wrong shape");
            *acc = *t;
        }
    return sess;
}

} // namespace tanet::train
