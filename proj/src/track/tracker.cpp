#include "tanet/track/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tanet/core/error.hpp"
#include "tanet/eval/metrics.hpp"

namespace tanet::track {
namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trimmed(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

BoundingBox clip_box(BoundingBox b, int fw, int fh) {
    b.w = std::min(b.w, static_cast<double>(fw));
    b.h = std::min(b.h, static_cast<double>(fh));
    b.x = std::clamp(b.x, 0.0, fw - b.w);
    b.y = std::clamp(b.y, 0.0, fh - b.h);
    return b;
}

} // namespace

const char* mode_name(SearchMode mode) {
    return mode == SearchMode::Local ? "local" : "global";
}

SearchMode advance_switch(double prev_score, double beta1, int beta2, int& beta) {
    if (beta2 < 0) throw ArgumentError("fail-count limit must be non-negative");
    if (prev_score > beta1) return SearchMode::Local;
    if (beta < beta2) {
        ++beta;
        return SearchMode::Local;
    }
    beta = 0;
    return SearchMode::Global;
}

void TrackerConfig::validate() const {
    if (beta1 < 0.0 || beta1 > 1.0)
        throw ArgumentError("response threshold must lie in [0,1]");
    if (beta2 < 0) throw ArgumentError("fail-count limit must be non-negative");
    if (k_local < 1.0 || k_global < 1.0)
        throw ArgumentError("search window scales must be at least 1");
    if (mine_tau <= 0.0 || mine_tau > 1.0)
        throw ArgumentError("attention threshold fraction must lie in (0,1]");
}

std::map<std::string, std::string> TrackerConfig::echo() const {
    return {{"beta1", fmt(beta1)},
            {"beta2", std::to_string(beta2)},
            {"k_local", fmt(k_local)},
            {"k_global", fmt(k_global)},
            {"mine_tau", fmt(mine_tau)},
            {"local_only", local_only ? "1" : "0"}};
}

TrackerConfig TrackerConfig::from_echo(const std::map<std::string, std::string>& meta) {
    TrackerConfig cfg;
    try {
        cfg.beta1 = std::stod(meta.at("beta1"));
        cfg.beta2 = std::stoi(meta.at("beta2"));
        cfg.k_local = std::stod(meta.at("k_local"));
        cfg.k_global = std::stod(meta.at("k_global"));
        cfg.mine_tau = std::stod(meta.at("mine_tau"));
        cfg.local_only = meta.at("local_only") == "1";
    } catch (const std::out_of_range&) {
        throw FormatError("tracker config echo is missing a key");
    } catch (const std::invalid_argument&) {
        throw FormatError("tracker config echo has a malformed value");
    }
    cfg.validate();
    return cfg;
}

GeneratorAttention::GeneratorAttention(const gen::TanetGenerator& g, const Sequence& seq,
                                       const BoundingBox& init_box)
    : g_(g) {
    if (seq.size() == 0) throw ArgumentError("attention source over an empty sequence");
    const int R = g.config().R;
    resized_.reserve(seq.frames.size());
    transforms_.reserve(seq.frames.size());
    for (const Frame& f : seq.frames) {
        ResizedFrame rf = resize_and_normalize(f.image, R);
        resized_.push_back(std::move(rf.image));
        transforms_.push_back(rf.transform);
    }
    tmpl_ = gen::crop_template(seq.frames[0].image, init_box, g.config().template_size).chw;
}

std::pair<Tensor, CoordTransform> GeneratorAttention::attention(int frame_index) {
    if (frame_index < 0 || frame_index >= static_cast<int>(resized_.size()))
        throw ArgumentError("attention request outside the sequence");
    const Tensor clip = make_clip(resized_, frame_index, g_.config().L).to_tensor();
    return {g_.predict_tracking(clip, tmpl_), transforms_[frame_index]};
}

TrackOutcome track_sequence(const Sequence& seq, const BoundingBox& init_box,
                            BaselineTracker& baseline, AttentionSource* attention,
                            const TrackerConfig& cfg) {
    cfg.validate();
    if (seq.size() == 0) throw ArgumentError("cannot track an empty sequence");

    TrackOutcome out;
    int beta = 0;
    BoundingBox last = clip_box(init_box, seq.frames[0].image.width(),
                                seq.frames[0].image.height());
    double last_score = 1.0;
    try {
        baseline.init(seq.frames[0].image, init_box);
    } catch (const std::exception& e) {
        out.error = std::string("frame 0: ") + e.what();
        return out;
    }
    out.results.push_back({seq.frames[0].index, last, 1.0, SearchMode::Local, 0});

    for (int i = 1; i < seq.size(); ++i) {
        const Image& frame = seq.frames[i].image;
        const int fw = frame.width(), fh = frame.height();
        const SearchMode decided = advance_switch(last_score, cfg.beta1, cfg.beta2, beta);
        const bool global =
            decided == SearchMode::Global && attention != nullptr && !cfg.local_only;
        try {
            SearchRegion region;
            if (global) {
                auto [attn, tf] = attention->attention(i);
                region = mine_global_candidates(attn, tf, fw, fh, last, cfg.k_global,
                                                cfg.mine_tau);
            } else {
                region = SearchRegion::around(last, cfg.k_local).clipped(fw, fh);
            }
            const StepOutput step = baseline.step(frame, region);
            last = clip_box(step.box, fw, fh);
            last_score = step.score;
            out.results.push_back({seq.frames[i].index, last, step.score,
                                   global ? SearchMode::Global : SearchMode::Local, beta});
        } catch (const std::exception& e) {
            out.error = "frame " + std::to_string(seq.frames[i].index) + ": " + e.what();
            return out;
        }
    }
    return out;
}

void write_track_results(const std::filesystem::path& file,
                         const std::vector<TrackResult>& results) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    for (const TrackResult& r : results)
        out << r.frame_index << ", " << fmt(r.box.x) << ", " << fmt(r.box.y) << ", "
            << fmt(r.box.w) << ", " << fmt(r.box.h) << ", " << fmt(r.score) << ", "
            << mode_name(r.mode) << '\n';
    if (!out) throw IoError("failed writing " + file.string());
}

std::vector<TrackResult> read_track_results(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::vector<TrackResult> results;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trimmed(line).empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(trimmed(field));
        if (fields.size() != 7)
            throw FormatError(file.string() + ":" + std::to_string(lineno) +
                              ": expected 7 fields, got " + std::to_string(fields.size()));
        try {
            TrackResult r;
            r.frame_index = std::stoi(fields[0]);
            r.box = {std::stod(fields[1]), std::stod(fields[2]), std::stod(fields[3]),
                     std::stod(fields[4])};
            r.score = std::stod(fields[5]);
            if (fields[6] == "local")
                r.mode = SearchMode::Local;
            else if (fields[6] == "global")
                r.mode = SearchMode::Global;
            else
                throw FormatError(file.string() + ":" + std::to_string(lineno) +
                                  ": unknown mode \"" + fields[6] + "\"");
            results.push_back(r);
        } catch (const std::invalid_argument&) {
            throw FormatError(file.string() + ":" + std::to_string(lineno) +
                              ": malformed numeric field");
        } catch (const std::out_of_range&) {
            throw FormatError(file.string() + ":" + std::to_string(lineno) +
                              ": numeric field out of range");
        }
    }
    return results;
}

std::vector<SweepRow> sweep_parameters(const std::vector<Sequence>& seqs,
                                       const std::vector<std::pair<double, int>>& grid,
                                       const TrackerConfig& base,
                                       const BaselineFactory& make_baseline,
                                       const AttentionFactory& make_attention) {
    if (seqs.empty()) throw ArgumentError("parameter sweep needs at least one sequence");
    if (grid.empty()) throw ArgumentError("parameter sweep needs a non-empty grid");
    if (!make_baseline) throw ArgumentError("parameter sweep needs a baseline factory");

    std::vector<SweepRow> rows;
    for (const auto& [b1, b2] : grid) {
        TrackerConfig cfg = base;
        cfg.beta1 = b1;
        cfg.beta2 = b2;
        eval::BoxList pred, truth;
        for (const Sequence& seq : seqs) {
            if (seq.annotations.empty() || !seq.annotations[0])
                throw ArgumentError("sequence " + seq.name + " lacks an initial annotation");
            const auto baseline = make_baseline();
            std::unique_ptr<AttentionSource> attn;
            if (make_attention) attn = make_attention(seq, *seq.annotations[0]);
            const TrackOutcome out =
                track_sequence(seq, *seq.annotations[0], *baseline, attn.get(), cfg);
            if (!out.ok())
                throw Error("sweep: sequence " + seq.name + " aborted: " + out.error);
            // Frame 0 is the given initialization, not a prediction; scoring
            // it would award every run one perfect frame per sequence.
            for (int i = 1; i < seq.size(); ++i) truth.push_back(seq.annotations[i]);
            for (const TrackResult& r : out.results)
                if (r.frame_index > 0) pred.push_back(r.box);
        }
        rows.push_back({b1, b2, eval::evaluate(pred, truth)});
    }
    return rows;
}

void write_sweep_csv(const std::filesystem::path& file, const std::vector<SweepRow>& rows) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out << "beta1,beta2,auc,pr_at_20,ao,sr_050,sr_075,lt_precision,lt_recall,lt_f1\n";
    for (const SweepRow& r : rows)
        out << fmt(r.beta1) << ',' << r.beta2 << ',' << fmt(r.report.auc) << ','
            << fmt(r.report.pr_at_20) << ',' << fmt(r.report.ao) << ',' << fmt(r.report.sr_050)
            << ',' << fmt(r.report.sr_075) << ',' << fmt(r.report.lt_precision) << ','
            << fmt(r.report.lt_recall) << ',' << fmt(r.report.lt_f1) << '\n';
    if (!out) throw IoError("failed writing " + file.string());
}

} // namespace tanet::track
