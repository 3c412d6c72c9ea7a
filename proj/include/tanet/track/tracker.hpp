#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tanet/data/geometry.hpp"
#include "tanet/data/sequence.hpp"
#include "tanet/eval/metrics.hpp"
#include "tanet/gen/generator.hpp"

namespace tanet::track {

enum class SearchMode { Local, Global };
const char* mode_name(SearchMode mode); // "local" / "global"

// Candidate window handed to the baseline tracker, center + extent form.
struct SearchRegion {
    double cx = 0.0, cy = 0.0;
    double sw = 0.0, sh = 0.0;

    BoundingBox box() const { return BoundingBox::from_center(cx, cy, sw, sh); }
    static SearchRegion around(const BoundingBox& b, double scale);

    // Intersected with the frame; always at least one pixel when the frame
    // itself is non-empty.
    SearchRegion clipped(int frame_w, int frame_h) const;
};

struct StepOutput {
    BoundingBox box;
    double score = 0.0; // normalized response in [0, 1]
};

// Behavioral contract for the underlying per-frame tracker. Adapters own
// score normalization to [0, 1] so the switch thresholds stay comparable.
class BaselineTracker {
public:
    virtual ~BaselineTracker() = default;
    virtual void init(const Image& frame, const BoundingBox& box) = 0;
    virtual StepOutput step(const Image& frame, const SearchRegion& region) = 0;
};

// Core correlation match, strict about its window: the region must contain
// the template. Score is (NCC+1)/2; windows or templates without intensity
// variance contribute zero correlation, so their score pins at 0.5.
StepOutput ncc_step(const Image& frame, const Tensor& tmpl, const SearchRegion& region);

// Reference baseline: luminance template matching. step() widens clipped
// regions to template size before delegating to ncc_step, so edge-hugging
// windows stay legal.
class NccTracker : public BaselineTracker {
public:
    void init(const Image& frame, const BoundingBox& box) override;
    StepOutput step(const Image& frame, const SearchRegion& region) override;
    const Tensor& tmpl() const { return tmpl_; }

private:
    Tensor tmpl_; // (th, tw) luminance patch
};

// Connected region of the thresholded attention map, statistics in resized
// map coordinates. Exposed so tests can rank components independently.
struct AttentionComponent {
    double mean_activation = 0.0;
    long area = 0;
    double cx = 0.0, cy = 0.0; // centroid of pixel centers
};
std::vector<AttentionComponent> attention_components(const Tensor& attn, double threshold);

// Turns a full-frame attention map into one global search region: keep
// pixels strictly above tau * peak, take 8-connected components, rank by
// mean activation (ties: larger area, then nearer to the previous target),
// and center a k_global-scaled copy of the previous box on the winner's
// centroid. An empty thresholded map falls back to the whole frame.
SearchRegion mine_global_candidates(const Tensor& attn, const CoordTransform& to_resized,
                                    int frame_w, int frame_h, const BoundingBox& prev_box,
                                    double k_global = 4.0, double tau = 0.5);

struct TrackerConfig {
    double beta1 = 0.8;    // response threshold separating confident frames
    int beta2 = 5;         // consecutive low-confidence frames before a global step
    double k_local = 2.0;  // local window scale vs previous box
    double k_global = 4.0; // mined global region scale vs previous box
    double mine_tau = 0.5; // attention threshold as a fraction of the peak
    bool local_only = false;

    void validate() const;
    std::map<std::string, std::string> echo() const;
    static TrackerConfig from_echo(const std::map<std::string, std::string>& meta);
};

// One confidence-driven switch transition. Reads the previous frame's
// score, bumps or resets the fail counter in place, and names the search
// mode for the current frame: confident -> local; low-confidence -> local
// while the counter still has headroom, else global with the counter reset.
SearchMode advance_switch(double prev_score, double beta1, int beta2, int& beta);

struct TrackResult {
    int frame_index = 0;
    BoundingBox box;
    double score = 0.0;
    SearchMode mode = SearchMode::Local;
    int beta_after = 0; // fail counter once this frame was processed
};

struct TrackOutcome {
    std::vector<TrackResult> results;
    std::string error; // empty when the whole sequence was tracked
    bool ok() const { return error.empty(); }
};

// Full-frame attention supplier for global steps. Implementations return
// the map in resized coordinates plus the transform back to the frame.
class AttentionSource {
public:
    virtual ~AttentionSource() = default;
    virtual std::pair<Tensor, CoordTransform> attention(int frame_index) = 0;
};

// Production source: runs the trained generator on a sliding clip around
// the requested frame, conditioned on the sequence's first-frame target.
class GeneratorAttention : public AttentionSource {
public:
    GeneratorAttention(const gen::TanetGenerator& g, const Sequence& seq,
                       const BoundingBox& init_box);
    std::pair<Tensor, CoordTransform> attention(int frame_index) override;

private:
    const gen::TanetGenerator& g_;
    std::vector<Image> resized_;
    std::vector<CoordTransform> transforms_;
    Tensor tmpl_;
};

// Tracks a sequence from its annotated first frame: local steps around the
// last estimate while confidence holds, global re-detection through mined
// attention regions once the fail counter saturates. A null attention
// source or cfg.local_only keeps every step local (the counter still
// follows its cycle). Baseline exceptions end the run early with partial
// results and the error recorded.
TrackOutcome track_sequence(const Sequence& seq, const BoundingBox& init_box,
                            BaselineTracker& baseline, AttentionSource* attention,
                            const TrackerConfig& cfg);

// Result file: one line per frame, "frame_index, x, y, w, h, score, mode".
void write_track_results(const std::filesystem::path& file,
                         const std::vector<TrackResult>& results);
std::vector<TrackResult> read_track_results(const std::filesystem::path& file);

using BaselineFactory = std::function<std::unique_ptr<BaselineTracker>()>;
using AttentionFactory = std::function<std::unique_ptr<AttentionSource>(const Sequence&,
                                                                        const BoundingBox&)>;

struct SweepRow {
    double beta1 = 0.0;
    int beta2 = 0;
    eval::MetricReport report;
};

// Runs the tracker over every sequence for each (beta1, beta2) grid point
// with everything else fixed, evaluating predictions against the
// sequences' own annotations. Predicted frames (everything after the given
// first frame) are pooled across sequences.
std::vector<SweepRow> sweep_parameters(const std::vector<Sequence>& seqs,
                                       const std::vector<std::pair<double, int>>& grid,
                                       const TrackerConfig& base,
                                       const BaselineFactory& make_baseline,
                                       const AttentionFactory& make_attention);

void write_sweep_csv(const std::filesystem::path& file, const std::vector<SweepRow>& rows);

} // namespace tanet::track
