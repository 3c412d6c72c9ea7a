#include "tanet/train/dataset.hpp"

#include <algorithm>

#include "tanet/core/error.hpp"
#include "tanet/data/mask.hpp"
#include "tanet/gen/generator.hpp"

namespace tanet::train {

ClipDataset::ClipDataset(const std::vector<Sequence>& seqs, int R, int L, int template_size)
    : R_(R), L_(L), T_(template_size) {
    if (R < 16) throw ArgumentError("dataset resolution must be >= 16, got " + std::to_string(R));
    if (L < 1) throw ArgumentError("clip length must be >= 1, got " + std::to_string(L));
    for (int si = 0; si < static_cast<int>(seqs.size()); ++si) {
        const Sequence& seq = seqs[static_cast<std::size_t>(si)];
        seq.validate();
        PerSequence ps;
        ps.masks.resize(seq.frames.size());
        for (std::size_t fi = 0; fi < seq.frames.size(); ++fi) {
            ResizedFrame rf = resize_and_normalize(seq.frames[fi].image, R);
            if (const auto& ann = seq.annotations[fi]) {
                GroundTruthMask m = rasterize_mask(rf.transform.to_resized(*ann), R);
                if (!m.degenerate) ps.masks[fi] = m.mask.reshaped({1, R, R});
            }
            ps.resized.push_back(std::move(rf.image));
        }
        ps.tmpl = gen::crop_template(seq.frames[0].image, *seq.annotations[0], T_).chw;
        const int n = seq.size();
        for (int center = 0; center < n; ++center) {
            bool ok = true;
            const int start = center - (L - 1) / 2;
            for (int k = 0; k < L && ok; ++k)
                ok = ps.masks[static_cast<std::size_t>(std::clamp(start + k, 0, n - 1))]
                         .has_value();
            if (ok) index_.emplace_back(si, center);
        }
        seqs_.push_back(std::move(ps));
    }
}

TrainSample ClipDataset::at(std::size_t i) const {
    if (i >= index_.size())
        throw ArgumentError("sample index " + std::to_string(i) + " outside dataset of size " +
                            std::to_string(index_.size()));
    const auto [si, center] = index_[i];
    const PerSequence& ps = seqs_[static_cast<std::size_t>(si)];
    TrainSample s;
    s.sequence = si;
    s.center = center;
    s.clip = make_clip(ps.resized, center, L_).to_tensor();
    const int n = static_cast<int>(ps.resized.size());
    const int start = center - (L_ - 1) / 2;
    for (int k = 0; k < L_; ++k)
        s.masks.push_back(*ps.masks[static_cast<std::size_t>(std::clamp(start + k, 0, n - 1))]);
    s.tmpl = ps.tmpl;
    return s;
}

TrainSample ClipDataset::sample(Rng& rng) const {
    if (index_.empty()) throw ArgumentError("cannot sample from an empty dataset");
    return at(static_cast<std::size_t>(rng.uniform_int(static_cast<int>(index_.size()))));
}

} // namespace tanet::train
