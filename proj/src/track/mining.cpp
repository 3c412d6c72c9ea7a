#include <algorithm>
#include <cmath>
#include <vector>

#include "tanet/core/error.hpp"
#include "tanet/track/tracker.hpp"

namespace tanet::track {
namespace {

std::pair<int, int> map_extent(const Tensor& attn) {
    if (attn.rank() == 2) return {attn.dim(0), attn.dim(1)};
    if (attn.rank() == 3 && attn.dim(0) == 1) return {attn.dim(1), attn.dim(2)};
    throw ShapeError("attention must be an (H,W) or (1,H,W) map, got " + attn.shape_string());
}

} // namespace

std::vector<AttentionComponent> attention_components(const Tensor& attn, double threshold) {
    const auto [H, W] = map_extent(attn);
    const double* a = attn.data();
    std::vector<char> in(static_cast<std::size_t>(H) * W, 0);
    for (long i = 0; i < static_cast<long>(H) * W; ++i) in[i] = a[i] > threshold;

    std::vector<char> seen(in.size(), 0);
    std::vector<AttentionComponent> comps;
    std::vector<long> stack;
    for (long start = 0; start < static_cast<long>(in.size()); ++start) {
        if (!in[start] || seen[start]) continue;
        AttentionComponent comp;
        double sum = 0.0, sx = 0.0, sy = 0.0;
        stack.assign(1, start);
        seen[start] = 1;
        while (!stack.empty()) {
            const long i = stack.back();
            stack.pop_back();
            const int y = static_cast<int>(i / W), x = static_cast<int>(i % W);
            ++comp.area;
            sum += a[i];
            sx += x + 0.5;
            sy += y + 0.5;
            for (int ny = std::max(0, y - 1); ny <= std::min(H - 1, y + 1); ++ny)
                for (int nx = std::max(0, x - 1); nx <= std::min(W - 1, x + 1); ++nx) {
                    const long j = static_cast<long>(ny) * W + nx;
                    if (in[j] && !seen[j]) {
                        seen[j] = 1;
                        stack.push_back(j);
                    }
                }
        }
        comp.mean_activation = sum / static_cast<double>(comp.area);
        comp.cx = sx / static_cast<double>(comp.area);
        comp.cy = sy / static_cast<double>(comp.area);
        comps.push_back(comp);
    }
    return comps;
}

SearchRegion mine_global_candidates(const Tensor& attn, const CoordTransform& to_resized,
                                    int frame_w, int frame_h, const BoundingBox& prev_box,
                                    double k_global, double tau) {
    if (k_global < 1.0 || tau <= 0.0 || tau > 1.0)
        throw ArgumentError("mine_global_candidates: scale must be >= 1 and tau in (0,1]");
    const auto [H, W] = map_extent(attn);
    (void)H;
    (void)W;
    double peak = attn[0];
    for (long i = 1; i < attn.numel(); ++i) peak = std::max(peak, attn[i]);

    const SearchRegion whole{frame_w / 2.0, frame_h / 2.0, static_cast<double>(frame_w),
                             static_cast<double>(frame_h)};
    if (peak <= 0.0) return whole;

    const auto comps = attention_components(attn, tau * peak);
    if (comps.empty()) return whole;

    const auto original_center = [&](const AttentionComponent& c) {
        return std::pair<double, double>{c.cx / to_resized.sx, c.cy / to_resized.sy};
    };
    const auto dist_to_prev = [&](const AttentionComponent& c) {
        const auto [ox, oy] = original_center(c);
        return std::hypot(ox - prev_box.cx(), oy - prev_box.cy());
    };
    const AttentionComponent* best = &comps[0];
    for (const AttentionComponent& c : comps) {
        if (c.mean_activation != best->mean_activation) {
            if (c.mean_activation > best->mean_activation) best = &c;
        } else if (c.area != best->area) {
            if (c.area > best->area) best = &c;
        } else if (dist_to_prev(c) < dist_to_prev(*best)) {
            best = &c;
        }
    }

    const auto [ox, oy] = original_center(*best);
    const SearchRegion region{ox, oy, k_global * prev_box.w, k_global * prev_box.h};
    return region.clipped(frame_w, frame_h);
}

} // namespace tanet::track
