#include <algorithm>
#include <cmath>
#include <string>

#include "tanet/core/error.hpp"
#include "tanet/data/image.hpp"
#include "tanet/track/tracker.hpp"

namespace tanet::track {
namespace {

// Variance this small reads as a flat patch; correlation against it is
// meaningless, so the guard pins it to zero.
constexpr double kFlat = 1e-12;

struct IntWindow {
    int x0, y0, w, h;
};

IntWindow integer_window(const SearchRegion& region, int fw, int fh) {
    const SearchRegion r = region.clipped(fw, fh);
    int w = std::clamp(static_cast<int>(std::llround(r.sw)), 1, fw);
    int h = std::clamp(static_cast<int>(std::llround(r.sh)), 1, fh);
    int x0 = std::clamp(static_cast<int>(std::llround(r.cx - r.sw / 2.0)), 0, fw - w);
    int y0 = std::clamp(static_cast<int>(std::llround(r.cy - r.sh / 2.0)), 0, fh - h);
    return {x0, y0, w, h};
}

} // namespace

SearchRegion SearchRegion::around(const BoundingBox& b, double scale) {
    return {b.cx(), b.cy(), b.w * scale, b.h * scale};
}

SearchRegion SearchRegion::clipped(int frame_w, int frame_h) const {
    if (frame_w < 1 || frame_h < 1) throw ArgumentError("clipping against an empty frame");
    const BoundingBox b = box();
    const double x0 = std::clamp(b.x, 0.0, static_cast<double>(frame_w - 1));
    const double y0 = std::clamp(b.y, 0.0, static_cast<double>(frame_h - 1));
    const double x1 = std::clamp(b.x + b.w, x0 + 1.0, static_cast<double>(frame_w));
    const double y1 = std::clamp(b.y + b.h, y0 + 1.0, static_cast<double>(frame_h));
    return {(x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0};
}

StepOutput ncc_step(const Image& frame, const Tensor& tmpl, const SearchRegion& region) {
    if (tmpl.rank() != 2 || tmpl.numel() < 1)
        throw ArgumentError("ncc_step: template must be a non-empty (h,w) patch");
    const int th = tmpl.dim(0), tw = tmpl.dim(1);
    const int fw = frame.width(), fh = frame.height();
    const IntWindow win = integer_window(region, fw, fh);
    if (win.w < tw || win.h < th)
        throw ArgumentError("ncc_step: search window " + std::to_string(win.w) + "x" +
                            std::to_string(win.h) + " is smaller than the template " +
                            std::to_string(tw) + "x" + std::to_string(th));

    const Tensor lum = luminance(frame);
    const long n = static_cast<long>(th) * tw;
    double t_sum = 0.0;
    for (long i = 0; i < n; ++i) t_sum += tmpl[i];
    const double t_mean = t_sum / static_cast<double>(n);
    double t_energy = 0.0;
    for (long i = 0; i < n; ++i) t_energy += (tmpl[i] - t_mean) * (tmpl[i] - t_mean);

    double best = -1.0;
    int bx = win.x0, by = win.y0;
    for (int dy = 0; dy + th <= win.h; ++dy)
        for (int dx = 0; dx + tw <= win.w; ++dx) {
            double p_sum = 0.0, p_sq = 0.0, pt = 0.0;
            for (int y = 0; y < th; ++y) {
                const double* row = lum.data() + static_cast<long>(win.y0 + dy + y) * fw +
                                    win.x0 + dx;
                const double* trow = tmpl.data() + static_cast<long>(y) * tw;
                for (int x = 0; x < tw; ++x) {
                    p_sum += row[x];
                    p_sq += row[x] * row[x];
                    pt += row[x] * trow[x];
                }
            }
            const double p_mean = p_sum / static_cast<double>(n);
            const double p_energy = p_sq - p_sum * p_mean;
            double ncc = 0.0;
            if (p_energy > kFlat && t_energy > kFlat)
                ncc = (pt - p_sum * t_mean) / std::sqrt(p_energy * t_energy);
            const double score = (ncc + 1.0) / 2.0;
            if (score > best) {
                best = score;
                bx = win.x0 + dx;
                by = win.y0 + dy;
            }
        }

    return {BoundingBox{static_cast<double>(bx), static_cast<double>(by),
                        static_cast<double>(tw), static_cast<double>(th)},
            best};
}

void NccTracker::init(const Image& frame, const BoundingBox& box) {
    if (box.w < 1.0 || box.h < 1.0)
        throw ArgumentError("NccTracker: initial box must span at least one pixel");
    const Tensor lum = luminance(frame);
    const int fw = frame.width(), fh = frame.height();
    const int tw = std::clamp(static_cast<int>(std::llround(box.w)), 1, fw);
    const int th = std::clamp(static_cast<int>(std::llround(box.h)), 1, fh);
    const int x0 = std::clamp(static_cast<int>(std::llround(box.x)), 0, fw - tw);
    const int y0 = std::clamp(static_cast<int>(std::llround(box.y)), 0, fh - th);
    tmpl_ = Tensor({th, tw});
    for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x)
            tmpl_[static_cast<long>(y) * tw + x] = lum[static_cast<long>(y0 + y) * fw + x0 + x];
}

StepOutput NccTracker::step(const Image& frame, const SearchRegion& region) {
    if (tmpl_.empty()) throw ArgumentError("NccTracker: step before init");
    const int fw = frame.width(), fh = frame.height();
    const double tw = static_cast<double>(tmpl_.dim(1));
    const double th = static_cast<double>(tmpl_.dim(0));
    SearchRegion r = region.clipped(fw, fh);
    r.sw = std::max(r.sw, tw);
    r.sh = std::max(r.sh, th);
    // Recentering keeps the widened window inside the frame when possible;
    // a frame genuinely smaller than the template still fails in ncc_step.
    if (r.sw <= fw) r.cx = std::clamp(r.cx, r.sw / 2.0, fw - r.sw / 2.0);
    if (r.sh <= fh) r.cy = std::clamp(r.cy, r.sh / 2.0, fh - r.sh / 2.0);
    return ncc_step(frame, tmpl_, r);
}

} // namespace tanet::track
