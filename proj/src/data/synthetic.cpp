#include "tanet/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tanet/core/error.hpp"
#include "tanet/core/rng.hpp"

namespace tanet {
namespace {

struct Palette {
    double r, g, b;
};

struct Actor {
    TargetShape shape;
    double size;
    Palette color;
    Palette accent; // second color for textured patches
    double x0, y0;  // start center
    double vx, vy;  // per-frame velocity (linear / sinusoidal carrier)
    double phase;   // sinusoidal offset
};

double clamp_center(double v, double half, double hi) {
    if (half * 2.0 >= hi) return hi / 2.0;
    return std::clamp(v, half, hi - half);
}

// Linear trajectory: closed form per axis, clamped so the box stays inside
// the frame. Tests verify it analytically from the first two centers.
std::pair<double, double> linear_center(const Actor& a, int t, int frame_size) {
    const double fs = frame_size;
    const double half = a.size / 2.0;
    return {clamp_center(a.x0 + a.vx * t, half, fs),
            clamp_center(a.y0 + a.vy * t, half, fs)};
}

void paint_actor(Image& im, const Actor& a, double cx, double cy) {
    const int fs = im.height();
    const double half = a.size / 2.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - half)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - half)));
    const int x1 = std::min(fs - 1, static_cast<int>(std::ceil(cx + half)));
    const int y1 = std::min(fs - 1, static_cast<int>(std::ceil(cy + half)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            bool inside = false;
            Palette col = a.color;
            switch (a.shape) {
            case TargetShape::Square:
                inside = std::abs(px - cx) <= half && std::abs(py - cy) <= half;
                break;
            case TargetShape::Disc: {
                const double dx = px - cx, dy = py - cy;
                inside = dx * dx + dy * dy <= half * half;
                break;
            }
            case TargetShape::TexturedPatch: {
                inside = std::abs(px - cx) <= half && std::abs(py - cy) <= half;
                const int ux = static_cast<int>(std::floor((px - (cx - half)) / 3.0));
                const int uy = static_cast<int>(std::floor((py - (cy - half)) / 3.0));
                if ((ux + uy) % 2 == 1) col = a.accent;
                break;
            }
            }
            if (!inside) continue;
            im.at(0, y, x) = col.r;
            im.at(1, y, x) = col.g;
            im.at(2, y, x) = col.b;
        }
}

Image make_background(int fs, Rng& rng) {
    // Smooth low-frequency pattern: enough structure for template matching to
    // latch onto something, dark enough to contrast with bright actors.
    const double base = rng.uniform(0.15, 0.35);
    const double amp = rng.uniform(0.05, 0.12);
    const double fx = rng.uniform(1.0, 3.0), fy = rng.uniform(1.0, 3.0);
    const double px = rng.uniform(0.0, 2.0 * M_PI), py = rng.uniform(0.0, 2.0 * M_PI);
    Image im(fs, fs);
    for (int y = 0; y < fs; ++y)
        for (int x = 0; x < fs; ++x) {
            const double u = 2.0 * M_PI * x / fs, v = 2.0 * M_PI * y / fs;
            const double s = base + amp * (std::sin(fx * u + px) + std::cos(fy * v + py)) / 2.0;
            im.at(0, y, x) = std::clamp(s, 0.0, 1.0);
            im.at(1, y, x) = std::clamp(s * 0.9, 0.0, 1.0);
            im.at(2, y, x) = std::clamp(s * 1.1, 0.0, 1.0);
        }
    return im;
}

} // namespace

void SyntheticSceneConfig::validate() const {
    if (frame_size < 16)
        throw ArgumentError("frame_size must be >= 16, got " + std::to_string(frame_size));
    if (num_frames < 1)
        throw ArgumentError("num_frames must be >= 1, got " + std::to_string(num_frames));
    if (target_size < 2)
        throw ArgumentError("target_size must be >= 2, got " + std::to_string(target_size));
    if (target_size > frame_size)
        throw ArgumentError("target (" + std::to_string(target_size) +
                            " px) larger than frame (" + std::to_string(frame_size) + " px)");
    if (speed < 0.0) throw ArgumentError("speed must be >= 0");
    if (distractors < 0) throw ArgumentError("distractors must be >= 0");
    if (noise_sigma < 0.0) throw ArgumentError("noise_sigma must be >= 0");
    for (const auto& [s, e] : occlusion_windows) {
        if (s < 0 || e > num_frames || s >= e)
            throw ArgumentError("occlusion window [" + std::to_string(s) + ", " +
                                std::to_string(e) + ") outside [0, " +
                                std::to_string(num_frames) + ")");
        if (s == 0)
            throw ArgumentError("occlusion window may not cover frame 0 "
                                "(trackers initialize from it)");
    }
}

Sequence make_synthetic_sequence(const SyntheticSceneConfig& cfg) {
    cfg.validate();
    Rng master(cfg.seed);
    Rng bg_rng = master.fork(1);
    Rng actor_rng = master.fork(2);
    Rng noise_rng = master.fork(3);
    Rng walk_rng = master.fork(4);

    const int fs = cfg.frame_size;
    const Image background = make_background(fs, bg_rng);

    auto spawn = [&](double size, bool is_target) {
        Actor a;
        a.shape = cfg.target_shape;
        a.size = size;
        a.color = {actor_rng.uniform(0.7, 1.0), actor_rng.uniform(0.6, 0.95),
                   actor_rng.uniform(0.0, 0.25)};
        a.accent = {a.color.r * 0.55, a.color.g * 0.55, a.color.b * 0.55 + 0.2};
        const double half = size / 2.0;
        const double lo = half, hi = fs - half;
        // Targets spawn away from the walls so linear runs have room to move.
        const double margin = is_target ? 0.25 : 0.0;
        a.x0 = actor_rng.uniform(lo + margin * (hi - lo), hi - margin * (hi - lo));
        a.y0 = actor_rng.uniform(lo + margin * (hi - lo), hi - margin * (hi - lo));
        const double ang = actor_rng.uniform(0.0, 2.0 * M_PI);
        a.vx = cfg.speed * std::cos(ang);
        a.vy = cfg.speed * std::sin(ang);
        a.phase = actor_rng.uniform(0.0, 2.0 * M_PI);
        return a;
    };

    Actor target = spawn(cfg.target_size, true);
    std::vector<Actor> decoys;
    for (int i = 0; i < cfg.distractors; ++i)
        decoys.push_back(spawn(cfg.target_size * actor_rng.uniform(0.8, 1.2), false));

    auto occluded = [&](int t) {
        for (const auto& [s, e] : cfg.occlusion_windows)
            if (t >= s && t < e) return true;
        return false;
    };

    // Random-walk state advances every frame for every actor so occlusion
    // windows do not shift the stream.
    std::vector<std::pair<double, double>> walk_pos;
    walk_pos.emplace_back(target.x0, target.y0);
    for (const auto& d : decoys) walk_pos.emplace_back(d.x0, d.y0);

    Sequence seq;
    seq.name = "synthetic-" + std::to_string(cfg.seed);
    for (int t = 0; t < cfg.num_frames; ++t) {
        auto position = [&](const Actor& a, std::size_t walk_idx) {
            const double half = a.size / 2.0;
            switch (cfg.motion) {
            case MotionKind::Linear:
                return linear_center(a, t, fs);
            case MotionKind::RandomWalk: {
                auto& [wx, wy] = walk_pos[walk_idx];
                if (t > 0) {
                    const double ang = walk_rng.uniform(0.0, 2.0 * M_PI);
                    wx = clamp_center(wx + cfg.speed * std::cos(ang), half, fs);
                    wy = clamp_center(wy + cfg.speed * std::sin(ang), half, fs);
                }
                return std::make_pair(wx, wy);
            }
            case MotionKind::Sinusoidal: {
                const double cx = a.x0 + a.vx * t;
                const double cy = a.y0 + (fs / 6.0) * std::sin(2.0 * M_PI * t / 20.0 + a.phase);
                return std::make_pair(clamp_center(cx, half, fs), clamp_center(cy, half, fs));
            }
            }
            return std::make_pair(a.x0, a.y0);
        };

        Image im = background;
        for (std::size_t i = 0; i < decoys.size(); ++i) {
            auto [cx, cy] = position(decoys[i], i + 1);
            paint_actor(im, decoys[i], cx, cy);
        }
        auto [tx, ty] = position(target, 0);
        const bool hidden = occluded(t);
        if (!hidden) paint_actor(im, target, tx, ty);

        if (cfg.noise_sigma > 0.0)
            for (long i = 0; i < im.chw.numel(); ++i)
                im.chw[i] = std::clamp(im.chw[i] + noise_rng.normal(0.0, cfg.noise_sigma), 0.0, 1.0);

        Frame f;
        f.index = t;
        f.original_h = fs;
        f.original_w = fs;
        f.image = std::move(im);
        seq.frames.push_back(std::move(f));
        if (hidden)
            seq.annotations.emplace_back(std::nullopt);
        else
            seq.annotations.emplace_back(BoundingBox::from_center(
                tx, ty, static_cast<double>(cfg.target_size), static_cast<double>(cfg.target_size)));
    }
    seq.validate();
    return seq;
}

} // namespace tanet
