#include "tanet/cli/commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "tanet/cli/dataset_io.hpp"
#include "tanet/core/error.hpp"
#include "tanet/data/image_io.hpp"
#include "tanet/eval/report.hpp"
#include "tanet/nn/checkpoint.hpp"
#include "tanet/train/dataset.hpp"

namespace tanet::cli {
namespace {

bool verbose() {
    static const bool on = [] {
        const char* v = std::getenv("TANET_VERBOSE");
        return v != nullptr && *v != '\0' && std::string(v) != "0";
    }();
    return on;
}

void note(const std::string& line) {
    if (verbose()) std::cerr << "[tanet] " << line << '\n';
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string());
}

std::string trimmed(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Runs fn(0..n-1) across up to `workers` threads. Failures are collected
// per index and the lowest-index one is rethrown after every worker joined,
// so the surfaced error does not depend on scheduling.
void for_each_index(int n, int workers, const std::function<void(int)>& fn) {
    const int k = std::min(std::max(workers, 1), n);
    if (k <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(k));
    for (int t = 0; t < k; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Sequence paths named by an argument that may be a single sequence
// directory or a dataset root.
std::vector<std::filesystem::path> resolve_sequences(const std::filesystem::path& path) {
    if (is_sequence_dir(path)) return {path};
    return list_sequence_dirs(path);
}

constexpr double kLocalColor[3] = {0.0, 1.0, 0.0};
constexpr double kGlobalColor[3] = {1.0, 0.0, 0.0};

} // namespace

std::string frame_file_name(const std::string& prefix, int frame_index) {
    if (frame_index < 0)
        throw ArgumentError("frame index must be >= 0, got " + std::to_string(frame_index));
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08d.png", frame_index + 1);
    return prefix + buf;
}

gen::TanetGenerator load_generator(const std::filesystem::path& checkpoint) {
    return gen::TanetGenerator::from_checkpoint(nn::load_checkpoint(checkpoint));
}

void draw_box_outline(Image& im, const BoundingBox& box, double r, double g, double b) {
    const int w = im.width(), h = im.height();
    if (w == 0 || h == 0) return;
    const long x0 = std::lround(box.x), y0 = std::lround(box.y);
    const long x1 = std::lround(box.x + box.w) - 1, y1 = std::lround(box.y + box.h) - 1;
    if (x1 < x0 || y1 < y0) return;
    if (x1 < 0 || y1 < 0 || x0 >= w || y0 >= h) return;
    const auto paint = [&](long y, long x) {
        im.at(0, static_cast<int>(y), static_cast<int>(x)) = r;
        im.at(1, static_cast<int>(y), static_cast<int>(x)) = g;
        im.at(2, static_cast<int>(y), static_cast<int>(x)) = b;
    };
    for (long x = std::max(x0, 0L); x <= std::min(x1, static_cast<long>(w - 1)); ++x) {
        if (y0 >= 0) paint(y0, x);
        if (y1 < h) paint(y1, x);
    }
    for (long y = std::max(y0, 0L); y <= std::min(y1, static_cast<long>(h - 1)); ++y) {
        if (x0 >= 0) paint(y, x0);
        if (x1 < w) paint(y, x1);
    }
}

void cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    ensure_dir(out_dir);
    write_run_config(out_dir / "config.txt", cfg);
    for (int k = 0; k < cfg.synth.num_sequences; ++k) {
        SyntheticSceneConfig scene = cfg.synth.scene;
        scene.seed = cfg.synth.scene.seed + static_cast<std::uint64_t>(k);
        char name[16];
        std::snprintf(name, sizeof name, "seq_%03d", k);
        write_sequence(make_synthetic_sequence(scene), out_dir / name);
        note(std::string("wrote ") + name + " (seed " + std::to_string(scene.seed) + ")");
    }
}

void cmd_train(const RunConfig& cfg, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir, const std::filesystem::path& resume) {
    cfg.validate();
    ensure_dir(out_dir);

    std::optional<train::TrainSession> session;
    if (resume.empty()) {
        session.emplace(gen::TanetGenerator(cfg.generator, cfg.seed),
                        gan::AppearanceDiscriminator(cfg.discriminator, cfg.seed + 1),
                        gan::MotionDiscriminator(cfg.discriminator, cfg.seed + 2), cfg.training);
    } else {
        session.emplace(train::TrainSession::load(resume));
        note("resumed from " + resume.string() + " at iteration " +
             std::to_string(session->iter()));
    }

    // The echoed config records what actually runs: on resume that is the
    // checkpoint's embedded sections, not the caller's.
    RunConfig effective = cfg;
    effective.training = session->config();
    effective.generator = session->generator().config();
    effective.discriminator = session->appearance_critic().config();
    write_run_config(out_dir / "config.txt", effective);

    const gen::GeneratorConfig& gcfg = session->generator().config();
    const std::vector<Sequence> seqs = load_dataset(data_dir);
    const train::ClipDataset data(seqs, gcfg.R, gcfg.L, gcfg.template_size);
    note("training on " + std::to_string(seqs.size()) + " sequences, " +
         std::to_string(data.size()) + " eligible clips, iterations " +
         std::to_string(session->iter() + 1) + ".." +
         std::to_string(session->config().max_iters));

    session->run(data, out_dir);
    session->save(out_dir / "final.ckpt");
    train::write_loss_log(out_dir / "loss_log.csv", session->log());
    note("finished at iteration " + std::to_string(session->iter()));
}

void cmd_track(const RunConfig& cfg, const std::filesystem::path& sequence_path,
               const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir,
               bool overlays) {
    cfg.validate();
    ensure_dir(out_dir);
    const std::vector<std::filesystem::path> dirs = resolve_sequences(sequence_path);

    std::optional<gen::TanetGenerator> g;
    if (!checkpoint.empty()) g.emplace(load_generator(checkpoint));

    RunConfig effective = cfg;
    if (g) effective.generator = g->config();
    write_run_config(out_dir / "config.txt", effective);
    note("tracking " + std::to_string(dirs.size()) + " sequence(s), " +
         (g ? "attention-guided" : "local baseline only"));

    for_each_index(static_cast<int>(dirs.size()), cfg.workers, [&](int i) {
        const Sequence seq = load_sequence(dirs[static_cast<std::size_t>(i)],
                                           detect_layout(dirs[static_cast<std::size_t>(i)]));
        track::NccTracker baseline;
        std::unique_ptr<track::AttentionSource> attn;
        if (g && !cfg.tracker.local_only)
            attn = std::make_unique<track::GeneratorAttention>(*g, seq, *seq.annotations[0]);
        const track::TrackOutcome out =
            track_sequence(seq, *seq.annotations[0], baseline, attn.get(), cfg.tracker);

        // Frame 0 restates the given initialization; the result file keeps
        // predictions only.
        std::vector<track::TrackResult> predicted;
        if (out.results.size() > 1)
            predicted.assign(out.results.begin() + 1, out.results.end());
        write_track_results(out_dir / (seq.name + ".txt"), predicted);

        if (overlays) {
            const auto overlay_dir = out_dir / (seq.name + "_overlay");
            ensure_dir(overlay_dir);
            for (const track::TrackResult& r : out.results) {
                Image im = seq.frames[static_cast<std::size_t>(r.frame_index)].image;
                const double* c =
                    r.mode == track::SearchMode::Global ? kGlobalColor : kLocalColor;
                draw_box_outline(im, r.box, c[0], c[1], c[2]);
                write_png(overlay_dir / frame_file_name("", r.frame_index), im);
            }
        }
        if (!out.ok()) throw Error("sequence " + seq.name + " aborted: " + out.error);
        note("tracked " + seq.name + " (" + std::to_string(predicted.size()) + " frames)");
    });
}

void cmd_eval(const RunConfig& cfg, const std::filesystem::path& results_dir,
              const std::filesystem::path& gt_dir, const std::filesystem::path& out_dir) {
    cfg.validate();
    ensure_dir(out_dir);
    const std::vector<std::filesystem::path> dirs = resolve_sequences(gt_dir);
    const int n = static_cast<int>(dirs.size());

    std::vector<std::string> names(static_cast<std::size_t>(n));
    std::vector<eval::MetricReport> reports(static_cast<std::size_t>(n));
    std::vector<eval::BoxList> preds(static_cast<std::size_t>(n)),
        truths(static_cast<std::size_t>(n));

    for_each_index(n, cfg.workers, [&](int i) {
        const auto u = static_cast<std::size_t>(i);
        const Sequence seq = load_sequence(dirs[u], detect_layout(dirs[u]));
        names[u] = seq.name;
        const auto file = results_dir / (seq.name + ".txt");
        if (!std::filesystem::is_regular_file(file))
            throw NotFoundError("no result file for sequence " + seq.name + ": " +
                                file.string());
        const int frames = seq.size();
        eval::BoxList pred(static_cast<std::size_t>(frames - 1));
        eval::BoxList truth(static_cast<std::size_t>(frames - 1));
        for (int f = 1; f < frames; ++f)
            truth[static_cast<std::size_t>(f - 1)] = seq.annotations[static_cast<std::size_t>(f)];
        for (const track::TrackResult& r : track::read_track_results(file)) {
            if (r.frame_index < 1 || r.frame_index >= frames)
                throw ArgumentError("sequence " + seq.name + ": result row for frame " +
                                    std::to_string(r.frame_index) +
                                    " outside the predicted range 1.." +
                                    std::to_string(frames - 1));
            auto& slot = pred[static_cast<std::size_t>(r.frame_index - 1)];
            if (slot)
                throw ArgumentError("sequence " + seq.name +
                                    ": duplicate result row for frame " +
                                    std::to_string(r.frame_index));
            slot = r.box;
        }
        try {
            reports[u] = eval::evaluate(pred, truth);
        } catch (const MetricError& e) {
            throw MetricError("sequence " + seq.name + ": " + e.what());
        }
        preds[u] = std::move(pred);
        truths[u] = std::move(truth);
        note("evaluated " + seq.name);
    });

    eval::BoxList pred, truth;
    for (int i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        pred.insert(pred.end(), preds[u].begin(), preds[u].end());
        truth.insert(truth.end(), truths[u].begin(), truths[u].end());
    }
    eval::emit_report(eval::evaluate(pred, truth), out_dir);
    eval::write_sequence_csv(out_dir / "sequences.csv", names, reports);
    write_run_config(out_dir / "config.txt", cfg);
}

std::vector<std::pair<double, int>> parse_grid_spec(const std::string& spec,
                                                    const track::TrackerConfig& base) {
    std::optional<std::vector<double>> beta1;
    std::optional<std::vector<int>> beta2;

    const auto parse_values = [](const std::string& list, const std::string& axis,
                                 auto convert) {
        std::vector<decltype(convert(std::string{}))> out;
        std::istringstream ss(list);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trimmed(item);
            if (item.empty())
                throw ArgumentError("sweep axis " + axis + " has an empty value in \"" + list +
                                    "\"");
            try {
                out.push_back(convert(item));
            } catch (const std::exception&) {
                throw ArgumentError("sweep axis " + axis + ": cannot parse value \"" + item +
                                    "\"");
            }
        }
        if (out.empty()) throw ArgumentError("sweep axis " + axis + " lists no values");
        return out;
    };

    std::istringstream axes(spec);
    std::string axis;
    while (std::getline(axes, axis, ';')) {
        axis = trimmed(axis);
        if (axis.empty()) continue;
        const auto eq = axis.find('=');
        if (eq == std::string::npos)
            throw ArgumentError("sweep axis \"" + axis + "\" is not name=v1,v2,...");
        const std::string name = trimmed(axis.substr(0, eq));
        const std::string values = axis.substr(eq + 1);
        if (name == "beta1") {
            if (beta1) throw ArgumentError("sweep axis beta1 given twice");
            beta1 = parse_values(values, name, [](const std::string& s) { return std::stod(s); });
        } else if (name == "beta2") {
            if (beta2) throw ArgumentError("sweep axis beta2 given twice");
            beta2 = parse_values(values, name, [](const std::string& s) { return std::stoi(s); });
        } else {
            throw ArgumentError("unknown sweep axis \"" + name +
                                "\" (beta1 and beta2 are sweepable)");
        }
    }
    if (!beta1 && !beta2) throw ArgumentError("empty sweep grid");

    const std::vector<double> b1 = beta1.value_or(std::vector<double>{base.beta1});
    const std::vector<int> b2 = beta2.value_or(std::vector<int>{base.beta2});
    std::vector<std::pair<double, int>> grid;
    grid.reserve(b1.size() * b2.size());
    for (double a : b1)
        for (int b : b2) {
            track::TrackerConfig point = base;
            point.beta1 = a;
            point.beta2 = b;
            point.validate();
            grid.emplace_back(a, b);
        }
    return grid;
}

void cmd_sweep(const RunConfig& cfg, const std::string& grid_spec,
               const std::filesystem::path& data_dir, const std::filesystem::path& checkpoint,
               const std::filesystem::path& out_dir) {
    cfg.validate();
    const std::vector<std::pair<double, int>> grid = parse_grid_spec(grid_spec, cfg.tracker);
    ensure_dir(out_dir);

    std::optional<gen::TanetGenerator> g;
    if (!checkpoint.empty()) g.emplace(load_generator(checkpoint));

    RunConfig effective = cfg;
    if (g) effective.generator = g->config();
    write_run_config(out_dir / "config.txt", effective);

    const std::vector<Sequence> seqs = load_dataset(data_dir);
    note("sweeping " + std::to_string(grid.size()) + " grid points over " +
         std::to_string(seqs.size()) + " sequences");

    const track::BaselineFactory make_baseline = [] {
        return std::make_unique<track::NccTracker>();
    };
    track::AttentionFactory make_attention;
    if (g && !cfg.tracker.local_only)
        make_attention = [&g](const Sequence& seq, const BoundingBox& init) {
            return std::unique_ptr<track::AttentionSource>(
                new track::GeneratorAttention(*g, seq, init));
        };

    const std::vector<track::SweepRow> rows =
        sweep_parameters(seqs, grid, cfg.tracker, make_baseline, make_attention);
    write_sweep_csv(out_dir / "sweep.csv", rows);
}

void cmd_attn(const RunConfig& cfg, const std::filesystem::path& checkpoint,
              const std::filesystem::path& sequence_path, const std::filesystem::path& out_dir) {
    cfg.validate();
    ensure_dir(out_dir);
    const gen::TanetGenerator g = load_generator(checkpoint);
    const Sequence seq = load_sequence(sequence_path, detect_layout(sequence_path));

    RunConfig effective = cfg;
    effective.generator = g.config();
    write_run_config(out_dir / "config.txt", effective);

    track::GeneratorAttention source(g, seq, *seq.annotations[0]);
    std::vector<double> seconds(static_cast<std::size_t>(seq.size()));
    for (int i = 0; i < seq.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::pair<Tensor, CoordTransform> map = source.attention(i);
        seconds[static_cast<std::size_t>(i)] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_png_gray(out_dir / frame_file_name("attn_", i), map.first);
    }

    const auto timing_file = out_dir / "timing.csv";
    std::ofstream out(timing_file);
    if (!out) throw IoError("cannot open " + timing_file.string() + " for writing");
    out << "frame,seconds\n";
    char buf[32];
    for (int i = 0; i < seq.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9f", seconds[static_cast<std::size_t>(i)]);
        out << i << ',' << buf << '\n';
    }
    if (!out) throw IoError("failed writing " + timing_file.string());
    note("exported " + std::to_string(seq.size()) + " attention maps");
}

} // namespace tanet::cli
