#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "tanet/cli/commands.hpp"
#include "tanet/cli/dataset_io.hpp"
#include "tanet/cli/main.hpp"
#include "tanet/cli/run_config.hpp"
#include "tanet/core/error.hpp"
#include "tanet/data/image_io.hpp"
#include "tanet/data/synthetic.hpp"
#include "tanet/eval/report.hpp"
#include "tanet/track/tracker.hpp"
#include "tanet/train/trainer.hpp"

using namespace tanet;
using tanet::testing::scratch_dir;
using tanet::testing::write_text;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> read_lines(const fs::path& file) {
    std::ifstream in(file);
    REQUIRE(in);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

// Relative-path -> bytes content map of every regular file under root.
std::map<std::string, std::string> tree_snapshot(const fs::path& root) {
    std::map<std::string, std::string> snap;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            snap[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
    return snap;
}

// Desk-size run: 48x48 textured scenes, stride-4 nets at R=32.
cli::RunConfig tiny_cfg() {
    cli::RunConfig cfg;
    cfg.generator = gen::GeneratorConfig::tiny(32);
    cfg.generator.template_size = 16;
    cfg.discriminator = gan::DiscriminatorConfig::tiny(32);
    cfg.training.batch_size = 2;
    cfg.training.max_iters = 6;
    cfg.synth.num_sequences = 2;
    cfg.synth.scene.frame_size = 48;
    cfg.synth.scene.num_frames = 8;
    cfg.synth.scene.target_size = 12;
    cfg.synth.scene.seed = 5;
    return cfg;
}

// Shared read-only artifacts: a synthesized dataset plus an
// initialization-state checkpoint (no training needed for plumbing tests).
struct Shared {
    cli::RunConfig cfg;
    fs::path dataset;
    fs::path checkpoint;
};

const Shared& shared() {
    static const Shared s = [] {
        Shared sh;
        sh.cfg = tiny_cfg();
        sh.dataset = scratch_dir("cli-shared-data");
        cli::cmd_synth(sh.cfg, sh.dataset);
        const fs::path dir = scratch_dir("cli-shared-ckpt");
        train::TrainSession session(gen::TanetGenerator(sh.cfg.generator, sh.cfg.seed),
                                    gan::AppearanceDiscriminator(sh.cfg.discriminator, 2),
                                    gan::MotionDiscriminator(sh.cfg.discriminator, 3),
                                    sh.cfg.training);
        session.save(dir / "init.ckpt");
        sh.checkpoint = dir / "init.ckpt";
        return sh;
    }();
    return s;
}

// Drives the full command line; captures stdout/stderr so help and error
// lines can be asserted without polluting the test log.
struct CliRun {
    int exit_code = 0;
    std::string out, err;
};

CliRun run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "tanet");
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());

    std::ostringstream out, err;
    std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
    std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
    CliRun r;
    r.exit_code = cli::run_main(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.rfind(prefix, 0) == 0;
}

} // namespace

TEST_CASE("run config round-trips through files and rejects bad keys") {
    const auto dir = scratch_dir("cli-config");

    SUBCASE("defaults survive the echo/parse cycle") {
        const cli::RunConfig def;
        cli::write_run_config(dir / "def.txt", def);
        const cli::RunConfig back = cli::load_run_config(dir / "def.txt");
        CHECK(back.echo() == def.echo());
        CHECK(cli::default_key_map() == def.echo());
    }

    SUBCASE("a customized config reproduces every section") {
        cli::RunConfig cfg = tiny_cfg();
        cfg.seed = 99;
        cfg.workers = 3;
        cfg.training.lambda1 = 0.25;
        cfg.training.non_saturating_g = true;
        cfg.tracker.beta1 = 0.7;
        cfg.tracker.beta2 = 4;
        cfg.tracker.local_only = true;
        cfg.synth.scene.target_shape = TargetShape::Disc;
        cfg.synth.scene.motion = MotionKind::Sinusoidal;
        cfg.synth.scene.occlusion_windows = {{2, 4}, {5, 6}};
        cfg.synth.scene.noise_sigma = 0.01;
        cli::write_run_config(dir / "custom.txt", cfg);
        const cli::RunConfig back = cli::load_run_config(dir / "custom.txt");
        CHECK(back.echo() == cfg.echo());
        CHECK(back.synth.scene.occlusion_windows == cfg.synth.scene.occlusion_windows);
        CHECK(back.synth.scene.target_shape == TargetShape::Disc);
        CHECK(back.tracker.local_only);
    }

    SUBCASE("comments, blanks, and loose spacing are tolerated") {
        write_text(dir / "loose.txt",
                   "# leading comment\n\n  tracker.beta2=4   # trailing comment\n"
                   "tracker.beta1 =  0.7\n");
        const cli::RunConfig cfg = cli::load_run_config(dir / "loose.txt");
        CHECK(cfg.tracker.beta2 == 4);
        CHECK(cfg.tracker.beta1 == 0.7);
    }

    SUBCASE("file-level problems are format errors") {
        write_text(dir / "unknown.txt", "tracker.beta3 = 1\n");
        CHECK_THROWS_AS(cli::load_run_config(dir / "unknown.txt"), FormatError);
        write_text(dir / "dup.txt", "tracker.beta2 = 4\ntracker.beta2 = 5\n");
        CHECK_THROWS_AS(cli::load_run_config(dir / "dup.txt"), FormatError);
        write_text(dir / "noeq.txt", "tracker.beta2\n");
        CHECK_THROWS_AS(cli::load_run_config(dir / "noeq.txt"), FormatError);
        write_text(dir / "empty.txt", "tracker.beta2 =\n");
        CHECK_THROWS_AS(cli::load_run_config(dir / "empty.txt"), FormatError);
        write_text(dir / "badint.txt", "tracker.beta2 = soon\n");
        CHECK_THROWS_AS(cli::load_run_config(dir / "badint.txt"), FormatError);
        write_text(dir / "badshape.txt", "synth.target_shape = blob\n");
        CHECK_THROWS_AS(cli::load_run_config(dir / "badshape.txt"), FormatError);
        write_text(dir / "badocc.txt", "synth.occlusions = 3+4\n");
        CHECK_THROWS_AS(cli::load_run_config(dir / "badocc.txt"), FormatError);
    }

    SUBCASE("domain violations are argument errors even from files") {
        write_text(dir / "range.txt", "tracker.beta1 = 1.5\n");
        CHECK_THROWS_AS(cli::load_run_config(dir / "range.txt"), ArgumentError);
        write_text(dir / "workers.txt", "run.workers = 0\n");
        CHECK_THROWS_AS(cli::load_run_config(dir / "workers.txt"), ArgumentError);
        write_text(dir / "clip.txt", "generator.L = 2\n");
        CHECK_THROWS_AS(cli::load_run_config(dir / "clip.txt"), ArgumentError);
    }

    SUBCASE("command-line overrides beat the file and reject unknowns") {
        write_text(dir / "base.txt", "tracker.beta2 = 4\n");
        const cli::RunConfig cfg =
            cli::load_run_config(dir / "base.txt", {"tracker.beta2=7", "run.workers=2"});
        CHECK(cfg.tracker.beta2 == 7);
        CHECK(cfg.workers == 2);
        CHECK_THROWS_AS(cli::load_run_config(dir / "base.txt", {"nope=1"}), ArgumentError);
        CHECK_THROWS_AS(cli::load_run_config(dir / "base.txt", {"tracker.beta2"}),
                        ArgumentError);
        CHECK_THROWS_AS(cli::load_run_config(dir / "missing.txt"), NotFoundError);
    }
}

TEST_CASE("sequence writer round-trips through the loader") {
    const auto dir = scratch_dir("cli-seqio");
    SyntheticSceneConfig sc;
    sc.frame_size = 32;
    sc.num_frames = 6;
    sc.target_shape = TargetShape::TexturedPatch;
    sc.target_size = 8;
    sc.occlusion_windows = {{2, 4}};
    sc.seed = 3;
    const Sequence seq = make_synthetic_sequence(sc);

    cli::write_sequence(seq, dir / "alpha");
    CHECK(cli::is_sequence_dir(dir / "alpha"));
    CHECK(cli::detect_layout(dir / "alpha") == SequenceLayout::Got10kStyle);

    const Sequence back = load_sequence(dir / "alpha", SequenceLayout::Got10kStyle);
    REQUIRE(back.size() == seq.size());
    CHECK(back.name == "alpha");
    for (int i = 0; i < seq.size(); ++i) {
        REQUIRE(back.annotations[i].has_value() == seq.annotations[i].has_value());
        if (seq.annotations[i]) {
            // Annotation text is full-precision, so boxes survive exactly.
            CHECK(back.annotations[i]->x == seq.annotations[i]->x);
            CHECK(back.annotations[i]->y == seq.annotations[i]->y);
            CHECK(back.annotations[i]->w == seq.annotations[i]->w);
            CHECK(back.annotations[i]->h == seq.annotations[i]->h);
        }
    }
    CHECK(!back.annotations[2]);
    CHECK(!back.annotations[3]);

    // Pixels pass through 8-bit PNG quantization once.
    double max_err = 0.0;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                max_err = std::max(max_err, std::abs(back.frames[0].image.at(c, y, x) -
                                                     seq.frames[0].image.at(c, y, x)));
    CHECK(max_err <= 0.5 / 255.0 + 1e-12);

    CHECK_THROWS_AS(cli::list_sequence_dirs(dir / "void"), NotFoundError);
    CHECK_THROWS_AS(cli::detect_layout(dir), NotFoundError);
    fs::create_directories(dir / "plain");
    CHECK_THROWS_AS(cli::list_sequence_dirs(dir / "plain"), NotFoundError);

    cli::write_sequence(seq, dir / "beta");
    const auto dirs = cli::list_sequence_dirs(dir);
    REQUIRE(dirs.size() == 2);
    CHECK(dirs[0].filename() == "alpha");
    CHECK(dirs[1].filename() == "beta");
}

TEST_CASE("synth command writes the requested number of loadable sequences") {
    cli::RunConfig cfg = tiny_cfg();
    cfg.synth.num_sequences = 5;
    cfg.synth.scene.num_frames = 6;

    const auto d1 = scratch_dir("cli-synth-1");
    cli::cmd_synth(cfg, d1);

    std::vector<fs::path> dirs = cli::list_sequence_dirs(d1);
    REQUIRE(dirs.size() == 5);
    for (int k = 0; k < 5; ++k) {
        char want[16];
        std::snprintf(want, sizeof want, "seq_%03d", k);
        CHECK(dirs[static_cast<std::size_t>(k)].filename() == want);
        const Sequence seq = load_sequence(dirs[static_cast<std::size_t>(k)],
                                           SequenceLayout::Got10kStyle);
        CHECK(seq.size() == 6);
        CHECK(seq.annotations[0].has_value());
    }

    // Different seeds per sequence: first frames must differ.
    CHECK(slurp(d1 / "seq_000" / "00000001.png") != slurp(d1 / "seq_001" / "00000001.png"));

    // Re-running the same configuration is bitwise reproducible.
    const auto d2 = scratch_dir("cli-synth-2");
    cli::cmd_synth(cfg, d2);
    CHECK(tree_snapshot(d1) == tree_snapshot(d2));

    // The echoed config alone reproduces the dataset as well.
    const auto d3 = scratch_dir("cli-synth-3");
    cli::cmd_synth(cli::load_run_config(d1 / "config.txt"), d3);
    CHECK(tree_snapshot(d1) == tree_snapshot(d3));
}

TEST_CASE("train command logs the alternating schedule and resumes exactly") {
    cli::RunConfig cfg = tiny_cfg();
    cfg.training.max_iters = 15;
    cfg.training.checkpoint_every = 5;

    const auto full = scratch_dir("cli-train-full");
    cli::cmd_train(cfg, shared().dataset, full);

    CHECK(fs::is_regular_file(full / "final.ckpt"));
    CHECK(fs::is_regular_file(full / "state_000005.ckpt"));
    CHECK(fs::is_regular_file(full / "state_000010.ckpt"));
    CHECK(fs::is_regular_file(full / "state_000015.ckpt"));

    const std::vector<std::string> lines = read_lines(full / "loss_log.csv");
    REQUIRE(lines.size() == 16); // header + one row per iteration
    CHECK(lines[0] == "iter,role,bce,app,mot,total");
    for (int i = 1; i <= 15; ++i) {
        const auto cells = split_csv(lines[static_cast<std::size_t>(i)]);
        REQUIRE(cells.size() == 6);
        CHECK(cells[0] == std::to_string(i));
        CHECK(cells[1] == train::role_name(train::schedule_role(i, cfg.training.n1,
                                                                cfg.training.n2)));
    }

    // Continuing from the mid-run checkpoint reproduces the tail bit for bit.
    const auto resumed = scratch_dir("cli-train-resume");
    cli::cmd_train(cfg, shared().dataset, resumed, full / "state_000005.ckpt");
    const std::vector<std::string> tail = read_lines(resumed / "loss_log.csv");
    REQUIRE(tail.size() == 11); // header + iterations 6..15
    for (int i = 6; i <= 15; ++i)
        CHECK(tail[static_cast<std::size_t>(i - 5)] == lines[static_cast<std::size_t>(i)]);
    CHECK(slurp(resumed / "final.ckpt") == slurp(full / "final.ckpt"));

    // The echoed config names the run that actually executed.
    const cli::RunConfig echoed = cli::load_run_config(resumed / "config.txt");
    CHECK(echoed.training.max_iters == 15);
    CHECK(echoed.training.checkpoint_every == 5);
}

TEST_CASE("train command drops adversarial terms from totals at zero weights") {
    cli::RunConfig cfg = tiny_cfg();
    cfg.training.max_iters = 9;
    cfg.training.lambda1 = 0.0;
    cfg.training.lambda2 = 0.0;

    const auto out = scratch_dir("cli-train-zeroed");
    cli::cmd_train(cfg, shared().dataset, out);

    const std::vector<std::string> lines = read_lines(out / "loss_log.csv");
    REQUIRE(lines.size() == 10);
    int g_rows = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv(lines[i]);
        REQUIRE(cells.size() == 6);
        if (cells[1] != train::role_name(train::StepRole::Generator)) continue;
        ++g_rows;
        // total collapses to the mask loss alone: the adversarial columns
        // contribute nothing.
        CHECK(std::stod(cells[5]) == std::stod(cells[2]));
    }
    CHECK(g_rows == 5); // iterations 2,3,5,8,9 under the default critic cadence
}

TEST_CASE("track command writes one prediction line per non-initial frame") {
    const auto out = scratch_dir("cli-track-basic");
    cli::cmd_track(shared().cfg, shared().dataset, shared().checkpoint, out);

    for (const char* name : {"seq_000", "seq_001"}) {
        const fs::path file = out / (std::string(name) + ".txt");
        REQUIRE(fs::is_regular_file(file));
        const auto rows = track::read_track_results(file);
        CHECK(static_cast<int>(rows.size()) == shared().cfg.synth.scene.num_frames - 1);
        for (std::size_t i = 0; i < rows.size(); ++i)
            CHECK(rows[i].frame_index == static_cast<int>(i) + 1);
    }

    // A single sequence directory works as the sequence argument too.
    const auto single = scratch_dir("cli-track-single");
    cli::cmd_track(shared().cfg, shared().dataset / "seq_000", shared().checkpoint, single);
    CHECK(fs::is_regular_file(single / "seq_000.txt"));
    CHECK(slurp(single / "seq_000.txt") == slurp(out / "seq_000.txt"));

    // Worker parallelism must not change any output byte.
    cli::RunConfig wide = shared().cfg;
    wide.workers = 3;
    const auto par = scratch_dir("cli-track-parallel");
    cli::cmd_track(wide, shared().dataset, shared().checkpoint, par);
    CHECK(slurp(par / "seq_000.txt") == slurp(out / "seq_000.txt"));
    CHECK(slurp(par / "seq_001.txt") == slurp(out / "seq_001.txt"));
}

TEST_CASE("track command pins every mode to local under --local-only") {
    cli::RunConfig cfg = shared().cfg;
    cfg.tracker.local_only = true;
    // Make low confidence plausible: a strict threshold the flat-attention
    // checkpoint could never rescue.
    cfg.tracker.beta1 = 0.999;
    cfg.tracker.beta2 = 1;

    const auto out = scratch_dir("cli-track-local");
    cli::cmd_track(cfg, shared().dataset, shared().checkpoint, out);
    for (const char* name : {"seq_000.txt", "seq_001.txt"}) {
        const auto rows = track::read_track_results(out / name);
        REQUIRE(!rows.empty());
        for (const auto& r : rows) CHECK(r.mode == track::SearchMode::Local);
    }
}

TEST_CASE("track overlays draw boxes exactly at the reported coordinates") {
    const auto out = scratch_dir("cli-track-overlay");
    cli::cmd_track(shared().cfg, shared().dataset / "seq_000", shared().checkpoint, out, true);

    const auto rows = track::read_track_results(out / "seq_000.txt");
    REQUIRE(!rows.empty());
    const fs::path overlay_dir = out / "seq_000_overlay";
    // One overlay per tracked frame, the given first frame included.
    CHECK(fs::is_regular_file(overlay_dir / cli::frame_file_name("", 0)));

    for (const auto& r : rows) {
        const Image im = read_image(overlay_dir / cli::frame_file_name("", r.frame_index));
        const long x0 = std::lround(r.box.x), y0 = std::lround(r.box.y);
        const long x1 = std::lround(r.box.x + r.box.w) - 1;
        const long y1 = std::lround(r.box.y + r.box.h) - 1;
        REQUIRE(x0 >= 0);
        REQUIRE(y0 >= 0);
        REQUIRE(x1 < im.width());
        REQUIRE(y1 < im.height());
        // Local steps paint pure green; the byte values survive PNG exactly.
        for (const auto& [py, px] : std::vector<std::pair<long, long>>{
                 {y0, x0}, {y0, x1}, {y1, x0}, {y1, x1}}) {
            CHECK(im.at(0, static_cast<int>(py), static_cast<int>(px)) == 0.0);
            CHECK(im.at(1, static_cast<int>(py), static_cast<int>(px)) == 1.0);
            CHECK(im.at(2, static_cast<int>(py), static_cast<int>(px)) == 0.0);
        }
        // Strictly inside the outline the original frame shows through.
        const int my = static_cast<int>((y0 + y1) / 2), mx = static_cast<int>((x0 + x1) / 2);
        const bool interior_green = im.at(0, my, mx) == 0.0 && im.at(1, my, mx) == 1.0 &&
                                    im.at(2, my, mx) == 0.0;
        CHECK(!interior_green);
    }
}

TEST_CASE("box outline painter clips to the frame") {
    Image im = Image::filled(10, 12, 0.25, 0.25, 0.25);
    cli::draw_box_outline(im, {2.2, 3.4, 4.0, 3.0}, 1.0, 0.0, 0.0);
    // Footprint: columns 2..5, rows 3..5.
    int painted = 0;
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 12; ++x)
            if (im.at(0, y, x) == 1.0) {
                ++painted;
                CHECK(((y == 3 || y == 5) || (x == 2 || x == 5)));
                CHECK(y >= 3);
                CHECK(y <= 5);
                CHECK(x >= 2);
                CHECK(x <= 5);
            }
    CHECK(painted == 10); // 4 + 4 on the long edges, 2 extra mid-row pixels
    CHECK(im.at(0, 4, 3) == 0.25);

    Image part = Image::filled(6, 6, 0.0, 0.0, 0.0);
    cli::draw_box_outline(part, {-3.0, -3.0, 5.0, 5.0}, 0.0, 0.0, 1.0);
    // Only the bottom/right edges of the box land inside the frame.
    CHECK(part.at(2, 1, 0) == 1.0);
    CHECK(part.at(2, 1, 1) == 1.0);
    CHECK(part.at(2, 0, 1) == 1.0);
    CHECK(part.at(2, 0, 0) == 0.0); // interior of the clipped box

    Image off = Image::filled(4, 4, 0.5, 0.5, 0.5);
    cli::draw_box_outline(off, {10.0, 10.0, 3.0, 3.0}, 1.0, 1.0, 1.0);
    cli::draw_box_outline(off, {1.0, 1.0, 0.2, 0.2}, 1.0, 1.0, 1.0);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) CHECK(off.at(0, y, x) == 0.5);

    CHECK(cli::frame_file_name("attn_", 0) == "attn_00000001.png");
    CHECK(cli::frame_file_name("", 41) == "00000042.png");
    CHECK_THROWS_AS(cli::frame_file_name("x", -1), ArgumentError);
}

TEST_CASE("eval command reproduces a by-hand pooled evaluation") {
    const auto trk = scratch_dir("cli-eval-trk");
    cli::cmd_track(shared().cfg, shared().dataset, shared().checkpoint, trk);
    const auto out = scratch_dir("cli-eval-out");
    cli::cmd_eval(shared().cfg, trk, shared().dataset, out);

    REQUIRE(fs::is_regular_file(out / "report.txt"));
    REQUIRE(fs::is_regular_file(out / "curves.svg"));
    REQUIRE(fs::is_regular_file(out / "sequences.csv"));

    // Manual pooling with the same alignment: frames 1..N-1 by index.
    eval::BoxList pred, truth;
    std::vector<std::string> names{"seq_000", "seq_001"};
    for (const auto& name : names) {
        const Sequence seq =
            load_sequence(shared().dataset / name, SequenceLayout::Got10kStyle);
        const auto rows = track::read_track_results(trk / (name + ".txt"));
        std::vector<std::optional<BoundingBox>> aligned(
            static_cast<std::size_t>(seq.size() - 1));
        for (const auto& r : rows)
            aligned[static_cast<std::size_t>(r.frame_index - 1)] = r.box;
        for (int f = 1; f < seq.size(); ++f) {
            truth.push_back(seq.annotations[static_cast<std::size_t>(f)]);
            pred.push_back(aligned[static_cast<std::size_t>(f - 1)]);
        }
    }
    const eval::MetricReport want = eval::evaluate(pred, truth);
    const eval::MetricReport got = eval::parse_report(out / "report.txt");
    CHECK(got.auc == want.auc);
    CHECK(got.pr_at_20 == want.pr_at_20);
    CHECK(got.ao == want.ao);
    CHECK(got.sr_050 == want.sr_050);
    CHECK(got.sr_075 == want.sr_075);
    CHECK(got.lt_f1 == want.lt_f1);
    CHECK(got.pr_curve == want.pr_curve);
    CHECK(got.sr_curve == want.sr_curve);

    const auto csv = read_lines(out / "sequences.csv");
    REQUIRE(csv.size() == 3);
    CHECK(csv[0] == "sequence,auc,pr_at_20,ao,sr_050,sr_075,lt_precision,lt_recall,lt_f1");
    CHECK(split_csv(csv[1])[0] == "seq_000");
    CHECK(split_csv(csv[2])[0] == "seq_001");

    // Parallel evaluation must not change a byte of the report.
    cli::RunConfig wide = shared().cfg;
    wide.workers = 2;
    const auto out2 = scratch_dir("cli-eval-par");
    cli::cmd_eval(wide, trk, shared().dataset, out2);
    CHECK(slurp(out2 / "report.txt") == slurp(out / "report.txt"));
    CHECK(slurp(out2 / "sequences.csv") == slurp(out / "sequences.csv"));

    // Single-sequence ground-truth form.
    const auto out3 = scratch_dir("cli-eval-single");
    cli::cmd_eval(shared().cfg, trk, shared().dataset / "seq_000", out3);
    CHECK(read_lines(out3 / "sequences.csv").size() == 2);

    // Missing result files and out-of-range rows are caught.
    const auto empty = scratch_dir("cli-eval-empty");
    CHECK_THROWS_AS(cli::cmd_eval(shared().cfg, empty, shared().dataset,
                                  scratch_dir("cli-eval-x1")),
                    NotFoundError);
    const auto bad = scratch_dir("cli-eval-bad");
    write_text(bad / "seq_000.txt", "99, 1, 1, 4, 4, 0.5, local\n");
    CHECK_THROWS_AS(cli::cmd_eval(shared().cfg, bad, shared().dataset / "seq_000",
                                  scratch_dir("cli-eval-x2")),
                    ArgumentError);
    write_text(bad / "seq_000.txt", "2, 1, 1, 4, 4, 0.5, local\n2, 1, 1, 4, 4, 0.5, local\n");
    CHECK_THROWS_AS(cli::cmd_eval(shared().cfg, bad, shared().dataset / "seq_000",
                                  scratch_dir("cli-eval-x3")),
                    ArgumentError);
}

TEST_CASE("sweep grid parsing expands axes in declaration-major order") {
    track::TrackerConfig base;
    base.beta1 = 0.8;
    base.beta2 = 5;

    const auto grid = cli::parse_grid_spec("beta1=0.7,0.8;beta2=4,6", base);
    REQUIRE(grid.size() == 4);
    CHECK(grid[0] == std::pair<double, int>{0.7, 4});
    CHECK(grid[1] == std::pair<double, int>{0.7, 6});
    CHECK(grid[2] == std::pair<double, int>{0.8, 4});
    CHECK(grid[3] == std::pair<double, int>{0.8, 6});

    const auto pinned = cli::parse_grid_spec("beta2=4,6,8", base);
    REQUIRE(pinned.size() == 3);
    for (const auto& [b1, b2] : pinned) CHECK(b1 == 0.8);
    CHECK(pinned[0].second == 4);
    CHECK(pinned[1].second == 6);
    CHECK(pinned[2].second == 8);

    CHECK_THROWS_AS(cli::parse_grid_spec("", base), ArgumentError);
    CHECK_THROWS_AS(cli::parse_grid_spec(" ; ;", base), ArgumentError);
    CHECK_THROWS_AS(cli::parse_grid_spec("gamma=1,2", base), ArgumentError);
    CHECK_THROWS_AS(cli::parse_grid_spec("beta2=4;beta2=6", base), ArgumentError);
    CHECK_THROWS_AS(cli::parse_grid_spec("beta2=4,,6", base), ArgumentError);
    CHECK_THROWS_AS(cli::parse_grid_spec("beta2=soon", base), ArgumentError);
    CHECK_THROWS_AS(cli::parse_grid_spec("beta2", base), ArgumentError);
    CHECK_THROWS_AS(cli::parse_grid_spec("beta1=1.5", base), ArgumentError);
}

TEST_CASE("sweep rows replay as standalone track+eval runs") {
    const auto out = scratch_dir("cli-sweep");
    cli::cmd_sweep(shared().cfg, "beta2=4,6,8", shared().dataset, shared().checkpoint, out);

    const auto lines = read_lines(out / "sweep.csv");
    REQUIRE(lines.size() == 4); // header + 3 grid points
    CHECK(lines[0] == "beta1,beta2,auc,pr_at_20,ao,sr_050,sr_075,lt_precision,lt_recall,lt_f1");
    CHECK(split_csv(lines[1])[1] == "4");
    CHECK(split_csv(lines[2])[1] == "6");
    CHECK(split_csv(lines[3])[1] == "8");

    // Re-run the middle row alone through track + eval.
    cli::RunConfig row = shared().cfg;
    row.tracker.beta2 = 6;
    const auto trk = scratch_dir("cli-sweep-row-trk");
    cli::cmd_track(row, shared().dataset, shared().checkpoint, trk);
    const auto ev = scratch_dir("cli-sweep-row-eval");
    cli::cmd_eval(row, trk, shared().dataset, ev);
    const eval::MetricReport rep = eval::parse_report(ev / "report.txt");

    const auto cells = split_csv(lines[2]);
    REQUIRE(cells.size() == 10);
    CHECK(std::stod(cells[2]) == rep.auc);
    CHECK(std::stod(cells[3]) == rep.pr_at_20);
    CHECK(std::stod(cells[4]) == rep.ao);
    CHECK(std::stod(cells[5]) == rep.sr_050);
    CHECK(std::stod(cells[6]) == rep.sr_075);
    CHECK(std::stod(cells[7]) == rep.lt_precision);
    CHECK(std::stod(cells[8]) == rep.lt_recall);
    CHECK(std::stod(cells[9]) == rep.lt_f1);
}

TEST_CASE("attn command exports quantized maps with a timing row per frame") {
    const auto out = scratch_dir("cli-attn");
    const fs::path seq_dir = shared().dataset / "seq_000";
    cli::cmd_attn(shared().cfg, shared().checkpoint, seq_dir, out);

    const Sequence seq = load_sequence(seq_dir, SequenceLayout::Got10kStyle);
    int pngs = 0;
    for (const auto& e : fs::directory_iterator(out))
        if (e.path().filename().string().rfind("attn_", 0) == 0) ++pngs;
    CHECK(pngs == seq.size());

    // The exported bytes are exactly round(255 * p) of the raw map.
    const gen::TanetGenerator g = cli::load_generator(shared().checkpoint);
    track::GeneratorAttention source(g, seq, *seq.annotations[0]);
    for (int f : {0, 3}) {
        const Tensor map = source.attention(f).first;
        const Image png = read_image(out / cli::frame_file_name("attn_", f));
        REQUIRE(png.height() == map.dim(1));
        REQUIRE(png.width() == map.dim(2));
        for (int y = 0; y < png.height(); ++y)
            for (int x = 0; x < png.width(); ++x) {
                const long want =
                    std::lround(std::clamp(map.at(0, y, x), 0.0, 1.0) * 255.0);
                const long got = std::lround(png.at(0, y, x) * 255.0);
                REQUIRE(got == want);
            }
    }

    const auto timing = read_lines(out / "timing.csv");
    REQUIRE(static_cast<int>(timing.size()) == seq.size() + 1);
    CHECK(timing[0] == "frame,seconds");
    for (int i = 1; i < static_cast<int>(timing.size()); ++i) {
        const auto cells = split_csv(timing[static_cast<std::size_t>(i)]);
        REQUIRE(cells.size() == 2);
        CHECK(cells[0] == std::to_string(i - 1));
        CHECK(std::stod(cells[1]) > 0.0);
    }
}

TEST_CASE("command line maps failure categories to stable exit codes") {
    CHECK(run_cli({"--help"}).exit_code == 0);
    CHECK(run_cli({"synth", "--help"}).exit_code == 0);

    const CliRun no_out = run_cli({"synth"});
    CHECK(no_out.exit_code == 2);
    CHECK(starts_with(no_out.err, "error: argument: "));

    CHECK(run_cli({"bogus-command"}).exit_code == 2);

    const auto dir = scratch_dir("cli-exit");
    const CliRun unknown_key =
        run_cli({"synth", "--out", (dir / "a").string(), "--set", "nope=1"});
    CHECK(unknown_key.exit_code == 2);
    CHECK(starts_with(unknown_key.err, "error: argument: unknown config key"));

    const CliRun missing_cfg =
        run_cli({"synth", "--out", (dir / "b").string(), "--config", (dir / "no.txt").string()});
    CHECK(missing_cfg.exit_code == 3);
    CHECK(starts_with(missing_cfg.err, "error: not-found: "));

    write_text(dir / "broken.txt", "tracker.beta1\n");
    const CliRun bad_cfg =
        run_cli({"synth", "--out", (dir / "c").string(), "--config", (dir / "broken.txt").string()});
    CHECK(bad_cfg.exit_code == 4);
    CHECK(starts_with(bad_cfg.err, "error: format: "));

    const CliRun bad_range =
        run_cli({"synth", "--out", (dir / "d").string(), "--set", "tracker.beta1=1.5"});
    CHECK(bad_range.exit_code == 2);
    CHECK(starts_with(bad_range.err, "error: argument: "));

    const CliRun no_data = run_cli({"track", "--sequence", (dir / "void").string(), "--out",
                                    (dir / "e").string()});
    CHECK(no_data.exit_code == 3);
    CHECK(starts_with(no_data.err, "error: not-found: "));

    write_text(dir / "junk.ckpt", "not a checkpoint");
    const CliRun bad_ckpt =
        run_cli({"attn", "--checkpoint", (dir / "junk.ckpt").string(), "--sequence",
                 (shared().dataset / "seq_000").string(), "--out", (dir / "f").string()});
    CHECK(bad_ckpt.exit_code == 4);
    CHECK(starts_with(bad_ckpt.err, "error: format: "));
}

TEST_CASE("metric failures keep their category through worker threads") {
    // One healthy sequence plus one whose target never reappears after
    // frame 0: its frames 1.. carry no truth at all, so the short-term
    // metrics are undefined and must say so, naming the sequence.
    const auto data = scratch_dir("cli-eval-starved");
    SyntheticSceneConfig sc = tiny_cfg().synth.scene;
    sc.num_frames = 4;
    sc.seed = 21;
    cli::write_sequence(make_synthetic_sequence(sc), data / "seq_ok");
    sc.occlusion_windows = {{1, 4}};
    sc.seed = 22;
    cli::write_sequence(make_synthetic_sequence(sc), data / "seq_starved");

    cli::RunConfig cfg = tiny_cfg();
    cfg.tracker.local_only = true;
    cfg.workers = 2;
    const auto trk = scratch_dir("cli-starved-trk");
    cli::cmd_track(cfg, data, {}, trk);

    const auto out = scratch_dir("cli-starved-out");
    try {
        cli::cmd_eval(cfg, trk, data, out);
        FAIL("starved sequence must raise a metric error");
    } catch (const MetricError& e) {
        CHECK(std::string(e.what()).find("seq_starved") != std::string::npos);
    }
}

TEST_CASE("pipeline replays bit-identically from echoed configs") {
    const auto root = scratch_dir("cli-e2e");
    const fs::path cfg_file = root / "run.txt";
    write_text(cfg_file,
               "# desk-scale end-to-end settings\n"
               "generator.R = 32\n"
               "generator.template_size = 16\n"
               "discriminator.appearance_resolution = 32\n"
               "discriminator.motion_resolution = 32\n"
               "training.max_iters = 6\n"
               "training.batch_size = 2\n"
               "synth.num_sequences = 2\n"
               "synth.frame_size = 48\n"
               "synth.num_frames = 8\n"
               "synth.seed = 5\n");

    const auto step = [&](std::vector<std::string> args) {
        const CliRun r = run_cli(std::move(args));
        CAPTURE(r.err);
        REQUIRE(r.exit_code == 0);
    };

    const fs::path ds1 = root / "ds1", tr1 = root / "tr1", trk1 = root / "trk1",
                   ev1 = root / "ev1";
    step({"synth", "--config", cfg_file.string(), "--out", ds1.string()});
    step({"train", "--config", cfg_file.string(), "--data", ds1.string(), "--out",
          tr1.string()});
    step({"track", "--config", cfg_file.string(), "--sequence", ds1.string(), "--checkpoint",
          (tr1 / "final.ckpt").string(), "--out", trk1.string()});
    step({"eval", "--config", cfg_file.string(), "--results", trk1.string(), "--gt",
          ds1.string(), "--out", ev1.string()});

    // Second pass driven purely by each stage's echoed config.
    const fs::path ds2 = root / "ds2", tr2 = root / "tr2", trk2 = root / "trk2",
                   ev2 = root / "ev2";
    step({"synth", "--config", (ds1 / "config.txt").string(), "--out", ds2.string()});
    CHECK(tree_snapshot(ds1) == tree_snapshot(ds2));

    step({"train", "--config", (tr1 / "config.txt").string(), "--data", ds2.string(), "--out",
          tr2.string()});
    CHECK(slurp(tr2 / "loss_log.csv") == slurp(tr1 / "loss_log.csv"));
    CHECK(slurp(tr2 / "final.ckpt") == slurp(tr1 / "final.ckpt"));

    step({"track", "--config", (trk1 / "config.txt").string(), "--sequence", ds2.string(),
          "--checkpoint", (tr2 / "final.ckpt").string(), "--out", trk2.string()});
    CHECK(slurp(trk2 / "seq_000.txt") == slurp(trk1 / "seq_000.txt"));
    CHECK(slurp(trk2 / "seq_001.txt") == slurp(trk1 / "seq_001.txt"));

    step({"eval", "--config", (ev1 / "config.txt").string(), "--results", trk2.string(),
          "--gt", ds2.string(), "--out", ev2.string()});
    CHECK(slurp(ev2 / "report.txt") == slurp(ev1 / "report.txt"));
    CHECK(slurp(ev2 / "sequences.csv") == slurp(ev1 / "sequences.csv"));
}
