#include "tanet/cli/main.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tanet/cli/commands.hpp"
#include "tanet/core/error.hpp"

namespace tanet::cli {
namespace {

struct CommonOpts {
    std::string config;
    std::vector<std::string> set;
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--config", o.config, "key-value run configuration file");
    sub->add_option("--set", o.set, "override one config key, KEY=VALUE (repeatable)");
}

RunConfig resolve(const CommonOpts& o, std::vector<std::string> extra = {}) {
    std::vector<std::string> defs = o.set;
    defs.insert(defs.end(), extra.begin(), extra.end());
    std::optional<std::filesystem::path> file;
    if (!o.config.empty()) file = o.config;
    return load_run_config(file, defs);
}

} // namespace

int run_main(int argc, const char* const* argv) {
    CLI::App app{"target-aware attention tracking toolkit"};
    app.require_subcommand(1);
    app.footer("Set TANET_VERBOSE=1 for progress notes on stderr (verbosity only).");

    CommonOpts synth_o;
    std::string synth_out;
    CLI::App* synth = app.add_subcommand("synth", "generate synthetic sequence datasets");
    add_common(synth, synth_o);
    synth->add_option("-o,--out", synth_out, "output dataset directory")->required();
    synth->callback([&] { cmd_synth(resolve(synth_o), synth_out); });

    CommonOpts train_o;
    std::string train_data, train_out, train_resume;
    CLI::App* train = app.add_subcommand("train", "adversarial training on a dataset");
    add_common(train, train_o);
    train->add_option("--data", train_data, "dataset directory of sequences")->required();
    train->add_option("-o,--out", train_out, "checkpoint/log output directory")->required();
    train->add_option("--resume", train_resume, "checkpoint file to continue from");
    train->callback([&] { cmd_train(resolve(train_o), train_data, train_out, train_resume); });

    CommonOpts track_o;
    std::string track_seq, track_ckpt, track_out;
    bool track_overlays = false, track_local_only = false;
    int track_workers = 0;
    CLI::App* track = app.add_subcommand("track", "run the tracker over sequences");
    add_common(track, track_o);
    track->add_option("--sequence", track_seq, "sequence directory or dataset root")->required();
    track->add_option("--checkpoint", track_ckpt, "trained checkpoint for global re-detection");
    track->add_option("-o,--out", track_out, "result output directory")->required();
    track->add_flag("--overlays", track_overlays, "also write frames with drawn boxes");
    track->add_flag("--local-only", track_local_only, "disable global re-detection");
    track->add_option("--workers", track_workers, "parallel sequences (run.workers)");
    track->callback([&] {
        std::vector<std::string> extra;
        if (track_local_only) extra.push_back("tracker.local_only=1");
        if (track_workers > 0) extra.push_back("run.workers=" + std::to_string(track_workers));
        cmd_track(resolve(track_o, extra), track_seq, track_ckpt, track_out, track_overlays);
    });

    CommonOpts eval_o;
    std::string eval_results, eval_gt, eval_out;
    int eval_workers = 0;
    CLI::App* eval = app.add_subcommand("eval", "score result files against ground truth");
    add_common(eval, eval_o);
    eval->add_option("--results", eval_results, "directory of <sequence>.txt result files")
        ->required();
    eval->add_option("--gt", eval_gt, "sequence directory or dataset root")->required();
    eval->add_option("-o,--out", eval_out, "report output directory")->required();
    eval->add_option("--workers", eval_workers, "parallel sequences (run.workers)");
    eval->callback([&] {
        std::vector<std::string> extra;
        if (eval_workers > 0) extra.push_back("run.workers=" + std::to_string(eval_workers));
        cmd_eval(resolve(eval_o, extra), eval_results, eval_gt, eval_out);
    });

    CommonOpts sweep_o;
    std::string sweep_grid, sweep_data, sweep_ckpt, sweep_out;
    CLI::App* sweep = app.add_subcommand("sweep", "tracker parameter study over a grid");
    add_common(sweep, sweep_o);
    sweep->add_option("--grid", sweep_grid, "axes, e.g. \"beta1=0.7,0.8;beta2=4,6,8\"")
        ->required();
    sweep->add_option("--data", sweep_data, "dataset directory of sequences")->required();
    sweep->add_option("--checkpoint", sweep_ckpt, "trained checkpoint for global re-detection");
    sweep->add_option("-o,--out", sweep_out, "sweep output directory")->required();
    sweep->callback(
        [&] { cmd_sweep(resolve(sweep_o), sweep_grid, sweep_data, sweep_ckpt, sweep_out); });

    CommonOpts attn_o;
    std::string attn_ckpt, attn_seq, attn_out;
    CLI::App* attn = app.add_subcommand("attn", "export per-frame attention maps as PNGs");
    add_common(attn, attn_o);
    attn->add_option("--checkpoint", attn_ckpt, "trained checkpoint")->required();
    attn->add_option("--sequence", attn_seq, "sequence directory")->required();
    attn->add_option("-o,--out", attn_out, "map output directory")->required();
    attn->callback([&] { cmd_attn(resolve(attn_o), attn_ckpt, attn_seq, attn_out); });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::Success& e) {
        return app.exit(e); // --help and friends: full text, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: argument: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace tanet::cli
