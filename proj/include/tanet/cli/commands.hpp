#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tanet/cli/run_config.hpp"
#include "tanet/data/image.hpp"
#include "tanet/gen/generator.hpp"

namespace tanet::cli {

// Every command creates its output directory and echoes the configuration
// it actually ran with to <out_dir>/config.txt, so any run can be redone
// from its own artifacts. Commands are quiet by default; setting the
// TANET_VERBOSE environment variable to anything but "0" turns on progress
// notes on stderr (that variable controls verbosity only).

// Generates cfg.synth.num_sequences scenes, sequence k seeded with
// synth.seed + k, each written under out_dir as a loadable directory.
void cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Adversarial training over every sequence in data_dir. Writes periodic
// checkpoints (training.checkpoint_every), final.ckpt, and loss_log.csv.
// A non-empty resume path continues that checkpoint's run to its original
// iteration budget; the checkpoint's embedded training section then
// overrides cfg.training, and the echoed config records the override.
void cmd_train(const RunConfig& cfg, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir,
               const std::filesystem::path& resume = {});

// Tracks one sequence directory, or every sequence under a dataset root,
// with the correlation baseline plus attention-mined global re-detection
// from the checkpoint's generator (empty checkpoint or tracker.local_only
// keeps all steps local). Per sequence: <name>.txt holding one result line
// per frame after the given first frame, and with overlays on a
// <name>_overlay directory of frames with the estimated box drawn (green
// for local steps, red for global). cfg.workers sequences run in parallel.
void cmd_track(const RunConfig& cfg, const std::filesystem::path& sequence_path,
               const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir,
               bool overlays = false);

// Scores result files named <sequence>.txt in results_dir against the
// ground truth under gt_dir (a sequence directory or a dataset root).
// Predictions align to annotations by frame index over frames 1..N-1.
// Writes the pooled report.txt + curves.svg and per-sequence sequences.csv.
void cmd_eval(const RunConfig& cfg, const std::filesystem::path& results_dir,
              const std::filesystem::path& gt_dir, const std::filesystem::path& out_dir);

// Tracker parameter study: grid_spec names axes "beta1=..." / "beta2=..."
// (values comma-separated, axes ';'-separated); missing axes pin to the
// configured value. Runs track+eval per grid point over the dataset and
// writes sweep.csv, one row per point in beta1-major order.
void cmd_sweep(const RunConfig& cfg, const std::string& grid_spec,
               const std::filesystem::path& data_dir, const std::filesystem::path& checkpoint,
               const std::filesystem::path& out_dir);

// Exports the generator's raw attention map for every frame as 8-bit
// grayscale PNGs (value = round(255 * p)) plus timing.csv with per-frame
// forward-pass seconds.
void cmd_attn(const RunConfig& cfg, const std::filesystem::path& checkpoint,
              const std::filesystem::path& sequence_path, const std::filesystem::path& out_dir);

// --------------------------------------------------------------- building blocks

// Reconstructs the generator alone from a training checkpoint.
gen::TanetGenerator load_generator(const std::filesystem::path& checkpoint);

// Expands a sweep grid spec against base values: the returned (beta1,
// beta2) points are validated tracker settings. ArgumentError on an empty
// spec, an unknown axis, a duplicate axis, or unparsable values.
std::vector<std::pair<double, int>> parse_grid_spec(const std::string& spec,
                                                    const track::TrackerConfig& base);

// Paints a one-pixel rectangle outline over the box's pixel footprint,
// columns round(x) .. round(x+w)-1 and rows round(y) .. round(y+h)-1,
// clipped to the image. Degenerate or fully outside boxes paint nothing.
void draw_box_outline(Image& im, const BoundingBox& box, double r, double g, double b);

// Frame artifact naming shared by synth/track/attn: 1-based zero-padded
// index, e.g. frame_file_name("attn_", 0) == "attn_00000001.png".
std::string frame_file_name(const std::string& prefix, int frame_index);

} // namespace tanet::cli
