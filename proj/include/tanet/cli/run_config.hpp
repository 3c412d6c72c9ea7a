#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tanet/data/synthetic.hpp"
#include "tanet/gan/discriminators.hpp"
#include "tanet/gen/generator.hpp"
#include "tanet/track/tracker.hpp"
#include "tanet/train/trainer.hpp"

namespace tanet::cli {

// Scene recipe plus dataset arity for the synth command. Sequence k of a
// run is generated with scene.seed + k; the CLI default target is the
// textured patch, the only built-in shape with enough intensity structure
// for correlation tracking.
struct SynthConfig {
    int num_sequences = 5;
    SyntheticSceneConfig scene;

    SynthConfig() { scene.target_shape = TargetShape::TexturedPatch; }

    void validate() const;
    std::map<std::string, std::string> echo() const;
    static SynthConfig from_echo(const std::map<std::string, std::string>& meta);
};

// Merged configuration for every command, one section per subsystem. The
// flat on-disk form prefixes each section's keys ("generator.R",
// "training.lambda1", ...); run.seed seeds network initialization (the
// generator at seed, the critics at seed+1 and seed+2), while sampling and
// scene synthesis keep their own training.seed / synth.seed.
struct RunConfig {
    std::uint64_t seed = 1;
    int workers = 1; // per-sequence parallelism in track/eval

    gen::GeneratorConfig generator = gen::GeneratorConfig::tiny();
    gan::DiscriminatorConfig discriminator = gan::DiscriminatorConfig::tiny();
    train::TrainingConfig training;
    track::TrackerConfig tracker;
    SynthConfig synth;

    void validate() const;
    std::map<std::string, std::string> echo() const;
    static RunConfig from_echo(const std::map<std::string, std::string>& flat);
};

// The complete legal key set with default values; the parsing universe.
std::map<std::string, std::string> default_key_map();

// Folds "key = value" config-file lines into merged. '#' starts a comment;
// blank lines are skipped. Unknown, duplicate, or shapeless lines throw
// FormatError naming origin and line number.
void apply_config_text(std::map<std::string, std::string>& merged, const std::string& text,
                       const std::string& origin);

// Folds command-line KEY=VALUE assignments into merged; unknown keys and
// malformed assignments throw ArgumentError.
void apply_assignments(std::map<std::string, std::string>& merged,
                       const std::vector<std::string>& defs);

// Defaults, then the optional file, then the overrides, then typed
// validation. This is the single config entry point every command uses.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides = {});

// Writes the resolved configuration as a reparseable key-value file;
// load_run_config on the result reproduces cfg exactly.
void write_run_config(const std::filesystem::path& file, const RunConfig& cfg);

} // namespace tanet::cli
