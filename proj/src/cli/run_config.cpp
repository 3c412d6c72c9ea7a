#include "tanet/cli/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "tanet/core/error.hpp"

namespace tanet::cli {
namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trimmed(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

const char* shape_name(TargetShape s) {
    switch (s) {
        case TargetShape::Square: return "square";
        case TargetShape::Disc: return "disc";
        case TargetShape::TexturedPatch: return "textured";
    }
    return "square";
}

TargetShape shape_from(const std::string& s) {
    if (s == "square") return TargetShape::Square;
    if (s == "disc") return TargetShape::Disc;
    if (s == "textured") return TargetShape::TexturedPatch;
    throw FormatError("unknown target shape \"" + s + "\" (square, disc, textured)");
}

const char* motion_kind_name(MotionKind m) {
    switch (m) {
        case MotionKind::Linear: return "linear";
        case MotionKind::RandomWalk: return "walk";
        case MotionKind::Sinusoidal: return "sine";
    }
    return "linear";
}

MotionKind motion_from(const std::string& s) {
    if (s == "linear") return MotionKind::Linear;
    if (s == "walk") return MotionKind::RandomWalk;
    if (s == "sine") return MotionKind::Sinusoidal;
    throw FormatError("unknown motion kind \"" + s + "\" (linear, walk, sine)");
}

std::string occlusions_text(const std::vector<std::pair<int, int>>& windows) {
    if (windows.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(windows[i].first) + "-" + std::to_string(windows[i].second);
    }
    return out;
}

std::vector<std::pair<int, int>> occlusions_from(const std::string& text) {
    std::vector<std::pair<int, int>> out;
    if (text == "none") return out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto dash = item.find('-');
        if (dash == std::string::npos || dash == 0 || dash + 1 == item.size())
            throw FormatError("occlusion window \"" + item + "\" is not start-end");
        out.emplace_back(std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1)));
    }
    if (out.empty()) throw FormatError("occlusion list \"" + text + "\" holds no windows");
    return out;
}

// Section submap of a flat key map, prefix stripped.
std::map<std::string, std::string> section(const std::map<std::string, std::string>& flat,
                                           const std::string& prefix) {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : flat)
        if (k.rfind(prefix, 0) == 0) out[k.substr(prefix.size())] = v;
    return out;
}

} // namespace

void SynthConfig::validate() const {
    if (num_sequences < 1)
        throw ArgumentError("synth needs num_sequences >= 1, got " +
                            std::to_string(num_sequences));
    scene.validate();
}

std::map<std::string, std::string> SynthConfig::echo() const {
    return {{"num_sequences", std::to_string(num_sequences)},
            {"frame_size", std::to_string(scene.frame_size)},
            {"num_frames", std::to_string(scene.num_frames)},
            {"target_shape", shape_name(scene.target_shape)},
            {"target_size", std::to_string(scene.target_size)},
            {"motion", motion_kind_name(scene.motion)},
            {"speed", fmt_double(scene.speed)},
            {"occlusions", occlusions_text(scene.occlusion_windows)},
            {"distractors", std::to_string(scene.distractors)},
            {"noise_sigma", fmt_double(scene.noise_sigma)},
            {"seed", std::to_string(scene.seed)}};
}

SynthConfig SynthConfig::from_echo(const std::map<std::string, std::string>& meta) {
    SynthConfig cfg;
    try {
        cfg.num_sequences = std::stoi(meta.at("num_sequences"));
        cfg.scene.frame_size = std::stoi(meta.at("frame_size"));
        cfg.scene.num_frames = std::stoi(meta.at("num_frames"));
        cfg.scene.target_shape = shape_from(meta.at("target_shape"));
        cfg.scene.target_size = std::stoi(meta.at("target_size"));
        cfg.scene.motion = motion_from(meta.at("motion"));
        cfg.scene.speed = std::stod(meta.at("speed"));
        cfg.scene.occlusion_windows = occlusions_from(meta.at("occlusions"));
        cfg.scene.distractors = std::stoi(meta.at("distractors"));
        cfg.scene.noise_sigma = std::stod(meta.at("noise_sigma"));
        cfg.scene.seed = std::stoull(meta.at("seed"));
    } catch (const std::out_of_range&) {
        throw FormatError("synth config echo is missing a key");
    } catch (const std::invalid_argument&) {
        throw FormatError("synth config echo has a malformed value");
    }
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    if (workers < 1) throw ArgumentError("run.workers must be >= 1, got " + std::to_string(workers));
    generator.validate();
    discriminator.validate();
    training.validate();
    tracker.validate();
    synth.validate();
    // Training feeds the motion critic one map per clip frame, so the two
    // clip lengths must agree up front.
    if (generator.L != discriminator.clip_length)
        throw ArgumentError("generator.L = " + std::to_string(generator.L) +
                            " but discriminator.clip_length = " +
                            std::to_string(discriminator.clip_length));
}

std::map<std::string, std::string> RunConfig::echo() const {
    std::map<std::string, std::string> flat;
    flat["run.seed"] = std::to_string(seed);
    flat["run.workers"] = std::to_string(workers);
    for (const auto& [k, v] : generator.echo()) flat["generator." + k] = v;
    for (const auto& [k, v] : discriminator.echo()) flat["discriminator." + k] = v;
    for (const auto& [k, v] : training.echo()) flat["training." + k] = v;
    for (const auto& [k, v] : tracker.echo()) flat["tracker." + k] = v;
    for (const auto& [k, v] : synth.echo()) flat["synth." + k] = v;
    return flat;
}

RunConfig RunConfig::from_echo(const std::map<std::string, std::string>& flat) {
    RunConfig cfg;
    try {
        cfg.seed = std::stoull(flat.at("run.seed"));
        cfg.workers = std::stoi(flat.at("run.workers"));
    } catch (const std::out_of_range&) {
        throw FormatError("run config is missing run.seed or run.workers");
    } catch (const std::invalid_argument&) {
        throw FormatError("run config has a malformed run.* value");
    }
    cfg.generator = gen::GeneratorConfig::from_echo(section(flat, "generator."));
    cfg.discriminator = gan::DiscriminatorConfig::from_echo(section(flat, "discriminator."));
    cfg.training = train::TrainingConfig::from_echo(section(flat, "training."));
    cfg.tracker = track::TrackerConfig::from_echo(section(flat, "tracker."));
    cfg.synth = SynthConfig::from_echo(section(flat, "synth."));
    cfg.validate();
    return cfg;
}

std::map<std::string, std::string> default_key_map() { return RunConfig{}.echo(); }

void apply_config_text(std::map<std::string, std::string>& merged, const std::string& text,
                       const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::map<std::string, int> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trimmed(line);
        if (line.empty()) continue;
        const std::string at = origin + " line " + std::to_string(lineno);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError(at + ": expected key = value, got \"" + line + "\"");
        const std::string key = trimmed(line.substr(0, eq));
        const std::string value = trimmed(line.substr(eq + 1));
        if (key.empty()) throw FormatError(at + ": missing key before '='");
        if (value.empty()) throw FormatError(at + ": empty value for key \"" + key + "\"");
        const auto it = merged.find(key);
        if (it == merged.end()) throw FormatError(at + ": unknown key \"" + key + "\"");
        const auto prev = seen.find(key);
        if (prev != seen.end())
            throw FormatError(at + ": duplicate key \"" + key + "\" (first set on line " +
                              std::to_string(prev->second) + ")");
        seen.emplace(key, lineno);
        it->second = value;
    }
}

void apply_assignments(std::map<std::string, std::string>& merged,
                       const std::vector<std::string>& defs) {
    for (const std::string& def : defs) {
        const auto eq = def.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ArgumentError("override \"" + def + "\" is not KEY=VALUE");
        const std::string key = trimmed(def.substr(0, eq));
        const std::string value = trimmed(def.substr(eq + 1));
        if (value.empty()) throw ArgumentError("override \"" + def + "\" has an empty value");
        const auto it = merged.find(key);
        if (it == merged.end()) throw ArgumentError("unknown config key \"" + key + "\"");
        it->second = value;
    }
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides) {
    std::map<std::string, std::string> merged = default_key_map();
    if (file) {
        if (!std::filesystem::is_regular_file(*file))
            throw NotFoundError("config file not found: " + file->string());
        std::ifstream in(*file);
        if (!in) throw IoError("cannot open config file " + file->string());
        std::ostringstream text;
        text << in.rdbuf();
        apply_config_text(merged, text.str(), file->filename().string());
    }
    apply_assignments(merged, overrides);
    return RunConfig::from_echo(merged);
}

void write_run_config(const std::filesystem::path& file, const RunConfig& cfg) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out << "# resolved run configuration\n";
    for (const auto& [k, v] : cfg.echo()) out << k << " = " << v << '\n';
    if (!out) throw IoError("failed writing " + file.string());
}

} // namespace tanet::cli
