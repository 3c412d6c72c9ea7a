#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tanet/eval/metrics.hpp"

namespace tanet::eval {

// Writes report.txt (key-value plus curve arrays, exact round-trip) and
// curves.svg (PR and SR plots) into dir, creating it if needed.
void emit_report(const MetricReport& report, const std::filesystem::path& dir);

// Reads back a report.txt produced by emit_report, bit-exact.
MetricReport parse_report(const std::filesystem::path& file);

// One scalar-metrics row per sequence, aligned with names.
void write_sequence_csv(const std::filesystem::path& file,
                        const std::vector<std::string>& names,
                        const std::vector<MetricReport>& reports);

} // namespace tanet::eval
