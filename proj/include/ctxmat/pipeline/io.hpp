#pragma once

#include <filesystem>
#include <string>

#include "ctxmat/core.hpp"
#include "ctxmat/dynamics.hpp"
#include "ctxmat/inference.hpp"

namespace ctxmat::io {

/// Fixed-width round-trippable double formatting, used for every output
/// file so reports are byte-identical across runs and thread counts.
std::string fmt(double v);

/// Behavior series as CSV: header row "t,<agent>.<channel>,...", one row per
/// frame, UTF-8, LF. trial_starts (when present) go to a "# trial_starts:"
/// comment line.
void write_series_csv(const std::filesystem::path& path, const BehaviorSeries& series);
BehaviorSeries read_series_csv(const std::filesystem::path& path);

/// Ground-truth sidecar (JSON, schema_version 1): matrix, noise, length,
/// dynamics params, seeds.
void write_truth_sidecar(const std::filesystem::path& path, const GroundTruthSpec& spec);
GroundTruthSpec read_truth_sidecar(const std::filesystem::path& path);

/// Inference run results as CSV: config echo in a leading comment, then one
/// row per timestep with the MAP matrix entries (column-major), the
/// predicted frame, and the ESS diagnostic.
void write_run_csv(const std::filesystem::path& path, const InferenceRun& run);

/// Read back just the MAP matrix series from a run CSV.
std::vector<ContextMatrix> read_run_map_series(const std::filesystem::path& path);

std::string config_to_json(const FilterConfig& config);

}  // namespace ctxmat::io
