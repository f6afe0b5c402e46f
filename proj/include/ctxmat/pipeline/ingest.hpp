#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ctxmat/core.hpp"

namespace ctxmat {

/// One raw eyetracking sample (long-format row).
struct RawSample {
    std::string pair;
    std::string task;   // "planning" or "search"
    int trial = 0;      // 1..5
    int agent = 0;      // 1 or 2
    double timestamp_ms = 0.0;
    double pupil = 0.0;
    double gaze_x = 0.0;  // pixels
    double gaze_y = 0.0;
};

struct ScreenGeometry {
    double width = 1920.0;
    double height = 1080.0;
    int grid_x = 10;
    int grid_y = 5;
};

struct IngestConfig {
    double bin_ms = 272.0;
    ScreenGeometry screen;
};

struct IngestDiagnostics {
    std::size_t rejected_trials = 0;
    std::size_t offscreen_samples = 0;
    std::size_t empty_bins_filled = 0;
    std::vector<std::string> messages;
};

/// Ingested series per (pair, task), trial boundaries in trial_starts.
struct IngestResult {
    std::map<std::pair<std::string, std::string>, BehaviorSeries> series;
    IngestDiagnostics diagnostics;
};

/// Long-format CSV with header
/// pair,task,trial,agent,timestamp_ms,pupil,gaze_x,gaze_y
std::vector<RawSample> read_raw_csv(const std::filesystem::path& path);

/// Preprocessing chain, per trial: bin into fixed-width windows by
/// averaging, truncate agents to the shorter length, map gaze to the coarse
/// grid (half-open equal-width bins, off-screen samples clamped), z-score
/// the three channels per agent within the trial, then concatenate a task's
/// trials in order. Bad trials (empty, single-agent, zero variance) are
/// rejected with a diagnostic rather than aborting the pair.
IngestResult ingest_human(const std::vector<RawSample>& raw, const IngestConfig& config = {});

}  // namespace ctxmat
