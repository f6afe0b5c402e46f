#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ctxmat/dynamics.hpp"
#include "ctxmat/inference.hpp"
#include "ctxmat/pipeline/ingest.hpp"
#include "ctxmat/selection.hpp"

namespace ctxmat {

/// Simulation-study scale. "paper" is the full 81 x 5 grid with N = 100000
/// and 51 stds; "desk" is 9 stratified matrices x 3 noise levels with
/// N = 5000 and 11 stds, sized for a laptop.
enum class StudyScale { Desk, Paper };

struct SimStudyConfig {
    StudyScale scale = StudyScale::Desk;
    std::uint64_t seed = 0;
    DynamicsParams params;  // defaults: I = 0.5, alpha = 0.1
    int threads = 1;
    std::filesystem::path out_dir;
    bool checkpoints = true;
    // smoke overrides for fast end-to-end checks; 0 means "use the preset"
    std::size_t smoke_particles = 0;
    std::size_t smoke_length = 0;
};

/// One dataset of the study grid together with its filter seed.
struct StudyDataset {
    std::size_t matrix_index = 0;  // 0..80 in the sign-pattern enumeration
    GroundTruthSpec spec;
    std::uint64_t filter_seed = 0;
};

std::vector<StudyDataset> study_grid(const SimStudyConfig& config);
std::vector<double> study_std_grid(StudyScale scale);
std::size_t study_particles(StudyScale scale);

/// The selection schemes evaluated by the study: ideal oracle, lowest sigma,
/// and the four between-subjects CRQA schemes.
std::vector<SelectionScheme> study_schemes();

/// The aggregations evaluated: quartile means 1-4 and the final matrix.
std::vector<AggregationSpec> study_aggregations();

struct EvalCell {
    std::string scheme;
    std::string aggregation;
    double mean_error = 0.0;
    double sd_error = 0.0;
};

struct EvalReport {
    // per (dataset, scheme, aggregation) error
    struct Row {
        std::size_t matrix_index;
        double noise;
        std::string scheme;
        std::string aggregation;
        double error;
        double chosen_std;
    };
    std::vector<Row> rows;
    std::vector<EvalCell> summary;
    // per-scheme mean error over datasets at every timepoint (Fig. 2 style)
    std::map<std::string, std::vector<double>> curves;
};

/// Run the full simulation evaluation: simulate every dataset, grid-search,
/// select per scheme, aggregate, compare against truth. With checkpoints
/// enabled, per-dataset results persist under out_dir/checkpoints and an
/// interrupted run resumes from them.
EvalReport run_simulation_study(const SimStudyConfig& config);

/// Write the report as CSV plot data plus a JSON summary with the headline
/// means/sds. Byte-identical for identical config + seed.
void write_eval_report(const EvalReport& report, const SimStudyConfig& config);

double summary_error(const EvalReport& report, const std::string& scheme,
                     const std::string& aggregation);

struct HumanStudyConfig {
    std::uint64_t seed = 0;
    DynamicsParams params;
    std::size_t particles = 5000;
    std::vector<double> stds = study_std_grid(StudyScale::Desk);
    int threads = 1;
    IngestConfig ingest;
    std::filesystem::path out_dir;
};

struct HumanStudyRow {
    std::string pair, task, scheme;
    int trial = 0;
    std::string aggregation;  // q1..q4, trial_mean, final
    std::string feature;      // relative_influence, leader_strength, leader_switch_rate
    double value = 0.0;
    bool defined = true;
};

struct HumanObservedRow {
    std::string pair, task;
    int trial = 0;
    std::string metric;  // crqa_rr/.../gc_strength on observed data
    double value = 0.0;
};

struct HumanStudyResult {
    std::vector<HumanStudyRow> features;          // tidy long format
    std::vector<HumanObservedRow> observed;       // observed-data metrics
    std::map<std::string, double> selected_stds;  // "pair/task/scheme" -> std
    std::vector<std::string> failures;            // per-pair isolation log
};

/// Apply the filter to every ingested (pair, task) series: grid search with
/// the multi-channel likelihood, select per between-subjects CRQA scheme,
/// split MAP series back into trials, summarize features per trial, and
/// compute observed-data CRQA / GC strength per trial.
HumanStudyResult run_human_study(const IngestResult& ingested, const HumanStudyConfig& config);

void write_human_report(const HumanStudyResult& result, const HumanStudyConfig& config);

}  // namespace ctxmat
