#include "ctxmat/pipeline/study.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

#include "ctxmat/features.hpp"
#include "ctxmat/pipeline/io.hpp"

namespace ctxmat {

using nlohmann::json;

std::vector<double> study_std_grid(StudyScale scale) {
    if (scale == StudyScale::Paper) return default_std_grid();
    std::vector<double> stds;
    for (int k = 0; k < 11; ++k) stds.push_back(0.001 + 0.01 * k);
    return stds;
}

std::size_t study_particles(StudyScale scale) {
    return scale == StudyScale::Paper ? 100000 : 5000;
}

namespace {

/// Desk subset: 9 matrices evenly spaced over those whose induced dynamics
/// are stable (spectral radius of I*C - alpha*Id below 1). The handful of
/// explosive sign patterns make the series variance blow up, which flattens
/// the likelihood early on; at desk particle counts they are untrackable and
/// would swamp the small-grid error means.
std::vector<std::size_t> desk_matrix_indices(const DynamicsParams& params) {
    std::vector<std::size_t> stable;
    for (std::size_t m = 0; m < 81; ++m) {
        const Eigen::Matrix2d M = params.influence_scale * sign_pattern_matrix(m) -
                                  params.decay * Eigen::Matrix2d::Identity();
        if (M.eigenvalues().cwiseAbs().maxCoeff() < 1.0) stable.push_back(m);
    }
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < 9; ++k)
        out.push_back(stable[(k * (stable.size() - 1) + 4) / 8]);
    return out;
}

}  // namespace

std::vector<StudyDataset> study_grid(const SimStudyConfig& config) {
    const auto full = ground_truth_grid(config.seed, config.params);
    const auto desk_m = desk_matrix_indices(config.params);
    std::vector<StudyDataset> out;
    for (std::size_t idx = 0; idx < full.size(); ++idx) {
        const std::size_t m = idx / 5;
        const std::size_t a = idx % 5;
        if (config.scale == StudyScale::Desk) {
            // stratified subset: 9 stable matrices, noise levels 1/3/5
            if (std::find(desk_m.begin(), desk_m.end(), m) == desk_m.end() ||
                (a != 0 && a != 2 && a != 4))
                continue;
        }
        StudyDataset ds;
        ds.matrix_index = m;
        ds.spec = full[idx];
        ds.filter_seed = Rng::derive_seed(config.seed, 100000 + idx);
        out.push_back(std::move(ds));
    }
    return out;
}

std::vector<SelectionScheme> study_schemes() {
    std::vector<SelectionScheme> schemes;
    schemes.push_back({SelectionStyle::IdealOracle, "", Direction::Minimize});
    schemes.push_back({SelectionStyle::LowestSigma, "", Direction::Minimize});
    for (const char* m : {"crqa_rr", "crqa_det", "crqa_ent", "crqa_maxl"})
        schemes.push_back({SelectionStyle::BetweenSubjects, m, Direction::Minimize});
    return schemes;
}

std::vector<AggregationSpec> study_aggregations() {
    return {AggregationSpec::quartile_mean(1), AggregationSpec::quartile_mean(2),
            AggregationSpec::quartile_mean(3), AggregationSpec::quartile_mean(4),
            AggregationSpec::trial_mean(), AggregationSpec::final()};
}

namespace {

struct DatasetResult {
    std::vector<EvalReport::Row> rows;
    std::map<std::string, std::vector<double>> curves;  // scheme -> per-t error
};

json dataset_result_to_json(const DatasetResult& r) {
    json j;
    j["rows"] = json::array();
    for (const auto& row : r.rows)
        j["rows"].push_back({{"matrix_index", row.matrix_index},
                             {"noise", row.noise},
                             {"scheme", row.scheme},
                             {"aggregation", row.aggregation},
                             {"error", row.error},
                             {"chosen_std", row.chosen_std}});
    for (const auto& [scheme, curve] : r.curves) j["curves"][scheme] = curve;
    return j;
}

DatasetResult dataset_result_from_json(const json& j) {
    DatasetResult r;
    for (const auto& row : j.at("rows"))
        r.rows.push_back({row.at("matrix_index"), row.at("noise"), row.at("scheme"),
                          row.at("aggregation"), row.at("error"), row.at("chosen_std")});
    for (const auto& [scheme, curve] : j.at("curves").items())
        r.curves[scheme] = curve.get<std::vector<double>>();
    return r;
}

DatasetResult evaluate_dataset(const StudyDataset& ds, const SimStudyConfig& config) {
    GroundTruthSpec spec = ds.spec;
    if (config.smoke_length > 0) spec.length = config.smoke_length;
    const BehaviorSeries series = simulate(spec);

    FilterConfig fc;
    fc.particles = config.smoke_particles > 0 ? config.smoke_particles
                                              : study_particles(config.scale);
    fc.params = config.params;
    fc.seed = ds.filter_seed;
    const auto stds = study_std_grid(config.scale);
    const auto runs = grid_search(series, fc, stds);

    DatasetResult result;
    const auto aggs = study_aggregations();
    for (const auto& scheme : study_schemes()) {
        // non-oracle selection does not depend on the aggregation
        std::optional<SelectionOutcome> fixed;
        if (scheme.style != SelectionStyle::IdealOracle)
            fixed = select(runs, series, scheme, ds.spec.matrix);

        // the run used for the error-over-time curve
        std::size_t curve_run = 0;
        for (const auto& agg : aggs) {
            const auto outcome =
                fixed ? *fixed : select(runs, series, scheme, ds.spec.matrix, agg);
            const double err =
                matrix_error(aggregate_matrices(runs[outcome.chosen_index].map_series, agg),
                             ds.spec.matrix);
            result.rows.push_back({ds.matrix_index, ds.spec.noise.amplitude, scheme.name(),
                                   agg.name(), err, outcome.chosen_std});
            if (agg.mode == AggregationMode::TrialMean) curve_run = outcome.chosen_index;
        }
        std::vector<double> curve;
        curve.reserve(runs[curve_run].map_series.size());
        for (const auto& C : runs[curve_run].map_series)
            curve.push_back(matrix_error(C, ds.spec.matrix));
        result.curves[scheme.name()] = std::move(curve);
    }
    return result;
}

std::string checkpoint_name(const StudyDataset& ds) {
    std::ostringstream os;
    os << "ds_m" << ds.matrix_index << "_a" << static_cast<int>(std::lround(ds.spec.noise.amplitude * 100))
       << ".json";
    return os.str();
}

}  // namespace

EvalReport run_simulation_study(const SimStudyConfig& config) {
    const auto grid = study_grid(config);
    std::vector<DatasetResult> results(grid.size());

    std::filesystem::path ckpt_dir;
    if (config.checkpoints && !config.out_dir.empty()) {
        ckpt_dir = config.out_dir / "checkpoints";
        std::filesystem::create_directories(ckpt_dir);
    }

    auto process = [&](std::size_t i) {
        if (!ckpt_dir.empty()) {
            const auto path = ckpt_dir / checkpoint_name(grid[i]);
            if (std::filesystem::exists(path)) {
                std::ifstream in(path);
                results[i] = dataset_result_from_json(json::parse(in));
                return;
            }
            results[i] = evaluate_dataset(grid[i], config);
            const auto tmp = path.string() + ".tmp";
            {
                std::ofstream out(tmp, std::ios::binary);
                out << dataset_result_to_json(results[i]).dump() << '\n';
            }
            std::filesystem::rename(tmp, path);
        } else {
            results[i] = evaluate_dataset(grid[i], config);
        }
    };

    if (config.threads <= 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) process(i);
    } else {
        std::size_t next = 0;
        while (next < grid.size()) {
            const std::size_t batch =
                std::min<std::size_t>(static_cast<std::size_t>(config.threads), grid.size() - next);
            std::vector<std::future<void>> futures;
            for (std::size_t b = 0; b < batch; ++b)
                futures.push_back(std::async(std::launch::async, process, next + b));
            for (auto& f : futures) f.get();
            next += batch;
        }
    }

    EvalReport report;
    for (const auto& r : results)
        report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());

    // summary mean/sd per (scheme, aggregation), in fixed order
    for (const auto& scheme : study_schemes()) {
        for (const auto& agg : study_aggregations()) {
            std::vector<double> errs;
            for (const auto& row : report.rows)
                if (row.scheme == scheme.name() && row.aggregation == agg.name())
                    errs.push_back(row.error);
            if (errs.empty()) continue;
            double mean = 0.0;
            for (double e : errs) mean += e;
            mean /= static_cast<double>(errs.size());
            double sd = 0.0;
            for (double e : errs) sd += (e - mean) * (e - mean);
            sd = errs.size() > 1 ? std::sqrt(sd / static_cast<double>(errs.size() - 1)) : 0.0;
            report.summary.push_back({scheme.name(), agg.name(), mean, sd});
        }
    }

    // mean error-over-time curves
    for (const auto& scheme : study_schemes()) {
        const std::string name = scheme.name();
        std::vector<double> acc;
        for (const auto& r : results) {
            const auto& curve = r.curves.at(name);
            if (acc.empty()) acc.assign(curve.size(), 0.0);
            for (std::size_t t = 0; t < curve.size(); ++t) acc[t] += curve[t];
        }
        for (double& v : acc) v /= static_cast<double>(results.size());
        report.curves[name] = std::move(acc);
    }
    return report;
}

double summary_error(const EvalReport& report, const std::string& scheme,
                     const std::string& aggregation) {
    for (const auto& cell : report.summary)
        if (cell.scheme == scheme && cell.aggregation == aggregation) return cell.mean_error;
    throw ConfigError("summary_error: no cell for " + scheme + "/" + aggregation);
}

namespace {

json sim_config_to_json(const SimStudyConfig& config) {
    json j;
    j["schema_version"] = 1;
    j["scale"] = config.scale == StudyScale::Paper ? "paper" : "desk";
    j["seed"] = config.seed;
    j["params"] = {{"influence_scale", config.params.influence_scale},
                   {"decay", config.params.decay}};
    j["particles"] = study_particles(config.scale);
    j["stds"] = study_std_grid(config.scale);
    // the 51-value grid ends at 0.101, not the nominal 0.1
    j["std_grid_endpoint_note"] = "51 values of 0.001 + 0.002k end at 0.101";
    if (config.smoke_particles > 0) j["smoke_particles"] = config.smoke_particles;
    if (config.smoke_length > 0) j["smoke_length"] = config.smoke_length;
    return j;
}

}  // namespace

void write_eval_report(const EvalReport& report, const SimStudyConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    const std::string cfg = sim_config_to_json(config).dump();

    {
        std::ofstream out(config.out_dir / "errors.csv", std::ios::binary);
        out << "# config: " << cfg << '\n';
        out << "matrix_index,noise,scheme,aggregation,error,chosen_std\n";
        for (const auto& r : report.rows)
            out << r.matrix_index << ',' << io::fmt(r.noise) << ',' << r.scheme << ','
                << r.aggregation << ',' << io::fmt(r.error) << ',' << io::fmt(r.chosen_std)
                << '\n';
    }
    {
        std::ofstream out(config.out_dir / "curves.csv", std::ios::binary);
        out << "# config: " << cfg << '\n';
        out << "scheme,t,mean_error\n";
        for (const auto& [scheme, curve] : report.curves)
            for (std::size_t t = 0; t < curve.size(); ++t)
                out << scheme << ',' << t + 2 << ',' << io::fmt(curve[t]) << '\n';
    }
    {
        json j;
        j["config"] = sim_config_to_json(config);
        j["summary"] = json::array();
        for (const auto& cell : report.summary)
            j["summary"].push_back({{"scheme", cell.scheme},
                                    {"aggregation", cell.aggregation},
                                    {"mean_error", cell.mean_error},
                                    {"sd_error", cell.sd_error}});
        std::ofstream out(config.out_dir / "summary.json", std::ios::binary);
        out << j.dump(2) << '\n';
    }
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Series frame_channel(const BehaviorSeries& s, std::size_t lo, std::size_t hi, Eigen::Index agent,
                     Eigen::Index channel) {
    Series out;
    out.reserve(hi - lo);
    for (std::size_t t = lo; t < hi; ++t) out.push_back(s.frames[t](agent, channel));
    return out;
}

/// Map-series index range covering one trial: map index k predicts frame
/// k + 1, so a trial owns the indices whose predicted frame lies inside it.
IndexRange trial_map_range(const std::vector<std::size_t>& starts, std::size_t trial,
                           std::size_t total_frames) {
    const std::size_t lo_frame = std::max<std::size_t>(starts[trial], 1);
    const std::size_t hi_frame =
        trial + 1 < starts.size() ? starts[trial + 1] : total_frames;
    return {lo_frame - 1, hi_frame - 1};
}

void emit_feature_rows(HumanStudyResult& result, const std::string& pair,
                       const std::string& task, const std::string& scheme, int trial,
                       const FeatureSummary& fs) {
    auto push = [&](const std::string& agg, const std::string& feature, const BlockSummary& b) {
        HumanStudyRow row{pair, task, scheme, trial, agg, feature, 0.0, false};
        if (b.value) {
            row.value = *b.value;
            row.defined = true;
        }
        result.features.push_back(std::move(row));
    };
    auto push_opt = [&](const std::string& agg, const std::string& feature,
                        const std::optional<double>& v) {
        HumanStudyRow row{pair, task, scheme, trial, agg, feature, 0.0, false};
        if (v) {
            row.value = *v;
            row.defined = true;
        }
        result.features.push_back(std::move(row));
    };

    for (int q = 0; q < 4; ++q) {
        const std::string agg = "q" + std::to_string(q + 1);
        push(agg, "relative_influence", fs.relative_influence_quartile[q]);
        push(agg, "leader_strength", fs.leader_strength_quartile[q]);
        push_opt(agg, "leader_switch_rate", fs.switch_rate_quartile[q]);
    }
    push("trial_mean", "relative_influence", fs.relative_influence_trial);
    push("trial_mean", "leader_strength", fs.leader_strength_trial);
    push_opt("trial_mean", "leader_switch_rate", fs.switch_rate_trial);
    push("final", "relative_influence", fs.relative_influence_final);
    push("final", "leader_strength", fs.leader_strength_final);
}

}  // namespace

HumanStudyResult run_human_study(const IngestResult& ingested, const HumanStudyConfig& config) {
    HumanStudyResult result;

    std::vector<SelectionScheme> schemes;
    for (const char* m : {"crqa_rr", "crqa_det", "crqa_ent", "crqa_maxl"})
        schemes.push_back({SelectionStyle::BetweenSubjects, m, Direction::Minimize});

    for (const auto& [key, series] : ingested.series) {
        const auto& [pair, task] = key;
        try {
            FilterConfig fc;
            fc.particles = config.particles;
            fc.params = config.params;
            fc.seed = Rng::derive_seed(config.seed, fnv1a(pair + "/" + task));
            const auto runs = grid_search(series, fc, config.stds, config.threads);

            const auto& starts = series.trial_starts;
            const std::size_t n_trials = starts.empty() ? 1 : starts.size();
            const std::vector<std::size_t> eff_starts =
                starts.empty() ? std::vector<std::size_t>{0} : starts;

            for (const auto& scheme : schemes) {
                const auto outcome = select(runs, series, scheme);
                result.selected_stds[pair + "/" + task + "/" + scheme.name()] =
                    outcome.chosen_std;
                const auto& map_series = runs[outcome.chosen_index].map_series;

                for (std::size_t tr = 0; tr < n_trials; ++tr) {
                    const auto [lo, hi] = trial_map_range(eff_starts, tr, series.length());
                    if (hi <= lo) continue;
                    const std::vector<ContextMatrix> sub(map_series.begin() + static_cast<std::ptrdiff_t>(lo),
                                                         map_series.begin() + static_cast<std::ptrdiff_t>(hi));
                    emit_feature_rows(result, pair, task, scheme.name(),
                                      static_cast<int>(tr) + 1, summarize(sub));
                }
            }

            // observed-data baselines per trial
            for (std::size_t tr = 0; tr < n_trials; ++tr) {
                const std::size_t lo = eff_starts[tr];
                const std::size_t hi =
                    tr + 1 < eff_starts.size() ? eff_starts[tr + 1] : series.length();

                CrqaMetrics crqa_mean{};
                std::size_t crqa_channels = 0;
                std::vector<GcResult> gcs;
                for (Eigen::Index h = 0; h < series.channels(); ++h) {
                    const Series a1 = frame_channel(series, lo, hi, 0, h);
                    const Series a2 = frame_channel(series, lo, hi, 1, h);
                    try {
                        const auto m = crqa(a1, a2);
                        crqa_mean.rr += m.rr;
                        crqa_mean.det += m.det;
                        crqa_mean.ent += m.ent;
                        crqa_mean.maxl += m.maxl;
                        ++crqa_channels;
                    } catch (const Error&) {
                    }
                    try {
                        gcs.push_back(granger(a1, a2));
                    } catch (const Error&) {
                    }
                }
                const int trial = static_cast<int>(tr) + 1;
                if (crqa_channels > 0) {
                    const double c = static_cast<double>(crqa_channels);
                    result.observed.push_back({pair, task, trial, "crqa_rr", crqa_mean.rr / c});
                    result.observed.push_back({pair, task, trial, "crqa_det", crqa_mean.det / c});
                    result.observed.push_back({pair, task, trial, "crqa_ent", crqa_mean.ent / c});
                    result.observed.push_back(
                        {pair, task, trial, "crqa_maxl", static_cast<double>(crqa_mean.maxl) / c});
                }
                if (!gcs.empty()) {
                    try {
                        result.observed.push_back({pair, task, trial, "gc_strength", gc_strength(gcs)});
                    } catch (const Error&) {
                    }
                }
            }
        } catch (const std::exception& e) {
            result.failures.push_back(pair + "/" + task + ": " + e.what());
        }
    }
    return result;
}

void write_human_report(const HumanStudyResult& result, const HumanStudyConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    json cfg;
    cfg["schema_version"] = 1;
    cfg["seed"] = config.seed;
    cfg["particles"] = config.particles;
    cfg["stds"] = config.stds;
    cfg["params"] = {{"influence_scale", config.params.influence_scale},
                     {"decay", config.params.decay}};
    const std::string cfg_str = cfg.dump();

    {
        std::ofstream out(config.out_dir / "features.csv", std::ios::binary);
        out << "# config: " << cfg_str << '\n';
        out << "pair,task,trial,scheme,aggregation,feature,value,defined\n";
        for (const auto& r : result.features)
            out << r.pair << ',' << r.task << ',' << r.trial << ',' << r.scheme << ','
                << r.aggregation << ',' << r.feature << ','
                << (r.defined ? io::fmt(r.value) : std::string("NA")) << ','
                << (r.defined ? 1 : 0) << '\n';
    }
    {
        std::ofstream out(config.out_dir / "observed.csv", std::ios::binary);
        out << "# config: " << cfg_str << '\n';
        out << "pair,task,trial,metric,value\n";
        for (const auto& r : result.observed)
            out << r.pair << ',' << r.task << ',' << r.trial << ',' << r.metric << ','
                << io::fmt(r.value) << '\n';
    }
    {
        std::ofstream out(config.out_dir / "selected.csv", std::ios::binary);
        out << "# config: " << cfg_str << '\n';
        out << "pair_task_scheme,std\n";
        for (const auto& [key, std_val] : result.selected_stds)
            out << key << ',' << io::fmt(std_val) << '\n';
    }
    if (!result.failures.empty()) {
        std::ofstream out(config.out_dir / "failures.txt", std::ios::binary);
        for (const auto& f : result.failures) out << f << '\n';
    }
}

}  // namespace ctxmat
