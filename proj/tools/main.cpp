#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ctxmat/features.hpp"
#include "ctxmat/pipeline/ingest.hpp"
#include "ctxmat/pipeline/io.hpp"
#include "ctxmat/pipeline/study.hpp"
#include "ctxmat/selection.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = ".";
    std::string config_path;
    double influence_scale = 0.5;
    double decay = 0.1;
};

void apply_config_file(GlobalOpts& g) {
    if (g.config_path.empty()) return;
    std::ifstream in(g.config_path);
    if (!in) throw ctxmat::ConfigError("cannot open config: " + g.config_path);
    const json j = json::parse(in);
    if (j.contains("seed")) g.seed = j["seed"];
    if (j.contains("threads")) g.threads = j["threads"];
    if (j.contains("out_dir")) g.out_dir = j["out_dir"];
    if (j.contains("params")) {
        if (j["params"].contains("influence_scale")) g.influence_scale = j["params"]["influence_scale"];
        if (j["params"].contains("decay")) g.decay = j["params"]["decay"];
    }
}

ctxmat::Series series_channel(const ctxmat::BehaviorSeries& s, int agent, int channel) {
    ctxmat::Series out;
    for (const auto& f : s.frames) out.push_back(f(agent, channel));
    return out;
}

ctxmat::SelectionStyle parse_style(const std::string& s) {
    if (s == "ideal_oracle") return ctxmat::SelectionStyle::IdealOracle;
    if (s == "lowest_sigma") return ctxmat::SelectionStyle::LowestSigma;
    if (s == "between_subjects") return ctxmat::SelectionStyle::BetweenSubjects;
    if (s == "within_subjects") return ctxmat::SelectionStyle::WithinSubjects;
    if (s == "standalone") return ctxmat::SelectionStyle::Standalone;
    throw ctxmat::ConfigError("unknown selection style: " + s);
}

std::vector<double> parse_stds(const std::string& preset, const std::vector<double>& explicit_stds) {
    if (!explicit_stds.empty()) return explicit_stds;
    if (preset == "paper") return ctxmat::default_std_grid();
    return ctxmat::study_std_grid(ctxmat::StudyScale::Desk);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"context-matrix inference toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand name

    GlobalOpts g;
    app.add_option("--seed", g.seed, "base RNG seed");
    app.add_option("--threads", g.threads, "worker threads");
    app.add_option("--out-dir", g.out_dir, "output directory");
    app.add_option("--config", g.config_path, "JSON config file");

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "generate synthetic datasets with truth sidecars");
    std::string sim_grid = "desk";
    int sim_matrix = -1;
    double sim_noise = 0.05;
    std::size_t sim_length = 500;
    sim->add_option("--grid", sim_grid, "paper (405 datasets), desk (27), or single");
    sim->add_option("--matrix-index", sim_matrix, "sign-pattern matrix index 0..80 (grid=single)");
    sim->add_option("--noise", sim_noise, "noise amplitude (grid=single)");
    sim->add_option("--length", sim_length, "series length (grid=single)");

    // ---- infer ----
    auto* inf = app.add_subcommand("infer", "run the particle filter on one series");
    std::string inf_input, inf_output = "run.csv";
    double inf_std = 0.01;
    std::size_t inf_particles = 100000;
    inf->add_option("--input", inf_input, "behavior series CSV")->required();
    inf->add_option("--out", inf_output, "output run CSV");
    inf->add_option("--std", inf_std, "jitter standard deviation");
    inf->add_option("--particles", inf_particles, "particle count");

    // ---- select ----
    auto* sel = app.add_subcommand("select", "grid search and covariance selection");
    std::string sel_input, sel_style = "lowest_sigma", sel_metric, sel_direction = "default";
    std::string sel_truth, sel_stds_preset = "desk", sel_out = "selection.json";
    std::vector<double> sel_stds;
    std::size_t sel_particles = 5000;
    sel->add_option("--input", sel_input, "behavior series CSV")->required();
    sel->add_option("--select-style", sel_style, "ideal_oracle|lowest_sigma|between_subjects|within_subjects|standalone");
    sel->add_option("--select-metric", sel_metric, "metric identifier");
    sel->add_option("--select-direction", sel_direction, "maximize|minimize|default");
    sel->add_option("--truth", sel_truth, "truth sidecar JSON (for ideal_oracle)");
    sel->add_option("--stds", sel_stds, "explicit std grid");
    sel->add_option("--stds-preset", sel_stds_preset, "desk (11 values) or paper (51)");
    sel->add_option("--particles", sel_particles, "particle count");
    sel->add_option("--out", sel_out, "output JSON");

    // ---- features ----
    auto* feat = app.add_subcommand("features", "summary features from a run's MAP series");
    std::string feat_run, feat_out = "features.json";
    feat->add_option("--run", feat_run, "run CSV from `infer`")->required();
    feat->add_option("--out", feat_out, "output JSON");

    // ---- crqa ----
    auto* crq = app.add_subcommand("crqa", "cross-recurrence metrics of two channels");
    std::string crqa_input;
    int crqa_channel = 0, crqa_m = 3, crqa_tau = 2, crqa_lmin = 2;
    double crqa_radius = 0.84;
    crq->add_option("--input", crqa_input, "behavior series CSV")->required();
    crq->add_option("--channel", crqa_channel, "channel index");
    crq->add_option("--embed-dim", crqa_m, "embedding dimension m");
    crq->add_option("--delay", crqa_tau, "embedding delay tau");
    crq->add_option("--radius", crqa_radius, "threshold in z-score units");
    crq->add_option("--lmin", crqa_lmin, "minimum diagonal line length");

    // ---- granger ----
    auto* gra = app.add_subcommand("granger", "bivariate Granger causality of two channels");
    std::string gra_input;
    int gra_channel = 0;
    gra->add_option("--input", gra_input, "behavior series CSV")->required();
    gra->add_option("--channel", gra_channel, "channel index");

    // ---- eval-sim ----
    auto* esim = app.add_subcommand("eval-sim", "run the simulation accuracy study");
    std::string esim_scale = "desk";
    bool esim_no_checkpoints = false;
    esim->add_option("--scale", esim_scale, "desk or paper");
    esim->add_flag("--no-checkpoints", esim_no_checkpoints, "disable checkpoint files");

    // ---- eval-human ----
    auto* ehum = app.add_subcommand("eval-human", "run the human-data feature study");
    std::string ehum_input, ehum_stds_preset = "desk";
    std::size_t ehum_particles = 5000;
    double ehum_bin_ms = 272.0;
    ehum->add_option("--input", ehum_input, "raw long-format eyetracking CSV")->required();
    ehum->add_option("--particles", ehum_particles, "particle count");
    ehum->add_option("--stds-preset", ehum_stds_preset, "desk or paper");
    ehum->add_option("--bin-ms", ehum_bin_ms, "resampling bin width in ms");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        apply_config_file(g);
        const ctxmat::DynamicsParams params{g.influence_scale, g.decay};

        if (*sim) {
            fs::create_directories(g.out_dir);
            std::vector<ctxmat::StudyDataset> datasets;
            if (sim_grid == "single") {
                if (sim_matrix < 0) throw ctxmat::ConfigError("--matrix-index required for grid=single");
                ctxmat::StudyDataset ds;
                ds.matrix_index = static_cast<std::size_t>(sim_matrix);
                ds.spec.matrix = ctxmat::sign_pattern_matrix(ds.matrix_index);
                ds.spec.noise = {sim_noise, ctxmat::Rng::derive_seed(g.seed, 0)};
                ds.spec.init_seed = ctxmat::Rng::derive_seed(g.seed, 1);
                ds.spec.length = sim_length;
                ds.spec.params = params;
                datasets.push_back(std::move(ds));
            } else {
                ctxmat::SimStudyConfig sc;
                sc.scale = sim_grid == "paper" ? ctxmat::StudyScale::Paper : ctxmat::StudyScale::Desk;
                sc.seed = g.seed;
                sc.params = params;
                datasets = ctxmat::study_grid(sc);
            }
            for (const auto& ds : datasets) {
                std::ostringstream name;
                name << "sim_m" << ds.matrix_index << "_a"
                     << static_cast<int>(std::lround(ds.spec.noise.amplitude * 100));
                ctxmat::io::write_series_csv(fs::path(g.out_dir) / (name.str() + ".csv"),
                                             ctxmat::simulate(ds.spec));
                ctxmat::io::write_truth_sidecar(fs::path(g.out_dir) / (name.str() + ".truth.json"),
                                                ds.spec);
            }
            std::cout << "wrote " << datasets.size() << " datasets to " << g.out_dir << '\n';
        } else if (*inf) {
            const auto series = ctxmat::io::read_series_csv(inf_input);
            ctxmat::FilterConfig fc;
            fc.particles = inf_particles;
            fc.jitter_std = inf_std;
            fc.params = params;
            fc.seed = g.seed;
            const auto run = ctxmat::run_filter(series, fc);
            ctxmat::io::write_run_csv(inf_output, run);
            std::cout << "wrote " << inf_output << '\n';
        } else if (*sel) {
            const auto series = ctxmat::io::read_series_csv(sel_input);
            ctxmat::FilterConfig fc;
            fc.particles = sel_particles;
            fc.params = params;
            fc.seed = g.seed;
            const auto stds = parse_stds(sel_stds_preset, sel_stds);
            const auto runs = ctxmat::grid_search(series, fc, stds, g.threads);

            ctxmat::SelectionScheme scheme;
            scheme.style = parse_style(sel_style);
            scheme.metric = sel_metric;
            if (sel_direction == "maximize")
                scheme.direction = ctxmat::Direction::Maximize;
            else if (sel_direction == "minimize")
                scheme.direction = ctxmat::Direction::Minimize;
            else if (scheme.style == ctxmat::SelectionStyle::WithinSubjects)
                scheme.direction = ctxmat::default_within_direction(sel_metric);

            std::optional<ctxmat::ContextMatrix> truth;
            if (!sel_truth.empty()) truth = ctxmat::io::read_truth_sidecar(sel_truth).matrix;

            const auto outcome = ctxmat::select(runs, series, scheme, truth);
            json j;
            j["scheme"] = scheme.name();
            j["chosen_index"] = outcome.chosen_index;
            j["chosen_std"] = outcome.chosen_std;
            j["scores"] = outcome.score_table;
            std::ofstream out(sel_out, std::ios::binary);
            out << j.dump(2) << '\n';
            std::cout << "chosen std " << outcome.chosen_std << " -> " << sel_out << '\n';
        } else if (*feat) {
            const auto map_series = ctxmat::io::read_run_map_series(feat_run);
            const auto summary = ctxmat::summarize(map_series);
            json j;
            auto block = [](const ctxmat::BlockSummary& b) {
                json v;
                v["value"] = b.value ? json(*b.value) : json(nullptr);
                v["undefined"] = b.undefined;
                return v;
            };
            for (int q = 0; q < 4; ++q) {
                const std::string k = "q" + std::to_string(q + 1);
                j["relative_influence"][k] = block(summary.relative_influence_quartile[q]);
                j["leader_strength"][k] = block(summary.leader_strength_quartile[q]);
                j["leader_switch_rate"][k] = summary.switch_rate_quartile[q]
                                                 ? json(*summary.switch_rate_quartile[q])
                                                 : json(nullptr);
            }
            j["relative_influence"]["trial_mean"] = block(summary.relative_influence_trial);
            j["relative_influence"]["final"] = block(summary.relative_influence_final);
            j["leader_strength"]["trial_mean"] = block(summary.leader_strength_trial);
            j["leader_strength"]["final"] = block(summary.leader_strength_final);
            j["leader_switch_rate"]["trial_mean"] =
                summary.switch_rate_trial ? json(*summary.switch_rate_trial) : json(nullptr);
            std::ofstream out(feat_out, std::ios::binary);
            out << j.dump(2) << '\n';
            std::cout << "wrote " << feat_out << '\n';
        } else if (*crq) {
            const auto series = ctxmat::io::read_series_csv(crqa_input);
            ctxmat::CrqaConfig cfg{crqa_m, crqa_tau, crqa_radius, crqa_lmin};
            const auto m = ctxmat::crqa(series_channel(series, 0, crqa_channel),
                                        series_channel(series, 1, crqa_channel), cfg);
            json j{{"rr", m.rr}, {"det", m.det}, {"ent", m.ent}, {"maxl", m.maxl}};
            std::cout << j.dump(2) << '\n';
        } else if (*gra) {
            const auto series = ctxmat::io::read_series_csv(gra_input);
            const auto r = ctxmat::granger(series_channel(series, 0, gra_channel),
                                           series_channel(series, 1, gra_channel));
            json j{{"gc_1to2", r.gc_1to2},
                   {"gc_2to1", r.gc_2to1},
                   {"lag", r.lag},
                   {"used_first_differences", r.used_first_differences}};
            std::cout << j.dump(2) << '\n';
        } else if (*esim) {
            ctxmat::SimStudyConfig sc;
            sc.scale = esim_scale == "paper" ? ctxmat::StudyScale::Paper : ctxmat::StudyScale::Desk;
            sc.seed = g.seed;
            sc.params = params;
            sc.threads = g.threads;
            sc.out_dir = g.out_dir;
            sc.checkpoints = !esim_no_checkpoints;
            const auto report = ctxmat::run_simulation_study(sc);
            ctxmat::write_eval_report(report, sc);
            for (const auto& cell : report.summary)
                std::cout << cell.scheme << " " << cell.aggregation << " M=" << cell.mean_error
                          << " sd=" << cell.sd_error << '\n';
        } else if (*ehum) {
            const auto raw = ctxmat::read_raw_csv(ehum_input);
            ctxmat::IngestConfig ic;
            ic.bin_ms = ehum_bin_ms;
            const auto ingested = ctxmat::ingest_human(raw, ic);
            ctxmat::HumanStudyConfig hc;
            hc.seed = g.seed;
            hc.params = params;
            hc.particles = ehum_particles;
            hc.stds = parse_stds(ehum_stds_preset, {});
            hc.threads = g.threads;
            hc.ingest = ic;
            hc.out_dir = g.out_dir;
            const auto result = ctxmat::run_human_study(ingested, hc);
            ctxmat::write_human_report(result, hc);
            std::cout << "features: " << result.features.size()
                      << " rows, observed: " << result.observed.size()
                      << " rows, failures: " << result.failures.size() << '\n';
        }
    } catch (const ctxmat::ConfigError& e) {
        std::cerr << R"({"error":"config","message":")" << e.what() << "\"}\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << R"({"error":"runtime","message":")" << e.what() << "\"}\n";
        return 1;
    }
    return 0;
}
