#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ctxmat/dynamics.hpp"
#include "ctxmat/pipeline/ingest.hpp"
#include "ctxmat/pipeline/io.hpp"
#include "ctxmat/pipeline/study.hpp"

using namespace ctxmat;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("ctxmat_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ContextMatrix mat2(double a, double b, double c, double d) {
    ContextMatrix m(2, 2);
    m << a, b, c, d;
    return m;
}

BehaviorSeries sample_series() {
    GroundTruthSpec spec;
    spec.matrix = mat2(1, -1, 0, 1);
    spec.noise = {0.1, 7};
    spec.length = 40;
    spec.init_seed = 8;
    BehaviorSeries s = simulate(spec);
    s.trial_starts = {0, 20};
    return s;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Synthetic raw eyetracking samples: constant-rate sampling with simple
/// deterministic channel trajectories.
std::vector<RawSample> synth_raw(const std::string& pair, const std::string& task, int trials,
                                 double duration_ms, double rate_hz) {
    std::vector<RawSample> out;
    const double step = 1000.0 / rate_hz;
    for (int trial = 1; trial <= trials; ++trial)
        for (int agent = 1; agent <= 2; ++agent)
            for (double t = 0.0; t < duration_ms; t += step) {
                RawSample s;
                s.pair = pair;
                s.task = task;
                s.trial = trial;
                s.agent = agent;
                s.timestamp_ms = t;
                s.pupil = 3.0 + 0.5 * std::sin(0.01 * t + agent) + 0.001 * t;
                s.gaze_x = 960.0 + 800.0 * std::sin(0.003 * t + trial);
                s.gaze_y = 540.0 + 400.0 * std::cos(0.002 * t + agent);
                out.push_back(s);
            }
    return out;
}

}  // namespace

TEST_CASE("series CSV round-trip") {
    const auto dir = temp_dir("series");
    const auto s = sample_series();
    io::write_series_csv(dir / "s.csv", s);
    const auto back = io::read_series_csv(dir / "s.csv");
    REQUIRE(back.length() == s.length());
    CHECK(back.agent_labels == s.agent_labels);
    CHECK(back.channel_labels == s.channel_labels);
    CHECK(back.trial_starts == s.trial_starts);
    for (std::size_t t = 0; t < s.length(); ++t)
        CHECK((back.frames[t] - s.frames[t]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("truth sidecar round-trip") {
    const auto dir = temp_dir("sidecar");
    GroundTruthSpec spec;
    spec.matrix = mat2(1, 0, -1, 1);
    spec.noise = {0.15, 42};
    spec.length = 500;
    spec.params = {0.5, 0.1};
    spec.init_seed = 43;
    io::write_truth_sidecar(dir / "t.json", spec);
    const auto back = io::read_truth_sidecar(dir / "t.json");
    CHECK((back.matrix - spec.matrix).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.noise.amplitude == spec.noise.amplitude);
    CHECK(back.noise.seed == spec.noise.seed);
    CHECK(back.length == spec.length);
    CHECK(back.init_seed == spec.init_seed);
    CHECK(back.params.influence_scale == spec.params.influence_scale);
    CHECK(back.params.decay == spec.params.decay);
}

TEST_CASE("run CSV echoes the config and round-trips the MAP series") {
    const auto dir = temp_dir("run");
    const auto s = sample_series();
    FilterConfig cfg;
    cfg.particles = 200;
    cfg.jitter_std = 0.013;
    cfg.seed = 5;
    const auto run = run_filter(s, cfg);
    io::write_run_csv(dir / "r.csv", run);

    const auto text = slurp(dir / "r.csv");
    CHECK(text.find("\"particles\":200") != std::string::npos);
    CHECK(text.find("0.013") != std::string::npos);

    const auto maps = io::read_run_map_series(dir / "r.csv");
    REQUIRE(maps.size() == run.map_series.size());
    for (std::size_t t = 0; t < maps.size(); ++t)
        CHECK((maps[t] - run.map_series[t]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("double formatting round-trips exactly") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.001 + 0.002 * 37}) {
        const std::string s = io::fmt(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("raw CSV reader") {
    const auto dir = temp_dir("raw");
    {
        std::ofstream out(dir / "raw.csv");
        out << "pair,task,trial,agent,timestamp_ms,pupil,gaze_x,gaze_y\n";
        out << "p01,planning,1,1,0,3.2,960,540\n";
        out << "p01,planning,1,2,0,3.1,10,10\n";
    }
    const auto rows = read_raw_csv(dir / "raw.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].pair == "p01");
    CHECK(rows[0].task == "planning");
    CHECK(rows[0].trial == 1);
    CHECK(rows[1].agent == 2);
    CHECK(rows[0].gaze_x == 960.0);

    {
        std::ofstream out(dir / "bad.csv");
        out << "pair,task,trial\n";
    }
    CHECK_THROWS_AS(read_raw_csv(dir / "bad.csv"), ConfigError);
}

TEST_CASE("ingest_human") {
    SUBCASE("2.72 s at 1000 Hz bins into 10 frames") {
        const auto raw = synth_raw("p1", "search", 1, 2720.0, 1000.0);
        const auto res = ingest_human(raw);
        REQUIRE(res.series.count({"p1", "search"}) == 1);
        const auto& s = res.series.at({"p1", "search"});
        CHECK(s.length() == 10);
        CHECK(s.agents() == 2);
        CHECK(s.channels() == 3);  // pupil, grid x, grid y
    }
    SUBCASE("gaze_x = 960 maps to grid column 5 before z-scoring") {
        // a raw trial where agent gaze_x alternates between bin 5 (960 px)
        // and bin 1 (10 px): after z-scoring the two values are symmetric,
        // so the midpoint sample must sit on the positive side
        std::vector<RawSample> raw;
        for (int agent = 1; agent <= 2; ++agent)
            for (int i = 0; i < 12; ++i) {
                RawSample s;
                s.pair = "p";
                s.task = "planning";
                s.trial = 1;
                s.agent = agent;
                s.timestamp_ms = 272.0 * i;
                s.pupil = 3.0 + (i % 3);
                s.gaze_x = i % 2 == 0 ? 960.0 : 10.0;  // bins 5 and 1 of 10
                s.gaze_y = i % 2 == 0 ? 540.0 : 10.0;
                raw.push_back(s);
            }
        const auto res = ingest_human(raw);
        const auto& s = res.series.at({"p", "planning"});
        // gaze-x channel index 1: z-scored alternation of two values
        for (std::size_t t = 0; t + 1 < s.length(); ++t)
            CHECK(s.frames[t](0, 1) == doctest::Approx(-s.frames[t + 1](0, 1)).epsilon(1e-9));
    }
    SUBCASE("agents are truncated to the shorter binned length") {
        auto raw = synth_raw("p2", "search", 1, 27200.0, 100.0);  // 100 frames each
        // shorten agent 2 to 90 frames worth of samples
        std::erase_if(raw, [](const RawSample& s) {
            return s.agent == 2 && s.timestamp_ms >= 0.9 * 27200.0;
        });
        const auto res = ingest_human(raw);
        CHECK(res.series.at({"p2", "search"}).length() == 90);
    }
    SUBCASE("off-screen samples clamp with a diagnostic") {
        auto raw = synth_raw("p3", "search", 1, 5440.0, 250.0);
        raw[3].gaze_x = -50.0;
        raw[5].gaze_x = 5000.0;
        const auto res = ingest_human(raw);
        CHECK(res.diagnostics.offscreen_samples >= 2);
    }
    SUBCASE("zero-variance channel rejects the trial, not the pair") {
        auto raw = synth_raw("p4", "search", 2, 5440.0, 250.0);
        for (auto& s : raw)
            if (s.trial == 1) {
                s.pupil = 3.0;  // constant channel in trial 1
            }
        const auto res = ingest_human(raw);
        CHECK(res.diagnostics.rejected_trials >= 1);
        REQUIRE(res.series.count({"p4", "search"}) == 1);
        CHECK(res.series.at({"p4", "search"}).trial_starts.size() == 1);
    }
    SUBCASE("trials concatenate in order with boundary metadata") {
        const auto raw = synth_raw("p5", "planning", 3, 2720.0, 500.0);
        const auto res = ingest_human(raw);
        const auto& s = res.series.at({"p5", "planning"});
        CHECK(s.length() == 30);
        REQUIRE(s.trial_starts.size() == 3);
        CHECK(s.trial_starts[0] == 0);
        CHECK(s.trial_starts[1] == 10);
        CHECK(s.trial_starts[2] == 20);
    }
    SUBCASE("single-agent trial is rejected") {
        auto raw = synth_raw("p6", "search", 1, 5440.0, 250.0);
        std::erase_if(raw, [](const RawSample& s) { return s.agent == 2; });
        const auto res = ingest_human(raw);
        CHECK(res.diagnostics.rejected_trials == 1);
        CHECK(res.series.count({"p6", "search"}) == 0);
    }
}

TEST_CASE("study grid presets") {
    SimStudyConfig desk;
    desk.scale = StudyScale::Desk;
    const auto dgrid = study_grid(desk);
    CHECK(dgrid.size() == 27);  // 9 matrices x 3 noise levels
    CHECK(study_particles(StudyScale::Desk) == 5000);
    CHECK(study_std_grid(StudyScale::Desk).size() == 11);

    SimStudyConfig paper;
    paper.scale = StudyScale::Paper;
    const auto pgrid = study_grid(paper);
    CHECK(pgrid.size() == 405);
    CHECK(study_particles(StudyScale::Paper) == 100000);
    CHECK(study_std_grid(StudyScale::Paper).size() == 51);

    CHECK(study_schemes().size() == 6);
    CHECK(study_aggregations().size() == 6);
}

TEST_CASE("tiny simulation study is deterministic and checkpoint-resumable") {
    // shrink the problem: run on the desk grid via the public API would take
    // minutes, so this test drives the same machinery through a desk config
    // with checkpointing and compares two runs
    SimStudyConfig cfg;
    cfg.scale = StudyScale::Desk;
    cfg.seed = 9;
    cfg.out_dir = temp_dir("study_a");
    cfg.checkpoints = true;
    cfg.smoke_particles = 60;   // test hook: overrides particle count
    cfg.smoke_length = 24;      // test hook: overrides series length
    const auto a = run_simulation_study(cfg);
    write_eval_report(a, cfg);

    // rerun in a fresh dir: byte-identical outputs
    SimStudyConfig cfg_b = cfg;
    cfg_b.out_dir = temp_dir("study_b");
    const auto b = run_simulation_study(cfg_b);
    write_eval_report(b, cfg_b);
    CHECK(slurp(cfg.out_dir / "errors.csv") == slurp(cfg_b.out_dir / "errors.csv"));
    CHECK(slurp(cfg.out_dir / "curves.csv") == slurp(cfg_b.out_dir / "curves.csv"));

    // resume: delete half the checkpoints and the report, re-run, compare
    SimStudyConfig cfg_c = cfg;
    cfg_c.out_dir = temp_dir("study_c");
    fs::create_directories(cfg_c.out_dir / "checkpoints");
    std::size_t copied = 0;
    for (const auto& e : fs::directory_iterator(cfg.out_dir / "checkpoints")) {
        if (++copied % 2 == 0) continue;
        fs::copy_file(e.path(), cfg_c.out_dir / "checkpoints" / e.path().filename());
    }
    const auto c = run_simulation_study(cfg_c);
    write_eval_report(c, cfg_c);
    CHECK(slurp(cfg.out_dir / "errors.csv") == slurp(cfg_c.out_dir / "errors.csv"));

    // thread count does not change bytes
    SimStudyConfig cfg_d = cfg;
    cfg_d.out_dir = temp_dir("study_d");
    cfg_d.threads = 3;
    const auto d = run_simulation_study(cfg_d);
    write_eval_report(d, cfg_d);
    CHECK(slurp(cfg.out_dir / "errors.csv") == slurp(cfg_d.out_dir / "errors.csv"));

    // structural checks on the report itself
    CHECK(a.rows.size() == 27 * 6 * 6);
    CHECK_FALSE(a.summary.empty());
    CHECK(a.curves.count("ideal_oracle") == 1);
}

TEST_CASE("human study produces per-trial features and isolates failures") {
    auto raw = synth_raw("h1", "planning", 2, 5440.0, 250.0);
    const auto raw2 = synth_raw("h1", "search", 2, 5440.0, 250.0);
    raw.insert(raw.end(), raw2.begin(), raw2.end());
    const auto ingested = ingest_human(raw);
    REQUIRE(ingested.series.size() == 2);

    HumanStudyConfig cfg;
    cfg.seed = 3;
    cfg.particles = 80;
    cfg.stds = {0.01, 0.05};
    cfg.out_dir = temp_dir("human");
    const auto res = run_human_study(ingested, cfg);
    CHECK(res.failures.empty());
    CHECK_FALSE(res.features.empty());
    // one selected std per (pair, task, scheme); 4 between-subjects schemes
    CHECK(res.selected_stds.size() == 2 * 4);
    for (const auto& [key, std_val] : res.selected_stds)
        CHECK((std_val == 0.01 || std_val == 0.05));
    // observed metrics cover both tasks and both trials
    bool saw_gc = false, saw_rr = false;
    for (const auto& row : res.observed) {
        if (row.metric == "gc_strength") saw_gc = true;
        if (row.metric == "crqa_rr") saw_rr = true;
    }
    CHECK(saw_rr);
    // gc may be absent here: 20-frame trials are below the granger minimum
    (void)saw_gc;

    write_human_report(res, cfg);
    CHECK(fs::exists(cfg.out_dir / "features.csv"));
    CHECK(fs::exists(cfg.out_dir / "observed.csv"));
    CHECK(fs::exists(cfg.out_dir / "selected.csv"));
}
