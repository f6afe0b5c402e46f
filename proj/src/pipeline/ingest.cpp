#include "ctxmat/pipeline/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ctxmat {

namespace {

struct BinnedAgent {
    std::vector<double> pupil, gx, gy;  // one entry per frame
};

constexpr std::size_t kChannels = 3;  // pupil, grid_x, grid_y

/// Average samples into fixed-width windows; empty interior bins carry the
/// previous value, leading empty bins back-fill from the first filled one.
BinnedAgent bin_agent(const std::vector<const RawSample*>& samples, double t0,
                      const IngestConfig& config, IngestDiagnostics& diag) {
    const double bin_ms = config.bin_ms;
    std::size_t nbins = 0;
    for (const auto* s : samples)
        nbins = std::max(nbins, static_cast<std::size_t>((s->timestamp_ms - t0) / bin_ms) + 1);

    std::vector<double> sum_p(nbins, 0.0), sum_x(nbins, 0.0), sum_y(nbins, 0.0);
    std::vector<std::size_t> count(nbins, 0);
    const double max_x = std::nextafter(config.screen.width, 0.0);
    const double max_y = std::nextafter(config.screen.height, 0.0);
    for (const auto* s : samples) {
        const auto k = static_cast<std::size_t>((s->timestamp_ms - t0) / bin_ms);
        if (s->gaze_x < 0.0 || s->gaze_x >= config.screen.width || s->gaze_y < 0.0 ||
            s->gaze_y >= config.screen.height)
            ++diag.offscreen_samples;
        sum_p[k] += s->pupil;
        sum_x[k] += std::clamp(s->gaze_x, 0.0, max_x);
        sum_y[k] += std::clamp(s->gaze_y, 0.0, max_y);
        ++count[k];
    }

    BinnedAgent out;
    out.pupil.resize(nbins);
    out.gx.resize(nbins);
    out.gy.resize(nbins);
    std::ptrdiff_t last_filled = -1;
    for (std::size_t k = 0; k < nbins; ++k) {
        if (count[k] > 0) {
            out.pupil[k] = sum_p[k] / static_cast<double>(count[k]);
            out.gx[k] = sum_x[k] / static_cast<double>(count[k]);
            out.gy[k] = sum_y[k] / static_cast<double>(count[k]);
            if (last_filled + 1 < static_cast<std::ptrdiff_t>(k)) {
                // back-fill any leading gap, carry-forward interior gaps
                for (std::size_t g = static_cast<std::size_t>(last_filled + 1); g < k; ++g) {
                    const std::size_t src = last_filled >= 0 ? static_cast<std::size_t>(last_filled) : k;
                    out.pupil[g] = out.pupil[src];
                    out.gx[g] = out.gx[src];
                    out.gy[g] = out.gy[src];
                    ++diag.empty_bins_filled;
                }
            }
            last_filled = static_cast<std::ptrdiff_t>(k);
        }
    }
    return out;
}

double grid_index(double pos, double extent, int cells) {
    const double clamped = std::clamp(pos, 0.0, std::nextafter(extent, 0.0));
    const int idx = static_cast<int>(clamped / (extent / cells));
    return static_cast<double>(std::clamp(idx, 0, cells - 1) + 1);
}

std::vector<double> zscore_or_throw(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - m) * (v - m);
    var /= static_cast<double>(x.size() - 1);
    if (var <= 0.0) throw DegenerateVarianceError("zero variance channel");
    const double sd = std::sqrt(var);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - m) / sd;
    return out;
}

}  // namespace

std::vector<RawSample> read_raw_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty raw file: " + path.string());
    if (line != "pair,task,trial,agent,timestamp_ms,pupil,gaze_x,gaze_y")
        throw ConfigError("unexpected raw header in " + path.string());

    std::vector<RawSample> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        RawSample s;
        std::string tok;
        std::getline(ss, s.pair, ',');
        std::getline(ss, s.task, ',');
        std::getline(ss, tok, ',');
        s.trial = std::stoi(tok);
        std::getline(ss, tok, ',');
        s.agent = std::stoi(tok);
        std::getline(ss, tok, ',');
        s.timestamp_ms = std::stod(tok);
        std::getline(ss, tok, ',');
        s.pupil = std::stod(tok);
        std::getline(ss, tok, ',');
        s.gaze_x = std::stod(tok);
        std::getline(ss, tok, ',');
        s.gaze_y = std::stod(tok);
        out.push_back(std::move(s));
    }
    return out;
}

IngestResult ingest_human(const std::vector<RawSample>& raw, const IngestConfig& config) {
    IngestResult result;
    auto& diag = result.diagnostics;

    // (pair, task) -> trial -> agent -> samples
    std::map<std::pair<std::string, std::string>,
             std::map<int, std::map<int, std::vector<const RawSample*>>>>
        grouped;
    for (const auto& s : raw) grouped[{s.pair, s.task}][s.trial][s.agent].push_back(&s);

    for (auto& [key, trials] : grouped) {
        BehaviorSeries series;
        series.agent_labels = {"agent1", "agent2"};
        series.channel_labels = {"pupil", "grid_x", "grid_y"};

        for (auto& [trial_idx, agents] : trials) {
            const auto tag = key.first + "/" + key.second + "/trial" + std::to_string(trial_idx);
            if (agents.size() != 2 || agents.count(1) == 0 || agents.count(2) == 0 ||
                agents[1].empty() || agents[2].empty()) {
                ++diag.rejected_trials;
                diag.messages.push_back(tag + ": missing agent data");
                continue;
            }

            double t0 = agents[1].front()->timestamp_ms;
            for (int a : {1, 2})
                for (const auto* s : agents[a]) t0 = std::min(t0, s->timestamp_ms);

            BinnedAgent b1 = bin_agent(agents[1], t0, config, diag);
            BinnedAgent b2 = bin_agent(agents[2], t0, config, diag);

            const std::size_t T = std::min(b1.pupil.size(), b2.pupil.size());
            if (T < 2) {
                ++diag.rejected_trials;
                diag.messages.push_back(tag + ": too few frames");
                continue;
            }

            // grid the binned gaze averages, then z-score per agent per channel
            std::vector<std::vector<double>> channels[2];
            for (int a = 0; a < 2; ++a) {
                BinnedAgent& b = a == 0 ? b1 : b2;
                std::vector<double> gx(T), gy(T), pupil(b.pupil.begin(), b.pupil.begin() + static_cast<std::ptrdiff_t>(T));
                for (std::size_t t = 0; t < T; ++t) {
                    gx[t] = grid_index(b.gx[t], config.screen.width, config.screen.grid_x);
                    gy[t] = grid_index(b.gy[t], config.screen.height, config.screen.grid_y);
                }
                channels[a] = {std::move(pupil), std::move(gx), std::move(gy)};
            }

            std::vector<std::vector<double>> z[2];
            bool ok = true;
            for (int a = 0; a < 2 && ok; ++a)
                for (std::size_t c = 0; c < kChannels && ok; ++c) {
                    try {
                        z[a].push_back(zscore_or_throw(channels[a][c]));
                    } catch (const DegenerateVarianceError&) {
                        ok = false;
                    }
                }
            if (!ok) {
                ++diag.rejected_trials;
                diag.messages.push_back(tag + ": zero-variance channel");
                continue;
            }

            series.trial_starts.push_back(series.frames.size());
            for (std::size_t t = 0; t < T; ++t) {
                BehaviorFrame f(2, static_cast<Eigen::Index>(kChannels));
                for (int a = 0; a < 2; ++a)
                    for (std::size_t c = 0; c < kChannels; ++c)
                        f(a, static_cast<Eigen::Index>(c)) = z[a][c][t];
                series.frames.push_back(std::move(f));
            }
        }

        if (series.frames.size() >= 2) {
            result.series.emplace(key, std::move(series));
        } else {
            diag.messages.push_back(key.first + "/" + key.second + ": no usable trials");
        }
    }
    return result;
}

}  // namespace ctxmat
