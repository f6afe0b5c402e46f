#include "ctxmat/pipeline/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ctxmat::io {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_series_csv(const std::filesystem::path& path, const BehaviorSeries& series) {
    series.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path.string());

    if (!series.trial_starts.empty()) {
        out << "# trial_starts:";
        for (auto s : series.trial_starts) out << ' ' << s;
        out << '\n';
    }
    out << 't';
    for (Eigen::Index a = 0; a < series.agents(); ++a)
        for (Eigen::Index h = 0; h < series.channels(); ++h)
            out << ',' << series.agent_labels[static_cast<std::size_t>(a)] << '.'
                << series.channel_labels[static_cast<std::size_t>(h)];
    out << '\n';
    for (std::size_t t = 0; t < series.length(); ++t) {
        out << t + 1;
        const auto& f = series.frames[t];
        for (Eigen::Index a = 0; a < f.rows(); ++a)
            for (Eigen::Index h = 0; h < f.cols(); ++h) out << ',' << fmt(f(a, h));
        out << '\n';
    }
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(tok);
    return out;
}

}  // namespace

BehaviorSeries read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path.string());

    BehaviorSeries series;
    std::string line;
    // optional comment lines, then the header
    while (std::getline(in, line)) {
        if (line.rfind("# trial_starts:", 0) == 0) {
            std::stringstream ss(line.substr(15));
            std::size_t v;
            while (ss >> v) series.trial_starts.push_back(v);
            continue;
        }
        if (!line.empty() && line[0] == '#') continue;
        break;
    }
    const auto header = split(line, ',');
    if (header.size() < 2 || header[0] != "t")
        throw Error("bad series header in " + path.string());

    // columns are agent.channel; agents vary slowest
    std::vector<std::pair<std::string, std::string>> cols;
    for (std::size_t i = 1; i < header.size(); ++i) {
        const auto dot = header[i].find('.');
        if (dot == std::string::npos) throw Error("bad series column: " + header[i]);
        cols.emplace_back(header[i].substr(0, dot), header[i].substr(dot + 1));
    }
    for (const auto& [a, h] : cols) {
        if (series.agent_labels.empty() || series.agent_labels.back() != a)
            series.agent_labels.push_back(a);
    }
    const std::size_t n_agents = series.agent_labels.size();
    const std::size_t n_channels = cols.size() / n_agents;
    for (std::size_t h = 0; h < n_channels; ++h) series.channel_labels.push_back(cols[h].second);

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto toks = split(line, ',');
        if (toks.size() != cols.size() + 1) throw Error("bad series row in " + path.string());
        BehaviorFrame f(static_cast<Eigen::Index>(n_agents), static_cast<Eigen::Index>(n_channels));
        for (std::size_t c = 0; c < cols.size(); ++c)
            f(static_cast<Eigen::Index>(c / n_channels), static_cast<Eigen::Index>(c % n_channels)) =
                std::stod(toks[c + 1]);
        series.frames.push_back(std::move(f));
    }
    series.validate();
    return series;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    const auto r = rows.size();
    const auto c = rows.at(0).size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows.at(i).at(j);
    return m;
}

}  // namespace

void write_truth_sidecar(const std::filesystem::path& path, const GroundTruthSpec& spec) {
    json j;
    j["schema_version"] = 1;
    j["matrix"] = matrix_to_json(spec.matrix);
    j["noise"] = {{"amplitude", spec.noise.amplitude}, {"seed", spec.noise.seed}};
    j["length"] = spec.length;
    j["params"] = {{"influence_scale", spec.params.influence_scale}, {"decay", spec.params.decay}};
    j["init_seed"] = spec.init_seed;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
}

GroundTruthSpec read_truth_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path.string());
    json j = json::parse(in);
    GroundTruthSpec spec;
    spec.matrix = matrix_from_json(j.at("matrix"));
    spec.noise.amplitude = j.at("noise").at("amplitude");
    spec.noise.seed = j.at("noise").at("seed");
    spec.length = j.at("length");
    spec.params.influence_scale = j.at("params").at("influence_scale");
    spec.params.decay = j.at("params").at("decay");
    spec.init_seed = j.at("init_seed");
    return spec;
}

std::string config_to_json(const FilterConfig& config) {
    json j;
    j["schema_version"] = 1;
    j["particles"] = config.particles;
    j["jitter_std"] = config.jitter_std;
    j["params"] = {{"influence_scale", config.params.influence_scale},
                   {"decay", config.params.decay}};
    j["seed"] = config.seed;
    if (config.sigma_b.size() > 0) j["sigma_b"] = matrix_to_json(config.sigma_b);
    return j.dump();
}

void write_run_csv(const std::filesystem::path& path, const InferenceRun& run) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << "# config: " << config_to_json(run.config) << '\n';
    out << "# underflow_steps: " << run.underflow_steps << '\n';

    const Eigen::Index n = run.map_series.front().rows();
    out << 't';
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) out << ",c" << i + 1 << j + 1;
    for (Eigen::Index a = 0; a < run.predicted.agents(); ++a)
        for (Eigen::Index h = 0; h < run.predicted.channels(); ++h)
            out << ",pred_" << run.predicted.agent_labels[static_cast<std::size_t>(a)] << '.'
                << run.predicted.channel_labels[static_cast<std::size_t>(h)];
    out << ",ess\n";

    for (std::size_t k = 0; k < run.map_series.size(); ++k) {
        out << k + 2;
        const auto& C = run.map_series[k];
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) out << ',' << fmt(C(i, j));
        const auto& f = run.predicted.frames[k + 1];
        for (Eigen::Index a = 0; a < f.rows(); ++a)
            for (Eigen::Index h = 0; h < f.cols(); ++h) out << ',' << fmt(f(a, h));
        out << ',' << fmt(run.ess[k]) << '\n';
    }
}

std::vector<ContextMatrix> read_run_map_series(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path.string());
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') continue;
        header = split(line, ',');
        break;
    }
    // count cNN columns (they follow the t column, column-major)
    std::size_t ncols = 0;
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (header[i].size() >= 2 && header[i][0] == 'c' &&
            std::isdigit(static_cast<unsigned char>(header[i][1])))
            ++ncols;
        else
            break;
    }
    const auto n = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(ncols))));
    if (n < 2 || static_cast<std::size_t>(n * n) != ncols)
        throw Error("bad run file header in " + path.string());

    std::vector<ContextMatrix> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto toks = split(line, ',');
        ContextMatrix C(n, n);
        std::size_t c = 1;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) C(i, j) = std::stod(toks.at(c++));
        out.push_back(std::move(C));
    }
    return out;
}

}  // namespace ctxmat::io
