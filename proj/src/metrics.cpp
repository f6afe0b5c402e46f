#include "ctxmat/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace ctxmat {

namespace {

double mean_of(const Series& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_variance(const Series& x) {
    if (x.size() < 2) throw TooShortError("variance needs at least 2 points");
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

Series diff(const Series& x) {
    Series d(x.size() - 1);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
    return d;
}

double range_of(const Series& x) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return *hi - *lo;
}

void require_length(const Series& x, std::size_t n, const char* what) {
    if (x.size() < n) throw TooShortError(std::string(what) + ": series too short");
}

/// Autocorrelation at lag k with the standard single-mean estimator.
double acf(const Series& x, std::size_t k) {
    const double m = mean_of(x);
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) den += (x[t] - m) * (x[t] - m);
    for (std::size_t t = 0; t + k < x.size(); ++t) num += (x[t] - m) * (x[t + k] - m);
    if (den == 0.0) throw DegenerateVarianceError("acf: zero variance");
    return num / den;
}

}  // namespace

Series zscore(const Series& x) {
    if (x.size() < 2) throw TooShortError("zscore needs at least 2 points");
    const double m = mean_of(x);
    const double sd = std::sqrt(sample_variance(x));
    if (sd <= 0.0 || !std::isfinite(sd))
        throw DegenerateVarianceError("zscore: zero or non-finite variance");
    Series out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - m) / sd;
    return out;
}

double correlation(const Series& a, const Series& b) {
    if (a.size() != b.size()) throw DimensionError("correlation: length mismatch");
    if (a.size() < 2) throw TooShortError("correlation needs at least 2 points");
    const double ma = mean_of(a), mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) throw DegenerateVarianceError("correlation: zero variance");
    return sab / std::sqrt(saa * sbb);
}

CrqaMetrics crqa(const Series& x, const Series& y, const CrqaConfig& config) {
    if (config.embed_dim < 1 || config.delay < 1 || config.radius <= 0.0 || config.l_min < 2)
        throw ConfigError("crqa: invalid configuration");
    const std::size_t span = static_cast<std::size_t>((config.embed_dim - 1) * config.delay);
    if (x.size() <= span || y.size() <= span)
        throw TooShortError("crqa: series shorter than the embedding span");

    const Series zx = zscore(x);
    const Series zy = zscore(y);
    const std::size_t Lx = zx.size() - span;
    const std::size_t Ly = zy.size() - span;
    const int m = config.embed_dim;
    const int tau = config.delay;
    const double r2 = config.radius * config.radius;

    auto recurrent = [&](std::size_t i, std::size_t j) {
        double d2 = 0.0;
        for (int k = 0; k < m; ++k) {
            const double d = zx[i + static_cast<std::size_t>(k * tau)] -
                             zy[j + static_cast<std::size_t>(k * tau)];
            d2 += d * d;
        }
        return d2 <= r2;
    };

    std::size_t recurrent_points = 0;
    std::size_t points_on_lines = 0;
    int maxl = 0;
    std::map<int, std::size_t> line_hist;  // length (>= l_min) -> count

    auto close_run = [&](int run) {
        if (run == 0) return;
        maxl = std::max(maxl, run);
        if (run >= config.l_min) {
            points_on_lines += static_cast<std::size_t>(run);
            ++line_hist[run];
        }
    };

    // walk every diagonal of the (Lx x Ly) cross-recurrence plot
    for (std::ptrdiff_t d = -(static_cast<std::ptrdiff_t>(Lx) - 1);
         d < static_cast<std::ptrdiff_t>(Ly); ++d) {
        const std::size_t i0 = d < 0 ? static_cast<std::size_t>(-d) : 0;
        const std::size_t j0 = d > 0 ? static_cast<std::size_t>(d) : 0;
        int run = 0;
        for (std::size_t i = i0, j = j0; i < Lx && j < Ly; ++i, ++j) {
            if (recurrent(i, j)) {
                ++recurrent_points;
                ++run;
            } else {
                close_run(run);
                run = 0;
            }
        }
        close_run(run);
    }

    CrqaMetrics out;
    out.rr = static_cast<double>(recurrent_points) / (static_cast<double>(Lx) * static_cast<double>(Ly));
    out.det = recurrent_points == 0
                  ? 0.0
                  : static_cast<double>(points_on_lines) / static_cast<double>(recurrent_points);
    out.maxl = maxl;

    std::size_t total_lines = 0;
    for (const auto& [len, cnt] : line_hist) total_lines += cnt;
    double ent = 0.0;
    for (const auto& [len, cnt] : line_hist) {
        const double p = static_cast<double>(cnt) / static_cast<double>(total_lines);
        ent -= p * std::log(p);
    }
    out.ent = ent;
    return out;
}

namespace {

struct VarFit {
    double rss_x = 0.0;   // residual sum of squares, x-equation
    double rss_y = 0.0;
    double bic = 0.0;
    bool ok = false;
};

/// OLS fit of the bivariate VAR(p) with intercept; optionally restricted to
/// a single source's lags per equation.
VarFit fit_var(const Series& x, const Series& y, int p, bool include_x_lags,
               bool include_y_lags) {
    const std::size_t T = x.size();
    const std::size_t n_eff = T - static_cast<std::size_t>(p);
    const int lag_cols = (include_x_lags ? p : 0) + (include_y_lags ? p : 0);
    const int cols = 1 + lag_cols;

    Eigen::MatrixXd X(static_cast<Eigen::Index>(n_eff), cols);
    Eigen::MatrixXd Y(static_cast<Eigen::Index>(n_eff), 2);
    for (std::size_t r = 0; r < n_eff; ++r) {
        const std::size_t t = r + static_cast<std::size_t>(p);
        Eigen::Index c = 0;
        X(static_cast<Eigen::Index>(r), c++) = 1.0;
        if (include_x_lags)
            for (int l = 1; l <= p; ++l)
                X(static_cast<Eigen::Index>(r), c++) = x[t - static_cast<std::size_t>(l)];
        if (include_y_lags)
            for (int l = 1; l <= p; ++l)
                X(static_cast<Eigen::Index>(r), c++) = y[t - static_cast<std::size_t>(l)];
        Y(static_cast<Eigen::Index>(r), 0) = x[t];
        Y(static_cast<Eigen::Index>(r), 1) = y[t];
    }

    const Eigen::MatrixXd beta = X.colPivHouseholderQr().solve(Y);
    const Eigen::MatrixXd resid = Y - X * beta;
    VarFit fit;
    fit.rss_x = resid.col(0).squaredNorm();
    fit.rss_y = resid.col(1).squaredNorm();

    const double n = static_cast<double>(n_eff);
    const Eigen::Matrix2d sigma = resid.transpose() * resid / n;
    const double det = sigma.determinant();
    const double k_params = 2.0 * static_cast<double>(cols);
    fit.bic = std::log(det) + k_params * std::log(n) / n;
    fit.ok = std::isfinite(fit.bic) && fit.rss_x > 0.0 && fit.rss_y > 0.0;
    return fit;
}

std::optional<GcResult> granger_once(const Series& zx, const Series& zy) {
    constexpr int kMaxLag = 12;
    int best_lag = 0;
    double best_bic = std::numeric_limits<double>::infinity();
    for (int p = 1; p <= kMaxLag; ++p) {
        const VarFit fit = fit_var(zx, zy, p, true, true);
        if (fit.ok && fit.bic < best_bic) {
            best_bic = fit.bic;
            best_lag = p;
        }
    }
    if (best_lag == 0) return std::nullopt;

    const int p = best_lag;
    const double n = static_cast<double>(zx.size() - static_cast<std::size_t>(p));
    const VarFit full = fit_var(zx, zy, p, true, true);
    const VarFit no_x = fit_var(zx, zy, p, false, true);  // y explained by y only
    const VarFit no_y = fit_var(zx, zy, p, true, false);  // x explained by x only

    GcResult out;
    out.lag = p;
    out.gc_1to2 = n * (std::log(no_x.rss_y) - std::log(full.rss_y));
    out.gc_2to1 = n * (std::log(no_y.rss_x) - std::log(full.rss_x));
    if (!std::isfinite(out.gc_1to2) || !std::isfinite(out.gc_2to1)) return std::nullopt;
    // LR statistics are non-negative up to numerical noise
    out.gc_1to2 = std::max(0.0, out.gc_1to2);
    out.gc_2to1 = std::max(0.0, out.gc_2to1);
    return out;
}

}  // namespace

GcResult granger(const Series& x, const Series& y) {
    if (x.size() != y.size()) throw DimensionError("granger: length mismatch");
    // need 12*2 + 10 observations after trimming the longest lag
    if (x.size() < 12 + 34) throw TooShortError("granger: series too short");

    auto attempt = [](const Series& a, const Series& b) {
        return granger_once(zscore(a), zscore(b));
    };

    if (auto res = attempt(x, y)) return *res;
    // unstable statistics: retry on first differences
    if (auto res = attempt(diff(x), diff(y))) {
        res->used_first_differences = true;
        return *res;
    }
    throw SingularityError("granger: singular system even on first differences");
}

double gc_strength(const std::vector<GcResult>& channels) {
    if (channels.empty()) throw EmptyInputError("gc_strength: no channels");
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& c : channels) {
        const double den = c.gc_1to2 + c.gc_2to1;
        if (den <= 0.0 || !std::isfinite(den)) continue;  // skipped with diagnostic upstream
        sum += std::abs(c.gc_1to2 - c.gc_2to1) / den;
        ++used;
    }
    if (used == 0) throw UndefinedFeatureError("gc_strength: all channels skipped");
    return sum / static_cast<double>(used);
}

namespace {

/// Magnitudes of the DFT of the mean-removed series, bins 1..N/2.
std::vector<double> half_spectrum(const Series& x) {
    const std::size_t N = x.size();
    const double m = mean_of(x);
    std::vector<double> mags;
    mags.reserve(N / 2);
    for (std::size_t k = 1; k <= N / 2; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t t = 0; t < N; ++t) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                               static_cast<double>(t) / static_cast<double>(N);
            re += (x[t] - m) * std::cos(ang);
            im += (x[t] - m) * std::sin(ang);
        }
        mags.push_back(std::sqrt(re * re + im * im));
    }
    return mags;
}

double hjorth_mobility(const Series& x) {
    const double vx = sample_variance(x);
    if (vx <= 0.0) throw DegenerateVarianceError("hjorth_mobility: zero variance");
    return std::sqrt(sample_variance(diff(x)) / vx);
}

int count_extrema(const Series& x, bool maxima) {
    int c = 0;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (maxima ? (x[i] > x[i - 1] && x[i] > x[i + 1])
                   : (x[i] < x[i - 1] && x[i] < x[i + 1]))
            ++c;
    }
    return c;
}

}  // namespace

double standalone_metric(const Series& x, const std::string& name, const Series* aux) {
    require_length(x, 3, "standalone_metric");

    if (name == "variance") return sample_variance(x);
    if (name == "hjorth_mobility") return hjorth_mobility(x);
    if (name == "hjorth_complexity") {
        require_length(x, 4, "hjorth_complexity");
        return hjorth_mobility(diff(x)) / hjorth_mobility(x);
    }
    if (name == "smoothness") {
        const Series d = diff(x);
        double s = 0.0;
        for (double v : d) s += std::abs(v);
        return s / static_cast<double>(d.size());
    }
    if (name == "weighted_smoothness") {
        if (aux == nullptr)
            throw ConfigError("weighted_smoothness needs the observed series");
        const double v = sample_variance(*aux);
        if (v <= 0.0) throw DegenerateVarianceError("weighted_smoothness: zero observed variance");
        double s = 0.0;
        for (double d : diff(x)) s += std::abs(d);
        return s / v;
    }
    if (name == "dominant_frequency") {
        const auto mags = half_spectrum(x);
        std::size_t best = 0;
        for (std::size_t k = 1; k < mags.size(); ++k)
            if (mags[k] > mags[best]) best = k;
        return static_cast<double>(best + 1) / static_cast<double>(x.size());  // cycles/sample
    }
    if (name == "spectral_entropy") {
        const auto mags = half_spectrum(x);
        double total = 0.0;
        for (double v : mags) total += v * v;
        if (total <= 0.0) throw DegenerateVarianceError("spectral_entropy: flat spectrum");
        double ent = 0.0;
        for (double v : mags) {
            const double p = v * v / total;
            if (p > 0.0) ent -= p * std::log(p);
        }
        return ent;
    }
    if (name == "autocorrelation") {
        Series head(x.begin(), x.end() - 1);
        Series tail(x.begin() + 1, x.end());
        return correlation(head, tail);
    }
    if (name == "partial_autocorrelation") {
        require_length(x, 4, "partial_autocorrelation");
        const double r1 = acf(x, 1);
        const double r2 = acf(x, 2);
        const double den = 1.0 - r1 * r1;
        if (den == 0.0) throw DegenerateVarianceError("partial_autocorrelation: degenerate lag-1");
        return (r2 - r1 * r1) / den;
    }
    if (name == "trend_strength") {
        // |slope| of the least-squares line against the index
        const std::size_t N = x.size();
        const double tm = (static_cast<double>(N) - 1.0) / 2.0;
        const double xm = mean_of(x);
        double num = 0.0, den = 0.0;
        for (std::size_t t = 0; t < N; ++t) {
            num += (static_cast<double>(t) - tm) * (x[t] - xm);
            den += (static_cast<double>(t) - tm) * (static_cast<double>(t) - tm);
        }
        return std::abs(num / den);
    }
    if (name == "peaks") return static_cast<double>(count_extrema(x, true));
    if (name == "troughs") return static_cast<double>(count_extrema(x, false));

    throw ConfigError("unknown standalone metric: " + name);
}

double paired_metric(const Series& pred, const Series& obs, const std::string& name,
                     const CrqaConfig& crqa_config) {
    if (pred.size() != obs.size()) throw DimensionError("paired_metric: length mismatch");
    require_length(pred, 3, "paired_metric");

    if (name == "correlation") return correlation(pred, obs);
    if (name == "mse") {
        double s = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            s += (pred[i] - obs[i]) * (pred[i] - obs[i]);
        return s / static_cast<double>(pred.size());
    }
    if (name == "r2") {
        const double m = mean_of(obs);
        double ss_res = 0.0, ss_tot = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            ss_res += (obs[i] - pred[i]) * (obs[i] - pred[i]);
            ss_tot += (obs[i] - m) * (obs[i] - m);
        }
        if (ss_tot == 0.0) throw DegenerateVarianceError("r2: constant observed series");
        return 1.0 - ss_res / ss_tot;
    }
    if (name == "norm_sum_derivative_error" || name == "variance_derivative_error") {
        const double range = range_of(obs);
        if (range == 0.0) throw DegenerateVarianceError("derivative error: zero observed range");
        const Series dp = diff(pred);
        const Series dob = diff(obs);
        Series delta(dp.size());
        for (std::size_t i = 0; i < dp.size(); ++i) delta[i] = dp[i] - dob[i];
        if (name == "norm_sum_derivative_error") {
            double s = 0.0;
            for (double v : delta) s += std::abs(v);
            return s / range;
        }
        return sample_variance(delta) / range;
    }
    if (name == "variance_difference")
        return std::abs(sample_variance(pred) - sample_variance(obs));
    if (name == "norm_variance_difference") {
        const double vo = sample_variance(obs);
        if (vo == 0.0) throw DegenerateVarianceError("norm_variance_difference: zero observed variance");
        return std::abs(sample_variance(pred) - vo) / vo;
    }
    if (name == "crqa_rr") return crqa(pred, obs, crqa_config).rr;
    if (name == "crqa_det") return crqa(pred, obs, crqa_config).det;
    if (name == "crqa_ent") return crqa(pred, obs, crqa_config).ent;
    if (name == "crqa_maxl") return static_cast<double>(crqa(pred, obs, crqa_config).maxl);

    throw ConfigError("unknown paired metric: " + name);
}

const std::vector<std::string>& standalone_metric_names() {
    static const std::vector<std::string> names = {
        "variance",           "hjorth_mobility",    "hjorth_complexity",
        "smoothness",         "weighted_smoothness", "dominant_frequency",
        "spectral_entropy",   "autocorrelation",    "partial_autocorrelation",
        "trend_strength",     "peaks",              "troughs"};
    return names;
}

const std::vector<std::string>& paired_metric_names() {
    static const std::vector<std::string> names = {
        "correlation",    "mse",
        "r2",             "norm_sum_derivative_error",
        "variance_derivative_error", "variance_difference",
        "norm_variance_difference",  "crqa_rr",
        "crqa_det",       "crqa_ent",
        "crqa_maxl"};
    return names;
}

}  // namespace ctxmat
