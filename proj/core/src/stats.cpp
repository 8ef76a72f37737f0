#include "matef/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "matef/errors.hpp"
#include "matef/util.hpp"

namespace matef::stats {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }
double normal_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }
double normal_two_sided_p(double z) { return clamp01(std::erfc(std::fabs(z) / kSqrt2)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw AnalysisError("normal_quantile: p must lie strictly inside (0,1)");

    // Acklam's rational approximation.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double rr = q * q;
        x = (((((a[0] * rr + a[1]) * rr + a[2]) * rr + a[3]) * rr + a[4]) * rr + a[5]) * q /
            (((((b[0] * rr + b[1]) * rr + b[2]) * rr + b[3]) * rr + b[4]) * rr + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley step against the true CDF tightens to near machine precision.
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

double quantile_type7(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw AnalysisError("quantile of empty sample");
    if (sorted.size() == 1) return sorted[0];
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - std::floor(h);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

PairedErrors join_by_hash(std::span<const DatasetRow> ds_a, std::span<const DatasetRow> ds_b) {
    std::map<std::string, const DatasetRow*> index;
    for (const auto& row : ds_b) index[row.md5] = &row;

    PairedErrors out;
    for (const auto& row : ds_a) {
        const auto it = index.find(row.md5);
        if (it == index.end()) continue;
        PairedErrors::Row pair;
        pair.md5 = row.md5;
        pair.err_a = std::fabs(static_cast<double>(row.expected - row.observed));
        pair.err_b =
            std::fabs(static_cast<double>(it->second->expected - it->second->observed));
        out.rows.push_back(std::move(pair));
    }
    std::sort(out.rows.begin(), out.rows.end(),
              [](const auto& a, const auto& b) { return a.md5 < b.md5; });
    return out;
}

std::string to_string(OutlierMethod m) {
    return m == OutlierMethod::tukey_1_5_iqr ? "tukey_1_5_iqr" : "none";
}

std::optional<OutlierMethod> outlier_method_from(std::string_view name) {
    const std::string lower = to_lower(name);
    if (lower == "tukey_1_5_iqr" || lower == "tukey") return OutlierMethod::tukey_1_5_iqr;
    if (lower == "none") return OutlierMethod::none;
    return std::nullopt;
}

PairedErrors remove_outliers(const PairedErrors& pairs, OutlierMethod method) {
    if (method == OutlierMethod::none || pairs.rows.empty()) return pairs;

    auto fences = [&](auto getter) -> std::pair<double, double> {
        std::vector<double> values;
        values.reserve(pairs.rows.size());
        for (const auto& row : pairs.rows) values.push_back(getter(row));
        std::sort(values.begin(), values.end());
        const double q1 = quantile_type7(values, 0.25);
        const double q3 = quantile_type7(values, 0.75);
        const double iqr = q3 - q1;
        return {q1 - 1.5 * iqr, q3 + 1.5 * iqr};
    };
    const auto [lo_a, hi_a] = fences([](const auto& r) { return r.err_a; });
    const auto [lo_b, hi_b] = fences([](const auto& r) { return r.err_b; });

    PairedErrors out;
    for (const auto& row : pairs.rows) {
        const bool out_a = row.err_a < lo_a || row.err_a > hi_a;
        const bool out_b = row.err_b < lo_b || row.err_b > hi_b;
        if (!out_a && !out_b) out.rows.push_back(row);
    }
    return out;
}

// --- Lilliefors ---------------------------------------------------------------

NormalityResult ks_normality(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 4) throw AnalysisError("ks_normality: need n >= 4, got " + std::to_string(n));

    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) throw AnalysisError("ks_normality: degenerate sample (zero variance)");

    double d_stat = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = normal_cdf((x[i] - mean) / sd);
        const double upper = static_cast<double>(i + 1) / static_cast<double>(n) - z;
        const double lower = z - static_cast<double>(i) / static_cast<double>(n);
        d_stat = std::max({d_stat, upper, lower});
    }

    // Dallal & Wilkinson (1986), accurate in the rejection region; for
    // p > 0.1 switch to the Stephens-modified polynomial table.
    const double nd = static_cast<double>(n);
    double kd = d_stat;
    double nda = nd;
    if (n > 100) {
        kd = d_stat * std::pow(nd / 100.0, 0.49);
        nda = 100.0;
    }
    double p = std::exp(-7.01256 * kd * kd * (nda + 2.78019) +
                        2.99587 * kd * std::sqrt(nda + 2.78019) - 0.122119 +
                        0.974598 / std::sqrt(nda) + 1.67997 / nda);
    if (p > 0.1) {
        const double kk = (std::sqrt(nd) - 0.01 + 0.85 / std::sqrt(nd)) * d_stat;
        if (kk <= 0.302) {
            p = 1.0;
        } else if (kk <= 0.5) {
            p = 2.76773 - 19.828315 * kk + 80.709644 * kk * kk - 138.55152 * kk * kk * kk +
                81.218052 * kk * kk * kk * kk;
        } else if (kk <= 0.9) {
            p = -4.901232 + 40.662806 * kk - 97.490286 * kk * kk + 94.029866 * kk * kk * kk -
                32.355711 * kk * kk * kk * kk;
        } else if (kk <= 1.31) {
            p = 6.198765 - 19.558097 * kk + 23.186922 * kk * kk - 12.234627 * kk * kk * kk +
                2.423045 * kk * kk * kk * kk;
        } else {
            p = 0.0;
        }
    }

    NormalityResult result;
    result.method = NormalityResult::Method::kolmogorov_smirnov;
    result.statistic = d_stat;
    result.p = clamp01(p);
    result.n = n;
    return result;
}

// --- Shapiro-Wilk (Royston 1995, AS R94 scheme) ----------------------------------

NormalityResult shapiro_wilk(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 3 || n > 5000)
        throw AnalysisError("shapiro_wilk: need 3 <= n <= 5000, got " + std::to_string(n));

    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    if (x.front() == x.back())
        throw AnalysisError("shapiro_wilk: degenerate sample (zero range)");

    const double nd = static_cast<double>(n);
    std::vector<double> m(n);
    double ssumm2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (nd + 0.25));
        ssumm2 += m[i] * m[i];
    }

    std::vector<double> a(n);
    if (n == 3) {
        a[0] = -std::sqrt(0.5);
        a[1] = 0.0;
        a[2] = std::sqrt(0.5);
    } else {
        const double rsn = 1.0 / std::sqrt(nd);
        const double c_n = m[n - 1] / std::sqrt(ssumm2);
        const double c_n1 = m[n - 2] / std::sqrt(ssumm2);
        const double a_n = -2.706056 * std::pow(rsn, 5) + 4.434685 * std::pow(rsn, 4) -
                           2.071190 * std::pow(rsn, 3) - 0.147981 * rsn * rsn + 0.221157 * rsn +
                           c_n;
        double phi;
        std::size_t i1;
        if (n > 5) {
            const double a_n1 = -3.582633 * std::pow(rsn, 5) + 5.682633 * std::pow(rsn, 4) -
                                1.752461 * std::pow(rsn, 3) - 0.293762 * rsn * rsn +
                                0.042981 * rsn + c_n1;
            phi = (ssumm2 - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
                  (1.0 - 2.0 * a_n * a_n - 2.0 * a_n1 * a_n1);
            a[n - 1] = a_n;
            a[n - 2] = a_n1;
            a[0] = -a_n;
            a[1] = -a_n1;
            i1 = 2;
        } else {
            phi = (ssumm2 - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * a_n * a_n);
            a[n - 1] = a_n;
            a[0] = -a_n;
            i1 = 1;
        }
        const double sqrt_phi = std::sqrt(phi);
        for (std::size_t i = i1; i < n - i1; ++i) a[i] = m[i] / sqrt_phi;
    }

    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / nd;
    double sse = 0, num = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sse += (x[i] - mean) * (x[i] - mean);
        num += a[i] * x[i];
    }
    double w = num * num / sse;
    if (w > 1.0) w = 1.0;

    double p;
    if (n == 3) {
        constexpr double pi6 = 6.0 / M_PI;
        constexpr double stqr = 1.047197551196598;  // asin(sqrt(3/4))
        p = pi6 * (std::asin(std::sqrt(w)) - stqr);
        p = clamp01(p);
    } else if (n <= 11) {
        const double g = -2.273 + 0.459 * nd;
        const double mu = 0.5440 - 0.39978 * nd + 0.025054 * nd * nd - 0.0006714 * nd * nd * nd;
        const double sigma =
            std::exp(1.3822 - 0.77857 * nd + 0.062767 * nd * nd - 0.0020322 * nd * nd * nd);
        const double arg = g - std::log(1.0 - w);
        if (arg <= 0) {
            p = 0.0;  // w at the top of its range
        } else {
            const double z = (-std::log(arg) - mu) / sigma;
            p = clamp01(normal_sf(z));
        }
    } else {
        const double ln_n = std::log(nd);
        const double mu = 0.0038915 * ln_n * ln_n * ln_n - 0.083751 * ln_n * ln_n -
                          0.31082 * ln_n - 1.5861;
        const double sigma = std::exp(0.0030302 * ln_n * ln_n - 0.082676 * ln_n - 0.4803);
        const double z = (std::log(1.0 - w) - mu) / sigma;
        p = clamp01(normal_sf(z));
    }

    NormalityResult result;
    result.method = NormalityResult::Method::shapiro_wilk;
    result.statistic = w;
    result.p = p;
    result.n = n;
    return result;
}

// --- Wilcoxon -------------------------------------------------------------------

namespace {

struct RankedDifferences {
    std::vector<double> diffs;   // non-zero differences
    std::vector<double> ranks;   // rank of |diff| (average ranks for ties)
    std::size_t n_zero = 0;
    double t_plus = 0;
    double tie_correction = 0;   // sum over tie groups of (t^3 - t)
};

RankedDifferences rank_differences(const PairedErrors& pairs, ZeroPolicy zeros) {
    std::vector<double> all;
    all.reserve(pairs.rows.size());
    for (const auto& row : pairs.rows) all.push_back(row.err_a - row.err_b);

    RankedDifferences out;
    std::vector<double> mags;
    if (zeros == ZeroPolicy::drop) {
        for (double d : all) {
            if (d == 0.0) {
                ++out.n_zero;
                continue;
            }
            out.diffs.push_back(d);
        }
        for (double d : out.diffs) mags.push_back(std::fabs(d));
    } else {
        // Pratt: zeros participate in the ranking, their ranks are discarded.
        for (double d : all) {
            if (d == 0.0) ++out.n_zero;
            out.diffs.push_back(d);
        }
        for (double d : out.diffs) mags.push_back(std::fabs(d));
    }

    const std::size_t n = mags.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return mags[a] < mags[b]; });

    out.ranks.assign(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && mags[order[j + 1]] == mags[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        const auto tie = static_cast<double>(j - i + 1);
        const bool zero_group = mags[order[i]] == 0.0;
        if (tie > 1 && !zero_group) out.tie_correction += tie * tie * tie - tie;
        for (std::size_t k = i; k <= j; ++k) out.ranks[order[k]] = avg_rank;
        i = j + 1;
    }

    for (std::size_t k = 0; k < n; ++k)
        if (out.diffs[k] > 0) out.t_plus += out.ranks[k];
    return out;
}

/// Exact two-sided p over the sign-assignment null distribution, computed by
/// a generating-function pass over the doubled (hence integral) ranks.
double exact_two_sided_p(const std::vector<double>& ranks, const std::vector<double>& diffs,
                         double t_plus) {
    std::vector<std::int64_t> doubled;
    std::int64_t total_doubled = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (diffs[i] == 0.0) continue;  // Pratt zeros carry no sign choice
        const auto r2 = static_cast<std::int64_t>(std::llround(ranks[i] * 2.0));
        doubled.push_back(r2);
        total_doubled += r2;
    }
    const std::size_t n = doubled.size();
    std::vector<std::uint64_t> ways(static_cast<std::size_t>(total_doubled) + 1, 0);
    ways[0] = 1;
    for (const std::int64_t r2 : doubled)
        for (std::int64_t s = total_doubled; s >= r2; --s)
            ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - r2)];

    const auto t2 = static_cast<std::int64_t>(std::llround(t_plus * 2.0));
    std::uint64_t count_le = 0, count_ge = 0;
    for (std::int64_t s = 0; s <= total_doubled; ++s) {
        if (s <= t2) count_le += ways[static_cast<std::size_t>(s)];
        if (s >= t2) count_ge += ways[static_cast<std::size_t>(s)];
    }
    const std::uint64_t total = std::uint64_t{1} << n;
    const std::uint64_t numerator = std::min(2 * std::min(count_le, count_ge), total);
    return static_cast<double>(numerator) / static_cast<double>(total);
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const PairedErrors& pairs, const WilcoxonOptions& opts) {
    if (pairs.rows.empty()) throw AnalysisError("wilcoxon_signed_rank: empty input");

    const RankedDifferences ranked = rank_differences(pairs, opts.zeros);
    const auto n_all = static_cast<double>(ranked.diffs.size());
    const auto n_zero = static_cast<double>(ranked.n_zero);

    WilcoxonResult result;
    result.N = pairs.rows.size();
    result.n_effective = ranked.diffs.size() - (opts.zeros == ZeroPolicy::pratt
                                                    ? ranked.n_zero
                                                    : 0);
    result.T = ranked.t_plus;

    double mean_t, variance;
    if (opts.zeros == ZeroPolicy::drop) {
        mean_t = n_all * (n_all + 1.0) / 4.0;
        variance = n_all * (n_all + 1.0) * (2.0 * n_all + 1.0) / 24.0 -
                   ranked.tie_correction / 48.0;
    } else {
        mean_t = (n_all * (n_all + 1.0) - n_zero * (n_zero + 1.0)) / 4.0;
        variance = (n_all * (n_all + 1.0) * (2.0 * n_all + 1.0) -
                    n_zero * (n_zero + 1.0) * (2.0 * n_zero + 1.0)) /
                       24.0 -
                   ranked.tie_correction / 48.0;
    }
    if (variance < 0) variance = 0;
    result.SE = std::sqrt(variance);

    if (result.SE > 0) {
        double numer = result.T - mean_t;
        if (opts.continuity_correction && numer != 0.0)
            numer -= (numer > 0 ? 0.5 : -0.5);
        result.z = numer / result.SE;
        result.p = normal_two_sided_p(result.z);
        result.r = effect_size(result.z, result.N);
    } else {
        // All differences zero: no distributional change between the sides.
        result.z = kNaN;
        result.p = 1.0;
        result.r = kNaN;
    }

    // The sign-assignment count is held in 64 bits; past ~60 pairs the exact
    // distribution is pointless anyway, so the threshold is capped hard.
    if (result.n_effective <= std::min<std::size_t>(opts.exact_threshold, 60))
        result.exact_p = result.n_effective == 0
                             ? 1.0
                             : exact_two_sided_p(ranked.ranks, ranked.diffs, ranked.t_plus);

    result.decision = decide(result.p, opts.alpha);
    return result;
}

double effect_size(double z, std::size_t N) {
    if (N == 0) throw AnalysisError("effect_size: N must be >= 1");
    return z / std::sqrt(static_cast<double>(N));
}

Decision decide(double p, double alpha) { return p < alpha ? Decision::reject : Decision::retain; }

std::string to_string(Decision d) { return d == Decision::reject ? "reject" : "retain"; }

std::string to_string(Hypothesis h) { return h == Hypothesis::H1 ? "H1" : "H2"; }

// --- pipeline ---------------------------------------------------------------------

namespace {

SideNormality check_normality(const std::vector<double>& errors) {
    SideNormality out;
    try {
        out.ks = ks_normality(errors);
    } catch (const AnalysisError& e) {
        out.note = e.what();
    }
    try {
        out.sw = shapiro_wilk(errors);
    } catch (const AnalysisError& e) {
        if (!out.note.empty()) out.note += "; ";
        out.note += e.what();
    }
    return out;
}

}  // namespace

AnalysisOutcome run_analysis(ArtefactStore& store, const AnalysisSpec& spec) {
    const auto meta_a = store.find_dataset_meta(spec.dataset_a_id);
    const auto meta_b = store.find_dataset_meta(spec.dataset_b_id);
    if (!meta_a || !meta_b) {
        std::string missing;
        if (!meta_a) missing += spec.dataset_a_id;
        if (!meta_b) missing += (missing.empty() ? "" : ", ") + spec.dataset_b_id;
        throw AnalysisError("run_analysis: missing dataset(s): " + missing);
    }
    const auto rows_a = store.dataset_rows(spec.dataset_a_id);
    const auto rows_b = store.dataset_rows(spec.dataset_b_id);

    AnalysisOutcome outcome;
    outcome.spec = spec;

    PairedErrors joined = join_by_hash(rows_a, rows_b);
    outcome.joined_rows = joined.rows.size();
    if (joined.rows.empty())
        throw AnalysisError("run_analysis: empty hash intersection between " + spec.dataset_a_id +
                            " (" + std::to_string(rows_a.size()) + " rows) and " +
                            spec.dataset_b_id + " (" + std::to_string(rows_b.size()) + " rows)");

    const PairedErrors kept = remove_outliers(joined, spec.outlier_method);
    outcome.outliers_removed = joined.rows.size() - kept.rows.size();

    std::vector<double> err_a, err_b;
    err_a.reserve(kept.rows.size());
    err_b.reserve(kept.rows.size());
    for (const auto& row : kept.rows) {
        err_a.push_back(row.err_a);
        err_b.push_back(row.err_b);
    }
    outcome.normality_a = check_normality(err_a);
    outcome.normality_b = check_normality(err_b);

    WilcoxonOptions wopts = spec.wilcoxon;
    wopts.alpha = spec.alpha;
    outcome.wilcoxon = wilcoxon_signed_rank(kept, wopts);

    AnalysisResultRow row;
    row.label = spec.label.empty() ? spec.dataset_a_id + " vs " + spec.dataset_b_id : spec.label;
    row.description = spec.description;
    row.hypothesis = to_string(spec.hypothesis);
    row.dataset_a = spec.dataset_a_id;
    row.dataset_b = spec.dataset_b_id;
    row.r = outcome.wilcoxon.r;
    row.z = outcome.wilcoxon.z;
    row.se = outcome.wilcoxon.SE;
    row.t = outcome.wilcoxon.T;
    row.p = outcome.wilcoxon.p;
    row.n = static_cast<std::int64_t>(outcome.wilcoxon.N);
    row.n_effective = static_cast<std::int64_t>(outcome.wilcoxon.n_effective);
    row.decision = to_string(outcome.wilcoxon.decision);
    row.alpha = spec.alpha;
    row.outlier_method = to_string(spec.outlier_method);
    row.created_at = utc_now_iso8601();
    store.insert_analysis_result(row);

    return outcome;
}

}  // namespace matef::stats
