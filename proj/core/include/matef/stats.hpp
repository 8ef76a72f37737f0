#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "matef/store.hpp"

namespace matef::stats {

// --- distribution helpers ----------------------------------------------------

double normal_cdf(double x);
double normal_sf(double x);
/// Two-sided tail probability of |z| under the standard normal.
double normal_two_sided_p(double z);
/// Inverse standard-normal CDF (Acklam's rational approximation plus one
/// Halley refinement step; ~1e-15 accurate). Throws on p outside (0,1).
double normal_quantile(double p);

/// Linear-interpolation quantile on sorted data (R type 7). p in [0,1].
double quantile_type7(std::span<const double> sorted, double p);

// --- paired errors ------------------------------------------------------------

/// Paired absolute errors for the hash intersection of two datasets.
/// err = |expected - observed| per side. Values are stored as doubles so the
/// machinery also serves continuous calibration data; pipeline-produced
/// errors are integral.
struct PairedErrors {
    struct Row {
        std::string md5;
        double err_a = 0;
        double err_b = 0;
    };
    std::vector<Row> rows;
};

PairedErrors join_by_hash(std::span<const DatasetRow> ds_a, std::span<const DatasetRow> ds_b);

enum class OutlierMethod { tukey_1_5_iqr, none };

std::string to_string(OutlierMethod m);
std::optional<OutlierMethod> outlier_method_from(std::string_view name);

/// Tukey fences (Q1 - 1.5*IQR, Q3 + 1.5*IQR) computed per side; a pair is
/// dropped when either side falls strictly outside its own fences.
PairedErrors remove_outliers(const PairedErrors& pairs, OutlierMethod method);

// --- normality ------------------------------------------------------------------

struct NormalityResult {
    enum class Method { kolmogorov_smirnov, shapiro_wilk };
    Method method = Method::kolmogorov_smirnov;
    double statistic = 0;
    double p = 0;
    std::size_t n = 0;
};

/// Lilliefors variant of Kolmogorov-Smirnov: D against a normal with mean and
/// sd estimated from the sample; p by the Dallal-Wilkinson approximation with
/// the Stephens polynomial table above p = 0.1. Requires n >= 4; throws
/// AnalysisError on short or zero-variance samples.
NormalityResult ks_normality(std::span<const double> sample);

/// Shapiro-Wilk W with Royston's (1995) coefficient and p-value
/// approximations. Requires 3 <= n <= 5000; throws on range or zero variance.
NormalityResult shapiro_wilk(std::span<const double> sample);

// --- Wilcoxon signed rank -----------------------------------------------------------

enum class Decision { reject, retain };

std::string to_string(Decision d);

enum class ZeroPolicy {
    drop,   // zero differences removed before ranking (default)
    pratt,  // zeros ranked, then their ranks discarded
};

struct WilcoxonOptions {
    double alpha = 0.05;
    ZeroPolicy zeros = ZeroPolicy::drop;
    bool continuity_correction = false;
    /// Exact two-sided p computed by full sign-assignment distribution when
    /// n_effective is at or below this bound.
    std::size_t exact_threshold = 12;
};

struct WilcoxonResult {
    std::size_t N = 0;            // paired rows supplied (the table's N)
    std::size_t n_effective = 0;  // non-zero differences
    double T = 0;                 // positive-rank sum
    double SE = 0;
    double z = 0;  // NaN when SE == 0
    double p = 1;  // asymptotic two-sided; exactly 1.0 when SE == 0
    double r = 0;  // z / sqrt(N); NaN when z is undefined
    std::optional<double> exact_p;
    Decision decision = Decision::retain;
};

/// Signed-rank test on d_i = err_a - err_b with average ranks for ties and the
/// tie-corrected normal approximation. Throws AnalysisError on empty input.
WilcoxonResult wilcoxon_signed_rank(const PairedErrors& pairs, const WilcoxonOptions& opts = {});

/// r = z / sqrt(N). NaN propagates.
double effect_size(double z, std::size_t N);

/// reject iff p < alpha (strict).
Decision decide(double p, double alpha);

// --- analysis pipeline -----------------------------------------------------------------

enum class Hypothesis { H1, H2 };

std::string to_string(Hypothesis h);

struct AnalysisSpec {
    Hypothesis hypothesis = Hypothesis::H1;
    std::string dataset_a_id;
    std::string dataset_b_id;
    double alpha = 0.05;
    OutlierMethod outlier_method = OutlierMethod::tukey_1_5_iqr;
    WilcoxonOptions wilcoxon;
    std::string label;        // e.g. "1.1"
    std::string description;  // e.g. "1m vs 10s"
};

/// Normality checks for one error distribution; empty optionals carry a note
/// (degenerate sample, n out of range) instead of failing the pipeline.
struct SideNormality {
    std::optional<NormalityResult> ks;
    std::optional<NormalityResult> sw;
    std::string note;
};

struct AnalysisOutcome {
    AnalysisSpec spec;
    std::size_t joined_rows = 0;
    std::size_t outliers_removed = 0;
    SideNormality normality_a;
    SideNormality normality_b;
    WilcoxonResult wilcoxon;
};

/// Full analysis chain: join by hash, outlier removal, normality checks on
/// both error distributions, Wilcoxon, effect size, decision. Persists a
/// result row and returns the outcome. Throws AnalysisError when datasets are
/// missing or the join is empty.
AnalysisOutcome run_analysis(ArtefactStore& store, const AnalysisSpec& spec);

}  // namespace matef::stats
