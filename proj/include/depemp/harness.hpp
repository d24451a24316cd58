#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "depemp/empirical.hpp"
#include "depemp/processes.hpp"

namespace depemp {

/// Bartlett-kernel estimate of sum_k cov(g(X_0), g(X_k)) from a raw series.
/// bandwidth = 0 selects floor(n^{1/3}). Requires n >= 10 * bandwidth.
double longrun_variance(std::span<const double> series, std::size_t bandwidth = 0);

struct NormalityReport {
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double ks = 0.0;           ///< Kolmogorov distance to N(mean, sd^2)
    double ks_threshold = 0.0; ///< 1.2 * 1.358 / sqrt(count)
    bool degenerate = false;
    bool pass = false;
    std::string message;
};

/// Requires at least 500 samples.
NormalityReport normality_diagnostics(std::span<const double> samples);

struct ExperimentConfig {
    std::string kind;  ///< clt, supbound, modulus, tightness, scaling
    std::shared_ptr<const ProcessModel> model;
    std::vector<TestFunction> functions;
    std::vector<std::size_t> n_values;
    std::size_t reps = 1000;
    std::uint64_t seed = 0;
    double gamma = 1.0;
    double q = 3.0;
    double delta_c = 4.2e-5;             ///< modulus: delta_n = c n^{-1/2} (log n)^{2q/(q-2)}
    std::vector<int> p_values{0, 1};     ///< scaling
    double var_tol = 0.15;               ///< clt: relative variance tolerance
    double slope_tol = 0.15;             ///< modulus: slope tolerance around 1 - 2/q
    double slope_ci_upper = 0.02;        ///< supbound: upper CI limit on the relative slope per log n
    double scaling_tol = 0.1;            ///< scaling: slope tolerance
    std::size_t longrun_length = 1u << 20;
    std::vector<double> levels{0.25, 0.5, 1.0};            ///< tightness
    std::vector<std::size_t> partitions{1, 2, 4, 8, 16};   ///< tightness
    unsigned threads = 0;
    std::string digest;

    /// Throws ConfigError: R >= 100, n values strictly increasing, kind known.
    void validate() const;
};

struct StatRow {
    std::string statistic;
    std::size_t n = 0;
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;
    double q05 = 0.0;
    double q50 = 0.0;
    double q95 = 0.0;
};

struct Verdict {
    std::string name;
    bool asserted = true;  ///< false for recorded-only diagnostics
    bool pass = true;
    std::map<std::string, double> metrics;
    std::string detail;
};

/// One long-form data row: one replication of one statistic.
struct DataRow {
    std::string statistic;
    std::size_t n = 0;
    std::size_t rep = 0;
    double value = 0.0;
};

struct ExperimentSummary {
    std::string kind;
    std::string model;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::vector<StatRow> rows;
    std::vector<Verdict> verdicts;
    std::vector<DataRow> data;

    /// All asserted verdicts pass.
    [[nodiscard]] bool pass() const;
};

ExperimentSummary run_experiment(const ExperimentConfig& config);

/// delta_n = c n^{-1/2} (log n)^{2q/(q-2)}.
double modulus_delta(std::size_t n, double q, double c);

/// Slope of log Var(S_n) for the long-memory scaling experiment:
/// 2 - (p+1)(2 beta - 1) below the threshold, 1 above it.
double scaling_target_slope(int p, double beta);

void write_summary_json(const ExperimentSummary& summary, std::ostream& os);
/// Columns statistic,n,rep,value.
void write_long_csv(const ExperimentSummary& summary, std::ostream& os);

}  // namespace depemp
