#pragma once

#include <cstddef>
#include <vector>

#include "depemp/empirical.hpp"
#include "depemp/marginal.hpp"
#include "depemp/processes.hpp"
#include "depemp/rng.hpp"

namespace depemp {

/// Conditional empirical CDF and density, each term conditioned on Y_{i-1}.
struct CondEmp {
    double F = 0.0;
    double f = 0.0;
};
CondEmp cond_emp(const ProcessModel& model, const Path& path, double x);

/// total = martingale + drift, up to `residual`.
/// For decompose_rn: (R_n, G_n, Q_n). For decompose_indexed: (sqrt(n)(P_n - P)g, M_n, N_n).
struct DecompResult {
    double total = 0.0;
    double martingale = 0.0;
    double drift = 0.0;
    double residual = 0.0;
};

DecompResult decompose_rn(const ProcessModel& model, const Path& path, const LawEvaluator& law, double s);

/// M_n uses per-observation conditional means by quadrature over the
/// innovation; N_n integrates g (f~_n - f) over x. The residual compares
/// these two independent routes.
DecompResult decompose_indexed(const ProcessModel& model, const Path& path, const TestFunction& g, double Eg);

/// E[g(X_i) | Y_{i-1} = y].
double conditional_mean(const ProcessModel& model, const TestFunction& g, double y);

struct MartingaleConfig {
    std::size_t n = 1000;
    std::size_t reps = 10000;
    std::vector<double> s_values{-1.0, 0.0, 1.0};
    int max_lag = 5;
    SeedToken seed{};
    /// Negative control: condition X_i on Y_i instead of Y_{i-1}.
    bool misspecified = false;
    double z_crit = 3.0;
    unsigned threads = 0;
};

struct LagCheck {
    int lag = 0;
    double corr = 0.0;
    double se = 0.0;
    bool ok = true;
};

struct MartingalePoint {
    double s = 0.0;
    double mean = 0.0;
    double mean_se = 0.0;
    bool mean_ok = true;
    std::vector<LagCheck> lags;
};

struct MartingaleReport {
    std::vector<MartingalePoint> points;
    bool pass = true;
};

/// Requires reps >= 1000.
MartingaleReport martingale_diagnostic(const ProcessModel& model, const MartingaleConfig& config);

}  // namespace depemp
