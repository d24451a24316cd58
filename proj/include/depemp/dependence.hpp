#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "depemp/empirical.hpp"
#include "depemp/processes.hpp"
#include "depemp/rng.hpp"

namespace depemp {

/// Which conditional-law field h(theta, y) a dependence coefficient measures.
enum class Field { cdf, pdf, pdf_dtheta };

Field parse_field(const std::string& name);
std::string field_name(Field h);

/// h(theta, y) and its y-derivative for the given field.
double field_value(const ConditionalLaw& law, Field h, double theta);
double field_dy(const ConditionalLaw& law, Field h, double theta);

/// Coupling upper bound for the projection norm at lag j.
struct ProjBound {
    std::size_t j = 0;
    double value = 0.0;  ///< sqrt of the mean integrated squared coupled difference
    double se = 0.0;     ///< delta-method standard error
    double mean_sq = 0.0;
    double mean_sq_se = 0.0;
};

/// int (h(theta, y) - h(theta, y*))^2 m(d theta) by a 2001-node Simpson rule
/// over the union of both conditional supports.
double coupled_sq_distance(const ProcessModel& model, Field h, const WeightedMeasure& m, double y, double y_star);

/// Requires reps >= 1000.
ProjBound proj_bound_estimate(const ProcessModel& model, Field h, const WeightedMeasure& m, std::size_t j,
                              std::size_t reps, const SeedToken& seed, unsigned threads = 0);

struct SigmaEstimate {
    double partial_sum = 0.0;
    double tail_estimate = 0.0;
    bool summable = true;
    std::string tail_model;  ///< "geometric", "power", or "zero"
    double tail_slope = 0.0;  ///< log-rate per lag (geometric) or power exponent
    std::vector<ProjBound> terms;
};

/// Partial sum of the lag-0..J_max coupling bounds from common coupled runs,
/// plus a tail fitted on the last half of the lags. Throws NumericError when
/// the values do not decay.
SigmaEstimate sigma_hm_estimate(const ProcessModel& model, Field h, const WeightedMeasure& m, std::size_t J_max,
                                std::size_t reps, const SeedToken& seed, unsigned threads = 0);

/// H_m(y) = int |d/dy h(theta, y)|^2 m(d theta).
double H_m(const ProcessModel& model, Field h, const WeightedMeasure& m, double y);

/// |int_{y1}^{y2} H_m^{1/2}(y) dy|.
double rho_m_distance(const ProcessModel& model, const WeightedMeasure& m, double y1, double y2, Field h = Field::pdf);

struct GmcFit {
    double r_hat = 0.0;
    double C_hat = 0.0;
    double r_squared = 0.0;
    bool geometric = true;
    std::vector<double> moments;  ///< E|Y_n - Y_n*|^beta for each n in the list
};

/// Least-squares fit of log E|Y_n - Y_n*|^beta on n. For AR-ARCH the
/// contraction gate E[(|alpha| + |eps|)^beta] < 1 is enforced.
GmcFit gmc_rate_fit(const ProcessModel& model, double beta_exp, const std::vector<std::size_t>& n_list,
                    std::size_t reps, const SeedToken& seed, unsigned threads = 0);

struct TailSums {
    double A2 = 0.0;
    double A4 = 0.0;
    double theta = 0.0;
    double Theta = 0.0;
};

/// A_n(k) = sum_{i >= n} |a_i|^k for the untruncated coefficient law:
/// explicit sum up to max(L, n), then a closed form (geometric) or
/// Euler-Maclaurin tail (long memory).
double tail_power_sum(const CoeffSpec& spec, std::size_t n, double k);
TailSums tail_sums(const CoeffSpec& spec, double p, std::size_t n);
/// theta_{k,p} for k = 1..n_max, computed with suffix sums.
std::vector<double> theta_sequence(const CoeffSpec& spec, double p, std::size_t n_max);

struct ConditionCheck {
    double value = 0.0;
    bool satisfied = false;
    std::string diagnostic;
};

/// The integral of E[f^{q/2}(u | F_0)] against w_{gamma - 1 + q/2}, with the
/// truncation doubled until the value is stable to 1%.
ConditionCheck intf_condition(const ProcessModel& model, double q, double gamma);

/// Series condition on the marginal tails. Uses the polynomial blocks
/// [j^alpha, (j+1)^alpha) with alpha = 1 / (1 + delta - eta) when eta - delta < 1,
/// and dyadic blocks when eta - delta = 1.
ConditionCheck gine_zinn_condition(std::span<const double> sample, double eta, double delta);
/// Same with exact block probabilities from the survival function P(|X| >= t).
ConditionCheck gine_zinn_condition(const RealFn& abs_survival, double eta, double delta);

/// CSV with columns lag,estimate,se.
void write_proj_bounds_csv(const std::vector<ProjBound>& rows, std::ostream& os);

}  // namespace depemp
