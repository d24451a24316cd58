#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "depemp/empirical.hpp"

namespace depemp {

/// Finite law: (value, probability) atoms.
struct DiscreteRV {
    std::vector<std::pair<double, double>> atoms;

    /// Probabilities must be nonnegative and sum to 1 within 1e-12.
    void validate() const;
    [[nodiscard]] double mean() const;
    /// (E|X|^q)^{1/q} as an exact weighted sum.
    [[nodiscard]] double lq_norm(double q) const;
};

struct IneqReport {
    std::string id;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = true;     ///< lhs <= rhs + 1e-9
    double margin = 0.0;   ///< rhs - lhs
    std::string inputs_digest;
};

IneqReport make_report(std::string id, double lhs, double rhs, std::string inputs_digest);

enum class HardyVariant { sup_zero, int_zero, sup_infty, int_infty };
HardyVariant parse_hardy_variant(const std::string& name);
std::string hardy_variant_name(HardyVariant v);

/// Weighted Hardy bounds with constants 1/gamma (sup) and 4/gamma^2 (integral).
/// The zero variants need H(0) = 0; the infinity variants need H to vanish
/// in both tails. Violations throw ContractError.
IneqReport check_hardy(const TestFunction& H, double gamma, HardyVariant variant);

/// Innovations eps_i iid on at most 4 atoms; h(theta, F_i) depends on the
/// window (eps_{i-w}, ..., eps_i), w <= 2, and on theta through a finite grid.
struct WindowModel {
    DiscreteRV innovation;
    int window = 2;
    std::vector<double> theta_weights;   ///< m(d theta) on the grid; zero weight drops a point from A
    std::vector<std::vector<double>> h;  ///< h[g][state], state in base k with eps_{i-w} the leading digit
};

/// Both sides by exact enumeration; n <= 8 and k^{n+w} <= 4^10.
IneqReport check_intsum_exact(const WindowModel& model, std::size_t n);

/// D_i = diff(i, xi_1..xi_i) for independent xi_i with finite laws.
struct MartingaleTree {
    std::vector<DiscreteRV> steps;
    std::function<double(std::size_t, std::span<const double>)> diff;
};

/// Exact Burkholder-type bound with constant 18 q^{3/2} (q-1)^{-1/2}, both sides
/// raised to min(q, 2). n <= 10 and at most 3 atoms per step. Throws
/// ContractError when a conditional mean of D_i is not zero.
IneqReport check_burkholder_exact(const MartingaleTree& tree, double q);

/// Finite joint law of (Z_1, ..., Z_{2^d}): scenario s has probability probs[s]
/// and increments paths[s]. Any dependence is allowed.
struct JointLaw {
    std::vector<double> probs;
    std::vector<std::vector<double>> paths;
};

/// Dyadic maximal inequality for max_i |S_i|.
IneqReport check_maximal_exact(const JointLaw& law, double q);

/// |int_v^u (1+|y|)^{lambda-1} dy| <= 2^{1-lambda} |u-v|^lambda / lambda, 0 < lambda <= 1.
IneqReport check_archineq(double u, double v, double lambda);

struct SweepSummary {
    std::string suite;
    std::size_t trials = 0;
    std::size_t failures = 0;
    double min_margin = 0.0;
    /// Largest relative disagreement between the original and a shuffled
    /// atom order (enumeration suites only; 0 otherwise).
    double max_shuffle_diff = 0.0;
    std::vector<IneqReport> reports;

    [[nodiscard]] bool pass() const { return failures == 0 && max_shuffle_diff <= 1e-12; }
};

/// Suites: hardy, intsum, burkholder, maximal, archineq.
SweepSummary run_sweep(const std::string& suite, std::size_t trials, std::uint64_t seed, unsigned threads = 0);
const std::vector<std::string>& sweep_suites();

/// lhs/rhs of the sup_zero bound for H(x) = int_0^{min(x,T)} (1+t)^{(gamma-1)/2} dt
/// on x >= 0 and H = 0 on x < 0. The limit of the ratio as T grows is
/// 4 gamma / (gamma+1)^2.
std::vector<double> hardy_sharpness_probe(double gamma, const std::vector<double>& T_values);

/// Largest observed ratio sup[H^2 (1+|x|)^gamma] / (int H^2 w_{gamma-mu} + int H'^2 w_{gamma+mu})
/// over random Gaussian bumps; an empirical lower estimate of the best constant.
double estimate_sup_constant(double gamma, double mu, std::size_t trials, std::uint64_t seed);

/// JSON array of {id, lhs, rhs, holds, margin, inputs_digest}.
void write_reports_json(const std::vector<IneqReport>& reports, std::ostream& os);

}  // namespace depemp
