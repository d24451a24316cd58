#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "depemp/innovations.hpp"
#include "depemp/rng.hpp"

namespace depemp {

/// Coefficients a_0..a_L of a truncated causal linear process, a_0 = 1.
struct CoeffSpec {
    enum class Kind { explicit_seq, geometric, longmem };

    Kind kind = Kind::explicit_seq;
    std::vector<double> values;  ///< explicit_seq only
    double rho = 0.0;            ///< geometric: a_j = rho^j
    double beta = 0.0;           ///< longmem: a_j = j^(-beta), j >= 1
    std::size_t lag = 0;         ///< truncation L

    static CoeffSpec explicit_coeffs(std::vector<double> a);
    static CoeffSpec geometric(double rho, std::size_t lag = 0);
    static CoeffSpec longmem(double beta, std::size_t lag = kLongMemoryDefaultLag);

    /// Untruncated a_j (0 beyond L for explicit sequences).
    [[nodiscard]] double coefficient(std::size_t j) const;

    static constexpr std::size_t kLongMemoryDefaultLag = 10000;
};

struct Coefficients {
    std::vector<double> a;     ///< a_0..a_L
    double tail_bound = 0.0;   ///< bound on sum_{j>L} a_j^2
    double total_square = 0.0; ///< sum_{j<=L} a_j^2
};

/// Throws ConfigError for beta <= 1/2, |rho| >= 1, a_0 != 1 or L < 1.
Coefficients make_coeffs(const CoeffSpec& spec);

struct LinearModel {
    CoeffSpec spec;
    std::vector<double> a;
};
struct Ar1Model {
    double alpha = 0.0;
};
/// X_n = alpha X_{n-1} + eps_n sqrt(a^2 + X_{n-1}^2).
struct ArArchModel {
    double alpha = 0.0;
    double a = 1.0;
    double moment_order = 0.25;  ///< beta with E[(|alpha| + |eps|)^beta] < 1
    double contraction = 0.0;    ///< that expectation
};

class ProcessModel {
public:
    using Kind = std::variant<LinearModel, Ar1Model, ArArchModel>;

    static ProcessModel linear(const CoeffSpec& spec, const InnovationDist& innovation);
    /// The iid model X_i = eps_i.
    static ProcessModel iid(const InnovationDist& innovation);
    static ProcessModel ar1(double alpha, const InnovationDist& innovation);
    static ProcessModel ar_arch(double alpha, double a, const InnovationDist& innovation, double moment_order = 0.25);

    [[nodiscard]] const Kind& kind() const { return kind_; }
    [[nodiscard]] const InnovationDist& innovation() const { return innovation_; }
    [[nodiscard]] bool is_markov() const { return !std::holds_alternative<LinearModel>(kind_); }
    [[nodiscard]] bool is_iid() const;
    [[nodiscard]] const LinearModel* as_linear() const { return std::get_if<LinearModel>(&kind_); }
    /// Number of pre-sample innovations (L for linear models, 0 otherwise).
    [[nodiscard]] std::size_t history() const;
    /// Burn-in steps for Markov models: ceil(log 1e-8 / log r), capped at 1e4.
    [[nodiscard]] std::size_t burn_in() const;
    /// Per-step contraction rate of the coupled distance (GMC rate).
    [[nodiscard]] double contraction_rate() const;
    [[nodiscard]] std::string name() const;

    /// One step of the iterated random function (Markov models only).
    [[nodiscard]] double step(double x_prev, double eps) const;

private:
    ProcessModel(Kind kind, InnovationDist innovation) : kind_(std::move(kind)), innovation_(innovation) {}

    Kind kind_;
    InnovationDist innovation_;
};

/// One realized trajectory. x[i-1] = X_i and y[i-1] = Y_{i-1}, the state that
/// conditions X_i, for i = 1..n. eps[offset + i - 1] = eps_i, so the
/// pre-sample innovations eps_{1-L}..eps_0 occupy eps[0..offset).
struct Path {
    std::vector<double> eps;
    std::size_t offset = 0;
    std::vector<double> x;
    std::vector<double> y;

    [[nodiscard]] std::size_t size() const { return x.size(); }
    /// eps_i for 1 - offset <= i <= n.
    [[nodiscard]] double innovation(long i) const { return eps[static_cast<std::size_t>(static_cast<long>(offset) + i - 1)]; }
};

/// Deterministic in (model, n, seed). Linear models use L pre-sample
/// innovations; Markov models discard burn_in() steps started at 0.
Path simulate(const ProcessModel& model, std::size_t n, const SeedToken& seed);

/// Runs a Markov model from x0 on the given innovations; returns X_1..X_n.
std::vector<double> iterate(const ProcessModel& model, double x0, std::span<const double> eps);

/// Location-scale law of X_{i} given the state y: X = mu(y) + s(y) eps.
class ConditionalLaw {
public:
    ConditionalLaw(const InnovationDist& innovation, double mu, double s, double dmu_dy, double ds_dy)
        : innovation_(innovation), mu_(mu), s_(s), dmu_(dmu_dy), ds_(ds_dy) {}

    [[nodiscard]] double cdf(double x) const;
    [[nodiscard]] double pdf(double x) const;
    [[nodiscard]] double dpdf_dx(double x) const;
    [[nodiscard]] double dcdf_dy(double x) const;
    [[nodiscard]] double dpdf_dy(double x) const;
    [[nodiscard]] double d2pdf_dxdy(double x) const;

    [[nodiscard]] double location() const { return mu_; }
    [[nodiscard]] double scale() const { return s_; }
    [[nodiscard]] const InnovationDist& innovation() const { return innovation_; }

private:
    InnovationDist innovation_;
    double mu_;
    double s_;
    double dmu_;
    double ds_;
};

ConditionalLaw conditional_law(const ProcessModel& model, double y);

/// Coupled states (Y_k, Y_k*) for k = 0..n where Y_k* replaces eps_0 by an
/// independent copy.
std::vector<std::pair<double, double>> simulate_coupled(const ProcessModel& model, std::size_t n, const SeedToken& seed);

/// The single pair (Y_k, Y_k*) of simulate_coupled(model, k, seed), at O(L + k)
/// cost for linear models.
std::pair<double, double> coupled_state(const ProcessModel& model, std::size_t k, const SeedToken& seed);

/// CSV with columns index,eps,x,y (17 significant digits).
void write_path_csv(const Path& path, std::ostream& os);

}  // namespace depemp
