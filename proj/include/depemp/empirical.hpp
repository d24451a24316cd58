#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "depemp/marginal.hpp"
#include "depemp/quadrature.hpp"

namespace depemp {

struct FunctionClassSpec {
    enum class Kind { sobolev, lipschitz_growth, piecewise, kclass };

    Kind kind = Kind::sobolev;
    double gamma = 0.0;
    double mu = 0.0;
    double eta = 0.0;
    double delta = 0.0;
    int pieces = 1;  ///< I for the piecewise class

    static FunctionClassSpec sobolev(double gamma, double mu);
    static FunctionClassSpec lipschitz_growth(double eta, double delta);
    static FunctionClassSpec piecewise(int pieces, double gamma);
    static FunctionClassSpec kclass(double gamma);

    /// Throws ConfigError when the parameters leave the admissible range.
    void validate() const;
    [[nodiscard]] std::string name() const;
};

/// g with its derivative and, optionally, second derivative. Members of the
/// piecewise class are left-continuous with finitely many jumps; `jumps`
/// records (location, g(x+) - g(x)) so that g(b) - g(a) equals the integral of
/// g1 plus the jumps in [a, b).
struct TestFunction {
    std::string name;
    RealFn g;
    RealFn g1;
    RealFn g2;  ///< may be empty
    std::vector<double> kinks;
    std::vector<std::pair<double, double>> jumps;
    FunctionClassSpec cls;
    double theta = 0.0;  ///< location parameter of the family member
    double scale = 1.0;  ///< normalizing factor already applied to g
    /// Piecewise members: the smooth components g_i, in threshold order.
    std::vector<TestFunction> parts;

    [[nodiscard]] double operator()(double x) const { return g(x); }
    /// Kinks and jump locations, for quadrature breakpoints.
    [[nodiscard]] std::vector<double> breakpoints() const;
};

/// Huber derivative x -> max(-1, min(x, 1)) shifted to theta.
TestFunction huber_derivative(double theta = 0.0);
TestFunction identity_function();
TestFunction constant_function(double c);

/// Measure w(du) = weight(u) du on the real line with a quadrature rule.
class WeightedMeasure {
public:
    /// (1 + |u|)^lambda.
    static WeightedMeasure power(double lambda);
    /// (1 + |u|)^(1 + 2 eta) log^2(2 + |u|).
    static WeightedMeasure log_weight(double eta);

    [[nodiscard]] double weight(double u) const;
    [[nodiscard]] double exponent() const { return lambda_; }
    [[nodiscard]] bool is_log() const { return log_; }
    [[nodiscard]] std::string name() const;

    /// Adaptive integral of f(u) weight(u) over the line.
    [[nodiscard]] double integrate(const RealFn& f, std::vector<double> breaks = {}, double tol = 1e-11) const;

    /// Composite Simpson rule on [-T, T] whose nodes carry weight(u) du.
    struct Rule {
        std::vector<double> nodes;
        std::vector<double> weights;
        double cutoff = 0.0;
    };
    /// T is the smallest power-of-two multiple of `scale` beyond which
    /// envelope(u) weight(u) < tail_tol on both sides.
    [[nodiscard]] Rule rule(const RealFn& envelope, double scale = 1.0, std::size_t nodes = 2001, double tail_tol = 1e-10) const;

private:
    double lambda_ = 0.0;
    bool log_ = false;
};

/// CDF and density of the law the statistics are centred at.
struct LawEvaluator {
    RealFn cdf;
    RealFn pdf;
};
LawEvaluator law_of(const Marginal& marginal);
LawEvaluator law_of(const InnovationDist& dist);

double empirical_cdf(std::span<const double> sample, double x);

/// sup_s sqrt(n) |F_n(s) - F(s)| (1 + |s|)^(gamma / q), exact up to root finding.
double weighted_sup_rn(std::span<const double> sample, const LawEvaluator& law, double gamma, double q);

/// sup_t (1 + |t|)^(2 gamma / q) sup_{|s| <= delta} |R_n(t + s) - R_n(t)|^2.
double modulus_stat(std::span<const double> sample, const LawEvaluator& law, double delta, double gamma, double q);

/// (P_n - P) g.
double indexed_emp(std::span<const double> sample, const TestFunction& g, double Eg);

struct SobolevNorm {
    double norm_g = 0.0;   ///< integral of g^2 w_{-gamma-mu}
    double norm_g1 = 0.0;  ///< integral of g'^2 w_{-gamma+mu}
    bool finite = true;
    bool member = true;
    std::string diagnostic;
};
SobolevNorm sobolev_norm(const TestFunction& g, double gamma, double mu);

/// Canonical members of a class, each normalized so that it passes the
/// class membership check.
std::vector<TestFunction> make_class_family(const FunctionClassSpec& spec, std::size_t count);

struct MembershipReport {
    bool member = false;
    double value = 0.0;  ///< class functional (Sobolev sum, growth ratio, ...)
    std::string diagnostic;
};
MembershipReport check_membership(const TestFunction& g);

/// E g(X_1) under the given marginal.
double expectation(const TestFunction& g, const Marginal& marginal);

}  // namespace depemp
