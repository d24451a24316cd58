#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "depemp/rng.hpp"

namespace depemp {

enum class Family {
    standard_normal,
    logistic,
    student_t,
    /// Only for iid sanity experiments: f' and f'' vanish inside the support
    /// and are undefined at the edges, so derivative-based formulas reject it.
    uniform,
};

/// Law of the iid innovations driving every process model.
/// Immutable value type; safe to share across threads.
class InnovationDist {
public:
    static InnovationDist normal(double scale = 1.0);
    static InnovationDist logistic(double scale = 1.0);
    static InnovationDist student_t(double df, double scale = 1.0);
    static InnovationDist uniform(double lo, double hi);

    [[nodiscard]] Family family() const { return family_; }
    [[nodiscard]] double scale() const { return scale_; }
    [[nodiscard]] double df() const { return df_; }
    [[nodiscard]] double lo() const { return lo_; }
    [[nodiscard]] double hi() const { return hi_; }
    [[nodiscard]] std::string name() const;

    /// True when the density has the classical derivatives the conditional-law
    /// formulas need.
    [[nodiscard]] bool smooth() const { return family_ != Family::uniform; }
    /// E|eps|^order < infinity.
    [[nodiscard]] bool has_moment(double order) const;
    /// Throws ConfigError naming `purpose` when E|eps|^order is infinite.
    void require_moment(double order, const std::string& purpose) const;

    [[nodiscard]] double mean() const;
    [[nodiscard]] double variance() const;

private:
    InnovationDist() = default;

    Family family_ = Family::standard_normal;
    double scale_ = 1.0;
    double df_ = 0.0;
    double lo_ = 0.0;
    double hi_ = 1.0;
};

struct DensityEval {
    double f = 0.0;   ///< density
    double f1 = 0.0;  ///< first derivative of the density
    double f2 = 0.0;  ///< second derivative of the density
    double F = 0.0;   ///< distribution function
};

/// Density, its derivatives and the distribution function at x. With
/// with_cdf false the F field is NaN for families whose distribution
/// function is costly (student-t).
DensityEval innovation_eval(const InnovationDist& dist, double x, bool with_cdf = true);
double innovation_pdf(const InnovationDist& dist, double x);
double innovation_cdf(const InnovationDist& dist, double x);
/// Monotone bisection on the CDF to 1e-12.
double innovation_quantile(const InnovationDist& dist, double p);

/// Deterministic in (dist, seed, n).
std::vector<double> innovation_sample(const InnovationDist& dist, const SeedToken& seed, std::size_t n);
double draw(const InnovationDist& dist, Philox& rng);

/// Symmetric cutoff T with density and tail mass below `level` outside [-T, T].
double tail_cutoff(const InnovationDist& dist, double level = 1e-16);

/// E[(c + |eps|)^power] by quadrature (the AR-ARCH contraction moment when c = |alpha|).
double shifted_abs_moment(const InnovationDist& dist, double c, double power);

}  // namespace depemp
