#pragma once

#include <memory>
#include <string>
#include <vector>

#include "depemp/innovations.hpp"
#include "depemp/processes.hpp"
#include "depemp/quadrature.hpp"

namespace depemp {

/// Stationary law of X_1 for a process model.
///
/// Closed forms cover Gaussian linear and AR(1) models and the iid model.
/// Every other Markov model gets a numerical density: the stationary equation
/// p(x) = int f(x | y) p(y) dy is solved by power iteration on a tan-mapped
/// midpoint grid at 512 and 1024 nodes, then Richardson-combined.
class Marginal {
public:
    enum class Kind { normal, innovation, numeric };

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] double cdf(double x) const;
    [[nodiscard]] double pdf(double x) const;
    /// E g(X_1); `breaks` are kinks of g handed to the quadrature.
    [[nodiscard]] double expectation(const RealFn& g, std::vector<double> breaks = {}) const;
    /// Standard deviation for the normal kind; a robust spread otherwise.
    [[nodiscard]] double spread() const { return spread_; }
    [[nodiscard]] const std::string& description() const { return description_; }

    static Marginal normal(double sd);
    static Marginal from_innovation(const InnovationDist& dist);
    static Marginal numeric(const ProcessModel& model);

private:
    struct Grid {
        std::vector<double> x;  // nodes
        std::vector<double> w;  // quadrature weights times stationary density
    };

    [[nodiscard]] double nystrom_pdf(double x) const;
    [[nodiscard]] double nystrom_cdf(double x) const;
    [[nodiscard]] double table_lookup(double x, bool want_cdf) const;

    Kind kind_ = Kind::normal;
    double spread_ = 1.0;
    std::string description_;
    std::shared_ptr<const InnovationDist> innovation_;
    std::shared_ptr<const ProcessModel> model_;
    Grid coarse_;
    Grid fine_;
    // Hermite table of (x, F, f) for fast evaluation inside the tabulated range.
    std::vector<double> tx_;
    std::vector<double> tF_;
    std::vector<double> tf_;
};

/// Cached per model; the returned object is immutable and safe to share.
std::shared_ptr<const Marginal> marginal_law(const ProcessModel& model);

}  // namespace depemp
