#include "depemp/innovations.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "depemp/errors.hpp"
#include "depemp/quadrature.hpp"

namespace depemp {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

DensityEval standard_normal(double z) {
    const double phi = kInvSqrt2Pi * std::exp(-0.5 * z * z);
    return {phi, -z * phi, (z * z - 1.0) * phi, 0.5 * std::erfc(-z / std::numbers::sqrt2)};
}

DensityEval standard_logistic(double z) {
    // Stable in both tails: e = exp(-|z|) <= 1.
    const double e = std::exp(-std::abs(z));
    const double F = z >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
    const double f = e / ((1.0 + e) * (1.0 + e));
    const double one_minus_2F = z >= 0.0 ? -(1.0 - e) / (1.0 + e) : (1.0 - e) / (1.0 + e);
    return {f, f * one_minus_2F, f * (1.0 - 6.0 * F * (1.0 - F)), F};
}

DensityEval standard_t(double z, double nu, bool with_cdf) {
    const double logc = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi);
    const double denom = nu + z * z;
    const double g = std::exp(logc - 0.5 * (nu + 1.0) * std::log1p(z * z / nu));
    const double h = -(nu + 1.0) * z / denom;
    const double hp = -(nu + 1.0) * (nu - z * z) / (denom * denom);
    const double F = with_cdf ? boost::math::cdf(boost::math::students_t(nu), z) : std::numeric_limits<double>::quiet_NaN();
    return {g, g * h, g * (h * h + hp), F};
}

}  // namespace

InnovationDist InnovationDist::normal(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ConfigError("normal innovation scale must be positive");
    }
    InnovationDist d;
    d.family_ = Family::standard_normal;
    d.scale_ = scale;
    return d;
}

InnovationDist InnovationDist::logistic(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ConfigError("logistic innovation scale must be positive");
    }
    InnovationDist d;
    d.family_ = Family::logistic;
    d.scale_ = scale;
    return d;
}

InnovationDist InnovationDist::student_t(double df, double scale) {
    if (!(df > 0.0) || !std::isfinite(df)) {
        throw ConfigError("student-t degrees of freedom must be positive");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ConfigError("student-t innovation scale must be positive");
    }
    InnovationDist d;
    d.family_ = Family::student_t;
    d.df_ = df;
    d.scale_ = scale;
    return d;
}

InnovationDist InnovationDist::uniform(double lo, double hi) {
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw ConfigError("uniform innovation requires lo < hi");
    }
    InnovationDist d;
    d.family_ = Family::uniform;
    d.lo_ = lo;
    d.hi_ = hi;
    d.scale_ = hi - lo;
    return d;
}

std::string InnovationDist::name() const {
    std::ostringstream os;
    switch (family_) {
        case Family::standard_normal: os << "normal(scale=" << scale_ << ")"; break;
        case Family::logistic: os << "logistic(scale=" << scale_ << ")"; break;
        case Family::student_t: os << "student-t(df=" << df_ << ", scale=" << scale_ << ")"; break;
        case Family::uniform: os << "uniform(" << lo_ << ", " << hi_ << ")"; break;
    }
    return os.str();
}

bool InnovationDist::has_moment(double order) const {
    if (family_ == Family::student_t) {
        return order < df_;
    }
    return true;
}

void InnovationDist::require_moment(double order, const std::string& purpose) const {
    if (!has_moment(order)) {
        std::ostringstream os;
        os << purpose << " requires E|eps|^" << order << " < infinity, which fails for " << name();
        throw ConfigError(os.str());
    }
}

double InnovationDist::mean() const {
    return family_ == Family::uniform ? 0.5 * (lo_ + hi_) : 0.0;
}

double InnovationDist::variance() const {
    switch (family_) {
        case Family::standard_normal: return scale_ * scale_;
        case Family::logistic: return scale_ * scale_ * std::numbers::pi * std::numbers::pi / 3.0;
        case Family::student_t:
            return df_ > 2.0 ? scale_ * scale_ * df_ / (df_ - 2.0) : std::numeric_limits<double>::infinity();
        case Family::uniform: return (hi_ - lo_) * (hi_ - lo_) / 12.0;
    }
    return 0.0;
}

DensityEval innovation_eval(const InnovationDist& dist, double x, bool with_cdf) {
    if (!std::isfinite(x)) {
        throw ContractError("innovation_eval requires a finite argument");
    }
    if (dist.family() == Family::uniform) {
        const double width = dist.hi() - dist.lo();
        const bool inside = x >= dist.lo() && x <= dist.hi();
        const double F = x <= dist.lo() ? 0.0 : (x >= dist.hi() ? 1.0 : (x - dist.lo()) / width);
        return {inside ? 1.0 / width : 0.0, 0.0, 0.0, F};
    }
    const double s = dist.scale();
    const double z = x / s;
    DensityEval e;
    switch (dist.family()) {
        case Family::standard_normal: e = standard_normal(z); break;
        case Family::logistic: e = standard_logistic(z); break;
        case Family::student_t: e = standard_t(z, dist.df(), with_cdf); break;
        case Family::uniform: break;
    }
    return {e.f / s, e.f1 / (s * s), e.f2 / (s * s * s), e.F};
}

double innovation_pdf(const InnovationDist& dist, double x) {
    if (dist.family() == Family::standard_normal) {
        const double z = x / dist.scale();
        return kInvSqrt2Pi * std::exp(-0.5 * z * z) / dist.scale();
    }
    return innovation_eval(dist, x, false).f;
}

double innovation_cdf(const InnovationDist& dist, double x) {
    if (dist.family() == Family::standard_normal) {
        return 0.5 * std::erfc(-x / (dist.scale() * std::numbers::sqrt2));
    }
    if (x == std::numeric_limits<double>::infinity()) {
        return 1.0;
    }
    if (x == -std::numeric_limits<double>::infinity()) {
        return 0.0;
    }
    return innovation_eval(dist, x).F;
}

double innovation_quantile(const InnovationDist& dist, double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ContractError("quantile level must lie in (0, 1)");
    }
    double lo = -1.0;
    double hi = 1.0;
    while (innovation_cdf(dist, lo) > p) {
        lo *= 2.0;
    }
    while (innovation_cdf(dist, hi) < p) {
        hi *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (innovation_cdf(dist, mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double draw(const InnovationDist& dist, Philox& rng) {
    switch (dist.family()) {
        case Family::standard_normal: return dist.scale() * rng.normal();
        case Family::logistic: {
            const double u = rng.uniform();
            return dist.scale() * std::log(u / (1.0 - u));
        }
        case Family::student_t: {
            const double z = rng.normal();
            const double chi2 = 2.0 * rng.gamma(0.5 * dist.df());
            return dist.scale() * z / std::sqrt(chi2 / dist.df());
        }
        case Family::uniform: return dist.lo() + (dist.hi() - dist.lo()) * rng.uniform();
    }
    return 0.0;
}

std::vector<double> innovation_sample(const InnovationDist& dist, const SeedToken& seed, std::size_t n) {
    if (n == 0) {
        throw ContractError("innovation_sample requires n >= 1");
    }
    Philox rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) {
        v = draw(dist, rng);
    }
    return out;
}

double tail_cutoff(const InnovationDist& dist, double level) {
    if (dist.family() == Family::uniform) {
        return std::max(std::abs(dist.lo()), std::abs(dist.hi()));
    }
    auto small = [&](double t) {
        const DensityEval e = innovation_eval(dist, t);
        const DensityEval m = innovation_eval(dist, -t);
        return std::max({e.f, m.f, 1.0 - e.F, m.F}) < level;
    };
    double hi = dist.scale();
    while (!small(hi) && hi < 1e12) {
        hi *= 2.0;
    }
    double lo = hi / 2.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (small(mid) ? hi : lo) = mid;
    }
    return hi;
}

double shifted_abs_moment(const InnovationDist& dist, double c, double power) {
    if (!dist.has_moment(power)) {
        return std::numeric_limits<double>::infinity();
    }
    auto integrand = [&](double x) { return std::pow(c + std::abs(x), power) * innovation_pdf(dist, x); };
    if (dist.family() == Family::uniform) {
        if (dist.lo() < 0.0 && dist.hi() > 0.0) {
            return integrate(integrand, dist.lo(), 0.0, 1e-13) + integrate(integrand, 0.0, dist.hi(), 1e-13);
        }
        return integrate(integrand, dist.lo(), dist.hi(), 1e-13);
    }
    return integrate_line(integrand, {0.0}, 1e-13);
}

}  // namespace depemp
