#include "depemp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace depemp {

namespace {

using boost::math::quadrature::gauss_kronrod;

// One 61-point Kronrod panel: value, error estimate and L1 norm.
struct Panel {
    double value = 0.0;
    double err = 0.0;
    double l1 = 0.0;
};

template <class G>
Panel panel(const G& g, double a, double b) {
    Panel p;
    p.value = gauss_kronrod<double, 61>::integrate(g, a, b, 0, 0.0, &p.err, &p.l1);
    return p;
}

// Recursive bisection accepting a panel once its error is below either the
// relative target or the absolute floor.
template <class G>
double adapt(const G& g, double a, double b, const Panel& whole, double rel, double abs_tol, int depth) {
    if (depth <= 0 || whole.err <= std::max(rel * whole.l1, abs_tol)) {
        return whole.value;
    }
    const double m = 0.5 * (a + b);
    const Panel left = panel(g, a, m);
    const Panel right = panel(g, m, b);
    return adapt(g, a, m, left, rel, 0.5 * abs_tol, depth - 1) + adapt(g, m, b, right, rel, 0.5 * abs_tol, depth - 1);
}

// Finite-interval view of f on [a, b] with either bound possibly infinite.
struct Mapped {
    const RealFn* f;
    double a;
    double b;
    double lo = 0.0;
    double hi = 1.0;

    Mapped(const RealFn& fn, double a_, double b_) : f(&fn), a(a_), b(b_) {
        if (std::isfinite(a) && std::isfinite(b)) {
            lo = a;
            hi = b;
        } else if (!std::isfinite(a) && !std::isfinite(b)) {
            lo = -1.0;
        }
    }

    double operator()(double t) const {
        double v = 0.0;
        if (std::isfinite(a) && std::isfinite(b)) {
            return (*f)(t);
        }
        if (std::isfinite(a)) {
            const double w = 1.0 - t;
            v = (*f)(a + t / w) / (w * w);
        } else if (std::isfinite(b)) {
            const double w = 1.0 - t;
            v = (*f)(b - t / w) / (w * w);
        } else {
            const double w = 1.0 - t * t;
            v = (*f)(t / w) * (1.0 + t * t) / (w * w);
        }
        return std::isfinite(v) ? v : 0.0;
    }
};

}  // namespace

double integrate(const RealFn& f, double a, double b, double tol, int max_depth, double abs_tol) {
    if (a == b) {
        return 0.0;
    }
    if (a > b) {
        return -integrate(f, b, a, tol, max_depth, abs_tol);
    }
    const Mapped g(f, a, b);
    return adapt(g, g.lo, g.hi, panel(g, g.lo, g.hi), tol, abs_tol, max_depth);
}

double integrate_line(const RealFn& f, std::vector<double> breaks, double tol) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    if (breaks.empty()) {
        breaks.push_back(0.0);
    }
    std::vector<std::pair<double, double>> spans;
    spans.emplace_back(-inf, breaks.front());
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        spans.emplace_back(breaks[i], breaks[i + 1]);
    }
    spans.emplace_back(breaks.back(), inf);

    // A coarse pass sets the absolute floor, so panels carrying negligible
    // mass are not refined to a relative tolerance they cannot reach.
    std::vector<Panel> coarse;
    double l1 = 0.0;
    for (const auto& [a, b] : spans) {
        const Mapped g(f, a, b);
        coarse.push_back(panel(g, g.lo, g.hi));
        l1 += coarse.back().l1;
    }
    const double floor = tol * l1 / static_cast<double>(spans.size());
    double total = 0.0;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const Mapped g(f, spans[i].first, spans[i].second);
        total += adapt(g, g.lo, g.hi, coarse[i], tol, floor, 18);
    }
    return total;
}

TailSlope tail_slope(const RealFn& f, int direction) {
    const double sgn = direction >= 0 ? 1.0 : -1.0;
    std::vector<double> ks;
    std::vector<double> logs;
    for (int k = 12; k <= 40; k += 2) {
        const double lo = std::ldexp(1.0, k);
        const double shell = integrate([&](double t) { return std::abs(f(sgn * t)); }, lo, 2.0 * lo, 1e-8, 10);
        if (!(shell > 0.0) || !std::isfinite(shell)) {
            // Vanishing shells mean faster than polynomial decay.
            if (shell == 0.0) {
                return {-std::numeric_limits<double>::infinity(), false};
            }
            continue;
        }
        ks.push_back(static_cast<double>(k));
        logs.push_back(std::log2(shell));
    }
    if (ks.size() < 3) {
        return {-std::numeric_limits<double>::infinity(), false};
    }
    // Use the outer half of the shells: the asymptotic regime.
    const std::size_t start = ks.size() / 2;
    std::vector<double> xs(ks.begin() + static_cast<long>(start), ks.end());
    std::vector<double> ys(logs.begin() + static_cast<long>(start), logs.end());
    const LineFit fit = fit_line(xs, ys);
    TailSlope out;
    out.exponent = fit.slope - 1.0;
    out.divergent = fit.slope > -0.02;
    return out;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    LineFit fit;
    if (n < 2) {
        return fit;
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - fit.intercept - fit.slope * x[i];
        fit.sse += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - fit.sse / syy : 1.0;
    if (n > 2 && sxx > 0.0) {
        fit.slope_se = std::sqrt(fit.sse / static_cast<double>(n - 2) / sxx);
    }
    return fit;
}

double student_t_quantile(double df, double p) {
    boost::math::students_t dist(df);
    return boost::math::quantile(dist, p);
}

}  // namespace depemp
