#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace depemp {

using RealFn = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (61 point) on [a, b]; either bound may be infinite.
/// A panel is accepted once its error estimate is below tol times its L1 norm
/// or below abs_tol (shared out between the halves on each bisection).
double integrate(const RealFn& f, double a, double b, double tol = 1e-11, int max_depth = 18, double abs_tol = 0.0);

/// Integral over the whole real line, split at the (unsorted, possibly empty)
/// breakpoints so kinks and concentrated mass land on panel edges.
double integrate_line(const RealFn& f, std::vector<double> breaks, double tol = 1e-11);

/// Composite Simpson rule with `nodes` points (forced odd).
template <class F>
double simpson(F&& f, double a, double b, std::size_t nodes) {
    if (nodes < 3) {
        nodes = 3;
    }
    if (nodes % 2 == 0) {
        ++nodes;
    }
    const double h = (b - a) / static_cast<double>(nodes - 1);
    double s = f(a) + f(b);
    for (std::size_t i = 1; i + 1 < nodes; ++i) {
        s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
    }
    return s * h / 3.0;
}

/// Power-law exponent of |f| in one tail, estimated from dyadic shells
/// [2^k, 2^(k+1)]; `divergent` is set when the exponent is >= -1 (integral
/// over the tail does not converge).
struct TailSlope {
    double exponent = 0.0;
    bool divergent = false;
};
TailSlope tail_slope(const RealFn& f, int direction);

/// Least-squares line y = intercept + slope * x with the usual slope standard error.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double r_squared = 0.0;
    double sse = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided Student-t quantile, used for regression confidence intervals.
double student_t_quantile(double df, double p);

}  // namespace depemp
