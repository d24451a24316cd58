#include "depemp/longmem.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "depemp/errors.hpp"
#include "depemp/quadrature.hpp"

namespace depemp {

namespace {

// Probabilists' Hermite polynomial He_k(z).
double hermite_he(int k, double z) {
    if (k == 0) {
        return 1.0;
    }
    double h0 = 1.0;
    double h1 = z;
    for (int m = 1; m < k; ++m) {
        const double h2 = z * h1 - m * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

double normal_density(double y, double sigma) {
    const double z = y / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

std::vector<double> elem_sym_all(std::span<const double> b, int p) {
    if (p < 0) {
        throw ContractError("elementary symmetric order must be nonnegative");
    }
    const std::size_t P = static_cast<std::size_t>(p);
    std::vector<double> e(P + 1, 0.0);
    std::vector<double> comp(P + 1, 0.0);
    e[0] = 1.0;
    for (double bj : b) {
        // Descending r keeps E[j-1][r-1] available in place.
        for (std::size_t r = P; r >= 1; --r) {
            const double y = bj * e[r - 1] - comp[r];
            const double t = e[r] + y;
            comp[r] = (t - e[r]) - y;
            e[r] = t;
        }
    }
    return e;
}

double elem_sym_u(std::span<const double> b, int r) {
    if (r < 0) {
        throw ContractError("elementary symmetric order must be nonnegative");
    }
    if (static_cast<std::size_t>(r) > b.size()) {
        return 0.0;
    }
    return elem_sym_all(b, r)[static_cast<std::size_t>(r)];
}

double MarginalDerivs::F_deriv(int i, double y) const {
    if (i == 0) {
        return 0.5 * std::erfc(-y / (sigma * std::numbers::sqrt2));
    }
    const int k = i - 1;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    return sign * std::pow(sigma, -k) * hermite_he(k, y / sigma) * normal_density(y, sigma);
}

MarginalDerivs marginal_derivs(const ProcessModel& model, const TestFunction& K, int p) {
    const auto* lin = model.as_linear();
    if (lin == nullptr) {
        throw ConfigError("the long-memory expansion is defined for linear processes only");
    }
    if (model.innovation().family() != Family::standard_normal) {
        throw ConfigError("the long-memory expansion requires Gaussian innovations (got " + model.innovation().name() + ")");
    }
    if (p < 0) {
        throw ContractError("expansion order p must be nonnegative");
    }
    MarginalDerivs md;
    double s2 = 0.0;
    for (double a : lin->a) {
        s2 += a * a;
    }
    md.sigma = model.innovation().scale() * std::sqrt(s2);
    const double sigma = md.sigma;
    std::vector<double> br = K.breakpoints();
    br.push_back(0.0);
    br.push_back(-sigma);
    br.push_back(sigma);
    for (int j = 0; j <= p; ++j) {
        auto integrand = [&](double u) { return K.g(u) * hermite_he(j, u / sigma) * normal_density(u, sigma); };
        md.kinf.push_back(std::pow(sigma, -j) * integrate_line(integrand, br, 1e-13));
    }
    return md;
}

ExpansionTerms expansion_terms(const Path& path, std::span<const double> a, int p) {
    if (p < 0) {
        throw ContractError("expansion order p must be nonnegative");
    }
    const std::size_t L = a.size() - 1;
    if (path.offset < L) {
        throw ContractError("path carries fewer pre-sample innovations than the coefficient window");
    }
    ExpansionTerms t;
    t.n = path.size();
    t.p = p;
    t.u.resize(t.n * static_cast<std::size_t>(p + 1));
    std::vector<double> b(L + 1);
    for (std::size_t i = 1; i <= t.n; ++i) {
        for (std::size_t j = 0; j <= L; ++j) {
            b[j] = a[j] * path.innovation(static_cast<long>(i) - static_cast<long>(j));
        }
        const std::vector<double> e = elem_sym_all(b, p);
        for (int r = 0; r <= p; ++r) {
            t.u[(i - 1) * static_cast<std::size_t>(p + 1) + static_cast<std::size_t>(r)] = e[static_cast<std::size_t>(r)];
        }
    }
    return t;
}

std::vector<double> expansion_residual_prefixes(const Path& path, std::span<const double> a, const TestFunction& K, int p,
                                                const MarginalDerivs& md, const std::vector<std::size_t>& prefix_lengths) {
    if (p < 0 || md.kinf.size() < static_cast<std::size_t>(p + 1)) {
        throw ContractError("marginal derivatives do not cover the requested expansion order");
    }
    const std::size_t n = path.size();
    for (std::size_t m : prefix_lengths) {
        if (m > n) {
            throw ContractError("prefix length exceeds the path length");
        }
    }
    ExpansionTerms higher;
    if (p >= 2) {
        higher = expansion_terms(path, a, p);
    }
    std::vector<double> out(prefix_lengths.size(), 0.0);
    double s = 0.0;
    double comp = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        double term = K.g(path.x[i - 1]) - md.kinf[0];
        if (p >= 1) {
            term -= md.kinf[1] * path.x[i - 1];
        }
        for (int r = 2; r <= p; ++r) {
            term -= md.kinf[static_cast<std::size_t>(r)] * higher.at(i, r);
        }
        const double y = term - comp;
        const double t = s + y;
        comp = (t - s) - y;
        s = t;
        for (std::size_t k = 0; k < prefix_lengths.size(); ++k) {
            if (prefix_lengths[k] == i) {
                out[k] = s;
            }
        }
    }
    return out;
}

double expansion_residual(const Path& path, std::span<const double> a, const TestFunction& K, int p,
                          const MarginalDerivs& md) {
    return expansion_residual_prefixes(path, a, K, p, md, {path.size()}).front();
}

PointExpansion expansion_point(const ProcessModel& model, const Path& path, const ExpansionTerms& terms,
                               const MarginalDerivs& md, double y) {
    const std::size_t n = path.size();
    PointExpansion out;
    std::vector<double> coef(static_cast<std::size_t>(terms.p + 1));
    for (int r = 0; r <= terms.p; ++r) {
        coef[static_cast<std::size_t>(r)] = ((r % 2 == 0) ? 1.0 : -1.0) * md.F_deriv(r, y);
    }
    for (std::size_t i = 1; i <= n; ++i) {
        const double ind = path.x[i - 1] <= y ? 1.0 : 0.0;
        const double cond = conditional_law(model, path.y[i - 1]).cdf(y);
        double approx = 0.0;
        for (int r = 0; r <= terms.p; ++r) {
            approx += coef[static_cast<std::size_t>(r)] * terms.at(i, r);
        }
        out.martingale += ind - cond;
        out.remainder += cond - approx;
        out.total += ind - approx;
    }
    return out;
}

SigmaNorm sigma_np_norm(std::size_t n, int p, double beta) {
    if (!(beta > 0.5 && beta < 1.0)) {
        throw ContractError("sigma_np_norm requires 1/2 < beta < 1");
    }
    if (n == 0 || p < 0) {
        throw ContractError("sigma_np_norm requires n >= 1 and p >= 0");
    }
    SigmaNorm s;
    const double e = 2.0 - p * (2.0 * beta - 1.0);
    s.value = std::pow(static_cast<double>(n), 0.5 * e);
    if (e <= 0.0) {
        s.degenerate = true;
        std::ostringstream os;
        os << "p(2 beta - 1) = " << p * (2.0 * beta - 1.0) << " >= 2: sigma_{n,p} does not grow and the normalization degenerates";
        s.warning = os.str();
    }
    return s;
}

}  // namespace depemp
