#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"

#include "depemp/errors.hpp"
#include "depemp/longmem.hpp"
#include "depemp/quadrature.hpp"

using namespace depemp;

namespace {

double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// E psi(mu + s Z) for the Huber derivative psi clipped at +-1.
double huber_normal_mean(double mu, double s) {
    const double a = (-1.0 - mu) / s;
    const double b = (1.0 - mu) / s;
    return -Phi(a) + 1.0 - Phi(b) + mu * (Phi(b) - Phi(a)) + s * (phi(a) - phi(b));
}

// Brute-force e_r over all r-subsets of b.
double subset_sum(const std::vector<double>& b, int r, std::size_t start = 0) {
    if (r == 0) {
        return 1.0;
    }
    double s = 0.0;
    for (std::size_t j = start; j < b.size(); ++j) {
        s += b[j] * subset_sum(b, r - 1, j + 1);
    }
    return s;
}

TestFunction square_function() {
    TestFunction t;
    t.name = "square";
    t.g = [](double x) { return x * x; };
    t.g1 = [](double x) { return 2.0 * x; };
    t.g2 = [](double) { return 2.0; };
    return t;
}

ProcessModel gaussian_longmem(double beta, std::size_t lag) {
    return ProcessModel::linear(CoeffSpec::longmem(beta, lag), InnovationDist::normal());
}

}  // namespace

TEST_CASE("elementary symmetric functions against subset enumeration") {
    const std::vector<double> b{0.7, -1.3, 0.25, 2.0, -0.4, 1.1, 0.05, -0.9};
    for (int r = 0; r <= 8; ++r) {
        CHECK(elem_sym_u(b, r) == doctest::Approx(subset_sum(b, r)).epsilon(1e-12).scale(1.0));
    }
    CHECK(elem_sym_u(b, 9) == 0.0);
    CHECK(elem_sym_u(std::vector<double>{}, 0) == 1.0);
    const std::vector<double> three{2.0, 3.0, 5.0};
    CHECK(elem_sym_u(three, 1) == doctest::Approx(10.0));
    CHECK(elem_sym_u(three, 2) == doctest::Approx(31.0));
    CHECK(elem_sym_u(three, 3) == doctest::Approx(30.0));
    CHECK_THROWS_AS(elem_sym_u(b, -1), ContractError);
}

TEST_CASE("elementary symmetric functions satisfy the generating identity") {
    std::vector<double> b;
    for (int j = 0; j < 25; ++j) {
        b.push_back(std::sin(1.7 * j + 0.3) / (1.0 + 0.1 * j));
    }
    const std::vector<double> e = elem_sym_all(b, static_cast<int>(b.size()));
    for (double t : {-0.8, -0.3, 0.1, 0.5, 1.0}) {
        double prod = 1.0;
        for (double bj : b) {
            prod *= 1.0 + t * bj;
        }
        double poly = 0.0;
        for (std::size_t r = e.size(); r-- > 0;) {
            poly = poly * t + e[r];
        }
        CHECK(poly == doctest::Approx(prod).epsilon(1e-9));
    }
}

TEST_CASE("K_inf derivatives for polynomial and Huber functions") {
    const ProcessModel m = gaussian_longmem(0.75, 200);
    double s2 = 0.0;
    for (double a : m.as_linear()->a) {
        s2 += a * a;
    }
    const MarginalDerivs id = marginal_derivs(m, identity_function(), 3);
    CHECK(id.sigma == doctest::Approx(std::sqrt(s2)).epsilon(1e-12));
    CHECK(id.kinf[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK(id.kinf[1] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(id.kinf[2] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK(id.kinf[3] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));

    const MarginalDerivs sq = marginal_derivs(m, square_function(), 3);
    CHECK(sq.kinf[0] == doctest::Approx(s2).epsilon(1e-10));
    CHECK(sq.kinf[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK(sq.kinf[2] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(sq.kinf[3] == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));

    const double sigma = id.sigma;
    const MarginalDerivs hub = marginal_derivs(m, huber_derivative(0.0), 3);
    const double h = 1e-3;
    auto M = [&](double x) { return huber_normal_mean(x, sigma); };
    CHECK(hub.kinf[0] == doctest::Approx(M(0.0)).scale(1.0).epsilon(1e-12));
    CHECK(hub.kinf[1] == doctest::Approx((M(h) - M(-h)) / (2 * h)).epsilon(1e-6));
    CHECK(hub.kinf[2] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    const double d3 = (M(2 * h) - 2 * M(h) + 2 * M(-h) - M(-2 * h)) / (2 * h * h * h);
    CHECK(hub.kinf[3] == doctest::Approx(d3).epsilon(1e-4));
}

TEST_CASE("marginal CDF derivatives agree with finite differences") {
    MarginalDerivs md;
    md.sigma = 1.7;
    const double h = 1e-4;
    for (int i = 0; i <= 4; ++i) {
        for (double y : {-2.0, -0.3, 0.0, 1.1, 3.0}) {
            const double fd = (md.F_deriv(i, y + h) - md.F_deriv(i, y - h)) / (2 * h);
            CHECK(md.F_deriv(i + 1, y) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
    }
    CHECK(md.F_deriv(1, 0.0) == doctest::Approx(1.0 / (1.7 * std::sqrt(2.0 * std::numbers::pi))));
}

TEST_CASE("expansion terms: first order is the observation, second order by subsets") {
    const ProcessModel m = gaussian_longmem(0.8, 12);
    const std::vector<double>& a = m.as_linear()->a;
    const Path path = simulate(m, 50, SeedToken{31, 0, 1});
    const ExpansionTerms t = expansion_terms(path, a, 3);
    for (std::size_t i = 1; i <= path.size(); ++i) {
        std::vector<double> b(a.size());
        for (std::size_t j = 0; j < a.size(); ++j) {
            b[j] = a[j] * path.innovation(static_cast<long>(i) - static_cast<long>(j));
        }
        CHECK(t.at(i, 0) == 1.0);
        CHECK(t.at(i, 1) == doctest::Approx(path.x[i - 1]).epsilon(1e-10).scale(1.0));
        CHECK(t.at(i, 2) == doctest::Approx(subset_sum(b, 2)).epsilon(1e-10).scale(1.0));
        CHECK(t.at(i, 3) == doctest::Approx(subset_sum(b, 3)).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("expansion residual: exact cases") {
    const ProcessModel m = gaussian_longmem(0.75, 300);
    const std::vector<double>& a = m.as_linear()->a;
    const Path path = simulate(m, 400, SeedToken{32, 0, 1});
    const TestFunction id = identity_function();
    const MarginalDerivs mid = marginal_derivs(m, id, 3);
    for (int p : {1, 2, 3}) {
        CHECK(std::abs(expansion_residual(path, a, id, p, mid)) <= 1e-8);
    }
    const TestFunction hub = huber_derivative(0.3);
    const MarginalDerivs mh = marginal_derivs(m, hub, 0);
    double direct = 0.0;
    for (double x : path.x) {
        direct += hub.g(x) - mh.kinf[0];
    }
    CHECK(expansion_residual(path, a, hub, 0, mh) == doctest::Approx(direct).epsilon(1e-12).scale(1.0));

    const std::vector<double> pref = expansion_residual_prefixes(path, a, hub, 0, mh, {1, 100, 400});
    CHECK(pref[0] == doctest::Approx(hub.g(path.x[0]) - mh.kinf[0]));
    CHECK(pref[2] == doctest::Approx(direct).epsilon(1e-12).scale(1.0));
    CHECK_THROWS_AS(expansion_residual_prefixes(path, a, hub, 0, mh, {401}), ContractError);
    CHECK_THROWS_AS(expansion_residual(path, a, hub, 2, mh), ContractError);
}

TEST_CASE("indexed residual equals minus the integral of K' against the point residual") {
    const ProcessModel m = gaussian_longmem(0.7, 80);
    const std::vector<double>& a = m.as_linear()->a;
    const Path path = simulate(m, 40, SeedToken{33, 0, 1});
    const TestFunction hub = huber_derivative(0.0);
    for (int p : {0, 1, 2}) {
        const MarginalDerivs md = marginal_derivs(m, hub, p);
        const ExpansionTerms t = expansion_terms(path, a, p);
        // K' = 1 on (-1, 1) and 0 elsewhere; the point residual jumps at each X_i.
        std::vector<double> cuts{-1.0, 1.0};
        for (double x : path.x) {
            if (x > -1.0 && x < 1.0) {
                cuts.push_back(x);
            }
        }
        std::sort(cuts.begin(), cuts.end());
        double integral = 0.0;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            integral += integrate([&](double y) { return expansion_point(m, path, t, md, y).total; }, cuts[k], cuts[k + 1], 1e-12, 18,
                                  1e-13);
        }
        CHECK(-integral == doctest::Approx(expansion_residual(path, a, hub, p, md)).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("point expansion splits into martingale and remainder") {
    const ProcessModel m = gaussian_longmem(0.75, 100);
    const Path path = simulate(m, 200, SeedToken{34, 0, 1});
    const MarginalDerivs md = marginal_derivs(m, identity_function(), 2);
    const ExpansionTerms t = expansion_terms(path, m.as_linear()->a, 2);
    for (double y : {-1.0, 0.0, 0.5, 2.0}) {
        const PointExpansion pe = expansion_point(m, path, t, md, y);
        CHECK(pe.total == doctest::Approx(pe.martingale + pe.remainder).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("the expansion is restricted to Gaussian linear processes") {
    CHECK_THROWS_AS(marginal_derivs(ProcessModel::ar1(0.5, InnovationDist::normal()), identity_function(), 1), ConfigError);
    CHECK_THROWS_AS(marginal_derivs(ProcessModel::linear(CoeffSpec::longmem(0.75, 50), InnovationDist::logistic(1.0)),
                                    identity_function(), 1),
                    ConfigError);
}

TEST_CASE("sigma_{n,p} normalization") {
    CHECK(sigma_np_norm(1000, 0, 0.75).value == doctest::Approx(1000.0));
    CHECK(sigma_np_norm(1000, 2, 0.75).value == doctest::Approx(std::sqrt(1000.0)));
    CHECK(sigma_np_norm(1000, 1, 0.6).value == doctest::Approx(std::pow(1000.0, 0.9)));
    const SigmaNorm deg = sigma_np_norm(1000, 5, 0.9);
    CHECK(deg.degenerate);
    CHECK_FALSE(deg.warning.empty());
    CHECK_THROWS_AS(sigma_np_norm(1000, 1, 0.5), ContractError);
    CHECK_THROWS_AS(sigma_np_norm(1000, 1, 1.0), ContractError);
}
