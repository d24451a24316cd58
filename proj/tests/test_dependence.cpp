#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/zeta.hpp>

#include "doctest.h"

#include "depemp/dependence.hpp"
#include "depemp/errors.hpp"

using namespace depemp;

namespace {

const double kSqrtPi = std::sqrt(std::numbers::pi);

double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// int (Phi(x - a) - Phi(x - b))^2 dx with d = a - b, from the energy-distance
// identity: E|X - Y| - (E|X - X'| + E|Y - Y'|) / 2 for unit-variance normals.
double normal_cdf_l2_sq(double d) {
    return (2.0 / kSqrtPi) * (std::exp(-0.25 * d * d) - 1.0) + d * (1.0 - 2.0 * Phi(-d / std::numbers::sqrt2));
}

}  // namespace

TEST_CASE("field derivatives in the state agree with central differences") {
    const ProcessModel m = ProcessModel::ar_arch(0.3, 1.0, InnovationDist::normal());
    for (Field h : {Field::cdf, Field::pdf, Field::pdf_dtheta}) {
        for (double y : {-1.5, 0.2, 2.0}) {
            for (double t : {-1.0, 0.0, 0.8}) {
                const double e = 1e-5;
                const double fd = (field_value(conditional_law(m, y + e), h, t) - field_value(conditional_law(m, y - e), h, t)) / (2 * e);
                CHECK(field_dy(conditional_law(m, y), h, t) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
            }
        }
    }
    CHECK(parse_field(field_name(Field::pdf_dtheta)) == Field::pdf_dtheta);
    CHECK_THROWS_AS(parse_field("density"), ConfigError);
}

TEST_CASE("H_m for a Gaussian AR(1) in closed form") {
    const double a = 0.6;
    const ProcessModel m = ProcessModel::ar1(a, InnovationDist::normal());
    const WeightedMeasure leb = WeightedMeasure::power(0.0);
    for (double y : {-2.0, 0.0, 3.0}) {
        CHECK(H_m(m, Field::cdf, leb, y) == doctest::Approx(a * a / (2.0 * kSqrtPi)).epsilon(1e-9));
        CHECK(H_m(m, Field::pdf, leb, y) == doctest::Approx(a * a / (4.0 * kSqrtPi)).epsilon(1e-9));
    }
    const double per_unit = a / (2.0 * std::pow(std::numbers::pi, 0.25));
    CHECK(rho_m_distance(m, leb, -1.0, 2.5) == doctest::Approx(3.5 * per_unit).epsilon(1e-8));
    CHECK(rho_m_distance(m, leb, 0.7, 0.7) == 0.0);
}

TEST_CASE("linear models: H_m is dominated by kappa (1 + |y|)^gamma") {
    const double gamma = 1.5;
    const InnovationDist eps = InnovationDist::logistic(0.8);
    const ProcessModel m = ProcessModel::linear(CoeffSpec::geometric(0.5, 30), eps);
    const WeightedMeasure w = WeightedMeasure::power(gamma);
    const double kappa = w.integrate([&](double u) {
        const double f1 = innovation_eval(eps, u, false).f1;
        return f1 * f1;
    }, {0.0});
    for (int k = 0; k < 20; ++k) {
        const double y = -10.0 + static_cast<double>(k);
        CHECK(H_m(m, Field::pdf, w, y) <= kappa * std::pow(1.0 + std::abs(y), gamma) * (1.0 + 1e-9));
    }
}

TEST_CASE("AR-ARCH: H_m with weight gamma + 1 decays like (1 + |y|)^(gamma - 2)") {
    const double gamma = 0.5;
    const ProcessModel m = ProcessModel::ar_arch(0.3, 1.0, InnovationDist::normal());
    const WeightedMeasure w = WeightedMeasure::power(gamma + 1.0);
    auto scaled = [&](double y) { return H_m(m, Field::pdf, w, y) * std::pow(1.0 + std::abs(y), 2.0 - gamma); };
    double worst = 0.0;
    for (double y = -200.0; y <= 200.0; y += 5.0) {
        worst = std::max(worst, scaled(y));
    }
    CHECK(std::isfinite(worst));
    CHECK(scaled(1000.0) <= worst);
    CHECK(scaled(1000.0) == doctest::Approx(scaled(500.0)).epsilon(0.1));
}

TEST_CASE("coupled squared CDF distance against the energy-distance identity") {
    const ProcessModel m = ProcessModel::ar1(1.0 / 1.5, InnovationDist::normal());
    const WeightedMeasure leb = WeightedMeasure::power(0.0);
    for (auto [y, ys] : {std::pair{0.0, 1.5}, std::pair{-2.0, 1.0}, std::pair{0.3, 0.31}}) {
        const double d = (y - ys) / 1.5;
        CHECK(coupled_sq_distance(m, Field::cdf, leb, y, ys) == doctest::Approx(normal_cdf_l2_sq(d)).epsilon(1e-7));
    }
}

TEST_CASE("projection bounds for a Gaussian AR(1) match the closed-form mean") {
    const double a = 0.5;
    const ProcessModel m = ProcessModel::ar1(a, InnovationDist::normal());
    const WeightedMeasure leb = WeightedMeasure::power(0.0);
    for (std::size_t j : {0u, 2u, 5u}) {
        const ProjBound b = proj_bound_estimate(m, Field::cdf, leb, j, 4000, SeedToken{12, 0, 2});
        const double c = std::pow(a, static_cast<double>(j + 1));
        const double exact = std::sqrt(2.0 / std::numbers::pi) * (std::sqrt(2.0 + 2.0 * c * c) - std::numbers::sqrt2);
        CHECK(std::abs(b.mean_sq - exact) <= 4.0 * b.mean_sq_se);
    }
}

TEST_CASE("projection bounds vanish beyond lag 0 for an iid model") {
    const ProcessModel m = ProcessModel::iid(InnovationDist::normal());
    const ProjBound b = proj_bound_estimate(m, Field::pdf, WeightedMeasure::power(0.0), 3, 1000, SeedToken{13, 0, 2});
    CHECK(b.value <= 2.0 * b.se + 1e-12);
}

TEST_CASE("AR(1) projection bounds decay at rate alpha") {
    const ProcessModel m = ProcessModel::ar1(0.5, InnovationDist::normal());
    std::vector<double> js;
    std::vector<double> lv;
    for (std::size_t j = 2; j <= 10; ++j) {
        js.push_back(static_cast<double>(j));
        lv.push_back(std::log(proj_bound_estimate(m, Field::pdf, WeightedMeasure::power(0.0), j, 2000, SeedToken{14, j, 2}).value));
    }
    CHECK(fit_line(js, lv).slope == doctest::Approx(std::log(0.5)).epsilon(0.05 / std::log(2.0)));
}

TEST_CASE("sigma estimates: iid, geometric and long-memory coefficients") {
    const WeightedMeasure w0 = WeightedMeasure::power(0.0);
    const SigmaEstimate iid = sigma_hm_estimate(ProcessModel::iid(InnovationDist::normal()), Field::pdf, w0, 8, 1000, SeedToken{15, 0, 2});
    CHECK(iid.partial_sum == doctest::Approx(iid.terms[0].value).epsilon(1e-12));
    CHECK(iid.tail_estimate == 0.0);

    const ProcessModel geo = ProcessModel::linear(CoeffSpec::geometric(0.5, 60), InnovationDist::normal());
    const SigmaEstimate g = sigma_hm_estimate(geo, Field::pdf, w0, 30, 1000, SeedToken{16, 0, 2});
    CHECK(g.summable);
    CHECK(g.tail_estimate < 0.01 * g.partial_sum);
}

TEST_CASE("GMC rates") {
    for (double a : {0.5, 0.9}) {
        const GmcFit f = gmc_rate_fit(ProcessModel::ar1(a, InnovationDist::normal()), 1.0, {1, 3, 5, 8}, 1000, SeedToken{17, 0, 2});
        CHECK(f.r_hat == doctest::Approx(a).epsilon(0.02 / a));
    }
    const ProcessModel arch = ProcessModel::ar_arch(0.3, 1.0, InnovationDist::normal());
    CHECK(shifted_abs_moment(InnovationDist::normal(), 0.3, 1.0) == doctest::Approx(0.3 + std::sqrt(2.0 / std::numbers::pi)));
    CHECK_THROWS_AS(gmc_rate_fit(arch, 1.0, {1, 5, 10}, 1000, SeedToken{18, 0, 2}), ConfigError);
    const double gate = shifted_abs_moment(InnovationDist::normal(), 0.3, 0.25);
    REQUIRE(gate < 1.0);
    const GmcFit f = gmc_rate_fit(arch, 0.25, {1, 5, 10, 15, 20}, 1000, SeedToken{18, 0, 2});
    CHECK(f.r_hat < 1.0);
    CHECK(f.r_hat <= gate * 1.02);
}

TEST_CASE("coefficient tail sums") {
    const CoeffSpec geo = CoeffSpec::geometric(0.5, 40);
    for (std::size_t n : {1u, 5u, 60u}) {
        CHECK(tail_power_sum(geo, n, 2.0) == doctest::Approx(std::pow(0.25, static_cast<double>(n)) / 0.75).epsilon(1e-10));
    }
    CHECK(tail_sums(CoeffSpec::explicit_coeffs({1.0}), 1.0, 1).A2 == 0.0);
    const CoeffSpec lm = CoeffSpec::longmem(0.9, 1000);
    for (std::size_t n : {10u, 500u, 5000u}) {
        double head = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            head += std::pow(static_cast<double>(i), -1.8);
        }
        CHECK(tail_power_sum(lm, n, 2.0) == doctest::Approx(boost::math::zeta(1.8) - head).epsilon(1e-8));
    }
    CHECK(std::isinf(tail_power_sum(CoeffSpec::longmem(0.6, 100), 10, 1.0)));
}

TEST_CASE("theta terms of a long-memory law with p = 1 decay like n^-1.3") {
    const std::vector<double> th = theta_sequence(CoeffSpec::longmem(0.9), 1.0, 100000);
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t k = 20000; k <= 100000; k += 10000) {
        lx.push_back(std::log(static_cast<double>(k)));
        ly.push_back(std::log(th[k]));
    }
    CHECK(fit_line(lx, ly).slope == doctest::Approx(-1.3).epsilon(0.05 / 1.3));
    // The suffix-sum recursion agrees with the direct formula.
    const TailSums t = tail_sums(CoeffSpec::longmem(0.9), 1.0, 400);
    CHECK(t.theta == doctest::Approx(th[400]).epsilon(1e-10));
}

TEST_CASE("moment conditions") {
    const ConditionCheck intf = intf_condition(ProcessModel::linear(CoeffSpec::geometric(0.5, 40), InnovationDist::normal()), 3.0, 1.0);
    CHECK(intf.satisfied);
    CHECK(std::isfinite(intf.value));

    auto normal_survival = [](double t) { return std::erfc(t / std::numbers::sqrt2); };
    CHECK(gine_zinn_condition(normal_survival, 1.0, 0.0).satisfied);
    auto pareto_survival = [](double t) { return t <= 1.0 ? 1.0 : std::pow(t, -1.5); };
    CHECK_FALSE(gine_zinn_condition(pareto_survival, 1.0, 0.0).satisfied);
    const std::vector<double> sample = innovation_sample(InnovationDist::normal(), SeedToken{19, 0, 1}, 200000);
    CHECK(gine_zinn_condition(sample, 1.0, 0.0).satisfied);
    CHECK_THROWS_AS(gine_zinn_condition(normal_survival, 2.0, 0.5), ConfigError);
}

TEST_CASE("projection bound table export") {
    std::ostringstream os;
    write_proj_bounds_csv({ProjBound{1, 0.5, 0.01, 0.25, 0.001}}, os);
    CHECK(os.str().rfind("lag,estimate,se\n1,0.5,0.01", 0) == 0);
}
