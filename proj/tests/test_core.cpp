#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"

#include "depemp/errors.hpp"
#include "depemp/innovations.hpp"
#include "depemp/quadrature.hpp"
#include "depemp/rng.hpp"

using namespace depemp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("splitmix64 reproduces the reference output for state zero") {
    CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("Philox streams are deterministic and separated by token fields") {
    const SeedToken base{123, 4, 1};
    Philox a(base);
    Philox b(base);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    std::set<std::uint64_t> firsts;
    for (const SeedToken& t : {base, base.with_replication(5), base.with_role(StreamRole::coupling), base.child(0),
                               base.child(1), SeedToken{124, 4, 1}}) {
        Philox g(t);
        firsts.insert(g.next_u64());
    }
    CHECK(firsts.size() == 6);
}

TEST_CASE("uniform draws stay in the open unit interval with the right moments") {
    Philox g(SeedToken{7, 0, 1});
    std::vector<double> u(200000);
    bool inside = true;
    for (auto& v : u) {
        v = g.uniform();
        inside = inside && v > 0.0 && v < 1.0;
    }
    CHECK(inside);
    const double se = std::sqrt(1.0 / 12.0 / static_cast<double>(u.size()));
    CHECK(std::abs(mean_of(u) - 0.5) < 4.0 * se);
    CHECK(var_of(u) == doctest::Approx(1.0 / 12.0).epsilon(0.01));
}

TEST_CASE("gamma draws match shape mean and variance") {
    for (double shape : {0.4, 2.5}) {
        Philox g(SeedToken{11, 0, 1});
        std::vector<double> x(200000);
        for (auto& v : x) {
            v = g.gamma(shape);
        }
        const double se = std::sqrt(shape / static_cast<double>(x.size()));
        CHECK(std::abs(mean_of(x) - shape) < 4.0 * se);
        CHECK(var_of(x) == doctest::Approx(shape).epsilon(0.03));
    }
}

TEST_CASE("adaptive quadrature on textbook integrals") {
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::exp(-x * x); }, -kInf, kInf) ==
          doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-11));
    CHECK(integrate([](double x) { return 1.0 / (x * x); }, 1.0, kInf) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(integrate([](double x) { return x; }, 2.0, 0.0) == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(integrate_line([](double x) { return std::abs(x) * std::exp(-std::abs(x)); }, {0.0}) ==
          doctest::Approx(2.0).epsilon(1e-11));
}

TEST_CASE("integrate_line handles panels with negligible mass") {
    // Break points deep in the tail leave panels whose integral is ~1e-300.
    const double phi_total =
        integrate_line([](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }, {30.0, 35.0, -40.0}, 1e-12);
    CHECK(phi_total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("simpson is exact on cubics") {
    CHECK(simpson([](double x) { return x * x * x - 2.0 * x; }, -1.0, 3.0, 5) == doctest::Approx(12.0).epsilon(1e-14));
}

TEST_CASE("fit_line recovers an exact line and reports a zero standard error") {
    std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y;
    for (double v : x) {
        y.push_back(0.5 - 1.5 * v);
    }
    const LineFit f = fit_line(x, y);
    CHECK(f.slope == doctest::Approx(-1.5));
    CHECK(f.intercept == doctest::Approx(0.5));
    CHECK(f.slope_se == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f.r_squared == doctest::Approx(1.0));
}

TEST_CASE("student-t quantile table values") {
    CHECK(student_t_quantile(5.0, 0.975) == doctest::Approx(2.5705818366).epsilon(1e-9));
    CHECK(student_t_quantile(1.0, 0.75) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tail_slope separates integrable and divergent power tails") {
    const TailSlope thin = tail_slope([](double x) { return std::pow(1.0 + std::abs(x), -3.0); }, 1);
    CHECK_FALSE(thin.divergent);
    CHECK(thin.exponent == doctest::Approx(-3.0).epsilon(0.01));
    CHECK(tail_slope([](double x) { return 1.0 / (1.0 + std::abs(x)); }, -1).divergent);
}

TEST_CASE("standard normal density values") {
    const InnovationDist n = InnovationDist::normal();
    const DensityEval at0 = innovation_eval(n, 0.0);
    CHECK(at0.f == doctest::Approx(0.3989422804).epsilon(1e-10));
    CHECK(at0.f1 == doctest::Approx(0.0));
    CHECK(at0.F == doctest::Approx(0.5));
    CHECK(innovation_eval(n, 1.0).f1 == doctest::Approx(-0.2419707245).epsilon(1e-9));
}

TEST_CASE("logistic tails and closed-form CDF") {
    const InnovationDist l = InnovationDist::logistic(1.5);
    for (double x : {-4.0, -0.3, 0.0, 2.0, 7.0}) {
        CHECK(innovation_cdf(l, x) == doctest::Approx(1.0 / (1.0 + std::exp(-x / 1.5))).epsilon(1e-14));
    }
    const DensityEval far = innovation_eval(l, 800.0);
    CHECK(far.f == doctest::Approx(0.0));
    CHECK(far.F == doctest::Approx(1.0));
}

TEST_CASE("student-t with one degree of freedom is Cauchy") {
    const InnovationDist t = InnovationDist::student_t(1.0, 2.0);
    for (double x : {-10.0, -1.0, 0.5, 3.0}) {
        const double z = x / 2.0;
        CHECK(innovation_cdf(t, x) == doctest::Approx(0.5 + std::atan(z) / std::numbers::pi).epsilon(1e-13));
        CHECK(innovation_pdf(t, x) == doctest::Approx(1.0 / (std::numbers::pi * 2.0 * (1.0 + z * z))).epsilon(1e-13));
    }
}

TEST_CASE("density derivatives agree with central differences") {
    for (const InnovationDist& d : {InnovationDist::normal(0.7), InnovationDist::logistic(1.2), InnovationDist::student_t(4.0, 1.3)}) {
        for (double x : {-2.3, -0.4, 0.0, 0.9, 3.1}) {
            const double h = 1e-5;
            const DensityEval e = innovation_eval(d, x);
            const double f1 = (innovation_pdf(d, x + h) - innovation_pdf(d, x - h)) / (2 * h);
            const double f2 = (innovation_eval(d, x + h).f1 - innovation_eval(d, x - h).f1) / (2 * h);
            const double F1 = (innovation_cdf(d, x + h) - innovation_cdf(d, x - h)) / (2 * h);
            CHECK(e.f1 == doctest::Approx(f1).epsilon(1e-6));
            CHECK(e.f2 == doctest::Approx(f2).epsilon(1e-6));
            CHECK(e.f == doctest::Approx(F1).epsilon(1e-6));
        }
    }
}

TEST_CASE("quantile inverts the CDF") {
    for (const InnovationDist& d : {InnovationDist::normal(), InnovationDist::logistic(), InnovationDist::student_t(3.0),
                                    InnovationDist::uniform(-1.0, 3.0)}) {
        for (double p : {0.001, 0.2, 0.5, 0.93}) {
            CHECK(innovation_cdf(d, innovation_quantile(d, p)) == doctest::Approx(p).epsilon(1e-10));
        }
    }
    CHECK_THROWS_AS(innovation_quantile(InnovationDist::normal(), 1.0), ContractError);
}

TEST_CASE("innovation samples are reproducible and have the right variance") {
    const InnovationDist n = InnovationDist::normal();
    const SeedToken seed{2026, 0, 1};
    CHECK(innovation_sample(n, seed, 1000) == innovation_sample(n, seed, 1000));
    CHECK(innovation_sample(n, seed, 1000) != innovation_sample(n, seed.with_replication(1), 1000));
    const std::vector<double> big = innovation_sample(n, seed, 1000000);
    // Var of the sample variance is 2/n for a normal law: 4 sigma is 0.0057.
    CHECK(var_of(big) >= 0.99);
    CHECK(var_of(big) <= 1.01);
    for (const InnovationDist& d : {InnovationDist::logistic(0.5), InnovationDist::student_t(6.0), InnovationDist::uniform(2.0, 5.0)}) {
        const std::vector<double> x = innovation_sample(d, seed, 400000);
        CHECK(mean_of(x) == doctest::Approx(d.mean()).epsilon(0.01).scale(1.0));
        CHECK(var_of(x) == doctest::Approx(d.variance()).epsilon(0.03));
    }
}

TEST_CASE("moment gate rejects heavy tails") {
    const InnovationDist t3 = InnovationDist::student_t(3.0);
    CHECK_FALSE(t3.has_moment(5.0));
    CHECK(t3.has_moment(2.5));
    CHECK_THROWS_AS(t3.require_moment(5.0, "fourth moment plus gamma"), ConfigError);
    CHECK_NOTHROW(InnovationDist::normal().require_moment(12.0, "anything"));
}

TEST_CASE("invalid innovation parameters are configuration errors") {
    CHECK_THROWS_AS(InnovationDist::normal(0.0), ConfigError);
    CHECK_THROWS_AS(InnovationDist::logistic(-1.0), ConfigError);
    CHECK_THROWS_AS(InnovationDist::student_t(0.0), ConfigError);
    CHECK_THROWS_AS(InnovationDist::uniform(1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(innovation_eval(InnovationDist::normal(), kInf), ContractError);
}

TEST_CASE("shifted absolute moments against closed forms") {
    const InnovationDist n = InnovationDist::normal();
    CHECK(shifted_abs_moment(n, 0.0, 2.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(shifted_abs_moment(n, 0.0, 1.0) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-10));
    CHECK(shifted_abs_moment(n, 0.3, 1.0) == doctest::Approx(0.3 + std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-10));
}

TEST_CASE("tail cutoff leaves density and tail mass below the level") {
    for (const InnovationDist& d : {InnovationDist::normal(), InnovationDist::logistic(), InnovationDist::student_t(5.0)}) {
        const double T = tail_cutoff(d, 1e-10);
        CHECK(innovation_pdf(d, T) < 1e-10);
        CHECK(1.0 - innovation_cdf(d, T) < 1e-10);
        CHECK(innovation_cdf(d, -T) < 1e-10);
    }
}
