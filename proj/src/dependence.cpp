#include "depemp/dependence.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <tuple>

#include "depemp/errors.hpp"
#include "depemp/parallel.hpp"
#include "depemp/quadrature.hpp"

namespace depemp {

namespace {

constexpr std::size_t kThetaNodes = 2001;

double sq_distance_with_cutoff(const ProcessModel& model, Field h, const WeightedMeasure& m, double y, double ys,
                               double cutoff) {
    const ConditionalLaw a = conditional_law(model, y);
    const ConditionalLaw b = conditional_law(model, ys);
    const double lo = std::min(a.location() - a.scale() * cutoff, b.location() - b.scale() * cutoff);
    const double hi = std::max(a.location() + a.scale() * cutoff, b.location() + b.scale() * cutoff);
    auto integrand = [&](double t) {
        const double d = field_value(a, h, t) - field_value(b, h, t);
        return d * d * m.weight(t);
    };
    return simpson(integrand, lo, hi, kThetaNodes);
}

double innovation_cutoff(const InnovationDist& eps) {
    return tail_cutoff(eps, 1e-12);
}

std::pair<double, double> mean_and_se(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    const double mean = s / n;
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, n > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0};
}

ProjBound to_bound(std::size_t j, const std::vector<double>& d) {
    ProjBound b;
    b.j = j;
    std::tie(b.mean_sq, b.mean_sq_se) = mean_and_se(d);
    b.value = std::sqrt(std::max(b.mean_sq, 0.0));
    b.se = b.value > 0.0 ? b.mean_sq_se / (2.0 * b.value) : 0.0;
    return b;
}

double euler_maclaurin_zeta_tail(double s, double M) {
    // sum_{i >= M} i^{-s} for s > 1.
    return std::pow(M, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(M, -s) + s * std::pow(M, -s - 1.0) / 12.0 -
           s * (s + 1.0) * (s + 2.0) * std::pow(M, -s - 3.0) / 720.0;
}

}  // namespace

Field parse_field(const std::string& name) {
    if (name == "cdf") {
        return Field::cdf;
    }
    if (name == "pdf") {
        return Field::pdf;
    }
    if (name == "pdf_dtheta") {
        return Field::pdf_dtheta;
    }
    throw ConfigError("unknown conditional-law field '" + name + "' (expected cdf, pdf or pdf_dtheta)");
}

std::string field_name(Field h) {
    switch (h) {
        case Field::cdf: return "cdf";
        case Field::pdf: return "pdf";
        case Field::pdf_dtheta: return "pdf_dtheta";
    }
    return "?";
}

double field_value(const ConditionalLaw& law, Field h, double theta) {
    switch (h) {
        case Field::cdf: return law.cdf(theta);
        case Field::pdf: return law.pdf(theta);
        case Field::pdf_dtheta: return law.dpdf_dx(theta);
    }
    return 0.0;
}

double field_dy(const ConditionalLaw& law, Field h, double theta) {
    switch (h) {
        case Field::cdf: return law.dcdf_dy(theta);
        case Field::pdf: return law.dpdf_dy(theta);
        case Field::pdf_dtheta: return law.d2pdf_dxdy(theta);
    }
    return 0.0;
}

double coupled_sq_distance(const ProcessModel& model, Field h, const WeightedMeasure& m, double y, double y_star) {
    return sq_distance_with_cutoff(model, h, m, y, y_star, innovation_cutoff(model.innovation()));
}

ProjBound proj_bound_estimate(const ProcessModel& model, Field h, const WeightedMeasure& m, std::size_t j,
                              std::size_t reps, const SeedToken& seed, unsigned threads) {
    if (reps < 1000) {
        throw ContractError("proj_bound_estimate requires at least 1000 replications");
    }
    const double cutoff = innovation_cutoff(model.innovation());
    // A divergent weighted tail shows up in the integrand at the edge of the rule.
    {
        const ConditionalLaw law = conditional_law(model, 0.0);
        const double edge = law.location() + 2.0 * cutoff * law.scale();
        const double v = field_value(law, h, edge);
        if (!std::isfinite(v * v * m.weight(edge))) {
            std::ostringstream os;
            os << "weighted integrand is not finite at the quadrature edge for weight exponent " << m.exponent();
            throw NumericError(os.str());
        }
    }
    std::vector<double> d(reps);
    parallel_for(reps, threads, [&](std::size_t r) {
        const auto [y, ys] = coupled_state(model, j, seed.with_replication(r));
        d[r] = sq_distance_with_cutoff(model, h, m, y, ys, cutoff);
    });
    return to_bound(j, d);
}

SigmaEstimate sigma_hm_estimate(const ProcessModel& model, Field h, const WeightedMeasure& m, std::size_t J_max,
                                std::size_t reps, const SeedToken& seed, unsigned threads) {
    if (J_max < 5) {
        throw ContractError("sigma_hm_estimate requires J_max >= 5");
    }
    if (reps < 1000) {
        throw ContractError("sigma_hm_estimate requires at least 1000 replications");
    }
    const double cutoff = innovation_cutoff(model.innovation());
    const std::size_t J = J_max + 1;
    std::vector<double> d(reps * J);
    parallel_for(reps, threads, [&](std::size_t r) {
        const auto pairs = simulate_coupled(model, J_max, seed.with_replication(r));
        for (std::size_t j = 0; j < J; ++j) {
            d[r * J + j] = sq_distance_with_cutoff(model, h, m, pairs[j].first, pairs[j].second, cutoff);
        }
    });
    SigmaEstimate out;
    std::vector<double> col(reps);
    for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t r = 0; r < reps; ++r) {
            col[r] = d[r * J + j];
        }
        out.terms.push_back(to_bound(j, col));
        out.partial_sum += out.terms.back().value;
    }

    // Tail fit on the last half of the lags with positive values.
    std::vector<double> js;
    std::vector<double> logj;
    std::vector<double> logv;
    for (std::size_t j = J_max / 2; j <= J_max; ++j) {
        const double v = out.terms[j].value;
        if (v > 0.0) {
            js.push_back(static_cast<double>(j));
            logj.push_back(std::log(static_cast<double>(j + 1)));
            logv.push_back(std::log(v));
        }
    }
    if (js.empty() || (js.size() < 3 && out.terms[J_max].value == 0.0)) {
        out.tail_model = "zero";
        return out;
    }
    if (js.size() < 3) {
        throw NumericError("no decay detected: too few positive lags for a tail fit");
    }
    const LineFit geo = fit_line(js, logv);
    const LineFit pow_fit = fit_line(logj, logv);
    if (geo.slope >= 0.0) {
        throw NumericError("no decay detected: coupling bounds do not decrease over the fitted lags");
    }
    const double last = static_cast<double>(J_max);
    if (geo.sse <= pow_fit.sse) {
        out.tail_model = "geometric";
        out.tail_slope = geo.slope;
        const double r = std::exp(geo.slope);
        const double v_last = std::exp(geo.intercept + geo.slope * last);
        out.tail_estimate = v_last * r / (1.0 - r);
        out.summable = true;
    } else {
        out.tail_model = "power";
        out.tail_slope = pow_fit.slope;
        if (pow_fit.slope >= -1.0) {
            out.summable = false;
            out.tail_estimate = std::numeric_limits<double>::infinity();
        } else {
            // sum_{j > J} c (j + 1)^b with b < -1.
            const double c = std::exp(pow_fit.intercept);
            const double s = -pow_fit.slope;
            out.tail_estimate = c * euler_maclaurin_zeta_tail(s, last + 2.0);
        }
    }
    return out;
}

double H_m(const ProcessModel& model, Field h, const WeightedMeasure& m, double y) {
    const ConditionalLaw law = conditional_law(model, y);
    auto integrand = [&](double t) {
        const double d = field_dy(law, h, t);
        return d * d;
    };
    const double mu = law.location();
    const double s = law.scale();
    return m.integrate(integrand, {mu, mu - s, mu + s}, 1e-10);
}

double rho_m_distance(const ProcessModel& model, const WeightedMeasure& m, double y1, double y2, Field h) {
    if (y1 == y2) {
        return 0.0;
    }
    const double lo = std::min(y1, y2);
    const double hi = std::max(y1, y2);
    std::vector<double> br{lo};
    if (lo < 0.0 && hi > 0.0) {
        br.push_back(0.0);
    }
    br.push_back(hi);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
        total += integrate([&](double y) { return std::sqrt(H_m(model, h, m, y)); }, br[i], br[i + 1], 1e-9, 10);
    }
    return total;
}

GmcFit gmc_rate_fit(const ProcessModel& model, double beta_exp, const std::vector<std::size_t>& n_list,
                    std::size_t reps, const SeedToken& seed, unsigned threads) {
    if (!(beta_exp > 0.0)) {
        throw ConfigError("gmc_rate_fit requires beta > 0");
    }
    if (n_list.size() < 2 || !std::is_sorted(n_list.begin(), n_list.end())) {
        throw ConfigError("gmc_rate_fit needs at least two increasing n values");
    }
    model.innovation().require_moment(beta_exp, "the geometric-moment contraction fit");
    if (const auto* arch = std::get_if<ArArchModel>(&model.kind())) {
        const double r = shifted_abs_moment(model.innovation(), std::abs(arch->alpha), beta_exp);
        if (!(r < 1.0)) {
            std::ostringstream os;
            os << "E[(|alpha| + |eps|)^" << beta_exp << "] = " << r << " >= 1: no contraction at this moment order";
            throw ConfigError(os.str());
        }
    }
    const std::size_t N = n_list.back();
    const std::size_t K = n_list.size();
    std::vector<double> vals(reps * K);
    parallel_for(reps, threads, [&](std::size_t r) {
        const auto pairs = simulate_coupled(model, N, seed.with_replication(r));
        for (std::size_t k = 0; k < K; ++k) {
            const auto& p = pairs[n_list[k]];
            vals[r * K + k] = std::pow(std::abs(p.first - p.second), beta_exp);
        }
    });
    GmcFit fit;
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t k = 0; k < K; ++k) {
        double s = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            s += vals[r * K + k];
        }
        const double mean = s / static_cast<double>(reps);
        fit.moments.push_back(mean);
        if (mean > 0.0) {
            xs.push_back(static_cast<double>(n_list[k]));
            ys.push_back(std::log(mean));
        }
    }
    if (xs.size() < 2) {
        throw NumericError("coupled distance vanished; no contraction rate to fit");
    }
    const LineFit lf = fit_line(xs, ys);
    fit.r_hat = std::exp(lf.slope);
    fit.C_hat = std::exp(lf.intercept);
    fit.r_squared = lf.r_squared;
    fit.geometric = lf.r_squared >= 0.9;
    return fit;
}

double tail_power_sum(const CoeffSpec& spec, std::size_t n, double k) {
    switch (spec.kind) {
        case CoeffSpec::Kind::explicit_seq: {
            double s = 0.0;
            for (std::size_t i = n; i < spec.values.size(); ++i) {
                s += std::pow(std::abs(spec.values[i]), k);
            }
            return s;
        }
        case CoeffSpec::Kind::geometric: {
            const double rk = std::pow(std::abs(spec.rho), k);
            double s = 0.0;
            std::size_t i = n;
            for (; i <= spec.lag; ++i) {
                s += std::pow(rk, static_cast<double>(i));
            }
            return s + std::pow(rk, static_cast<double>(i)) / (1.0 - rk);
        }
        case CoeffSpec::Kind::longmem: {
            const double s_exp = k * spec.beta;
            if (!(s_exp > 1.0)) {
                return std::numeric_limits<double>::infinity();
            }
            double s = 0.0;
            std::size_t i = n;
            const std::size_t M = std::max<std::size_t>(spec.lag + 1, n);
            for (; i < M; ++i) {
                s += i == 0 ? 1.0 : std::pow(static_cast<double>(i), -s_exp);
            }
            return s + euler_maclaurin_zeta_tail(s_exp, static_cast<double>(std::max<std::size_t>(i, 1)));
        }
    }
    return 0.0;
}

std::vector<double> theta_sequence(const CoeffSpec& spec, double p, std::size_t n_max) {
    std::vector<double> theta(n_max + 1, 0.0);
    double A2 = tail_power_sum(spec, n_max + 1, 2.0);
    double A4 = tail_power_sum(spec, n_max + 1, 4.0);
    for (std::size_t k = n_max; k >= 1; --k) {
        const double ak = std::abs(spec.coefficient(k));
        A2 += ak * ak;
        A4 += ak * ak * ak * ak;
        const double prev = std::abs(spec.coefficient(k - 1));
        theta[k] = prev * (prev + std::sqrt(A4) + std::pow(A2, 0.5 * p));
    }
    return theta;
}

TailSums tail_sums(const CoeffSpec& spec, double p, std::size_t n) {
    if (n < 1) {
        throw ContractError("tail_sums requires n >= 1");
    }
    TailSums t;
    t.A2 = tail_power_sum(spec, n, 2.0);
    t.A4 = tail_power_sum(spec, n, 4.0);
    const double prev = std::abs(spec.coefficient(n - 1));
    t.theta = prev * (prev + std::sqrt(t.A4) + std::pow(t.A2, 0.5 * p));
    const std::vector<double> seq = theta_sequence(spec, p, n);
    for (std::size_t k = 1; k <= n; ++k) {
        t.Theta += seq[k];
    }
    return t;
}

ConditionCheck intf_condition(const ProcessModel& model, double q, double gamma) {
    if (!(q > 2.0)) {
        throw ConfigError("the conditional-density integral condition needs q > 2");
    }
    const double lambda = gamma - 1.0 + 0.5 * q;
    const WeightedMeasure w = WeightedMeasure::power(lambda);
    const InnovationDist& eps = model.innovation();

    // Law of the state Y_0: Gaussian in closed form where possible, else an
    // empirical sample from a long pilot path.
    double state_sd = -1.0;
    std::vector<double> states;
    if (model.is_iid()) {
        state_sd = 0.0;
    } else if (const auto* lin = model.as_linear(); lin != nullptr && eps.family() == Family::standard_normal) {
        double s2 = 0.0;
        for (std::size_t j = 1; j < lin->a.size(); ++j) {
            s2 += lin->a[j] * lin->a[j];
        }
        state_sd = eps.scale() * std::sqrt(s2);
    } else if (const auto* ar = std::get_if<Ar1Model>(&model.kind()); ar != nullptr && eps.family() == Family::standard_normal) {
        state_sd = eps.scale() / std::sqrt(1.0 - ar->alpha * ar->alpha);
    } else {
        const Path p = simulate(model, 4000, SeedToken{0x1A7F, 0, static_cast<std::uint64_t>(StreamRole::pilot)});
        states = p.y;
    }
    const double half_q = 0.5 * q;
    auto mean_power = [&](double u) {
        if (state_sd == 0.0) {
            return std::pow(conditional_law(model, 0.0).pdf(u), half_q);
        }
        if (state_sd > 0.0) {
            const double sd = state_sd;
            auto inner = [&](double z) {
                const double y = sd * z;
                const double phi = 0.3989422804014327 * std::exp(-0.5 * z * z);
                return std::pow(conditional_law(model, y).pdf(u), half_q) * phi;
            };
            return integrate(inner, -12.0, 12.0, 1e-10, 12);
        }
        double s = 0.0;
        for (double y : states) {
            s += std::pow(conditional_law(model, y).pdf(u), half_q);
        }
        return s / static_cast<double>(states.size());
    };
    auto integrand = [&](double u) { return mean_power(u) * w.weight(u); };

    ConditionCheck out;
    double T = 4.0 * std::max(1.0, eps.family() == Family::uniform ? std::abs(eps.hi() - eps.lo()) : eps.scale());
    double prev = integrate(integrand, -T, 0.0, 1e-9, 12) + integrate(integrand, 0.0, T, 1e-9, 12);
    bool stable = false;
    for (int k = 0; k < 24; ++k) {
        const double next = prev + integrate(integrand, -2.0 * T, -T, 1e-9, 12) + integrate(integrand, T, 2.0 * T, 1e-9, 12);
        T *= 2.0;
        const double change = std::abs(next - prev) / std::max(std::abs(next), 1e-300);
        prev = next;
        if (change < 1e-2) {
            stable = true;
            break;
        }
    }
    out.value = prev;
    const TailSlope up = tail_slope(integrand, 1);
    const TailSlope down = tail_slope(integrand, -1);
    out.satisfied = stable && std::isfinite(prev) && !up.divergent && !down.divergent;
    std::ostringstream os;
    os << "truncation T=" << T << (stable ? " (stable to 1%)" : " (not stable)") << ", tail exponents " << down.exponent
       << " / " << up.exponent;
    out.diagnostic = os.str();
    return out;
}

namespace {

struct Blocks {
    bool dyadic = false;
    double alpha = 1.0;
    double eta = 0.0;
    [[nodiscard]] double lower(std::size_t j) const {
        return dyadic ? std::ldexp(1.0, static_cast<int>(j)) : std::pow(static_cast<double>(j), alpha);
    }
    [[nodiscard]] double upper(std::size_t j) const { return lower(j + 1); }
    [[nodiscard]] double weight(std::size_t j) const {
        return dyadic ? std::pow(2.0, static_cast<double>(j) * eta) : std::pow(static_cast<double>(j), alpha * eta);
    }
    [[nodiscard]] double axis(std::size_t j) const {
        return dyadic ? static_cast<double>(j) : std::log(static_cast<double>(j));
    }
    // Convergence needs a negative log-slope per dyadic step, or below -1 in log-log.
    [[nodiscard]] double critical_slope() const { return dyadic ? 0.0 : -1.0; }
};

Blocks make_blocks(double eta, double delta) {
    if (eta < 0.0 || delta < 0.0 || eta - delta > 1.0) {
        throw ConfigError("series condition requires eta, delta >= 0 and eta - delta <= 1");
    }
    Blocks b;
    b.eta = eta;
    b.dyadic = std::abs(eta - delta - 1.0) < 1e-12;
    if (!b.dyadic) {
        b.alpha = 1.0 / (1.0 + delta - eta);
    }
    return b;
}

ConditionCheck finish_series(const Blocks& b, const std::vector<double>& axis, const std::vector<double>& terms,
                             bool vanished, const std::string& note) {
    ConditionCheck out;
    for (double t : terms) {
        out.value += t;
    }
    std::ostringstream os;
    os << (b.dyadic ? "dyadic" : "polynomial") << " blocks";
    if (!b.dyadic) {
        os << " (alpha=" << b.alpha << ")";
    }
    if (terms.size() >= 2) {
        const std::size_t start = terms.size() >= 6 ? terms.size() / 2 : 0;
        std::vector<double> xs(axis.begin() + static_cast<long>(start), axis.end());
        std::vector<double> ys;
        for (std::size_t i = start; i < terms.size(); ++i) {
            ys.push_back(std::log(terms[i]));
        }
        const LineFit lf = fit_line(xs, ys);
        out.satisfied = lf.slope < b.critical_slope();
        os << ", tail slope " << lf.slope << " vs critical " << b.critical_slope();
    } else {
        out.satisfied = vanished;
        os << ", fewer than two populated blocks";
    }
    if (vanished) {
        os << ", block probabilities vanish";
    }
    os << note;
    out.diagnostic = os.str();
    return out;
}

}  // namespace

ConditionCheck gine_zinn_condition(std::span<const double> sample, double eta, double delta) {
    if (sample.size() < 100000) {
        throw ContractError("the series condition from a sample needs at least 1e5 observations");
    }
    const Blocks b = make_blocks(eta, delta);
    std::vector<double> abs_sorted(sample.size());
    std::transform(sample.begin(), sample.end(), abs_sorted.begin(), [](double v) { return std::abs(v); });
    std::sort(abs_sorted.begin(), abs_sorted.end());
    const double n = static_cast<double>(abs_sorted.size());
    auto count_in = [&](double lo, double hi) {
        const auto a = std::lower_bound(abs_sorted.begin(), abs_sorted.end(), lo);
        const auto c = std::lower_bound(abs_sorted.begin(), abs_sorted.end(), hi);
        return static_cast<double>(c - a);
    };
    std::vector<double> axis;
    std::vector<double> terms;
    double total = 0.0;
    for (std::size_t j = 1; j < 100000; ++j) {
        const double lo = b.lower(j);
        if (lo > abs_sorted.back()) {
            break;
        }
        const double c = count_in(lo, b.upper(j));
        const double t = b.weight(j) * std::sqrt(c / n);
        total += t;
        // Blocks with fewer than five points carry no usable tail information.
        if (c >= 5.0) {
            axis.push_back(b.axis(j));
            terms.push_back(t);
        }
    }
    ConditionCheck out = finish_series(b, axis, terms, terms.size() < 2, ", sample-based");
    out.value = total;
    return out;
}

ConditionCheck gine_zinn_condition(const RealFn& abs_survival, double eta, double delta) {
    const Blocks b = make_blocks(eta, delta);
    std::vector<double> axis;
    std::vector<double> terms;
    bool vanished = false;
    const std::size_t jmax = b.dyadic ? 1000 : 1000000;
    for (std::size_t j = 1; j <= jmax; ++j) {
        const double lo = b.lower(j);
        const double hi = b.upper(j);
        if (!std::isfinite(hi)) {
            break;
        }
        const double p = std::max(0.0, abs_survival(lo) - abs_survival(hi));
        if (p <= 0.0) {
            if (abs_survival(lo) <= 0.0) {
                vanished = true;
                break;
            }
            continue;
        }
        axis.push_back(b.axis(j));
        terms.push_back(b.weight(j) * std::sqrt(p));
    }
    return finish_series(b, axis, terms, vanished, ", exact block probabilities");
}

void write_proj_bounds_csv(const std::vector<ProjBound>& rows, std::ostream& os) {
    os << "lag,estimate,se\n" << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.j << ',' << r.value << ',' << r.se << '\n';
    }
}

}  // namespace depemp
