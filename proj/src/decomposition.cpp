#include "depemp/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "depemp/errors.hpp"
#include "depemp/parallel.hpp"

namespace depemp {

namespace {

void require_states(const Path& path) {
    if (path.x.empty() || path.y.size() != path.x.size()) {
        throw ContractError("path has no conditioning states for its observations");
    }
}

std::vector<ConditionalLaw> laws_along(const ProcessModel& model, const Path& path) {
    std::vector<ConditionalLaw> laws;
    laws.reserve(path.size());
    for (double y : path.y) {
        laws.push_back(conditional_law(model, y));
    }
    return laws;
}

// Integral over the real line of fn against the innovation law after the
// affine map x = mu + s u, with g's kinks and jumps as breakpoints.
double integrate_against_innovation(const InnovationDist& eps, double mu, double s, const TestFunction& g) {
    std::vector<double> br;
    for (double b : g.breakpoints()) {
        br.push_back((b - mu) / s);
    }
    auto integrand = [&](double u) { return g.g(mu + s * u) * innovation_pdf(eps, u); };
    if (eps.family() == Family::uniform) {
        std::vector<double> pts{eps.lo(), eps.hi()};
        for (double b : br) {
            if (b > eps.lo() && b < eps.hi()) {
                pts.push_back(b);
            }
        }
        std::sort(pts.begin(), pts.end());
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            total += integrate(integrand, pts[i], pts[i + 1], 1e-13);
        }
        return total;
    }
    br.push_back(0.0);
    return integrate_line(integrand, br, 1e-13);
}

}  // namespace

CondEmp cond_emp(const ProcessModel& model, const Path& path, double x) {
    require_states(path);
    CondEmp out;
    for (double y : path.y) {
        const ConditionalLaw law = conditional_law(model, y);
        out.F += law.cdf(x);
        out.f += law.pdf(x);
    }
    const double n = static_cast<double>(path.size());
    out.F /= n;
    out.f /= n;
    return out;
}

DecompResult decompose_rn(const ProcessModel& model, const Path& path, const LawEvaluator& law, double s) {
    require_states(path);
    const double root_n = std::sqrt(static_cast<double>(path.size()));
    const double Fn = empirical_cdf(path.x, s);
    const double Ft = cond_emp(model, path, s).F;
    const double F = law.cdf(s);
    DecompResult r;
    r.total = root_n * (Fn - F);
    r.martingale = root_n * (Fn - Ft);
    r.drift = root_n * (Ft - F);
    r.residual = std::abs(r.martingale + r.drift - r.total);
    return r;
}

double conditional_mean(const ProcessModel& model, const TestFunction& g, double y) {
    const ConditionalLaw law = conditional_law(model, y);
    return integrate_against_innovation(model.innovation(), law.location(), law.scale(), g);
}

DecompResult decompose_indexed(const ProcessModel& model, const Path& path, const TestFunction& g, double Eg) {
    require_states(path);
    const std::size_t n = path.size();
    const double nd = static_cast<double>(n);
    const double root_n = std::sqrt(nd);
    const std::vector<ConditionalLaw> laws = laws_along(model, path);

    double sum_g = 0.0;
    double sum_cond = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_g += g.g(path.x[i]);
        sum_cond += integrate_against_innovation(model.innovation(), laws[i].location(), laws[i].scale(), g);
    }

    // Second route: integrate g against the mixture density f~_n over x.
    std::vector<double> br = g.breakpoints();
    const InnovationDist& eps = model.innovation();
    if (eps.family() == Family::uniform) {
        for (const auto& law : laws) {
            br.push_back(law.location() + law.scale() * eps.lo());
            br.push_back(law.location() + law.scale() * eps.hi());
        }
    } else {
        double lo = laws.front().location();
        double hi = lo;
        for (const auto& law : laws) {
            lo = std::min(lo, law.location());
            hi = std::max(hi, law.location());
        }
        br.push_back(lo);
        br.push_back(hi);
        br.push_back(0.5 * (lo + hi));
    }
    auto mixture = [&](double x) {
        double f = 0.0;
        for (const auto& law : laws) {
            f += law.pdf(x);
        }
        return g.g(x) * f / nd;
    };
    double integral = 0.0;
    if (eps.family() == Family::uniform) {
        std::sort(br.begin(), br.end());
        br.erase(std::unique(br.begin(), br.end()), br.end());
        for (std::size_t i = 0; i + 1 < br.size(); ++i) {
            integral += integrate(mixture, br[i], br[i + 1], 1e-12, 18, 1e-15);
        }
    } else {
        integral = integrate_line(mixture, br, 1e-12);
    }
    if (!std::isfinite(integral)) {
        throw NumericError("quadrature of g against the conditional mixture density failed");
    }

    DecompResult r;
    r.total = root_n * (sum_g / nd - Eg);
    r.martingale = (sum_g - sum_cond) / root_n;
    r.drift = root_n * (integral - Eg);
    r.residual = std::abs(r.martingale + r.drift - r.total);
    return r;
}

MartingaleReport martingale_diagnostic(const ProcessModel& model, const MartingaleConfig& cfg) {
    if (cfg.reps < 1000) {
        throw ContractError("martingale_diagnostic requires at least 1000 replications");
    }
    if (cfg.n < static_cast<std::size_t>(cfg.max_lag) + 2 || cfg.s_values.empty()) {
        throw ContractError("martingale_diagnostic needs n > max_lag + 1 and at least one s value");
    }
    const std::size_t S = cfg.s_values.size();
    const std::size_t K = static_cast<std::size_t>(cfg.max_lag);
    // Per replication and s: mean of d, mean of d^2, and mean of d_i d_{i+k}.
    const std::size_t stride = S * (2 + K);
    std::vector<double> stats(cfg.reps * stride, 0.0);

    parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
        const Path path = simulate(model, cfg.n, cfg.seed.with_replication(r));
        const std::size_t n = path.size();
        // Misspecified conditioning pairs X_i with Y_i, available for i < n.
        const std::size_t m = cfg.misspecified ? n - 1 : n;
        std::vector<double> d(m);
        double* out = &stats[r * stride];
        for (std::size_t si = 0; si < S; ++si) {
            const double s = cfg.s_values[si];
            for (std::size_t i = 0; i < m; ++i) {
                const double state = cfg.misspecified ? path.y[i + 1] : path.y[i];
                d[i] = (path.x[i] <= s ? 1.0 : 0.0) - conditional_law(model, state).cdf(s);
            }
            double sum = 0.0;
            double sq = 0.0;
            for (double v : d) {
                sum += v;
                sq += v * v;
            }
            double* slot = out + si * (2 + K);
            slot[0] = sum / static_cast<double>(m);
            slot[1] = sq / static_cast<double>(m);
            for (std::size_t k = 1; k <= K; ++k) {
                double c = 0.0;
                for (std::size_t i = 0; i + k < m; ++i) {
                    c += d[i] * d[i + k];
                }
                slot[1 + k] = c / static_cast<double>(m - k);
            }
        }
    });

    const double R = static_cast<double>(cfg.reps);
    auto mean_se = [&](std::size_t si, std::size_t j) {
        double s = 0.0;
        double s2 = 0.0;
        for (std::size_t r = 0; r < cfg.reps; ++r) {
            const double v = stats[r * stride + si * (2 + K) + j];
            s += v;
            s2 += v * v;
        }
        const double mean = s / R;
        const double var = std::max(0.0, (s2 - R * mean * mean) / (R - 1.0));
        return std::pair{mean, std::sqrt(var / R)};
    };

    MartingaleReport rep;
    for (std::size_t si = 0; si < S; ++si) {
        MartingalePoint p;
        p.s = cfg.s_values[si];
        std::tie(p.mean, p.mean_se) = mean_se(si, 0);
        p.mean_ok = std::abs(p.mean) <= cfg.z_crit * p.mean_se;
        const double var = mean_se(si, 1).first;
        for (std::size_t k = 1; k <= K; ++k) {
            const auto [c, se] = mean_se(si, 1 + k);
            LagCheck lc;
            lc.lag = static_cast<int>(k);
            lc.corr = var > 0.0 ? c / var : 0.0;
            lc.se = var > 0.0 ? se / var : 0.0;
            lc.ok = std::abs(c) <= cfg.z_crit * se;
            p.lags.push_back(lc);
            rep.pass = rep.pass && lc.ok;
        }
        rep.pass = rep.pass && p.mean_ok;
        rep.points.push_back(std::move(p));
    }
    return rep;
}

}  // namespace depemp
