#include "depemp/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <ostream>

#include <boost/math/tools/minima.hpp>
#include "json.hpp"

#include "depemp/digest.hpp"
#include "depemp/errors.hpp"
#include "depemp/parallel.hpp"
#include "depemp/rng.hpp"

namespace depemp {

namespace {

constexpr double kHoldTol = 1e-9;

// Incremental FNV-1a over the raw bytes of the inputs.
struct InputDigest {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    void add(double v) {
        char buf[sizeof(double)];
        std::memcpy(buf, &v, sizeof v);
        h = fnv1a64(std::string_view(buf, sizeof buf), h);
    }
    void add(std::string_view s) { h = fnv1a64(s, h); }
    [[nodiscard]] std::string str() const { return hex64(h); }
};

double rel_diff(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

std::size_t ipow(std::size_t base, std::size_t e) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < e; ++i) {
        r *= base;
    }
    return r;
}

// sup of H^2(x) (1+|x|)^e: dense and geometric grids, then Brent refinement
// around the largest local maxima.
double weighted_sup(const RealFn& H, double e, const std::vector<double>& extra) {
    auto phi = [&](double x) {
        const double h = H(x);
        return h * h * std::pow(1.0 + std::abs(x), e);
    };
    std::vector<double> xs = extra;
    xs.push_back(0.0);
    for (int i = 0; i <= 2000; ++i) {
        xs.push_back(-10.0 + 0.01 * i);
    }
    for (int k = 0; k <= 700; ++k) {
        const double t = 1e-6 * std::pow(10.0, 14.0 * k / 700.0);
        xs.push_back(t);
        xs.push_back(-t);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<double> vals(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        vals[i] = phi(xs[i]);
    }
    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        if (vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] && vals[i] > 0.0) {
            peaks.push_back(i);
        }
    }
    std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    double best = *std::max_element(vals.begin(), vals.end());
    for (std::size_t k = 0; k < std::min<std::size_t>(peaks.size(), 8); ++k) {
        const std::size_t i = peaks[k];
        const auto r = boost::math::tools::brent_find_minima([&](double x) { return -phi(x); }, xs[i - 1], xs[i + 1], 50);
        best = std::max(best, -r.second);
    }
    return best;
}

double hardy_lhs_exponent(HardyVariant v, double gamma) {
    switch (v) {
        case HardyVariant::sup_zero: return -gamma;
        case HardyVariant::int_zero: return -gamma - 1.0;
        case HardyVariant::sup_infty: return gamma;
        case HardyVariant::int_infty: return gamma - 1.0;
    }
    return 0.0;
}

}  // namespace

void DiscreteRV::validate() const {
    if (atoms.empty()) {
        throw ContractError("discrete law has no atoms");
    }
    double total = 0.0;
    for (const auto& [v, p] : atoms) {
        if (!(p >= 0.0) || !std::isfinite(v)) {
            throw ContractError("discrete law has a negative probability or non-finite value");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw ContractError("discrete law probabilities do not sum to 1");
    }
}

double DiscreteRV::mean() const {
    double m = 0.0;
    for (const auto& [v, p] : atoms) {
        m += p * v;
    }
    return m;
}

double DiscreteRV::lq_norm(double q) const {
    double s = 0.0;
    for (const auto& [v, p] : atoms) {
        s += p * std::pow(std::abs(v), q);
    }
    return std::pow(s, 1.0 / q);
}

IneqReport make_report(std::string id, double lhs, double rhs, std::string inputs_digest) {
    IneqReport r;
    r.id = std::move(id);
    r.lhs = lhs;
    r.rhs = rhs;
    r.margin = rhs - lhs;
    r.holds = lhs <= rhs + kHoldTol;
    r.inputs_digest = std::move(inputs_digest);
    return r;
}

HardyVariant parse_hardy_variant(const std::string& name) {
    if (name == "sup_zero") return HardyVariant::sup_zero;
    if (name == "int_zero") return HardyVariant::int_zero;
    if (name == "sup_infty") return HardyVariant::sup_infty;
    if (name == "int_infty") return HardyVariant::int_infty;
    throw ConfigError("unknown Hardy variant '" + name + "'");
}

std::string hardy_variant_name(HardyVariant v) {
    switch (v) {
        case HardyVariant::sup_zero: return "sup_zero";
        case HardyVariant::int_zero: return "int_zero";
        case HardyVariant::sup_infty: return "sup_infty";
        case HardyVariant::int_infty: return "int_infty";
    }
    return "?";
}

IneqReport check_hardy(const TestFunction& H, double gamma, HardyVariant variant) {
    if (!(gamma > 0.0)) {
        throw ContractError("Hardy bounds need gamma > 0");
    }
    if (!H.g1) {
        throw ContractError("Hardy bounds need the derivative of H");
    }
    const bool at_zero = variant == HardyVariant::sup_zero || variant == HardyVariant::int_zero;
    const bool is_sup = variant == HardyVariant::sup_zero || variant == HardyVariant::sup_infty;
    std::vector<double> br = H.breakpoints();
    if (at_zero) {
        if (std::abs(H.g(0.0)) > 1e-12) {
            throw ContractError("H(0) must vanish for the zero-anchored Hardy bounds");
        }
    } else {
        double peak = 0.0;
        for (double x = -10.0; x <= 10.0; x += 0.05) {
            peak = std::max(peak, std::abs(H.g(x)));
        }
        const double far = std::max(std::abs(H.g(1e8)), std::abs(H.g(-1e8)));
        const double mid = std::max(std::abs(H.g(1e4)), std::abs(H.g(-1e4)));
        if (far > 0.0 && (far > 1e-6 * std::max(1.0, peak) || far > mid)) {
            throw ContractError("H must vanish at +-infinity for the tail-anchored Hardy bounds");
        }
    }
    const double e = hardy_lhs_exponent(variant, gamma);
    const double rhs_exp = at_zero ? 1.0 - gamma : 1.0 + gamma;
    const double c = is_sup ? 1.0 / gamma : 4.0 / (gamma * gamma);
    const WeightedMeasure rhs_m = WeightedMeasure::power(rhs_exp);
    const double rhs = c * rhs_m.integrate([&](double u) { const double d = H.g1(u); return d * d; }, br, 1e-12);
    double lhs = 0.0;
    if (is_sup) {
        lhs = weighted_sup(H.g, e, br);
    } else {
        lhs = WeightedMeasure::power(e).integrate([&](double u) { const double h = H.g(u); return h * h; }, br, 1e-12);
    }
    InputDigest dg;
    dg.add(H.name);
    dg.add(gamma);
    dg.add(hardy_variant_name(variant));
    return make_report("hardy/" + hardy_variant_name(variant), lhs, rhs, dg.str());
}

IneqReport check_intsum_exact(const WindowModel& model, std::size_t n) {
    model.innovation.validate();
    const std::size_t k = model.innovation.atoms.size();
    if (k > 4 || model.window < 0 || model.window > 2 || n == 0 || n > 8) {
        throw ContractError("intsum enumeration needs k <= 4 atoms, window <= 2, 1 <= n <= 8");
    }
    const std::size_t w = static_cast<std::size_t>(model.window);
    const std::size_t N = n + w;
    if (ipow(k, N) > ipow(4, 10)) {
        throw ContractError("intsum enumeration exceeds its budget of 4^10 outcomes");
    }
    const std::size_t G = model.theta_weights.size();
    const std::size_t states = ipow(k, w + 1);
    if (G == 0 || model.h.size() != G) {
        throw ContractError("intsum needs one table row per theta grid point");
    }
    for (const auto& row : model.h) {
        if (row.size() != states) {
            throw ContractError("intsum table rows must have k^(w+1) entries");
        }
    }
    std::vector<double> p(k);
    for (std::size_t a = 0; a < k; ++a) {
        p[a] = model.innovation.atoms[a].second;
    }

    // Left side: exact variance of T_n(theta) over all k^{n+w} outcomes, two passes.
    const std::size_t outcomes = ipow(k, N);
    auto sweep = [&](auto&& visit) {
        std::vector<std::size_t> digits(N, 0);
        std::vector<std::size_t> state(n);
        for (std::size_t o = 0; o < outcomes; ++o) {
            double prob = 1.0;
            for (std::size_t t = 0; t < N; ++t) {
                prob *= p[digits[t]];
            }
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t s = 0;
                for (std::size_t t = 0; t <= w; ++t) {
                    s = s * k + digits[i + t];
                }
                state[i] = s;
            }
            visit(prob, state);
            for (std::size_t t = N; t-- > 0;) {
                if (++digits[t] < k) {
                    break;
                }
                digits[t] = 0;
            }
        }
    };
    std::vector<double> mean(G, 0.0);
    sweep([&](double prob, const std::vector<std::size_t>& state) {
        for (std::size_t g = 0; g < G; ++g) {
            double T = 0.0;
            for (std::size_t s : state) {
                T += model.h[g][s];
            }
            mean[g] += prob * T;
        }
    });
    std::vector<double> var(G, 0.0);
    sweep([&](double prob, const std::vector<std::size_t>& state) {
        for (std::size_t g = 0; g < G; ++g) {
            double T = 0.0;
            for (std::size_t s : state) {
                T += model.h[g][s];
            }
            const double d = T - mean[g];
            var[g] += prob * d * d;
        }
    });
    double lhs2 = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
        lhs2 += model.theta_weights[g] * var[g];
    }

    // Right side: P_0 h(theta, F_j) for j = 0..w from exact conditional expectations.
    double rhs_sum = 0.0;
    for (std::size_t j = 0; j <= w; ++j) {
        const std::size_t c0 = w - j + 1;
        const std::size_t suffix = w + 1 - c0;
        double lambda2 = 0.0;
        for (std::size_t g = 0; g < G; ++g) {
            std::vector<double> g0(ipow(k, c0), 0.0);
            for (std::size_t s = 0; s < states; ++s) {
                double ps = 1.0;
                std::size_t rest = s;
                for (std::size_t t = 0; t < suffix; ++t) {
                    ps *= p[rest % k];
                    rest /= k;
                }
                g0[rest] += ps * model.h[g][s];
            }
            double norm2 = 0.0;
            for (std::size_t pre = 0; pre < g0.size(); ++pre) {
                const std::size_t parent = pre / k;
                double g1 = 0.0;
                for (std::size_t a = 0; a < k; ++a) {
                    g1 += p[a] * g0[parent * k + a];
                }
                double pp = 1.0;
                std::size_t rest = pre;
                for (std::size_t t = 0; t < c0; ++t) {
                    pp *= p[rest % k];
                    rest /= k;
                }
                const double d = g0[pre] - g1;
                norm2 += pp * d * d;
            }
            lambda2 += model.theta_weights[g] * norm2;
        }
        rhs_sum += std::sqrt(lambda2);
    }
    InputDigest dg;
    dg.add(static_cast<double>(n));
    dg.add(static_cast<double>(w));
    for (const auto& [v, pr] : model.innovation.atoms) {
        dg.add(v);
        dg.add(pr);
    }
    for (std::size_t g = 0; g < G; ++g) {
        dg.add(model.theta_weights[g]);
        for (double v : model.h[g]) {
            dg.add(v);
        }
    }
    return make_report("intsum", std::sqrt(lhs2), std::sqrt(static_cast<double>(n)) * rhs_sum, dg.str());
}

IneqReport check_burkholder_exact(const MartingaleTree& tree, double q) {
    const std::size_t n = tree.steps.size();
    if (!(q > 1.0)) {
        throw ContractError("Burkholder bound needs q > 1");
    }
    if (n == 0 || n > 10 || !tree.diff) {
        throw ContractError("Burkholder enumeration needs 1 <= n <= 10 differences");
    }
    for (const auto& st : tree.steps) {
        st.validate();
        if (st.atoms.size() > 3) {
            throw ContractError("Burkholder enumeration allows binary or ternary steps only");
        }
    }
    std::vector<double> d_moment(n, 0.0);
    double s_moment = 0.0;
    std::vector<double> xi;
    xi.reserve(n);
    InputDigest dg;
    dg.add(q);

    auto visit = [&](auto&& self, double prob, double S) -> void {
        const std::size_t depth = xi.size();
        if (depth == n) {
            s_moment += prob * std::pow(std::abs(S), q);
            return;
        }
        const DiscreteRV& law = tree.steps[depth];
        std::vector<double> D(law.atoms.size());
        double cmean = 0.0;
        double cabs = 0.0;
        for (std::size_t a = 0; a < law.atoms.size(); ++a) {
            xi.push_back(law.atoms[a].first);
            D[a] = tree.diff(depth + 1, xi);
            xi.pop_back();
            cmean += law.atoms[a].second * D[a];
            cabs += law.atoms[a].second * std::abs(D[a]);
        }
        if (std::abs(cmean) > 1e-12 * (1.0 + cabs)) {
            throw ContractError("construction is not a martingale difference sequence (nonzero conditional mean at step " +
                                std::to_string(depth + 1) + ")");
        }
        for (std::size_t a = 0; a < law.atoms.size(); ++a) {
            const double pa = prob * law.atoms[a].second;
            d_moment[depth] += pa * std::pow(std::abs(D[a]), q);
            dg.add(D[a]);
            dg.add(law.atoms[a].second);
            xi.push_back(law.atoms[a].first);
            self(self, pa, S + D[a]);
            xi.pop_back();
        }
    };
    visit(visit, 1.0, 0.0);

    const double kappa = std::min(q, 2.0);
    const double C = 18.0 * std::pow(q, 1.5) / std::sqrt(q - 1.0);
    double sum = 0.0;
    for (double m : d_moment) {
        sum += std::pow(m, kappa / q);
    }
    const double lhs = std::pow(s_moment, kappa / q);
    const double rhs = std::pow(C, kappa) * sum;
    return make_report("burkholder", lhs, rhs, dg.str());
}

IneqReport check_maximal_exact(const JointLaw& law, double q) {
    if (!(q > 1.0)) {
        throw ContractError("maximal bound needs q > 1");
    }
    const std::size_t S = law.probs.size();
    if (S == 0 || law.paths.size() != S) {
        throw ContractError("joint law needs one increment path per scenario");
    }
    const std::size_t N = law.paths.front().size();
    if (N == 0 || (N & (N - 1)) != 0) {
        throw ContractError("maximal bound needs 2^d increments");
    }
    if (S * N > 10'000'000) {
        throw ContractError("maximal enumeration exceeds its budget of 1e7 scenario-steps");
    }
    double total = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        if (law.paths[s].size() != N || !(law.probs[s] >= 0.0)) {
            throw ContractError("joint law scenarios must share the length and carry nonnegative mass");
        }
        total += law.probs[s];
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw ContractError("joint law probabilities do not sum to 1");
    }
    std::size_t d = 0;
    while ((std::size_t{1} << d) < N) {
        ++d;
    }
    double max_moment = 0.0;
    std::vector<double> block_moment(d + 1, 0.0);
    std::vector<double> partial(N + 1);
    InputDigest dg;
    dg.add(q);
    for (std::size_t s = 0; s < S; ++s) {
        const double p = law.probs[s];
        dg.add(p);
        partial[0] = 0.0;
        double mx = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            dg.add(law.paths[s][i]);
            partial[i + 1] = partial[i] + law.paths[s][i];
            mx = std::max(mx, std::abs(partial[i + 1]));
        }
        max_moment += p * std::pow(mx, q);
        for (std::size_t r = 0; r <= d; ++r) {
            const std::size_t len = std::size_t{1} << r;
            for (std::size_t m = 1; m <= (N >> r); ++m) {
                block_moment[r] += p * std::pow(std::abs(partial[len * m] - partial[len * (m - 1)]), q);
            }
        }
    }
    double rhs = 0.0;
    for (double b : block_moment) {
        rhs += std::pow(b, 1.0 / q);
    }
    return make_report("maximal", std::pow(max_moment, 1.0 / q), rhs, dg.str());
}

IneqReport check_archineq(double u, double v, double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0)) {
        throw ContractError("archineq needs 0 < lambda <= 1");
    }
    auto G = [&](double y) {
        const double s = y < 0.0 ? -1.0 : 1.0;
        return s * std::expm1(lambda * std::log1p(std::abs(y))) / lambda;
    };
    const double lhs = std::abs(G(u) - G(v));
    const double rhs = std::pow(2.0, 1.0 - lambda) * std::pow(std::abs(u - v), lambda) / lambda;
    InputDigest dg;
    dg.add(u);
    dg.add(v);
    dg.add(lambda);
    return make_report("archineq", lhs, rhs, dg.str());
}

// ---------------------------------------------------------------- sweeps

namespace {

DiscreteRV random_law(Philox& rng, std::size_t k, bool centred) {
    DiscreteRV rv;
    double total = 0.0;
    std::vector<double> w(k);
    for (auto& x : w) {
        x = 0.05 + rng.uniform();
        total += x;
    }
    for (std::size_t a = 0; a < k; ++a) {
        rv.atoms.emplace_back(rng.normal() * (0.5 + 2.0 * rng.uniform()), w[a] / total);
    }
    // Exact unit mass: put the rounding residue on the last atom.
    double head = 0.0;
    for (std::size_t a = 0; a + 1 < k; ++a) {
        head += rv.atoms[a].second;
    }
    rv.atoms.back().second = 1.0 - head;
    if (centred) {
        const double m = rv.mean();
        for (auto& at : rv.atoms) {
            at.first -= m;
        }
    }
    return rv;
}

TestFunction make_fn(std::string name, RealFn g, RealFn g1, std::vector<double> kinks = {}) {
    TestFunction f;
    f.name = std::move(name);
    f.g = std::move(g);
    f.g1 = std::move(g1);
    f.kinks = std::move(kinks);
    return f;
}

IneqReport hardy_trial(Philox& rng) {
    const double gamma = 0.5 + 2.5 * rng.uniform();
    const auto variant = static_cast<HardyVariant>(std::min<std::uint64_t>(3, rng.next_u64() % 4));
    const bool at_zero = variant == HardyVariant::sup_zero || variant == HardyVariant::int_zero;
    const double a = rng.normal() * 2.0;
    const double b = 0.05 + 3.0 * rng.uniform();
    const double c = (rng.uniform() - 0.5) * 8.0;
    const int family = static_cast<int>(rng.next_u64() % (at_zero ? 5 : 4));
    TestFunction H;
    if (at_zero) {
        switch (family) {
            case 0:
                H = make_fn("x*exp(-b x^2)", [=](double x) { return a * x * std::exp(-b * x * x); },
                            [=](double x) { return a * (1.0 - 2.0 * b * x * x) * std::exp(-b * x * x); });
                break;
            case 1:
                H = make_fn("atan(b x)", [=](double x) { return a * std::atan(b * x); },
                            [=](double x) { return a * b / (1.0 + b * b * x * x); });
                break;
            case 2: {
                const double s = 0.2 + 2.0 * rng.uniform();
                H = make_fn("sin(s x)exp(-b x^2)", [=](double x) { return a * std::sin(s * x) * std::exp(-b * x * x); },
                            [=](double x) {
                                return a * (s * std::cos(s * x) - 2.0 * b * x * std::sin(s * x)) * std::exp(-b * x * x);
                            });
                break;
            }
            case 3:
                H = make_fn("x/(1+b x^2)", [=](double x) { return a * x / (1.0 + b * x * x); },
                            [=](double x) { const double d = 1.0 + b * x * x; return a * (1.0 - b * x * x) / (d * d); });
                break;
            default: {
                const double s = 0.1 + 3.0 * rng.uniform();
                H = make_fn("clamp(x/s)", [=](double x) { return a * std::clamp(x / s, -1.0, 1.0); },
                            [=](double x) { return std::abs(x) < s ? a / s : 0.0; }, {-s, s});
                break;
            }
        }
    } else {
        switch (family) {
            case 0:
                H = make_fn("exp(-b (x-c)^2)", [=](double x) { return a * std::exp(-b * (x - c) * (x - c)); },
                            [=](double x) { return -2.0 * a * b * (x - c) * std::exp(-b * (x - c) * (x - c)); });
                break;
            case 1: {
                const int k = 2 + static_cast<int>(rng.next_u64() % 2);
                H = make_fn("(1+b (x-c)^2)^-k", [=](double x) { return a * std::pow(1.0 + b * (x - c) * (x - c), -k); },
                            [=](double x) {
                                return -2.0 * k * a * b * (x - c) * std::pow(1.0 + b * (x - c) * (x - c), -k - 1);
                            });
                break;
            }
            case 2:
                H = make_fn("x*exp(-b x^2)", [=](double x) { return a * x * std::exp(-b * x * x); },
                            [=](double x) { return a * (1.0 - 2.0 * b * x * x) * std::exp(-b * x * x); });
                break;
            default: {
                const double s = 0.2 + 2.0 * rng.uniform();
                H = make_fn("sin(s x)exp(-b (x-c)^2)",
                            [=](double x) { return a * std::sin(s * x) * std::exp(-b * (x - c) * (x - c)); },
                            [=](double x) {
                                return a * (s * std::cos(s * x) - 2.0 * b * (x - c) * std::sin(s * x)) *
                                       std::exp(-b * (x - c) * (x - c));
                            });
                break;
            }
        }
    }
    InputDigest dg;
    dg.add(a);
    dg.add(b);
    dg.add(c);
    IneqReport r = check_hardy(H, gamma, variant);
    dg.add(r.inputs_digest);
    r.inputs_digest = dg.str();
    return r;
}

WindowModel random_window_model(Philox& rng, std::size_t& n) {
    WindowModel m;
    const std::size_t k = 2 + rng.next_u64() % 3;
    m.window = static_cast<int>(rng.next_u64() % 3);
    m.innovation = random_law(rng, k, false);
    n = 1 + rng.next_u64() % 8;
    while (n > 1 && ipow(k, n + static_cast<std::size_t>(m.window)) > 4096) {
        --n;
    }
    const std::size_t G = 1 + rng.next_u64() % 4;
    const std::size_t states = ipow(k, static_cast<std::size_t>(m.window) + 1);
    for (std::size_t g = 0; g < G; ++g) {
        m.theta_weights.push_back(rng.uniform() < 0.15 ? 0.0 : rng.uniform() * 2.0);
        std::vector<double> row(states);
        for (auto& v : row) {
            v = rng.normal();
        }
        m.h.push_back(std::move(row));
    }
    return m;
}

WindowModel shuffle_window_model(const WindowModel& m, Philox& rng) {
    const std::size_t k = m.innovation.atoms.size();
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = k; i > 1; --i) {
        std::swap(perm[i - 1], perm[rng.next_u64() % i]);
    }
    WindowModel out = m;
    for (std::size_t a = 0; a < k; ++a) {
        out.innovation.atoms[a] = m.innovation.atoms[perm[a]];
    }
    const std::size_t w1 = static_cast<std::size_t>(m.window) + 1;
    const std::size_t states = ipow(k, w1);
    for (std::size_t g = 0; g < m.h.size(); ++g) {
        for (std::size_t s = 0; s < states; ++s) {
            std::size_t rest = s;
            std::size_t old = 0;
            std::size_t place = 1;
            for (std::size_t t = 0; t < w1; ++t) {
                old += perm[rest % k] * place;
                rest /= k;
                place *= k;
            }
            out.h[g][s] = m.h[g][old];
        }
    }
    return out;
}

MartingaleTree random_martingale(Philox& rng) {
    MartingaleTree t;
    std::size_t n = 1 + rng.next_u64() % 10;
    std::size_t leaves = 1;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = 2 + rng.next_u64() % 2;
        if (leaves * k > 6000) {
            if (leaves * 2 > 6000) {
                break;
            }
            k = 2;
        }
        leaves *= k;
        t.steps.push_back(random_law(rng, k, true));
    }
    const std::size_t m = t.steps.size();
    std::vector<double> b(m);
    std::vector<double> c(m);
    std::vector<double> e(m);
    for (std::size_t i = 0; i < m; ++i) {
        b[i] = rng.normal();
        c[i] = rng.normal() * 2.0;
        e[i] = rng.normal();
    }
    t.diff = [b, c, e](std::size_t i, std::span<const double> xi) {
        double S = 0.0;
        for (std::size_t j = 0; j + 1 < i; ++j) {
            S += xi[j];
        }
        const double prev = i >= 2 ? xi[i - 2] : 0.0;
        return (b[i - 1] + c[i - 1] * std::tanh(S) + e[i - 1] * prev * prev) * xi[i - 1];
    };
    return t;
}

MartingaleTree shuffle_tree(const MartingaleTree& t, Philox& rng) {
    MartingaleTree out = t;
    for (auto& st : out.steps) {
        for (std::size_t i = st.atoms.size(); i > 1; --i) {
            std::swap(st.atoms[i - 1], st.atoms[rng.next_u64() % i]);
        }
    }
    return out;
}

JointLaw random_joint(Philox& rng) {
    JointLaw law;
    const std::size_t d = rng.next_u64() % 6;
    const std::size_t N = std::size_t{1} << d;
    const std::size_t S = 1 + rng.next_u64() % 64;
    const int pattern = static_cast<int>(rng.next_u64() % 4);
    double total = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        const double p = 0.01 + rng.uniform();
        law.probs.push_back(p);
        total += p;
        std::vector<double> z(N);
        const double common = rng.normal();
        for (std::size_t i = 0; i < N; ++i) {
            switch (pattern) {
                case 0: z[i] = rng.normal(); break;
                case 1: z[i] = common; break;
                case 2: z[i] = (i % 2 == 0 ? 1.0 : -1.0) * common + 0.1 * rng.normal(); break;
                default: z[i] = rng.normal() / std::max(0.05, std::abs(rng.normal())); break;
            }
        }
        law.paths.push_back(std::move(z));
    }
    double head = 0.0;
    for (std::size_t s = 0; s + 1 < S; ++s) {
        law.probs[s] /= total;
        head += law.probs[s];
    }
    law.probs.back() = 1.0 - head;
    return law;
}

}  // namespace

const std::vector<std::string>& sweep_suites() {
    static const std::vector<std::string> names{"hardy", "intsum", "burkholder", "maximal", "archineq"};
    return names;
}

SweepSummary run_sweep(const std::string& suite, std::size_t trials, std::uint64_t seed, unsigned threads) {
    const auto& names = sweep_suites();
    const auto it = std::find(names.begin(), names.end(), suite);
    if (it == names.end()) {
        throw ConfigError("unknown inequality suite '" + suite + "'");
    }
    const std::uint64_t suite_index = static_cast<std::uint64_t>(it - names.begin());
    SweepSummary out;
    out.suite = suite;
    out.trials = trials;
    out.reports.resize(trials);
    std::vector<double> shuffle(trials, 0.0);
    const SeedToken base{seed, 0, static_cast<std::uint64_t>(StreamRole::inequality)};
    parallel_for(trials, threads, [&](std::size_t t) {
        Philox rng(base.child(suite_index).with_replication(t));
        IneqReport r;
        double diff = 0.0;
        if (suite == "hardy") {
            r = hardy_trial(rng);
        } else if (suite == "intsum") {
            std::size_t n = 1;
            const WindowModel m = random_window_model(rng, n);
            r = check_intsum_exact(m, n);
            const IneqReport s = check_intsum_exact(shuffle_window_model(m, rng), n);
            diff = std::max(rel_diff(r.lhs, s.lhs), rel_diff(r.rhs, s.rhs));
        } else if (suite == "burkholder") {
            const MartingaleTree tree = random_martingale(rng);
            const double q = 1.05 + 4.95 * rng.uniform();
            r = check_burkholder_exact(tree, q);
            const IneqReport s = check_burkholder_exact(shuffle_tree(tree, rng), q);
            diff = std::max(rel_diff(r.lhs, s.lhs), rel_diff(r.rhs, s.rhs));
        } else if (suite == "maximal") {
            JointLaw law = random_joint(rng);
            const double q = 1.05 + 4.95 * rng.uniform();
            r = check_maximal_exact(law, q);
            for (std::size_t i = law.probs.size(); i > 1; --i) {
                const std::size_t j = rng.next_u64() % i;
                std::swap(law.probs[i - 1], law.probs[j]);
                std::swap(law.paths[i - 1], law.paths[j]);
            }
            const IneqReport s = check_maximal_exact(law, q);
            diff = std::max(rel_diff(r.lhs, s.lhs), rel_diff(r.rhs, s.rhs));
        } else {
            const double u = (rng.uniform() - 0.5) * 100.0;
            const double v = (rng.uniform() - 0.5) * 100.0;
            const double lambda = (t % 2 == 0) ? 0.1 * static_cast<double>(1 + (t / 2) % 9) : std::max(1e-3, rng.uniform());
            r = check_archineq(u, v, lambda);
        }
        out.reports[t] = std::move(r);
        shuffle[t] = diff;
    });
    out.min_margin = trials > 0 ? out.reports.front().margin : 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        out.failures += out.reports[t].holds ? 0 : 1;
        out.min_margin = std::min(out.min_margin, out.reports[t].margin);
        out.max_shuffle_diff = std::max(out.max_shuffle_diff, shuffle[t]);
    }
    return out;
}

std::vector<double> hardy_sharpness_probe(double gamma, const std::vector<double>& T_values) {
    std::vector<double> ratios;
    const double e = 0.5 * (gamma - 1.0);
    const double c = 2.0 / (gamma + 1.0);
    for (double T : T_values) {
        auto H = [=](double x) {
            const double y = std::clamp(x, 0.0, T);
            return c * (std::pow(1.0 + y, e + 1.0) - 1.0);
        };
        auto H1 = [=](double x) { return (x > 0.0 && x < T) ? std::pow(1.0 + x, e) : 0.0; };
        const IneqReport r = check_hardy(make_fn("hardy extremal", H, H1, {0.0, T}), gamma, HardyVariant::sup_zero);
        ratios.push_back(r.rhs > 0.0 ? r.lhs / r.rhs : 0.0);
    }
    return ratios;
}

double estimate_sup_constant(double gamma, double mu, std::size_t trials, std::uint64_t seed) {
    if (mu > 1.0) {
        throw ContractError("the weighted sup bound needs mu <= 1");
    }
    Philox rng(SeedToken{seed, 0, static_cast<std::uint64_t>(StreamRole::inequality)});
    const WeightedMeasure m0 = WeightedMeasure::power(gamma - mu);
    const WeightedMeasure m1 = WeightedMeasure::power(gamma + mu);
    double best = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const double s = 0.05 * std::pow(400.0, rng.uniform());
        const double c = (rng.uniform() - 0.5) * 100.0;
        auto H = [=](double x) { const double z = (x - c) / s; return std::exp(-0.5 * z * z); };
        auto H1 = [=](double x) { const double z = (x - c) / s; return -z / s * std::exp(-0.5 * z * z); };
        const std::vector<double> br{c - s, c, c + s, 0.0};
        const double lhs = weighted_sup(H, gamma, br);
        const double rhs = m0.integrate([&](double u) { const double h = H(u); return h * h; }, br, 1e-12) +
                           m1.integrate([&](double u) { const double h = H1(u); return h * h; }, br, 1e-12);
        if (rhs > 0.0) {
            best = std::max(best, lhs / rhs);
        }
    }
    return best;
}

void write_reports_json(const std::vector<IneqReport>& reports, std::ostream& os) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["lhs"] = r.lhs;
        j["rhs"] = r.rhs;
        j["holds"] = r.holds;
        j["margin"] = r.margin;
        j["inputs_digest"] = r.inputs_digest;
        arr.push_back(std::move(j));
    }
    os << arr.dump(2) << '\n';
}

}  // namespace depemp
