#include "depemp/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "depemp/errors.hpp"

namespace depemp {

namespace {

double clip1(double x) { return std::max(-1.0, std::min(x, 1.0)); }

// -------------------------------------------------------------------- classes

TestFunction scaled(TestFunction f, double s) {
    if (s == 1.0) {
        return f;
    }
    auto g = f.g;
    auto g1 = f.g1;
    auto g2 = f.g2;
    f.g = [g, s](double x) { return s * g(x); };
    f.g1 = [g1, s](double x) { return s * g1(x); };
    if (g2) {
        f.g2 = [g2, s](double x) { return s * g2(x); };
    }
    for (auto& j : f.jumps) {
        j.second *= s;
    }
    f.scale *= s;
    return f;
}

TestFunction gaussian_bump(double theta) {
    TestFunction f;
    std::ostringstream os;
    os << "bump(" << theta << ")";
    f.name = os.str();
    f.theta = theta;
    f.g = [theta](double x) { return std::exp(-(x - theta) * (x - theta)); };
    f.g1 = [theta](double x) {
        const double d = x - theta;
        return -2.0 * d * std::exp(-d * d);
    };
    f.g2 = [theta](double x) {
        const double d = x - theta;
        return (4.0 * d * d - 2.0) * std::exp(-d * d);
    };
    return f;
}

// g(x) = sign(x - theta) ((1 + |x - theta|)^eta - 1), a signed power that
// grows like |x|^eta with derivative eta (1 + |x - theta|)^(eta - 1).
TestFunction signed_power(double theta, double eta) {
    TestFunction f;
    std::ostringstream os;
    os << "signed_power(" << theta << ", " << eta << ")";
    f.name = os.str();
    f.theta = theta;
    f.kinks = {theta};
    f.g = [theta, eta](double x) {
        const double d = x - theta;
        return std::copysign(std::pow(1.0 + std::abs(d), eta) - 1.0, d);
    };
    f.g1 = [theta, eta](double x) { return eta * std::pow(1.0 + std::abs(x - theta), eta - 1.0); };
    return f;
}

TestFunction sobolev_member(double theta, bool use_huber, double gamma, double mu) {
    TestFunction f = use_huber ? huber_derivative(theta) : gaussian_bump(theta);
    const SobolevNorm sn = sobolev_norm(f, gamma, mu);
    if (!sn.finite) {
        throw ContractError("canonical member has divergent Sobolev norm: " + sn.diagnostic);
    }
    return scaled(std::move(f), 1.0 / std::sqrt(sn.norm_g + sn.norm_g1));
}

TestFunction piecewise_member(double theta, int pieces, double gamma) {
    std::vector<TestFunction> parts;
    std::vector<double> thresholds;
    const bool huber_ok = gamma + 1.0 > 1.0;
    for (int k = 0; k < pieces; ++k) {
        const double c = theta + 0.5 * k;
        parts.push_back(sobolev_member(c, huber_ok, gamma, 1.0));
        thresholds.push_back(c + 0.5);
    }
    TestFunction f;
    std::ostringstream os;
    os << "piecewise(I=" << pieces << ", theta=" << theta << ")";
    f.name = os.str();
    f.theta = theta;
    auto gs = std::make_shared<std::vector<TestFunction>>(parts);
    auto ts = std::make_shared<std::vector<double>>(thresholds);
    f.g = [gs, ts](double x) {
        double s = 0.0;
        for (std::size_t k = 0; k < gs->size(); ++k) {
            if (x <= (*ts)[k]) {
                s += (*gs)[k].g(x);
            }
        }
        return s;
    };
    f.g1 = [gs, ts](double x) {
        double s = 0.0;
        for (std::size_t k = 0; k < gs->size(); ++k) {
            if (x <= (*ts)[k]) {
                s += (*gs)[k].g1(x);
            }
        }
        return s;
    };
    for (std::size_t k = 0; k < parts.size(); ++k) {
        f.jumps.emplace_back(thresholds[k], -parts[k].g(thresholds[k]));
        for (double kk : parts[k].kinks) {
            f.kinks.push_back(kk);
        }
    }
    f.parts = std::move(parts);
    return f;
}

double spread_theta(std::size_t i, std::size_t count, double lo, double hi) {
    if (count == 1) {
        return 0.0;
    }
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
}

// -------------------------------------------------------------------- sup statistics

struct Sorted {
    std::vector<double> x;
    double root_n = 0.0;
};

Sorted sorted_sample(std::span<const double> sample) {
    if (sample.empty()) {
        throw ContractError("empirical statistics need a nonempty sample");
    }
    Sorted s;
    s.x.assign(sample.begin(), sample.end());
    for (double v : s.x) {
        if (!std::isfinite(v)) {
            throw NumericError("non-finite observation in sample");
        }
    }
    std::sort(s.x.begin(), s.x.end());
    s.root_n = std::sqrt(static_cast<double>(s.x.size()));
    return s;
}

// Maximizes |c - F(s)| (1 + |s|)^kappa over [a, b] where b - a is finite and
// 0 is not interior.
double piece_max(double c, double a, double b, const LawEvaluator& law, double kappa) {
    auto w = [kappa](double s) { return std::pow(1.0 + std::abs(s), kappa); };
    auto phi = [&](double s) { return std::abs(c - law.cdf(s)) * w(s); };
    double best = std::max(phi(a), phi(b));
    if (kappa == 0.0 || !(b > a)) {
        return best;
    }
    auto dphi = [&](double s) {
        const double F = law.cdf(s);
        const double sigma = c - F >= 0.0 ? 1.0 : -1.0;
        const double ws = w(s);
        const double dw = kappa * std::pow(1.0 + std::abs(s), kappa - 1.0) * (s >= 0.0 ? 1.0 : -1.0);
        return sigma * (-law.pdf(s) * ws + (c - F) * dw);
    };
    // Pieces between neighbouring order statistics are short: a sign change
    // of the derivative between the ends is the only way to an interior max.
    const int kGrid = (b - a) < 0.05 * (1.0 + std::min(std::abs(a), std::abs(b))) ? 1 : 8;
    double left = a;
    double dl = dphi(a);
    for (int i = 1; i <= kGrid; ++i) {
        const double right = a + (b - a) * i / kGrid;
        const double dr = dphi(right);
        if (dl > 0.0 && dr < 0.0) {
            double lo = left;
            double hi = right;
            for (int it = 0; it < 80 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
                const double mid = 0.5 * (lo + hi);
                (dphi(mid) > 0.0 ? lo : hi) = mid;
            }
            best = std::max({best, phi(lo), phi(hi)});
        }
        best = std::max(best, phi(right));
        left = right;
        dl = dr;
    }
    return best;
}

// Splits [a, b] at 0, then geometrically when the interval is long.
double interval_max(double c, double a, double b, const LawEvaluator& law, double kappa) {
    if (a < 0.0 && b > 0.0) {
        return std::max(interval_max(c, a, 0.0, law, kappa), interval_max(c, 0.0, b, law, kappa));
    }
    const double len = b - a;
    const double anchor = std::max(1.0, std::min(std::abs(a), std::abs(b)));
    if (len > 4.0 * anchor) {
        // Geometric panels away from the endpoint nearest 0.
        double best = 0.0;
        if (a >= 0.0) {
            double lo = a;
            double hi = a + anchor;
            while (lo < b) {
                hi = std::min(hi, b);
                best = std::max(best, piece_max(c, lo, hi, law, kappa));
                lo = hi;
                hi = lo + 2.0 * (lo - a + anchor);
            }
        } else {
            double hi = b;
            double lo = b - anchor;
            while (hi > a) {
                lo = std::max(lo, a);
                best = std::max(best, piece_max(c, lo, hi, law, kappa));
                hi = lo;
                lo = hi - 2.0 * (b - hi + anchor);
            }
        }
        return best;
    }
    return piece_max(c, a, b, law, kappa);
}

// Where the weighted tail mass drops below 1e-12.
double tail_end(double start, int direction, const LawEvaluator& law, double kappa) {
    double step = std::max(1.0, std::abs(start));
    double t = start;
    for (int k = 0; k < 200; ++k) {
        t = start + direction * step;
        const double mass = direction > 0 ? 1.0 - law.cdf(t) : law.cdf(t);
        if (mass * std::pow(1.0 + std::abs(t), kappa) < 1e-12) {
            return t;
        }
        step *= 2.0;
        if (step > 1e15) {
            throw NumericError("weighted tail of the marginal does not vanish; weight exponent too large");
        }
    }
    return t;
}

// Sparse tables for range max / min.
class RangeExtrema {
public:
    RangeExtrema(const std::vector<double>& hi, const std::vector<double>& lo) {
        const std::size_t n = hi.size();
        std::size_t levels = 1;
        while ((std::size_t{1} << levels) <= n) {
            ++levels;
        }
        mx_.assign(levels, {});
        mn_.assign(levels, {});
        mx_[0] = hi;
        mn_[0] = lo;
        for (std::size_t k = 1; k < levels; ++k) {
            const std::size_t len = std::size_t{1} << k;
            mx_[k].resize(n - len + 1);
            mn_[k].resize(n - len + 1);
            for (std::size_t i = 0; i + len <= n; ++i) {
                mx_[k][i] = std::max(mx_[k - 1][i], mx_[k - 1][i + len / 2]);
                mn_[k][i] = std::min(mn_[k - 1][i], mn_[k - 1][i + len / 2]);
            }
        }
    }
    // Inclusive range [i, j], i <= j.
    [[nodiscard]] std::pair<double, double> query(std::size_t i, std::size_t j) const {
        const std::size_t len = j - i + 1;
        std::size_t k = 0;
        while ((std::size_t{2} << k) <= len) {
            ++k;
        }
        const std::size_t off = std::size_t{1} << k;
        return {std::max(mx_[k][i], mx_[k][j + 1 - off]), std::min(mn_[k][i], mn_[k][j + 1 - off])};
    }

private:
    std::vector<std::vector<double>> mx_;
    std::vector<std::vector<double>> mn_;
};

}  // namespace

// ------------------------------------------------------------------------ classes

void FunctionClassSpec::validate() const {
    switch (kind) {
        case Kind::sobolev:
            if (gamma < 0.0 || mu > 1.0) {
                throw ConfigError("sobolev class requires gamma >= 0 and mu <= 1");
            }
            break;
        case Kind::lipschitz_growth:
            if (eta < 0.0 || delta < 0.0 || eta - delta > 1.0) {
                throw ConfigError("lipschitz_growth class requires eta, delta >= 0 and eta - delta <= 1");
            }
            break;
        case Kind::piecewise:
            if (pieces < 1 || gamma < 0.0) {
                throw ConfigError("piecewise class requires I >= 1 and gamma >= 0");
            }
            break;
        case Kind::kclass:
            if (!(gamma > 0.0)) {
                throw ConfigError("kclass requires gamma > 0");
            }
            break;
    }
}

FunctionClassSpec FunctionClassSpec::sobolev(double gamma, double mu) {
    FunctionClassSpec s;
    s.kind = Kind::sobolev;
    s.gamma = gamma;
    s.mu = mu;
    s.validate();
    return s;
}

FunctionClassSpec FunctionClassSpec::lipschitz_growth(double eta, double delta) {
    FunctionClassSpec s;
    s.kind = Kind::lipschitz_growth;
    s.eta = eta;
    s.delta = delta;
    s.validate();
    return s;
}

FunctionClassSpec FunctionClassSpec::piecewise(int pieces, double gamma) {
    FunctionClassSpec s;
    s.kind = Kind::piecewise;
    s.pieces = pieces;
    s.gamma = gamma;
    s.mu = 1.0;
    s.validate();
    return s;
}

FunctionClassSpec FunctionClassSpec::kclass(double gamma) {
    FunctionClassSpec s;
    s.kind = Kind::kclass;
    s.gamma = gamma;
    s.validate();
    return s;
}

std::string FunctionClassSpec::name() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::sobolev: os << "sobolev(gamma=" << gamma << ", mu=" << mu << ")"; break;
        case Kind::lipschitz_growth: os << "lipschitz_growth(eta=" << eta << ", delta=" << delta << ")"; break;
        case Kind::piecewise: os << "piecewise(I=" << pieces << ", gamma=" << gamma << ")"; break;
        case Kind::kclass: os << "kclass(gamma=" << gamma << ")"; break;
    }
    return os.str();
}

std::vector<double> TestFunction::breakpoints() const {
    std::vector<double> b = kinks;
    for (const auto& j : jumps) {
        b.push_back(j.first);
    }
    return b;
}

TestFunction huber_derivative(double theta) {
    TestFunction f;
    std::ostringstream os;
    os << "huber(" << theta << ")";
    f.name = os.str();
    f.theta = theta;
    f.kinks = {theta - 1.0, theta + 1.0};
    f.g = [theta](double x) { return clip1(x - theta); };
    f.g1 = [theta](double x) { return std::abs(x - theta) < 1.0 ? 1.0 : 0.0; };
    f.g2 = [](double) { return 0.0; };
    return f;
}

TestFunction identity_function() {
    TestFunction f;
    f.name = "identity";
    f.g = [](double x) { return x; };
    f.g1 = [](double) { return 1.0; };
    f.g2 = [](double) { return 0.0; };
    return f;
}

TestFunction constant_function(double c) {
    TestFunction f;
    std::ostringstream os;
    os << "constant(" << c << ")";
    f.name = os.str();
    f.g = [c](double) { return c; };
    f.g1 = [](double) { return 0.0; };
    f.g2 = [](double) { return 0.0; };
    return f;
}

std::vector<TestFunction> make_class_family(const FunctionClassSpec& spec, std::size_t count) {
    spec.validate();
    if (count == 0) {
        throw ContractError("make_class_family requires count >= 1");
    }
    std::vector<TestFunction> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double theta = spread_theta(i, count, -2.0, 2.0);
        TestFunction f;
        switch (spec.kind) {
            case FunctionClassSpec::Kind::sobolev: {
                // The Huber derivative has g^2 -> 1 in the tails, so it needs gamma + mu > 1.
                const bool huber_ok = spec.gamma + spec.mu > 1.0;
                f = sobolev_member(theta, huber_ok && i % 2 == 0, spec.gamma, spec.mu);
                break;
            }
            case FunctionClassSpec::Kind::lipschitz_growth: {
                if (spec.eta == 0.0) {
                    f = huber_derivative(theta);
                } else {
                    const double s = std::min(1.0, 1.0 / spec.eta) * std::pow(1.0 + std::abs(theta), -spec.eta);
                    f = scaled(signed_power(theta, spec.eta), s);
                }
                break;
            }
            case FunctionClassSpec::Kind::piecewise:
                f = piecewise_member(theta, spec.pieces, spec.gamma);
                break;
            case FunctionClassSpec::Kind::kclass: {
                TestFunction h = huber_derivative(theta);
                const double h0 = clip1(-theta);
                auto g = h.g;
                h.g = [g, h0](double x) { return g(x) - h0; };
                h.name += "-centred";
                const double d = WeightedMeasure::power(-spec.gamma).integrate(
                    [&](double x) { return h.g1(x) * h.g1(x); }, h.kinks);
                f = scaled(std::move(h), 1.0 / std::sqrt(d));
                break;
            }
        }
        f.cls = spec;
        out.push_back(std::move(f));
    }
    return out;
}

SobolevNorm sobolev_norm(const TestFunction& g, double gamma, double mu) {
    SobolevNorm out;
    const WeightedMeasure w0 = WeightedMeasure::power(-gamma - mu);
    const WeightedMeasure w1 = WeightedMeasure::power(-gamma + mu);
    auto f0 = [&](double u) { return g.g(u) * g.g(u) * w0.weight(u); };
    auto f1 = [&](double u) { return g.g1(u) * g.g1(u) * w1.weight(u); };
    std::ostringstream diag;
    for (int dir : {-1, 1}) {
        const TailSlope t0 = tail_slope(f0, dir);
        const TailSlope t1 = tail_slope(f1, dir);
        if (t0.divergent) {
            out.finite = false;
            diag << "g^2 w_{" << -gamma - mu << "} tail exponent " << t0.exponent << " (direction " << dir << "); ";
        }
        if (t1.divergent) {
            out.finite = false;
            diag << "g'^2 w_{" << -gamma + mu << "} tail exponent " << t1.exponent << " (direction " << dir << "); ";
        }
    }
    if (!out.finite) {
        out.norm_g = std::numeric_limits<double>::infinity();
        out.norm_g1 = std::numeric_limits<double>::infinity();
        out.member = false;
        out.diagnostic = "divergent integral: " + diag.str();
        return out;
    }
    const std::vector<double> br = g.breakpoints();
    out.norm_g = integrate_line(f0, br, 1e-13);
    out.norm_g1 = integrate_line(f1, br, 1e-13);
    out.member = out.norm_g + out.norm_g1 <= 1.0 + 1e-9;
    return out;
}

MembershipReport check_membership(const TestFunction& g) {
    MembershipReport r;
    const FunctionClassSpec& c = g.cls;
    switch (c.kind) {
        case FunctionClassSpec::Kind::sobolev: {
            const SobolevNorm sn = sobolev_norm(g, c.gamma, c.mu);
            r.member = sn.member;
            r.value = sn.norm_g + sn.norm_g1;
            r.diagnostic = sn.diagnostic;
            break;
        }
        case FunctionClassSpec::Kind::kclass: {
            const double at0 = g.g(0.0);
            const double d = WeightedMeasure::power(-c.gamma).integrate([&](double x) { return g.g1(x) * g.g1(x); },
                                                                       g.breakpoints());
            r.value = d;
            r.member = std::abs(at0) <= 1e-12 && d <= 1.0 + 1e-9;
            if (std::abs(at0) > 1e-12) {
                r.diagnostic = "g(0) != 0";
            }
            break;
        }
        case FunctionClassSpec::Kind::lipschitz_growth: {
            double worst = 0.0;
            for (int i = 0; i <= 10000; ++i) {
                const double u = -100.0 + 0.02 * i;
                const double base = 1.0 + std::abs(u);
                worst = std::max(worst, std::abs(g.g(u)) / std::pow(base, c.eta));
                worst = std::max(worst, std::abs(g.g1(u)) / std::pow(base, c.delta));
            }
            r.value = worst;
            r.member = worst <= 1.0 + 1e-12;
            break;
        }
        case FunctionClassSpec::Kind::piecewise: {
            r.member = !g.parts.empty();
            for (const auto& p : g.parts) {
                const SobolevNorm sn = sobolev_norm(p, c.gamma, 1.0);
                r.value = std::max(r.value, sn.norm_g + sn.norm_g1);
                r.member = r.member && sn.member;
            }
            break;
        }
    }
    return r;
}

// ------------------------------------------------------------------------ measures

WeightedMeasure WeightedMeasure::power(double lambda) {
    WeightedMeasure m;
    m.lambda_ = lambda;
    return m;
}

WeightedMeasure WeightedMeasure::log_weight(double eta) {
    if (eta < 0.0) {
        throw ConfigError("log weight requires eta >= 0");
    }
    WeightedMeasure m;
    m.lambda_ = 1.0 + 2.0 * eta;
    m.log_ = true;
    return m;
}

double WeightedMeasure::weight(double u) const {
    const double a = 1.0 + std::abs(u);
    const double base = lambda_ == 0.0 ? 1.0 : std::pow(a, lambda_);
    if (log_) {
        const double l = std::log(2.0 + std::abs(u));
        return base * l * l;
    }
    return base;
}

std::string WeightedMeasure::name() const {
    std::ostringstream os;
    if (log_) {
        os << "(1+|u|)^" << lambda_ << " log^2(2+|u|)";
    } else {
        os << "w_" << lambda_;
    }
    return os.str();
}

double WeightedMeasure::integrate(const RealFn& f, std::vector<double> breaks, double tol) const {
    breaks.push_back(0.0);
    return integrate_line([&](double u) { return f(u) * weight(u); }, std::move(breaks), tol);
}

WeightedMeasure::Rule WeightedMeasure::rule(const RealFn& envelope, double scale, std::size_t nodes, double tail_tol) const {
    if (!(scale > 0.0)) {
        throw ContractError("quadrature scale must be positive");
    }
    double T = scale;
    auto tail = [&](double t) { return std::max(std::abs(envelope(t)), std::abs(envelope(-t))) * weight(t); };
    int guard = 0;
    while (tail(T) >= tail_tol) {
        T *= 2.0;
        if (++guard > 60) {
            std::ostringstream os;
            os << "weighted integrand does not decay under weight exponent " << lambda_;
            throw NumericError(os.str());
        }
    }
    if (nodes % 2 == 0) {
        ++nodes;
    }
    Rule r;
    r.cutoff = T;
    r.nodes.resize(nodes);
    r.weights.resize(nodes);
    const double h = 2.0 * T / static_cast<double>(nodes - 1);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double u = -T + h * static_cast<double>(i);
        const double c = (i == 0 || i + 1 == nodes) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        r.nodes[i] = u;
        r.weights[i] = c * h / 3.0 * weight(u);
    }
    return r;
}

LawEvaluator law_of(const Marginal& marginal) {
    const Marginal* m = &marginal;
    return {[m](double x) { return m->cdf(x); }, [m](double x) { return m->pdf(x); }};
}

LawEvaluator law_of(const InnovationDist& dist) {
    return {[dist](double x) { return innovation_cdf(dist, x); }, [dist](double x) { return innovation_pdf(dist, x); }};
}

// ------------------------------------------------------------------------ statistics

double empirical_cdf(std::span<const double> sample, double x) {
    if (sample.empty()) {
        throw ContractError("empirical_cdf needs a nonempty sample");
    }
    const auto count = std::count_if(sample.begin(), sample.end(), [x](double v) { return v <= x; });
    return static_cast<double>(count) / static_cast<double>(sample.size());
}

double weighted_sup_rn(std::span<const double> sample, const LawEvaluator& law, double gamma, double q) {
    if (gamma < 0.0 || !(q > 2.0)) {
        throw ContractError("weighted_sup_rn requires gamma >= 0 and q > 2");
    }
    const Sorted s = sorted_sample(sample);
    const std::size_t n = s.x.size();
    const double nd = static_cast<double>(n);
    const double kappa = gamma / q;
    double best = 0.0;
    // Lower tail, level 0.
    const double lo_end = tail_end(s.x.front(), -1, law, kappa);
    best = std::max(best, interval_max(0.0, lo_end, s.x.front(), law, kappa));
    // Pieces between distinct order statistics; level = count <= left end.
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && s.x[j + 1] == s.x[i]) {
            ++j;
        }
        const double c = static_cast<double>(j + 1) / nd;
        const double a = s.x[i];
        const double b = j + 1 < n ? s.x[j + 1] : tail_end(a, 1, law, kappa);
        best = std::max(best, interval_max(c, a, b, law, kappa));
        // Left limit at x_i uses the level before the jump.
        const double w = std::pow(1.0 + std::abs(a), kappa);
        if (!std::isfinite(w)) {
            throw NumericError("non-finite weight at a jump point");
        }
        best = std::max(best, std::abs(static_cast<double>(i) / nd - law.cdf(a)) * w);
        i = j + 1;
    }
    return s.root_n * best;
}

double modulus_stat(std::span<const double> sample, const LawEvaluator& law, double delta, double gamma, double q) {
    if (!(delta > 0.0 && delta < 0.5)) {
        throw ContractError("modulus_stat requires delta in (0, 1/2)");
    }
    if (gamma < 0.0 || !(q > 2.0)) {
        throw ContractError("modulus_stat requires gamma >= 0 and q > 2");
    }
    const Sorted s = sorted_sample(sample);
    const std::vector<double>& x = s.x;
    const std::size_t n = x.size();
    const double nd = static_cast<double>(n);
    const double rn = s.root_n;
    const double kappa2 = 2.0 * gamma / q;

    std::vector<double> Fx(n);
    std::vector<double> vplus(n);
    std::vector<double> vminus(n);
    for (std::size_t k = 0; k < n; ++k) {
        Fx[k] = law.cdf(x[k]);
        const auto up = std::upper_bound(x.begin(), x.end(), x[k]) - x.begin();
        const auto low = std::lower_bound(x.begin(), x.end(), x[k]) - x.begin();
        vplus[k] = rn * (static_cast<double>(up) / nd - Fx[k]);
        vminus[k] = rn * (static_cast<double>(low) / nd - Fx[k]);
    }
    const RangeExtrema rmq(vplus, vminus);

    auto count_le = [&](double t) { return static_cast<double>(std::upper_bound(x.begin(), x.end(), t) - x.begin()); };
    auto count_lt = [&](double t) { return static_cast<double>(std::lower_bound(x.begin(), x.end(), t) - x.begin()); };

    // Closed window [t - delta, t + delta] with jumps at either end included
    // from both sides; this is the upper envelope of the t -> value map, whose
    // supremum equals the supremum over t.
    auto eval = [&](double t) {
        const double L = t - delta;
        const double R = t + delta;
        const double FL = law.cdf(L);
        const double FR = law.cdf(R);
        const double Ft = law.cdf(t);
        const double ends[4] = {rn * (count_le(L) / nd - FL), rn * (count_lt(L) / nd - FL),
                                rn * (count_le(R) / nd - FR), rn * (count_lt(R) / nd - FR)};
        double hi = *std::max_element(ends, ends + 4);
        double lo = *std::min_element(ends, ends + 4);
        const auto first = std::lower_bound(x.begin(), x.end(), L) - x.begin();
        const auto last = std::upper_bound(x.begin(), x.end(), R) - x.begin();
        if (last > first) {
            const auto [mx, mn] = rmq.query(static_cast<std::size_t>(first), static_cast<std::size_t>(last - 1));
            hi = std::max(hi, mx);
            lo = std::min(lo, mn);
        }
        const double center_a = rn * (count_le(t) / nd - Ft);
        const double center_b = rn * (count_lt(t) / nd - Ft);
        double d = 0.0;
        for (double c : {center_a, center_b}) {
            d = std::max({d, hi - c, c - lo});
        }
        return std::pow(1.0 + std::abs(t), kappa2) * d * d;
    };

    double best = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        best = std::max({best, eval(x[k]), eval(x[k] - delta), eval(x[k] + delta)});
    }
    const double step = delta / 10.0;
    const double start = x.front() - 2.0 * delta;
    const double stop = x.back() + 2.0 * delta;
    const auto steps = static_cast<std::size_t>(std::ceil((stop - start) / step));
    for (std::size_t k = 0; k <= steps; ++k) {
        best = std::max(best, eval(start + step * static_cast<double>(k)));
    }
    // Beyond the sample range only F moves; walk out geometrically.
    for (int dir : {-1, 1}) {
        const double edge = dir > 0 ? stop : start;
        for (double off = step; off < 1e12; off *= 1.5) {
            const double v = eval(edge + dir * off);
            best = std::max(best, v);
            if (v < 1e-14 && off > 1.0) {
                break;
            }
        }
    }
    return best;
}

double indexed_emp(std::span<const double> sample, const TestFunction& g, double Eg) {
    if (sample.empty()) {
        throw ContractError("indexed_emp needs a nonempty sample");
    }
    double s = 0.0;
    for (double v : sample) {
        s += g.g(v);
    }
    return s / static_cast<double>(sample.size()) - Eg;
}

double expectation(const TestFunction& g, const Marginal& marginal) {
    return marginal.expectation(g.g, g.breakpoints());
}

}  // namespace depemp
