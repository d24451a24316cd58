#include "depemp/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "depemp/errors.hpp"

namespace depemp {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr std::uint64_t kPilotSeed = 0x5EEDF00DULL;

double pilot_spread(const ProcessModel& model) {
    const Path p = simulate(model, 20000, SeedToken{kPilotSeed, 0, static_cast<std::uint64_t>(StreamRole::pilot)});
    std::vector<double> a(p.x.size());
    std::transform(p.x.begin(), p.x.end(), a.begin(), [](double v) { return std::abs(v); });
    auto mid = a.begin() + static_cast<long>(a.size() / 2);
    std::nth_element(a.begin(), mid, a.end());
    return std::max(*mid, 1e-3);
}

// Stationary weights p_k * dy_k on a midpoint grid in u, x = c tan(pi u / 2).
void solve_stationary(const ProcessModel& model, double c, std::size_t nodes, std::vector<double>& x, std::vector<double>& w) {
    x.resize(nodes);
    std::vector<double> dy(nodes);
    const double h = 2.0 / static_cast<double>(nodes);
    for (std::size_t k = 0; k < nodes; ++k) {
        const double u = -1.0 + (static_cast<double>(k) + 0.5) * h;
        const double t = std::tan(0.5 * std::numbers::pi * u);
        x[k] = c * t;
        dy[k] = h * c * 0.5 * std::numbers::pi * (1.0 + t * t);
    }
    std::vector<double> kernel(nodes * nodes);
    for (std::size_t k = 0; k < nodes; ++k) {
        const ConditionalLaw law = conditional_law(model, x[k]);
        for (std::size_t i = 0; i < nodes; ++i) {
            kernel[i * nodes + k] = law.pdf(x[i]) * dy[k];
        }
    }
    std::vector<double> p(nodes);
    // Start from a Cauchy-like profile matching the grid scale.
    for (std::size_t k = 0; k < nodes; ++k) {
        p[k] = 1.0 / (1.0 + (x[k] / c) * (x[k] / c));
    }
    std::vector<double> next(nodes);
    for (int it = 0; it < 20000; ++it) {
        double mass = 0.0;
        for (std::size_t i = 0; i < nodes; ++i) {
            double s = 0.0;
            const double* row = &kernel[i * nodes];
            for (std::size_t k = 0; k < nodes; ++k) {
                s += row[k] * p[k];
            }
            next[i] = s;
            mass += s * dy[i];
        }
        double change = 0.0;
        for (std::size_t i = 0; i < nodes; ++i) {
            next[i] /= mass;
            change = std::max(change, std::abs(next[i] - p[i]));
        }
        p.swap(next);
        if (change < 1e-14) {
            break;
        }
    }
    w.resize(nodes);
    for (std::size_t k = 0; k < nodes; ++k) {
        w[k] = p[k] * dy[k];
    }
}

double hermite(double x0, double x1, double f0, double f1, double d0, double d1, double x) {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * h * d1;
}

}  // namespace

Marginal Marginal::normal(double sd) {
    if (!(sd > 0.0)) {
        throw ConfigError("normal marginal needs a positive standard deviation");
    }
    Marginal m;
    m.kind_ = Kind::normal;
    m.spread_ = sd;
    std::ostringstream os;
    os << "normal(sd=" << sd << ")";
    m.description_ = os.str();
    return m;
}

Marginal Marginal::from_innovation(const InnovationDist& dist) {
    Marginal m;
    m.kind_ = Kind::innovation;
    m.innovation_ = std::make_shared<const InnovationDist>(dist);
    m.spread_ = dist.family() == Family::uniform ? 0.5 * (dist.hi() - dist.lo()) : dist.scale();
    m.description_ = dist.name();
    return m;
}

Marginal Marginal::numeric(const ProcessModel& model) {
    if (!model.is_markov()) {
        throw ConfigError("numerical stationary marginal is implemented for Markov models only: " + model.name());
    }
    Marginal m;
    m.kind_ = Kind::numeric;
    m.model_ = std::make_shared<const ProcessModel>(model);
    const double c = pilot_spread(model);
    m.spread_ = c;
    solve_stationary(model, c, 512, m.coarse_.x, m.coarse_.w);
    solve_stationary(model, c, 1024, m.fine_.x, m.fine_.w);

    constexpr std::size_t kTable = 4001;
    constexpr double kEdge = 0.999;
    m.tx_.resize(kTable);
    m.tF_.resize(kTable);
    m.tf_.resize(kTable);
    std::vector<double> tdf(kTable);
    for (std::size_t j = 0; j < kTable; ++j) {
        const double u = -kEdge + 2.0 * kEdge * static_cast<double>(j) / static_cast<double>(kTable - 1);
        m.tx_[j] = c * std::tan(0.5 * std::numbers::pi * u);
    }
    auto accumulate = [&](const Grid& g, std::vector<double>& f, std::vector<double>& df) {
        f.assign(kTable, 0.0);
        df.assign(kTable, 0.0);
        for (std::size_t k = 0; k < g.x.size(); ++k) {
            const ConditionalLaw law = conditional_law(model, g.x[k]);
            for (std::size_t j = 0; j < kTable; ++j) {
                f[j] += law.pdf(m.tx_[j]) * g.w[k];
                df[j] += law.dpdf_dx(m.tx_[j]) * g.w[k];
            }
        }
    };
    std::vector<double> f1, d1, f2, d2;
    accumulate(m.coarse_, f1, d1);
    accumulate(m.fine_, f2, d2);
    for (std::size_t j = 0; j < kTable; ++j) {
        m.tf_[j] = std::max((4.0 * f2[j] - f1[j]) / 3.0, 0.0);
        tdf[j] = (4.0 * d2[j] - d1[j]) / 3.0;
    }
    // The distribution function follows by integrating the cubic Hermite
    // density interpolant panel by panel, anchored at the left table edge.
    m.tF_[0] = m.nystrom_cdf(m.tx_[0]);
    for (std::size_t j = 1; j < kTable; ++j) {
        const double h = m.tx_[j] - m.tx_[j - 1];
        const double panel = 0.5 * h * (m.tf_[j - 1] + m.tf_[j]) + h * h * (tdf[j - 1] - tdf[j]) / 12.0;
        m.tF_[j] = std::clamp(m.tF_[j - 1] + panel, 0.0, 1.0);
    }
    // Interleave the density slope after the density for the Hermite lookup.
    m.tf_.insert(m.tf_.end(), tdf.begin(), tdf.end());
    std::ostringstream os;
    os << "numeric stationary law of " << model.name();
    m.description_ = os.str();
    return m;
}

double Marginal::nystrom_pdf(double x) const {
    auto eval = [&](const Grid& g) {
        double s = 0.0;
        for (std::size_t k = 0; k < g.x.size(); ++k) {
            s += conditional_law(*model_, g.x[k]).pdf(x) * g.w[k];
        }
        return s;
    };
    return std::max((4.0 * eval(fine_) - eval(coarse_)) / 3.0, 0.0);
}

double Marginal::nystrom_cdf(double x) const {
    auto eval = [&](const Grid& g) {
        double s = 0.0;
        for (std::size_t k = 0; k < g.x.size(); ++k) {
            s += conditional_law(*model_, g.x[k]).cdf(x) * g.w[k];
        }
        return s;
    };
    return std::clamp((4.0 * eval(fine_) - eval(coarse_)) / 3.0, 0.0, 1.0);
}

double Marginal::table_lookup(double x, bool want_cdf) const {
    const std::size_t n = tx_.size();
    auto it = std::upper_bound(tx_.begin(), tx_.end(), x);
    std::size_t j = static_cast<std::size_t>(it - tx_.begin());
    j = std::clamp<std::size_t>(j, 1, n - 1);
    const double* f = tf_.data();
    const double* df = tf_.data() + n;
    if (want_cdf) {
        return std::clamp(hermite(tx_[j - 1], tx_[j], tF_[j - 1], tF_[j], f[j - 1], f[j], x), 0.0, 1.0);
    }
    return std::max(hermite(tx_[j - 1], tx_[j], f[j - 1], f[j], df[j - 1], df[j], x), 0.0);
}

double Marginal::cdf(double x) const {
    switch (kind_) {
        case Kind::normal: return 0.5 * std::erfc(-x / (spread_ * std::numbers::sqrt2));
        case Kind::innovation: return innovation_cdf(*innovation_, x);
        case Kind::numeric:
            if (std::isinf(x)) {
                return x > 0 ? 1.0 : 0.0;
            }
            return (x > tx_.front() && x < tx_.back()) ? table_lookup(x, true) : nystrom_cdf(x);
    }
    return 0.0;
}

double Marginal::pdf(double x) const {
    switch (kind_) {
        case Kind::normal: {
            const double z = x / spread_;
            return kInvSqrt2Pi * std::exp(-0.5 * z * z) / spread_;
        }
        case Kind::innovation: return innovation_pdf(*innovation_, x);
        case Kind::numeric:
            return (x > tx_.front() && x < tx_.back()) ? table_lookup(x, false) : nystrom_pdf(x);
    }
    return 0.0;
}

double Marginal::expectation(const RealFn& g, std::vector<double> breaks) const {
    if (kind_ == Kind::innovation && innovation_->family() == Family::uniform) {
        std::vector<double> pts{innovation_->lo()};
        for (double b : breaks) {
            if (b > innovation_->lo() && b < innovation_->hi()) {
                pts.push_back(b);
            }
        }
        pts.push_back(innovation_->hi());
        std::sort(pts.begin(), pts.end());
        double s = 0.0;
        const double dens = 1.0 / (innovation_->hi() - innovation_->lo());
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            s += integrate(g, pts[i], pts[i + 1], 1e-13) * dens;
        }
        return s;
    }
    breaks.push_back(0.0);
    breaks.push_back(-spread_);
    breaks.push_back(spread_);
    return integrate_line([&](double x) { return g(x) * pdf(x); }, std::move(breaks), 1e-12);
}

std::shared_ptr<const Marginal> marginal_law(const ProcessModel& model) {
    if (model.is_iid()) {
        return std::make_shared<const Marginal>(Marginal::from_innovation(model.innovation()));
    }
    const bool gaussian = model.innovation().family() == Family::standard_normal;
    if (const auto* lin = model.as_linear()) {
        if (!gaussian) {
            throw ConfigError("stationary marginal of a non-Gaussian linear process has no closed form: " + model.name());
        }
        double s2 = 0.0;
        for (double a : lin->a) {
            s2 += a * a;
        }
        return std::make_shared<const Marginal>(Marginal::normal(model.innovation().scale() * std::sqrt(s2)));
    }
    if (const auto* ar = std::get_if<Ar1Model>(&model.kind()); ar != nullptr && gaussian) {
        return std::make_shared<const Marginal>(
            Marginal::normal(model.innovation().scale() / std::sqrt(1.0 - ar->alpha * ar->alpha)));
    }
    static std::mutex mutex;
    static std::map<std::string, std::shared_ptr<const Marginal>> cache;
    std::lock_guard lock(mutex);
    const std::string key = model.name();
    auto it = cache.find(key);
    if (it != cache.end()) {
        return it->second;
    }
    auto m = std::make_shared<const Marginal>(Marginal::numeric(model));
    cache.emplace(key, m);
    return m;
}

}  // namespace depemp
