#include "depemp/processes.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>

#include <fftw3.h>

#include "depemp/errors.hpp"

namespace depemp {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// y[m] = sum_{j=1}^{L} a_j e[m - j] for m = L..N-1, returned for those m only.
std::vector<double> causal_convolution(std::span<const double> a, std::span<const double> e) {
    const std::size_t L = a.size() - 1;
    const std::size_t N = e.size();
    const std::size_t n = N - L;
    std::vector<double> out(n, 0.0);
    if (L == 0) {
        return out;
    }
    if (static_cast<double>(L) * static_cast<double>(n) <= 4.0e6) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t m = L + i;
            double s = 0.0;
            for (std::size_t j = 1; j <= L; ++j) {
                s += a[j] * e[m - j];
            }
            out[i] = s;
        }
        return out;
    }
    std::size_t M = 1;
    while (M < N) {
        M <<= 1;
    }
    const std::size_t H = M / 2 + 1;
    double* ra = fftw_alloc_real(M);
    double* re = fftw_alloc_real(M);
    fftw_complex* ca = fftw_alloc_complex(H);
    fftw_complex* ce = fftw_alloc_complex(H);
    fftw_plan pa;
    fftw_plan pe;
    fftw_plan pinv;
    {
        std::lock_guard lock(fftw_planner_mutex());
        pa = fftw_plan_dft_r2c_1d(static_cast<int>(M), ra, ca, FFTW_ESTIMATE);
        pe = fftw_plan_dft_r2c_1d(static_cast<int>(M), re, ce, FFTW_ESTIMATE);
        pinv = fftw_plan_dft_c2r_1d(static_cast<int>(M), ce, re, FFTW_ESTIMATE);
    }
    for (std::size_t k = 0; k < M; ++k) {
        ra[k] = (k >= 1 && k <= L) ? a[k] : 0.0;
        re[k] = k < N ? e[k] : 0.0;
    }
    fftw_execute(pa);
    fftw_execute(pe);
    for (std::size_t k = 0; k < H; ++k) {
        const double xr = ca[k][0] * ce[k][0] - ca[k][1] * ce[k][1];
        const double xi = ca[k][0] * ce[k][1] + ca[k][1] * ce[k][0];
        ce[k][0] = xr;
        ce[k][1] = xi;
    }
    fftw_execute(pinv);
    const double norm = 1.0 / static_cast<double>(M);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = re[L + i] * norm;
    }
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(pa);
        fftw_destroy_plan(pe);
        fftw_destroy_plan(pinv);
    }
    fftw_free(ra);
    fftw_free(re);
    fftw_free(ca);
    fftw_free(ce);
    return out;
}

std::vector<double> draw_many(const InnovationDist& dist, Philox& rng, std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) {
        v = draw(dist, rng);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- coefficients

CoeffSpec CoeffSpec::explicit_coeffs(std::vector<double> a) {
    CoeffSpec s;
    s.kind = Kind::explicit_seq;
    s.lag = a.empty() ? 0 : a.size() - 1;
    s.values = std::move(a);
    return s;
}

CoeffSpec CoeffSpec::geometric(double rho, std::size_t lag) {
    CoeffSpec s;
    s.kind = Kind::geometric;
    s.rho = rho;
    if (lag == 0 && std::abs(rho) < 1.0 && rho != 0.0) {
        // Smallest L with rho^(2(L+1)) <= 1e-6: relative tail of sum a_j^2 below 1e-6.
        lag = static_cast<std::size_t>(std::ceil(std::log(1e-6) / (2.0 * std::log(std::abs(rho)))));
        lag = std::max<std::size_t>(lag, 1);
    } else if (lag == 0) {
        lag = 1;
    }
    s.lag = lag;
    return s;
}

CoeffSpec CoeffSpec::longmem(double beta, std::size_t lag) {
    CoeffSpec s;
    s.kind = Kind::longmem;
    s.beta = beta;
    s.lag = lag;
    return s;
}

double CoeffSpec::coefficient(std::size_t j) const {
    switch (kind) {
        case Kind::explicit_seq: return j < values.size() ? values[j] : 0.0;
        case Kind::geometric: return std::pow(rho, static_cast<double>(j));
        case Kind::longmem: return j == 0 ? 1.0 : std::pow(static_cast<double>(j), -beta);
    }
    return 0.0;
}

Coefficients make_coeffs(const CoeffSpec& spec) {
    Coefficients out;
    switch (spec.kind) {
        case CoeffSpec::Kind::explicit_seq:
            if (spec.values.empty() || spec.values.front() != 1.0) {
                throw ConfigError("explicit coefficients must start with a_0 = 1");
            }
            out.a = spec.values;
            out.tail_bound = 0.0;
            break;
        case CoeffSpec::Kind::geometric: {
            if (!(std::abs(spec.rho) < 1.0)) {
                throw ConfigError("geometric coefficients require |rho| < 1");
            }
            if (spec.lag < 1) {
                throw ConfigError("truncation lag L must be >= 1");
            }
            out.a.resize(spec.lag + 1);
            for (std::size_t j = 0; j <= spec.lag; ++j) {
                out.a[j] = spec.coefficient(j);
            }
            const double r2 = spec.rho * spec.rho;
            out.tail_bound = std::pow(r2, static_cast<double>(spec.lag + 1)) / (1.0 - r2);
            break;
        }
        case CoeffSpec::Kind::longmem: {
            if (!(spec.beta > 0.5)) {
                throw ConfigError("long-memory coefficients require beta > 1/2 (variance diverges otherwise)");
            }
            if (spec.lag < 1) {
                throw ConfigError("truncation lag L must be >= 1");
            }
            out.a.resize(spec.lag + 1);
            for (std::size_t j = 0; j <= spec.lag; ++j) {
                out.a[j] = spec.coefficient(j);
            }
            // Integral comparison: sum_{j>L} j^{-2 beta} <= int_L^inf t^{-2 beta} dt.
            const double e = 2.0 * spec.beta - 1.0;
            out.tail_bound = std::pow(static_cast<double>(spec.lag), -e) / e;
            break;
        }
    }
    for (double v : out.a) {
        out.total_square += v * v;
    }
    return out;
}

// ---------------------------------------------------------------- models

ProcessModel ProcessModel::linear(const CoeffSpec& spec, const InnovationDist& innovation) {
    innovation.require_moment(2.0, "a linear process");
    LinearModel m;
    m.spec = spec;
    m.a = make_coeffs(spec).a;
    return ProcessModel(m, innovation);
}

ProcessModel ProcessModel::iid(const InnovationDist& innovation) {
    LinearModel m;
    m.spec = CoeffSpec::explicit_coeffs({1.0});
    m.a = {1.0};
    return ProcessModel(m, innovation);
}

ProcessModel ProcessModel::ar1(double alpha, const InnovationDist& innovation) {
    if (!(std::abs(alpha) < 1.0)) {
        throw ConfigError("ar1 requires |alpha| < 1");
    }
    return ProcessModel(Ar1Model{alpha}, innovation);
}

ProcessModel ProcessModel::ar_arch(double alpha, double a, const InnovationDist& innovation, double moment_order) {
    if (!(a > 0.0) || !std::isfinite(a)) {
        throw ConfigError("ar_arch requires a > 0");
    }
    if (!(moment_order > 0.0)) {
        throw ConfigError("ar_arch moment order must be positive");
    }
    if (!innovation.smooth()) {
        throw ConfigError("ar_arch requires an innovation law with a smooth density");
    }
    innovation.require_moment(moment_order, "ar_arch contraction");
    const double r = shifted_abs_moment(innovation, std::abs(alpha), moment_order);
    if (!(r < 1.0)) {
        std::ostringstream os;
        os << "ar_arch(alpha=" << alpha << ", a=" << a << ") is not contractive at moment order " << moment_order
           << ": E[(|alpha| + |eps|)^" << moment_order << "] = " << r << " >= 1";
        throw ConfigError(os.str());
    }
    return ProcessModel(ArArchModel{alpha, a, moment_order, r}, innovation);
}

bool ProcessModel::is_iid() const {
    const auto* lin = as_linear();
    if (lin == nullptr) {
        return false;
    }
    for (std::size_t j = 1; j < lin->a.size(); ++j) {
        if (lin->a[j] != 0.0) {
            return false;
        }
    }
    return true;
}

std::size_t ProcessModel::history() const {
    const auto* lin = as_linear();
    return lin != nullptr ? lin->a.size() - 1 : 0;
}

double ProcessModel::contraction_rate() const {
    if (const auto* ar = std::get_if<Ar1Model>(&kind_)) {
        return std::abs(ar->alpha);
    }
    if (const auto* arch = std::get_if<ArArchModel>(&kind_)) {
        return arch->contraction;
    }
    return 0.0;
}

std::size_t ProcessModel::burn_in() const {
    if (!is_markov()) {
        return 0;
    }
    const double r = contraction_rate();
    if (r <= 0.0) {
        return 1;
    }
    const double b = std::ceil(std::log(1e-8) / std::log(r));
    return static_cast<std::size_t>(std::clamp(b, 1.0, 1e4));
}

std::string ProcessModel::name() const {
    std::ostringstream os;
    if (const auto* lin = as_linear()) {
        if (is_iid()) {
            os << "iid";
        } else {
            switch (lin->spec.kind) {
                case CoeffSpec::Kind::explicit_seq: os << "linear(explicit, L=" << lin->spec.lag << ")"; break;
                case CoeffSpec::Kind::geometric: os << "linear(geometric rho=" << lin->spec.rho << ", L=" << lin->spec.lag << ")"; break;
                case CoeffSpec::Kind::longmem: os << "linear(longmem beta=" << lin->spec.beta << ", L=" << lin->spec.lag << ")"; break;
            }
        }
    } else if (const auto* ar = std::get_if<Ar1Model>(&kind_)) {
        os << "ar1(alpha=" << ar->alpha << ")";
    } else if (const auto* arch = std::get_if<ArArchModel>(&kind_)) {
        os << "ar_arch(alpha=" << arch->alpha << ", a=" << arch->a << ")";
    }
    os << " / " << innovation_.name();
    return os.str();
}

double ProcessModel::step(double x_prev, double eps) const {
    if (const auto* ar = std::get_if<Ar1Model>(&kind_)) {
        return ar->alpha * x_prev + eps;
    }
    if (const auto* arch = std::get_if<ArArchModel>(&kind_)) {
        return arch->alpha * x_prev + eps * std::sqrt(arch->a * arch->a + x_prev * x_prev);
    }
    throw ContractError("step() is defined for Markov models only");
}

// ---------------------------------------------------------------- simulation

std::vector<double> iterate(const ProcessModel& model, double x0, std::span<const double> eps) {
    std::vector<double> out(eps.size());
    double x = x0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        x = model.step(x, eps[i]);
        out[i] = x;
    }
    return out;
}

namespace {

double markov_start(const ProcessModel& model, const SeedToken& seed) {
    Philox burn(seed.with_role(StreamRole::burn_in));
    double x = 0.0;
    const std::size_t B = model.burn_in();
    for (std::size_t b = 0; b < B; ++b) {
        x = model.step(x, draw(model.innovation(), burn));
    }
    return x;
}

}  // namespace

Path simulate(const ProcessModel& model, std::size_t n, const SeedToken& seed) {
    if (n == 0) {
        throw ContractError("simulate requires n >= 1");
    }
    Path path;
    Philox rng(seed.with_role(StreamRole::innovations));
    if (const auto* lin = model.as_linear()) {
        const std::size_t L = lin->a.size() - 1;
        path.offset = L;
        path.eps = draw_many(model.innovation(), rng, L + n);
        path.y = causal_convolution(lin->a, path.eps);
        path.x.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            path.x[i] = path.eps[L + i] + path.y[i];
        }
        return path;
    }
    path.offset = 0;
    path.eps = draw_many(model.innovation(), rng, n);
    path.x.resize(n);
    path.y.resize(n);
    double x = markov_start(model, seed);
    for (std::size_t i = 0; i < n; ++i) {
        path.y[i] = x;
        x = model.step(x, path.eps[i]);
        path.x[i] = x;
    }
    return path;
}

std::vector<std::pair<double, double>> simulate_coupled(const ProcessModel& model, std::size_t n, const SeedToken& seed) {
    std::vector<std::pair<double, double>> out(n + 1);
    Philox rng(seed.with_role(StreamRole::innovations));
    Philox coupling(seed.with_role(StreamRole::coupling));
    if (const auto* lin = model.as_linear()) {
        const std::size_t L = lin->a.size() - 1;
        // e[t + L - 1] = eps_t for t = 1-L..n.
        const std::vector<double> e = draw_many(model.innovation(), rng, L + n);
        const double eps0_star = draw(model.innovation(), coupling);
        const std::size_t zero = L - 1 + 0;  // index of eps_0 when L >= 1
        for (std::size_t k = 0; k <= n; ++k) {
            double y = 0.0;
            double ys = 0.0;
            for (std::size_t i = 1; i <= L; ++i) {
                const long t = static_cast<long>(k) + 1 - static_cast<long>(i);
                if (t > static_cast<long>(n)) {
                    continue;
                }
                const std::size_t idx = static_cast<std::size_t>(t + static_cast<long>(L) - 1);
                const double v = e[idx];
                y += lin->a[i] * v;
                ys += lin->a[i] * (L >= 1 && idx == zero ? eps0_star : v);
            }
            out[k] = {y, ys};
        }
        return out;
    }
    const double x_minus1 = markov_start(model, seed);
    const double eps0 = draw(model.innovation(), rng);
    const double eps0_star = draw(model.innovation(), coupling);
    double y = model.step(x_minus1, eps0);
    double ys = model.step(x_minus1, eps0_star);
    out[0] = {y, ys};
    for (std::size_t k = 1; k <= n; ++k) {
        const double e = draw(model.innovation(), rng);
        y = model.step(y, e);
        ys = model.step(ys, e);
        out[k] = {y, ys};
    }
    return out;
}

std::pair<double, double> coupled_state(const ProcessModel& model, std::size_t k, const SeedToken& seed) {
    const auto* lin = model.as_linear();
    if (lin == nullptr) {
        return simulate_coupled(model, k, seed).back();
    }
    Philox rng(seed.with_role(StreamRole::innovations));
    Philox coupling(seed.with_role(StreamRole::coupling));
    const std::size_t L = lin->a.size() - 1;
    const std::vector<double> e = draw_many(model.innovation(), rng, L + k);
    const double eps0_star = draw(model.innovation(), coupling);
    double y = 0.0;
    double ys = 0.0;
    for (std::size_t i = 1; i <= L; ++i) {
        // eps_{k+1-i} sits at index k + L - i.
        const std::size_t idx = k + L - i;
        const double v = e[idx];
        y += lin->a[i] * v;
        ys += lin->a[i] * (idx == L - 1 ? eps0_star : v);
    }
    return {y, ys};
}

// ---------------------------------------------------------------- conditional law

ConditionalLaw conditional_law(const ProcessModel& model, double y) {
    if (!std::isfinite(y)) {
        throw ContractError("conditional_law requires a finite state");
    }
    if (model.as_linear() != nullptr) {
        return {model.innovation(), y, 1.0, 1.0, 0.0};
    }
    if (const auto* ar = std::get_if<Ar1Model>(&model.kind())) {
        return {model.innovation(), ar->alpha * y, 1.0, ar->alpha, 0.0};
    }
    const auto& arch = std::get<ArArchModel>(model.kind());
    const double s = std::sqrt(arch.a * arch.a + y * y);
    return {model.innovation(), arch.alpha * y, s, arch.alpha, y / s};
}

double ConditionalLaw::cdf(double x) const {
    return innovation_cdf(innovation_, (x - mu_) / s_);
}

double ConditionalLaw::pdf(double x) const {
    return innovation_pdf(innovation_, (x - mu_) / s_) / s_;
}

double ConditionalLaw::dpdf_dx(double x) const {
    return innovation_eval(innovation_, (x - mu_) / s_, false).f1 / (s_ * s_);
}

double ConditionalLaw::dcdf_dy(double x) const {
    const double u = (x - mu_) / s_;
    const double uy = -(dmu_ + u * ds_) / s_;
    return innovation_pdf(innovation_, u) * uy;
}

double ConditionalLaw::dpdf_dy(double x) const {
    const double u = (x - mu_) / s_;
    const double uy = -(dmu_ + u * ds_) / s_;
    const DensityEval e = innovation_eval(innovation_, u, false);
    return e.f1 * uy / s_ - e.f * ds_ / (s_ * s_);
}

double ConditionalLaw::d2pdf_dxdy(double x) const {
    const double u = (x - mu_) / s_;
    const double uy = -(dmu_ + u * ds_) / s_;
    const DensityEval e = innovation_eval(innovation_, u, false);
    return e.f2 * uy / (s_ * s_) - 2.0 * e.f1 * ds_ / (s_ * s_ * s_);
}

// ---------------------------------------------------------------- export

void write_path_csv(const Path& path, std::ostream& os) {
    os << "index,eps,x,y\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < path.size(); ++i) {
        os << (i + 1) << ',' << path.eps[path.offset + i] << ',' << path.x[i] << ',' << path.y[i] << '\n';
    }
}

}  // namespace depemp
