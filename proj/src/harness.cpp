#include "depemp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "depemp/digest.hpp"
#include "depemp/errors.hpp"
#include "depemp/longmem.hpp"
#include "depemp/marginal.hpp"
#include "depemp/parallel.hpp"
#include "depemp/quadrature.hpp"

namespace depemp {

namespace {

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Type-7 quantile of sorted data.
double quantile_sorted(const std::vector<double>& s, double p) {
    if (s.empty()) {
        return 0.0;
    }
    const double h = p * static_cast<double>(s.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

StatRow describe(const std::string& name, std::size_t n, const std::vector<double>& v) {
    StatRow row;
    row.statistic = name;
    row.n = n;
    row.count = v.size();
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    row.mean = v.empty() ? 0.0 : s / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) {
        ss += (x - row.mean) * (x - row.mean);
    }
    row.variance = v.size() > 1 ? ss / static_cast<double>(v.size() - 1) : 0.0;
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    row.q05 = quantile_sorted(sorted, 0.05);
    row.q50 = quantile_sorted(sorted, 0.5);
    row.q95 = quantile_sorted(sorted, 0.95);
    return row;
}

std::string with_n(const std::string& stat, std::size_t n) { return stat + "@n=" + std::to_string(n); }

SeedToken cell_seed(const ExperimentConfig& cfg, std::size_t n_index, std::size_t rep) {
    return SeedToken{cfg.seed, 0, static_cast<std::uint64_t>(StreamRole::innovations)}.child(n_index).with_replication(rep);
}

void push_data(ExperimentSummary& out, const std::string& stat, std::size_t n, const std::vector<double>& v) {
    for (std::size_t r = 0; r < v.size(); ++r) {
        out.data.push_back({stat, n, r, v[r]});
    }
    out.rows.push_back(describe(stat, n, v));
}

// ----------------------------------------------------------------- clt

void run_clt(const ExperimentConfig& cfg, ExperimentSummary& out) {
    const ProcessModel& model = *cfg.model;
    const auto marginal = marginal_law(model);
    const std::size_t G = cfg.functions.size();
    std::vector<double> Eg(G);
    std::vector<double> target(G);
    const Path long_path = simulate(model, cfg.longrun_length, SeedToken{cfg.seed, 0, static_cast<std::uint64_t>(StreamRole::pilot)});
    for (std::size_t g = 0; g < G; ++g) {
        Eg[g] = expectation(cfg.functions[g], *marginal);
        std::vector<double> series(long_path.size());
        for (std::size_t i = 0; i < series.size(); ++i) {
            series[i] = cfg.functions[g].g(long_path.x[i]);
        }
        target[g] = longrun_variance(series);
    }
    for (std::size_t ni = 0; ni < cfg.n_values.size(); ++ni) {
        const std::size_t n = cfg.n_values[ni];
        std::vector<double> vals(G * cfg.reps);
        parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
            const Path path = simulate(model, n, cell_seed(cfg, ni, r));
            for (std::size_t g = 0; g < G; ++g) {
                vals[g * cfg.reps + r] = std::sqrt(static_cast<double>(n)) * indexed_emp(path.x, cfg.functions[g], Eg[g]);
            }
        });
        for (std::size_t g = 0; g < G; ++g) {
            std::vector<double> v(vals.begin() + static_cast<long>(g * cfg.reps), vals.begin() + static_cast<long>((g + 1) * cfg.reps));
            const std::string stat = "clt:" + cfg.functions[g].name;
            push_data(out, stat, n, v);
            const NormalityReport nr = normality_diagnostics(v);
            const double var = out.rows.back().variance;
            Verdict vd;
            vd.name = with_n(stat, n);
            vd.metrics = {{"skewness", nr.skewness}, {"excess_kurtosis", nr.excess_kurtosis}, {"ks", nr.ks},
                          {"ks_threshold", nr.ks_threshold}, {"mc_variance", var}, {"longrun_target", target[g]},
                          {"relative_error", target[g] > 0.0 ? var / target[g] - 1.0 : 0.0}};
            const bool var_ok = target[g] > 0.0 && std::abs(var / target[g] - 1.0) <= cfg.var_tol;
            vd.pass = nr.pass && var_ok;
            vd.detail = nr.pass ? (var_ok ? "normality and variance match" : "variance off target") : nr.message;
            out.verdicts.push_back(std::move(vd));
        }
    }
}

// ----------------------------------------------------- supbound / modulus

void run_sup_family(const ExperimentConfig& cfg, ExperimentSummary& out, bool modulus) {
    const ProcessModel& model = *cfg.model;
    const auto marginal = marginal_law(model);
    const LawEvaluator law = law_of(*marginal);
    if (modulus && !(cfg.q > 2.0)) {
        throw ConfigError("modulus experiment needs q > 2");
    }
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> log_x;
    std::vector<double> log_mean;
    double grand = 0.0;
    std::vector<std::vector<double>> per_n;
    for (std::size_t ni = 0; ni < cfg.n_values.size(); ++ni) {
        const std::size_t n = cfg.n_values[ni];
        const double delta = modulus ? modulus_delta(n, cfg.q, cfg.delta_c) : 0.0;
        std::vector<double> v(cfg.reps);
        parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
            const Path path = simulate(model, n, cell_seed(cfg, ni, r));
            if (modulus) {
                v[r] = modulus_stat(path.x, law, delta, cfg.gamma, cfg.q);
            } else {
                const double s = weighted_sup_rn(path.x, law, cfg.gamma, cfg.q);
                v[r] = s * s;
            }
        });
        const std::string stat = modulus ? "modulus" : "supbound";
        push_data(out, stat, n, v);
        const double mean = out.rows.back().mean;
        grand += mean;
        log_x.push_back(modulus ? std::log(delta) : std::log(static_cast<double>(n)));
        log_mean.push_back(std::log(mean));
        per_n.push_back(std::move(v));
    }
    Verdict vd;
    if (modulus) {
        const LineFit fit = fit_line(log_x, log_mean);
        const double target = 1.0 - 2.0 / cfg.q;
        vd.name = "modulus:loglog_slope";
        vd.metrics = {{"slope", fit.slope}, {"slope_se", fit.slope_se}, {"target", target}, {"tolerance", cfg.slope_tol}};
        vd.pass = std::abs(fit.slope - target) <= cfg.slope_tol;
        vd.detail = "log mean modulus statistic against log delta_n";
    } else {
        // Pooled regression of the replicate values, scaled by the grand mean,
        // on log n: the slope is a relative change per unit log n.
        grand /= static_cast<double>(cfg.n_values.size());
        for (std::size_t ni = 0; ni < per_n.size(); ++ni) {
            for (double v : per_n[ni]) {
                xs.push_back(log_x[ni]);
                ys.push_back(v / grand);
            }
        }
        const LineFit fit = fit_line(xs, ys);
        const double t = student_t_quantile(static_cast<double>(xs.size() - 2), 0.975);
        const double upper = fit.slope + t * fit.slope_se;
        vd.name = "supbound:trend";
        vd.metrics = {{"relative_slope", fit.slope}, {"slope_se", fit.slope_se}, {"ci_upper", upper}, {"limit", cfg.slope_ci_upper}};
        vd.pass = upper <= cfg.slope_ci_upper;
        vd.detail = "pooled regression of sup^2 / grand mean on log n, 95% CI";
    }
    out.verdicts.push_back(std::move(vd));
}

// ------------------------------------------------------------ tightness

void run_tightness(const ExperimentConfig& cfg, ExperimentSummary& out) {
    const ProcessModel& model = *cfg.model;
    const auto marginal = marginal_law(model);
    const std::size_t G = cfg.functions.size();
    std::vector<double> Eg(G);
    for (std::size_t g = 0; g < G; ++g) {
        Eg[g] = expectation(cfg.functions[g], *marginal);
    }
    for (std::size_t ni = 0; ni < cfg.n_values.size(); ++ni) {
        const std::size_t n = cfg.n_values[ni];
        const std::size_t P = cfg.partitions.size();
        std::vector<double> osc(P * cfg.reps);
        parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
            const Path path = simulate(model, n, cell_seed(cfg, ni, r));
            std::vector<double> Gn(G);
            for (std::size_t g = 0; g < G; ++g) {
                Gn[g] = std::sqrt(static_cast<double>(n)) * indexed_emp(path.x, cfg.functions[g], Eg[g]);
            }
            for (std::size_t pi = 0; pi < P; ++pi) {
                const std::size_t parts = std::min(cfg.partitions[pi], G);
                const std::size_t size = (G + parts - 1) / parts;
                double worst = 0.0;
                for (std::size_t start = 0; start < G; start += size) {
                    const auto first = Gn.begin() + static_cast<long>(start);
                    const auto last = Gn.begin() + static_cast<long>(std::min(G, start + size));
                    const auto [mn, mx] = std::minmax_element(first, last);
                    worst = std::max(worst, *mx - *mn);
                }
                osc[pi * cfg.reps + r] = worst;
            }
        });
        for (std::size_t pi = 0; pi < P; ++pi) {
            std::vector<double> v(osc.begin() + static_cast<long>(pi * cfg.reps), osc.begin() + static_cast<long>((pi + 1) * cfg.reps));
            const std::string stat = "oscillation:P=" + std::to_string(cfg.partitions[pi]);
            push_data(out, stat, n, v);
            Verdict vd;
            vd.name = with_n(stat, n);
            vd.asserted = false;
            for (double level : cfg.levels) {
                const auto hits = std::count_if(v.begin(), v.end(), [&](double x) { return x > level; });
                vd.metrics["exceed@" + fmt17(level)] = static_cast<double>(hits) / static_cast<double>(v.size());
            }
            vd.detail = "exceedance frequency of the largest within-cell oscillation";
            out.verdicts.push_back(std::move(vd));
        }
    }
}

// -------------------------------------------------------------- scaling

void run_scaling(const ExperimentConfig& cfg, ExperimentSummary& out) {
    const ProcessModel& model = *cfg.model;
    const auto* lin = model.as_linear();
    if (lin == nullptr || lin->spec.kind != CoeffSpec::Kind::longmem) {
        throw ConfigError("scaling experiment needs a linear model with long-memory coefficients");
    }
    if (cfg.functions.empty()) {
        throw ConfigError("scaling experiment needs a function K");
    }
    const TestFunction& K = cfg.functions.front();
    const int pmax = *std::max_element(cfg.p_values.begin(), cfg.p_values.end());
    const MarginalDerivs md = marginal_derivs(model, K, pmax);
    const std::size_t nmax = cfg.n_values.back();
    const std::size_t Pn = cfg.p_values.size();
    const std::size_t Nn = cfg.n_values.size();
    // A second function, when given, is evaluated on the same paths at n_max:
    // below the threshold both residuals share one limit up to a constant.
    const bool cross = cfg.functions.size() >= 2;
    const TestFunction* K2 = cross ? &cfg.functions[1] : nullptr;
    const MarginalDerivs md2 = cross ? marginal_derivs(model, *K2, pmax) : md;
    std::vector<double> vals(Pn * Nn * cfg.reps);
    std::vector<double> vals2(cross ? Pn * cfg.reps : 0);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
        const Path path = simulate(model, nmax, cell_seed(cfg, 0, r));
        for (std::size_t pi = 0; pi < Pn; ++pi) {
            const std::vector<double> s = expansion_residual_prefixes(path, lin->a, K, cfg.p_values[pi], md, cfg.n_values);
            for (std::size_t ni = 0; ni < Nn; ++ni) {
                vals[(pi * Nn + ni) * cfg.reps + r] = s[ni];
            }
            if (cross) {
                vals2[pi * cfg.reps + r] = expansion_residual(path, lin->a, *K2, cfg.p_values[pi], md2);
            }
        }
    });
    for (std::size_t pi = 0; pi < Pn; ++pi) {
        const int p = cfg.p_values[pi];
        const std::string stat = "S_n:p=" + std::to_string(p);
        std::vector<double> lx;
        std::vector<double> ly;
        for (std::size_t ni = 0; ni < Nn; ++ni) {
            const auto first = vals.begin() + static_cast<long>((pi * Nn + ni) * cfg.reps);
            std::vector<double> v(first, first + static_cast<long>(cfg.reps));
            push_data(out, stat, cfg.n_values[ni], v);
            lx.push_back(std::log(static_cast<double>(cfg.n_values[ni])));
            ly.push_back(std::log(out.rows.back().variance));
        }
        const LineFit fit = fit_line(lx, ly);
        const double target = scaling_target_slope(p, lin->spec.beta);
        Verdict vd;
        vd.name = "scaling:p=" + std::to_string(p);
        vd.metrics = {{"slope", fit.slope}, {"slope_se", fit.slope_se}, {"target", target}, {"tolerance", cfg.scaling_tol},
                      {"K_inf_deriv_p1", md.kinf.size() > static_cast<std::size_t>(p + 1) ? md.kinf[static_cast<std::size_t>(p + 1)] : 0.0}};
        vd.pass = std::abs(fit.slope - target) <= cfg.scaling_tol;
        vd.detail = "log Var S_n(K;p) against log n";
        out.verdicts.push_back(std::move(vd));

        if (cross) {
            const auto first = vals.begin() + static_cast<long>((pi * Nn + Nn - 1) * cfg.reps);
            const std::vector<double> a(first, first + static_cast<long>(cfg.reps));
            const std::vector<double> b(vals2.begin() + static_cast<long>(pi * cfg.reps),
                                        vals2.begin() + static_cast<long>((pi + 1) * cfg.reps));
            push_data(out, stat + ":K2", nmax, b);
            double ma = 0.0;
            double mb = 0.0;
            for (std::size_t r = 0; r < cfg.reps; ++r) {
                ma += a[r];
                mb += b[r];
            }
            ma /= static_cast<double>(cfg.reps);
            mb /= static_cast<double>(cfg.reps);
            double sab = 0.0;
            double saa = 0.0;
            double sbb = 0.0;
            for (std::size_t r = 0; r < cfg.reps; ++r) {
                sab += (a[r] - ma) * (b[r] - mb);
                saa += (a[r] - ma) * (a[r] - ma);
                sbb += (b[r] - mb) * (b[r] - mb);
            }
            Verdict cv;
            cv.name = "cross_k_corr:p=" + std::to_string(p);
            cv.asserted = false;
            cv.metrics = {{"corr", saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : 0.0}, {"n", static_cast<double>(nmax)}};
            cv.detail = "correlation of S_n(K;p) and S_n(K2;p) at the largest n, recorded only";
            out.verdicts.push_back(std::move(cv));
        }
    }
}

}  // namespace

double longrun_variance(std::span<const double> series, std::size_t bandwidth) {
    const std::size_t n = series.size();
    if (bandwidth == 0) {
        bandwidth = static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n))));
    }
    if (n == 0 || n < 10 * bandwidth) {
        throw ContractError("long-run variance needs a series of at least 10 * bandwidth values");
    }
    double mean = 0.0;
    for (double v : series) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    auto autocov = [&](std::size_t k) {
        double s = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) {
            s += (series[i] - mean) * (series[i + k] - mean);
        }
        return s / static_cast<double>(n);
    };
    double lrv = autocov(0);
    for (std::size_t k = 1; k <= bandwidth; ++k) {
        const double w = 1.0 - static_cast<double>(k) / static_cast<double>(bandwidth + 1);
        lrv += 2.0 * w * autocov(k);
    }
    return std::max(0.0, lrv);
}

NormalityReport normality_diagnostics(std::span<const double> samples) {
    const std::size_t n = samples.size();
    if (n < 500) {
        throw ContractError("normality diagnostics need at least 500 samples");
    }
    NormalityReport r;
    r.count = n;
    const double nd = static_cast<double>(n);
    for (double v : samples) {
        r.mean += v;
    }
    r.mean /= nd;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    for (double v : samples) {
        const double d = v - r.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= nd;
    m3 /= nd;
    m4 /= nd;
    r.ks_threshold = 1.2 * 1.358 / std::sqrt(nd);
    if (!(m2 > 1e-300) || m2 <= 1e-24 * r.mean * r.mean) {
        r.degenerate = true;
        r.pass = false;
        r.message = "degenerate: the samples have zero variance";
        return r;
    }
    r.sd = std::sqrt(m2 * nd / (nd - 1.0));
    r.skewness = m3 / std::pow(m2, 1.5);
    r.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    std::vector<double> z(samples.begin(), samples.end());
    std::sort(z.begin(), z.end());
    for (std::size_t i = 0; i < n; ++i) {
        const double F = std_normal_cdf((z[i] - r.mean) / r.sd);
        r.ks = std::max({r.ks, static_cast<double>(i + 1) / nd - F, F - static_cast<double>(i) / nd});
    }
    const bool skew_ok = std::abs(r.skewness) < 0.15;
    const bool kurt_ok = std::abs(r.excess_kurtosis) < 0.4;
    const bool ks_ok = r.ks < r.ks_threshold;
    r.pass = skew_ok && kurt_ok && ks_ok;
    std::ostringstream os;
    if (!skew_ok) os << "skewness " << r.skewness << " outside 0.15; ";
    if (!kurt_ok) os << "excess kurtosis " << r.excess_kurtosis << " outside 0.4; ";
    if (!ks_ok) os << "KS distance " << r.ks << " above " << r.ks_threshold << "; ";
    r.message = r.pass ? "normal" : os.str();
    return r;
}

void ExperimentConfig::validate() const {
    static const std::vector<std::string> kinds{"clt", "supbound", "modulus", "tightness", "scaling"};
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
        throw ConfigError("kind: unknown experiment kind '" + kind + "'");
    }
    if (!model) {
        throw ConfigError("model: missing");
    }
    if (reps < 100) {
        throw ConfigError("reps: at least 100 replications are required");
    }
    if (n_values.empty()) {
        throw ConfigError("n: at least one sample size is required");
    }
    for (std::size_t i = 1; i < n_values.size(); ++i) {
        if (n_values[i] <= n_values[i - 1]) {
            throw ConfigError("n: sample sizes must be strictly increasing");
        }
    }
    if ((kind == "clt" || kind == "tightness" || kind == "scaling") && functions.empty()) {
        throw ConfigError("functions: the " + kind + " experiment needs at least one function");
    }
    if ((kind == "supbound" || kind == "modulus" || kind == "scaling") && n_values.size() < 3) {
        throw ConfigError("n: trend and slope fits need at least three sample sizes");
    }
    if (kind == "scaling" && p_values.empty()) {
        throw ConfigError("p: the scaling experiment needs expansion orders");
    }
    if (kind == "tightness" && (partitions.empty() || levels.empty())) {
        throw ConfigError("partitions/levels: the tightness diagnostic needs both");
    }
}

bool ExperimentSummary::pass() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return !v.asserted || v.pass; });
}

double modulus_delta(std::size_t n, double q, double c) {
    const double ln = std::log(static_cast<double>(n));
    return c * std::pow(ln, 2.0 * q / (q - 2.0)) / std::sqrt(static_cast<double>(n));
}

double scaling_target_slope(int p, double beta) {
    const double e = (p + 1) * (2.0 * beta - 1.0);
    return e < 1.0 ? 2.0 - e : 1.0;
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentSummary out;
    out.kind = config.kind;
    out.model = config.model->name();
    out.config_digest = config.digest;
    out.seed = config.seed;
    try {
        if (config.kind == "clt") {
            run_clt(config, out);
        } else if (config.kind == "supbound") {
            run_sup_family(config, out, false);
        } else if (config.kind == "modulus") {
            run_sup_family(config, out, true);
        } else if (config.kind == "tightness") {
            run_tightness(config, out);
        } else {
            run_scaling(config, out);
        }
    } catch (const ConfigError& e) {
        throw ConfigError(config.kind + " experiment on " + out.model + ": " + e.what());
    } catch (const ContractError& e) {
        throw ContractError(config.kind + " experiment on " + out.model + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(config.kind + " experiment on " + out.model + ": " + e.what());
    }
    return out;
}

void write_summary_json(const ExperimentSummary& s, std::ostream& os) {
    nlohmann::ordered_json j;
    j["kind"] = s.kind;
    j["model"] = s.model;
    j["config_digest"] = s.config_digest;
    j["seed"] = s.seed;
    j["pass"] = s.pass();
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : s.rows) {
        rows.push_back({{"statistic", r.statistic}, {"n", r.n}, {"count", r.count}, {"mean", r.mean},
                        {"variance", r.variance}, {"q05", r.q05}, {"q50", r.q50}, {"q95", r.q95}});
    }
    j["statistics"] = std::move(rows);
    nlohmann::ordered_json verdicts = nlohmann::ordered_json::array();
    for (const auto& v : s.verdicts) {
        nlohmann::ordered_json m = nlohmann::ordered_json::object();
        for (const auto& [k, x] : v.metrics) {
            m[k] = x;
        }
        verdicts.push_back({{"name", v.name}, {"asserted", v.asserted}, {"pass", v.pass}, {"metrics", m}, {"detail", v.detail}});
    }
    j["verdicts"] = std::move(verdicts);
    os << j.dump(2) << '\n';
}

void write_long_csv(const ExperimentSummary& s, std::ostream& os) {
    os << "statistic,n,rep,value\n";
    for (const auto& d : s.data) {
        os << d.statistic << ',' << d.n << ',' << d.rep << ',' << fmt17(d.value) << '\n';
    }
}

}  // namespace depemp
