#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "depemp/config.hpp"
#include "depemp/decomposition.hpp"
#include "depemp/dependence.hpp"
#include "depemp/digest.hpp"
#include "depemp/errors.hpp"
#include "depemp/harness.hpp"
#include "depemp/inequalities.hpp"
#include "depemp/longmem.hpp"
#include "depemp/marginal.hpp"
#include "depemp/parallel.hpp"

#ifndef DEPEMP_VERSION
#define DEPEMP_VERSION "0.0.0"
#endif

namespace depemp {

namespace {

namespace fs = std::filesystem;
using OJson = nlohmann::ordered_json;

struct Options {
    std::string config;
    std::string out = "runs";
    bool out_given = false;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::string suite = "all";
    std::size_t trials = 10000;
};

// Everything a subcommand produces; files are only written once the whole
// run has succeeded.
struct RunResult {
    std::string digest;
    std::uint64_t seed = 0;
    std::vector<std::string> failed;
    std::vector<std::pair<std::string, std::string>> files;
};

void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        os << content;
        os.flush();
        if (!os) {
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

void require_kind(const Json& doc, const std::vector<std::string>& allowed) {
    const Fields f(doc, "");
    const std::string kind = f.text("kind");
    for (const auto& a : allowed) {
        if (kind == a) {
            return;
        }
    }
    std::string list;
    for (const auto& a : allowed) {
        list += (list.empty() ? "" : ", ") + a;
    }
    throw ConfigError("kind: '" + kind + "' does not match this subcommand (expected " + list + ")");
}

std::uint64_t pick_seed(const Options& opt, const Fields& f) { return opt.seed ? *opt.seed : f.u64("seed", 0); }

std::string csv_or_json_rows(const std::vector<std::string>& cols, const std::vector<std::vector<std::string>>& rows,
                             const std::string& format) {
    std::ostringstream os;
    if (format == "json") {
        OJson arr = OJson::array();
        for (const auto& r : rows) {
            OJson o;
            for (std::size_t c = 0; c < cols.size(); ++c) {
                o[cols[c]] = r[c];
            }
            arr.push_back(std::move(o));
        }
        os << arr.dump(2) << '\n';
        return os.str();
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
        os << (c ? "," : "") << cols[c];
    }
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            os << (c ? "," : "") << r[c];
        }
        os << '\n';
    }
    return os.str();
}

// ------------------------------------------------------------ subcommands

RunResult cmd_simulate(const Options& opt) {
    const Json doc = load_config_file(opt.config);
    require_kind(doc, {"simulate"});
    const Fields f(doc, "");
    f.only({"kind", "model", "n", "seed"});
    const ProcessModel model = parse_model(f.object("model"));
    const std::size_t n = f.count("n");
    RunResult res;
    res.digest = config_digest(doc);
    res.seed = pick_seed(opt, f);
    const Path path = simulate(model, n, SeedToken{res.seed, 0, static_cast<std::uint64_t>(StreamRole::innovations)});
    if (opt.format == "json") {
        OJson j;
        j["model"] = model.name();
        j["x"] = path.x;
        j["y"] = path.y;
        j["eps"] = std::vector<double>(path.eps.begin() + static_cast<long>(path.offset), path.eps.end());
        res.files.emplace_back("path.json", j.dump(2) + "\n");
    } else {
        std::ostringstream os;
        write_path_csv(path, os);
        res.files.emplace_back("path.csv", os.str());
    }
    return res;
}

RunResult cmd_decompose(const Options& opt) {
    const Json doc = load_config_file(opt.config);
    require_kind(doc, {"decompose"});
    const Fields f(doc, "");
    f.only({"kind", "model", "n", "seed", "s", "functions"});
    const ProcessModel model = parse_model(f.object("model"));
    const std::size_t n = f.count("n");
    const std::vector<double> s_values = f.has("s") ? f.numbers("s") : std::vector<double>{-1.0, 0.0, 1.0};
    const std::vector<TestFunction> fns = f.has("functions") ? parse_functions(f) : std::vector<TestFunction>{};
    RunResult res;
    res.digest = config_digest(doc);
    res.seed = pick_seed(opt, f);
    const Path path = simulate(model, n, SeedToken{res.seed, 0, static_cast<std::uint64_t>(StreamRole::innovations)});
    const auto marginal = marginal_law(model);
    const LawEvaluator law = law_of(*marginal);
    std::vector<std::vector<std::string>> rows;
    for (double s : s_values) {
        const DecompResult d = decompose_rn(model, path, law, s);
        rows.push_back({"point", fmt17(s), fmt17(d.total), fmt17(d.martingale), fmt17(d.drift), fmt17(d.residual)});
        if (!(d.residual <= 1e-10)) {
            res.failed.push_back("G_n + Q_n = R_n at s = " + fmt17(s));
        }
    }
    for (const auto& g : fns) {
        const DecompResult d = decompose_indexed(model, path, g, expectation(g, *marginal));
        rows.push_back({"function", g.name, fmt17(d.total), fmt17(d.martingale), fmt17(d.drift), fmt17(d.residual)});
        if (!(d.residual <= 1e-6)) {
            res.failed.push_back("M_n + N_n for " + g.name);
        }
    }
    res.files.emplace_back(opt.format == "json" ? "decompose.json" : "decompose.csv",
                           csv_or_json_rows({"kind", "target", "total", "martingale", "drift", "residual"}, rows, opt.format));
    return res;
}

RunResult cmd_coeffs(const Options& opt) {
    const Json doc = load_config_file(opt.config);
    require_kind(doc, {"coeffs"});
    const Fields f(doc, "");
    f.only({"kind", "model", "field", "lambda", "lags", "reps", "seed", "sigma_jmax", "gmc"});
    const ProcessModel model = parse_model(f.object("model"));
    const Field h = parse_field(f.text("field", "pdf"));
    const WeightedMeasure m = WeightedMeasure::power(f.number("lambda", 0.0));
    const std::size_t reps = f.count("reps", 2000);
    RunResult res;
    res.digest = config_digest(doc);
    res.seed = pick_seed(opt, f);
    const SeedToken seed{res.seed, 0, static_cast<std::uint64_t>(StreamRole::coupling)};
    OJson extra;
    extra["model"] = model.name();
    if (f.has("lags")) {
        std::vector<ProjBound> rows;
        for (std::size_t j : f.counts("lags")) {
            rows.push_back(proj_bound_estimate(model, h, m, j, reps, seed.child(j), opt.threads));
        }
        std::ostringstream os;
        write_proj_bounds_csv(rows, os);
        res.files.emplace_back("proj_bounds.csv", os.str());
    }
    if (f.has("sigma_jmax")) {
        const SigmaEstimate s = sigma_hm_estimate(model, h, m, f.count("sigma_jmax"), reps, seed.child(1u << 20), opt.threads);
        extra["sigma"] = {{"partial_sum", s.partial_sum}, {"tail_estimate", s.tail_estimate}, {"summable", s.summable},
                          {"tail_model", s.tail_model}, {"tail_slope", s.tail_slope}};
    }
    if (f.has("gmc")) {
        const Fields g = f.object("gmc");
        g.only({"beta", "n"});
        const GmcFit fit = gmc_rate_fit(model, g.number("beta", 1.0), g.counts("n"), reps, seed.child(1u << 21), opt.threads);
        extra["gmc"] = {{"r_hat", fit.r_hat}, {"C_hat", fit.C_hat}, {"r_squared", fit.r_squared}, {"geometric", fit.geometric},
                        {"moments", fit.moments}};
    }
    res.files.emplace_back("coeffs.json", extra.dump(2) + "\n");
    return res;
}

void add_experiment_outputs(const ExperimentSummary& s, const Options& opt, RunResult& res) {
    std::ostringstream js;
    write_summary_json(s, js);
    res.files.emplace_back("summary.json", js.str());
    if (opt.format == "json") {
        OJson arr = OJson::array();
        for (const auto& d : s.data) {
            arr.push_back({{"statistic", d.statistic}, {"n", d.n}, {"rep", d.rep}, {"value", d.value}});
        }
        res.files.emplace_back("data.json", arr.dump(1) + "\n");
    } else {
        std::ostringstream cs;
        write_long_csv(s, cs);
        res.files.emplace_back("data.csv", cs.str());
    }
    for (const auto& v : s.verdicts) {
        if (v.asserted && !v.pass) {
            res.failed.push_back(v.name + ": " + v.detail);
        }
    }
}

RunResult cmd_longmem(const Options& opt) {
    const Json doc = load_config_file(opt.config);
    require_kind(doc, {"longmem"});
    // The longmem document is a scaling experiment under another name.
    Json as_scaling = doc;
    as_scaling["kind"] = "scaling";
    ExperimentConfig cfg = parse_experiment_config(as_scaling);
    cfg.digest = config_digest(doc);
    if (opt.seed) {
        cfg.seed = *opt.seed;
    }
    if (opt.threads) {
        cfg.threads = opt.threads;
    }
    RunResult res;
    res.digest = cfg.digest;
    res.seed = cfg.seed;
    const ExperimentSummary s = run_experiment(cfg);
    add_experiment_outputs(s, opt, res);
    const double beta = cfg.model->as_linear()->spec.beta;
    std::vector<std::vector<std::string>> rows;
    for (int p : cfg.p_values) {
        for (std::size_t n : cfg.n_values) {
            const SigmaNorm sn = sigma_np_norm(n, p, beta);
            rows.push_back({std::to_string(p), std::to_string(n), fmt17(sn.value), sn.degenerate ? "1" : "0"});
            if (sn.degenerate) {
                std::cerr << "warning: " << sn.warning << '\n';
            }
        }
    }
    res.files.emplace_back(opt.format == "json" ? "norms.json" : "norms.csv",
                           csv_or_json_rows({"p", "n", "sigma_np", "degenerate"}, rows, opt.format));
    return res;
}

RunResult cmd_experiment(const Options& opt) {
    const Json doc = load_config_file(opt.config);
    require_kind(doc, {"clt", "supbound", "modulus", "tightness", "scaling"});
    ExperimentConfig cfg = parse_experiment_config(doc);
    if (opt.seed) {
        cfg.seed = *opt.seed;
    }
    if (opt.threads) {
        cfg.threads = opt.threads;
    }
    RunResult res;
    res.digest = cfg.digest;
    res.seed = cfg.seed;
    add_experiment_outputs(run_experiment(cfg), opt, res);
    return res;
}

RunResult cmd_verify(const Options& opt) {
    Options o = opt;
    RunResult res;
    OJson settings;
    if (!opt.config.empty()) {
        const Json doc = load_config_file(opt.config);
        require_kind(doc, {"verify-ineq"});
        const Fields f(doc, "");
        f.only({"kind", "suite", "trials", "seed"});
        o.suite = f.text("suite", o.suite);
        o.trials = f.count("trials", o.trials);
        if (!opt.seed) {
            o.seed = f.u64("seed", 0);
        }
        res.digest = config_digest(doc);
    }
    std::vector<std::string> suites;
    if (o.suite == "all") {
        suites = sweep_suites();
    } else {
        suites.push_back(o.suite);
    }
    if (o.trials == 0) {
        throw ConfigError("trials: must be positive");
    }
    res.seed = o.seed.value_or(0);
    if (res.digest.empty()) {
        settings["suite"] = o.suite;
        settings["trials"] = o.trials;
        res.digest = config_digest(Json::parse(settings.dump()));
    }
    OJson summary = OJson::array();
    for (const auto& name : suites) {
        const SweepSummary s = run_sweep(name, o.trials, res.seed, o.threads);
        std::cout << name << ": " << (s.pass() ? "PASS" : "FAIL") << " trials=" << s.trials << " failures=" << s.failures
                  << " min_margin=" << s.min_margin << " shuffle_diff=" << s.max_shuffle_diff << '\n';
        summary.push_back({{"suite", name}, {"trials", s.trials}, {"failures", s.failures}, {"min_margin", s.min_margin},
                           {"max_shuffle_diff", s.max_shuffle_diff}, {"pass", s.pass()}});
        if (!s.pass()) {
            res.failed.push_back("inequality suite " + name);
        }
        std::ostringstream os;
        write_reports_json(s.reports, os);
        res.files.emplace_back("ineq_" + name + ".json", os.str());
    }
    if (o.suite == "all" || o.suite == "hardy") {
        OJson probes;
        const std::vector<double> T{10.0, 100.0, 1000.0, 10000.0};
        for (double g : {0.5, 1.0, 2.0}) {
            probes["sharpness_gamma_" + fmt17(g)] = hardy_sharpness_probe(g, T);
        }
        probes["sharpness_T"] = T;
        probes["sup_constant_estimate_gamma1_mu0.5"] = estimate_sup_constant(1.0, 0.5, 200, res.seed);
        res.files.emplace_back("hardy_probes.json", probes.dump(2) + "\n");
    }
    res.files.emplace_back("ineq_summary.json", summary.dump(2) + "\n");
    return res;
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"depemp: empirical processes of dependent sequences"};
    app.set_version_flag("--version", DEPEMP_VERSION);
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed_value = 0;

    auto add_common = [&](CLI::App* sub, bool need_config) {
        auto* c = sub->add_option("--config", opt.config, "JSON config document");
        if (need_config) {
            c->required();
        }
        sub->add_option("--seed", seed_value, "master seed (overrides the config)");
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--threads", opt.threads, "worker threads (default: DEPEMP_THREADS or hardware)");
        sub->add_option("--format", opt.format, "data format")->check(CLI::IsMember({"csv", "json"}));
    };
    auto* simulate_cmd = app.add_subcommand("simulate", "simulate one path");
    auto* decompose_cmd = app.add_subcommand("decompose", "martingale decomposition of one path");
    auto* coeffs_cmd = app.add_subcommand("coeffs", "coupling-based dependence coefficients");
    auto* longmem_cmd = app.add_subcommand("longmem", "long-memory expansion scaling");
    auto* verify_cmd = app.add_subcommand("verify-ineq", "exact inequality sweeps");
    auto* experiment_cmd = app.add_subcommand("experiment", "Monte Carlo experiment");
    for (auto* sub : {simulate_cmd, decompose_cmd, coeffs_cmd, longmem_cmd, experiment_cmd}) {
        add_common(sub, true);
    }
    add_common(verify_cmd, false);
    verify_cmd->add_option("--suite", opt.suite, "suite name or all")
        ->check(CLI::IsMember({"all", "hardy", "intsum", "burkholder", "maximal", "archineq"}));
    verify_cmd->add_option("--trials", opt.trials, "randomized cases per suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed") > 0) {
        opt.seed = seed_value;
    }
    opt.out_given = sub->count("--out") > 0;

    const auto start = std::chrono::steady_clock::now();
    RunResult res;
    try {
        const std::string name = sub->get_name();
        if (name == "simulate") {
            res = cmd_simulate(opt);
        } else if (name == "decompose") {
            res = cmd_decompose(opt);
        } else if (name == "coeffs") {
            res = cmd_coeffs(opt);
        } else if (name == "longmem") {
            res = cmd_longmem(opt);
        } else if (name == "verify-ineq") {
            res = cmd_verify(opt);
        } else {
            res = cmd_experiment(opt);
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 1;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const bool write_files = sub->get_name() != "verify-ineq" || opt.out_given;
    std::vector<std::string> written;
    if (write_files) {
        try {
            const fs::path dir(opt.out);
            fs::create_directories(dir);
            for (const auto& [file, content] : res.files) {
                write_atomic(dir / file, content);
                written.push_back((dir / file).string());
            }
            OJson manifest;
            manifest["tool"] = "depemp";
            manifest["tool_version"] = DEPEMP_VERSION;
            manifest["subcommand"] = sub->get_name();
            manifest["config_digest"] = res.digest;
            manifest["master_seed"] = res.seed;
            manifest["outputs"] = written;
            manifest["wall_clock_seconds"] = wall;
            manifest["finished_at"] = utc_now();
            manifest["verdict"] = {{"pass", res.failed.empty()}, {"failed", res.failed}};
            write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
        } catch (const std::exception& e) {
            std::cerr << "output error: " << e.what() << '\n';
            return 1;
        }
    }
    for (const auto& f : res.failed) {
        std::cerr << "check failed: " << f << '\n';
    }
    return res.failed.empty() ? 0 : 1;
}

}  // namespace depemp
