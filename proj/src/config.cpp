#include "depemp/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "depemp/digest.hpp"
#include "depemp/errors.hpp"

namespace depemp {

namespace {

std::string type_name(const Json& j) { return j.type_name(); }

}  // namespace

Json parse_config_text(const std::string& text, const std::string& source) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        // Translate the byte offset into line and column.
        const std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i < limit; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string msg = e.what();
        const auto pos = msg.find("syntax error");
        if (pos != std::string::npos) {
            msg = msg.substr(pos);
        }
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
    }
}

Json load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(path + ": cannot open config file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string config_digest(const Json& doc) { return hex64(fnv1a64(doc.dump())); }

Fields::Fields(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) {
        throw ConfigError((path_.empty() ? std::string("document") : path_) + ": expected an object, got " + type_name(obj_));
    }
}

std::string Fields::where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool Fields::has(const std::string& key) const { return obj_.contains(key); }

const Json& Fields::at(const std::string& key) const {
    if (!obj_.contains(key)) {
        throw ConfigError(where(key) + ": required field is missing");
    }
    return obj_.at(key);
}

double Fields::number(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_number()) {
        throw ConfigError(where(key) + ": expected a number, got " + type_name(v));
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw ConfigError(where(key) + ": expected a finite number");
    }
    return d;
}

double Fields::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

std::size_t Fields::count(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ConfigError(where(key) + ": expected a nonnegative integer, got " + (v.is_number() ? v.dump() : type_name(v)));
    }
    return v.get<std::size_t>();
}

std::size_t Fields::count(const std::string& key, std::size_t fallback) const { return has(key) ? count(key) : fallback; }

std::uint64_t Fields::u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? static_cast<std::uint64_t>(count(key)) : fallback;
}

std::string Fields::text(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_string()) {
        throw ConfigError(where(key) + ": expected a string, got " + type_name(v));
    }
    return v.get<std::string>();
}

std::string Fields::text(const std::string& key, const std::string& fallback) const { return has(key) ? text(key) : fallback; }

bool Fields::flag(const std::string& key, bool fallback) const {
    if (!has(key)) {
        return fallback;
    }
    const Json& v = at(key);
    if (!v.is_boolean()) {
        throw ConfigError(where(key) + ": expected true or false, got " + type_name(v));
    }
    return v.get<bool>();
}

std::vector<double> Fields::numbers(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_array()) {
        throw ConfigError(where(key) + ": expected an array of numbers, got " + type_name(v));
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) {
            throw ConfigError(where(key) + "[" + std::to_string(i) + "]: expected a number, got " + type_name(v[i]));
        }
        out.push_back(v[i].get<double>());
    }
    return out;
}

std::vector<std::size_t> Fields::counts(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_array()) {
        throw ConfigError(where(key) + ": expected an array of integers, got " + type_name(v));
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number_integer() || v[i].get<long long>() < 0) {
            throw ConfigError(where(key) + "[" + std::to_string(i) + "]: expected a nonnegative integer");
        }
        out.push_back(v[i].get<std::size_t>());
    }
    return out;
}

Fields Fields::object(const std::string& key) const { return Fields(at(key), where(key)); }

std::vector<Fields> Fields::objects(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_array()) {
        throw ConfigError(where(key) + ": expected an array of objects, got " + type_name(v));
    }
    std::vector<Fields> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.emplace_back(v[i], where(key) + "[" + std::to_string(i) + "]");
    }
    return out;
}

void Fields::only(std::initializer_list<const char*> allowed) const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) {
            ok = ok || it.key() == a;
        }
        if (!ok) {
            throw ConfigError(where(it.key()) + ": unknown field");
        }
    }
}

InnovationDist parse_innovation(const Fields& f) {
    f.only({"family", "scale", "df", "lo", "hi"});
    const std::string family = f.text("family", "normal");
    try {
        if (family == "normal") {
            return InnovationDist::normal(f.number("scale", 1.0));
        }
        if (family == "logistic") {
            return InnovationDist::logistic(f.number("scale", 1.0));
        }
        if (family == "student_t") {
            return InnovationDist::student_t(f.number("df"), f.number("scale", 1.0));
        }
        if (family == "uniform") {
            return InnovationDist::uniform(f.number("lo", 0.0), f.number("hi", 1.0));
        }
    } catch (const ConfigError& e) {
        throw ConfigError(f.path() + ": " + e.what());
    }
    throw ConfigError(f.where("family") + ": unknown innovation family '" + family + "'");
}

CoeffSpec parse_coeffs(const Fields& f) {
    f.only({"kind", "rho", "beta", "lag", "values"});
    const std::string kind = f.text("kind");
    try {
        if (kind == "geometric") {
            return CoeffSpec::geometric(f.number("rho"), f.count("lag", 0));
        }
        if (kind == "longmem") {
            return CoeffSpec::longmem(f.number("beta"), f.count("lag", CoeffSpec::kLongMemoryDefaultLag));
        }
        if (kind == "explicit") {
            return CoeffSpec::explicit_coeffs(f.numbers("values"));
        }
    } catch (const ConfigError& e) {
        throw ConfigError(f.path() + ": " + e.what());
    }
    throw ConfigError(f.where("kind") + ": unknown coefficient kind '" + kind + "'");
}

ProcessModel parse_model(const Fields& f) {
    f.only({"type", "alpha", "a", "innovation", "coeffs", "moment_order"});
    const std::string type = f.text("type");
    const InnovationDist eps = f.has("innovation") ? parse_innovation(f.object("innovation")) : InnovationDist::normal();
    try {
        if (type == "iid") {
            return ProcessModel::iid(eps);
        }
        if (type == "ar1") {
            return ProcessModel::ar1(f.number("alpha"), eps);
        }
        if (type == "ar_arch") {
            return ProcessModel::ar_arch(f.number("alpha"), f.number("a"), eps, f.number("moment_order", 0.25));
        }
        if (type == "linear") {
            return ProcessModel::linear(parse_coeffs(f.object("coeffs")), eps);
        }
    } catch (const ConfigError& e) {
        throw ConfigError(f.path() + ": " + e.what());
    }
    throw ConfigError(f.where("type") + ": unknown model type '" + type + "'");
}

FunctionClassSpec parse_class(const Fields& f) {
    f.only({"kind", "gamma", "mu", "eta", "delta", "pieces"});
    const std::string kind = f.text("kind");
    FunctionClassSpec spec;
    if (kind == "sobolev") {
        spec = FunctionClassSpec::sobolev(f.number("gamma"), f.number("mu"));
    } else if (kind == "lipschitz") {
        spec = FunctionClassSpec::lipschitz_growth(f.number("eta"), f.number("delta"));
    } else if (kind == "piecewise") {
        spec = FunctionClassSpec::piecewise(static_cast<int>(f.count("pieces")), f.number("gamma"));
    } else if (kind == "kclass") {
        spec = FunctionClassSpec::kclass(f.number("gamma"));
    } else {
        throw ConfigError(f.where("kind") + ": unknown function class '" + kind + "'");
    }
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(f.path() + ": " + e.what());
    }
    return spec;
}

std::vector<TestFunction> parse_functions(const Fields& f) {
    std::vector<TestFunction> out;
    for (const Fields& g : f.objects("functions")) {
        g.only({"type", "theta", "value", "class", "count", "index"});
        const std::string type = g.text("type");
        if (type == "identity") {
            out.push_back(identity_function());
        } else if (type == "huber") {
            out.push_back(huber_derivative(g.number("theta", 0.0)));
        } else if (type == "constant") {
            out.push_back(constant_function(g.number("value")));
        } else if (type == "class") {
            const FunctionClassSpec spec = parse_class(g.object("class"));
            const std::size_t count = g.count("count", 1);
            if (count == 0) {
                throw ConfigError(g.where("count") + ": must be positive");
            }
            std::vector<TestFunction> fam = make_class_family(spec, count);
            if (g.has("index")) {
                const std::size_t idx = g.count("index");
                if (idx >= fam.size()) {
                    throw ConfigError(g.where("index") + ": out of range for a family of " + std::to_string(fam.size()));
                }
                out.push_back(fam[idx]);
            } else {
                for (auto& m : fam) {
                    out.push_back(std::move(m));
                }
            }
        } else {
            throw ConfigError(g.where("type") + ": unknown function type '" + type + "'");
        }
    }
    return out;
}

ExperimentConfig parse_experiment_config(const Json& doc) {
    const Fields f(doc, "");
    f.only({"kind", "model", "functions", "n", "reps", "seed", "gamma", "q", "delta_c", "p", "thresholds",
            "longrun_length", "levels", "partitions", "threads"});
    ExperimentConfig cfg;
    cfg.kind = f.text("kind");
    cfg.model = std::make_shared<const ProcessModel>(parse_model(f.object("model")));
    if (f.has("functions")) {
        cfg.functions = parse_functions(f);
    } else if (cfg.kind == "scaling") {
        cfg.functions.push_back(huber_derivative(0.0));
    }
    cfg.n_values = f.counts("n");
    cfg.reps = f.count("reps");
    cfg.seed = f.u64("seed", 0);
    cfg.gamma = f.number("gamma", cfg.gamma);
    cfg.q = f.number("q", cfg.q);
    cfg.delta_c = f.number("delta_c", cfg.delta_c);
    if (f.has("p")) {
        cfg.p_values.clear();
        for (std::size_t p : f.counts("p")) {
            cfg.p_values.push_back(static_cast<int>(p));
        }
    }
    if (f.has("thresholds")) {
        const Fields t = f.object("thresholds");
        t.only({"var_tol", "slope_tol", "slope_ci_upper", "scaling_tol"});
        cfg.var_tol = t.number("var_tol", cfg.var_tol);
        cfg.slope_tol = t.number("slope_tol", cfg.slope_tol);
        cfg.slope_ci_upper = t.number("slope_ci_upper", cfg.slope_ci_upper);
        cfg.scaling_tol = t.number("scaling_tol", cfg.scaling_tol);
    }
    cfg.longrun_length = f.count("longrun_length", cfg.longrun_length);
    if (f.has("levels")) {
        cfg.levels = f.numbers("levels");
    }
    if (f.has("partitions")) {
        cfg.partitions = f.counts("partitions");
    }
    cfg.threads = static_cast<unsigned>(f.count("threads", 0));
    cfg.digest = config_digest(doc);
    cfg.validate();
    return cfg;
}

}  // namespace depemp
