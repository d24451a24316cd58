#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "depemp/empirical.hpp"
#include "depemp/harness.hpp"
#include "depemp/innovations.hpp"
#include "depemp/processes.hpp"

namespace depemp {

using Json = nlohmann::json;

/// Parses JSON text; syntax errors become ConfigError "source:line:column: message".
Json parse_config_text(const std::string& text, const std::string& source);
/// Reads and parses a file; a missing or unreadable file is a ConfigError.
Json load_config_file(const std::string& path);

/// FNV-1a of the canonical dump (keys sorted), so key order does not matter.
std::string config_digest(const Json& doc);

/// Typed access to one JSON object. Every error names the dotted field path.
class Fields {
public:
    Fields(const Json& obj, std::string path);

    [[nodiscard]] bool has(const std::string& key) const;
    [[nodiscard]] double number(const std::string& key) const;
    [[nodiscard]] double number(const std::string& key, double fallback) const;
    [[nodiscard]] std::size_t count(const std::string& key) const;
    [[nodiscard]] std::size_t count(const std::string& key, std::size_t fallback) const;
    [[nodiscard]] std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
    [[nodiscard]] std::string text(const std::string& key) const;
    [[nodiscard]] std::string text(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] bool flag(const std::string& key, bool fallback) const;
    [[nodiscard]] std::vector<double> numbers(const std::string& key) const;
    [[nodiscard]] std::vector<std::size_t> counts(const std::string& key) const;
    [[nodiscard]] Fields object(const std::string& key) const;
    [[nodiscard]] std::vector<Fields> objects(const std::string& key) const;
    /// ConfigError for any key not in `allowed`.
    void only(std::initializer_list<const char*> allowed) const;

    [[nodiscard]] const std::string& path() const { return path_; }
    [[nodiscard]] const Json& raw() const { return obj_; }
    [[nodiscard]] std::string where(const std::string& key) const;

private:
    [[nodiscard]] const Json& at(const std::string& key) const;

    const Json& obj_;
    std::string path_;
};

InnovationDist parse_innovation(const Fields& f);
CoeffSpec parse_coeffs(const Fields& f);
ProcessModel parse_model(const Fields& f);
FunctionClassSpec parse_class(const Fields& f);
/// Functions: identity, huber, constant, or a member of a class family.
/// A class entry expands to `count` members.
std::vector<TestFunction> parse_functions(const Fields& f);

/// Builds an experiment from a document with kind in {clt, supbound, modulus,
/// tightness, scaling}; the digest is filled in.
ExperimentConfig parse_experiment_config(const Json& doc);

}  // namespace depemp
