#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "json.hpp"

#include "bcdcert/error.hpp"
#include "bcdcert/problems.hpp"
#include "bcdcert/solver.hpp"

namespace bcdcert {

enum class OutputFormat { csv, json, both };

inline std::optional<OutputFormat> parse_format(std::string_view s) noexcept
{
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    if (s == "both") return OutputFormat::both;
    return std::nullopt;
}

/// Experiment description read from a JSON document (// comments allowed).
///
///   {
///     "problem": { "family": "coupled_quadratic", "seed": 7, "n_x": 5, "n_y": 3 },
///     "solver":  { "x_strategy": "fixed_step", "max_iters": 500 },
///     "output":  "out/cq",
///     "format":  "both"
///   }
///
/// Unknown keys anywhere are rejected.
struct RunConfigFile
{
    ProblemSpec problem;
    SolverConfig solver;
    std::optional<double> gd_step; ///< also run the joint gradient-descent baseline
    std::optional<Vector> start_x;
    std::optional<Vector> start_y;
    std::string output = "bcdcert_run";
    OutputFormat format = OutputFormat::both;
    std::size_t batch = 1;
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void config_error(const std::string& key, const std::string& what)
{
    throw Error(Errc::ConfigError, "key '" + key + "': " + what);
}

inline void reject_unknown(const json& obj, const std::set<std::string, std::less<>>& allowed,
                           const std::string& section)
{
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            config_error(section.empty() ? key : section + "." + key, "unknown key");
        }
    }
}

inline double get_real(const json& v, const std::string& key)
{
    if (!v.is_number()) {
        config_error(key, "expected a number");
    }
    return v.get<double>();
}

inline std::uint64_t get_count(const json& v, const std::string& key)
{
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        config_error(key, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

inline Vector get_vector(const json& v, const std::string& key)
{
    if (!v.is_array()) {
        config_error(key, "expected an array of numbers");
    }
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = get_real(v[i], key + "[" + std::to_string(i) + "]");
    }
    return out;
}

inline Matrix get_matrix(const json& v, const std::string& key)
{
    if (!v.is_array()) {
        config_error(key, "expected an array of rows");
    }
    if (v.empty()) {
        return Matrix(0, 0);
    }
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string row_key = key + "[" + std::to_string(i) + "]";
        if (!v[i].is_array() || v[i].size() != cols) {
            config_error(row_key, "rows must be arrays of equal length");
        }
        for (std::size_t j = 0; j < cols; ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                get_real(v[i][j], row_key + "[" + std::to_string(j) + "]");
        }
    }
    return out;
}

inline ProblemSpec parse_problem(const json& j)
{
    if (!j.is_object()) {
        config_error("problem", "expected an object");
    }
    if (!j.contains("family") || !j["family"].is_string()) {
        config_error("problem.family", "required string");
    }
    ProblemSpec spec;
    spec.family = j["family"].get<std::string>();

    std::set<std::string, std::less<>> allowed{"family", "lipschitz"};
    if (spec.family == "tight_quadratic") {
        allowed.insert({"L", "c", "anchor", "g", "n_x", "n_y"});
    } else if (spec.family == "coupled_quadratic") {
        allowed.insert({"seed", "n_x", "n_y", "A", "B", "C", "a", "c"});
    } else if (spec.family == "matrix_factorization") {
        allowed.insert({"seed", "m", "n", "rank", "target"});
    } else if (spec.family == "two_block_rosenbrock") {
        allowed.insert({"scale"});
    } else {
        throw Error(Errc::UnknownFamily, "key 'problem.family': unknown family '" + spec.family + "'");
    }
    reject_unknown(j, allowed, "problem");

    auto key = [](const char* k) { return std::string("problem.") + k; };
    if (j.contains("lipschitz")) spec.declared_lipschitz = get_real(j["lipschitz"], key("lipschitz"));
    if (j.contains("seed")) spec.seed = get_count(j["seed"], key("seed"));
    if (j.contains("L")) spec.l_const = get_real(j["L"], key("L"));
    if (j.contains("anchor")) spec.anchor = get_vector(j["anchor"], key("anchor"));
    if (j.contains("g")) spec.g_anchor = get_vector(j["g"], key("g"));
    if (j.contains("n_x")) spec.n_x = get_count(j["n_x"], key("n_x"));
    if (j.contains("n_y")) spec.n_y = get_count(j["n_y"], key("n_y"));
    if (j.contains("A")) spec.A = get_matrix(j["A"], key("A"));
    if (j.contains("B")) spec.B = get_matrix(j["B"], key("B"));
    if (j.contains("C")) spec.C = get_matrix(j["C"], key("C"));
    if (j.contains("a")) spec.a = get_vector(j["a"], key("a"));
    if (j.contains("c")) {
        if (spec.family == "tight_quadratic") {
            spec.c_const = get_real(j["c"], key("c"));
        } else {
            spec.c = get_vector(j["c"], key("c"));
        }
    }
    if (j.contains("m")) spec.m = get_count(j["m"], key("m"));
    if (j.contains("n")) spec.n = get_count(j["n"], key("n"));
    if (j.contains("rank")) spec.rank = get_count(j["rank"], key("rank"));
    if (j.contains("target")) spec.target = get_matrix(j["target"], key("target"));
    if (j.contains("scale")) spec.scale = get_real(j["scale"], key("scale"));
    return spec;
}

inline void parse_solver(const json& j, RunConfigFile& cfg)
{
    if (!j.is_object()) {
        config_error("solver", "expected an object");
    }
    reject_unknown(j,
                   {"x_strategy", "y_tol", "grad_tol", "max_iters", "check_tol", "seed", "l_init", "growth",
                    "max_rejects", "gd_step"},
                   "solver");
    SolverConfig& s = cfg.solver;
    if (j.contains("x_strategy")) {
        const json& v = j["x_strategy"];
        const auto parsed = v.is_string() ? parse_strategy(v.get<std::string>()) : std::nullopt;
        if (!parsed) {
            config_error("solver.x_strategy", "expected one of fixed_step, exact_min, backtracking");
        }
        s.x_strategy = *parsed;
    }
    if (j.contains("y_tol")) s.y_tol = get_real(j["y_tol"], "solver.y_tol");
    if (j.contains("grad_tol")) s.grad_tol = get_real(j["grad_tol"], "solver.grad_tol");
    if (j.contains("max_iters")) s.max_iters = get_count(j["max_iters"], "solver.max_iters");
    if (j.contains("check_tol")) s.check_tol = get_real(j["check_tol"], "solver.check_tol");
    if (j.contains("seed")) s.seed = get_count(j["seed"], "solver.seed");
    if (j.contains("l_init")) s.backtrack.l_init = get_real(j["l_init"], "solver.l_init");
    if (j.contains("growth")) s.backtrack.growth = get_real(j["growth"], "solver.growth");
    if (j.contains("max_rejects")) s.backtrack.max_rejects = get_count(j["max_rejects"], "solver.max_rejects");
    if (j.contains("gd_step")) cfg.gd_step = get_real(j["gd_step"], "solver.gd_step");
    try {
        s.validate();
    } catch (const Error& e) {
        config_error("solver", e.what());
    }
}

} // namespace detail

inline RunConfigFile parse_run_config(std::string_view text)
{
    using detail::json;
    json root;
    try {
        root = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ConfigError, e.what());
    }
    if (!root.is_object()) {
        throw Error(Errc::ConfigError, "top level must be an object");
    }
    detail::reject_unknown(root, {"problem", "solver", "output", "format", "start", "batch"}, "");
    if (!root.contains("problem")) {
        detail::config_error("problem", "required section");
    }

    RunConfigFile cfg;
    cfg.problem = detail::parse_problem(root["problem"]);
    if (root.contains("solver")) {
        detail::parse_solver(root["solver"], cfg);
    }
    if (root.contains("output")) {
        if (!root["output"].is_string() || root["output"].get<std::string>().empty()) {
            detail::config_error("output", "expected a non-empty path prefix");
        }
        cfg.output = root["output"].get<std::string>();
    }
    if (root.contains("format")) {
        const auto f = root["format"].is_string() ? parse_format(root["format"].get<std::string>()) : std::nullopt;
        if (!f) {
            detail::config_error("format", "expected csv, json or both");
        }
        cfg.format = *f;
    }
    if (root.contains("start")) {
        const json& st = root["start"];
        if (!st.is_object()) {
            detail::config_error("start", "expected an object with x and y");
        }
        detail::reject_unknown(st, {"x", "y"}, "start");
        cfg.start_x = st.contains("x") ? detail::get_vector(st["x"], "start.x") : Vector(0);
        cfg.start_y = st.contains("y") ? detail::get_vector(st["y"], "start.y") : Vector(0);
    }
    if (root.contains("batch")) {
        cfg.batch = detail::get_count(root["batch"], "batch");
        if (cfg.batch < 1) {
            detail::config_error("batch", "must be at least 1");
        }
    }
    return cfg;
}

} // namespace bcdcert
