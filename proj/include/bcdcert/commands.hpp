#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <future>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "bcdcert/certificate.hpp"
#include "bcdcert/config.hpp"
#include "bcdcert/numerics.hpp"
#include "bcdcert/problems.hpp"
#include "bcdcert/solver.hpp"
#include "bcdcert/trace_io.hpp"

namespace bcdcert {

/// Process exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitViolation = 2 };

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson vector_json(const Vector& v)
{
    ojson arr = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

/// +/-inf and NaN have no JSON spelling; they become null.
inline ojson real_json(double v)
{
    return std::isfinite(v) ? ojson(v) : ojson(nullptr);
}

inline ojson failure_json(const std::optional<RunFailure>& f)
{
    if (!f) return nullptr;
    return ojson{{"code", std::string(to_string(f->code))}, {"message", f->message}};
}

} // namespace detail

inline nlohmann::ordered_json summary_json(const Objective& obj, const SolverConfig& cfg, const RunResult& run,
                                           const std::string& trace_csv)
{
    using detail::real_json;
    const Certificate& c = run.certificate;
    nlohmann::ordered_json j;
    j["problem"] = obj.name();
    j["x_strategy"] = std::string(to_string(cfg.x_strategy));
    j["T"] = c.T;
    j["f0"] = real_json(c.T > 0 ? c.f0 : std::numeric_limits<double>::quiet_NaN());
    j["f_final"] = real_json(c.T > 0 ? c.f_final : std::numeric_limits<double>::quiet_NaN());
    j["e_min"] = real_json(c.e_min);
    j["e_max"] = real_json(c.e_max);
    j["running_sum"] = c.running_sum;
    j["min_grad_sq"] = real_json(c.min_grad_sq);
    j["rate_bound"] = c.rate_bound;
    j["telescope_ok"] = c.telescope_ok && verify_telescope(c, c.tol);
    j["rate_ok"] = c.rate_ok;
    j["all_steps_ok"] = c.all_steps_ok;
    j["certified"] = c.certified();
    j["e_growth_flag"] = c.e_growth_flag;
    j["max_gy_residual"] = c.max_gy_residual;
    j["initial_gy_residual"] = run.initial_gy_residual;
    j["check_tol"] = c.tol;
    if (const auto lb = obj.lower_bound(); lb && c.T > 0) {
        j["lower_bound"] = *lb;
        j["f_final_minus_lower_bound"] = c.f_final - *lb;
    }
    j["stop_reason"] = std::string(to_string(run.stop_reason));
    j["error"] = detail::failure_json(run.error);
    j["wall_time"] = run.wall_time.count();
    j["final"] = {{"x", detail::vector_json(run.final.x())}, {"y", detail::vector_json(run.final.y())}};
    j["trace_digest"] = digest_string(trace_csv);
    return j;
}

/// Exit status for a finished run: violations of the decrease guarantee and
/// failed certificates map to 2, every other error to 1.
inline int run_exit_code(const RunResult& run)
{
    if (run.error) {
        return run.error->code == Errc::SufficientDecreaseViolated ? kExitViolation : kExitError;
    }
    return run.certificate.certified() ? kExitOk : kExitViolation;
}

struct RunArtifacts
{
    RunResult result;
    std::string trace_csv;
    nlohmann::ordered_json summary;
    int exit_code = kExitError;
};

/// Builds the problem, runs the solver (and baseline, if configured) and
/// returns the serialized outputs without touching the filesystem.
inline RunArtifacts execute_run(const RunConfigFile& cfg, std::uint64_t run_seed)
{
    const auto obj = make_problem(cfg.problem);
    BlockPoint start = (cfg.start_x || cfg.start_y)
                           ? BlockPoint(cfg.start_x.value_or(Vector(0)), cfg.start_y.value_or(Vector(0)))
                           : random_start(*obj, run_seed);
    SolverConfig solver = cfg.solver;
    solver.seed = run_seed;

    RunArtifacts out;
    out.result = solve(*obj, start, solver);
    out.trace_csv = trace_to_csv(out.result);
    out.summary = summary_json(*obj, solver, out.result, out.trace_csv);
    out.summary["seed"] = run_seed;
    if (cfg.gd_step) {
        const RunResult gd = solve_gd_baseline(*obj, start, *cfg.gd_step, solver.max_iters);
        out.summary["baseline"] = {
            {"step", *cfg.gd_step},
            {"T", gd.history.size()},
            {"f_final", detail::real_json(gd.history.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                             : gd.history.back().f_after_y)},
            {"stop_reason", std::string(to_string(gd.stop_reason))},
            {"error", detail::failure_json(gd.error)},
        };
        out.summary["baseline_trace"] = trace_to_csv(gd);
    }
    out.exit_code = run_exit_code(out.result);
    return out;
}

/// `run`: one run, or `batch` independent runs with seeds seed..seed+batch-1
/// executed in parallel. Files are <prefix>.trace.csv / <prefix>.summary.json
/// (with a .<i> infix per batch member) and <prefix>.baseline.csv when the
/// baseline is enabled. The worst member exit code wins.
inline int cmd_run(const RunConfigFile& cfg, std::ostream& out, std::ostream& err, bool quiet = false)
{
    auto prefix_for = [&](std::size_t i) {
        return cfg.batch == 1 ? cfg.output : cfg.output + "." + std::to_string(i);
    };
    auto one = [&](std::size_t i) -> RunArtifacts {
        RunArtifacts art = execute_run(cfg, cfg.solver.seed + i);
        const std::string prefix = prefix_for(i);
        if (art.summary.contains("baseline_trace")) {
            write_file_atomic(prefix + ".baseline.csv", art.summary["baseline_trace"].get<std::string>());
            art.summary.erase("baseline_trace");
        }
        if (cfg.format != OutputFormat::json) {
            write_file_atomic(prefix + ".trace.csv", art.trace_csv);
        }
        if (cfg.format != OutputFormat::csv) {
            write_file_atomic(prefix + ".summary.json", art.summary.dump(2) + "\n");
        }
        return art;
    };

    std::vector<std::future<RunArtifacts>> jobs;
    for (std::size_t i = 0; i < cfg.batch; ++i) {
        jobs.push_back(std::async(cfg.batch == 1 ? std::launch::deferred : std::launch::async, one, i));
    }

    int worst = kExitOk;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        try {
            RunArtifacts art = jobs[i].get();
            const auto& s = art.summary;
            if (art.result.error) {
                err << prefix_for(i) << ": " << art.result.error->message << "\n";
            }
            if (!quiet) {
                out << prefix_for(i) << ": T=" << s["T"] << " stop=" << s["stop_reason"].get<std::string>()
                    << " certified=" << (s["certified"].get<bool>() ? "yes" : "no")
                    << " min_grad_sq=" << s["min_grad_sq"] << " rate_bound=" << s["rate_bound"] << "\n";
            }
            if (art.exit_code == kExitError || worst == kExitError) {
                worst = kExitError;
            } else {
                worst = std::max(worst, art.exit_code);
            }
        } catch (const std::exception& e) {
            err << prefix_for(i) << ": " << e.what() << "\n";
            worst = kExitError;
        }
    }
    return worst;
}

// =======================================================================
// check
// =======================================================================

struct CheckOptions
{
    std::size_t points = 20;
    std::uint64_t seed = 0;
    double fd_rel_tol = 1e-6;
    double minimizer_tol = 1e-10;
    std::size_t lipschitz_pairs = 100;
};

/// `check`: finite-difference gradients, exact-minimizer stationarity and
/// the declared Lipschitz oracle against a sampling probe. Prints a table
/// followed by one JSON line. 0 if every check passes, 2 otherwise.
inline int cmd_check(const Objective& obj, const CheckOptions& opt, std::ostream& out)
{
    struct Worst
    {
        double rel_err = 0.0;
        std::size_t coordinate = 0;
        std::size_t point = 0;
    } fd_worst;
    double min_y_worst = 0.0, min_x_worst = 0.0, lip_ratio_worst = 0.0;
    bool min_y_seen = false, min_x_seen = false, lip_seen = false;

    const std::size_t nx = obj.dim_x();
    for (std::size_t i = 0; i < opt.points; ++i) {
        const BlockPoint p = random_start(obj, opt.seed * 1000003ULL + i);
        const FiniteDiffReport r = fd_check_gradients(obj, p);
        if (i == 0 || r.max_rel_err > fd_worst.rel_err) {
            fd_worst = {r.max_rel_err, r.worst_index, i};
        }
        if (obj.dim_y() > 0) {
            if (const auto y = obj.exact_min_y(p.x())) {
                min_y_seen = true;
                min_y_worst = std::max(min_y_worst, obj.grad_y(BlockPoint(p.x(), *y)).norm());
            }
        }
        if (const auto x = obj.exact_min_x(p.y())) {
            min_x_seen = true;
            min_x_worst = std::max(min_x_worst, obj.grad_x(BlockPoint(*x, p.y())).norm());
        }
        if (const auto l = obj.lipschitz_x(p.y()); l && nx > 0) {
            lip_seen = true;
            const double probe = probe_lipschitz_x(obj, p.y(), Box::cube(nx, 2.0), opt.lipschitz_pairs, opt.seed + i);
            lip_ratio_worst = std::max(lip_ratio_worst, probe / *l);
        }
    }

    const bool fd_ok = fd_worst.rel_err <= opt.fd_rel_tol;
    const bool min_y_ok = min_y_worst <= opt.minimizer_tol;
    const bool min_x_ok = min_x_worst <= opt.minimizer_tol;
    const bool lip_ok = lip_ratio_worst <= 1.0 + 1e-6;
    const std::string coord = fd_worst.coordinate < nx ? "x[" + std::to_string(fd_worst.coordinate) + "]"
                                                       : "y[" + std::to_string(fd_worst.coordinate - nx) + "]";

    auto status = [](bool seen, bool ok, const char* skip) -> std::string {
        if (!seen) return std::string("skipped (") + skip + ")";
        return ok ? "pass" : "FAIL";
    };
    const std::string fd_status = opt.points == 0 ? "skipped (no points)" : fd_ok ? "pass" : "FAIL";
    const std::string y_status =
        obj.dim_y() == 0 ? "skipped (empty block)" : status(min_y_seen, min_y_ok, "no exact y-minimizer");
    const std::string x_status = status(min_x_seen, min_x_ok, "no exact x-minimizer");
    const std::string l_status = status(lip_seen, lip_ok, "no Lipschitz oracle");

    out << "problem " << obj.name() << " (n_x=" << nx << ", n_y=" << obj.dim_y() << "), " << opt.points
        << " points, seed " << opt.seed << "\n";
    out << std::left << std::setw(26) << "check" << std::setw(16) << "worst" << "status\n";
    out << std::setw(26) << "gradient (central diff)" << std::setw(16) << fd_worst.rel_err << fd_status;
    if (!fd_ok) out << " at " << coord << " of point " << fd_worst.point;
    out << "\n";
    out << std::setw(26) << "exact_min_y stationarity" << std::setw(16) << min_y_worst << y_status << "\n";
    out << std::setw(26) << "exact_min_x stationarity" << std::setw(16) << min_x_worst << x_status << "\n";
    out << std::setw(26) << "lipschitz probe / oracle" << std::setw(16) << lip_ratio_worst << l_status << "\n";

    const bool all_ok = fd_ok && (!min_y_seen || min_y_ok) && (!min_x_seen || min_x_ok) && (!lip_seen || lip_ok);
    nlohmann::ordered_json j;
    j["problem"] = obj.name();
    j["points"] = opt.points;
    j["fd"] = {{"max_rel_err", fd_worst.rel_err}, {"worst_coordinate", coord}, {"worst_point", fd_worst.point},
               {"status", fd_status}};
    j["exact_min_y"] = {{"max_residual", min_y_worst}, {"status", y_status}};
    j["exact_min_x"] = {{"max_residual", min_x_worst}, {"status", x_status}};
    j["lipschitz"] = {{"max_probe_ratio", lip_ratio_worst}, {"status", l_status}};
    j["ok"] = all_ok;
    out << j.dump() << "\n";
    return all_ok ? kExitOk : kExitViolation;
}

// =======================================================================
// report
// =======================================================================

struct ReportOutcome
{
    int exit_code = kExitOk;
    std::string message;
    std::size_t rows = 0;
    std::optional<double> slope;
};

/// Recomputes the certificate fold from a trace and cross-checks it against
/// the recorded flags, the prefix bounds and (when given) the run summary.
inline ReportOutcome verify_trace(std::string_view csv, const nlohmann::json* summary)
{
    ReportOutcome res;
    std::vector<TraceRow> rows;
    try {
        rows = parse_trace_csv(csv);
    } catch (const Error& e) {
        return {kExitError, e.what(), 0, std::nullopt};
    }
    res.rows = rows.size();

    auto tamper = [&](std::size_t row, const std::string& what) {
        return ReportOutcome{kExitViolation,
                             "TamperDetected: row t=" + std::to_string(row) + " (line " + std::to_string(row + 2) +
                                 "): " + what,
                             rows.size(), std::nullopt};
    };

    double tol = 0.0;
    if (summary && summary->contains("check_tol") && (*summary)["check_tol"].is_number()) {
        tol = (*summary)["check_tol"].get<double>();
    } else if (!rows.empty()) {
        tol = 1e-10 * std::max(1.0, std::abs(rows.front().rec.f_before));
    }

    if (summary && summary->contains("trace_digest")) {
        if ((*summary)["trace_digest"] != digest_string(csv)) {
            // A row-level finding below takes precedence over this one.
            res.exit_code = kExitViolation;
            res.message = "TamperDetected: trace bytes do not match the summary digest";
        }
    }

    Certificate cert = Certificate::start(tol);
    std::vector<IterationRecord> history;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const TraceRow& r = rows[i];
        if (r.rec.t != i) {
            return tamper(i, "iteration index " + std::to_string(r.rec.t) + " out of order");
        }
        if (i > 0 && r.rec.f_before != rows[i - 1].rec.f_after_y) {
            return tamper(i, "f_before does not continue the previous f_after_y");
        }
        if (check_step(r.rec, tol) != r.rec.suff_ok) {
            return tamper(i, "recorded suff_ok disagrees with the recomputed step check");
        }
        cert = accumulate(std::move(cert), r.rec);
        if (cert.running_sum != r.cum_sum) {
            return tamper(i, "cum_sum disagrees with the recomputed running sum");
        }
        if (cert.rate_bound != r.rate_bound_prefix) {
            return tamper(i, "rate_bound_prefix disagrees with the recomputed bound");
        }
        if (!cert.telescope_ok) {
            return {kExitViolation, "telescoping bound violated at T=" + std::to_string(i + 1), rows.size(),
                    std::nullopt};
        }
        if (!cert.rate_ok) {
            return {kExitViolation, "min-gradient rate bound violated at T=" + std::to_string(i + 1), rows.size(),
                    std::nullopt};
        }
        history.push_back(r.rec);
    }
    if (res.exit_code != kExitOk) {
        return res;
    }

    if (summary) {
        const auto& s = *summary;
        auto same_real = [&](const char* key, double v) {
            if (!s.contains(key)) return true;
            if (s[key].is_null()) return !std::isfinite(v);
            return s[key].is_number() && s[key].get<double>() == v;
        };
        const bool t_ok = !s.contains("T") || (s["T"].is_number() && s["T"].get<std::size_t>() == cert.T);
        std::string bad;
        if (!t_ok) bad = "T";
        else if (cert.T > 0 && !same_real("f0", cert.f0)) bad = "f0";
        else if (cert.T > 0 && !same_real("f_final", cert.f_final)) bad = "f_final";
        else if (!same_real("running_sum", cert.running_sum)) bad = "running_sum";
        else if (!same_real("min_grad_sq", cert.min_grad_sq)) bad = "min_grad_sq";
        else if (!same_real("rate_bound", cert.rate_bound)) bad = "rate_bound";
        else if (!same_real("e_max", cert.e_max)) bad = "e_max";
        else if (!same_real("e_min", cert.e_min)) bad = "e_min";
        else if (s.contains("all_steps_ok") && s["all_steps_ok"] != cert.all_steps_ok) bad = "all_steps_ok";
        else if (s.contains("telescope_ok") && s["telescope_ok"] != (cert.telescope_ok && verify_telescope(cert, tol)))
            bad = "telescope_ok";
        if (!bad.empty()) {
            return {kExitViolation, "TamperDetected: summary field '" + bad + "' disagrees with the trace",
                    rows.size(), std::nullopt};
        }
    }

    try {
        res.slope = fit_rate(history);
        std::ostringstream os;
        os << "ok: " << rows.size() << " rows verified; log-log slope of min gradient norm = " << *res.slope;
        res.message = os.str();
    } catch (const Error& e) {
        if (e.code() == Errc::InsufficientHistory) {
            res.message = "ok: " + std::to_string(rows.size()) + " rows verified; slope: insufficient history";
        } else {
            res.message = "ok: " + std::to_string(rows.size()) + " rows verified; slope: gradient reached zero";
        }
    }
    return res;
}

/// Path of the summary written next to a trace by `run`.
inline std::filesystem::path summary_path_for(const std::filesystem::path& trace)
{
    const std::string s = trace.string();
    constexpr std::string_view suffix = ".trace.csv";
    if (s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return s.substr(0, s.size() - suffix.size()) + ".summary.json";
    }
    return {};
}

/// `report`: verify a trace file, using its sibling summary when present.
inline int cmd_report(const std::filesystem::path& trace, std::ostream& out, std::ostream& err)
{
    std::string csv;
    nlohmann::json summary;
    bool have_summary = false;
    try {
        csv = read_file(trace);
        const auto sp = summary_path_for(trace);
        if (!sp.empty() && std::filesystem::exists(sp)) {
            summary = nlohmann::json::parse(read_file(sp));
            have_summary = true;
        }
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return kExitError;
    }
    const ReportOutcome res = verify_trace(csv, have_summary ? &summary : nullptr);
    (res.exit_code == kExitOk ? out : err) << res.message << "\n";
    if (res.exit_code == kExitOk && have_summary && summary.contains("error") && !summary["error"].is_null()) {
        out << "note: the recorded run stopped with " << summary["error"]["code"].get<std::string>() << "\n";
    }
    return res.exit_code;
}

} // namespace bcdcert
