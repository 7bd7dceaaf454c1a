#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcdcert/certificate.hpp"
#include "bcdcert/error.hpp"
#include "bcdcert/problem.hpp"
#include "bcdcert/strategies.hpp"

namespace bcdcert {

enum class XStrategy { fixed_step, exact_min, backtracking };

inline constexpr std::string_view to_string(XStrategy s) noexcept
{
    switch (s) {
    case XStrategy::fixed_step: return "fixed_step";
    case XStrategy::exact_min: return "exact_min";
    case XStrategy::backtracking: return "backtracking";
    }
    return "unknown";
}

inline std::optional<XStrategy> parse_strategy(std::string_view s) noexcept
{
    for (XStrategy v : {XStrategy::fixed_step, XStrategy::exact_min, XStrategy::backtracking}) {
        if (to_string(v) == s) {
            return v;
        }
    }
    return std::nullopt;
}

enum class StopReason { grad_tol_met, max_iters, error };

inline constexpr std::string_view to_string(StopReason s) noexcept
{
    switch (s) {
    case StopReason::grad_tol_met: return "grad_tol_met";
    case StopReason::max_iters: return "max_iters";
    case StopReason::error: return "error";
    }
    return "unknown";
}

struct SolverConfig
{
    XStrategy x_strategy = XStrategy::fixed_step;
    /// Absolute y-stationarity tolerance. Unset: 1e-10 * max(1, |grad_y|)
    /// measured at the start of each y-step.
    std::optional<double> y_tol;
    double grad_tol = 1e-10;
    std::size_t max_iters = 1000;
    BacktrackParams backtrack;
    /// Certificate tolerance. Unset: 1e-10 * max(1, |f0|).
    std::optional<double> check_tol;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (y_tol && !(*y_tol > 0.0)) {
            throw Error(Errc::InvalidArgument, "y_tol must be positive");
        }
        if (!(grad_tol > 0.0)) {
            throw Error(Errc::InvalidArgument, "grad_tol must be positive");
        }
        if (check_tol && !(*check_tol > 0.0)) {
            throw Error(Errc::InvalidArgument, "check_tol must be positive");
        }
        if (max_iters < 1) {
            throw Error(Errc::InvalidArgument, "max_iters must be at least 1");
        }
        backtrack.validate();
    }
};

struct RunFailure
{
    Errc code;
    std::string message;
};

struct RunResult
{
    BlockPoint final;
    Certificate certificate;
    std::vector<IterationRecord> history;
    StopReason stop_reason = StopReason::max_iters;
    std::optional<RunFailure> error;
    double initial_gy_residual = 0.0;
    std::chrono::duration<double> wall_time{0.0};
    /// Plain joint gradient descent; records carry no certificate claims.
    bool baseline = false;
};

namespace detail {

inline double default_y_tol(const Objective& obj, const BlockPoint& p)
{
    if (p.dim_y() == 0) {
        return 1e-10;
    }
    const Vector g = obj.grad_y(p);
    return 1e-10 * std::max(1.0, all_finite(g) ? g.norm() : 1.0);
}

} // namespace detail

/// Two-block coordinate descent with a running certificate.
///
/// The start is first made y-stationary. Each iteration t then measures
/// grad_x at (x_t, y_t), applies the configured x-update, drives y back to
/// stationarity and folds the resulting record into the certificate. A
/// strategy error ends the run; the partial history is kept and the
/// certificate is marked invalid.
inline RunResult solve(const Objective& obj, const BlockPoint& start, const SolverConfig& cfg)
{
    const auto clock_start = std::chrono::steady_clock::now();
    cfg.validate();
    require_dims(obj, start);

    RunResult res;
    res.final = start;
    Certificate cert = Certificate::start(cfg.check_tol.value_or(0.0));
    auto y_tol_at = [&](const BlockPoint& p) { return cfg.y_tol ? *cfg.y_tol : detail::default_y_tol(obj, p); };

    try {
        const StationaryResult init = stationary_y(obj, start, y_tol_at(start));
        BlockPoint p = start.with_y(init.y_next);
        res.initial_gy_residual = init.residual;
        res.final = p;
        const double f0 = checked_value(obj, p);
        const double check_tol = cfg.check_tol.value_or(1e-10 * std::max(1.0, std::abs(f0)));
        cert = Certificate::start(check_tol);

        BacktrackParams bt = cfg.backtrack;
        bool converged = false;
        for (std::size_t t = 0; t < cfg.max_iters; ++t) {
            const Evaluation ev = evaluate(obj, p);
            if (ev.grad_norm() <= cfg.grad_tol) {
                converged = true;
                break;
            }

            XUpdateResult xr;
            switch (cfg.x_strategy) {
            case XStrategy::fixed_step: xr = fixed_step_gradient_x(obj, p); break;
            case XStrategy::exact_min: xr = exact_min_x(obj, p); break;
            case XStrategy::backtracking:
                xr = backtracking_gradient_x(obj, p, bt);
                // The estimate only ever grows within a run.
                bt.l_init = xr.e_t;
                break;
            }

            const BlockPoint px = p.with_x(std::move(xr.x_next));
            const double f_after_x = checked_value(obj, px);
            const StationaryResult sy = stationary_y(obj, px, y_tol_at(px));
            BlockPoint next = px.with_y(sy.y_next);

            IterationRecord rec;
            rec.t = t;
            rec.f_before = ev.value;
            rec.f_after_x = f_after_x;
            rec.f_after_y = checked_value(obj, next);
            rec.gx_norm_sq = ev.gx_norm_sq();
            rec.gy_residual = sy.residual;
            rec.e_t = xr.e_t;
            rec.suff_ok = check_step(rec, check_tol);

            cert = accumulate(std::move(cert), rec);
            res.history.push_back(rec);
            p = std::move(next);
            res.final = p;
        }
        if (!converged) {
            converged = evaluate(obj, p).grad_norm() <= cfg.grad_tol;
        }
        res.stop_reason = converged ? StopReason::grad_tol_met : StopReason::max_iters;
    } catch (const Error& e) {
        res.stop_reason = StopReason::error;
        res.error = RunFailure{e.code(), e.what()};
        cert.invalidated = true;
    }

    res.certificate = cert;
    res.wall_time = std::chrono::steady_clock::now() - clock_start;
    return res;
}

/// Joint gradient descent with a fixed step, recorded in the same schema.
/// Divergence surfaces as a NonFiniteValue error on the result.
inline RunResult solve_gd_baseline(const Objective& obj, const BlockPoint& start, double step,
                                   std::size_t max_iters)
{
    const auto clock_start = std::chrono::steady_clock::now();
    require_dims(obj, start);

    RunResult res;
    res.baseline = true;
    res.final = start;
    res.certificate.invalidated = true;
    try {
        BlockPoint p = start;
        for (std::size_t t = 0; t < max_iters; ++t) {
            const Evaluation ev = evaluate(obj, p);
            BlockPoint next = full_gradient_step(obj, p, step);
            const double f_next = checked_value(obj, next);

            IterationRecord rec;
            rec.t = t;
            rec.f_before = ev.value;
            rec.f_after_x = f_next;
            rec.f_after_y = f_next;
            rec.gx_norm_sq = ev.gx_norm_sq() + ev.gy.squaredNorm();
            rec.gy_residual = next.dim_y() == 0 ? 0.0 : obj.grad_y(next).norm();
            rec.e_t = step > 0.0 ? 1.0 / step : 0.0;
            rec.suff_ok = false;
            res.history.push_back(rec);
            p = std::move(next);
            res.final = p;
        }
        res.stop_reason = StopReason::max_iters;
    } catch (const Error& e) {
        res.stop_reason = StopReason::error;
        res.error = RunFailure{e.code(), e.what()};
    }
    res.wall_time = std::chrono::steady_clock::now() - clock_start;
    return res;
}

} // namespace bcdcert
