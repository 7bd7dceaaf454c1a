#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>

#include "bcdcert/error.hpp"

namespace bcdcert {

/// One outer iteration t: values at (x_t, y_t), (x_{t+1}, y_t) and
/// (x_{t+1}, y_{t+1}), the gradient measured at (x_t, y_t), the stationarity
/// residual left by the y-step and the certified constant.
struct IterationRecord
{
    std::size_t t = 0;
    double f_before = 0.0;
    double f_after_x = 0.0;
    double f_after_y = 0.0;
    double gx_norm_sq = 0.0;
    double gy_residual = 0.0;
    double e_t = 0.0;
    bool suff_ok = false;

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

/// Per-step test: the x-step decrease covers |grad_x|^2 / (2 e_t), and the
/// y-step does not increase f. Both up to an additive `tol`.
inline bool check_step(const IterationRecord& rec, double tol) noexcept
{
    if (!(rec.e_t > 0.0) || !std::isfinite(rec.e_t) || !(rec.gx_norm_sq >= 0.0)) {
        return false;
    }
    const bool x_ok = rec.f_before - rec.f_after_x >= rec.gx_norm_sq / (2.0 * rec.e_t) - tol;
    const bool y_ok = rec.f_after_y <= rec.f_after_x + tol;
    return x_ok && y_ok;
}

/// Consecutive strict increases of e_t after which a run is flagged as having
/// a possibly unbounded certified constant.
inline constexpr std::size_t kGrowthFlagRun = 20;

/// Running form of the telescoped decrease inequalities. Built by folding
/// IterationRecords in order with accumulate(); `telescope_ok` and `rate_ok`
/// hold only if the corresponding bound held at every prefix length.
struct Certificate
{
    double tol = 0.0;
    std::size_t T = 0;
    double f0 = 0.0;
    double f_final = 0.0;
    double running_sum = 0.0; ///< sum_t |g_t|^2 / (2 e_t)
    double e_max = 0.0;
    double e_min = std::numeric_limits<double>::infinity();
    double min_grad_sq = std::numeric_limits<double>::infinity();
    double rate_bound = 0.0; ///< 2 e_max (f0 - f_final) / T
    double max_gy_residual = 0.0;
    bool telescope_ok = true;
    bool rate_ok = true;
    bool all_steps_ok = true;
    bool e_growth_flag = false;
    bool invalidated = false; ///< the run stopped on an error
    double last_e = 0.0;
    std::size_t e_increase_run = 0;

    static Certificate start(double tol) noexcept
    {
        Certificate c;
        c.tol = tol;
        return c;
    }

    bool certified() const noexcept
    {
        if (invalidated) {
            return false;
        }
        if (T == 0) {
            return true;
        }
        return all_steps_ok && telescope_ok && rate_ok && e_min > 0.0;
    }

    friend bool operator==(const Certificate&, const Certificate&) = default;
};

inline Certificate accumulate(Certificate cert, const IterationRecord& rec)
{
    if (rec.t != cert.T) {
        throw Error(Errc::OutOfOrderRecord, "expected record t=" + std::to_string(cert.T) + ", got t=" +
                                                std::to_string(rec.t));
    }
    if (cert.T == 0) {
        cert.f0 = rec.f_before;
    }
    cert.running_sum += rec.gx_norm_sq / (2.0 * rec.e_t);
    cert.e_max = std::max(cert.e_max, rec.e_t);
    cert.e_min = std::min(cert.e_min, rec.e_t);
    cert.min_grad_sq = std::min(cert.min_grad_sq, rec.gx_norm_sq);
    cert.max_gy_residual = std::max(cert.max_gy_residual, rec.gy_residual);
    cert.f_final = rec.f_after_y;
    cert.all_steps_ok = cert.all_steps_ok && rec.suff_ok;

    if (cert.T > 0 && rec.e_t > cert.last_e) {
        ++cert.e_increase_run;
    } else {
        cert.e_increase_run = 0;
    }
    cert.last_e = rec.e_t;
    cert.e_growth_flag = cert.e_growth_flag || cert.e_increase_run >= kGrowthFlagRun;

    cert.T += 1;
    const double gap = cert.f0 - cert.f_final;
    cert.rate_bound = 2.0 * cert.e_max * gap / static_cast<double>(cert.T);
    cert.telescope_ok = cert.telescope_ok && cert.running_sum <= gap + cert.tol;
    cert.rate_ok = cert.rate_ok && cert.min_grad_sq <= cert.rate_bound + cert.tol;
    return cert;
}

/// Folds a whole history; accumulate() applied record by record.
inline Certificate replay(std::span<const IterationRecord> history, double tol)
{
    Certificate cert = Certificate::start(tol);
    for (const IterationRecord& rec : history) {
        cert = accumulate(std::move(cert), rec);
    }
    return cert;
}

/// running_sum <= f0 - f_final + tol on the current state.
inline bool verify_telescope(const Certificate& cert, double tol) noexcept
{
    if (cert.T == 0) {
        return true;
    }
    return cert.running_sum <= cert.f0 - cert.f_final + tol;
}

struct RateBound
{
    double min_grad_sq = 0.0;
    double rate_bound = 0.0;
};

inline RateBound min_grad_bound(const Certificate& cert)
{
    if (cert.T == 0) {
        throw Error(Errc::EmptyHistory, "rate bound needs at least one iteration");
    }
    return {cert.min_grad_sq, cert.rate_bound};
}

/// Least-squares slope of log(min_{s<=t} |g_s|) against log(t + 1).
/// An O(1/sqrt(T)) guarantee corresponds to slope -1/2.
inline double fit_rate(std::span<const IterationRecord> history)
{
    constexpr std::size_t kMinRecords = 10;
    if (history.size() < kMinRecords) {
        throw Error(Errc::InsufficientHistory, "rate fit needs at least " + std::to_string(kMinRecords) +
                                                   " records, got " + std::to_string(history.size()));
    }
    double running_min = std::numeric_limits<double>::infinity();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const auto n = static_cast<double>(history.size());
    for (std::size_t i = 0; i < history.size(); ++i) {
        running_min = std::min(running_min, history[i].gx_norm_sq);
        if (!(running_min > 0.0)) {
            throw Error(Errc::DegenerateFit, "gradient reached zero at t=" + std::to_string(i) +
                                                 "; the run converged exactly");
        }
        const double lx = std::log(static_cast<double>(i + 1));
        const double ly = 0.5 * std::log(running_min);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace bcdcert
