#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>

#include "bcdcert/error.hpp"
#include "bcdcert/problem.hpp"

namespace bcdcert {

/// Outcome of one x-block update. `e_t` is the constant E for which the
/// sufficient-decrease inequality f(x_t,y) - f(x_{t+1},y) >= |g|^2 / (2E)
/// is claimed to hold.
struct XUpdateResult
{
    Vector x_next;
    double e_t = 0.0;
    std::size_t inner_evals = 0;
    double decrease = 0.0; ///< f(x_t, y) - f(x_{t+1}, y)
    double required = 0.0; ///< |grad_x f(x_t, y)|^2 / (2 e_t)
};

struct BacktrackParams
{
    double l_init = 1.0;
    double growth = 2.0;
    std::size_t max_rejects = 60;

    void validate() const
    {
        if (!(l_init > 0.0) || !std::isfinite(l_init)) {
            throw Error(Errc::InvalidArgument, "backtracking l_init must be positive and finite");
        }
        if (!(growth > 1.0) || !std::isfinite(growth)) {
            throw Error(Errc::InvalidArgument, "backtracking growth must exceed 1");
        }
        if (max_rejects < 1) {
            throw Error(Errc::InvalidArgument, "backtracking max_rejects must be at least 1");
        }
    }
};

namespace detail {

inline double declared_lipschitz(const Objective& obj, const Vector& y)
{
    const std::optional<double> l = obj.lipschitz_x(y);
    if (!l) {
        throw Error(Errc::MissingLipschitzOracle, obj.name() + " declares no block-x Lipschitz oracle");
    }
    if (!(*l > 0.0) || !std::isfinite(*l)) {
        throw Error(Errc::MissingLipschitzOracle, obj.name() + " returned a non-positive Lipschitz constant");
    }
    return *l;
}

/// Objective value at a trial point, or nullopt if the point or value is not finite.
inline std::optional<double> trial_value(const Objective& obj, const Vector& x, const Vector& y)
{
    if (!all_finite(x)) {
        return std::nullopt;
    }
    const double f = obj.value(BlockPoint(x, y));
    if (!std::isfinite(f)) {
        return std::nullopt;
    }
    return f;
}

} // namespace detail

/// x_{t+1} = x_t - grad_x / L(y_t). A shortfall in the guaranteed decrease
/// means the declared L is wrong and is reported as an error.
inline XUpdateResult fixed_step_gradient_x(const Objective& obj, const BlockPoint& p)
{
    require_dims(obj, p);
    const double l = detail::declared_lipschitz(obj, p.y());
    const Evaluation ev = evaluate(obj, p);

    XUpdateResult out;
    out.x_next = p.x() - ev.gx / l;
    out.e_t = l;
    const double f_next = checked_value(obj, p.with_x(out.x_next));
    out.inner_evals = 2;
    out.decrease = ev.value - f_next;
    out.required = ev.gx_norm_sq() / (2.0 * l);
    if (out.decrease < out.required - relative_slack(ev.value)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "gradient step with L=" << l << " decreased f by " << out.decrease << " but "
            << out.required << " is required; the declared Lipschitz constant is too small";
        throw Error(Errc::SufficientDecreaseViolated, msg.str());
    }
    return out;
}

/// x_{t+1} = argmin_x f(x, y_t). Certified with E = L(y_t), since the
/// minimizer does at least as well as the 1/L gradient step.
inline XUpdateResult exact_min_x(const Objective& obj, const BlockPoint& p)
{
    require_dims(obj, p);
    const std::optional<Vector> argmin = obj.exact_min_x(p.y());
    if (!argmin) {
        throw Error(Errc::MissingExactMinimizer, obj.name() + " has no exact x-minimizer at this y");
    }
    const double l = detail::declared_lipschitz(obj, p.y());
    const Evaluation ev = evaluate(obj, p);

    XUpdateResult out;
    out.x_next = *argmin;
    out.e_t = l;
    out.decrease = ev.value - checked_value(obj, p.with_x(out.x_next));
    out.required = ev.gx_norm_sq() / (2.0 * l);
    out.inner_evals = 2;
    return out;
}

/// Gradient step with an estimate L^ = l_init * growth^k, increased until
/// the sufficient-decrease test passes. The accepted estimate is the
/// certified constant.
inline XUpdateResult backtracking_gradient_x(const Objective& obj, const BlockPoint& p,
                                             const BacktrackParams& params)
{
    params.validate();
    require_dims(obj, p);
    const Evaluation ev = evaluate(obj, p);
    const double g2 = ev.gx_norm_sq();
    const double slack = relative_slack(ev.value);

    XUpdateResult out;
    out.inner_evals = 1;
    if (g2 == 0.0) {
        out.x_next = p.x();
        out.e_t = params.l_init;
        return out;
    }

    double l_hat = params.l_init;
    std::size_t rejects = 0;
    while (true) {
        Vector trial = p.x() - ev.gx / l_hat;
        const std::optional<double> f_trial = detail::trial_value(obj, trial, p.y());
        ++out.inner_evals;
        const double required = g2 / (2.0 * l_hat);
        if (f_trial && ev.value - *f_trial >= required - slack) {
            out.x_next = std::move(trial);
            out.e_t = l_hat;
            out.decrease = ev.value - *f_trial;
            out.required = required;
            return out;
        }
        if (++rejects > params.max_rejects) {
            throw Error(Errc::BacktrackExhausted,
                        "no acceptable step after " + std::to_string(params.max_rejects) + " increases of L");
        }
        l_hat *= params.growth;
        if (!std::isfinite(l_hat)) {
            throw Error(Errc::BacktrackExhausted, "Lipschitz estimate overflowed");
        }
    }
}

struct StationaryResult
{
    Vector y_next;
    double residual = 0.0; ///< |grad_y f(x, y_next)|
    std::size_t inner_iters = 0;
};

/// Drives the y block to a stationary point: |grad_y f(x, y_next)| <= tol
/// without increasing f. Uses the exact minimizer when the objective has one
/// and falls back to (or refines with) gradient descent on y otherwise.
inline StationaryResult stationary_y(const Objective& obj, const BlockPoint& p, double tol,
                                     std::size_t max_inner = 100000)
{
    require_dims(obj, p);
    if (!(tol > 0.0)) {
        throw Error(Errc::InvalidArgument, "stationarity tolerance must be positive");
    }
    StationaryResult out;
    if (p.dim_y() == 0) {
        out.y_next = p.y();
        return out;
    }

    const double f_start = checked_value(obj, p);
    const double slack = relative_slack(f_start);
    Vector y = p.y();
    Vector g = obj.grad_y(p);
    if (!all_finite(g)) {
        throw Error(Errc::NonFiniteValue, obj.name() + " produced a non-finite y-gradient");
    }
    if (g.norm() <= tol) {
        out.y_next = std::move(y);
        out.residual = g.norm();
        return out;
    }
    double f = f_start;

    if (std::optional<Vector> cand = obj.exact_min_y(p.x()); cand && all_finite(*cand)) {
        const BlockPoint q = p.with_y(*cand);
        const double fc = obj.value(q);
        const Vector gc = obj.grad_y(q);
        if (std::isfinite(fc) && all_finite(gc) && fc <= f_start + slack) {
            y = *cand;
            g = gc;
            f = fc;
            if (g.norm() <= tol) {
                out.y_next = std::move(y);
                out.residual = g.norm();
                return out;
            }
        }
    }

    // Gradient descent on y with an adaptive curvature estimate.
    double l_hat = 1.0;
    for (std::size_t it = 0; it < max_inner; ++it) {
        const double g2 = g.squaredNorm();
        std::size_t rejects = 0;
        while (true) {
            Vector trial = y - g / l_hat;
            const std::optional<double> ft = detail::trial_value(obj, p.x(), trial);
            if (ft && *ft <= f - g2 / (2.0 * l_hat)) {
                y = std::move(trial);
                f = *ft;
                break;
            }
            l_hat *= 2.0;
            if (++rejects > 200 || !std::isfinite(l_hat)) {
                throw Error(Errc::InnerSolveFailed, "y-block descent stalled at residual " +
                                                        std::to_string(g.norm()));
            }
        }
        l_hat *= 0.5;
        g = obj.grad_y(p.with_y(y));
        out.inner_iters = it + 1;
        if (!all_finite(g)) {
            throw Error(Errc::NonFiniteValue, obj.name() + " produced a non-finite y-gradient");
        }
        if (g.norm() <= tol) {
            out.y_next = std::move(y);
            out.residual = g.norm();
            return out;
        }
    }
    throw Error(Errc::InnerSolveFailed, "y-block descent hit the iteration cap at residual " +
                                            std::to_string(g.norm()));
}

/// Joint gradient step (x, y) - step * (grad_x, grad_y). Baseline only.
inline BlockPoint full_gradient_step(const Objective& obj, const BlockPoint& p, double step)
{
    if (!(step >= 0.0) || !std::isfinite(step)) {
        throw Error(Errc::InvalidArgument, "step must be non-negative and finite");
    }
    const Evaluation ev = evaluate(obj, p);
    if (step == 0.0) {
        return p;
    }
    return BlockPoint(p.x() - step * ev.gx, p.y() - step * ev.gy);
}

} // namespace bcdcert
