#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include "bcdcert/error.hpp"

namespace bcdcert {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline bool all_finite(const Vector& v) noexcept
{
    return v.allFinite();
}

/// Additive slack `scale * max(1, |f|)` used by every decrease comparison.
inline double relative_slack(double f, double scale = 1e-12) noexcept
{
    return scale * std::max(1.0, std::abs(f));
}

/// The iterate (x, y). Entries are finite by construction; a BlockPoint never
/// changes after it is built, new iterates are produced with with_x/with_y.
class BlockPoint
{
public:
    BlockPoint() = default;

    BlockPoint(Vector x, Vector y) : x_(std::move(x)), y_(std::move(y))
    {
        if (!all_finite(x_) || !all_finite(y_)) {
            throw Error(Errc::NonFiniteValue, "BlockPoint entries must be finite");
        }
    }

    const Vector& x() const noexcept { return x_; }
    const Vector& y() const noexcept { return y_; }
    std::size_t dim_x() const noexcept { return static_cast<std::size_t>(x_.size()); }
    std::size_t dim_y() const noexcept { return static_cast<std::size_t>(y_.size()); }

    BlockPoint with_x(Vector x) const { return BlockPoint(std::move(x), y_); }
    BlockPoint with_y(Vector y) const { return BlockPoint(x_, std::move(y)); }

    friend bool operator==(const BlockPoint& a, const BlockPoint& b)
    {
        return a.x_.size() == b.x_.size() && a.y_.size() == b.y_.size() &&
               a.x_ == b.x_ && a.y_ == b.y_;
    }

private:
    Vector x_;
    Vector y_;
};

/// Oracle for a differentiable f(x, y) split into two blocks.
///
/// Implementations must be pure functions of their arguments and safe to call
/// concurrently. The optional members return std::nullopt when the family
/// does not provide the oracle, or when it is undefined at the given point
/// (for instance a singular normal-equation system).
class Objective
{
public:
    virtual ~Objective() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dim_x() const = 0;
    virtual std::size_t dim_y() const = 0;

    virtual double value(const BlockPoint& p) const = 0;
    virtual Vector grad_x(const BlockPoint& p) const = 0;
    virtual Vector grad_y(const BlockPoint& p) const = 0;

    virtual std::optional<Vector> exact_min_y(const Vector& /*x*/) const { return std::nullopt; }
    virtual std::optional<Vector> exact_min_x(const Vector& /*y*/) const { return std::nullopt; }
    virtual std::optional<double> lipschitz_x(const Vector& /*y*/) const { return std::nullopt; }
    virtual std::optional<double> lower_bound() const { return std::nullopt; }
};

inline void require_dims(const Objective& obj, const BlockPoint& p)
{
    if (p.dim_x() != obj.dim_x() || p.dim_y() != obj.dim_y()) {
        throw Error(Errc::DimensionMismatch,
                    obj.name() + " expects (n_x, n_y) = (" + std::to_string(obj.dim_x()) + ", " +
                        std::to_string(obj.dim_y()) + "), got (" + std::to_string(p.dim_x()) +
                        ", " + std::to_string(p.dim_y()) + ")");
    }
}

struct Evaluation
{
    double value = 0.0;
    Vector gx;
    Vector gy;

    double gx_norm_sq() const { return gx.squaredNorm(); }
    double grad_norm() const { return std::sqrt(gx.squaredNorm() + gy.squaredNorm()); }
};

/// Value and both block gradients at one point.
inline Evaluation evaluate(const Objective& obj, const BlockPoint& p)
{
    require_dims(obj, p);
    Evaluation ev{obj.value(p), obj.grad_x(p), obj.grad_y(p)};
    if (static_cast<std::size_t>(ev.gx.size()) != obj.dim_x() ||
        static_cast<std::size_t>(ev.gy.size()) != obj.dim_y()) {
        throw Error(Errc::DimensionMismatch, obj.name() + " returned a gradient of the wrong size");
    }
    if (!std::isfinite(ev.value) || !all_finite(ev.gx) || !all_finite(ev.gy)) {
        throw Error(Errc::NonFiniteValue, obj.name() + " produced a non-finite value or gradient");
    }
    return ev;
}

/// Value only, with the same finiteness contract as evaluate().
inline double checked_value(const Objective& obj, const BlockPoint& p)
{
    const double f = obj.value(p);
    if (!std::isfinite(f)) {
        throw Error(Errc::NonFiniteValue, obj.name() + " produced a non-finite value");
    }
    return f;
}

} // namespace bcdcert
