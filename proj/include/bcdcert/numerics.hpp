#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

#include "bcdcert/error.hpp"
#include "bcdcert/problem.hpp"

namespace bcdcert {

struct FiniteDiffReport
{
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    /// Coordinate with the largest relative error. x coordinates come first,
    /// y coordinates are numbered from n_x.
    std::size_t worst_index = 0;
    double h = 0.0;
    std::size_t checked_x = 0;
    std::size_t checked_y = 0;

    bool worst_in_y() const noexcept { return worst_index >= checked_x; }
};

/// Central-difference check of both block gradients. The step for coordinate
/// i is h * max(1, |p_i|); relative error is |fd - g| / max(1, |g|).
inline FiniteDiffReport fd_check_gradients(const Objective& obj, const BlockPoint& p, double h = 1e-5)
{
    if (!(h > 0.0)) {
        throw Error(Errc::InvalidArgument, "finite-difference step must be positive");
    }
    const Evaluation ev = evaluate(obj, p);

    FiniteDiffReport report;
    report.h = h;
    report.checked_x = p.dim_x();
    report.checked_y = p.dim_y();

    auto probe = [&](const Vector& base, const Vector& analytic, bool is_x, std::size_t offset) {
        for (Eigen::Index i = 0; i < base.size(); ++i) {
            const double hi = h * std::max(1.0, std::abs(base[i]));
            Vector plus = base;
            Vector minus = base;
            plus[i] += hi;
            minus[i] -= hi;
            const double fp = is_x ? checked_value(obj, p.with_x(plus)) : checked_value(obj, p.with_y(plus));
            const double fm = is_x ? checked_value(obj, p.with_x(minus)) : checked_value(obj, p.with_y(minus));
            // Divide by the realized step, not the nominal one.
            const double fd = (fp - fm) / (plus[i] - minus[i]);
            const double abs_err = std::abs(fd - analytic[i]);
            const double rel_err = abs_err / std::max(1.0, std::abs(analytic[i]));
            report.max_abs_err = std::max(report.max_abs_err, abs_err);
            if (rel_err > report.max_rel_err) {
                report.max_rel_err = rel_err;
                report.worst_index = offset + static_cast<std::size_t>(i);
            }
        }
    };
    probe(p.x(), ev.gx, true, 0);
    probe(p.y(), ev.gy, false, p.dim_x());
    return report;
}

/// Axis-aligned box for sampling x-block points.
struct Box
{
    Vector lo;
    Vector hi;

    static Box cube(std::size_t dim, double half_width)
    {
        return {Vector::Constant(static_cast<Eigen::Index>(dim), -half_width),
                Vector::Constant(static_cast<Eigen::Index>(dim), half_width)};
    }

    bool degenerate() const
    {
        if (lo.size() == 0 || lo.size() != hi.size()) {
            return true;
        }
        return ((hi - lo).array() <= 0.0).any();
    }

    Vector sample(std::mt19937_64& rng) const
    {
        Vector v(lo.size());
        for (Eigen::Index i = 0; i < lo.size(); ++i) {
            v[i] = std::uniform_real_distribution<double>(lo[i], hi[i])(rng);
        }
        return v;
    }
};

/// Largest observed gradient-difference ratio over `samples` random pairs in
/// the box, with y held fixed. Sampling can only ever under-estimate the true
/// Lipschitz constant: it exposes a wrong oracle, it cannot prove one right.
inline double probe_lipschitz_x(const Objective& obj, const Vector& y, const Box& region,
                                std::size_t samples, std::uint64_t seed)
{
    if (samples < 2) {
        throw Error(Errc::InvalidArgument, "Lipschitz probe needs at least 2 samples");
    }
    if (region.degenerate() || static_cast<std::size_t>(region.lo.size()) != obj.dim_x()) {
        throw Error(Errc::DegenerateRegion, "sampling box has zero volume or wrong dimension");
    }
    std::mt19937_64 rng(seed);
    double best = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const BlockPoint a(region.sample(rng), y);
        const BlockPoint b(region.sample(rng), y);
        const double dx = (b.x() - a.x()).norm();
        if (dx == 0.0) {
            continue;
        }
        const Vector ga = obj.grad_x(a);
        const Vector gb = obj.grad_x(b);
        if (!all_finite(ga) || !all_finite(gb)) {
            throw Error(Errc::NonFiniteValue, obj.name() + " produced a non-finite gradient");
        }
        best = std::max(best, (gb - ga).norm() / dx);
    }
    return best;
}

/// Largest singular value by power iteration on the smaller Gram matrix.
/// Stops when the eigen-residual ||G v - lambda v|| <= tol * lambda.
inline double spectral_norm(const Matrix& m, double tol = 1e-13, std::size_t max_iters = 200000)
{
    if (!m.allFinite()) {
        throw Error(Errc::NonFiniteValue, "spectral_norm input has non-finite entries");
    }
    const Matrix gram = (m.rows() <= m.cols()) ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
    const Eigen::Index k = gram.rows();
    if (k == 0 || gram.cwiseAbs().maxCoeff() == 0.0) {
        return 0.0;
    }

    Vector v = Vector::Ones(k) / std::sqrt(static_cast<double>(k));
    Eigen::Index next_basis = 0;
    for (std::size_t it = 0; it < max_iters; ++it) {
        Vector w = gram * v;
        const double wn = w.norm();
        if (wn == 0.0) {
            // Start vector in the null space; restart along a basis direction.
            if (next_basis >= k) {
                break;
            }
            v = Vector::Unit(k, next_basis++);
            continue;
        }
        const double lambda = v.dot(w);
        if ((w - lambda * v).norm() <= tol * lambda) {
            return std::sqrt(lambda);
        }
        v = w / wn;
    }
    throw Error(Errc::NoConvergence, "power iteration did not reach tolerance");
}

} // namespace bcdcert
