#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include "bcdcert/error.hpp"
#include "bcdcert/numerics.hpp"
#include "bcdcert/problem.hpp"

namespace bcdcert {

// =======================================================================
// Tight quadratic
// =======================================================================

/*
 * f(x) = c + g^T (x - anchor) + (L/2) ||x - anchor||^2 with an empty y block.
 * A fixed 1/L gradient step meets the sufficient-decrease inequality with
 * equality on this model, so it is the reference for constant tightness.
 */
class TightQuadratic final : public Objective
{
public:
    TightQuadratic(double l_const, double c_const, Vector anchor, Vector g_anchor)
        : l_(l_const), c_(c_const), anchor_(std::move(anchor)), g_(std::move(g_anchor))
    {
        if (!(l_ > 0.0) || !std::isfinite(l_) || !std::isfinite(c_)) {
            throw Error(Errc::InvalidArgument, "tight_quadratic needs finite L > 0 and finite c");
        }
        if (anchor_.size() != g_.size()) {
            throw Error(Errc::InvalidDimensions, "tight_quadratic anchor and gradient sizes differ");
        }
        if (!all_finite(anchor_) || !all_finite(g_)) {
            throw Error(Errc::NonFiniteValue, "tight_quadratic parameters must be finite");
        }
    }

    std::string name() const override { return "tight_quadratic"; }
    std::size_t dim_x() const override { return static_cast<std::size_t>(anchor_.size()); }
    std::size_t dim_y() const override { return 0; }

    double value(const BlockPoint& p) const override
    {
        const Vector d = p.x() - anchor_;
        return c_ + g_.dot(d) + 0.5 * l_ * d.squaredNorm();
    }
    Vector grad_x(const BlockPoint& p) const override { return g_ + l_ * (p.x() - anchor_); }
    Vector grad_y(const BlockPoint&) const override { return Vector(0); }

    std::optional<Vector> exact_min_y(const Vector&) const override { return Vector(0); }
    std::optional<Vector> exact_min_x(const Vector&) const override { return Vector(anchor_ - g_ / l_); }
    std::optional<double> lipschitz_x(const Vector&) const override { return l_; }
    std::optional<double> lower_bound() const override { return c_ - g_.squaredNorm() / (2.0 * l_); }

    double l_const() const noexcept { return l_; }
    double c_const() const noexcept { return c_; }
    const Vector& anchor() const noexcept { return anchor_; }
    const Vector& g_anchor() const noexcept { return g_; }

private:
    double l_;
    double c_;
    Vector anchor_;
    Vector g_;
};

// =======================================================================
// Coupled quadratic
// =======================================================================

/*
 * f = 1/2 x^T A x + x^T B y + 1/2 y^T C y + a^T x + c^T y
 * with A symmetric PSD and C symmetric PD. The block-x Lipschitz constant is
 * lambda_max(A), independent of y.
 */
class CoupledQuadratic final : public Objective
{
public:
    CoupledQuadratic(Matrix a_mat, Matrix b_mat, Matrix c_mat, Vector a_vec, Vector c_vec)
        : A_(std::move(a_mat)), B_(std::move(b_mat)), C_(std::move(c_mat)),
          a_(std::move(a_vec)), c_(std::move(c_vec))
    {
        const auto nx = A_.rows();
        const auto ny = C_.rows();
        if (A_.cols() != nx || C_.cols() != ny || B_.rows() != nx || B_.cols() != ny ||
            a_.size() != nx || c_.size() != ny) {
            throw Error(Errc::InvalidDimensions, "coupled_quadratic blocks have inconsistent shapes");
        }
        if (!A_.allFinite() || !B_.allFinite() || !C_.allFinite() || !all_finite(a_) || !all_finite(c_)) {
            throw Error(Errc::NonFiniteValue, "coupled_quadratic parameters must be finite");
        }
        if (!A_.isApprox(A_.transpose(), 1e-14) || !C_.isApprox(C_.transpose(), 1e-14)) {
            throw Error(Errc::InvalidArgument, "coupled_quadratic A and C must be symmetric");
        }
        if (ny > 0) {
            c_chol_.compute(C_);
            if (c_chol_.info() != Eigen::Success || c_chol_.rcond() < 1e-14) {
                throw Error(Errc::InvalidArgument, "coupled_quadratic C must be positive definite");
            }
        }
        if (nx > 0) {
            a_chol_.compute(A_);
            a_invertible_ = a_chol_.info() == Eigen::Success && a_chol_.rcond() >= 1e-14;
        }
        lipschitz_ = spectral_norm(A_);
    }

    static CoupledQuadratic scalar(double a_mat, double b_mat, double c_mat, double a_vec = 0.0,
                                   double c_vec = 0.0)
    {
        return {Matrix::Constant(1, 1, a_mat), Matrix::Constant(1, 1, b_mat), Matrix::Constant(1, 1, c_mat),
                Vector::Constant(1, a_vec), Vector::Constant(1, c_vec)};
    }

    /// Seeded instance whose joint Hessian is strictly diagonally dominant
    /// with a positive diagonal, hence positive definite.
    static CoupledQuadratic random(std::uint64_t seed, std::size_t n_x, std::size_t n_y)
    {
        if (n_x == 0) {
            throw Error(Errc::InvalidDimensions, "coupled_quadratic needs n_x >= 1");
        }
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::uniform_real_distribution<double> margin(0.5, 1.5);
        const auto nx = static_cast<Eigen::Index>(n_x);
        const auto ny = static_cast<Eigen::Index>(n_y);

        Matrix b = Matrix::Zero(nx, ny);
        for (Eigen::Index i = 0; i < nx; ++i)
            for (Eigen::Index j = 0; j < ny; ++j) b(i, j) = unit(rng);

        auto symmetric_block = [&](Eigen::Index n) {
            Matrix s = Matrix::Zero(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = i + 1; j < n; ++j) s(i, j) = s(j, i) = unit(rng);
            return s;
        };
        Matrix a = symmetric_block(nx);
        Matrix c = symmetric_block(ny);
        for (Eigen::Index i = 0; i < nx; ++i)
            a(i, i) = a.row(i).cwiseAbs().sum() + b.row(i).cwiseAbs().sum() + margin(rng);
        for (Eigen::Index j = 0; j < ny; ++j)
            c(j, j) = c.row(j).cwiseAbs().sum() + b.col(j).cwiseAbs().sum() + margin(rng);

        Vector av(nx), cv(ny);
        for (Eigen::Index i = 0; i < nx; ++i) av[i] = unit(rng);
        for (Eigen::Index j = 0; j < ny; ++j) cv[j] = unit(rng);
        return {std::move(a), std::move(b), std::move(c), std::move(av), std::move(cv)};
    }

    std::string name() const override { return "coupled_quadratic"; }
    std::size_t dim_x() const override { return static_cast<std::size_t>(A_.rows()); }
    std::size_t dim_y() const override { return static_cast<std::size_t>(C_.rows()); }

    double value(const BlockPoint& p) const override
    {
        const Vector& x = p.x();
        const Vector& y = p.y();
        return 0.5 * x.dot(A_ * x) + x.dot(B_ * y) + 0.5 * y.dot(C_ * y) + a_.dot(x) + c_.dot(y);
    }
    Vector grad_x(const BlockPoint& p) const override { return A_ * p.x() + B_ * p.y() + a_; }
    Vector grad_y(const BlockPoint& p) const override
    {
        return B_.transpose() * p.x() + C_ * p.y() + c_;
    }

    std::optional<Vector> exact_min_y(const Vector& x) const override
    {
        if (C_.rows() == 0) {
            return Vector(0);
        }
        return Vector(c_chol_.solve(-(B_.transpose() * x + c_)));
    }
    std::optional<Vector> exact_min_x(const Vector& y) const override
    {
        if (!a_invertible_) {
            return std::nullopt;
        }
        return Vector(a_chol_.solve(-(B_ * y + a_)));
    }
    std::optional<double> lipschitz_x(const Vector&) const override { return lipschitz_; }

    const Matrix& A() const noexcept { return A_; }
    const Matrix& B() const noexcept { return B_; }
    const Matrix& C() const noexcept { return C_; }
    const Vector& a() const noexcept { return a_; }
    const Vector& c() const noexcept { return c_; }

    Matrix joint_hessian() const
    {
        const auto nx = A_.rows();
        const auto ny = C_.rows();
        Matrix h(nx + ny, nx + ny);
        h.topLeftCorner(nx, nx) = A_;
        h.topRightCorner(nx, ny) = B_;
        h.bottomLeftCorner(ny, nx) = B_.transpose();
        h.bottomRightCorner(ny, ny) = C_;
        return h;
    }

private:
    Matrix A_, B_, C_;
    Vector a_, c_;
    Eigen::LLT<Matrix> c_chol_;
    Eigen::LLT<Matrix> a_chol_;
    bool a_invertible_ = false;
    double lipschitz_ = 0.0;
};

/// Direct solve of the joint stationarity system [[A, B], [B^T, C]] z = -(a, c).
inline BlockPoint joint_solve_oracle(const CoupledQuadratic& q)
{
    const Matrix h = q.joint_hessian();
    Vector rhs(h.rows());
    rhs << -q.a(), -q.c();
    Eigen::LLT<Matrix> chol(h);
    if (chol.info() != Eigen::Success || chol.rcond() < 1e-14) {
        throw Error(Errc::SingularSystem, "joint Hessian is not positive definite");
    }
    const Vector z = chol.solve(rhs);
    const auto nx = q.A().rows();
    return BlockPoint(z.head(nx), z.tail(q.C().rows()));
}

// =======================================================================
// Matrix factorization
// =======================================================================

/*
 * f(X, Y) = 1/2 ||A - X Y||_F^2 with X (m x r) and Y (r x n), both stored
 * column-major in the block vectors. Nonconvex jointly, convex per block.
 */
class MatrixFactorization final : public Objective
{
public:
    MatrixFactorization(Matrix target, std::size_t rank) : target_(std::move(target)), r_(static_cast<Eigen::Index>(rank))
    {
        if (target_.size() == 0 || r_ < 1) {
            throw Error(Errc::InvalidDimensions, "matrix_factorization needs a non-empty target and rank >= 1");
        }
        if (!target_.allFinite()) {
            throw Error(Errc::NonFiniteValue, "matrix_factorization target must be finite");
        }
    }

    static MatrixFactorization random(std::uint64_t seed, std::size_t m, std::size_t n, std::size_t rank)
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        Matrix t(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
        for (Eigen::Index j = 0; j < t.cols(); ++j)
            for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = normal(rng);
        return {std::move(t), rank};
    }

    std::string name() const override { return "matrix_factorization"; }
    std::size_t dim_x() const override { return static_cast<std::size_t>(target_.rows() * r_); }
    std::size_t dim_y() const override { return static_cast<std::size_t>(r_ * target_.cols()); }

    Eigen::Map<const Matrix> X(const Vector& x) const { return {x.data(), target_.rows(), r_}; }
    Eigen::Map<const Matrix> Y(const Vector& y) const { return {y.data(), r_, target_.cols()}; }

    double value(const BlockPoint& p) const override
    {
        return 0.5 * (X(p.x()) * Y(p.y()) - target_).squaredNorm();
    }
    Vector grad_x(const BlockPoint& p) const override
    {
        const auto y = Y(p.y());
        const Matrix g = (X(p.x()) * y - target_) * y.transpose();
        return Eigen::Map<const Vector>(g.data(), g.size());
    }
    Vector grad_y(const BlockPoint& p) const override
    {
        const auto x = X(p.x());
        const Matrix g = x.transpose() * (x * Y(p.y()) - target_);
        return Eigen::Map<const Vector>(g.data(), g.size());
    }

    /// Least squares in Y; undefined when X^T X is numerically singular.
    std::optional<Vector> exact_min_y(const Vector& xv) const override
    {
        const auto x = X(xv);
        Eigen::LLT<Matrix> chol(x.transpose() * x);
        if (chol.info() != Eigen::Success || chol.rcond() < 1e-12) {
            return std::nullopt;
        }
        const Matrix y = chol.solve(x.transpose() * target_);
        return Eigen::Map<const Vector>(y.data(), y.size());
    }
    /// Least squares in X; undefined when Y Y^T is numerically singular.
    std::optional<Vector> exact_min_x(const Vector& yv) const override
    {
        const auto y = Y(yv);
        Eigen::LLT<Matrix> chol(y * y.transpose());
        if (chol.info() != Eigen::Success || chol.rcond() < 1e-12) {
            return std::nullopt;
        }
        const Matrix xt = chol.solve(y * target_.transpose());
        const Matrix x = xt.transpose();
        return Eigen::Map<const Vector>(x.data(), x.size());
    }
    /// lambda_max(Y Y^T) = sigma_max(Y)^2.
    std::optional<double> lipschitz_x(const Vector& yv) const override
    {
        const double s = spectral_norm(Matrix(Y(yv)));
        return s * s;
    }
    std::optional<double> lower_bound() const override { return 0.0; }

    const Matrix& target() const noexcept { return target_; }
    std::size_t rank() const noexcept { return static_cast<std::size_t>(r_); }

private:
    Matrix target_;
    Eigen::Index r_;
};

// =======================================================================
// Two-block Rosenbrock
// =======================================================================

/// f(x, y) = (1 - x)^2 + scale (y - x^2)^2 on scalar blocks. The x-block
/// curvature grows with x^2, so no global Lipschitz oracle is declared.
class TwoBlockRosenbrock final : public Objective
{
public:
    explicit TwoBlockRosenbrock(double scale = 100.0) : scale_(scale)
    {
        if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
            throw Error(Errc::InvalidArgument, "two_block_rosenbrock scale must be positive");
        }
    }

    std::string name() const override { return "two_block_rosenbrock"; }
    std::size_t dim_x() const override { return 1; }
    std::size_t dim_y() const override { return 1; }

    double value(const BlockPoint& p) const override
    {
        const double x = p.x()[0];
        const double r = p.y()[0] - x * x;
        return (1.0 - x) * (1.0 - x) + scale_ * r * r;
    }
    Vector grad_x(const BlockPoint& p) const override
    {
        const double x = p.x()[0];
        const double r = p.y()[0] - x * x;
        return Vector::Constant(1, -2.0 * (1.0 - x) - 4.0 * scale_ * x * r);
    }
    Vector grad_y(const BlockPoint& p) const override
    {
        const double x = p.x()[0];
        return Vector::Constant(1, 2.0 * scale_ * (p.y()[0] - x * x));
    }
    std::optional<Vector> exact_min_y(const Vector& x) const override
    {
        return Vector::Constant(1, x[0] * x[0]);
    }
    std::optional<double> lower_bound() const override { return 0.0; }

    double scale() const noexcept { return scale_; }

private:
    double scale_;
};

// =======================================================================
// Declared-constant override
// =======================================================================

/// Wraps an objective and replaces its block-x Lipschitz oracle with a
/// user-supplied constant. Everything else is forwarded unchanged.
class DeclaredLipschitz final : public Objective
{
public:
    DeclaredLipschitz(std::shared_ptr<const Objective> base, double l_declared)
        : base_(std::move(base)), l_(l_declared)
    {
        if (!(l_ > 0.0) || !std::isfinite(l_)) {
            throw Error(Errc::InvalidArgument, "declared Lipschitz constant must be positive");
        }
    }

    std::string name() const override { return base_->name(); }
    std::size_t dim_x() const override { return base_->dim_x(); }
    std::size_t dim_y() const override { return base_->dim_y(); }
    double value(const BlockPoint& p) const override { return base_->value(p); }
    Vector grad_x(const BlockPoint& p) const override { return base_->grad_x(p); }
    Vector grad_y(const BlockPoint& p) const override { return base_->grad_y(p); }
    std::optional<Vector> exact_min_y(const Vector& x) const override { return base_->exact_min_y(x); }
    std::optional<Vector> exact_min_x(const Vector& y) const override { return base_->exact_min_x(y); }
    std::optional<double> lipschitz_x(const Vector&) const override { return l_; }
    std::optional<double> lower_bound() const override { return base_->lower_bound(); }

private:
    std::shared_ptr<const Objective> base_;
    double l_;
};

// =======================================================================
// Factory
// =======================================================================

/// Family name plus parameters. Which fields are meaningful depends on the
/// family; make_problem rejects inconsistent combinations.
struct ProblemSpec
{
    std::string family;
    std::optional<std::uint64_t> seed;

    // tight_quadratic
    std::optional<double> l_const;
    std::optional<double> c_const;
    std::optional<Vector> anchor;
    std::optional<Vector> g_anchor;

    // coupled_quadratic
    std::optional<std::size_t> n_x;
    std::optional<std::size_t> n_y;
    std::optional<Matrix> A, B, C;
    std::optional<Vector> a, c;

    // matrix_factorization
    std::optional<std::size_t> m, n, rank;
    std::optional<Matrix> target;

    // two_block_rosenbrock
    std::optional<double> scale;

    /// Overrides the family's block-x Lipschitz oracle with a constant.
    std::optional<double> declared_lipschitz;
};

inline std::shared_ptr<const Objective> make_problem(const ProblemSpec& spec)
{
    std::shared_ptr<const Objective> obj;
    if (spec.family == "tight_quadratic") {
        const double l = spec.l_const.value_or(1.0);
        Vector anchor, g;
        if (spec.anchor && spec.g_anchor) {
            anchor = *spec.anchor;
            g = *spec.g_anchor;
        } else {
            const auto dim = static_cast<Eigen::Index>(
                spec.anchor ? spec.anchor->size() : spec.g_anchor ? spec.g_anchor->size() : spec.n_x.value_or(1));
            anchor = spec.anchor.value_or(Vector::Zero(dim));
            g = spec.g_anchor.value_or(Vector::Zero(dim));
        }
        if (spec.n_x && static_cast<std::size_t>(anchor.size()) != *spec.n_x) {
            throw Error(Errc::InvalidDimensions, "tight_quadratic n_x disagrees with anchor size");
        }
        if (spec.n_y && *spec.n_y != 0) {
            throw Error(Errc::InvalidDimensions, "tight_quadratic has an empty y block");
        }
        obj = std::make_shared<TightQuadratic>(l, spec.c_const.value_or(0.0), anchor, g);
    } else if (spec.family == "coupled_quadratic") {
        if (spec.A || spec.B || spec.C) {
            if (!spec.A || !spec.B || !spec.C) {
                throw Error(Errc::InvalidDimensions, "coupled_quadratic needs all of A, B, C when any is given");
            }
            obj = std::make_shared<CoupledQuadratic>(*spec.A, *spec.B, *spec.C,
                                                     spec.a.value_or(Vector::Zero(spec.A->rows())),
                                                     spec.c.value_or(Vector::Zero(spec.C->rows())));
        } else {
            if (spec.a || spec.c) {
                throw Error(Errc::InvalidDimensions, "coupled_quadratic a/c require explicit A, B, C");
            }
            obj = std::make_shared<CoupledQuadratic>(
                CoupledQuadratic::random(spec.seed.value_or(0), spec.n_x.value_or(5), spec.n_y.value_or(3)));
        }
    } else if (spec.family == "matrix_factorization") {
        if (!spec.rank) {
            throw Error(Errc::InvalidDimensions, "matrix_factorization needs a rank");
        }
        std::shared_ptr<MatrixFactorization> mf;
        if (spec.target) {
            mf = std::make_shared<MatrixFactorization>(*spec.target, *spec.rank);
        } else {
            mf = std::make_shared<MatrixFactorization>(MatrixFactorization::random(
                spec.seed.value_or(0), spec.m.value_or(6), spec.n.value_or(5), *spec.rank));
        }
        const auto min_side = static_cast<std::size_t>(std::min(mf->target().rows(), mf->target().cols()));
        if (*spec.rank > min_side) {
            throw Error(Errc::InvalidDimensions, "matrix_factorization rank exceeds min(m, n)");
        }
        obj = std::move(mf);
    } else if (spec.family == "two_block_rosenbrock") {
        obj = std::make_shared<TwoBlockRosenbrock>(spec.scale.value_or(100.0));
    } else {
        throw Error(Errc::UnknownFamily, "unknown problem family '" + spec.family + "'");
    }

    if (spec.declared_lipschitz) {
        obj = std::make_shared<DeclaredLipschitz>(std::move(obj), *spec.declared_lipschitz);
    }
    return obj;
}

/// Uniform random point in [-half_width, half_width]^(n_x + n_y).
inline BlockPoint random_start(const Objective& obj, std::uint64_t seed, double half_width = 2.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-half_width, half_width);
    Vector x(static_cast<Eigen::Index>(obj.dim_x()));
    Vector y(static_cast<Eigen::Index>(obj.dim_y()));
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = u(rng);
    return {std::move(x), std::move(y)};
}

} // namespace bcdcert
