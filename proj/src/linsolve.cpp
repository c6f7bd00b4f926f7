#include "mvvm/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace mvvm {

Eigen::VectorXd extended_residual(const SparseSpd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x)
{
    Eigen::VectorXd r(a.rows());
    for (Eigen::Index i = 0; i < a.outerSize(); ++i)
    {
        long double s = b[i];
        for (SparseSpd::InnerIterator it(a, i); it; ++it)
            s -= static_cast<long double>(it.value()) * static_cast<long double>(x[it.col()]);
        r[i] = static_cast<double>(s);
    }
    return r;
}

Eigen::VectorXd extended_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x)
{
    Eigen::VectorXd r(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
    {
        long double s = b[i];
        for (Eigen::Index j = 0; j < a.cols(); ++j) s -= static_cast<long double>(a(i, j)) * static_cast<long double>(x[j]);
        r[i] = static_cast<double>(s);
    }
    return r;
}

double componentwise_backward_error(const SparseSpd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x)
{
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.outerSize(); ++i)
    {
        long double s     = b[i];
        long double scale = std::abs(b[i]);
        for (SparseSpd::InnerIterator it(a, i); it; ++it)
        {
            const long double t = static_cast<long double>(it.value()) * static_cast<long double>(x[it.col()]);
            s -= t;
            scale += std::abs(t);
        }
        if (scale > 0.0L) worst = std::max(worst, static_cast<double>(std::abs(s) / scale));
        else if (s != 0.0L) return std::numeric_limits<double>::infinity();
    }
    return worst;
}

namespace {

void measure(const SparseSpd& a, const Eigen::VectorXd& b, SolveReport& report)
{
    const double bn          = b.norm();
    const double rn          = extended_residual(a, b, report.x).norm();
    report.relative_residual = bn > 0.0 ? rn / bn : rn;
    report.backward_error    = componentwise_backward_error(a, b, report.x);
}

} // namespace

SolveReport conjugate_gradient(const SparseSpd& a, const Eigen::VectorXd& b, const SolverOptions& options)
{
    const Eigen::Index n = a.rows();
    SolveReport        report;
    report.method = SolverMethod::ConjugateGradient;
    report.x      = Eigen::VectorXd::Zero(n);
    if (n == 0) return report;

    const double bnorm = b.norm();
    if (bnorm == 0.0) return report;

    Eigen::VectorXd inv_diag(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const double d = a.coeff(i, i);
        if (!(d > 0.0)) throw SolverError("nonpositive diagonal entry " + std::to_string(i) + ": matrix is not SPD", 1.0);
        inv_diag[i] = 1.0 / d;
    }

    const long   max_it = options.max_iterations > 0 ? options.max_iterations : 10 * static_cast<long>(n);
    const double target = options.tolerance * bnorm;

    Eigen::VectorXd& x = report.x;
    Eigen::VectorXd  r = b;
    Eigen::VectorXd  z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd  p = z;
    Eigen::VectorXd  q(n);
    double           rz        = r.dot(z);
    double           best_true = bnorm;
    int              stalls    = 0;

    long it = 0;
    for (; it < max_it; ++it)
    {
        q.noalias()     = a * p;
        const double pq = p.dot(q);
        if (!(pq > 0.0)) break;
        const double alpha = rz / pq;
        x += alpha * p;
        r -= alpha * q;

        if (r.norm() <= target)
        {
            // the recursive residual drifts from b - A x near round-off level
            r                  = extended_residual(a, b, x);
            const double rnorm = r.norm();
            if (rnorm <= target || componentwise_backward_error(a, b, x) <= options.backward_error_tolerance)
            {
                ++it;
                break;
            }
            if (rnorm < 0.5 * best_true)
            {
                best_true = rnorm;
                stalls    = 0;
            }
            else if (++stalls >= 3)
            {
                ++it;
                break;
            }
        }

        z                   = inv_diag.cwiseProduct(r);
        const double rz_new = r.dot(z);
        p                   = z + (rz_new / rz) * p;
        rz                  = rz_new;
    }

    report.iterations = it;
    measure(a, b, report);
    return report;
}

SolveReport dense_cholesky(const SparseSpd& a, const Eigen::VectorXd& b)
{
    const Eigen::MatrixXd             dense(a);
    const Eigen::LLT<Eigen::MatrixXd> llt(dense);
    if (llt.info() != Eigen::Success) throw SolverError("dense Cholesky failed: matrix is not SPD", 1.0);
    SolveReport report;
    report.method = SolverMethod::DenseCholesky;
    report.x      = llt.solve(b);
    for (int sweep = 0; sweep < 3; ++sweep)
    {
        const Eigen::VectorXd r = extended_residual(a, b, report.x);
        if (r.norm() == 0.0) break;
        report.x += llt.solve(r);
        ++report.refinements;
    }
    measure(a, b, report);
    return report;
}

SolveReport solve(const SparseSpd& a, const Eigen::VectorXd& b, const SolverOptions& options)
{
    if (a.rows() != a.cols() || a.rows() != b.size()) throw std::invalid_argument("solve: dimension mismatch");

    // a moderate first pass; the refinement sweeps below take it to round-off level
    SolverOptions first = options;
    first.tolerance     = std::max(options.tolerance, 1e-8);
    SolveReport report  = conjugate_gradient(a, b, first);

    SolverOptions inner            = options;
    inner.tolerance                = 1e-6;
    inner.backward_error_tolerance = 0.0;
    for (int sweep = 0; sweep < options.refinement_sweeps && !report.converged(options); ++sweep)
    {
        const Eigen::VectorXd r          = extended_residual(a, b, report.x);
        const SolveReport     correction = conjugate_gradient(a, r, inner);
        SolveReport           candidate  = report;
        candidate.x += correction.x;
        candidate.iterations += correction.iterations;
        measure(a, b, candidate);
        report.iterations = candidate.iterations;
        if (!(candidate.relative_residual < report.relative_residual)) break;
        report = std::move(candidate);
        ++report.refinements;
    }
    if (report.converged(options)) return report;

    if (a.rows() <= options.dense_fallback_limit)
    {
        SolveReport direct = dense_cholesky(a, b);
        direct.iterations  = report.iterations;
        if (direct.converged(options)) return direct;
        report = direct;
    }
    throw SolverError("linear solve did not reach the requested tolerance", report.relative_residual);
}

} // namespace mvvm
