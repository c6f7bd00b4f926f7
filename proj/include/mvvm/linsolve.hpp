#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace mvvm {

// Full (both triangles) storage of a symmetric matrix.
using SparseSpd = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class SolverError : public std::runtime_error
{
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what + " (relative residual " + format(residual) + ")"), residual_(residual)
    {
    }

    double residual() const { return residual_; }

private:
    static std::string format(double x)
    {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3e", x);
        return buf;
    }
    double residual_;
};

enum class SolverMethod
{
    ConjugateGradient,
    DenseCholesky,
};

struct SolverOptions
{
    double tolerance = 1e-12;
    // 0 means 10 n.
    long max_iterations = 0;
    // Dense Cholesky is tried when CG stalls and the system is at most this large.
    long dense_fallback_limit = 2000;
    // Also accept x once max_i |b - A x|_i / (|A||x| + |b|)_i is at most this; it is the
    // round-off floor when ||b - A x|| / ||b|| cannot reach `tolerance`. 0 disables.
    double backward_error_tolerance = 8 * 2.220446049250313e-16;
    // Correction sweeps x += A^{-1}(b - A x), residuals accumulated in long double.
    int refinement_sweeps = 10;
};

struct SolveReport
{
    Eigen::VectorXd x;
    SolverMethod    method     = SolverMethod::ConjugateGradient;
    long            iterations = 0;
    double          relative_residual = 0.0; // ||b - A x|| / ||b||, recomputed from x
    double          backward_error    = 0.0; // componentwise, see SolverOptions
    int             refinements = 0;

    bool converged(const SolverOptions& options) const
    {
        return relative_residual <= options.tolerance || backward_error <= options.backward_error_tolerance;
    }
};

/// Jacobi-preconditioned conjugate gradients, refined with extended-precision residuals,
/// with a dense Cholesky fallback for small systems. The result always satisfies
/// `SolveReport::converged`; otherwise throws.
SolveReport solve(const SparseSpd& a, const Eigen::VectorXd& b, const SolverOptions& options = {});

/// b - A x with products and sums accumulated in long double.
Eigen::VectorXd extended_residual(const SparseSpd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x);

/// Dense counterpart of extended_residual.
Eigen::VectorXd extended_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x);

/// Componentwise backward error max_i |b - A x|_i / (|A||x| + |b|)_i.
double componentwise_backward_error(const SparseSpd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x);

/// Plain preconditioned CG from x = 0, without fallback; reports whatever residual it
/// reached. Stops early once the true residual stagnates.
SolveReport conjugate_gradient(const SparseSpd& a, const Eigen::VectorXd& b, const SolverOptions& options = {});

/// Dense LL^T factorization of the sparse matrix. Throws if it is not positive definite.
SolveReport dense_cholesky(const SparseSpd& a, const Eigen::VectorXd& b);

} // namespace mvvm
