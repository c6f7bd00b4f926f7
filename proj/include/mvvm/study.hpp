#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvvm/cases.hpp"
#include "mvvm/recovery.hpp"

namespace mvvm {

/// Primal solve plus local velocity recovery for one manufactured case.
/// Boundary moments are taken from the exact pressure.
struct PipelineResult
{
    Discretization   disc;
    SolveReport      solve;
    VelocitySolution velocity;
};

struct PipelineOptions
{
    SolverOptions   solver;
    RecoveryOptions recovery;
};

PipelineResult run_pipeline(const PolyMesh& mesh, const ManufacturedCase& c, int k, const PipelineOptions& options = {});

/// L2 errors of one refinement level. `error_rt` is NaN unless k = 0.
struct ConvergenceRow
{
    int    elements = 0;
    double h        = 0.0;
    double error_u       = 0.0; // ||u - Pi^0_k u_h||
    double error_p       = 0.0; // ||p - Pi^0_{k+1} p_h||
    double error_grad_p  = 0.0; // broken ||grad p - Pi^0_k grad p_h||
    double error_div     = 0.0; // ||div u - div u_h||
    double error_rt      = 0.0; // ||u - u_rt||

    // log2(previous / current); empty on the first row
    std::optional<double> order_u, order_p, order_grad_p, order_div, order_rt;
    // structural checks of the velocity recovery on this level
    RecoveryChecks checks;
};

/// Cell-wise quadrature of exactness 2(k+3) against the exact solution.
ConvergenceRow error_norms(const PipelineResult& result, const ManufacturedCase& c);

struct MeshFamily
{
    enum class Kind
    {
        Uniform,
        Distorted,
    };
    Kind          kind           = Kind::Distorted;
    std::uint64_t seed           = 1;
    double        distortion     = 0.2;
    double        split_fraction = 0.25;
    int           coarsest       = 4; // cells per side on level 0

    PolyMesh level(int l) const;
};

MeshFamily::Kind parse_family(const std::string& name);

/// Errors below this are treated as exact reproduction; no order is reported.
inline constexpr double kExactThreshold = 1e-13;

std::optional<double> convergence_order(double previous, double current);

/// A level failed to solve; `rows` holds the levels completed before it, orders filled.
class StudyAborted : public std::runtime_error
{
public:
    StudyAborted(const std::string& what, std::vector<ConvergenceRow> completed)
        : std::runtime_error(what), rows(std::move(completed))
    {
    }
    std::vector<ConvergenceRow> rows;
};

/// Halves h at each level and fills in the orders. Needs at least three levels.
std::vector<ConvergenceRow> convergence_study(const ManufacturedCase& c, int k, const MeshFamily& family, int levels,
                                              const PipelineOptions& options = {});

/// k = 0, K = 1: errors of Pi^0_0 u_h (error_u) and of the reconstruction (error_rt).
std::vector<ConvergenceRow> rt_comparison_study(int levels, const MeshFamily& family, const PipelineOptions& options = {});

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);
void write_rt_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);
void write_csv_file(const std::filesystem::path& path, const std::vector<ConvergenceRow>& rows, bool rt);

/// "%.5e" (six significant digits).
std::string format_sci(double x);

} // namespace mvvm
