#include "mvvm/study.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace mvvm {

PipelineResult run_pipeline(const PolyMesh& mesh, const ManufacturedCase& c, int k, const PipelineOptions& options)
{
    AssemblyOptions assembly;
    assembly.boundary = boundary_moments(mesh, k, c.pressure, 2 * (k + 3));

    PipelineResult result{assemble(mesh, c.coefficient, c.forcing, k, assembly), {}, {}};
    result.solve    = solve_pressure(result.disc, options.solver);
    result.velocity = recover_velocity(result.disc, c.coefficient, c.forcing, options.recovery);
    return result;
}

ConvergenceRow error_norms(const PipelineResult& result, const ManufacturedCase& c)
{
    const Discretization& disc = result.disc;
    const PolyMesh&       mesh = *disc.mesh;
    const int             k    = disc.order;

    double eu = 0.0, ep = 0.0, eg = 0.0, ed = 0.0, ert = 0.0;
    for (int cell = 0; cell < mesh.num_cells(); ++cell)
    {
        const NcElement&      el       = disc.elements[cell];
        const Basis           bk       = el.basis_k();
        const Basis&          bk1      = el.basis();
        const Eigen::VectorXd y        = disc.local_coordinates(cell);
        const Eigen::VectorXd p_proj   = (el.l2_projector() * el.dof_change()) * y;
        const Eigen::VectorXd g_proj   = (el.gradient_projector() * el.dof_change()) * y;
        const Eigen::VectorXd& u_proj  = result.velocity.projection.coefficients[cell];
        const Eigen::VectorXd& div     = result.velocity.divergence.coefficients[cell];

        const PolyQuadrature quad = polygon_quadrature(el.geometry().loop, 2 * (k + 3));
        for (std::size_t q = 0; q < quad.size(); ++q)
        {
            const Point& x = quad.points[q];
            const double w = quad.weights[q];
            const Point  u = c.velocity(x);
            eu += w * (u - eval_vector(bk, u_proj, x)).squaredNorm();
            ep += w * std::pow(c.pressure(x) - bk1.eval(x).dot(p_proj), 2);
            eg += w * (c.pressure_gradient(x) - eval_vector(bk, g_proj, x)).squaredNorm();
            ed += w * std::pow(c.forcing(x) - bk.eval(x).dot(div), 2);
            if (k == 0) ert += w * (u - result.velocity.reconstruction[cell](x)).squaredNorm();
        }
    }

    ConvergenceRow row;
    row.elements     = mesh.num_cells();
    row.h            = mesh.max_diameter();
    row.error_u      = std::sqrt(eu);
    row.error_p      = std::sqrt(ep);
    row.error_grad_p = std::sqrt(eg);
    row.error_div    = std::sqrt(ed);
    row.error_rt     = k == 0 ? std::sqrt(ert) : std::numeric_limits<double>::quiet_NaN();
    row.checks       = result.velocity.checks;
    return row;
}

PolyMesh MeshFamily::level(int l) const
{
    const int n = coarsest << l;
    if (kind == Kind::Uniform) return generate_uniform_quads(n, n);
    return generate_distorted_polygonal({n, n, seed + static_cast<std::uint64_t>(l), distortion, split_fraction});
}

MeshFamily::Kind parse_family(const std::string& name)
{
    if (name == "uniform") return MeshFamily::Kind::Uniform;
    if (name == "distorted") return MeshFamily::Kind::Distorted;
    throw std::invalid_argument("unknown mesh family '" + name + "' (expected uniform or distorted)");
}

std::optional<double> convergence_order(double previous, double current)
{
    if (!(previous > kExactThreshold) || !(current > kExactThreshold)) return std::nullopt;
    return std::log2(previous / current);
}

namespace {

void fill_orders(std::vector<ConvergenceRow>& rows)
{
    for (std::size_t i = 1; i < rows.size(); ++i)
    {
        const auto& a = rows[i - 1];
        auto&       b = rows[i];
        b.order_u      = convergence_order(a.error_u, b.error_u);
        b.order_p      = convergence_order(a.error_p, b.error_p);
        b.order_grad_p = convergence_order(a.error_grad_p, b.error_grad_p);
        b.order_div    = convergence_order(a.error_div, b.error_div);
        if (!std::isnan(b.error_rt)) b.order_rt = convergence_order(a.error_rt, b.error_rt);
    }
}

std::string format_order(const std::optional<double>& order, bool first_row)
{
    if (order) return format_sci(*order);
    return first_row ? "" : "exact";
}

} // namespace

std::vector<ConvergenceRow> convergence_study(const ManufacturedCase& c, int k, const MeshFamily& family, int levels,
                                              const PipelineOptions& options)
{
    if (levels < 3) throw std::invalid_argument("a convergence study needs at least three levels");
    std::vector<ConvergenceRow> rows;
    for (int l = 0; l < levels; ++l)
    {
        const PolyMesh mesh = family.level(l);
        try
        {
            rows.push_back(error_norms(run_pipeline(mesh, c, k, options), c));
        }
        catch (const SolverError& e)
        {
            fill_orders(rows);
            throw StudyAborted("level " + std::to_string(l) + ": " + e.what(), std::move(rows));
        }
    }
    fill_orders(rows);
    return rows;
}

std::vector<ConvergenceRow> rt_comparison_study(int levels, const MeshFamily& family, const PipelineOptions& options)
{
    return convergence_study(unit_coefficient_case(), 0, family, levels, options);
}

std::string format_sci(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.5e", x);
    return buf;
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows)
{
    out << "elements,h,error_u,order_u,error_p,order_p,error_grad_p,order_grad_p,error_div,order_div\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        const auto& r     = rows[i];
        const bool  first = i == 0;
        out << r.elements << ',' << format_sci(r.h) << ',' << format_sci(r.error_u) << ','
            << format_order(r.order_u, first) << ',' << format_sci(r.error_p) << ',' << format_order(r.order_p, first)
            << ',' << format_sci(r.error_grad_p) << ',' << format_order(r.order_grad_p, first) << ','
            << format_sci(r.error_div) << ',' << format_order(r.order_div, first) << '\n';
    }
}

void write_rt_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows)
{
    out << "elements,h,error_projection,order_projection,error_rt,order_rt\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        const auto& r     = rows[i];
        const bool  first = i == 0;
        out << r.elements << ',' << format_sci(r.h) << ',' << format_sci(r.error_u) << ','
            << format_order(r.order_u, first) << ',' << format_sci(r.error_rt) << ',' << format_order(r.order_rt, first)
            << '\n';
    }
}

void write_csv_file(const std::filesystem::path& path, const std::vector<ConvergenceRow>& rows, bool rt)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    rt ? write_rt_csv(out, rows) : write_convergence_csv(out, rows);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

} // namespace mvvm
