#include "mvvm/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mvvm {

CellData cell_data(const Discretization& disc, int cell)
{
    const Eigen::VectorXd y = disc.local_coordinates(cell);
    return {&disc.elements[cell], disc.stiffness_coordinates[cell], y, disc.load_coordinates[cell],
            disc.f_projection[cell], disc.elements[cell].dof_change() * y};
}

Eigen::MatrixXd recover_edge_moments(const CellData& data)
{
    const NcElement&      el       = *data.element;
    const int             k        = el.order();
    const Eigen::VectorXd residual = extended_residual(data.stiffness, data.load, data.coordinates);

    Eigen::MatrixXd flux(k + 1, el.num_faces());
    for (int i = 0; i < el.num_faces(); ++i)
    {
        const int    first = el.edge_dof(i, 0);
        const double len   = el.geometry().faces[i].length;
        // residual / |f| are the coefficients of u.n_P in the orthonormal edge basis
        flux.col(i) = el.dof_change().block(first, first, k + 1, k + 1) * residual.segment(first, k + 1) / len;
    }
    return flux;
}

Eigen::VectorXd boundary_flux_moments(const NcElement& element, const Eigen::MatrixXd& flux)
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(element.basis().size());
    for (int i = 0; i < element.num_faces(); ++i)
    {
        const double          len   = element.geometry().faces[i].length;
        const Eigen::VectorXd coeff = len * element.face_mass(i).ldlt().solve(flux.col(i));
        out += element.face_moments(i) * coeff;
    }
    return out;
}

namespace {

// int_P Pi^0_k f m_beta for every m_beta in M_{k+1}
Eigen::VectorXd forcing_moments(const NcElement& element, const Eigen::VectorXd& f_projection)
{
    return element.mass().leftCols(f_projection.size()) * f_projection;
}

} // namespace

Eigen::VectorXd recover_gradient_moments(const NcElement& element, const Eigen::MatrixXd& flux,
                                         const Eigen::VectorXd& f_projection)
{
    const int             nk = poly_dim(element.order());
    const Eigen::VectorXd m  = boundary_flux_moments(element, flux) - forcing_moments(element, f_projection);
    return m.segment(1, nk - 1) / element.geometry().area;
}

Eigen::VectorXd recover_gkperp_moments(const NcElement& element, const GkPerpBasis& perp,
                                       const Eigen::VectorXd& coordinates, const TensorFunction& coefficient)
{
    if (perp.size() == 0) return Eigen::VectorXd(0);
    // w = Pi^0_k (K v); int u.v = -int_{dP} p w.n + int_P p div w = -(grad p, w) on DOFs
    const Eigen::MatrixXd w = element.vector_mass_k().ldlt().solve(weighted_vector_mass(element, coefficient) * perp.coefficients);
    const Eigen::MatrixXd b = element.gradient_moments() * element.dof_change();
    return -(w.transpose() * (b * coordinates)) / element.geometry().area;
}

Eigen::VectorXd divergence(const CellData& data, const Eigen::MatrixXd& flux, double tolerance, double* error)
{
    const NcElement&      el = *data.element;
    const int             nk = poly_dim(el.order());
    const Eigen::VectorXd boundary = boundary_flux_moments(el, flux).head(nk);
    // int u.grad q = -a_h(p_h, q) for polynomial q
    const Eigen::VectorXd stiff_p =
        -extended_residual(data.stiffness, Eigen::VectorXd::Zero(data.coordinates.size()), data.coordinates);
    const Eigen::MatrixXd poly_coordinates =
        el.dof_change().triangularView<Eigen::Lower>().solve(el.polynomial_dofs().leftCols(nk));
    const Eigen::VectorXd volume = poly_coordinates.transpose() * stiff_p;
    const Eigen::VectorXd from_dofs = boundary + volume;
    const Eigen::VectorXd expected  = el.mass_k() * data.f_projection;

    // magnitudes of the summands before cancellation
    Eigen::VectorXd boundary_abs = Eigen::VectorXd::Zero(nk);
    for (int i = 0; i < el.num_faces(); ++i)
    {
        Eigen::MatrixXd one = Eigen::MatrixXd::Zero(flux.rows(), flux.cols());
        one.col(i)          = flux.col(i);
        boundary_abs += boundary_flux_moments(el, one).head(nk).cwiseAbs();
    }
    const Eigen::VectorXd volume_abs =
        poly_coordinates.cwiseAbs().transpose() * (data.stiffness.cwiseAbs() * data.coordinates.cwiseAbs());

    const double scale    = std::max({expected.norm(), boundary_abs.norm(), volume_abs.norm()});
    const double mismatch = scale > 0.0 ? (from_dofs - expected).norm() / scale : 0.0;
    if (error) *error = mismatch;
    if (mismatch > tolerance)
    {
        std::ostringstream msg;
        msg << "divergence identity violated on cell " << el.geometry().index << ": relative mismatch " << mismatch;
        throw RecoveryError(msg.str());
    }
    return data.f_projection;
}

Eigen::VectorXd project_velocity(const NcElement& element, const GkPerpBasis& perp, const Eigen::MatrixXd& flux,
                                 const Eigen::VectorXd& complement_moments, const Eigen::VectorXd& f_projection)
{
    const int nk  = poly_dim(element.order());
    const int nk1 = poly_dim(element.order() + 1);

    // basis of (P_k)^2 = grad P_{k+1} (+) G_k^perp, in vector-monomial coefficients
    Eigen::MatrixXd change(2 * nk, 2 * nk);
    change.leftCols(nk1 - 1)   = gradient_matrix(element.basis()).rightCols(nk1 - 1);
    change.rightCols(perp.size()) = perp.coefficients;

    Eigen::VectorXd moments(2 * nk);
    moments.head(nk1 - 1) =
        (boundary_flux_moments(element, flux) - forcing_moments(element, f_projection)).tail(nk1 - 1);
    moments.tail(perp.size()) = element.geometry().area * complement_moments;

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(change.transpose());
    if (!lu.isInvertible()) throw RecoveryError("vector polynomial splitting is singular on cell " + std::to_string(element.geometry().index));
    const Eigen::VectorXd monomial_moments = lu.solve(moments);
    return element.vector_mass_k().ldlt().solve(monomial_moments);
}

RtCell rt0_reconstruct(const NcElement& element, const Eigen::VectorXd& pressure, const ScalarFunction& f,
                       const TensorFunction& coefficient)
{
    if (element.order() != 0) throw std::invalid_argument("the Raviart-Thomas-type reconstruction needs k = 0");
    const CellGeometry& g = element.geometry();

    Point mean_gradient = Point::Zero();
    for (int i = 0; i < element.num_faces(); ++i)
        mean_gradient += g.faces[i].normal * g.faces[i].length * pressure[element.edge_dof(i, 0)];
    mean_gradient /= g.area;

    Eigen::Matrix2d k_mean = Eigen::Matrix2d::Zero();
    double          f_mean = 0.0;
    const auto&     quad   = element.quadrature();
    for (std::size_t q = 0; q < quad.size(); ++q)
    {
        k_mean += quad.weights[q] * coefficient(quad.points[q]);
        f_mean += quad.weights[q] * f(quad.points[q]);
    }
    k_mean /= g.area;
    f_mean /= g.area;

    return {-k_mean * mean_gradient, 0.5 * f_mean, g.centroid};
}

VelocitySolution recover_velocity(const Discretization& disc, const TensorFunction& coefficient,
                                  const ScalarFunction& f, const RecoveryOptions& options)
{
    const PolyMesh& mesh = *disc.mesh;
    const int       k    = disc.order;
    const int       nc   = mesh.num_cells();

    VelocitySolution sol;
    sol.dofs.order        = k;
    sol.dofs.edge_moments = Eigen::MatrixXd::Zero(k + 1, mesh.num_edges());
    sol.dofs.gradient_moments.resize(nc);
    sol.dofs.complement_moments.resize(nc);
    sol.projection = {k, 2, std::vector<Eigen::VectorXd>(nc)};
    sol.divergence = {k, 1, std::vector<Eigen::VectorXd>(nc)};

    // right-cell copy of each interior edge flux, for the continuity check
    Eigen::MatrixXd from_right = Eigen::MatrixXd::Zero(k + 1, mesh.num_edges());

    double max_div_error = 0.0;
    double source_total  = 0.0;
    double source_scale  = 0.0;
    for (int c = 0; c < nc; ++c)
    {
        const CellData   data = cell_data(disc, c);
        const NcElement& el   = disc.elements[c];
        const auto&      geom = el.geometry();

        const Eigen::MatrixXd flux = recover_edge_moments(data);
        for (int i = 0; i < el.num_faces(); ++i)
        {
            const auto& face = geom.faces[i];
            if (face.sign > 0)
                sol.dofs.edge_moments.col(face.edge) = flux.col(i);
            else
                from_right.col(face.edge) = -flux.col(i);
        }

        double div_error = 0.0;
        sol.divergence.coefficients[c] =
            divergence(data, flux, options.strict ? options.divergence_tolerance : std::numeric_limits<double>::infinity(),
                       &div_error);
        max_div_error = std::max(max_div_error, div_error);

        const GkPerpBasis perp = gk_perp_basis(el.basis(), el.vector_mass_k(), k);
        sol.dofs.gradient_moments[c]   = recover_gradient_moments(el, flux, data.f_projection);
        sol.dofs.complement_moments[c] = recover_gkperp_moments(el, perp, data.coordinates, coefficient);
        sol.projection.coefficients[c] =
            project_velocity(el, perp, flux, sol.dofs.complement_moments[c], data.f_projection);

        const double source = (el.mass_k() * data.f_projection)[0];
        source_total += source;
        source_scale += std::abs(source);

        if (k == 0) sol.reconstruction.push_back(rt0_reconstruct(el, data.pressure, f, coefficient));
    }

    // H(div) conformity: both sides of an interior edge see the same normal flux
    double flux_scale = sol.dofs.edge_moments.cwiseAbs().maxCoeff();
    double mismatch   = 0.0;
    double boundary_total = 0.0;
    double boundary_abs   = 0.0;
    for (int e = 0; e < mesh.num_edges(); ++e)
    {
        if (mesh.edges()[e].is_boundary())
        {
            boundary_total += mesh.edge_length(e) * sol.dofs.edge_moments(0, e);
            boundary_abs += mesh.edge_length(e) * std::abs(sol.dofs.edge_moments(0, e));
        }
        else
            mismatch = std::max(mismatch, (sol.dofs.edge_moments.col(e) - from_right.col(e)).cwiseAbs().maxCoeff());
    }
    sol.checks.max_flux_mismatch    = flux_scale > 0.0 ? mismatch / flux_scale : mismatch;
    sol.checks.max_divergence_error = max_div_error;
    const double conservation_scale = std::max(source_scale, boundary_abs);
    sol.checks.conservation_error =
        conservation_scale > 0.0 ? std::abs(boundary_total - source_total) / conservation_scale : 0.0;

    if (options.strict)
    {
        if (sol.checks.max_flux_mismatch > options.flux_tolerance)
            throw RecoveryError("interior edge fluxes disagree: relative mismatch "
                                + std::to_string(sol.checks.max_flux_mismatch));
        if (sol.checks.conservation_error > options.conservation_tolerance)
            throw RecoveryError("global conservation violated: relative error "
                                + std::to_string(sol.checks.conservation_error));
    }
    return sol;
}

} // namespace mvvm
