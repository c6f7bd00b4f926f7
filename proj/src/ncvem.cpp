#include "mvvm/ncvem.hpp"

#include <cmath>
#include <stdexcept>

namespace mvvm {

NcElement::NcElement(CellGeometry cell, int k, int quadrature_degree)
    : cell_(std::move(cell)),
      k_(k),
      basis_(cell_.centroid, cell_.diameter, k + 1),
      quad_(polygon_quadrature(cell_.loop, quadrature_degree < 0 ? default_quadrature_degree(k) : quadrature_degree))
{
    if (k < 0) throw std::invalid_argument("element order must be non-negative");

    const int n     = num_dofs();
    const int nk    = poly_dim(k);
    const int nk1   = poly_dim(k + 1);
    const int nkm1  = poly_dim(k - 1);
    const double area = cell_.area;

    mass_ = mass_matrix(basis_, quad_);

    for (const auto& face : cell_.faces)
    {
        const EdgeBasis      eb   = face.basis(k);
        const PolyQuadrature rule = segment_quadrature<double>(face.a, face.b, 2 * k + 2);
        Eigen::MatrixXd      w    = Eigen::MatrixXd::Zero(nk1, k + 1);
        Eigen::MatrixXd      m    = Eigen::MatrixXd::Zero(k + 1, k + 1);
        for (std::size_t q = 0; q < rule.size(); ++q)
        {
            const Eigen::VectorXd e = eb.eval(rule.points[q]);
            w.noalias() += rule.weights[q] * basis_.eval(rule.points[q]) * e.transpose();
            m.noalias() += rule.weights[q] * e * e.transpose();
        }
        face_moments_.push_back(std::move(w));
        face_mass_.push_back(std::move(m));
    }

    // (grad chi, g) = -(chi, div g) + sum_f (chi, g.n)_f for g in (M_k)^2.
    // div g lies in P_{k-1}: interior moments. g.n restricted to f lies in P_k(f): edge moments.
    const Basis bk = basis_k();
    grad_moments_  = Eigen::MatrixXd::Zero(2 * nk, n);
    for (int dir = 0; dir < 2; ++dir)
    {
        const Eigen::MatrixXd d = bk.derivative(dir); // nkm1 x nk
        for (int alpha = 0; alpha < nk; ++alpha)
            for (int beta = 0; beta < nkm1; ++beta)
                grad_moments_(dir * nk + alpha, interior_dof(beta)) -= area * d(beta, alpha);
    }
    for (int i = 0; i < num_faces(); ++i)
    {
        const auto& face = cell_.faces[i];
        // m_alpha|_f = sum_j trace(alpha, j) e_j, exact for |alpha| <= k
        const Eigen::MatrixXd trace =
            face_mass_[i].ldlt().solve(face_moments_[i].topRows(nk).transpose()).transpose();
        for (int dir = 0; dir < 2; ++dir)
            for (int alpha = 0; alpha < nk; ++alpha)
                for (int j = 0; j <= k; ++j)
                    grad_moments_(dir * nk + alpha, edge_dof(i, j)) += face.normal[dir] * face.length * trace(alpha, j);
    }
    grad_proj_ = vector_mass_k().ldlt().solve(grad_moments_);

    // Elliptic projection: (grad Pi chi, grad m) = (grad chi, grad m), mean over the boundary fixed.
    const Eigen::MatrixXd grads = gradient_matrix(basis_); // 2nk x nk1
    Eigen::MatrixXd       lhs   = grads.transpose() * vector_mass_k() * grads;
    Eigen::MatrixXd       rhs   = grads.transpose() * grad_moments_;
    lhs.row(0).setZero();
    rhs.row(0).setZero();
    for (int i = 0; i < num_faces(); ++i)
    {
        lhs.row(0) += face_moments_[i].col(0).transpose();
        rhs(0, edge_dof(i, 0)) += cell_.faces[i].length;
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> elliptic(lhs);
    if (!elliptic.isInvertible()) throw std::runtime_error("singular elliptic projection on cell " + std::to_string(cell_.index));
    elliptic_proj_ = elliptic.solve(rhs);

    // L2 projection: moments up to degree k-1 are DOFs, degrees k and k+1 come from Pi^nabla.
    Eigen::MatrixXd moments = mass_ * elliptic_proj_;
    moments.topRows(nkm1).setZero();
    for (int beta = 0; beta < nkm1; ++beta) moments(beta, interior_dof(beta)) = area;
    l2_proj_   = mass_.ldlt().solve(moments);
    l2_proj_k_ = mass_k().ldlt().solve(moments.topRows(nk));

    poly_dofs_ = Eigen::MatrixXd::Zero(n, nk1);
    for (int i = 0; i < num_faces(); ++i)
        poly_dofs_.middleRows(edge_dof(i, 0), k + 1) = face_moments_[i].transpose() / cell_.faces[i].length;
    if (nkm1 > 0) poly_dofs_.bottomRows(nkm1) = mass_.topRows(nkm1) / area;

    dof_change_                 = Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd edge_l = edge_gram(k).llt().matrixL();
    for (int i = 0; i < num_faces(); ++i) dof_change_.block(edge_dof(i, 0), edge_dof(i, 0), k + 1, k + 1) = edge_l;
    if (nkm1 > 0)
    {
        const Eigen::MatrixXd interior = mass_.topLeftCorner(nkm1, nkm1) / area;
        dof_change_.bottomRightCorner(nkm1, nkm1) = interior.llt().matrixL();
    }
}

Eigen::VectorXd NcElement::interpolate(const ScalarFunction& f, int quadrature_degree) const
{
    const int       deg = quadrature_degree < 0 ? quad_.degree : quadrature_degree;
    Eigen::VectorXd dofs(num_dofs());
    for (int i = 0; i < num_faces(); ++i)
    {
        const auto&          face = cell_.faces[i];
        const EdgeBasis      eb   = face.basis(k_);
        const PolyQuadrature rule = segment_quadrature<double>(face.a, face.b, deg);
        Eigen::VectorXd      m    = Eigen::VectorXd::Zero(k_ + 1);
        for (std::size_t q = 0; q < rule.size(); ++q) m += rule.weights[q] * f(rule.points[q]) * eb.eval(rule.points[q]);
        dofs.segment(edge_dof(i, 0), k_ + 1) = m / face.length;
    }
    const int nkm1 = poly_dim(k_ - 1);
    if (nkm1 > 0)
    {
        const PolyQuadrature quad = deg == quad_.degree ? quad_ : polygon_quadrature(cell_.loop, deg);
        const Basis          b(cell_.centroid, cell_.diameter, k_ - 1);
        Eigen::VectorXd      m = Eigen::VectorXd::Zero(nkm1);
        for (std::size_t q = 0; q < quad.size(); ++q) m += quad.weights[q] * f(quad.points[q]) * b.eval(quad.points[q]);
        dofs.tail(nkm1) = m / cell_.area;
    }
    return dofs;
}

NcElement local_projectors(const CellGeometry& cell, int k) { return NcElement(cell, k); }

Eigen::MatrixXd weighted_vector_mass(const NcElement& element, const TensorFunction& coefficient)
{
    const Basis     bk   = element.basis_k();
    const int       nk   = bk.size();
    const auto&     quad = element.quadrature();
    Eigen::MatrixXd m    = Eigen::MatrixXd::Zero(2 * nk, 2 * nk);
    for (std::size_t q = 0; q < quad.size(); ++q)
    {
        const Eigen::VectorXd v   = bk.eval(quad.points[q]);
        const Eigen::MatrixXd vv  = quad.weights[q] * v * v.transpose();
        const Eigen::Matrix2d kxx = coefficient(quad.points[q]);
        // row block: test component, column block: trial component
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) m.block(r * nk, c * nk, nk, nk) += kxx(r, c) * vv;
    }
    return m;
}

LocalStiffness local_stiffness_parts(const NcElement& element, const TensorFunction& coefficient)
{
    const Eigen::MatrixXd& g = element.gradient_projector();
    LocalStiffness         out;
    out.consistency = g.transpose() * weighted_vector_mass(element, coefficient) * g;
    out.consistency = (0.5 * (out.consistency + out.consistency.transpose())).eval();

    const int n = element.num_dofs();
    out.scaling = out.consistency.trace() / n;
    if (!(out.scaling > 0.0)) throw std::runtime_error("nonpositive stabilization scaling on cell " + std::to_string(element.geometry().index));

    const Eigen::MatrixXd defect = Eigen::MatrixXd::Identity(n, n) - element.polynomial_dofs() * element.l2_projector();
    out.stabilization          = out.scaling * defect.transpose() * defect;
    out.stabilization          = (0.5 * (out.stabilization + out.stabilization.transpose())).eval();
    return out;
}

Eigen::MatrixXd local_stiffness(const NcElement& element, const TensorFunction& coefficient)
{
    return local_stiffness_parts(element, coefficient).matrix();
}

Eigen::VectorXd load_moments(const NcElement& element, const ScalarFunction& f)
{
    const Basis     bk   = element.basis_k();
    const auto&     quad = element.quadrature();
    Eigen::VectorXd m    = Eigen::VectorXd::Zero(bk.size());
    for (std::size_t q = 0; q < quad.size(); ++q) m += quad.weights[q] * f(quad.points[q]) * bk.eval(quad.points[q]);
    return m;
}

Eigen::VectorXd local_load(const NcElement& element, const ScalarFunction& f)
{
    return element.l2_projector_k().transpose() * load_moments(element, f);
}

std::vector<int> NcDofMap::local_to_global(const PolyMesh& mesh, int cell) const
{
    std::vector<int> out;
    for (const auto& ce : mesh.cell_edges(cell))
        for (int j = 0; j <= order; ++j) out.push_back(edge_offset[ce.edge] < 0 ? -1 : edge_offset[ce.edge] + j);
    for (int a = 0; a < poly_dim(order - 1); ++a) out.push_back(cell_offset[cell] + a);
    return out;
}

NcDofMap make_dof_map(const PolyMesh& mesh, int k)
{
    NcDofMap map;
    map.order = k;
    map.edge_offset.assign(mesh.num_edges(), -1);
    map.cell_offset.assign(mesh.num_cells(), -1);
    int next = 0;
    for (int e = 0; e < mesh.num_edges(); ++e)
        if (!mesh.edges()[e].is_boundary())
        {
            map.edge_offset[e] = next;
            next += k + 1;
        }
    for (int c = 0; c < mesh.num_cells(); ++c)
    {
        map.cell_offset[c] = next;
        next += poly_dim(k - 1);
    }
    map.num_dofs = next;
    return map;
}

BoundaryMoments boundary_moments(const PolyMesh& mesh, int k, const ScalarFunction& g, int quadrature_degree)
{
    BoundaryMoments out = BoundaryMoments::Zero(k + 1, mesh.num_edges());
    for (int e = 0; e < mesh.num_edges(); ++e)
    {
        if (!mesh.edges()[e].is_boundary()) continue;
        const EdgeBasis      eb   = edge_basis(mesh, e, k);
        const PolyQuadrature rule = segment_quadrature<double>(mesh.vertex(mesh.edges()[e].v0),
                                                               mesh.vertex(mesh.edges()[e].v1), quadrature_degree);
        for (std::size_t q = 0; q < rule.size(); ++q)
            out.col(e) += rule.weights[q] * g(rule.points[q]) * eb.eval(rule.points[q]);
        out.col(e) /= eb.length();
    }
    return out;
}

Eigen::VectorXd NcElement::coordinates(const Eigen::VectorXd& x) const
{
    return dof_change_.triangularView<Eigen::Lower>().solve(x);
}

Eigen::VectorXd Discretization::local_coordinates(int cell, const Eigen::VectorXd& global) const
{
    const auto      map = dofs.local_to_global(*mesh, cell);
    const auto      edges = mesh->cell_edges(cell);
    const Eigen::MatrixXd& change = elements[cell].dof_change();
    Eigen::VectorXd out(map.size());
    for (std::size_t i = 0; i < map.size(); ++i)
        if (map[i] >= 0) out[i] = global[map[i]];
    for (int face = 0; face < static_cast<int>(edges.size()); ++face)
    {
        const int first = face * (order + 1);
        if (map[first] >= 0) continue;
        const Eigen::VectorXd data =
            boundary.size() ? Eigen::VectorXd(boundary.col(edges[face].edge)) : Eigen::VectorXd::Zero(order + 1);
        out.segment(first, order + 1) =
            change.block(first, first, order + 1, order + 1).triangularView<Eigen::Lower>().solve(data);
    }
    return out;
}

Eigen::VectorXd Discretization::pressure_dofs() const
{
    Eigen::VectorXd out(dofs.num_dofs);
    for (int c = 0; c < mesh->num_cells(); ++c)
    {
        const auto            map = dofs.local_to_global(*mesh, c);
        const Eigen::VectorXd x   = local_pressure(c);
        for (std::size_t i = 0; i < map.size(); ++i)
            if (map[i] >= 0) out[map[i]] = x[i];
    }
    return out;
}

Eigen::VectorXd Discretization::local_pressure(int cell) const
{
    return elements[cell].dof_change() * local_coordinates(cell);
}


Discretization assemble(const PolyMesh& mesh, const TensorFunction& coefficient, const ScalarFunction& f, int k,
                        const AssemblyOptions& options)
{
    Discretization disc;
    disc.mesh     = &mesh;
    disc.order    = k;
    disc.dofs     = make_dof_map(mesh, k);
    disc.boundary = options.boundary.value_or(BoundaryMoments::Zero(k + 1, mesh.num_edges()));

    const int nc = mesh.num_cells();
    disc.elements.reserve(nc);
    disc.stiffness.resize(nc);
    disc.load.resize(nc);
    disc.stiffness_coordinates.resize(nc);
    disc.load_coordinates.resize(nc);
    disc.f_projection.resize(nc);
    for (int c = 0; c < nc; ++c) disc.elements.emplace_back(cell_geometry(mesh, c), k, options.quadrature_degree);

    // Element kernels are independent; the scatter below runs in cell order.
    for (int c = 0; c < nc; ++c)
    {
        const NcElement& el = disc.elements[c];
        disc.stiffness[c]    = local_stiffness_parts(el, coefficient);
        const Eigen::VectorXd moments = load_moments(el, f);
        disc.load[c]         = el.l2_projector_k().transpose() * moments;
        disc.f_projection[c] = el.mass_k().ldlt().solve(moments);

        const Eigen::MatrixXd& t        = el.dof_change();
        const Eigen::MatrixXd  internal = t.transpose() * disc.stiffness[c].matrix() * t;
        disc.stiffness_coordinates[c]   = 0.5 * (internal + internal.transpose());
        disc.load_coordinates[c]        = t.transpose() * disc.load[c];
    }

    const int                           n = disc.dofs.num_dofs;
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd                     rhs = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < nc; ++c)
    {
        const auto            map   = disc.dofs.local_to_global(mesh, c);
        const Eigen::MatrixXd& kloc = disc.stiffness_coordinates[c];
        const Eigen::VectorXd fixed = disc.local_coordinates(c, Eigen::VectorXd::Zero(n));
        const Eigen::VectorXd lifted = kloc * fixed;
        for (std::size_t i = 0; i < map.size(); ++i)
        {
            if (map[i] < 0) continue;
            rhs[map[i]] += disc.load_coordinates[c][i] - lifted[i];
            for (std::size_t j = 0; j < map.size(); ++j)
                if (map[j] >= 0) triplets.emplace_back(map[i], map[j], kloc(i, j));
        }
    }
    disc.system.matrix.resize(n, n);
    disc.system.matrix.setFromTriplets(triplets.begin(), triplets.end());
    disc.system.matrix.makeCompressed();
    disc.system.rhs      = std::move(rhs);
    disc.system.solution = Eigen::VectorXd::Zero(n);
    return disc;
}

Eigen::MatrixXd edge_gram(int k)
{
    // int_{-1/2}^{1/2} t^(i+j) dt
    Eigen::MatrixXd g(k + 1, k + 1);
    for (int i = 0; i <= k; ++i)
        for (int j = 0; j <= k; ++j)
            g(i, j) = (i + j) % 2 ? 0.0 : std::pow(0.5, i + j) / (i + j + 1);
    return g;
}

namespace {

int num_edge_unknowns(const Discretization& disc)
{
    return disc.dofs.cell_offset.empty() || poly_dim(disc.order - 1) == 0 ? disc.dofs.num_dofs
                                                                          : disc.dofs.cell_offset.front();
}

// Local stiffness split into (interior-edge DOFs, interior cell DOFs) blocks.
struct CellBlocks
{
    std::vector<int> edge_global;
    Eigen::MatrixXd  kie; // interior x edge
    Eigen::MatrixXd  kii_matrix;
    Eigen::LLT<Eigen::MatrixXd> kii;
    int              offset = 0;
};

CellBlocks cell_blocks(const Discretization& disc, int cell)
{
    const auto             map  = disc.dofs.local_to_global(*disc.mesh, cell);
    const Eigen::MatrixXd& kloc = disc.stiffness_coordinates[cell];
    const int              ni   = poly_dim(disc.order - 1);
    const int              nb   = static_cast<int>(map.size()) - ni;

    CellBlocks       out;
    std::vector<int> local_edges;
    for (int i = 0; i < nb; ++i)
        if (map[i] >= 0)
        {
            out.edge_global.push_back(map[i]);
            local_edges.push_back(i);
        }
    out.offset = disc.dofs.cell_offset[cell];
    out.kie.resize(ni, local_edges.size());
    for (std::size_t j = 0; j < local_edges.size(); ++j) out.kie.col(j) = kloc.block(nb, local_edges[j], ni, 1);
    out.kii_matrix = kloc.bottomRightCorner(ni, ni);
    out.kii.compute(out.kii_matrix);
    if (out.kii.info() != Eigen::Success)
        throw SolverError("interior block of cell " + std::to_string(cell) + " is not positive definite", 1.0);
    return out;
}

} // namespace

CondensedSystem condense(const Discretization& disc)
{
    const int k  = disc.order;
    const int ne = num_edge_unknowns(disc);
    const int ni = poly_dim(k - 1);

    CondensedSystem out;

    std::vector<Eigen::Triplet<double>> triplets;
    const SparseSpd&                    a = disc.system.matrix;
    for (int r = 0; r < ne; ++r)
        for (SparseSpd::InnerIterator it(a, r); it; ++it)
            if (it.col() < ne) triplets.emplace_back(r, it.col(), it.value());

    if (ni > 0)
        for (int c = 0; c < disc.mesh->num_cells(); ++c)
        {
            const CellBlocks      blocks = cell_blocks(disc, c);
            const Eigen::MatrixXd solved = blocks.kii.solve(blocks.kie);
            Eigen::MatrixXd       schur  = blocks.kie.transpose() * solved;
            schur                        = (0.5 * (schur + schur.transpose())).eval();
            const auto&           g      = blocks.edge_global;
            for (std::size_t i = 0; i < g.size(); ++i)
                for (std::size_t j = 0; j < g.size(); ++j) triplets.emplace_back(g[i], g[j], -schur(i, j));
        }

    out.matrix.resize(ne, ne);
    out.matrix.setFromTriplets(triplets.begin(), triplets.end());
    out.matrix = 0.5 * (out.matrix + SparseSpd(out.matrix.transpose()));
    out.matrix.makeCompressed();
    out.rhs = condense_rhs(disc, disc.system.rhs);
    return out;
}

Eigen::VectorXd condense_rhs(const Discretization& disc, const Eigen::VectorXd& b)
{
    const int       ni  = poly_dim(disc.order - 1);
    Eigen::VectorXd rhs = b.head(num_edge_unknowns(disc));
    if (ni > 0)
        for (int c = 0; c < disc.mesh->num_cells(); ++c)
        {
            const CellBlocks      blocks = cell_blocks(disc, c);
            const Eigen::VectorXd lifted = blocks.kie.transpose() * blocks.kii.solve(b.segment(blocks.offset, ni));
            for (std::size_t i = 0; i < blocks.edge_global.size(); ++i) rhs[blocks.edge_global[i]] -= lifted[i];
        }
    return rhs;
}

Eigen::VectorXd expand(const Discretization& disc, const Eigen::VectorXd& y)
{
    const int k  = disc.order;
    const int ne = num_edge_unknowns(disc);
    const int ni = poly_dim(k - 1);

    Eigen::VectorXd x(disc.dofs.num_dofs);
    x.head(ne) = y;
    if (ni > 0)
        for (int c = 0; c < disc.mesh->num_cells(); ++c)
        {
            const CellBlocks blocks = cell_blocks(disc, c);
            Eigen::VectorXd  edges(blocks.edge_global.size());
            for (std::size_t i = 0; i < blocks.edge_global.size(); ++i) edges[i] = x[blocks.edge_global[i]];
            const Eigen::VectorXd rhs = extended_residual(blocks.kie, disc.system.rhs.segment(blocks.offset, ni), edges);
            Eigen::VectorXd       xi  = blocks.kii.solve(rhs);
            xi += blocks.kii.solve(extended_residual(blocks.kii_matrix, rhs, xi));
            x.segment(blocks.offset, ni) = xi;
        }
    return x;
}

SolveReport solve_pressure(Discretization& disc, const SolverOptions& options)
{
    const CondensedSystem condensed = condense(disc);
    SolveReport           report    = solve(condensed.matrix, condensed.rhs, options);
    report.x                        = expand(disc, report.x);
    disc.system.solution            = report.x;
    return report;
}

} // namespace mvvm
