#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "mvvm/cases.hpp"
#include "mvvm/ncvem.hpp"
#include "oracles.hpp"

using namespace mvvm;

namespace {

const TensorFunction identity = [](const Point&) -> Eigen::Matrix2d { return Eigen::Matrix2d::Identity(); };
const TensorFunction sine_k   = [](const Point& x) -> Eigen::Matrix2d {
    return (1.0 + 0.5 * std::sin(x.x())) * Eigen::Matrix2d::Identity();
};

const PolyMesh& distorted()
{
    static const PolyMesh mesh = generate_distorted_polygonal({4, 4, 1, 0.2, 0.25});
    return mesh;
}

int pentagon()
{
    for (int c = 0; c < distorted().num_cells(); ++c)
        if (distorted().cells()[c].size() == 5) return c;
    return -1;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

} // namespace

TEST_CASE("edge Gram matrix")
{
    const Eigen::MatrixXd g = edge_gram(3);
    for (int i = 0; i <= 3; ++i)
        for (int j = 0; j <= 3; ++j)
        {
            const int    n    = i + j;
            const double want = n % 2 ? 0.0 : std::pow(0.5, n) / (n + 1);
            CHECK(g(i, j) == doctest::Approx(want).epsilon(1e-15));
        }
}

TEST_CASE("orthonormal coordinates")
{
    for (int k = 0; k <= 3; ++k)
    {
        const NcElement       el(cell_geometry(distorted(), pentagon()), k);
        const Eigen::MatrixXd t = el.dof_change();
        CHECK(t.rows() == el.num_dofs());
        CHECK(max_abs(t.triangularView<Eigen::StrictlyUpper>().toDenseMatrix()) == 0.0);
        const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(el.num_dofs(), -1.0, 2.0);
        CHECK(max_abs(t * el.coordinates(x) - x) < 1e-13);

        // the edge block turns the DOF Gram matrix into the identity
        const Eigen::MatrixXd block = t.topLeftCorner(k + 1, k + 1);
        CHECK(max_abs(block.transpose() * edge_gram(k).inverse() * block - Eigen::MatrixXd::Identity(k + 1, k + 1)) < 1e-12);
    }
}

TEST_CASE("projectors reproduce polynomials")
{
    for (int c = 0; c < distorted().num_cells(); ++c)
        for (int k = 0; k <= 3; ++k)
        {
            const NcElement       el(cell_geometry(distorted(), c), k);
            const Basis&          b     = el.basis();
            const Eigen::MatrixXd grads = gradient_matrix(b);
            const Eigen::MatrixXd mv    = el.vector_mass_k();
            const double          h     = el.geometry().diameter;
            for (int i = 0; i < b.size(); ++i)
            {
                const ScalarFunction  q    = [&](const Point& x) { return b.eval(x)[i]; };
                const Eigen::VectorXd chi  = el.interpolate(q);
                const Eigen::VectorXd unit = Eigen::VectorXd::Unit(b.size(), i);
                CAPTURE(c);
                CAPTURE(k);
                CAPTURE(i);
                CHECK(max_abs(chi - el.polynomial_dofs().col(i)) < 1e-13);

                // relative L2(P) distance to q, and to grad q measured against |q| / h
                const double          norm_q = std::sqrt(el.mass()(i, i));
                const Eigen::VectorXd dn     = el.elliptic_projector() * chi - unit;
                const Eigen::VectorXd d0     = el.l2_projector() * chi - unit;
                const Eigen::VectorXd dg     = el.gradient_projector() * chi - grads.col(i);
                CHECK(std::sqrt(dn.dot(el.mass() * dn)) < 1e-11 * norm_q);
                CHECK(std::sqrt(d0.dot(el.mass() * d0)) < 1e-11 * norm_q);
                CHECK(h * std::sqrt(dg.dot(mv * dg)) < 1e-11 * norm_q);
                if (i < poly_dim(k))
                {
                    const Eigen::VectorXd dk = el.l2_projector_k() * chi - unit.head(poly_dim(k));
                    CHECK(std::sqrt(dk.dot(el.mass_k() * dk)) < 1e-11 * norm_q);
                }

                // coefficient-wise; the monomial mass matrix of degree 4 amplifies round-off past this at k = 3
                if (k <= 2)
                {
                    CHECK(max_abs(dn) < 1e-11);
                    CHECK(max_abs(d0) < 1e-11);
                    CHECK(max_abs(dg) < 1e-11 * std::max(1.0, max_abs(grads.col(i))));
                }
            }
        }
}

TEST_CASE("projectors are idempotent on the DOFs")
{
    for (int k = 0; k <= 3; ++k)
    {
        const NcElement       el(cell_geometry(distorted(), pentagon()), k);
        const Eigen::MatrixXd d = el.polynomial_dofs();
        const Eigen::MatrixXd pn = d * el.elliptic_projector();
        const Eigen::MatrixXd p0 = d * el.l2_projector();
        CHECK(max_abs(pn * pn - pn) < 1e-11 * std::max(1.0, max_abs(pn)));
        CHECK(max_abs(p0 * p0 - p0) < 1e-11 * std::max(1.0, max_abs(p0)));
    }
}

TEST_CASE("gradient projector examples")
{
    SUBCASE("constants have zero gradient")
    {
        for (int k = 0; k <= 3; ++k)
        {
            const NcElement el(cell_geometry(distorted(), 3), k);
            const auto            one = el.interpolate([](const Point&) { return 1.0; });
            const Eigen::VectorXd g   = el.gradient_projector() * one;
            CHECK(el.geometry().diameter * std::sqrt(g.dot(el.vector_mass_k() * g)) < 1e-11 * std::sqrt(el.geometry().area));
            if (k <= 2) CHECK(max_abs(g) < 1e-11);
        }
    }
    SUBCASE("k = 0, unit square, DOFs of p = x")
    {
        const NcElement el(cell_geometry(generate_uniform_quads(1, 1), 0), 0);
        Eigen::VectorXd chi(4);
        for (int i = 0; i < 4; ++i)
        {
            const Point n = el.geometry().faces[i].normal;
            if (n.y() < -0.5) chi[i] = 0.5; // bottom
            if (n.x() > 0.5) chi[i] = 1.0;  // right
            if (n.y() > 0.5) chi[i] = 0.5;  // top
            if (n.x() < -0.5) chi[i] = 0.0; // left
        }
        const Eigen::VectorXd g = el.gradient_projector() * chi;
        CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(g[1]) < 1e-14);
    }
}

TEST_CASE("local stiffness")
{
    SUBCASE("energy of p = x on the unit square")
    {
        for (int k = 0; k <= 3; ++k)
        {
            const NcElement       el(cell_geometry(generate_uniform_quads(1, 1), 0), k);
            const Eigen::VectorXd chi = el.interpolate([](const Point& x) { return x.x(); });
            CHECK(chi.dot(local_stiffness(el, identity) * chi) == doctest::Approx(1.0).epsilon(1e-11));
        }
    }
    SUBCASE("constants are the kernel")
    {
        for (int c = 0; c < distorted().num_cells(); ++c)
            for (int k = 0; k <= 3; ++k)
            {
                const NcElement       el(cell_geometry(distorted(), c), k);
                const Eigen::MatrixXd a   = local_stiffness(el, sine_k);
                const Eigen::VectorXd one = el.interpolate([](const Point&) { return 1.0; });
                CHECK(max_abs(a * one) <= 1e-11 * max_abs(a));
            }
    }
    SUBCASE("variable coefficient on a distorted pentagon: symmetric PSD with rank n-1")
    {
        for (int k = 0; k <= 3; ++k)
        {
            const NcElement       el(cell_geometry(distorted(), pentagon()), k);
            const Eigen::MatrixXd a = local_stiffness(el, sine_k);
            CHECK(max_abs(a - a.transpose()) == 0.0);

            // the coordinate form is better conditioned; eigenvalues are scale-invariant in sign
            const Eigen::MatrixXd t  = el.dof_change();
            const Eigen::MatrixXd at = t.transpose() * a * t;
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (at + at.transpose()));
            const Eigen::VectorXd lambda = eig.eigenvalues();
            const double          top    = lambda.maxCoeff();
            CAPTURE(k);
            CHECK(lambda.minCoeff() >= -1e-12 * top);
            int rank = 0;
            for (int i = 0; i < lambda.size(); ++i) rank += lambda[i] > 1e-10 * top;
            CHECK(rank == el.num_dofs() - 1);
        }
    }
    SUBCASE("parts")
    {
        const NcElement el(cell_geometry(distorted(), pentagon()), 2);
        const auto      parts = local_stiffness_parts(el, sine_k);
        CHECK(parts.scaling == doctest::Approx(parts.consistency.trace() / el.num_dofs()));
        CHECK(max_abs(parts.matrix() - local_stiffness(el, sine_k)) == 0.0);
    }
}

TEST_CASE("consistency: the stabilizer vanishes on polynomials")
{
    std::mt19937                           gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int c = 0; c < distorted().num_cells(); ++c)
        for (int k = 0; k <= 3; ++k)
        {
            const NcElement       el(cell_geometry(distorted(), c), k);
            const Eigen::MatrixXd a  = local_stiffness(el, sine_k);
            const Eigen::MatrixXd w  = weighted_vector_mass(el, sine_k);
            const Eigen::MatrixXd g  = el.gradient_projector();
            const Eigen::MatrixXd gq = gradient_matrix(el.basis());
            Eigen::VectorXd       chi(el.num_dofs());
            for (int i = 0; i < chi.size(); ++i) chi[i] = u(gen);
            for (int i = 0; i < el.basis().size(); ++i)
            {
                const Eigen::VectorXd q     = el.polynomial_dofs().col(i);
                const double          lhs   = q.dot(a * chi);
                const double          rhs   = gq.col(i).dot(w * (g * chi));
                const double          scale = q.cwiseAbs().dot(a.cwiseAbs() * chi.cwiseAbs());
                CHECK(std::abs(lhs - rhs) <= 1e-11 * scale);
            }
        }
}

TEST_CASE("stability on random DOF vectors")
{
    std::mt19937                     gen(5);
    std::normal_distribution<double> n01;
    for (std::uint64_t seed : {1, 2})
    {
        const PolyMesh mesh = generate_distorted_polygonal({4, 4, seed, 0.3, 0.3});
        for (int c = 0; c < mesh.num_cells(); ++c)
            for (int k = 0; k <= 3; ++k)
            {
                const NcElement       el(cell_geometry(mesh, c), k);
                const Eigen::MatrixXd t   = el.dof_change();
                const Eigen::MatrixXd a   = t.transpose() * local_stiffness(el, sine_k) * t;
                Eigen::VectorXd       one = el.coordinates(el.interpolate([](const Point&) { return 1.0; }));
                one.normalize();
                int positive = 0;
                for (int trial = 0; trial < 1000; ++trial)
                {
                    Eigen::VectorXd y(el.num_dofs());
                    for (int i = 0; i < y.size(); ++i) y[i] = n01(gen);
                    y -= y.dot(one) * one;
                    positive += y.dot(a * y) > 0.0;
                }
                CHECK(positive == 1000);
            }
    }
}

TEST_CASE("norm equivalence ratio stays bounded under refinement")
{
    for (int k = 0; k <= 2; ++k)
    {
        double lo = INFINITY, hi = 0.0;
        for (int n : {4, 8, 16})
        {
            const PolyMesh mesh = generate_distorted_polygonal({n, n, 1, 0.2, 0.25});
            for (int c = 0; c < mesh.num_cells(); ++c)
            {
                const NcElement el(cell_geometry(mesh, c), k);
                for (int i = 0; i < el.basis().size(); ++i)
                {
                    const double l2   = std::sqrt(el.mass()(i, i));
                    const double dofs = el.polynomial_dofs().col(i).norm();
                    const double r    = l2 / (std::sqrt(el.geometry().area) * dofs);
                    lo = std::min(lo, r);
                    hi = std::max(hi, r);
                }
            }
        }
        MESSAGE("k = " << k << ": c1 = " << lo << ", c2 = " << hi << ", c2/c1 = " << hi / lo);
        CHECK(lo > 0.0);
        CHECK(std::isfinite(hi / lo));
    }
}

TEST_CASE("local load")
{
    const ScalarFunction zero = [](const Point&) { return 0.0; };
    const ScalarFunction five = [](const Point&) { return 5.0; };
    for (int k = 0; k <= 3; ++k)
    {
        const NcElement el(cell_geometry(distorted(), pentagon()), k);
        CHECK(local_load(el, zero).isZero(0.0));
        if (k >= 1)
            CHECK(local_load(el, five)[el.interior_dof(0)] == doctest::Approx(5.0 * el.geometry().area).epsilon(1e-13));
    }

    // f = 1, k = 0 on the unit square against a degree-8 rule applied to Pi^0_0 chi_i
    const NcElement       el(cell_geometry(generate_uniform_quads(1, 1), 0), 0);
    const Eigen::VectorXd load = local_load(el, [](const Point&) { return 1.0; });
    const auto            quad = polygon_quadrature(el.geometry().loop, 8);
    for (int i = 0; i < 4; ++i)
    {
        double want = 0.0;
        for (std::size_t q = 0; q < quad.size(); ++q) want += quad.weights[q] * el.l2_projector_k()(0, i);
        CHECK(load[i] == doctest::Approx(want).epsilon(1e-12));
        CHECK(load[i] == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("global DOF counts")
{
    CHECK(make_dof_map(generate_uniform_quads(1, 1), 0).num_dofs == 0);
    CHECK(make_dof_map(generate_uniform_quads(2, 2), 0).num_dofs == 4);
    CHECK(make_dof_map(generate_uniform_quads(2, 2), 1).num_dofs == 12);
    for (int k = 0; k <= 3; ++k)
    {
        const PolyMesh& m   = distorted();
        const NcDofMap  map = make_dof_map(m, k);
        CHECK(map.num_dofs == (k + 1) * m.num_interior_edges() + poly_dim(k - 1) * m.num_cells());

        // bijection onto 0..n-1
        std::vector<int> hits(map.num_dofs, 0);
        for (int e = 0; e < m.num_edges(); ++e)
            if (map.edge_offset[e] >= 0)
                for (int j = 0; j <= k; ++j) ++hits[map.edge_offset[e] + j];
        for (int c = 0; c < m.num_cells(); ++c)
            for (int j = 0; j < poly_dim(k - 1); ++j) ++hits[map.cell_offset[c] + j];
        for (int h : hits) CHECK(h == 1);
    }
}

TEST_CASE("assembled matrix is exactly symmetric, positive definite and reproducible")
{
    for (int k = 0; k <= 3; ++k)
    {
        const Discretization a = assemble(distorted(), sine_k, [](const Point&) { return 1.0; }, k);
        const Discretization b = assemble(distorted(), sine_k, [](const Point&) { return 1.0; }, k);
        const Eigen::MatrixXd m = Eigen::MatrixXd(a.system.matrix);
        CHECK(max_abs(m - m.transpose()) == 0.0);
        CHECK(max_abs(m - Eigen::MatrixXd(b.system.matrix)) == 0.0);
        CHECK(max_abs(a.system.rhs - b.system.rhs) == 0.0);
        CHECK(m.llt().info() == Eigen::Success);
    }
}

TEST_CASE("patch test")
{
    Eigen::Matrix2d kc;
    kc << 2.0, 0.5, 0.5, 1.0;
    for (int k = 0; k <= 3; ++k)
    {
        const ManufacturedCase c = polynomial_case(k + 1, kc);
        AssemblyOptions        opts;
        opts.boundary    = boundary_moments(distorted(), k, c.pressure, 2 * (k + 3));
        Discretization d = assemble(distorted(), c.coefficient, c.forcing, k, opts);
        solve_pressure(d);
        double worst = 0.0, scale = 0.0;
        for (int cell = 0; cell < distorted().num_cells(); ++cell)
        {
            const Eigen::VectorXd exact = d.elements[cell].interpolate(c.pressure);
            worst                       = std::max(worst, max_abs(d.local_pressure(cell) - exact));
            scale                       = std::max(scale, max_abs(exact));
        }
        CAPTURE(k);
        CHECK(worst <= 1e-9 * scale);
    }
}

TEST_CASE("static condensation matches the full system")
{
    for (int k = 0; k <= 3; ++k)
    {
        const auto      c = sine_coefficient_case();
        AssemblyOptions opts;
        opts.boundary    = boundary_moments(distorted(), k, c.pressure, 2 * (k + 3));
        Discretization d = assemble(distorted(), c.coefficient, c.forcing, k, opts);

        const Eigen::MatrixXd full = Eigen::MatrixXd(d.system.matrix);
        const Eigen::VectorXd want = full.llt().solve(d.system.rhs);
        const SolveReport     r    = solve_pressure(d);
        CAPTURE(k);
        CHECK((r.x - want).norm() <= 1e-9 * want.norm());
        CHECK(condense(d).matrix.rows() == (k + 1) * distorted().num_interior_edges());

        // pressure DOFs and coordinates are consistent
        const Eigen::VectorXd dofs = d.pressure_dofs();
        for (int cell = 0; cell < distorted().num_cells(); ++cell)
        {
            const auto            map = d.dofs.local_to_global(distorted(), cell);
            const Eigen::VectorXd loc = d.local_pressure(cell);
            for (std::size_t i = 0; i < map.size(); ++i)
                if (map[i] >= 0) CHECK(loc[i] == doctest::Approx(dofs[map[i]]).epsilon(1e-14));
        }
    }
}

TEST_CASE("boundary data enter through the boundary-edge DOFs")
{
    const ScalarFunction g    = [](const Point& x) { return 1.0 + x.x() * x.y(); };
    const BoundaryMoments bc  = boundary_moments(distorted(), 1, g, 8);
    const NcElement       el(cell_geometry(distorted(), 0), 1);
    const Eigen::VectorXd ref = el.interpolate(g);
    for (int i = 0; i < el.num_faces(); ++i)
    {
        const auto& face = el.geometry().faces[i];
        if (!distorted().edges()[face.edge].is_boundary()) continue;
        for (int j = 0; j <= 1; ++j) CHECK(bc(j, face.edge) == doctest::Approx(ref[el.edge_dof(i, j)]).epsilon(1e-13));
    }
}
