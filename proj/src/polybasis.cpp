#include "mvvm/polybasis.hpp"

#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace mvvm {

namespace {

constexpr int kMaxGaussPoints = 40;

GaussLegendre golub_welsch(int n)
{
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i)
    {
        const double b    = i / std::sqrt(4.0 * i * i - 1.0);
        jacobi(i, i - 1) = b;
        jacobi(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    GaussLegendre                                   rule;
    rule.nodes   = eig.eigenvalues();
    rule.weights = 2.0 * eig.eigenvectors().row(0).transpose().array().square();
    return rule;
}

} // namespace

const GaussLegendre& gauss_legendre(int n)
{
    static const std::vector<GaussLegendre> table = [] {
        std::vector<GaussLegendre> t;
        for (int i = 1; i <= kMaxGaussPoints; ++i) t.push_back(golub_welsch(i));
        return t;
    }();
    if (n < 1 || n > kMaxGaussPoints) throw std::out_of_range("unsupported Gauss-Legendre size " + std::to_string(n));
    return table[n - 1];
}

CellGeometry cell_geometry(const PolyMesh& mesh, int cell)
{
    CellGeometry g;
    g.index    = cell;
    g.loop     = cell_points(mesh, cell);
    g.centroid = mesh.cell_centroid(cell);
    g.diameter = mesh.cell_diameter(cell);
    g.area     = signed_area(g.loop);
    if (!(g.area > 0.0) || !(g.diameter > 0.0)) throw MeshError("degenerate cell " + std::to_string(cell));
    for (const auto& ce : mesh.cell_edges(cell))
    {
        const Edge& e = mesh.edges()[ce.edge];
        CellFace    f;
        f.edge     = ce.edge;
        f.sign     = ce.sign;
        f.a        = mesh.vertex(e.v0);
        f.b        = mesh.vertex(e.v1);
        f.length   = (f.b - f.a).norm();
        f.midpoint = 0.5 * (f.a + f.b);
        f.tangent  = (f.b - f.a) / f.length;
        f.normal   = ce.sign * Point(f.tangent.y(), -f.tangent.x());
        g.faces.push_back(f);
    }
    return g;
}

Basis cell_basis(const CellGeometry& cell, int k)
{
    if (k < 0) throw std::invalid_argument("basis degree must be non-negative");
    return {cell.centroid, cell.diameter, k};
}

EdgeBasis edge_basis(const PolyMesh& mesh, int edge, int k)
{
    const double len = mesh.edge_length(edge);
    if (!(len > 0.0)) throw MeshError("zero-length edge " + std::to_string(edge));
    return {mesh.edge_midpoint(edge), mesh.edge_tangent(edge), len, k};
}

PolyQuadrature polygon_quadrature(std::span<const Point> loop, int degree)
{
    const std::size_t n = loop.size();
    Point             c = Point::Zero();
    {
        // area centroid
        double a = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            const Point  p = loop[i] - loop[0];
            const Point  q = loop[(i + 1) % n] - loop[0];
            const double w = p.x() * q.y() - p.y() * q.x();
            a += w;
            c += w * (p + q);
        }
        c = loop[0] + c / (3.0 * a);
    }

    double diam = 0.0;
    for (std::size_t i = 0; i < n; ++i) diam = std::max(diam, (loop[i] - loop[(i + 1) % n]).norm());

    auto strictly_visible = [&](const Point& x) {
        for (std::size_t i = 0; i < n; ++i)
        {
            const Point d = loop[(i + 1) % n] - loop[i];
            const Point r = x - loop[i];
            if (d.x() * r.y() - d.y() * r.x() <= 1e-10 * diam * diam) return false;
        }
        return true;
    };

    if (!strictly_visible(c))
    {
        const Disk disk = kernel_disk(loop);
        if (!(disk.radius > 0.0)) throw MeshError("polygon has an empty kernel; cannot fan-triangulate");
        c = disk.center;
    }

    PolyQuadrature rule;
    rule.degree = degree;
    for (std::size_t i = 0; i < n; ++i) append_triangle_quadrature<double>(c, loop[i], loop[(i + 1) % n], degree, rule);
    return rule;
}

Eigen::MatrixXd mass_matrix(const Basis& basis, const PolyQuadrature& quad)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(basis.size(), basis.size());
    for (std::size_t q = 0; q < quad.size(); ++q)
    {
        const Eigen::VectorXd v = basis.eval(quad.points[q]);
        m.noalias() += quad.weights[q] * v * v.transpose();
    }
    return m;
}

Eigen::MatrixXd mass_matrix(const CellGeometry& cell, int k)
{
    return mass_matrix(cell_basis(cell, k), polygon_quadrature(cell.loop, default_quadrature_degree(k)));
}

Eigen::MatrixXd vector_mass_matrix(const Eigen::MatrixXd& scalar_mass)
{
    const Eigen::Index n = scalar_mass.rows();
    Eigen::MatrixXd    m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    m.topLeftCorner(n, n)     = scalar_mass;
    m.bottomRightCorner(n, n) = scalar_mass;
    return m;
}

Eigen::MatrixXd gradient_matrix(const Basis& basis_k1)
{
    const int       nk = poly_dim(basis_k1.degree() - 1);
    Eigen::MatrixXd g(2 * nk, basis_k1.size());
    g.topRows(nk)    = basis_k1.derivative(0);
    g.bottomRows(nk) = basis_k1.derivative(1);
    return g;
}

GkPerpBasis gk_perp_basis(const Basis& basis_k1, const Eigen::MatrixXd& vector_mass, int k)
{
    if (k < 0) throw std::invalid_argument("G_k^perp needs k >= 0");
    const int nk  = poly_dim(k);
    const int dim = gk_perp_dim(k);
    if (dim == 0) return {Eigen::MatrixXd(2 * nk, 0)};

    // Work in coordinates where the L2(P) inner product is Euclidean: y = L^T c.
    const Eigen::LLT<Eigen::MatrixXd> llt(vector_mass);
    if (llt.info() != Eigen::Success) throw std::runtime_error("vector mass matrix is not positive definite");
    const Eigen::MatrixXd lt        = llt.matrixU();
    const Eigen::MatrixXd gradients = lt * gradient_matrix(basis_k1).rightCols(basis_k1.size() - 1);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_check(gradients);
    rank_check.setThreshold(1e-10);
    if (rank_check.rank() != gradients.cols()) throw std::runtime_error("gradient space is rank deficient");

    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gradients);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(2 * nk, 2 * nk);
    const Eigen::MatrixXd y = q.rightCols(dim);

    GkPerpBasis out;
    out.coefficients = llt.matrixU().solve(y);
    return out;
}

GkPerpBasis gk_perp_basis(const CellGeometry& cell, int k)
{
    return gk_perp_basis(cell_basis(cell, k + 1), vector_mass_matrix(mass_matrix(cell, k)), k);
}

Eigen::VectorXd l2_project_function(const CellGeometry& cell, int k, const ScalarFunction& f, int quadrature_degree)
{
    const Basis          basis = cell_basis(cell, k);
    const PolyQuadrature quad  = polygon_quadrature(cell.loop, quadrature_degree < 0 ? default_quadrature_degree(k)
                                                                                    : quadrature_degree);
    Eigen::VectorXd      moments = Eigen::VectorXd::Zero(basis.size());
    for (std::size_t q = 0; q < quad.size(); ++q) moments += quad.weights[q] * f(quad.points[q]) * basis.eval(quad.points[q]);
    return mass_matrix(basis, quad).ldlt().solve(moments);
}

Eigen::VectorXd l2_project_function(const CellGeometry& cell, int k, const VectorFunction& v, int quadrature_degree)
{
    const Basis          basis = cell_basis(cell, k);
    const PolyQuadrature quad  = polygon_quadrature(cell.loop, quadrature_degree < 0 ? default_quadrature_degree(k)
                                                                                    : quadrature_degree);
    const int            n     = basis.size();
    Eigen::MatrixXd      moments = Eigen::MatrixXd::Zero(n, 2);
    for (std::size_t q = 0; q < quad.size(); ++q)
    {
        const Point value = v(quad.points[q]);
        moments += quad.weights[q] * basis.eval(quad.points[q]) * value.transpose();
    }
    const auto      ldlt = mass_matrix(basis, quad).ldlt();
    Eigen::VectorXd out(2 * n);
    out.head(n) = ldlt.solve(moments.col(0));
    out.tail(n) = ldlt.solve(moments.col(1));
    return out;
}

Point eval_vector(const Basis& basis_k, const Eigen::VectorXd& coefficients, const Point& x)
{
    const Eigen::VectorXd v = basis_k.eval(x);
    const int             n = basis_k.size();
    return {v.dot(coefficients.head(n)), v.dot(coefficients.segment(n, n))};
}

} // namespace mvvm
