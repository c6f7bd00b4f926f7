#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mvvm/polymesh.hpp"

namespace mvvm {

/// Dimension of the space of bivariate polynomials of total degree <= k (0 for k < 0).
constexpr int poly_dim(int k) { return k < 0 ? 0 : (k + 1) * (k + 2) / 2; }

/// Dimension of the L2-orthogonal complement of grad P_{k+1} inside (P_k)^2.
constexpr int gk_perp_dim(int k) { return k < 0 ? 0 : 2 * poly_dim(k) - poly_dim(k + 1) + 1; }

/// Scaled monomials ((x - x_D) / h_D)^alpha, |alpha| <= degree, in graded lexicographic
/// order: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
///
/// The ordering nests: the first poly_dim(j) members span P_j for every j <= degree.
template <typename Scalar>
class ScaledMonomialBasis
{
public:
    using Vec2   = Eigen::Matrix<Scalar, 2, 1>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    ScaledMonomialBasis(const Vec2& center, Scalar diameter, int degree)
        : center_(center), diameter_(diameter), degree_(degree)
    {
        for (int d = 0; d <= degree; ++d)
            for (int j = 0; j <= d; ++j) exponents_.push_back({d - j, j});
    }

    int           size() const { return static_cast<int>(exponents_.size()); }
    int           degree() const { return degree_; }
    const Vec2&   center() const { return center_; }
    Scalar        diameter() const { return diameter_; }
    std::array<int, 2> exponent(int i) const { return exponents_[i]; }

    static int index(int a, int b) { return (a + b) * (a + b + 1) / 2 + b; }

    Vector eval(const Vec2& x) const
    {
        const Vec2 s = (x - center_) / diameter_;
        Vector     out(size());
        out[0] = Scalar(1);
        // each degree-d block is the previous block times s_x, with one extra s_y term
        for (int d = 1; d <= degree_; ++d)
        {
            const int prev = poly_dim(d - 2);
            const int cur  = poly_dim(d - 1);
            for (int j = 0; j < d; ++j) out[cur + j] = out[prev + j] * s.x();
            out[cur + d] = out[prev + d - 1] * s.y();
        }
        return out;
    }

    /// Rows: basis members; columns: d/dx, d/dy.
    Eigen::Matrix<Scalar, Eigen::Dynamic, 2> grad(const Vec2& x) const
    {
        const Vector                             values = ScaledMonomialBasis(center_, diameter_, std::max(degree_ - 1, 0)).eval(x);
        Eigen::Matrix<Scalar, Eigen::Dynamic, 2> g      = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>::Zero(size(), 2);
        for (int i = 0; i < size(); ++i)
        {
            const auto [a, b] = exponents_[i];
            if (a > 0) g(i, 0) = Scalar(a) / diameter_ * values[index(a - 1, b)];
            if (b > 0) g(i, 1) = Scalar(b) / diameter_ * values[index(a, b - 1)];
        }
        return g;
    }

    /// Coefficients of d/dx (dir = 0) or d/dy (dir = 1) of each member, expressed in the
    /// degree-1-lower basis with the same center and scaling: poly_dim(degree-1) x size().
    Matrix derivative(int dir) const
    {
        Matrix d = Matrix::Zero(poly_dim(degree_ - 1), size());
        for (int i = 0; i < size(); ++i)
        {
            const auto [a, b] = exponents_[i];
            if (dir == 0 && a > 0) d(index(a - 1, b), i) = Scalar(a) / diameter_;
            if (dir == 1 && b > 0) d(index(a, b - 1), i) = Scalar(b) / diameter_;
        }
        return d;
    }

private:
    Vec2                            center_;
    Scalar                          diameter_;
    int                             degree_;
    std::vector<std::array<int, 2>> exponents_;
};

/// 1D scaled monomials ((s - s_mid) / |f|)^j, j <= degree, in the arclength s of an edge
/// measured along its global orientation.
template <typename Scalar>
class EdgeMonomialBasis
{
public:
    using Vec2   = Eigen::Matrix<Scalar, 2, 1>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    EdgeMonomialBasis(const Vec2& midpoint, const Vec2& tangent, Scalar length, int degree)
        : midpoint_(midpoint), tangent_(tangent), length_(length), degree_(degree)
    {
    }

    int    size() const { return degree_ + 1; }
    Scalar length() const { return length_; }

    Vector eval(const Vec2& x) const
    {
        const Scalar s = (x - midpoint_).dot(tangent_) / length_;
        Vector       out(size());
        out[0] = Scalar(1);
        for (int j = 1; j <= degree_; ++j) out[j] = out[j - 1] * s;
        return out;
    }

private:
    Vec2   midpoint_;
    Vec2   tangent_;
    Scalar length_;
    int    degree_;
};

template <typename Scalar>
struct QuadratureRule
{
    std::vector<Eigen::Matrix<Scalar, 2, 1>> points;
    std::vector<Scalar>                      weights;
    int                                      degree = 0;

    std::size_t size() const { return points.size(); }

    Scalar total_weight() const
    {
        Scalar s(0);
        for (auto w : weights) s += w;
        return s;
    }
};

/// Gauss-Legendre rule with n points on [-1, 1] (Golub-Welsch).
struct GaussLegendre
{
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

const GaussLegendre& gauss_legendre(int n);

/// Points of a Gauss-Legendre rule on the segment a -> b, exact for degree `degree`.
template <typename Scalar>
QuadratureRule<Scalar> segment_quadrature(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b,
                                          int degree)
{
    const auto&            gl = gauss_legendre(degree / 2 + 1);
    const Scalar           len = (b - a).norm();
    QuadratureRule<Scalar> rule;
    rule.degree = degree;
    for (Eigen::Index i = 0; i < gl.nodes.size(); ++i)
    {
        const Scalar t = Scalar(0.5) * (Scalar(1) + Scalar(gl.nodes[i]));
        rule.points.push_back(a + t * (b - a));
        rule.weights.push_back(Scalar(0.5) * Scalar(gl.weights[i]) * len);
    }
    return rule;
}

/// Collapsed (Duffy) tensor Gauss rule on a triangle, exact for polynomials of degree
/// `degree`. The map carries one extra power of xi through its Jacobian. Appends to `rule`.
template <typename Scalar>
void append_triangle_quadrature(const Eigen::Matrix<Scalar, 2, 1>& v0, const Eigen::Matrix<Scalar, 2, 1>& v1,
                                const Eigen::Matrix<Scalar, 2, 1>& v2, int degree, QuadratureRule<Scalar>& rule)
{
    const auto&                       gl = gauss_legendre((degree + 3) / 2);
    const Eigen::Matrix<Scalar, 2, 1> e1 = v1 - v0;
    const Eigen::Matrix<Scalar, 2, 1> e2 = v2 - v1;
    const Scalar                      twice_area = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
    for (Eigen::Index i = 0; i < gl.nodes.size(); ++i)
    {
        const Scalar xi = Scalar(0.5) * (Scalar(1) + Scalar(gl.nodes[i]));
        const Scalar wi = Scalar(0.5) * Scalar(gl.weights[i]);
        for (Eigen::Index j = 0; j < gl.nodes.size(); ++j)
        {
            const Scalar eta = Scalar(0.5) * (Scalar(1) + Scalar(gl.nodes[j]));
            const Scalar wj  = Scalar(0.5) * Scalar(gl.weights[j]);
            rule.points.push_back(v0 + xi * (e1 + eta * e2));
            rule.weights.push_back(wi * wj * xi * twice_area);
        }
    }
}

using PolyQuadrature = QuadratureRule<double>;
using Basis          = ScaledMonomialBasis<double>;
using EdgeBasis      = EdgeMonomialBasis<double>;

/// One boundary edge of a cell, with its global orientation and the cell's outward normal.
struct CellFace
{
    int    edge;
    int    sign; // +1 when the global edge normal is outward for this cell
    double length;
    Point  a, b; // global v0, v1
    Point  midpoint;
    Point  tangent; // global, a -> b
    Point  normal;  // outward for this cell

    EdgeBasis basis(int degree) const { return {midpoint, tangent, length, degree}; }
};

struct CellGeometry
{
    int                   index = -1;
    std::vector<Point>    loop;
    Point                 centroid;
    double                diameter = 0.0;
    double                area     = 0.0;
    std::vector<CellFace> faces;
};

CellGeometry cell_geometry(const PolyMesh& mesh, int cell);

/// Monomial basis of degree k centered at the centroid, scaled by the cell diameter.
Basis cell_basis(const CellGeometry& cell, int k);

EdgeBasis edge_basis(const PolyMesh& mesh, int edge, int k);

/// Fan triangulation from a kernel point (the centroid when it lies in the kernel) with a
/// Gauss rule of the requested exactness on each sub-triangle. Throws MeshError if the
/// polygon has an empty kernel.
PolyQuadrature polygon_quadrature(std::span<const Point> loop, int degree);

/// Default exactness that integrates every product in the degree-k projectors exactly.
constexpr int default_quadrature_degree(int k) { return 2 * (k + 2); }

/// (m_alpha, m_beta)_P on the scaled monomials of degree k.
Eigen::MatrixXd mass_matrix(const Basis& basis, const PolyQuadrature& quad);
Eigen::MatrixXd mass_matrix(const CellGeometry& cell, int k);

/// Coefficients in (M_k)^2 of the gradients of every member of M_{k+1}:
/// a 2 poly_dim(k) x poly_dim(k+1) matrix, first block the x-components.
Eigen::MatrixXd gradient_matrix(const Basis& basis_k1);

/// L2(P)-orthonormal basis of G_k(P)^perp expressed in the vector monomials (M_k)^2,
/// ordered (m_0,0), (m_1,0), ..., (0,m_0), (0,m_1), ...
struct GkPerpBasis
{
    Eigen::MatrixXd coefficients; // 2 poly_dim(k) x gk_perp_dim(k)

    int size() const { return static_cast<int>(coefficients.cols()); }
};

GkPerpBasis gk_perp_basis(const Basis& basis_k1, const Eigen::MatrixXd& vector_mass, int k);
GkPerpBasis gk_perp_basis(const CellGeometry& cell, int k);

/// Block-diagonal mass matrix of (M_k)^2 from the scalar one.
Eigen::MatrixXd vector_mass_matrix(const Eigen::MatrixXd& scalar_mass);

using ScalarFunction = std::function<double(const Point&)>;
using VectorFunction = std::function<Point(const Point&)>;

/// Coefficients of Pi^0_k f in M_k(P).
Eigen::VectorXd l2_project_function(const CellGeometry& cell, int k, const ScalarFunction& f,
                                    int quadrature_degree = -1);

/// Coefficients of Pi^0_k v in (M_k(P))^2, x-components first.
Eigen::VectorXd l2_project_function(const CellGeometry& cell, int k, const VectorFunction& v,
                                    int quadrature_degree = -1);

/// Evaluate a vector-monomial expansion (x-block, then y-block) at x.
Point eval_vector(const Basis& basis_k, const Eigen::VectorXd& coefficients, const Point& x);

} // namespace mvvm
