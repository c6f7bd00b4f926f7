#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mvvm/linsolve.hpp"
#include "mvvm/polybasis.hpp"
#include "mvvm/polymesh.hpp"

namespace mvvm {

/// Symmetric positive-definite diffusion tensor K(x).
using TensorFunction = std::function<Eigen::Matrix2d(const Point&)>;

/// Gram matrix (1/|f|) int_f e_i e_j of the edge monomials; the same on every edge.
Eigen::MatrixXd edge_gram(int k);

/// Local nonconforming virtual element of order k+1 on one polygon.
///
/// Local degrees of freedom, in this order:
///   - for each face i of the cell loop and j = 0..k: (1/|f|) int_f chi m_j, with m_j the
///     edge monomials in the edge's global orientation;
///   - for each |alpha| <= k-1: (1/|P|) int_P chi m_alpha.
///
/// All projector matrices map a local DOF vector to monomial coefficients about the
/// cell centroid. Constructing the element computes them.
///
/// The solver works in orthonormal coordinates y: moments against L2-orthonormal bases
/// of P_k(f) and P_{k-1}(P) instead of the monomials. DOFs are x = dof_change() * y.
class NcElement
{
public:
    NcElement(CellGeometry cell, int k, int quadrature_degree = -1);

    int order() const { return k_; }
    int num_faces() const { return static_cast<int>(cell_.faces.size()); }
    int num_dofs() const { return num_faces() * (k_ + 1) + poly_dim(k_ - 1); }
    int edge_dof(int face, int j) const { return face * (k_ + 1) + j; }
    int interior_dof(int alpha) const { return num_faces() * (k_ + 1) + alpha; }

    const CellGeometry&   geometry() const { return cell_; }
    const Basis&          basis() const { return basis_; } // degree k+1
    Basis                 basis_k() const { return {cell_.centroid, cell_.diameter, k_}; }
    const PolyQuadrature& quadrature() const { return quad_; }

    /// Mass matrix of M_{k+1}; its leading poly_dim(j) block is the mass matrix of M_j.
    const Eigen::MatrixXd& mass() const { return mass_; }
    Eigen::MatrixXd        mass_k() const { return mass_.topLeftCorner(poly_dim(k_), poly_dim(k_)); }
    Eigen::MatrixXd        vector_mass_k() const { return vector_mass_matrix(mass_k()); }

    /// int_f m_beta e_j for beta in M_{k+1}, e_j in M_k(f): poly_dim(k+1) x (k+1).
    const Eigen::MatrixXd& face_moments(int face) const { return face_moments_[face]; }
    /// int_f e_i e_j: (k+1) x (k+1).
    const Eigen::MatrixXd& face_mass(int face) const { return face_mass_[face]; }

    /// (grad chi, g)_P for g in (M_k)^2, computed from DOFs only.
    const Eigen::MatrixXd& gradient_moments() const { return grad_moments_; }
    /// Pi^0_k grad: DOFs -> (M_k)^2 coefficients.
    const Eigen::MatrixXd& gradient_projector() const { return grad_proj_; }
    /// Pi^nabla_{k+1}: DOFs -> M_{k+1} coefficients.
    const Eigen::MatrixXd& elliptic_projector() const { return elliptic_proj_; }
    /// Pi^0_{k+1} through the enhancement constraint: DOFs -> M_{k+1} coefficients.
    const Eigen::MatrixXd& l2_projector() const { return l2_proj_; }
    /// Pi^0_k: DOFs -> M_k coefficients.
    const Eigen::MatrixXd& l2_projector_k() const { return l2_proj_k_; }
    /// DOFs of each member of M_{k+1}: num_dofs x poly_dim(k+1).
    const Eigen::MatrixXd& polynomial_dofs() const { return poly_dofs_; }

    /// Block-diagonal lower-triangular map from orthonormal coordinates to DOFs.
    const Eigen::MatrixXd& dof_change() const { return dof_change_; }
    /// Orthonormal coordinates of the DOF vector x.
    Eigen::VectorXd coordinates(const Eigen::VectorXd& x) const;

    /// DOFs of a pointwise-evaluable function, by quadrature of the given exactness.
    Eigen::VectorXd interpolate(const ScalarFunction& f, int quadrature_degree = -1) const;

private:
    CellGeometry                 cell_;
    int                          k_;
    Basis                        basis_;
    PolyQuadrature               quad_;
    Eigen::MatrixXd              mass_;
    std::vector<Eigen::MatrixXd> face_moments_;
    std::vector<Eigen::MatrixXd> face_mass_;
    Eigen::MatrixXd              grad_moments_;
    Eigen::MatrixXd              grad_proj_;
    Eigen::MatrixXd              elliptic_proj_;
    Eigen::MatrixXd              l2_proj_;
    Eigen::MatrixXd              l2_proj_k_;
    Eigen::MatrixXd              poly_dofs_;
    Eigen::MatrixXd              dof_change_;
};

NcElement local_projectors(const CellGeometry& cell, int k);

/// (K g_a, g_b)_P over the vector monomials (M_k)^2.
Eigen::MatrixXd weighted_vector_mass(const NcElement& element, const TensorFunction& coefficient);

struct LocalStiffness
{
    Eigen::MatrixXd consistency;
    Eigen::MatrixXd stabilization;
    double          scaling = 0.0; // tau_P

    Eigen::MatrixXd matrix() const { return consistency + stabilization; }
};

/// Consistency term (K Pi^0_k grad, Pi^0_k grad) plus the DOF-wise stabilizer on
/// (I - Pi^0_{k+1}), scaled by trace(consistency) / num_dofs.
LocalStiffness local_stiffness_parts(const NcElement& element, const TensorFunction& coefficient);
Eigen::MatrixXd local_stiffness(const NcElement& element, const TensorFunction& coefficient);

/// Entries (Pi^0_k f, chi_i)_P = int_P f Pi^0_k chi_i.
Eigen::VectorXd local_load(const NcElement& element, const ScalarFunction& f);

/// Moments int_P f m_alpha for m_alpha in M_k.
Eigen::VectorXd load_moments(const NcElement& element, const ScalarFunction& f);

/// Global numbering of the nonconforming space: k+1 moments per interior edge, then
/// poly_dim(k-1) moments per cell. Boundary-edge moments are not unknowns.
struct NcDofMap
{
    int              order = 0;
    int              num_dofs = 0;
    std::vector<int> edge_offset; // -1 on boundary edges
    std::vector<int> cell_offset;

    /// Global index of every local DOF of `cell`; -1 for boundary-edge moments.
    std::vector<int> local_to_global(const PolyMesh& mesh, int cell) const;
};

NcDofMap make_dof_map(const PolyMesh& mesh, int k);

/// Prescribed boundary-edge moments, (k+1) x num_edges; columns of interior edges unused.
/// Absent means homogeneous data.
using BoundaryMoments = Eigen::MatrixXd;

/// Edge moments of g on every boundary edge.
BoundaryMoments boundary_moments(const PolyMesh& mesh, int k, const ScalarFunction& g, int quadrature_degree);

struct SpdSystem
{
    SparseSpd       matrix;
    Eigen::VectorXd rhs;
    Eigen::VectorXd solution;
};

/// Everything the primal solve produces and the velocity recovery consumes. The global
/// system and its solution are in orthonormal coordinates (see NcElement).
struct Discretization
{
    const PolyMesh*              mesh = nullptr;
    int                          order = 0;
    NcDofMap                     dofs;
    std::vector<NcElement>       elements;
    std::vector<LocalStiffness>  stiffness;    // in DOFs
    std::vector<Eigen::VectorXd> load;         // local load vectors, in DOFs
    std::vector<Eigen::MatrixXd> stiffness_coordinates; // T^T K T, symmetrized
    std::vector<Eigen::VectorXd> load_coordinates;      // T^T load
    std::vector<Eigen::VectorXd> f_projection; // Pi^0_k f coefficients per cell
    BoundaryMoments              boundary;
    SpdSystem                    system;

    /// Local coordinates of a global coordinate vector, boundary data included.
    Eigen::VectorXd local_coordinates(int cell, const Eigen::VectorXd& global) const;
    Eigen::VectorXd local_coordinates(int cell) const { return local_coordinates(cell, system.solution); }
    /// Local DOF vector of the pressure on a cell, boundary data included.
    Eigen::VectorXd local_pressure(int cell) const;
    /// Global DOF vector of the pressure (interior edges, then cells).
    Eigen::VectorXd pressure_dofs() const;
};

struct AssemblyOptions
{
    int quadrature_degree = -1;
    // Dirichlet data; homogeneous when empty.
    std::optional<BoundaryMoments> boundary;
};

/// Builds every local element and scatters into the reduced SPD system. Edge DOFs are
/// shared by the two incident cells; boundary-edge DOFs are eliminated.
Discretization assemble(const PolyMesh& mesh, const TensorFunction& coefficient, const ScalarFunction& f, int k,
                        const AssemblyOptions& options = {});

/// The global system with interior cell coordinates eliminated cell by cell.
struct CondensedSystem
{
    SparseSpd       matrix;
    Eigen::VectorXd rhs;
};

CondensedSystem condense(const Discretization& disc);

/// Condensed right-hand side for an arbitrary full right-hand side b.
Eigen::VectorXd condense_rhs(const Discretization& disc, const Eigen::VectorXd& b);

/// Full coordinate vector from a solution of the condensed system; interior coordinates
/// are recovered by local solves with extended-precision residuals.
Eigen::VectorXd expand(const Discretization& disc, const Eigen::VectorXd& y);

/// Solves the condensed system, expands it and stores the solution. The report's
/// residual refers to the condensed system; `x` is the full coordinate vector.
SolveReport solve_pressure(Discretization& disc, const SolverOptions& options = {});

} // namespace mvvm
