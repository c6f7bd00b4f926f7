#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mvvm/ncvem.hpp"

namespace mvvm {

class RecoveryError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Degrees of freedom of the H(div) velocity of order k.
struct VelocityDofs
{
    int order = 0;
    /// (1/|f|) int_f u.n m_j with n the stored (global) edge normal: (k+1) x num_edges.
    Eigen::MatrixXd edge_moments;
    /// (1/|P|) int_P u . grad m_alpha for m_alpha in M_k minus the constant, per cell.
    std::vector<Eigen::VectorXd> gradient_moments;
    /// (1/|P|) int_P u . g for g in the cell's G_k^perp basis, per cell.
    std::vector<Eigen::VectorXd> complement_moments;
};

/// Per-cell coefficient vectors in the scaled monomials of one cell.
struct PiecewisePolyField
{
    int                          degree = 0;
    int                          components = 1; // 2 for (M_k)^2, x-block first
    std::vector<Eigen::VectorXd> coefficients;
};

/// Affine field constant + slope (x - center) on each cell.
struct RtCell
{
    Point  constant = Point::Zero();
    double slope    = 0.0;
    Point  center   = Point::Zero();

    Point  operator()(const Point& x) const { return constant + slope * (x - center); }
    double divergence() const { return 2.0 * slope; }
};

/// Consistency diagnostics gathered while recovering.
struct RecoveryChecks
{
    double max_flux_mismatch    = 0.0; // relative to the global flux scale
    double max_divergence_error = 0.0; // relative, per cell
    double conservation_error   = 0.0; // relative
};

struct VelocitySolution
{
    VelocityDofs        dofs;
    PiecewisePolyField  projection; // Pi^0_k u_h
    PiecewisePolyField  divergence; // div u_h
    std::vector<RtCell> reconstruction; // only for k = 0
    RecoveryChecks      checks;
};

/// Cell-level recovery inputs. Stiffness, coordinates and load are in the element's
/// orthonormal coordinates; `pressure` holds the DOFs.
struct CellData
{
    const NcElement* element;
    Eigen::MatrixXd  stiffness;    // T^T a_h^P T
    Eigen::VectorXd  coordinates;  // local coordinates of p_h
    Eigen::VectorXd  load;         // T^T (Pi^0_k f, chi_i)_P
    Eigen::VectorXd  f_projection; // Pi^0_k f in M_k
    Eigen::VectorXd  pressure;     // local DOFs of p_h
};

CellData cell_data(const Discretization& disc, int cell);

/// Normal-flux moments (1/|f|) int_f u_h.n_P m_j on each face of the cell, with n_P the
/// cell's outward normal: (k+1) x num_faces. Uses the local residual
/// int_{dP} u.n chi = (Pi^0_k f, chi) - a_h(p_h, chi) with chi the edge-DOF basis.
Eigen::MatrixXd recover_edge_moments(const CellData& data);

/// int_{dP} u_h.n q for every q in M_{k+1}, from the face flux moments (exact).
Eigen::VectorXd boundary_flux_moments(const NcElement& element, const Eigen::MatrixXd& flux);

/// (1/|P|) int_P u_h . grad m_alpha for m_alpha in M_k minus the constant.
Eigen::VectorXd recover_gradient_moments(const NcElement& element, const Eigen::MatrixXd& flux,
                                         const Eigen::VectorXd& f_projection);

/// (1/|P|) int_P u_h . g for g in G_k^perp, from the pressure coordinates alone.
Eigen::VectorXd recover_gkperp_moments(const NcElement& element, const GkPerpBasis& perp,
                                       const Eigen::VectorXd& coordinates, const TensorFunction& coefficient);

/// Coefficients of div u_h in M_k. Returns Pi^0_k f after checking it against the
/// DOF-based route int div u q = int_{dP} u.n q + a_h(p_h, q); throws RecoveryError when
/// they differ beyond `tolerance` (relative). `error` receives the observed mismatch.
Eigen::VectorXd divergence(const CellData& data, const Eigen::MatrixXd& flux, double tolerance = 1e-10,
                           double* error = nullptr);

/// Coefficients of Pi^0_k u_h in (M_k)^2, x-block first.
Eigen::VectorXd project_velocity(const NcElement& element, const GkPerpBasis& perp, const Eigen::MatrixXd& flux,
                                 const Eigen::VectorXd& complement_moments, const Eigen::VectorXd& f_projection);

/// Lowest-order Raviart-Thomas-type field -Kbar Pi^0_0(grad p_h) + (fbar/2)(x - x_P).
/// Requires k = 0.
RtCell rt0_reconstruct(const NcElement& element, const Eigen::VectorXd& pressure, const ScalarFunction& f,
                       const TensorFunction& coefficient);

struct RecoveryOptions
{
    double flux_tolerance       = 1e-9;
    double divergence_tolerance = 1e-10;
    double conservation_tolerance = 1e-9;
    // Throw on a failed structural check instead of only recording it.
    bool strict = true;
};

/// Full local post-processing after the pressure solve.
VelocitySolution recover_velocity(const Discretization& disc, const TensorFunction& coefficient,
                                  const ScalarFunction& f, const RecoveryOptions& options = {});

} // namespace mvvm
