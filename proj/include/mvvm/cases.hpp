#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvvm/ncvem.hpp"

namespace mvvm {

/// Exact solution of -div(K grad p) = f with its coefficient and forcing.
struct ManufacturedCase
{
    std::string    name;
    ScalarFunction pressure;
    VectorFunction pressure_gradient;
    TensorFunction coefficient;
    ScalarFunction forcing;

    /// u = -K grad p
    Point velocity(const Point& x) const { return -(coefficient(x) * pressure_gradient(x)); }
    VectorFunction velocity_function() const
    {
        return [c = *this](const Point& x) { return c.velocity(x); };
    }
};

/// p = x(1-x)y(1-y) with K = (1 + 0.5 sin x) I.
ManufacturedCase sine_coefficient_case();

/// p = x(1-x)y(1-y) with K = I.
ManufacturedCase unit_coefficient_case();

/// p = 0, f = 0.
ManufacturedCase zero_case();

/// A fixed polynomial of total degree `degree` with a constant anisotropic K.
ManufacturedCase polynomial_case(int degree, const Eigen::Matrix2d& coefficient);

/// Known names: sine-coefficient, unit-coefficient, zero, linear, poly1 .. poly5.
ManufacturedCase make_case(const std::string& name);
std::vector<std::string> case_names();

/// Largest relative deviation between the case's forcing and a central-difference
/// divergence of -K grad p at `samples` random points of the unit square.
double forcing_consistency_error(const ManufacturedCase& c, int samples = 100, std::uint64_t seed = 7);

} // namespace mvvm
