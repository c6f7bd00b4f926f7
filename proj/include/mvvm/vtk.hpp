#pragma once

#include <filesystem>
#include <iosfwd>

#include "mvvm/recovery.hpp"

namespace mvvm {

/// Legacy ASCII VTK unstructured grid with one polygon per cell. Cell data, sampled at
/// centroids: velocity (Pi^0_k u_h), divergence, pressure (Pi^0_{k+1} p_h) and, for
/// k = 0, the reconstructed velocity.
void write_vtk(std::ostream& out, const Discretization& disc, const VelocitySolution& velocity);
void export_vtk(const std::filesystem::path& path, const Discretization& disc, const VelocitySolution& velocity);

} // namespace mvvm
