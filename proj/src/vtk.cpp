#include "mvvm/vtk.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mvvm {

namespace {

std::string number(double x)
{
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, end);
}

} // namespace

void write_vtk(std::ostream& out, const Discretization& disc, const VelocitySolution& velocity)
{
    const PolyMesh& mesh = *disc.mesh;
    const int       nc   = mesh.num_cells();

    out << "# vtk DataFile Version 3.0\n"
        << "mvvm solution, order " << disc.order << "\n"
        << "ASCII\nDATASET UNSTRUCTURED_GRID\n";

    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (const Point& v : mesh.vertices()) out << number(v.x()) << ' ' << number(v.y()) << " 0\n";

    std::size_t list_size = 0;
    for (const auto& loop : mesh.cells()) list_size += loop.size() + 1;
    out << "CELLS " << nc << ' ' << list_size << '\n';
    for (const auto& loop : mesh.cells())
    {
        out << loop.size();
        for (int v : loop) out << ' ' << v;
        out << '\n';
    }
    out << "CELL_TYPES " << nc << '\n';
    for (int c = 0; c < nc; ++c) out << "7\n";

    out << "CELL_DATA " << nc << '\n';

    out << "VECTORS velocity double\n";
    for (int c = 0; c < nc; ++c)
    {
        const NcElement& el = disc.elements[c];
        const Point      u  = eval_vector(el.basis_k(), velocity.projection.coefficients[c], el.geometry().centroid);
        out << number(u.x()) << ' ' << number(u.y()) << " 0\n";
    }

    out << "SCALARS divergence double 1\nLOOKUP_TABLE default\n";
    for (int c = 0; c < nc; ++c)
    {
        const NcElement& el = disc.elements[c];
        out << number(el.basis_k().eval(el.geometry().centroid).dot(velocity.divergence.coefficients[c])) << '\n';
    }

    out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (int c = 0; c < nc; ++c)
    {
        const NcElement&      el = disc.elements[c];
        const Eigen::VectorXd p  = el.l2_projector() * disc.local_pressure(c);
        out << number(el.basis().eval(el.geometry().centroid).dot(p)) << '\n';
    }

    if (!velocity.reconstruction.empty())
    {
        out << "VECTORS reconstruction double\n";
        for (int c = 0; c < nc; ++c)
        {
            const Point u = velocity.reconstruction[c](disc.elements[c].geometry().centroid);
            out << number(u.x()) << ' ' << number(u.y()) << " 0\n";
        }
    }
}

void export_vtk(const std::filesystem::path& path, const Discretization& disc, const VelocitySolution& velocity)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_vtk(out, disc, velocity);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

} // namespace mvvm
