#include "mvvm/polymesh.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mvvm {

namespace {

class LineReader
{
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    // Next non-blank line with comments stripped; false at end of input.
    bool next(std::string& line)
    {
        std::string raw;
        while (std::getline(in_, raw))
        {
            ++number_;
            if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
            if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
            line = raw;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw MeshError("mesh parse error at line " + std::to_string(number_) + ": " + what);
    }

    int line_number() const { return number_; }

private:
    std::istream& in_;
    int           number_ = 0;
};

std::string format_double(double x)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

int read_count(LineReader& reader, const std::string& keyword)
{
    std::string line;
    if (!reader.next(line)) reader.fail("expected '" + keyword + " <count>'");
    std::istringstream ss(line);
    std::string        word;
    long               count = -1;
    if (!(ss >> word >> count) || word != keyword || count < 0) reader.fail("expected '" + keyword + " <count>'");
    return static_cast<int>(count);
}

} // namespace

PolyMesh parse_mesh(std::istream& in)
{
    LineReader  reader(in);
    std::string line;
    if (!reader.next(line)) throw MeshError("mesh parse error: empty input");
    {
        std::istringstream ss(line);
        std::string        a, b;
        if (!(ss >> a >> b) || a != "polymesh" || b != "2d") reader.fail("expected header 'polymesh 2d'");
    }

    const int          nv = read_count(reader, "vertices");
    std::vector<Point> vertices;
    vertices.reserve(nv);
    for (int i = 0; i < nv; ++i)
    {
        if (!reader.next(line)) reader.fail("expected vertex " + std::to_string(i));
        std::istringstream ss(line);
        double             x, y;
        if (!(ss >> x >> y)) reader.fail("malformed vertex " + std::to_string(i));
        vertices.emplace_back(x, y);
    }

    const int                     nc = read_count(reader, "cells");
    std::vector<std::vector<int>> cells;
    cells.reserve(nc);
    for (int c = 0; c < nc; ++c)
    {
        if (!reader.next(line)) reader.fail("expected cell " + std::to_string(c));
        std::istringstream ss(line);
        int                k = 0;
        if (!(ss >> k) || k < 3) reader.fail("malformed cell " + std::to_string(c));
        std::vector<int> loop(k);
        for (int& v : loop)
            if (!(ss >> v)) reader.fail("cell " + std::to_string(c) + " lists fewer than " + std::to_string(k) + " vertices");
        for (int v : loop)
            if (v < 0 || v >= nv)
                reader.fail("cell " + std::to_string(c) + " references missing vertex " + std::to_string(v));
        cells.push_back(std::move(loop));
    }
    return build_topology(std::move(vertices), std::move(cells));
}

PolyMesh read_mesh(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw MeshError("cannot open mesh file " + path.string());
    return parse_mesh(in);
}

void write_mesh(std::ostream& out, const PolyMesh& mesh)
{
    out << "polymesh 2d\n";
    out << "vertices " << mesh.num_vertices() << '\n';
    for (const auto& p : mesh.vertices()) out << format_double(p.x()) << ' ' << format_double(p.y()) << '\n';
    out << "cells " << mesh.num_cells() << '\n';
    for (const auto& loop : mesh.cells())
    {
        out << loop.size();
        for (int v : loop) out << ' ' << v;
        out << '\n';
    }
}

void write_mesh(const std::filesystem::path& path, const PolyMesh& mesh)
{
    std::ofstream out(path);
    if (!out) throw MeshError("cannot write mesh file " + path.string());
    write_mesh(out, mesh);
    if (!out) throw MeshError("failed writing mesh file " + path.string());
}

} // namespace mvvm
