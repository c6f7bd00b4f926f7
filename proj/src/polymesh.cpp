#include "mvvm/polymesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <utility>

#include <Eigen/Dense>

namespace mvvm {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2)
{
    const double d1 = cross(q2 - q1, p1 - q1);
    const double d2 = cross(q2 - q1, p2 - q1);
    const double d3 = cross(p2 - p1, q1 - p1);
    const double d4 = cross(p2 - p1, q2 - p1);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;

    auto on_segment = [](const Point& a, const Point& b, const Point& p) {
        return p.x() >= std::min(a.x(), b.x()) && p.x() <= std::max(a.x(), b.x())
            && p.y() >= std::min(a.y(), b.y()) && p.y() <= std::max(a.y(), b.y());
    };
    if (d1 == 0 && on_segment(q1, q2, p1)) return true;
    if (d2 == 0 && on_segment(q1, q2, p2)) return true;
    if (d3 == 0 && on_segment(p1, p2, q1)) return true;
    if (d4 == 0 && on_segment(p1, p2, q2)) return true;
    return false;
}

bool is_simple(std::span<const Point> loop)
{
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i)
    {
        for (std::size_t j = i + 1; j < n; ++j)
        {
            // adjacent edges share a vertex by construction
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (segments_intersect(loop[i], loop[(i + 1) % n], loop[j], loop[(j + 1) % n])) return false;
        }
    }
    return true;
}

// Keeps the part of a convex polygon on the left of the directed line a -> b.
std::vector<Point> clip_left(const std::vector<Point>& poly, const Point& a, const Point& b)
{
    std::vector<Point> out;
    const std::size_t  n   = poly.size();
    const Point        dir = b - a;
    for (std::size_t i = 0; i < n; ++i)
    {
        const Point& p  = poly[i];
        const Point& q  = poly[(i + 1) % n];
        const double sp = cross(dir, p - a);
        const double sq = cross(dir, q - a);
        if (sp >= 0) out.push_back(p);
        if ((sp >= 0) != (sq >= 0))
        {
            const double t = sp / (sp - sq);
            out.push_back(p + t * (q - p));
        }
    }
    return out;
}

} // namespace

double signed_area(std::span<const Point> loop)
{
    double a = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) a += cross(loop[i], loop[(i + 1) % loop.size()]);
    return 0.5 * a;
}

std::vector<Point> polygon_kernel(std::span<const Point> loop)
{
    Point lo = loop[0], hi = loop[0];
    for (const auto& p : loop)
    {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    std::vector<Point> kernel{lo, Point(hi.x(), lo.y()), hi, Point(lo.x(), hi.y())};
    for (std::size_t i = 0; i < loop.size() && !kernel.empty(); ++i)
        kernel = clip_left(kernel, loop[i], loop[(i + 1) % loop.size()]);

    // drop clipping duplicates
    const double       scale = (hi - lo).norm();
    std::vector<Point> cleaned;
    for (const auto& p : kernel)
        if (cleaned.empty() || (p - cleaned.back()).norm() > 1e-14 * scale) cleaned.push_back(p);
    while (cleaned.size() > 1 && (cleaned.front() - cleaned.back()).norm() <= 1e-14 * scale) cleaned.pop_back();
    if (cleaned.size() < 3 || signed_area(cleaned) <= 1e-14 * scale * scale) return {};
    return cleaned;
}

Disk convex_inscribed_disk(std::span<const Point> convex)
{
    const std::size_t n = convex.size();
    if (n < 3) return {Point::Zero(), 0.0};

    // Each edge gives n_i . c + r <= b_i; the optimum sits on three active constraints.
    std::vector<Eigen::Vector3d> rows(n);
    std::vector<double>          rhs(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        const Point d = convex[(i + 1) % n] - convex[i];
        const Point normal(d.y() / d.norm(), -d.x() / d.norm());
        rows[i] = Eigen::Vector3d(normal.x(), normal.y(), 1.0);
        rhs[i]  = normal.dot(convex[i]);
    }

    Disk best{convex[0], 0.0};
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            for (std::size_t c = b + 1; c < n; ++c)
            {
                Eigen::Matrix3d m;
                m.row(0) = rows[a];
                m.row(1) = rows[b];
                m.row(2) = rows[c];
                const double det = m.determinant();
                if (std::abs(det) < 1e-12) continue;
                const Eigen::Vector3d sol = m.partialPivLu().solve(Eigen::Vector3d(rhs[a], rhs[b], rhs[c]));
                if (sol.z() <= best.radius) continue;
                bool feasible = true;
                for (std::size_t i = 0; i < n && feasible; ++i)
                    feasible = rows[i].dot(sol) <= rhs[i] + 1e-12 * (1.0 + std::abs(rhs[i]));
                if (feasible) best = {Point(sol.x(), sol.y()), sol.z()};
            }
    return best;
}

Disk kernel_disk(std::span<const Point> loop)
{
    const auto kernel = polygon_kernel(loop);
    if (kernel.empty()) return {Point::Zero(), 0.0};
    return convex_inscribed_disk(kernel);
}

std::vector<Point> cell_points(const PolyMesh& mesh, int cell)
{
    std::vector<Point> pts;
    pts.reserve(mesh.cells()[cell].size());
    for (int v : mesh.cells()[cell]) pts.push_back(mesh.vertex(v));
    return pts;
}

int PolyMesh::num_interior_edges() const
{
    return static_cast<int>(std::count_if(edges_.begin(), edges_.end(), [](const Edge& e) { return !e.is_boundary(); }));
}

Point PolyMesh::edge_midpoint(int e) const { return 0.5 * (vertices_[edges_[e].v0] + vertices_[edges_[e].v1]); }

Point PolyMesh::edge_tangent(int e) const
{
    return (vertices_[edges_[e].v1] - vertices_[edges_[e].v0]).normalized();
}

Point PolyMesh::edge_normal(int e) const
{
    const Point t = edge_tangent(e);
    return {t.y(), -t.x()};
}

double PolyMesh::edge_length(int e) const { return (vertices_[edges_[e].v1] - vertices_[edges_[e].v0]).norm(); }

double PolyMesh::cell_area(int cell) const { return signed_area(cell_points(*this, cell)); }

Point PolyMesh::cell_centroid(int cell) const
{
    const auto pts = cell_points(*this, cell);
    // shift to the first vertex to limit cancellation
    const Point origin = pts[0];
    double      a      = 0.0;
    Point       c      = Point::Zero();
    for (std::size_t i = 0; i < pts.size(); ++i)
    {
        const Point  p = pts[i] - origin;
        const Point  q = pts[(i + 1) % pts.size()] - origin;
        const double w = cross(p, q);
        a += w;
        c += w * (p + q);
    }
    return origin + c / (3.0 * a);
}

double PolyMesh::cell_diameter(int cell) const
{
    const auto& loop = cells_[cell];
    double      d    = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i)
        for (std::size_t j = i + 1; j < loop.size(); ++j)
            d = std::max(d, (vertices_[loop[i]] - vertices_[loop[j]]).norm());
    return d;
}

double PolyMesh::max_diameter() const
{
    double h = 0.0;
    for (int c = 0; c < num_cells(); ++c) h = std::max(h, cell_diameter(c));
    return h;
}

PolyMesh build_topology(std::vector<Point> vertices, std::vector<std::vector<int>> cells)
{
    const int nv = static_cast<int>(vertices.size());

    struct Incidence
    {
        int  cell;
        int  local;
        bool forward; // traversed min -> max
    };
    std::map<std::pair<int, int>, std::vector<Incidence>> incidences;

    for (int c = 0; c < static_cast<int>(cells.size()); ++c)
    {
        const auto& loop = cells[c];
        if (loop.size() < 3) throw MeshError("cell " + std::to_string(c) + " has fewer than 3 vertices");
        for (int v : loop)
            if (v < 0 || v >= nv)
                throw MeshError("cell " + std::to_string(c) + " references missing vertex " + std::to_string(v));

        std::vector<Point> pts;
        for (int v : loop) pts.push_back(vertices[v]);
        const double area = signed_area(pts);
        if (area == 0.0) throw MeshError("cell " + std::to_string(c) + " has zero area");
        if (area < 0.0) throw MeshError("cell " + std::to_string(c) + " is clockwise");
        if (!is_simple(pts)) throw MeshError("cell " + std::to_string(c) + " is not a simple polygon");

        for (std::size_t i = 0; i < loop.size(); ++i)
        {
            const int a = loop[i];
            const int b = loop[(i + 1) % loop.size()];
            if (a == b) throw MeshError("cell " + std::to_string(c) + " repeats vertex " + std::to_string(a));
            auto& list = incidences[{std::min(a, b), std::max(a, b)}];
            list.push_back({c, static_cast<int>(i), a < b});
            if (list.size() > 2)
                throw MeshError("non-conforming mesh: edge (" + std::to_string(std::min(a, b)) + ", "
                                + std::to_string(std::max(a, b)) + ") has more than two cells");
        }
    }

    PolyMesh mesh;
    mesh.vertices_ = std::move(vertices);
    mesh.cells_    = std::move(cells);
    mesh.cell_edges_.resize(mesh.cells_.size());
    for (std::size_t c = 0; c < mesh.cells_.size(); ++c) mesh.cell_edges_[c].resize(mesh.cells_[c].size());

    for (const auto& [key, list] : incidences)
    {
        const int   id    = static_cast<int>(mesh.edges_.size());
        const auto& owner = list[0]; // lowest cell index: cells are visited in order
        Edge        e;
        e.left = owner.cell;
        e.v0   = owner.forward ? key.first : key.second;
        e.v1   = owner.forward ? key.second : key.first;
        mesh.cell_edges_[owner.cell][owner.local] = {id, +1};
        if (list.size() == 2)
        {
            const auto& other = list[1];
            if (other.forward == owner.forward)
                throw MeshError("cells " + std::to_string(owner.cell) + " and " + std::to_string(other.cell)
                                + " overlap across a shared edge");
            e.right                                   = other.cell;
            mesh.cell_edges_[other.cell][other.local] = {id, -1};
        }
        mesh.edges_.push_back(e);
    }
    return mesh;
}

PolyMesh generate_uniform_quads(int nx, int ny)
{
    if (nx < 1 || ny < 1) throw MeshError("grid dimensions must be positive");
    std::vector<Point> vertices;
    vertices.reserve((nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            vertices.emplace_back(static_cast<double>(i) / nx, static_cast<double>(j) / ny);

    std::vector<std::vector<int>> cells;
    cells.reserve(nx * ny);
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    return build_topology(std::move(vertices), std::move(cells));
}

namespace {

constexpr double kMinKernelRatio = 0.05;
constexpr int    kMaxRetries     = 100;

bool acceptable_cell(std::span<const Point> loop)
{
    if (signed_area(loop) <= 0.0 || !is_simple(loop)) return false;
    double diam = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i)
        for (std::size_t j = i + 1; j < loop.size(); ++j) diam = std::max(diam, (loop[i] - loop[j]).norm());
    return kernel_disk(loop).radius >= kMinKernelRatio * diam;
}

} // namespace

PolyMesh generate_distorted_polygonal(const DistortionParams& params)
{
    const int nx = params.nx, ny = params.ny;
    if (nx < 1 || ny < 1) throw MeshError("grid dimensions must be positive");
    if (params.distortion < 0.0 || params.distortion >= 0.5) throw MeshError("distortion must lie in [0, 0.5)");
    if (params.split_fraction < 0.0 || params.split_fraction > 1.0) throw MeshError("split fraction must lie in [0, 1]");

    const PolyMesh base     = generate_uniform_quads(nx, ny);
    auto           vertices = base.vertices();
    auto           cells    = base.cells();

    // vertex -> incident cells, for local validity checks
    std::vector<std::vector<int>> vertex_cells(vertices.size());
    for (int c = 0; c < static_cast<int>(cells.size()); ++c)
        for (int v : cells[c]) vertex_cells[v].push_back(c);

    std::mt19937_64                        rng(params.seed);
    const double                           amplitude = params.distortion * std::min(1.0 / nx, 1.0 / ny);
    std::uniform_real_distribution<double> offset(-amplitude, amplitude);

    auto loop_points = [&](int c) {
        std::vector<Point> pts;
        for (int v : cells[c]) pts.push_back(vertices[v]);
        return pts;
    };

    if (amplitude > 0.0)
    {
        for (int j = 1; j < ny; ++j)
            for (int i = 1; i < nx; ++i)
            {
                const int   v        = j * (nx + 1) + i;
                const Point original = vertices[v];
                bool        accepted = false;
                for (int attempt = 0; attempt < kMaxRetries && !accepted; ++attempt)
                {
                    const double dx = offset(rng);
                    const double dy = offset(rng);
                    vertices[v]     = original + Point(dx, dy);
                    accepted        = std::all_of(vertex_cells[v].begin(), vertex_cells[v].end(),
                                                  [&](int c) { return acceptable_cell(loop_points(c)); });
                }
                if (!accepted)
                    throw MeshError("could not place vertex " + std::to_string(v) + " after "
                                    + std::to_string(kMaxRetries) + " retries");
            }
    }

    if (params.split_fraction > 0.0)
    {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        for (const Edge& e : base.edges())
        {
            if (coin(rng) >= params.split_fraction) continue;
            const int mid = static_cast<int>(vertices.size());
            vertices.push_back(0.5 * (vertices[e.v0] + vertices[e.v1]));
            for (int c : {e.left, e.right})
            {
                if (c == kBoundary) continue;
                auto&             loop = cells[c];
                const std::size_t n    = loop.size();
                for (std::size_t i = 0; i < n; ++i)
                {
                    const int a = loop[i], b = loop[(i + 1) % n];
                    if ((a == e.v0 && b == e.v1) || (a == e.v1 && b == e.v0))
                    {
                        loop.insert(loop.begin() + static_cast<std::ptrdiff_t>(i + 1), mid);
                        break;
                    }
                }
            }
        }
    }

    return build_topology(std::move(vertices), std::move(cells));
}

MeshQualityReport mesh_quality(const PolyMesh& mesh)
{
    MeshQualityReport report;
    report.min_edge_to_cell_ratio  = std::numeric_limits<double>::infinity();
    report.min_kernel_radius_ratio = std::numeric_limits<double>::infinity();
    for (int c = 0; c < mesh.num_cells(); ++c)
    {
        const double h = mesh.cell_diameter(c);
        report.max_diameter = std::max(report.max_diameter, h);
        for (const auto& ce : mesh.cell_edges(c))
            report.min_edge_to_cell_ratio = std::min(report.min_edge_to_cell_ratio, mesh.edge_length(ce.edge) / h);
        report.min_kernel_radius_ratio =
            std::min(report.min_kernel_radius_ratio, kernel_disk(cell_points(mesh, c)).radius / h);
    }
    return report;
}

bool euler_check(const PolyMesh& mesh)
{
    long incidences = 0;
    for (const auto& loop : mesh.cells()) incidences += static_cast<long>(loop.size());
    return incidences == 2L * mesh.num_interior_edges() + mesh.num_boundary_edges();
}

bool operator==(const PolyMesh& a, const PolyMesh& b)
{
    return a.vertices() == b.vertices() && a.cells() == b.cells();
}

} // namespace mvvm
