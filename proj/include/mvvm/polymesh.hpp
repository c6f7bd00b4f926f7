#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mvvm {

using Point = Eigen::Vector2d;

inline constexpr int kBoundary = -1;

class MeshError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// An edge is stored once, oriented so that `left` traverses it v0 -> v1 in its
// counter-clockwise loop. The stored normal is therefore outward for `left`.
struct Edge
{
    int v0    = -1;
    int v1    = -1;
    int left  = -1;
    int right = kBoundary;

    bool is_boundary() const { return right == kBoundary; }
};

// Cell-local view of one boundary edge of a polygon.
struct CellEdge
{
    int edge;
    // +1 if the cell is the edge's left cell (stored normal is outward), -1 otherwise.
    int sign;
};

class PolyMesh
{
public:
    PolyMesh() = default;

    const std::vector<Point>&            vertices() const { return vertices_; }
    const std::vector<std::vector<int>>& cells() const { return cells_; }
    const std::vector<Edge>&             edges() const { return edges_; }

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_cells() const { return static_cast<int>(cells_.size()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    int num_interior_edges() const;
    int num_boundary_edges() const { return num_edges() - num_interior_edges(); }

    std::span<const CellEdge> cell_edges(int cell) const { return cell_edges_[cell]; }

    const Point& vertex(int i) const { return vertices_[i]; }
    Point        edge_midpoint(int e) const;
    Point        edge_tangent(int e) const; // unit, v0 -> v1
    Point        edge_normal(int e) const;  // unit, outward for the left cell
    double       edge_length(int e) const;

    double cell_area(int cell) const;
    Point  cell_centroid(int cell) const;
    double cell_diameter(int cell) const;
    double max_diameter() const;

    // Test hook: appends an edge record that no cell references.
    void append_orphan_edge(const Edge& e) { edges_.push_back(e); }

    friend PolyMesh build_topology(std::vector<Point> vertices, std::vector<std::vector<int>> cells);

private:
    std::vector<Point>                 vertices_;
    std::vector<std::vector<int>>      cells_;
    std::vector<Edge>                  edges_;
    std::vector<std::vector<CellEdge>> cell_edges_;
};

struct MeshQualityReport
{
    double min_edge_to_cell_ratio = 0.0; // min over cells of h_f / h_P
    double min_kernel_radius_ratio = 0.0; // min over cells of kernel inradius / h_P
    double max_diameter = 0.0;
};

// Signed area of a closed vertex loop (positive for counter-clockwise).
double signed_area(std::span<const Point> loop);

// Intersection of the inner half-planes of every edge of a polygon loop. Empty if the
// polygon is not star-shaped.
std::vector<Point> polygon_kernel(std::span<const Point> loop);

struct Disk
{
    Point  center;
    double radius;
};

// Largest disk inscribed in a convex counter-clockwise polygon.
Disk convex_inscribed_disk(std::span<const Point> convex);

// Largest disk contained in the kernel of a polygon; radius 0 when the kernel is empty.
Disk kernel_disk(std::span<const Point> loop);

// Gather the coordinates of a cell's vertex loop.
std::vector<Point> cell_points(const PolyMesh& mesh, int cell);

PolyMesh build_topology(std::vector<Point> vertices, std::vector<std::vector<int>> cells);

PolyMesh generate_uniform_quads(int nx, int ny);

struct DistortionParams
{
    int           nx         = 4;
    int           ny         = 4;
    std::uint64_t seed       = 1;
    double        distortion = 0.2;
    // Fraction of edges that receive a midside vertex.
    double        split_fraction = 0.25;
};

PolyMesh generate_distorted_polygonal(const DistortionParams& params);

MeshQualityReport mesh_quality(const PolyMesh& mesh);

bool euler_check(const PolyMesh& mesh);

PolyMesh read_mesh(const std::filesystem::path& path);
PolyMesh parse_mesh(std::istream& in);
void     write_mesh(const std::filesystem::path& path, const PolyMesh& mesh);
void     write_mesh(std::ostream& out, const PolyMesh& mesh);

bool operator==(const PolyMesh& a, const PolyMesh& b);

} // namespace mvvm
