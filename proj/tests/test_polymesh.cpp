#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "mvvm/polymesh.hpp"
#include "oracles.hpp"

using namespace mvvm;

namespace {

std::string error_of(const std::string& text)
{
    std::istringstream in(text);
    try
    {
        parse_mesh(in);
    }
    catch (const MeshError& e)
    {
        return e.what();
    }
    return {};
}

void check_closed_cells(const PolyMesh& mesh)
{
    for (int c = 0; c < mesh.num_cells(); ++c)
    {
        Point sum = Point::Zero();
        for (const auto& ce : mesh.cell_edges(c)) sum += ce.sign * mesh.edge_length(ce.edge) * mesh.edge_normal(ce.edge);
        CHECK(sum.norm() < 1e-15);
    }
}

double total_area(const PolyMesh& mesh)
{
    double a = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) a += mesh.cell_area(c);
    return a;
}

} // namespace

TEST_CASE("build_topology counts")
{
    SUBCASE("single square")
    {
        const PolyMesh m = build_topology({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}});
        CHECK(m.num_cells() == 1);
        CHECK(m.num_boundary_edges() == 4);
        CHECK(m.num_interior_edges() == 0);
        CHECK(euler_check(m));
    }
    SUBCASE("2x2 quads")
    {
        const PolyMesh m = generate_uniform_quads(2, 2);
        CHECK(m.num_cells() == 4);
        CHECK(m.num_interior_edges() == 4);
        CHECK(m.num_boundary_edges() == 8);
        CHECK(euler_check(m));
    }
    SUBCASE("shared edge seen in opposite directions")
    {
        const PolyMesh m = build_topology({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}});
        CHECK(m.num_interior_edges() == 1);
        CHECK(m.num_edges() == 5);
        for (const auto& e : m.edges())
            if (!e.is_boundary()) CHECK(((e.left == 0 && e.right == 1) || (e.left == 1 && e.right == 0)));
    }
}

TEST_CASE("edge table is sorted and normals face out of the left cell")
{
    const PolyMesh mesh = generate_distorted_polygonal({4, 4, 1, 0.2, 0.25});
    for (int e = 1; e < mesh.num_edges(); ++e)
    {
        const auto& a = mesh.edges()[e - 1];
        const auto& b = mesh.edges()[e];
        const auto  ka = std::minmax(a.v0, a.v1);
        const auto  kb = std::minmax(b.v0, b.v1);
        CHECK(ka < kb);
    }
    for (int e = 0; e < mesh.num_edges(); ++e)
    {
        const auto& edge = mesh.edges()[e];
        const Point away = mesh.edge_midpoint(e) - mesh.cell_centroid(edge.left);
        CHECK(away.dot(mesh.edge_normal(e)) > 0.0);
    }
}

TEST_CASE("build_topology rejects bad input")
{
    const std::vector<Point> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    CHECK_THROWS_WITH_AS(build_topology(square, {{0, 3, 2, 1}}), doctest::Contains("clockwise"), MeshError);
    CHECK_THROWS_WITH_AS(build_topology({{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}), doctest::Contains("zero area"), MeshError);
    // three triangles on one edge
    CHECK_THROWS_AS(build_topology({{0, 0}, {1, 0}, {0.5, 1}, {0.5, -1}, {0.5, 2}}, {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}}),
                    MeshError);
    CHECK_THROWS_WITH_AS(build_topology(square, {{0, 1, 7}}), doctest::Contains("missing vertex 7"), MeshError);
}

TEST_CASE("uniform generator")
{
    const PolyMesh one = generate_uniform_quads(1, 1);
    CHECK(one.num_cells() == 1);
    CHECK(one.num_boundary_edges() == 4);
    CHECK(one.cell_area(0) == 1.0);

    const PolyMesh m = generate_uniform_quads(8, 8);
    CHECK(m.num_cells() == 64);
    CHECK(m.max_diameter() == doctest::Approx(std::sqrt(2.0) / 8).epsilon(1e-15));
    CHECK(euler_check(generate_uniform_quads(2, 2)));
    CHECK(total_area(m) == doctest::Approx(1.0).epsilon(1e-12));
    check_closed_cells(m);
}

TEST_CASE("distorted generator")
{
    SUBCASE("zero distortion and no splits reproduce the uniform grid")
    {
        CHECK(generate_distorted_polygonal({5, 3, 9, 0.0, 0.0}) == generate_uniform_quads(5, 3));
    }
    SUBCASE("4x4, seed 1")
    {
        const PolyMesh m = generate_distorted_polygonal({4, 4, 1, 0.2, 0.25});
        CHECK(m.num_cells() == 16);
        CHECK(euler_check(m));
        CHECK(mesh_quality(m).min_kernel_radius_ratio > 0.0);
        int polygons = 0;
        for (const auto& loop : m.cells()) polygons += loop.size() > 4;
        CHECK(polygons > 0);
    }
    SUBCASE("determinism")
    {
        const DistortionParams p{6, 6, 42, 0.3, 0.4};
        const PolyMesh         a = generate_distorted_polygonal(p);
        const PolyMesh         b = generate_distorted_polygonal(p);
        REQUIRE(a.num_vertices() == b.num_vertices());
        for (int v = 0; v < a.num_vertices(); ++v)
        {
            CHECK(a.vertex(v).x() == b.vertex(v).x());
            CHECK(a.vertex(v).y() == b.vertex(v).y());
        }
        CHECK(a.cells() == b.cells());
        CHECK(!(a == generate_distorted_polygonal({6, 6, 43, 0.3, 0.4})));
    }
    SUBCASE("bad parameters")
    {
        CHECK_THROWS_AS(generate_distorted_polygonal({4, 4, 1, 0.5, 0.25}), MeshError);
        CHECK_THROWS_AS(generate_distorted_polygonal({0, 4, 1, 0.2, 0.25}), MeshError);
    }
}

TEST_CASE("generator invariants over seeds")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
        for (int n : {2, 3, 8})
        {
            const PolyMesh m = generate_distorted_polygonal({n, n + 1, seed, 0.45 * (seed % 3) / 2.0, 0.3});
            CAPTURE(seed);
            CAPTURE(n);
            CHECK(euler_check(m));
            CHECK(total_area(m) == doctest::Approx(1.0).epsilon(1e-12));
            check_closed_cells(m);
            const auto q = mesh_quality(m);
            CHECK(q.min_kernel_radius_ratio > 0.0);
            CHECK(q.min_kernel_radius_ratio <= 1.0);
            CHECK(q.min_edge_to_cell_ratio > 0.0);
            CHECK(q.min_edge_to_cell_ratio <= 1.0);
            CHECK(q.max_diameter == m.max_diameter());
        }
}

TEST_CASE("orphaned edge record breaks the Euler identity")
{
    PolyMesh m = generate_uniform_quads(2, 2);
    REQUIRE(euler_check(m));
    m.append_orphan_edge(m.edges().front());
    CHECK_FALSE(euler_check(m));
}

TEST_CASE("mesh quality")
{
    const auto unit = mesh_quality(generate_uniform_quads(1, 1));
    CHECK(unit.min_kernel_radius_ratio == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-12));
    for (int n : {1, 3, 7})
        CHECK(mesh_quality(generate_uniform_quads(n, n)).min_edge_to_cell_ratio ==
              doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("kernel of an L-shaped hexagon")
{
    const std::vector<Point> loop{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
    const Disk               kernel = kernel_disk(loop);
    const Disk               hull   = convex_inscribed_disk(oracle::convex_hull(loop));

    // grid-search oracles, spacing 2/400
    const double spacing = 2.0 / 400;
    CHECK(std::abs(kernel.radius - oracle::half_plane_inradius(loop)) <= spacing);
    CHECK(std::abs(hull.radius - oracle::half_plane_inradius(oracle::convex_hull(loop))) <= spacing);
    CHECK(kernel.radius < hull.radius);

    const PolyMesh m = build_topology(loop, {{0, 1, 2, 3, 4, 5}});
    CHECK(mesh_quality(m).min_kernel_radius_ratio == doctest::Approx(kernel.radius / std::sqrt(8.0)).epsilon(1e-12));
}

TEST_CASE("kernel of a polygon that is not star-shaped is empty")
{
    // a comb with two deep slots
    const std::vector<Point> comb{{0, 0}, {3, 0}, {3, 2}, {2.6, 2}, {2.6, 0.2}, {2.4, 0.2}, {2.4, 2},
                                  {0.6, 2}, {0.6, 0.2}, {0.4, 0.2}, {0.4, 2}, {0, 2}};
    CHECK(polygon_kernel(comb).empty());
    CHECK(kernel_disk(comb).radius == 0.0);
}

TEST_CASE("mesh text round trip")
{
    for (const PolyMesh& m : {generate_uniform_quads(2, 2), generate_distorted_polygonal({4, 4, 1, 0.2, 0.25})})
    {
        std::stringstream buf;
        write_mesh(buf, m);
        const PolyMesh back = parse_mesh(buf);
        CHECK(back == m);
        for (int v = 0; v < m.num_vertices(); ++v) CHECK((back.vertex(v) - m.vertex(v)).norm() == 0.0);
    }
}

TEST_CASE("mesh parse errors")
{
    CHECK(error_of("").find("empty") != std::string::npos);
    CHECK(error_of("# only a comment\n").find("empty") != std::string::npos);
    CHECK(error_of("polymesh 3d\n").find("line 1") != std::string::npos);
    CHECK(error_of("polymesh 2d\nvertices 2\n0 0\n1 x\n").find("line 4") != std::string::npos);

    const std::string missing = "polymesh 2d\n"
                                "vertices 4\n0 0\n1 0\n1 1\n0 1\n"
                                "cells 3\n3 0 1 2\n3 0 2 3\n3 0 2 9\n";
    const std::string what = error_of(missing);
    CHECK(what.find("cell 2") != std::string::npos);
    CHECK(what.find("vertex 9") != std::string::npos);
}
