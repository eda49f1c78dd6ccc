#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "glocal/mesh.hpp"
#include "oracles.hpp"

using namespace glocal;

namespace {

void check_invariants(const Mesh& m)
{
    auto q = inspect_mesh(m);
    CHECK(q.conforming);
    CHECK(q.positively_oriented);
    CHECK(q.boundary_flags_exact);
    CHECK(q.area_sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q.max_shape_ratio <= 10.0);
}

MeshSpec well_spec(double H, double h)
{
    MeshSpec s;
    s.H_target = H;
    s.h_target = h;
    s.defect = well_defect();
    s.base_n = 4;
    return s;
}

bool box_intersects(const Mesh& m, std::size_t e, const Rect& r)
{
    auto c = m.corners(e);
    double xmin = std::min({c[0].x, c[1].x, c[2].x}), xmax = std::max({c[0].x, c[1].x, c[2].x});
    double ymin = std::min({c[0].y, c[1].y, c[2].y}), ymax = std::max({c[0].y, c[1].y, c[2].y});
    return xmax > r.xmin && xmin < r.xmax && ymax > r.ymin && ymin < r.ymax;
}

// Triangle with barycenter exactly b for dyadic inputs.
std::array<Point, 3> triangle_around(Point b, double d)
{
    return {Point{b.x - d, b.y - d}, Point{b.x + 2 * d, b.y - d}, Point{b.x - d, b.y + 2 * d}};
}

} // namespace

TEST_CASE("structured mesh counts")
{
    auto m1 = build_structured_mesh(1);
    CHECK(m1.num_vertices() == 4);
    CHECK(m1.num_elements() == 2);
    CHECK(m1.total_area() == doctest::Approx(1.0).epsilon(1e-15));

    auto m4 = build_structured_mesh(4);
    CHECK(m4.num_vertices() == 25);
    CHECK(m4.num_elements() == 32);

    for (std::size_t n : {1u, 3u, 7u, 16u, 33u}) {
        auto m = build_structured_mesh(n);
        CHECK(m.num_vertices() == (n + 1) * (n + 1));
        CHECK(m.num_elements() == 2 * n * n);
        check_invariants(m);
        for (std::size_t e = 0; e < m.num_elements(); ++e) {
            CHECK(m.region(e) == Region::Exterior);
            CHECK(m.spacing(e) == doctest::Approx(1.0 / n).epsilon(1e-12));
        }
    }
}

TEST_CASE("structured mesh capacity errors")
{
    CHECK_THROWS_AS(build_structured_mesh(0), CapacityError);
    CHECK_THROWS_AS(build_structured_mesh(10, 100), CapacityError);
    CHECK_NOTHROW(build_structured_mesh(9, 100));
}

TEST_CASE("boundary vertices are exactly those on the square boundary")
{
    auto m = build_structured_mesh(6);
    std::set<std::uint32_t> flagged(m.boundary_vertices().begin(), m.boundary_vertices().end());
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
        Point p = m.vertex(v);
        bool on = p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0;
        CHECK(on == (flagged.count(static_cast<std::uint32_t>(v)) == 1));
        CHECK(on == m.is_boundary(v));
    }
}

TEST_CASE("locally refined mesh near the well")
{
    auto spec = well_spec(1.0 / 8, 1.0 / 64);
    Mesh m = build_locally_refined_mesh(spec);
    check_invariants(m);

    Rect K{0.44, 0.44, 0.56, 0.56};
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        CHECK(m.spacing(e) <= 1.0 / 8 * (1 + 1e-12));
        if (box_intersects(m, e, K))
            CHECK(m.spacing(e) <= 1.0 / 64 * (1 + 1e-12));
    }

    // independent enumeration of the generated elements
    std::size_t counted = 0;
    for ([[maybe_unused]] const auto& el : m.elements())
        ++counted;
    CHECK(counted == m.num_elements());
    CHECK(counted > 2 * 8 * 8);
    CHECK(counted < 2 * 64 * 64);

    // grading between edge neighbors
    auto nb = element_neighbors(m);
    for (std::size_t e = 0; e < m.num_elements(); ++e)
        for (auto n : nb[e])
            if (n >= 0)
                CHECK(m.spacing(e) <= 2.0 * m.spacing(static_cast<std::size_t>(n)) * (1 + 1e-12));
}

TEST_CASE("degenerate spec H = h gives the uniform mesh")
{
    MeshSpec spec = well_spec(1.0 / 16, 1.0 / 16);
    spec.base_n = 0;
    Mesh m = build_locally_refined_mesh(spec);
    auto s = build_structured_mesh(16);
    CHECK(m.num_elements() == s.num_elements());
    CHECK(m.num_vertices() == s.num_vertices());
    CHECK(m.max_spacing() == doctest::Approx(s.max_spacing()));
}

TEST_CASE("mesh spec validation and element cap")
{
    CHECK_THROWS_AS(build_locally_refined_mesh(well_spec(0.5, 0.1)), ConfigError);
    CHECK_THROWS_AS(build_locally_refined_mesh(well_spec(1.0 / 8, 1.0 / 4)), ConfigError);
    auto bad_ratio = well_spec(1.0 / 8, 1.0 / 64);
    bad_ratio.grading_ratio = 1.5;
    CHECK_THROWS_AS(build_locally_refined_mesh(bad_ratio), ConfigError);

    auto capped = well_spec(1.0 / 8, 1.0 / 512);
    capped.max_elements = 2000;
    CHECK_THROWS_AS(build_locally_refined_mesh(capped), CapacityError);
}

TEST_CASE("halving h_target never coarsens K")
{
    double prev = 1.0;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        Mesh m = build_locally_refined_mesh(well_spec(1.0 / 8, h));
        double hk = m.max_spacing_in_k().value();
        CHECK(hk <= prev);
        CHECK(hk <= h * (1 + 1e-12));
        prev = hk;
    }
}

TEST_CASE("newest-vertex bisection keeps the mesh conforming")
{
    Mesh m = build_structured_mesh(4);
    std::mt19937 rng(7);
    for (int round = 0; round < 6; ++round) {
        std::vector<char> marked(m.num_elements(), 0);
        std::bernoulli_distribution pick(0.2);
        for (auto& c : marked)
            c = pick(rng);
        m = refine_marked(m, marked);
        check_invariants(m);
    }
}

TEST_CASE("region tags by barycenter")
{
    // three loose triangles with dyadic barycenters
    DefectGeometry d;
    d.k0_shapes = {Rect{0.25, 0.25, 0.75, 0.75}};
    std::vector<Point> verts;
    std::vector<Mesh::Element> els;
    for (Point b : {Point{0.5, 0.5}, Point{0.125, 0.125}, Point{0.25, 0.5}}) {
        auto t = triangle_around(b, 1.0 / 64);
        auto base = static_cast<std::uint32_t>(verts.size());
        verts.insert(verts.end(), t.begin(), t.end());
        els.push_back({base, base + 1, base + 2});
    }
    Mesh m(verts, els);
    REQUIRE(m.barycenter(2).x == 0.25);
    Mesh tagged = tag_regions(m, d);
    CHECK(tagged.region(0) == Region::Defect);
    CHECK(tagged.region(1) == Region::Exterior);
    CHECK(tagged.region(2) == Region::Defect); // on the boundary of K0

    // the named well defect, same rule
    CHECK(contains_any(well_defect().k0_shapes, {0.5, 0.5}));
    CHECK_FALSE(contains_any(well_defect().k0_shapes, {0.1, 0.1}));
    CHECK(contains_any(well_defect().k0_shapes, {0.45, 0.5}));
}

TEST_CASE("dilation matches a vertex-sharing scan")
{
    Mesh m = build_structured_mesh(10);
    DefectGeometry d;
    d.k0_shapes = {Rect{0.4, 0.4, 0.6, 0.6}};
    Mesh t = tag_regions(m, d);

    std::size_t defect_count = 0;
    for (std::size_t e = 0; e < t.num_elements(); ++e)
        defect_count += t.region(e) == Region::Defect;
    CHECK(defect_count == 2 * 2 * 2); // 2x2 grid cells

    // brute force: element in K iff it shares a vertex with a Defect element
    for (std::size_t e = 0; e < t.num_elements(); ++e) {
        bool shares = false;
        for (std::size_t f = 0; f < t.num_elements() && !shares; ++f) {
            if (t.region(f) != Region::Defect)
                continue;
            for (auto a : t.element(e))
                for (auto b : t.element(f))
                    shares = shares || a == b;
        }
        bool in_k = t.region(e) != Region::Exterior;
        CHECK(in_k == shares);
    }
}

TEST_CASE("unresolved defect")
{
    Mesh m = build_structured_mesh(4);
    DefectGeometry d;
    d.k0_shapes = {Rect{0.51, 0.51, 0.52, 0.52}};
    CHECK_THROWS_WITH_AS(tag_regions(m, d), doctest::Contains("defect unresolved"), GeometryError);
}

TEST_CASE("dilation reaching the boundary is reported")
{
    Mesh m = build_structured_mesh(8);
    DefectGeometry d;
    d.k0_shapes = {Rect{0.05, 0.3, 0.3, 0.6}};
    std::vector<std::string> warnings;
    Mesh t = tag_regions(m, d, warnings);
    CHECK(warnings.size() == 1);

    std::vector<std::string> none;
    tag_regions(m, well_defect(), none);
    CHECK(none.empty());
}

TEST_CASE("explicit K for the well gives a 0.01 layer")
{
    Mesh m = build_locally_refined_mesh(well_spec(1.0 / 8, 1.0 / 256));
    const double h = 1.0 / 256;
    Rect k0{0.45, 0.45, 0.55, 0.55}, k{0.44, 0.44, 0.56, 0.56};
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        Point b = m.barycenter(e);
        bool in_k0 = contains(k0, b), in_k = contains(k, b);
        if (in_k0)
            CHECK(m.region(e) == Region::Defect);
        else if (in_k)
            CHECK(m.region(e) == Region::Layer); // the whole 0.01 ring is Layer
        if (m.region(e) == Region::Layer) {
            // nothing beyond one element past K
            CHECK(b.x >= 0.44 - h);
            CHECK(b.x <= 0.56 + h);
            CHECK(b.y >= 0.44 - h);
            CHECK(b.y <= 0.56 + h);
        }
    }
}

TEST_CASE("porous layer elements touch a defect or lie in an explicit K ellipse")
{
    MeshSpec s;
    s.H_target = 1.0 / 8;
    s.h_target = 1.0 / 256;
    s.defect = porous_defect();
    s.base_n = 4;
    Mesh m = build_locally_refined_mesh(s);
    std::set<std::uint32_t> defect_vertices;
    std::size_t counts[3] = {0, 0, 0};
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        ++counts[static_cast<int>(m.region(e))];
        if (m.region(e) == Region::Defect)
            defect_vertices.insert(m.element(e).begin(), m.element(e).end());
    }
    CHECK(counts[0] > 0);
    CHECK(counts[1] > 0);
    CHECK(counts[0] + counts[1] + counts[2] == m.num_elements());
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        if (m.region(e) != Region::Layer)
            continue;
        bool touches = false;
        for (auto v : m.element(e))
            touches = touches || defect_vertices.count(v);
        CHECK((touches || contains_any(s.defect.k_shapes, m.barycenter(e))));
    }
}

TEST_CASE("edge neighbors are symmetric")
{
    Mesh m = build_locally_refined_mesh(well_spec(1.0 / 8, 1.0 / 32));
    auto nb = element_neighbors(m);
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        for (auto n : nb[e]) {
            if (n < 0)
                continue;
            const auto& back = nb[static_cast<std::size_t>(n)];
            CHECK(std::find(back.begin(), back.end(), static_cast<std::int64_t>(e)) != back.end());
        }
    }
}

TEST_CASE("mesh text format round-trips bit-exactly")
{
    Mesh m = build_locally_refined_mesh(well_spec(1.0 / 8, 1.0 / 64));
    std::stringstream ss;
    write_mesh(ss, m);
    Mesh r = read_mesh(ss);
    REQUIRE(r.num_vertices() == m.num_vertices());
    REQUIRE(r.num_elements() == m.num_elements());
    for (std::size_t v = 0; v < m.num_vertices(); ++v)
        CHECK(r.vertex(v) == m.vertex(v));
    CHECK(r.elements() == m.elements());
    CHECK(r.regions() == m.regions());

    std::stringstream bad("3 1\n0 0 1\n1 0 1\n0 1 1\n0 1 7 0\n");
    CHECK_THROWS(read_mesh(bad));
}

TEST_CASE("point location agrees with a brute-force scan")
{
    Mesh m = build_locally_refined_mesh(well_spec(1.0 / 4, 1.0 / 16));
    PointLocator loc(m);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        Point p{u(rng), u(rng)};
        CHECK(loc.locate(p) == oracle::locate(m, p));
    }
    // vertices and edge midpoints exercise the lowest-id tie-break
    for (std::size_t v = 0; v < m.num_vertices(); ++v)
        CHECK(loc.locate(m.vertex(v)) == oracle::locate(m, m.vertex(v)));
    CHECK_FALSE(loc.locate({1.5, 0.5}).has_value());
}

TEST_CASE("mesh constructor rejects bad input")
{
    std::vector<Point> v{{0, 0}, {1, 0}, {0, 1}};
    CHECK_THROWS_AS(Mesh(v, {{0, 1, 3}}), MeshError);
    CHECK_THROWS_AS(Mesh(v, {{0, 2, 1}}), MeshError); // clockwise
}
