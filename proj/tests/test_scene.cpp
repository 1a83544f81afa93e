#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "fixtures.hpp"
#include "hatnav/rng.hpp"
#include "oracles.hpp"

using namespace hatnav;
using fixtures::error_code_of;

namespace {

const char* kUnitCubeObj = R"(# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
)";

TriMesh single_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
  TriMesh m;
  m.vertices = {a, b, c};
  m.faces = {{0, 1, 2}};
  return m;
}

}  // namespace

TEST_CASE("parse_obj reads a minimal triangle") {
  const TriMesh m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  CHECK(m.vertices.size() == 3);
  REQUIRE(m.faces.size() == 1);
  CHECK(m.faces[0] == std::array<std::uint32_t, 3>{0, 1, 2});
}

TEST_CASE("parse_obj rejects out-of-range indices with the line number") {
  try {
    parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 5\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(e.code() == ErrorCode::kParseError);
  }
}

TEST_CASE("parse_obj handles slashes, negative indices, polygons and unknown records") {
  const TriMesh m = parse_obj(
      "o thing\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nvt 0 0\n"
      "usemtl none\nf 1/1/1 2//1 3/2 4\nf -4 -3 -1\n");
  CHECK(m.vertices.size() == 4);
  REQUIRE(m.faces.size() == 3);
  CHECK(m.faces[0] == std::array<std::uint32_t, 3>{0, 1, 2});
  CHECK(m.faces[1] == std::array<std::uint32_t, 3>{0, 2, 3});
  CHECK(m.faces[2] == std::array<std::uint32_t, 3>{0, 1, 3});
}

TEST_CASE("parse_obj errors") {
  CHECK(error_code_of([] { parse_obj("v 0 0 0\nv 1 0 0\n"); }) == ErrorCode::kEmptyMesh);
  CHECK(error_code_of([] { parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 1 2\n"); }) == ErrorCode::kParseError);
  CHECK(error_code_of([] { parse_obj("v 0 zero 0\n"); }) == ErrorCode::kParseError);
  CHECK(error_code_of([] { load_mesh("/nonexistent/mesh.obj"); }) == ErrorCode::kFileNotFound);
}

TEST_CASE("unit cube OBJ has the known topology and bounds") {
  const TriMesh m = parse_obj(kUnitCubeObj);
  CHECK(m.vertices.size() == 8);
  CHECK(m.faces.size() == 12);
  const Aabb3 b = m.bounds();
  CHECK(b.extents().isApprox(Vec3(1, 1, 1)));
  CHECK(m.surface_area() == doctest::Approx(6.0));
  // Closed surface: every undirected edge is shared by exactly two faces.
  std::map<std::pair<int, int>, int> edges;
  for (const auto& f : m.faces) {
    for (int k = 0; k < 3; ++k) {
      const int a = static_cast<int>(f[k]);
      const int c = static_cast<int>(f[(k + 1) % 3]);
      ++edges[{std::min(a, c), std::max(a, c)}];
    }
  }
  CHECK(edges.size() == 18);
  for (const auto& [e, n] : edges) CHECK(n == 2);
}

TEST_CASE("PLY mesh and point I/O") {
  const std::string ply =
      "ply\nformat ascii 1.0\ncomment test\nelement vertex 4\nproperty float x\nproperty float y\n"
      "property float z\nproperty uchar red\nelement face 1\nproperty list uchar int vertex_indices\n"
      "end_header\n0 0 0 255\n1 0 0 255\n1 1 0 255\n0 1 0 255\n4 0 1 2 3\n";
  const TriMesh m = parse_ply_mesh(ply);
  CHECK(m.vertices.size() == 4);
  CHECK(m.faces.size() == 2);
  CHECK(parse_ply_points(ply).points.size() == 4);

  CHECK(error_code_of([] {
          parse_ply_mesh("ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n");
        }) == ErrorCode::kParseError);

  PointCloud cloud;
  Rng rng(3);
  for (int i = 0; i < 50; ++i) cloud.points.emplace_back(rng.uniform(-5, 5), rng.normal(), 1e-7 * rng.uniform());
  const PointCloud back = parse_ply_points(format_ply_points(cloud));
  REQUIRE(back.points.size() == cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) CHECK(back.points[i] == cloud.points[i]);
}

TEST_CASE("write_obj and load_mesh round trip") {
  const auto dir = fixtures::temp_dir("obj_roundtrip");
  const TriMesh m = gen_scene(fixtures::arch_scene());
  write_obj(m, dir / "arch.obj");
  const TriMesh back = load_mesh(dir / "arch.obj");
  CHECK(back.vertices == m.vertices);
  CHECK(back.faces == m.faces);
}

TEST_CASE("gen_scene geometry") {
  SUBCASE("5x5 floor with an arch keeps a 5x5 footprint") {
    const TriMesh m = gen_scene(SceneSpec{{fixtures::floor_slab(5, 5), fixtures::arch(2.5, 2.5, 1.2, 0.25)}});
    const Aabb3 b = m.bounds();
    CHECK(b.extents().x() == doctest::Approx(5.0));
    CHECK(b.extents().y() == doctest::Approx(5.0));
  }
  SUBCASE("box AABB is analytic") {
    const TriMesh m = gen_scene(SceneSpec{{fixtures::box(1, 1, 0.1, 0.4, 0.4, 0.2)}});
    const Aabb3 b = m.bounds();
    CHECK(b.min.isApprox(Vec3(0.8, 0.8, 0.0)));
    CHECK(b.max.isApprox(Vec3(1.2, 1.2, 0.2)));
    CHECK(m.vertices.size() == 8);
    CHECK(m.faces.size() == 12);
  }
  SUBCASE("invalid specs") {
    CHECK(error_code_of([] { gen_scene(SceneSpec{}); }) == ErrorCode::kEmptyMesh);
    CHECK(error_code_of([] { gen_scene(SceneSpec{{fixtures::box(0, 0, 0, 0.0, 1, 1)}}); }) ==
          ErrorCode::kInvalidSpec);
    CHECK(error_code_of([] { gen_scene(SceneSpec{{fixtures::floor_slab(-1, 1)}}); }) == ErrorCode::kInvalidSpec);
    auto bad = fixtures::arch(0, 0, 1.0, 0.25);
    bad.lintel_thickness = 0.0;
    CHECK(error_code_of([&] { gen_scene(SceneSpec{{bad}}); }) == ErrorCode::kInvalidSpec);
    auto narrow = fixtures::arch(0, 0, 0.1, 0.25);  // pillars fill the span
    CHECK(error_code_of([&] { gen_scene(SceneSpec{{narrow}}); }) == ErrorCode::kInvalidSpec);
  }
}

TEST_CASE("arch opening: vertical ray gap equals the clearance") {
  for (char axis : {'x', 'y'}) {
    for (double clearance : {0.18, 0.25, 0.3137}) {
      const TriMesh m = gen_scene(SceneSpec{{fixtures::floor_slab(3, 3), fixtures::arch(1.5, 1.5, 1.2, clearance, axis)}});
      auto hits = oracle::ray_mesh(Vec3(1.5, 1.5, 10.0), Vec3(0, 0, -1), m);
      hits.erase(std::unique(hits.begin(), hits.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 hits.end());
      // lintel top, lintel bottom, floor top, floor bottom
      REQUIRE(hits.size() == 4);
      CHECK(std::abs((hits[2] - hits[1]) - clearance) < 1e-9);
      CHECK(std::abs(10.0 - hits[2]) < 1e-12);  // floor top at z = 0
    }
  }
}

TEST_CASE("voxelize basics") {
  SUBCASE("triangle inside one voxel") {
    const TriMesh m = single_triangle({0.11, 0.12, 0.13}, {0.14, 0.12, 0.13}, {0.12, 0.16, 0.14});
    const VoxelGrid g = voxelize(m, 0.1, Aabb3{Vec3::Zero(), Vec3::Constant(1.0)});
    CHECK(g.occupied_count() == 1);
    CHECK(g.occupied({1, 1, 1}));
  }
  SUBCASE("unit cube at 0.5 m is a 26-voxel shell") {
    const VoxelGrid g = voxelize(parse_obj(kUnitCubeObj), 0.5);
    CHECK(g.dims() == VoxelGrid::Index3{5, 5, 5});
    CHECK(g.origin().isApprox(Vec3::Constant(-0.5)));
    int corners = 0, edges = 0, faces = 0;
    for (int z = 1; z <= 3; ++z) {
      for (int y = 1; y <= 3; ++y) {
        for (int x = 1; x <= 3; ++x) {
          const int on_boundary = (x != 2) + (y != 2) + (z != 2);
          if (on_boundary == 0) {
            CHECK_FALSE(g.occupied({x, y, z}));
            continue;
          }
          CHECK(g.occupied({x, y, z}));
          (on_boundary == 3 ? corners : on_boundary == 2 ? edges : faces)++;
        }
      }
    }
    CHECK(corners == 8);
    CHECK(edges == 12);
    CHECK(faces == 6);
    CHECK(g.occupied_count() == 26);
  }
  SUBCASE("errors") {
    const TriMesh m = parse_obj(kUnitCubeObj);
    CHECK(error_code_of([&] { voxelize(m, 0.0); }) == ErrorCode::kInvalidResolution);
    CHECK(error_code_of([&] { voxelize(m, -1.0); }) == ErrorCode::kInvalidResolution);
    CHECK(error_code_of([&] { voxelize(m, 0.1, Aabb3{Vec3::Zero(), Vec3(1, 0, 1)}); }) ==
          ErrorCode::kDegenerateBounds);
  }
}

TEST_CASE("voxel index round trip") {
  const VoxelGrid g(Vec3(-1.3, 0.2, -0.07), 0.05, {40, 30, 20});
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const VoxelGrid::Index3 idx{static_cast<int>(rng.below(40)), static_cast<int>(rng.below(30)),
                                static_cast<int>(rng.below(20))};
    CHECK(g.index_of(g.center(idx)) == idx);
    CHECK(g.unlinear(g.linear(idx)) == idx);
    const Aabb3 box = g.voxel_box(idx);
    const Vec3 p = box.min + (box.max - box.min).cwiseProduct(Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
    CHECK(g.index_of(p) == idx);
  }
}

TEST_CASE("voxelize equals the exact overlap oracle") {
  Rng rng(5);
  SUBCASE("generated scenes") {
    for (const auto& spec : {fixtures::arch_scene(), fixtures::table_scene(), fixtures::low_box_scene()}) {
      const TriMesh m = gen_scene(spec);
      const VoxelGrid g = voxelize(m, 0.05);
      CHECK(g == oracle::sat_voxelize(m, g));
    }
  }
  SUBCASE("random tilted triangles") {
    for (int t = 0; t < 30; ++t) {
      TriMesh m;
      for (int k = 0; k < 3; ++k) m.vertices.emplace_back(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1));
      m.faces = {{0, 1, 2}};
      const VoxelGrid g = voxelize(m, 0.1, Aabb3{Vec3::Zero(), Vec3::Constant(1.0)});
      CHECK(g == oracle::sat_voxelize(m, g));
    }
  }
}

TEST_CASE("voxelization soundness: every surface sample lies in an occupied voxel") {
  Rng rng(17);
  TriMesh tilted;
  for (int t = 0; t < 40; ++t) {
    const auto base = static_cast<std::uint32_t>(tilted.vertices.size());
    for (int k = 0; k < 3; ++k) tilted.vertices.emplace_back(rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 1));
    tilted.faces.push_back({base, base + 1, base + 2});
  }
  const std::vector<TriMesh> meshes = {gen_scene(fixtures::arch_scene()), gen_scene(fixtures::table_scene()), tilted};
  for (const auto& m : meshes) {
    const PointCloud samples = sample_surface(m, 2000.0, 9);
    for (double res : {0.05, 0.1, 0.2}) {
      const VoxelGrid g = voxelize(m, res);
      std::size_t missing = 0;
      for (const auto& p : samples.points) missing += g.occupied(g.index_of(p)) ? 0 : 1;
      CHECK(missing == 0);
    }
  }
}

TEST_CASE("resolution monotonicity: coarse voxels contain fine occupied voxels") {
  for (const auto& spec : {fixtures::arch_scene(), fixtures::room_scene()}) {
    const TriMesh m = gen_scene(spec);
    const VoxelGrid coarse = voxelize(m, 0.1);
    const VoxelGrid fine = voxelize(m, 0.05, coarse.bounds());
    REQUIRE(fine.dims()[0] == 2 * coarse.dims()[0]);
    std::size_t violations = 0;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      if (!coarse.occupied(i)) continue;
      const auto c = coarse.unlinear(i);
      bool any = false;
      for (int dz = 0; dz < 2 && !any; ++dz) {
        for (int dy = 0; dy < 2 && !any; ++dy) {
          for (int dx = 0; dx < 2 && !any; ++dx) any = fine.occupied({2 * c[0] + dx, 2 * c[1] + dy, 2 * c[2] + dz});
        }
      }
      violations += any ? 0 : 1;
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("sample_surface") {
  SUBCASE("single triangle: count and planarity") {
    const TriMesh m = single_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0.0});
    const PointCloud c = sample_surface(m, 100.0, 1);
    CHECK(c.points.size() == 50);
    for (const auto& p : c.points) {
      CHECK(std::abs(p.z()) < 1e-9);
      CHECK(p.x() >= -1e-12);
      CHECK(p.y() >= -1e-12);
      CHECK(p.x() + p.y() <= 1.0 + 1e-12);
    }
  }
  SUBCASE("deterministic under seed") {
    const TriMesh m = gen_scene(fixtures::table_scene());
    CHECK(sample_surface(m, 500, 42).points == sample_surface(m, 500, 42).points);
    CHECK(sample_surface(m, 500, 42).points != sample_surface(m, 500, 43).points);
  }
  SUBCASE("unit cube points lie on the surface") {
    const TriMesh m = parse_obj(kUnitCubeObj);
    const PointCloud c = sample_surface(m, 1000.0, 7);
    CHECK(c.points.size() == 6000);
    double worst = 0.0;
    for (const auto& p : c.points) {
      double d = std::numeric_limits<double>::infinity();
      for (const auto& f : m.faces) {
        d = std::min(d, oracle::point_triangle_distance(p, m.vertices[f[0]], m.vertices[f[1]], m.vertices[f[2]]));
      }
      worst = std::max(worst, d);
    }
    CHECK(worst < 1e-9);
  }
  SUBCASE("errors") {
    CHECK(error_code_of([] { sample_surface(TriMesh{}, 10, 1); }) == ErrorCode::kEmptyMesh);
    CHECK(error_code_of([] { sample_surface(parse_obj(kUnitCubeObj), 0.0, 1); }) == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("thin_points keeps a separated subset") {
  Rng rng(2);
  PointCloud c;
  for (int i = 0; i < 3000; ++i) c.points.emplace_back(rng.uniform(), rng.uniform(), rng.uniform(0, 0.2));
  const PointCloud t = thin_points(c, 0.05);
  CHECK(!t.points.empty());
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    for (std::size_t j = i + 1; j < t.points.size(); ++j) CHECK((t.points[i] - t.points[j]).norm() >= 0.05);
  }
  // Every dropped point is close to a kept one.
  for (const auto& p : c.points) CHECK(oracle::nearest_distance(t.points, p) < 0.05 + 1e-12);
}

TEST_CASE("voxelize_points marks containing voxels") {
  const VoxelGrid like(Vec3::Zero(), 0.1, {10, 10, 10});
  PointCloud c;
  c.points = {{0.05, 0.05, 0.05}, {0.25, 0.35, 0.95}, {2.0, 0.0, 0.0}};
  const VoxelGrid g = voxelize_points(c, like);
  CHECK(g.occupied_count() == 2);
  CHECK(g.occupied({0, 0, 0}));
  CHECK(g.occupied({2, 3, 9}));
}
