#include "hatnav/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "hatnav/error.hpp"
#include "hatnav/rng.hpp"

namespace hatnav {

// ---------------------------------------------------------------------------
// TriMesh / PointCloud

void TriMesh::validate() const {
  const auto n = vertices.size();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& t = faces[f];
    for (auto i : t) {
      if (i >= n) throw ParseError(0, "face " + std::to_string(f) + " index out of range");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw ParseError(0, "face " + std::to_string(f) + " repeats a vertex");
    }
  }
}

Aabb3 TriMesh::bounds() const {
  Aabb3 box;
  for (const auto& v : vertices) box.extend(v);
  return box;
}

double TriMesh::surface_area() const {
  double area = 0.0;
  for (const auto& f : faces) {
    area += 0.5 * (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]).norm();
  }
  return area;
}

void TriMesh::append(const TriMesh& other) {
  const auto base = static_cast<std::uint32_t>(vertices.size());
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  for (const auto& f : other.faces) faces.push_back({f[0] + base, f[1] + base, f[2] + base});
}

Aabb3 PointCloud::bounds() const {
  Aabb3 box;
  for (const auto& p : points) box.extend(p);
  return box;
}

// ---------------------------------------------------------------------------
// VoxelGrid

VoxelGrid::VoxelGrid(const Vec3& origin, double resolution, const Index3& dims)
    : origin_(origin), resolution_(resolution), dims_(dims) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw Error(ErrorCode::kInvalidResolution, "voxel resolution must be positive");
  }
  if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0) {
    throw Error(ErrorCode::kDegenerateBounds, "voxel grid dimensions must be positive");
  }
  occupancy_.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
}

bool VoxelGrid::in_bounds(const Index3& idx) const {
  for (int a = 0; a < 3; ++a) {
    if (idx[a] < 0 || idx[a] >= dims_[a]) return false;
  }
  return true;
}

VoxelGrid::Index3 VoxelGrid::unlinear(std::size_t i) const {
  const auto nx = static_cast<std::size_t>(dims_[0]);
  const auto ny = static_cast<std::size_t>(dims_[1]);
  return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny), static_cast<int>(i / (nx * ny))};
}

VoxelGrid::Index3 VoxelGrid::index_of(const Vec3& p) const {
  Index3 idx;
  for (int a = 0; a < 3; ++a) {
    idx[a] = static_cast<int>(std::floor((p[a] - origin_[a]) / resolution_ + kVoxelFaceBias));
  }
  return idx;
}

Vec3 VoxelGrid::center(const Index3& idx) const {
  return origin_ + resolution_ * Vec3(idx[0] + 0.5, idx[1] + 0.5, idx[2] + 0.5);
}

Aabb3 VoxelGrid::voxel_box(const Index3& idx) const {
  Aabb3 box;
  box.min = origin_ + resolution_ * Vec3(idx[0], idx[1], idx[2]);
  box.max = box.min + Vec3::Constant(resolution_);
  return box;
}

Aabb3 VoxelGrid::bounds() const {
  Aabb3 box;
  box.min = origin_;
  box.max = origin_ + resolution_ * Vec3(dims_[0], dims_[1], dims_[2]);
  return box;
}

std::size_t VoxelGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), std::uint8_t{1}));
}

// ---------------------------------------------------------------------------
// Scene generation

TriMesh make_box(const Aabb3& box) {
  TriMesh mesh;
  const Vec3& a = box.min;
  const Vec3& b = box.max;
  mesh.vertices = {
      {a.x(), a.y(), a.z()}, {b.x(), a.y(), a.z()}, {b.x(), b.y(), a.z()}, {a.x(), b.y(), a.z()},
      {a.x(), a.y(), b.z()}, {b.x(), a.y(), b.z()}, {b.x(), b.y(), b.z()}, {a.x(), b.y(), b.z()},
  };
  // Counter-clockwise seen from outside.
  mesh.faces = {
      {0, 2, 1}, {0, 3, 2},  // -z
      {4, 5, 6}, {4, 6, 7},  // +z
      {0, 1, 5}, {0, 5, 4},  // -y
      {3, 7, 6}, {3, 6, 2},  // +y
      {0, 4, 7}, {0, 7, 3},  // -x
      {1, 2, 6}, {1, 6, 5},  // +x
  };
  return mesh;
}

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidSpec, std::string(what) + " must be a positive finite number");
  }
}

void require_finite(const auto& v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorCode::kInvalidSpec, std::string(what) + " must be finite");
}

Aabb3 make_aabb(const Vec3& lo, const Vec3& hi) {
  Aabb3 box;
  box.min = lo;
  box.max = hi;
  return box;
}

TriMesh build(const FloorSlab& f) {
  require_positive(f.width, "floor width");
  require_positive(f.depth, "floor depth");
  require_positive(f.thickness, "floor thickness");
  require_finite(f.corner, "floor corner");
  return make_box(make_aabb({f.corner.x(), f.corner.y(), -f.thickness},
                            {f.corner.x() + f.width, f.corner.y() + f.depth, 0.0}));
}

TriMesh build(const BoxPrimitive& b) {
  for (int a = 0; a < 3; ++a) require_positive(b.extents[a], "box extent");
  require_finite(b.center, "box center");
  return make_box(make_aabb(b.center - 0.5 * b.extents, b.center + 0.5 * b.extents));
}

TriMesh build(const ArchPrimitive& arch) {
  require_positive(arch.span, "arch span");
  require_positive(arch.pillar_width, "arch pillar width");
  require_positive(arch.clearance, "arch clearance");
  require_positive(arch.depth, "arch depth");
  require_positive(arch.lintel_thickness, "arch lintel thickness");
  require_finite(arch.center, "arch center");
  if (arch.clearance >= arch.total_height()) {
    throw Error(ErrorCode::kInvalidSpec, "arch clearance must be below its total height");
  }
  if (arch.span <= 2.0 * arch.pillar_width) {
    throw Error(ErrorCode::kInvalidSpec, "arch span must exceed twice the pillar width");
  }
  if (arch.span_axis != 'x' && arch.span_axis != 'y') {
    throw Error(ErrorCode::kInvalidSpec, "arch span axis must be 'x' or 'y'");
  }
  // Built with the span along x, then swapped if needed.
  const double s0 = -0.5 * arch.span;
  const double s1 = 0.5 * arch.span;
  const double d0 = -0.5 * arch.depth;
  const double d1 = 0.5 * arch.depth;
  const double top = arch.total_height();
  const std::array<std::pair<Vec3, Vec3>, 3> parts{{
      {{s0, d0, 0.0}, {s0 + arch.pillar_width, d1, arch.clearance}},
      {{s1 - arch.pillar_width, d0, 0.0}, {s1, d1, arch.clearance}},
      {{s0, d0, arch.clearance}, {s1, d1, top}},
  }};
  TriMesh mesh;
  for (const auto& [lo, hi] : parts) {
    Vec3 a = lo;
    Vec3 b = hi;
    if (arch.span_axis == 'y') {
      std::swap(a.x(), a.y());
      std::swap(b.x(), b.y());
    }
    const Vec3 offset(arch.center.x(), arch.center.y(), 0.0);
    mesh.append(make_box(make_aabb(a + offset, b + offset)));
  }
  return mesh;
}

}  // namespace

TriMesh gen_scene(const SceneSpec& spec) {
  if (spec.primitives.empty()) throw Error(ErrorCode::kEmptyMesh, "scene has no primitives");
  TriMesh mesh;
  for (const auto& prim : spec.primitives) {
    mesh.append(std::visit([](const auto& p) { return build(p); }, prim));
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// File I/O

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kFileNotFound, "cannot write " + path.string());
  out << text;
}

namespace {

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_double(std::string_view tok, std::size_t line) {
  const std::string s(tok);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ParseError(line, "invalid number '" + s + "'");
  }
  return v;
}

long parse_long(std::string_view tok, std::size_t line) {
  const std::string s(tok);
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) throw ParseError(line, "invalid integer '" + s + "'");
  return v;
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!fn(line_no, line)) return;
    if (end == text.size()) break;
    pos = end + 1;
  }
}

void push_polygon(TriMesh& mesh, const std::vector<std::uint32_t>& poly, std::size_t line) {
  if (poly.size() < 3) throw ParseError(line, "face needs at least three vertices");
  for (std::size_t i = 0; i < poly.size(); ++i) {
    for (std::size_t j = i + 1; j < poly.size(); ++j) {
      if (poly[i] == poly[j]) throw ParseError(line, "face references the same vertex twice");
    }
  }
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
}

}  // namespace

TriMesh parse_obj(const std::string& text) {
  TriMesh mesh;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto tok = tokenize(line);
    if (tok.empty() || tok[0].front() == '#') return true;
    if (tok[0] == "v") {
      if (tok.size() < 4) throw ParseError(line_no, "vertex needs three coordinates");
      mesh.vertices.emplace_back(parse_double(tok[1], line_no), parse_double(tok[2], line_no),
                                 parse_double(tok[3], line_no));
    } else if (tok[0] == "f") {
      std::vector<std::uint32_t> poly;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const auto slash = tok[i].find('/');
        long idx = parse_long(tok[i].substr(0, slash), line_no);
        const long n = static_cast<long>(mesh.vertices.size());
        if (idx < 0) idx = n + idx + 1;
        if (idx < 1 || idx > n) throw ParseError(line_no, "face index out of range");
        poly.push_back(static_cast<std::uint32_t>(idx - 1));
      }
      push_polygon(mesh, poly, line_no);
    }
    return true;
  });
  if (mesh.faces.empty()) throw Error(ErrorCode::kEmptyMesh, "OBJ contains no faces");
  return mesh;
}

namespace {

struct PlyProperty {
  std::string name;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyData {
  std::vector<Vec3> vertices;
  std::vector<std::vector<std::uint32_t>> polygons;
  std::vector<std::size_t> polygon_lines;
};

PlyData parse_ply(const std::string& text) {
  std::vector<PlyElement> elements;
  bool header_done = false;
  bool saw_magic = false;
  std::size_t element_idx = 0;
  std::size_t row = 0;
  PlyData data;
  int vx = -1, vy = -1, vz = -1, face_list = -1;

  auto start_element = [&](std::size_t idx) {
    vx = vy = vz = face_list = -1;
    if (idx >= elements.size()) return;
    const auto& el = elements[idx];
    for (std::size_t p = 0; p < el.properties.size(); ++p) {
      const auto& prop = el.properties[p];
      if (prop.name == "x") vx = static_cast<int>(p);
      if (prop.name == "y") vy = static_cast<int>(p);
      if (prop.name == "z") vz = static_cast<int>(p);
      if (prop.is_list && (prop.name == "vertex_indices" || prop.name == "vertex_index")) face_list = static_cast<int>(p);
    }
    if (el.name == "vertex" && (vx < 0 || vy < 0 || vz < 0)) throw ParseError(0, "vertex element lacks x/y/z");
  };

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto tok = tokenize(line);
    if (!header_done) {
      if (!saw_magic) {
        if (tok.empty() || tok[0] != "ply") throw ParseError(line_no, "missing 'ply' magic");
        saw_magic = true;
        return true;
      }
      if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") return true;
      if (tok[0] == "format") {
        if (tok.size() < 2 || tok[1] != "ascii") throw ParseError(line_no, "only ASCII PLY is supported");
      } else if (tok[0] == "element") {
        if (tok.size() < 3) throw ParseError(line_no, "malformed element line");
        elements.push_back({std::string(tok[1]), static_cast<std::size_t>(parse_long(tok[2], line_no)), {}});
      } else if (tok[0] == "property") {
        if (elements.empty()) throw ParseError(line_no, "property before element");
        if (tok.size() >= 5 && tok[1] == "list") {
          elements.back().properties.push_back({std::string(tok[4]), true});
        } else if (tok.size() >= 3) {
          elements.back().properties.push_back({std::string(tok[2]), false});
        } else {
          throw ParseError(line_no, "malformed property line");
        }
      } else if (tok[0] == "end_header") {
        header_done = true;
        element_idx = 0;
        row = 0;
        while (element_idx < elements.size() && elements[element_idx].count == 0) ++element_idx;
        start_element(element_idx);
      } else {
        throw ParseError(line_no, "unexpected header line");
      }
      return true;
    }
    if (element_idx >= elements.size()) return tok.empty() ? true : false;
    if (tok.empty()) return true;
    const auto& el = elements[element_idx];
    // Walk the properties, honouring list lengths.
    std::vector<double> scalars(el.properties.size(), 0.0);
    std::vector<std::uint32_t> list;
    std::size_t t = 0;
    for (std::size_t p = 0; p < el.properties.size(); ++p) {
      if (t >= tok.size()) throw ParseError(line_no, "too few values for element '" + el.name + "'");
      if (el.properties[p].is_list) {
        const long n = parse_long(tok[t++], line_no);
        if (n < 0 || t + static_cast<std::size_t>(n) > tok.size()) throw ParseError(line_no, "bad list length");
        for (long k = 0; k < n; ++k) {
          const long v = parse_long(tok[t++], line_no);
          if (static_cast<int>(p) == face_list) {
            if (v < 0) throw ParseError(line_no, "negative face index");
            list.push_back(static_cast<std::uint32_t>(v));
          }
        }
      } else {
        scalars[p] = parse_double(tok[t++], line_no);
      }
    }
    if (el.name == "vertex") {
      data.vertices.emplace_back(scalars[vx], scalars[vy], scalars[vz]);
    } else if (el.name == "face" && face_list >= 0) {
      data.polygons.push_back(std::move(list));
      data.polygon_lines.push_back(line_no);
    }
    if (++row == el.count) {
      row = 0;
      ++element_idx;
      while (element_idx < elements.size() && elements[element_idx].count == 0) ++element_idx;
      start_element(element_idx);
    }
    return true;
  });
  if (!header_done) throw ParseError(0, "PLY header not terminated");
  if (element_idx < elements.size()) throw ParseError(0, "PLY body ends before all elements were read");
  return data;
}

}  // namespace

TriMesh parse_ply_mesh(const std::string& text) {
  PlyData data = parse_ply(text);
  TriMesh mesh;
  mesh.vertices = std::move(data.vertices);
  for (std::size_t i = 0; i < data.polygons.size(); ++i) {
    for (auto idx : data.polygons[i]) {
      if (idx >= mesh.vertices.size()) throw ParseError(data.polygon_lines[i], "face index out of range");
    }
    push_polygon(mesh, data.polygons[i], data.polygon_lines[i]);
  }
  if (mesh.faces.empty()) throw Error(ErrorCode::kEmptyMesh, "PLY contains no faces");
  return mesh;
}

PointCloud parse_ply_points(const std::string& text) {
  PointCloud cloud;
  cloud.points = parse_ply(text).vertices;
  return cloud;
}

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

TriMesh load_mesh(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const std::string ext = lower_extension(path);
  if (ext == ".obj") return parse_obj(text);
  if (ext == ".ply") return parse_ply_mesh(text);
  throw ParseError(0, "unsupported mesh extension '" + ext + "'");
}

PointCloud load_point_cloud(const std::filesystem::path& path) {
  return parse_ply_points(read_text_file(path));
}

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

void write_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  std::string out;
  out.reserve(mesh.vertices.size() * 64 + mesh.faces.size() * 24);
  for (const auto& v : mesh.vertices) {
    out += "v ";
    append_number(out, v.x());
    out += ' ';
    append_number(out, v.y());
    out += ' ';
    append_number(out, v.z());
    out += '\n';
  }
  for (const auto& f : mesh.faces) {
    out += "f " + std::to_string(f[0] + 1) + ' ' + std::to_string(f[1] + 1) + ' ' + std::to_string(f[2] + 1) + '\n';
  }
  write_text_file(path, out);
}

std::string format_ply_points(const PointCloud& cloud) {
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.points.size()) +
                    "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  for (const auto& p : cloud.points) {
    append_number(out, p.x());
    out += ' ';
    append_number(out, p.y());
    out += ' ';
    append_number(out, p.z());
    out += '\n';
  }
  return out;
}

void write_ply_points(const PointCloud& cloud, const std::filesystem::path& path) {
  write_text_file(path, format_ply_points(cloud));
}

// ---------------------------------------------------------------------------
// Voxelization

namespace {

void mark_point(VoxelGrid& grid, const Vec3& p) {
  const auto idx = grid.index_of(p);
  if (grid.in_bounds(idx)) grid.set(idx);
}

// Projection interval of the triangle (relative to the box center) against
// the box's projection radius on `axis`.
bool separating_axis(const Vec3& axis, const Vec3 (&v)[3], const Vec3& half) {
  const double p0 = axis.dot(v[0]);
  const double p1 = axis.dot(v[1]);
  const double p2 = axis.dot(v[2]);
  const double r = half.dot(axis.cwiseAbs());
  return std::min({p0, p1, p2}) > r || std::max({p0, p1, p2}) < -r;
}

bool overlaps_box(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& center, const Vec3& half) {
  const Vec3 v[3] = {a - center, b - center, c - center};
  for (int k = 0; k < 3; ++k) {
    if (std::min({v[0][k], v[1][k], v[2][k]}) > half[k] || std::max({v[0][k], v[1][k], v[2][k]}) < -half[k]) {
      return false;
    }
  }
  const Vec3 e[3] = {v[1] - v[0], v[2] - v[1], v[0] - v[2]};
  const Vec3 normal = e[0].cross(e[1]);
  if (normal.squaredNorm() > 0.0 && separating_axis(normal, v, half)) return false;
  for (const auto& edge : e) {
    for (int k = 0; k < 3; ++k) {
      const Vec3 axis = Vec3::Unit(k).cross(edge);
      if (axis.squaredNorm() > 0.0 && separating_axis(axis, v, half)) return false;
    }
  }
  return true;
}

}  // namespace

VoxelGrid voxelize(const TriMesh& mesh, double resolution, const std::optional<Aabb3>& bounds) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw Error(ErrorCode::kInvalidResolution, "resolution must be positive");
  }
  if (mesh.faces.empty()) throw Error(ErrorCode::kEmptyMesh, "cannot voxelize an empty mesh");
  mesh.validate();

  Vec3 origin;
  VoxelGrid::Index3 dims;
  if (bounds) {
    if (!bounds->min.allFinite() || !bounds->max.allFinite() || !(bounds->max.array() > bounds->min.array()).all()) {
      throw Error(ErrorCode::kDegenerateBounds, "voxelization bounds must have positive extent");
    }
    origin = bounds->min;
    for (int a = 0; a < 3; ++a) {
      dims[a] = std::max(1, static_cast<int>(std::ceil((bounds->max[a] - bounds->min[a]) / resolution - 1e-9)));
    }
  } else {
    const Aabb3 box = mesh.bounds();
    if (!box.min.allFinite() || !box.max.allFinite()) {
      throw Error(ErrorCode::kDegenerateBounds, "mesh bounds are not finite");
    }
    origin = box.min - Vec3::Constant(resolution);
    for (int a = 0; a < 3; ++a) {
      dims[a] = static_cast<int>(std::floor((box.max[a] - box.min[a]) / resolution + kVoxelFaceBias)) + 3;
    }
  }

  VoxelGrid grid(origin, resolution, dims);
  const double spacing = 0.5 * resolution;
  const Vec3 half = Vec3::Constant(0.5 * resolution);
  // Boxes are shifted by the face bias so the overlap test agrees with
  // index_of on shared faces.
  const Vec3 shift = Vec3::Constant(0.5 * resolution - kVoxelFaceBias * resolution);
  for (const auto& f : mesh.faces) {
    const Vec3& v0 = mesh.vertices[f[0]];
    const Vec3& v1 = mesh.vertices[f[1]];
    const Vec3& v2 = mesh.vertices[f[2]];
    const Vec3 e1 = v1 - v0;
    const Vec3 e2 = v2 - v0;
    const double longest = std::max({e1.norm(), e2.norm(), (e2 - e1).norm()});
    const int n = std::max(1, static_cast<int>(std::ceil(longest / spacing)));
    const double inv = 1.0 / n;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; i + j <= n; ++j) {
        mark_point(grid, v0 + (i * inv) * e1 + (j * inv) * e2);
      }
    }
    mark_point(grid, v0);
    mark_point(grid, v1);
    mark_point(grid, v2);

    // The lattice can step over voxels that a tilted triangle only clips at
    // a corner; an exact overlap pass over the bounding range catches those.
    const auto lo = grid.index_of(v0.cwiseMin(v1).cwiseMin(v2));
    const auto hi = grid.index_of(v0.cwiseMax(v1).cwiseMax(v2));
    std::array<int, 3> a{}, b{};
    for (int k = 0; k < 3; ++k) {
      a[k] = std::max(0, lo[k] - 1);
      b[k] = std::min(dims[k] - 1, hi[k] + 1);
    }
    for (int z = a[2]; z <= b[2]; ++z) {
      for (int y = a[1]; y <= b[1]; ++y) {
        for (int x = a[0]; x <= b[0]; ++x) {
          if (grid.occupied({x, y, z})) continue;
          const Vec3 center = origin + Vec3(x, y, z) * resolution + shift;
          if (overlaps_box(v0, v1, v2, center, half)) grid.set({x, y, z});
        }
      }
    }
  }
  return grid;
}

VoxelGrid voxelize_points(const PointCloud& cloud, const VoxelGrid& like) {
  VoxelGrid grid = like.empty_like();
  for (const auto& p : cloud.points) mark_point(grid, p);
  return grid;
}

PointCloud sample_surface(const TriMesh& mesh, double density, std::uint64_t seed) {
  if (!(density > 0.0) || !std::isfinite(density)) {
    throw Error(ErrorCode::kInvalidArgument, "sampling density must be positive");
  }
  if (mesh.faces.empty()) throw Error(ErrorCode::kEmptyMesh, "cannot sample an empty mesh");
  std::vector<double> cumulative;
  cumulative.reserve(mesh.faces.size());
  double total = 0.0;
  for (const auto& f : mesh.faces) {
    total += 0.5 * (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]).norm();
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kEmptyMesh, "mesh has zero surface area");

  const auto count = static_cast<std::size_t>(std::llround(total * density));
  PointCloud cloud;
  cloud.points.reserve(count);
  Rng rng(seed);
  for (std::size_t s = 0; s < count; ++s) {
    const double pick = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& f = mesh.faces[static_cast<std::size_t>(it - cumulative.begin())];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    cloud.points.push_back((1.0 - r1) * mesh.vertices[f[0]] + r1 * (1.0 - r2) * mesh.vertices[f[1]] +
                           r1 * r2 * mesh.vertices[f[2]]);
  }
  return cloud;
}

PointCloud thin_points(const PointCloud& cloud, double min_distance) {
  if (!(min_distance > 0.0)) return cloud;
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const {
      return static_cast<std::size_t>(k[0] * 73856093LL ^ k[1] * 19349663LL ^ k[2] * 83492791LL);
    }
  };
  std::unordered_map<std::array<std::int64_t, 3>, std::vector<std::size_t>, KeyHash> buckets;
  PointCloud kept;
  const double d2 = min_distance * min_distance;
  for (const auto& p : cloud.points) {
    const std::array<std::int64_t, 3> c{static_cast<std::int64_t>(std::floor(p.x() / min_distance)),
                                        static_cast<std::int64_t>(std::floor(p.y() / min_distance)),
                                        static_cast<std::int64_t>(std::floor(p.z() / min_distance))};
    bool close = false;
    for (int dx = -1; dx <= 1 && !close; ++dx) {
      for (int dy = -1; dy <= 1 && !close; ++dy) {
        for (int dz = -1; dz <= 1 && !close; ++dz) {
          auto it = buckets.find({c[0] + dx, c[1] + dy, c[2] + dz});
          if (it == buckets.end()) continue;
          for (auto k : it->second) {
            if ((kept.points[k] - p).squaredNorm() < d2) {
              close = true;
              break;
            }
          }
        }
      }
    }
    if (close) continue;
    buckets[c].push_back(kept.points.size());
    kept.points.push_back(p);
  }
  return kept;
}

}  // namespace hatnav
