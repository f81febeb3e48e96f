#include "ocrom/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

namespace ocrom {

namespace {

std::pair<int, int> undirected(int a, int b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

double Mesh::signed_area(int t) const {
  const auto& tri = triangles[t];
  const Point2& p0 = vertices[tri[0]];
  const Point2& p1 = vertices[tri[1]];
  const Point2& p2 = vertices[tri[2]];
  return 0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
}

double Mesh::total_area() const {
  double a = 0.0;
  for (int t = 0; t < num_triangles(); ++t) a += signed_area(t);
  return a;
}

double Mesh::subdomain_area(int label) const {
  double a = 0.0;
  for (int t = 0; t < num_triangles(); ++t)
    if (subdomain[t] == label) a += signed_area(t);
  return a;
}

double Mesh::boundary_length(BoundaryTag tag) const {
  double len = 0.0;
  for (const auto& e : boundary_edges) {
    if (e.tag != tag) continue;
    double dx = vertices[e.b].x - vertices[e.a].x;
    double dy = vertices[e.b].y - vertices[e.a].y;
    len += std::hypot(dx, dy);
  }
  return len;
}

bool Mesh::has_subdomain(int label) const {
  return std::find(subdomain.begin(), subdomain.end(), label) != subdomain.end();
}

void Mesh::validate() const {
  if (subdomain.size() != triangles.size())
    throw MeshError(MeshErrorKind::kBadHeader, "subdomain list length mismatch");
  for (int t = 0; t < num_triangles(); ++t) {
    for (int v : triangles[t])
      if (v < 0 || v >= num_vertices())
        throw MeshError(MeshErrorKind::kDanglingVertex,
                        "triangle " + std::to_string(t) + " references vertex " +
                            std::to_string(v));
    if (signed_area(t) <= 0.0)
      throw MeshError(MeshErrorKind::kOrientation,
                      "triangle " + std::to_string(t) + " has nonpositive area");
  }

  std::map<std::pair<int, int>, int> incidence;
  for (const auto& tri : triangles)
    for (int k = 0; k < 3; ++k)
      incidence[undirected(tri[k], tri[(k + 1) % 3])] += 1;

  for (const auto& [edge, count] : incidence)
    if (count > 2)
      throw MeshError(MeshErrorKind::kNonManifold,
                      "edge (" + std::to_string(edge.first) + "," +
                          std::to_string(edge.second) +
                          ") shared by more than two triangles");

  std::map<std::pair<int, int>, BoundaryTag> tagged;
  for (const auto& e : boundary_edges) {
    auto key = undirected(e.a, e.b);
    if (e.a < 0 || e.a >= num_vertices() || e.b < 0 || e.b >= num_vertices())
      throw MeshError(MeshErrorKind::kDanglingVertex, "boundary edge vertex out of range");
    if (tagged.count(key))
      throw MeshError(MeshErrorKind::kDuplicateEdge,
                      "boundary edge (" + std::to_string(e.a) + "," +
                          std::to_string(e.b) + ") listed twice");
    tagged.emplace(key, e.tag);
  }

  for (const auto& [edge, count] : incidence) {
    bool topological_boundary = (count == 1);
    bool is_tagged = tagged.count(edge) > 0;
    if (topological_boundary && !is_tagged)
      throw MeshError(MeshErrorKind::kUntaggedBoundary,
                      "boundary edge (" + std::to_string(edge.first) + "," +
                          std::to_string(edge.second) + ") has no tag");
    if (!topological_boundary && is_tagged)
      throw MeshError(MeshErrorKind::kTagMismatch,
                      "interior edge (" + std::to_string(edge.first) + "," +
                          std::to_string(edge.second) + ") carries a boundary tag");
  }
  for (const auto& [edge, tag] : tagged) {
    (void)tag;
    if (!incidence.count(edge))
      throw MeshError(MeshErrorKind::kTagMismatch,
                      "tagged edge (" + std::to_string(edge.first) + "," +
                          std::to_string(edge.second) + ") not part of the mesh");
  }
}

Mesh generate_structured_rectangle(int nx, int ny, const Rect& extent,
                                   BoundaryPolicy tagging,
                                   const std::vector<LabeledBox>& subdomains,
                                   bool cut_sw_corner) {
  if (nx < 1 || ny < 1)
    throw MeshError(MeshErrorKind::kBadHeader, "cell counts must be >= 1");
  if (extent.width() <= 0.0 || extent.height() <= 0.0)
    throw MeshError(MeshErrorKind::kDegenerateExtent,
                    "rectangle extent has zero width or height");

  Mesh mesh;
  const double hx = extent.width() / nx;
  const double hy = extent.height() / ny;
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };

  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.vertices.push_back(
          {extent.x0 + i * hx, extent.y0 + j * hy});

  auto label_of = [&](int a, int b, int c) {
    double bx = (mesh.vertices[a].x + mesh.vertices[b].x + mesh.vertices[c].x) / 3.0;
    double by = (mesh.vertices[a].y + mesh.vertices[b].y + mesh.vertices[c].y) / 3.0;
    for (const auto& sd : subdomains)
      if (sd.box.contains(bx, by)) return sd.label;
    return kBulk;
  };
  auto push = [&](int a, int b, int c) {
    mesh.triangles.push_back({a, b, c});
    mesh.subdomain.push_back(label_of(a, b, c));
  };

  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      if (cut_sw_corner && i == 0 && j == 0) {
        // anti-diagonal split, lower-left triangle removed; the hypotenuse
        // b-d becomes a 45-degree boundary edge
        push(b, c, d);
        continue;
      }
      push(a, b, c);
      push(a, c, d);
    }

  // boundary edges: walk each side; the corner cut replaces the two edges
  // meeting at (0,0) by the diagonal
  auto tag_for = [&](bool west_or_south_or_diag) {
    if (tagging == BoundaryPolicy::kAllDirichlet) return BoundaryTag::kDirichlet;
    return west_or_south_or_diag ? BoundaryTag::kNeumann : BoundaryTag::kDirichlet;
  };
  for (int i = 0; i < nx; ++i) {
    if (!(cut_sw_corner && i == 0))
      mesh.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), tag_for(true)});  // south
    mesh.boundary_edges.push_back({vid(i, ny), vid(i + 1, ny), tag_for(false)});  // north
  }
  for (int j = 0; j < ny; ++j) {
    if (!(cut_sw_corner && j == 0))
      mesh.boundary_edges.push_back({vid(0, j), vid(0, j + 1), tag_for(true)});  // west
    mesh.boundary_edges.push_back({vid(nx, j), vid(nx, j + 1), tag_for(false)});  // east
  }
  if (cut_sw_corner)
    mesh.boundary_edges.push_back({vid(1, 0), vid(0, 1), tag_for(true)});

  if (cut_sw_corner) {
    // drop the now-unused corner vertex and remap indices
    int removed = vid(0, 0);
    mesh.vertices.erase(mesh.vertices.begin() + removed);
    auto remap = [&](int v) { return v > removed ? v - 1 : v; };
    for (auto& tri : mesh.triangles)
      for (int& v : tri) v = remap(v);
    for (auto& e : mesh.boundary_edges) {
      e.a = remap(e.a);
      e.b = remap(e.b);
    }
  }

  mesh.validate();
  return mesh;
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw MeshError(MeshErrorKind::kIo, "cannot open for writing: " + path);
  std::fprintf(f, "%d %d %d\n", mesh.num_vertices(), mesh.num_triangles(),
               static_cast<int>(mesh.boundary_edges.size()));
  for (const auto& v : mesh.vertices) std::fprintf(f, "%.17g %.17g\n", v.x, v.y);
  for (int t = 0; t < mesh.num_triangles(); ++t)
    std::fprintf(f, "%d %d %d %d\n", mesh.triangles[t][0], mesh.triangles[t][1],
                 mesh.triangles[t][2], mesh.subdomain[t]);
  for (const auto& e : mesh.boundary_edges)
    std::fprintf(f, "%d %d %c\n", e.a, e.b,
                 e.tag == BoundaryTag::kDirichlet ? 'D' : 'N');
  std::fclose(f);
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError(MeshErrorKind::kIo, "cannot open: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw MeshError(MeshErrorKind::kBadHeader, "empty mesh file: " + path);
  std::istringstream header(line);
  long long nv = -1, nt = -1, nb = -1;
  if (!(header >> nv >> nt >> nb) || nv < 0 || nt < 0 || nb < 0) {
    std::string extra;
    throw MeshError(MeshErrorKind::kBadHeader, "malformed header in " + path);
  }

  Mesh mesh;
  mesh.vertices.resize(nv);
  for (long long i = 0; i < nv; ++i)
    if (!(in >> mesh.vertices[i].x >> mesh.vertices[i].y))
      throw MeshError(MeshErrorKind::kBadHeader, "truncated vertex list");
  mesh.triangles.resize(nt);
  mesh.subdomain.resize(nt);
  for (long long t = 0; t < nt; ++t) {
    auto& tri = mesh.triangles[t];
    if (!(in >> tri[0] >> tri[1] >> tri[2] >> mesh.subdomain[t]))
      throw MeshError(MeshErrorKind::kBadHeader, "truncated triangle list");
    for (int v : tri)
      if (v < 0 || v >= static_cast<int>(nv))
        throw MeshError(MeshErrorKind::kDanglingVertex,
                        "triangle " + std::to_string(t) + " references vertex " +
                            std::to_string(v) + " >= " + std::to_string(nv));
    // normalize orientation to counter-clockwise
    const Point2& p0 = mesh.vertices[tri[0]];
    const Point2& p1 = mesh.vertices[tri[1]];
    const Point2& p2 = mesh.vertices[tri[2]];
    double twice_area =
        (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    if (twice_area < 0.0) std::swap(tri[1], tri[2]);
  }
  mesh.boundary_edges.resize(nb);
  for (long long e = 0; e < nb; ++e) {
    auto& edge = mesh.boundary_edges[e];
    char tag = 0;
    if (!(in >> edge.a >> edge.b >> tag))
      throw MeshError(MeshErrorKind::kBadHeader, "truncated boundary list");
    if (edge.a < 0 || edge.a >= static_cast<int>(nv) || edge.b < 0 ||
        edge.b >= static_cast<int>(nv))
      throw MeshError(MeshErrorKind::kDanglingVertex,
                      "boundary edge references vertex out of range");
    if (tag == 'D')
      edge.tag = BoundaryTag::kDirichlet;
    else if (tag == 'N')
      edge.tag = BoundaryTag::kNeumann;
    else
      throw MeshError(MeshErrorKind::kBadHeader,
                      std::string("unknown boundary tag '") + tag + "'");
  }
  mesh.validate();
  return mesh;
}

}  // namespace ocrom
