#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ocrom {

enum class BoundaryTag { kDirichlet, kNeumann };

/// Subdomain labels used by the built-in problem cases. Labels are plain
/// ints; anything not listed is user-defined.
inline constexpr int kBulk = 0;
inline constexpr int kControlRegion = 1;
inline constexpr int kObservationRegion = 2;

struct BoundaryEdge {
  int a = 0, b = 0;
  BoundaryTag tag = BoundaryTag::kDirichlet;
};

enum class MeshErrorKind {
  kBadHeader,
  kDanglingVertex,
  kUntaggedBoundary,
  kDuplicateEdge,
  kDegenerateExtent,
  kOrientation,
  kNonManifold,
  kTagMismatch,
  kUnknownLabel,
  kIo,
};

class MeshError : public std::runtime_error {
 public:
  MeshError(MeshErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  MeshErrorKind kind() const { return kind_; }

 private:
  MeshErrorKind kind_;
};

struct Point2 {
  double x = 0.0, y = 0.0;
};

/// 2D triangulation with tagged boundary edges and per-triangle subdomain
/// labels. Immutable by convention once built/validated; all solvers share
/// it by const reference.
struct Mesh {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> subdomain;  // one label per triangle
  std::vector<BoundaryEdge> boundary_edges;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double signed_area(int t) const;
  double triangle_area(int t) const { return signed_area(t); }
  double total_area() const;
  double subdomain_area(int label) const;
  double boundary_length(BoundaryTag tag) const;
  bool has_subdomain(int label) const;

  /// Orientation, edge-manifoldness, and boundary tag cover.
  /// Throws MeshError on the first violation found.
  void validate() const;
};

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
};

struct LabeledBox {
  Rect box;
  int label = kBulk;
};

enum class BoundaryPolicy {
  kAllDirichlet,
  /// West + south sides (and any 45-degree cut edge) Neumann, rest Dirichlet.
  kWestSouthNeumann,
};

/// Structured triangulation of a rectangle: nx-by-ny cells, each split along
/// the lower-left to upper-right diagonal. Triangles are labeled by the first
/// box containing their barycenter, else kBulk. With cut_sw_corner the
/// south-west corner cell is replaced by a single triangle whose hypotenuse
/// becomes a 45-degree boundary edge.
Mesh generate_structured_rectangle(int nx, int ny, const Rect& extent,
                                   BoundaryPolicy tagging,
                                   const std::vector<LabeledBox>& subdomains = {},
                                   bool cut_sw_corner = false);

/// Plain-text format: `NV NT NB`, then NV lines `x y`, NT lines `i j k label`,
/// NB lines `i j tag` with tag D or N. Full double precision; load(save(m))
/// reproduces m bit-exactly.
void save_mesh(const Mesh& mesh, const std::string& path);
Mesh load_mesh(const std::string& path);

}  // namespace ocrom
