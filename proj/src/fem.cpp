#include "ocrom/fem.hpp"

#include <cmath>
#include <iostream>
#include <set>
#include <stdexcept>

namespace ocrom {

DofMap build_dofmap(const Mesh& mesh) {
  DofMap map;
  map.total_dofs = mesh.num_vertices();
  std::set<int> constrained;
  for (const auto& e : mesh.boundary_edges)
    if (e.tag == BoundaryTag::kDirichlet) {
      constrained.insert(e.a);
      constrained.insert(e.b);
    }
  map.full_to_free.assign(map.total_dofs, -1);
  for (int v = 0; v < map.total_dofs; ++v) {
    if (constrained.count(v)) {
      map.dirichlet_dofs.push_back(v);
    } else {
      map.full_to_free[v] = static_cast<int>(map.free_dofs.size());
      map.free_dofs.push_back(v);
    }
  }
  return map;
}

namespace {

struct P1Element {
  double gx[3], gy[3];
  double area;
};

P1Element element_geometry(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const Point2& p0 = mesh.vertices[tri[0]];
  const Point2& p1 = mesh.vertices[tri[1]];
  const Point2& p2 = mesh.vertices[tri[2]];
  P1Element e;
  double twice_area =
      (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  e.area = 0.5 * twice_area;
  e.gx[0] = (p1.y - p2.y) / twice_area;
  e.gy[0] = (p2.x - p1.x) / twice_area;
  e.gx[1] = (p2.y - p0.y) / twice_area;
  e.gy[1] = (p0.x - p2.x) / twice_area;
  e.gx[2] = (p0.y - p1.y) / twice_area;
  e.gy[2] = (p1.x - p0.x) / twice_area;
  return e;
}

}  // namespace

SpMat assemble_mass(const Mesh& mesh, std::optional<int> restriction) {
  if (restriction && !mesh.has_subdomain(*restriction))
    throw std::invalid_argument("mesh has no subdomain with label " +
                                std::to_string(*restriction));
  const int n = mesh.num_vertices();
  std::vector<Triplet> t;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    if (restriction && mesh.subdomain[k] != *restriction) continue;
    double a = mesh.signed_area(k);
    const auto& tri = mesh.triangles[k];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        t.emplace_back(tri[i], tri[j], a / 12.0 * (i == j ? 2.0 : 1.0));
  }
  return from_triplets(n, n, t);
}

SpMat assemble_stiffness(const Mesh& mesh) {
  const int n = mesh.num_vertices();
  std::vector<Triplet> t;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    P1Element e = element_geometry(mesh, k);
    const auto& tri = mesh.triangles[k];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        t.emplace_back(tri[i], tri[j],
                       e.area * (e.gx[i] * e.gx[j] + e.gy[i] * e.gy[j]));
  }
  return from_triplets(n, n, t);
}

SpMat assemble_advection(const Mesh& mesh, int direction) {
  if (direction != 1 && direction != 2)
    throw std::invalid_argument("advection direction must be 1 or 2");
  const int n = mesh.num_vertices();
  std::vector<Triplet> t;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    P1Element e = element_geometry(mesh, k);
    const auto& tri = mesh.triangles[k];
    const double* g = direction == 1 ? e.gx : e.gy;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        t.emplace_back(tri[i], tri[j], e.area / 3.0 * g[j]);
  }
  return from_triplets(n, n, t);
}

SpMat assemble_boundary_mass(const Mesh& mesh, BoundaryTag tag) {
  const int n = mesh.num_vertices();
  std::vector<Triplet> t;
  int edges = 0;
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag != tag) continue;
    ++edges;
    double dx = mesh.vertices[e.b].x - mesh.vertices[e.a].x;
    double dy = mesh.vertices[e.b].y - mesh.vertices[e.a].y;
    double h = std::hypot(dx, dy);
    int v[2] = {e.a, e.b};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        t.emplace_back(v[i], v[j], h / 6.0 * (i == j ? 2.0 : 1.0));
  }
  if (edges == 0)
    std::cerr << "warning: no boundary edges with requested tag; boundary mass is zero\n";
  return from_triplets(n, n, t);
}

TrilinearForm::TrilinearForm(const Mesh& mesh) : n_(mesh.num_vertices()) {
  elements_.reserve(mesh.num_triangles());
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    P1Element g = element_geometry(mesh, k);
    ElementData e;
    for (int i = 0; i < 3; ++i) {
      e.v[i] = mesh.triangles[k][i];
      e.gx[i] = g.gx[i];
      e.gy[i] = g.gy[i];
    }
    e.area = g.area;
    elements_.push_back(e);
  }
}

double TrilinearForm::value(const Vec& v, const Vec& rho, const Vec& w) const {
  double sum = 0.0;
  for (const auto& e : elements_) {
    double vx = 0, vy = 0, rx = 0, ry = 0, wbar = 0;
    for (int i = 0; i < 3; ++i) {
      vx += v[e.v[i]] * e.gx[i];
      vy += v[e.v[i]] * e.gy[i];
      rx += rho[e.v[i]] * e.gx[i];
      ry += rho[e.v[i]] * e.gy[i];
      wbar += w[e.v[i]];
    }
    sum += (vx * ry - vy * rx) * e.area / 3.0 * wbar;
  }
  return sum;
}

Vec TrilinearForm::apply(const Vec& v, const Vec& rho) const {
  Vec out = Vec::Zero(n_);
  for (const auto& e : elements_) {
    double vx = 0, vy = 0, rx = 0, ry = 0;
    for (int i = 0; i < 3; ++i) {
      vx += v[e.v[i]] * e.gx[i];
      vy += v[e.v[i]] * e.gy[i];
      rx += rho[e.v[i]] * e.gx[i];
      ry += rho[e.v[i]] * e.gy[i];
    }
    double f = (vx * ry - vy * rx) * e.area / 3.0;
    for (int i = 0; i < 3; ++i) out[e.v[i]] += f;
  }
  return out;
}

SpMat TrilinearForm::derivative_first(const Vec& rho) const {
  std::vector<Triplet> t;
  for (const auto& e : elements_) {
    double rx = 0, ry = 0;
    for (int i = 0; i < 3; ++i) {
      rx += rho[e.v[i]] * e.gx[i];
      ry += rho[e.v[i]] * e.gy[i];
    }
    for (int c = 0; c < 3; ++c) {
      double f = (e.gx[c] * ry - e.gy[c] * rx) * e.area / 3.0;
      for (int r = 0; r < 3; ++r) t.emplace_back(e.v[r], e.v[c], f);
    }
  }
  return from_triplets(n_, n_, t);
}

SpMat TrilinearForm::derivative_second(const Vec& v) const {
  std::vector<Triplet> t;
  for (const auto& e : elements_) {
    double vx = 0, vy = 0;
    for (int i = 0; i < 3; ++i) {
      vx += v[e.v[i]] * e.gx[i];
      vy += v[e.v[i]] * e.gy[i];
    }
    for (int c = 0; c < 3; ++c) {
      double f = (vx * e.gy[c] - vy * e.gx[c]) * e.area / 3.0;
      for (int r = 0; r < 3; ++r) t.emplace_back(e.v[r], e.v[c], f);
    }
  }
  return from_triplets(n_, n_, t);
}

SpMat TrilinearForm::hessian_weighted(const Vec& w) const {
  std::vector<Triplet> t;
  for (const auto& e : elements_) {
    double wbar = (w[e.v[0]] + w[e.v[1]] + w[e.v[2]]) / 3.0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        double f = (e.gx[r] * e.gy[c] - e.gy[r] * e.gx[c]) * e.area * wbar;
        if (f != 0.0) t.emplace_back(e.v[r], e.v[c], f);
      }
  }
  return from_triplets(n_, n_, t);
}

double compute_poincare_constant(const Mesh& mesh, double tol) {
  DofMap map = build_dofmap(mesh);
  if (map.free_dofs.empty())
    throw std::runtime_error("compute_poincare_constant: no free dofs");
  SpMat m = restrict_matrix(assemble_mass(mesh), map.free_dofs, map.free_dofs);
  SpMat k = restrict_matrix(assemble_stiffness(mesh), map.free_dofs, map.free_dofs);
  return generalized_max_eigenvalue(m, k, tol);
}

double compute_trace_constant(const Mesh& mesh, double tol) {
  DofMap map = build_dofmap(mesh);
  if (map.free_dofs.empty())
    throw std::runtime_error("compute_trace_constant: no free dofs");
  SpMat gamma = restrict_matrix(assemble_boundary_mass(mesh, BoundaryTag::kNeumann),
                                map.free_dofs, map.free_dofs);
  SpMat m = assemble_mass(mesh);
  SpMat k = assemble_stiffness(mesh);
  SpMat h1 = restrict_matrix(SpMat(m + k), map.free_dofs, map.free_dofs);
  return generalized_max_eigenvalue(gamma, h1, tol);
}

}  // namespace ocrom
