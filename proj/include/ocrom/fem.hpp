#pragma once

#include <optional>
#include <vector>

#include "ocrom/linalg.hpp"
#include "ocrom/mesh.hpp"

namespace ocrom {

/// Vertex dofs split into Dirichlet-constrained and free sets.
struct DofMap {
  int total_dofs = 0;
  std::vector<int> dirichlet_dofs;
  std::vector<int> free_dofs;
  std::vector<int> full_to_free;  // -1 on constrained dofs

  int n_free() const { return static_cast<int>(free_dofs.size()); }

  /// Zero-extend a free-dof vector to the full vertex set.
  Vec lift(const Vec& free_vec) const {
    return prolong_vector(free_vec, free_dofs, total_dofs);
  }
  Vec restrict_free(const Vec& full_vec) const {
    return restrict_vector(full_vec, free_dofs);
  }
};

DofMap build_dofmap(const Mesh& mesh);

/// P1 mass matrix, optionally restricted to one subdomain label.
/// Throws std::invalid_argument for a label absent from the mesh.
SpMat assemble_mass(const Mesh& mesh, std::optional<int> restriction = {});

SpMat assemble_stiffness(const Mesh& mesh);

/// Entry (i,j) = int (d phi_j / d x_d) phi_i, direction d in {1, 2}.
SpMat assemble_advection(const Mesh& mesh, int direction);

/// Boundary mass on edges with the given tag; zero matrix (and a warning on
/// stderr) when no edge carries the tag.
SpMat assemble_boundary_mass(const Mesh& mesh, BoundaryTag tag);

/// Trilinear form t(v, rho, w) = int_Omega (dv/dx1 drho/dx2 - dv/dx2 drho/dx1) w.
/// Exact per element: the Jacobian determinant of (v, rho) is elementwise
/// constant and w is integrated exactly. All vectors are full vertex vectors.
class TrilinearForm {
 public:
  explicit TrilinearForm(const Mesh& mesh);

  double value(const Vec& v, const Vec& rho, const Vec& w) const;

  /// N_i = t(v, rho, phi_i).
  Vec apply(const Vec& v, const Vec& rho) const;

  /// M[i][j] = t(phi_j, rho, phi_i)  (derivative w.r.t. v).
  SpMat derivative_first(const Vec& rho) const;

  /// M[i][j] = t(v, phi_j, phi_i)  (derivative w.r.t. rho).
  SpMat derivative_second(const Vec& v) const;

  /// H[i][j] = t(phi_i, phi_j, w): antisymmetric, couples the v and rho slots
  /// in the Hessian of (v, rho) -> t(v, rho, w).
  SpMat hessian_weighted(const Vec& w) const;

  int size() const { return n_; }

 private:
  struct ElementData {
    int v[3];
    double gx[3], gy[3];  // P1 hat gradients
    double area;
  };
  std::vector<ElementData> elements_;
  int n_ = 0;
};

/// C_p: largest eigenvalue of M v = lambda K v on the free dofs
/// (square of the Poincare constant for the H1 seminorm).
double compute_poincare_constant(const Mesh& mesh, double tol = 1e-10);

/// C_t: largest eigenvalue of Gamma-mass v = lambda (M+K) v on the free dofs,
/// with the boundary mass over the Neumann part.
double compute_trace_constant(const Mesh& mesh, double tol = 1e-10);

}  // namespace ocrom
