#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ocrom/fem.hpp"
#include "ocrom/linalg.hpp"
#include "ocrom/mesh.hpp"

namespace ocrom {

using CoeffFn = std::function<double(const Vec& mu)>;

struct AffineMatrixTerm {
  CoeffFn coeff;
  SpMat block;
};

/// Sum_q Lambda_q(mu) * block_q with a fixed term-order summation.
struct AffineMatrixFamily {
  int rows = 0, cols = 0;
  std::vector<AffineMatrixTerm> terms;

  void add(CoeffFn coeff, SpMat block);
  SpMat evaluate(const Vec& mu) const;
  int term_count() const { return static_cast<int>(terms.size()); }
};

struct AffineVectorTerm {
  CoeffFn coeff;
  Vec block;
};

struct AffineVectorFamily {
  int rows = 0;
  std::vector<AffineVectorTerm> terms;

  void add(CoeffFn coeff, Vec block);
  Vec evaluate(const Vec& mu) const;
  int term_count() const { return static_cast<int>(terms.size()); }
};

struct AffineScalarTerm {
  CoeffFn coeff;
  double value = 0.0;
};

struct AffineScalarFamily {
  std::vector<AffineScalarTerm> terms;
  double evaluate(const Vec& mu) const;
};

/// Contiguous block of one solution field inside a stacked vector.
struct FieldSpan {
  std::string name;
  int offset = 0;
  int size = 0;
};

/// Hook for the quasi-geostrophic nonlinearity mu_k * t(v, rho, w-test).
struct TrilinearCoupling {
  std::shared_ptr<const TrilinearForm> form;  // acts on full vertex vectors
  int mu_index = 2;
  int v_field = 0;    // index into state_fields
  int rho_field = 1;  // index into state_fields
  int w_field = 0;    // index into adjoint_fields (rows of the state equation)
};

/// Linear-quadratic OCP in stacked free-dof coordinates:
///   minimize 1/2 <obs (y - z_d), y - z_d> + alpha/2 <Q u, u>
///   subject to A(mu) y + B(mu) u = g(mu),
/// all operators given as affine families. Immutable after construction.
struct OCPDefinition {
  std::string case_name;
  std::shared_ptr<const Mesh> mesh;
  DofMap scalar_dofmap;  // shared by all state/adjoint scalar fields

  AffineMatrixFamily A;             // n_p x n_y
  AffineMatrixFamily B;             // n_p x n_u
  AffineMatrixFamily obs;           // n_y x n_y, C* M C
  AffineMatrixFamily control_gram;  // n_u x n_u, Q before the alpha factor
  AffineVectorFamily g;             // n_p
  AffineVectorFamily obs_rhs;       // n_y, C* M z_d
  AffineScalarFamily objective_offset;  // 1/2 <M z_d, z_d>

  SpMat X_Y, X_U, X_P;  // norm matrices (SPD)

  std::vector<FieldSpan> state_fields, control_fields, adjoint_fields;
  std::optional<TrilinearCoupling> trilinear;

  double alpha = 1.0;
  double L0 = 1.0;
  std::vector<std::array<double, 2>> param_box;

  int n_y() const { return A.cols; }
  int n_u() const { return B.cols; }
  int n_p() const { return A.rows; }

  void validate() const;
  bool mu_in_box(const Vec& mu) const;

  double objective(const Vec& y, const Vec& u, const Vec& mu) const;

  /// Full vertex vector of a constrained scalar field block.
  Vec lift_field(const Vec& stacked, const FieldSpan& span) const;

  /// mu-independent pieces of the nonlinearity (zero family when absent):
  /// residual contribution N(y) in state-equation rows, its derivative
  /// DN(y), and the adjoint Hessian block H(p) = d/dy [DN(y)^T p].
  Vec nonlinear_residual(const Vec& y) const;        // n_p
  SpMat nonlinear_jacobian(const Vec& y) const;      // n_p x n_y
  SpMat nonlinear_hessian(const Vec& p) const;       // n_y x n_y, symmetric
  double trilinear_scale(const Vec& mu) const;
};

struct NewtonOptions {
  double tolerance = 1e-10;
  int max_iterations = 25;
  bool damping = false;  // halve the step on residual increase
};

struct NewtonReport {
  int iterations = 0;
  std::vector<double> residuals;  // relative residual per iterate, including start
  bool converged = false;
  bool diverged = false;  // residual grew over 3 consecutive iterations
};

struct TruthSolution {
  Vec y, u, p;
  double objective = 0.0;
  Vec mu;
  double residual = 0.0;  // relative KKT residual
  NewtonReport newton;
};

/// KKT saddle system at mu:
///   [ obs     0        A^T ] [y]   [obs_rhs]
///   [ 0       alpha Q  B^T ] [u] = [0      ]
///   [ A       B        0   ] [p]   [g      ]
struct KKTSystem {
  SpMat matrix;
  Vec rhs;
};
KKTSystem assemble_kkt(const OCPDefinition& def, const Vec& mu);

/// Sparse direct solve of the linear KKT system; enforces a relative
/// residual of at most tol. Throws on singular factorization, reporting mu.
TruthSolution solve_truth(const OCPDefinition& def, const Vec& mu, double tol = 1e-10);

/// Newton on the coupled nonlinear KKT system (exact Jacobian). With the
/// trilinear term absent or mu-scaled to zero this reduces to the linear path.
TruthSolution solve_truth_nonlinear(const OCPDefinition& def, const Vec& mu,
                                    const NewtonOptions& opts = {});

/// State-equation-only solve A(mu) y + B(mu) u = g(mu) (Newton when the
/// nonlinearity is active). Used for desired-state generation and the
/// objective-vs-control oracle.
Vec solve_state_only(const OCPDefinition& def, const Vec& mu, const Vec& u,
                     const NewtonOptions& opts = {});

/// Adjoint solve at a given state: (A + DN)^T p = obs_rhs - obs y.
Vec solve_adjoint_only(const OCPDefinition& def, const Vec& mu, const Vec& y);

/// Gradient of the control-to-objective map u -> J(y(u), u) via the adjoint.
Vec objective_gradient(const OCPDefinition& def, const Vec& mu, const Vec& u);

/// State solve at mu_gen under the given control forcing; the first state
/// field is kept as the desired profile and the remaining fields are zeroed.
Vec generate_desired_state(const OCPDefinition& def, const Vec& forcing,
                           const Vec& mu_gen, const NewtonOptions& opts = {});

/// Built-in cases: "gulf" (coercive advection-diffusion, scalar control),
/// "stommel_munk" (linear quasi-geostrophic pair, distributed control),
/// "qg_nonlinear" (adds the mu3-scaled trilinear term).
/// The mesh must carry the subdomain labels the case needs.
OCPDefinition builtin_case(const std::string& name, std::shared_ptr<const Mesh> mesh,
                           std::optional<double> alpha_override = {});

/// Interpolate a closed-form forcing at control dofs.
Vec interpolate_control(const OCPDefinition& def,
                        const std::function<double(double, double)>& f);

}  // namespace ocrom
