#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ocrom/ocp.hpp"
#include "ocrom/wpod.hpp"

namespace ocrom {

/// One compressed solution field inside a reduced slot.
struct ReducedField {
  std::string name;
  int full_offset = 0, full_size = 0;
  int red_offset = 0, red_size = 0;
  Mat basis;  // full_size x red_size, X-orthonormal in the field norm
};

struct ReducedSlot {
  std::vector<ReducedField> fields;
  Mat matrix;  // block-diagonal expansion, full_dim x red_dim

  int full_dim() const { return static_cast<int>(matrix.rows()); }
  int red_dim() const { return static_cast<int>(matrix.cols()); }
};

enum class OnlineNlMode { kTensor, kFullOrder };

struct ReducedDenseTerm {
  CoeffFn coeff;
  Mat block;
};
struct ReducedVectorTerm {
  CoeffFn coeff;
  Vec block;
};

/// Offline-projected model: every affine term projected once onto the reduced
/// bases; optional precomputed trilinear tensor for the nonlinear online solve.
struct ReducedModel {
  std::string case_name;
  bool aggregated = false;
  OnlineNlMode nl_mode = OnlineNlMode::kTensor;
  double alpha = 1.0;

  ReducedSlot y_slot, u_slot, p_slot;

  std::vector<ReducedDenseTerm> a_terms, b_terms, obs_terms, q_terms;
  std::vector<ReducedVectorTerm> g_terms, obs_rhs_terms;
  AffineScalarFamily objective_offset;

  /// tensor[k](i, j) = t(v-basis_i, rho-basis_j, w-basis_k); empty for
  /// linear cases.
  std::vector<Mat> trilinear_tensor;

  std::shared_ptr<const OCPDefinition> definition;

  int total_dim() const {
    return y_slot.red_dim() + u_slot.red_dim() + p_slot.red_dim();
  }
  Mat a_at(const Vec& mu) const;
  Mat b_at(const Vec& mu) const;
  Mat obs_at(const Vec& mu) const;
  Mat q_at(const Vec& mu) const;
  Vec g_at(const Vec& mu) const;
  Vec obs_rhs_at(const Vec& mu) const;
};

struct ReducedSolution {
  Vec y_red, u_red, p_red;
  Vec y, u, p;  // lifted to the truth layout
  double objective = 0.0;
  Vec mu;
  double online_seconds = 0.0;
  double rcond = 0.0;
  NewtonReport newton;
};

/// Per-field reduced bases in the truth free-dof layout of each field.
struct FieldBases {
  std::vector<Mat> state;
  std::vector<Mat> control;
  std::vector<Mat> adjoint;
};

/// Project every affine term of the definition onto the given bases. With
/// aggregation, state and adjoint bases are merged per field (positional
/// pairing) and the merged basis is used on both sides. The trilinear tensor
/// is precomputed whenever the case is nonlinear.
ReducedModel project_offline(std::shared_ptr<const OCPDefinition> def,
                             const FieldBases& bases, bool aggregated,
                             OnlineNlMode nl_mode = OnlineNlMode::kTensor);

/// Dense reduced KKT assembly and solve; throws on a (near-)singular reduced
/// system, reporting mu.
ReducedSolution solve_reduced(const ReducedModel& model, const Vec& mu);

/// Newton on the reduced nonlinear KKT system. kTensor contracts the
/// precomputed tensor (cost independent of the truth dimension); kFullOrder
/// lifts, assembles the nonlinearity at full order and re-projects each
/// iteration.
ReducedSolution solve_reduced_nonlinear(const ReducedModel& model, const Vec& mu,
                                        const NewtonOptions& opts = {});

/// Nonlinear cases dispatch on the trilinear term; linear cases fall through
/// to solve_reduced.
ReducedSolution solve_online(const ReducedModel& model, const Vec& mu,
                             const NewtonOptions& opts = {});

/// Residual of the full-order KKT equations at the lifted solution, tested
/// against the reduced spaces (Galerkin consistency diagnostic).
double galerkin_consistency_residual(const ReducedModel& model,
                                     const ReducedSolution& sol, const Vec& mu);

/// Directory layout: manifest.json, mesh.txt, per-field basis matrices
/// (Matrix Market) and per-term reduced blocks (binary, little-endian
/// doubles, row-major, one-line text header naming the term and dimensions).
void save_reduced_model(const ReducedModel& model, const std::string& dir);
ReducedModel load_reduced_model(const std::string& dir);

}  // namespace ocrom
