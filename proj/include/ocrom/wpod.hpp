#pragma once

#include <vector>

#include "ocrom/linalg.hpp"

namespace ocrom {

/// Snapshot columns with quadrature weights and the inner-product matrix of
/// the space the snapshots live in.
struct SnapshotSet {
  Mat snapshots;  // one column per snapshot
  Vec weights;
  SpMat norm_matrix;  // SPD

  int count() const { return static_cast<int>(snapshots.cols()); }
  void validate() const;
};

struct PODBasis {
  Mat basis;        // X-orthonormal columns
  Vec eigenvalues;  // full correlation spectrum, nonincreasing

  int retained() const { return static_cast<int>(basis.cols()); }
  /// Sum of the eigenvalues beyond the retained ones: the weighted squared
  /// projection error of the training set.
  double truncation_energy() const;
};

enum class PodFormulation { kSnapshot, kWeighted };

/// Weighted POD in the snapshot basis: solve the generalized eigenproblem
/// G x = lambda P^{-1} x with G the X-Gram of the snapshots and
/// P = diag(weights), then expand eigenvectors in the snapshot basis and
/// X-orthonormalize. Admits negative weights (general eigensolver branch).
/// Retains min(n, K) modes, K = number of positive eigenvalues; the
/// orthonormalization drop tolerance guards against dependent expansions.
PODBasis pod_snapshot_basis(const SnapshotSet& set, int n);

/// Weighted POD in the weighted snapshot basis sqrt(w_i) chi_i: symmetric
/// eigendecomposition of C_w = D G D, D = diag(sqrt(w)). Requires strictly
/// positive weights; rejects otherwise (use pod_snapshot_basis then).
PODBasis pod_weighted_snapshot_basis(const SnapshotSet& set, int n);

/// Independent POD per solution field, each in its own norm. A field whose
/// snapshot span has dimension below n simply keeps its full span.
std::vector<PODBasis> pod_partitioned(const std::vector<SnapshotSet>& sets,
                                      const std::vector<int>& n_per_field,
                                      PodFormulation formulation = PodFormulation::kWeighted);

/// span{state basis, adjoint basis} by X-orthonormal Gram-Schmidt with the
/// given drop tolerance; both inputs must be X-orthonormal already.
Mat aggregate(const Mat& state_basis, const Mat& adjoint_basis, const SpMat& x,
              double drop_tol = 1e-12);

/// Two-pass modified Gram-Schmidt in the X inner product; near-dependent
/// columns (residual below drop_tol times the original norm) are dropped.
Mat x_orthonormalize(const Mat& vectors, const SpMat& x, double drop_tol = 1e-12);

}  // namespace ocrom
