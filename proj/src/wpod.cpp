#include "ocrom/wpod.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace ocrom {

void SnapshotSet::validate() const {
  if (snapshots.cols() != weights.size())
    throw std::invalid_argument("snapshot set: column/weight count mismatch");
  if (norm_matrix.rows() != snapshots.rows() || norm_matrix.cols() != snapshots.rows())
    throw std::invalid_argument("snapshot set: norm matrix dimension mismatch");
  for (int i = 0; i < weights.size(); ++i)
    if (weights[i] == 0.0)
      throw std::invalid_argument("snapshot set: zero quadrature weight");
}

double PODBasis::truncation_energy() const {
  double sum = 0.0;
  for (int k = retained(); k < eigenvalues.size(); ++k) sum += eigenvalues[k];
  return sum;
}

Mat x_orthonormalize(const Mat& vectors, const SpMat& x, double drop_tol) {
  std::vector<Vec> kept;
  for (int c = 0; c < vectors.cols(); ++c) {
    Vec v = vectors.col(c);
    double original = std::sqrt(v.dot(x * v));
    if (original == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& q : kept) v -= q.dot(x * v) * q;
    double norm = std::sqrt(std::max(v.dot(x * v), 0.0));
    if (norm <= drop_tol * original) continue;
    kept.push_back(v / norm);
  }
  Mat out(vectors.rows(), static_cast<int>(kept.size()));
  for (size_t i = 0; i < kept.size(); ++i) out.col(static_cast<int>(i)) = kept[i];
  return out;
}

namespace {

Mat gram_matrix(const SnapshotSet& set) {
  Mat xs = set.norm_matrix * set.snapshots;
  return set.snapshots.transpose() * xs;
}

struct Spectrum {
  Vec eigenvalues;   // descending
  Mat eigenvectors;  // matching columns, coordinates in the (weighted) snapshot basis
};

Spectrum sort_descending(const Vec& values, const Mat& vectors) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return values[a] > values[b]; });
  Spectrum s;
  s.eigenvalues.resize(values.size());
  s.eigenvectors.resize(vectors.rows(), vectors.cols());
  for (int k = 0; k < values.size(); ++k) {
    s.eigenvalues[k] = values[order[k]];
    s.eigenvectors.col(k) = vectors.col(order[k]);
  }
  return s;
}

int positive_count(const Vec& descending) {
  int k = 0;
  while (k < descending.size() && descending[k] > 0.0) ++k;
  return k;
}

PODBasis expand_and_orthonormalize(const SnapshotSet& set, const Spectrum& spectrum,
                                   int n, const Vec* sqrt_weights) {
  int keep = std::min(n, positive_count(spectrum.eigenvalues));
  PODBasis out;
  out.eigenvalues = spectrum.eigenvalues;
  if (keep == 0) {
    out.basis.resize(set.snapshots.rows(), 0);
    return out;
  }
  Mat coords = spectrum.eigenvectors.leftCols(keep);
  if (sqrt_weights)
    coords = sqrt_weights->asDiagonal() * coords;
  Mat expanded = set.snapshots * coords;
  out.basis = x_orthonormalize(expanded, set.norm_matrix);
  // deterministic sign: largest-magnitude entry positive
  for (int c = 0; c < out.basis.cols(); ++c) {
    int idx = 0;
    out.basis.col(c).cwiseAbs().maxCoeff(&idx);
    if (out.basis(idx, c) < 0.0) out.basis.col(c) = -out.basis.col(c);
  }
  return out;
}

}  // namespace

PODBasis pod_snapshot_basis(const SnapshotSet& set, int n) {
  if (n < 1) throw std::invalid_argument("pod_snapshot_basis: need n >= 1");
  set.validate();
  Mat gram = gram_matrix(set);
  if (gram.cwiseAbs().maxCoeff() == 0.0) {
    std::cerr << "warning: all-zero snapshot set, POD basis is empty\n";
    PODBasis empty;
    empty.basis.resize(set.snapshots.rows(), 0);
    empty.eigenvalues = Vec::Zero(set.count());
    return empty;
  }

  bool all_positive = (set.weights.array() > 0.0).all();
  Spectrum spectrum;
  if (all_positive) {
    // G x = lambda P^{-1} x with P^{-1} positive definite
    Mat p_inv = set.weights.cwiseInverse().asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> eig(gram, p_inv);
    if (eig.info() != Eigen::Success)
      throw std::runtime_error("pod_snapshot_basis: eigensolver failed");
    spectrum = sort_descending(eig.eigenvalues(), eig.eigenvectors());
  } else {
    // negative weights admitted: the correlation operator stays self-adjoint
    // in the X inner product, so the spectrum of P G is real
    Mat pg = set.weights.asDiagonal() * gram;
    Eigen::EigenSolver<Mat> eig(pg);
    if (eig.info() != Eigen::Success)
      throw std::runtime_error("pod_snapshot_basis: eigensolver failed");
    spectrum = sort_descending(eig.eigenvalues().real(), eig.eigenvectors().real());
  }
  return expand_and_orthonormalize(set, spectrum, n, nullptr);
}

PODBasis pod_weighted_snapshot_basis(const SnapshotSet& set, int n) {
  if (n < 1) throw std::invalid_argument("pod_weighted_snapshot_basis: need n >= 1");
  set.validate();
  if (!(set.weights.array() > 0.0).all())
    throw std::invalid_argument(
        "pod_weighted_snapshot_basis requires positive weights; "
        "use pod_snapshot_basis for signed weights");
  Mat gram = gram_matrix(set);
  if (gram.cwiseAbs().maxCoeff() == 0.0) {
    std::cerr << "warning: all-zero snapshot set, POD basis is empty\n";
    PODBasis empty;
    empty.basis.resize(set.snapshots.rows(), 0);
    empty.eigenvalues = Vec::Zero(set.count());
    return empty;
  }
  Vec sqrt_w = set.weights.cwiseSqrt();
  Mat cw = sqrt_w.asDiagonal() * gram * sqrt_w.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> eig(cw);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("pod_weighted_snapshot_basis: eigensolver failed");
  Spectrum spectrum = sort_descending(eig.eigenvalues(), eig.eigenvectors());
  return expand_and_orthonormalize(set, spectrum, n, &sqrt_w);
}

std::vector<PODBasis> pod_partitioned(const std::vector<SnapshotSet>& sets,
                                      const std::vector<int>& n_per_field,
                                      PodFormulation formulation) {
  if (sets.size() != n_per_field.size())
    throw std::invalid_argument("pod_partitioned: field count mismatch");
  std::vector<PODBasis> bases;
  bases.reserve(sets.size());
  for (size_t f = 0; f < sets.size(); ++f) {
    if (n_per_field[f] == 0) {
      PODBasis empty;
      empty.basis.resize(sets[f].snapshots.rows(), 0);
      empty.eigenvalues = Vec::Zero(sets[f].count());
      bases.push_back(std::move(empty));
      continue;
    }
    bases.push_back(formulation == PodFormulation::kWeighted
                        ? pod_weighted_snapshot_basis(sets[f], n_per_field[f])
                        : pod_snapshot_basis(sets[f], n_per_field[f]));
  }
  return bases;
}

Mat aggregate(const Mat& state_basis, const Mat& adjoint_basis, const SpMat& x,
              double drop_tol) {
  if (state_basis.rows() != adjoint_basis.rows())
    throw std::invalid_argument("aggregate: dof layout mismatch");
  Mat stacked(state_basis.rows(), state_basis.cols() + adjoint_basis.cols());
  stacked << state_basis, adjoint_basis;
  return x_orthonormalize(stacked, x, drop_tol);
}

}  // namespace ocrom
