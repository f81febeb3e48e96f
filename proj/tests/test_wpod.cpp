#include <doctest.h>

#include <numeric>
#include <random>

#include "ocrom/wpod.hpp"
#include "oracles.hpp"

using namespace ocrom;

namespace {

SpMat identity_norm(int n) {
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, 1.0);
  return from_triplets(n, n, t);
}

SnapshotSet random_set(int dofs, int m, std::mt19937& rng, bool random_norm = true,
                       bool uniform_weights = false) {
  SnapshotSet set;
  set.snapshots.resize(dofs, m);
  for (int i = 0; i < m; ++i) set.snapshots.col(i) = oracles::random_vector(dofs, rng);
  if (uniform_weights) {
    set.weights = Vec::Constant(m, 1.0 / m);
  } else {
    set.weights.resize(m);
    std::uniform_real_distribution<double> w(0.05, 1.0);
    for (int i = 0; i < m; ++i) set.weights[i] = w(rng);
    set.weights /= set.weights.sum();
  }
  set.norm_matrix = random_norm ? oracles::random_spd(dofs, rng) : identity_norm(dofs);
  return set;
}

double weighted_projection_error(const SnapshotSet& set, const Mat& basis) {
  double sum = 0.0;
  for (int i = 0; i < set.count(); ++i) {
    Vec chi = set.snapshots.col(i);
    Vec coeffs = basis.transpose() * (set.norm_matrix * chi);
    Vec residual = chi - basis * coeffs;
    sum += set.weights[i] * residual.dot(set.norm_matrix * residual);
  }
  return sum;
}

void check_x_orthonormal(const Mat& basis, const SpMat& x, double tol = 1e-10) {
  Mat gram = basis.transpose() * (x * basis);
  Mat err = gram - Mat::Identity(basis.cols(), basis.cols());
  CHECK(err.cwiseAbs().maxCoeff() <= tol);
}

}  // namespace

TEST_SUITE("wpod") {

TEST_CASE("single snapshot: normalized direction and lambda = w ||chi||^2") {
  std::mt19937 rng(11);
  SnapshotSet set;
  set.snapshots.resize(6, 1);
  set.snapshots.col(0) = oracles::random_vector(6, rng);
  set.weights = Vec::Constant(1, 0.37);
  set.norm_matrix = oracles::random_spd(6, rng);

  Vec chi = set.snapshots.col(0);
  double norm2 = chi.dot(set.norm_matrix * chi);

  for (auto* basis_fn : {&pod_snapshot_basis, &pod_weighted_snapshot_basis}) {
    PODBasis basis = (*basis_fn)(set, 3);
    REQUIRE(basis.retained() == 1);
    CHECK(basis.eigenvalues[0] == doctest::Approx(0.37 * norm2).epsilon(1e-12));
    Vec expected = chi / std::sqrt(norm2);
    double align = std::abs(basis.basis.col(0).dot(set.norm_matrix * expected));
    CHECK(align == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("duplicated snapshot collapses to rank one") {
  std::mt19937 rng(12);
  SnapshotSet set;
  set.snapshots.resize(8, 2);
  Vec chi = oracles::random_vector(8, rng);
  set.snapshots.col(0) = chi;
  set.snapshots.col(1) = chi;
  set.weights = Vec::Constant(2, 0.5);
  set.norm_matrix = identity_norm(8);
  PODBasis basis = pod_weighted_snapshot_basis(set, 2);
  CHECK(basis.retained() == 1);
  CHECK(std::abs(basis.eigenvalues[1]) <= 1e-14 * basis.eigenvalues[0]);
}

TEST_CASE("matches the dense weighted-POD oracle") {
  std::mt19937 rng(13);
  SnapshotSet set = random_set(12, 5, rng, true, true);
  oracles::DensePod expected =
      oracles::dense_pod_oracle(set.snapshots, set.weights, set.norm_matrix, 3);
  for (auto* basis_fn : {&pod_snapshot_basis, &pod_weighted_snapshot_basis}) {
    PODBasis basis = (*basis_fn)(set, 3);
    REQUIRE(basis.retained() == 3);
    check_x_orthonormal(basis.basis, set.norm_matrix);
    CHECK(oracles::subspace_sin_angle(expected.basis, basis.basis, set.norm_matrix) <=
          1e-8);
    for (int k = 0; k < 3; ++k)
      CHECK(basis.eigenvalues[k] ==
            doctest::Approx(expected.eigenvalues[k]).epsilon(1e-10));
  }
}

TEST_CASE("both formulations agree on Gauss-weighted sets") {
  std::mt19937 rng(14);
  SnapshotSet set = random_set(10, 8, rng);  // unequal positive weights
  PODBasis a = pod_snapshot_basis(set, 4);
  PODBasis b = pod_weighted_snapshot_basis(set, 4);
  REQUIRE(a.retained() == b.retained());
  CHECK(oracles::subspace_sin_angle(a.basis, b.basis, set.norm_matrix) <= 1e-8);
  for (int k = 0; k < a.retained(); ++k)
    CHECK(a.eigenvalues[k] == doctest::Approx(b.eigenvalues[k]).epsilon(1e-9));
}

TEST_CASE("weighted formulation rejects nonpositive weights") {
  std::mt19937 rng(15);
  SnapshotSet set = random_set(6, 3, rng);
  set.weights[1] = -0.1;
  CHECK_THROWS_AS(pod_weighted_snapshot_basis(set, 2), std::invalid_argument);
  set.weights[1] = 0.0;
  CHECK_THROWS_AS(pod_weighted_snapshot_basis(set, 2), std::invalid_argument);
}

TEST_CASE("snapshot-basis formulation admits signed weights") {
  // no paper-side reference exercises this; self-consistency only
  std::mt19937 rng(16);
  SnapshotSet set = random_set(9, 4, rng);
  set.weights[2] = -set.weights[2];
  PODBasis basis = pod_snapshot_basis(set, 4);
  CHECK(basis.retained() >= 1);
  check_x_orthonormal(basis.basis, set.norm_matrix);
  // positive eigenvalues listed first and nonincreasing
  for (int k = 0; k + 1 < basis.eigenvalues.size(); ++k)
    CHECK(basis.eigenvalues[k] >= basis.eigenvalues[k + 1]);
}

TEST_CASE("optimality identity: projection error equals the truncated eigensum") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    int dofs = 5 + static_cast<int>(rng() % 36);
    int m = 2 + static_cast<int>(rng() % 11);
    int n = 1 + static_cast<int>(rng() % std::min(m, 6));
    SnapshotSet set = random_set(dofs, m, rng, trial % 2 == 0);
    for (auto* basis_fn : {&pod_snapshot_basis, &pod_weighted_snapshot_basis}) {
      PODBasis basis = (*basis_fn)(set, n);
      double err = weighted_projection_error(set, basis.basis);
      double tail = basis.truncation_energy();
      double scale = std::max(basis.eigenvalues.sum(), 1e-300);
      CHECK(std::abs(err - tail) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("retained subspace invariant under snapshot reordering") {
  std::mt19937 rng(18);
  SnapshotSet set = random_set(10, 7, rng);
  std::vector<int> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  SnapshotSet shuffled = set;
  for (int i = 0; i < 7; ++i) {
    shuffled.snapshots.col(i) = set.snapshots.col(perm[i]);
    shuffled.weights[i] = set.weights[perm[i]];
  }
  PODBasis a = pod_weighted_snapshot_basis(set, 4);
  PODBasis b = pod_weighted_snapshot_basis(shuffled, 4);
  CHECK(oracles::subspace_sin_angle(a.basis, b.basis, set.norm_matrix) <= 1e-10);
}

TEST_CASE("full-rank basis reproduces every training snapshot") {
  std::mt19937 rng(19);
  SnapshotSet set = random_set(9, 5, rng);
  PODBasis basis = pod_weighted_snapshot_basis(set, 5);
  REQUIRE(basis.retained() == 5);
  for (int i = 0; i < set.count(); ++i) {
    Vec chi = set.snapshots.col(i);
    Vec coeffs = basis.basis.transpose() * (set.norm_matrix * chi);
    Vec residual = chi - basis.basis * coeffs;
    double rel = std::sqrt(residual.dot(set.norm_matrix * residual) /
                           chi.dot(set.norm_matrix * chi));
    CHECK(rel <= 1e-8);
  }
}

TEST_CASE("all-zero snapshot set yields an empty basis") {
  SnapshotSet set;
  set.snapshots = Mat::Zero(6, 3);
  set.weights = Vec::Constant(3, 1.0 / 3.0);
  set.norm_matrix = identity_norm(6);
  PODBasis basis = pod_weighted_snapshot_basis(set, 2);
  CHECK(basis.retained() == 0);
}

TEST_CASE("zero quadrature weights rejected by the snapshot set") {
  std::mt19937 rng(20);
  SnapshotSet set = random_set(5, 3, rng);
  set.weights[0] = 0.0;
  CHECK_THROWS_AS(set.validate(), std::invalid_argument);
}

TEST_CASE("partitioned: a one-dof field keeps a single basis function") {
  std::mt19937 rng(21);
  SnapshotSet scalar;
  scalar.snapshots.resize(1, 6);
  for (int i = 0; i < 6; ++i) scalar.snapshots(0, i) = 0.1 + 0.01 * i;
  scalar.weights = Vec::Constant(6, 1.0 / 6.0);
  scalar.norm_matrix = identity_norm(1);
  SnapshotSet field = random_set(8, 6, rng);
  auto bases = pod_partitioned({scalar, field}, {5, 5});
  REQUIRE(bases.size() == 2);
  CHECK(bases[0].retained() == 1);  // span dimension 1, no compression needed
  CHECK(bases[0].basis(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bases[1].retained() == 5);
}

TEST_CASE("partitioned per-field error never exceeds the monolithic total") {
  std::mt19937 rng(22);
  int m = 6, n = 3;
  SnapshotSet field1 = random_set(7, m, rng, true, true);
  SnapshotSet field2 = random_set(9, m, rng, true, true);
  field2.weights = field1.weights;

  // monolithic: stacked fields with the block-diagonal norm
  SnapshotSet stacked;
  stacked.snapshots.resize(16, m);
  stacked.snapshots.topRows(7) = field1.snapshots;
  stacked.snapshots.bottomRows(9) = field2.snapshots;
  stacked.weights = field1.weights;
  std::vector<Triplet> t;
  for (int k = 0; k < field1.norm_matrix.outerSize(); ++k)
    for (SpMat::InnerIterator it(field1.norm_matrix, k); it; ++it)
      t.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < field2.norm_matrix.outerSize(); ++k)
    for (SpMat::InnerIterator it(field2.norm_matrix, k); it; ++it)
      t.emplace_back(7 + it.row(), 7 + it.col(), it.value());
  stacked.norm_matrix = from_triplets(16, 16, t);

  PODBasis mono = pod_weighted_snapshot_basis(stacked, n);
  double mono_err = weighted_projection_error(stacked, mono.basis);
  auto parts = pod_partitioned({field1, field2}, {n, n});
  CHECK(weighted_projection_error(field1, parts[0].basis) <= mono_err + 1e-12);
  CHECK(weighted_projection_error(field2, parts[1].basis) <= mono_err + 1e-12);
}

TEST_CASE("aggregation: span equality and direct sums") {
  std::mt19937 rng(23);
  SpMat x = oracles::random_spd(10, rng);
  SnapshotSet set;
  set.snapshots.resize(10, 6);
  for (int i = 0; i < 6; ++i) set.snapshots.col(i) = oracles::random_vector(10, rng);
  set.weights = Vec::Constant(6, 1.0 / 6.0);
  set.norm_matrix = x;
  PODBasis pod = pod_weighted_snapshot_basis(set, 3);

  // identical bases in and out
  Mat same = aggregate(pod.basis, pod.basis, x);
  CHECK(same.cols() == 3);

  // X-orthogonal complement: dimension exactly doubles
  SnapshotSet other;
  other.snapshots.resize(10, 6);
  for (int i = 0; i < 6; ++i) {
    Vec v = oracles::random_vector(10, rng);
    for (int c = 0; c < 3; ++c)
      v -= pod.basis.col(c).dot(x * v) * pod.basis.col(c);
    other.snapshots.col(i) = v;
  }
  other.weights = set.weights;
  other.norm_matrix = x;
  PODBasis pod2 = pod_weighted_snapshot_basis(other, 3);
  Mat merged = aggregate(pod.basis, pod2.basis, x);
  CHECK(merged.cols() == 6);
  check_x_orthonormal(merged, x);
}

}  // TEST_SUITE
