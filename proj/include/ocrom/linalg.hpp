#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

namespace ocrom {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Build a finalized sparse matrix from coordinate entries (duplicates summed).
SpMat from_triplets(int rows, int cols, const std::vector<Triplet>& entries);

/// max-norm symmetry test: ||A - A^T||_max <= tol * ||A||_max.
bool is_symmetric(const SpMat& a, double tol = 1e-14);

/// Largest absolute entry.
double max_abs(const SpMat& a);

/// Submatrix A(rows, cols) for arbitrary index subsets.
SpMat restrict_matrix(const SpMat& a, const std::vector<int>& rows,
                      const std::vector<int>& cols);

Vec restrict_vector(const Vec& v, const std::vector<int>& rows);

/// Scatter a reduced vector back to full length, zeros elsewhere.
Vec prolong_vector(const Vec& v, const std::vector<int>& rows, int full_size);

/// Matrix Market coordinate-format output (1-based indices, 17 significant digits).
void write_matrix_market(const SpMat& a, const std::string& path);
SpMat read_matrix_market(const std::string& path);

/// Dense matrix as Matrix Market array format.
void write_matrix_market_dense(const Mat& a, const std::string& path);
Mat read_matrix_market_dense(const std::string& path);

/// Sparse LU solve with one pass of iterative refinement.
/// Throws std::runtime_error on singular factorization.
class SparseSolver {
 public:
  explicit SparseSolver(const SpMat& a);
  Vec solve(const Vec& rhs) const;
  /// ||A x - b|| / max(||b||, floor); floor guards the b = 0 case.
  double relative_residual(const Vec& x, const Vec& rhs) const;

 private:
  SpMat matrix_;
  Eigen::SparseLU<SpMat> lu_;
};

/// Largest eigenvalue of the pencil A v = lambda B v (A symmetric, B SPD),
/// by power iteration on B^{-1} A. Rayleigh-quotient tolerance as given.
/// Throws on non-convergence.
double generalized_max_eigenvalue(const SpMat& a, const SpMat& b,
                                  double tol = 1e-10, int max_iter = 20000);

/// Cosines of principal angles between the column spans of two X-orthonormal
/// bases; returns the singular values of Q1^T X Q2.
Vec principal_angle_cosines(const Mat& q1, const Mat& q2, const SpMat& x);

}  // namespace ocrom
