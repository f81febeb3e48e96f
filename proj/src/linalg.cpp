#include "ocrom/linalg.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ocrom {

SpMat from_triplets(int rows, int cols, const std::vector<Triplet>& entries) {
  SpMat a(rows, cols);
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();
  return a;
}

double max_abs(const SpMat& a) {
  double m = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

bool is_symmetric(const SpMat& a, double tol) {
  if (a.rows() != a.cols()) return false;
  SpMat d = SpMat(a.transpose()) - a;
  return max_abs(d) <= tol * std::max(max_abs(a), 1e-300);
}

SpMat restrict_matrix(const SpMat& a, const std::vector<int>& rows,
                      const std::vector<int>& cols) {
  std::vector<int> row_of(a.rows(), -1), col_of(a.cols(), -1);
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) row_of[rows[i]] = i;
  for (int j = 0; j < static_cast<int>(cols.size()); ++j) col_of[cols[j]] = j;
  std::vector<Triplet> t;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it) {
      int r = row_of[it.row()], c = col_of[it.col()];
      if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
    }
  return from_triplets(static_cast<int>(rows.size()),
                       static_cast<int>(cols.size()), t);
}

Vec restrict_vector(const Vec& v, const std::vector<int>& rows) {
  Vec out(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

Vec prolong_vector(const Vec& v, const std::vector<int>& rows, int full_size) {
  Vec out = Vec::Zero(full_size);
  for (size_t i = 0; i < rows.size(); ++i) out[rows[i]] = v[i];
  return out;
}

void write_matrix_market(const SpMat& a, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  std::fprintf(f, "%%%%MatrixMarket matrix coordinate real general\n");
  std::fprintf(f, "%" PRIdPTR " %" PRIdPTR " %" PRIdPTR "\n",
               static_cast<intptr_t>(a.rows()), static_cast<intptr_t>(a.cols()),
               static_cast<intptr_t>(a.nonZeros()));
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it)
      std::fprintf(f, "%ld %ld %.17g\n", static_cast<long>(it.row()) + 1,
                   static_cast<long>(it.col()) + 1, it.value());
  std::fclose(f);
}

SpMat read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  do {
    if (!std::getline(in, line)) throw std::runtime_error("truncated MatrixMarket file: " + path);
  } while (!line.empty() && line[0] == '%');
  std::istringstream header(line);
  long rows = 0, cols = 0, nnz = 0;
  header >> rows >> cols >> nnz;
  std::vector<Triplet> t;
  t.reserve(nnz);
  for (long k = 0; k < nnz; ++k) {
    long i, j;
    double v;
    if (!(in >> i >> j >> v)) throw std::runtime_error("truncated MatrixMarket file: " + path);
    t.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
  }
  return from_triplets(static_cast<int>(rows), static_cast<int>(cols), t);
}

void write_matrix_market_dense(const Mat& a, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  std::fprintf(f, "%%%%MatrixMarket matrix array real general\n");
  std::fprintf(f, "%ld %ld\n", static_cast<long>(a.rows()),
               static_cast<long>(a.cols()));
  for (int j = 0; j < a.cols(); ++j)
    for (int i = 0; i < a.rows(); ++i) std::fprintf(f, "%.17g\n", a(i, j));
  std::fclose(f);
}

Mat read_matrix_market_dense(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  do {
    if (!std::getline(in, line)) throw std::runtime_error("truncated MatrixMarket file: " + path);
  } while (!line.empty() && line[0] == '%');
  std::istringstream header(line);
  long rows = 0, cols = 0;
  header >> rows >> cols;
  Mat a(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i)
      if (!(in >> a(i, j))) throw std::runtime_error("truncated MatrixMarket file: " + path);
  return a;
}

SparseSolver::SparseSolver(const SpMat& a) : matrix_(a) {
  matrix_.makeCompressed();
  lu_.compute(matrix_);
  if (lu_.info() != Eigen::Success)
    throw std::runtime_error("sparse LU factorization failed (singular matrix?)");
}

Vec SparseSolver::solve(const Vec& rhs) const {
  Vec x = lu_.solve(rhs);
  // one step of iterative refinement; the saddle systems here can be
  // ill-conditioned (alpha as small as 1e-7)
  Vec r = rhs - matrix_ * x;
  x += lu_.solve(r);
  return x;
}

double SparseSolver::relative_residual(const Vec& x, const Vec& rhs) const {
  double scale = std::max(rhs.norm(), 1e-300);
  return (rhs - matrix_ * x).norm() / scale;
}

double generalized_max_eigenvalue(const SpMat& a, const SpMat& b, double tol,
                                  int max_iter) {
  Eigen::SimplicialLDLT<SpMat> bsolve(b);
  if (bsolve.info() != Eigen::Success)
    throw std::runtime_error("generalized_max_eigenvalue: B factorization failed");
  Vec v = Vec::Ones(a.rows());
  v /= std::sqrt(v.dot(b * v));
  double lambda = v.dot(a * v);
  for (int it = 0; it < max_iter; ++it) {
    Vec w = bsolve.solve(a * v);
    double nw = std::sqrt(std::abs(w.dot(b * w)));
    if (nw < 1e-300) return 0.0;  // A v = 0: spectrum is nonnegative, top is 0
    v = w / nw;
    double next = v.dot(a * v) / v.dot(b * v);
    if (std::abs(next - lambda) <= tol * std::max(std::abs(next), 1.0)) return next;
    lambda = next;
  }
  throw std::runtime_error("generalized_max_eigenvalue: no convergence");
}

Vec principal_angle_cosines(const Mat& q1, const Mat& q2, const SpMat& x) {
  Mat overlap = q1.transpose() * (x * q2);
  Eigen::JacobiSVD<Mat> svd(overlap);
  return svd.singularValues();
}

}  // namespace ocrom
