#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ocrom/linalg.hpp"

namespace ocrom {

enum class DistKind { kUniform, kBeta, kLoguniform };

/// One-dimensional parameter law on a compact interval.
struct Distribution1D {
  DistKind kind = DistKind::kUniform;
  double lo = 0.0, hi = 1.0;
  double a = 1.0, b = 1.0;  // Beta shape parameters

  static Distribution1D uniform(double lo, double hi);
  static Distribution1D beta(double a, double b, double lo, double hi);
  static Distribution1D loguniform(double lo, double hi);

  double pdf(double x) const;
  double cdf(double x) const;
  /// Monotone inverse CDF; Beta uses bisection to 1e-12 in probability.
  double inverse_cdf(double p) const;

  /// Parameter sanity plus a numerical check that the pdf integrates to 1
  /// over [lo, hi] within 1e-10.
  void validate() const;
};

using ProductDistribution = std::vector<Distribution1D>;

ProductDistribution uniform_box(const std::vector<std::array<double, 2>>& box);

enum class RuleKind { kMonteCarlo, kGauss, kPseudoRandom, kClenshawCurtis };

std::string rule_kind_name(RuleKind kind);

struct QuadratureRule {
  Mat nodes;  // one row per node
  Vec weights;
  RuleKind provenance = RuleKind::kMonteCarlo;
  /// Recorded at construction; differs from 1 for Clenshaw-Curtis under a
  /// non-uniform density (the rule is deliberately not renormalized).
  double weight_sum = 1.0;

  int size() const { return static_cast<int>(nodes.rows()); }
  int dim() const { return static_cast<int>(nodes.cols()); }

  double integrate(const std::vector<double>& values) const;

  /// Invariants: nonzero weights, nodes inside the box, equal 1/M weights for
  /// MC and pseudo-random, |sum w - 1| <= 1e-10 for Gauss.
  void validate(const ProductDistribution& dist) const;

  /// One row per node: coordinates then weight, 17 significant digits.
  void save_csv(const std::string& path) const;
};

/// M iid draws from the product law, every weight 1/M, reproducible per seed.
QuadratureRule monte_carlo_rule(const ProductDistribution& dist, int m,
                                std::uint64_t seed);

/// Tensor product of density-adapted Gaussian rules (Stieltjes recurrence +
/// Golub-Welsch); exact for polynomials of per-dimension degree 2n-1 against
/// the density.
QuadratureRule gauss_tensor_rule(const ProductDistribution& dist,
                                 const std::vector<int>& nodes_per_dim);
QuadratureRule gauss_tensor_rule(const ProductDistribution& dist, int nodes_per_dim);

/// Halton sequence mapped through the componentwise inverse CDF; weights 1/M.
QuadratureRule pseudo_random_rule(const ProductDistribution& dist, int m);

enum class CcWeighting {
  /// weight = CC weight x pdf(node) x (hi-lo)/2 (default; not renormalized)
  kPdfFactor,
  /// loguniform components integrated in log coordinates instead
  kLogSpace,
};

/// Tensor product of Clenshaw-Curtis rules on Chebyshev extrema, mapped
/// affinely to the support. Nodes whose weight is exactly zero (density
/// vanishing at an endpoint) are dropped.
QuadratureRule clenshaw_curtis_tensor_rule(const ProductDistribution& dist,
                                           const std::vector<int>& nodes_per_dim,
                                           CcWeighting weighting = CcWeighting::kPdfFactor);
QuadratureRule clenshaw_curtis_tensor_rule(const ProductDistribution& dist,
                                           int nodes_per_dim,
                                           CcWeighting weighting = CcWeighting::kPdfFactor);

/// 1D building blocks, exposed for direct verification.
struct Rule1D {
  Vec nodes, weights;
};
Rule1D gauss_rule_1d(const Distribution1D& dist, int n);
Rule1D clenshaw_curtis_rule_1d(const Distribution1D& dist, int n,
                               CcWeighting weighting = CcWeighting::kPdfFactor);

}  // namespace ocrom
