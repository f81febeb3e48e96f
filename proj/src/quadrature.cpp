#include "ocrom/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace ocrom {

namespace {

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Lentz continued fraction for the regularized incomplete beta function.
double beta_continued_fraction(double a, double b, double x) {
  const int kMaxIter = 500;
  const double kEps = 3e-16, kFpMin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_continued_fraction(a, b, x) / a;
  return 1.0 - bt * beta_continued_fraction(b, a, 1.0 - x) / b;
}

// composite Gauss-Legendre used for density moments and pdf normalization
// checks; 12-point base rule
const double kGL12Nodes[6] = {0.12523340851146892, 0.3678314989981802,
                              0.5873179542866175,  0.7699026741943047,
                              0.9041172563704749,  0.9815606342467192};
const double kGL12Weights[6] = {0.24914704581340277, 0.23349253653835481,
                                0.20316742672306592, 0.16007832854334622,
                                0.10693932599531843, 0.04717533638651183};

template <typename F>
double panel_integral(const F& f, double x0, double x1) {
  double mid = 0.5 * (x0 + x1), half = 0.5 * (x1 - x0);
  double sum = 0.0;
  for (int i = 0; i < 6; ++i) {
    sum += kGL12Weights[i] *
           (f(mid + half * kGL12Nodes[i]) + f(mid - half * kGL12Nodes[i]));
  }
  return sum * half;
}

// panel boundaries adapted to the distribution: geometric for loguniform
std::vector<double> panel_grid(const Distribution1D& dist, int panels) {
  std::vector<double> grid(panels + 1);
  if (dist.kind == DistKind::kLoguniform) {
    double ratio = dist.hi / dist.lo;
    for (int i = 0; i <= panels; ++i)
      grid[i] = dist.lo * std::pow(ratio, static_cast<double>(i) / panels);
  } else {
    for (int i = 0; i <= panels; ++i)
      grid[i] = dist.lo + (dist.hi - dist.lo) * static_cast<double>(i) / panels;
  }
  return grid;
}

template <typename F>
double integrate_against_pdf(const Distribution1D& dist, const F& f, int panels = 240) {
  auto grid = panel_grid(dist, panels);
  auto integrand = [&](double x) { return f(x) * dist.pdf(x); };
  double sum = 0.0;
  for (int i = 0; i < panels; ++i) sum += panel_integral(integrand, grid[i], grid[i + 1]);
  return sum;
}

}  // namespace

Distribution1D Distribution1D::uniform(double lo, double hi) {
  Distribution1D d;
  d.kind = DistKind::kUniform;
  d.lo = lo;
  d.hi = hi;
  d.validate();
  return d;
}

Distribution1D Distribution1D::beta(double a, double b, double lo, double hi) {
  Distribution1D d;
  d.kind = DistKind::kBeta;
  d.a = a;
  d.b = b;
  d.lo = lo;
  d.hi = hi;
  d.validate();
  return d;
}

Distribution1D Distribution1D::loguniform(double lo, double hi) {
  Distribution1D d;
  d.kind = DistKind::kLoguniform;
  d.lo = lo;
  d.hi = hi;
  d.validate();
  return d;
}

double Distribution1D::pdf(double x) const {
  if (x < lo || x > hi) return 0.0;
  double w = hi - lo;
  switch (kind) {
    case DistKind::kUniform:
      return 1.0 / w;
    case DistKind::kBeta: {
      double s = (x - lo) / w;
      if ((s == 0.0 && a > 1.0) || (s == 1.0 && b > 1.0)) return 0.0;
      double ln = (a - 1.0) * std::log(s) + (b - 1.0) * std::log1p(-s) - log_beta(a, b);
      return std::exp(ln) / w;
    }
    case DistKind::kLoguniform:
      return 1.0 / (x * std::log(hi / lo));
  }
  return 0.0;
}

double Distribution1D::cdf(double x) const {
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  switch (kind) {
    case DistKind::kUniform:
      return (x - lo) / (hi - lo);
    case DistKind::kBeta:
      return regularized_incomplete_beta(a, b, (x - lo) / (hi - lo));
    case DistKind::kLoguniform:
      return std::log(x / lo) / std::log(hi / lo);
  }
  return 0.0;
}

double Distribution1D::inverse_cdf(double p) const {
  p = std::clamp(p, 0.0, 1.0);
  switch (kind) {
    case DistKind::kUniform:
      return lo + p * (hi - lo);
    case DistKind::kLoguniform:
      return lo * std::pow(hi / lo, p);
    case DistKind::kBeta: {
      double left = lo, right = hi;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (left + right);
        double c = cdf(mid);
        if (std::abs(c - p) <= 1e-12) return mid;
        (c < p ? left : right) = mid;
        if (right - left <= 1e-15 * (hi - lo)) return mid;
      }
      throw std::runtime_error("inverse_cdf: bisection did not converge");
    }
  }
  return lo;
}

void Distribution1D::validate() const {
  if (!(lo < hi)) throw std::invalid_argument("distribution support needs lo < hi");
  if (kind == DistKind::kBeta && (a <= 0.0 || b <= 0.0))
    throw std::invalid_argument("Beta shapes must be positive");
  if (kind == DistKind::kLoguniform && lo <= 0.0)
    throw std::invalid_argument("Loguniform requires lo > 0");
  double mass = integrate_against_pdf(*this, [](double) { return 1.0; });
  if (std::abs(mass - 1.0) > 1e-10)
    throw std::invalid_argument("pdf does not integrate to 1 (got " +
                                std::to_string(mass) + ")");
}

ProductDistribution uniform_box(const std::vector<std::array<double, 2>>& box) {
  ProductDistribution dist;
  for (const auto& [lo, hi] : box) dist.push_back(Distribution1D::uniform(lo, hi));
  return dist;
}

std::string rule_kind_name(RuleKind kind) {
  switch (kind) {
    case RuleKind::kMonteCarlo: return "mc";
    case RuleKind::kGauss: return "gauss";
    case RuleKind::kPseudoRandom: return "pseudo";
    case RuleKind::kClenshawCurtis: return "cc";
  }
  return "?";
}

double QuadratureRule::integrate(const std::vector<double>& values) const {
  if (static_cast<int>(values.size()) != size())
    throw std::invalid_argument("integrate: value count != node count");
  double sum = 0.0;
  for (int i = 0; i < size(); ++i) sum += weights[i] * values[i];
  return sum;
}

void QuadratureRule::validate(const ProductDistribution& dist) const {
  if (nodes.rows() != weights.size())
    throw std::invalid_argument("rule: node/weight count mismatch");
  if (dim() != static_cast<int>(dist.size()))
    throw std::invalid_argument("rule: dimension mismatch");
  for (int i = 0; i < size(); ++i) {
    if (weights[i] == 0.0) throw std::invalid_argument("rule: zero weight");
    for (int d = 0; d < dim(); ++d) {
      double pad = 1e-12 * (dist[d].hi - dist[d].lo);
      if (nodes(i, d) < dist[d].lo - pad || nodes(i, d) > dist[d].hi + pad)
        throw std::invalid_argument("rule: node outside the parameter box");
    }
  }
  if (provenance == RuleKind::kMonteCarlo || provenance == RuleKind::kPseudoRandom) {
    double expected = 1.0 / size();
    for (int i = 0; i < size(); ++i)
      if (weights[i] != expected)
        throw std::invalid_argument("rule: sampling weights must equal 1/M");
  } else if (provenance == RuleKind::kGauss) {
    if (std::abs(weights.sum() - 1.0) > 1e-10)
      throw std::invalid_argument("rule: Gauss weights must sum to 1");
  }
}

void QuadratureRule::save_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  for (int i = 0; i < size(); ++i) {
    for (int d = 0; d < dim(); ++d) std::fprintf(f, "%.17g,", nodes(i, d));
    std::fprintf(f, "%.17g\n", weights[i]);
  }
  std::fclose(f);
}

QuadratureRule monte_carlo_rule(const ProductDistribution& dist, int m,
                                std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("monte_carlo_rule: need M >= 1");
  std::mt19937_64 rng(seed);
  auto uniform01 = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  QuadratureRule rule;
  rule.provenance = RuleKind::kMonteCarlo;
  rule.nodes.resize(m, dist.size());
  rule.weights = Vec::Constant(m, 1.0 / m);
  for (int i = 0; i < m; ++i)
    for (size_t d = 0; d < dist.size(); ++d)
      rule.nodes(i, d) = dist[d].inverse_cdf(uniform01());
  rule.weight_sum = 1.0;
  rule.validate(dist);
  return rule;
}

Rule1D gauss_rule_1d(const Distribution1D& dist, int n) {
  if (n < 1) throw std::invalid_argument("gauss_rule_1d: need n >= 1");
  // Stieltjes procedure: recurrence coefficients of the orthogonal
  // polynomials of the density, via composite quadrature on the support
  const int panels = 240;
  auto grid = panel_grid(dist, panels);
  std::vector<double> xs, ws;  // discretized measure
  for (int i = 0; i < panels; ++i) {
    double mid = 0.5 * (grid[i] + grid[i + 1]), half = 0.5 * (grid[i + 1] - grid[i]);
    for (int k = 0; k < 6; ++k) {
      for (double sign : {-1.0, 1.0}) {
        double x = mid + sign * half * kGL12Nodes[k];
        xs.push_back(x);
        ws.push_back(kGL12Weights[k] * half * dist.pdf(x));
      }
    }
  }
  const int npts = static_cast<int>(xs.size());
  std::vector<double> alpha(n), beta(n);
  std::vector<double> pk(npts, 1.0), pkm1(npts, 0.0);
  double norm2 = 0.0;
  for (int i = 0; i < npts; ++i) norm2 += ws[i];
  double norm2_prev = 1.0;
  for (int k = 0; k < n; ++k) {
    if (!(norm2 > 0.0) || !std::isfinite(norm2))
      throw std::runtime_error("gauss_rule_1d: moment computation failed");
    double xpp = 0.0;
    for (int i = 0; i < npts; ++i) xpp += ws[i] * xs[i] * pk[i] * pk[i];
    alpha[k] = xpp / norm2;
    beta[k] = k == 0 ? norm2 : norm2 / norm2_prev;
    // advance the recurrence
    std::vector<double> pkp1(npts);
    for (int i = 0; i < npts; ++i)
      pkp1[i] = (xs[i] - alpha[k]) * pk[i] - (k == 0 ? 0.0 : beta[k]) * pkm1[i];
    pkm1.swap(pk);
    pk.swap(pkp1);
    norm2_prev = norm2;
    norm2 = 0.0;
    for (int i = 0; i < npts; ++i) norm2 += ws[i] * pk[i] * pk[i];
  }

  // Golub-Welsch: eigen-decompose the Jacobi matrix
  Mat jacobi = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    jacobi(k, k) = alpha[k];
    if (k + 1 < n) {
      double off = std::sqrt(beta[k + 1]);
      jacobi(k, k + 1) = off;
      jacobi(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(jacobi);
  Rule1D rule;
  rule.nodes = eig.eigenvalues();
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    double first = eig.eigenvectors()(0, k);
    rule.weights[k] = beta[0] * first * first;
  }
  return rule;
}

namespace {

QuadratureRule tensorize(const std::vector<Rule1D>& rules, RuleKind kind) {
  int dims = static_cast<int>(rules.size());
  long total = 1;
  for (const auto& r : rules) total *= r.nodes.size();
  QuadratureRule rule;
  rule.provenance = kind;
  rule.nodes.resize(total, dims);
  rule.weights.resize(total);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    double w = 1.0;
    for (int d = 0; d < dims; ++d) {
      long nd = rules[d].nodes.size();
      long i = rem % nd;
      rem /= nd;
      rule.nodes(idx, d) = rules[d].nodes[i];
      w *= rules[d].weights[i];
    }
    rule.weights[idx] = w;
  }
  rule.weight_sum = rule.weights.sum();
  return rule;
}

}  // namespace

QuadratureRule gauss_tensor_rule(const ProductDistribution& dist,
                                 const std::vector<int>& nodes_per_dim) {
  if (nodes_per_dim.size() != dist.size())
    throw std::invalid_argument("gauss_tensor_rule: per-dimension count mismatch");
  std::vector<Rule1D> rules;
  for (size_t d = 0; d < dist.size(); ++d)
    rules.push_back(gauss_rule_1d(dist[d], nodes_per_dim[d]));
  QuadratureRule rule = tensorize(rules, RuleKind::kGauss);
  rule.validate(dist);
  return rule;
}

QuadratureRule gauss_tensor_rule(const ProductDistribution& dist, int nodes_per_dim) {
  return gauss_tensor_rule(dist, std::vector<int>(dist.size(), nodes_per_dim));
}

namespace {

double radical_inverse(long index, int base) {
  double result = 0.0, f = 1.0 / base;
  while (index > 0) {
    result += f * (index % base);
    index /= base;
    f /= base;
  }
  return result;
}

int nth_prime(int n) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  if (n < 0 || n >= static_cast<int>(std::size(primes)))
    throw std::invalid_argument("pseudo_random_rule: dimension too large");
  return primes[n];
}

}  // namespace

QuadratureRule pseudo_random_rule(const ProductDistribution& dist, int m) {
  if (m < 1) throw std::invalid_argument("pseudo_random_rule: need M >= 1");
  // the first Halton points are discarded (startup bias of the short prefix)
  const long kBurnIn = 20;
  QuadratureRule rule;
  rule.provenance = RuleKind::kPseudoRandom;
  rule.nodes.resize(m, dist.size());
  rule.weights = Vec::Constant(m, 1.0 / m);
  for (int i = 0; i < m; ++i)
    for (size_t d = 0; d < dist.size(); ++d)
      rule.nodes(i, d) = dist[d].inverse_cdf(
          radical_inverse(kBurnIn + i, nth_prime(static_cast<int>(d))));
  rule.weight_sum = 1.0;
  rule.validate(dist);
  return rule;
}

namespace {

// Clenshaw-Curtis on [-1,1] (Chebyshev extrema), total weight 2
Rule1D clenshaw_curtis_reference(int n) {
  if (n < 2) throw std::invalid_argument("clenshaw_curtis: need n >= 2");
  const int segments = n - 1;
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int k = 0; k <= segments; ++k)
    rule.nodes[k] = -std::cos(M_PI * k / segments);  // ascending
  double end_weight = segments % 2 == 0
                          ? 1.0 / (static_cast<double>(segments) * segments - 1.0)
                          : 1.0 / (static_cast<double>(segments) * segments);
  rule.weights[0] = end_weight;
  rule.weights[segments] = end_weight;
  for (int k = 1; k < segments; ++k) {
    double theta = M_PI * k / segments;
    double v = 1.0;
    for (int j = 1; j <= (segments - 1) / 2; ++j)
      v -= 2.0 * std::cos(2.0 * j * theta) / (4.0 * j * j - 1.0);
    if (segments % 2 == 0)
      v -= std::cos(segments * theta) / (static_cast<double>(segments) * segments - 1.0);
    rule.weights[k] = 2.0 * v / segments;
  }
  return rule;
}

}  // namespace

Rule1D clenshaw_curtis_rule_1d(const Distribution1D& dist, int n, CcWeighting weighting) {
  Rule1D ref = clenshaw_curtis_reference(n);
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (weighting == CcWeighting::kLogSpace && dist.kind == DistKind::kLoguniform) {
    // change of variables t = log x: the loguniform becomes uniform in t
    double tlo = std::log(dist.lo), thi = std::log(dist.hi);
    for (int k = 0; k < n; ++k) {
      double t = tlo + 0.5 * (ref.nodes[k] + 1.0) * (thi - tlo);
      rule.nodes[k] = std::exp(t);
      rule.weights[k] = ref.weights[k] / 2.0;
    }
    return rule;
  }
  for (int k = 0; k < n; ++k) {
    double x = dist.lo + 0.5 * (ref.nodes[k] + 1.0) * (dist.hi - dist.lo);
    rule.nodes[k] = x;
    rule.weights[k] = ref.weights[k] * dist.pdf(x) * 0.5 * (dist.hi - dist.lo);
  }
  return rule;
}

QuadratureRule clenshaw_curtis_tensor_rule(const ProductDistribution& dist,
                                           const std::vector<int>& nodes_per_dim,
                                           CcWeighting weighting) {
  if (nodes_per_dim.size() != dist.size())
    throw std::invalid_argument("clenshaw_curtis_tensor_rule: per-dimension count mismatch");
  std::vector<Rule1D> rules;
  for (size_t d = 0; d < dist.size(); ++d) {
    Rule1D r = clenshaw_curtis_rule_1d(dist[d], nodes_per_dim[d], weighting);
    // a density vanishing at an endpoint zeroes that node's weight; such
    // nodes contribute nothing and are dropped to keep all weights nonzero
    std::vector<int> keep;
    for (int k = 0; k < r.nodes.size(); ++k)
      if (r.weights[k] != 0.0) keep.push_back(k);
    if (keep.empty())
      throw std::runtime_error("clenshaw_curtis_tensor_rule: all weights vanished");
    Rule1D filtered;
    filtered.nodes.resize(keep.size());
    filtered.weights.resize(keep.size());
    for (size_t k = 0; k < keep.size(); ++k) {
      filtered.nodes[k] = r.nodes[keep[k]];
      filtered.weights[k] = r.weights[keep[k]];
    }
    rules.push_back(std::move(filtered));
  }
  QuadratureRule rule = tensorize(rules, RuleKind::kClenshawCurtis);
  rule.validate(dist);
  return rule;
}

QuadratureRule clenshaw_curtis_tensor_rule(const ProductDistribution& dist,
                                           int nodes_per_dim, CcWeighting weighting) {
  return clenshaw_curtis_tensor_rule(dist, std::vector<int>(dist.size(), nodes_per_dim),
                                     weighting);
}

}  // namespace ocrom
