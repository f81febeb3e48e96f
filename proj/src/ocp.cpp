#include "ocrom/ocp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ocrom {

namespace {

std::string format_mu(const Vec& mu) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < mu.size(); ++i) os << (i ? ", " : "") << mu[i];
  os << ")";
  return os.str();
}

/// Triplet accumulator for block-structured sparse matrices.
class BlockBuilder {
 public:
  BlockBuilder(int rows, int cols) : rows_(rows), cols_(cols) {}

  void add(const SpMat& block, int row_offset, int col_offset, double scale = 1.0) {
    for (int k = 0; k < block.outerSize(); ++k)
      for (SpMat::InnerIterator it(block, k); it; ++it)
        triplets_.emplace_back(row_offset + it.row(), col_offset + it.col(),
                               scale * it.value());
  }

  SpMat build() const { return from_triplets(rows_, cols_, triplets_); }

 private:
  int rows_, cols_;
  std::vector<Triplet> triplets_;
};

Vec row_sums(const SpMat& a) {
  return a * Vec::Ones(a.cols());
}

}  // namespace

void AffineMatrixFamily::add(CoeffFn coeff, SpMat block) {
  if (terms.empty() && rows == 0) {
    rows = static_cast<int>(block.rows());
    cols = static_cast<int>(block.cols());
  }
  if (block.rows() != rows || block.cols() != cols)
    throw std::invalid_argument("affine family: term dimension mismatch");
  terms.push_back({std::move(coeff), std::move(block)});
}

SpMat AffineMatrixFamily::evaluate(const Vec& mu) const {
  SpMat sum(rows, cols);
  for (const auto& term : terms) sum += term.coeff(mu) * term.block;
  sum.makeCompressed();
  return sum;
}

void AffineVectorFamily::add(CoeffFn coeff, Vec block) {
  if (terms.empty() && rows == 0) rows = static_cast<int>(block.size());
  if (block.size() != rows)
    throw std::invalid_argument("affine family: term dimension mismatch");
  terms.push_back({std::move(coeff), std::move(block)});
}

Vec AffineVectorFamily::evaluate(const Vec& mu) const {
  Vec sum = Vec::Zero(rows);
  for (const auto& term : terms) sum += term.coeff(mu) * term.block;
  return sum;
}

double AffineScalarFamily::evaluate(const Vec& mu) const {
  double sum = 0.0;
  for (const auto& term : terms) sum += term.coeff(mu) * term.value;
  return sum;
}

void OCPDefinition::validate() const {
  if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
  if (A.rows != n_p() || B.rows != n_p())
    throw std::invalid_argument("state-equation row mismatch");
  if (obs.rows != n_y() || obs.cols != n_y())
    throw std::invalid_argument("observation block mismatch");
  if (control_gram.rows != n_u() || control_gram.cols != n_u())
    throw std::invalid_argument("control block mismatch");
  if (g.rows != n_p() || obs_rhs.rows != n_y())
    throw std::invalid_argument("right-hand-side dimension mismatch");
  auto check_spd = [](const SpMat& x, const char* what) {
    if (!is_symmetric(x, 1e-12))
      throw std::invalid_argument(std::string(what) + " is not symmetric");
    Eigen::SimplicialLDLT<SpMat> ldlt(x);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
      throw std::invalid_argument(std::string(what) + " is not positive definite");
  };
  check_spd(X_Y, "X_Y");
  check_spd(X_U, "X_U");
  check_spd(X_P, "X_P");
  auto check_partition = [](const std::vector<FieldSpan>& fields, int total,
                            const char* what) {
    int covered = 0;
    for (const auto& f : fields) {
      if (f.offset != covered)
        throw std::invalid_argument(std::string(what) + " fields are not contiguous");
      covered += f.size;
    }
    if (covered != total)
      throw std::invalid_argument(std::string(what) + " fields do not cover the block");
  };
  check_partition(state_fields, n_y(), "state");
  check_partition(control_fields, n_u(), "control");
  check_partition(adjoint_fields, n_p(), "adjoint");
}

bool OCPDefinition::mu_in_box(const Vec& mu) const {
  if (mu.size() != static_cast<int>(param_box.size())) return false;
  for (int i = 0; i < mu.size(); ++i)
    if (mu[i] < param_box[i][0] || mu[i] > param_box[i][1]) return false;
  return true;
}

double OCPDefinition::objective(const Vec& y, const Vec& u, const Vec& mu) const {
  SpMat obs_mu = obs.evaluate(mu);
  SpMat q_mu = control_gram.evaluate(mu);
  double tracking = 0.5 * y.dot(obs_mu * y) - y.dot(obs_rhs.evaluate(mu)) +
                    objective_offset.evaluate(mu);
  return tracking + 0.5 * alpha * u.dot(q_mu * u);
}

Vec OCPDefinition::lift_field(const Vec& stacked, const FieldSpan& span) const {
  return scalar_dofmap.lift(stacked.segment(span.offset, span.size));
}

double OCPDefinition::trilinear_scale(const Vec& mu) const {
  if (!trilinear) return 0.0;
  return mu[trilinear->mu_index];
}

Vec OCPDefinition::nonlinear_residual(const Vec& y) const {
  if (!trilinear) return Vec::Zero(n_p());
  const auto& tri = *trilinear;
  Vec v_full = lift_field(y, state_fields[tri.v_field]);
  Vec rho_full = lift_field(y, state_fields[tri.rho_field]);
  Vec n_full = tri.form->apply(v_full, rho_full);
  const FieldSpan& w = adjoint_fields[tri.w_field];
  Vec out = Vec::Zero(n_p());
  out.segment(w.offset, w.size) = scalar_dofmap.restrict_free(n_full);
  return out;
}

SpMat OCPDefinition::nonlinear_jacobian(const Vec& y) const {
  if (!trilinear) return SpMat(n_p(), n_y());
  const auto& tri = *trilinear;
  Vec v_full = lift_field(y, state_fields[tri.v_field]);
  Vec rho_full = lift_field(y, state_fields[tri.rho_field]);
  const auto& free = scalar_dofmap.free_dofs;
  SpMat dv = restrict_matrix(tri.form->derivative_first(rho_full), free, free);
  SpMat drho = restrict_matrix(tri.form->derivative_second(v_full), free, free);
  const FieldSpan& w = adjoint_fields[tri.w_field];
  BlockBuilder builder(n_p(), n_y());
  builder.add(dv, w.offset, state_fields[tri.v_field].offset);
  builder.add(drho, w.offset, state_fields[tri.rho_field].offset);
  return builder.build();
}

SpMat OCPDefinition::nonlinear_hessian(const Vec& p) const {
  if (!trilinear) return SpMat(n_y(), n_y());
  const auto& tri = *trilinear;
  Vec w_full = lift_field(p, adjoint_fields[tri.w_field]);
  const auto& free = scalar_dofmap.free_dofs;
  SpMat t_w = restrict_matrix(tri.form->hessian_weighted(w_full), free, free);
  const FieldSpan& v = state_fields[tri.v_field];
  const FieldSpan& rho = state_fields[tri.rho_field];
  BlockBuilder builder(n_y(), n_y());
  builder.add(t_w, v.offset, rho.offset);
  builder.add(SpMat(t_w.transpose()), rho.offset, v.offset);
  return builder.build();
}

KKTSystem assemble_kkt(const OCPDefinition& def, const Vec& mu) {
  SpMat a = def.A.evaluate(mu);
  SpMat b = def.B.evaluate(mu);
  SpMat obs = def.obs.evaluate(mu);
  SpMat q = def.control_gram.evaluate(mu);
  const int ny = def.n_y(), nu = def.n_u(), np = def.n_p();
  BlockBuilder builder(ny + nu + np, ny + nu + np);
  builder.add(obs, 0, 0);
  builder.add(SpMat(a.transpose()), 0, ny + nu);
  builder.add(q, ny, ny, def.alpha);
  builder.add(SpMat(b.transpose()), ny, ny + nu);
  builder.add(a, ny + nu, 0);
  builder.add(b, ny + nu, ny);
  KKTSystem sys;
  sys.matrix = builder.build();
  sys.rhs = Vec::Zero(ny + nu + np);
  sys.rhs.head(ny) = def.obs_rhs.evaluate(mu);
  sys.rhs.tail(np) = def.g.evaluate(mu);
  return sys;
}

namespace {

TruthSolution split_solution(const OCPDefinition& def, const Vec& x, const Vec& mu) {
  TruthSolution sol;
  sol.y = x.head(def.n_y());
  sol.u = x.segment(def.n_y(), def.n_u());
  sol.p = x.tail(def.n_p());
  sol.mu = mu;
  sol.objective = def.objective(sol.y, sol.u, mu);
  return sol;
}

}  // namespace

TruthSolution solve_truth(const OCPDefinition& def, const Vec& mu, double tol) {
  KKTSystem sys = assemble_kkt(def, mu);
  std::unique_ptr<SparseSolver> solver;
  try {
    solver = std::make_unique<SparseSolver>(sys.matrix);
  } catch (const std::exception& e) {
    throw std::runtime_error("truth KKT system not invertible at mu = " +
                             format_mu(mu) + ": " + e.what());
  }
  Vec x = solver->solve(sys.rhs);
  double residual = solver->relative_residual(x, sys.rhs);
  if (!(residual <= tol))
    throw std::runtime_error("truth solve residual " + std::to_string(residual) +
                             " exceeds tolerance at mu = " + format_mu(mu));
  TruthSolution sol = split_solution(def, x, mu);
  sol.residual = residual;
  return sol;
}

namespace {

/// Newton iteration on residual/jacobian callbacks. The relative scale is the
/// norm of the linear right-hand side (absolute when that vanishes).
struct NewtonProblem {
  std::function<Vec(const Vec&)> residual;
  std::function<SpMat(const Vec&)> jacobian;
  double scale = 1.0;
};

NewtonReport run_newton(const NewtonProblem& problem, Vec& x, const NewtonOptions& opts) {
  NewtonReport report;
  Vec r = problem.residual(x);
  double rel = r.norm() / problem.scale;
  report.residuals.push_back(rel);
  int growth_streak = 0;
  for (int it = 0; it < opts.max_iterations && rel > opts.tolerance; ++it) {
    SparseSolver solver(problem.jacobian(x));
    Vec dx = solver.solve(-r);
    Vec x_next = x + dx;
    Vec r_next = problem.residual(x_next);
    if (opts.damping) {
      for (int halving = 0; halving < 4 && r_next.norm() > r.norm(); ++halving) {
        dx *= 0.5;
        x_next = x + dx;
        r_next = problem.residual(x_next);
      }
    }
    double rel_next = r_next.norm() / problem.scale;
    growth_streak = rel_next > rel ? growth_streak + 1 : 0;
    x = x_next;
    r = r_next;
    rel = rel_next;
    report.residuals.push_back(rel);
    ++report.iterations;
    if (growth_streak >= 3) {
      report.diverged = true;
      break;
    }
  }
  report.converged = rel <= opts.tolerance;
  return report;
}

}  // namespace

TruthSolution solve_truth_nonlinear(const OCPDefinition& def, const Vec& mu,
                                    const NewtonOptions& opts) {
  KKTSystem linear = assemble_kkt(def, mu);
  const int ny = def.n_y(), nu = def.n_u(), np = def.n_p();
  const double scale_mu = def.trilinear_scale(mu);

  NewtonProblem problem;
  problem.scale = std::max(linear.rhs.norm(), 1e-300);
  problem.residual = [&](const Vec& x) {
    Vec r = linear.matrix * x - linear.rhs;
    if (scale_mu != 0.0) {
      Vec y = x.head(ny), p = x.tail(np);
      r.tail(np) += scale_mu * def.nonlinear_residual(y);
      r.head(ny) += scale_mu * (def.nonlinear_jacobian(y).transpose() * p);
    }
    return r;
  };
  problem.jacobian = [&](const Vec& x) {
    if (scale_mu == 0.0) return linear.matrix;
    Vec y = x.head(ny), p = x.tail(np);
    SpMat dn = def.nonlinear_jacobian(y);
    SpMat hess = def.nonlinear_hessian(p);
    BlockBuilder builder(ny + nu + np, ny + nu + np);
    builder.add(hess, 0, 0, scale_mu);
    builder.add(SpMat(dn.transpose()), 0, ny + nu, scale_mu);
    builder.add(dn, ny + nu, 0, scale_mu);
    return SpMat(linear.matrix + builder.build());
  };

  Vec x = Vec::Zero(ny + nu + np);
  NewtonReport report = run_newton(problem, x, opts);
  if (report.diverged)
    throw std::runtime_error("Newton iteration diverged at mu = " + format_mu(mu));
  if (!report.converged)
    throw std::runtime_error("Newton did not converge within " +
                             std::to_string(opts.max_iterations) +
                             " iterations at mu = " + format_mu(mu));
  TruthSolution sol = split_solution(def, x, mu);
  sol.residual = report.residuals.back();
  sol.newton = report;
  return sol;
}

Vec solve_state_only(const OCPDefinition& def, const Vec& mu, const Vec& u,
                     const NewtonOptions& opts) {
  SpMat a = def.A.evaluate(mu);
  Vec rhs = def.g.evaluate(mu) - def.B.evaluate(mu) * u;
  const double scale_mu = def.trilinear_scale(mu);
  if (scale_mu == 0.0) {
    SparseSolver solver(a);
    return solver.solve(rhs);
  }
  NewtonProblem problem;
  problem.scale = std::max(rhs.norm(), 1e-300);
  problem.residual = [&](const Vec& y) {
    return Vec(a * y + scale_mu * def.nonlinear_residual(y) - rhs);
  };
  problem.jacobian = [&](const Vec& y) {
    return SpMat(a + scale_mu * def.nonlinear_jacobian(y));
  };
  Vec y = Vec::Zero(def.n_y());
  NewtonReport report = run_newton(problem, y, opts);
  if (!report.converged)
    throw std::runtime_error("state solve did not converge at mu = " + format_mu(mu));
  return y;
}

Vec solve_adjoint_only(const OCPDefinition& def, const Vec& mu, const Vec& y) {
  SpMat a = def.A.evaluate(mu);
  const double scale_mu = def.trilinear_scale(mu);
  if (scale_mu != 0.0) a = a + scale_mu * def.nonlinear_jacobian(y);
  SparseSolver solver(SpMat(a.transpose()));
  return solver.solve(Vec(def.obs_rhs.evaluate(mu) - def.obs.evaluate(mu) * y));
}

Vec objective_gradient(const OCPDefinition& def, const Vec& mu, const Vec& u) {
  Vec y = solve_state_only(def, mu, u);
  Vec p = solve_adjoint_only(def, mu, y);
  return def.alpha * (def.control_gram.evaluate(mu) * u) +
         def.B.evaluate(mu).transpose() * p;
}

Vec generate_desired_state(const OCPDefinition& def, const Vec& forcing,
                           const Vec& mu_gen, const NewtonOptions& opts) {
  Vec y = solve_state_only(def, mu_gen, forcing, opts);
  Vec z = Vec::Zero(def.n_y());
  const FieldSpan& first = def.state_fields.front();
  z.segment(first.offset, first.size) = y.segment(first.offset, first.size);
  return z;
}

Vec interpolate_control(const OCPDefinition& def,
                        const std::function<double(double, double)>& f) {
  if (def.n_u() != def.mesh->num_vertices())
    throw std::invalid_argument("interpolate_control needs a vertex-based control space");
  Vec u(def.n_u());
  for (int v = 0; v < def.mesh->num_vertices(); ++v)
    u[v] = f(def.mesh->vertices[v].x, def.mesh->vertices[v].y);
  return u;
}

namespace {

OCPDefinition build_gulf(std::shared_ptr<const Mesh> mesh, double alpha) {
  if (!mesh->has_subdomain(kControlRegion))
    throw std::invalid_argument("gulf case: mesh lacks the control-region label");
  if (!mesh->has_subdomain(kObservationRegion))
    throw std::invalid_argument("gulf case: mesh lacks the observation-region label");

  OCPDefinition def;
  def.case_name = "gulf";
  def.mesh = mesh;
  def.scalar_dofmap = build_dofmap(*mesh);
  const auto& free = def.scalar_dofmap.free_dofs;
  const int n = def.scalar_dofmap.n_free();

  SpMat mass = assemble_mass(*mesh);
  SpMat stiffness = assemble_stiffness(*mesh);
  SpMat adv1 = assemble_advection(*mesh, 1);
  SpMat adv2 = assemble_advection(*mesh, 2);
  SpMat mass_obs = assemble_mass(*mesh, kObservationRegion);
  SpMat mass_ctrl = assemble_mass(*mesh, kControlRegion);

  def.A.add([](const Vec& mu) { return mu[0]; }, restrict_matrix(stiffness, free, free));
  def.A.add([](const Vec& mu) { return mu[1]; }, restrict_matrix(adv1, free, free));
  def.A.add([](const Vec& mu) { return mu[2]; }, restrict_matrix(adv2, free, free));

  const double l0 = 1000.0;
  Vec b_column = -l0 * restrict_vector(row_sums(mass_ctrl), free);
  std::vector<Triplet> bt;
  for (int i = 0; i < n; ++i)
    if (b_column[i] != 0.0) bt.emplace_back(i, 0, b_column[i]);
  def.B.add([](const Vec&) { return 1.0; }, from_triplets(n, 1, bt));

  def.obs.add([](const Vec&) { return 1.0; }, restrict_matrix(mass_obs, free, free));

  double area_ctrl = mesh->subdomain_area(kControlRegion);
  std::vector<Triplet> qt{Triplet(0, 0, area_ctrl)};
  def.control_gram.add([](const Vec&) { return 1.0; }, from_triplets(1, 1, qt));

  def.g.rows = n;  // zero source

  const double z_d_level = 0.2;
  Vec obs_rhs = restrict_vector(Vec(mass_obs * Vec::Constant(mesh->num_vertices(), z_d_level)), free);
  def.obs_rhs.add([](const Vec&) { return 1.0; }, obs_rhs);
  double area_obs = mesh->subdomain_area(kObservationRegion);
  def.objective_offset.terms.push_back(
      {[](const Vec&) { return 1.0; }, 0.5 * z_d_level * z_d_level * area_obs});

  def.X_Y = restrict_matrix(SpMat(stiffness + mass), free, free);
  def.X_P = def.X_Y;
  std::vector<Triplet> xu{Triplet(0, 0, 1.0)};
  def.X_U = from_triplets(1, 1, xu);

  def.state_fields = {{"y", 0, n}};
  def.control_fields = {{"u", 0, 1}};
  def.adjoint_fields = {{"p", 0, n}};

  def.alpha = alpha;
  def.L0 = l0;
  def.param_box = {{0.5, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}};
  def.validate();
  return def;
}

OCPDefinition build_quasi_geostrophic(std::shared_ptr<const Mesh> mesh, double alpha,
                                      bool nonlinear) {
  for (const auto& e : mesh->boundary_edges)
    if (e.tag != BoundaryTag::kDirichlet)
      throw std::invalid_argument(
          "quasi-geostrophic cases need a fully Dirichlet boundary");

  OCPDefinition def;
  def.case_name = nonlinear ? "qg_nonlinear" : "stommel_munk";
  def.mesh = mesh;
  def.scalar_dofmap = build_dofmap(*mesh);
  const auto& free = def.scalar_dofmap.free_dofs;
  const int n = def.scalar_dofmap.n_free();
  const int nv = mesh->num_vertices();
  std::vector<int> all(nv);
  for (int i = 0; i < nv; ++i) all[i] = i;

  SpMat mass = assemble_mass(*mesh);
  SpMat stiffness = assemble_stiffness(*mesh);
  SpMat adv1 = assemble_advection(*mesh, 1);
  SpMat mass_ff = restrict_matrix(mass, free, free);
  SpMat stiff_ff = restrict_matrix(stiffness, free, free);
  SpMat adv1_ff = restrict_matrix(adv1, free, free);
  SpMat mass_fa = restrict_matrix(mass, free, all);

  // state y = (v, rho), adjoint p = (w, q); state-equation rows are the
  // (w-test, q-test) pair
  {
    BlockBuilder t1(2 * n, 2 * n);
    t1.add(adv1_ff, 0, 0);
    t1.add(stiff_ff, n, 0);
    t1.add(mass_ff, n, n);
    def.A.add([](const Vec&) { return 1.0; }, t1.build());
    BlockBuilder t2(2 * n, 2 * n);
    t2.add(mass_ff, 0, n);
    def.A.add([](const Vec& mu) { return mu[0]; }, t2.build());
    BlockBuilder t3(2 * n, 2 * n);
    t3.add(stiff_ff, 0, n);
    def.A.add([](const Vec& mu) { return mu[1]; }, t3.build());
  }
  {
    BlockBuilder b(2 * n, nv);
    b.add(mass_fa, 0, 0, -1.0);
    def.B.add([](const Vec&) { return 1.0; }, b.build());
  }
  {
    BlockBuilder o(2 * n, 2 * n);
    o.add(mass_ff, 0, 0);
    def.obs.add([](const Vec&) { return 1.0; }, o.build());
  }
  def.control_gram.add([](const Vec&) { return 1.0; }, mass);
  def.g.rows = 2 * n;

  SpMat h1_ff = restrict_matrix(SpMat(stiffness + mass), free, free);
  {
    BlockBuilder x(2 * n, 2 * n);
    x.add(h1_ff, 0, 0);
    x.add(h1_ff, n, n);
    def.X_Y = x.build();
  }
  def.X_P = def.X_Y;
  def.X_U = mass;

  def.state_fields = {{"v", 0, n}, {"rho", n, n}};
  def.control_fields = {{"u", 0, nv}};
  def.adjoint_fields = {{"w", 0, n}, {"q", n, n}};

  def.alpha = alpha;
  def.param_box = {{1e-4, 1.0}, {0.07 * 0.07 * 0.07, 1.0}, {1e-4, 0.045 * 0.045}};

  if (nonlinear) {
    TrilinearCoupling tri;
    tri.form = std::make_shared<TrilinearForm>(*mesh);
    tri.mu_index = 2;
    tri.v_field = 0;
    tri.rho_field = 1;
    tri.w_field = 0;
    def.trilinear = tri;
  }

  // desired profile simulated from the state equation under the reference
  // wind stress -sin(pi x2)
  Vec forcing = interpolate_control(def, [](double, double x2) {
    return -std::sin(M_PI * x2);
  });
  const double mu2_gen = 0.07 * 0.07 * 0.07;
  Vec mu_gen(3);
  mu_gen << 0.0, mu2_gen, nonlinear ? 0.07 * 0.07 : 0.0;
  Vec z_d = generate_desired_state(def, forcing, mu_gen);

  Vec obs_rhs_block = def.obs.terms[0].block * z_d;
  def.obs_rhs.add([](const Vec&) { return 1.0; }, obs_rhs_block);
  def.objective_offset.terms.push_back(
      {[](const Vec&) { return 1.0; }, 0.5 * z_d.dot(obs_rhs_block)});

  def.validate();
  return def;
}

}  // namespace

OCPDefinition builtin_case(const std::string& name, std::shared_ptr<const Mesh> mesh,
                           std::optional<double> alpha_override) {
  if (name == "gulf") return build_gulf(std::move(mesh), alpha_override.value_or(1e-7));
  if (name == "stommel_munk")
    return build_quasi_geostrophic(std::move(mesh), alpha_override.value_or(1e-5), false);
  if (name == "qg_nonlinear")
    return build_quasi_geostrophic(std::move(mesh), alpha_override.value_or(1e-5), true);
  throw std::invalid_argument("unknown case '" + name +
                              "' (expected gulf, stommel_munk, or qg_nonlinear)");
}

}  // namespace ocrom
