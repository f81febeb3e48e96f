#include "ocrom/rom.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ocrom {

namespace {

using Clock = std::chrono::steady_clock;

Mat sum_terms(const std::vector<ReducedDenseTerm>& terms, const Vec& mu, int rows,
              int cols) {
  Mat sum = Mat::Zero(rows, cols);
  for (const auto& t : terms) sum += t.coeff(mu) * t.block;
  return sum;
}

Vec sum_terms(const std::vector<ReducedVectorTerm>& terms, const Vec& mu, int rows) {
  Vec sum = Vec::Zero(rows);
  for (const auto& t : terms) sum += t.coeff(mu) * t.block;
  return sum;
}

ReducedSlot make_slot(const std::vector<FieldSpan>& spans, const std::vector<Mat>& bases) {
  if (spans.size() != bases.size())
    throw std::invalid_argument("project_offline: basis count != field count");
  ReducedSlot slot;
  int full_total = 0, red_total = 0;
  for (size_t f = 0; f < spans.size(); ++f) {
    if (bases[f].rows() != spans[f].size)
      throw std::invalid_argument("project_offline: basis rows mismatch for field " +
                                  spans[f].name);
    if (bases[f].cols() == 0)
      throw std::invalid_argument("project_offline: empty basis for field " +
                                  spans[f].name);
    ReducedField rf;
    rf.name = spans[f].name;
    rf.full_offset = spans[f].offset;
    rf.full_size = spans[f].size;
    rf.red_offset = red_total;
    rf.red_size = static_cast<int>(bases[f].cols());
    rf.basis = bases[f];
    slot.fields.push_back(std::move(rf));
    full_total += spans[f].size;
    red_total += static_cast<int>(bases[f].cols());
  }
  slot.matrix = Mat::Zero(full_total, red_total);
  for (const auto& rf : slot.fields)
    slot.matrix.block(rf.full_offset, rf.red_offset, rf.full_size, rf.red_size) =
        rf.basis;
  return slot;
}

std::string format_mu(const Vec& mu) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < mu.size(); ++i) os << (i ? ", " : "") << mu[i];
  os << ")";
  return os.str();
}

}  // namespace

Mat ReducedModel::a_at(const Vec& mu) const {
  return sum_terms(a_terms, mu, p_slot.red_dim(), y_slot.red_dim());
}
Mat ReducedModel::b_at(const Vec& mu) const {
  return sum_terms(b_terms, mu, p_slot.red_dim(), u_slot.red_dim());
}
Mat ReducedModel::obs_at(const Vec& mu) const {
  return sum_terms(obs_terms, mu, y_slot.red_dim(), y_slot.red_dim());
}
Mat ReducedModel::q_at(const Vec& mu) const {
  return sum_terms(q_terms, mu, u_slot.red_dim(), u_slot.red_dim());
}
Vec ReducedModel::g_at(const Vec& mu) const {
  return sum_terms(g_terms, mu, p_slot.red_dim());
}
Vec ReducedModel::obs_rhs_at(const Vec& mu) const {
  return sum_terms(obs_rhs_terms, mu, y_slot.red_dim());
}

ReducedModel project_offline(std::shared_ptr<const OCPDefinition> def,
                             const FieldBases& bases, bool aggregated,
                             OnlineNlMode nl_mode) {
  ReducedModel model;
  model.definition = def;
  model.case_name = def->case_name;
  model.aggregated = aggregated;
  model.nl_mode = nl_mode;
  model.alpha = def->alpha;

  std::vector<Mat> state = bases.state, adjoint = bases.adjoint;
  if (aggregated) {
    if (def->state_fields.size() != def->adjoint_fields.size())
      throw std::invalid_argument("aggregation needs positionally paired fields");
    for (size_t f = 0; f < state.size(); ++f) {
      const FieldSpan& span = def->state_fields[f];
      std::vector<int> idx(span.size);
      for (int i = 0; i < span.size; ++i) idx[i] = span.offset + i;
      SpMat x_field = restrict_matrix(def->X_Y, idx, idx);
      Mat merged = aggregate(bases.state[f], bases.adjoint[f], x_field);
      state[f] = merged;
      adjoint[f] = merged;
    }
  }

  model.y_slot = make_slot(def->state_fields, state);
  model.u_slot = make_slot(def->control_fields, bases.control);
  model.p_slot = make_slot(def->adjoint_fields, adjoint);

  const Mat& by = model.y_slot.matrix;
  const Mat& bu = model.u_slot.matrix;
  const Mat& bp = model.p_slot.matrix;

  for (const auto& t : def->A.terms)
    model.a_terms.push_back({t.coeff, bp.transpose() * (t.block * by)});
  for (const auto& t : def->B.terms)
    model.b_terms.push_back({t.coeff, bp.transpose() * (t.block * bu)});
  for (const auto& t : def->obs.terms)
    model.obs_terms.push_back({t.coeff, by.transpose() * (t.block * by)});
  for (const auto& t : def->control_gram.terms)
    model.q_terms.push_back({t.coeff, bu.transpose() * (t.block * bu)});
  for (const auto& t : def->g.terms)
    model.g_terms.push_back({t.coeff, bp.transpose() * t.block});
  for (const auto& t : def->obs_rhs.terms)
    model.obs_rhs_terms.push_back({t.coeff, by.transpose() * t.block});
  model.objective_offset = def->objective_offset;

  if (def->trilinear) {
    const auto& tri = *def->trilinear;
    const auto& vf = model.y_slot.fields[tri.v_field];
    const auto& rf = model.y_slot.fields[tri.rho_field];
    const auto& wf = model.p_slot.fields[tri.w_field];
    const DofMap& map = def->scalar_dofmap;
    auto lift_columns = [&map](const Mat& basis) {
      Mat full(map.total_dofs, basis.cols());
      for (int c = 0; c < basis.cols(); ++c) full.col(c) = map.lift(basis.col(c));
      return full;
    };
    Mat v_full = lift_columns(vf.basis);
    Mat rho_full = lift_columns(rf.basis);
    Mat w_full = lift_columns(wf.basis);
    model.trilinear_tensor.assign(wf.red_size, Mat::Zero(vf.red_size, rf.red_size));
    for (int j = 0; j < rf.red_size; ++j) {
      SpMat dv = tri.form->derivative_first(rho_full.col(j));
      Mat slice = w_full.transpose() * (dv * v_full);  // (k, i)
      for (int k = 0; k < wf.red_size; ++k)
        for (int i = 0; i < vf.red_size; ++i)
          model.trilinear_tensor[k](i, j) = slice(k, i);
    }
  }

  return model;
}

namespace {

struct ReducedSystem {
  Mat matrix;
  Vec rhs;
};

ReducedSystem assemble_reduced_kkt(const ReducedModel& model, const Vec& mu) {
  const int ny = model.y_slot.red_dim(), nu = model.u_slot.red_dim(),
            np = model.p_slot.red_dim();
  Mat a = model.a_at(mu), b = model.b_at(mu);
  ReducedSystem sys;
  sys.matrix = Mat::Zero(ny + nu + np, ny + nu + np);
  sys.matrix.topLeftCorner(ny, ny) = model.obs_at(mu);
  sys.matrix.block(0, ny + nu, ny, np) = a.transpose();
  sys.matrix.block(ny, ny, nu, nu) = model.alpha * model.q_at(mu);
  sys.matrix.block(ny, ny + nu, nu, np) = b.transpose();
  sys.matrix.block(ny + nu, 0, np, ny) = a;
  sys.matrix.block(ny + nu, ny, np, nu) = b;
  sys.rhs = Vec::Zero(ny + nu + np);
  sys.rhs.head(ny) = model.obs_rhs_at(mu);
  sys.rhs.tail(np) = model.g_at(mu);
  return sys;
}

ReducedSolution finalize_solution(const ReducedModel& model, const Vec& x,
                                  const Vec& mu) {
  const int ny = model.y_slot.red_dim(), nu = model.u_slot.red_dim(),
            np = model.p_slot.red_dim();
  ReducedSolution sol;
  sol.y_red = x.head(ny);
  sol.u_red = x.segment(ny, nu);
  sol.p_red = x.tail(np);
  sol.mu = mu;
  sol.objective = 0.5 * sol.y_red.dot(model.obs_at(mu) * sol.y_red) -
                  sol.y_red.dot(model.obs_rhs_at(mu)) +
                  model.objective_offset.evaluate(mu) +
                  0.5 * model.alpha * sol.u_red.dot(model.q_at(mu) * sol.u_red);
  sol.y = model.y_slot.matrix * sol.y_red;
  sol.u = model.u_slot.matrix * sol.u_red;
  sol.p = model.p_slot.matrix * sol.p_red;
  return sol;
}

}  // namespace

ReducedSolution solve_reduced(const ReducedModel& model, const Vec& mu) {
  auto start = Clock::now();
  ReducedSystem sys = assemble_reduced_kkt(model, mu);
  Eigen::PartialPivLU<Mat> lu(sys.matrix);
  Vec x = lu.solve(sys.rhs);
  x += lu.solve(sys.rhs - sys.matrix * x);
  double rcond = lu.rcond();
  double scale = std::max(sys.rhs.norm(), 1e-300);
  double residual = (sys.matrix * x - sys.rhs).norm() / scale;
  double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (!x.allFinite() || residual > 1e-8 || rcond < 1e-13)
    throw std::runtime_error("reduced KKT system singular at mu = " + format_mu(mu) +
                             " (rcond " + std::to_string(rcond) + ")");
  ReducedSolution sol = finalize_solution(model, x, mu);
  sol.online_seconds = seconds;
  sol.rcond = rcond;
  return sol;
}

namespace {

struct TensorSpans {
  const ReducedField *v, *rho, *w;
};

TensorSpans tensor_spans(const ReducedModel& model) {
  const auto& tri = *model.definition->trilinear;
  return {&model.y_slot.fields[tri.v_field], &model.y_slot.fields[tri.rho_field],
          &model.p_slot.fields[tri.w_field]};
}

}  // namespace

ReducedSolution solve_reduced_nonlinear(const ReducedModel& model, const Vec& mu,
                                        const NewtonOptions& opts) {
  const auto def = model.definition;
  const double scale_mu = def->trilinear_scale(mu);
  if (!def->trilinear || scale_mu == 0.0) return solve_reduced(model, mu);

  auto start = Clock::now();
  ReducedSystem linear = assemble_reduced_kkt(model, mu);
  const int ny = model.y_slot.red_dim(), nu = model.u_slot.red_dim(),
            np = model.p_slot.red_dim();
  const bool tensor_mode = model.nl_mode == OnlineNlMode::kTensor;
  if (tensor_mode && model.trilinear_tensor.empty())
    throw std::runtime_error("tensor online mode requested but tensor missing");

  TensorSpans spans = tensor_spans(model);
  const int voff = spans.v->red_offset, nv = spans.v->red_size;
  const int roff = spans.rho->red_offset, nr = spans.rho->red_size;
  const int woff = spans.w->red_offset, nw = spans.w->red_size;

  auto residual = [&](const Vec& x) {
    Vec r = linear.matrix * x - linear.rhs;
    Vec cy = x.head(ny), cp = x.tail(np);
    if (tensor_mode) {
      Vec cv = cy.segment(voff, nv), cr = cy.segment(roff, nr);
      Vec cw = cp.segment(woff, nw);
      for (int k = 0; k < nw; ++k) {
        const Mat& tk = model.trilinear_tensor[k];
        r[ny + nu + woff + k] += scale_mu * cv.dot(tk * cr);
        r.segment(voff, nv) += scale_mu * cw[k] * (tk * cr);
        r.segment(roff, nr) += scale_mu * cw[k] * (tk.transpose() * cv);
      }
    } else {
      Vec y_full = model.y_slot.matrix * cy;
      Vec p_full = model.p_slot.matrix * cp;
      r.tail(np) += scale_mu * (model.p_slot.matrix.transpose() *
                                def->nonlinear_residual(y_full));
      r.head(ny) += scale_mu * (model.y_slot.matrix.transpose() *
                                (def->nonlinear_jacobian(y_full).transpose() * p_full));
    }
    return r;
  };
  auto jacobian = [&](const Vec& x) {
    Mat j = linear.matrix;
    Vec cy = x.head(ny), cp = x.tail(np);
    if (tensor_mode) {
      Vec cv = cy.segment(voff, nv), cr = cy.segment(roff, nr);
      Vec cw = cp.segment(woff, nw);
      Mat hess_vr = Mat::Zero(nv, nr);
      for (int k = 0; k < nw; ++k) {
        const Mat& tk = model.trilinear_tensor[k];
        Vec dv = tk * cr;             // d residual_k / d cv
        Vec dr = tk.transpose() * cv; // d residual_k / d cr
        for (int i = 0; i < nv; ++i) {
          j(ny + nu + woff + k, voff + i) += scale_mu * dv[i];
          j(voff + i, ny + nu + woff + k) += scale_mu * dv[i];
        }
        for (int i = 0; i < nr; ++i) {
          j(ny + nu + woff + k, roff + i) += scale_mu * dr[i];
          j(roff + i, ny + nu + woff + k) += scale_mu * dr[i];
        }
        hess_vr += cw[k] * tk;
      }
      j.block(voff, roff, nv, nr) += scale_mu * hess_vr;
      j.block(roff, voff, nr, nv) += scale_mu * hess_vr.transpose();
    } else {
      Vec y_full = model.y_slot.matrix * cy;
      Vec p_full = model.p_slot.matrix * cp;
      Mat dn = model.p_slot.matrix.transpose() *
               (def->nonlinear_jacobian(y_full) * model.y_slot.matrix);
      Mat hess = model.y_slot.matrix.transpose() *
                 (def->nonlinear_hessian(p_full) * model.y_slot.matrix);
      j.topLeftCorner(ny, ny) += scale_mu * hess;
      j.block(0, ny + nu, ny, np) += scale_mu * dn.transpose();
      j.block(ny + nu, 0, np, ny) += scale_mu * dn;
    }
    return j;
  };

  Vec x = Vec::Zero(ny + nu + np);
  double rhs_scale = std::max(linear.rhs.norm(), 1e-300);
  NewtonReport report;
  Vec r = residual(x);
  double rel = r.norm() / rhs_scale;
  report.residuals.push_back(rel);
  int growth_streak = 0;
  double rcond = 1.0;
  for (int it = 0; it < opts.max_iterations && rel > opts.tolerance; ++it) {
    Eigen::PartialPivLU<Mat> lu(jacobian(x));
    rcond = lu.rcond();
    Vec dx = lu.solve(-r);
    if (!dx.allFinite())
      throw std::runtime_error("reduced Newton system singular at mu = " + format_mu(mu));
    Vec x_next = x + dx;
    Vec r_next = residual(x_next);
    if (opts.damping) {
      for (int halving = 0; halving < 4 && r_next.norm() > r.norm(); ++halving) {
        dx *= 0.5;
        x_next = x + dx;
        r_next = residual(x_next);
      }
    }
    double rel_next = r_next.norm() / rhs_scale;
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
  double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (report.diverged)
    throw std::runtime_error("reduced Newton diverged at mu = " + format_mu(mu));
  if (!report.converged)
    throw std::runtime_error("reduced Newton did not converge at mu = " + format_mu(mu));
  ReducedSolution sol = finalize_solution(model, x, mu);
  sol.online_seconds = seconds;
  sol.rcond = rcond;
  sol.newton = report;
  return sol;
}

ReducedSolution solve_online(const ReducedModel& model, const Vec& mu,
                             const NewtonOptions& opts) {
  if (model.definition->trilinear) return solve_reduced_nonlinear(model, mu, opts);
  return solve_reduced(model, mu);
}

double galerkin_consistency_residual(const ReducedModel& model,
                                     const ReducedSolution& sol, const Vec& mu) {
  const auto def = model.definition;
  const double s = def->trilinear_scale(mu);
  SpMat a = def->A.evaluate(mu);
  SpMat b = def->B.evaluate(mu);
  Vec r_y = def->obs.evaluate(mu) * sol.y - def->obs_rhs.evaluate(mu);
  Vec r_u = def->alpha * (def->control_gram.evaluate(mu) * sol.u) +
            b.transpose() * sol.p;
  Vec r_p = a * sol.y + b * sol.u - def->g.evaluate(mu);
  if (s != 0.0) {
    SpMat at(a.transpose());
    SpMat dnt(def->nonlinear_jacobian(sol.y).transpose());
    r_y += SpMat(at + s * dnt) * sol.p;
    r_p += s * def->nonlinear_residual(sol.y);
  } else {
    r_y += a.transpose() * sol.p;
  }
  Vec tested(model.total_dim());
  tested.head(model.y_slot.red_dim()) = model.y_slot.matrix.transpose() * r_y;
  tested.segment(model.y_slot.red_dim(), model.u_slot.red_dim()) =
      model.u_slot.matrix.transpose() * r_u;
  tested.tail(model.p_slot.red_dim()) = model.p_slot.matrix.transpose() * r_p;
  ReducedSystem sys = assemble_reduced_kkt(model, mu);
  return tested.norm() / std::max(sys.rhs.norm(), 1e-300);
}

namespace {

void write_block(const std::string& path, const std::string& name, const Mat& block) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  std::fprintf(f, "ocrom-block %s %ld %ld\n", name.c_str(),
               static_cast<long>(block.rows()), static_cast<long>(block.cols()));
  for (int i = 0; i < block.rows(); ++i)
    for (int j = 0; j < block.cols(); ++j) {
      double v = block(i, j);
      std::fwrite(&v, sizeof(double), 1, f);
    }
  std::fclose(f);
}

Mat read_block(const std::string& path, const std::string& expected_name) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open: " + path);
  char header[256];
  if (!std::fgets(header, sizeof(header), f)) {
    std::fclose(f);
    throw std::runtime_error("missing block header in " + path);
  }
  std::istringstream hs(header);
  std::string magic, name;
  long rows = 0, cols = 0;
  hs >> magic >> name >> rows >> cols;
  if (magic != "ocrom-block" || name != expected_name) {
    std::fclose(f);
    throw std::runtime_error("unexpected block header in " + path);
  }
  Mat block(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) {
      double v;
      if (std::fread(&v, sizeof(double), 1, f) != 1) {
        std::fclose(f);
        throw std::runtime_error("truncated block in " + path);
      }
      block(i, j) = v;
    }
  std::fclose(f);
  return block;
}

nlohmann::json slot_to_json(const ReducedSlot& slot) {
  nlohmann::json fields = nlohmann::json::array();
  for (const auto& f : slot.fields)
    fields.push_back({{"name", f.name},
                      {"full_offset", f.full_offset},
                      {"full_size", f.full_size},
                      {"red_size", f.red_size}});
  return fields;
}

}  // namespace

void save_reduced_model(const ReducedModel& model, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_mesh(*model.definition->mesh, dir + "/mesh.txt");

  nlohmann::json manifest;
  manifest["format"] = "ocrom-rom-1";
  manifest["case"] = model.case_name;
  manifest["aggregated"] = model.aggregated;
  manifest["nl_mode"] = model.nl_mode == OnlineNlMode::kTensor ? "tensor" : "full";
  manifest["alpha"] = model.alpha;
  manifest["y_fields"] = slot_to_json(model.y_slot);
  manifest["u_fields"] = slot_to_json(model.u_slot);
  manifest["p_fields"] = slot_to_json(model.p_slot);
  manifest["terms"] = {{"A", model.a_terms.size()},   {"B", model.b_terms.size()},
                       {"obs", model.obs_terms.size()}, {"Q", model.q_terms.size()},
                       {"g", model.g_terms.size()},   {"obs_rhs", model.obs_rhs_terms.size()},
                       {"tensor", model.trilinear_tensor.size()}};
  std::ofstream(dir + "/manifest.json") << manifest.dump(2) << "\n";

  auto slot_bases = [&](const ReducedSlot& slot, const std::string& prefix) {
    for (size_t f = 0; f < slot.fields.size(); ++f)
      write_matrix_market_dense(slot.fields[f].basis,
                                dir + "/basis_" + prefix + "_" +
                                    slot.fields[f].name + ".mtx");
  };
  slot_bases(model.y_slot, "y");
  slot_bases(model.u_slot, "u");
  slot_bases(model.p_slot, "p");

  auto dump_terms = [&](const std::vector<ReducedDenseTerm>& terms,
                        const std::string& stem) {
    for (size_t q = 0; q < terms.size(); ++q) {
      std::string name = stem + "_" + std::to_string(q);
      write_block(dir + "/" + name + ".bin", name, terms[q].block);
    }
  };
  dump_terms(model.a_terms, "A");
  dump_terms(model.b_terms, "B");
  dump_terms(model.obs_terms, "obs");
  dump_terms(model.q_terms, "Q");
  for (size_t q = 0; q < model.g_terms.size(); ++q) {
    std::string name = "g_" + std::to_string(q);
    write_block(dir + "/" + name + ".bin", name, model.g_terms[q].block);
  }
  for (size_t q = 0; q < model.obs_rhs_terms.size(); ++q) {
    std::string name = "obs_rhs_" + std::to_string(q);
    write_block(dir + "/" + name + ".bin", name, model.obs_rhs_terms[q].block);
  }
  for (size_t k = 0; k < model.trilinear_tensor.size(); ++k) {
    std::string name = "T_" + std::to_string(k);
    write_block(dir + "/" + name + ".bin", name, model.trilinear_tensor[k]);
  }
}

ReducedModel load_reduced_model(const std::string& dir) {
  std::ifstream manifest_in(dir + "/manifest.json");
  if (!manifest_in) throw std::runtime_error("missing manifest in " + dir);
  nlohmann::json manifest = nlohmann::json::parse(manifest_in);
  if (manifest.value("format", "") != "ocrom-rom-1")
    throw std::runtime_error("unsupported reduced-model format in " + dir);

  auto mesh = std::make_shared<Mesh>(load_mesh(dir + "/mesh.txt"));
  auto def = std::make_shared<OCPDefinition>(
      builtin_case(manifest["case"], mesh, manifest["alpha"].get<double>()));

  ReducedModel model;
  model.definition = def;
  model.case_name = manifest["case"];
  model.aggregated = manifest["aggregated"];
  model.nl_mode = manifest["nl_mode"] == "tensor" ? OnlineNlMode::kTensor
                                                  : OnlineNlMode::kFullOrder;
  model.alpha = manifest["alpha"];

  auto load_slot = [&](const nlohmann::json& fields, const std::string& prefix,
                       const std::vector<FieldSpan>& spans) {
    std::vector<Mat> bases;
    if (fields.size() != spans.size())
      throw std::runtime_error("field layout mismatch while loading " + dir);
    for (const auto& f : fields)
      bases.push_back(read_matrix_market_dense(
          dir + "/basis_" + prefix + "_" + f["name"].get<std::string>() + ".mtx"));
    return make_slot(spans, bases);
  };
  model.y_slot = load_slot(manifest["y_fields"], "y", def->state_fields);
  model.u_slot = load_slot(manifest["u_fields"], "u", def->control_fields);
  model.p_slot = load_slot(manifest["p_fields"], "p", def->adjoint_fields);

  auto expect = [&](const char* key, size_t have) {
    size_t want = manifest["terms"][key].get<size_t>();
    if (want != have)
      throw std::runtime_error(std::string("term count mismatch for ") + key);
  };
  expect("A", def->A.terms.size());
  expect("B", def->B.terms.size());
  expect("obs", def->obs.terms.size());
  expect("Q", def->control_gram.terms.size());
  expect("g", def->g.terms.size());
  expect("obs_rhs", def->obs_rhs.terms.size());

  for (size_t q = 0; q < def->A.terms.size(); ++q) {
    std::string name = "A_" + std::to_string(q);
    model.a_terms.push_back(
        {def->A.terms[q].coeff, read_block(dir + "/" + name + ".bin", name)});
  }
  for (size_t q = 0; q < def->B.terms.size(); ++q) {
    std::string name = "B_" + std::to_string(q);
    model.b_terms.push_back(
        {def->B.terms[q].coeff, read_block(dir + "/" + name + ".bin", name)});
  }
  for (size_t q = 0; q < def->obs.terms.size(); ++q) {
    std::string name = "obs_" + std::to_string(q);
    model.obs_terms.push_back(
        {def->obs.terms[q].coeff, read_block(dir + "/" + name + ".bin", name)});
  }
  for (size_t q = 0; q < def->control_gram.terms.size(); ++q) {
    std::string name = "Q_" + std::to_string(q);
    model.q_terms.push_back({def->control_gram.terms[q].coeff,
                             read_block(dir + "/" + name + ".bin", name)});
  }
  for (size_t q = 0; q < def->g.terms.size(); ++q) {
    std::string name = "g_" + std::to_string(q);
    model.g_terms.push_back(
        {def->g.terms[q].coeff, read_block(dir + "/" + name + ".bin", name).col(0)});
  }
  for (size_t q = 0; q < def->obs_rhs.terms.size(); ++q) {
    std::string name = "obs_rhs_" + std::to_string(q);
    model.obs_rhs_terms.push_back(
        {def->obs_rhs.terms[q].coeff, read_block(dir + "/" + name + ".bin", name).col(0)});
  }
  model.objective_offset = def->objective_offset;

  size_t tensor_count = manifest["terms"]["tensor"].get<size_t>();
  for (size_t k = 0; k < tensor_count; ++k) {
    std::string name = "T_" + std::to_string(k);
    model.trilinear_tensor.push_back(read_block(dir + "/" + name + ".bin", name));
  }
  return model;
}

}  // namespace ocrom
