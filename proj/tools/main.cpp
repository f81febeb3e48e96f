#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ocrom/study.hpp"

namespace {

using namespace ocrom;

Vec parse_mu(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  Vec mu(values.size());
  for (size_t i = 0; i < values.size(); ++i) mu[i] = values[i];
  return mu;
}

std::shared_ptr<Mesh> resolve_mesh(const std::string& mesh_path,
                                   const std::string& case_name, int nx, int ny) {
  if (!mesh_path.empty()) return std::make_shared<Mesh>(load_mesh(mesh_path));
  return std::make_shared<Mesh>(make_case_mesh(case_name, nx, ny));
}

void save_fields(const OCPDefinition& def, const TruthSolution& sol,
                 const std::string& prefix) {
  auto dump = [&](const std::vector<FieldSpan>& spans, const Vec& stacked,
                  bool constrained) {
    for (const auto& span : spans) {
      Vec full = constrained ? def.lift_field(stacked, span)
                             : Vec(stacked.segment(span.offset, span.size));
      std::string path = prefix + "_" + span.name + ".csv";
      std::FILE* f = std::fopen(path.c_str(), "w");
      if (!f) throw std::runtime_error("cannot write " + path);
      std::fprintf(f, "x,y,value\n");
      if (full.size() == def.mesh->num_vertices()) {
        for (int v = 0; v < full.size(); ++v)
          std::fprintf(f, "%.17g,%.17g,%.17g\n", def.mesh->vertices[v].x,
                       def.mesh->vertices[v].y, full[v]);
      } else {
        for (int v = 0; v < full.size(); ++v)
          std::fprintf(f, "0,0,%.17g\n", full[v]);
      }
      std::fclose(f);
      std::printf("wrote %s\n", path.c_str());
    }
  };
  dump(def.state_fields, sol.y, true);
  dump(def.control_fields, sol.u, false);
  dump(def.adjoint_fields, sol.p, true);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-order optimal control under parametric uncertainty"};
  app.require_subcommand(1);

  // ---- mesh-gen ----
  auto* mesh_gen = app.add_subcommand("mesh-gen", "generate a structured case mesh");
  std::string mg_case = "gulf", mg_out = "mesh.txt";
  int mg_nx = 32, mg_ny = 32;
  mesh_gen->add_option("--case", mg_case, "gulf | stommel_munk | qg_nonlinear");
  mesh_gen->add_option("--nx", mg_nx, "cells in x");
  mesh_gen->add_option("--ny", mg_ny, "cells in y");
  mesh_gen->add_option("--out", mg_out, "output mesh path")->required();

  // ---- truth-solve ----
  auto* truth_cmd = app.add_subcommand("truth-solve", "solve the truth KKT system");
  std::string ts_case = "gulf", ts_mesh, ts_mu = "0.75,0.5,-0.5", ts_save;
  int ts_nx = 32, ts_ny = 32, ts_newton_max = 25;
  double ts_alpha = -1.0, ts_tol = 1e-10;
  bool ts_damping = false;
  truth_cmd->add_option("--case", ts_case, "case name");
  truth_cmd->add_option("--mesh", ts_mesh, "mesh file (case preset when omitted)");
  truth_cmd->add_option("--nx", ts_nx, "preset mesh cells in x");
  truth_cmd->add_option("--ny", ts_ny, "preset mesh cells in y");
  truth_cmd->add_option("--mu", ts_mu, "parameter, comma separated");
  truth_cmd->add_option("--alpha", ts_alpha, "control penalty override");
  truth_cmd->add_option("--tol", ts_tol, "residual tolerance");
  truth_cmd->add_option("--newton-max", ts_newton_max, "Newton iteration cap");
  truth_cmd->add_flag("--newton-damping", ts_damping, "halve steps on residual growth");
  truth_cmd->add_option("--save", ts_save, "prefix for per-field CSV output");

  // ---- offline ----
  auto* offline_cmd = app.add_subcommand("offline", "train and project a reduced model");
  StudyConfig off;
  std::string off_rule = "mc", off_pod = "weighted", off_nl = "tensor", off_out = "rom";
  std::vector<std::string> off_dist = {"uniform"};
  bool off_no_agg = false;
  double off_alpha = -1.0;
  int off_n = 10;
  offline_cmd->add_option("--case", off.case_name, "case name");
  offline_cmd->add_option("--mesh", off.mesh_path, "mesh file (case preset when omitted)");
  offline_cmd->add_option("--nx", off.nx, "preset mesh cells in x");
  offline_cmd->add_option("--ny", off.ny, "preset mesh cells in y");
  offline_cmd->add_option("--rule", off_rule, "mc | gauss | pseudo | cc");
  offline_cmd->add_option("--dist", off_dist,
                          "per-component law: uniform | beta:a:b | loguniform");
  offline_cmd->add_option("--train-size", off.train_size, "MC/pseudo training size");
  offline_cmd->add_option("--tensor-nodes", off.tensor_nodes, "per-dimension nodes");
  offline_cmd->add_option("--seed", off.train_seed, "training seed");
  offline_cmd->add_option("-N,--basis-size", off_n, "retained modes per field");
  offline_cmd->add_flag("--no-aggregation", off_no_agg, "skip state/adjoint aggregation");
  offline_cmd->add_option("--pod", off_pod, "snapshot | weighted");
  offline_cmd->add_option("--nl-mode", off_nl, "tensor | full");
  offline_cmd->add_option("--alpha", off_alpha, "control penalty override");
  offline_cmd->add_option("--out", off_out, "output model directory")->required();

  // ---- online ----
  auto* online_cmd = app.add_subcommand("online", "solve a stored reduced model");
  std::string on_model, on_mu = "0.75,0.5,-0.5";
  online_cmd->add_option("--model", on_model, "reduced model directory")->required();
  online_cmd->add_option("--mu", on_mu, "parameter, comma separated");

  // ---- study ----
  auto* study_cmd = app.add_subcommand("study", "error-decay and speedup experiment");
  StudyConfig st;
  std::string st_config, st_rule = "mc", st_pod = "weighted", st_nl = "tensor",
              st_cc = "pdf";
  std::vector<std::string> st_dist;
  bool st_no_agg = false, st_smoke = false, st_no_speedup = false;
  double st_alpha = -1.0;
  study_cmd->add_option("--config", st_config, "JSON config file");
  study_cmd->add_option("--case", st.case_name, "case name");
  study_cmd->add_option("--mesh", st.mesh_path, "mesh file (case preset when omitted)");
  study_cmd->add_option("--nx", st.nx, "preset mesh cells in x");
  study_cmd->add_option("--ny", st.ny, "preset mesh cells in y");
  study_cmd->add_option("--rule", st_rule, "mc | gauss | pseudo | cc");
  study_cmd->add_option("--dist", st_dist, "per-component law");
  study_cmd->add_option("--train-size", st.train_size, "training size");
  study_cmd->add_option("--tensor-nodes", st.tensor_nodes, "per-dimension nodes");
  study_cmd->add_option("--seed", st.train_seed, "training seed");
  study_cmd->add_option("--test-seed", st.test_seed, "test seed");
  study_cmd->add_option("--test-size", st.test_size, "test size");
  study_cmd->add_option("--n-min", st.n_min, "smallest basis size");
  study_cmd->add_option("--n-max", st.n_max, "largest basis size");
  study_cmd->add_flag("--no-aggregation", st_no_agg, "skip aggregation");
  study_cmd->add_option("--pod", st_pod, "snapshot | weighted");
  study_cmd->add_option("--nl-mode", st_nl, "tensor | full");
  study_cmd->add_option("--cc-weighting", st_cc, "pdf | log");
  study_cmd->add_option("--alpha", st_alpha, "control penalty override");
  study_cmd->add_flag("--smoke", st_smoke, "30/20 desk-scale profile");
  study_cmd->add_flag("--no-speedup", st_no_speedup, "skip timing (deterministic outputs)");
  study_cmd->add_option("--out", st.output_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*mesh_gen) {
      Mesh mesh = make_case_mesh(mg_case, mg_nx, mg_ny);
      save_mesh(mesh, mg_out);
      std::printf("wrote %s: %d vertices, %d triangles, %zu boundary edges\n",
                  mg_out.c_str(), mesh.num_vertices(), mesh.num_triangles(),
                  mesh.boundary_edges.size());
    } else if (*truth_cmd) {
      auto mesh = resolve_mesh(ts_mesh, ts_case, ts_nx, ts_ny);
      auto def = builtin_case(ts_case, mesh,
                              ts_alpha > 0 ? std::optional<double>(ts_alpha) : std::nullopt);
      Vec mu = parse_mu(ts_mu);
      TruthSolution sol;
      if (def.trilinear) {
        NewtonOptions opts;
        opts.tolerance = ts_tol;
        opts.max_iterations = ts_newton_max;
        opts.damping = ts_damping;
        sol = solve_truth_nonlinear(def, mu, opts);
        std::printf("Newton iterations: %d\n", sol.newton.iterations);
      } else {
        sol = solve_truth(def, mu, ts_tol);
      }
      std::printf("dofs: %d (y) + %d (u) + %d (p)\n", def.n_y(), def.n_u(), def.n_p());
      std::printf("objective J = %.12e\n", sol.objective);
      std::printf("relative KKT residual = %.3e\n", sol.residual);
      if (def.n_u() == 1) std::printf("scalar control u = %.12e\n", sol.u[0]);
      if (!ts_save.empty()) save_fields(def, sol, ts_save);
    } else if (*offline_cmd) {
      off.rule = off_rule == "gauss"    ? RuleKind::kGauss
                 : off_rule == "pseudo" ? RuleKind::kPseudoRandom
                 : off_rule == "cc"     ? RuleKind::kClenshawCurtis
                                        : RuleKind::kMonteCarlo;
      off.dist_spec = off_dist;
      off.aggregated = !off_no_agg;
      off.pod = off_pod == "snapshot" ? PodFormulation::kSnapshot
                                      : PodFormulation::kWeighted;
      off.nl_mode = off_nl == "full" ? OnlineNlMode::kFullOrder : OnlineNlMode::kTensor;
      if (off_alpha > 0) off.alpha_override = off_alpha;

      auto mesh = resolve_mesh(off.mesh_path, off.case_name, off.nx, off.ny);
      auto def = std::make_shared<OCPDefinition>(
          builtin_case(off.case_name, mesh, off.alpha_override));
      ProductDistribution dist = parse_distributions(off.dist_spec, def->param_box);
      QuadratureRule rule = build_training_rule(off, dist);
      rule.save_csv(off_out + "_training_rule.csv");

      std::vector<SnapshotSet> sets;
      std::vector<Vec> ys, us, ps;
      for (int i = 0; i < rule.size(); ++i) {
        Vec mu = rule.nodes.row(i);
        TruthSolution sol = def->trilinear ? solve_truth_nonlinear(*def, mu)
                                           : solve_truth(*def, mu);
        ys.push_back(sol.y);
        us.push_back(sol.u);
        ps.push_back(sol.p);
      }
      auto build_sets = [&](const std::vector<FieldSpan>& spans,
                            const std::vector<Vec>& snaps, const SpMat& x) {
        for (const auto& span : spans) {
          SnapshotSet set;
          set.snapshots.resize(span.size, rule.size());
          for (int i = 0; i < rule.size(); ++i)
            set.snapshots.col(i) = snaps[i].segment(span.offset, span.size);
          set.weights = rule.weights;
          std::vector<int> idx(span.size);
          for (int k = 0; k < span.size; ++k) idx[k] = span.offset + k;
          set.norm_matrix = restrict_matrix(x, idx, idx);
          sets.push_back(std::move(set));
        }
      };
      build_sets(def->state_fields, ys, def->X_Y);
      build_sets(def->control_fields, us, def->X_U);
      build_sets(def->adjoint_fields, ps, def->X_P);
      std::vector<PODBasis> pod =
          pod_partitioned(sets, std::vector<int>(sets.size(), off_n), off.pod);

      FieldBases bases;
      size_t f = 0;
      for (size_t i = 0; i < def->state_fields.size(); ++i)
        bases.state.push_back(pod[f++].basis);
      for (size_t i = 0; i < def->control_fields.size(); ++i)
        bases.control.push_back(pod[f++].basis);
      for (size_t i = 0; i < def->adjoint_fields.size(); ++i)
        bases.adjoint.push_back(pod[f++].basis);

      ReducedModel model = project_offline(def, bases, off.aggregated, off.nl_mode);
      save_reduced_model(model, off_out);
      std::printf("reduced model written to %s (online system %d x %d)\n",
                  off_out.c_str(), model.total_dim(), model.total_dim());
    } else if (*online_cmd) {
      ReducedModel model = load_reduced_model(on_model);
      Vec mu = parse_mu(on_mu);
      ReducedSolution sol = solve_online(model, mu);
      std::printf("online system: %d unknowns\n", model.total_dim());
      std::printf("reduced objective J_N = %.12e\n", sol.objective);
      std::printf("online wall time: %.3e s (rcond %.2e)\n", sol.online_seconds,
                  sol.rcond);
      std::printf("Galerkin consistency residual: %.3e\n",
                  galerkin_consistency_residual(model, sol, mu));
    } else if (*study_cmd) {
      StudyConfig config = st_config.empty() ? st : StudyConfig::from_json_file(st_config);
      if (st_config.empty()) {
        config.rule = st_rule == "gauss"    ? RuleKind::kGauss
                      : st_rule == "pseudo" ? RuleKind::kPseudoRandom
                      : st_rule == "cc"     ? RuleKind::kClenshawCurtis
                                            : RuleKind::kMonteCarlo;
        if (!st_dist.empty()) config.dist_spec = st_dist;
        config.aggregated = !st_no_agg;
        config.pod = st_pod == "snapshot" ? PodFormulation::kSnapshot
                                          : PodFormulation::kWeighted;
        config.nl_mode = st_nl == "full" ? OnlineNlMode::kFullOrder : OnlineNlMode::kTensor;
        config.cc_weighting = st_cc == "log" ? CcWeighting::kLogSpace
                                             : CcWeighting::kPdfFactor;
        if (st_alpha > 0) config.alpha_override = st_alpha;
        if (st_smoke) config.apply_smoke_profile();
        if (st_no_speedup) config.measure_speedup = false;
      }
      StudyReport report = run_study(config);
      emit_results(report, config.output_dir);
      std::printf("study complete: %zu basis sizes, results in %s\n",
                  report.n_values.size(), config.output_dir.c_str());
      for (size_t i = 0; i < report.n_values.size(); ++i)
        std::printf("  N=%2d  mean log10 e_y = %7.3f  (failures %d)\n",
                    report.n_values[i], report.error_stats[i][0].mean_log10,
                    report.reduced_failures[i]);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
