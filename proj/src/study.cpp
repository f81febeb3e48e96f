#include "ocrom/study.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ocrom {

namespace {

using Clock = std::chrono::steady_clock;

double safe_log10(double x) { return std::log10(std::max(x, 1e-300)); }

struct RelErr {
  double value;
  bool absolute;
};

RelErr relative_error(const Vec& truth, const Vec& reduced, const SpMat& x) {
  Vec d = truth - reduced;
  double err = std::sqrt(std::max(d.dot(x * d), 0.0));
  double scale = std::sqrt(std::max(truth.dot(x * truth), 0.0));
  if (scale == 0.0) return {err, true};
  return {err / scale, false};
}

}  // namespace

ErrorRecord compute_relative_errors(const OCPDefinition& def, const TruthSolution& truth,
                                    const ReducedSolution& reduced) {
  ErrorRecord rec;
  rec.mu = truth.mu;
  RelErr ey = relative_error(truth.y, reduced.y, def.X_Y);
  RelErr eu = relative_error(truth.u, reduced.u, def.X_U);
  RelErr ep = relative_error(truth.p, reduced.p, def.X_P);
  rec.e_y = ey.value;
  rec.abs_y = ey.absolute;
  rec.e_u = eu.value;
  rec.abs_u = eu.absolute;
  rec.e_p = ep.value;
  rec.abs_p = ep.absolute;
  double dj = std::abs(truth.objective - reduced.objective);
  if (truth.objective == 0.0) {
    rec.e_j = dj;
    rec.abs_j = true;
  } else {
    rec.e_j = dj / std::abs(truth.objective);
  }
  return rec;
}

void RunningStats::add(double value) {
  ++count_;
  if (count_ == 1) {
    min_ = max_ = value;
  } else {
    min_ = std::min(min_, value);
    max_ = std::max(max_, value);
  }
  double delta = value - mean_;
  mean_ += delta / count_;
  m2_ += delta * (value - mean_);
}

double RunningStats::unbiased_std() const {
  if (count_ < 2) return 0.0;
  return std::sqrt(m2_ / (count_ - 1));
}

int StudyReport::smallest_n_reaching(double state_error_threshold) const {
  double target = std::log10(state_error_threshold);
  for (size_t i = 0; i < n_values.size(); ++i)
    if (error_stats[i][0].count > 0 && error_stats[i][0].mean_log10 <= target)
      return n_values[i];
  return -1;
}

Mesh make_case_mesh(const std::string& case_name, int nx, int ny) {
  if (case_name == "gulf") {
    // Narrow coastal basin: north/east coast Dirichlet, west/south open sea
    // Neumann joined by one 45-degree cut edge. The aspect keeps the discrete
    // Poincare/trace constants small enough for the coercivity criterion.
    Rect extent{0.0, 0.0, 0.8, 0.4};
    std::vector<LabeledBox> boxes = {
        {{0.56, 0.04, 0.72, 0.16}, kControlRegion},
        {{0.16, 0.24, 0.36, 0.36}, kObservationRegion},
    };
    return generate_structured_rectangle(nx, ny, extent,
                                         BoundaryPolicy::kWestSouthNeumann, boxes,
                                         /*cut_sw_corner=*/true);
  }
  if (case_name == "stommel_munk" || case_name == "qg_nonlinear") {
    Rect extent{0.0, 0.0, 1.0, 1.0};
    return generate_structured_rectangle(nx, ny, extent, BoundaryPolicy::kAllDirichlet);
  }
  throw std::invalid_argument("unknown case '" + case_name + "'");
}

ProductDistribution parse_distributions(const std::vector<std::string>& specs,
                                        const std::vector<std::array<double, 2>>& box) {
  if (specs.empty()) throw std::invalid_argument("no distribution spec given");
  ProductDistribution dist;
  for (size_t d = 0; d < box.size(); ++d) {
    const std::string& spec = specs.size() == 1 ? specs[0] : specs.at(d);
    double lo = box[d][0], hi = box[d][1];
    if (spec == "uniform") {
      dist.push_back(Distribution1D::uniform(lo, hi));
    } else if (spec == "loguniform") {
      dist.push_back(Distribution1D::loguniform(lo, hi));
    } else if (spec.rfind("beta:", 0) == 0) {
      double a = 0, b = 0;
      if (std::sscanf(spec.c_str(), "beta:%lf:%lf", &a, &b) != 2)
        throw std::invalid_argument("bad distribution spec '" + spec + "'");
      dist.push_back(Distribution1D::beta(a, b, lo, hi));
    } else {
      throw std::invalid_argument("bad distribution spec '" + spec + "'");
    }
  }
  return dist;
}

QuadratureRule build_training_rule(const StudyConfig& config,
                                   const ProductDistribution& dist) {
  switch (config.rule) {
    case RuleKind::kMonteCarlo:
      return monte_carlo_rule(dist, config.train_size, config.train_seed);
    case RuleKind::kGauss:
      return gauss_tensor_rule(dist, config.tensor_nodes);
    case RuleKind::kPseudoRandom:
      return pseudo_random_rule(dist, config.train_size);
    case RuleKind::kClenshawCurtis:
      return clenshaw_curtis_tensor_rule(dist, config.tensor_nodes, config.cc_weighting);
  }
  throw std::invalid_argument("unknown training rule");
}

namespace {

TruthSolution solve_case_truth(const OCPDefinition& def, const Vec& mu) {
  if (def.trilinear) return solve_truth_nonlinear(def, mu);
  return solve_truth(def, mu);
}

std::vector<int> field_indices(const FieldSpan& span) {
  std::vector<int> idx(span.size);
  for (int i = 0; i < span.size; ++i) idx[i] = span.offset + i;
  return idx;
}

}  // namespace

StudyReport run_study(const StudyConfig& config) {
  StudyReport report;
  report.config = config;

  auto mesh = std::make_shared<Mesh>(
      config.mesh_path.empty() ? make_case_mesh(config.case_name, config.nx, config.ny)
                               : load_mesh(config.mesh_path));
  auto def = std::make_shared<OCPDefinition>(
      builtin_case(config.case_name, mesh, config.alpha_override));

  ProductDistribution dist = parse_distributions(config.dist_spec, def->param_box);
  QuadratureRule rule = build_training_rule(config, dist);

  // training snapshots
  std::vector<Vec> kept_y, kept_u, kept_p;
  std::vector<double> kept_w;
  report.train_attempted = rule.size();
  for (int i = 0; i < rule.size(); ++i) {
    Vec mu = rule.nodes.row(i);
    try {
      TruthSolution sol = solve_case_truth(*def, mu);
      kept_y.push_back(sol.y);
      kept_u.push_back(sol.u);
      kept_p.push_back(sol.p);
      kept_w.push_back(rule.weights[i]);
    } catch (const std::exception& e) {
      ++report.train_failed;
      report.failure_log.push_back(std::string("train: ") + e.what());
    }
  }
  if (kept_y.empty()) throw std::runtime_error("run_study: no training snapshot succeeded");
  const int m = static_cast<int>(kept_y.size());
  Vec weights(m);
  for (int i = 0; i < m; ++i) weights[i] = kept_w[i];

  // per-field snapshot sets, each with its own norm block
  std::vector<SnapshotSet> sets;
  auto add_sets = [&](const std::vector<FieldSpan>& spans, const std::vector<Vec>& snaps,
                      const SpMat& x) {
    for (const auto& span : spans) {
      SnapshotSet set;
      set.snapshots.resize(span.size, m);
      for (int i = 0; i < m; ++i)
        set.snapshots.col(i) = snaps[i].segment(span.offset, span.size);
      set.weights = weights;
      auto idx = field_indices(span);
      set.norm_matrix = restrict_matrix(x, idx, idx);
      sets.push_back(std::move(set));
      report.pod_field_names.push_back(span.name);
    }
  };
  add_sets(def->state_fields, kept_y, def->X_Y);
  add_sets(def->control_fields, kept_u, def->X_U);
  add_sets(def->adjoint_fields, kept_p, def->X_P);

  std::vector<int> n_request(sets.size(), config.n_max);
  std::vector<PODBasis> pod = pod_partitioned(sets, n_request, config.pod);
  for (const auto& basis : pod) report.pod_eigenvalues.push_back(basis.eigenvalues);

  // test set: an independent Monte Carlo draw from the same law
  QuadratureRule test_rule = monte_carlo_rule(dist, config.test_size, config.test_seed);
  std::vector<std::optional<TruthSolution>> truth(config.test_size);
  std::vector<double> truth_seconds(config.test_size, 0.0);
  if (config.measure_speedup && config.test_size > 0) {
    // warmup solve excluded from timing
    try {
      solve_case_truth(*def, Vec(test_rule.nodes.row(0)));
    } catch (...) {
    }
  }
  for (int i = 0; i < config.test_size; ++i) {
    Vec mu = test_rule.nodes.row(i);
    try {
      auto t0 = Clock::now();
      TruthSolution sol = solve_case_truth(*def, mu);
      truth_seconds[i] = std::chrono::duration<double>(Clock::now() - t0).count();
      truth[i] = std::move(sol);
    } catch (const std::exception& e) {
      ++report.truth_test_failed;
      report.failure_log.push_back(std::string("truth test: ") + e.what());
    }
  }

  const size_t n_state = def->state_fields.size();
  const size_t n_control = def->control_fields.size();
  for (int n = config.n_min; n <= config.n_max; ++n) {
    FieldBases bases;
    size_t f = 0;
    auto take = [&](std::vector<Mat>& dst) {
      const Mat& full = pod[f].basis;
      dst.push_back(full.leftCols(std::min<int>(n, full.cols())));
      ++f;
    };
    for (size_t i = 0; i < n_state; ++i) take(bases.state);
    for (size_t i = 0; i < n_control; ++i) take(bases.control);
    for (size_t i = 0; i < def->adjoint_fields.size(); ++i) take(bases.adjoint);

    ReducedModel model = project_offline(def, bases, config.aggregated, config.nl_mode);

    std::array<RunningStats, 4> err_stats;
    RunningStats speed_stats;
    int failures = 0;
    for (int i = 0; i < config.test_size; ++i) {
      if (!truth[i]) continue;
      Vec mu = test_rule.nodes.row(i);
      try {
        ReducedSolution sol = solve_online(model, mu);
        ErrorRecord rec = compute_relative_errors(*def, *truth[i], sol);
        err_stats[0].add(safe_log10(rec.e_y));
        err_stats[1].add(safe_log10(rec.e_u));
        err_stats[2].add(safe_log10(rec.e_p));
        err_stats[3].add(safe_log10(rec.e_j));
        if (config.measure_speedup && sol.online_seconds > 0.0)
          speed_stats.add(truth_seconds[i] / sol.online_seconds);
      } catch (const std::exception& e) {
        ++failures;
        report.failure_log.push_back("reduced N=" + std::to_string(n) + ": " + e.what());
      }
    }

    report.n_values.push_back(n);
    std::array<FieldStats, 4> row;
    for (int k = 0; k < 4; ++k)
      row[k] = {err_stats[k].mean(), err_stats[k].unbiased_std(), err_stats[k].count()};
    report.error_stats.push_back(row);
    report.speedup_stats.push_back({speed_stats.mean(), speed_stats.min(),
                                    speed_stats.max(), speed_stats.unbiased_std(),
                                    speed_stats.count()});
    report.reduced_failures.push_back(failures);
  }

  return report;
}

void emit_results(const StudyReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  {
    std::FILE* f = std::fopen((dir + "/errors.csv").c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + dir + "/errors.csv");
    std::fprintf(f, "N,field,mean_log10,std_log10\n");
    for (size_t i = 0; i < report.n_values.size(); ++i)
      for (int k = 0; k < 4; ++k)
        std::fprintf(f, "%d,%s,%.17g,%.17g\n", report.n_values[i],
                     StudyReport::kFields[k], report.error_stats[i][k].mean_log10,
                     report.error_stats[i][k].std_log10);
    std::fclose(f);
  }
  {
    std::FILE* f = std::fopen((dir + "/speedup.csv").c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + dir + "/speedup.csv");
    std::fprintf(f, "N,avg,min,max,std\n");
    if (report.config.measure_speedup)
      for (size_t i = 0; i < report.n_values.size(); ++i)
        std::fprintf(f, "%d,%.6g,%.6g,%.6g,%.6g\n", report.n_values[i],
                     report.speedup_stats[i].avg, report.speedup_stats[i].min,
                     report.speedup_stats[i].max, report.speedup_stats[i].std);
    std::fclose(f);
  }
  {
    std::FILE* f = std::fopen((dir + "/eigenvalues.csv").c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + dir + "/eigenvalues.csv");
    std::fprintf(f, "field,index,lambda\n");
    for (size_t j = 0; j < report.pod_field_names.size(); ++j)
      for (int k = 0; k < report.pod_eigenvalues[j].size(); ++k)
        std::fprintf(f, "%s,%d,%.17g\n", report.pod_field_names[j].c_str(), k,
                     report.pod_eigenvalues[j][k]);
    std::fclose(f);
  }
  {
    nlohmann::json manifest;
    manifest["config"] = nlohmann::json::parse(report.config.to_json());
    manifest["train_attempted"] = report.train_attempted;
    manifest["train_failed"] = report.train_failed;
    manifest["truth_test_failed"] = report.truth_test_failed;
    manifest["reduced_failures"] = report.reduced_failures;
    manifest["failures"] = report.failure_log;
    manifest["note"] = "speedup-index values are machine dependent";
    std::ofstream(dir + "/manifest.json") << manifest.dump(2) << "\n";
  }
}

namespace {

RuleKind rule_from_string(const std::string& s) {
  if (s == "mc") return RuleKind::kMonteCarlo;
  if (s == "gauss") return RuleKind::kGauss;
  if (s == "pseudo") return RuleKind::kPseudoRandom;
  if (s == "cc") return RuleKind::kClenshawCurtis;
  throw std::invalid_argument("unknown rule '" + s + "'");
}

}  // namespace

StudyConfig StudyConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  StudyConfig c;
  c.case_name = j.value("case", c.case_name);
  c.mesh_path = j.value("mesh", c.mesh_path);
  c.nx = j.value("nx", c.nx);
  c.ny = j.value("ny", c.ny);
  if (j.contains("dist")) {
    c.dist_spec.clear();
    if (j["dist"].is_string())
      c.dist_spec.push_back(j["dist"]);
    else
      for (const auto& s : j["dist"]) c.dist_spec.push_back(s);
  }
  if (j.contains("rule")) c.rule = rule_from_string(j["rule"]);
  c.train_size = j.value("train_size", c.train_size);
  c.tensor_nodes = j.value("tensor_nodes", c.tensor_nodes);
  c.train_seed = j.value("train_seed", c.train_seed);
  c.test_seed = j.value("test_seed", c.test_seed);
  c.test_size = j.value("test_size", c.test_size);
  c.n_min = j.value("n_min", c.n_min);
  c.n_max = j.value("n_max", c.n_max);
  c.aggregated = j.value("aggregation", c.aggregated);
  if (j.contains("pod"))
    c.pod = j["pod"] == "snapshot" ? PodFormulation::kSnapshot : PodFormulation::kWeighted;
  if (j.contains("nl_mode"))
    c.nl_mode = j["nl_mode"] == "full" ? OnlineNlMode::kFullOrder : OnlineNlMode::kTensor;
  if (j.contains("cc_weighting"))
    c.cc_weighting = j["cc_weighting"] == "log" ? CcWeighting::kLogSpace
                                                : CcWeighting::kPdfFactor;
  if (j.contains("alpha")) c.alpha_override = j["alpha"].get<double>();
  c.measure_speedup = j.value("measure_speedup", c.measure_speedup);
  c.output_dir = j.value("out", c.output_dir);
  if (j.value("smoke", false)) c.apply_smoke_profile();
  return c;
}

std::string StudyConfig::to_json() const {
  nlohmann::json j;
  j["case"] = case_name;
  j["mesh"] = mesh_path;
  j["nx"] = nx;
  j["ny"] = ny;
  j["dist"] = dist_spec;
  j["rule"] = rule_kind_name(rule);
  j["train_size"] = train_size;
  j["tensor_nodes"] = tensor_nodes;
  j["train_seed"] = train_seed;
  j["test_seed"] = test_seed;
  j["test_size"] = test_size;
  j["n_min"] = n_min;
  j["n_max"] = n_max;
  j["aggregation"] = aggregated;
  j["pod"] = pod == PodFormulation::kSnapshot ? "snapshot" : "weighted";
  j["nl_mode"] = nl_mode == OnlineNlMode::kFullOrder ? "full" : "tensor";
  j["cc_weighting"] = cc_weighting == CcWeighting::kLogSpace ? "log" : "pdf";
  if (alpha_override) j["alpha"] = *alpha_override;
  j["measure_speedup"] = measure_speedup;
  j["out"] = output_dir;
  return j.dump();
}

}  // namespace ocrom
