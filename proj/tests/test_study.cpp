#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ocrom/study.hpp"
#include "oracles.hpp"

using namespace ocrom;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

StudyConfig tiny_config(const std::string& out) {
  StudyConfig c;
  c.case_name = "gulf";
  c.nx = 8;
  c.ny = 8;
  c.train_size = 10;
  c.test_size = 6;
  c.n_min = 1;
  c.n_max = 4;
  c.measure_speedup = false;
  c.output_dir = out;
  return c;
}

}  // namespace

TEST_SUITE("study") {

TEST_CASE("relative errors: zero for equality, one for doubling") {
  auto mesh = std::make_shared<Mesh>(make_case_mesh("gulf", 6, 6));
  OCPDefinition def = builtin_case("gulf", mesh);
  Vec mu(3);
  mu << 0.8, 0.1, -0.7;
  TruthSolution truth = solve_truth(def, mu);

  ReducedSolution same;
  same.y = truth.y;
  same.u = truth.u;
  same.p = truth.p;
  same.objective = truth.objective;
  ErrorRecord zero = compute_relative_errors(def, truth, same);
  CHECK(zero.e_y == 0.0);
  CHECK(zero.e_u == 0.0);
  CHECK(zero.e_p == 0.0);
  CHECK(zero.e_j == 0.0);
  CHECK_FALSE(zero.abs_y);

  ReducedSolution doubled = same;
  doubled.y = 2.0 * truth.y;
  doubled.u = 2.0 * truth.u;
  doubled.p = 2.0 * truth.p;
  ErrorRecord one = compute_relative_errors(def, truth, doubled);
  CHECK(one.e_y == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(one.e_u == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(one.e_p == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("error record cross-checked against a separately assembled norm") {
  auto mesh = std::make_shared<Mesh>(make_case_mesh("gulf", 6, 6));
  OCPDefinition def = builtin_case("gulf", mesh);
  Vec mu(3);
  mu << 0.6, -0.4, 0.2;
  TruthSolution truth = solve_truth(def, mu);
  std::mt19937 rng(9);
  ReducedSolution approx;
  approx.y = truth.y + 1e-3 * oracles::random_vector(def.n_y(), rng);
  approx.u = truth.u;
  approx.p = truth.p;
  approx.objective = truth.objective;
  ErrorRecord rec = compute_relative_errors(def, truth, approx);

  // independent oracle: rebuild the H1 norm matrix from scratch
  DofMap map = build_dofmap(*mesh);
  SpMat x = restrict_matrix(SpMat(assemble_stiffness(*mesh) + assemble_mass(*mesh)),
                            map.free_dofs, map.free_dofs);
  Vec d = truth.y - approx.y;
  double expected = std::sqrt(d.dot(x * d) / truth.y.dot(x * truth.y));
  CHECK(rec.e_y == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("zero-norm truth components are flagged absolute") {
  auto mesh = std::make_shared<Mesh>(make_case_mesh("gulf", 5, 5));
  OCPDefinition def = builtin_case("gulf", mesh);
  TruthSolution truth;
  truth.y = Vec::Zero(def.n_y());
  truth.u = Vec::Zero(def.n_u());
  truth.p = Vec::Zero(def.n_p());
  truth.objective = 0.0;
  truth.mu = Vec::Zero(3);
  ReducedSolution approx;
  approx.y = Vec::Constant(def.n_y(), 1e-3);
  approx.u = Vec::Zero(def.n_u());
  approx.p = Vec::Zero(def.n_p());
  approx.objective = 1e-5;
  ErrorRecord rec = compute_relative_errors(def, truth, approx);
  CHECK(rec.abs_y);
  CHECK(rec.abs_j);
  CHECK(rec.e_y > 0.0);
}

TEST_CASE("running statistics agree with a two-pass oracle") {
  std::mt19937 rng(100);
  std::uniform_real_distribution<double> u(-3.0, 5.0);
  std::vector<double> values;
  RunningStats stats;
  for (int i = 0; i < 500; ++i) {
    double v = u(rng);
    values.push_back(v);
    stats.add(v);
  }
  auto expected = oracles::two_pass_stats(values);
  CHECK(stats.mean() == doctest::Approx(expected.mean).epsilon(1e-12));
  CHECK(stats.unbiased_std() == doctest::Approx(expected.std).epsilon(1e-12));
  CHECK(stats.min() == *std::min_element(values.begin(), values.end()));
  CHECK(stats.max() == *std::max_element(values.begin(), values.end()));
}

TEST_CASE("distribution specs parse and reject garbage") {
  std::vector<std::array<double, 2>> box = {{0, 1}, {0.5, 2}, {1e-4, 1}};
  ProductDistribution broadcast = parse_distributions({"uniform"}, box);
  CHECK(broadcast.size() == 3);
  ProductDistribution mixed =
      parse_distributions({"beta:75:75", "uniform", "loguniform"}, box);
  CHECK(mixed[0].kind == DistKind::kBeta);
  CHECK(mixed[2].kind == DistKind::kLoguniform);
  CHECK_THROWS_AS(parse_distributions({"cauchy"}, box), std::invalid_argument);
  CHECK_THROWS_AS(parse_distributions({"beta:75"}, box), std::invalid_argument);
}

TEST_CASE("tensor training rules have size nodes^dim") {
  StudyConfig c;
  c.rule = RuleKind::kGauss;
  c.tensor_nodes = 5;
  std::vector<std::array<double, 2>> box = {{0.5, 1}, {-1, 1}, {-1, 1}};
  ProductDistribution dist = parse_distributions({"uniform"}, box);
  QuadratureRule rule = build_training_rule(c, dist);
  CHECK(rule.size() == 125);
}

TEST_CASE("case meshes carry what the cases need") {
  Mesh gulf = make_case_mesh("gulf", 8, 8);
  CHECK(gulf.has_subdomain(kControlRegion));
  CHECK(gulf.has_subdomain(kObservationRegion));
  CHECK(gulf.boundary_length(BoundaryTag::kNeumann) > 0.0);

  Mesh ocean = make_case_mesh("stommel_munk", 8, 8);
  for (const auto& e : ocean.boundary_edges)
    CHECK(e.tag == BoundaryTag::kDirichlet);
  CHECK_THROWS_AS(make_case_mesh("nope", 4, 4), std::invalid_argument);
}

TEST_CASE("study outputs: row counts, empty range, determinism") {
  namespace fs = std::filesystem;
  std::string out1 = (fs::temp_directory_path() / "ocrom_study1").string();
  std::string out2 = (fs::temp_directory_path() / "ocrom_study2").string();
  fs::remove_all(out1);
  fs::remove_all(out2);

  StudyConfig config = tiny_config(out1);
  StudyReport report = run_study(config);
  emit_results(report, out1);

  // errors.csv rows = |N range| x 4 fields + header
  std::string errors = slurp(out1 + "/errors.csv");
  int lines = static_cast<int>(std::count(errors.begin(), errors.end(), '\n'));
  CHECK(lines == 4 * 4 + 1);

  // speedup disabled: header only
  std::string speedup = slurp(out1 + "/speedup.csv");
  CHECK(speedup == "N,avg,min,max,std\n");

  // a second run with identical seeds is byte identical
  StudyConfig config2 = tiny_config(out2);
  StudyReport report2 = run_study(config2);
  emit_results(report2, out2);
  CHECK(slurp(out1 + "/errors.csv") == slurp(out2 + "/errors.csv"));
  CHECK(slurp(out1 + "/eigenvalues.csv") == slurp(out2 + "/eigenvalues.csv"));
  CHECK(slurp(out1 + "/speedup.csv") == slurp(out2 + "/speedup.csv"));

  // manifests differ only in the output path; normalize it away
  std::string m1 = slurp(out1 + "/manifest.json");
  std::string m2 = slurp(out2 + "/manifest.json");
  size_t p1 = m1.find("ocrom_study1");
  size_t p2 = m2.find("ocrom_study2");
  REQUIRE(p1 != std::string::npos);
  m1.replace(p1, 12, "X");
  m2.replace(p2, 12, "X");
  CHECK(m1 == m2);

  // empty N range gives header-only error/speedup tables
  std::string out3 = (fs::temp_directory_path() / "ocrom_study3").string();
  fs::remove_all(out3);
  StudyReport empty;
  empty.config = config;
  emit_results(empty, out3);
  CHECK(slurp(out3 + "/errors.csv") == "N,field,mean_log10,std_log10\n");
}

TEST_CASE("speedup indices are positive when timing is enabled") {
  StudyConfig config = tiny_config(
      (std::filesystem::temp_directory_path() / "ocrom_study_t").string());
  config.measure_speedup = true;
  config.n_min = 3;
  config.n_max = 3;
  config.test_size = 4;
  StudyReport report = run_study(config);
  REQUIRE(report.speedup_stats.size() == 1);
  CHECK(report.speedup_stats[0].count > 0);
  CHECK(report.speedup_stats[0].min > 0.0);
}

TEST_CASE("error trend query returns the first N reaching a threshold") {
  StudyReport report;
  report.n_values = {1, 2, 3};
  report.error_stats.resize(3);
  for (int i = 0; i < 3; ++i) {
    report.error_stats[i][0] = {-2.0 * (i + 1), 0.1, 5};
  }
  CHECK(report.smallest_n_reaching(1e-3) == 2);
  CHECK(report.smallest_n_reaching(1e-9) == -1);
}

TEST_CASE("config JSON round trip") {
  StudyConfig c;
  c.case_name = "stommel_munk";
  c.rule = RuleKind::kClenshawCurtis;
  c.tensor_nodes = 4;
  c.aggregated = false;
  c.pod = PodFormulation::kSnapshot;
  c.alpha_override = 3e-5;
  std::string path = (std::filesystem::temp_directory_path() / "ocrom_cfg.json").string();
  std::ofstream(path) << c.to_json();
  StudyConfig r = StudyConfig::from_json_file(path);
  CHECK(r.case_name == c.case_name);
  CHECK(r.rule == c.rule);
  CHECK(r.tensor_nodes == c.tensor_nodes);
  CHECK(r.aggregated == c.aggregated);
  CHECK(r.pod == c.pod);
  REQUIRE(r.alpha_override.has_value());
  CHECK(*r.alpha_override == doctest::Approx(3e-5));
}

}  // TEST_SUITE
