#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ocrom/ocp.hpp"
#include "ocrom/quadrature.hpp"
#include "ocrom/rom.hpp"
#include "ocrom/wpod.hpp"

namespace ocrom {

struct StudyConfig {
  std::string case_name = "gulf";
  std::string mesh_path;  // generated case preset when empty
  int nx = 32, ny = 32;

  /// one spec per parameter component ("uniform", "beta:a:b", "loguniform"),
  /// or a single spec broadcast to all components
  std::vector<std::string> dist_spec = {"uniform"};

  RuleKind rule = RuleKind::kMonteCarlo;
  int train_size = 100;       // MC / pseudo-random
  int tensor_nodes = 5;       // per-dimension count for Gauss / Clenshaw-Curtis
  std::uint64_t train_seed = 20220701;
  std::uint64_t test_seed = 19930825;
  int test_size = 100;

  int n_min = 1, n_max = 20;
  bool aggregated = true;
  PodFormulation pod = PodFormulation::kWeighted;
  OnlineNlMode nl_mode = OnlineNlMode::kTensor;
  CcWeighting cc_weighting = CcWeighting::kPdfFactor;
  std::optional<double> alpha_override;
  bool measure_speedup = true;
  std::string output_dir = "study_out";

  void apply_smoke_profile() {
    train_size = 30;
    test_size = 20;
  }

  static StudyConfig from_json_file(const std::string& path);
  std::string to_json() const;
};

struct ErrorRecord {
  Vec mu;
  int n = 0;
  double e_y = 0, e_u = 0, e_p = 0, e_j = 0;
  // set when the truth component norm vanishes and the error is absolute
  bool abs_y = false, abs_u = false, abs_p = false, abs_j = false;
  double speedup = 0.0;
};

/// Relative errors in the definition norms; falls back to absolute errors
/// (flagged) when the truth component vanishes.
ErrorRecord compute_relative_errors(const OCPDefinition& def, const TruthSolution& truth,
                                    const ReducedSolution& reduced);

/// Streaming mean/min/max plus unbiased standard deviation (Welford).
class RunningStats {
 public:
  void add(double value);
  int count() const { return count_; }
  double mean() const { return mean_; }
  double unbiased_std() const;
  double min() const { return min_; }
  double max() const { return max_; }

 private:
  int count_ = 0;
  double mean_ = 0.0, m2_ = 0.0;
  double min_ = 0.0, max_ = 0.0;
};

struct FieldStats {
  double mean_log10 = 0.0, std_log10 = 0.0;
  int count = 0;
};

struct SpeedupStats {
  double avg = 0.0, min = 0.0, max = 0.0, std = 0.0;
  int count = 0;
};

struct StudyReport {
  StudyConfig config;
  std::vector<int> n_values;
  static constexpr const char* kFields[4] = {"y", "u", "p", "J"};
  std::vector<std::array<FieldStats, 4>> error_stats;  // per N
  std::vector<SpeedupStats> speedup_stats;             // per N
  std::vector<int> reduced_failures;                   // per N
  std::vector<std::string> pod_field_names;
  std::vector<Vec> pod_eigenvalues;
  int train_attempted = 0, train_failed = 0;
  int truth_test_failed = 0;
  std::vector<std::string> failure_log;

  /// First N whose mean state error is at or below the threshold; -1 if none.
  int smallest_n_reaching(double state_error_threshold) const;
};

StudyReport run_study(const StudyConfig& config);

/// errors.csv, speedup.csv, eigenvalues.csv, manifest.json (deterministic:
/// timing data only ever appears in speedup.csv).
void emit_results(const StudyReport& report, const std::string& dir);

/// Synthetic case meshes: the coercive pollution analog (rectangle with a
/// cut corner, west/south open boundary, control and observation boxes) and
/// the unit-square ocean basin.
Mesh make_case_mesh(const std::string& case_name, int nx, int ny);

ProductDistribution parse_distributions(const std::vector<std::string>& specs,
                                        const std::vector<std::array<double, 2>>& box);

QuadratureRule build_training_rule(const StudyConfig& config,
                                   const ProductDistribution& dist);

}  // namespace ocrom
