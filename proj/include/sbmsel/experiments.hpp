#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sbmsel/blockmodel.hpp"
#include "sbmsel/graph.hpp"
#include "sbmsel/inference.hpp"
#include "sbmsel/linkpred.hpp"
#include "sbmsel/synth.hpp"

namespace sbmsel {

// Worker count from SBMSEL_JOBS, else the hardware concurrency (at least 1).
int default_jobs();

// Runs body(0..count-1) on up to `jobs` threads (0 = default_jobs()). The first
// exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

struct RunRecord {
  std::string dataset;
  ModelClass model_class = ModelClass::sbm;
  int replicate = 0;
  std::uint64_t seed = 0;  // replicate seed, shared by all classes of the replicate
  double f = 0.0;
  double sigma_bits = 0.0;
  std::optional<double> auc;  // absent when nothing was removed
  double seconds = 0.0;
  int groups = 0;
  std::size_t n_positives = 0;
  std::size_t n_negatives = 0;
  std::uint64_t removal_digest = 0;
};

struct TTestResult {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
  double t = 0.0;
  double p = 1.0;  // two-sided
};

// One-sample t-test of zero mean with sample standard deviation.
TTestResult paired_t_test(std::span<const double> deltas);

// Two-sided p-value of a Student-t statistic with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

// One-sided lower confidence bound on the mean: mean - t_{confidence, n-1} sd / sqrt(n).
double mean_lower_confidence_bound(std::span<const double> values, double confidence = 0.95);

struct RemovalExperimentConfig {
  std::string dataset = "graph";
  std::vector<ModelClass> classes{ModelClass::sbm, ModelClass::dcsbm};
  double f = 0.05;
  int replicates = 50;
  MapSearchConfig map;
  // Negatives per positive; all non-edges are used when the graph has fewer.
  double negative_factor = 10.0;
  int jobs = 0;
};

std::vector<RunRecord> run_removal_experiment(const Multigraph& g, const RemovalExperimentConfig& config,
                                              std::uint64_t seed);

enum class Quadrant { consistent, inconsistent, inconclusive };
std::string_view to_string(Quadrant q) noexcept;

struct PairComparison {
  std::string dataset;
  // `first` is the class preferred by the description length (mean delta Sigma <= 0).
  ModelClass first = ModelClass::sbm;
  ModelClass second = ModelClass::dcsbm;
  std::size_t n = 0;
  // Deltas are first minus second.
  double mean_delta_sigma = 0.0;
  double mean_delta_auc = 0.0;
  std::optional<TTestResult> sigma_test;
  std::optional<TTestResult> auc_test;
  Quadrant quadrant = Quadrant::inconclusive;
};

struct ConsistencyReport {
  std::vector<PairComparison> pairs;
  std::size_t consistent = 0;
  std::size_t inconsistent = 0;
  std::size_t inconclusive = 0;
  // consistent / (consistent + inconsistent); absent when both are zero.
  std::optional<double> consistent_fraction;
};

// Pairs records by (dataset, replicate) and compares every pair of classes.
ConsistencyReport consistency_report(std::span<const RunRecord> records);

enum class LooScorer { sbm, dcsbm, true_rates };
std::string_view to_string(LooScorer s) noexcept;
LooScorer parse_loo_scorer(std::string_view name);

struct LeaveOneOutConfig {
  PlantedParams params;  // assortativity is overridden by each entry of `assortativities`
  std::vector<double> assortativities{0.4, 0.6, 0.8};
  std::vector<LooScorer> scorers{LooScorer::sbm, LooScorer::true_rates};
  int removals = 200;
  bool microcanonical = true;
  bool clamp_planted = true;
  // Negatives per removal; 0 scores every non-edge of the generated graph.
  std::int64_t negatives_per_removal = 0;
  MapSearchConfig map;  // used when clamp_planted is false
  int jobs = 0;
};

struct LeaveOneOutPoint {
  double assortativity = 0.0;
  LooScorer scorer = LooScorer::sbm;
  int removals = 0;
  double mean_auc = 0.0;
  double sd_auc = 0.0;
  std::optional<double> theory;  // closed form, when one exists for the scorer
};

std::vector<LeaveOneOutPoint> leave_one_out_pp(const LeaveOneOutConfig& config, std::uint64_t seed);

struct GroupsSweepConfig {
  ModelClass model_class = ModelClass::sbm;
  int min_groups = 1;
  int max_groups = 20;
  double f = 0.05;
  int replicates = 10;
  MapSearchConfig map;  // restarts, schedule and greedy limits for each forced B'
  double negative_factor = 10.0;
  int jobs = 0;
};

struct GroupsSweepPoint {
  int replicate = 0;
  std::uint64_t seed = 0;
  int groups = 0;
  double sigma_bits = 0.0;
  std::optional<double> auc;
};

std::vector<GroupsSweepPoint> groups_sweep(const Multigraph& g, const GroupsSweepConfig& config, std::uint64_t seed);

struct AveragingConfig {
  std::vector<ModelClass> classes{ModelClass::sbm};
  double f = 0.05;
  int replicates = 30;
  MapSearchConfig map;
  // The chain starts at b*; its burn-in, interval and sample count come from here.
  SamplerConfig sampler;
  double negative_factor = 10.0;
  int jobs = 0;
};

struct AveragingRecord {
  int replicate = 0;
  std::uint64_t seed = 0;
  ModelClass model_class = ModelClass::sbm;
  std::optional<double> auc_single;
  std::optional<double> auc_averaged;
  std::size_t n_positives = 0;
};

std::vector<AveragingRecord> averaging_comparison(const Multigraph& g, const AveragingConfig& config,
                                                  std::uint64_t seed);

// Candidates for every removed edge unit.
std::vector<Candidate> removed_candidates(const RemovalSplit& split);

// Negative count for `positives` positives under `factor`.
std::int64_t negative_count(std::size_t positives, double factor);

}  // namespace sbmsel
