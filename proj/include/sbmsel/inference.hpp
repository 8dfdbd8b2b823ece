#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "sbmsel/blockmodel.hpp"
#include "sbmsel/random.hpp"

namespace sbmsel {

struct ChainOptions {
  // Probability of drawing the target group uniformly among the existing
  // groups plus one fresh group, instead of from a random neighbor's group.
  double fresh_probability = 0.1;
  // Upper bound on the number of occupied groups (0 = min(N, 2048)).
  int max_groups = 0;
  // Keep the number of groups fixed: no fresh groups, no moves that empty a group.
  bool fixed_group_count = false;
  // No moves at all; the partition stays at its initial value.
  bool clamped = false;
};

// One Markov chain over node partitions. The target distribution is the
// posterior over unlabeled partitions, B! P(b) P(A|b,C)^beta, where beta tempers
// only the likelihood (beta = 0 samples the partition prior).
//
// Internal group labels may have gaps; partition() returns compacted labels.
class ChainState {
 public:
  ChainState(const Multigraph& g, const Partition& initial, ModelClass cls, std::uint64_t seed,
             ChainOptions options = {});

  const Multigraph& graph() const noexcept { return *graph_; }
  ModelClass model_class() const noexcept { return cls_; }
  const ChainOptions& options() const noexcept { return options_; }

  Partition partition() const;
  int label(int node) const { return labels_[node]; }
  int group_count() const noexcept { return static_cast<int>(occupied_.size()); }
  std::int64_t group_size(int label) const { return sizes_[label]; }
  // Occupied labels in increasing order.
  std::vector<int> occupied_labels() const;

  double inverse_temperature() const noexcept { return beta_; }
  void set_inverse_temperature(double beta);

  // Tracked incrementally; refresh() recomputes from the sufficient statistics.
  double description_length() const noexcept;  // bits
  double log_posterior() const noexcept { return -description_length(); }
  double log_likelihood_nats() const noexcept { return log_likelihood_; }
  double log_prior_nats() const noexcept { return log_prior_; }
  void refresh();

  // Smallest currently empty label, or -1 when the label capacity is exhausted.
  int fresh_label() const;

  // Change of Sigma (bits) if `node` moved to `target` (an occupied or empty label).
  double move_delta(int node, int target) const;
  void move(int node, int target);

  // Probability that one proposal for `node` yields the partition obtained by
  // moving it to `target`; zero for moves that leave the partition unchanged.
  double proposal_probability(int node, int target) const;

  // ln of the Metropolis-Hastings ratio for moving `node` to `target` (before
  // clipping at zero); -inf when the move is not allowed.
  double log_acceptance_ratio(int node, int target) const;

  // N proposals with Metropolis-Hastings acceptance. Returns the number of
  // accepted moves that changed the partition.
  int sweep();

  // Zero-temperature pass in node order: each node moves to the group with the
  // lowest Sigma if that strictly decreases it. Returns the number of moves.
  int greedy_pass();
  // Same, but each node only considers the groups of its own neighbors.
  int local_greedy_pass();

  // Change of Sigma (bits) if every node of group r joined group s.
  double merge_delta(int r, int s) const;
  // Moves all nodes of r into s. Allowed even when the group count is fixed.
  void merge(int r, int s);

  Rng& rng() noexcept { return rng_; }

 private:
  struct Delta {
    double likelihood = 0.0;  // nats
    double prior = 0.0;       // nats
  };

  struct NodeContext {
    int node = 0;
    std::int64_t self_loops = 0;  // A_ii (doubled)
    std::int64_t degree = 0;
  };

  std::int64_t& edges(int r, int s) { return edge_counts_[static_cast<std::size_t>(r) * capacity_ + s]; }
  std::int64_t edges(int r, int s) const { return edge_counts_[static_cast<std::size_t>(r) * capacity_ + s]; }

  // Fills neighbor_counts_ / touched_ with edge units from `node` to each group
  // (self-loops excluded).
  NodeContext gather(int node) const;
  void clear_gather() const;
  Delta delta_for(const NodeContext& ctx, int target) const;
  bool move_allowed(int node, int target) const;
  int random_option_count(int groups) const;
  double proposal_probability_from(const NodeContext& ctx, int from_groups, int target,
                                   std::int64_t neighbors_in_target) const;
  double log_acceptance_from(const NodeContext& ctx, int target, const Delta& delta) const;
  int propose(const NodeContext& ctx);
  int greedy_pass_impl(bool neighbors_only);
  void apply_move(const NodeContext& ctx, int target);

  const Multigraph* graph_;
  ModelClass cls_;
  ChainOptions options_;
  LogFactorial log_factorial_;
  int node_count_;
  int capacity_;
  double beta_ = 1.0;
  Rng rng_;

  std::vector<int> labels_;
  std::vector<std::int64_t> sizes_;
  std::vector<std::int64_t> group_degrees_;
  std::vector<std::int64_t> edge_counts_;
  std::vector<int> occupied_;           // unordered, O(1) random access
  std::vector<int> occupied_position_;  // index into occupied_, -1 if empty
  std::set<int> free_;

  double node_constant_ = 0.0;
  double log_likelihood_ = 0.0;  // ln P(A|b,C)
  double log_prior_ = 0.0;       // ln P(b)

  mutable std::vector<std::int64_t> neighbor_counts_;
  mutable std::vector<int> touched_;
};

struct PosteriorSample {
  std::vector<Partition> partitions;
  std::vector<double> log_posteriors;  // -Sigma in bits
  int sweep_interval = 0;
  int burn_in = 0;

  std::size_t size() const noexcept { return partitions.size(); }
};

struct SamplerConfig {
  int n_samples = 100;
  int sweep_interval = 10;
  int burn_in = 1000;
  std::optional<Partition> initial;  // defaults to a random partition
  ChainOptions chain;
};

PosteriorSample sample_posterior(const Multigraph& g, ModelClass cls, const SamplerConfig& config,
                                 std::uint64_t seed);
PosteriorSample sample_posterior(const Multigraph& g, ModelClass cls, int n_samples, int sweep_interval,
                                 int burn_in, std::uint64_t seed);

struct AnnealingSchedule {
  int sweeps = 1000;
  double beta_start = 1.0;
  double beta_max = 10.0;

  // Geometric interpolation from beta_start to beta_max.
  double beta_at(int sweep) const;
};

struct MapSearchConfig {
  int restarts = 10;
  AnnealingSchedule schedule;
  int max_greedy_passes = 1000;
  // Number of groups of the random starting partition (0 = ceil(sqrt(N))).
  int initial_groups = 0;
  // When > 0, inference is constrained to exactly this many groups.
  int forced_groups = 0;
  int max_groups = 0;
  double fresh_probability = 0.1;
  // When set, no search happens and this partition is returned.
  std::optional<Partition> clamp;
  // Start each restart from the agglomerative descent instead of a random partition.
  bool agglomerative_init = true;
  // When set, every restart starts from this partition instead of a random one.
  std::optional<Partition> warm_start;
};

struct MapResult {
  Partition partition;
  double description_length = 0.0;  // bits
  int restart = 0;                  // index of the restart that produced the result
};

// Best-effort search for the MAP partition: annealed MCMC per restart followed by
// greedy sweeps until no single-node move lowers Sigma. Heuristic, not exact.
MapResult find_map_partition(const Multigraph& g, ModelClass cls, const MapSearchConfig& config,
                             std::uint64_t seed);

struct AgglomerativeConfig {
  // While the group count is at least `unit_step_below`, each level divides it by this ratio.
  double merge_ratio = 1.5;
  int unit_step_below = 32;
  int merge_candidates = 10;
  int refine_passes = 3;
  int min_groups = 1;
  double fresh_probability = 0.1;
};

// Multilevel merge descent from singletons (or from a random partition at the
// label capacity for large graphs). Each level merges the most favorable
// group pairs and then refines with single-node greedy moves. Entry B holds the
// partition visited with exactly B groups, when one was.
std::vector<std::optional<Partition>> agglomerative_levels(const Multigraph& g, ModelClass cls,
                                                           const AgglomerativeConfig& config, std::uint64_t seed);

// Random partition with exactly `groups` occupied groups.
Partition random_partition(int node_count, int groups, Rng& rng);

}  // namespace sbmsel
