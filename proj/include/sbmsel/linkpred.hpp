#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sbmsel/blockmodel.hpp"
#include "sbmsel/inference.hpp"
#include "sbmsel/random.hpp"

namespace sbmsel {

enum class CandidateKind {
  missing_edge,   // one edge unit absent from the observation
  spurious_edge,  // one observed edge unit that should not be there
};

struct Candidate {
  int i = 0;
  int j = 0;
  CandidateKind kind = CandidateKind::missing_edge;

  // Orders the endpoints so that i <= j.
  static Candidate make(int a, int b, CandidateKind kind = CandidateKind::missing_edge);

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct PredictionScore {
  Candidate candidate;
  double log_score = 0.0;  // log2, relative
};

struct AucResult {
  double auc = 0.5;
  std::size_t n_positives = 0;
  std::size_t n_negatives = 0;
};

// Change in description length from completing one candidate entry, for a
// fixed partition. Sufficient statistics are built once; each query touches
// only the affected counts.
class EdgeScorer {
 public:
  EdgeScorer(const Multigraph& observed, const Partition& b, ModelClass cls);

  // Sigma(A^O + dA, b) - Sigma(A^O, b), in bits.
  double delta_sigma(const Candidate& c) const;
  double log_score(const Candidate& c) const { return -delta_sigma(c); }

 private:
  std::int64_t edges(int r, int s) const { return stats_.at(r, s); }

  const Multigraph* graph_;
  Partition partition_;
  ModelClass cls_;
  BlockStats stats_;
  LogFactorial log_factorial_;
};

// Single-point approximation: log_score = -Delta Sigma(b*).
PredictionScore score_single_point(const Multigraph& observed, const Candidate& candidate, const Partition& b_star,
                                   ModelClass cls);

// Posterior average log2[(1/M) sum_m 2^(-Delta Sigma(b_m))].
PredictionScore score_averaged(const Multigraph& observed, const Candidate& candidate,
                               const PosteriorSample& samples, ModelClass cls);

// Batched forms; candidates share the per-partition statistics.
std::vector<double> score_single_point(const Multigraph& observed, std::span<const Candidate> candidates,
                                       const Partition& b_star, ModelClass cls);
std::vector<double> score_averaged(const Multigraph& observed, std::span<const Candidate> candidates,
                                   const PosteriorSample& samples, ModelClass cls);

// Weighted variant: log2[sum_m w_m 2^(-Delta Sigma(b_m)) / sum_m w_m] with
// weights given in log2. Used for importance-sampled and exhaustive averages.
double score_weighted(const Multigraph& observed, const Candidate& candidate, std::span<const Partition> partitions,
                      std::span<const double> log2_weights, ModelClass cls);

// log2 of the arithmetic mean of 2^x, evaluated stably.
double log2_mean_exp2(std::span<const double> values);
double log2_sum_exp2(std::span<const double> values);

// AUC with ties counted one half.
AucResult evaluate_auc(std::span<const double> positive_scores, std::span<const double> negative_scores);

struct NegativeSample {
  std::vector<Candidate> candidates;
  bool exhausted = false;  // fewer non-edges than requested; all were returned
};

// Uniform sample without replacement of pairs i < j with A_ij = 0.
NegativeSample sample_negatives(const Multigraph& complete, std::int64_t count, Rng& rng);

// Every pair i < j with A_ij = 0, in lexicographic order.
std::vector<Candidate> all_non_edges(const Multigraph& g);

}  // namespace sbmsel
