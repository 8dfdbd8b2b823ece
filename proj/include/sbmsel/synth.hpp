#pragma once

#include <cstdint>
#include <vector>

#include "sbmsel/blockmodel.hpp"
#include "sbmsel/graph.hpp"
#include "sbmsel/random.hpp"

namespace sbmsel {

// Planted partition: B equal groups of n_r nodes, assortativity c, <E> expected edges.
struct PlantedParams {
  int groups = 10;
  int group_size = 100;
  double assortativity = 0.8;
  double expected_edges = 10000.0;

  static PlantedParams from_mean_degree(int groups, int group_size, double assortativity, double mean_degree);

  int node_count() const noexcept { return groups * group_size; }
  double mean_degree() const noexcept { return 2.0 * expected_edges / node_count(); }
  void validate() const;
};

struct RateMatrix {
  int groups = 0;
  std::vector<double> rates;  // row-major, symmetric

  double at(int r, int s) const { return rates[static_cast<std::size_t>(r) * groups + s]; }
};

RateMatrix planted_rates(const PlantedParams& p);

// b_i = i / n_r.
Partition planted_partition(const PlantedParams& p);

// Pair i < j receives Poisson(lambda_{b_i b_j}) edge units. No self-loops.
Multigraph sample_canonical(const RateMatrix& rates, const Partition& b, Rng& rng);

// Block (r, s) receives exactly round(N_rs lambda_rs) units (ties to even),
// placed uniformly with replacement among its N_rs node pairs.
Multigraph sample_microcanonical(const RateMatrix& rates, const Partition& b, Rng& rng);

// Number of node pairs between groups r and s (n_r(n_r-1)/2 on the diagonal).
std::int64_t block_pair_count(std::int64_t size_r, std::int64_t size_s, bool diagonal);

// Edge units the microcanonical sampler places in block (r, s).
std::int64_t microcanonical_block_edges(const RateMatrix& rates, const std::vector<std::int64_t>& sizes, int r,
                                        int s);

// c* = 1/B + (B-1)/(B sqrt(<k>)).
double detectability_threshold(int groups, double mean_degree);

// Leave-one-out AUC when candidates are ranked by the generating rates.
double auc_theory_true_model(int groups, double assortativity);

// Leave-one-out AUC when the SBM is fitted to the graph with the edge removed
// and the planted partition known.
double auc_theory_inferred(int groups, double assortativity);

// Oracle scorer: log2 of the generating rate between the endpoints' groups.
double true_rate_log_score(const RateMatrix& rates, const Partition& b, int i, int j);

// Two cliques of `clique_size` nodes (0..n-1 and n..2n-1) with symmetric flip
// noise: every node pair independently has its clique state inverted with
// probability `flip`, removing within-clique edges and adding between-clique ones.
Multigraph two_cliques_with_noise(int clique_size, double flip, Rng& rng);

// Two cliques of `clique_size` nodes with no edge between them.
Partition two_cliques_partition(int clique_size);

}  // namespace sbmsel
