#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sbmsel/graph.hpp"

namespace sbmsel {

enum class ModelClass { sbm, dcsbm };

std::string_view to_string(ModelClass cls) noexcept;
ModelClass parse_model_class(std::string_view name);

// Hard assignment of N nodes to B groups. Labels are always compacted to
// 0..B-1 (relative order of the input labels is preserved).
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<int> labels);

  static Partition single_group(int node_count);

  int node_count() const noexcept { return static_cast<int>(labels_.size()); }
  int group_count() const noexcept { return groups_; }
  int operator[](int node) const { return labels_[node]; }
  std::span<const int> labels() const noexcept { return labels_; }
  std::vector<std::int64_t> group_sizes() const;

  // Relabeled in order of first appearance; equal for partitions that differ
  // only by a permutation of group labels.
  Partition canonical() const;

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<int> labels_;
  int groups_ = 0;
};

// ln(n!) with a precomputed table and lgamma beyond it.
class LogFactorial {
 public:
  explicit LogFactorial(std::int64_t table_size = 0);

  double operator()(std::int64_t n) const {
    return n < static_cast<std::int64_t>(table_.size()) ? table_[n] : std::lgamma(static_cast<double>(n) + 1.0);
  }
  // ln C(n, k)
  double log_binomial(std::int64_t n, std::int64_t k) const {
    if (k < 0 || k > n) return -INFINITY;
    return (*this)(n) - (*this)(k) - (*this)(n - k);
  }
  // ln of the number of multisets of size m drawn from n kinds, C(n + m - 1, m).
  double log_multiset(std::int64_t n, std::int64_t m) const {
    if (m == 0) return 0.0;
    if (n <= 0) return -INFINITY;
    return log_binomial(n + m - 1, m);
  }
  // ln(x!!) for even x = 2m: m ln 2 + ln m!
  double log_double_factorial_even(std::int64_t x) const {
    return static_cast<double>(x / 2) * std::numbers::ln2 + (*this)(x / 2);
  }

  std::int64_t table_size() const noexcept { return static_cast<std::int64_t>(table_.size()); }

 private:
  std::vector<double> table_;
};

// Sufficient statistics of (A, b): n_r, the e_rs matrix (e_rr counts internal
// edges twice) and e_r = sum_s e_rs.
struct BlockStats {
  int groups = 0;
  std::vector<std::int64_t> sizes;
  std::vector<std::int64_t> edge_counts;  // row-major groups x groups
  std::vector<std::int64_t> group_degrees;

  std::int64_t at(int r, int s) const { return edge_counts[static_cast<std::size_t>(r) * groups + s]; }

  static BlockStats compute(const Multigraph& g, const Partition& b);

  friend bool operator==(const BlockStats&, const BlockStats&) = default;
};

// Per-factor breakdown of the description length, all in bits.
struct DescriptionLengthTerms {
  double graph_likelihood = 0.0;  // -log2 P(A | e, b) or -log2 P(A | k, e, b)
  double edge_prior = 0.0;        // -log2 P(e | b)
  double degree_prior = 0.0;      // -log2 P(k | e, b), DCSBM only
  double partition_prior = 0.0;   // -log2 P(b)

  double total() const noexcept { return graph_likelihood + edge_prior + degree_prior + partition_prior; }
};

// Individual factors of the marginal likelihood, log base 2.
double log_graph_likelihood(const Multigraph& g, const Partition& b, ModelClass cls);
double log_edge_count_prior(int groups, std::int64_t edge_count);
double log_degree_prior(const BlockStats& stats);

// log2 P(A | b, C): graph likelihood times the edge-count prior (and degree prior for DCSBM).
double log_likelihood(const Multigraph& g, const Partition& b, ModelClass cls);

// log2 P(b) = -log2 N - log2 C(N-1, B-1) - log2 N! + sum_r log2 n_r!
double log_prior_partition(const Partition& b, int node_count);
double log_prior_partition(const Partition& b);

DescriptionLengthTerms description_length_terms(const Multigraph& g, const Partition& b, ModelClass cls);

// Sigma(A, b; C) in bits.
double description_length(const Multigraph& g, const Partition& b, ModelClass cls);

// log2 of the posterior odds of (b1, c1) against (b2, c2); positive favors the first.
double posterior_log_odds(const Multigraph& g, const Partition& b1, ModelClass c1, const Partition& b2,
                          ModelClass c2);

namespace terms {

// Natural-log building blocks shared by the from-scratch and incremental paths.

// Contribution of one e_rs entry (r <= s) to ln P(A | e, b).
inline double pair(const LogFactorial& lf, bool diagonal, std::int64_t e) {
  return diagonal ? lf.log_double_factorial_even(e) : lf(e);
}

// Contribution of group r to ln P(A | b, C), excluding the pair terms.
inline double group(const LogFactorial& lf, ModelClass cls, std::int64_t size, std::int64_t degree) {
  if (cls == ModelClass::sbm) {
    return size > 0 ? -static_cast<double>(degree) * std::log(static_cast<double>(size)) : 0.0;
  }
  return -lf(degree) - lf.log_multiset(size, degree);
}

inline double edge_prior(const LogFactorial& lf, std::int64_t groups, std::int64_t edges) {
  return -lf.log_multiset(groups * (groups + 1) / 2, edges);
}

// ln P(b) minus the sum of ln n_r! terms.
inline double partition_base(const LogFactorial& lf, std::int64_t nodes, std::int64_t groups) {
  if (nodes == 0) return 0.0;
  return -std::log(static_cast<double>(nodes)) - lf.log_binomial(nodes - 1, groups - 1) - lf(nodes);
}

// Node-level constant: -sum ln A_ij! - sum ln A_ii!! (+ sum ln k_i! for DCSBM).
double node_constant(const LogFactorial& lf, const Multigraph& g, ModelClass cls);

}  // namespace terms

// Table large enough for every factorial touched by likelihoods on g (2E + N + slack).
LogFactorial make_log_factorial(const Multigraph& g, std::int64_t extra = 16);

}  // namespace sbmsel
