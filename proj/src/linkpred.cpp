#include "sbmsel/linkpred.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>

#include "sbmsel/errors.hpp"

namespace sbmsel {

Candidate Candidate::make(int a, int b, CandidateKind kind) {
  return a <= b ? Candidate{a, b, kind} : Candidate{b, a, kind};
}

EdgeScorer::EdgeScorer(const Multigraph& observed, const Partition& b, ModelClass cls)
    : graph_(&observed),
      partition_(b),
      cls_(cls),
      stats_(BlockStats::compute(observed, b)),
      log_factorial_(make_log_factorial(observed)) {}

double EdgeScorer::delta_sigma(const Candidate& c) const {
  const int n = graph_->node_count();
  if (c.i < 0 || c.j < 0 || c.i >= n || c.j >= n) throw ValidationError("candidate endpoint out of range");
  const auto& lf = log_factorial_;
  const int i = std::min(c.i, c.j);
  const int j = std::max(c.i, c.j);
  const std::int64_t sign = c.kind == CandidateKind::missing_edge ? 1 : -1;
  const auto a = graph_->multiplicity(i, j);
  if (sign < 0 && a == 0) throw ValidationError("spurious-edge candidate must be an observed edge");

  const int u = partition_[i];
  const int v = partition_[j];
  double dl = 0.0;  // change of ln P(A | b, C)

  if (u == v) {
    const auto e = edges(u, u);
    dl += terms::pair(lf, true, e + 2 * sign) - terms::pair(lf, true, e);
    const auto d = stats_.group_degrees[u];
    dl += terms::group(lf, cls_, stats_.sizes[u], d + 2 * sign) - terms::group(lf, cls_, stats_.sizes[u], d);
  } else {
    const auto e = edges(u, v);
    dl += terms::pair(lf, false, e + sign) - terms::pair(lf, false, e);
    const auto du = stats_.group_degrees[u];
    const auto dv = stats_.group_degrees[v];
    dl += terms::group(lf, cls_, stats_.sizes[u], du + sign) - terms::group(lf, cls_, stats_.sizes[u], du);
    dl += terms::group(lf, cls_, stats_.sizes[v], dv + sign) - terms::group(lf, cls_, stats_.sizes[v], dv);
  }

  if (i == j) {
    dl -= lf.log_double_factorial_even(a + 2 * sign) - lf.log_double_factorial_even(a);
    if (cls_ == ModelClass::dcsbm) {
      const auto k = graph_->degree(i);
      dl += lf(k + 2 * sign) - lf(k);
    }
  } else {
    dl -= lf(a + sign) - lf(a);
    if (cls_ == ModelClass::dcsbm) {
      const auto ki = graph_->degree(i);
      const auto kj = graph_->degree(j);
      dl += lf(ki + sign) - lf(ki) + lf(kj + sign) - lf(kj);
    }
  }

  const auto e_total = graph_->edge_count();
  dl += terms::edge_prior(lf, stats_.groups, e_total + sign) - terms::edge_prior(lf, stats_.groups, e_total);
  return -dl / std::numbers::ln2;
}

PredictionScore score_single_point(const Multigraph& observed, const Candidate& candidate, const Partition& b_star,
                                   ModelClass cls) {
  const EdgeScorer scorer(observed, b_star, cls);
  return {candidate, scorer.log_score(candidate)};
}

std::vector<double> score_single_point(const Multigraph& observed, std::span<const Candidate> candidates,
                                       const Partition& b_star, ModelClass cls) {
  const EdgeScorer scorer(observed, b_star, cls);
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(scorer.log_score(c));
  return out;
}

double log2_sum_exp2(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp2(v - top);
  return top + std::log2(sum);
}

double log2_mean_exp2(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean of an empty sequence");
  return log2_sum_exp2(values) - std::log2(static_cast<double>(values.size()));
}

std::vector<double> score_averaged(const Multigraph& observed, std::span<const Candidate> candidates,
                                   const PosteriorSample& samples, ModelClass cls) {
  if (samples.partitions.empty()) throw ValidationError("posterior sample is empty");
  // Streaming log-sum-exp per candidate.
  std::vector<double> top(candidates.size(), -std::numeric_limits<double>::infinity());
  std::vector<double> scaled(candidates.size(), 0.0);
  for (const auto& b : samples.partitions) {
    const EdgeScorer scorer(observed, b, cls);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      const double v = scorer.log_score(candidates[k]);
      if (v > top[k]) {
        scaled[k] = scaled[k] * std::exp2(top[k] - v) + 1.0;
        top[k] = v;
      } else {
        scaled[k] += std::exp2(v - top[k]);
      }
    }
  }
  const double log_m = std::log2(static_cast<double>(samples.partitions.size()));
  std::vector<double> out(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) out[k] = top[k] + std::log2(scaled[k]) - log_m;
  return out;
}

PredictionScore score_averaged(const Multigraph& observed, const Candidate& candidate,
                               const PosteriorSample& samples, ModelClass cls) {
  const auto scores = score_averaged(observed, std::span<const Candidate>(&candidate, 1), samples, cls);
  return {candidate, scores.front()};
}

double score_weighted(const Multigraph& observed, const Candidate& candidate, std::span<const Partition> partitions,
                      std::span<const double> log2_weights, ModelClass cls) {
  if (partitions.empty()) throw ValidationError("no partitions to average over");
  if (partitions.size() != log2_weights.size()) throw ValidationError("one weight per partition is required");
  std::vector<double> terms(partitions.size());
  for (std::size_t m = 0; m < partitions.size(); ++m)
    terms[m] = log2_weights[m] + EdgeScorer(observed, partitions[m], cls).log_score(candidate);
  return log2_sum_exp2(terms) - log2_sum_exp2(log2_weights);
}

AucResult evaluate_auc(std::span<const double> positive_scores, std::span<const double> negative_scores) {
  if (positive_scores.empty() || negative_scores.empty())
    throw ValidationError("AUC needs at least one positive and one negative score");
  std::vector<double> negatives(negative_scores.begin(), negative_scores.end());
  std::sort(negatives.begin(), negatives.end());
  double wins = 0.0;
  for (double p : positive_scores) {
    const auto lo = std::lower_bound(negatives.begin(), negatives.end(), p);
    const auto hi = std::upper_bound(lo, negatives.end(), p);
    wins += static_cast<double>(lo - negatives.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  AucResult result;
  result.n_positives = positive_scores.size();
  result.n_negatives = negatives.size();
  result.auc = wins / (static_cast<double>(result.n_positives) * static_cast<double>(result.n_negatives));
  return result;
}

std::vector<Candidate> all_non_edges(const Multigraph& g) {
  std::vector<Candidate> out;
  const int n = g.node_count();
  for (int i = 0; i < n; ++i) {
    auto row = g.neighbors(i);
    auto it = row.begin();
    for (int j = i + 1; j < n; ++j) {
      while (it != row.end() && it->node < j) ++it;
      if (it != row.end() && it->node == j) continue;
      out.push_back({i, j, CandidateKind::missing_edge});
    }
  }
  return out;
}

NegativeSample sample_negatives(const Multigraph& complete, std::int64_t count, Rng& rng) {
  if (count < 1) throw ValidationError("negative sample size must be at least 1");
  const std::int64_t n = complete.node_count();
  const std::int64_t pairs = n * (n - 1) / 2;
  const std::int64_t non_edges = pairs - complete.occupied_pair_count();

  NegativeSample sample;
  if (count >= non_edges) {
    sample.candidates = all_non_edges(complete);
    sample.exhausted = count > non_edges;
    return sample;
  }
  if (2 * count >= non_edges) {
    auto pool = all_non_edges(complete);
    for (std::int64_t k = 0; k < count; ++k) {
      const auto pick = std::uniform_int_distribution<std::int64_t>(k, non_edges - 1)(rng);
      std::swap(pool[k], pool[pick]);
    }
    pool.resize(count);
    sample.candidates = std::move(pool);
    return sample;
  }
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(count) * 2);
  while (static_cast<std::int64_t>(sample.candidates.size()) < count) {
    const auto a = uniform_index<std::int64_t>(rng, n);
    const auto b = uniform_index<std::int64_t>(rng, n);
    if (a == b) continue;
    const int i = static_cast<int>(std::min(a, b));
    const int j = static_cast<int>(std::max(a, b));
    if (complete.multiplicity(i, j) != 0) continue;
    const auto key = static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(j);
    if (!chosen.insert(key).second) continue;
    sample.candidates.push_back({i, j, CandidateKind::missing_edge});
  }
  return sample;
}

}  // namespace sbmsel
