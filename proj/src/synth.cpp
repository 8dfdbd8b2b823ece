#include "sbmsel/synth.hpp"

#include <cmath>

#include "sbmsel/errors.hpp"

namespace sbmsel {

PlantedParams PlantedParams::from_mean_degree(int groups, int group_size, double assortativity,
                                              double mean_degree) {
  PlantedParams p;
  p.groups = groups;
  p.group_size = group_size;
  p.assortativity = assortativity;
  p.expected_edges = mean_degree * groups * group_size / 2.0;
  return p;
}

void PlantedParams::validate() const {
  if (groups < 1) throw ValidationError("planted partition needs at least one group");
  if (group_size < 1) throw ValidationError("group size must be positive");
  if (!(assortativity >= 0.0 && assortativity <= 1.0)) throw ValidationError("assortativity must lie in [0, 1]");
  if (!(expected_edges > 0.0)) throw ValidationError("expected edge count must be positive");
  if (groups == 1 && assortativity < 1.0)
    throw ValidationError("a single group requires c = 1 (no between-group rates exist)");
}

RateMatrix planted_rates(const PlantedParams& p) {
  p.validate();
  const int B = p.groups;
  const double n = p.group_size;
  const double scale = 2.0 * p.expected_edges / (n * n);
  RateMatrix m;
  m.groups = B;
  m.rates.assign(static_cast<std::size_t>(B) * B, 0.0);
  for (int r = 0; r < B; ++r) {
    for (int s = 0; s < B; ++s) {
      const double weight = r == s ? p.assortativity / B : (1.0 - p.assortativity) / (B * (B - 1.0));
      m.rates[static_cast<std::size_t>(r) * B + s] = scale * weight;
    }
  }
  return m;
}

Partition planted_partition(const PlantedParams& p) {
  p.validate();
  std::vector<int> labels(static_cast<std::size_t>(p.node_count()));
  for (int i = 0; i < p.node_count(); ++i) labels[i] = i / p.group_size;
  return Partition(std::move(labels));
}

std::int64_t block_pair_count(std::int64_t size_r, std::int64_t size_s, bool diagonal) {
  return diagonal ? size_r * (size_r - 1) / 2 : size_r * size_s;
}

std::int64_t microcanonical_block_edges(const RateMatrix& rates, const std::vector<std::int64_t>& sizes, int r,
                                        int s) {
  const double expected = static_cast<double>(block_pair_count(sizes[r], sizes[s], r == s)) * rates.at(r, s);
  return static_cast<std::int64_t>(std::nearbyint(expected));  // default rounding mode: ties to even
}

namespace {

std::vector<std::vector<int>> members_by_group(const Partition& b) {
  std::vector<std::vector<int>> members(b.group_count());
  for (int i = 0; i < b.node_count(); ++i) members[b[i]].push_back(i);
  return members;
}

template <class CountFn>
Multigraph place_blocks(const RateMatrix& rates, const Partition& b, Rng& rng, CountFn&& count_for) {
  if (rates.groups != b.group_count()) throw ValidationError("rate matrix dimension does not match the partition");
  const auto members = members_by_group(b);
  std::vector<std::int64_t> sizes(b.group_count());
  for (int r = 0; r < b.group_count(); ++r) sizes[r] = static_cast<std::int64_t>(members[r].size());

  MultigraphBuilder builder(b.node_count());
  for (int r = 0; r < rates.groups; ++r) {
    for (int s = r; s < rates.groups; ++s) {
      const auto pairs = block_pair_count(sizes[r], sizes[s], r == s);
      if (pairs == 0) continue;
      const std::int64_t units = count_for(r, s, pairs, sizes);
      for (std::int64_t k = 0; k < units; ++k) {
        int i = 0;
        int j = 0;
        if (r == s) {
          const auto& group = members[r];
          const auto a = uniform_index<std::size_t>(rng, group.size());
          auto c = uniform_index<std::size_t>(rng, group.size() - 1);
          if (c >= a) ++c;
          i = group[a];
          j = group[c];
        } else {
          i = members[r][uniform_index<std::size_t>(rng, members[r].size())];
          j = members[s][uniform_index<std::size_t>(rng, members[s].size())];
        }
        builder.add(i, j, 1);
      }
    }
  }
  return builder.build();
}

}  // namespace

Multigraph sample_canonical(const RateMatrix& rates, const Partition& b, Rng& rng) {
  // Independent Poisson counts per pair are equivalent to one Poisson total per
  // block spread uniformly over the block's pairs.
  return place_blocks(rates, b, rng, [&](int r, int s, std::int64_t pairs, const auto&) -> std::int64_t {
    const double mean = static_cast<double>(pairs) * rates.at(r, s);
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<std::int64_t>(mean)(rng);
  });
}

Multigraph sample_microcanonical(const RateMatrix& rates, const Partition& b, Rng& rng) {
  return place_blocks(rates, b, rng, [&](int r, int s, std::int64_t, const auto& sizes) {
    return microcanonical_block_edges(rates, sizes, r, s);
  });
}

double detectability_threshold(int groups, double mean_degree) {
  if (groups < 1) throw ValidationError("group count must be positive");
  if (!(mean_degree > 0.0)) throw ValidationError("mean degree must be positive");
  const double B = groups;
  return 1.0 / B + (B - 1.0) / (B * std::sqrt(mean_degree));
}

namespace {

void require_theory_domain(int groups, double c) {
  if (groups < 2) throw ValidationError("closed-form AUC requires at least two groups");
  if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("assortativity must lie in [0, 1]");
}

}  // namespace

double auc_theory_true_model(int groups, double c) {
  require_theory_domain(groups, c);
  const double B = groups;
  const double auc_in = (2.0 * B - 1.0) / (2.0 * B);
  const double auc_out = (B - 1.0) / (2.0 * B);
  return c * auc_in + (1.0 - c) * auc_out;
}

double auc_theory_inferred(int groups, double c) {
  require_theory_domain(groups, c);
  const double B = groups;
  return 1.0 / (2.0 * B * B) + c * (B - 1.0) / B;
}

double true_rate_log_score(const RateMatrix& rates, const Partition& b, int i, int j) {
  return std::log2(rates.at(b[i], b[j]));
}

Multigraph two_cliques_with_noise(int clique_size, double flip, Rng& rng) {
  if (clique_size < 1) throw ValidationError("clique size must be positive");
  if (!(flip >= 0.0 && flip <= 1.0)) throw ValidationError("flip probability must lie in [0, 1]");
  const int n = 2 * clique_size;
  MultigraphBuilder builder(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool same = (i < clique_size) == (j < clique_size);
      const bool flipped = flip > 0.0 && uniform01(rng) < flip;
      if (same != flipped) builder.add(i, j, 1);
    }
  }
  return builder.build();
}

Partition two_cliques_partition(int clique_size) {
  if (clique_size < 1) throw ValidationError("clique size must be positive");
  std::vector<int> labels(static_cast<std::size_t>(2 * clique_size));
  for (int i = 0; i < 2 * clique_size; ++i) labels[i] = i < clique_size ? 0 : 1;
  return Partition(std::move(labels));
}

}  // namespace sbmsel
