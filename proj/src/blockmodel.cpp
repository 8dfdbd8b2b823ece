#include "sbmsel/blockmodel.hpp"

#include <algorithm>
#include <numbers>
#include <unordered_map>

#include "sbmsel/errors.hpp"

namespace sbmsel {

namespace {

constexpr double kBitsPerNat = 1.0 / std::numbers::ln2;

void require_matching(const Multigraph& g, const Partition& b) {
  if (b.node_count() != g.node_count())
    throw ValidationError("partition covers " + std::to_string(b.node_count()) + " nodes, graph has " +
                          std::to_string(g.node_count()));
}

}  // namespace

std::string_view to_string(ModelClass cls) noexcept { return cls == ModelClass::sbm ? "sbm" : "dcsbm"; }

ModelClass parse_model_class(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "sbm") return ModelClass::sbm;
  if (lower == "dcsbm" || lower == "dc-sbm" || lower == "dc_sbm") return ModelClass::dcsbm;
  throw ValidationError("unknown model class '" + std::string(name) + "'");
}

Partition::Partition(std::vector<int> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) return;
  if (*std::min_element(labels_.begin(), labels_.end()) < 0)
    throw ValidationError("group labels must be non-negative");
  std::vector<int> occupied(labels_);
  std::sort(occupied.begin(), occupied.end());
  occupied.erase(std::unique(occupied.begin(), occupied.end()), occupied.end());
  for (auto& label : labels_)
    label = static_cast<int>(std::lower_bound(occupied.begin(), occupied.end(), label) - occupied.begin());
  groups_ = static_cast<int>(occupied.size());
}

Partition Partition::single_group(int node_count) { return Partition(std::vector<int>(node_count, 0)); }

std::vector<std::int64_t> Partition::group_sizes() const {
  std::vector<std::int64_t> sizes(groups_, 0);
  for (int label : labels_) ++sizes[label];
  return sizes;
}

Partition Partition::canonical() const {
  std::vector<int> remap(groups_, -1);
  std::vector<int> out(labels_.size());
  int next = 0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    int& slot = remap[labels_[i]];
    if (slot < 0) slot = next++;
    out[i] = slot;
  }
  return Partition(std::move(out));
}

LogFactorial::LogFactorial(std::int64_t table_size) : table_(std::max<std::int64_t>(table_size, 2)) {
  table_[0] = 0.0;
  for (std::size_t n = 1; n < table_.size(); ++n) table_[n] = table_[n - 1] + std::log(static_cast<double>(n));
}

LogFactorial make_log_factorial(const Multigraph& g, std::int64_t extra) {
  return LogFactorial(2 * g.edge_count() + g.node_count() + extra);
}

BlockStats BlockStats::compute(const Multigraph& g, const Partition& b) {
  require_matching(g, b);
  BlockStats stats;
  const int groups = b.group_count();
  stats.groups = groups;
  stats.sizes = b.group_sizes();
  stats.edge_counts.assign(static_cast<std::size_t>(groups) * groups, 0);
  stats.group_degrees.assign(groups, 0);
  for (int i = 0; i < g.node_count(); ++i) {
    const int r = b[i];
    for (const auto& nb : g.neighbors(i)) {
      const int s = b[nb.node];
      stats.edge_counts[static_cast<std::size_t>(r) * groups + s] += nb.multiplicity;
    }
    stats.group_degrees[r] += g.degree(i);
  }
  return stats;
}

namespace terms {

double node_constant(const LogFactorial& lf, const Multigraph& g, ModelClass cls) {
  double value = 0.0;
  for (int i = 0; i < g.node_count(); ++i) {
    for (const auto& nb : g.neighbors(i)) {
      if (nb.node < i) continue;
      value -= nb.node == i ? lf.log_double_factorial_even(nb.multiplicity) : lf(nb.multiplicity);
    }
    if (cls == ModelClass::dcsbm) value += lf(g.degree(i));
  }
  return value;
}

}  // namespace terms

namespace {

struct NatTerms {
  double graph = 0.0;
  double edge_prior = 0.0;
  double degree_prior = 0.0;
  double partition_prior = 0.0;
};

NatTerms compute_nat_terms(const Multigraph& g, const Partition& b, ModelClass cls) {
  require_matching(g, b);
  const auto lf = make_log_factorial(g);
  const auto stats = BlockStats::compute(g, b);
  NatTerms t;
  t.graph = terms::node_constant(lf, g, cls);
  for (int r = 0; r < stats.groups; ++r) {
    for (int s = r; s < stats.groups; ++s) t.graph += terms::pair(lf, r == s, stats.at(r, s));
    if (cls == ModelClass::sbm) {
      t.graph += terms::group(lf, cls, stats.sizes[r], stats.group_degrees[r]);
    } else {
      t.graph -= lf(stats.group_degrees[r]);
      t.degree_prior -= lf.log_multiset(stats.sizes[r], stats.group_degrees[r]);
    }
  }
  t.edge_prior = terms::edge_prior(lf, stats.groups, g.edge_count());
  t.partition_prior = terms::partition_base(lf, g.node_count(), stats.groups);
  for (auto n : stats.sizes) t.partition_prior += lf(n);
  return t;
}

}  // namespace

double log_graph_likelihood(const Multigraph& g, const Partition& b, ModelClass cls) {
  return compute_nat_terms(g, b, cls).graph * kBitsPerNat;
}

double log_edge_count_prior(int groups, std::int64_t edge_count) {
  const LogFactorial lf(static_cast<std::int64_t>(groups) * (groups + 1) / 2 + edge_count + 2);
  return terms::edge_prior(lf, groups, edge_count) * kBitsPerNat;
}

double log_degree_prior(const BlockStats& stats) {
  std::int64_t top = 2;
  for (int r = 0; r < stats.groups; ++r) top = std::max(top, stats.sizes[r] + stats.group_degrees[r] + 1);
  const LogFactorial lf(top);
  double value = 0.0;
  for (int r = 0; r < stats.groups; ++r) value -= lf.log_multiset(stats.sizes[r], stats.group_degrees[r]);
  return value * kBitsPerNat;
}

double log_likelihood(const Multigraph& g, const Partition& b, ModelClass cls) {
  const auto t = compute_nat_terms(g, b, cls);
  return (t.graph + t.edge_prior + t.degree_prior) * kBitsPerNat;
}

double log_prior_partition(const Partition& b, int node_count) {
  if (b.node_count() != node_count) throw ValidationError("partition does not cover the requested node count");
  const LogFactorial lf(node_count + 2);
  double value = terms::partition_base(lf, node_count, b.group_count());
  for (auto n : b.group_sizes()) value += lf(n);
  return value * kBitsPerNat;
}

double log_prior_partition(const Partition& b) { return log_prior_partition(b, b.node_count()); }

DescriptionLengthTerms description_length_terms(const Multigraph& g, const Partition& b, ModelClass cls) {
  const auto t = compute_nat_terms(g, b, cls);
  DescriptionLengthTerms out;
  out.graph_likelihood = -t.graph * kBitsPerNat;
  out.edge_prior = -t.edge_prior * kBitsPerNat;
  out.degree_prior = -t.degree_prior * kBitsPerNat;
  out.partition_prior = -t.partition_prior * kBitsPerNat;
  return out;
}

double description_length(const Multigraph& g, const Partition& b, ModelClass cls) {
  const auto t = compute_nat_terms(g, b, cls);
  return -(t.graph + t.edge_prior + t.degree_prior + t.partition_prior) * kBitsPerNat;
}

double posterior_log_odds(const Multigraph& g, const Partition& b1, ModelClass c1, const Partition& b2,
                          ModelClass c2) {
  return description_length(g, b2, c2) - description_length(g, b1, c1);
}

}  // namespace sbmsel
