#include "sbmsel/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <tuple>

#include "sbmsel/errors.hpp"

namespace sbmsel {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Dense e_rs storage is capacity^2; without an explicit cap, large graphs are
// limited to this many simultaneous groups.
constexpr int kDefaultLabelCapacity = 2048;

int default_initial_groups(int n) { return std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))))); }

}  // namespace

Partition random_partition(int node_count, int groups, Rng& rng) {
  if (node_count == 0) return Partition();
  if (groups < 1 || groups > node_count) throw ValidationError("group count must lie in [1, N]");
  std::vector<int> order(node_count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> labels(node_count, 0);
  for (int k = 0; k < node_count; ++k)
    labels[order[k]] = k < groups ? k : uniform_index(rng, groups);
  return Partition(std::move(labels));
}

ChainState::ChainState(const Multigraph& g, const Partition& initial, ModelClass cls, std::uint64_t seed,
                       ChainOptions options)
    : graph_(&g),
      cls_(cls),
      options_(options),
      log_factorial_(make_log_factorial(g)),
      node_count_(g.node_count()),
      rng_(make_rng(seed)) {
  if (initial.node_count() != node_count_) throw ValidationError("initial partition does not match the graph");
  if (options_.fresh_probability < 0.0 || options_.fresh_probability > 1.0)
    throw ValidationError("fresh-group probability must lie in [0, 1]");
  int capacity = options_.max_groups > 0 ? std::min(options_.max_groups, node_count_)
                                         : std::min(node_count_, kDefaultLabelCapacity);
  if (options_.fixed_group_count) capacity = initial.group_count();
  capacity_ = std::max(capacity, 1);
  if (initial.group_count() > capacity_)
    throw ValidationError("initial partition has more groups than the label capacity");

  labels_.assign(initial.labels().begin(), initial.labels().end());
  sizes_.assign(capacity_, 0);
  group_degrees_.assign(capacity_, 0);
  edge_counts_.assign(static_cast<std::size_t>(capacity_) * capacity_, 0);
  occupied_position_.assign(capacity_, -1);
  neighbor_counts_.assign(capacity_, 0);

  for (int i = 0; i < node_count_; ++i) {
    const int r = labels_[i];
    ++sizes_[r];
    group_degrees_[r] += g.degree(i);
    for (const auto& nb : g.neighbors(i)) edges(r, labels_[nb.node]) += nb.multiplicity;
  }
  for (int r = 0; r < capacity_; ++r) {
    if (sizes_[r] > 0) {
      occupied_position_[r] = static_cast<int>(occupied_.size());
      occupied_.push_back(r);
    } else {
      free_.insert(r);
    }
  }
  node_constant_ = terms::node_constant(log_factorial_, g, cls_);
  refresh();
}

Partition ChainState::partition() const { return Partition(labels_); }

std::vector<int> ChainState::occupied_labels() const {
  std::vector<int> out(occupied_);
  std::sort(out.begin(), out.end());
  return out;
}

void ChainState::set_inverse_temperature(double beta) {
  if (!(beta >= 0.0)) throw ValidationError("inverse temperature must be non-negative");
  beta_ = beta;
}

double ChainState::description_length() const noexcept {
  return -(log_likelihood_ + log_prior_) / std::numbers::ln2;
}

void ChainState::refresh() {
  const auto& lf = log_factorial_;
  double likelihood = node_constant_;
  double prior = terms::partition_base(lf, node_count_, group_count());
  const auto labels = occupied_labels();
  for (std::size_t a = 0; a < labels.size(); ++a) {
    const int r = labels[a];
    for (std::size_t b = a; b < labels.size(); ++b) likelihood += terms::pair(lf, a == b, edges(r, labels[b]));
    likelihood += terms::group(lf, cls_, sizes_[r], group_degrees_[r]);
    prior += lf(sizes_[r]);
  }
  likelihood += terms::edge_prior(lf, group_count(), graph_->edge_count());
  log_likelihood_ = likelihood;
  log_prior_ = prior;
}

int ChainState::fresh_label() const { return free_.empty() ? -1 : *free_.begin(); }

ChainState::NodeContext ChainState::gather(int node) const {
  NodeContext ctx;
  ctx.node = node;
  ctx.degree = graph_->degree(node);
  for (const auto& nb : graph_->neighbors(node)) {
    if (nb.node == node) {
      ctx.self_loops = nb.multiplicity;
      continue;
    }
    const int t = labels_[nb.node];
    if (neighbor_counts_[t] == 0) touched_.push_back(t);
    neighbor_counts_[t] += nb.multiplicity;
  }
  return ctx;
}

void ChainState::clear_gather() const {
  for (int t : touched_) neighbor_counts_[t] = 0;
  touched_.clear();
}

ChainState::Delta ChainState::delta_for(const NodeContext& ctx, int s) const {
  const auto& lf = log_factorial_;
  const int r = labels_[ctx.node];
  Delta delta;
  double& dl = delta.likelihood;

  for (int t : touched_) {
    if (t == r || t == s) continue;
    const auto d = neighbor_counts_[t];
    const auto ert = edges(r, t);
    const auto est = edges(s, t);
    dl += terms::pair(lf, false, ert - d) - terms::pair(lf, false, ert);
    dl += terms::pair(lf, false, est + d) - terms::pair(lf, false, est);
  }
  const auto dr = neighbor_counts_[r];
  const auto ds = neighbor_counts_[s];
  const auto a = ctx.self_loops;
  const auto err = edges(r, r);
  const auto ess = edges(s, s);
  const auto ers = edges(r, s);
  dl += terms::pair(lf, true, err - 2 * dr - a) - terms::pair(lf, true, err);
  dl += terms::pair(lf, true, ess + 2 * ds + a) - terms::pair(lf, true, ess);
  dl += terms::pair(lf, false, ers - ds + dr) - terms::pair(lf, false, ers);

  const auto nr = sizes_[r];
  const auto ns = sizes_[s];
  const auto k = ctx.degree;
  dl += terms::group(lf, cls_, nr - 1, group_degrees_[r] - k) - terms::group(lf, cls_, nr, group_degrees_[r]);
  dl += terms::group(lf, cls_, ns + 1, group_degrees_[s] + k) - terms::group(lf, cls_, ns, group_degrees_[s]);

  const int groups = group_count();
  const int new_groups = groups - (nr == 1 ? 1 : 0) + (ns == 0 ? 1 : 0);
  if (new_groups != groups) {
    const auto e = graph_->edge_count();
    dl += terms::edge_prior(lf, new_groups, e) - terms::edge_prior(lf, groups, e);
    delta.prior += terms::partition_base(lf, node_count_, new_groups) - terms::partition_base(lf, node_count_, groups);
  }
  delta.prior += lf(nr - 1) - lf(nr) + lf(ns + 1) - lf(ns);
  return delta;
}

bool ChainState::move_allowed(int node, int target) const {
  if (options_.clamped) return false;
  if (target < 0 || target >= capacity_) return false;
  const int r = labels_[node];
  if (target == r) return false;
  const bool target_empty = sizes_[target] == 0;
  if (target_empty && sizes_[r] == 1) return false;  // same unlabeled partition
  if (options_.fixed_group_count && (target_empty || sizes_[r] == 1)) return false;
  return true;
}

int ChainState::random_option_count(int groups) const {
  const bool fresh = !options_.fixed_group_count && groups < capacity_;
  return groups + (fresh ? 1 : 0);
}

double ChainState::proposal_probability_from(const NodeContext& ctx, int from_groups, int target,
                                             std::int64_t neighbors_in_target) const {
  const int options = random_option_count(from_groups);
  const bool fresh_target = target < 0;
  if (fresh_target && options == from_groups) return 0.0;
  if (ctx.degree == 0) return 1.0 / options;
  const double eps = options_.fresh_probability;
  double q = eps / options;
  if (!fresh_target)
    q += (1.0 - eps) * static_cast<double>(neighbors_in_target) / static_cast<double>(ctx.degree);
  return q;
}

double ChainState::log_acceptance_from(const NodeContext& ctx, int s, const Delta& delta) const {
  const int r = labels_[ctx.node];
  const auto nr = sizes_[r];
  const auto ns = sizes_[s];
  const int groups = group_count();
  const int new_groups = groups - (nr == 1 ? 1 : 0) + (ns == 0 ? 1 : 0);

  const double forward = proposal_probability_from(ctx, groups, ns == 0 ? -1 : s, neighbor_counts_[s]);
  const double backward = proposal_probability_from(ctx, new_groups, nr == 1 ? -1 : r, neighbor_counts_[r]);
  if (forward <= 0.0 || backward <= 0.0) return kNegInf;

  // ln(B'!/B!) converts the labeled prior into a distribution over unlabeled partitions.
  double label_term = 0.0;
  if (new_groups > groups) label_term = std::log(static_cast<double>(new_groups));
  if (new_groups < groups) label_term = -std::log(static_cast<double>(groups));

  return beta_ * delta.likelihood + delta.prior + label_term + std::log(backward) - std::log(forward);
}

double ChainState::move_delta(int node, int target) const {
  if (target < 0 || target >= capacity_) throw ValidationError("target label out of range");
  if (target == labels_[node]) return 0.0;
  const auto ctx = gather(node);
  const auto delta = delta_for(ctx, target);
  clear_gather();
  return -(delta.likelihood + delta.prior) / std::numbers::ln2;
}

void ChainState::move(int node, int target) {
  if (target < 0 || target >= capacity_) throw ValidationError("target label out of range");
  if (target == labels_[node]) return;
  if (options_.fixed_group_count && (sizes_[target] == 0 || sizes_[labels_[node]] == 1))
    throw ValidationError("move would change the number of groups");
  const auto ctx = gather(node);
  const auto delta = delta_for(ctx, target);
  log_likelihood_ += delta.likelihood;
  log_prior_ += delta.prior;
  apply_move(ctx, target);
  clear_gather();
}

double ChainState::proposal_probability(int node, int target) const {
  if (!move_allowed(node, target)) return 0.0;
  const auto ctx = gather(node);
  const double q =
      proposal_probability_from(ctx, group_count(), sizes_[target] == 0 ? -1 : target, neighbor_counts_[target]);
  clear_gather();
  return q;
}

double ChainState::log_acceptance_ratio(int node, int target) const {
  if (!move_allowed(node, target)) return kNegInf;
  const auto ctx = gather(node);
  const auto delta = delta_for(ctx, target);
  const double value = log_acceptance_from(ctx, target, delta);
  clear_gather();
  return value;
}

void ChainState::apply_move(const NodeContext& ctx, int s) {
  const int node = ctx.node;
  const int r = labels_[node];
  for (int t : touched_) {
    if (t == r || t == s) continue;
    const auto d = neighbor_counts_[t];
    edges(r, t) -= d;
    edges(t, r) -= d;
    edges(s, t) += d;
    edges(t, s) += d;
  }
  const auto dr = neighbor_counts_[r];
  const auto ds = neighbor_counts_[s];
  edges(r, r) -= 2 * dr + ctx.self_loops;
  edges(s, s) += 2 * ds + ctx.self_loops;
  edges(r, s) += dr - ds;
  edges(s, r) += dr - ds;

  group_degrees_[r] -= ctx.degree;
  group_degrees_[s] += ctx.degree;
  if (sizes_[s] == 0) {
    free_.erase(s);
    occupied_position_[s] = static_cast<int>(occupied_.size());
    occupied_.push_back(s);
  }
  ++sizes_[s];
  --sizes_[r];
  if (sizes_[r] == 0) {
    const int pos = occupied_position_[r];
    const int last = occupied_.back();
    occupied_[pos] = last;
    occupied_position_[last] = pos;
    occupied_.pop_back();
    occupied_position_[r] = -1;
    free_.insert(r);
  }
  labels_[node] = s;
}

int ChainState::propose(const NodeContext& ctx) {
  const double eps = options_.fresh_probability;
  if (ctx.degree > 0 && uniform01(rng_) >= eps) {
    auto half_edge = uniform_index<std::int64_t>(rng_, ctx.degree);
    for (const auto& nb : graph_->neighbors(ctx.node)) {
      if (half_edge < nb.multiplicity) return labels_[nb.node];
      half_edge -= nb.multiplicity;
    }
    return labels_[ctx.node];
  }
  const int groups = group_count();
  const int choice = uniform_index(rng_, random_option_count(groups));
  return choice < groups ? occupied_[choice] : fresh_label();
}

int ChainState::sweep() {
  if (options_.clamped || node_count_ == 0) return 0;
  int accepted = 0;
  for (int step = 0; step < node_count_; ++step) {
    const int node = uniform_index(rng_, node_count_);
    const auto ctx = gather(node);
    const int target = propose(ctx);
    if (move_allowed(node, target)) {
      const auto delta = delta_for(ctx, target);
      const double log_ratio = log_acceptance_from(ctx, target, delta);
      if (log_ratio >= 0.0 || std::log(uniform01(rng_)) < log_ratio) {
        log_likelihood_ += delta.likelihood;
        log_prior_ += delta.prior;
        apply_move(ctx, target);
        ++accepted;
      }
    }
    clear_gather();
  }
  refresh();
  return accepted;
}

int ChainState::greedy_pass() { return greedy_pass_impl(false); }

int ChainState::local_greedy_pass() { return greedy_pass_impl(true); }

int ChainState::greedy_pass_impl(bool neighbors_only) {
  if (options_.clamped) return 0;
  constexpr double kTolerance = 1e-9;  // nats
  int moves = 0;
  std::vector<int> candidates;
  for (int node = 0; node < node_count_; ++node) {
    const int r = labels_[node];
    const auto ctx = gather(node);
    if (neighbors_only) {
      candidates = touched_;
      std::sort(candidates.begin(), candidates.end());
    } else {
      candidates = occupied_labels();
      const int fresh = fresh_label();
      if (fresh >= 0 && !options_.fixed_group_count && sizes_[r] > 1)
        candidates.insert(std::upper_bound(candidates.begin(), candidates.end(), fresh), fresh);
    }
    int best = -1;
    double best_gain = kTolerance;
    Delta best_delta;
    for (int s : candidates) {
      if (!move_allowed(node, s)) continue;
      const auto delta = delta_for(ctx, s);
      const double gain = delta.likelihood + delta.prior;
      if (gain > best_gain) {
        best_gain = gain;
        best = s;
        best_delta = delta;
      }
    }
    if (best >= 0) {
      log_likelihood_ += best_delta.likelihood;
      log_prior_ += best_delta.prior;
      apply_move(ctx, best);
      ++moves;
    }
    clear_gather();
  }
  refresh();
  return moves;
}

double ChainState::merge_delta(int r, int s) const {
  if (r < 0 || s < 0 || r >= capacity_ || s >= capacity_ || sizes_[r] == 0 || sizes_[s] == 0)
    throw ValidationError("merge requires two occupied groups");
  if (r == s) return 0.0;
  const auto& lf = log_factorial_;
  double dl = 0.0;
  for (int t : occupied_) {
    if (t == r || t == s) continue;
    const auto ert = edges(r, t);
    if (ert == 0) continue;
    const auto est = edges(s, t);
    dl += terms::pair(lf, false, est + ert) - terms::pair(lf, false, est) - terms::pair(lf, false, ert);
  }
  const auto err = edges(r, r);
  const auto ess = edges(s, s);
  const auto ers = edges(r, s);
  dl += terms::pair(lf, true, err + ess + 2 * ers) - terms::pair(lf, true, err) - terms::pair(lf, true, ess) -
        terms::pair(lf, false, ers);
  const auto nr = sizes_[r];
  const auto ns = sizes_[s];
  const auto dr = group_degrees_[r];
  const auto ds = group_degrees_[s];
  dl += terms::group(lf, cls_, nr + ns, dr + ds) - terms::group(lf, cls_, nr, dr) - terms::group(lf, cls_, ns, ds);
  const int groups = group_count();
  const auto e = graph_->edge_count();
  dl += terms::edge_prior(lf, groups - 1, e) - terms::edge_prior(lf, groups, e);
  double dp = terms::partition_base(lf, node_count_, groups - 1) - terms::partition_base(lf, node_count_, groups);
  dp += lf(nr + ns) - lf(nr) - lf(ns);
  return -(dl + dp) / std::numbers::ln2;
}

void ChainState::merge(int r, int s) {
  if (r < 0 || s < 0 || r >= capacity_ || s >= capacity_ || sizes_[r] == 0 || sizes_[s] == 0)
    throw ValidationError("merge requires two occupied groups");
  if (r == s) return;
  for (int node = 0; node < node_count_; ++node) {
    if (labels_[node] != r) continue;
    const auto ctx = gather(node);
    const auto delta = delta_for(ctx, s);
    log_likelihood_ += delta.likelihood;
    log_prior_ += delta.prior;
    apply_move(ctx, s);
    clear_gather();
  }
  refresh();
}

PosteriorSample sample_posterior(const Multigraph& g, ModelClass cls, const SamplerConfig& config,
                                 std::uint64_t seed) {
  if (config.n_samples < 1) throw ValidationError("n_samples must be at least 1");
  if (config.sweep_interval < 0 || config.burn_in < 0) throw ValidationError("sweep counts must be non-negative");
  Partition initial;
  if (config.initial) {
    initial = *config.initial;
  } else {
    Rng init_rng = make_rng(derive_seed(seed, 0x1417));
    int groups = default_initial_groups(g.node_count());
    if (config.chain.max_groups > 0) groups = std::min(groups, config.chain.max_groups);
    initial = random_partition(g.node_count(), std::min(groups, std::max(g.node_count(), 1)), init_rng);
  }
  ChainState chain(g, initial, cls, seed, config.chain);
  for (int k = 0; k < config.burn_in; ++k) chain.sweep();

  PosteriorSample sample;
  sample.sweep_interval = config.sweep_interval;
  sample.burn_in = config.burn_in;
  for (int m = 0; m < config.n_samples; ++m) {
    for (int k = 0; k < config.sweep_interval; ++k) chain.sweep();
    sample.partitions.push_back(chain.partition());
    sample.log_posteriors.push_back(chain.log_posterior());
  }
  return sample;
}

PosteriorSample sample_posterior(const Multigraph& g, ModelClass cls, int n_samples, int sweep_interval,
                                 int burn_in, std::uint64_t seed) {
  SamplerConfig config;
  config.n_samples = n_samples;
  config.sweep_interval = sweep_interval;
  config.burn_in = burn_in;
  return sample_posterior(g, cls, config, seed);
}

double AnnealingSchedule::beta_at(int sweep) const {
  if (sweeps <= 1) return beta_start;
  const double t = static_cast<double>(sweep) / static_cast<double>(sweeps - 1);
  return beta_start * std::pow(beta_max / beta_start, t);
}

std::vector<std::optional<Partition>> agglomerative_levels(const Multigraph& g, ModelClass cls,
                                                           const AgglomerativeConfig& config, std::uint64_t seed) {
  const int n = g.node_count();
  if (config.merge_ratio <= 1.0) throw ValidationError("merge ratio must exceed 1");
  if (config.merge_candidates < 1) throw ValidationError("merge_candidates must be at least 1");
  std::vector<std::optional<Partition>> levels(static_cast<std::size_t>(n) + 1);
  if (n == 0) return levels;
  const int floor_groups = std::clamp(config.min_groups, 1, n);

  Rng rng = make_rng(seed);
  Partition current;
  if (n <= kDefaultLabelCapacity) {
    std::vector<int> singletons(n);
    std::iota(singletons.begin(), singletons.end(), 0);
    current = Partition(std::move(singletons));
  } else {
    current = random_partition(n, kDefaultLabelCapacity, rng);
  }
  levels[current.group_count()] = current;

  ChainOptions options;
  options.fixed_group_count = true;
  options.fresh_probability = config.fresh_probability;

  struct MergeOption {
    double delta;
    int from;
    int into;
  };

  for (std::uint64_t level = 1; current.group_count() > floor_groups; ++level) {
    const int groups = current.group_count();
    int target = groups >= config.unit_step_below ? static_cast<int>(groups / config.merge_ratio) : groups - 1;
    target = std::clamp(target, floor_groups, groups - 1);

    ChainState chain(g, current, cls, derive_seed(seed, level), options);
    std::vector<std::vector<int>> members(groups);
    for (int i = 0; i < n; ++i) members[chain.label(i)].push_back(i);

    std::vector<MergeOption> best;
    best.reserve(groups);
    for (int r = 0; r < groups; ++r) {
      MergeOption option{std::numeric_limits<double>::infinity(), r, -1};
      for (int k = 0; k < config.merge_candidates; ++k) {
        const int i = members[r][uniform_index(rng, members[r].size())];
        int s = -1;
        if (g.degree(i) > 0 && uniform01(rng) >= config.fresh_probability) {
          auto half_edge = uniform_index<std::int64_t>(rng, g.degree(i));
          for (const auto& nb : g.neighbors(i)) {
            if (half_edge < nb.multiplicity) {
              s = chain.label(nb.node);
              break;
            }
            half_edge -= nb.multiplicity;
          }
        } else {
          s = uniform_index(rng, groups);
        }
        if (s == r || s < 0) continue;
        const double d = chain.merge_delta(r, s);
        if (d < option.delta || (d == option.delta && s < option.into)) option = {d, r, s};
      }
      if (option.into >= 0) best.push_back(option);
    }
    std::sort(best.begin(), best.end(), [](const MergeOption& a, const MergeOption& b) {
      return std::tie(a.delta, a.from, a.into) < std::tie(b.delta, b.from, b.into);
    });

    std::vector<char> gone(groups, 0);
    int remaining = groups;
    for (const auto& option : best) {
      if (remaining == target) break;
      if (gone[option.from] || gone[option.into]) continue;
      chain.merge(option.from, option.into);
      gone[option.from] = 1;
      --remaining;
    }
    if (remaining == groups) {
      // No sampled candidate was usable; merge the first pair exhaustively.
      MergeOption option{std::numeric_limits<double>::infinity(), 0, -1};
      for (int s = 1; s < groups; ++s) {
        const double d = chain.merge_delta(0, s);
        if (d < option.delta) option = {d, 0, s};
      }
      chain.merge(option.from, option.into);
    }
    for (int pass = 0; pass < config.refine_passes; ++pass)
      if (chain.local_greedy_pass() == 0) break;

    current = chain.partition();
    levels[current.group_count()] = current;
  }
  return levels;
}

namespace {

// Lowest-Sigma level with at most `max_groups` groups.
Partition best_level(const Multigraph& g, ModelClass cls, const std::vector<std::optional<Partition>>& levels,
                     int max_groups) {
  const Partition* best = nullptr;
  double best_sigma = std::numeric_limits<double>::infinity();
  for (int groups = 1; groups < static_cast<int>(levels.size()) && groups <= max_groups; ++groups) {
    const auto& level = levels[groups];
    if (!level) continue;
    const double sigma = description_length(g, *level, cls);
    if (sigma < best_sigma) {
      best_sigma = sigma;
      best = &*level;
    }
  }
  return *best;
}

// Greedy node moves, then the best Sigma-reducing group merge, until neither helps.
void polish(ChainState& chain, int max_greedy_passes, bool allow_merges) {
  while (true) {
    for (int pass = 0; pass < max_greedy_passes; ++pass)
      if (chain.greedy_pass() == 0) break;
    if (!allow_merges) return;
    const auto labels = chain.occupied_labels();
    double best_delta = -1e-9;
    int from = -1;
    int into = -1;
    for (std::size_t a = 0; a < labels.size(); ++a)
      for (std::size_t b = a + 1; b < labels.size(); ++b) {
        const double d = chain.merge_delta(labels[a], labels[b]);
        if (d < best_delta) {
          best_delta = d;
          from = labels[a];
          into = labels[b];
        }
      }
    if (from < 0) return;
    chain.merge(from, into);
  }
}

}  // namespace

MapResult find_map_partition(const Multigraph& g, ModelClass cls, const MapSearchConfig& config,
                             std::uint64_t seed) {
  if (config.clamp) {
    if (config.clamp->node_count() != g.node_count()) throw ValidationError("clamped partition does not match graph");
    return {*config.clamp, description_length(g, *config.clamp, cls), 0};
  }
  if (config.restarts < 1) throw ValidationError("n_restarts must be at least 1");
  const int n = g.node_count();
  if (config.forced_groups > n) throw ValidationError("forced group count exceeds the number of nodes");
  if (config.forced_groups < 0) throw ValidationError("forced group count must be non-negative");
  if (n == 0) return {Partition(), 0.0, 0};

  ChainOptions options;
  options.fresh_probability = config.fresh_probability;
  options.max_groups = config.max_groups;
  if (config.forced_groups > 0) {
    options.fixed_group_count = true;
    options.max_groups = config.forced_groups;
  }

  AgglomerativeConfig agglomerative;
  agglomerative.fresh_probability = config.fresh_probability;
  const int group_cap = options.max_groups > 0 ? std::min(options.max_groups, n) : std::min(n, kDefaultLabelCapacity);

  MapResult best;
  best.description_length = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < config.restarts; ++restart) {
    const auto restart_seed = derive_seed(seed, static_cast<std::uint64_t>(restart));
    Rng init_rng = make_rng(derive_seed(restart_seed, 0x1417));
    Partition initial;
    if (config.forced_groups > 0) {
      if (config.warm_start && config.warm_start->group_count() == config.forced_groups) {
        initial = *config.warm_start;
      } else if (config.agglomerative_init) {
        agglomerative.min_groups = config.forced_groups;
        auto levels = agglomerative_levels(g, cls, agglomerative, derive_seed(restart_seed, 0xa661));
        initial = levels[config.forced_groups] ? *levels[config.forced_groups]
                                               : random_partition(n, config.forced_groups, init_rng);
      } else {
        initial = random_partition(n, config.forced_groups, init_rng);
      }
    } else if (config.warm_start) {
      initial = *config.warm_start;
    } else if (config.agglomerative_init) {
      initial = best_level(g, cls, agglomerative_levels(g, cls, agglomerative, derive_seed(restart_seed, 0xa661)),
                           group_cap);
    } else {
      int groups = config.initial_groups > 0 ? config.initial_groups : default_initial_groups(n);
      groups = std::min(groups, n);
      if (options.max_groups > 0) groups = std::min(groups, options.max_groups);
      initial = random_partition(n, groups, init_rng);
    }

    const double initial_sigma = description_length(g, initial, cls);
    if (initial_sigma < best.description_length) {
      best.partition = initial;
      best.description_length = initial_sigma;
      best.restart = restart;
    }

    ChainState chain(g, initial, cls, restart_seed, options);
    for (int t = 0; t < config.schedule.sweeps; ++t) {
      chain.set_inverse_temperature(config.schedule.beta_at(t));
      chain.sweep();
    }
    chain.set_inverse_temperature(1.0);
    polish(chain, config.max_greedy_passes, config.forced_groups == 0);

    auto partition = chain.partition();
    const double sigma = description_length(g, partition, cls);
    if (sigma < best.description_length) {
      best.partition = std::move(partition);
      best.description_length = sigma;
      best.restart = restart;
    }
  }
  return best;
}

}  // namespace sbmsel
