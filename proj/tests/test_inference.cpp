#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "oracles.hpp"
#include "sbmsel/errors.hpp"
#include "sbmsel/inference.hpp"
#include "sbmsel/synth.hpp"

using namespace sbmsel;

namespace {

std::vector<int> canonical_labels(const Partition& b) {
  const auto c = b.canonical();
  return {c.labels().begin(), c.labels().end()};
}

Multigraph random_multigraph(int n, int units, Rng& rng) {
  MultigraphBuilder builder(n);
  for (int k = 0; k < units; ++k) builder.add(uniform_index(rng, n), uniform_index(rng, n));
  return builder.build();
}

Multigraph two_cliques(int size) {
  MultigraphBuilder builder(2 * size);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < size; ++i)
      for (int j = i + 1; j < size; ++j) builder.add(c * size + i, c * size + j);
  return builder.build();
}

// ln of B! P(b) P(A|b)^beta from the brute-force formulas.
double ln_target(const std::vector<std::vector<std::int64_t>>& a, const std::vector<int>& b, bool dc,
                 double beta) {
  const auto s = oracle::stats(a, b);
  double like = oracle::ln_graph_likelihood(a, b, dc) + oracle::ln_edge_prior(s.groups, oracle::total_edges(a));
  if (dc) like += oracle::ln_degree_prior(s);
  return beta * like + oracle::ln_partition_prior(b) + oracle::lfact(s.groups);
}

// Exact single-node proposal probability written from the proposal description.
double proposal_oracle(const Multigraph& g, const std::vector<int>& labels, int node, int target, int groups,
                       int capacity, double eps, bool fixed) {
  const bool target_empty = std::count(labels.begin(), labels.end(), target) == 0;
  const int options = groups + ((!fixed && groups < capacity) ? 1 : 0);
  if (target_empty && options == groups) return 0.0;
  if (g.degree(node) == 0) return 1.0 / options;
  double q = eps / options;
  if (!target_empty) {
    std::int64_t into = 0;
    for (const auto& nb : g.neighbors(node))
      if (nb.node != node && labels[nb.node] == target) into += nb.multiplicity;
    q += (1.0 - eps) * static_cast<double>(into) / static_cast<double>(g.degree(node));
  }
  return q;
}

double total_variation(const std::map<std::vector<int>, double>& p, const std::map<std::vector<int>, double>& q) {
  double tv = 0.0;
  for (const auto& [k, v] : p) {
    auto it = q.find(k);
    tv += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q)
    if (!p.count(k)) tv += v;
  return tv / 2;
}

}  // namespace

TEST_CASE("chain bookkeeping stays exact under random moves") {
  Rng rng = make_rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    auto g = random_multigraph(12, 30, rng);
    for (auto cls : {ModelClass::sbm, ModelClass::dcsbm}) {
      ChainState chain(g, random_partition(12, 3, rng), cls, derive_seed(7, rep));
      for (int step = 0; step < 300; ++step) {
        const int node = uniform_index(rng, 12);
        auto labels = chain.occupied_labels();
        const int fresh = chain.fresh_label();
        if (fresh >= 0) labels.push_back(fresh);
        const int target = labels[uniform_index<std::size_t>(rng, labels.size())];
        const auto before = chain.partition();
        const double predicted = chain.move_delta(node, target);
        const double sigma_before = chain.description_length();
        chain.move(node, target);
        CHECK(chain.description_length() - sigma_before == doctest::Approx(predicted).epsilon(1e-9));
        const auto b = chain.partition();
        CHECK(chain.description_length() == doctest::Approx(description_length(g, b, cls)).epsilon(1e-10));
        CHECK(BlockStats::compute(g, b).groups == chain.group_count());
      }
      chain.refresh();
      CHECK(chain.description_length() == doctest::Approx(description_length(g, chain.partition(), cls)));
    }
  }
}

TEST_CASE("detailed balance of the acceptance ratio") {
  Rng rng = make_rng(2);
  for (int rep = 0; rep < 25; ++rep) {
    auto g = random_multigraph(9, 14, rng);
    for (auto cls : {ModelClass::sbm, ModelClass::dcsbm}) {
      const int capacity = rep % 2 == 0 ? 4 : 0;
      ChainOptions options;
      options.max_groups = capacity;
      ChainState chain(g, random_partition(9, 3, rng), cls, 5, options);
      const int cap = capacity > 0 ? capacity : 9;
      chain.set_inverse_temperature(rep % 3 == 0 ? 0.5 : 1.0);
      const double beta = chain.inverse_temperature();
      const auto dense = oracle::dense(g);
      for (int trial = 0; trial < 30; ++trial) {
        const int node = uniform_index(rng, 9);
        auto targets = chain.occupied_labels();
        if (chain.fresh_label() >= 0) targets.push_back(chain.fresh_label());
        const int target = targets[uniform_index<std::size_t>(rng, targets.size())];
        const int source = chain.label(node);
        const double forward = chain.log_acceptance_ratio(node, target);
        if (!std::isfinite(forward)) continue;

        const auto before = chain.partition();
        const std::vector<int> lb(before.labels().begin(), before.labels().end());
        std::vector<int> raw_before(9);
        for (int i = 0; i < 9; ++i) raw_before[i] = chain.label(i);
        const double q_forward = chain.proposal_probability(node, target);
        CHECK(q_forward == doctest::Approx(proposal_oracle(g, raw_before, node, target, chain.group_count(), cap, 0.1,
                                                           false)));

        chain.move(node, target);
        std::vector<int> raw_after(9);
        for (int i = 0; i < 9; ++i) raw_after[i] = chain.label(i);
        const double backward = chain.log_acceptance_ratio(node, source);
        const double q_backward = chain.proposal_probability(node, source);
        CHECK(q_backward == doctest::Approx(proposal_oracle(g, raw_after, node, source, chain.group_count(), cap, 0.1,
                                                            false)));
        CHECK(forward + backward == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));

        const auto after = chain.partition();
        const std::vector<int> la(after.labels().begin(), after.labels().end());
        const bool dc = cls == ModelClass::dcsbm;
        const double expected =
            ln_target(dense, la, dc, beta) - ln_target(dense, lb, dc, beta) + std::log(q_backward) - std::log(q_forward);
        CHECK(forward == doctest::Approx(expected).epsilon(1e-9).scale(1.0));
      }
    }
  }
}

TEST_CASE("single node chain never moves") {
  Multigraph g(1);
  ChainState chain(g, Partition({0}), ModelClass::sbm, 3);
  for (int k = 0; k < 10; ++k) CHECK(chain.sweep() == 0);
  CHECK(chain.partition() == Partition({0}));
}

TEST_CASE("clamped and fixed-count chains") {
  Rng rng = make_rng(9);
  auto g = random_multigraph(10, 25, rng);
  const auto start = random_partition(10, 3, rng);
  ChainOptions clamp;
  clamp.clamped = true;
  ChainState frozen(g, start, ModelClass::sbm, 1, clamp);
  for (int k = 0; k < 20; ++k) frozen.sweep();
  CHECK(frozen.partition() == start);

  ChainOptions fixed;
  fixed.fixed_group_count = true;
  ChainState forced(g, start, ModelClass::dcsbm, 1, fixed);
  for (int k = 0; k < 200; ++k) {
    forced.sweep();
    CHECK(forced.group_count() == 3);
  }
  CHECK(forced.fresh_label() == -1);
  const int singleton_source = [&] {
    for (int i = 0; i < 10; ++i)
      if (forced.group_size(forced.label(i)) == 1) return i;
    return -1;
  }();
  if (singleton_source >= 0) {
    const int other = forced.occupied_labels()[0] == forced.label(singleton_source) ? forced.occupied_labels()[1]
                                                                                  : forced.occupied_labels()[0];
    CHECK_THROWS_AS(forced.move(singleton_source, other), ValidationError);
  }
}

TEST_CASE("beta = 0 samples the partition prior") {
  // Target over unlabeled partitions of 5 nodes: B! P(b).
  auto g = load_edge_list("0 1\n1 2\n2 3\n3 4\n0 4\n1 3\n");
  const auto partitions = oracle::set_partitions(5);
  std::map<std::vector<int>, double> exact;
  double z = 0.0;
  for (const auto& b : partitions) {
    int groups = *std::max_element(b.begin(), b.end()) + 1;
    const double w = std::exp(oracle::ln_partition_prior(b) + oracle::lfact(groups));
    exact[b] = w;
    z += w;
  }
  for (auto& [k, v] : exact) v /= z;

  ChainState chain(g, Partition::single_group(5), ModelClass::sbm, 77);
  chain.set_inverse_temperature(0.0);
  for (int k = 0; k < 1000; ++k) chain.sweep();
  std::map<std::vector<int>, double> counts;
  const int samples = 100000;
  for (int k = 0; k < samples; ++k) {
    for (int s = 0; s < 10; ++s) chain.sweep();
    counts[canonical_labels(chain.partition())] += 1.0;
  }
  double chi2 = 0.0;
  for (const auto& [b, p] : exact) {
    const double expected = p * samples;
    const double observed = counts.count(b) ? counts[b] : 0.0;
    chi2 += (observed - expected) * (observed - expected) / expected;
  }
  for (auto& [k, v] : counts) v /= samples;
  CHECK(total_variation(counts, exact) < 0.02);
  // 51 degrees of freedom; the 0.999 quantile is about 87. Thinning leaves some
  // autocorrelation, so the statistic is compared against twice the mean.
  CHECK(chi2 < 2.0 * 51);
}

TEST_CASE("tiny graph posterior matches exact enumeration") {
  auto g = load_edge_list("0 1\n1 2\n0 2\n2 3\n3 4\n4 5\n5 3\n5 6\n6 7\n7 7\n0 1\n");
  REQUIRE(g.node_count() == 8);
  const auto dense = oracle::dense(g);
  for (auto cls : {ModelClass::sbm, ModelClass::dcsbm}) {
    std::map<std::vector<int>, double> exact;
    std::vector<double> ln;
    const auto partitions = oracle::set_partitions(8, 3);
    for (const auto& b : partitions) ln.push_back(ln_target(dense, b, cls == ModelClass::dcsbm, 1.0));
    const double m = *std::max_element(ln.begin(), ln.end());
    double z = 0.0;
    for (double v : ln) z += std::exp(v - m);
    for (std::size_t k = 0; k < partitions.size(); ++k) exact[partitions[k]] = std::exp(ln[k] - m) / z;

    SamplerConfig config;
    config.n_samples = 100000;
    config.sweep_interval = 1;
    config.burn_in = 1000;
    config.chain.max_groups = 3;
    const auto sample = sample_posterior(g, cls, config, cls == ModelClass::sbm ? 11 : 12);
    std::map<std::vector<int>, double> empirical;
    for (const auto& b : sample.partitions) empirical[canonical_labels(b)] += 1.0 / sample.size();
    CHECK(total_variation(empirical, exact) < 0.05);
  }
}

TEST_CASE("sample_posterior contract") {
  Rng rng = make_rng(4);
  auto g = random_multigraph(10, 20, rng);
  SamplerConfig config;
  config.n_samples = 1;
  config.burn_in = 0;
  config.sweep_interval = 0;
  config.initial = random_partition(10, 3, rng);
  auto one = sample_posterior(g, ModelClass::sbm, config, 5);
  REQUIRE(one.size() == 1);
  CHECK(one.partitions[0] == *config.initial);

  auto many = sample_posterior(g, ModelClass::dcsbm, 40, 2, 10, 6);
  REQUIRE(many.partitions.size() == 40);
  REQUIRE(many.log_posteriors.size() == 40);
  CHECK(many.sweep_interval == 2);
  CHECK(many.burn_in == 10);
  for (std::size_t k = 0; k < many.size(); ++k)
    CHECK(many.log_posteriors[k] ==
          doctest::Approx(-description_length(g, many.partitions[k], ModelClass::dcsbm)).epsilon(1e-9));

  auto again = sample_posterior(g, ModelClass::dcsbm, 40, 2, 10, 6);
  CHECK(again.partitions == many.partitions);
  CHECK(again.log_posteriors == many.log_posteriors);
}

TEST_CASE("two disconnected cliques are separated by posterior samples") {
  auto g = two_cliques(10);
  int good_seeds = 0;
  for (int seed = 0; seed < 20; ++seed) {
    auto sample = sample_posterior(g, ModelClass::sbm, 50, 5, 200, derive_seed(31, seed));
    int separated = 0;
    for (const auto& b : sample.partitions) {
      bool ok = true;
      for (int i = 0; i < 10 && ok; ++i)
        for (int j = 10; j < 20 && ok; ++j) ok = b[i] != b[j];
      separated += ok ? 1 : 0;
    }
    if (separated >= 45) ++good_seeds;
  }
  CHECK(good_seeds == 20);
}

TEST_CASE("MAP search") {
  SUBCASE("two 5-cliques") {
    auto g = two_cliques(5);
    auto planted = Partition({0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    MapSearchConfig config;
    config.restarts = 3;
    config.schedule.sweeps = 200;
    auto map = find_map_partition(g, ModelClass::sbm, config, 1);
    CHECK(map.description_length <= description_length(g, planted, ModelClass::sbm) + 1e-9);
    CHECK(map.description_length == doctest::Approx(description_length(g, map.partition, ModelClass::sbm)));
  }
  SUBCASE("global minimum on six nodes") {
    Rng rng = make_rng(12);
    for (int rep = 0; rep < 6; ++rep) {
      auto g = random_multigraph(6, 4 + 2 * rep, rng);
      for (auto cls : {ModelClass::sbm, ModelClass::dcsbm}) {
        double best = INFINITY;
        for (const auto& b : oracle::set_partitions(6))
          best = std::min(best, oracle::sigma_bits(oracle::dense(g), b, cls == ModelClass::dcsbm));
        MapSearchConfig config;
        config.restarts = 4;
        config.schedule.sweeps = 100;
        for (bool agglomerative : {true, false}) {
          config.agglomerative_init = agglomerative;
          auto map = find_map_partition(g, cls, config, rep);
          CHECK(map.description_length == doctest::Approx(best).epsilon(1e-10));
        }
      }
    }
  }
  SUBCASE("empty graph gives one group") {
    for (int n : {1, 4, 7}) {
      Multigraph g(n);
      auto map = find_map_partition(g, ModelClass::sbm, MapSearchConfig{}, 3);
      CHECK(map.partition.group_count() == 1);
      double best = INFINITY;
      for (const auto& b : oracle::set_partitions(n)) best = std::min(best, oracle::sigma_bits(oracle::dense(g), b, false));
      CHECK(map.description_length == doctest::Approx(best));
    }
  }
  SUBCASE("forced and clamped") {
    auto g = two_cliques(5);
    MapSearchConfig config;
    config.restarts = 2;
    config.schedule.sweeps = 50;
    for (int forced = 1; forced <= 6; ++forced) {
      config.forced_groups = forced;
      auto map = find_map_partition(g, ModelClass::sbm, config, 4);
      CHECK(map.partition.group_count() == forced);
    }
    config.forced_groups = 11;
    CHECK_THROWS_AS(find_map_partition(g, ModelClass::sbm, config, 4), ValidationError);
    config.forced_groups = 0;
    config.clamp = Partition({0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
    auto clamped = find_map_partition(g, ModelClass::sbm, config, 4);
    CHECK(clamped.partition == *config.clamp);
  }
  SUBCASE("reproducible") {
    auto p = PlantedParams::from_mean_degree(4, 25, 0.8, 8.0);
    Rng rng = make_rng(3);
    auto g = sample_microcanonical(planted_rates(p), planted_partition(p), rng);
    MapSearchConfig config;
    config.restarts = 2;
    config.schedule.sweeps = 50;
    auto a = find_map_partition(g, ModelClass::dcsbm, config, 99);
    auto b = find_map_partition(g, ModelClass::dcsbm, config, 99);
    CHECK(a.partition == b.partition);
    CHECK(a.description_length == b.description_length);
  }
}

TEST_CASE("greedy passes never increase the description length") {
  Rng rng = make_rng(6);
  for (int rep = 0; rep < 5; ++rep) {
    auto g = random_multigraph(40, 120, rng);
    for (auto cls : {ModelClass::sbm, ModelClass::dcsbm}) {
      ChainState chain(g, random_partition(40, 8, rng), cls, rep);
      double last = chain.description_length();
      for (int pass = 0; pass < 20; ++pass) {
        const int moves = pass % 2 == 0 ? chain.greedy_pass() : chain.local_greedy_pass();
        CHECK(chain.description_length() <= last + 1e-9);
        last = chain.description_length();
        if (moves == 0 && pass % 2 == 0) break;
      }
    }
  }
}

TEST_CASE("group merges") {
  Rng rng = make_rng(10);
  auto g = random_multigraph(15, 40, rng);
  for (auto cls : {ModelClass::sbm, ModelClass::dcsbm}) {
    ChainState chain(g, random_partition(15, 5, rng), cls, 1);
    while (chain.group_count() > 1) {
      const auto labels = chain.occupied_labels();
      const int r = labels.back();
      const int s = labels.front();
      const double predicted = chain.merge_delta(r, s);
      const double before = chain.description_length();
      chain.merge(r, s);
      CHECK(chain.description_length() - before == doctest::Approx(predicted).epsilon(1e-9));
      CHECK(chain.description_length() == doctest::Approx(description_length(g, chain.partition(), cls)));
    }
    CHECK_THROWS_AS(chain.merge(chain.occupied_labels()[0], chain.fresh_label()), ValidationError);
  }
}

TEST_CASE("agglomerative levels") {
  auto p = PlantedParams::from_mean_degree(5, 40, 0.9, 12.0);
  Rng rng = make_rng(21);
  const auto planted = planted_partition(p);
  auto g = sample_microcanonical(planted_rates(p), planted, rng);
  AgglomerativeConfig config;
  auto levels = agglomerative_levels(g, ModelClass::sbm, config, 8);
  REQUIRE(levels.size() > 5);
  for (std::size_t b = 0; b < levels.size(); ++b)
    if (levels[b]) CHECK(levels[b]->group_count() == static_cast<int>(b));
  REQUIRE(levels[1].has_value());
  REQUIRE(levels[5].has_value());
  CHECK(canonical_labels(*levels[5]) == canonical_labels(planted));

  config.min_groups = 4;
  auto partial = agglomerative_levels(g, ModelClass::sbm, config, 8);
  for (int b = 1; b < 4 && b < static_cast<int>(partial.size()); ++b) CHECK_FALSE(partial[b].has_value());
  config.merge_ratio = 1.0;
  CHECK_THROWS_AS(agglomerative_levels(g, ModelClass::sbm, config, 8), ValidationError);
}

TEST_CASE("random_partition") {
  Rng rng = make_rng(1);
  for (int groups = 1; groups <= 6; ++groups) CHECK(random_partition(6, groups, rng).group_count() == groups);
  CHECK_THROWS_AS(random_partition(3, 4, rng), ValidationError);
}

TEST_CASE("annealing schedule is geometric") {
  AnnealingSchedule s;
  s.sweeps = 11;
  s.beta_start = 1.0;
  s.beta_max = 10.0;
  CHECK(s.beta_at(0) == doctest::Approx(1.0));
  CHECK(s.beta_at(10) == doctest::Approx(10.0));
  CHECK(s.beta_at(5) == doctest::Approx(std::sqrt(10.0)));
}
