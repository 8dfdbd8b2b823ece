#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "sbmsel/errors.hpp"
#include "sbmsel/experiments.hpp"

using namespace sbmsel;

namespace {

struct TReference {
  double t;
  int dof;
  double p;  // two-sided, from a 50-digit regularized incomplete beta evaluation
};

const TReference kTReferences[] = {
    {0, 1, 1.0},
    {0.3, 1, 0.81445284184451531937},
    {1, 1, 0.5},
    {1.7320508075688772, 1, 0.3333333333333333493},
    {2.5, 1, 0.24223788318168679745},
    {4, 1, 0.15595826075473865092},
    {7.5, 1, 0.084384926317682722048},
    {15, 1, 0.042378609269892824388},
    {0.3, 2, 0.79248566084017761065},
    {1, 2, 0.42264973081037423549},
    {1.7320508075688772, 2, 0.22540333075851664092},
    {2.5, 2, 0.12961172022151080911},
    {4, 2, 0.057190958417936634132},
    {7.5, 2, 0.017317326879372444726},
    {15, 2, 0.004415032600042051842},
    {0.3, 3, 0.78376329203991904229},
    {1, 3, 0.39100221895577064191},
    {1.7320508075688772, 3, 0.1816901138162093469},
    {2.5, 3, 0.08770664700806554725},
    {4, 3, 0.028008456010146166969},
    {7.5, 3, 0.0049109749259883033934},
    {15, 3, 0.0006431193269336653191},
    {0.3, 5, 0.77624904226327446663},
    {1, 5, 0.3632174676491226256},
    {1.7320508075688772, 5, 0.1438108087116039001},
    {2.5, 5, 0.054490099342376241116},
    {4, 5, 0.010323415480831453804},
    {7.5, 5, 0.00066625324896618039643},
    {15, 5, 0.000023844387321195621578},
    {0.3, 9, 0.7709907037415248926},
    {1, 9, 0.34343639613791351488},
    {1.7320508075688772, 9, 0.11730680301423817867},
    {2.5, 9, 0.03386182768298573921},
    {4, 9, 0.0031104283103858553863},
    {7.5, 9, 0.000036927412616587838941},
    {15, 9, 1.1281022108490582627e-7},
    {0.3, 29, 0.76631709332896775399},
    {1, 29, 0.32558198801619354111},
    {1.7320508075688772, 29, 0.093890201400020328805},
    {2.5, 29, 0.018325344338426076914},
    {4, 29, 0.00040006394565249141956},
    {7.5, 29, 2.8841891530650557303e-8},
    {15, 29, 3.3590540615815952991e-15},
    {0.3, 49, 0.76544618978402877341},
    {1, 49, 0.32222340595067559767},
    {1.7320508075688772, 49, 0.089556011033489709769},
    {2.5, 49, 0.015815788847180085779},
    {4, 49, 0.00021348048914542496327},
    {7.5, 49, 1.1191847568471915377e-9},
    {15, 49, 6.0323929224298850108e-20},
    {0.3, 120, 0.76469621117518628851},
    {1, 120, 0.31932272386442123765},
    {1.7320508075688772, 120, 0.085834078936230400371},
    {2.5, 120, 0.013769534925030423008},
    {4, 120, 0.00010994384262421653814},
    {7.5, 120, 1.2169766349206582869e-11},
    {15, 120, 2.7171486400646705277e-29},
};

RunRecord record(const std::string& dataset, ModelClass cls, int rep, double sigma, double auc) {
  RunRecord r;
  r.dataset = dataset;
  r.model_class = cls;
  r.replicate = rep;
  r.sigma_bits = sigma;
  r.auc = auc;
  return r;
}

Multigraph small_planted(std::uint64_t seed) {
  auto p = PlantedParams::from_mean_degree(3, 20, 0.8, 8.0);
  Rng rng = make_rng(seed);
  return sample_microcanonical(planted_rates(p), planted_partition(p), rng);
}

MapSearchConfig quick_map() {
  MapSearchConfig m;
  m.restarts = 1;
  m.schedule.sweeps = 20;
  return m;
}

}  // namespace

TEST_CASE("paired t-test") {
  const std::vector<double> d{1, 0, 1, 0};
  auto r = paired_t_test(d);
  CHECK(r.mean == doctest::Approx(0.5));
  CHECK(r.sd == doctest::Approx(std::sqrt(1.0 / 3)));
  CHECK(r.t == doctest::Approx(0.5 / (std::sqrt(1.0 / 3) / 2)));
  CHECK(r.t == doctest::Approx(1.732).epsilon(1e-3));
  CHECK(r.n == 4);
  CHECK(r.p == doctest::Approx(0.1816901138162093469).epsilon(1e-12));

  std::vector<double> neg{-1, 0, -1, 0};
  auto s = paired_t_test(neg);
  CHECK(s.t == -r.t);
  CHECK(s.p == r.p);

  CHECK_THROWS_AS(paired_t_test(std::vector<double>{0, 0, 0}), DegenerateVarianceError);
  CHECK_THROWS_AS(paired_t_test(std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("Student-t p-values match high-precision references") {
  for (const auto& ref : kTReferences) {
    CHECK(std::abs(student_t_two_sided_p(ref.t, ref.dof) - ref.p) < 1e-10);
    CHECK(std::abs(student_t_two_sided_p(-ref.t, ref.dof) - ref.p) < 1e-10);
  }
}

TEST_CASE("mean lower confidence bound") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  // One-sided 95% t quantile with 3 degrees of freedom.
  const double q = 2.3533634348018264;
  const double sd = std::sqrt(5.0 / 3.0);
  CHECK(mean_lower_confidence_bound(v, 0.95) == doctest::Approx(2.5 - q * sd / 2).epsilon(1e-12));
  CHECK_THROWS_AS(mean_lower_confidence_bound(std::vector<double>{1.0}, 0.95), ValidationError);
}

TEST_CASE("consistency report") {
  SUBCASE("consistent signature") {
    std::vector<RunRecord> rs;
    for (int rep = 0; rep < 5; ++rep) {
      rs.push_back(record("x", ModelClass::sbm, rep, 100 - rep, 0.9 - 0.01 * rep));
      rs.push_back(record("x", ModelClass::dcsbm, rep, 120 + rep, 0.7));
    }
    auto report = consistency_report(rs);
    REQUIRE(report.pairs.size() == 1);
    CHECK(report.pairs[0].first == ModelClass::sbm);
    CHECK(report.pairs[0].quadrant == Quadrant::consistent);
    CHECK(report.pairs[0].mean_delta_sigma < 0);
    CHECK(report.consistent == 1);
    CHECK(report.consistent_fraction == doctest::Approx(1.0));
    REQUIRE(report.pairs[0].sigma_test.has_value());
    CHECK(report.pairs[0].sigma_test->t < 0);
  }
  SUBCASE("identical records are inconclusive") {
    std::vector<RunRecord> rs;
    for (int rep = 0; rep < 4; ++rep) {
      rs.push_back(record("x", ModelClass::sbm, rep, 50, 0.8));
      rs.push_back(record("x", ModelClass::dcsbm, rep, 50, 0.8));
    }
    auto report = consistency_report(rs);
    REQUIRE(report.pairs.size() == 1);
    CHECK(report.pairs[0].quadrant == Quadrant::inconclusive);
    CHECK_FALSE(report.pairs[0].sigma_test.has_value());
    CHECK_FALSE(report.consistent_fraction.has_value());
  }
  SUBCASE("orientation does not depend on record order") {
    std::vector<RunRecord> rs;
    for (int rep = 0; rep < 6; ++rep) {
      rs.push_back(record("a", ModelClass::dcsbm, rep, 90 + rep, 0.85 + 0.01 * (rep % 2)));
      rs.push_back(record("a", ModelClass::sbm, rep, 95 + 2 * rep, 0.8));
      rs.push_back(record("b", ModelClass::sbm, rep, 10 + rep % 3, 0.6 + 0.02 * rep));
      rs.push_back(record("b", ModelClass::dcsbm, rep, 20, 0.7));
    }
    auto forward = consistency_report(rs);
    std::reverse(rs.begin(), rs.end());
    auto backward = consistency_report(rs);
    REQUIRE(forward.pairs.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(forward.pairs[k].first == backward.pairs[k].first);
      CHECK(forward.pairs[k].mean_delta_sigma == doctest::Approx(backward.pairs[k].mean_delta_sigma));
      CHECK(forward.pairs[k].quadrant == backward.pairs[k].quadrant);
    }
    CHECK(forward.pairs[0].first == ModelClass::dcsbm);
    CHECK(forward.pairs[0].quadrant == Quadrant::consistent);
    CHECK(forward.pairs[1].first == ModelClass::sbm);
    CHECK(forward.pairs[1].quadrant == Quadrant::inconsistent);
    CHECK(forward.consistent_fraction == doctest::Approx(0.5));
  }
  SUBCASE("duplicates are rejected") {
    std::vector<RunRecord> rs{record("x", ModelClass::sbm, 0, 1, 0.5), record("x", ModelClass::sbm, 0, 2, 0.5)};
    CHECK_THROWS_AS(consistency_report(rs), ValidationError);
  }
}

TEST_CASE("removal experiment") {
  auto g = small_planted(1);
  RemovalExperimentConfig config;
  config.replicates = 4;
  config.map = quick_map();
  config.jobs = 2;
  auto records = run_removal_experiment(g, config, 42);
  REQUIRE(records.size() == 8);
  for (int rep = 0; rep < 4; ++rep) {
    const auto& a = records[2 * rep];
    const auto& b = records[2 * rep + 1];
    CHECK(a.model_class == ModelClass::sbm);
    CHECK(b.model_class == ModelClass::dcsbm);
    CHECK(a.seed == b.seed);
    CHECK(a.removal_digest == b.removal_digest);
    CHECK(a.n_positives == b.n_positives);
    CHECK(a.sigma_bits > 0);
    REQUIRE(a.auc.has_value());
    CHECK(*a.auc >= 0.0);
    CHECK(*a.auc <= 1.0);
    CHECK(a.n_negatives == static_cast<std::size_t>(negative_count(a.n_positives, 10.0)));
  }

  SUBCASE("bit-reproducible regardless of worker count") {
    config.jobs = 1;
    auto again = run_removal_experiment(g, config, 42);
    for (std::size_t k = 0; k < records.size(); ++k) {
      CHECK(again[k].sigma_bits == records[k].sigma_bits);
      CHECK(again[k].auc == records[k].auc);
      CHECK(again[k].removal_digest == records[k].removal_digest);
    }
  }
  SUBCASE("f = 0 leaves the AUC undefined") {
    config.f = 0.0;
    config.replicates = 1;
    auto none = run_removal_experiment(g, config, 1);
    for (const auto& r : none) {
      CHECK_FALSE(r.auc.has_value());
      CHECK(r.n_positives == 0);
    }
  }
  SUBCASE("paired splits are identical as sets") {
    for (int rep = 0; rep < 3; ++rep) {
      const auto rep_seed = derive_seed(42, static_cast<std::uint64_t>(rep));
      Rng first = make_rng(derive_seed(rep_seed, 1));
      Rng second = make_rng(derive_seed(rep_seed, 1));
      auto s1 = remove_edges(g, 0.05, first);
      auto s2 = remove_edges(g, 0.05, second);
      CHECK(s1.removed.size() == s2.removed.size());
      for (std::size_t k = 0; k < s1.removed.size(); ++k) {
        CHECK(s1.removed[k].source == s2.removed[k].source);
        CHECK(s1.removed[k].target == s2.removed[k].target);
        CHECK(s1.removed[k].units == s2.removed[k].units);
      }
      CHECK(removal_digest(s1.removed) == records[2 * rep].removal_digest);
    }
  }
}

TEST_CASE("negative count") {
  CHECK(negative_count(0, 10) == 1);
  CHECK(negative_count(7, 10) == 70);
  CHECK(negative_count(3, 0.5) == 2);
  CHECK_THROWS_AS(negative_count(3, 0.0), ValidationError);
}

TEST_CASE("leave-one-out planted partition") {
  LeaveOneOutConfig config;
  config.params = PlantedParams::from_mean_degree(4, 30, 0.8, 10.0);
  config.assortativities = {0.25, 0.9};
  config.scorers = {LooScorer::sbm, LooScorer::true_rates, LooScorer::dcsbm};
  config.removals = 40;
  config.jobs = 1;
  auto points = leave_one_out_pp(config, 3);
  REQUIRE(points.size() == 6);
  for (const auto& p : points) {
    CHECK(p.removals == 40);
    CHECK(p.mean_auc >= 0.0);
    CHECK(p.mean_auc <= 1.0);
    if (p.scorer == LooScorer::sbm) CHECK(p.theory == doctest::Approx(auc_theory_inferred(4, p.assortativity)));
    if (p.scorer == LooScorer::true_rates)
      CHECK(p.theory == doctest::Approx(auc_theory_true_model(4, p.assortativity)));
    if (p.scorer == LooScorer::dcsbm) CHECK_FALSE(p.theory.has_value());
    // At c = 1/B every pair has the same generating rate.
    if (p.scorer == LooScorer::true_rates && p.assortativity == 0.25) CHECK(p.mean_auc == 0.5);
  }

  auto again = leave_one_out_pp(config, 3);
  for (std::size_t k = 0; k < points.size(); ++k) CHECK(again[k].mean_auc == points[k].mean_auc);

  // The block-count shortcut must agree with scoring every non-edge individually.
  config.negatives_per_removal = 0;
  config.scorers = {LooScorer::sbm};
  config.assortativities = {0.7};
  config.removals = 5;
  auto fast = leave_one_out_pp(config, 9);
  config.negatives_per_removal = 100000000;
  auto slow = leave_one_out_pp(config, 9);
  CHECK(fast[0].mean_auc == doctest::Approx(slow[0].mean_auc).epsilon(1e-12));

  CHECK(parse_loo_scorer("true") == LooScorer::true_rates);
  CHECK_THROWS_AS(parse_loo_scorer("nope"), ValidationError);
}

TEST_CASE("groups sweep") {
  auto g = small_planted(5);
  GroupsSweepConfig config;
  config.min_groups = 1;
  config.max_groups = 5;
  config.f = 0.0;
  config.replicates = 1;
  config.map = quick_map();
  auto points = groups_sweep(g, config, 7);
  REQUIRE(points.size() == 5);
  CHECK(points[0].groups == 1);
  CHECK(points[0].sigma_bits == doctest::Approx(description_length(g, Partition::single_group(g.node_count()),
                                                                   ModelClass::sbm)));
  for (const auto& p : points) CHECK_FALSE(p.auc.has_value());

  config.f = 0.1;
  config.replicates = 2;
  points = groups_sweep(g, config, 7);
  REQUIRE(points.size() == 10);
  for (const auto& p : points) CHECK(p.auc.has_value());

  config.max_groups = g.node_count() + 1;
  CHECK_THROWS_AS(groups_sweep(g, config, 7), ValidationError);
}

TEST_CASE("averaging comparison") {
  auto g = small_planted(8);
  AveragingConfig config;
  config.classes = {ModelClass::sbm, ModelClass::dcsbm};
  config.replicates = 3;
  config.map = quick_map();
  SUBCASE("one sample forced to b* reproduces the single-point AUC") {
    config.sampler.n_samples = 1;
    config.sampler.burn_in = 0;
    config.sampler.sweep_interval = 0;
    auto records = averaging_comparison(g, config, 3);
    REQUIRE(records.size() == 6);
    for (const auto& r : records) {
      REQUIRE(r.auc_single.has_value());
      CHECK(*r.auc_averaged == *r.auc_single);
    }
  }
  SUBCASE("unambiguous posterior: averaging changes little") {
    Rng rng = make_rng(1);
    auto cliques = two_cliques_with_noise(12, 0.0, rng);
    config.classes = {ModelClass::sbm};
    config.replicates = 6;
    config.f = 0.1;
    config.sampler.n_samples = 50;
    config.sampler.burn_in = 50;
    config.sampler.sweep_interval = 2;
    auto records = averaging_comparison(cliques, config, 4);
    for (const auto& r : records) {
      REQUIRE(r.auc_single.has_value());
      CHECK(std::abs(*r.auc_averaged - *r.auc_single) < 0.02);
    }
  }
}

TEST_CASE("parallel_for") {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t k) { hit[k] += 1; });
  for (int h : hit) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t k) {
                                 if (k == 7) throw ValidationError("boom");
                               }),
                  ValidationError);
  CHECK(default_jobs() >= 1);
}
