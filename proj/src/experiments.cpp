#include "sbmsel/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "sbmsel/errors.hpp"

namespace sbmsel {

int default_jobs() {
  if (const char* env = std::getenv("SBMSEL_JOBS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value >= 1) return static_cast<int>(std::min<long>(value, 1024));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  if (jobs < 0) throw ValidationError("job count must be non-negative");
  const auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(jobs == 0 ? default_jobs() : jobs));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    while (!failed.load()) {
      const auto k = next.fetch_add(1);
      if (k >= count) return;
      try {
        body(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw ValidationError("degrees of freedom must be positive");
  if (std::isnan(t)) throw ValidationError("t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(dof);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

TTestResult paired_t_test(std::span<const double> deltas) {
  if (deltas.size() < 2) throw ValidationError("t-test needs at least two values");
  TTestResult r;
  r.n = deltas.size();
  const double n = static_cast<double>(r.n);
  double sum = 0.0;
  for (double d : deltas) sum += d;
  r.mean = sum / n;
  double ss = 0.0;
  for (double d : deltas) ss += (d - r.mean) * (d - r.mean);
  r.sd = std::sqrt(ss / (n - 1.0));
  if (!(r.sd > 0.0)) throw DegenerateVarianceError("sample standard deviation is zero; t is undefined");
  r.t = r.mean / (r.sd / std::sqrt(n));
  r.p = student_t_two_sided_p(r.t, n - 1.0);
  return r;
}

double mean_lower_confidence_bound(std::span<const double> values, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw ValidationError("confidence must lie in (0, 1)");
  if (values.size() < 2) throw ValidationError("a confidence bound needs at least two values");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  return mean - boost::math::quantile(dist, confidence) * sd / std::sqrt(n);
}

std::vector<Candidate> removed_candidates(const RemovalSplit& split) {
  std::vector<Candidate> out;
  for (const auto& e : split.removed)
    for (std::int64_t u = 0; u < e.units; ++u) out.push_back(Candidate::make(e.source, e.target));
  return out;
}

std::int64_t negative_count(std::size_t positives, double factor) {
  if (!(factor > 0.0)) throw ValidationError("negative factor must be positive");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(factor * static_cast<double>(positives))));
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Stream tags for derive_seed within one replicate.
enum Stream : std::uint64_t { kSplit = 1, kNegatives = 2, kSearch = 3, kSampler = 4 };

struct ReplicateData {
  RemovalSplit split;
  std::vector<Candidate> positives;
  std::vector<Candidate> negatives;
};

ReplicateData prepare_replicate(const Multigraph& g, double f, double negative_factor, std::uint64_t rep_seed) {
  ReplicateData data;
  Rng split_rng = make_rng(derive_seed(rep_seed, kSplit));
  data.split = remove_edges(g, f, split_rng);
  data.positives = removed_candidates(data.split);
  if (!data.positives.empty()) {
    Rng negative_rng = make_rng(derive_seed(rep_seed, kNegatives));
    data.negatives = sample_negatives(g, negative_count(data.positives.size(), negative_factor), negative_rng).candidates;
  }
  return data;
}

std::optional<double> auc_for(const Multigraph& observed, const ReplicateData& data, const Partition& b,
                              ModelClass cls) {
  if (data.positives.empty() || data.negatives.empty()) return std::nullopt;
  const EdgeScorer scorer(observed, b, cls);
  std::vector<double> pos;
  std::vector<double> neg;
  pos.reserve(data.positives.size());
  neg.reserve(data.negatives.size());
  for (const auto& c : data.positives) pos.push_back(scorer.log_score(c));
  for (const auto& c : data.negatives) neg.push_back(scorer.log_score(c));
  return evaluate_auc(pos, neg).auc;
}

void check_common(double f, int replicates) {
  if (!(f >= 0.0 && f < 1.0)) throw ValidationError("removal fraction must lie in [0, 1)");
  if (replicates < 1) throw ValidationError("n_replicates must be at least 1");
}

}  // namespace

std::vector<RunRecord> run_removal_experiment(const Multigraph& g, const RemovalExperimentConfig& config,
                                              std::uint64_t seed) {
  check_common(config.f, config.replicates);
  if (config.classes.empty()) throw ValidationError("at least one model class is required");
  const std::size_t n_classes = config.classes.size();
  std::vector<RunRecord> records(static_cast<std::size_t>(config.replicates) * n_classes);

  // Each (replicate, class) cell redraws the replicate's split from the same
  // seed, so every class sees the identical removed set.
  parallel_for(records.size(), config.jobs, [&](std::size_t cell) {
    const auto start = std::chrono::steady_clock::now();
    const int rep = static_cast<int>(cell / n_classes);
    const ModelClass cls = config.classes[cell % n_classes];
    const auto rep_seed = derive_seed(seed, static_cast<std::uint64_t>(rep));
    const auto data = prepare_replicate(g, config.f, config.negative_factor, rep_seed);
    const auto map = find_map_partition(data.split.observed, cls, config.map, derive_seed(rep_seed, kSearch));

    RunRecord& r = records[cell];
    r.dataset = config.dataset;
    r.model_class = cls;
    r.replicate = rep;
    r.seed = rep_seed;
    r.f = config.f;
    r.sigma_bits = map.description_length;
    r.groups = map.partition.group_count();
    r.auc = auc_for(data.split.observed, data, map.partition, cls);
    r.n_positives = data.positives.size();
    r.n_negatives = data.negatives.size();
    r.removal_digest = removal_digest(data.split.removed);
    r.seconds = seconds_since(start);
  });
  return records;
}

std::string_view to_string(Quadrant q) noexcept {
  switch (q) {
    case Quadrant::consistent:
      return "consistent";
    case Quadrant::inconsistent:
      return "inconsistent";
    case Quadrant::inconclusive:
      break;
  }
  return "inconclusive";
}

namespace {

std::optional<TTestResult> try_t_test(const std::vector<double>& deltas) {
  try {
    return paired_t_test(deltas);
  } catch (const DegenerateVarianceError&) {
    return std::nullopt;
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

}  // namespace

ConsistencyReport consistency_report(std::span<const RunRecord> records) {
  // dataset -> replicate -> class -> record
  std::map<std::string, std::map<int, std::map<ModelClass, const RunRecord*>>> table;
  std::map<std::string, std::vector<ModelClass>> classes_seen;
  for (const auto& r : records) {
    auto& slot = table[r.dataset][r.replicate][r.model_class];
    if (slot) throw ValidationError("duplicate record for one dataset, replicate and class");
    slot = &r;
    auto& seen = classes_seen[r.dataset];
    if (std::find(seen.begin(), seen.end(), r.model_class) == seen.end()) seen.push_back(r.model_class);
  }

  ConsistencyReport report;
  for (auto& [dataset, seen] : classes_seen) {
    std::sort(seen.begin(), seen.end());
    for (std::size_t a = 0; a < seen.size(); ++a) {
      for (std::size_t b = a + 1; b < seen.size(); ++b) {
        std::vector<double> d_sigma;
        std::vector<double> d_auc;
        for (const auto& [rep, by_class] : table[dataset]) {
          const auto ia = by_class.find(seen[a]);
          const auto ib = by_class.find(seen[b]);
          if (ia == by_class.end() || ib == by_class.end()) continue;
          if (!ia->second->auc || !ib->second->auc) continue;
          d_sigma.push_back(ia->second->sigma_bits - ib->second->sigma_bits);
          d_auc.push_back(*ia->second->auc - *ib->second->auc);
        }
        PairComparison pc;
        pc.dataset = dataset;
        pc.first = seen[a];
        pc.second = seen[b];
        pc.n = d_sigma.size();
        if (pc.n > 0) {
          double ms = 0.0;
          for (double d : d_sigma) ms += d;
          ms /= static_cast<double>(pc.n);
          if (ms > 0.0) {
            std::swap(pc.first, pc.second);
            for (auto& d : d_sigma) d = -d;
            for (auto& d : d_auc) d = -d;
          }
          for (double d : d_sigma) pc.mean_delta_sigma += d;
          for (double d : d_auc) pc.mean_delta_auc += d;
          pc.mean_delta_sigma /= static_cast<double>(pc.n);
          pc.mean_delta_auc /= static_cast<double>(pc.n);
          pc.sigma_test = try_t_test(d_sigma);
          pc.auc_test = try_t_test(d_auc);
        }
        if (pc.n < 2 || pc.mean_delta_sigma == 0.0 || pc.mean_delta_auc == 0.0)
          pc.quadrant = Quadrant::inconclusive;
        else
          pc.quadrant = pc.mean_delta_auc > 0.0 ? Quadrant::consistent : Quadrant::inconsistent;

        switch (pc.quadrant) {
          case Quadrant::consistent:
            ++report.consistent;
            break;
          case Quadrant::inconsistent:
            ++report.inconsistent;
            break;
          case Quadrant::inconclusive:
            ++report.inconclusive;
            break;
        }
        report.pairs.push_back(std::move(pc));
      }
    }
  }
  const auto decided = report.consistent + report.inconsistent;
  if (decided > 0) report.consistent_fraction = static_cast<double>(report.consistent) / static_cast<double>(decided);
  return report;
}

std::string_view to_string(LooScorer s) noexcept {
  switch (s) {
    case LooScorer::sbm:
      return "sbm";
    case LooScorer::dcsbm:
      return "dcsbm";
    case LooScorer::true_rates:
      break;
  }
  return "true";
}

LooScorer parse_loo_scorer(std::string_view name) {
  if (name == "sbm") return LooScorer::sbm;
  if (name == "dcsbm" || name == "dc-sbm") return LooScorer::dcsbm;
  if (name == "true" || name == "true-rates" || name == "true_rates") return LooScorer::true_rates;
  throw ValidationError("unknown scorer '" + std::string(name) + "'");
}

namespace {

// Single-positive AUC against a list of negative scores, ties counted one half.
double single_positive_auc(double positive, const std::vector<double>& negatives) {
  double wins = 0.0;
  for (double q : negatives) {
    if (positive > q)
      wins += 1.0;
    else if (positive == q)
      wins += 0.5;
  }
  return wins / static_cast<double>(negatives.size());
}

}  // namespace

std::vector<LeaveOneOutPoint> leave_one_out_pp(const LeaveOneOutConfig& config, std::uint64_t seed) {
  if (config.removals < 1) throw ValidationError("n_removals must be at least 1");
  if (config.assortativities.empty() || config.scorers.empty())
    throw ValidationError("at least one assortativity and one scorer are required");
  if (config.negatives_per_removal < 0) throw ValidationError("negatives per removal must be non-negative");

  struct Level {
    PlantedParams params;
    RateMatrix rates;
    Partition planted;
    Multigraph graph;
    std::vector<Candidate> non_edges;
    // One representative non-edge per block pair, with the pair's non-edge count.
    // SBM and true-rate scores depend on a non-edge only through its block pair.
    std::vector<std::pair<Candidate, std::int64_t>> block_non_edges;
  };
  std::vector<Level> levels;
  for (std::size_t ci = 0; ci < config.assortativities.size(); ++ci) {
    Level level;
    level.params = config.params;
    level.params.assortativity = config.assortativities[ci];
    level.rates = planted_rates(level.params);
    level.planted = planted_partition(level.params);
    Rng rng = make_rng(derive_seed(seed, ci));
    level.graph = config.microcanonical ? sample_microcanonical(level.rates, level.planted, rng)
                                        : sample_canonical(level.rates, level.planted, rng);
    if (level.graph.edge_count() == 0) throw ValidationError("generated graph has no edges");
    if (config.negatives_per_removal == 0) {
      level.non_edges = all_non_edges(level.graph);
      const int B = level.planted.group_count();
      std::vector<std::int64_t> slot(static_cast<std::size_t>(B) * B, -1);
      for (const auto& c : level.non_edges) {
        const int r = std::min(level.planted[c.i], level.planted[c.j]);
        const int t = std::max(level.planted[c.i], level.planted[c.j]);
        auto& index = slot[static_cast<std::size_t>(r) * B + t];
        if (index < 0) {
          index = static_cast<std::int64_t>(level.block_non_edges.size());
          level.block_non_edges.push_back({c, 0});
        }
        ++level.block_non_edges[index].second;
      }
    }
    levels.push_back(std::move(level));
  }

  const std::size_t n_scorers = config.scorers.size();
  const auto removals = static_cast<std::size_t>(config.removals);
  // auc[(ci * removals + k) * n_scorers + s]
  std::vector<double> auc(levels.size() * removals * n_scorers, 0.0);

  parallel_for(levels.size() * removals, config.jobs, [&](std::size_t cell) {
    const std::size_t ci = cell / removals;
    const std::size_t k = cell % removals;
    const Level& level = levels[ci];
    const auto cell_seed = derive_seed(derive_seed(seed, ci), 1000 + k);
    Rng rng = make_rng(cell_seed);
    const auto split = remove_exact(level.graph, 1, rng);
    const auto positive = removed_candidates(split).front();

    std::vector<Candidate> sampled;
    if (config.negatives_per_removal > 0)
      sampled = sample_negatives(level.graph, config.negatives_per_removal, rng).candidates;
    const auto& negatives = config.negatives_per_removal > 0 ? sampled : level.non_edges;
    if (negatives.empty()) throw ValidationError("the generated graph has no non-edges");

    std::optional<Partition> inferred;
    std::vector<double> neg;
    for (std::size_t s = 0; s < n_scorers; ++s) {
      const LooScorer kind = config.scorers[s];
      // Block-level counting is exact for block-only scorers on the planted partition.
      const bool by_block = config.negatives_per_removal == 0 && kind != LooScorer::dcsbm &&
                            (kind == LooScorer::true_rates || config.clamp_planted);
      double pos = 0.0;
      std::function<double(const Candidate&)> score;
      std::optional<EdgeScorer> scorer;
      if (kind == LooScorer::true_rates) {
        score = [&](const Candidate& c) { return true_rate_log_score(level.rates, level.planted, c.i, c.j); };
      } else {
        const ModelClass cls = kind == LooScorer::sbm ? ModelClass::sbm : ModelClass::dcsbm;
        const Partition* b = &level.planted;
        if (!config.clamp_planted) {
          inferred = find_map_partition(split.observed, cls, config.map, derive_seed(cell_seed, 7 + s)).partition;
          b = &*inferred;
        }
        scorer.emplace(split.observed, *b, cls);
        score = [&](const Candidate& c) { return scorer->log_score(c); };
      }
      pos = score(positive);
      if (by_block) {
        double wins = 0.0;
        std::int64_t total = 0;
        for (const auto& [c, count] : level.block_non_edges) {
          const double q = score(c);
          if (pos > q) wins += static_cast<double>(count);
          else if (pos == q) wins += 0.5 * static_cast<double>(count);
          total += count;
        }
        auc[cell * n_scorers + s] = wins / static_cast<double>(total);
        continue;
      }
      neg.resize(negatives.size());
      for (std::size_t q = 0; q < negatives.size(); ++q) neg[q] = score(negatives[q]);
      auc[cell * n_scorers + s] = single_positive_auc(pos, neg);
    }
  });

  std::vector<LeaveOneOutPoint> points;
  for (std::size_t ci = 0; ci < levels.size(); ++ci) {
    for (std::size_t s = 0; s < n_scorers; ++s) {
      LeaveOneOutPoint p;
      p.assortativity = config.assortativities[ci];
      p.scorer = config.scorers[s];
      p.removals = config.removals;
      double sum = 0.0;
      for (std::size_t k = 0; k < removals; ++k) sum += auc[(ci * removals + k) * n_scorers + s];
      p.mean_auc = sum / static_cast<double>(removals);
      double ss = 0.0;
      for (std::size_t k = 0; k < removals; ++k) {
        const double d = auc[(ci * removals + k) * n_scorers + s] - p.mean_auc;
        ss += d * d;
      }
      p.sd_auc = removals > 1 ? std::sqrt(ss / static_cast<double>(removals - 1)) : 0.0;
      const int B = config.params.groups;
      if (B >= 2) {
        if (p.scorer == LooScorer::true_rates) p.theory = auc_theory_true_model(B, p.assortativity);
        if (p.scorer == LooScorer::sbm && config.clamp_planted) p.theory = auc_theory_inferred(B, p.assortativity);
      }
      points.push_back(p);
    }
  }
  return points;
}

std::vector<GroupsSweepPoint> groups_sweep(const Multigraph& g, const GroupsSweepConfig& config, std::uint64_t seed) {
  check_common(config.f, config.replicates);
  if (config.min_groups < 1 || config.min_groups > config.max_groups)
    throw ValidationError("group range must satisfy 1 <= min <= max");
  if (config.max_groups > g.node_count()) throw ValidationError("forced group count exceeds the number of nodes");
  if (config.map.restarts < 1) throw ValidationError("n_restarts must be at least 1");

  const int span_groups = config.max_groups - config.min_groups + 1;
  std::vector<GroupsSweepPoint> points(static_cast<std::size_t>(config.replicates) * span_groups);

  parallel_for(static_cast<std::size_t>(config.replicates), config.jobs, [&](std::size_t rep) {
    const auto rep_seed = derive_seed(seed, rep);
    const auto data = prepare_replicate(g, config.f, config.negative_factor, rep_seed);
    const auto& observed = data.split.observed;

    std::vector<MapResult> best(span_groups);
    for (auto& b : best) b.description_length = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < config.map.restarts; ++restart) {
      const auto restart_seed = derive_seed(derive_seed(rep_seed, kSearch), static_cast<std::uint64_t>(restart));
      std::vector<std::optional<Partition>> levels;
      if (config.map.agglomerative_init) {
        AgglomerativeConfig agglomerative;
        agglomerative.min_groups = config.min_groups;
        agglomerative.fresh_probability = config.map.fresh_probability;
        levels = agglomerative_levels(observed, config.model_class, agglomerative, derive_seed(restart_seed, 0));
      }
      for (int groups = config.min_groups; groups <= config.max_groups; ++groups) {
        MapSearchConfig map = config.map;
        map.restarts = 1;
        map.forced_groups = groups;
        map.clamp.reset();
        map.warm_start.reset();
        if (groups < static_cast<int>(levels.size()) && levels[groups]) map.warm_start = levels[groups];
        auto result = find_map_partition(observed, config.model_class, map,
                                         derive_seed(restart_seed, static_cast<std::uint64_t>(groups)));
        auto& slot = best[groups - config.min_groups];
        if (result.description_length < slot.description_length) slot = std::move(result);
      }
    }
    for (int k = 0; k < span_groups; ++k) {
      auto& p = points[rep * span_groups + k];
      p.replicate = static_cast<int>(rep);
      p.seed = rep_seed;
      p.groups = config.min_groups + k;
      p.sigma_bits = best[k].description_length;
      p.auc = auc_for(observed, data, best[k].partition, config.model_class);
    }
  });
  return points;
}

std::vector<AveragingRecord> averaging_comparison(const Multigraph& g, const AveragingConfig& config,
                                                  std::uint64_t seed) {
  check_common(config.f, config.replicates);
  if (config.classes.empty()) throw ValidationError("at least one model class is required");
  if (config.sampler.n_samples < 1) throw ValidationError("n_samples must be at least 1");
  const std::size_t n_classes = config.classes.size();
  std::vector<AveragingRecord> records(static_cast<std::size_t>(config.replicates) * n_classes);

  parallel_for(records.size(), config.jobs, [&](std::size_t cell) {
    const int rep = static_cast<int>(cell / n_classes);
    const ModelClass cls = config.classes[cell % n_classes];
    const auto rep_seed = derive_seed(seed, static_cast<std::uint64_t>(rep));
    const auto data = prepare_replicate(g, config.f, config.negative_factor, rep_seed);
    const auto& observed = data.split.observed;

    AveragingRecord& r = records[cell];
    r.replicate = rep;
    r.seed = rep_seed;
    r.model_class = cls;
    r.n_positives = data.positives.size();
    if (data.positives.empty() || data.negatives.empty()) return;

    const auto map = find_map_partition(observed, cls, config.map, derive_seed(rep_seed, kSearch));
    r.auc_single = auc_for(observed, data, map.partition, cls);

    SamplerConfig sampler = config.sampler;
    sampler.initial = map.partition;
    const auto sample = sample_posterior(observed, cls, sampler, derive_seed(rep_seed, kSampler));
    const auto pos = score_averaged(observed, data.positives, sample, cls);
    const auto neg = score_averaged(observed, data.negatives, sample, cls);
    r.auc_averaged = evaluate_auc(pos, neg).auc;
  });
  return records;
}

}  // namespace sbmsel
