#include "report.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

namespace sbmsel::report {

std::string format_double(double x) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, x);
  return std::string(buffer, result.ptr);
}

namespace {

Json optional_number(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

std::string csv_optional(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

Json summary_stats(const std::vector<double>& values) {
  Json j;
  j["n"] = values.size();
  if (values.empty()) {
    j["mean"] = nullptr;
    j["sd"] = nullptr;
    return j;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  j["mean"] = mean;
  j["sd"] = values.size() > 1 ? Json(std::sqrt(ss / static_cast<double>(values.size() - 1))) : Json(nullptr);
  return j;
}

}  // namespace

Json infer_result(const Multigraph& g, const MapResult& map, ModelClass cls, std::uint64_t seed) {
  const auto terms = description_length_terms(g, map.partition, cls);
  Json j;
  j["model_class"] = std::string(to_string(cls));
  j["nodes"] = g.node_count();
  j["edges"] = g.edge_count();
  j["groups"] = map.partition.group_count();
  j["description_length_bits"] = map.description_length;
  j["terms_bits"] = {{"graph_likelihood", terms.graph_likelihood},
                     {"edge_prior", terms.edge_prior},
                     {"degree_prior", terms.degree_prior + 0.0},
                     {"partition_prior", terms.partition_prior}};
  j["seed"] = seed;
  j["restart"] = map.restart;
  j["partition"] = std::vector<int>(map.partition.labels().begin(), map.partition.labels().end());
  return j;
}

Json t_test(const std::optional<TTestResult>& t) {
  if (!t) return nullptr;
  return {{"mean", t->mean}, {"sd", t->sd}, {"n", t->n}, {"t", t->t}, {"p", t->p}};
}

Json consistency(const ConsistencyReport& report, double f, int replicates, std::uint64_t seed) {
  Json j;
  j["protocol"] = "removal";
  j["f"] = f;
  j["replicates"] = replicates;
  j["seed"] = seed;
  Json pairs = Json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"dataset", p.dataset},
                     {"first", std::string(to_string(p.first))},
                     {"second", std::string(to_string(p.second))},
                     {"n", p.n},
                     {"mean_delta_sigma_bits", p.mean_delta_sigma},
                     {"mean_delta_auc", p.mean_delta_auc},
                     {"t_delta_sigma", t_test(p.sigma_test)},
                     {"t_delta_auc", t_test(p.auc_test)},
                     {"quadrant", std::string(to_string(p.quadrant))}});
  }
  j["pairs"] = std::move(pairs);
  j["consistent"] = report.consistent;
  j["inconsistent"] = report.inconsistent;
  j["inconclusive"] = report.inconclusive;
  j["consistent_fraction"] = optional_number(report.consistent_fraction);
  return j;
}

Json leave_one_out(std::span<const LeaveOneOutPoint> points, const LeaveOneOutConfig& config, std::uint64_t seed) {
  Json j;
  j["protocol"] = "loo-pp";
  j["groups"] = config.params.groups;
  j["group_size"] = config.params.group_size;
  j["mean_degree"] = config.params.mean_degree();
  j["microcanonical"] = config.microcanonical;
  j["clamp_planted"] = config.clamp_planted;
  j["removals"] = config.removals;
  j["seed"] = seed;
  Json curves = Json::array();
  for (const auto& p : points) {
    curves.push_back({{"c", p.assortativity},
                      {"scorer", std::string(to_string(p.scorer))},
                      {"removals", p.removals},
                      {"mean_auc", p.mean_auc},
                      {"sd_auc", p.sd_auc},
                      {"theory", optional_number(p.theory)}});
  }
  j["points"] = std::move(curves);
  return j;
}

Json groups_sweep(std::span<const GroupsSweepPoint> points, const GroupsSweepConfig& config, std::uint64_t seed) {
  Json j;
  j["protocol"] = "sweep-b";
  j["model_class"] = std::string(to_string(config.model_class));
  j["f"] = config.f;
  j["replicates"] = config.replicates;
  j["seed"] = seed;

  std::map<int, std::vector<double>> sigma_by_b;
  std::map<int, std::vector<double>> auc_by_b;
  std::map<int, std::pair<int, double>> min_sigma;  // replicate -> (B', Sigma)
  std::map<int, std::pair<int, double>> max_auc;
  for (const auto& p : points) {
    sigma_by_b[p.groups].push_back(p.sigma_bits);
    if (p.auc) auc_by_b[p.groups].push_back(*p.auc);
    auto s = min_sigma.find(p.replicate);
    if (s == min_sigma.end() || p.sigma_bits < s->second.second) min_sigma[p.replicate] = {p.groups, p.sigma_bits};
    if (p.auc) {
      auto a = max_auc.find(p.replicate);
      if (a == max_auc.end() || *p.auc > a->second.second) max_auc[p.replicate] = {p.groups, *p.auc};
    }
  }
  Json curve = Json::array();
  for (const auto& [b, sigmas] : sigma_by_b) {
    curve.push_back({{"groups", b}, {"sigma_bits", summary_stats(sigmas)}, {"auc", summary_stats(auc_by_b[b])}});
  }
  j["curve"] = std::move(curve);
  Json reps = Json::array();
  for (const auto& [rep, best] : min_sigma) {
    const auto a = max_auc.find(rep);
    reps.push_back({{"replicate", rep},
                    {"argmin_sigma", best.first},
                    {"argmax_auc", a == max_auc.end() ? Json(nullptr) : Json(a->second.first)}});
  }
  j["replicate_optima"] = std::move(reps);
  return j;
}

Json averaging(std::span<const AveragingRecord> records, const AveragingConfig& config, std::uint64_t seed) {
  Json j;
  j["protocol"] = "averaging";
  j["f"] = config.f;
  j["replicates"] = config.replicates;
  j["n_samples"] = config.sampler.n_samples;
  j["seed"] = seed;
  Json classes = Json::array();
  for (const auto cls : config.classes) {
    std::vector<double> single;
    std::vector<double> averaged;
    std::vector<double> diff;
    for (const auto& r : records) {
      if (r.model_class != cls || !r.auc_single || !r.auc_averaged) continue;
      single.push_back(*r.auc_single);
      averaged.push_back(*r.auc_averaged);
      diff.push_back(*r.auc_averaged - *r.auc_single);
    }
    std::optional<TTestResult> test;
    Json lower = nullptr;
    if (diff.size() >= 2) {
      try {
        test = paired_t_test(diff);
        lower = mean_lower_confidence_bound(diff, 0.95);
      } catch (const std::exception&) {
      }
    }
    classes.push_back({{"model_class", std::string(to_string(cls))},
                       {"auc_single", summary_stats(single)},
                       {"auc_averaged", summary_stats(averaged)},
                       {"t_difference", t_test(test)},
                       {"difference_lower_95", lower}});
  }
  j["classes"] = std::move(classes);
  return j;
}

void write_run_records(std::ostream& out, std::span<const RunRecord> records) {
  out << "dataset,class,seed,f,sigma_bits,auc,seconds\n";
  for (const auto& r : records) {
    out << r.dataset << ',' << to_string(r.model_class) << ',' << r.seed << ',' << format_double(r.f) << ','
        << format_double(r.sigma_bits) << ',' << csv_optional(r.auc) << ',' << format_double(r.seconds) << '\n';
  }
}

void write_sweep_points(std::ostream& out, std::span<const GroupsSweepPoint> points) {
  out << "replicate,seed,groups,sigma_bits,auc\n";
  for (const auto& p : points) {
    out << p.replicate << ',' << p.seed << ',' << p.groups << ',' << format_double(p.sigma_bits) << ','
        << csv_optional(p.auc) << '\n';
  }
}

void write_averaging_records(std::ostream& out, std::span<const AveragingRecord> records) {
  out << "replicate,seed,class,n_positives,auc_single,auc_averaged\n";
  for (const auto& r : records) {
    out << r.replicate << ',' << r.seed << ',' << to_string(r.model_class) << ',' << r.n_positives << ','
        << csv_optional(r.auc_single) << ',' << csv_optional(r.auc_averaged) << '\n';
  }
}

}  // namespace sbmsel::report
