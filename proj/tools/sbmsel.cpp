#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "report.hpp"
#include "sbmsel/errors.hpp"
#include "sbmsel/experiments.hpp"

using namespace sbmsel;
using report::Json;

namespace {

struct SearchFlags {
  int restarts = 10;
  int sweeps = 1000;
  double beta_start = 1.0;
  double beta_max = 10.0;
  int greedy_passes = 1000;
  double fresh = 0.1;
  std::string init = "agglomerative";
  int max_groups = 0;

  void add(CLI::App* app) {
    app->add_option("--restarts", restarts, "MAP search restarts")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--sweeps", sweeps, "annealing sweeps per restart")->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app->add_option("--beta-start", beta_start, "initial inverse temperature")->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--beta-max", beta_max, "final inverse temperature")->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--greedy-passes", greedy_passes, "maximum greedy passes after annealing")
        ->check(CLI::NonNegativeNumber)->capture_default_str();
    app->add_option("--fresh-prob", fresh, "probability of a uniform (possibly new) group proposal")
        ->check(CLI::Range(0.0, 1.0))->capture_default_str();
    app->add_option("--init", init, "starting partition of each restart")
        ->check(CLI::IsMember({"agglomerative", "random"}))->capture_default_str();
    app->add_option("--max-groups", max_groups, "label capacity (0 = automatic)")->check(CLI::NonNegativeNumber);
  }

  MapSearchConfig config() const {
    MapSearchConfig c;
    c.restarts = restarts;
    c.schedule.sweeps = sweeps;
    c.schedule.beta_start = beta_start;
    c.schedule.beta_max = beta_max;
    c.max_greedy_passes = greedy_passes;
    c.fresh_probability = fresh;
    c.agglomerative_init = init == "agglomerative";
    c.max_groups = max_groups;
    return c;
  }
};

struct SamplerFlags {
  int samples = 100;
  int burn_in = 1000;
  int interval = 10;

  void add(CLI::App* app) {
    app->add_option("--samples", samples, "posterior samples")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--burn-in", burn_in, "sweeps before the first sample")->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app->add_option("--interval", interval, "sweeps between samples")->check(CLI::NonNegativeNumber)
        ->capture_default_str();
  }

  SamplerConfig config(const SearchFlags& search) const {
    SamplerConfig c;
    c.n_samples = samples;
    c.burn_in = burn_in;
    c.sweep_interval = interval;
    c.chain.fresh_probability = search.fresh;
    c.chain.max_groups = search.max_groups;
    return c;
  }
};

struct PlantedFlags {
  int groups = 10;
  int group_size = 100;
  double c = 0.8;
  std::optional<double> avg_edges;
  std::optional<double> avg_degree;
  bool canonical = false;

  void add(CLI::App* app, bool with_c = true) {
    app->add_option("--B", groups, "number of planted groups")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--nr", group_size, "nodes per group")->check(CLI::PositiveNumber)->capture_default_str();
    if (with_c) app->add_option("--c", c, "assortativity")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    auto* e = app->add_option("--avg-E", avg_edges, "expected number of edges")->check(CLI::PositiveNumber);
    app->add_option("--avg-k", avg_degree, "expected mean degree (default 20)")->check(CLI::PositiveNumber)
        ->excludes(e);
    auto* micro = app->add_flag("--micro", "microcanonical sample: block counts fixed (default)");
    app->add_flag("--canonical", canonical, "canonical (Poisson) sample")->excludes(micro);
  }

  PlantedParams params() const {
    PlantedParams p;
    if (avg_edges) {
      p.groups = groups;
      p.group_size = group_size;
      p.assortativity = c;
      p.expected_edges = *avg_edges;
    } else {
      p = PlantedParams::from_mean_degree(groups, group_size, c, avg_degree.value_or(20.0));
    }
    p.validate();
    return p;
  }

  Multigraph sample(std::uint64_t seed) const {
    const auto p = params();
    Rng rng = make_rng(seed);
    const auto rates = planted_rates(p);
    const auto b = planted_partition(p);
    return canonical ? sample_canonical(rates, b, rng) : sample_microcanonical(rates, b, rng);
  }
};

Multigraph read_graph(const std::string& path) {
  if (path == "-") return load_edge_list(std::cin);
  return read_edge_list_file(path);
}

// Writes to `path`, or to standard output when the path is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void write_json(const std::string& path, const Json& j) {
  Output out(path);
  out.stream() << j.dump(2) << '\n';
}

std::vector<ModelClass> parse_classes(const std::vector<std::string>& names) {
  std::vector<ModelClass> out;
  for (const auto& n : names) {
    const auto cls = parse_model_class(n);
    if (std::find(out.begin(), out.end(), cls) == out.end()) out.push_back(cls);
  }
  return out;
}

Partition read_partition(const std::string& path, int nodes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open partition file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::vector<int> labels;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    labels = Json::parse(text).at("partition").get<std::vector<int>>();
  } else if (first != std::string::npos && text[first] == '[') {
    labels = Json::parse(text).get<std::vector<int>>();
  } else {
    std::istringstream items(text);
    long long v = 0;
    while (items >> v) labels.push_back(static_cast<int>(v));
    if (!items.eof()) throw ParseError(0, "partition file must contain integer labels");
  }
  if (static_cast<int>(labels.size()) != nodes)
    throw ValidationError("partition has " + std::to_string(labels.size()) + " labels for " + std::to_string(nodes) +
                          " nodes");
  return Partition(std::move(labels));
}

std::vector<Candidate> read_candidates(const std::string& path, int nodes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open candidate file '" + path + "'");
  std::vector<Candidate> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long i = 0;
    long long j = 0;
    std::string kind = "missing";
    if (!(fields >> i >> j)) throw ParseError(number, "expected two node indices");
    fields >> kind;
    if (i < 0 || j < 0 || i >= nodes || j >= nodes) throw ValidationError("candidate endpoint out of range");
    CandidateKind k;
    if (kind == "missing" || kind == "edge")
      k = CandidateKind::missing_edge;
    else if (kind == "spurious" || kind == "non-edge")
      k = CandidateKind::spurious_edge;
    else
      throw ParseError(number, "unknown candidate kind '" + kind + "'");
    out.push_back(Candidate::make(static_cast<int>(i), static_cast<int>(j), k));
  }
  return out;
}

std::string_view kind_name(CandidateKind k) { return k == CandidateKind::missing_edge ? "missing" : "spurious"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian stochastic block model inference, link prediction and model-selection experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sbmsel 0.1.0");

  // infer
  auto* infer = app.add_subcommand("infer", "find the MAP partition and its description length (JSON)");
  std::string infer_input;
  std::string infer_class = "sbm";
  std::uint64_t infer_seed = 1;
  int forced = 0;
  std::string infer_output;
  SearchFlags infer_search;
  infer->add_option("--input,-i", infer_input, "edge list path ('-' for stdin)")->required();
  infer->add_option("--class", infer_class, "model class: sbm or dcsbm")->capture_default_str();
  infer->add_option("--seed", infer_seed, "master seed")->capture_default_str();
  infer->add_option("--forced-B", forced, "constrain the search to exactly this many groups")
      ->check(CLI::NonNegativeNumber);
  infer->add_option("--output,-o", infer_output, "output path (default stdout)");
  infer_search.add(infer);

  // predict
  auto* predict = app.add_subcommand("predict", "score candidate entries (CSV)");
  std::string predict_input;
  std::string predict_class = "sbm";
  std::string predict_partition;
  std::string predict_candidates;
  bool all_non_edges_flag = false;
  bool averaged = false;
  std::uint64_t predict_seed = 1;
  std::string predict_output;
  SearchFlags predict_search;
  SamplerFlags predict_sampler;
  predict->add_option("--input,-i", predict_input, "observed edge list")->required();
  predict->add_option("--class", predict_class, "model class: sbm or dcsbm")->capture_default_str();
  predict->add_option("--partition", predict_partition, "partition file (infer JSON or labels); inferred if absent");
  auto* cand_opt =
      predict->add_option("--candidates", predict_candidates, "file of 'i j [missing|spurious]' lines");
  predict->add_flag("--all-non-edges", all_non_edges_flag, "score every non-edge of the observed graph")
      ->excludes(cand_opt);
  predict->add_flag("--averaged", averaged, "average over posterior samples instead of the single partition");
  predict->add_option("--seed", predict_seed, "master seed")->capture_default_str();
  predict->add_option("--output,-o", predict_output, "output path (default stdout)");
  predict_search.add(predict);
  predict_sampler.add(predict);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a planted-partition or two-cliques graph (edge list)");
  PlantedFlags synth_pp;
  std::string synth_model = "pp";
  int clique_size = 10;
  double flip = 0.0;
  std::uint64_t synth_seed = 0;
  std::string synth_output;
  std::string partition_output;
  synth_pp.add(synth);
  synth->add_option("--model", synth_model, "pp or cliques")->check(CLI::IsMember({"pp", "cliques"}))
      ->capture_default_str();
  synth->add_option("--clique-size", clique_size, "nodes per clique")->check(CLI::PositiveNumber);
  synth->add_option("--flip", flip, "pair flip probability for the cliques model")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", synth_seed, "random seed")->required();
  synth->add_option("--output,-o", synth_output, "edge list path (default stdout)");
  synth->add_option("--partition-out", partition_output, "write the planted partition as JSON");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "run a replicate protocol (CSV records + JSON report)");
  std::string protocol = "removal";
  std::string exp_input;
  std::string dataset;
  std::vector<std::string> exp_classes{"sbm", "dcsbm"};
  double exp_f = 0.05;
  int replicates = 50;
  std::uint64_t exp_seed = 0;
  int jobs = 0;
  double negative_factor = 10.0;
  std::string csv_out;
  std::string report_out;
  bool no_timing = false;
  std::vector<double> c_grid{0.4, 0.6, 0.8};
  std::vector<std::string> scorers{"sbm", "true"};
  int removals = 200;
  bool infer_partition = false;
  long long negatives_per_removal = 0;
  PlantedFlags exp_pp;
  SearchFlags exp_search;
  SamplerFlags exp_sampler;
  experiment->add_option("--protocol", protocol, "removal, loo-pp or averaging")
      ->check(CLI::IsMember({"removal", "loo-pp", "averaging"}))->capture_default_str();
  experiment->add_option("--input,-i", exp_input, "edge list (default: a planted-partition sample)");
  experiment->add_option("--dataset", dataset, "dataset id for the records");
  experiment->add_option("--classes", exp_classes, "model classes")->delimiter(',')->capture_default_str();
  experiment->add_option("--f", exp_f, "removal fraction")->check(CLI::Range(0.0, 0.999999))->capture_default_str();
  experiment->add_option("--replicates", replicates, "replicates")->check(CLI::PositiveNumber)->capture_default_str();
  experiment->add_option("--seed", exp_seed, "master seed")->required();
  experiment->add_option("--jobs,-j", jobs, "worker threads (default SBMSEL_JOBS or all cores)")
      ->check(CLI::NonNegativeNumber);
  experiment->add_option("--negative-factor", negative_factor, "negatives per positive")
      ->check(CLI::PositiveNumber)->capture_default_str();
  experiment->add_option("--csv", csv_out, "record CSV path (default stdout)");
  experiment->add_option("--report", report_out, "JSON summary report path");
  experiment->add_flag("--no-timing", no_timing, "write 0 in the seconds column for byte-identical reruns");
  experiment->add_option("--c-grid", c_grid, "assortativities for loo-pp")->delimiter(',')->capture_default_str();
  experiment->add_option("--scorers", scorers, "loo-pp scorers: sbm, dcsbm, true")->delimiter(',')
      ->capture_default_str();
  experiment->add_option("--removals", removals, "loo-pp single-edge removals per c")->check(CLI::PositiveNumber)
      ->capture_default_str();
  experiment->add_flag("--infer-partition", infer_partition, "loo-pp: infer b* instead of clamping the planted one");
  experiment->add_option("--negatives-per-removal", negatives_per_removal, "loo-pp: 0 scores all non-edges")
      ->check(CLI::NonNegativeNumber);
  exp_pp.add(experiment, true);
  exp_search.add(experiment);
  exp_sampler.add(experiment);

  // sweep-b
  auto* sweep = app.add_subcommand("sweep-b", "description length and AUC for each forced group count (CSV)");
  std::string sweep_input;
  std::string sweep_class = "sbm";
  int min_b = 1;
  int max_b = 20;
  double sweep_f = 0.05;
  int sweep_replicates = 10;
  std::uint64_t sweep_seed = 0;
  int sweep_jobs = 0;
  double sweep_negative_factor = 10.0;
  std::string sweep_csv;
  std::string sweep_report;
  PlantedFlags sweep_pp;
  SearchFlags sweep_search;
  sweep_search.restarts = 1;
  sweep_search.sweeps = 100;
  sweep->add_option("--input,-i", sweep_input, "edge list (default: a planted-partition sample)");
  sweep->add_option("--class", sweep_class, "model class")->capture_default_str();
  sweep->add_option("--min-B", min_b, "smallest B'")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--max-B", max_b, "largest B'")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--f", sweep_f, "removal fraction")->check(CLI::Range(0.0, 0.999999))->capture_default_str();
  sweep->add_option("--replicates", sweep_replicates, "replicates")->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep->add_option("--seed", sweep_seed, "master seed")->required();
  sweep->add_option("--jobs,-j", sweep_jobs, "worker threads")->check(CLI::NonNegativeNumber);
  sweep->add_option("--negative-factor", sweep_negative_factor, "negatives per positive")->check(CLI::PositiveNumber);
  sweep->add_option("--csv", sweep_csv, "per-B' CSV path (default stdout)");
  sweep->add_option("--report", sweep_report, "JSON summary path");
  sweep_pp.add(sweep, true);
  sweep_search.add(sweep);

  // auc-theory
  auto* theory = app.add_subcommand("auc-theory", "closed-form planted-partition AUC table");
  std::vector<int> theory_b{10};
  std::vector<double> theory_c{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  bool theory_json = false;
  theory->add_option("--B", theory_b, "group counts")->delimiter(',')->check(CLI::Range(2, 1 << 20))
      ->capture_default_str();
  theory->add_option("--c", theory_c, "assortativities")->delimiter(',')->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  theory->add_flag("--json", theory_json, "emit JSON instead of CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    std::cerr << failing->help();
    return 2;
  }

  try {
    if (*infer) {
      const auto g = read_graph(infer_input);
      const auto cls = parse_model_class(infer_class);
      auto config = infer_search.config();
      config.forced_groups = forced;
      const auto map = find_map_partition(g, cls, config, infer_seed);
      write_json(infer_output, report::infer_result(g, map, cls, infer_seed));
    } else if (*predict) {
      const auto g = read_graph(predict_input);
      const auto cls = parse_model_class(predict_class);
      std::vector<Candidate> candidates;
      if (all_non_edges_flag)
        candidates = all_non_edges(g);
      else if (!predict_candidates.empty())
        candidates = read_candidates(predict_candidates, g.node_count());
      else
        throw ValidationError("give --candidates or --all-non-edges");
      const Partition b = predict_partition.empty()
                              ? find_map_partition(g, cls, predict_search.config(), predict_seed).partition
                              : read_partition(predict_partition, g.node_count());
      std::vector<double> scores;
      if (averaged) {
        auto sampler = predict_sampler.config(predict_search);
        sampler.initial = b;
        const auto sample = sample_posterior(g, cls, sampler, derive_seed(predict_seed, 4));
        scores = score_averaged(g, candidates, sample, cls);
      } else {
        scores = score_single_point(g, candidates, b, cls);
      }
      Output out(predict_output);
      out.stream() << "i,j,kind,log_score\n";
      for (std::size_t k = 0; k < candidates.size(); ++k) {
        out.stream() << candidates[k].i << ',' << candidates[k].j << ',' << kind_name(candidates[k].kind) << ','
                     << report::format_double(scores[k]) << '\n';
      }
    } else if (*synth) {
      Output out(synth_output);
      if (synth_model == "cliques") {
        Rng rng = make_rng(synth_seed);
        write_edge_list(out.stream(), two_cliques_with_noise(clique_size, flip, rng));
        if (!partition_output.empty()) {
          const auto b = two_cliques_partition(clique_size);
          write_json(partition_output, Json{{"partition", std::vector<int>(b.labels().begin(), b.labels().end())}});
        }
      } else {
        write_edge_list(out.stream(), synth_pp.sample(synth_seed));
        if (!partition_output.empty()) {
          const auto b = planted_partition(synth_pp.params());
          write_json(partition_output, Json{{"partition", std::vector<int>(b.labels().begin(), b.labels().end())}});
        }
      }
    } else if (*experiment) {
      const auto classes = parse_classes(exp_classes);
      auto graph_for = [&]() {
        return exp_input.empty() ? exp_pp.sample(derive_seed(exp_seed, 0xd47a)) : read_graph(exp_input);
      };
      const std::string id = !dataset.empty() ? dataset : (exp_input.empty() ? "planted-partition" : exp_input);
      if (protocol == "removal") {
        const auto g = graph_for();
        RemovalExperimentConfig config;
        config.dataset = id;
        config.classes = classes;
        config.f = exp_f;
        config.replicates = replicates;
        config.map = exp_search.config();
        config.negative_factor = negative_factor;
        config.jobs = jobs;
        auto records = run_removal_experiment(g, config, exp_seed);
        if (no_timing)
          for (auto& r : records) r.seconds = 0.0;
        Output out(csv_out);
        report::write_run_records(out.stream(), records);
        if (!report_out.empty())
          write_json(report_out, report::consistency(consistency_report(records), exp_f, replicates, exp_seed));
      } else if (protocol == "loo-pp") {
        if (!exp_input.empty()) throw ValidationError("loo-pp generates its own planted-partition graphs");
        LeaveOneOutConfig config;
        config.params = exp_pp.params();
        config.assortativities = c_grid;
        config.scorers.clear();
        for (const auto& s : scorers) config.scorers.push_back(parse_loo_scorer(s));
        config.removals = removals;
        config.microcanonical = !exp_pp.canonical;
        config.clamp_planted = !infer_partition;
        config.negatives_per_removal = negatives_per_removal;
        config.map = exp_search.config();
        config.jobs = jobs;
        const auto points = leave_one_out_pp(config, exp_seed);
        const auto j = report::leave_one_out(points, config, exp_seed);
        Output out(csv_out);
        out.stream() << "c,scorer,removals,mean_auc,sd_auc,theory\n";
        for (const auto& p : points) {
          out.stream() << report::format_double(p.assortativity) << ',' << to_string(p.scorer) << ',' << p.removals
                       << ',' << report::format_double(p.mean_auc) << ',' << report::format_double(p.sd_auc) << ','
                       << (p.theory ? report::format_double(*p.theory) : "") << '\n';
        }
        if (!report_out.empty()) write_json(report_out, j);
      } else {
        const auto g = graph_for();
        AveragingConfig config;
        config.classes = classes;
        config.f = exp_f;
        config.replicates = replicates;
        config.map = exp_search.config();
        config.sampler = exp_sampler.config(exp_search);
        config.negative_factor = negative_factor;
        config.jobs = jobs;
        const auto records = averaging_comparison(g, config, exp_seed);
        Output out(csv_out);
        report::write_averaging_records(out.stream(), records);
        if (!report_out.empty()) write_json(report_out, report::averaging(records, config, exp_seed));
      }
    } else if (*sweep) {
      const auto g = sweep_input.empty() ? sweep_pp.sample(derive_seed(sweep_seed, 0xd47a)) : read_graph(sweep_input);
      GroupsSweepConfig config;
      config.model_class = parse_model_class(sweep_class);
      config.min_groups = min_b;
      config.max_groups = max_b;
      config.f = sweep_f;
      config.replicates = sweep_replicates;
      config.map = sweep_search.config();
      config.negative_factor = sweep_negative_factor;
      config.jobs = sweep_jobs;
      const auto points = groups_sweep(g, config, sweep_seed);
      Output out(sweep_csv);
      report::write_sweep_points(out.stream(), points);
      if (!sweep_report.empty()) write_json(sweep_report, report::groups_sweep(points, config, sweep_seed));
    } else if (*theory) {
      Json rows = Json::array();
      for (int b : theory_b) {
        for (double c : theory_c) {
          rows.push_back({{"B", b},
                          {"c", c},
                          {"auc_true_model", auc_theory_true_model(b, c)},
                          {"auc_inferred", auc_theory_inferred(b, c)},
                          {"auc_true_model_c1", auc_theory_true_model(b, 1.0)},
                          {"chance_crossover_c", (static_cast<double>(b) * b - 1.0) / (2.0 * b * (b - 1.0))}});
        }
      }
      if (theory_json) {
        std::cout << Json{{"rows", rows}}.dump(2) << '\n';
      } else {
        std::cout << "B,c,auc_true_model,auc_inferred,auc_true_model_c1,chance_crossover_c\n";
        for (const auto& r : rows) {
          std::cout << r["B"].get<int>() << ',' << report::format_double(r["c"].get<double>()) << ','
                    << report::format_double(r["auc_true_model"].get<double>()) << ','
                    << report::format_double(r["auc_inferred"].get<double>()) << ','
                    << report::format_double(r["auc_true_model_c1"].get<double>()) << ','
                    << report::format_double(r["chance_crossover_c"].get<double>()) << '\n';
        }
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
