#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <tuple>
#include <vector>

#include "sbmsel/errors.hpp"
#include "sbmsel/experiments.hpp"

namespace py = pybind11;
using namespace sbmsel;

namespace {

using EdgeTuple = std::tuple<int, int, std::int64_t>;

Partition to_partition(const std::vector<int>& labels) { return Partition(labels); }

std::vector<int> to_labels(const Partition& b) { return {b.labels().begin(), b.labels().end()}; }

std::vector<Candidate> to_candidates(const std::vector<std::tuple<int, int>>& pairs, bool spurious) {
  std::vector<Candidate> out;
  out.reserve(pairs.size());
  const auto kind = spurious ? CandidateKind::spurious_edge : CandidateKind::missing_edge;
  for (const auto& [i, j] : pairs) out.push_back(Candidate::make(i, j, kind));
  return out;
}

MapSearchConfig search_config(int restarts, int sweeps, int forced_groups, int max_groups) {
  MapSearchConfig config;
  config.restarts = restarts;
  config.schedule.sweeps = sweeps;
  config.forced_groups = forced_groups;
  config.max_groups = max_groups;
  return config;
}

py::dict record_dict(const RunRecord& r) {
  py::dict d;
  d["dataset"] = r.dataset;
  d["model_class"] = std::string(to_string(r.model_class));
  d["replicate"] = r.replicate;
  d["seed"] = r.seed;
  d["f"] = r.f;
  d["sigma_bits"] = r.sigma_bits;
  d["auc"] = r.auc ? py::cast(*r.auc) : py::none();
  d["groups"] = r.groups;
  d["n_positives"] = r.n_positives;
  d["n_negatives"] = r.n_negatives;
  d["removal_digest"] = r.removal_digest;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian stochastic block models, description length and link prediction";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DegenerateVarianceError>(m, "DegenerateVarianceError", PyExc_ArithmeticError);

  py::class_<Multigraph>(m, "Graph")
      .def(py::init([](int node_count, const std::vector<EdgeTuple>& edges) {
             MultigraphBuilder builder(node_count);
             for (const auto& [i, j, units] : edges) builder.add(i, j, units);
             builder.reserve_nodes(node_count);
             return builder.build();
           }),
           py::arg("node_count"), py::arg("edges") = std::vector<EdgeTuple>{})
      .def_static("from_edge_list", [](const std::string& text) { return load_edge_list(std::string_view(text)); },
                  py::arg("text"))
      .def_static("read", &read_edge_list_file, py::arg("path"))
      .def_property_readonly("node_count", &Multigraph::node_count)
      .def_property_readonly("edge_count", &Multigraph::edge_count)
      .def("degrees", [](const Multigraph& g) { return std::vector<std::int64_t>(g.degrees().begin(), g.degrees().end()); })
      .def("multiplicity", &Multigraph::multiplicity, py::arg("i"), py::arg("j"))
      .def("edges",
           [](const Multigraph& g) {
             std::vector<EdgeTuple> out;
             for (const auto& e : g.edges()) out.emplace_back(e.source, e.target, e.units);
             return out;
           })
      .def("to_edge_list", &to_edge_list_string)
      .def("__eq__", [](const Multigraph& a, const Multigraph& b) { return a == b; })
      .def("__repr__", [](const Multigraph& g) {
        return "Graph(node_count=" + std::to_string(g.node_count()) + ", edge_count=" + std::to_string(g.edge_count()) +
               ")";
      });

  m.def(
      "description_length",
      [](const Multigraph& g, const std::vector<int>& labels, const std::string& model) {
        return description_length(g, to_partition(labels), parse_model_class(model));
      },
      py::arg("graph"), py::arg("labels"), py::arg("model") = "sbm");

  m.def(
      "description_length_terms",
      [](const Multigraph& g, const std::vector<int>& labels, const std::string& model) {
        const auto t = description_length_terms(g, to_partition(labels), parse_model_class(model));
        py::dict d;
        d["graph_likelihood"] = t.graph_likelihood;
        d["edge_prior"] = t.edge_prior;
        d["degree_prior"] = t.degree_prior;
        d["partition_prior"] = t.partition_prior;
        d["total"] = t.total();
        return d;
      },
      py::arg("graph"), py::arg("labels"), py::arg("model") = "sbm");

  m.def(
      "infer",
      [](const Multigraph& g, const std::string& model, std::uint64_t seed, int restarts, int sweeps, int forced_groups,
         int max_groups) {
        MapResult r;
        {
          py::gil_scoped_release release;
          r = find_map_partition(g, parse_model_class(model), search_config(restarts, sweeps, forced_groups, max_groups),
                                 seed);
        }
        py::dict d;
        d["labels"] = to_labels(r.partition);
        d["groups"] = r.partition.group_count();
        d["description_length"] = r.description_length;
        return d;
      },
      py::arg("graph"), py::arg("model") = "sbm", py::arg("seed") = 1, py::arg("restarts") = 10,
      py::arg("sweeps") = 1000, py::arg("forced_groups") = 0, py::arg("max_groups") = 0);

  m.def(
      "sample_posterior",
      [](const Multigraph& g, const std::string& model, int n_samples, int sweep_interval, int burn_in,
         std::uint64_t seed, std::optional<std::vector<int>> initial, int max_groups) {
        SamplerConfig config;
        config.n_samples = n_samples;
        config.sweep_interval = sweep_interval;
        config.burn_in = burn_in;
        config.chain.max_groups = max_groups;
        if (initial) config.initial = to_partition(*initial);
        PosteriorSample s;
        {
          py::gil_scoped_release release;
          s = sample_posterior(g, parse_model_class(model), config, seed);
        }
        std::vector<std::vector<int>> partitions;
        for (const auto& b : s.partitions) partitions.push_back(to_labels(b));
        py::dict d;
        d["partitions"] = partitions;
        d["log_posteriors"] = s.log_posteriors;
        return d;
      },
      py::arg("graph"), py::arg("model") = "sbm", py::arg("n_samples") = 100, py::arg("sweep_interval") = 10,
      py::arg("burn_in") = 1000, py::arg("seed") = 1, py::arg("initial") = py::none(), py::arg("max_groups") = 0);

  m.def(
      "score_pairs",
      [](const Multigraph& g, const std::vector<std::tuple<int, int>>& pairs, const std::vector<int>& labels,
         const std::string& model, bool spurious) {
        return score_single_point(g, to_candidates(pairs, spurious), to_partition(labels), parse_model_class(model));
      },
      py::arg("graph"), py::arg("pairs"), py::arg("labels"), py::arg("model") = "sbm", py::arg("spurious") = false,
      "log2 score of each pair under a single partition (negative change in description length)");

  m.def(
      "score_pairs_averaged",
      [](const Multigraph& g, const std::vector<std::tuple<int, int>>& pairs,
         const std::vector<std::vector<int>>& partitions, const std::string& model, bool spurious) {
        PosteriorSample s;
        for (const auto& labels : partitions) s.partitions.push_back(to_partition(labels));
        return score_averaged(g, to_candidates(pairs, spurious), s, parse_model_class(model));
      },
      py::arg("graph"), py::arg("pairs"), py::arg("partitions"), py::arg("model") = "sbm", py::arg("spurious") = false);

  m.def(
      "auc",
      [](const std::vector<double>& positives, const std::vector<double>& negatives) {
        return evaluate_auc(positives, negatives).auc;
      },
      py::arg("positives"), py::arg("negatives"));

  m.def(
      "planted_partition",
      [](int groups, int group_size, double assortativity, double mean_degree, std::uint64_t seed,
         bool microcanonical) {
        const auto p = PlantedParams::from_mean_degree(groups, group_size, assortativity, mean_degree);
        const auto rates = planted_rates(p);
        const auto b = planted_partition(p);
        Rng rng = make_rng(seed);
        auto g = microcanonical ? sample_microcanonical(rates, b, rng) : sample_canonical(rates, b, rng);
        return std::make_pair(std::move(g), to_labels(b));
      },
      py::arg("groups") = 10, py::arg("group_size") = 100, py::arg("assortativity") = 0.8,
      py::arg("mean_degree") = 20.0, py::arg("seed") = 1, py::arg("microcanonical") = true);

  m.def(
      "two_cliques",
      [](int clique_size, double flip, std::uint64_t seed) {
        Rng rng = make_rng(seed);
        return two_cliques_with_noise(clique_size, flip, rng);
      },
      py::arg("clique_size"), py::arg("flip") = 0.0, py::arg("seed") = 1);

  m.def("auc_theory_true_model", &auc_theory_true_model, py::arg("groups"), py::arg("assortativity"));
  m.def("auc_theory_inferred", &auc_theory_inferred, py::arg("groups"), py::arg("assortativity"));
  m.def("detectability_threshold", &detectability_threshold, py::arg("groups"), py::arg("mean_degree"));

  m.def(
      "removal_experiment",
      [](const Multigraph& g, const std::vector<std::string>& models, double f, int replicates, std::uint64_t seed,
         int restarts, int sweeps, int jobs) {
        RemovalExperimentConfig config;
        config.classes.clear();
        for (const auto& name : models) config.classes.push_back(parse_model_class(name));
        config.f = f;
        config.replicates = replicates;
        config.map = search_config(restarts, sweeps, 0, 0);
        config.jobs = jobs;
        std::vector<RunRecord> records;
        ConsistencyReport report;
        {
          py::gil_scoped_release release;
          records = run_removal_experiment(g, config, seed);
          report = consistency_report(records);
        }
        py::list rows;
        for (const auto& r : records) rows.append(record_dict(r));
        py::list pairs;
        for (const auto& p : report.pairs) {
          py::dict d;
          d["first"] = std::string(to_string(p.first));
          d["second"] = std::string(to_string(p.second));
          d["mean_delta_sigma"] = p.mean_delta_sigma;
          d["mean_delta_auc"] = p.mean_delta_auc;
          d["quadrant"] = std::string(to_string(p.quadrant));
          pairs.append(d);
        }
        py::dict out;
        out["records"] = rows;
        out["pairs"] = pairs;
        return out;
      },
      py::arg("graph"), py::arg("models") = std::vector<std::string>{"sbm", "dcsbm"}, py::arg("f") = 0.05,
      py::arg("replicates") = 50, py::arg("seed") = 1, py::arg("restarts") = 10, py::arg("sweeps") = 1000,
      py::arg("jobs") = 0);
}
