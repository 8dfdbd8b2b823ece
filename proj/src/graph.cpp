#include "sbmsel/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sbmsel/errors.hpp"

namespace sbmsel {

Multigraph::Multigraph(int node_count) {
  if (node_count < 0) throw ValidationError("node count must be non-negative");
  adjacency_.resize(node_count);
  degrees_.assign(node_count, 0);
}

Multigraph Multigraph::from_edges(int node_count, std::span<const Edge> edges) {
  MultigraphBuilder builder(node_count);
  for (const auto& e : edges) builder.add(e.source, e.target, e.units);
  return builder.build();
}

std::int64_t Multigraph::multiplicity(int i, int j) const {
  const auto& row = adjacency_.at(i);
  auto it = std::lower_bound(row.begin(), row.end(), j,
                             [](const Neighbor& nb, int v) { return nb.node < v; });
  return (it != row.end() && it->node == j) ? it->multiplicity : 0;
}

std::vector<Edge> Multigraph::edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < node_count(); ++i) {
    for (const auto& nb : adjacency_[i]) {
      if (nb.node < i) continue;
      out.push_back({i, nb.node, nb.node == i ? nb.multiplicity / 2 : nb.multiplicity});
    }
  }
  return out;
}

std::int64_t Multigraph::occupied_pair_count() const {
  std::int64_t count = 0;
  for (int i = 0; i < node_count(); ++i)
    for (const auto& nb : adjacency_[i])
      if (nb.node > i) ++count;
  return count;
}

void MultigraphBuilder::add(int i, int j, std::int64_t units) {
  if (i < 0 || j < 0) throw ValidationError("node indices must be non-negative");
  if (units < 0) throw ValidationError("edge multiplicity must be non-negative");
  if (units == 0) return;
  if (i > j) std::swap(i, j);
  node_count_ = std::max(node_count_, j + 1);
  units_[{i, j}] += units;
}

void MultigraphBuilder::reserve_nodes(int node_count) { node_count_ = std::max(node_count_, node_count); }

Multigraph MultigraphBuilder::build() const {
  std::vector<std::vector<Neighbor>> adjacency(node_count_);
  std::vector<std::int64_t> degrees(node_count_, 0);
  std::int64_t edge_count = 0;
  for (const auto& [pair, units] : units_) {
    const auto [i, j] = pair;
    if (i == j) {
      adjacency[i].push_back({i, 2 * units});
      degrees[i] += 2 * units;
    } else {
      adjacency[i].push_back({j, units});
      adjacency[j].push_back({i, units});
      degrees[i] += units;
      degrees[j] += units;
    }
    edge_count += units;
  }
  for (auto& row : adjacency)
    std::sort(row.begin(), row.end(), [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });

  Multigraph g(node_count_);
  g.adjacency_ = std::move(adjacency);
  g.degrees_ = std::move(degrees);
  g.edge_count_ = edge_count;
  return g;
}

namespace {

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == ',' || line[pos] == '\r'))
      ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != ',' && line[end] != '\r')
      ++end;
    tokens.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return tokens;
}

std::int64_t parse_integer(std::string_view token, std::size_t line_number) {
  std::int64_t value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && token.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParseError(line_number, "expected an integer, got '" + std::string(token) + "'");
  return value;
}

struct RawEntry {
  std::int64_t i, j, units;
  std::size_t line;
};

}  // namespace

Multigraph load_edge_list(std::istream& in) {
  std::vector<RawEntry> entries;
  std::int64_t declared_nodes = -1;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    auto tokens = split_tokens(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (tokens.front() == "N") {
      if (tokens.size() != 2) throw ParseError(line_number, "header must read 'N <count>'");
      if (declared_nodes >= 0) throw ParseError(line_number, "duplicate node-count header");
      declared_nodes = parse_integer(tokens[1], line_number);
      if (declared_nodes < 0) throw ValidationError("declared node count must be non-negative");
      continue;
    }
    if (tokens.size() != 2 && tokens.size() != 3)
      throw ParseError(line_number, "expected 'i j' or 'i j m'");
    const auto i = parse_integer(tokens[0], line_number);
    const auto j = parse_integer(tokens[1], line_number);
    if (i < 0 || j < 0) throw ParseError(line_number, "negative node index");
    std::int64_t units = 1;
    if (tokens.size() == 3) {
      units = parse_integer(tokens[2], line_number);
      if (units <= 0)
        throw ValidationError("line " + std::to_string(line_number) + ": multiplicity must be positive");
    }
    entries.push_back({i, j, units, line_number});
  }

  std::int64_t min_index = std::numeric_limits<std::int64_t>::max();
  std::int64_t max_index = -1;
  for (const auto& e : entries) {
    min_index = std::min({min_index, e.i, e.j});
    max_index = std::max({max_index, e.i, e.j});
  }

  // Index base: with a header, 1-based iff some endpoint equals N; otherwise
  // 1-based iff node 0 never appears.
  bool one_based = false;
  if (!entries.empty()) {
    if (declared_nodes >= 0)
      one_based = max_index == declared_nodes && declared_nodes > 0;
    else
      one_based = min_index >= 1;
  }
  if (one_based && min_index == 0) throw ValidationError("edge list mixes 0-based and 1-based indices");

  const std::int64_t shift = one_based ? 1 : 0;
  std::int64_t node_count = entries.empty() ? 0 : max_index - shift + 1;
  if (declared_nodes >= 0) {
    if (node_count > declared_nodes)
      throw ValidationError("edge list references node beyond declared count " + std::to_string(declared_nodes));
    node_count = declared_nodes;
  }
  if (node_count > std::numeric_limits<int>::max()) throw ValidationError("too many nodes");

  MultigraphBuilder builder(static_cast<int>(node_count));
  for (const auto& e : entries)
    builder.add(static_cast<int>(e.i - shift), static_cast<int>(e.j - shift), e.units);
  return builder.build();
}

Multigraph load_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  return load_edge_list(in);
}

Multigraph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_edge_list(in);
}

void write_edge_list(std::ostream& out, const Multigraph& g) {
  out << "N " << g.node_count() << '\n';
  for (const auto& e : g.edges()) {
    out << e.source << ' ' << e.target;
    if (e.units != 1 || e.source == e.target) out << ' ' << e.units;
    out << '\n';
  }
}

std::string to_edge_list_string(const Multigraph& g) {
  std::ostringstream out;
  write_edge_list(out, g);
  return out.str();
}

namespace {

Multigraph subtract(const Multigraph& g, const std::vector<Edge>& removed) {
  std::map<std::pair<int, int>, std::int64_t> drop;
  for (const auto& e : removed) drop[{e.source, e.target}] += e.units;
  MultigraphBuilder builder(g.node_count());
  for (const auto& e : g.edges()) {
    auto it = drop.find({e.source, e.target});
    const std::int64_t left = e.units - (it == drop.end() ? 0 : it->second);
    builder.add(e.source, e.target, left);
  }
  return builder.build();
}

}  // namespace

RemovalSplit remove_edges(const Multigraph& g, double f, Rng& rng) {
  if (!(f >= 0.0 && f < 1.0)) throw ValidationError("removal fraction must lie in [0, 1)");
  if (g.edge_count() == 0) throw ValidationError("cannot remove edges from an empty graph");
  RemovalSplit split;
  split.fraction = f;
  split.original_count = g.edge_count();
  for (const auto& e : g.edges()) {
    std::binomial_distribution<std::int64_t> draw(e.units, f);
    const auto k = f > 0.0 ? draw(rng) : 0;
    if (k > 0) {
      split.removed.push_back({e.source, e.target, k});
      split.removed_count += k;
    }
  }
  split.observed = subtract(g, split.removed);
  return split;
}

RemovalSplit remove_exact(const Multigraph& g, std::int64_t count, Rng& rng) {
  if (count < 0 || count > g.edge_count())
    throw ValidationError("removal count must lie in [0, E]");
  // Indexed by cumulative unit offsets so that no per-unit list is materialized.
  const auto edges = g.edges();
  std::vector<std::int64_t> offsets(edges.size() + 1, 0);
  for (std::size_t k = 0; k < edges.size(); ++k) offsets[k + 1] = offsets[k] + edges[k].units;

  // Floyd's algorithm: `count` distinct unit indices out of E.
  const std::int64_t total = g.edge_count();
  std::vector<std::int64_t> chosen;
  chosen.reserve(count);
  {
    std::vector<std::int64_t> sorted;
    for (std::int64_t j = total - count; j < total; ++j) {
      const auto t = std::uniform_int_distribution<std::int64_t>(0, j)(rng);
      auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
      if (it != sorted.end() && *it == t) {
        sorted.insert(std::lower_bound(sorted.begin(), sorted.end(), j), j);
      } else {
        sorted.insert(it, t);
      }
    }
    chosen = std::move(sorted);
  }

  std::map<std::pair<int, int>, std::int64_t> hits;
  for (auto unit : chosen) {
    const auto k = static_cast<std::size_t>(
        std::upper_bound(offsets.begin(), offsets.end(), unit) - offsets.begin() - 1);
    hits[{edges[k].source, edges[k].target}] += 1;
  }

  RemovalSplit split;
  split.fraction = total > 0 ? static_cast<double>(count) / static_cast<double>(total) : 0.0;
  split.original_count = total;
  split.removed_count = count;
  for (const auto& [pair, units] : hits) split.removed.push_back({pair.first, pair.second, units});
  split.observed = subtract(g, split.removed);
  return split;
}

Multigraph restore(const RemovalSplit& split) {
  MultigraphBuilder builder(split.observed.node_count());
  for (const auto& e : split.observed.edges()) builder.add(e.source, e.target, e.units);
  for (const auto& e : split.removed) builder.add(e.source, e.target, e.units);
  return builder.build();
}

std::uint64_t removal_digest(std::span<const Edge> removed) {
  std::uint64_t digest = 0;
  for (const auto& e : removed) {
    const auto a = static_cast<std::uint64_t>(std::min(e.source, e.target));
    const auto b = static_cast<std::uint64_t>(std::max(e.source, e.target));
    digest += mix_seed((a << 32) ^ b ^ (static_cast<std::uint64_t>(e.units) << 52));
  }
  return digest;
}

}  // namespace sbmsel
