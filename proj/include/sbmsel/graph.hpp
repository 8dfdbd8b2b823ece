#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sbmsel/random.hpp"

namespace sbmsel {

// One node pair of a multigraph. For source == target, `units` counts
// self-loops (the adjacency diagonal stores twice this value).
struct Edge {
  int source = 0;
  int target = 0;
  std::int64_t units = 1;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Neighbor {
  int node = 0;
  std::int64_t multiplicity = 0;  // A_ij; for node == self this is A_ii = 2 * loops

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Undirected multigraph with half-edge diagonal convention: A_ii holds twice the
// number of self-loops, so that the degrees always sum to 2E. Immutable once built.
class Multigraph {
 public:
  Multigraph() = default;
  explicit Multigraph(int node_count);

  static Multigraph from_edges(int node_count, std::span<const Edge> edges);

  int node_count() const noexcept { return static_cast<int>(adjacency_.size()); }
  std::int64_t edge_count() const noexcept { return edge_count_; }
  std::int64_t degree(int node) const { return degrees_.at(node); }
  std::span<const std::int64_t> degrees() const noexcept { return degrees_; }

  // Sorted by neighbor index; includes the node itself when it carries self-loops.
  std::span<const Neighbor> neighbors(int node) const { return adjacency_.at(node); }

  std::int64_t multiplicity(int i, int j) const;

  // One entry per occupied pair, i <= j, sorted.
  std::vector<Edge> edges() const;

  // Number of distinct pairs i < j with A_ij > 0.
  std::int64_t occupied_pair_count() const;

  friend bool operator==(const Multigraph&, const Multigraph&) = default;

 private:
  friend class MultigraphBuilder;

  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<std::int64_t> degrees_;
  std::int64_t edge_count_ = 0;
};

class MultigraphBuilder {
 public:
  explicit MultigraphBuilder(int node_count = 0) : node_count_(node_count) {}

  // Adds `units` parallel edges (or self-loops when i == j). Grows the node set as needed.
  void add(int i, int j, std::int64_t units = 1);
  void reserve_nodes(int node_count);
  Multigraph build() const;

 private:
  int node_count_;
  std::map<std::pair<int, int>, std::int64_t> units_;
};

// Edge-list text: optional "N <count>" header, '#' comments, "i j [m]" lines.
Multigraph load_edge_list(std::istream& in);
Multigraph load_edge_list(std::string_view text);
Multigraph read_edge_list_file(const std::string& path);

void write_edge_list(std::ostream& out, const Multigraph& g);
std::string to_edge_list_string(const Multigraph& g);

struct RemovalSplit {
  Multigraph observed;
  std::vector<Edge> removed;  // same unit convention as Edge
  double fraction = 0.0;
  std::int64_t removed_count = 0;
  std::int64_t original_count = 0;
};

// Removes every edge unit independently with probability f.
RemovalSplit remove_edges(const Multigraph& g, double f, Rng& rng);

// Removes exactly `count` edge units, uniformly without replacement.
RemovalSplit remove_exact(const Multigraph& g, std::int64_t count, Rng& rng);

// observed + removed.
Multigraph restore(const RemovalSplit& split);

// Order-independent digest of a removal set, used to check paired designs.
std::uint64_t removal_digest(std::span<const Edge> removed);

}  // namespace sbmsel
