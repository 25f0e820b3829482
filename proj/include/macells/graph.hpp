#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace macells {

using NodeId = int;

// Undirected weighted sensor-network graph with a designated sink node and
// optional planar coordinates. Weights are abstract non-negative costs.
struct Topology {
  struct Neighbor {
    NodeId to;
    double weight;
  };

  // Adjacency lists kept sorted by neighbor id.
  std::map<NodeId, std::vector<Neighbor>> adjacency;
  std::map<NodeId, std::pair<double, double>> coords;
  NodeId sink = 0;
  double field_x = 0.0;  // field extent, 0 when unspecified
  double field_y = 0.0;

  bool has_node(NodeId n) const { return adjacency.count(n) != 0; }
  std::size_t node_count() const { return adjacency.size(); }
  std::vector<NodeId> node_ids() const;
  const std::vector<Neighbor>& neighbors(NodeId n) const;

  void add_node(NodeId n);
  // Rejects self-loops, repeated pairs, and negative or non-finite weights.
  void add_edge(NodeId u, NodeId v, double w);

  // Copy with the given nodes (and their edges) removed. The sink must
  // survive.
  Topology without(const std::set<NodeId>& removed) const;
};

// Single-source shortest paths. Unreachable nodes have infinite distance and
// no predecessor entry.
struct ShortestPaths {
  NodeId source = 0;
  std::map<NodeId, double> dist;
  std::map<NodeId, NodeId> pred;  // predecessor on a shortest path
  std::map<NodeId, int> hops;     // edge count along that path

  bool reachable(NodeId n) const;
  // Node sequence source..target; empty when unreachable.
  std::vector<NodeId> path_to(NodeId target) const;
};

// Dijkstra with deterministic tie-breaking: equal-cost relaxations keep the
// smaller predecessor id. Unknown sources are rejected.
ShortestPaths dijkstra(const Topology& t, NodeId source);

// One movement between consecutive itinerary stops, measured over the
// shortest path connecting them.
struct Leg {
  NodeId from = 0;
  NodeId to = 0;
  double cost = 0.0;
  int hops = 0;
};

// Visit plan over a target set: `order` lists targets in visiting sequence,
// `next_index` is the cursor of the next stop, and total_cost/total_hops sum
// the legs (starting leg included, return leg not).
struct Itinerary {
  std::vector<NodeId> order;
  std::size_t next_index = 0;
  std::vector<Leg> legs;  // start->order[0], order[0]->order[1], ...
  double total_cost = 0.0;
  int total_hops = 0;
};

// Greedy local-closest-first order over `targets` from `start`: each step
// moves to the unvisited target at minimal shortest-path distance, ties to
// the smaller node id. Empty target sets and unknown nodes are rejected;
// unreachable targets are rejected by name.
Itinerary lcf_itinerary(const Topology& t, NodeId start,
                        const std::set<NodeId>& targets);

// Network-wide route survey: all-pairs shortest paths plus the LCF tour a
// management agent would walk from the sink to touch every node. Rejects
// disconnected topologies, listing the unreachable component.
struct LoadSweep {
  std::map<NodeId, ShortestPaths> tables;
  Itinerary tour;
};

LoadSweep load_management_sweep(const Topology& t);

// Text format: `edge u v w` (or bare `u v w`), `node id x y`, `sink id`,
// `field x y`; '#' starts a comment. Parse errors carry source name and
// 1-based line number.
Topology parse_topology(std::istream& in, const std::string& source_name);
Topology parse_topology_file(const std::string& path);
void write_topology(std::ostream& out, const Topology& t);

// Star with node 0 as sink and `leaves` unit-weight spokes 1..leaves.
Topology make_star(int leaves);

// Random geometric graph: `nodes` points dropped uniformly on the field
// (node 0, the sink, at the center), connected within `radius`, weight =
// Euclidean distance. Deterministic in the seed; extra nearest-neighbor
// edges are added if the radius graph comes out disconnected.
Topology make_random_geometric(int nodes, double radius, double field_x,
                               double field_y, std::uint64_t seed);

}  // namespace macells
