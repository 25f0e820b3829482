#include "macells/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>

#include "macells/error.hpp"
#include "macells/ids.hpp"

namespace macells {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void parse_fail(const std::string& source, std::size_t line_no,
                             const std::string& msg) {
  throw InputError(source + ":" + std::to_string(line_no) + ": " + msg);
}

std::string id_list(const std::vector<NodeId>& nodes) {
  std::vector<std::string> parts;
  parts.reserve(nodes.size());
  for (NodeId n : nodes) parts.push_back(std::to_string(n));
  return join(parts, ",");
}

}  // namespace

std::vector<NodeId> Topology::node_ids() const {
  std::vector<NodeId> ids;
  ids.reserve(adjacency.size());
  for (const auto& [n, _] : adjacency) ids.push_back(n);
  return ids;
}

const std::vector<Topology::Neighbor>& Topology::neighbors(NodeId n) const {
  auto it = adjacency.find(n);
  if (it == adjacency.end())
    throw InputError("unknown node " + std::to_string(n));
  return it->second;
}

void Topology::add_node(NodeId n) { adjacency.try_emplace(n); }

void Topology::add_edge(NodeId u, NodeId v, double w) {
  if (u == v)
    throw InputError("self-loop on node " + std::to_string(u) +
                     " is not allowed");
  if (!(w >= 0.0) || !std::isfinite(w))
    throw InputError("edge " + std::to_string(u) + "-" + std::to_string(v) +
                     " has invalid weight");
  add_node(u);
  add_node(v);
  auto& lu = adjacency[u];
  auto pos = std::lower_bound(
      lu.begin(), lu.end(), v,
      [](const Neighbor& nb, NodeId id) { return nb.to < id; });
  if (pos != lu.end() && pos->to == v)
    throw InputError("duplicate edge " + std::to_string(u) + "-" +
                     std::to_string(v));
  lu.insert(pos, Neighbor{v, w});
  auto& lv = adjacency[v];
  auto pos2 = std::lower_bound(
      lv.begin(), lv.end(), u,
      [](const Neighbor& nb, NodeId id) { return nb.to < id; });
  lv.insert(pos2, Neighbor{u, w});
}

Topology Topology::without(const std::set<NodeId>& removed) const {
  if (removed.count(sink) != 0)
    throw InputError("sink node " + std::to_string(sink) +
                     " cannot be removed");
  Topology out;
  out.sink = sink;
  out.field_x = field_x;
  out.field_y = field_y;
  for (const auto& [n, nbs] : adjacency) {
    if (removed.count(n) != 0) continue;
    out.add_node(n);
    auto ci = coords.find(n);
    if (ci != coords.end()) out.coords[n] = ci->second;
    for (const Neighbor& nb : nbs)
      if (nb.to > n && removed.count(nb.to) == 0)
        out.add_edge(n, nb.to, nb.weight);
  }
  return out;
}

bool ShortestPaths::reachable(NodeId n) const {
  auto it = dist.find(n);
  return it != dist.end() && it->second < kInf;
}

std::vector<NodeId> ShortestPaths::path_to(NodeId target) const {
  if (!reachable(target)) return {};
  std::vector<NodeId> path;
  NodeId cur = target;
  path.push_back(cur);
  while (cur != source) {
    cur = pred.at(cur);
    path.push_back(cur);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

ShortestPaths dijkstra(const Topology& t, NodeId source) {
  if (!t.has_node(source))
    throw InputError("unknown source node " + std::to_string(source));

  ShortestPaths sp;
  sp.source = source;
  for (const auto& [n, _] : t.adjacency) sp.dist[n] = kInf;
  sp.dist[source] = 0.0;
  sp.hops[source] = 0;

  // Min-heap on (distance, node id): equal-cost nodes settle in id order,
  // and a node's predecessor/hop count freeze when it settles, so the
  // reconstructed paths are deterministic.
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  heap.push({0.0, source});
  std::set<NodeId> settled;

  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (settled.count(u) != 0 || d != sp.dist[u]) continue;
    settled.insert(u);
    for (const auto& nb : t.neighbors(u)) {
      if (settled.count(nb.to) != 0) continue;
      const double alt = d + nb.weight;
      if (alt < sp.dist[nb.to]) {
        sp.dist[nb.to] = alt;
        sp.pred[nb.to] = u;
        sp.hops[nb.to] = sp.hops[u] + 1;
        heap.push({alt, nb.to});
      } else if (alt == sp.dist[nb.to] && u < sp.pred[nb.to]) {
        sp.pred[nb.to] = u;
        sp.hops[nb.to] = sp.hops[u] + 1;
      }
    }
  }
  return sp;
}

Itinerary lcf_itinerary(const Topology& t, NodeId start,
                        const std::set<NodeId>& targets) {
  if (!t.has_node(start))
    throw InputError("unknown start node " + std::to_string(start));
  if (targets.empty()) throw InputError("no targets to visit");
  for (NodeId n : targets)
    if (!t.has_node(n)) throw InputError("unknown target node " + std::to_string(n));

  Itinerary it;
  std::set<NodeId> remaining = targets;
  remaining.erase(start);  // already there
  NodeId current = start;
  while (!remaining.empty()) {
    ShortestPaths sp = dijkstra(t, current);
    NodeId next = 0;
    double best = kInf;
    bool have = false;
    for (NodeId n : remaining) {
      if (!sp.reachable(n)) continue;
      if (!have || sp.dist[n] < best || (sp.dist[n] == best && n < next)) {
        best = sp.dist[n];
        next = n;
        have = true;
      }
    }
    if (!have) {
      std::vector<NodeId> missing(remaining.begin(), remaining.end());
      throw InfeasibleError("target " + std::to_string(*missing.begin()) +
                            " unreachable from node " +
                            std::to_string(current) + " (unreached targets: " +
                            id_list(missing) + ")");
    }
    it.legs.push_back(Leg{current, next, best, sp.hops[next]});
    it.order.push_back(next);
    it.total_cost += best;
    it.total_hops += sp.hops[next];
    remaining.erase(next);
    current = next;
  }
  return it;
}

LoadSweep load_management_sweep(const Topology& t) {
  if (t.adjacency.empty()) throw InputError("topology has no nodes");
  if (!t.has_node(t.sink))
    throw InputError("sink node " + std::to_string(t.sink) +
                     " is not in the topology");

  LoadSweep sweep;
  ShortestPaths from_sink = dijkstra(t, t.sink);
  std::vector<NodeId> unreachable;
  for (const auto& [n, _] : t.adjacency)
    if (!from_sink.reachable(n)) unreachable.push_back(n);
  if (!unreachable.empty())
    throw InfeasibleError("topology is disconnected; unreachable from sink " +
                          std::to_string(t.sink) + ": " +
                          id_list(unreachable));

  for (const auto& [n, _] : t.adjacency) sweep.tables[n] = dijkstra(t, n);

  std::set<NodeId> targets;
  for (const auto& [n, _] : t.adjacency)
    if (n != t.sink) targets.insert(n);
  // A sink-only network has nothing to tour.
  if (!targets.empty()) sweep.tour = lcf_itinerary(t, t.sink, targets);
  return sweep;
}

Topology parse_topology(std::istream& in, const std::string& source_name) {
  Topology t;
  bool sink_seen = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;

    auto want_int = [&](const char* what) {
      long long v;
      if (!(ls >> v))
        parse_fail(source_name, line_no, std::string("expected ") + what);
      return static_cast<NodeId>(v);
    };
    auto want_real = [&](const char* what) {
      double v;
      if (!(ls >> v))
        parse_fail(source_name, line_no, std::string("expected ") + what);
      return v;
    };
    auto expect_end = [&] {
      std::string rest;
      if (ls >> rest)
        parse_fail(source_name, line_no, "unexpected trailing '" + rest + "'");
    };

    try {
      if (head == "edge") {
        NodeId u = want_int("node id");
        NodeId v = want_int("node id");
        double w = want_real("edge weight");
        expect_end();
        t.add_edge(u, v, w);
      } else if (head == "node") {
        NodeId n = want_int("node id");
        double x = want_real("x coordinate");
        double y = want_real("y coordinate");
        expect_end();
        t.add_node(n);
        t.coords[n] = {x, y};
      } else if (head == "sink") {
        NodeId n = want_int("node id");
        expect_end();
        t.sink = n;
        sink_seen = true;
      } else if (head == "field") {
        t.field_x = want_real("field width");
        t.field_y = want_real("field height");
        expect_end();
      } else {
        // Bare `u v w` edge line.
        std::istringstream bare(line);
        long long u, v;
        double w;
        if (!(bare >> u >> v >> w))
          parse_fail(source_name, line_no, "unrecognized line '" + head + "...'");
        std::string rest;
        if (bare >> rest)
          parse_fail(source_name, line_no, "unexpected trailing '" + rest + "'");
        t.add_edge(static_cast<NodeId>(u), static_cast<NodeId>(v), w);
      }
    } catch (const InputError& e) {
      // Re-tag structural errors with their source position.
      std::string what = e.what();
      if (what.rfind(source_name + ":", 0) == 0) throw;
      parse_fail(source_name, line_no, what);
    }
  }
  if (t.adjacency.empty())
    throw InputError(source_name + ": topology has no nodes");
  if (!sink_seen) t.sink = t.adjacency.begin()->first;
  if (!t.has_node(t.sink))
    throw InputError(source_name + ": sink node " + std::to_string(t.sink) +
                     " is not in the topology");
  return t;
}

Topology parse_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open topology file '" + path + "'");
  return parse_topology(in, path);
}

void write_topology(std::ostream& out, const Topology& t) {
  if (t.field_x > 0 || t.field_y > 0)
    out << "field " << t.field_x << ' ' << t.field_y << '\n';
  for (const auto& [n, xy] : t.coords)
    out << "node " << n << ' ' << xy.first << ' ' << xy.second << '\n';
  out << "sink " << t.sink << '\n';
  for (const auto& [n, nbs] : t.adjacency)
    for (const auto& nb : nbs)
      if (n < nb.to) out << "edge " << n << ' ' << nb.to << ' ' << nb.weight << '\n';
}

Topology make_star(int leaves) {
  if (leaves < 1) throw InputError("star topology needs at least one leaf");
  Topology t;
  t.sink = 0;
  t.add_node(0);
  t.coords[0] = {0.0, 0.0};
  for (int i = 1; i <= leaves; ++i) t.add_edge(0, i, 1.0);
  return t;
}

Topology make_random_geometric(int nodes, double radius, double field_x,
                               double field_y, std::uint64_t seed) {
  if (nodes < 2)
    throw InputError("topology needs at least two nodes (sink plus sources)");
  if (!(radius > 0.0))
    throw InputError("connectivity radius must be positive");
  if (!(field_x > 0.0) || !(field_y > 0.0))
    throw InputError("field dimensions must be positive");

  Topology t;
  t.sink = 0;
  t.field_x = field_x;
  t.field_y = field_y;
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] {
    // Top 53 bits scaled to [0,1): identical on every platform, unlike the
    // standard distributions.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };

  t.add_node(0);
  t.coords[0] = {field_x / 2.0, field_y / 2.0};
  for (int n = 1; n < nodes; ++n) {
    t.add_node(n);
    t.coords[n] = {uniform() * field_x, uniform() * field_y};
  }

  auto distance = [&t](NodeId a, NodeId b) {
    auto [ax, ay] = t.coords.at(a);
    auto [bx, by] = t.coords.at(b);
    return std::hypot(ax - bx, ay - by);
  };
  for (int a = 0; a < nodes; ++a)
    for (int b = a + 1; b < nodes; ++b)
      if (distance(a, b) <= radius) t.add_edge(a, b, distance(a, b));

  // Stitch any disconnected remainder to the sink's component through the
  // closest pair, shortest bridges first: deterministic and minimal.
  for (;;) {
    ShortestPaths sp = dijkstra(t, t.sink);
    std::vector<NodeId> outside;
    for (int n = 0; n < nodes; ++n)
      if (!sp.reachable(n)) outside.push_back(n);
    if (outside.empty()) break;
    NodeId best_in = 0, best_out = outside.front();
    double best_d = kInf;
    for (int a = 0; a < nodes; ++a) {
      if (!sp.reachable(a)) continue;
      for (NodeId b : outside) {
        double d = distance(a, b);
        if (d < best_d || (d == best_d && (a < best_in ||
                                           (a == best_in && b < best_out)))) {
          best_d = d;
          best_in = a;
          best_out = b;
        }
      }
    }
    t.add_edge(best_in, best_out, best_d);
  }
  return t;
}

}  // namespace macells
