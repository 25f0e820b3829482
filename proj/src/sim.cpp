#include "macells/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "macells/error.hpp"

namespace macells {

namespace {

// ---------------------------------------------------------------------------
// Deterministic randomness: splitmix64 over (seed, node, round, salt). The
// standard distributions are implementation-defined, so doubles are derived
// by scaling the top 53 bits directly.
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                 std::uint64_t salt) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (a * 0xd1342543de82ef95ULL));
  h = splitmix64(h ^ (b * 0xaf251af3b0f025b5ULL));
  h = splitmix64(h ^ (salt * 0x9e3779b97f4a7c15ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line_no,
                             const std::string& msg) {
  throw InputError(source + ":" + std::to_string(line_no) + ": " + msg);
}

}  // namespace

void SimulationConfig::validate() const {
  if (!(field_x > 0.0) || !(field_y > 0.0))
    throw InputError("field dimensions must be positive");
  if (rounds < 0) throw InputError("rounds must be non-negative");
  if (!(aggregation_ratio > 0.0) || aggregation_ratio > 1.0)
    throw InputError("aggregation ratio must lie in (0, 1]");
  if (!(code_size >= 0.0) || !std::isfinite(code_size))
    throw InputError("code size must be non-negative");
  if (!(raw_payload > 0.0) || !std::isfinite(raw_payload))
    throw InputError("raw payload size must be positive");
  if (!(fault_tolerance >= 0.0) || !std::isfinite(fault_tolerance))
    throw InputError("fault tolerance delta must be non-negative");
  if (fault_rate < 0.0 || fault_rate > 1.0)
    throw InputError("fault rate must lie in [0, 1]");
  if (duplication_tau < 0.0 || duplication_tau > 1.0)
    throw InputError("duplication threshold must lie in [0, 1]");
}

void Scenario::validate() const {
  config.validate();
  if (topology.adjacency.empty()) throw InputError("scenario has no nodes");
  if (!topology.has_node(topology.sink))
    throw InputError("sink node " + std::to_string(topology.sink) +
                     " is not in the topology");
  if (topology.node_count() < 2)
    throw InputError("scenario needs at least one node besides the sink");
  if (tasks.empty()) throw InputError("scenario defines no tasks");

  std::set<Id> agents;
  for (const auto& [agent, targets] : tasks) {
    if (agent.empty()) throw InputError("task with empty agent id");
    if (!agents.insert(agent).second)
      throw InputError("duplicate task for agent '" + agent + "'");
    if (targets.empty())
      throw InputError("task for agent '" + agent + "' has no targets");
    for (NodeId n : targets) {
      if (!topology.has_node(n))
        throw InputError("task for agent '" + agent +
                         "' targets unknown node " + std::to_string(n));
      if (n == topology.sink)
        throw InputError("task for agent '" + agent +
                         "' targets the sink node");
    }
  }
  for (NodeId n : failed) {
    if (!topology.has_node(n))
      throw InputError("failed node " + std::to_string(n) +
                       " is not in the topology");
    if (n == topology.sink) throw InputError("the sink node cannot fail");
  }
}

// ---------------------------------------------------------------------------
// Scenario parsing.
// ---------------------------------------------------------------------------

Scenario parse_scenario(std::istream& in, const std::string& source_name) {
  Scenario sc;
  bool sink_seen = false;
  bool topology_lines = false;
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
      return v;
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
      if (head == "field") {
        sc.config.field_x = want_real("field width");
        sc.config.field_y = want_real("field height");
        expect_end();
      } else if (head == "node") {
        NodeId n = static_cast<NodeId>(want_int("node id"));
        double x = want_real("x coordinate");
        double y = want_real("y coordinate");
        expect_end();
        sc.topology.add_node(n);
        sc.topology.coords[n] = {x, y};
        topology_lines = true;
      } else if (head == "edge") {
        NodeId u = static_cast<NodeId>(want_int("node id"));
        NodeId v = static_cast<NodeId>(want_int("node id"));
        double w = want_real("edge weight");
        expect_end();
        sc.topology.add_edge(u, v, w);
        topology_lines = true;
      } else if (head == "sink") {
        sc.topology.sink = static_cast<NodeId>(want_int("node id"));
        sink_seen = true;
        expect_end();
      } else if (head == "generate") {
        std::string kind;
        if (!(ls >> kind))
          parse_fail(source_name, line_no, "expected generator kind");
        Scenario::Generator gen;
        gen.kind = kind;
        if (kind == "star") {
          gen.nodes = static_cast<int>(want_int("leaf count"));
        } else if (kind == "geometric") {
          gen.nodes = static_cast<int>(want_int("node count"));
          gen.radius = want_real("connectivity radius");
        } else {
          parse_fail(source_name, line_no,
                     "unknown generator '" + kind +
                         "' (expected star or geometric)");
        }
        expect_end();
        if (sc.generator)
          parse_fail(source_name, line_no, "duplicate generate line");
        sc.generator = gen;
      } else if (head == "task") {
        std::string agent;
        if (!(ls >> agent))
          parse_fail(source_name, line_no, "expected agent id");
        std::set<NodeId> targets;
        long long v;
        while (ls >> v) targets.insert(static_cast<NodeId>(v));
        if (!ls.eof())
          parse_fail(source_name, line_no, "malformed target id");
        if (targets.empty())
          parse_fail(source_name, line_no,
                     "task for agent '" + agent + "' lists no targets");
        sc.tasks.emplace_back(agent, std::move(targets));
      } else if (head == "failed") {
        long long v;
        while (ls >> v) sc.failed.insert(static_cast<NodeId>(v));
        if (!ls.eof()) parse_fail(source_name, line_no, "malformed node id");
      } else if (head == "rounds") {
        sc.config.rounds = static_cast<int>(want_int("round count"));
        expect_end();
      } else if (head == "rho") {
        sc.config.aggregation_ratio = want_real("aggregation ratio");
        expect_end();
      } else if (head == "code_size") {
        sc.config.code_size = want_real("code size");
        expect_end();
      } else if (head == "raw_payload") {
        sc.config.raw_payload = want_real("raw payload size");
        expect_end();
      } else if (head == "delta") {
        sc.config.fault_tolerance = want_real("fault tolerance");
        expect_end();
      } else if (head == "fault_rate") {
        sc.config.fault_rate = want_real("fault rate");
        expect_end();
      } else if (head == "tau") {
        sc.config.duplication_tau = want_real("duplication threshold");
        expect_end();
      } else if (head == "seed") {
        sc.config.seed = static_cast<std::uint64_t>(want_int("seed"));
        expect_end();
      } else {
        parse_fail(source_name, line_no, "unknown directive '" + head + "'");
      }
    } catch (const InputError& e) {
      std::string what = e.what();
      if (what.rfind(source_name + ":", 0) == 0) throw;
      parse_fail(source_name, line_no, what);
    }
  }

  if (sc.generator) {
    if (topology_lines)
      throw InputError(source_name +
                       ": generate cannot be combined with explicit "
                       "node/edge lines");
    if (!sc.tasks.empty())
      throw InputError(source_name +
                       ": generated scenarios define their task "
                       "automatically; remove task lines");
    if (sink_seen)
      throw InputError(source_name +
                       ": generated scenarios place the sink at node 0");
    if (sc.generator->kind == "star") {
      sc.topology = make_star(sc.generator->nodes);
    } else {
      sc.topology = make_random_geometric(
          sc.generator->nodes, sc.generator->radius, sc.config.field_x,
          sc.config.field_y, sc.config.seed);
    }
    std::set<NodeId> all;
    for (const auto& [n, _] : sc.topology.adjacency)
      if (n != sc.topology.sink) all.insert(n);
    sc.tasks.emplace_back("A", std::move(all));
  } else if (!sink_seen && !sc.topology.adjacency.empty() &&
             !sc.topology.has_node(0)) {
    sc.topology.sink = sc.topology.adjacency.begin()->first;
  }

  sc.validate();
  return sc;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file '" + path + "'");
  return parse_scenario(in, path);
}

// ---------------------------------------------------------------------------
// Synthetic readings: a per-node base level smoothed over the neighborhood
// (so neighbor values correlate and the envelope filter has teeth), small
// per-round jitter, and rare injected faults that land far outside any
// neighbor envelope.
// ---------------------------------------------------------------------------

double node_reading(const SimulationConfig& config, const Topology& topology,
                    NodeId node, int round) {
  if (!topology.has_node(node))
    throw InputError("unknown node " + std::to_string(node));

  std::map<NodeId, double> base;
  for (const auto& [n, _] : topology.adjacency)
    base[n] = 25.0 + 10.0 * unit_hash(config.seed, static_cast<std::uint64_t>(n),
                                      0, 1);
  for (int pass = 0; pass < 2; ++pass) {
    std::map<NodeId, double> next;
    for (const auto& [n, nbs] : topology.adjacency) {
      double sum = base[n];
      for (const auto& nb : nbs) sum += base[nb.to];
      next[n] = sum / static_cast<double>(1 + nbs.size());
    }
    base = std::move(next);
  }

  double reading = base[node] +
                   (unit_hash(config.seed, static_cast<std::uint64_t>(node),
                              static_cast<std::uint64_t>(round), 2) -
                    0.5);
  if (config.fault_rate > 0.0 &&
      unit_hash(config.seed, static_cast<std::uint64_t>(node),
                static_cast<std::uint64_t>(round), 3) < config.fault_rate)
    reading += 50.0;  // far outside any smoothed neighborhood
  return reading;
}

bool filter_reading(double reading, const std::vector<double>& neighbors,
                    double delta) {
  if (neighbors.empty())
    throw InputError("cannot judge a reading without neighbor readings");
  if (!(delta >= 0.0) || !std::isfinite(delta))
    throw InputError("fault tolerance delta must be non-negative");
  const auto [lo, hi] = std::minmax_element(neighbors.begin(), neighbors.end());
  return *lo - delta <= reading && reading <= *hi + delta;
}

// ---------------------------------------------------------------------------
// Dispatch and the mobile-agent walk.
// ---------------------------------------------------------------------------

DispatchResult dispatch_round(const SimulationConfig& config,
                              const Topology& topology, const TaskList& tasks,
                              const std::set<NodeId>& failed, long first_seq) {
  config.validate();
  if (tasks.empty()) throw InputError("dispatch requires at least one task");
  if (failed.count(topology.sink) != 0)
    throw InfeasibleError("the sink node cannot fail");

  DispatchResult out;
  out.next_seq = first_seq;
  for (const auto& [agent, targets] : tasks) {
    MAPacket p;
    p.agent = agent;
    p.sink_id = topology.sink;
    p.ma_seq_num = out.next_seq++;
    p.code_size = config.code_size;
    try {
      // The sink plans on its full map; failures are discovered en route.
      p.src_list = lcf_itinerary(topology, topology.sink, targets);
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("agent '" + agent + "': " + e.what());
    }
    p.next_src = p.src_list.next_index;
    out.packets.push_back(std::move(p));

    std::vector<Id> routers;
    for (NodeId n : targets) routers.push_back(std::to_string(n));
    out.route_tables.emplace_back(agent, std::move(routers));
  }
  return out;
}

namespace {

// One stop-to-stop movement of the walked itinerary. `collect` marks arrival
// at a live target (reading taken, code deposited); detour arrivals that are
// not targets move bytes but collect nothing.
struct WalkLeg {
  NodeId from = 0;
  NodeId to = 0;
  int hops = 0;
  double cost = 0.0;
  bool collect = false;
};

// Walks one agent's task with the static failure set: planned stops that
// turn out failed are dropped (their readings are lost) and the agent slips
// to the failed node's lowest-id live neighbor, re-planning the rest of the
// itinerary from there. Movement between live endpoints follows live-graph
// shortest paths.
std::vector<WalkLeg> plan_walk(const Topology& topology, const Topology& live,
                               const std::set<NodeId>& failed, const Id& agent,
                               const std::set<NodeId>& targets) {
  std::vector<WalkLeg> walk;
  std::set<NodeId> remaining = targets;
  NodeId pos = topology.sink;

  auto live_leg = [&](NodeId from, NodeId to, bool collect) {
    ShortestPaths sp = dijkstra(live, from);
    if (!sp.reachable(to))
      throw InfeasibleError("agent '" + agent + "': node " +
                            std::to_string(to) +
                            " unreachable on the live topology from node " +
                            std::to_string(from));
    walk.push_back(WalkLeg{from, to, sp.hops[to], sp.dist[to], collect});
  };

  while (!remaining.empty()) {
    Itinerary plan;
    try {
      plan = lcf_itinerary(topology, pos, remaining);
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("agent '" + agent + "': " + e.what());
    }
    bool replanned = false;
    for (NodeId next : plan.order) {
      if (failed.count(next) == 0) {
        live_leg(pos, next, true);
        remaining.erase(next);
        pos = next;
        continue;
      }
      // The next stop is dead: its readings are lost. Slip to its lowest-id
      // live neighbor and re-plan the remaining stops from there.
      remaining.erase(next);
      NodeId detour = -1;
      for (const auto& nb : topology.neighbors(next)) {
        if (failed.count(nb.to) == 0) {
          detour = nb.to;
          break;  // adjacency is id-sorted
        }
      }
      if (detour < 0)
        throw InfeasibleError("agent '" + agent + "': failed node " +
                              std::to_string(next) +
                              " has no live neighbor to detour to");
      if (detour != pos) {
        const bool collect_detour = remaining.count(detour) != 0;
        live_leg(pos, detour, collect_detour);
        if (collect_detour) remaining.erase(detour);
        pos = detour;
      }
      replanned = true;
      break;
    }
    if (!replanned && !remaining.empty())
      throw InfeasibleError("agent '" + agent +
                            "': itinerary failed to cover its targets");
  }

  if (pos != topology.sink) {
    // Carry the aggregated payload home.
    ShortestPaths sp = dijkstra(live, pos);
    if (!sp.reachable(topology.sink))
      throw InfeasibleError("agent '" + agent +
                            "': sink unreachable on the live topology from "
                            "node " +
                            std::to_string(pos));
    walk.push_back(WalkLeg{pos, topology.sink, sp.hops[topology.sink],
                           sp.dist[topology.sink], false});
  }
  return walk;
}

std::vector<double> live_neighbor_readings(const SimulationConfig& config,
                                           const Topology& topology,
                                           const std::set<NodeId>& failed,
                                           NodeId node, int round) {
  std::vector<double> values;
  for (const auto& nb : topology.neighbors(node))
    if (failed.count(nb.to) == 0)
      values.push_back(node_reading(config, topology, nb.to, round));
  return values;
}

}  // namespace

TrafficReport run_mobile_agent(const Scenario& scenario) {
  scenario.validate();
  const SimulationConfig& config = scenario.config;
  const Topology& topology = scenario.topology;
  Topology live = topology.without(scenario.failed);

  // The walk is failure-static, so each agent's node sequence is identical
  // in every round; only payload growth differs with the readings.
  std::vector<std::vector<WalkLeg>> walks;
  walks.reserve(scenario.tasks.size());
  for (const auto& [agent, targets] : scenario.tasks)
    walks.push_back(
        plan_walk(topology, live, scenario.failed, agent, targets));

  TrafficReport report;
  std::vector<std::set<NodeId>> cached(scenario.tasks.size());

  for (int round = 1; round <= config.rounds; ++round) {
    TrafficReport::Round row;
    row.round = round;
    for (std::size_t a = 0; a < scenario.tasks.size(); ++a) {
      const Id& agent = scenario.tasks[a].first;
      double payload = 0.0;
      for (const WalkLeg& leg : walks[a]) {
        const bool deposit_code =
            leg.collect && cached[a].count(leg.to) == 0 && config.code_size > 0.0;
        const double code_bytes = deposit_code ? config.code_size : 0.0;
        row.bytes_mobile_agent += (payload + code_bytes) * leg.hops;
        report.legs.push_back(LegRecord{agent, round, leg.from, leg.to,
                                        payload, code_bytes, leg.hops,
                                        leg.cost});
        if (deposit_code) cached[a].insert(leg.to);
        if (leg.collect) {
          ++row.visits;
          const double reading =
              node_reading(config, topology, leg.to, round);
          const std::vector<double> neighbors = live_neighbor_readings(
              config, topology, scenario.failed, leg.to, round);
          if (filter_reading(reading, neighbors, config.fault_tolerance))
            payload += config.aggregation_ratio * config.raw_payload;
        }
      }
    }
    report.bytes_mobile_agent += row.bytes_mobile_agent;
    report.visits_total += row.visits;
    report.per_round.push_back(row);
  }
  return report;
}

TrafficReport run_client_server(const Scenario& scenario) {
  scenario.validate();
  const SimulationConfig& config = scenario.config;
  Topology live = scenario.topology.without(scenario.failed);

  std::set<NodeId> sources;
  for (const auto& [agent, targets] : scenario.tasks)
    for (NodeId n : targets)
      if (scenario.failed.count(n) == 0) sources.insert(n);

  ShortestPaths sp = dijkstra(live, live.sink);
  double per_round = 0.0;
  for (NodeId n : sources) {
    if (!sp.reachable(n))
      throw InfeasibleError("source node " + std::to_string(n) +
                            " unreachable from the sink");
    per_round += config.raw_payload * sp.hops[n];
  }

  TrafficReport report;
  for (int round = 1; round <= config.rounds; ++round) {
    TrafficReport::Round row;
    row.round = round;
    row.bytes_client_server = per_round;
    report.bytes_client_server += per_round;
    report.per_round.push_back(row);
  }
  return report;
}

TrafficReport run_comparison(const Scenario& scenario) {
  TrafficReport ma = run_mobile_agent(scenario);
  TrafficReport cs = run_client_server(scenario);

  TrafficReport merged = std::move(ma);
  merged.bytes_client_server = cs.bytes_client_server;
  for (std::size_t i = 0; i < merged.per_round.size(); ++i)
    merged.per_round[i].bytes_client_server =
        cs.per_round[i].bytes_client_server;
  if (merged.bytes_client_server > 0.0)
    merged.savings_fraction =
        1.0 - merged.bytes_mobile_agent / merged.bytes_client_server;
  return merged;
}

std::vector<SweepPoint> compare(const Scenario& scenario,
                                const SweepGrid& grid) {
  scenario.validate();
  std::vector<double> rhos =
      grid.rhos.empty() ? std::vector<double>{scenario.config.aggregation_ratio}
                        : grid.rhos;
  std::vector<double> codes =
      grid.code_sizes.empty() ? std::vector<double>{scenario.config.code_size}
                              : grid.code_sizes;
  std::vector<int> node_counts = grid.node_counts;
  if (node_counts.empty()) {
    node_counts.push_back(scenario.generator
                              ? scenario.generator->nodes
                              : static_cast<int>(scenario.topology.node_count()) - 1);
  } else if (!scenario.generator) {
    throw InputError(
        "node-count sweep requires a scenario with a generate directive");
  }

  std::vector<SweepPoint> points;
  for (double rho : rhos) {
    for (double code : codes) {
      for (int n : node_counts) {
        Scenario sc = scenario;
        sc.config.aggregation_ratio = rho;
        sc.config.code_size = code;
        if (scenario.generator && n != scenario.generator->nodes) {
          sc.generator->nodes = n;
          if (sc.generator->kind == "star") {
            sc.topology = make_star(n);
          } else {
            sc.topology = make_random_geometric(n, sc.generator->radius,
                                                sc.config.field_x,
                                                sc.config.field_y,
                                                sc.config.seed);
          }
          std::set<NodeId> all;
          for (const auto& [node, _] : sc.topology.adjacency)
            if (node != sc.topology.sink) all.insert(node);
          sc.tasks.clear();
          sc.tasks.emplace_back("A", std::move(all));
          sc.failed.clear();
        }
        TrafficReport r = run_comparison(sc);
        SweepPoint point;
        point.rho = rho;
        point.code_size = code;
        point.nodes = n;
        point.bytes_mobile_agent = r.bytes_mobile_agent;
        point.bytes_client_server = r.bytes_client_server;
        point.savings = r.savings_fraction;
        points.push_back(point);
      }
    }
  }
  return points;
}

}  // namespace macells
