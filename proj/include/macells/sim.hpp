#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "macells/graph.hpp"
#include "macells/ids.hpp"
#include "macells/incidence.hpp"

namespace macells {

// Knobs of one simulation run. Traffic is measured in byte-hops: every leg
// contributes (bytes carried) x (hop count of its shortest path).
struct SimulationConfig {
  double field_x = 100.0;
  double field_y = 100.0;
  int rounds = 1;
  double aggregation_ratio = 1.0;  // rho in (0,1]: bytes kept per raw byte
  double code_size = 0.0;          // agent code bytes, cached after first visit
  double raw_payload = 100.0;      // bytes of one raw reading
  double fault_tolerance = 2.0;    // delta of the neighbor-envelope filter
  double fault_rate = 0.0;         // probability a reading is injected faulty
  double duplication_tau = 1.0 / 3.0;
  std::uint64_t seed = 1;

  // Throws InputError when a field is out of range.
  void validate() const;
};

// Tasks: one (agent id, target router set) per agent, in scenario order.
using TaskList = std::vector<std::pair<Id, std::set<NodeId>>>;

// A parsed scenario: configuration, topology, per-agent tasks, and nodes
// marked failed before the run starts.
struct Scenario {
  SimulationConfig config;
  Topology topology;
  TaskList tasks;
  std::set<NodeId> failed;
  // Set when the topology came from a `generate` directive; enables sweeps
  // that rebuild the topology for different node counts.
  struct Generator {
    std::string kind;  // "star" or "geometric"
    int nodes = 0;
    double radius = 0.0;
  };
  std::optional<Generator> generator;

  void validate() const;
};

// Line-oriented scenario text: `field X Y`, `node id x y`, `edge u v w`,
// `sink id`, `generate star N` / `generate geometric N RADIUS`,
// `task AGENT id id ...`, `failed id ...`, plus `rounds`, `rho`,
// `code_size`, `raw_payload`, `delta`, `fault_rate`, `tau`, `seed`.
// '#' starts a comment. Errors carry source name and line number.
Scenario parse_scenario(std::istream& in, const std::string& source_name);
Scenario parse_scenario_file(const std::string& path);

// Mobile-agent packet state as it migrates: dispatching sink, per-dispatch
// sequence number, itinerary with cursor, accumulated payload, carried code.
struct MAPacket {
  Id agent;
  NodeId sink_id = 0;
  long ma_seq_num = 0;
  Itinerary src_list;
  std::size_t next_src = 0;  // mirrors src_list.next_index
  double payload = 0.0;
  double code_size = 0.0;
};

// Per-node simulation state.
struct NodeState {
  std::map<int, double> readings;  // round -> sensed value
  bool code_cached = false;
  double raw_payload_size = 0.0;
  std::set<NodeId> neighbor_ids;
};

// One agent movement with its byte accounting.
struct LegRecord {
  Id agent;
  int round = 0;
  NodeId from = 0;
  NodeId to = 0;
  double payload_bytes = 0.0;
  double code_bytes = 0.0;
  int hops = 0;
  double cost = 0.0;
};

// Byte-hop totals for a run, plus enough breakdown to audit them: per-round
// rows sum exactly to the totals and `legs` replays every agent movement.
struct TrafficReport {
  double bytes_client_server = 0.0;
  double bytes_mobile_agent = 0.0;
  long visits_total = 0;  // agent arrivals at source nodes
  std::optional<double> savings_fraction;  // 1 - MA/baseline when both ran

  struct Round {
    int round = 0;
    double bytes_client_server = 0.0;
    double bytes_mobile_agent = 0.0;
    long visits = 0;
  };
  std::vector<Round> per_round;
  std::vector<LegRecord> legs;
};

// Result of dispatching one round of agents from the sink.
struct DispatchResult {
  std::vector<MAPacket> packets;  // one per task, in task order
  RouteTables route_tables;       // agent -> routers actually visited
  long next_seq = 1;              // first unused sequence number
};

// Plans one packet per task: itinerary = LCF over the task's targets from
// the sink, sequence numbers first_seq, first_seq+1, ... in task order.
// Failed nodes are detoured (see run_mobile_agent); unreachable targets are
// rejected naming agent and target.
DispatchResult dispatch_round(const SimulationConfig& config,
                              const Topology& topology, const TaskList& tasks,
                              const std::set<NodeId>& failed = {},
                              long first_seq = 1);

// Neighbor-envelope fault filter: accepted iff
// min(neighbors) - delta <= reading <= max(neighbors) + delta.
// An empty neighbor list is rejected (nothing to judge against).
bool filter_reading(double reading, const std::vector<double>& neighbors,
                    double delta);

// Deterministic synthetic sensor field: seeded per-node base values smoothed
// over neighbors so the fault filter is meaningful, small per-round jitter,
// and faults injected at config.fault_rate as large outliers.
double node_reading(const SimulationConfig& config, const Topology& topology,
                    NodeId node, int round);

// Simulates `config.rounds` mobile-agent rounds: agents walk their LCF
// itineraries, carry code to uncached nodes, filter readings against
// neighbors, grow payload by rho x raw per accepted reading, and return the
// payload to the sink. Fills the mobile-agent side of the report.
TrafficReport run_mobile_agent(const Scenario& scenario);

// Client/server baseline: every distinct target node ships raw readings to
// the sink each round along its shortest path, unfiltered and unaggregated.
TrafficReport run_client_server(const Scenario& scenario);

// Runs both models on one scenario and fills savings_fraction
// (1 - MA/baseline); savings is absent when the baseline is zero.
TrafficReport run_comparison(const Scenario& scenario);

// Sweep grid over aggregation ratio, code size, and (for generated
// topologies) node count. Empty axes default to the scenario's own value.
struct SweepGrid {
  std::vector<double> rhos;
  std::vector<double> code_sizes;
  std::vector<int> node_counts;
};

struct SweepPoint {
  double rho = 0.0;
  double code_size = 0.0;
  int nodes = 0;
  double bytes_mobile_agent = 0.0;
  double bytes_client_server = 0.0;
  std::optional<double> savings;  // absent when the baseline is degenerate
};

// Evaluates the grid in sweep order (rho outermost, then code size, then
// node count). Node-count sweeps require a generated topology.
std::vector<SweepPoint> compare(const Scenario& scenario,
                                const SweepGrid& grid);

}  // namespace macells
