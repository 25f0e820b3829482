#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "macells/ids.hpp"
#include "macells/incidence.hpp"

namespace macells {

// How cluster_matrix searches for a partition.
enum class ClusterMode {
  // Rank-order row/column sorting to a fixed point, efficacy-optimal
  // contiguous block cuts, then majority-vote refinement. Fast; reproduces
  // the reference partitions of widely used benchmark incidence matrices.
  kRankOrder,
  // Exact search over every partition (small matrices only): maximizes
  // grouping efficacy by brute force.
  kExhaustive,
};

struct ClusterConfig {
  ClusterMode mode = ClusterMode::kRankOrder;
  // Fixed number of clusters; by default every feasible count is searched.
  std::optional<int> cluster_count;
  // Share of an agent's visits that a foreign cell must hold before the
  // agent is duplicated into that cell's family.
  double duplication_tau = 1.0 / 3.0;
};

// A hard assignment of routers and agents to clusters 0..count-1. Rows and
// columns that are all zero may be left unassigned; everything with at least
// one 1-entry must be covered, and ids unknown to the matrix are rejected.
struct Partition {
  std::map<Id, int, IdLess> router_cluster;
  std::map<Id, int, IdLess> agent_cluster;
  int count = 0;
};

// Exact ingredients of grouping efficacy (e - e_out) / (e + e_void).
struct EfficacyCounts {
  long ones = 0;         // e: 1-entries in the matrix
  long exceptional = 0;  // e_out: 1-entries outside every diagonal block
  long voids = 0;        // e_void: 0-entries inside diagonal blocks
  double value() const {
    return static_cast<double>(ones - exceptional) /
           static_cast<double>(ones + voids);
  }
};

struct Cluster {
  std::vector<Id> cell;    // routers, id-sorted
  std::vector<Id> family;  // agents whose primary cluster this is, id-sorted
};

// Result of cell formation over an incidence matrix.
struct CellFormation {
  std::vector<Cluster> clusters;  // ordered by lowest router id in the cell
  Partition partition;            // primary assignment backing `clusters`
  // 1-entries (router, agent) lying outside every diagonal block, sorted.
  std::vector<std::pair<Id, Id>> exceptional;
  std::vector<Id> bottleneck_routers;  // routers with >= 1 exceptional entry
  std::vector<Id> exceptional_agents;  // agents with >= 1 exceptional entry
  // Agent -> additional clusters (0-based) whose cells hold at least a tau
  // share of the agent's visits.
  std::map<Id, std::vector<int>, IdLess> duplicated_agents;
  std::vector<Id> zero_routers;  // all-zero rows, kept out of every cell
  std::vector<Id> zero_agents;   // all-zero columns, kept out of families
  EfficacyCounts efficacy;

  // Family of cluster k including agents duplicated into it. An agent
  // appears in more than one of these exactly when it is duplicated.
  std::vector<Id> family_with_duplicates(int k) const;
};

// Partitions the matrix into router cells and agent families. The matrix
// must have at least one 1-entry; all-zero matrices are infeasible. Zero
// rows/columns are excluded from the partition and reported on the side.
CellFormation cluster_matrix(const IncidenceMatrix& m,
                             const ClusterConfig& config = {});

// The 1-entries outside every diagonal block of the partition; each agent is
// evaluated in its primary cluster only.
std::vector<std::pair<Id, Id>> exceptional_elements(const IncidenceMatrix& m,
                                                    const Partition& p);

// Grouping efficacy of the partition; rejects matrices with no 1-entries.
EfficacyCounts grouping_efficacy(const IncidenceMatrix& m, const Partition& p);

// Agents whose visit share inside a non-primary cell reaches tau, mapped to
// those extra cluster indices (0-based, ascending). Requires 0 <= tau <= 1.
std::map<Id, std::vector<int>, IdLess> duplicated_agents(
    const IncidenceMatrix& m, const Partition& p, double tau);

}  // namespace macells
