#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "macells/ids.hpp"

namespace macells {

// Binary router-by-agent incidence matrix: entry (i, j) is 1 when agent j's
// task visits router i. Row and column order mirror the input that built the
// matrix; all clustering results are invariant to that order.
struct IncidenceMatrix {
  std::vector<Id> routers;  // row labels
  std::vector<Id> agents;   // column labels
  Eigen::MatrixXi entries;  // routers.size() x agents.size(), values in {0,1}

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
  int at(Eigen::Index i, Eigen::Index j) const { return entries(i, j); }
  long ones() const { return entries.sum(); }

  // Throws InputError on duplicate labels, label/dimension mismatch, or any
  // entry outside {0, 1}.
  void validate() const;
};

// One route table per agent: (agent id, routers its task visits), in input
// order. Duplicate routers within one table are tolerated and collapse.
using RouteTables = std::vector<std::pair<Id, std::vector<Id>>>;

// Builds the incidence matrix with rows following all_routers and columns
// following route_tables order. A route table naming a router that is not in
// all_routers is rejected with the offending (agent, router) pair.
IncidenceMatrix build_incidence_matrix(const RouteTables& route_tables,
                                       const std::vector<Id>& all_routers);

// CSV with header `router,<agent ids...>`; one row per router: id then 0/1
// entries. Parse errors carry the source name and 1-based line number.
IncidenceMatrix read_incidence_csv(std::istream& in,
                                   const std::string& source_name);
IncidenceMatrix read_incidence_csv_file(const std::string& path);
void write_incidence_csv(std::ostream& out, const IncidenceMatrix& m);

}  // namespace macells
