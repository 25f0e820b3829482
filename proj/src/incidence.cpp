#include "macells/incidence.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "macells/error.hpp"

namespace macells {

namespace {

void check_unique(const std::vector<Id>& ids, const char* axis) {
  std::set<Id> seen;
  for (const Id& id : ids) {
    if (!seen.insert(id).second)
      throw InputError(std::string("duplicate ") + axis + " id '" + id + "'");
  }
}

// Splits a CSV line on commas and trims surrounding whitespace; the matrix
// format never needs quoting.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    std::size_t b = field.find_first_not_of(" \t\r");
    std::size_t e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? ""
                                            : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line_no,
                             const std::string& msg) {
  throw InputError(source + ":" + std::to_string(line_no) + ": " + msg);
}

}  // namespace

void IncidenceMatrix::validate() const {
  check_unique(routers, "router");
  check_unique(agents, "agent");
  if (entries.rows() != static_cast<Eigen::Index>(routers.size()) ||
      entries.cols() != static_cast<Eigen::Index>(agents.size()))
    throw InputError("incidence matrix shape does not match its labels");
  for (Eigen::Index i = 0; i < entries.rows(); ++i)
    for (Eigen::Index j = 0; j < entries.cols(); ++j)
      if (entries(i, j) != 0 && entries(i, j) != 1)
        throw InputError("incidence entry at router '" + routers[i] +
                         "', agent '" + agents[j] + "' is not 0 or 1");
}

IncidenceMatrix build_incidence_matrix(const RouteTables& route_tables,
                                       const std::vector<Id>& all_routers) {
  IncidenceMatrix m;
  m.routers = all_routers;
  check_unique(m.routers, "router");

  std::map<Id, Eigen::Index> row_of;
  for (std::size_t i = 0; i < all_routers.size(); ++i)
    row_of[all_routers[i]] = static_cast<Eigen::Index>(i);

  m.agents.reserve(route_tables.size());
  for (const auto& [agent, routers] : route_tables) m.agents.push_back(agent);
  check_unique(m.agents, "agent");

  m.entries = Eigen::MatrixXi::Zero(
      static_cast<Eigen::Index>(all_routers.size()),
      static_cast<Eigen::Index>(route_tables.size()));
  for (std::size_t j = 0; j < route_tables.size(); ++j) {
    const auto& [agent, routers] = route_tables[j];
    for (const Id& r : routers) {
      auto it = row_of.find(r);
      if (it == row_of.end())
        throw InputError("route table for agent '" + agent +
                         "' names unknown router '" + r + "'");
      m.entries(it->second, static_cast<Eigen::Index>(j)) = 1;
    }
  }
  return m;
}

IncidenceMatrix read_incidence_csv(std::istream& in,
                                   const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;

  // Header: `router,<agent ids...>`.
  if (!std::getline(in, line))
    parse_fail(source_name, 1, "empty file, expected `router,<agents>` header");
  ++line_no;
  std::vector<std::string> header = split_csv(line);
  if (header.empty() || header[0] != "router")
    parse_fail(source_name, line_no,
               "header must start with `router`, got '" +
                   (header.empty() ? std::string() : header[0]) + "'");

  IncidenceMatrix m;
  m.agents.assign(header.begin() + 1, header.end());
  if (m.agents.empty())
    parse_fail(source_name, line_no, "header names no agent columns");
  for (std::size_t j = 0; j < m.agents.size(); ++j)
    if (m.agents[j].empty())
      parse_fail(source_name, line_no,
                 "empty agent id in header column " + std::to_string(j + 2));

  std::vector<std::vector<int>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> fields = split_csv(line);
    if (fields.size() != m.agents.size() + 1)
      parse_fail(source_name, line_no,
                 "expected " + std::to_string(m.agents.size() + 1) +
                     " fields, got " + std::to_string(fields.size()));
    if (fields[0].empty()) parse_fail(source_name, line_no, "empty router id");
    m.routers.push_back(fields[0]);
    std::vector<int> row;
    for (std::size_t j = 1; j < fields.size(); ++j) {
      if (fields[j] == "0")
        row.push_back(0);
      else if (fields[j] == "1")
        row.push_back(1);
      else
        parse_fail(source_name, line_no,
                   "entry '" + fields[j] + "' in column " +
                       std::to_string(j + 1) + " is not 0 or 1");
    }
    rows.push_back(std::move(row));
  }

  m.entries = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(rows.size()),
                                    static_cast<Eigen::Index>(m.agents.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  m.validate();
  return m;
}

IncidenceMatrix read_incidence_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open matrix file '" + path + "'");
  return read_incidence_csv(in, path);
}

void write_incidence_csv(std::ostream& out, const IncidenceMatrix& m) {
  out << "router";
  for (const Id& a : m.agents) out << ',' << a;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << m.routers[i];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << m.entries(i, j);
    out << '\n';
  }
}

}  // namespace macells
