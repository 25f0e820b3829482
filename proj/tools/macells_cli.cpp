// Command-line front end: cell formation over incidence matrices, weighted
// feature clustering, itinerary planning, and traffic simulation, glued into
// a reproducible pipeline. Every command writes a machine-readable .kv file
// and a human-readable .report.txt, both embedding the run manifest; reruns
// with the same inputs produce byte-identical files.

#include "CLI11.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "macells/cell_formation.hpp"
#include "macells/criteria.hpp"
#include "macells/error.hpp"
#include "macells/graph.hpp"
#include "macells/ids.hpp"
#include "macells/incidence.hpp"
#include "macells/report.hpp"
#include "macells/sim.hpp"

namespace fs = std::filesystem;
using namespace macells;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// Options shared by every command.
struct Common {
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string format = "text";
};

std::string flatten(std::string msg) {
  for (char& c : msg)
    if (c == '\n' || c == '\r') c = ' ';
  return msg;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw InputError("write to '" + path.string() + "' failed");
}

// Writes the kv + text pair for one command and mirrors the text report to
// stdout.
void write_outputs(const Common& common, const std::string& stem,
                   const std::string& kv, const std::string& text,
                   const std::vector<std::pair<std::string, std::string>>&
                       extra_files = {}) {
  std::error_code ec;
  fs::create_directories(common.out_dir, ec);
  if (ec)
    throw InputError("cannot create output directory '" + common.out_dir +
                     "': " + ec.message());
  const fs::path dir(common.out_dir);
  write_file(dir / (stem + ".kv"), kv);
  write_file(dir / (stem + ".report.txt"), text);
  for (const auto& [name, content] : extra_files)
    write_file(dir / name, content);
  std::cout << text;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) {
      parts.emplace_back();
      continue;
    }
    const auto e = item.find_last_not_of(" \t");
    parts.push_back(item.substr(b, e - b + 1));
  }
  return parts;
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw InputError("cannot parse " + what + " '" + text + "' as a number");
  }
}

long parse_long(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw InputError("cannot parse " + what + " '" + text +
                     "' as an integer");
  }
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> values;
  for (const std::string& part : split_commas(text))
    values.push_back(parse_double(part, what));
  if (values.empty()) throw InputError(what + " list is empty");
  return values;
}

std::vector<int> parse_int_list(const std::string& text,
                                const std::string& what) {
  std::vector<int> values;
  for (const std::string& part : split_commas(text))
    values.push_back(static_cast<int>(parse_long(part, what)));
  if (values.empty()) throw InputError(what + " list is empty");
  return values;
}

NodeId node_id_of(const Id& id) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(id, &used);
    if (used != id.size()) throw std::invalid_argument(id);
    return v;
  } catch (const std::exception&) {
    throw InputError("router id '" + id + "' is not a node id");
  }
}

std::string node_list(const std::vector<NodeId>& nodes) {
  std::vector<std::string> parts;
  parts.reserve(nodes.size());
  for (NodeId n : nodes) parts.push_back(std::to_string(n));
  return join(parts, ",");
}

std::string or_none(const std::string& joined) {
  return joined.empty() ? "(none)" : joined;
}

// ---------------------------------------------------------------------------
// Cell-formation rendering shared by cluster-matrix and pipeline.
// ---------------------------------------------------------------------------

// Rows grouped by cell, columns grouped by family, zero rows/columns last.
IncidenceMatrix permuted_matrix(const IncidenceMatrix& m,
                                const CellFormation& cf) {
  std::map<Id, Eigen::Index> row_of, col_of;
  for (Eigen::Index i = 0; i < m.rows(); ++i) row_of[m.routers[i]] = i;
  for (Eigen::Index j = 0; j < m.cols(); ++j) col_of[m.agents[j]] = j;

  IncidenceMatrix p;
  for (const Cluster& c : cf.clusters) {
    for (const Id& r : c.cell) p.routers.push_back(r);
    for (const Id& a : c.family) p.agents.push_back(a);
  }
  for (const Id& r : cf.zero_routers) p.routers.push_back(r);
  for (const Id& a : cf.zero_agents) p.agents.push_back(a);

  p.entries.resize(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < p.entries.rows(); ++i)
    for (Eigen::Index j = 0; j < p.entries.cols(); ++j)
      p.entries(i, j) = m.entries(row_of.at(p.routers[i]), col_of.at(p.agents[j]));
  return p;
}

std::string cluster_of_router(const CellFormation& cf, const Id& r) {
  const auto it = cf.partition.router_cluster.find(r);
  return it == cf.partition.router_cluster.end()
             ? std::string("-")
             : std::to_string(it->second + 1);
}

std::string cluster_of_agent(const CellFormation& cf, const Id& a) {
  const auto it = cf.partition.agent_cluster.find(a);
  return it == cf.partition.agent_cluster.end()
             ? std::string("-")
             : std::to_string(it->second + 1);
}

void emit_cell_formation(KvWriter& kv, const std::string& prefix,
                         const IncidenceMatrix& m, const CellFormation& cf) {
  kv.put(prefix + "clusters.count", static_cast<long>(cf.clusters.size()));
  for (std::size_t k = 0; k < cf.clusters.size(); ++k) {
    const std::string base = prefix + "cluster." + std::to_string(k + 1);
    kv.put_list(base + ".cell", cf.clusters[k].cell);
    kv.put_list(base + ".family", cf.clusters[k].family);
    kv.put_list(base + ".family_with_duplicates",
                cf.family_with_duplicates(static_cast<int>(k)));
  }

  kv.put(prefix + "efficacy.ones", cf.efficacy.ones);
  kv.put(prefix + "efficacy.exceptional", cf.efficacy.exceptional);
  kv.put(prefix + "efficacy.voids", cf.efficacy.voids);
  kv.put(prefix + "efficacy.value", cf.efficacy.value());

  kv.put(prefix + "exceptional.count",
         static_cast<long>(cf.exceptional.size()));
  for (std::size_t i = 0; i < cf.exceptional.size(); ++i)
    kv.put(prefix + "exceptional." + std::to_string(i + 1),
           cf.exceptional[i].first + "," + cf.exceptional[i].second);
  kv.put_list(prefix + "bottleneck_routers", cf.bottleneck_routers);
  kv.put_list(prefix + "exceptional_agents", cf.exceptional_agents);

  kv.put(prefix + "duplicated.count",
         static_cast<long>(cf.duplicated_agents.size()));
  for (const auto& [agent, extras] : cf.duplicated_agents) {
    std::vector<std::string> labels;
    for (int k : extras) labels.push_back(std::to_string(k + 1));
    kv.put_list(prefix + "duplicated." + agent, labels);
  }
  kv.put_list(prefix + "zero_routers", cf.zero_routers);
  kv.put_list(prefix + "zero_agents", cf.zero_agents);

  const IncidenceMatrix p = permuted_matrix(m, cf);
  kv.put_list(prefix + "matrix.router_order", p.routers);
  kv.put_list(prefix + "matrix.agent_order", p.agents);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      row.push_back(std::to_string(p.at(i, j)));
    kv.put_list(prefix + "matrix.row." + p.routers[i], row);
  }
}

std::string cell_formation_text(const IncidenceMatrix& m,
                                const CellFormation& cf) {
  std::ostringstream out;

  out << "clusters\n";
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"cluster", "cell (routers)", "family (agents)",
                  "family with duplicates"});
  for (std::size_t k = 0; k < cf.clusters.size(); ++k)
    rows.push_back({std::to_string(k + 1), join(cf.clusters[k].cell, ","),
                    join(cf.clusters[k].family, ","),
                    join(cf.family_with_duplicates(static_cast<int>(k)), ",")});
  out << render_table(rows) << '\n';

  const IncidenceMatrix p = permuted_matrix(m, cf);
  out << "permuted incidence matrix (rows grouped by cell, columns by "
         "family)\n";
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head = {"cluster", "router"};
  head.insert(head.end(), p.agents.begin(), p.agents.end());
  grid.push_back(head);
  std::vector<std::string> fam = {"", "(family)"};
  for (const Id& a : p.agents) fam.push_back(cluster_of_agent(cf, a));
  grid.push_back(fam);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    std::vector<std::string> row = {cluster_of_router(cf, p.routers[i]),
                                    p.routers[i]};
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      row.push_back(p.at(i, j) ? "1" : ".");
    grid.push_back(row);
  }
  out << render_table(grid) << '\n';

  out << "grouping efficacy: (" << cf.efficacy.ones << " - "
      << cf.efficacy.exceptional << ") / (" << cf.efficacy.ones << " + "
      << cf.efficacy.voids << ") = " << format_fixed(cf.efficacy.value())
      << '\n';

  std::vector<std::string> pairs;
  for (const auto& [r, a] : cf.exceptional)
    pairs.push_back("(" + r + "," + a + ")");
  out << "exceptional elements: " << or_none(join(pairs, " ")) << '\n';
  out << "bottleneck routers: " << or_none(join(cf.bottleneck_routers, ","))
      << '\n';
  out << "exceptional agents: " << or_none(join(cf.exceptional_agents, ","))
      << '\n';

  std::vector<std::string> dups;
  for (const auto& [agent, extras] : cf.duplicated_agents) {
    std::vector<std::string> labels;
    for (int k : extras) labels.push_back(std::to_string(k + 1));
    dups.push_back(agent + " -> " + join(labels, ","));
  }
  out << "duplicated agents: " << or_none(join(dups, "; ")) << '\n';
  out << "zero routers: " << or_none(join(cf.zero_routers, ",")) << '\n';
  out << "zero agents: " << or_none(join(cf.zero_agents, ",")) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// cluster-matrix
// ---------------------------------------------------------------------------

struct ClusterMatrixArgs {
  std::string matrix_path;
  std::string mode = "rank-order";
  double tau = 1.0 / 3.0;
  int clusters = 0;  // 0 = search every feasible count
};

void run_cluster_matrix(const Common& common, const ClusterMatrixArgs& args) {
  ClusterConfig config;
  if (args.mode == "rank-order" || args.mode == "rank") {
    config.mode = ClusterMode::kRankOrder;
  } else if (args.mode == "exhaustive" || args.mode == "exact") {
    config.mode = ClusterMode::kExhaustive;
  } else {
    throw InputError("unknown mode '" + args.mode +
                     "' (expected rank-order or exhaustive)");
  }
  config.duplication_tau = args.tau;
  if (args.clusters > 0) config.cluster_count = args.clusters;

  const IncidenceMatrix m = read_incidence_csv_file(args.matrix_path);
  const CellFormation cf = cluster_matrix(m, config);

  RunManifest manifest;
  manifest.command = "cluster-matrix";
  manifest.tool_version = kToolVersion;
  manifest.inputs = {args.matrix_path};
  manifest.parameters = {
      {"mode", config.mode == ClusterMode::kRankOrder ? "rank-order"
                                                      : "exhaustive"},
      {"tau", format_fixed(config.duplication_tau)},
      {"clusters",
       config.cluster_count ? std::to_string(*config.cluster_count) : "auto"},
      {"format", common.format},
  };
  manifest.outputs = {"cluster_matrix.kv", "cluster_matrix.report.txt"};
  std::vector<std::pair<std::string, std::string>> extras;
  if (common.format == "csv") {
    manifest.outputs.push_back("cluster_matrix.csv");
    std::ostringstream csv;
    write_incidence_csv(csv, permuted_matrix(m, cf));
    extras.emplace_back("cluster_matrix.csv", csv.str());
  }

  KvWriter kv;
  manifest.write_to(kv);
  emit_cell_formation(kv, "", m, cf);

  std::ostringstream text;
  text << manifest.to_text() << '\n' << cell_formation_text(m, cf);
  write_outputs(common, "cluster_matrix", kv.str(), text.str(), extras);
}

// ---------------------------------------------------------------------------
// cluster-features
// ---------------------------------------------------------------------------

struct ClusterFeaturesArgs {
  std::string features_path;
  int clusters = 0;
  std::string weights;       // comma list
  std::string weights_file;  // one-line CSV
  int max_iterations = 100;
};

Eigen::VectorXd resolve_weights(const ClusterFeaturesArgs& args,
                                Eigen::Index criteria) {
  std::vector<double> values;
  if (!args.weights.empty()) {
    values = parse_double_list(args.weights, "criterion weight");
  } else if (!args.weights_file.empty()) {
    std::ifstream in(args.weights_file);
    if (!in)
      throw InputError("cannot open weights file '" + args.weights_file + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos)
        line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      values = parse_double_list(line, "criterion weight");
      break;
    }
    if (values.empty())
      throw InputError("weights file '" + args.weights_file +
                       "' has no weight line");
  } else {
    return Eigen::VectorXd::Ones(criteria);
  }
  if (static_cast<Eigen::Index>(values.size()) != criteria)
    throw InputError("expected " + std::to_string(criteria) +
                     " weights, got " + std::to_string(values.size()));
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

void run_cluster_features(const Common& common,
                          const ClusterFeaturesArgs& args) {
  const FeatureTable table = read_features_csv_file(args.features_path);
  const Eigen::VectorXd weights =
      resolve_weights(args, table.values.cols());
  FeatureClusterConfig config;
  config.max_iterations = args.max_iterations;
  const FeatureClustering fc =
      cluster_features(table.values, args.clusters, weights, config);

  std::vector<std::string> weight_strings;
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    weight_strings.push_back(format_fixed(weights[i]));

  RunManifest manifest;
  manifest.command = "cluster-features";
  manifest.tool_version = kToolVersion;
  manifest.inputs = {args.features_path};
  if (!args.weights_file.empty())
    manifest.inputs.push_back(args.weights_file);
  manifest.parameters = {
      {"clusters", std::to_string(args.clusters)},
      {"weights", join(weight_strings, ",")},
      {"max_iterations", std::to_string(args.max_iterations)},
      {"format", common.format},
  };
  manifest.outputs = {"cluster_features.kv", "cluster_features.report.txt"};
  std::vector<std::pair<std::string, std::string>> extras;
  if (common.format == "csv") {
    manifest.outputs.push_back("cluster_features.csv");
    std::ostringstream csv;
    csv << csv_line({"agent", "cluster"}) << '\n';
    for (std::size_t i = 0; i < table.agents.size(); ++i)
      csv << csv_line({table.agents[i],
                       std::to_string(fc.assignment[i] + 1)})
          << '\n';
    extras.emplace_back("cluster_features.csv", csv.str());
  }

  KvWriter kv;
  manifest.write_to(kv);
  kv.put("clusters.count", static_cast<long>(args.clusters));
  kv.put_list("criteria", table.criteria);
  kv.put_list("weights", weight_strings);
  for (Eigen::Index k = 0; k < fc.centers.rows(); ++k) {
    std::vector<std::string> coords;
    for (Eigen::Index j = 0; j < fc.centers.cols(); ++j)
      coords.push_back(format_fixed(fc.centers(k, j)));
    kv.put_list("center." + std::to_string(k + 1), coords);
  }
  for (std::size_t k = 0; k < fc.members.size(); ++k) {
    std::vector<std::string> ids;
    for (int i : fc.members[k]) ids.push_back(table.agents[i]);
    kv.put_list("cluster." + std::to_string(k + 1) + ".members", ids);
  }
  for (std::size_t i = 0; i < table.agents.size(); ++i)
    kv.put("assignment." + table.agents[i],
           static_cast<long>(fc.assignment[i] + 1));
  kv.put("ssq.final", fc.within_ssq);
  std::vector<std::string> trace;
  for (double v : fc.ssq_trace) trace.push_back(format_fixed(v));
  kv.put_list("ssq.trace", trace);
  kv.put("iterations", static_cast<long>(fc.iterations));
  kv.put("converged", static_cast<long>(fc.converged ? 1 : 0));

  std::ostringstream text;
  text << manifest.to_text() << '\n';
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head = {"cluster", "members"};
  head.insert(head.end(), table.criteria.begin(), table.criteria.end());
  rows.push_back(head);
  for (Eigen::Index k = 0; k < fc.centers.rows(); ++k) {
    std::vector<std::string> ids;
    for (int i : fc.members[static_cast<std::size_t>(k)])
      ids.push_back(table.agents[i]);
    std::vector<std::string> row = {std::to_string(k + 1), join(ids, ",")};
    for (Eigen::Index j = 0; j < fc.centers.cols(); ++j)
      row.push_back(format_fixed(fc.centers(k, j)));
    rows.push_back(row);
  }
  text << "cluster centers and members\n" << render_table(rows) << '\n';
  text << "within-cluster weighted SSQ: " << format_fixed(fc.within_ssq)
       << " after " << fc.iterations << " iteration(s)"
       << (fc.converged ? "" : " (iteration limit hit)") << '\n';
  write_outputs(common, "cluster_features", kv.str(), text.str(), extras);
}

// ---------------------------------------------------------------------------
// plan
// ---------------------------------------------------------------------------

struct PlanArgs {
  std::string topology_path;
  int start = 0;
  bool start_set = false;
  std::string targets;  // comma list; empty = full management sweep
  bool all_pairs = false;
};

void run_plan(const Common& common, const PlanArgs& args) {
  const Topology t = parse_topology_file(args.topology_path);
  const NodeId start = args.start_set ? args.start : t.sink;

  RunManifest manifest;
  manifest.command = "plan";
  manifest.tool_version = kToolVersion;
  manifest.inputs = {args.topology_path};
  manifest.parameters = {
      {"start", std::to_string(start)},
      {"targets", args.targets.empty() ? "all" : args.targets},
      {"all_pairs", args.all_pairs ? "1" : "0"},
      {"format", common.format},
  };
  manifest.outputs = {"plan.kv", "plan.report.txt"};
  if (common.format == "csv") manifest.outputs.push_back("plan.csv");

  KvWriter kv;
  manifest.write_to(kv);
  kv.put("sink", static_cast<long>(t.sink));
  kv.put_list("nodes", [&] {
    std::vector<std::string> ids;
    for (NodeId n : t.node_ids()) ids.push_back(std::to_string(n));
    return ids;
  }());

  std::ostringstream text;
  text << manifest.to_text() << '\n';

  Itinerary itinerary;
  if (args.targets.empty()) {
    const LoadSweep sweep = load_management_sweep(t);
    itinerary = sweep.tour;

    const ShortestPaths& from_sink = sweep.tables.at(t.sink);
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"node", "dist", "hops", "path"});
    for (NodeId n : t.node_ids()) {
      kv.put("route." + std::to_string(n) + ".dist", from_sink.dist.at(n));
      kv.put("route." + std::to_string(n) + ".hops",
             static_cast<long>(from_sink.hops.at(n)));
      kv.put("route." + std::to_string(n) + ".path",
             node_list(from_sink.path_to(n)));
      rows.push_back({std::to_string(n), format_fixed(from_sink.dist.at(n)),
                      std::to_string(from_sink.hops.at(n)),
                      node_list(from_sink.path_to(n))});
    }
    text << "shortest paths from sink " << t.sink << '\n'
         << render_table(rows) << '\n';

    if (args.all_pairs) {
      std::vector<std::vector<std::string>> grid;
      std::vector<std::string> head = {"dist"};
      for (NodeId v : t.node_ids()) head.push_back(std::to_string(v));
      grid.push_back(head);
      for (NodeId u : t.node_ids()) {
        std::vector<std::string> row = {std::to_string(u)};
        std::vector<std::string> cells;
        for (NodeId v : t.node_ids()) {
          row.push_back(format_fixed(sweep.tables.at(u).dist.at(v)));
          cells.push_back(format_fixed(sweep.tables.at(u).dist.at(v)));
        }
        kv.put_list("pairs." + std::to_string(u), cells);
        grid.push_back(row);
      }
      text << "all-pairs distances\n" << render_table(grid) << '\n';
    }
  } else {
    std::set<NodeId> targets;
    for (int v : parse_int_list(args.targets, "target node")) targets.insert(v);
    itinerary = lcf_itinerary(t, start, targets);
  }

  kv.put("itinerary.start", static_cast<long>(start));
  kv.put("itinerary.order", node_list(itinerary.order));
  kv.put("itinerary.total_cost", itinerary.total_cost);
  kv.put("itinerary.total_hops", static_cast<long>(itinerary.total_hops));
  for (std::size_t i = 0; i < itinerary.legs.size(); ++i) {
    const Leg& leg = itinerary.legs[i];
    const std::string base = "itinerary.leg." + std::to_string(i + 1);
    kv.put(base + ".from", static_cast<long>(leg.from));
    kv.put(base + ".to", static_cast<long>(leg.to));
    kv.put(base + ".cost", leg.cost);
    kv.put(base + ".hops", static_cast<long>(leg.hops));
  }

  std::vector<std::vector<std::string>> legs_rows;
  legs_rows.push_back({"leg", "from", "to", "cost", "hops"});
  for (std::size_t i = 0; i < itinerary.legs.size(); ++i) {
    const Leg& leg = itinerary.legs[i];
    legs_rows.push_back({std::to_string(i + 1), std::to_string(leg.from),
                         std::to_string(leg.to), format_fixed(leg.cost),
                         std::to_string(leg.hops)});
  }
  text << "itinerary from node " << start << ": "
       << or_none(node_list(itinerary.order)) << '\n'
       << render_table(legs_rows)
       << "total: cost " << format_fixed(itinerary.total_cost) << ", "
       << itinerary.total_hops << " hop(s)\n";

  std::vector<std::pair<std::string, std::string>> extras;
  if (common.format == "csv") {
    std::ostringstream csv;
    csv << csv_line({"leg", "from", "to", "cost", "hops"}) << '\n';
    for (std::size_t i = 0; i < itinerary.legs.size(); ++i) {
      const Leg& leg = itinerary.legs[i];
      csv << csv_line({std::to_string(i + 1), std::to_string(leg.from),
                       std::to_string(leg.to), format_fixed(leg.cost),
                       std::to_string(leg.hops)})
          << '\n';
    }
    extras.emplace_back("plan.csv", csv.str());
  }
  write_outputs(common, "plan", kv.str(), text.str(), extras);
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario_path;
  int rounds = 0;
  bool rounds_set = false;
  bool sweep = false;
  std::string sweep_rho;
  std::string sweep_code;
  std::string sweep_nodes;
};

void emit_config(KvWriter& kv, const SimulationConfig& c) {
  kv.put("config.rounds", static_cast<long>(c.rounds));
  kv.put("config.rho", c.aggregation_ratio);
  kv.put("config.code_size", c.code_size);
  kv.put("config.raw_payload", c.raw_payload);
  kv.put("config.delta", c.fault_tolerance);
  kv.put("config.fault_rate", c.fault_rate);
  kv.put("config.seed", c.seed);
}

std::vector<std::pair<std::string, std::string>> config_parameters(
    const SimulationConfig& c) {
  return {
      {"rounds", std::to_string(c.rounds)},
      {"rho", format_fixed(c.aggregation_ratio)},
      {"code_size", format_fixed(c.code_size)},
      {"raw_payload", format_fixed(c.raw_payload)},
      {"delta", format_fixed(c.fault_tolerance)},
      {"fault_rate", format_fixed(c.fault_rate)},
      {"seed", std::to_string(c.seed)},
  };
}

std::string savings_text(const std::optional<double>& savings) {
  return savings ? format_fixed(*savings) : std::string("n/a");
}

void run_simulate(const Common& common, const SimulateArgs& args) {
  Scenario sc = parse_scenario_file(args.scenario_path);
  if (args.rounds_set) sc.config.rounds = args.rounds;
  if (common.seed_set) sc.config.seed = common.seed;
  sc.validate();

  const bool sweeping = args.sweep || !args.sweep_rho.empty() ||
                        !args.sweep_code.empty() || !args.sweep_nodes.empty();

  RunManifest manifest;
  manifest.command = "simulate";
  manifest.tool_version = kToolVersion;
  manifest.inputs = {args.scenario_path};
  manifest.parameters = config_parameters(sc.config);
  manifest.parameters.emplace_back("sweep", sweeping ? "1" : "0");
  manifest.parameters.emplace_back("format", common.format);

  KvWriter kv;
  std::ostringstream text;
  std::vector<std::pair<std::string, std::string>> extras;

  if (sweeping) {
    SweepGrid grid;
    grid.rhos = args.sweep_rho.empty()
                    ? std::vector<double>{0.001, 0.005, 0.02, 0.1, 0.5, 1.0}
                    : parse_double_list(args.sweep_rho, "sweep rho");
    grid.code_sizes = args.sweep_code.empty()
                          ? std::vector<double>{0.0, 100.0}
                          : parse_double_list(args.sweep_code, "sweep code size");
    if (!args.sweep_nodes.empty())
      grid.node_counts = parse_int_list(args.sweep_nodes, "sweep node count");

    std::vector<std::string> rho_strings, code_strings;
    for (double v : grid.rhos) rho_strings.push_back(format_fixed(v));
    for (double v : grid.code_sizes) code_strings.push_back(format_fixed(v));
    manifest.parameters.emplace_back("sweep_rho", join(rho_strings, ","));
    manifest.parameters.emplace_back("sweep_code", join(code_strings, ","));
    if (!grid.node_counts.empty()) {
      std::vector<std::string> ns;
      for (int n : grid.node_counts) ns.push_back(std::to_string(n));
      manifest.parameters.emplace_back("sweep_nodes", join(ns, ","));
    }
    manifest.outputs = {"simulate.kv", "simulate.report.txt"};
    if (common.format == "csv") manifest.outputs.push_back("simulate.csv");

    const std::vector<SweepPoint> points = compare(sc, grid);

    manifest.write_to(kv);
    emit_config(kv, sc.config);
    kv.put("sweep.count", static_cast<long>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
      const SweepPoint& p = points[i];
      const std::string base = "sweep." + std::to_string(i + 1);
      kv.put(base + ".rho", p.rho);
      kv.put(base + ".code_size", p.code_size);
      kv.put(base + ".nodes", static_cast<long>(p.nodes));
      kv.put(base + ".bytes_mobile_agent", p.bytes_mobile_agent);
      kv.put(base + ".bytes_client_server", p.bytes_client_server);
      kv.put(base + ".savings", savings_text(p.savings));
    }

    text << manifest.to_text() << '\n';
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"rho", "code_size", "nodes", "bytes_mobile_agent",
                    "bytes_client_server", "savings"});
    for (const SweepPoint& p : points)
      rows.push_back({format_fixed(p.rho), format_fixed(p.code_size),
                      std::to_string(p.nodes),
                      format_fixed(p.bytes_mobile_agent),
                      format_fixed(p.bytes_client_server),
                      savings_text(p.savings)});
    text << "traffic sweep (byte-hops)\n" << render_table(rows);

    if (common.format == "csv") {
      std::ostringstream csv;
      csv << csv_line({"rho", "code_size", "nodes", "bytes_mobile_agent",
                       "bytes_client_server", "savings"})
          << '\n';
      for (const SweepPoint& p : points)
        csv << csv_line({format_fixed(p.rho), format_fixed(p.code_size),
                         std::to_string(p.nodes),
                         format_fixed(p.bytes_mobile_agent),
                         format_fixed(p.bytes_client_server),
                         savings_text(p.savings)})
            << '\n';
      extras.emplace_back("simulate.csv", csv.str());
    }
  } else {
    manifest.outputs = {"simulate.kv", "simulate.report.txt"};
    if (common.format == "csv") {
      manifest.outputs.push_back("simulate.csv");
      manifest.outputs.push_back("simulate.legs.csv");
    }

    const TrafficReport report = run_comparison(sc);

    manifest.write_to(kv);
    emit_config(kv, sc.config);
    kv.put("traffic.bytes_client_server", report.bytes_client_server);
    kv.put("traffic.bytes_mobile_agent", report.bytes_mobile_agent);
    kv.put("traffic.visits", report.visits_total);
    kv.put("traffic.savings", savings_text(report.savings_fraction));
    for (const TrafficReport::Round& row : report.per_round) {
      const std::string base = "round." + std::to_string(row.round);
      kv.put(base + ".bytes_client_server", row.bytes_client_server);
      kv.put(base + ".bytes_mobile_agent", row.bytes_mobile_agent);
      kv.put(base + ".visits", row.visits);
    }
    kv.put("legs.count", static_cast<long>(report.legs.size()));

    text << manifest.to_text() << '\n';
    std::vector<std::vector<std::string>> rows;
    rows.push_back(
        {"round", "bytes_client_server", "bytes_mobile_agent", "visits"});
    for (const TrafficReport::Round& row : report.per_round)
      rows.push_back({std::to_string(row.round),
                      format_fixed(row.bytes_client_server),
                      format_fixed(row.bytes_mobile_agent),
                      std::to_string(row.visits)});
    text << "traffic per round (byte-hops)\n" << render_table(rows) << '\n';
    text << "totals: client/server "
         << format_fixed(report.bytes_client_server) << ", mobile agent "
         << format_fixed(report.bytes_mobile_agent) << " byte-hops over "
         << sc.config.rounds << " round(s)\n";
    text << "savings: " << savings_text(report.savings_fraction)
         << " (fraction of baseline byte-hops avoided)\n";
    text << "visits: " << report.visits_total << " node arrival(s)\n";

    if (common.format == "csv") {
      std::ostringstream csv;
      csv << csv_line(
                 {"round", "bytes_client_server", "bytes_mobile_agent",
                  "visits"})
          << '\n';
      for (const TrafficReport::Round& row : report.per_round)
        csv << csv_line({std::to_string(row.round),
                         format_fixed(row.bytes_client_server),
                         format_fixed(row.bytes_mobile_agent),
                         std::to_string(row.visits)})
            << '\n';
      extras.emplace_back("simulate.csv", csv.str());

      std::ostringstream legs;
      legs << csv_line({"agent", "round", "from", "to", "payload_bytes",
                        "code_bytes", "hops", "cost"})
           << '\n';
      for (const LegRecord& leg : report.legs)
        legs << csv_line({leg.agent, std::to_string(leg.round),
                          std::to_string(leg.from), std::to_string(leg.to),
                          format_fixed(leg.payload_bytes),
                          format_fixed(leg.code_bytes),
                          std::to_string(leg.hops), format_fixed(leg.cost)})
             << '\n';
      extras.emplace_back("simulate.legs.csv", legs.str());
    }
  }

  write_outputs(common, "simulate", kv.str(), text.str(), extras);
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

struct PipelineArgs {
  std::string scenario_path;
  double tau = -1.0;  // <0 = keep the scenario's value
};

template <typename F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const InputError& e) {
    throw InputError("stage " + name + ": " + e.what());
  } catch (const InfeasibleError& e) {
    throw InfeasibleError("stage " + name + ": " + e.what());
  }
}

void run_pipeline(const Common& common, const PipelineArgs& args) {
  Scenario sc = parse_scenario_file(args.scenario_path);
  if (common.seed_set) sc.config.seed = common.seed;
  if (args.tau >= 0.0) sc.config.duplication_tau = args.tau;
  sc.validate();

  RunManifest manifest;
  manifest.command = "pipeline";
  manifest.tool_version = kToolVersion;
  manifest.inputs = {args.scenario_path};
  manifest.parameters = config_parameters(sc.config);
  manifest.parameters.emplace_back("tau",
                                   format_fixed(sc.config.duplication_tau));
  manifest.parameters.emplace_back("format", common.format);
  manifest.outputs = {"pipeline.kv", "pipeline.report.txt"};
  if (common.format == "csv") manifest.outputs.push_back("pipeline.csv");

  KvWriter kv;
  manifest.write_to(kv);
  emit_config(kv, sc.config);

  std::ostringstream text;
  text << manifest.to_text() << '\n';

  // Stage 1: dispatch one round of agents from the sink.
  const DispatchResult dispatch = stage("dispatch", [&] {
    return dispatch_round(sc.config, sc.topology, sc.tasks, sc.failed, 1);
  });
  kv.put("dispatch.packets", static_cast<long>(dispatch.packets.size()));
  for (std::size_t i = 0; i < dispatch.packets.size(); ++i) {
    const MAPacket& p = dispatch.packets[i];
    const std::string base = "dispatch.packet." + std::to_string(i + 1);
    kv.put(base + ".agent", p.agent);
    kv.put(base + ".seq", p.ma_seq_num);
    kv.put(base + ".itinerary", node_list(p.src_list.order));
    kv.put(base + ".cost", p.src_list.total_cost);
    kv.put(base + ".hops", static_cast<long>(p.src_list.total_hops));
  }
  {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"agent", "seq", "itinerary", "cost", "hops"});
    for (const MAPacket& p : dispatch.packets)
      rows.push_back({p.agent, std::to_string(p.ma_seq_num),
                      node_list(p.src_list.order),
                      format_fixed(p.src_list.total_cost),
                      std::to_string(p.src_list.total_hops)});
    text << "dispatched agents\n" << render_table(rows) << '\n';
  }

  // Stage 2: route tables, one per agent.
  for (const auto& [agent, routers] : dispatch.route_tables)
    kv.put_list("route_table." + agent, routers);

  // Stage 3: incidence matrix over all non-sink routers.
  const IncidenceMatrix m = stage("incidence", [&] {
    std::vector<Id> all_routers;
    for (NodeId n : sc.topology.node_ids())
      if (n != sc.topology.sink) all_routers.push_back(std::to_string(n));
    return build_incidence_matrix(dispatch.route_tables, all_routers);
  });
  kv.put_list("incidence.routers", m.routers);
  kv.put_list("incidence.agents", m.agents);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(std::to_string(m.at(i, j)));
    kv.put_list("incidence.row." + m.routers[i], row);
  }

  // Stage 4: cell formation over the incidence matrix.
  const CellFormation cf = stage("cell-formation", [&] {
    ClusterConfig config;
    config.duplication_tau = sc.config.duplication_tau;
    return cluster_matrix(m, config);
  });
  emit_cell_formation(kv, "cells.", m, cf);
  text << cell_formation_text(m, cf) << '\n';

  // Stage 5: traffic with the original per-agent tasks vs one agent per
  // cell. A cell agent visits its own routers plus the exceptional routers
  // of its family's agents, so every reading is still collected.
  struct Variant {
    std::string name;
    TrafficReport report;
    long visits_per_round = 0;
  };
  std::vector<Variant> variants = stage("traffic", [&] {
    TaskList clustered;
    for (std::size_t k = 0; k < cf.clusters.size(); ++k) {
      std::set<NodeId> targets;
      for (const Id& r : cf.clusters[k].cell) targets.insert(node_id_of(r));
      std::set<Id> family(cf.clusters[k].family.begin(),
                          cf.clusters[k].family.end());
      for (const auto& [router, agent] : cf.exceptional)
        if (family.count(agent) != 0) targets.insert(node_id_of(router));
      clustered.emplace_back("cell-" + std::to_string(k + 1),
                             std::move(targets));
    }
    Scenario clustered_sc = sc;
    clustered_sc.tasks = std::move(clustered);

    std::vector<Variant> out;
    out.push_back({"unclustered", run_comparison(sc), 0});
    out.push_back({"clustered", run_comparison(clustered_sc), 0});
    for (Variant& v : out)
      v.visits_per_round =
          v.report.per_round.empty() ? 0 : v.report.per_round.front().visits;
    return out;
  });

  for (const Variant& v : variants) {
    const std::string base = "traffic." + v.name;
    kv.put(base + ".bytes_client_server", v.report.bytes_client_server);
    kv.put(base + ".bytes_mobile_agent", v.report.bytes_mobile_agent);
    kv.put(base + ".visits_per_round", v.visits_per_round);
    kv.put(base + ".visits_total", v.report.visits_total);
    kv.put(base + ".savings", savings_text(v.report.savings_fraction));
  }

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"variant", "bytes_client_server", "bytes_mobile_agent",
                  "visits/round", "savings"});
  for (const Variant& v : variants)
    rows.push_back({v.name, format_fixed(v.report.bytes_client_server),
                    format_fixed(v.report.bytes_mobile_agent),
                    std::to_string(v.visits_per_round),
                    savings_text(v.report.savings_fraction)});
  text << "traffic comparison (byte-hops)\n" << render_table(rows) << '\n';
  text << "cell agents visit " << variants[1].visits_per_round
       << " node(s) per round instead of " << variants[0].visits_per_round
       << '\n';

  std::vector<std::pair<std::string, std::string>> extras;
  if (common.format == "csv") {
    std::ostringstream csv;
    csv << csv_line({"variant", "bytes_client_server", "bytes_mobile_agent",
                     "visits_per_round", "savings"})
        << '\n';
    for (const Variant& v : variants)
      csv << csv_line({v.name, format_fixed(v.report.bytes_client_server),
                       format_fixed(v.report.bytes_mobile_agent),
                       std::to_string(v.visits_per_round),
                       savings_text(v.report.savings_fraction)})
          << '\n';
    extras.emplace_back("pipeline.csv", csv.str());
  }

  write_outputs(common, "pipeline", kv.str(), text.str(), extras);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mobile-agent cell formation and traffic planning"};
  app.require_subcommand(1);

  Common common;
  ClusterMatrixArgs cm;
  ClusterFeaturesArgs cfargs;
  PlanArgs plan_args;
  SimulateArgs sim_args;
  PipelineArgs pipe_args;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", common.out_dir, "Output directory")
        ->default_str(".");
    cmd->add_option("--seed", common.seed, "Random seed override");
    cmd->add_option("--format", common.format, "Report format")
        ->check(CLI::IsMember({"text", "csv"}))
        ->default_str("text");
  };

  CLI::App* cluster_matrix_cmd = app.add_subcommand(
      "cluster-matrix",
      "Partition a binary router-by-agent incidence matrix into cells");
  cluster_matrix_cmd
      ->add_option("matrix", cm.matrix_path, "Incidence CSV file")
      ->required();
  cluster_matrix_cmd->add_option("--tau", cm.tau,
                                 "Duplication threshold in [0,1]");
  cluster_matrix_cmd->add_option("--mode", cm.mode,
                                 "rank-order (default) or exhaustive");
  cluster_matrix_cmd->add_option("--clusters", cm.clusters,
                                 "Fixed cluster count (default: search)");
  add_common(cluster_matrix_cmd);

  CLI::App* cluster_features_cmd = app.add_subcommand(
      "cluster-features",
      "Cluster agents by weighted criteria vectors");
  cluster_features_cmd
      ->add_option("features", cfargs.features_path, "Feature CSV file")
      ->required();
  cluster_features_cmd
      ->add_option("--clusters", cfargs.clusters, "Cluster count")
      ->required();
  auto* wopt = cluster_features_cmd->add_option(
      "--weights", cfargs.weights, "Comma-separated criterion weights");
  cluster_features_cmd
      ->add_option("--weights-file", cfargs.weights_file,
                   "One-line CSV of criterion weights")
      ->excludes(wopt);
  cluster_features_cmd->add_option("--max-iter", cfargs.max_iterations,
                                   "Iteration cap");
  add_common(cluster_features_cmd);

  CLI::App* plan_cmd = app.add_subcommand(
      "plan", "Shortest-path tables and agent itineraries over a topology");
  plan_cmd->add_option("topology", plan_args.topology_path, "Topology file")
      ->required();
  auto* start_opt =
      plan_cmd->add_option("--start", plan_args.start, "Start node (default: sink)");
  plan_cmd->add_option("--targets", plan_args.targets,
                       "Comma-separated target nodes (default: full sweep)");
  plan_cmd->add_flag("--all-pairs", plan_args.all_pairs,
                     "Include the all-pairs distance table");
  add_common(plan_cmd);

  CLI::App* simulate_cmd = app.add_subcommand(
      "simulate", "Compare mobile-agent and client/server traffic");
  simulate_cmd
      ->add_option("scenario", sim_args.scenario_path, "Scenario file")
      ->required();
  auto* rounds_opt = simulate_cmd->add_option("--rounds", sim_args.rounds,
                                              "Override round count");
  simulate_cmd->add_flag("--sweep", sim_args.sweep,
                         "Sweep rho and code size over a default grid");
  simulate_cmd->add_option("--sweep-rho", sim_args.sweep_rho,
                           "Comma-separated aggregation ratios");
  simulate_cmd->add_option("--sweep-code", sim_args.sweep_code,
                           "Comma-separated code sizes");
  simulate_cmd->add_option("--sweep-nodes", sim_args.sweep_nodes,
                           "Comma-separated node counts (generated topologies)");
  add_common(simulate_cmd);

  CLI::App* pipeline_cmd = app.add_subcommand(
      "pipeline",
      "Dispatch, route tables, incidence, cell formation, and traffic");
  pipeline_cmd
      ->add_option("scenario", pipe_args.scenario_path, "Scenario file")
      ->required();
  pipeline_cmd->add_option("--tau", pipe_args.tau,
                           "Duplication threshold override");
  add_common(pipeline_cmd);

  try {
    app.parse(argc, argv);
    common.seed_set = false;
    for (CLI::App* cmd : app.get_subcommands())
      if (cmd->count("--seed") > 0) common.seed_set = true;
    if (start_opt->count() > 0) plan_args.start_set = true;
    if (rounds_opt->count() > 0) sim_args.rounds_set = true;

    if (cluster_matrix_cmd->parsed()) run_cluster_matrix(common, cm);
    if (cluster_features_cmd->parsed()) run_cluster_features(common, cfargs);
    if (plan_cmd->parsed()) run_plan(common, plan_args);
    if (simulate_cmd->parsed()) run_simulate(common, sim_args);
    if (pipeline_cmd->parsed()) run_pipeline(common, pipe_args);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: E_INPUT " << flatten(e.what()) << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: E_INPUT " << flatten(e.what()) << '\n';
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: E_INFEASIBLE " << flatten(e.what()) << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: E_INTERNAL " << flatten(e.what()) << '\n';
    return 4;
  }
}
