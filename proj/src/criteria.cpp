#include "macells/criteria.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace macells {

namespace detail {

void check_dimensions(Eigen::Index x, Eigen::Index c, Eigen::Index k) {
  if (x == 0) throw InputError("feature vector must have at least one criterion");
  if (x != c || x != k)
    throw InputError("dimension mismatch: point has " + std::to_string(x) +
                     " criteria, center " + std::to_string(c) +
                     ", weights " + std::to_string(k));
}

void check_weights(const Eigen::Ref<const Eigen::VectorXd>& k) {
  if (!k.allFinite()) throw InputError("non-finite criterion weight");
  if ((k.array() < 0.0).any())
    throw InputError("criterion weights must be non-negative");
  if ((k.array() > 0.0).count() == 0)
    throw InputError("at least one criterion weight must be positive");
}

}  // namespace detail

Eigen::Index assign(const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::MatrixXd>& centers,
                    const Eigen::Ref<const Eigen::VectorXd>& k) {
  if (centers.rows() == 0)
    throw InputError("assign requires at least one cluster center");
  Eigen::Index best = 0;
  double best_d = weighted_distance_squared(x, centers.row(0).transpose(), k);
  for (Eigen::Index r = 1; r < centers.rows(); ++r) {
    double d = weighted_distance_squared(x, centers.row(r).transpose(), k);
    if (d < best_d) {  // strict: exact ties keep the lowest index
      best_d = d;
      best = r;
    }
  }
  return best;
}

namespace {

// Greedy farthest-point seeding from the lowest-index point: each next
// center is the point maximizing the distance to its nearest chosen center,
// ties to the lower index.
Eigen::MatrixXd seed_centers(const Eigen::Ref<const Eigen::MatrixXd>& points,
                             int cluster_count,
                             const Eigen::Ref<const Eigen::VectorXd>& k) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centers(cluster_count, points.cols());
  centers.row(0) = points.row(0);
  Eigen::VectorXd nearest(n);
  for (Eigen::Index i = 0; i < n; ++i)
    nearest(i) = weighted_distance_squared(points.row(i).transpose(),
                                           points.row(0).transpose(), k);
  for (int c = 1; c < cluster_count; ++c) {
    Eigen::Index far = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (nearest(i) > nearest(far)) far = i;
    centers.row(c) = points.row(far);
    for (Eigen::Index i = 0; i < n; ++i)
      nearest(i) = std::min(
          nearest(i), weighted_distance_squared(points.row(i).transpose(),
                                                points.row(far).transpose(), k));
  }
  return centers;
}

double within_ssq(const Eigen::Ref<const Eigen::MatrixXd>& points,
                  const Eigen::MatrixXd& centers,
                  const std::vector<int>& assignment,
                  const Eigen::Ref<const Eigen::VectorXd>& k) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    total += weighted_distance_squared(
        points.row(i).transpose(),
        centers.row(assignment[static_cast<std::size_t>(i)]).transpose(), k);
  return total;
}

}  // namespace

FeatureClustering cluster_features(
    const Eigen::Ref<const Eigen::MatrixXd>& points, int cluster_count,
    const Eigen::Ref<const Eigen::VectorXd>& weights,
    const FeatureClusterConfig& config) {
  if (points.rows() == 0) throw InputError("no points to cluster");
  if (!points.allFinite()) throw InputError("non-finite feature value");
  detail::check_dimensions(points.cols(), points.cols(), weights.size());
  detail::check_weights(weights);
  if (cluster_count < 1) throw InputError("cluster count must be at least 1");
  if (cluster_count > points.rows())
    throw InfeasibleError("cluster count " + std::to_string(cluster_count) +
                          " exceeds the " + std::to_string(points.rows()) +
                          " points available");
  if (config.max_iterations < 1)
    throw InputError("iteration cap must be at least 1");

  FeatureClustering out;
  out.centers = seed_centers(points, cluster_count, weights);
  out.assignment.assign(static_cast<std::size_t>(points.rows()), 0);

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    // Assignment step.
    bool changed = iter == 0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      int a = static_cast<int>(
          assign(points.row(i).transpose(), out.centers, weights));
      if (a != out.assignment[static_cast<std::size_t>(i)]) changed = true;
      out.assignment[static_cast<std::size_t>(i)] = a;
    }
    out.iterations = iter + 1;

    // Mean update; an emptied cluster is reseeded with the point farthest
    // from its current center.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(cluster_count, points.cols());
    std::vector<long> sizes(static_cast<std::size_t>(cluster_count), 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      sums.row(out.assignment[static_cast<std::size_t>(i)]) += points.row(i);
      ++sizes[static_cast<std::size_t>(
          out.assignment[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < cluster_count; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) {
        out.centers.row(c) =
            sums.row(c) / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
        continue;
      }
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double d = weighted_distance_squared(
            points.row(i).transpose(),
            out.centers.row(out.assignment[static_cast<std::size_t>(i)])
                .transpose(),
            weights);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      out.centers.row(c) = points.row(far);
      out.assignment[static_cast<std::size_t>(far)] = c;
      changed = true;
    }

    out.ssq_trace.push_back(within_ssq(points, out.centers, out.assignment,
                                       weights));
    if (!changed) {
      out.converged = true;
      break;
    }
  }

  out.within_ssq = out.ssq_trace.empty() ? 0.0 : out.ssq_trace.back();
  out.members.assign(static_cast<std::size_t>(cluster_count), {});
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out.members[static_cast<std::size_t>(
                    out.assignment[static_cast<std::size_t>(i)])]
        .push_back(static_cast<int>(i));
  return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    std::size_t b = field.find_first_not_of(" \t\r");
    std::size_t e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line_no,
                             const std::string& msg) {
  throw InputError(source + ":" + std::to_string(line_no) + ": " + msg);
}

}  // namespace

FeatureTable read_features_csv(std::istream& in,
                               const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line))
    parse_fail(source_name, 1, "empty file, expected `agent,<criteria>` header");
  ++line_no;
  std::vector<std::string> header = split_csv(line);
  if (header.empty() || header[0] != "agent")
    parse_fail(source_name, line_no,
               "header must start with `agent`, got '" +
                   (header.empty() ? std::string() : header[0]) + "'");
  if (header.size() < 2)
    parse_fail(source_name, line_no, "no criterion columns in header");

  FeatureTable table;
  table.criteria.assign(header.begin() + 1, header.end());

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> fields = split_csv(line);
    if (fields.size() != header.size())
      parse_fail(source_name, line_no,
                 "expected " + std::to_string(header.size()) +
                     " fields, got " + std::to_string(fields.size()));
    if (fields[0].empty()) parse_fail(source_name, line_no, "empty agent id");
    table.agents.push_back(fields[0]);
    std::vector<double> row;
    for (std::size_t j = 1; j < fields.size(); ++j) {
      try {
        std::size_t used = 0;
        double v = std::stod(fields[j], &used);
        if (used != fields[j].size()) throw std::invalid_argument(fields[j]);
        row.push_back(v);
      } catch (const std::exception&) {
        parse_fail(source_name, line_no,
                   "value '" + fields[j] + "' in column " +
                       std::to_string(j + 1) + " is not a number");
      }
    }
    rows.push_back(std::move(row));
  }

  if (rows.empty())
    throw InputError(source_name + ": no agent rows after the header");
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.criteria.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  if (!table.values.allFinite())
    throw InputError(source_name + ": non-finite feature value");

  std::set<Id> seen;
  for (const Id& a : table.agents)
    if (!seen.insert(a).second)
      throw InputError(source_name + ": duplicate agent id '" + a + "'");
  return table;
}

FeatureTable read_features_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open features file '" + path + "'");
  return read_features_csv(in, path);
}

}  // namespace macells
