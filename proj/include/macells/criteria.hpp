#pragma once

#include <Eigen/Core>

#include <cmath>
#include <iosfwd>
#include <string>
#include <vector>

#include "macells/error.hpp"
#include "macells/ids.hpp"

namespace macells {

// Feature vectors, cluster centers, and per-criterion weights are plain
// Eigen vectors; every function below is a free function over expressions so
// callers can pass blocks, rows, or maps without copying.
using FeatureVector = Eigen::VectorXd;
using ClusterCenter = Eigen::VectorXd;
using CriterionWeights = Eigen::VectorXd;

namespace detail {
void check_dimensions(Eigen::Index x, Eigen::Index c, Eigen::Index k);
void check_weights(const Eigen::Ref<const Eigen::VectorXd>& k);
}  // namespace detail

// Squared weighted generalized Euclidean distance: sum_i k_i (x_i - c_i)^2.
// Rejects dimension mismatches and non-finite inputs.
template <typename DerivedX, typename DerivedC, typename DerivedK>
double weighted_distance_squared(const Eigen::MatrixBase<DerivedX>& x,
                                 const Eigen::MatrixBase<DerivedC>& c,
                                 const Eigen::MatrixBase<DerivedK>& k) {
  detail::check_dimensions(x.size(), c.size(), k.size());
  if (!x.allFinite() || !c.allFinite())
    throw InputError("weighted_distance: non-finite coordinate");
  detail::check_weights(k.derived());
  return (k.derived().array() *
          (x.derived() - c.derived()).array().square())
      .sum();
}

// Weighted generalized Euclidean distance sqrt(sum_i k_i (x_i - c_i)^2);
// symmetric, zero exactly when x and c agree on every positive-weight
// criterion.
template <typename DerivedX, typename DerivedC, typename DerivedK>
double weighted_distance(const Eigen::MatrixBase<DerivedX>& x,
                         const Eigen::MatrixBase<DerivedC>& c,
                         const Eigen::MatrixBase<DerivedK>& k) {
  return std::sqrt(weighted_distance_squared(x, c, k));
}

// Index of the row of `centers` nearest to x under the weighted distance;
// exact ties go to the lowest index. Rejects an empty center list.
Eigen::Index assign(const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::MatrixXd>& centers,
                    const Eigen::Ref<const Eigen::VectorXd>& k);

struct FeatureClusterConfig {
  int max_iterations = 100;
};

// Result of Lloyd-style feature clustering.
struct FeatureClustering {
  Eigen::MatrixXd centers;                // cluster_count x criteria
  std::vector<int> assignment;            // per input point
  std::vector<std::vector<int>> members;  // point indices per cluster
  std::vector<double> ssq_trace;  // within-cluster weighted SSQ per iteration
  double within_ssq = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Clusters the rows of `points` into cluster_count groups by alternating
// nearest-center assignment and mean updates, seeded deterministically by
// greedy farthest-point selection from the lowest-index point. An empty
// cluster is reseeded with the point farthest from its current center.
FeatureClustering cluster_features(
    const Eigen::Ref<const Eigen::MatrixXd>& points, int cluster_count,
    const Eigen::Ref<const Eigen::VectorXd>& weights,
    const FeatureClusterConfig& config = {});

// Agent-by-criterion table parsed from CSV with header
// `agent,<criterion names...>` and one row per agent.
struct FeatureTable {
  std::vector<Id> agents;
  std::vector<std::string> criteria;
  Eigen::MatrixXd values;  // agents x criteria
};

FeatureTable read_features_csv(std::istream& in,
                               const std::string& source_name);
FeatureTable read_features_csv_file(const std::string& path);

}  // namespace macells
