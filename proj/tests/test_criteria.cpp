#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "macells/criteria.hpp"
#include "macells/error.hpp"

using namespace macells;

namespace {

const std::string kFixtures = MACELLS_FIXTURE_DIR;

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r.size()),
                    static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

Eigen::VectorXd ones(Eigen::Index n) { return Eigen::VectorXd::Ones(n); }

}  // namespace

TEST_CASE("weighted distance: hand values") {
  Eigen::Vector2d a(0.0, 0.0), b(3.0, 4.0);
  CHECK(weighted_distance_squared(a, b, vec({1, 1})) == 25.0);
  CHECK(weighted_distance(a, b, vec({1, 1})) == 5.0);
  // Per-criterion weights scale each squared term.
  CHECK(weighted_distance_squared(a, b, vec({2, 0.5})) == 2 * 9 + 0.5 * 16);
  // A zero weight removes the criterion entirely.
  CHECK(weighted_distance_squared(a, b, vec({1, 0})) == 9.0);
}

TEST_CASE("weighted distance: metric axioms on random data") {
  std::mt19937_64 rng(7);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 5);
    Eigen::VectorXd x(d), y(d), z(d), w(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      x(i) = 20 * unit() - 10;
      y(i) = 20 * unit() - 10;
      z(i) = 20 * unit() - 10;
      w(i) = unit();  // nonnegative weights
    }
    if (w.sum() == 0) w(0) = 1;
    const double xy = weighted_distance(x, y, w);
    const double yx = weighted_distance(y, x, w);
    const double xz = weighted_distance(x, z, w);
    const double zy = weighted_distance(z, y, w);
    CHECK(xy == yx);                        // symmetry is exact
    CHECK(weighted_distance(x, x, w) == 0.0);  // identity is exact
    CHECK(xy <= xz + zy + 1e-9);            // triangle inequality
    CHECK(xy >= 0.0);
  }
}

TEST_CASE("weighted distance rejects bad input") {
  Eigen::Vector2d a(0, 0), b(1, 1);
  CHECK_THROWS_AS(weighted_distance(a, vec({1, 2, 3}), vec({1, 1})),
                  InputError);
  CHECK_THROWS_AS(weighted_distance(a, b, vec({1})), InputError);
  CHECK_THROWS_AS(weighted_distance(a, b, vec({-1, 1})), InputError);
  CHECK_THROWS_AS(weighted_distance(a, b, vec({0, 0})), InputError);
  Eigen::Vector2d nan(std::numeric_limits<double>::quiet_NaN(), 0);
  CHECK_THROWS_AS(weighted_distance(nan, b, vec({1, 1})), InputError);
  Eigen::Vector2d inf(std::numeric_limits<double>::infinity(), 0);
  CHECK_THROWS_AS(weighted_distance(a, inf, vec({1, 1})), InputError);
}

TEST_CASE("assign picks the nearest center, lowest index on ties") {
  Eigen::MatrixXd centers = rows({{0, 0}, {10, 0}, {5, 0}});
  CHECK(assign(vec({1, 0}), centers, ones(2)) == 0);
  CHECK(assign(vec({9, 0}), centers, ones(2)) == 1);
  CHECK(assign(vec({4, 0}), centers, ones(2)) == 2);
  // 2.5 is equidistant from centers 0 and 2: lowest index wins.
  CHECK(assign(vec({2.5, 0}), centers, ones(2)) == 0);
  // Weights can change the winner.
  Eigen::MatrixXd c2 = rows({{0, 4}, {3, 0}});
  CHECK(assign(vec({0, 0}), c2, vec({1, 1})) == 1);
  CHECK(assign(vec({0, 0}), c2, vec({10, 0.1})) == 0);
  CHECK_THROWS_AS(assign(vec({0, 0}), Eigen::MatrixXd(0, 2), ones(2)),
                  InputError);
}

TEST_CASE("two well-separated blobs split cleanly") {
  Eigen::MatrixXd pts = rows({{0, 0}, {0, 1}, {10, 10}, {10, 11}});
  FeatureClustering fc = cluster_features(pts, 2, ones(2));

  REQUIRE(fc.assignment.size() == 4);
  CHECK(fc.assignment[0] == fc.assignment[1]);
  CHECK(fc.assignment[2] == fc.assignment[3]);
  CHECK(fc.assignment[0] != fc.assignment[2]);
  CHECK(fc.converged);
  CHECK(fc.within_ssq == doctest::Approx(1.0).epsilon(1e-12));

  const int lo = fc.assignment[0];
  const int hi = fc.assignment[2];
  CHECK(fc.centers(lo, 0) == doctest::Approx(0.0));
  CHECK(fc.centers(lo, 1) == doctest::Approx(0.5));
  CHECK(fc.centers(hi, 0) == doctest::Approx(10.0));
  CHECK(fc.centers(hi, 1) == doctest::Approx(10.5));

  REQUIRE(fc.members.size() == 2);
  CHECK(fc.members[static_cast<std::size_t>(lo)] == std::vector<int>{0, 1});
  CHECK(fc.members[static_cast<std::size_t>(hi)] == std::vector<int>{2, 3});
}

TEST_CASE("clustering is deterministic") {
  Eigen::MatrixXd pts = rows(
      {{1.2, 0.3}, {0.9, 0.1}, {5.5, 5.2}, {5.1, 5.9}, {9.0, 0.2}, {8.7, 0.4}});
  FeatureClustering a = cluster_features(pts, 3, ones(2));
  FeatureClustering b = cluster_features(pts, 3, ones(2));
  CHECK(a.assignment == b.assignment);
  CHECK(a.centers == b.centers);
  CHECK(a.ssq_trace == b.ssq_trace);
}

TEST_CASE("uniformly scaling all weights never changes the assignment") {
  std::mt19937_64 rng(123);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng() % 8);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 3);
    Eigen::MatrixXd pts(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) pts(i, j) = 100 * unit();
    Eigen::VectorXd w(d);
    for (Eigen::Index j = 0; j < d; ++j) w(j) = 0.1 + unit();
    const int k = 1 + static_cast<int>(rng() % 3);

    FeatureClustering base = cluster_features(pts, k, w);
    for (double lambda : {1e-3, 1e3}) {
      FeatureClustering scaled = cluster_features(pts, k, lambda * w);
      CHECK(scaled.assignment == base.assignment);
      CHECK(scaled.iterations == base.iterations);
    }
  }
}

TEST_CASE("a zero weight makes a criterion irrelevant") {
  // Third column is pure noise; weighting it zero must reproduce the
  // two-column clustering exactly.
  Eigen::MatrixXd clean = rows({{0, 0}, {0, 1}, {10, 10}, {10, 11}});
  Eigen::MatrixXd noisy =
      rows({{0, 0, 100}, {0, 1, -50}, {10, 10, 42}, {10, 11, -7}});
  FeatureClustering a = cluster_features(clean, 2, ones(2));
  FeatureClustering b = cluster_features(noisy, 2, vec({1, 1, 0}));
  CHECK(a.assignment == b.assignment);
  CHECK(a.within_ssq == doctest::Approx(b.within_ssq).epsilon(1e-12));
}

TEST_CASE("within-cluster SSQ never increases while no reseeding happens") {
  std::mt19937_64 rng(55);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 6 + static_cast<Eigen::Index>(rng() % 10);
    Eigen::MatrixXd pts(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      pts(i, 0) = 50 * unit();
      pts(i, 1) = 50 * unit();
    }
    FeatureClustering fc = cluster_features(pts, 2, ones(2));
    // Distinct random doubles: clusters never empty out, so the Lloyd
    // monotonicity argument applies to the full trace.
    for (std::size_t t = 1; t < fc.ssq_trace.size(); ++t)
      CHECK(fc.ssq_trace[t] <= fc.ssq_trace[t - 1] + 1e-9);
    CHECK(fc.within_ssq == fc.ssq_trace.back());
    CHECK(fc.iterations == static_cast<int>(fc.ssq_trace.size()));
  }
}

TEST_CASE("duplicate points cannot livelock the iteration") {
  // Three points, two identical, k = 3: one cluster keeps losing its only
  // point. The run must stop at the iteration cap with a complete
  // assignment rather than cycling forever.
  Eigen::MatrixXd pts = rows({{0.0}, {0.0}, {10.0}});
  FeatureClusterConfig config;
  config.max_iterations = 25;
  FeatureClustering fc = cluster_features(pts, 3, ones(1), config);
  CHECK(fc.iterations <= 25);
  REQUIRE(fc.assignment.size() == 3);
  for (int a : fc.assignment) {
    CHECK(a >= 0);
    CHECK(a < 3);
  }
  // Every point still belongs to exactly one members list.
  std::size_t total = 0;
  for (const auto& mlist : fc.members) total += mlist.size();
  CHECK(total == 3);
}

TEST_CASE("k equal to the point count isolates every point") {
  Eigen::MatrixXd pts = rows({{0, 0}, {5, 5}, {9, 1}});
  FeatureClustering fc = cluster_features(pts, 3, ones(2));
  CHECK(fc.within_ssq == 0.0);
  std::vector<int> sorted = fc.assignment;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2});
}

TEST_CASE("cluster_features rejects bad input") {
  Eigen::MatrixXd pts = rows({{0, 0}, {1, 1}});
  CHECK_THROWS_AS(cluster_features(Eigen::MatrixXd(0, 2), 1, ones(2)),
                  InputError);
  CHECK_THROWS_AS(cluster_features(pts, 0, ones(2)), InputError);
  CHECK_THROWS_AS(cluster_features(pts, 3, ones(2)), InfeasibleError);
  CHECK_THROWS_AS(cluster_features(pts, 1, ones(3)), InputError);
  CHECK_THROWS_AS(cluster_features(pts, 1, vec({-1, 1})), InputError);
  CHECK_THROWS_AS(cluster_features(pts, 1, vec({0, 0})), InputError);
  FeatureClusterConfig config;
  config.max_iterations = 0;
  CHECK_THROWS_AS(cluster_features(pts, 1, ones(2), config), InputError);
  Eigen::MatrixXd bad = pts;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(cluster_features(bad, 1, ones(2)), InputError);
}

TEST_CASE("feature CSV fixture round trip") {
  FeatureTable t = read_features_csv_file(kFixtures + "/features_blobs.csv");
  CHECK(t.agents == std::vector<Id>{"a1", "a2", "a3", "a4"});
  CHECK(t.criteria == std::vector<std::string>{"x", "y"});
  REQUIRE(t.values.rows() == 4);
  REQUIRE(t.values.cols() == 2);
  CHECK(t.values(0, 0) == 0.0);
  CHECK(t.values(3, 1) == 11.0);

  FeatureClustering fc = cluster_features(t.values, 2, ones(2));
  CHECK(fc.assignment[0] == fc.assignment[1]);
  CHECK(fc.assignment[2] == fc.assignment[3]);
}

TEST_CASE("feature CSV parse errors") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_features_csv(in, "test.csv");
  };
  CHECK_THROWS_AS(parse(""), InputError);
  CHECK_THROWS_AS(parse("x,y\n1,2\n"), InputError);       // header misses agent
  CHECK_THROWS_AS(parse("agent\na1\n"), InputError);      // no criteria at all
  CHECK_THROWS_AS(parse("agent,x\na1\n"), InputError);    // ragged row
  CHECK_THROWS_AS(parse("agent,x\na1,1\na1,2\n"), InputError);  // dup agent
  CHECK_THROWS_AS(parse("agent,x\na1,abc\n"), InputError);
  CHECK_THROWS_AS(parse("agent,x\na1,1.5extra\n"), InputError);
  CHECK_THROWS_AS(parse("agent,x\na1,nan\n"), InputError);
  CHECK_THROWS_AS(parse("agent,x\n"), InputError);         // no agents
  CHECK_THROWS_WITH(parse("agent,x\na1,\n"),
                    doctest::Contains("test.csv"));

  FeatureTable ok = parse("agent,x,y\n\na1, 1 ,2\na2,3,4\n");
  CHECK(ok.agents.size() == 2);
  CHECK(ok.values(0, 0) == 1.0);
}
