#include "macells/cell_formation.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <set>
#include <utility>

#include "macells/error.hpp"

namespace macells {

namespace {

// ---------------------------------------------------------------------------
// Working view: the input matrix restricted to rows and columns that carry at
// least one 1-entry. All-zero rows/columns hold no clustering signal and are
// reported separately by cluster_matrix.
// ---------------------------------------------------------------------------

struct Stripped {
  const IncidenceMatrix* m = nullptr;
  std::vector<int> rows;  // indices into m->routers
  std::vector<int> cols;  // indices into m->agents
  long ones = 0;

  int n_rows() const { return static_cast<int>(rows.size()); }
  int n_cols() const { return static_cast<int>(cols.size()); }
  int bit(int r, int c) const {
    return m->entries(rows[static_cast<std::size_t>(r)],
                      cols[static_cast<std::size_t>(c)]);
  }
  const Id& row_id(int r) const {
    return m->routers[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
  }
  const Id& col_id(int c) const {
    return m->agents[static_cast<std::size_t>(cols[static_cast<std::size_t>(c)])];
  }
};

Stripped strip(const IncidenceMatrix& m) {
  Stripped s;
  s.m = &m;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (m.entries.row(i).sum() > 0) s.rows.push_back(static_cast<int>(i));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    if (m.entries.col(j).sum() > 0) s.cols.push_back(static_cast<int>(j));
  s.ones = m.ones();
  return s;
}

// Cluster labels per stripped row/column.
struct Assignment {
  std::vector<int> row_of;
  std::vector<int> col_of;
  int count = 0;
};

// Exact grouping efficacy of an assignment, kept as a fraction so partition
// comparisons never depend on floating-point rounding.
struct Frac {
  long long num = 0;  // e - e_out  (in-block ones)
  long long den = 1;  // e + e_void
};

bool frac_greater(const Frac& a, const Frac& b) {
  return a.num * b.den > b.num * a.den;
}

Frac assignment_efficacy(const Stripped& s, const Assignment& a) {
  std::vector<long> cell_size(static_cast<std::size_t>(a.count), 0);
  std::vector<long> family_size(static_cast<std::size_t>(a.count), 0);
  for (int k : a.row_of) ++cell_size[static_cast<std::size_t>(k)];
  for (int k : a.col_of) ++family_size[static_cast<std::size_t>(k)];
  long long in_ones = 0;
  for (int r = 0; r < s.n_rows(); ++r)
    for (int c = 0; c < s.n_cols(); ++c)
      if (s.bit(r, c) != 0 && a.row_of[static_cast<std::size_t>(r)] ==
                                  a.col_of[static_cast<std::size_t>(c)])
        ++in_ones;
  long long in_cells = 0;
  for (int k = 0; k < a.count; ++k)
    in_cells += static_cast<long long>(cell_size[static_cast<std::size_t>(k)]) *
                family_size[static_cast<std::size_t>(k)];
  return Frac{in_ones, static_cast<long long>(s.ones) + in_cells - in_ones};
}

// ---------------------------------------------------------------------------
// Stage 1: rank-order sorting. Rows are sorted by their bit pattern read
// along the current column order (treated as a binary number, descending),
// columns likewise along the row order, repeated until neither moves. The
// start state and every tie-break use identifier order, which makes the
// fixed point independent of input row/column order.
// ---------------------------------------------------------------------------

void rank_order_sort(const Stripped& s, std::vector<int>& row_order,
                     std::vector<int>& col_order) {
  row_order.resize(static_cast<std::size_t>(s.n_rows()));
  col_order.resize(static_cast<std::size_t>(s.n_cols()));
  for (int r = 0; r < s.n_rows(); ++r)
    row_order[static_cast<std::size_t>(r)] = r;
  for (int c = 0; c < s.n_cols(); ++c)
    col_order[static_cast<std::size_t>(c)] = c;
  std::sort(row_order.begin(), row_order.end(),
            [&](int a, int b) { return id_less(s.row_id(a), s.row_id(b)); });
  std::sort(col_order.begin(), col_order.end(),
            [&](int a, int b) { return id_less(s.col_id(a), s.col_id(b)); });

  const int kMaxPasses = 512;  // cycle guard; typical inputs settle in a few
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    std::vector<int> prev_rows = row_order;
    std::vector<int> prev_cols = col_order;
    std::sort(row_order.begin(), row_order.end(), [&](int a, int b) {
      for (int c : col_order) {
        int ba = s.bit(a, c), bb = s.bit(b, c);
        if (ba != bb) return ba > bb;
      }
      return id_less(s.row_id(a), s.row_id(b));
    });
    std::sort(col_order.begin(), col_order.end(), [&](int a, int b) {
      for (int r : row_order) {
        int ba = s.bit(r, a), bb = s.bit(r, b);
        if (ba != bb) return ba > bb;
      }
      return id_less(s.col_id(a), s.col_id(b));
    });
    if (row_order == prev_rows && col_order == prev_cols) break;
  }
}

// ---------------------------------------------------------------------------
// Stage 2: block cuts. Given the sorted orders, choose contiguous diagonal
// blocks maximizing exact grouping efficacy. The ratio is maximized by
// Dinkelbach iteration: for a weight lambda = p/q the inner problem
// "maximize (q+p)*in_ones - p*in_cells over cut positions" is solved exactly
// in integers by dynamic programming over (row cut, column cut, blocks left).
// ---------------------------------------------------------------------------

struct CutPlan {
  // Block b spans row_order[row_at(b-1)..row_at(b)) and the matching column
  // range; both cut lists end with (n_rows, n_cols).
  std::vector<std::pair<int, int>> ends;
};

class CutSearch {
 public:
  CutSearch(const Stripped& s, const std::vector<int>& row_order,
            const std::vector<int>& col_order)
      : s_(s), row_order_(row_order), col_order_(col_order) {
    const int nr = s.n_rows(), nc = s.n_cols();
    prefix_.assign(static_cast<std::size_t>((nr + 1) * (nc + 1)), 0);
    for (int r = 0; r < nr; ++r)
      for (int c = 0; c < nc; ++c)
        at(r + 1, c + 1) = at(r, c + 1) + at(r + 1, c) - at(r, c) +
                           s.bit(row_order[static_cast<std::size_t>(r)],
                                 col_order[static_cast<std::size_t>(c)]);
  }

  // Best plan with exactly `blocks` diagonal blocks, or best over all block
  // counts when `blocks` is empty.
  std::pair<CutPlan, Frac> best(std::optional<int> blocks) const {
    const int max_blocks = std::min(s_.n_rows(), s_.n_cols());
    CutPlan best_plan;
    Frac best_eff{-1, 1};
    const int lo = blocks.value_or(1);
    const int hi = blocks.value_or(max_blocks);
    for (int r = lo; r <= hi; ++r) {
      auto [plan, eff] = dinkelbach(r);
      if (frac_greater(eff, best_eff)) {
        best_eff = eff;
        best_plan = std::move(plan);
      }
    }
    return {best_plan, best_eff};
  }

 private:
  long long& at(int r, int c) {
    return prefix_[static_cast<std::size_t>(r * (s_.n_cols() + 1) + c)];
  }
  long long at(int r, int c) const {
    return prefix_[static_cast<std::size_t>(r * (s_.n_cols() + 1) + c)];
  }
  long long block_ones(int r1, int r2, int c1, int c2) const {
    return at(r2, c2) - at(r1, c2) - at(r2, c1) + at(r1, c1);
  }

  // Maximize (q+p)*in_ones - p*in_cells with exactly `blocks` blocks;
  // returns the plan achieving it. Scanning cut candidates in ascending
  // order with strict improvement keeps the choice deterministic.
  CutPlan solve_weighted(long long p, long long q, int blocks) const {
    const int nr = s_.n_rows(), nc = s_.n_cols();
    constexpr long long kNegInf = std::numeric_limits<long long>::min() / 4;
    // dp[k][r][c]: best value covering rows r.., cols c.. with k blocks.
    auto idx = [&](int r, int c) {
      return static_cast<std::size_t>(r * (nc + 1) + c);
    };
    std::vector<long long> next(static_cast<std::size_t>((nr + 1) * (nc + 1)),
                                kNegInf);
    std::vector<std::vector<std::pair<int, int>>> choice(
        static_cast<std::size_t>(blocks + 1),
        std::vector<std::pair<int, int>>(
            static_cast<std::size_t>((nr + 1) * (nc + 1)), {-1, -1}));
    next[idx(nr, nc)] = 0;
    std::vector<long long> cur = next;
    for (int k = 1; k <= blocks; ++k) {
      std::fill(cur.begin(), cur.end(), kNegInf);
      for (int r = nr - k; r >= 0; --r) {
        for (int c = nc - k; c >= 0; --c) {
          long long best_v = kNegInf;
          std::pair<int, int> best_cut{-1, -1};
          for (int r2 = r + 1; r2 <= nr - (k - 1); ++r2) {
            for (int c2 = c + 1; c2 <= nc - (k - 1); ++c2) {
              if (k == 1 && (r2 != nr || c2 != nc)) continue;
              long long tail = next[idx(r2, c2)];
              if (tail == kNegInf) continue;
              long long ones = block_ones(r, r2, c, c2);
              long long cells =
                  static_cast<long long>(r2 - r) * (c2 - c);
              long long v = (q + p) * ones - p * cells + tail;
              if (v > best_v) {
                best_v = v;
                best_cut = {r2, c2};
              }
            }
          }
          cur[idx(r, c)] = best_v;
          choice[static_cast<std::size_t>(k)][idx(r, c)] = best_cut;
        }
      }
      std::swap(cur, next);
    }

    CutPlan plan;
    int r = 0, c = 0;
    for (int k = blocks; k >= 1; --k) {
      auto [r2, c2] = choice[static_cast<std::size_t>(k)][idx(r, c)];
      plan.ends.emplace_back(r2, c2);
      r = r2;
      c = c2;
    }
    return plan;
  }

  Frac plan_efficacy(const CutPlan& plan) const {
    long long in_ones = 0, in_cells = 0;
    int r = 0, c = 0;
    for (auto [r2, c2] : plan.ends) {
      in_ones += block_ones(r, r2, c, c2);
      in_cells += static_cast<long long>(r2 - r) * (c2 - c);
      r = r2;
      c = c2;
    }
    return Frac{in_ones, static_cast<long long>(s_.ones) + in_cells - in_ones};
  }

  std::pair<CutPlan, Frac> dinkelbach(int blocks) const {
    long long p = 0, q = 1;  // lambda = p/q, starts at zero
    CutPlan plan;
    for (;;) {
      plan = solve_weighted(p, q, blocks);
      Frac f = plan_efficacy(plan);
      if (f.num * q == p * f.den) return {plan, f};  // lambda reached the max
      p = f.num;
      q = f.den;
    }
  }

  const Stripped& s_;
  const std::vector<int>& row_order_;
  const std::vector<int>& col_order_;
  std::vector<long long> prefix_;
};

Assignment assignment_from_plan(const Stripped& s,
                                const std::vector<int>& row_order,
                                const std::vector<int>& col_order,
                                const CutPlan& plan) {
  Assignment a;
  a.row_of.assign(static_cast<std::size_t>(s.n_rows()), 0);
  a.col_of.assign(static_cast<std::size_t>(s.n_cols()), 0);
  a.count = static_cast<int>(plan.ends.size());
  int r = 0, c = 0, k = 0;
  for (auto [r2, c2] : plan.ends) {
    for (int i = r; i < r2; ++i)
      a.row_of[static_cast<std::size_t>(row_order[static_cast<std::size_t>(i)])] = k;
    for (int j = c; j < c2; ++j)
      a.col_of[static_cast<std::size_t>(col_order[static_cast<std::size_t>(j)])] = k;
    r = r2;
    c = c2;
    ++k;
  }
  return a;
}

// ---------------------------------------------------------------------------
// Stage 3: majority-vote refinement. Cuts can only produce blocks that are
// contiguous in the sorted order; known reference partitions are not
// always of that shape. Alternate two majority passes until nothing moves:
// first every router re-picks the family holding most of its ones (ties
// prefer the larger family, then the lower cluster index), then every agent
// re-picks the cell holding most of its ones (ties prefer the lower cluster
// index). The fixed point is returned; if the alternation enters a cycle or
// exceeds the pass cap, the best-efficacy state visited wins.
// ---------------------------------------------------------------------------

void refine(const Stripped& s, Assignment& a) {
  const int kMaxPasses = 64;
  std::set<std::pair<std::vector<int>, std::vector<int>>> seen;
  seen.insert({a.row_of, a.col_of});
  Assignment best = a;
  Frac best_eff = assignment_efficacy(s, a);

  for (int pass = 0; pass < kMaxPasses; ++pass) {
    bool changed = false;

    // Family sizes are frozen for the whole router pass so the outcome does
    // not depend on the order routers are visited in.
    std::vector<int> family_size(static_cast<std::size_t>(a.count), 0);
    for (int k : a.col_of) ++family_size[static_cast<std::size_t>(k)];
    for (int r = 0; r < s.n_rows(); ++r) {
      std::vector<int> cnt(static_cast<std::size_t>(a.count), 0);
      for (int c = 0; c < s.n_cols(); ++c)
        if (s.bit(r, c) != 0)
          ++cnt[static_cast<std::size_t>(a.col_of[static_cast<std::size_t>(c)])];
      int pick = a.row_of[static_cast<std::size_t>(r)];
      for (int k = 0; k < a.count; ++k) {
        const auto ck = cnt[static_cast<std::size_t>(k)];
        const auto cp = cnt[static_cast<std::size_t>(pick)];
        if (ck > cp ||
            (ck == cp && family_size[static_cast<std::size_t>(k)] >
                             family_size[static_cast<std::size_t>(pick)]) ||
            (ck == cp &&
             family_size[static_cast<std::size_t>(k)] ==
                 family_size[static_cast<std::size_t>(pick)] &&
             k < pick))
          pick = k;
      }
      if (pick != a.row_of[static_cast<std::size_t>(r)]) {
        a.row_of[static_cast<std::size_t>(r)] = pick;
        changed = true;
      }
    }

    // Agents vote against the cells the router pass just produced.
    for (int c = 0; c < s.n_cols(); ++c) {
      std::vector<int> cnt(static_cast<std::size_t>(a.count), 0);
      for (int r = 0; r < s.n_rows(); ++r)
        if (s.bit(r, c) != 0)
          ++cnt[static_cast<std::size_t>(a.row_of[static_cast<std::size_t>(r)])];
      int pick = a.col_of[static_cast<std::size_t>(c)];
      for (int k = 0; k < a.count; ++k)
        if (cnt[static_cast<std::size_t>(k)] > cnt[static_cast<std::size_t>(pick)] ||
            (cnt[static_cast<std::size_t>(k)] ==
                 cnt[static_cast<std::size_t>(pick)] &&
             k < pick))
          pick = k;
      if (pick != a.col_of[static_cast<std::size_t>(c)]) {
        a.col_of[static_cast<std::size_t>(c)] = pick;
        changed = true;
      }
    }

    if (!changed) return;  // fixed point

    Frac eff = assignment_efficacy(s, a);
    if (frac_greater(eff, best_eff)) {
      best_eff = eff;
      best = a;
    }
    if (!seen.insert({a.row_of, a.col_of}).second) break;  // cycle
  }
  a = best;
}

// A state captured mid-cycle can leave a cluster populated on one axis only;
// push those members to their majority choice among two-sided clusters so
// every reported cluster has both a cell and a family. (A refinement fixed
// point never needs this.)
void settle_one_sided(const Stripped& s, Assignment& a) {
  for (;;) {
    std::vector<int> cell_size(static_cast<std::size_t>(a.count), 0);
    std::vector<int> family_size(static_cast<std::size_t>(a.count), 0);
    for (int k : a.row_of) ++cell_size[static_cast<std::size_t>(k)];
    for (int k : a.col_of) ++family_size[static_cast<std::size_t>(k)];

    bool moved = false;
    for (int r = 0; r < s.n_rows(); ++r) {
      int cur = a.row_of[static_cast<std::size_t>(r)];
      if (family_size[static_cast<std::size_t>(cur)] > 0) continue;
      int pick = -1;
      int pick_cnt = -1;
      std::vector<int> cnt(static_cast<std::size_t>(a.count), 0);
      for (int c = 0; c < s.n_cols(); ++c)
        if (s.bit(r, c) != 0)
          ++cnt[static_cast<std::size_t>(a.col_of[static_cast<std::size_t>(c)])];
      for (int k = 0; k < a.count; ++k) {
        if (family_size[static_cast<std::size_t>(k)] == 0) continue;
        if (cnt[static_cast<std::size_t>(k)] > pick_cnt) {
          pick_cnt = cnt[static_cast<std::size_t>(k)];
          pick = k;
        }
      }
      if (pick >= 0) {
        a.row_of[static_cast<std::size_t>(r)] = pick;
        moved = true;
      }
    }
    for (int c = 0; c < s.n_cols(); ++c) {
      int cur = a.col_of[static_cast<std::size_t>(c)];
      if (cell_size[static_cast<std::size_t>(cur)] > 0) continue;
      int pick = -1;
      int pick_cnt = -1;
      std::vector<int> cnt(static_cast<std::size_t>(a.count), 0);
      for (int r = 0; r < s.n_rows(); ++r)
        if (s.bit(r, c) != 0)
          ++cnt[static_cast<std::size_t>(a.row_of[static_cast<std::size_t>(r)])];
      for (int k = 0; k < a.count; ++k) {
        if (cell_size[static_cast<std::size_t>(k)] == 0) continue;
        if (cnt[static_cast<std::size_t>(k)] > pick_cnt) {
          pick_cnt = cnt[static_cast<std::size_t>(k)];
          pick = k;
        }
      }
      if (pick >= 0) {
        a.col_of[static_cast<std::size_t>(c)] = pick;
        moved = true;
      }
    }
    if (!moved) return;
  }
}

// ---------------------------------------------------------------------------
// Exhaustive mode: exact efficacy maximization over every partition in which
// each cluster owns at least one router and one agent. Router groupings are
// enumerated as set partitions (restricted growth strings); agents are then
// assigned by depth-first search with surjectivity pruning. Equal-efficacy
// candidates are settled by the lexicographically smallest id-sorted
// serialization, which keeps the result independent of enumeration order.
// ---------------------------------------------------------------------------

using CanonicalForm = std::vector<std::pair<std::vector<Id>, std::vector<Id>>>;

CanonicalForm canonical_form(const Stripped& s, const Assignment& a) {
  CanonicalForm form(static_cast<std::size_t>(a.count));
  for (int r = 0; r < s.n_rows(); ++r)
    form[static_cast<std::size_t>(a.row_of[static_cast<std::size_t>(r)])]
        .first.push_back(s.row_id(r));
  for (int c = 0; c < s.n_cols(); ++c)
    form[static_cast<std::size_t>(a.col_of[static_cast<std::size_t>(c)])]
        .second.push_back(s.col_id(c));
  for (auto& [cell, family] : form) {
    sort_ids(cell);
    sort_ids(family);
  }
  std::sort(form.begin(), form.end(), [](const auto& x, const auto& y) {
    // Cells are disjoint and nonempty, so lowest members differ.
    return id_less(x.first.front(), y.first.front());
  });
  return form;
}

bool canonical_less(const CanonicalForm& x, const CanonicalForm& y) {
  auto vec_cmp = [](const std::vector<Id>& a, const std::vector<Id>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                        id_less);
  };
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (vec_cmp(x[i].first, y[i].first)) return true;
    if (vec_cmp(y[i].first, x[i].first)) return false;
    if (vec_cmp(x[i].second, y[i].second)) return true;
    if (vec_cmp(y[i].second, x[i].second)) return false;
  }
  return x.size() < y.size();
}

class ExhaustiveSearch {
 public:
  ExhaustiveSearch(const Stripped& s, std::optional<int> fixed_count)
      : s_(s), fixed_count_(fixed_count) {}

  Assignment run() {
    const int nr = s_.n_rows(), nc = s_.n_cols();
    if (nr > 8 || nc > 8)
      throw InfeasibleError(
          "exhaustive mode handles at most 8 nonzero rows and 8 nonzero "
          "columns; got " +
          std::to_string(nr) + "x" + std::to_string(nc));

    std::vector<int> labels(static_cast<std::size_t>(nr), 0);
    enumerate_router_partitions(labels, 0, 0);
    if (!found_)
      throw InfeasibleError("no feasible partition for the requested cluster count");
    return best_;
  }

 private:
  // Restricted growth: position i may reuse an existing label or open the
  // next fresh one, so every set partition appears exactly once.
  void enumerate_router_partitions(std::vector<int>& labels, int used,
                                   std::size_t pos) {
    if (pos == labels.size()) {
      try_router_partition(labels, used);
      return;
    }
    for (int k = 0; k < std::min(used + 1, s_.n_rows()); ++k) {
      labels[pos] = k;
      enumerate_router_partitions(labels, std::max(used, k + 1), pos + 1);
    }
  }

  void try_router_partition(const std::vector<int>& row_of, int count) {
    if (fixed_count_ && count != *fixed_count_) return;
    if (count > s_.n_cols()) return;  // some cluster would get no agent

    const int nc = s_.n_cols();
    std::vector<int> cell_size(static_cast<std::size_t>(count), 0);
    for (int k : row_of) ++cell_size[static_cast<std::size_t>(k)];
    // in_cell[j][k]: 1-entries of agent j inside cluster k's cell.
    std::vector<std::vector<long long>> in_cell(
        static_cast<std::size_t>(nc),
        std::vector<long long>(static_cast<std::size_t>(count), 0));
    for (int r = 0; r < s_.n_rows(); ++r)
      for (int c = 0; c < nc; ++c)
        if (s_.bit(r, c) != 0)
          ++in_cell[static_cast<std::size_t>(c)]
                   [static_cast<std::size_t>(row_of[static_cast<std::size_t>(r)])];

    std::vector<int> col_of(static_cast<std::size_t>(nc), 0);
    std::vector<int> occupancy(static_cast<std::size_t>(count), 0);
    assign_agents(row_of, count, cell_size, in_cell, col_of, occupancy, 0, 0,
                  0, count);
  }

  void assign_agents(const std::vector<int>& row_of, int count,
                     const std::vector<int>& cell_size,
                     const std::vector<std::vector<long long>>& in_cell,
                     std::vector<int>& col_of, std::vector<int>& occupancy,
                     int pos, long long sum_in, long long sum_cells,
                     int empty_left) {
    const int nc = s_.n_cols();
    if (nc - pos < empty_left) return;  // cannot fill every cluster
    if (pos == nc) {
      Frac eff{sum_in, static_cast<long long>(s_.ones) + sum_cells - sum_in};
      consider(row_of, col_of, count, eff);
      return;
    }
    for (int k = 0; k < count; ++k) {
      const bool was_empty = occupancy[static_cast<std::size_t>(k)] == 0;
      ++occupancy[static_cast<std::size_t>(k)];
      col_of[static_cast<std::size_t>(pos)] = k;
      assign_agents(row_of, count, cell_size, in_cell, col_of, occupancy,
                    pos + 1,
                    sum_in + in_cell[static_cast<std::size_t>(pos)]
                                    [static_cast<std::size_t>(k)],
                    sum_cells + cell_size[static_cast<std::size_t>(k)],
                    empty_left - (was_empty ? 1 : 0));
      --occupancy[static_cast<std::size_t>(k)];
    }
  }

  void consider(const std::vector<int>& row_of, const std::vector<int>& col_of,
                int count, const Frac& eff) {
    if (found_ && frac_greater(best_eff_, eff)) return;
    Assignment cand{row_of, col_of, count};
    if (!found_ || frac_greater(eff, best_eff_)) {
      best_ = std::move(cand);
      best_eff_ = eff;
      best_form_ = canonical_form(s_, best_);
      found_ = true;
      return;
    }
    // Equal efficacy: keep the canonical minimum.
    CanonicalForm form = canonical_form(s_, cand);
    if (canonical_less(form, best_form_)) {
      best_ = std::move(cand);
      best_form_ = std::move(form);
    }
  }

  const Stripped& s_;
  std::optional<int> fixed_count_;
  Assignment best_;
  Frac best_eff_{-1, 1};
  CanonicalForm best_form_;
  bool found_ = false;
};

// ---------------------------------------------------------------------------
// Partition plumbing shared by the public metric operations.
// ---------------------------------------------------------------------------

void validate_partition(const IncidenceMatrix& m, const Partition& p) {
  if (p.count < 1)
    throw InputError("partition must define at least one cluster");
  std::set<Id> routers(m.routers.begin(), m.routers.end());
  std::set<Id> agents(m.agents.begin(), m.agents.end());
  for (const auto& [id, k] : p.router_cluster) {
    if (routers.find(id) == routers.end())
      throw InputError("partition references unknown router '" + id + "'");
    if (k < 0 || k >= p.count)
      throw InputError("cluster index " + std::to_string(k) + " for router '" +
                       id + "' is out of range");
  }
  for (const auto& [id, k] : p.agent_cluster) {
    if (agents.find(id) == agents.end())
      throw InputError("partition references unknown agent '" + id + "'");
    if (k < 0 || k >= p.count)
      throw InputError("cluster index " + std::to_string(k) + " for agent '" +
                       id + "' is out of range");
  }
  // Everything that carries signal must be covered; all-zero rows/columns
  // may stay unassigned.
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (m.entries.row(i).sum() > 0 &&
        p.router_cluster.find(m.routers[static_cast<std::size_t>(i)]) ==
            p.router_cluster.end())
      throw InputError("partition does not cover router '" +
                       m.routers[static_cast<std::size_t>(i)] + "'");
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    if (m.entries.col(j).sum() > 0 &&
        p.agent_cluster.find(m.agents[static_cast<std::size_t>(j)]) ==
            p.agent_cluster.end())
      throw InputError("partition does not cover agent '" +
                       m.agents[static_cast<std::size_t>(j)] + "'");
}

// Cluster index per row/col of m under partition p, or -1 when unassigned.
std::pair<std::vector<int>, std::vector<int>> partition_vectors(
    const IncidenceMatrix& m, const Partition& p) {
  std::vector<int> row_of(static_cast<std::size_t>(m.rows()), -1);
  std::vector<int> col_of(static_cast<std::size_t>(m.cols()), -1);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto it = p.router_cluster.find(m.routers[static_cast<std::size_t>(i)]);
    if (it != p.router_cluster.end())
      row_of[static_cast<std::size_t>(i)] = it->second;
  }
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    auto it = p.agent_cluster.find(m.agents[static_cast<std::size_t>(j)]);
    if (it != p.agent_cluster.end())
      col_of[static_cast<std::size_t>(j)] = it->second;
  }
  return {std::move(row_of), std::move(col_of)};
}

// ---------------------------------------------------------------------------
// Final assembly: order clusters by their lowest router id, build the public
// partition, and derive every reported metric through the public operations
// so stored values are consistent with recomputation by construction.
// ---------------------------------------------------------------------------

CellFormation finalize(const IncidenceMatrix& m, const Stripped& s,
                       const Assignment& a, double tau) {
  // Drop unused labels and order the survivors by lowest router id.
  std::vector<std::vector<int>> cell_rows(static_cast<std::size_t>(a.count));
  for (int r = 0; r < s.n_rows(); ++r)
    cell_rows[static_cast<std::size_t>(a.row_of[static_cast<std::size_t>(r)])]
        .push_back(r);
  std::vector<int> order;
  for (int k = 0; k < a.count; ++k)
    if (!cell_rows[static_cast<std::size_t>(k)].empty()) order.push_back(k);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    const Id* bx = nullptr;
    for (int r : cell_rows[static_cast<std::size_t>(x)])
      if (bx == nullptr || id_less(s.row_id(r), *bx)) bx = &s.row_id(r);
    const Id* by = nullptr;
    for (int r : cell_rows[static_cast<std::size_t>(y)])
      if (by == nullptr || id_less(s.row_id(r), *by)) by = &s.row_id(r);
    return id_less(*bx, *by);
  });
  std::vector<int> relabel(static_cast<std::size_t>(a.count), -1);
  for (std::size_t i = 0; i < order.size(); ++i)
    relabel[static_cast<std::size_t>(order[i])] = static_cast<int>(i);

  CellFormation out;
  out.partition.count = static_cast<int>(order.size());
  out.clusters.resize(order.size());
  for (int r = 0; r < s.n_rows(); ++r) {
    int k = relabel[static_cast<std::size_t>(a.row_of[static_cast<std::size_t>(r)])];
    out.partition.router_cluster[s.row_id(r)] = k;
    out.clusters[static_cast<std::size_t>(k)].cell.push_back(s.row_id(r));
  }
  for (int c = 0; c < s.n_cols(); ++c) {
    int k = relabel[static_cast<std::size_t>(a.col_of[static_cast<std::size_t>(c)])];
    out.partition.agent_cluster[s.col_id(c)] = k;
    out.clusters[static_cast<std::size_t>(k)].family.push_back(s.col_id(c));
  }
  for (auto& cluster : out.clusters) {
    sort_ids(cluster.cell);
    sort_ids(cluster.family);
  }

  out.exceptional = exceptional_elements(m, out.partition);
  {
    std::set<Id, IdLess> routers, agents;
    for (const auto& [r, c] : out.exceptional) {
      routers.insert(r);
      agents.insert(c);
    }
    out.bottleneck_routers.assign(routers.begin(), routers.end());
    out.exceptional_agents.assign(agents.begin(), agents.end());
  }
  out.efficacy = grouping_efficacy(m, out.partition);
  out.duplicated_agents = duplicated_agents(m, out.partition, tau);

  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (m.entries.row(i).sum() == 0)
      out.zero_routers.push_back(m.routers[static_cast<std::size_t>(i)]);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    if (m.entries.col(j).sum() == 0)
      out.zero_agents.push_back(m.agents[static_cast<std::size_t>(j)]);
  sort_ids(out.zero_routers);
  sort_ids(out.zero_agents);
  return out;
}

}  // namespace

std::vector<Id> CellFormation::family_with_duplicates(int k) const {
  std::vector<Id> ids = clusters[static_cast<std::size_t>(k)].family;
  for (const auto& [agent, extras] : duplicated_agents)
    if (std::find(extras.begin(), extras.end(), k) != extras.end())
      ids.push_back(agent);
  sort_ids(ids);
  return ids;
}

CellFormation cluster_matrix(const IncidenceMatrix& m,
                             const ClusterConfig& config) {
  m.validate();
  if (m.ones() == 0)
    throw InfeasibleError("all-zero incidence matrix: no structure to cluster");
  if (config.duplication_tau < 0.0 || config.duplication_tau > 1.0)
    throw InputError("duplication threshold must lie in [0, 1]");

  Stripped s = strip(m);
  if (config.cluster_count) {
    if (*config.cluster_count < 1)
      throw InputError("cluster count must be at least 1");
    if (*config.cluster_count > std::min(s.n_rows(), s.n_cols()))
      throw InfeasibleError(
          "cluster count " + std::to_string(*config.cluster_count) +
          " exceeds the " + std::to_string(std::min(s.n_rows(), s.n_cols())) +
          " nonzero rows/columns available");
  }

  Assignment a;
  if (config.mode == ClusterMode::kExhaustive) {
    a = ExhaustiveSearch(s, config.cluster_count).run();
  } else {
    std::vector<int> row_order, col_order;
    rank_order_sort(s, row_order, col_order);
    CutSearch cuts(s, row_order, col_order);
    auto [plan, eff] = cuts.best(config.cluster_count);
    a = assignment_from_plan(s, row_order, col_order, plan);
    // An explicit cluster count pins the cut structure; refinement could
    // merge blocks away, so it runs only in the free-count search.
    if (!config.cluster_count) {
      refine(s, a);
      settle_one_sided(s, a);
    }
  }
  return finalize(m, s, a, config.duplication_tau);
}

std::vector<std::pair<Id, Id>> exceptional_elements(const IncidenceMatrix& m,
                                                    const Partition& p) {
  m.validate();
  validate_partition(m, p);
  auto [row_of, col_of] = partition_vectors(m, p);
  std::vector<std::pair<Id, Id>> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m.entries(i, j) != 0 &&
          row_of[static_cast<std::size_t>(i)] !=
              col_of[static_cast<std::size_t>(j)])
        out.emplace_back(m.routers[static_cast<std::size_t>(i)],
                         m.agents[static_cast<std::size_t>(j)]);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return id_less(a.first, b.first);
    return id_less(a.second, b.second);
  });
  return out;
}

EfficacyCounts grouping_efficacy(const IncidenceMatrix& m, const Partition& p) {
  m.validate();
  validate_partition(m, p);
  EfficacyCounts counts;
  counts.ones = m.ones();
  if (counts.ones == 0)
    throw InfeasibleError("grouping efficacy undefined for an all-zero matrix");
  auto [row_of, col_of] = partition_vectors(m, p);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (row_of[static_cast<std::size_t>(i)] < 0) continue;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (row_of[static_cast<std::size_t>(i)] ==
          col_of[static_cast<std::size_t>(j)]) {
        if (m.entries(i, j) == 0) ++counts.voids;
      }
    }
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m.entries(i, j) != 0 &&
          (row_of[static_cast<std::size_t>(i)] < 0 ||
           row_of[static_cast<std::size_t>(i)] !=
               col_of[static_cast<std::size_t>(j)]))
        ++counts.exceptional;
  return counts;
}

std::map<Id, std::vector<int>, IdLess> duplicated_agents(
    const IncidenceMatrix& m, const Partition& p, double tau) {
  m.validate();
  validate_partition(m, p);
  if (tau < 0.0 || tau > 1.0)
    throw InputError("duplication threshold must lie in [0, 1]");
  auto [row_of, col_of] = partition_vectors(m, p);

  std::map<Id, std::vector<int>, IdLess> out;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const int primary = col_of[static_cast<std::size_t>(j)];
    if (primary < 0) continue;
    long total = 0;
    std::vector<long> in_cell(static_cast<std::size_t>(p.count), 0);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m.entries(i, j) == 0) continue;
      ++total;
      if (row_of[static_cast<std::size_t>(i)] >= 0)
        ++in_cell[static_cast<std::size_t>(row_of[static_cast<std::size_t>(i)])];
    }
    if (total == 0) continue;
    std::vector<int> extras;
    for (int k = 0; k < p.count; ++k) {
      if (k == primary) continue;
      double share = static_cast<double>(in_cell[static_cast<std::size_t>(k)]) /
                     static_cast<double>(total);
      if (share >= tau && in_cell[static_cast<std::size_t>(k)] > 0)
        extras.push_back(k);
    }
    if (!extras.empty())
      out[m.agents[static_cast<std::size_t>(j)]] = std::move(extras);
  }
  return out;
}

}  // namespace macells
