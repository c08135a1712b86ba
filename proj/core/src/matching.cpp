#include "lms/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "lms/error.hpp"

namespace lms {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// Buffers reused across calls so a decision allocates almost nothing.
struct Workspace {
  std::vector<double> u, v, minv;
  std::vector<std::size_t> p, way;
  std::vector<char> used;
  // duals of the full problem, by group and by PRB
  std::vector<double> group_dual, prb_dual;
  std::vector<std::size_t> current, rest_groups, rest_prbs, rest_assign, candidates;
  std::vector<char> prb_taken;
};

// Min-cost assignment of every row of an n x m cost matrix (n <= m) to a
// distinct column. Afterwards p[j] is the 1-based row of column j (0 if
// free); potentials satisfy u[r] + v[c] <= cost(r, c) with equality on
// matched pairs, v[c] <= 0, and v[c] == 0 on unmatched columns.
template <typename Cost>
void solve_assignment(std::size_t n, std::size_t m, Cost cost, Workspace& ws) {
  // 1-based internally; column 0 is the virtual start column
  ws.u.assign(n + 1, 0.0);
  ws.v.assign(m + 1, 0.0);
  ws.minv.resize(m + 1);
  ws.p.assign(m + 1, 0);
  ws.way.assign(m + 1, 0);
  ws.used.resize(m + 1);
  auto& u = ws.u;
  auto& v = ws.v;
  auto& p = ws.p;

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(ws.minv.begin(), ws.minv.end(), kInf);
    std::fill(ws.used.begin(), ws.used.end(), 0);
    do {
      ws.used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (ws.used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < ws.minv[j]) {
          ws.minv[j] = cur;
          ws.way[j] = j0;
        }
        if (ws.minv[j] < delta) {
          delta = ws.minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (ws.used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          ws.minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = ws.way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
}

struct SubResult {
  double value = 0.0;
  std::size_t cardinality = 0;
  bool groups_are_rows = true;
};

// Max-weight, max-cardinality matching of the submatrix selected by `groups`
// and `prbs`. Writes the PRB of each listed group (kNone if unmatched) to
// `assign`; with `keep_duals` also stores the potentials in group/PRB terms.
SubResult solve_sub(const WeightMatrix& w, const std::vector<std::size_t>& groups,
                    const std::vector<std::size_t>& prbs, std::vector<std::size_t>& assign,
                    Workspace& ws, bool keep_duals) {
  SubResult out;
  assign.assign(groups.size(), kNone);
  if (groups.empty() || prbs.empty()) return out;

  out.groups_are_rows = groups.size() <= prbs.size();
  if (out.groups_are_rows) {
    solve_assignment(groups.size(), prbs.size(),
                     [&](std::size_t r, std::size_t c) { return -w(groups[r], prbs[c]); }, ws);
    for (std::size_t c = 1; c <= prbs.size(); ++c)
      if (ws.p[c] != 0) assign[ws.p[c] - 1] = prbs[c - 1];
    if (keep_duals) {
      ws.group_dual.assign(ws.u.begin() + 1, ws.u.end());
      ws.prb_dual.assign(ws.v.begin() + 1, ws.v.end());
    }
  } else {
    solve_assignment(prbs.size(), groups.size(),
                     [&](std::size_t r, std::size_t c) { return -w(groups[c], prbs[r]); }, ws);
    for (std::size_t c = 1; c <= groups.size(); ++c)
      if (ws.p[c] != 0) assign[c - 1] = prbs[ws.p[c] - 1];
    if (keep_duals) {
      ws.prb_dual.assign(ws.u.begin() + 1, ws.u.end());
      ws.group_dual.assign(ws.v.begin() + 1, ws.v.end());
    }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (assign[g] == kNone) continue;
    out.value += w(groups[g], assign[g]);
    ++out.cardinality;
  }
  return out;
}

void validate(const WeightMatrix& w) {
  if (w.rows() == 0 || w.cols() == 0) throw InputError("weight matrix must be nonempty");
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      const double x = w(i, j);
      if (!std::isfinite(x) || x < 0.0)
        throw InputError(fmt::format("weight ({}, {}) = {} must be finite and nonnegative", i, j, x));
    }
}

}  // namespace

std::size_t Matching::cardinality() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(assignment.begin(), assignment.end(), [](const auto& a) { return a.has_value(); }));
}

Matching max_weight_matching(const WeightMatrix& w) {
  validate(w);
  thread_local Workspace ws;
  const std::size_t num_groups = w.rows();
  const std::size_t num_prbs = w.cols();
  const std::size_t full_cardinality = std::min(num_groups, num_prbs);

  ws.rest_groups.resize(num_groups);
  ws.rest_prbs.resize(num_prbs);
  for (std::size_t i = 0; i < num_groups; ++i) ws.rest_groups[i] = i;
  for (std::size_t j = 0; j < num_prbs; ++j) ws.rest_prbs[j] = j;

  const SubResult best = solve_sub(w, ws.rest_groups, ws.rest_prbs, ws.current, ws, true);
  std::vector<std::size_t>& current = ws.current;
  const double optimum = best.value;

  double max_weight = 0.0;
  for (double x : w.data()) max_weight = std::max(max_weight, x);
  const double value_tol = 1e-12 * std::max(1.0, std::abs(optimum));
  const double dual_tol = 1e-9 * std::max(1.0, max_weight);

  // Every optimal matching uses only edges that are tight under the optimal
  // potentials, and leaves unmatched only vertices whose potential is zero.
  auto tight = [&](std::size_t g, std::size_t j) {
    return std::abs(ws.group_dual[g] + ws.prb_dual[j] + w(g, j)) <= dual_tol;
  };
  auto may_be_unmatched = [&](std::size_t g) {
    return !best.groups_are_rows && ws.group_dual[g] >= -dual_tol;
  };

  // Greedy lexicographic descent: fix groups in order, trying each smaller
  // candidate value and keeping it if an optimal completion exists.
  ws.prb_taken.assign(num_prbs, 0);
  double fixed_value = 0.0;
  std::size_t fixed_cardinality = 0;
  for (std::size_t g = 0; g < num_groups; ++g) {
    // encode "unscheduled" as 0 and PRB j as j + 1 to compare lexicographically
    const std::size_t current_code = current[g] == kNone ? 0 : current[g] + 1;
    ws.candidates.clear();
    if (current_code > 0 && may_be_unmatched(g)) ws.candidates.push_back(0);
    for (std::size_t j = 0; j + 1 < current_code; ++j)
      if (!ws.prb_taken[j] && tight(g, j)) ws.candidates.push_back(j + 1);

    for (std::size_t code : ws.candidates) {
      ws.rest_groups.clear();
      ws.rest_prbs.clear();
      for (std::size_t h = g + 1; h < num_groups; ++h) ws.rest_groups.push_back(h);
      for (std::size_t j = 0; j < num_prbs; ++j)
        if (!ws.prb_taken[j] && j + 1 != code) ws.rest_prbs.push_back(j);
      const SubResult rest = solve_sub(w, ws.rest_groups, ws.rest_prbs, ws.rest_assign, ws, false);
      const double head = code == 0 ? 0.0 : w(g, code - 1);
      const std::size_t card = fixed_cardinality + (code != 0) + rest.cardinality;
      if (card != full_cardinality) continue;
      if (std::abs(fixed_value + head + rest.value - optimum) > value_tol) continue;

      current[g] = code == 0 ? kNone : code - 1;
      for (std::size_t r = 0; r < ws.rest_groups.size(); ++r) current[ws.rest_groups[r]] = ws.rest_assign[r];
      break;
    }
    if (current[g] != kNone) {
      ws.prb_taken[current[g]] = 1;
      fixed_value += w(g, current[g]);
      ++fixed_cardinality;
    }
  }

  Matching out;
  out.assignment.resize(num_groups);
  for (std::size_t g = 0; g < num_groups; ++g)
    if (current[g] != kNone) {
      out.assignment[g] = current[g];
      out.total_weight += w(g, current[g]);
    }
  return out;
}

AllocationVector matching_to_allocation(const Matching& m) {
  AllocationVector b{std::vector<std::size_t>(m.assignment.size(), 0)};
  for (std::size_t g = 0; g < m.assignment.size(); ++g)
    if (m.assignment[g]) b.prb[g] = *m.assignment[g] + 1;
  return b;
}

}  // namespace lms
