#include "lms/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "lms/error.hpp"
#include "simplex.hpp"

namespace lms {

void SmallChannelModel::validate(std::size_t num_ues, std::size_t num_prbs) const {
  if (states.empty()) throw ValidationError("small_model", "needs at least one state");
  if (states.size() > kMaxStates)
    throw ValidationError("small_model", fmt::format("{} states exceed the cap of {}", states.size(), kMaxStates));
  if (probabilities.size() != states.size())
    throw ValidationError("small_model.probabilities",
                          fmt::format("expected {} values, got {}", states.size(), probabilities.size()));
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw ValidationError("small_model.probabilities", "must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError("small_model.probabilities", fmt::format("sum to {}, not 1", total));
  for (std::size_t c = 0; c < states.size(); ++c) {
    const auto& r = states[c];
    if (r.rows() != num_ues || r.cols() != num_prbs)
      throw ValidationError(fmt::format("small_model.state{}", c),
                            fmt::format("is {}x{}, expected {}x{}", r.rows(), r.cols(), num_ues, num_prbs));
    for (double x : r.data())
      if (!(x >= 0.0) || !std::isfinite(x))
        throw ValidationError(fmt::format("small_model.state{}", c), "rates must be finite and nonnegative");
  }
}

ChannelRealization SmallChannelModel::realization(std::size_t state) const {
  return ChannelRealization{states.at(state), Matrix<int>(), state};
}

std::size_t SmallChannelModel::sample_state(Rng& rng) const {
  std::discrete_distribution<std::size_t> pick(probabilities.begin(), probabilities.end());
  return pick(rng);
}

ServiceVector service_vector_of(const AllocationVector& b, const Matrix<double>& rates,
                                const Scenario& s) {
  ServiceVector mu(s.num_ues(), 0);
  for (std::size_t k = 0; k < s.num_ues(); ++k) {
    const std::size_t g = s.group_of(k);
    if (b[g] != 0 && s.stream_rate(g) <= rates(k, b[g] - 1)) mu[k] = 1;
  }
  return mu;
}

namespace {

struct LpGrid {
  std::vector<AllocationVector> allocations;
  // service[c][i] = mu for allocation i in state c
  std::vector<std::vector<ServiceVector>> service;
};

LpGrid build_grid(const SmallChannelModel& model, const ArrivalRates& lambda, const Scenario& s,
                  std::size_t variable_cap) {
  model.validate(s.num_ues(), s.num_prbs());
  if (lambda.size() != s.num_ues())
    throw InputError(fmt::format("{} arrival rates for {} UEs", lambda.size(), s.num_ues()));
  const std::size_t per_state = count_allocations(s.num_groups(), s.num_prbs());
  if (per_state > variable_cap / model.size())
    throw SizeError(fmt::format("LP would need {} x {} variables, above the cap of {}", per_state,
                                model.size(), variable_cap));
  LpGrid grid;
  grid.allocations = enumerate_allocations(s.num_groups(), s.num_prbs(), variable_cap);
  grid.service.resize(model.size());
  for (std::size_t c = 0; c < model.size(); ++c)
    for (const auto& b : grid.allocations) grid.service[c].push_back(service_vector_of(b, model.states[c], s));
  return grid;
}

// Rows: M service constraints (with surplus), then one simplex row per state.
// Columns: w (states x allocations), M surplus, optionally delta.
struct LpForm {
  Matrix<double> a;
  std::vector<double> b;
  std::size_t num_w = 0;
};

LpForm build_form(const SmallChannelModel& model, const ArrivalRates& lambda, double delta,
                  const LpGrid& grid, bool delta_variable) {
  const std::size_t m = lambda.size();
  const std::size_t na = grid.allocations.size();
  const std::size_t ns = model.size();
  LpForm f;
  f.num_w = ns * na;
  const std::size_t cols = f.num_w + m + (delta_variable ? 1 : 0);
  f.a = Matrix<double>(m + ns, cols, 0.0);
  f.b.assign(m + ns, 0.0);
  for (std::size_t c = 0; c < ns; ++c)
    for (std::size_t i = 0; i < na; ++i) {
      const std::size_t col = c * na + i;
      for (std::size_t k = 0; k < m; ++k)
        if (grid.service[c][i][k]) f.a(k, col) = model.probabilities[c];
      f.a(m + c, col) = 1.0;
    }
  for (std::size_t k = 0; k < m; ++k) {
    f.a(k, f.num_w + k) = -1.0;
    if (delta_variable) f.a(k, cols - 1) = -1.0;
    f.b[k] = lambda[k] + (delta_variable ? 0.0 : delta);
  }
  for (std::size_t c = 0; c < ns; ++c) f.b[m + c] = 1.0;
  return f;
}

LpSolution unpack(const SmallChannelModel& model, const ArrivalRates& lambda, const LpGrid& grid,
                  const std::vector<double>& x) {
  LpSolution sol;
  sol.feasible = true;
  sol.allocations = grid.allocations;
  const std::size_t na = grid.allocations.size();
  sol.weights.assign(model.size(), std::vector<double>(na, 0.0));
  for (std::size_t c = 0; c < model.size(); ++c)
    for (std::size_t i = 0; i < na; ++i) sol.weights[c][i] = x[c * na + i];

  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    double service = 0.0;
    for (std::size_t c = 0; c < model.size(); ++c)
      for (std::size_t i = 0; i < na; ++i)
        if (grid.service[c][i][k]) service += model.probabilities[c] * sol.weights[c][i];
    margin = std::min(margin, service - lambda[k]);
  }
  sol.achieved_delta = margin;
  return sol;
}

}  // namespace

LpSolution lp_delta_feasible(const SmallChannelModel& model, const ArrivalRates& lambda,
                             double delta, const Scenario& s, std::size_t variable_cap) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InputError("delta must be finite and nonnegative");
  const LpGrid grid = build_grid(model, lambda, s, variable_cap);
  const LpForm form = build_form(model, lambda, delta, grid, false);
  const std::vector<double> cost(form.a.cols(), 0.0);
  const lp::Result r = lp::solve_standard_form(form.a, form.b, cost);
  if (r.status != lp::Status::optimal) {
    LpSolution sol;
    sol.allocations = grid.allocations;
    return sol;
  }
  LpSolution sol = unpack(model, lambda, grid, r.x);
  const WitnessResiduals res = check_witness(model, lambda, delta, s, sol);
  if (!res.within(1e-9))
    throw SolverError(fmt::format("witness violates constraints: min weight {}, row-sum error {}, "
                                  "service shortfall {}",
                                  res.min_weight, res.max_row_sum_error, res.max_service_shortfall));
  return sol;
}

std::optional<double> max_feasible_delta(const SmallChannelModel& model, const ArrivalRates& lambda,
                                         const Scenario& s, std::size_t variable_cap) {
  const LpGrid grid = build_grid(model, lambda, s, variable_cap);
  const LpForm form = build_form(model, lambda, 0.0, grid, true);
  std::vector<double> cost(form.a.cols(), 0.0);
  cost.back() = -1.0;
  const lp::Result r = lp::solve_standard_form(form.a, form.b, cost);
  if (r.status == lp::Status::infeasible) return std::nullopt;
  if (r.status == lp::Status::unbounded) throw SolverError("max-delta LP reported unbounded");
  return r.x.back();
}

WitnessResiduals check_witness(const SmallChannelModel& model, const ArrivalRates& lambda,
                               double delta, const Scenario& s, const LpSolution& sol) {
  WitnessResiduals res;
  std::vector<double> service(s.num_ues(), 0.0);
  for (std::size_t c = 0; c < model.size(); ++c) {
    double row = 0.0;
    for (std::size_t i = 0; i < sol.allocations.size(); ++i) {
      const double w = sol.weights[c][i];
      res.min_weight = std::min(res.min_weight, w);
      row += w;
      const ServiceVector mu = service_vector_of(sol.allocations[i], model.states[c], s);
      for (std::size_t k = 0; k < mu.size(); ++k)
        if (mu[k]) service[k] += model.probabilities[c] * w;
    }
    res.max_row_sum_error = std::max(res.max_row_sum_error, std::abs(row - 1.0));
  }
  for (std::size_t k = 0; k < service.size(); ++k)
    res.max_service_shortfall = std::max(res.max_service_shortfall, lambda[k] + delta - service[k]);
  return res;
}

RandomizedTable randomized_table(const LpSolution& sol) {
  if (!sol.feasible) throw ConfigError("cannot build a randomized policy from an infeasible LP");
  RandomizedTable table;
  table.per_state.resize(sol.weights.size());
  for (std::size_t c = 0; c < sol.weights.size(); ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < sol.allocations.size(); ++i)
      if (sol.weights[c][i] > 1e-12) total += sol.weights[c][i];
    for (std::size_t i = 0; i < sol.allocations.size(); ++i)
      if (sol.weights[c][i] > 1e-12)
        table.per_state[c].emplace_back(sol.allocations[i], sol.weights[c][i] / total);
  }
  return table;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::unstable: return "unstable";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

namespace {

double mean_of_max(const QueueTrace& trace, std::size_t begin, std::size_t end) {
  if (end <= begin) return 0.0;
  double sum = 0.0;
  for (std::size_t n = begin; n < end; ++n) {
    std::int64_t mx = 0;
    for (const auto& q : trace.series) mx = std::max(mx, q[n]);
    sum += static_cast<double>(mx);
  }
  return sum / static_cast<double>(end - begin);
}

// Least-squares slope of q against time in sub-frames over samples [begin, end).
double slope(const std::vector<std::int64_t>& q, std::size_t begin, std::size_t end, std::size_t stride) {
  const double n = static_cast<double>(end - begin);
  if (n < 2) return 0.0;
  const double t_mean = (static_cast<double>(begin + end - 1) / 2.0) * static_cast<double>(stride);
  double q_mean = 0.0;
  for (std::size_t i = begin; i < end; ++i) q_mean += static_cast<double>(q[i]);
  q_mean /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double dt = static_cast<double>(i * stride) - t_mean;
    sxy += dt * (static_cast<double>(q[i]) - q_mean);
    sxx += dt * dt;
  }
  return sxy / sxx;
}

}  // namespace

StabilityReport empirical_stability(const QueueTrace& trace, double window) {
  if (!(window > 0.0 && window <= 0.5)) throw InputError("stability window must lie in (0, 0.5]");
  if (trace.series.empty()) throw InputError("queue trace has no queues");
  if (trace.stride == 0) throw InputError("queue trace stride must be positive");
  for (const auto& q : trace.series)
    if (q.size() != trace.samples()) throw InputError("queue trace series differ in length");
  if (trace.span_subframes() < kMinTraceSubframes || trace.samples() < 4)
    throw InputError(fmt::format("queue trace spans {} sub-frames, need at least {}",
                                 trace.span_subframes(), kMinTraceSubframes));

  const std::size_t n = trace.samples();
  const std::size_t w = std::max<std::size_t>(1, static_cast<std::size_t>(window * static_cast<double>(n)));
  const std::size_t mid_begin = n / 2 - std::min(n / 2, w / 2);

  StabilityReport rep;
  rep.middle_mean_max = mean_of_max(trace, mid_begin, std::min(n, mid_begin + w));
  rep.last_mean_max = mean_of_max(trace, n - w, n);
  rep.max_slope = -std::numeric_limits<double>::infinity();
  for (const auto& q : trace.series) rep.max_slope = std::max(rep.max_slope, slope(q, n / 2, n, trace.stride));

  if (rep.max_slope > kUnstableSlope)
    rep.verdict = Verdict::unstable;
  else if (rep.max_slope <= kStableSlope && rep.last_mean_max <= 2.0 * rep.middle_mean_max)
    rep.verdict = Verdict::stable;
  else
    rep.verdict = Verdict::inconclusive;
  return rep;
}

}  // namespace lms
