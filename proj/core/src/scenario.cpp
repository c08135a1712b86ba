#include "lms/scenario.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "lms/error.hpp"
#include "lms/rng.hpp"

namespace lms {

double Position::distance_km() const noexcept { return std::hypot(x_km, y_km); }

Scenario::Scenario(std::size_t num_prbs, std::vector<std::size_t> group_of,
                   std::vector<double> stream_rates, std::vector<double> loss_tolerance,
                   std::vector<Position> ue_positions, std::uint64_t seed)
    : num_prbs_(num_prbs),
      group_of_(std::move(group_of)),
      stream_rates_(std::move(stream_rates)),
      loss_tolerance_(std::move(loss_tolerance)),
      positions_(std::move(ue_positions)),
      seed_(seed) {
  if (num_prbs_ == 0) throw ValidationError("num_prbs", "must be at least 1");
  if (group_of_.empty()) throw ValidationError("ues.group", "scenario has no UEs");
  if (stream_rates_.empty()) throw ValidationError("groups.stream_rates", "scenario has no groups");
  if (loss_tolerance_.size() != group_of_.size())
    throw ValidationError("ues.loss_tolerance",
                          fmt::format("expected {} values, got {}", group_of_.size(),
                                      loss_tolerance_.size()));
  if (positions_.size() != group_of_.size())
    throw ValidationError("ues.position", fmt::format("expected {} positions, got {}",
                                                      group_of_.size(), positions_.size()));

  for (std::size_t i = 0; i < stream_rates_.size(); ++i) {
    if (!std::isfinite(stream_rates_[i]) || stream_rates_[i] <= 0.0)
      throw ValidationError("groups.stream_rates",
                            fmt::format("rate of group {} must be positive", i));
  }
  for (std::size_t k = 0; k < loss_tolerance_.size(); ++k) {
    const double l = loss_tolerance_[k];
    if (!(l >= 0.0 && l < 1.0))
      throw ValidationError("ues.loss_tolerance",
                            fmt::format("tolerance of UE {} is {}, must lie in [0, 1)", k, l));
  }

  members_.assign(stream_rates_.size(), {});
  for (std::size_t k = 0; k < group_of_.size(); ++k) {
    if (group_of_[k] >= stream_rates_.size())
      throw ValidationError("ues.group",
                            fmt::format("UE {} assigned to nonexistent group {}", k, group_of_[k]));
    members_[group_of_[k]].push_back(k);
  }
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (members_[i].empty())
      throw ValidationError("ues.group", fmt::format("group {} has no members", i));
  }
  for (const auto& p : positions_) {
    if (!std::isfinite(p.x_km) || !std::isfinite(p.y_km))
      throw ValidationError("ues.position", "non-finite coordinate");
  }
}

void Scenario::validate_positions(double cell_radius_km) const {
  for (std::size_t k = 0; k < positions_.size(); ++k) {
    if (positions_[k].distance_km() > cell_radius_km)
      throw ValidationError("ues.position",
                            fmt::format("UE {} at distance {} km lies outside the {} km cell", k,
                                        positions_[k].distance_km(), cell_radius_km));
  }
}

ArrivalRates arrival_rates(const Scenario& s) {
  ArrivalRates out;
  out.lambda.reserve(s.num_ues());
  for (double l : s.loss_tolerances()) out.lambda.push_back(1.0 - l);
  return out;
}

std::vector<Position> place_uniform(std::size_t n, double radius_km, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::placement);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Position> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    // sqrt of a uniform radius fraction gives constant areal density
    const double r = radius_km * std::sqrt(unit(rng));
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    out.push_back({r * std::cos(theta), r * std::sin(theta)});
  }
  return out;
}

Scenario scale_arrivals(const Scenario& s, double factor) {
  if (!(factor > 0.0)) throw InputError("arrival scale factor must be positive");
  std::vector<double> tolerance;
  tolerance.reserve(s.num_ues());
  for (std::size_t k = 0; k < s.num_ues(); ++k) {
    const double lambda = factor * (1.0 - s.loss_tolerance(k));
    if (lambda > 1.0)
      throw ValidationError("ues.loss_tolerance",
                            fmt::format("scaled arrival rate {} of UE {} exceeds 1", lambda, k));
    tolerance.push_back(1.0 - lambda);
  }
  return Scenario(s.num_prbs(), {s.group_assignment().begin(), s.group_assignment().end()},
                  {s.stream_rates().begin(), s.stream_rates().end()}, std::move(tolerance),
                  {s.positions().begin(), s.positions().end()}, s.seed());
}

}  // namespace lms
