#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lms {

struct Position {
  double x_km = 0.0;
  double y_km = 0.0;

  double distance_km() const noexcept;
  friend bool operator==(const Position&, const Position&) = default;
};

/// UEs, multicast groups and their per-stream requirements. Group membership
/// is a partition of the UEs; group indices and UE indices are 0-based.
///
/// Stream rates are in the same unit as CQI table rates (bits per sub-frame
/// per PRB), so "UE k decodes stream i on PRB j" is `rate(i) <= r_kj`.
class Scenario {
 public:
  Scenario() = default;

  /// Validates the structural invariants and builds the member lists.
  /// Throws ValidationError naming the offending field.
  Scenario(std::size_t num_prbs, std::vector<std::size_t> group_of,
           std::vector<double> stream_rates, std::vector<double> loss_tolerance,
           std::vector<Position> ue_positions, std::uint64_t seed);

  std::size_t num_ues() const noexcept { return group_of_.size(); }
  std::size_t num_groups() const noexcept { return stream_rates_.size(); }
  std::size_t num_prbs() const noexcept { return num_prbs_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::size_t group_of(std::size_t ue) const { return group_of_[ue]; }
  std::span<const std::size_t> members(std::size_t group) const { return members_[group]; }
  double stream_rate(std::size_t group) const { return stream_rates_[group]; }
  double loss_tolerance(std::size_t ue) const { return loss_tolerance_[ue]; }
  const Position& position(std::size_t ue) const { return positions_[ue]; }

  std::span<const std::size_t> group_assignment() const noexcept { return group_of_; }
  std::span<const double> stream_rates() const noexcept { return stream_rates_; }
  std::span<const double> loss_tolerances() const noexcept { return loss_tolerance_; }
  std::span<const Position> positions() const noexcept { return positions_; }

  /// Throws ValidationError if any UE lies outside the cell.
  void validate_positions(double cell_radius_km) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;

 private:
  std::size_t num_prbs_ = 0;
  std::vector<std::size_t> group_of_;
  std::vector<double> stream_rates_;
  std::vector<double> loss_tolerance_;
  std::vector<Position> positions_;
  std::uint64_t seed_ = 0;
  std::vector<std::vector<std::size_t>> members_;
};

/// Token arrival probabilities, one per UE: lambda_k = 1 - tolerance_k.
struct ArrivalRates {
  std::vector<double> lambda;

  std::size_t size() const noexcept { return lambda.size(); }
  double operator[](std::size_t k) const { return lambda[k]; }
};

ArrivalRates arrival_rates(const Scenario& s);

/// `n` points uniform over the disk of the given radius, deterministic in
/// `seed`.
std::vector<Position> place_uniform(std::size_t n, double radius_km, std::uint64_t seed);

/// Copy of `s` whose arrival rates are multiplied by `factor`. Throws
/// ValidationError if any scaled rate would exceed 1.
Scenario scale_arrivals(const Scenario& s, double factor);

}  // namespace lms
