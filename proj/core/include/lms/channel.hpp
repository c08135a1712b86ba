#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lms/matrix.hpp"
#include "lms/scenario.hpp"

namespace lms {

/// Downlink link budget of the cell. `num_prbs` is the carrier's PRB count
/// over which transmit power and bandwidth are split; the scenario may use
/// fewer of them for multicast.
struct LinkBudget {
  double bandwidth_hz = 20e6;
  double tx_power_dbm = 46.0;
  double noise_density_dbm_hz = -174.0;
  double noise_figure_db = 5.0;
  double shadowing_std_db = 10.0;
  double cell_radius_km = 0.15;
  std::size_t num_prbs = 100;
  /// Path loss is evaluated at no less than this distance.
  double min_distance_km = 0.01;
  /// Independent Rayleigh power fading per (UE, PRB, sub-frame).
  bool rayleigh_fading = true;

  void validate() const;
  double tx_power_per_prb_dbm() const;
  double noise_power_per_prb_dbm() const;

  friend bool operator==(const LinkBudget&, const LinkBudget&) = default;
};

inline constexpr std::size_t kNumCqi = 15;

/// SINR -> CQI thresholds and CQI -> per-PRB rate. Index 0 means the UE cannot
/// decode anything on the PRB.
struct CqiTable {
  std::array<double, kNumCqi> sinr_thresholds_db{};
  std::array<double, kNumCqi + 1> rates_per_prb{};

  /// 15 thresholds evenly spaced over [-6.7, 22.7] dB and rates equal to the
  /// standard 4-bit CQI spectral efficiencies times 168 resource elements.
  static CqiTable defaults();
  void validate() const;

  friend bool operator==(const CqiTable&, const CqiTable&) = default;
};

/// Decodable rates r_kj for one sub-frame. `cqi` is empty for realizations
/// drawn from an explicit rate-matrix model; `state` carries the model's
/// state index in that case.
struct ChannelRealization {
  Matrix<double> rates;
  Matrix<int> cqi;
  std::optional<std::size_t> state;

  std::size_t num_ues() const noexcept { return rates.rows(); }
  std::size_t num_prbs() const noexcept { return rates.cols(); }
};

/// 128.1 + 37.6 log10(d), d in km. Throws InputError for d <= 0.
double path_loss_db(double distance_km);

/// Largest i such that thresholds[i-1] <= sinr_db, 0 below all thresholds.
int sinr_to_cqi(double sinr_db, const CqiTable& table);

/// Per-UE log-normal shadowing in dB, drawn once per run.
std::vector<double> draw_shadowing(std::size_t num_ues, const LinkBudget& budget,
                                   std::uint64_t seed);

/// Mean SINR in dB of UE k before fast fading.
double mean_sinr_db(const Scenario& s, const LinkBudget& budget, std::size_t ue,
                    double shadowing_db);

/// Realization for sub-frame `t`. Deterministic in (seed, t) given the
/// scenario, budget, table and shadowing.
ChannelRealization sample_channel(const Scenario& s, const LinkBudget& budget,
                                  const CqiTable& table, std::span<const double> shadowing_db,
                                  std::uint64_t seed, std::uint64_t t);

}  // namespace lms
