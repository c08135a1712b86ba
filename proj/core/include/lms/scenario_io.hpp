#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "lms/channel.hpp"
#include "lms/matching.hpp"
#include "lms/scenario.hpp"
#include "lms/sim_engine.hpp"
#include "lms/stability.hpp"

namespace lms {

enum class ChannelKind { link_budget, small_model };

/// Everything a scenario file describes.
///
/// File layout (INI-style, `key = value`, lists separated by commas or
/// spaces, matrix rows separated by `|`; unknown sections and keys are
/// rejected):
///
///   [cell]        bandwidth_hz tx_power_dbm noise_density_dbm_hz noise_figure_db
///                 shadowing_std_db cell_radius_km num_prbs min_distance_km
///                 fast_fading (rayleigh | none)
///   [cqi_table]   sinr_thresholds_db (15 values) rates_per_prb (16 values)
///   [groups]      stream_rates (one per group) multicast_prbs
///   [ues]         group loss_tolerance (one per UE) x_km y_km placement_seed
///   [policy]      kind (mw | mwp | expq | randomized) s kappa gamma a beta eta
///                 qbar_divisor (ues | prbs | integer) delta
///   [run]         horizon seed trace (none | per-second | per-subframe)
///                 ema_alpha queue_sample_stride channel (link_budget | small_model)
///   [small_model] probabilities state0 state1 ...
///
/// Only [groups] and [ues] are required. UEs without x_km/y_km are placed
/// uniformly in the cell using placement_seed (default: run seed).
struct ScenarioConfig {
  Scenario scenario;
  LinkBudget budget;
  CqiTable cqi_table = CqiTable::defaults();
  RunConfig run;
  ChannelKind channel = ChannelKind::link_budget;
  std::optional<SmallChannelModel> small_model;

  /// Channel generator for `seed` (normally run.seed).
  ChannelSource make_channel(std::uint64_t seed) const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Throws ParseError for malformed text and ValidationError for values that
/// violate an invariant.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& config);

/// 150 m cell at 46 dBm with 30 UEs in 3 groups on 20 multicast PRBs.
ScenarioConfig default_config();

/// Reads the [small_model] section of a file; other sections are ignored.
SmallChannelModel load_small_model(const std::filesystem::path& path, std::size_t num_ues,
                                   std::size_t num_prbs);

/// Whitespace/comma separated numbers, one matrix row per line; `#` starts a
/// comment.
WeightMatrix parse_weight_matrix(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace lms
