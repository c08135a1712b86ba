#include "lms/channel.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "lms/error.hpp"
#include "lms/rng.hpp"

namespace lms {

namespace {

constexpr std::array<double, kNumCqi> kCqiEfficiency = {
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
    2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547};

constexpr double kResourceElementsPerPrb = 12.0 * 14.0;

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) throw ValidationError(field, "must be finite");
}

}  // namespace

void LinkBudget::validate() const {
  require_finite(bandwidth_hz, "cell.bandwidth_hz");
  require_finite(tx_power_dbm, "cell.tx_power_dbm");
  require_finite(noise_density_dbm_hz, "cell.noise_density_dbm_hz");
  require_finite(noise_figure_db, "cell.noise_figure_db");
  require_finite(shadowing_std_db, "cell.shadowing_std_db");
  require_finite(cell_radius_km, "cell.cell_radius_km");
  require_finite(min_distance_km, "cell.min_distance_km");
  if (bandwidth_hz <= 0.0) throw ValidationError("cell.bandwidth_hz", "must be positive");
  if (cell_radius_km <= 0.0) throw ValidationError("cell.cell_radius_km", "must be positive");
  if (shadowing_std_db < 0.0)
    throw ValidationError("cell.shadowing_std_db", "must be nonnegative");
  if (min_distance_km <= 0.0) throw ValidationError("cell.min_distance_km", "must be positive");
  if (num_prbs == 0) throw ValidationError("cell.num_prbs", "must be at least 1");
}

double LinkBudget::tx_power_per_prb_dbm() const {
  return tx_power_dbm - 10.0 * std::log10(static_cast<double>(num_prbs));
}

double LinkBudget::noise_power_per_prb_dbm() const {
  return noise_density_dbm_hz + 10.0 * std::log10(bandwidth_hz / static_cast<double>(num_prbs));
}

CqiTable CqiTable::defaults() {
  CqiTable t;
  const double lo = -6.7;
  const double hi = 22.7;
  // rounded so the table prints as the decimals it stands for
  for (std::size_t i = 0; i < kNumCqi; ++i)
    t.sinr_thresholds_db[i] = std::round(10.0 * (lo + (hi - lo) * static_cast<double>(i) / (kNumCqi - 1))) / 10.0;
  t.rates_per_prb[0] = 0.0;
  for (std::size_t i = 0; i < kNumCqi; ++i)
    t.rates_per_prb[i + 1] = std::round(1e4 * kCqiEfficiency[i] * kResourceElementsPerPrb) / 1e4;
  return t;
}

void CqiTable::validate() const {
  for (std::size_t i = 0; i < kNumCqi; ++i) {
    require_finite(sinr_thresholds_db[i], "cqi_table.sinr_thresholds_db");
    if (i > 0 && !(sinr_thresholds_db[i] > sinr_thresholds_db[i - 1]))
      throw ValidationError("cqi_table.sinr_thresholds_db", "must be strictly increasing");
  }
  if (rates_per_prb[0] != 0.0)
    throw ValidationError("cqi_table.rates_per_prb", "rate of CQI 0 must be 0");
  for (std::size_t i = 0; i <= kNumCqi; ++i) {
    require_finite(rates_per_prb[i], "cqi_table.rates_per_prb");
    if (rates_per_prb[i] < 0.0)
      throw ValidationError("cqi_table.rates_per_prb", "must be nonnegative");
    if (i > 0 && rates_per_prb[i] < rates_per_prb[i - 1])
      throw ValidationError("cqi_table.rates_per_prb", "must be nondecreasing");
  }
}

double path_loss_db(double distance_km) {
  if (!(distance_km > 0.0))
    throw InputError(fmt::format("path loss distance must be positive, got {}", distance_km));
  return 128.1 + 37.6 * std::log10(distance_km);
}

int sinr_to_cqi(double sinr_db, const CqiTable& table) {
  const auto& th = table.sinr_thresholds_db;
  // number of thresholds <= sinr
  return static_cast<int>(std::upper_bound(th.begin(), th.end(), sinr_db) - th.begin());
}

std::vector<double> draw_shadowing(std::size_t num_ues, const LinkBudget& budget,
                                   std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::shadowing);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(num_ues);
  for (auto& v : out) v = budget.shadowing_std_db * normal(rng);
  return out;
}

double mean_sinr_db(const Scenario& s, const LinkBudget& budget, std::size_t ue,
                    double shadowing_db) {
  const double d = std::max(s.position(ue).distance_km(), budget.min_distance_km);
  return budget.tx_power_per_prb_dbm() - path_loss_db(d) - shadowing_db -
         budget.noise_power_per_prb_dbm() - budget.noise_figure_db;
}

ChannelRealization sample_channel(const Scenario& s, const LinkBudget& budget,
                                  const CqiTable& table, std::span<const double> shadowing_db,
                                  std::uint64_t seed, std::uint64_t t) {
  const std::size_t m = s.num_ues();
  const std::size_t n = s.num_prbs();
  if (shadowing_db.size() != m)
    throw InputError(fmt::format("expected {} shadowing values, got {}", m, shadowing_db.size()));

  ChannelRealization out{Matrix<double>(m, n), Matrix<int>(m, n), std::nullopt};
  Rng rng = make_rng(seed, Stream::fading, t);
  std::exponential_distribution<double> power(1.0);

  for (std::size_t k = 0; k < m; ++k) {
    const double base = mean_sinr_db(s, budget, k, shadowing_db[k]);
    for (std::size_t j = 0; j < n; ++j) {
      const double fade_db = budget.rayleigh_fading ? 10.0 * std::log10(power(rng)) : 0.0;
      const int cqi = sinr_to_cqi(base + fade_db, table);
      out.cqi(k, j) = cqi;
      out.rates(k, j) = table.rates_per_prb[static_cast<std::size_t>(cqi)];
    }
  }
  return out;
}

}  // namespace lms
