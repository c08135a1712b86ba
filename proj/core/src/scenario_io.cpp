#include "lms/scenario_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "lms/error.hpp"

namespace lms {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"cell",
       {"bandwidth_hz", "tx_power_dbm", "noise_density_dbm_hz", "noise_figure_db", "shadowing_std_db",
        "cell_radius_km", "num_prbs", "min_distance_km", "fast_fading"}},
      {"cqi_table", {"sinr_thresholds_db", "rates_per_prb"}},
      {"groups", {"stream_rates", "multicast_prbs"}},
      {"ues", {"group", "loss_tolerance", "x_km", "y_km", "placement_seed"}},
      {"policy", {"kind", "s", "kappa", "gamma", "a", "beta", "eta", "qbar_divisor", "delta"}},
      {"run", {"horizon", "seed", "trace", "ema_alpha", "queue_sample_stride", "channel"}},
      {"small_model", {"probabilities"}},  // plus state<N>
  };
  return keys;
}

bool is_state_key(const std::string& key) {
  if (key.size() <= 5 || key.compare(0, 5, "state") != 0) return false;
  return std::all_of(key.begin() + 5, key.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double to_double(const std::string& token, const std::string& field) {
  double v = 0.0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError(fmt::format("{}: '{}' is not a number", field, token));
  return v;
}

std::uint64_t to_uint(const std::string& token, const std::string& field) {
  std::uint64_t v = 0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec == std::errc() && ptr == end) return v;
  // accept integral values written in floating notation, e.g. 1e5
  const double d = to_double(token, field);
  if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d)))
    throw ParseError(fmt::format("{}: '{}' is not a nonnegative integer", field, token));
  return static_cast<std::uint64_t>(d);
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }

  std::string raw(const std::string& key) const { return trim(tree_->get<std::string>(key)); }
  std::string field(const std::string& key) const { return name_ + "." + key; }

  double number(const std::string& key, double fallback) const {
    return has(key) ? to_double(raw(key), field(key)) : fallback;
  }
  std::uint64_t integer(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? to_uint(raw(key), field(key)) : fallback;
  }
  std::string text(const std::string& key, std::string fallback) const {
    return has(key) ? raw(key) : fallback;
  }
  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    for (const auto& tok : split_tokens(raw(key))) out.push_back(to_double(tok, field(key)));
    return out;
  }
  std::vector<std::size_t> integers(const std::string& key) const {
    std::vector<std::size_t> out;
    if (!has(key)) return out;
    for (const auto& tok : split_tokens(raw(key))) out.push_back(to_uint(tok, field(key)));
    return out;
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

Matrix<double> parse_rows(const std::string& text, const std::string& field) {
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t bar = text.find('|', start);
    const std::string part = text.substr(start, bar == std::string::npos ? std::string::npos : bar - start);
    std::vector<double> row;
    for (const auto& tok : split_tokens(part)) row.push_back(to_double(tok, field));
    if (row.empty()) throw ParseError(fmt::format("{}: empty matrix row", field));
    rows.push_back(std::move(row));
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  Matrix<double> m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols())
      throw ParseError(fmt::format("{}: row {} has {} entries, expected {}", field, r, rows[r].size(), m.cols()));
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

pt::ptree read_tree(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(fmt::format("line {}: {}", e.line(), e.message()));
  }
  return tree;
}

SmallChannelModel parse_small_model(const pt::ptree& section) {
  Section sec(&section, "small_model");
  SmallChannelModel model;
  model.probabilities = sec.numbers("probabilities");
  std::map<std::size_t, Matrix<double>> states;
  for (const auto& [key, value] : section) {
    if (!is_state_key(key)) continue;
    const std::size_t idx = to_uint(key.substr(5), "small_model." + key);
    states.emplace(idx, parse_rows(trim(value.data()), "small_model." + key));
  }
  std::size_t expect = 0;
  for (auto& [idx, m] : states) {
    if (idx != expect) throw ValidationError("small_model", fmt::format("missing state{}", expect));
    model.states.push_back(std::move(m));
    ++expect;
  }
  return model;
}

std::string join(const std::vector<double>& xs) { return fmt::format("{}", fmt::join(xs, ", ")); }

template <typename T>
std::string join_int(const std::vector<T>& xs) {
  return fmt::format("{}", fmt::join(xs, ", "));
}

std::string matrix_text(const Matrix<double>& m) {
  std::vector<std::string> rows;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::vector<double> row(m.row(r).begin(), m.row(r).end());
    rows.push_back(fmt::format("{}", fmt::join(row, " ")));
  }
  return fmt::format("{}", fmt::join(rows, " | "));
}

}  // namespace

ScenarioConfig parse_config(std::string_view text) {
  const pt::ptree tree = read_tree(text);

  for (const auto& [name, section] : tree) {
    const auto it = known_keys().find(name);
    if (it == known_keys().end()) {
      if (section.empty()) throw ParseError(fmt::format("key '{}' outside any section", name));
      throw ParseError(fmt::format("unknown section [{}]", name));
    }
    for (const auto& [key, value] : section) {
      if (name == "small_model" && is_state_key(key)) continue;
      if (!it->second.count(key)) throw ParseError(fmt::format("unknown key '{}' in [{}]", key, name));
    }
  }
  auto section = [&](const std::string& name) {
    const auto it = tree.find(name);
    return Section(it == tree.not_found() ? nullptr : &it->second, name);
  };

  ScenarioConfig cfg;

  const Section cell = section("cell");
  LinkBudget& lb = cfg.budget;
  lb.bandwidth_hz = cell.number("bandwidth_hz", lb.bandwidth_hz);
  lb.tx_power_dbm = cell.number("tx_power_dbm", lb.tx_power_dbm);
  lb.noise_density_dbm_hz = cell.number("noise_density_dbm_hz", lb.noise_density_dbm_hz);
  lb.noise_figure_db = cell.number("noise_figure_db", lb.noise_figure_db);
  lb.shadowing_std_db = cell.number("shadowing_std_db", lb.shadowing_std_db);
  lb.cell_radius_km = cell.number("cell_radius_km", lb.cell_radius_km);
  lb.num_prbs = cell.integer("num_prbs", lb.num_prbs);
  lb.min_distance_km = cell.number("min_distance_km", lb.min_distance_km);
  const std::string fading = cell.text("fast_fading", "rayleigh");
  if (fading != "rayleigh" && fading != "none")
    throw ValidationError("cell.fast_fading", fmt::format("'{}' is not rayleigh or none", fading));
  lb.rayleigh_fading = fading == "rayleigh";
  lb.validate();

  const Section cqi = section("cqi_table");
  if (cqi.has("sinr_thresholds_db")) {
    const auto th = cqi.numbers("sinr_thresholds_db");
    if (th.size() != kNumCqi)
      throw ValidationError("cqi_table.sinr_thresholds_db", fmt::format("expected {} values, got {}", kNumCqi, th.size()));
    std::copy(th.begin(), th.end(), cfg.cqi_table.sinr_thresholds_db.begin());
  }
  if (cqi.has("rates_per_prb")) {
    const auto r = cqi.numbers("rates_per_prb");
    if (r.size() != kNumCqi + 1)
      throw ValidationError("cqi_table.rates_per_prb", fmt::format("expected {} values, got {}", kNumCqi + 1, r.size()));
    std::copy(r.begin(), r.end(), cfg.cqi_table.rates_per_prb.begin());
  }
  cfg.cqi_table.validate();

  const Section run = section("run");
  RunConfig& rc = cfg.run;
  rc.horizon_subframes = run.integer("horizon", rc.horizon_subframes);
  rc.seed = run.integer("seed", rc.seed);
  rc.trace_detail = parse_trace_detail(run.text("trace", "none"));
  rc.ema_alpha = run.number("ema_alpha", rc.ema_alpha);
  rc.queue_sample_stride = run.integer("queue_sample_stride", rc.queue_sample_stride);
  const std::string channel = run.text("channel", "link_budget");
  if (channel == "link_budget")
    cfg.channel = ChannelKind::link_budget;
  else if (channel == "small_model")
    cfg.channel = ChannelKind::small_model;
  else
    throw ValidationError("run.channel", fmt::format("'{}' is not link_budget or small_model", channel));
  rc.validate();

  const Section groups = section("groups");
  const Section ues = section("ues");
  if (!groups.has("stream_rates")) throw ValidationError("groups.stream_rates", "required");
  if (!ues.has("group")) throw ValidationError("ues.group", "required");
  if (!ues.has("loss_tolerance")) throw ValidationError("ues.loss_tolerance", "required");
  const std::size_t n = groups.integer("multicast_prbs", lb.num_prbs);
  const std::vector<std::size_t> group_of = ues.integers("group");
  const std::uint64_t placement_seed = ues.integer("placement_seed", rc.seed);

  std::vector<Position> positions;
  if (ues.has("x_km") != ues.has("y_km")) throw ValidationError("ues.x_km", "x_km and y_km must be given together");
  if (ues.has("x_km")) {
    const auto xs = ues.numbers("x_km");
    const auto ys = ues.numbers("y_km");
    if (xs.size() != group_of.size() || ys.size() != group_of.size())
      throw ValidationError("ues.x_km", fmt::format("expected {} coordinates", group_of.size()));
    for (std::size_t k = 0; k < xs.size(); ++k) positions.push_back({xs[k], ys[k]});
  } else {
    positions = place_uniform(group_of.size(), lb.cell_radius_km, placement_seed);
  }
  cfg.scenario = Scenario(n, group_of, groups.numbers("stream_rates"), ues.numbers("loss_tolerance"),
                          std::move(positions), placement_seed);
  cfg.scenario.validate_positions(lb.cell_radius_km);
  if (n > lb.num_prbs)
    throw ValidationError("groups.multicast_prbs", fmt::format("{} exceeds the carrier's {} PRBs", n, lb.num_prbs));

  const Section pol = section("policy");
  PolicyParams& pp = cfg.run.policy;
  pp.kind = parse_policy_kind(pol.text("kind", "mw"));
  pp.s = pol.number("s", pp.s);
  pp.kappa = static_cast<int>(pol.integer("kappa", static_cast<std::uint64_t>(pp.kappa)));
  const std::size_t m = cfg.scenario.num_ues();
  auto per_ue = [&](const std::string& key) {
    std::vector<double> v = pol.numbers(key);
    if (v.size() == 1 && m > 1) v.assign(m, v.front());
    return v;
  };
  pp.gamma = per_ue("gamma");
  pp.a = per_ue("a");
  pp.beta = pol.number("beta", pp.beta);
  pp.eta = pol.number("eta", pp.eta);
  const std::string divisor = pol.text("qbar_divisor", "ues");
  if (divisor == "ues")
    pp.qbar_divisor = 0;
  else if (divisor == "prbs")
    pp.qbar_divisor = n;
  else
    pp.qbar_divisor = to_uint(divisor, "policy.qbar_divisor");
  pp.randomized_delta = pol.number("delta", pp.randomized_delta);
  pp.validate(m);

  const auto sm = tree.find("small_model");
  if (sm != tree.not_found()) {
    cfg.small_model = parse_small_model(sm->second);
    cfg.small_model->validate(m, n);
  }
  if (cfg.channel == ChannelKind::small_model && !cfg.small_model)
    throw ValidationError("run.channel", "small_model channel selected but no [small_model] section");
  return cfg;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

Scenario load_scenario(const std::filesystem::path& path) { return load_config(path).scenario; }

SmallChannelModel load_small_model(const std::filesystem::path& path, std::size_t num_ues,
                                   std::size_t num_prbs) {
  const pt::ptree tree = read_tree(read_text_file(path));
  const auto sm = tree.find("small_model");
  if (sm == tree.not_found())
    throw ParseError(fmt::format("{}: no [small_model] section", path.string()));
  SmallChannelModel model = parse_small_model(sm->second);
  model.validate(num_ues, num_prbs);
  return model;
}

std::string serialize_config(const ScenarioConfig& c) {
  std::string out;
  auto line = [&](std::string_view key, const std::string& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  const LinkBudget& lb = c.budget;
  out += "[cell]\n";
  line("bandwidth_hz", fmt::format("{}", lb.bandwidth_hz));
  line("tx_power_dbm", fmt::format("{}", lb.tx_power_dbm));
  line("noise_density_dbm_hz", fmt::format("{}", lb.noise_density_dbm_hz));
  line("noise_figure_db", fmt::format("{}", lb.noise_figure_db));
  line("shadowing_std_db", fmt::format("{}", lb.shadowing_std_db));
  line("cell_radius_km", fmt::format("{}", lb.cell_radius_km));
  line("num_prbs", fmt::format("{}", lb.num_prbs));
  line("min_distance_km", fmt::format("{}", lb.min_distance_km));
  line("fast_fading", lb.rayleigh_fading ? "rayleigh" : "none");

  out += "\n[cqi_table]\n";
  line("sinr_thresholds_db", join({c.cqi_table.sinr_thresholds_db.begin(), c.cqi_table.sinr_thresholds_db.end()}));
  line("rates_per_prb", join({c.cqi_table.rates_per_prb.begin(), c.cqi_table.rates_per_prb.end()}));

  const Scenario& s = c.scenario;
  out += "\n[groups]\n";
  line("stream_rates", join({s.stream_rates().begin(), s.stream_rates().end()}));
  line("multicast_prbs", fmt::format("{}", s.num_prbs()));

  out += "\n[ues]\n";
  line("group", join_int(std::vector<std::size_t>(s.group_assignment().begin(), s.group_assignment().end())));
  line("loss_tolerance", join({s.loss_tolerances().begin(), s.loss_tolerances().end()}));
  std::vector<double> xs, ys;
  for (const auto& p : s.positions()) xs.push_back(p.x_km), ys.push_back(p.y_km);
  line("x_km", join(xs));
  line("y_km", join(ys));
  line("placement_seed", fmt::format("{}", s.seed()));

  const PolicyParams& pp = c.run.policy;
  out += "\n[policy]\n";
  line("kind", std::string(to_string(pp.kind)));
  line("s", fmt::format("{}", pp.s));
  line("kappa", fmt::format("{}", pp.kappa));
  if (!pp.gamma.empty()) line("gamma", join(pp.gamma));
  if (!pp.a.empty()) line("a", join(pp.a));
  line("beta", fmt::format("{}", pp.beta));
  line("eta", fmt::format("{}", pp.eta));
  line("qbar_divisor", pp.qbar_divisor == 0 ? std::string("ues") : fmt::format("{}", pp.qbar_divisor));
  line("delta", fmt::format("{}", pp.randomized_delta));

  const RunConfig& rc = c.run;
  out += "\n[run]\n";
  line("horizon", fmt::format("{}", rc.horizon_subframes));
  line("seed", fmt::format("{}", rc.seed));
  line("trace", std::string(to_string(rc.trace_detail)));
  line("ema_alpha", fmt::format("{}", rc.ema_alpha));
  line("queue_sample_stride", fmt::format("{}", rc.queue_sample_stride));
  line("channel", c.channel == ChannelKind::small_model ? "small_model" : "link_budget");

  if (c.small_model) {
    out += "\n[small_model]\n";
    line("probabilities", join(c.small_model->probabilities));
    for (std::size_t i = 0; i < c.small_model->states.size(); ++i)
      line(fmt::format("state{}", i), matrix_text(c.small_model->states[i]));
  }
  return out;
}

ScenarioConfig default_config() {
  std::string text =
      "[groups]\n"
      "stream_rates = 650, 750, 850\n"
      "multicast_prbs = 20\n"
      "[ues]\n";
  std::vector<std::size_t> group;
  std::vector<double> tol;
  for (std::size_t k = 0; k < 30; ++k) {
    group.push_back(k % 3);
    tol.push_back(0.05 + 0.05 * static_cast<double>(k % 6));
  }
  text += "group = " + join_int(group) + "\n";
  text += "loss_tolerance = " + join(tol) + "\n";
  text += "[run]\nseed = 1\n";
  return parse_config(text);
}

WeightMatrix parse_weight_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const auto tokens = split_tokens(raw);
    if (tokens.empty()) continue;
    std::vector<double> row;
    for (const auto& tok : tokens) row.push_back(to_double(tok, fmt::format("line {}", lineno)));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(fmt::format("line {}: {} entries, expected {}", lineno, row.size(), rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("weight matrix is empty");
  WeightMatrix w(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) w(r, c) = rows[r][c];
  return w;
}

ChannelSource ScenarioConfig::make_channel(std::uint64_t seed) const {
  if (channel == ChannelKind::small_model) {
    if (!small_model) throw ConfigError("small_model channel selected but no model given");
    return ChannelSource::small_model(scenario, *small_model, seed);
  }
  return ChannelSource::link_budget(scenario, budget, cqi_table, seed);
}

}  // namespace lms
