/*
 * Copyright (C) 2026 The v2gplan Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
*/

#ifndef V2GPLAN__PIPELINE_HPP
#define V2GPLAN__PIPELINE_HPP

#include <v2gplan/aggregation.hpp>
#include <v2gplan/errors.hpp>
#include <v2gplan/geo.hpp>
#include <v2gplan/household.hpp>
#include <v2gplan/io.hpp>
#include <v2gplan/mobility.hpp>
#include <v2gplan/synthetic.hpp>
#include <v2gplan/time.hpp>
#include <v2gplan/v2g.hpp>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace v2gplan {

inline constexpr std::string_view tool_version = "0.3.0";

/// Hex SHA-256 of a byte string.
inline std::string sha256_hex(std::string_view bytes)
{
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i)
  {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InvalidInput("cannot open input file '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
    throw std::runtime_error("cannot write '" + path.string() + "'");
}

//==============================================================================
struct SynthOptions
{
  std::uint64_t seed = 42;
  int users = 100;
  int days = 7;
  std::string first_day = "2020-09-01";
  std::string tz = "+08:00";
  double cell_size_m = 250.0;
  double ping_minutes = 15.0;
  double mean_stays_per_day = 1.5;
  int area_rows = 4;
  int area_cols = 6;
  unsigned jobs = 1;
  std::filesystem::path records_out = "records.csv";
  std::optional<std::filesystem::path> areas_out;
  std::optional<std::filesystem::path> demand_out;
};

struct SynthSummary
{
  std::size_t n_records = 0;
  std::string records_digest;
};

inline SynthSummary run_synth(const SynthOptions& o)
{
  const auto tz = parse_utc_offset(o.tz);
  if (!tz)
    throw InvalidConfig("unrecognised time zone offset '" + o.tz + "'");
  const auto first = parse_date(o.first_day);
  if (!first)
    throw InvalidConfig("first day must be YYYY-MM-DD");
  if (!(o.ping_minutes > 0.0))
    throw InvalidConfig("ping interval must be positive");

  const GridSpec grid = default_synthetic_grid(o.cell_size_m);
  SynthConfig cfg = default_synth_config(grid, o.seed);
  cfg.n_users = o.users;
  cfg.n_days = o.days;
  cfg.first_day = *first;
  cfg.tz = *tz;
  cfg.mean_stays_per_day = o.mean_stays_per_day;
  cfg.ping_interval = Seconds{static_cast<std::int64_t>(std::llround(o.ping_minutes * 60.0))};
  cfg.validate();

  const auto records = generate(cfg, grid, o.jobs);
  std::ostringstream csv;
  write_records_csv(csv, records);
  write_file(o.records_out, csv.str());

  if (o.areas_out)
  {
    const auto areas = synthetic_areas(grid, o.area_rows, o.area_cols, o.seed);
    write_file(*o.areas_out, areas_to_geojson(areas).dump(1) + "\n");
  }
  if (o.demand_out)
  {
    std::ostringstream d;
    write_demand_csv(d, DemandCurve(synthetic_demand_curve()));
    write_file(*o.demand_out, d.str());
  }
  return {records.size(), sha256_hex(csv.str())};
}

//==============================================================================
struct RunOptions
{
  std::filesystem::path records;
  std::filesystem::path areas;
  std::filesystem::path demand;
  std::filesystem::path out_dir = "out";

  double delta = 0.03;
  double n_pop = 5.5e6;
  VehicleParams vehicle;
  std::string pv_start = "09:00";
  std::string pv_end = "17:00";
  double tau_hours = 1.0;
  int min_days = 5;
  double cell_size_m = 250.0;
  double time_step_minutes = 15.0;
  std::string tz = "+08:00";
  int days_in_month = 30;
  double hist_bin_width = 0.05;
  double eta_pv = 0.2;
  double a_pv = 0.25;
  double irradiance_w_m2 = 400.0;
  std::optional<std::string> first_day;
  std::optional<int> n_days;
  bool emit_stays = false;
  bool emit_events = false;
  unsigned jobs = 1;
};

struct RunSummary
{
  std::size_t n_records = 0;
  std::size_t n_users = 0;
  std::size_t n_retained = 0;
  std::size_t n_traces = 0;
  std::size_t n_events = 0;
  std::map<std::string, std::string> output_digests;
  nlohmann::json manifest;
};

namespace detail {

inline std::string utc_now_iso()
{
  const auto now = std::chrono::time_point_cast<Seconds>(std::chrono::system_clock::now());
  return format_utc(Instant{now.time_since_epoch()});
}

inline LatLon bbox_corner(std::span<const PlanningArea> areas, bool south_west)
{
  const double inf = std::numeric_limits<double>::infinity();
  LatLon c = south_west ? LatLon{inf, inf} : LatLon{-inf, -inf};
  for (const auto& a : areas)
  {
    for (const auto& ring : a.rings)
    {
      for (const auto& v : ring)
      {
        c.lat = south_west ? std::min(c.lat, v.lat) : std::max(c.lat, v.lat);
        c.lon = south_west ? std::min(c.lon, v.lon) : std::max(c.lon, v.lon);
      }
    }
  }
  return c;
}

inline Seconds minutes_to_seconds(double minutes, const char* what)
{
  const double s = minutes * 60.0;
  if (!(s > 0.0) || std::abs(s - std::round(s)) > 1e-9)
    throw InvalidConfig(std::string(what) + " must be a positive whole number of seconds");
  return Seconds{static_cast<std::int64_t>(std::llround(s))};
}

} // namespace detail

/// End-to-end run: ingest, simulate, verify, aggregate, compare with the
/// household baseline and write every output table plus a manifest.
inline RunSummary run_pipeline(const RunOptions& o)
{
  const std::string started = detail::utc_now_iso();
  namespace fs = std::filesystem;

  // Configuration.
  const auto tz = parse_utc_offset(o.tz);
  if (!tz)
    throw InvalidConfig("unrecognised time zone offset '" + o.tz + "'");
  PvWindow window;
  {
    const auto s = parse_time_of_day(o.pv_start);
    const auto e = parse_time_of_day(o.pv_end);
    if (!s || !e)
      throw InvalidConfig("PV window bounds must be HH:MM");
    window = {*s, *e};
  }
  window.validate();
  o.vehicle.validate();
  if (o.jobs < 1)
    throw InvalidConfig("--jobs must be at least 1");
  if (o.days_in_month < 1)
    throw InvalidConfig("days in month must be positive");
  if (!(o.delta > 0.0 && o.delta <= 1.0))
    throw InvalidConfig("EV penetration rate must lie in (0, 1]");
  if (!(o.n_pop > 0.0))
    throw InvalidConfig("population must be positive");
  const Seconds tau = Seconds{static_cast<std::int64_t>(std::llround(o.tau_hours * 3600.0))};
  const Seconds step = detail::minutes_to_seconds(o.time_step_minutes, "time step");
  if (seconds_per_day % step.count() != 0)
    throw InvalidConfig("time step must divide 24 h");

  // Inputs.
  const std::string areas_bytes = read_file(o.areas);
  const std::string records_bytes = read_file(o.records);
  const std::string demand_bytes = read_file(o.demand);

  nlohmann::json areas_doc;
  try
  {
    areas_doc = nlohmann::json::parse(areas_bytes);
  }
  catch (const nlohmann::json::exception& e)
  {
    throw InvalidInput(std::string("areas GeoJSON: ") + e.what());
  }
  std::vector<PlanningArea> areas;
  try
  {
    areas = parse_areas_geojson(areas_doc);
  }
  catch (const nlohmann::json::exception& e)
  {
    throw InvalidInput(std::string("areas GeoJSON: ") + e.what());
  }
  if (areas.empty())
    throw InvalidInput("areas GeoJSON has no features");

  std::istringstream demand_in(demand_bytes);
  const DemandCurve curve = read_demand_csv(demand_in);

  std::istringstream records_in(records_bytes);
  auto read = read_records_csv(records_in);

  IngestConfig icfg;
  icfg.tau = tau;
  icfg.min_consecutive_days = o.min_days;
  icfg.tz = *tz;
  icfg.grid = grid_covering(detail::bbox_corner(areas, true),
    detail::bbox_corner(areas, false), o.cell_size_m);
  icfg.validate();

  const AreaIndex index = build_area_index(icfg.grid, areas);

  // Mobility.
  const std::size_t n_valid_records = read.records.size();
  const IngestResult ing = ingest(std::move(read.records), icfg, o.jobs);

  DayRange days = observed_days(ing.trajectories, ing.retained_users, *tz);
  if (o.first_day || o.n_days)
  {
    if (!o.first_day || !o.n_days || *o.n_days < 1)
      throw InvalidConfig("--first-day and --n-days must be given together");
    const auto d = parse_date(*o.first_day);
    if (!d)
      throw InvalidConfig("--first-day must be YYYY-MM-DD");
    days = {*d, *d + *o.n_days - 1};
  }

  // Simulation.
  const auto traces = run_scenario(ing.trajectories, ing.retained_users, icfg.grid,
    o.vehicle, window, *tz, days, o.jobs);
  std::size_t n_events = 0;
  std::size_t range_exceeded = 0;
  for (const auto& t : traces)
  {
    verify_trace(t, o.vehicle, window, *tz);
    n_events += t.events.size();
    range_exceeded += static_cast<std::size_t>(t.range_exceeded);
  }

  // Aggregation.
  ScalingConfig scaling;
  scaling.delta = o.delta;
  scaling.n_pop = o.n_pop;
  scaling.n_usr = static_cast<double>(ing.retained_users.size());
  scaling.time_step = step;

  nlohmann::json warnings = nlohmann::json::object();
  AggregationResult agg;
  if (!ing.retained_users.empty())
  {
    agg = aggregate(traces, index, areas, scaling, o.vehicle, days, *tz, o.jobs);
  }
  else
  {
    warnings["no_retained_users"] = true;
    std::vector<std::string> ids = index.area_ids();
    ids.emplace_back(unassigned_area_id);
    for (const auto& id : ids)
    {
      const auto it = std::find_if(areas.begin(), areas.end(),
        [&](const PlanningArea& a) { return a.area_id == id; });
      for (DayNumber d = days.first; d <= days.last; ++d)
      {
        AreaAggregate a;
        a.area_id = id;
        a.day = d;
        a.demand_profile_kw.assign(scaling.steps_per_day(), 0.0);
        if (it != areas.end())
        {
          a.p_peak_density_w_m2 = 0.0;
          a.charging_points_abs = 0.0;
          a.charging_points_per_km2 = 0.0;
        }
        agg.rows.push_back(std::move(a));
      }
    }
  }

  // Household comparison on the mean simulated day.
  const double night = night_fraction(curve, window);
  std::map<std::string, double> ev_sum;
  std::map<std::string, double> density_max;
  for (const auto& r : agg.rows)
  {
    ev_sum[r.area_id] += r.e_ev_kwh;
    if (r.p_peak_density_w_m2)
      density_max[r.area_id] = std::max(density_max[r.area_id], *r.p_peak_density_w_m2);
  }
  std::vector<CoverageInput> cov_in;
  std::size_t missing_household = 0;
  for (const auto& id : index.area_ids())
  {
    const auto& area = *std::find_if(areas.begin(), areas.end(),
      [&](const PlanningArea& a) { return a.area_id == id; });
    const auto hh = household_night_energy(area, o.days_in_month, night);
    if (!hh)
      ++missing_household;
    const double mean_ev = days.empty() ? 0.0 : ev_sum[id] / static_cast<double>(days.size());
    cov_in.push_back({id, mean_ev, hh});
  }
  CoverageReport cov = coverage_ratios(cov_in, o.hist_bin_width);
  std::string withheld_reason = "fewer than three paired areas";
  if (cov.rows.size() >= 3)
  {
    try
    {
      cov.regression = regress_coverage(cov);
    }
    catch (const DegenerateRegressor&)
    {
      withheld_reason = "household energy identical across areas";
      warnings["degenerate_regressor"] = true;
    }
  }

  const double p_pv = pv_sufficiency(o.eta_pv, o.a_pv, o.irradiance_w_m2);

  // Outputs.
  fs::create_directories(o.out_dir);
  std::map<std::string, std::string> outputs;
  {
    std::ostringstream s;
    write_area_energy_csv(s, agg.rows);
    outputs["area_energy.csv"] = s.str();
  }
  {
    std::ostringstream s;
    write_area_peak_csv(s, agg.rows);
    outputs["area_peak.csv"] = s.str();
  }
  {
    std::ostringstream s;
    write_area_profile_csv(s, agg.rows, step, *tz);
    outputs["area_profile.csv"] = s.str();
  }
  {
    std::ostringstream s;
    write_coverage_csv(s, cov);
    outputs["coverage.csv"] = s.str();
  }
  {
    std::ostringstream s;
    write_histogram_csv(s, cov.histogram);
    outputs["coverage_hist.csv"] = s.str();
  }
  {
    std::ostringstream s;
    write_regression_txt(s, cov.regression, cov.rows.size(), withheld_reason);
    outputs["regression.txt"] = s.str();
  }
  {
    std::map<std::string, const CoverageRow*> cov_by_id;
    for (const auto& r : cov.rows)
      cov_by_id[r.area_id] = &r;
    std::map<std::string, double> peak_max;
    for (const auto& r : agg.rows)
      peak_max[r.area_id] = std::max(peak_max[r.area_id], r.p_ev_peak_kw);

    nlohmann::json doc = areas_doc;
    for (auto& f : doc["features"])
    {
      const std::string id = f["properties"]["area_id"].get<std::string>();
      auto& p = f["properties"];
      const double density = density_max[id];
      p["e_ev_kwh_mean"] = days.empty() ? 0.0 : ev_sum[id] / static_cast<double>(days.size());
      p["p_peak_kw_max"] = peak_max[id];
      p["p_density_w_m2_max"] = density;
      p["p_pv_w_m2"] = p_pv;
      p["pv_deficit"] = pv_deficit(density, p_pv);
      if (const auto it = cov_by_id.find(id); it != cov_by_id.end())
      {
        p["e_hh_kwh"] = it->second->e_hh_kwh;
        p["coverage_ratio"] = it->second->ratio;
      }
    }
    outputs["area_metrics.geojson"] = doc.dump(1) + "\n";
  }
  if (o.emit_stays)
  {
    std::ostringstream s;
    write_stays_csv(s, ing.trajectories, *tz);
    outputs["stays.csv"] = s.str();
  }
  if (o.emit_events)
  {
    std::ostringstream s;
    write_events_csv(s, traces, *tz);
    outputs["events.csv"] = s.str();
  }

  RunSummary summary;
  for (const auto& [name, bytes] : outputs)
  {
    write_file(o.out_dir / name, bytes);
    summary.output_digests[name] = sha256_hex(bytes);
  }

  summary.n_records = ing.n_records;
  summary.n_users = ing.trajectories.size();
  summary.n_retained = ing.retained_users.size();
  summary.n_traces = traces.size();
  summary.n_events = n_events;

  warnings["skipped_rows"] = read.skipped_rows;
  warnings["invalid_records"] = ing.counters.invalid;
  warnings["out_of_grid_records"] = ing.counters.out_of_bounds;
  warnings["range_exceeded"] = range_exceeded;
  warnings["areas_missing_household_data"] = missing_household;
  warnings["areas_excluded_from_coverage"] = cov.excluded;
  if (n_valid_records == 0)
    warnings["empty_records"] = true;
  std::size_t unassigned_cells = 0;
  for (std::int32_t r = 0; r < icfg.grid.n_rows; ++r)
    for (std::int32_t c = 0; c < icfg.grid.n_cols; ++c)
      unassigned_cells += index.slot({r, c}) == AreaIndex::none ? 1 : 0;
  warnings["unassigned_cells"] = unassigned_cells;

  nlohmann::json m;
  m["tool"] = "v2gplan";
  m["version"] = tool_version;
  m["started_utc"] = started;
  m["config"] = {
    {"delta", o.delta},
    {"n_pop", o.n_pop},
    {"n_usr", scaling.n_usr},
    {"market_share", scaling.market_share()},
    {"c_max_kwh", o.vehicle.c_max_kwh},
    {"l_max_km", o.vehicle.l_max_km},
    {"p_charge_kw", o.vehicle.p_charge_kw},
    {"p_discharge_kw", o.vehicle.p_discharge_kw},
    {"c_thr", o.vehicle.c_thr},
    {"c_init", o.vehicle.c_init},
    {"pv_charge_target", o.vehicle.pv_charge_target},
    {"pv_start", format_time_of_day(window.start)},
    {"pv_end", format_time_of_day(window.end)},
    {"tau_s", tau.count()},
    {"min_consecutive_days", o.min_days},
    {"cell_size_m", o.cell_size_m},
    {"time_step_s", step.count()},
    {"tz", format_utc_offset(*tz)},
    {"days_in_month", o.days_in_month},
    {"hist_bin_width", o.hist_bin_width},
    {"eta_pv", o.eta_pv},
    {"a_pv", o.a_pv},
    {"irradiance_w_m2", o.irradiance_w_m2},
    {"jobs", o.jobs},
  };
  m["grid"] = {
    {"origin_lat", icfg.grid.origin_lat},
    {"origin_lon", icfg.grid.origin_lon},
    {"cell_size_m", icfg.grid.cell_size_m},
    {"n_rows", icfg.grid.n_rows},
    {"n_cols", icfg.grid.n_cols},
  };
  m["days"] = days.empty() ? nlohmann::json::array()
                           : nlohmann::json::array({format_date(days.first), format_date(days.last)});
  m["inputs"] = {
    {"records", {{"path", o.records.string()}, {"sha256", sha256_hex(records_bytes)}}},
    {"areas", {{"path", o.areas.string()}, {"sha256", sha256_hex(areas_bytes)}}},
    {"demand", {{"path", o.demand.string()}, {"sha256", sha256_hex(demand_bytes)}}},
  };
  m["counts"] = {
    {"records", summary.n_records},
    {"users", summary.n_users},
    {"retained_users", summary.n_retained},
    {"traces", summary.n_traces},
    {"events", summary.n_events},
    {"areas", areas.size()},
  };
  m["night_fraction"] = night;
  m["p_pv_w_m2"] = p_pv;
  m["warnings"] = warnings;
  m["outputs"] = summary.output_digests;
  m["timestamps_tz"] = format_utc_offset(*tz);
  m["finished_utc"] = detail::utc_now_iso();
  write_file(o.out_dir / "manifest.json", m.dump(2) + "\n");
  summary.manifest = std::move(m);
  return summary;
}

} // namespace v2gplan

#endif // V2GPLAN__PIPELINE_HPP
