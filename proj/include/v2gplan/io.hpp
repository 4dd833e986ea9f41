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

#ifndef V2GPLAN__IO_HPP
#define V2GPLAN__IO_HPP

#include <v2gplan/aggregation.hpp>
#include <v2gplan/errors.hpp>
#include <v2gplan/geo.hpp>
#include <v2gplan/household.hpp>
#include <v2gplan/mobility.hpp>
#include <v2gplan/time.hpp>
#include <v2gplan/v2g.hpp>

#include <nlohmann/json.hpp>

#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace v2gplan {

/// Shortest decimal text that parses back to the same double.
inline std::string fmt(double v)
{
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline bool parse_double(std::string_view s, double& out)
{
  if (s.empty())
    return false;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

namespace detail {

inline std::string_view chomp(std::string_view line)
{
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n'
    || line.back() == ' '))
    line.remove_suffix(1);
  return line;
}

inline std::vector<std::string_view> split_csv(std::string_view line)
{
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;)
  {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos)
    {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

} // namespace detail

//==============================================================================
inline constexpr std::string_view records_header = "user_id,timestamp,lat,lon";

struct RecordReadResult
{
  std::vector<LocationRecord> records;
  std::size_t skipped_rows = 0;
};

/// Reads the ingest CSV. Rows with unparseable or out-of-range fields are
/// skipped and counted; a wrong header is an error. A file with no content at
/// all reads as empty.
inline RecordReadResult read_records_csv(std::istream& in)
{
  RecordReadResult result;
  std::string line;
  if (!std::getline(in, line))
    return result;
  if (detail::chomp(line) != records_header)
    throw InvalidInput("records CSV: expected header '" + std::string(records_header) + "'");

  while (std::getline(in, line))
  {
    const auto text = detail::chomp(line);
    if (text.empty())
      continue;
    const auto f = detail::split_csv(text);
    LocationRecord r;
    const auto ts = f.size() == 4 ? parse_iso8601(f[1]) : std::nullopt;
    if (f.size() != 4 || f[0].empty() || !ts || !parse_double(f[2], r.lat)
      || !parse_double(f[3], r.lon))
    {
      ++result.skipped_rows;
      continue;
    }
    r.user_id = std::string(f[0]);
    r.timestamp = *ts;
    if (!is_valid(r))
    {
      ++result.skipped_rows;
      continue;
    }
    result.records.push_back(std::move(r));
  }
  return result;
}

inline void write_records_csv(std::ostream& out, std::span<const LocationRecord> records)
{
  out << records_header << '\n';
  char buf[64];
  for (const auto& r : records)
  {
    std::snprintf(buf, sizeof(buf), "%.8f,%.8f", r.lat, r.lon);
    out << r.user_id << ',' << format_utc(r.timestamp) << ',' << buf << '\n';
  }
}

inline void write_stays_csv(std::ostream& out, std::span<const Trajectory> trajectories,
  UtcOffset tz)
{
  out << "user_id,cell_row,cell_col,arrival,departure\n";
  for (const auto& t : trajectories)
  {
    for (const auto& s : t.stays)
    {
      out << s.user_id << ',' << s.cell.row << ',' << s.cell.col << ','
          << format_local(s.arrival, tz) << ',' << format_local(s.departure, tz) << '\n';
    }
  }
}

inline void write_events_csv(std::ostream& out, std::span<const SocTrace> traces,
  UtcOffset tz)
{
  out << "user_id,day,cell_row,cell_col,regime,start,end,power_kw,energy_kwh\n";
  for (const auto& tr : traces)
  {
    for (const auto& e : tr.events)
    {
      out << e.user_id << ',' << format_date(tr.day) << ',' << e.cell.row << ','
          << e.cell.col << ',' << to_string(e.regime) << ','
          << format_local(e.start, tz) << ',' << format_local(e.end, tz) << ','
          << fmt(e.power_kw) << ',' << fmt(e.energy_kwh) << '\n';
    }
  }
}

//==============================================================================
/// Reads a `time_of_day,demand` CSV. Rows must start at 00:00 and be evenly
/// spaced over the whole day.
inline DemandCurve read_demand_csv(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line) || detail::chomp(line) != "time_of_day,demand")
    throw InvalidInput("demand CSV: expected header 'time_of_day,demand'");
  std::vector<Seconds> times;
  std::vector<double> values;
  while (std::getline(in, line))
  {
    const auto text = detail::chomp(line);
    if (text.empty())
      continue;
    const auto f = detail::split_csv(text);
    double v = 0.0;
    const auto t = f.size() == 2 ? parse_time_of_day(f[0]) : std::nullopt;
    if (!t || !parse_double(f[1], v))
      throw InvalidInput("demand CSV: malformed row '" + std::string(text) + "'");
    times.push_back(*t);
    values.push_back(v);
  }
  if (values.size() < 2)
    throw InvalidInput("demand CSV: at least two samples are required");
  const auto step = Seconds{seconds_per_day / static_cast<std::int64_t>(values.size())};
  for (std::size_t i = 0; i < times.size(); ++i)
  {
    if (times[i] != step * static_cast<std::int64_t>(i))
      throw InvalidInput("demand CSV: samples must be evenly spaced from 00:00 over 24 h");
  }
  return DemandCurve(std::move(values));
}

inline void write_demand_csv(std::ostream& out, const DemandCurve& curve)
{
  out << "time_of_day,demand\n";
  for (std::size_t i = 0; i < curve.samples().size(); ++i)
  {
    out << format_time_of_day(curve.step() * static_cast<std::int64_t>(i)) << ','
        << fmt(curve.samples()[i]) << '\n';
  }
}

//==============================================================================
namespace detail {

inline Ring parse_ring(const nlohmann::json& coords)
{
  Ring ring;
  for (const auto& pt : coords)
  {
    if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number())
      throw InvalidGeometry("GeoJSON position must be [lon, lat]");
    ring.push_back({pt[1].get<double>(), pt[0].get<double>()});
  }
  return ring;
}

inline std::optional<double> optional_number(const nlohmann::json& props,
  const char* key)
{
  const auto it = props.find(key);
  if (it == props.end() || it->is_null())
    return std::nullopt;
  if (!it->is_number())
    throw InvalidInput(std::string("GeoJSON property '") + key + "' must be a number");
  return it->get<double>();
}

} // namespace detail

/// Planning areas from a GeoJSON FeatureCollection of Polygon or
/// MultiPolygon features with `area_id` and `area_m2` properties.
inline std::vector<PlanningArea> parse_areas_geojson(const nlohmann::json& doc)
{
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection"
    || !doc.contains("features") || !doc["features"].is_array())
    throw InvalidInput("areas GeoJSON must be a FeatureCollection");

  std::vector<PlanningArea> areas;
  for (const auto& f : doc["features"])
  {
    const auto& props = f.at("properties");
    if (!props.contains("area_id") || !props["area_id"].is_string())
      throw InvalidInput("every area feature needs a string 'area_id'");
    PlanningArea a;
    a.area_id = props["area_id"].get<std::string>();
    if (!props.contains("area_m2") || !props["area_m2"].is_number())
      throw InvalidInput("area '" + a.area_id + "' needs a numeric 'area_m2'");
    a.area_m2 = props["area_m2"].get<double>();
    if (props.contains("name") && props["name"].is_string())
      a.name = props["name"].get<std::string>();
    a.households = detail::optional_number(props, "households");
    a.monthly_kwh_per_household = detail::optional_number(props, "monthly_kwh_per_household");

    const auto& geom = f.at("geometry");
    const std::string type = geom.value("type", "");
    const auto& coords = geom.at("coordinates");
    if (type == "Polygon")
    {
      for (const auto& ring : coords)
        a.rings.push_back(detail::parse_ring(ring));
    }
    else if (type == "MultiPolygon")
    {
      for (const auto& poly : coords)
        for (const auto& ring : poly)
          a.rings.push_back(detail::parse_ring(ring));
    }
    else
    {
      throw InvalidGeometry("area '" + a.area_id + "' has unsupported geometry '" + type + "'");
    }
    normalize(a);
    areas.push_back(std::move(a));
  }
  return areas;
}

inline nlohmann::json areas_to_geojson(std::span<const PlanningArea> areas)
{
  nlohmann::json features = nlohmann::json::array();
  for (const auto& a : areas)
  {
    nlohmann::json rings = nlohmann::json::array();
    for (const auto& ring : a.rings)
    {
      nlohmann::json r = nlohmann::json::array();
      for (const auto& v : ring)
        r.push_back({v.lon, v.lat});
      rings.push_back(std::move(r));
    }
    nlohmann::json props = {{"area_id", a.area_id}, {"name", a.name}, {"area_m2", a.area_m2}};
    if (a.households)
      props["households"] = *a.households;
    if (a.monthly_kwh_per_household)
      props["monthly_kwh_per_household"] = *a.monthly_kwh_per_household;
    features.push_back({
      {"type", "Feature"},
      {"properties", std::move(props)},
      {"geometry", {{"type", "Polygon"}, {"coordinates", std::move(rings)}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

//==============================================================================
inline void write_area_energy_csv(std::ostream& out, std::span<const AreaAggregate> rows)
{
  out << "area_id,day,e_ev_kwh,e_pv_charge_kwh,e_nonpv_charge_kwh\n";
  for (const auto& a : rows)
  {
    out << a.area_id << ',' << format_date(a.day) << ',' << fmt(a.e_ev_kwh) << ','
        << fmt(a.e_pv_charge_kwh) << ',' << fmt(a.e_nonpv_charge_kwh) << '\n';
  }
}

inline void write_area_peak_csv(std::ostream& out, std::span<const AreaAggregate> rows)
{
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  out << "area_id,day,p_peak_kw,p_density_w_m2,charging_points_abs,charging_points_per_km2\n";
  for (const auto& a : rows)
  {
    out << a.area_id << ',' << format_date(a.day) << ',' << fmt(a.p_ev_peak_kw) << ','
        << opt(a.p_peak_density_w_m2) << ',' << opt(a.charging_points_abs) << ','
        << opt(a.charging_points_per_km2) << '\n';
  }
}

inline void write_area_profile_csv(std::ostream& out, std::span<const AreaAggregate> rows,
  Seconds step, UtcOffset tz)
{
  out << "area_id,day,step_start,power_kw\n";
  for (const auto& a : rows)
  {
    const Instant begin = day_start(a.day, tz);
    for (std::size_t k = 0; k < a.demand_profile_kw.size(); ++k)
    {
      out << a.area_id << ',' << format_date(a.day) << ','
          << format_local(begin + step * static_cast<std::int64_t>(k), tz) << ','
          << fmt(a.demand_profile_kw[k]) << '\n';
    }
  }
}

inline void write_coverage_csv(std::ostream& out, const CoverageReport& report)
{
  out << "area_id,e_ev_kwh,e_hh_kwh,ratio\n";
  for (const auto& r : report.rows)
  {
    out << r.area_id << ',' << fmt(r.e_ev_kwh) << ',' << fmt(r.e_hh_kwh) << ','
        << fmt(r.ratio) << '\n';
  }
}

inline void write_histogram_csv(std::ostream& out, std::span<const HistogramBin> bins)
{
  out << "bin_low,bin_high,count\n";
  for (const auto& b : bins)
    out << fmt(b.low) << ',' << fmt(b.high) << ',' << b.count << '\n';
}

inline void write_regression_txt(std::ostream& out,
  const std::optional<RegressionSummary>& s, std::size_t n_paired,
  std::string_view withheld_reason = "fewer than three paired areas")
{
  if (!s)
  {
    out << "n=" << n_paired << '\n' << "statistics=withheld (" << withheld_reason << ")\n";
    return;
  }
  out << "r=" << fmt(s->pearson_r) << '\n'
      << "p=" << fmt(s->p_value) << '\n'
      << "slope=" << fmt(s->ols_slope) << '\n'
      << "intercept=" << fmt(s->ols_intercept) << '\n'
      << "r2=" << fmt(s->r_squared) << '\n'
      << "n=" << s->n_points << '\n';
}

} // namespace v2gplan

#endif // V2GPLAN__IO_HPP
