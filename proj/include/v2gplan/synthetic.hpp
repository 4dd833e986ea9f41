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

#ifndef V2GPLAN__SYNTHETIC_HPP
#define V2GPLAN__SYNTHETIC_HPP

#include <v2gplan/errors.hpp>
#include <v2gplan/geo.hpp>
#include <v2gplan/mobility.hpp>
#include <v2gplan/parallel.hpp>
#include <v2gplan/time.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace v2gplan {

struct WeightedCell
{
  CellId cell;
  double weight = 1.0;
};

/// Home-anchored day-loop itinerary model. Every user has one home cell and
/// leaves it each morning for a random number of work or amenity stays,
/// returning home in the evening. Travel between stays emits no pings.
struct SynthConfig
{
  std::uint64_t rng_seed = 42;
  int n_users = 100;
  int n_days = 7;
  DayNumber first_day = 18506; // 2020-09-01
  UtcOffset tz{Seconds{8 * 3600}};

  std::vector<WeightedCell> home_cells;
  std::vector<WeightedCell> work_cells;
  std::vector<WeightedCell> amenity_cells;
  /// Probability that an out-of-home stay is at work rather than an amenity.
  double p_work = 0.5;

  double mean_stays_per_day = 1.5;
  int max_stays_per_day = 5;
  double stay_hours_min = 1.0;
  double stay_hours_max = 4.0;
  double departure_hour_min = 6.5;
  double departure_hour_max = 9.5;
  double travel_minutes_min = 15.0;
  double travel_minutes_max = 60.0;
  /// Latest local hour by which the last out-of-home stay must end.
  double latest_return_hour = 23.0;
  Seconds ping_interval{15 * 60};

  void validate() const
  {
    if (n_users < 1 || n_days < 1)
      throw InvalidConfig("synthetic generator needs at least one user and one day");
    if (home_cells.empty() || (work_cells.empty() && amenity_cells.empty()))
      throw InvalidConfig("synthetic generator needs non-empty cell pools");
    for (const auto* pool : {&home_cells, &work_cells, &amenity_cells})
    {
      double sum = 0.0;
      for (const auto& c : *pool)
      {
        if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
          throw InvalidConfig("cell weights must be finite and non-negative");
        sum += c.weight;
      }
      if (!pool->empty() && !(sum > 0.0))
        throw InvalidConfig("cell pool weights must not all be zero");
    }
    if (!(p_work >= 0.0 && p_work <= 1.0))
      throw InvalidConfig("p_work must lie in [0, 1]");
    if (!(mean_stays_per_day >= 0.0) || max_stays_per_day < 0)
      throw InvalidConfig("stay counts must be non-negative");
    if (!(stay_hours_min > 0.0) || stay_hours_max < stay_hours_min)
      throw InvalidConfig("stay durations must be positive with min <= max");
    if (!(departure_hour_min >= 0.0) || departure_hour_max < departure_hour_min
      || !(latest_return_hour <= 24.0))
      throw InvalidConfig("departure hours must be ordered within the day");
    if (!(travel_minutes_min > 0.0) || travel_minutes_max < travel_minutes_min)
      throw InvalidConfig("travel gaps must be positive with min <= max");
    if (ping_interval <= Seconds{0})
      throw InvalidConfig("ping interval must be positive");
  }
};

struct PlannedStay
{
  CellId cell;
  Instant arrival;
  Instant departure;
};

struct PlannedUser
{
  std::string user_id;
  std::vector<PlannedStay> stays;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Portable random draws. The standard distributions are implementation
/// defined, which would tie the output bytes to one standard library.
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : _engine(seed) {}

  double uniform()
  {
    return static_cast<double>(_engine() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi)
  {
    return lo + (hi - lo) * uniform();
  }

  int poisson(double mean)
  {
    const double limit = std::exp(-mean);
    int k = 0;
    double p = uniform();
    while (p > limit)
    {
      ++k;
      p *= uniform();
    }
    return k;
  }

  std::size_t pick(const std::vector<WeightedCell>& pool)
  {
    double sum = 0.0;
    for (const auto& c : pool)
      sum += c.weight;
    double u = uniform() * sum;
    for (std::size_t i = 0; i < pool.size(); ++i)
    {
      if (u < pool[i].weight)
        return i;
      u -= pool[i].weight;
    }
    return pool.size() - 1;
  }

private:
  std::mt19937_64 _engine;
};

inline Seconds to_seconds(double hours)
{
  return Seconds{static_cast<std::int64_t>(std::llround(hours * 3600.0))};
}

} // namespace detail

inline std::string synthetic_user_id(int index)
{
  char buf[24];
  std::snprintf(buf, sizeof(buf), "u%06d", index);
  return buf;
}

/// Per-user seed; independent of generation order.
inline std::uint64_t user_seed(std::uint64_t seed, int index)
{
  return detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(index) + 1));
}

/// The stays planted for one user, in time order. Consecutive stays are in
/// distinct cells and never overlap.
inline PlannedUser plan_user(const SynthConfig& cfg, int index)
{
  detail::Rng rng(user_seed(cfg.rng_seed, index));
  PlannedUser user;
  user.user_id = synthetic_user_id(index);

  const CellId home = cfg.home_cells[rng.pick(cfg.home_cells)].cell;
  Instant home_since = day_start(cfg.first_day, cfg.tz);

  for (int d = 0; d < cfg.n_days; ++d)
  {
    const Instant midnight = day_start(cfg.first_day + d, cfg.tz);
    const Instant latest = midnight + detail::to_seconds(cfg.latest_return_hour);
    const int wanted = std::min(rng.poisson(cfg.mean_stays_per_day), cfg.max_stays_per_day);
    Instant t = midnight
      + detail::to_seconds(rng.uniform(cfg.departure_hour_min, cfg.departure_hour_max));

    std::vector<PlannedStay> outings;
    CellId previous = home;
    for (int k = 0; k < wanted; ++k)
    {
      const bool work = cfg.amenity_cells.empty()
        || (!cfg.work_cells.empty() && rng.uniform() < cfg.p_work);
      const auto& pool = work ? cfg.work_cells : cfg.amenity_cells;
      const CellId cell = pool[rng.pick(pool)].cell;
      const Instant arrival = t + detail::to_seconds(
        rng.uniform(cfg.travel_minutes_min, cfg.travel_minutes_max) / 60.0);
      const Instant departure = arrival
        + detail::to_seconds(rng.uniform(cfg.stay_hours_min, cfg.stay_hours_max));
      if (cell == previous || cell == home)
        continue;
      if (departure > latest)
        break;
      outings.push_back({cell, arrival, departure});
      previous = cell;
      t = departure;
    }
    if (outings.empty())
      continue;

    const Instant leave_home = outings.front().arrival
      - detail::to_seconds(rng.uniform(cfg.travel_minutes_min, cfg.travel_minutes_max) / 60.0);
    if (leave_home > home_since)
      user.stays.push_back({home, home_since, leave_home});
    for (const auto& o : outings)
      user.stays.push_back(o);
    home_since = outings.back().departure
      + detail::to_seconds(rng.uniform(cfg.travel_minutes_min, cfg.travel_minutes_max) / 60.0);
  }
  const Instant end = day_start(cfg.first_day + cfg.n_days, cfg.tz);
  if (home_since < end)
    user.stays.push_back({home, home_since, end});
  return user;
}

/// Pings every `interval` from arrival, plus one at departure when the
/// interval does not land on it. Pings sit on the cell centroid.
inline void emit_pings(const PlannedUser& user, const GridSpec& grid,
  Seconds interval, std::vector<LocationRecord>& out)
{
  for (const auto& s : user.stays)
  {
    const LatLon p = grid.centroid(s.cell);
    Instant t = s.arrival;
    for (; t <= s.departure; t += interval)
      out.push_back({user.user_id, t, p.lat, p.lon});
    if (t - interval < s.departure)
      out.push_back({user.user_id, s.departure, p.lat, p.lon});
  }
}

inline std::vector<LocationRecord> generate_user(const SynthConfig& cfg,
  const GridSpec& grid, int index)
{
  std::vector<LocationRecord> out;
  emit_pings(plan_user(cfg, index), grid, cfg.ping_interval, out);
  return out;
}

/// Full record stream, ordered by user and time. Identical for a given
/// seed regardless of `jobs`.
inline std::vector<LocationRecord> generate(const SynthConfig& cfg,
  const GridSpec& grid, unsigned jobs = 1)
{
  cfg.validate();
  grid.validate();
  for (const auto* pool : {&cfg.home_cells, &cfg.work_cells, &cfg.amenity_cells})
  {
    for (const auto& c : *pool)
    {
      if (!grid.contains(c.cell))
        throw InvalidConfig("synthetic cell pool contains a cell outside the grid");
    }
  }

  std::vector<std::vector<LocationRecord>> per_user(static_cast<std::size_t>(cfg.n_users));
  parallel_for(per_user.size(), jobs, [&](std::size_t i)
    { per_user[i] = generate_user(cfg, grid, static_cast<int>(i)); });

  std::vector<LocationRecord> all;
  for (auto& v : per_user)
  {
    all.insert(all.end(), std::make_move_iterator(v.begin()),
      std::make_move_iterator(v.end()));
  }
  return all;
}

//==============================================================================
/// Default demo grid: 20 km x 30 km of 250 m cells, south-west anchored near
/// Singapore's western shore.
inline GridSpec default_synthetic_grid(double cell_size_m = 250.0)
{
  GridSpec g;
  g.origin_lat = 1.24;
  g.origin_lon = 103.66;
  g.cell_size_m = cell_size_m;
  g.n_rows = static_cast<std::int32_t>(std::ceil(20000.0 / cell_size_m));
  g.n_cols = static_cast<std::int32_t>(std::ceil(30000.0 / cell_size_m));
  g.validate();
  return g;
}

/// Distinct random cells with random weights in [0.2, 1).
inline std::vector<WeightedCell> random_pool(const GridSpec& grid, std::size_t n,
  detail::Rng& rng)
{
  n = std::min(n, grid.cell_count());
  std::set<CellId> seen;
  std::vector<WeightedCell> pool;
  while (pool.size() < n)
  {
    const CellId c{
      static_cast<std::int32_t>(rng.uniform() * grid.n_rows),
      static_cast<std::int32_t>(rng.uniform() * grid.n_cols)};
    if (!seen.insert(c).second)
      continue;
    pool.push_back({c, rng.uniform(0.2, 1.0)});
  }
  return pool;
}

inline SynthConfig default_synth_config(const GridSpec& grid, std::uint64_t seed)
{
  SynthConfig cfg;
  cfg.rng_seed = seed;
  detail::Rng rng(detail::splitmix64(seed ^ 0x706f6f6c73ull));
  cfg.home_cells = random_pool(grid, 400, rng);
  cfg.work_cells = random_pool(grid, 80, rng);
  cfg.amenity_cells = random_pool(grid, 40, rng);
  return cfg;
}

/// Tiles the grid with rectangular planning areas aligned to cell edges.
inline std::vector<PlanningArea> synthetic_areas(const GridSpec& grid,
  int area_rows, int area_cols, std::uint64_t seed)
{
  if (area_rows < 1 || area_cols < 1 || area_rows > grid.n_rows || area_cols > grid.n_cols)
    throw InvalidConfig("area tiling must fit the grid");
  detail::Rng rng(detail::splitmix64(seed ^ 0x6172656173ull));
  std::vector<PlanningArea> areas;
  for (int i = 0; i < area_rows; ++i)
  {
    const int r0 = grid.n_rows * i / area_rows;
    const int r1 = grid.n_rows * (i + 1) / area_rows;
    for (int j = 0; j < area_cols; ++j)
    {
      const int c0 = grid.n_cols * j / area_cols;
      const int c1 = grid.n_cols * (j + 1) / area_cols;
      const double cs = grid.cell_size_m;
      PlanningArea a;
      char id[16];
      std::snprintf(id, sizeof(id), "A%02d", i * area_cols + j + 1);
      a.area_id = id;
      a.name = "Synthetic area " + a.area_id;
      a.rings.push_back({
        grid.unproject({c0 * cs, r0 * cs}),
        grid.unproject({c1 * cs, r0 * cs}),
        grid.unproject({c1 * cs, r1 * cs}),
        grid.unproject({c0 * cs, r1 * cs}),
        grid.unproject({c0 * cs, r0 * cs})});
      a.area_m2 = (c1 - c0) * cs * (r1 - r0) * cs;
      a.households = std::round(rng.uniform(5000.0, 40000.0));
      a.monthly_kwh_per_household = std::round(rng.uniform(300.0, 500.0));
      areas.push_back(std::move(a));
    }
  }
  return areas;
}

/// Half-hourly system demand (MW) with a midday plateau and an evening peak.
inline std::vector<double> synthetic_demand_curve()
{
  std::vector<double> v;
  for (int i = 0; i < 48; ++i)
  {
    const double h = (i + 0.5) / 2.0;
    const double midday = (h - 14.0) / 4.0;
    const double evening = (h - 20.5) / 2.0;
    v.push_back(std::round(5500.0 + 1200.0 * std::exp(-midday * midday)
      + 600.0 * std::exp(-evening * evening)));
  }
  return v;
}

} // namespace v2gplan

#endif // V2GPLAN__SYNTHETIC_HPP
