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

#ifndef V2GPLAN__TESTS__TEST_UTIL_HPP
#define V2GPLAN__TESTS__TEST_UTIL_HPP

#include <v2gplan/geo.hpp>
#include <v2gplan/mobility.hpp>
#include <v2gplan/time.hpp>

#include <string>

namespace v2gplan::test {

inline constexpr DayNumber sep1 = 18506; // 2020-09-01
inline const UtcOffset sgt{Seconds{8 * 3600}};

/// Local wall-clock instant on `day` in UTC+8.
inline Instant at(DayNumber day, int h, int m = 0, int s = 0)
{
  return day_start(day, sgt) + Seconds{h * 3600 + m * 60 + s};
}

inline FineInstant fine_at(DayNumber day, double hours)
{
  return to_fine(day_start(day, sgt)) + FineSeconds{hours * 3600.0};
}

/// 250 m grid anchored on the equator.
inline GridSpec equator_grid(std::int32_t rows = 40, std::int32_t cols = 40)
{
  GridSpec g;
  g.origin_lat = 0.0;
  g.origin_lon = 103.0;
  g.cell_size_m = 250.0;
  g.n_rows = rows;
  g.n_cols = cols;
  return g;
}

/// Singapore-latitude grid.
inline GridSpec sg_grid(std::int32_t rows = 80, std::int32_t cols = 120)
{
  GridSpec g;
  g.origin_lat = 1.24;
  g.origin_lon = 103.66;
  g.cell_size_m = 250.0;
  g.n_rows = rows;
  g.n_cols = cols;
  return g;
}

inline LocationRecord ping(const std::string& user, Instant t, const GridSpec& g,
  CellId c)
{
  const LatLon p = g.centroid(c);
  return {user, t, p.lat, p.lon};
}

inline Stay stay(const std::string& user, CellId c, Instant a, Instant d)
{
  return {user, c, a, d};
}

} // namespace v2gplan::test

#endif // V2GPLAN__TESTS__TEST_UTIL_HPP
