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

#ifndef V2GPLAN__GEO_HPP
#define V2GPLAN__GEO_HPP

#include <v2gplan/errors.hpp>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace v2gplan {

inline constexpr double earth_radius_m = 6371008.8;
inline constexpr std::string_view unassigned_area_id = "_unassigned";

struct LatLon
{
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

struct CellId
{
  std::int32_t row = 0;
  std::int32_t col = 0;

  friend auto operator<=>(const CellId&, const CellId&) = default;
};

/// Planar offset from the grid origin, in metres (x east, y north).
struct LocalXY
{
  double x = 0.0;
  double y = 0.0;
};

inline double deg2rad(double deg)
{
  return deg * std::numbers::pi / 180.0;
}

inline double rad2deg(double rad)
{
  return rad * 180.0 / std::numbers::pi;
}

//==============================================================================
/// Regular analysis grid anchored at its south-west corner. Points are binned
/// through an equirectangular projection centred on the origin latitude,
/// which is accurate to a fraction of a percent over a city-sized extent.
struct GridSpec
{
  double origin_lat = 0.0;
  double origin_lon = 0.0;
  double cell_size_m = 250.0;
  std::int32_t n_rows = 1;
  std::int32_t n_cols = 1;

  void validate() const
  {
    if (!std::isfinite(origin_lat) || !std::isfinite(origin_lon)
      || origin_lat < -90.0 || origin_lat > 90.0)
      throw InvalidConfig("grid origin must be a finite WGS84 coordinate");
    if (!(cell_size_m > 0.0) || !std::isfinite(cell_size_m))
      throw InvalidConfig("grid cell size must be positive");
    if (n_rows < 1 || n_cols < 1)
      throw InvalidConfig("grid must have at least one row and one column");
  }

  bool contains(CellId c) const
  {
    return c.row >= 0 && c.row < n_rows && c.col >= 0 && c.col < n_cols;
  }

  std::size_t cell_count() const
  {
    return static_cast<std::size_t>(n_rows) * static_cast<std::size_t>(n_cols);
  }

  std::size_t flat_index(CellId c) const
  {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(n_cols)
      + static_cast<std::size_t>(c.col);
  }

  LocalXY project(LatLon p) const
  {
    const double k = std::cos(deg2rad(origin_lat));
    return {
      earth_radius_m * deg2rad(p.lon - origin_lon) * k,
      earth_radius_m * deg2rad(p.lat - origin_lat)};
  }

  LatLon unproject(LocalXY xy) const
  {
    const double k = std::cos(deg2rad(origin_lat));
    return {
      origin_lat + rad2deg(xy.y / earth_radius_m),
      origin_lon + rad2deg(xy.x / (earth_radius_m * k))};
  }

  LatLon centroid(CellId c) const
  {
    return unproject({(c.col + 0.5) * cell_size_m, (c.row + 0.5) * cell_size_m});
  }

  /// North-east corner of the grid extent.
  LatLon far_corner() const
  {
    return unproject({n_cols * cell_size_m, n_rows * cell_size_m});
  }
};

/// Smallest grid with the given cell size whose extent covers the box
/// [south_west, north_east].
inline GridSpec grid_covering(LatLon south_west, LatLon north_east,
  double cell_size_m)
{
  GridSpec g;
  g.origin_lat = south_west.lat;
  g.origin_lon = south_west.lon;
  g.cell_size_m = cell_size_m;
  if (!(cell_size_m > 0.0))
    throw InvalidConfig("grid cell size must be positive");
  const LocalXY extent = g.project(north_east);
  // The slack keeps an extent that is an exact multiple of the cell size
  // (up to projection round-off) from gaining a spurious extra row or column.
  g.n_cols = std::max<std::int32_t>(1,
    static_cast<std::int32_t>(std::ceil(extent.x / cell_size_m - 1e-9)));
  g.n_rows = std::max<std::int32_t>(1,
    static_cast<std::int32_t>(std::ceil(extent.y / cell_size_m - 1e-9)));
  g.validate();
  return g;
}

/// Cell containing `p`, or nullopt outside the grid's bounding box. Cell
/// extents are half-open: [origin + i*size, origin + (i+1)*size).
inline std::optional<CellId> locate(LatLon p, const GridSpec& grid)
{
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon))
    throw InvalidInput("non-finite coordinate");
  const LocalXY xy = grid.project(p);
  const double col = std::floor(xy.x / grid.cell_size_m);
  const double row = std::floor(xy.y / grid.cell_size_m);
  if (col < 0.0 || row < 0.0 || col >= grid.n_cols || row >= grid.n_rows)
    return std::nullopt;
  return CellId{static_cast<std::int32_t>(row), static_cast<std::int32_t>(col)};
}

inline double haversine_m(LatLon a, LatLon b)
{
  const double dlat = deg2rad(b.lat - a.lat);
  const double dlon = deg2rad(b.lon - a.lon);
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1
    + std::cos(deg2rad(a.lat)) * std::cos(deg2rad(b.lat)) * s2 * s2;
  return 2.0 * earth_radius_m * std::asin(std::min(1.0, std::sqrt(h)));
}

/// Great-circle distance between the centroids of two cells. Stands in for
/// the driven distance between two visited locations.
inline double cell_distance_m(CellId a, CellId b, const GridSpec& grid)
{
  if (!grid.contains(a) || !grid.contains(b))
    throw InvalidInput("cell outside grid");
  if (a == b)
    return 0.0;
  return haversine_m(grid.centroid(a), grid.centroid(b));
}

//==============================================================================
using Ring = std::vector<LatLon>;

struct PlanningArea
{
  std::string area_id;
  std::string name;
  /// Every ring of every polygon part. Containment uses the even-odd rule
  /// over all rings, so holes need no special treatment.
  std::vector<Ring> rings;
  double area_m2 = 0.0;
  std::optional<double> households;
  std::optional<double> monthly_kwh_per_household;
};

/// Vertex count ignoring the closing duplicate.
inline std::size_t open_vertex_count(const Ring& ring)
{
  if (ring.size() > 1 && ring.front() == ring.back())
    return ring.size() - 1;
  return ring.size();
}

inline void close_ring(Ring& ring)
{
  if (!ring.empty() && ring.front() != ring.back())
    ring.push_back(ring.front());
}

/// Closes open rings and checks the area invariants.
inline void normalize(PlanningArea& area)
{
  if (area.rings.empty())
    throw InvalidGeometry("area '" + area.area_id + "' has no rings");
  for (auto& ring : area.rings)
  {
    if (open_vertex_count(ring) < 3)
      throw InvalidGeometry(
        "area '" + area.area_id + "' has a ring with fewer than 3 vertices");
    close_ring(ring);
    for (const auto& v : ring)
    {
      if (!std::isfinite(v.lat) || !std::isfinite(v.lon))
        throw InvalidGeometry("area '" + area.area_id + "' has a non-finite vertex");
    }
  }
  if (!(area.area_m2 > 0.0))
    throw InvalidInput("area '" + area.area_id + "' must have area_m2 > 0");
  if ((area.households && *area.households < 0.0)
    || (area.monthly_kwh_per_household && *area.monthly_kwh_per_household < 0.0))
    throw InvalidInput("area '" + area.area_id + "' has negative household data");
}

enum class Containment
{
  Outside,
  Inside,
  Boundary,
};

namespace detail {

inline bool on_segment(LatLon p, LatLon a, LatLon b)
{
  constexpr double eps = 1e-12;
  const double cross = (b.lon - a.lon) * (p.lat - a.lat)
    - (b.lat - a.lat) * (p.lon - a.lon);
  const double scale = std::max({1.0, std::abs(b.lon - a.lon), std::abs(b.lat - a.lat)});
  if (std::abs(cross) > eps * scale)
    return false;
  return p.lon >= std::min(a.lon, b.lon) - eps && p.lon <= std::max(a.lon, b.lon) + eps
    && p.lat >= std::min(a.lat, b.lat) - eps && p.lat <= std::max(a.lat, b.lat) + eps;
}

} // namespace detail

/// Even-odd point-in-polygon test in lon/lat coordinates.
inline Containment contains(const PlanningArea& area, LatLon p)
{
  bool inside = false;
  for (const auto& ring : area.rings)
  {
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++)
    {
      const LatLon& a = ring[i];
      const LatLon& b = ring[j];
      if (detail::on_segment(p, a, b))
        return Containment::Boundary;
      if ((a.lat > p.lat) != (b.lat > p.lat))
      {
        const double x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
        if (p.lon < x)
          inside = !inside;
      }
    }
  }
  return inside ? Containment::Inside : Containment::Outside;
}

//==============================================================================
/// Maps every grid cell to the planning area containing its centroid.
class AreaIndex
{
public:
  static constexpr std::int32_t none = -1;

  AreaIndex() = default;

  AreaIndex(GridSpec grid, std::vector<std::string> area_ids,
    std::vector<std::int32_t> cell_slots)
  : _grid(grid), _area_ids(std::move(area_ids)), _slots(std::move(cell_slots))
  {
  }

  const GridSpec& grid() const { return _grid; }

  /// Area ids in lexicographic order; slot numbers index into this list.
  const std::vector<std::string>& area_ids() const { return _area_ids; }

  /// Slot of the area owning `cell`, or `none`.
  std::int32_t slot(CellId cell) const
  {
    if (!_grid.contains(cell))
      return none;
    return _slots[_grid.flat_index(cell)];
  }

  std::optional<std::string_view> area_of(CellId cell) const
  {
    const auto s = slot(cell);
    if (s == none)
      return std::nullopt;
    return std::string_view{_area_ids[static_cast<std::size_t>(s)]};
  }

  friend bool operator==(const AreaIndex& a, const AreaIndex& b)
  {
    return a._area_ids == b._area_ids && a._slots == b._slots;
  }

private:
  GridSpec _grid;
  std::vector<std::string> _area_ids;
  std::vector<std::int32_t> _slots;
};

/// Assigns each cell centroid to the containing area. A centroid on a shared
/// boundary, or inside overlapping areas, goes to the lowest area_id.
inline AreaIndex build_area_index(const GridSpec& grid,
  const std::vector<PlanningArea>& areas)
{
  grid.validate();

  std::vector<const PlanningArea*> sorted;
  sorted.reserve(areas.size());
  for (const auto& a : areas)
  {
    for (const auto& ring : a.rings)
    {
      if (open_vertex_count(ring) < 3)
        throw InvalidGeometry("area '" + a.area_id + "' has a degenerate polygon");
    }
    if (a.rings.empty())
      throw InvalidGeometry("area '" + a.area_id + "' has no rings");
    sorted.push_back(&a);
  }
  std::sort(sorted.begin(), sorted.end(),
    [](const PlanningArea* x, const PlanningArea* y) { return x->area_id < y->area_id; });

  struct Box { double lat0, lat1, lon0, lon1; };
  std::vector<Box> boxes;
  std::vector<std::string> ids;
  for (const auto* a : sorted)
  {
    Box b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
      std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& ring : a->rings)
    {
      for (const auto& v : ring)
      {
        b.lat0 = std::min(b.lat0, v.lat);
        b.lat1 = std::max(b.lat1, v.lat);
        b.lon0 = std::min(b.lon0, v.lon);
        b.lon1 = std::max(b.lon1, v.lon);
      }
    }
    boxes.push_back(b);
    ids.push_back(a->area_id);
  }

  std::vector<std::int32_t> slots(grid.cell_count(), AreaIndex::none);
  for (std::int32_t r = 0; r < grid.n_rows; ++r)
  {
    for (std::int32_t c = 0; c < grid.n_cols; ++c)
    {
      const CellId cell{r, c};
      const LatLon p = grid.centroid(cell);
      for (std::size_t k = 0; k < sorted.size(); ++k)
      {
        const Box& b = boxes[k];
        if (p.lat < b.lat0 || p.lat > b.lat1 || p.lon < b.lon0 || p.lon > b.lon1)
          continue;
        if (contains(*sorted[k], p) != Containment::Outside)
        {
          slots[grid.flat_index(cell)] = static_cast<std::int32_t>(k);
          break;
        }
      }
    }
  }
  return AreaIndex(grid, std::move(ids), std::move(slots));
}

} // namespace v2gplan

#endif // V2GPLAN__GEO_HPP
