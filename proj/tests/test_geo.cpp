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

#include "test_util.hpp"

#include <v2gplan/geo.hpp>
#include <v2gplan/io.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace v2gplan;
using v2gplan::test::equator_grid;
using v2gplan::test::sg_grid;

namespace {

/// Spherical law of cosines; an independent route to great-circle distance.
double law_of_cosines_m(LatLon a, LatLon b)
{
  const double c = std::sin(deg2rad(a.lat)) * std::sin(deg2rad(b.lat))
    + std::cos(deg2rad(a.lat)) * std::cos(deg2rad(b.lat)) * std::cos(deg2rad(b.lon - a.lon));
  return earth_radius_m * std::acos(std::clamp(c, -1.0, 1.0));
}

PlanningArea rect(const std::string& id, double lat0, double lon0, double lat1, double lon1)
{
  PlanningArea a;
  a.area_id = id;
  a.area_m2 = 1.0;
  a.rings.push_back({{lat0, lon0}, {lat0, lon1}, {lat1, lon1}, {lat1, lon0}, {lat0, lon0}});
  return a;
}

} // namespace

//==============================================================================
TEST(Locate, OriginIsFirstCell)
{
  const auto g = equator_grid();
  const auto c = locate({g.origin_lat, g.origin_lon}, g);
  ASSERT_TRUE(c);
  EXPECT_EQ(*c, (CellId{0, 0}));
}

TEST(Locate, HalfOpenBoundaryArithmetic)
{
  const auto g = equator_grid();
  const auto c = locate(g.unproject({260.0, 10.0}), g);
  ASSERT_TRUE(c);
  EXPECT_EQ(*c, (CellId{0, 1}));
}

TEST(Locate, WestOfOriginIsOutOfBounds)
{
  const auto g = equator_grid();
  EXPECT_FALSE(locate(g.unproject({-1.0, 0.0}), g));
  EXPECT_FALSE(locate(g.unproject({10.0, 40 * 250.0 + 1.0}), g));
}

TEST(Locate, NonFiniteIsInvalidInput)
{
  const auto g = equator_grid();
  EXPECT_THROW(locate({std::numeric_limits<double>::quiet_NaN(), 103.0}, g), InvalidInput);
  EXPECT_THROW(locate({0.0, std::numeric_limits<double>::infinity()}, g), InvalidInput);
}

TEST(Locate, CentroidWithinHalfDiagonal)
{
  const auto g = sg_grid();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0.0, g.n_cols * g.cell_size_m);
  std::uniform_real_distribution<double> uy(0.0, g.n_rows * g.cell_size_m);
  for (int i = 0; i < 2000; ++i)
  {
    const LocalXY xy{ux(rng), uy(rng)};
    const auto c = locate(g.unproject(xy), g);
    ASSERT_TRUE(c);
    const LocalXY cen = g.project(g.centroid(*c));
    EXPECT_LE(std::hypot(cen.x - xy.x, cen.y - xy.y), g.cell_size_m * std::sqrt(2.0) / 2.0 + 1e-6);
  }
}

TEST(GridSpec, RejectsInvalid)
{
  auto g = equator_grid();
  g.cell_size_m = 0.0;
  EXPECT_THROW(g.validate(), InvalidConfig);
  g = equator_grid();
  g.n_rows = 0;
  EXPECT_THROW(g.validate(), InvalidConfig);
}

TEST(GridCovering, ExactMultipleGainsNoExtraCell)
{
  const auto g = sg_grid(80, 120);
  const auto c = grid_covering({g.origin_lat, g.origin_lon}, g.far_corner(), 250.0);
  EXPECT_EQ(c.n_rows, 80);
  EXPECT_EQ(c.n_cols, 120);
}

//==============================================================================
TEST(CellDistance, IdentityIsZero)
{
  const auto g = equator_grid();
  EXPECT_EQ(cell_distance_m({3, 4}, {3, 4}, g), 0.0);
}

TEST(CellDistance, AdjacentNearEquator)
{
  const auto g = equator_grid();
  const CellId a{0, 0}, b{0, 1};
  const double oracle = law_of_cosines_m(g.centroid(a), g.centroid(b));
  EXPECT_NEAR(oracle, 250.0, 1.0);
  EXPECT_NEAR(cell_distance_m(a, b, g), 250.0, 1.0);
  EXPECT_NEAR(cell_distance_m(a, b, g), oracle, 1e-3);
}

TEST(CellDistance, DiagonalNearEquator)
{
  const auto g = equator_grid();
  const CellId a{0, 0}, b{1, 1};
  EXPECT_NEAR(cell_distance_m(a, b, g), 353.6, 1.0);
  EXPECT_NEAR(cell_distance_m(a, b, g), law_of_cosines_m(g.centroid(a), g.centroid(b)), 1e-3);
}

TEST(CellDistance, OutOfGridThrows)
{
  const auto g = equator_grid();
  EXPECT_THROW(cell_distance_m({0, 0}, {100, 0}, g), InvalidInput);
}

TEST(CellDistance, MetricProperties)
{
  const auto g = sg_grid();
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> ur(0, g.n_rows - 1), uc(0, g.n_cols - 1);
  for (int i = 0; i < 3000; ++i)
  {
    const CellId a{ur(rng), uc(rng)}, b{ur(rng), uc(rng)}, c{ur(rng), uc(rng)};
    const double ab = cell_distance_m(a, b, g);
    EXPECT_EQ(ab, cell_distance_m(b, a, g));
    EXPECT_EQ(ab == 0.0, a == b);
    EXPECT_LE(cell_distance_m(a, c, g), ab + cell_distance_m(b, c, g) + 1e-6);
  }
}

//==============================================================================
TEST(AreaIndex, SingleAreaCoversGrid)
{
  const auto g = equator_grid(10, 10);
  const auto far = g.far_corner();
  const auto idx = build_area_index(g, {rect("Z", -0.01, 102.99, far.lat + 0.01, far.lon + 0.01)});
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c)
      EXPECT_EQ(idx.area_of({r, c}), std::optional<std::string_view>("Z"));
}

TEST(AreaIndex, OutsideEveryAreaIsNone)
{
  const auto g = equator_grid(10, 10);
  const auto p = g.centroid({0, 0});
  const auto idx = build_area_index(g, {rect("A", p.lat + 0.001, p.lon + 0.001, p.lat + 0.002, p.lon + 0.002)});
  EXPECT_FALSE(idx.area_of({0, 0}));
  EXPECT_EQ(idx.slot({0, 0}), AreaIndex::none);
}

TEST(AreaIndex, SharedEdgeGoesToLowestId)
{
  const auto g = equator_grid(4, 4);
  const LatLon p = g.centroid({1, 1});
  // Areas meet on the meridian through the centroid of cell (1,1).
  const auto west = rect("A02", p.lat - 0.01, p.lon - 0.01, p.lat + 0.01, p.lon);
  const auto east = rect("A01", p.lat - 0.01, p.lon, p.lat + 0.01, p.lon + 0.01);
  EXPECT_EQ(contains(west, p), Containment::Boundary);
  EXPECT_EQ(contains(east, p), Containment::Boundary);
  const auto idx = build_area_index(g, {west, east});
  EXPECT_EQ(idx.area_of({1, 1}), std::optional<std::string_view>("A01"));
  const auto idx2 = build_area_index(g, {east, west});
  EXPECT_EQ(idx, idx2);
}

TEST(AreaIndex, DegeneratePolygonRejected)
{
  const auto g = equator_grid(4, 4);
  PlanningArea bad;
  bad.area_id = "X";
  bad.area_m2 = 1.0;
  bad.rings.push_back({{0.0, 103.0}, {0.001, 103.0}, {0.0, 103.0}});
  EXPECT_THROW(build_area_index(g, {bad}), InvalidGeometry);
  EXPECT_THROW(normalize(bad), InvalidGeometry);
}

TEST(AreaIndex, HoleIsExcluded)
{
  const auto g = equator_grid(9, 9);
  const auto far = g.far_corner();
  auto a = rect("A", 0.0, 103.0, far.lat, far.lon);
  const LatLon c = g.centroid({4, 4});
  const double d = 0.0005;
  a.rings.push_back({{c.lat - d, c.lon - d}, {c.lat - d, c.lon + d}, {c.lat + d, c.lon + d},
    {c.lat + d, c.lon - d}, {c.lat - d, c.lon - d}});
  const auto idx = build_area_index(g, {a});
  EXPECT_FALSE(idx.area_of({4, 4}));
  EXPECT_TRUE(idx.area_of({0, 0}));
}

TEST(AreaIndex, Deterministic)
{
  const auto g = sg_grid(40, 60);
  const auto areas = [&]
    {
      std::vector<PlanningArea> v;
      const auto far = g.far_corner();
      const double mlat = (g.origin_lat + far.lat) / 2, mlon = (g.origin_lon + far.lon) / 2;
      v.push_back(rect("B", g.origin_lat, g.origin_lon, mlat, mlon));
      v.push_back(rect("A", mlat, g.origin_lon, far.lat, far.lon));
      v.push_back(rect("C", g.origin_lat, mlon, mlat, far.lon));
      return v;
    }();
  EXPECT_EQ(build_area_index(g, areas), build_area_index(g, areas));
}

//==============================================================================
TEST(GeoJson, ParsesPolygonAndMultiPolygon)
{
  const auto doc = nlohmann::json::parse(R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature",
       "properties": {"area_id": "A01", "area_m2": 1e6, "name": "One", "households": 1000,
                      "monthly_kwh_per_household": 400},
       "geometry": {"type": "Polygon", "coordinates": [[[103.0,1.0],[103.01,1.0],[103.01,1.01],[103.0,1.01]]]}},
      {"type": "Feature",
       "properties": {"area_id": "A02", "area_m2": 2e6},
       "geometry": {"type": "MultiPolygon", "coordinates": [
         [[[103.1,1.0],[103.11,1.0],[103.11,1.01],[103.1,1.0]]],
         [[[103.2,1.0],[103.21,1.0],[103.21,1.01],[103.2,1.0]]]]}}
    ]})");
  const auto areas = parse_areas_geojson(doc);
  ASSERT_EQ(areas.size(), 2u);
  EXPECT_EQ(areas[0].name, "One");
  EXPECT_EQ(areas[0].rings.front().front(), areas[0].rings.front().back());
  EXPECT_DOUBLE_EQ(*areas[0].households, 1000.0);
  EXPECT_EQ(areas[1].rings.size(), 2u);
  EXPECT_FALSE(areas[1].households);
}

TEST(GeoJson, MissingAreaM2Rejected)
{
  const auto doc = nlohmann::json::parse(R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"area_id":"A"},
     "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}}]})");
  EXPECT_THROW(parse_areas_geojson(doc), InvalidInput);
}
