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

#ifndef V2GPLAN__MOBILITY_HPP
#define V2GPLAN__MOBILITY_HPP

#include <v2gplan/errors.hpp>
#include <v2gplan/geo.hpp>
#include <v2gplan/parallel.hpp>
#include <v2gplan/time.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace v2gplan {

struct LocationRecord
{
  std::string user_id;
  Instant timestamp;
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LocationRecord&, const LocationRecord&) = default;
};

inline bool is_valid(const LocationRecord& r)
{
  return std::isfinite(r.lat) && std::isfinite(r.lon)
    && r.lat >= -90.0 && r.lat <= 90.0 && r.lon >= -180.0 && r.lon <= 180.0;
}

/// Canonical record order: user, then time, then position.
inline bool record_less(const LocationRecord& a, const LocationRecord& b)
{
  return std::tie(a.user_id, a.timestamp, a.lat, a.lon)
    < std::tie(b.user_id, b.timestamp, b.lat, b.lon);
}

/// A user's presence in one cell for at least the minimum stay time. The
/// interval runs from the first to the last ping observed in the cell.
struct Stay
{
  std::string user_id;
  CellId cell;
  Instant arrival;
  Instant departure;

  Seconds duration() const { return departure - arrival; }

  friend bool operator==(const Stay&, const Stay&) = default;
};

struct Trajectory
{
  std::string user_id;
  std::vector<Stay> stays;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct IngestConfig
{
  Seconds tau{3600};
  int min_consecutive_days = 5;
  GridSpec grid;
  UtcOffset tz{Seconds{8 * 3600}};

  void validate() const
  {
    if (tau <= Seconds{0})
      throw InvalidConfig("minimum stay time must be positive");
    if (min_consecutive_days < 1)
      throw InvalidConfig("min_consecutive_days must be at least 1");
    grid.validate();
  }
};

struct IngestCounters
{
  std::size_t out_of_bounds = 0;
  std::size_t invalid = 0;
};

//==============================================================================
/// Turns one user's time-sorted pings into stays. Consecutive pings in the
/// same cell form a run; runs shorter than tau are dropped. Pings outside the
/// grid are skipped and counted.
inline std::vector<Stay> extract_stays(std::span<const LocationRecord> records,
  const IngestConfig& cfg, IngestCounters* counters = nullptr)
{
  std::vector<Stay> stays;
  if (records.empty())
    return stays;

  const std::string& user = records.front().user_id;
  for (std::size_t i = 0; i < records.size(); ++i)
  {
    if (records[i].user_id != user)
      throw InvalidInput("extract_stays: records from more than one user");
    if (i > 0 && records[i].timestamp < records[i - 1].timestamp)
      throw InvalidInput("extract_stays: records not sorted by timestamp");
    if (!is_valid(records[i]))
      throw InvalidInput("extract_stays: coordinate out of range");
  }

  bool open = false;
  Stay run;
  auto close_run = [&]()
    {
      if (open && run.duration() >= cfg.tau)
        stays.push_back(run);
      open = false;
    };

  for (const auto& r : records)
  {
    const auto cell = locate({r.lat, r.lon}, cfg.grid);
    if (!cell)
    {
      if (counters)
        ++counters->out_of_bounds;
      continue;
    }
    if (open && run.cell == *cell)
    {
      run.departure = r.timestamp;
      continue;
    }
    close_run();
    run = Stay{user, *cell, r.timestamp, r.timestamp};
    open = true;
  }
  close_run();
  return stays;
}

/// Orders one user's stays and merges same-cell neighbours separated by less
/// than `tau` (GPS jitter across a cell edge splits genuine visits).
inline Trajectory build_trajectory(std::vector<Stay> stays, Seconds tau)
{
  Trajectory t;
  if (stays.empty())
    return t;
  t.user_id = stays.front().user_id;
  for (const auto& s : stays)
  {
    if (s.user_id != t.user_id)
      throw InvalidInput("build_trajectory: stays from more than one user");
    if (s.departure < s.arrival)
      throw InvalidInput("build_trajectory: stay ends before it starts");
  }

  std::sort(stays.begin(), stays.end(), [](const Stay& a, const Stay& b)
    { return std::tie(a.arrival, a.departure, a.cell) < std::tie(b.arrival, b.departure, b.cell); });

  for (auto& s : stays)
  {
    if (!t.stays.empty())
    {
      Stay& prev = t.stays.back();
      if (s.arrival < prev.departure)
        throw InvalidInput("build_trajectory: overlapping stays");
      if (s.cell == prev.cell && s.arrival - prev.departure < tau)
      {
        prev.departure = s.departure;
        continue;
      }
    }
    t.stays.push_back(std::move(s));
  }
  return t;
}

/// Local calendar days touched by at least one stay.
inline std::set<DayNumber> active_days(const Trajectory& t, UtcOffset tz)
{
  std::set<DayNumber> days;
  for (const auto& s : t.stays)
  {
    for (auto d = local_day(s.arrival, tz); d <= local_day(s.departure, tz); ++d)
      days.insert(d);
  }
  return days;
}

inline bool has_consecutive_run(const std::set<DayNumber>& days, int min_run)
{
  int run = 0;
  DayNumber prev = 0;
  for (const auto d : days)
  {
    run = (run > 0 && d == prev + 1) ? run + 1 : 1;
    if (run >= min_run)
      return true;
    prev = d;
  }
  return false;
}

/// Users with stays on at least `min_consecutive_days` consecutive local days,
/// in lexicographic order.
inline std::vector<std::string> filter_active_users(
  std::span<const Trajectory> trajectories, const IngestConfig& cfg)
{
  std::vector<std::string> kept;
  for (const auto& t : trajectories)
  {
    if (has_consecutive_run(active_days(t, cfg.tz), cfg.min_consecutive_days))
      kept.push_back(t.user_id);
  }
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  return kept;
}

//==============================================================================
struct IngestResult
{
  /// One trajectory per user with at least one valid record, ordered by id.
  std::vector<Trajectory> trajectories;
  std::vector<std::string> retained_users;
  IngestCounters counters;
  std::size_t n_records = 0;
};

/// Full ingest: canonical sort, per-user stay extraction in parallel,
/// trajectory assembly and the active-user filter. Output does not depend on
/// input order or on `jobs`.
inline IngestResult ingest(std::vector<LocationRecord> records,
  const IngestConfig& cfg, unsigned jobs = 1)
{
  cfg.validate();
  IngestResult result;
  result.n_records = records.size();

  const auto bad = std::remove_if(records.begin(), records.end(),
    [](const LocationRecord& r) { return !is_valid(r); });
  result.counters.invalid = static_cast<std::size_t>(records.end() - bad);
  records.erase(bad, records.end());
  std::sort(records.begin(), records.end(), record_less);

  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t i = 0; i < records.size();)
  {
    std::size_t j = i + 1;
    while (j < records.size() && records[j].user_id == records[i].user_id)
      ++j;
    ranges.emplace_back(i, j);
    i = j;
  }

  result.trajectories.resize(ranges.size());
  std::vector<IngestCounters> counters(ranges.size());
  const std::span<const LocationRecord> all(records);
  parallel_for(ranges.size(), jobs, [&](std::size_t u)
    {
      const auto [b, e] = ranges[u];
      auto stays = extract_stays(all.subspan(b, e - b), cfg, &counters[u]);
      auto t = build_trajectory(std::move(stays), cfg.tau);
      t.user_id = records[b].user_id;
      result.trajectories[u] = std::move(t);
    });

  for (const auto& c : counters)
    result.counters.out_of_bounds += c.out_of_bounds;
  result.retained_users = filter_active_users(result.trajectories, cfg);
  return result;
}

} // namespace v2gplan

#endif // V2GPLAN__MOBILITY_HPP
