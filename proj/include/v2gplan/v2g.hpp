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

#ifndef V2GPLAN__V2G_HPP
#define V2GPLAN__V2G_HPP

#include <v2gplan/errors.hpp>
#include <v2gplan/geo.hpp>
#include <v2gplan/mobility.hpp>
#include <v2gplan/parallel.hpp>
#include <v2gplan/time.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace v2gplan {

enum class Regime
{
  PvCharge,
  NonPvCharge,
  Discharge,
};

inline std::string_view to_string(Regime r)
{
  switch (r)
  {
    case Regime::PvCharge: return "PV_CHARGE";
    case Regime::NonPvCharge: return "NONPV_CHARGE";
    case Regime::Discharge: return "DISCHARGE";
  }
  return "UNKNOWN";
}

inline bool is_charging(Regime r)
{
  return r != Regime::Discharge;
}

/// Battery and (dis)charging parameters. Defaults are a 25 kWh / 135 km
/// vehicle on 6.6 kW chargers with a 0.5 SOC threshold.
struct VehicleParams
{
  double c_max_kwh = 25.0;
  double l_max_km = 135.0;
  double p_charge_kw = 6.6;
  double p_discharge_kw = 6.6;
  double c_thr = 0.5;
  double c_init = 0.5;
  /// SOC at which charging inside the PV window stops.
  double pv_charge_target = 1.0;

  void validate() const
  {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    auto fraction = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!positive(c_max_kwh) || !positive(l_max_km) || !positive(p_charge_kw)
      || !positive(p_discharge_kw))
      throw InvalidConfig("vehicle capacity, range and powers must be positive");
    if (!fraction(c_thr) || !fraction(c_init) || !fraction(pv_charge_target))
      throw InvalidConfig("SOC threshold, initial SOC and PV target must lie in [0, 1]");
  }
};

/// Daily interval [start, end) of PV-backed charging, as local time of day.
struct PvWindow
{
  Seconds start{9 * 3600};
  Seconds end{17 * 3600};

  void validate() const
  {
    if (start < Seconds{0} || end > Seconds{seconds_per_day} || !(start < end))
      throw InvalidConfig("PV window must satisfy 00:00 <= start < end <= 24:00");
  }
};

struct ChargeEvent
{
  std::string user_id;
  CellId cell;
  FineInstant start;
  FineInstant end;
  Regime regime = Regime::PvCharge;
  /// Always non-negative; the regime gives the direction of the flow.
  double power_kw = 0.0;
  double energy_kwh = 0.0;

  friend bool operator==(const ChargeEvent&, const ChargeEvent&) = default;
};

struct SocPoint
{
  FineInstant time;
  double soc = 0.0;

  friend bool operator==(const SocPoint&, const SocPoint&) = default;
};

struct DepletionJump
{
  FineInstant time;
  /// SOC actually removed, after clamping at zero.
  double delta_soc = 0.0;
  CellId from;
  CellId to;
  double distance_km = 0.0;
  bool range_exceeded = false;

  friend bool operator==(const DepletionJump&, const DepletionJump&) = default;
};

struct SocTrace
{
  std::string user_id;
  DayNumber day = 0;
  std::vector<SocPoint> breakpoints;
  std::vector<ChargeEvent> events;
  std::vector<DepletionJump> jumps;
  int range_exceeded = 0;

  double energy_kwh(Regime r) const
  {
    double sum = 0.0;
    for (const auto& e : events)
    {
      if (e.regime == r)
        sum += e.energy_kwh;
    }
    return sum;
  }

  friend bool operator==(const SocTrace&, const SocTrace&) = default;
};

/// Battery energy used to drive `distance_km`, linear in distance.
inline double depletion(double distance_km, const VehicleParams& p)
{
  if (!(distance_km >= 0.0))
    throw InvalidInput("depletion: distance must be non-negative");
  return p.c_max_kwh / p.l_max_km * distance_km;
}

//==============================================================================
namespace detail {

class DaySimulator
{
public:
  DaySimulator(SocTrace& trace, const VehicleParams& params, FineInstant pv_start,
    FineInstant pv_end)
  : _trace(trace), _p(params), _pv_start(pv_start), _pv_end(pv_end),
    _soc(params.c_init)
  {
  }

  double soc() const { return _soc; }

  void point(FineInstant t)
  {
    _trace.breakpoints.push_back({t, _soc});
  }

  void jump(FineInstant t, const Stay& from, const Stay& to, const GridSpec& grid)
  {
    const double km = cell_distance_m(from.cell, to.cell, grid) / 1000.0;
    double dsoc = depletion(km, _p) / _p.c_max_kwh;
    bool exceeded = false;
    if (dsoc > _soc)
    {
      dsoc = _soc;
      exceeded = true;
      ++_trace.range_exceeded;
    }
    point(t);
    _soc -= dsoc;
    if (exceeded)
      _soc = 0.0;
    point(t);
    _trace.jumps.push_back({t, dsoc, from.cell, to.cell, km, exceeded});
  }

  /// Governs one stay, cut at the PV-window edges.
  void stay(const Stay& s)
  {
    const FineInstant a = to_fine(s.arrival);
    const FineInstant d = to_fine(s.departure);
    std::vector<FineInstant> cuts{a};
    for (const auto edge : {_pv_start, _pv_end})
    {
      if (edge > a && edge < d)
        cuts.push_back(edge);
    }
    cuts.push_back(d);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      segment(s, cuts[i], cuts[i + 1]);
  }

private:
  void segment(const Stay& s, FineInstant from, FineInstant to)
  {
    const bool in_pv = from >= _pv_start && to <= _pv_end;

    Regime regime;
    double target;
    double power;
    if (in_pv)
    {
      if (!(_soc < _p.pv_charge_target))
        return;
      regime = Regime::PvCharge;
      target = _p.pv_charge_target;
      power = _p.p_charge_kw;
    }
    else if (_soc > _p.c_thr)
    {
      regime = Regime::Discharge;
      target = _p.c_thr;
      power = _p.p_discharge_kw;
    }
    else if (_soc < _p.c_thr)
    {
      regime = Regime::NonPvCharge;
      target = _p.c_thr;
      power = _p.p_charge_kw;
    }
    else
    {
      return;
    }

    const double available_h = hours(to - from);
    const double needed_kwh = std::abs(target - _soc) * _p.c_max_kwh;
    const double needed_h = needed_kwh / power;

    double energy;
    FineInstant end;
    double next_soc;
    if (needed_h <= available_h)
    {
      energy = needed_kwh;
      end = from + FineSeconds{needed_h * 3600.0};
      if (end > to)
        end = to;
      next_soc = target;
    }
    else
    {
      energy = power * available_h;
      end = to;
      const double step = energy / _p.c_max_kwh;
      next_soc = regime == Regime::Discharge
        ? std::max(target, _soc - step)
        : std::min(target, _soc + step);
    }
    if (!(energy > 0.0) || !(end > from))
      return;

    point(from);
    _soc = next_soc;
    point(end);
    _trace.events.push_back(
      {s.user_id, s.cell, from, end, regime, power, energy});
  }

  SocTrace& _trace;
  const VehicleParams& _p;
  FineInstant _pv_start;
  FineInstant _pv_end;
  double _soc;
};

} // namespace detail

/// Simulates one vehicle over one local day. `stays` must be time-ordered,
/// non-overlapping and lie within [00:00, 24:00] of `day`. SOC starts at
/// c_init; (dis)charging begins on arrival and driving between consecutive
/// stays removes SOC in proportion to the centroid distance.
inline SocTrace simulate_day(std::string user_id, DayNumber day,
  std::span<const Stay> stays, const GridSpec& grid, const VehicleParams& params,
  const PvWindow& window, UtcOffset tz)
{
  params.validate();
  window.validate();

  const Instant begin = day_start(day, tz);
  const Instant finish = begin + Seconds{seconds_per_day};
  for (std::size_t i = 0; i < stays.size(); ++i)
  {
    const Stay& s = stays[i];
    if (s.arrival < begin || s.departure > finish || s.departure < s.arrival)
      throw InvalidInput("simulate_day: stay outside the simulated day");
    if (i > 0 && s.arrival < stays[i - 1].departure)
      throw InvalidInput("simulate_day: stays overlap or are out of order");
  }

  SocTrace trace;
  trace.user_id = std::move(user_id);
  trace.day = day;

  detail::DaySimulator sim(trace, params, to_fine(begin + window.start),
    to_fine(begin + window.end));
  sim.point(to_fine(begin));
  for (std::size_t i = 0; i < stays.size(); ++i)
  {
    if (i > 0)
      sim.jump(to_fine(stays[i].arrival), stays[i - 1], stays[i], grid);
    sim.stay(stays[i]);
  }
  sim.point(to_fine(finish));
  return trace;
}

//==============================================================================
/// Inclusive range of local days.
struct DayRange
{
  DayNumber first = 0;
  DayNumber last = -1;

  bool empty() const { return last < first; }
  std::size_t size() const
  {
    return empty() ? 0 : static_cast<std::size_t>(last - first + 1);
  }
};

/// Days spanned by the stays of the given users.
inline DayRange observed_days(std::span<const Trajectory> trajectories,
  std::span<const std::string> users, UtcOffset tz)
{
  const std::unordered_set<std::string> keep(users.begin(), users.end());
  DayRange r{0, -1};
  bool any = false;
  for (const auto& t : trajectories)
  {
    if (!keep.contains(t.user_id))
      continue;
    for (const auto& s : t.stays)
    {
      const auto a = local_day(s.arrival, tz);
      const auto b = local_day(s.departure, tz);
      r.first = any ? std::min(r.first, a) : a;
      r.last = any ? std::max(r.last, b) : b;
      any = true;
    }
  }
  return r;
}

/// Splits stays at local midnight and buckets the pieces by day. Pieces of
/// zero length are dropped.
inline std::vector<std::vector<Stay>> split_by_day(const Trajectory& t,
  DayRange days, UtcOffset tz)
{
  std::vector<std::vector<Stay>> out(days.size());
  for (const auto& s : t.stays)
  {
    const auto a = std::max(local_day(s.arrival, tz), days.first);
    const auto b = std::min(local_day(s.departure, tz), days.last);
    for (auto d = a; d <= b; ++d)
    {
      const Instant lo = day_start(d, tz);
      const Instant hi = lo + Seconds{seconds_per_day};
      Stay piece = s;
      piece.arrival = std::max(s.arrival, lo);
      piece.departure = std::min(s.departure, hi);
      if (piece.arrival < piece.departure)
        out[static_cast<std::size_t>(d - days.first)].push_back(std::move(piece));
    }
  }
  return out;
}

/// One trace per retained user per day in `days`, ordered by user then day.
/// SOC resets to c_init at every local midnight.
inline std::vector<SocTrace> run_scenario(std::span<const Trajectory> trajectories,
  std::span<const std::string> retained, const GridSpec& grid,
  const VehicleParams& params, const PvWindow& window, UtcOffset tz,
  DayRange days, unsigned jobs = 1)
{
  params.validate();
  window.validate();

  std::vector<std::string> users(retained.begin(), retained.end());
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());

  std::vector<const Trajectory*> selected;
  for (const auto& id : users)
  {
    const auto it = std::find_if(trajectories.begin(), trajectories.end(),
      [&](const Trajectory& t) { return t.user_id == id; });
    selected.push_back(it == trajectories.end() ? nullptr : &*it);
  }

  const std::size_t n_days = days.size();
  std::vector<SocTrace> traces(users.size() * n_days);
  parallel_for(users.size(), jobs, [&](std::size_t u)
    {
      const Trajectory empty{users[u], {}};
      const Trajectory& t = selected[u] ? *selected[u] : empty;
      const auto by_day = split_by_day(t, days, tz);
      for (std::size_t k = 0; k < n_days; ++k)
      {
        traces[u * n_days + k] = simulate_day(users[u],
          days.first + static_cast<DayNumber>(k), by_day[k], grid, params, window, tz);
      }
    });
  return traces;
}

//==============================================================================
/// Checks a trace against the engine invariants and throws
/// InvariantViolation on the first breach.
inline void verify_trace(const SocTrace& trace, const VehicleParams& p,
  const PvWindow& window, UtcOffset tz)
{
  constexpr double soc_eps = 1e-12;
  constexpr double time_eps = 1e-6;
  auto fail = [&](const std::string& what)
    {
      throw InvariantViolation("user " + trace.user_id + " day "
        + format_date(trace.day) + ": " + what);
    };

  for (const auto& bp : trace.breakpoints)
  {
    if (!(bp.soc >= -soc_eps && bp.soc <= 1.0 + soc_eps))
      fail("SOC outside [0, 1]");
  }
  for (std::size_t i = 1; i < trace.breakpoints.size(); ++i)
  {
    if (trace.breakpoints[i].time < trace.breakpoints[i - 1].time)
      fail("breakpoints out of order");
  }

  const double ws = to_fine(day_start(trace.day, tz) + window.start).time_since_epoch().count();
  const double we = to_fine(day_start(trace.day, tz) + window.end).time_since_epoch().count();

  double charged = 0.0;
  double discharged = 0.0;
  for (const auto& e : trace.events)
  {
    const double s = e.start.time_since_epoch().count();
    const double t = e.end.time_since_epoch().count();
    if (!(s < t))
      fail("event with non-positive duration");
    const double expected = e.power_kw * (t - s) / 3600.0;
    if (std::abs(expected - e.energy_kwh) > 1e-9 * std::max(1.0, e.energy_kwh))
      fail("event energy differs from power x duration");
    if (e.regime == Regime::PvCharge)
    {
      if (s < ws - time_eps || t > we + time_eps)
        fail("PV charging outside the PV window");
      charged += e.energy_kwh;
    }
    else
    {
      if (!(t <= ws + time_eps || s >= we - time_eps))
        fail(std::string(to_string(e.regime)) + " inside the PV window");
      if (e.regime == Regime::Discharge)
        discharged += e.energy_kwh;
      else
        charged += e.energy_kwh;
    }
  }

  for (const auto& e : trace.events)
  {
    const auto it = std::find_if(trace.breakpoints.begin(), trace.breakpoints.end(),
      [&](const SocPoint& bp) { return bp.time == e.end; });
    if (it == trace.breakpoints.end())
      fail("event end has no breakpoint");
    const double soc = it->soc;
    switch (e.regime)
    {
      case Regime::Discharge:
        if (soc < p.c_thr - soc_eps)
          fail("discharge below threshold");
        break;
      case Regime::NonPvCharge:
        if (soc > p.c_thr + soc_eps)
          fail("non-PV charge above threshold");
        break;
      case Regime::PvCharge:
        if (soc > std::min(1.0, p.pv_charge_target) + soc_eps)
          fail("PV charge above target");
        break;
    }
  }

  if (!trace.breakpoints.empty())
  {
    double depleted = 0.0;
    for (const auto& j : trace.jumps)
      depleted += j.delta_soc;
    const double lhs = trace.breakpoints.back().soc - trace.breakpoints.front().soc;
    const double rhs = (charged - discharged) / p.c_max_kwh - depleted;
    const double scale = std::max(1.0,
      (charged + discharged) / p.c_max_kwh + depleted);
    if (std::abs(lhs - rhs) > 1e-9 * scale)
      fail("energy balance does not close");
  }
}

} // namespace v2gplan

#endif // V2GPLAN__V2G_HPP
