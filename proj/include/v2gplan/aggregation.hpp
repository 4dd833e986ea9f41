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

#ifndef V2GPLAN__AGGREGATION_HPP
#define V2GPLAN__AGGREGATION_HPP

#include <v2gplan/errors.hpp>
#include <v2gplan/geo.hpp>
#include <v2gplan/parallel.hpp>
#include <v2gplan/time.hpp>
#include <v2gplan/v2g.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace v2gplan {

/// Population scaling: a sample of n_usr observed users stands for n_pop
/// residents, of whom a fraction delta drive an EV.
struct ScalingConfig
{
  double delta = 0.03;
  double n_usr = 0.0;
  double n_pop = 5.5e6;
  Seconds time_step{15 * 60};

  double market_share() const { return n_usr / n_pop; }

  /// delta / s. Evaluated as (delta * n_pop) / n_usr so that scaling delta
  /// by a power of two scales the factor exactly.
  double factor() const { return delta * n_pop / n_usr; }

  std::size_t steps_per_day() const
  {
    return static_cast<std::size_t>(seconds_per_day / time_step.count());
  }

  void validate() const
  {
    if (!(delta > 0.0 && delta <= 1.0))
      throw InvalidConfig("EV penetration rate must lie in (0, 1]");
    if (!(n_pop > 0.0) || !std::isfinite(n_pop))
      throw InvalidConfig("population must be positive");
    const double s = market_share();
    if (!(s > 0.0))
      throw InvalidConfig("market share s = n_usr / n_pop must be positive");
    if (s > 1.0)
      throw InvalidConfig("market share s = n_usr / n_pop must not exceed 1");
    if (time_step.count() <= 0 || seconds_per_day % time_step.count() != 0)
      throw InvalidConfig("time step must divide 24 h");
  }
};

struct AreaAggregate
{
  std::string area_id;
  DayNumber day = 0;
  double e_ev_kwh = 0.0;
  double e_pv_charge_kwh = 0.0;
  double e_nonpv_charge_kwh = 0.0;
  /// Scaled charging power per time step, in kW.
  std::vector<double> demand_profile_kw;
  double p_ev_peak_kw = 0.0;
  std::size_t peak_step = 0;
  /// Unset for the `_unassigned` bucket, which has no footprint.
  std::optional<double> p_peak_density_w_m2;
  std::optional<double> charging_points_abs;
  std::optional<double> charging_points_per_km2;
};

/// Unscaled per-area, per-day sums.
struct AreaTotals
{
  double discharge_kwh = 0.0;
  double pv_charge_kwh = 0.0;
  double nonpv_charge_kwh = 0.0;
  std::vector<double> profile_kw;

  AreaTotals& operator+=(const AreaTotals& o)
  {
    discharge_kwh += o.discharge_kwh;
    pv_charge_kwh += o.pv_charge_kwh;
    nonpv_charge_kwh += o.nonpv_charge_kwh;
    if (profile_kw.size() < o.profile_kw.size())
      profile_kw.resize(o.profile_kw.size(), 0.0);
    for (std::size_t i = 0; i < o.profile_kw.size(); ++i)
      profile_kw[i] += o.profile_kw[i];
    return *this;
  }
};

/// Adds a charging event's time-averaged power to each step it overlaps.
inline void add_to_profile(std::vector<double>& profile, const ChargeEvent& e,
  Instant day_begin, Seconds step)
{
  const double d0 = to_fine(day_begin).time_since_epoch().count();
  const double len = static_cast<double>(step.count());
  const double s = e.start.time_since_epoch().count() - d0;
  const double t = e.end.time_since_epoch().count() - d0;
  if (!(t > s))
    return;
  const auto n = static_cast<std::ptrdiff_t>(profile.size());
  auto k0 = static_cast<std::ptrdiff_t>(std::floor(s / len));
  auto k1 = static_cast<std::ptrdiff_t>(std::ceil(t / len));
  k0 = std::clamp<std::ptrdiff_t>(k0, 0, n);
  k1 = std::clamp<std::ptrdiff_t>(k1, 0, n);
  for (auto k = k0; k < k1; ++k)
  {
    const double lo = std::max(s, static_cast<double>(k) * len);
    const double hi = std::min(t, static_cast<double>(k + 1) * len);
    if (hi > lo)
      profile[static_cast<std::size_t>(k)] += e.power_kw * (hi - lo) / len;
  }
}

/// Index of the first maximum.
inline std::size_t argmax_first(std::span<const double> v)
{
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
  {
    if (v[i] > v[best])
      best = i;
  }
  return best;
}

//==============================================================================
namespace detail {

/// Area slot for a cell; unmapped cells go to the trailing `_unassigned` slot.
inline std::size_t area_slot(const AreaIndex& index, CellId cell)
{
  const auto s = index.slot(cell);
  return s == AreaIndex::none ? index.area_ids().size() : static_cast<std::size_t>(s);
}

inline std::string slot_name(const AreaIndex& index, std::size_t slot)
{
  return slot < index.area_ids().size() ? index.area_ids()[slot]
                                        : std::string(unassigned_area_id);
}

} // namespace detail

/// Scaled discharge energy per area for one day's events: the sum of each
/// user's supplied energy times delta / s.
inline std::map<std::string, double> area_energy_supply(
  std::span<const ChargeEvent> events, const AreaIndex& index,
  const ScalingConfig& scaling)
{
  scaling.validate();
  std::vector<double> raw(index.area_ids().size() + 1, 0.0);
  for (const auto& e : events)
  {
    if (e.regime == Regime::Discharge)
      raw[detail::area_slot(index, e.cell)] += e.energy_kwh;
  }
  std::map<std::string, double> out;
  const double f = scaling.factor();
  for (std::size_t k = 0; k < raw.size(); ++k)
  {
    if (k < index.area_ids().size() || raw[k] != 0.0)
      out[detail::slot_name(index, k)] = raw[k] * f;
  }
  return out;
}

struct PeakDemand
{
  std::vector<double> profile_kw;
  double peak_kw = 0.0;
  std::size_t peak_step = 0;
};

/// Scaled charging-demand profile and its peak per area for the day that
/// starts at `day_begin`. Both PV and non-PV charging count as demand.
inline std::map<std::string, PeakDemand> area_peak_demand(
  std::span<const ChargeEvent> events, const AreaIndex& index,
  const ScalingConfig& scaling, Instant day_begin)
{
  scaling.validate();
  const std::size_t n_steps = scaling.steps_per_day();
  std::vector<std::vector<double>> raw(index.area_ids().size() + 1,
    std::vector<double>(n_steps, 0.0));
  std::vector<bool> touched(raw.size(), false);
  for (const auto& e : events)
  {
    if (!is_charging(e.regime))
      continue;
    const auto k = detail::area_slot(index, e.cell);
    add_to_profile(raw[k], e, day_begin, scaling.time_step);
    touched[k] = true;
  }

  std::map<std::string, PeakDemand> out;
  const double f = scaling.factor();
  for (std::size_t k = 0; k < raw.size(); ++k)
  {
    if (k == index.area_ids().size() && !touched[k])
      continue;
    PeakDemand pd;
    pd.profile_kw = raw[k];
    for (auto& v : pd.profile_kw)
      v *= f;
    pd.peak_step = argmax_first(pd.profile_kw);
    pd.peak_kw = pd.profile_kw.empty() ? 0.0 : pd.profile_kw[pd.peak_step];
    out[detail::slot_name(index, k)] = std::move(pd);
  }
  return out;
}

//==============================================================================
struct PeakSizing
{
  double density_w_m2 = 0.0;
  double points_abs = 0.0;
  double points_per_km2 = 0.0;
};

/// Peak density P/A and the number of chargers needed to serve the peak.
inline PeakSizing peak_density_and_sizing(double p_peak_kw, double area_m2,
  double p_charge_kw)
{
  if (!(area_m2 > 0.0))
    throw InvalidInput("area footprint must be positive");
  if (!(p_charge_kw > 0.0))
    throw InvalidInput("charging power must be positive");
  if (!(p_peak_kw >= 0.0))
    throw InvalidInput("peak demand must be non-negative");
  PeakSizing s;
  s.density_w_m2 = p_peak_kw * 1000.0 / area_m2;
  const double chargers = p_peak_kw / p_charge_kw;
  // Absorb round-off so that an exact multiple of P_charge is not rounded up.
  s.points_abs = std::ceil(chargers * (1.0 - 1e-12));
  s.points_per_km2 = chargers / area_m2 * 1e6;
  return s;
}

/// Photovoltaic power density eta * a_pv * I, in W/m^2.
inline double pv_sufficiency(double eta_pv, double a_pv, double irradiance_w_m2)
{
  if (!(eta_pv >= 0.0) || !(a_pv >= 0.0) || !(irradiance_w_m2 >= 0.0))
    throw InvalidInput("PV efficiency, coverage and irradiance must be non-negative");
  return eta_pv * a_pv * irradiance_w_m2;
}

inline bool pv_deficit(double peak_density_w_m2, double pv_w_m2)
{
  return peak_density_w_m2 > pv_w_m2;
}

//==============================================================================
struct AggregationResult
{
  /// Area ids followed by `_unassigned`, each for every day in order.
  std::vector<AreaAggregate> rows;
  /// Unscaled totals in the same order as `rows`.
  std::vector<AreaTotals> raw;
};

/// Reduces traces into per-area, per-day aggregates. Traces are put into
/// canonical (user, day) order and reduced in fixed-size chunks merged in
/// chunk order, so the result is bit-identical for any input order and any
/// number of jobs.
inline AggregationResult aggregate(std::span<const SocTrace> traces,
  const AreaIndex& index, const std::vector<PlanningArea>& areas,
  const ScalingConfig& scaling, const VehicleParams& params, DayRange days,
  UtcOffset tz, unsigned jobs = 1)
{
  scaling.validate();
  const std::size_t n_slots = index.area_ids().size() + 1;
  const std::size_t n_days = days.size();
  const std::size_t n_steps = scaling.steps_per_day();

  std::vector<const SocTrace*> order;
  order.reserve(traces.size());
  for (const auto& t : traces)
  {
    if (t.day >= days.first && t.day <= days.last)
      order.push_back(&t);
  }
  std::sort(order.begin(), order.end(), [](const SocTrace* a, const SocTrace* b)
    { return std::tie(a->user_id, a->day) < std::tie(b->user_id, b->day); });

  auto empty_totals = [&]()
    {
      std::vector<AreaTotals> v(n_slots * n_days);
      for (auto& t : v)
        t.profile_kw.assign(n_steps, 0.0);
      return v;
    };

  std::vector<AreaTotals> total = empty_totals();

  constexpr std::size_t chunk = 256;
  constexpr std::size_t wave = 16;
  const std::size_t n_chunks = (order.size() + chunk - 1) / chunk;
  for (std::size_t w0 = 0; w0 < n_chunks; w0 += wave)
  {
    const std::size_t w1 = std::min(n_chunks, w0 + wave);
    std::vector<std::vector<AreaTotals>> partial(w1 - w0);
    parallel_for(w1 - w0, jobs, [&](std::size_t c)
      {
        auto acc = empty_totals();
        const std::size_t b = (w0 + c) * chunk;
        const std::size_t e = std::min(order.size(), b + chunk);
        for (std::size_t i = b; i < e; ++i)
        {
          const SocTrace& tr = *order[i];
          const auto d = static_cast<std::size_t>(tr.day - days.first);
          const Instant begin = day_start(tr.day, tz);
          for (const auto& ev : tr.events)
          {
            AreaTotals& at = acc[detail::area_slot(index, ev.cell) * n_days + d];
            switch (ev.regime)
            {
              case Regime::Discharge: at.discharge_kwh += ev.energy_kwh; break;
              case Regime::PvCharge: at.pv_charge_kwh += ev.energy_kwh; break;
              case Regime::NonPvCharge: at.nonpv_charge_kwh += ev.energy_kwh; break;
            }
            if (is_charging(ev.regime))
              add_to_profile(at.profile_kw, ev, begin, scaling.time_step);
          }
        }
        partial[c] = std::move(acc);
      });
    for (const auto& p : partial)
    {
      for (std::size_t i = 0; i < total.size(); ++i)
        total[i] += p[i];
    }
  }

  std::map<std::string, const PlanningArea*> by_id;
  for (const auto& a : areas)
    by_id[a.area_id] = &a;

  AggregationResult result;
  const double f = scaling.factor();
  for (std::size_t k = 0; k < n_slots; ++k)
  {
    const std::string id = detail::slot_name(index, k);
    const auto area = by_id.find(id);
    for (std::size_t d = 0; d < n_days; ++d)
    {
      const AreaTotals& t = total[k * n_days + d];
      AreaAggregate a;
      a.area_id = id;
      a.day = days.first + static_cast<DayNumber>(d);
      a.e_ev_kwh = t.discharge_kwh * f;
      a.e_pv_charge_kwh = t.pv_charge_kwh * f;
      a.e_nonpv_charge_kwh = t.nonpv_charge_kwh * f;
      a.demand_profile_kw = t.profile_kw;
      for (auto& v : a.demand_profile_kw)
        v *= f;
      a.peak_step = argmax_first(a.demand_profile_kw);
      a.p_ev_peak_kw = a.demand_profile_kw.empty() ? 0.0 : a.demand_profile_kw[a.peak_step];
      if (area != by_id.end())
      {
        const auto s = peak_density_and_sizing(a.p_ev_peak_kw, area->second->area_m2,
          params.p_charge_kw);
        a.p_peak_density_w_m2 = s.density_w_m2;
        a.charging_points_abs = s.points_abs;
        a.charging_points_per_km2 = s.points_per_km2;
      }
      result.rows.push_back(std::move(a));
      result.raw.push_back(t);
    }
  }
  return result;
}

} // namespace v2gplan

#endif // V2GPLAN__AGGREGATION_HPP
