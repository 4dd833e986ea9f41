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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include "oracle.hpp"

#include <v2gplan/pipeline.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace v2gplan;
using namespace v2gplan::test;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double pv_tol = 1e-12;
constexpr double pv_budget_ms = 1.0;
constexpr double sizing_rel_tol = 0.10;
constexpr double depletion_tol = 1e-9;
constexpr double depletion_rounding = 5e-6;
constexpr double oracle_event_tol_kwh = 6.6 / 60.0;
constexpr double oracle_daily_rel = 0.002;
constexpr double oracle_budget_s = 30.0;
constexpr int oracle_trials = 200;
constexpr double conservation_rel = 1e-9;
constexpr double soc_eps = 1e-12;
constexpr double time_eps_s = 1e-6;
constexpr double invariant_budget_s = 60.0;
constexpr int invariant_users = 10000;
constexpr int invariant_days = 7;
constexpr double refinement_rel = 1e-12;
constexpr int attendance_patterns = 1000;
constexpr double stats_tol = 1e-9;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Collects failure reasons for one criterion.
struct Check
{
  std::vector<std::string> failures;
  std::string detail;

  void expect(bool ok, const std::string& what)
  {
    if (!ok && failures.size() < 5)
      failures.push_back(what);
    else if (!ok)
      failures.back() = "(more failures) " + what;
  }
};

std::string num(double v, int precision = 6)
{
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

//==============================================================================
void pv_closed_form(Check& c)
{
  const auto t0 = Clock::now();
  const double p = pv_sufficiency(0.2, 0.25, 400.0);
  const double ms = seconds_since(t0) * 1e3;
  c.expect(std::abs(p - 20.0) <= pv_tol, "p_pv = " + num(p, 17));
  c.expect(ms < pv_budget_ms, "took " + num(ms) + " ms");
  c.detail = "p_pv=" + num(p) + " W/m^2";
}

void charging_points(Check& c)
{
  // 24 W/m^2 over one square kilometre.
  const double area_m2 = 1e6;
  const double peak_kw = 24.0 * area_m2 / 1000.0;
  const auto s = peak_density_and_sizing(peak_kw, area_m2, 6.6);
  const double exact = 24.0 / 6.6 * 1000.0;
  c.expect(std::abs(s.density_w_m2 - 24.0) <= 1e-12, "density " + num(s.density_w_m2, 17));
  c.expect(std::abs(s.points_per_km2 - exact) <= 1e-9 * exact, "points " + num(s.points_per_km2, 17));
  c.expect(std::floor(s.points_per_km2) == 3636.0, "floor is not 3636");
  // The published figure is a rounded approximation of the same ratio.
  c.expect(std::abs(s.points_per_km2 - 3800.0) <= sizing_rel_tol * 3800.0,
    "not within 10% of 3800");
  c.detail = num(s.points_per_km2) + " points/km^2 vs ~3800 ("
    + num(100.0 * std::abs(s.points_per_km2 - 3800.0) / 3800.0, 3) + "% off)";
}

void depletion_formula(Check& c)
{
  const VehicleParams p;
  const double full = depletion(135.0, p);
  const double ten = depletion(10.0, p);
  c.expect(std::abs(full - 25.0) <= depletion_tol, "135 km -> " + num(full, 17));
  c.expect(std::abs(ten - 250.0 / 135.0) <= depletion_tol, "10 km -> " + num(ten, 17));
  // 1.85185 is 250/135 rounded to five decimals.
  c.expect(std::abs(ten - 1.85185) <= depletion_rounding, "10 km not ~1.85185");
  c.detail = "135 km -> " + num(full, 10) + " kWh, 10 km -> " + num(ten, 10) + " kWh";
}

//==============================================================================
void oracle_equivalence(Check& c)
{
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20260901);
  std::size_t n_events = 0;
  double worst_event = 0.0;
  for (int trial = 0; trial < oracle_trials; ++trial)
  {
    const auto sc = random_scenario(rng, 5);
    const auto engine = engine_day(sc);
    const auto oracle = brute_force_day(sc);
    const std::string tag = "trial " + std::to_string(trial) + ": ";
    if (engine.events.size() != oracle.events.size())
    {
      c.expect(false, tag + "event count " + std::to_string(engine.events.size())
        + " vs " + std::to_string(oracle.events.size()));
      continue;
    }
    double discharge = 0.0, charge = 0.0;
    for (std::size_t i = 0; i < engine.events.size(); ++i)
    {
      const auto& e = engine.events[i];
      const auto& o = oracle.events[i];
      c.expect(e.regime == o.regime && e.cell == sc.stays[o.stay].cell, tag + "event mismatch");
      const double diff = std::abs(e.energy_kwh - o.energy_kwh);
      worst_event = std::max(worst_event, diff);
      c.expect(diff <= oracle_event_tol_kwh, tag + "event energy off by " + num(diff));
      (e.regime == Regime::Discharge ? discharge : charge) += e.energy_kwh;
    }
    n_events += engine.events.size();
    const auto close = [](double a, double b)
      { return std::abs(a - b) <= oracle_daily_rel * std::max(std::abs(a), std::abs(b)) + 1e-12; };
    c.expect(close(discharge, oracle.discharge_kwh), tag + "daily discharge");
    c.expect(close(charge, oracle.charge_kwh), tag + "daily charge");
  }
  const double s = seconds_since(t0);
  c.expect(s < oracle_budget_s, "took " + num(s) + " s");
  c.detail = std::to_string(oracle_trials) + " scenarios, " + std::to_string(n_events)
    + " events, worst event diff " + num(worst_event, 3) + " kWh, " + num(s, 3) + " s";
}

//==============================================================================
/// Independent invariant checks on one trace, without verify_trace.
void check_trace(Check& c, const SocTrace& t, const VehicleParams& p, const PvWindow& w)
{
  const std::string tag = t.user_id + "/" + format_date(t.day) + ": ";
  for (const auto& bp : t.breakpoints)
    c.expect(bp.soc >= -soc_eps && bp.soc <= 1.0 + soc_eps, tag + "SOC out of range");

  const double day0 = to_fine(day_start(t.day, sgt)).time_since_epoch().count();
  const double ws = day0 + static_cast<double>(w.start.count());
  const double we = day0 + static_cast<double>(w.end.count());
  double in = 0.0, out = 0.0;
  for (const auto& e : t.events)
  {
    const double s = e.start.time_since_epoch().count();
    const double f = e.end.time_since_epoch().count();
    const bool inside = s >= ws - time_eps_s && f <= we + time_eps_s;
    const bool outside = f <= ws + time_eps_s || s >= we - time_eps_s;
    c.expect(e.regime == Regime::PvCharge ? inside : outside, tag + "regime/window separation");
    (e.regime == Regime::Discharge ? out : in) += e.energy_kwh;

    // SOC at the end of the event respects the regime's floor or ceiling.
    for (const auto& bp : t.breakpoints)
    {
      if (bp.time != e.end)
        continue;
      if (e.regime == Regime::Discharge)
        c.expect(bp.soc >= p.c_thr - soc_eps, tag + "discharge floor");
      else if (e.regime == Regime::NonPvCharge)
        c.expect(bp.soc <= p.c_thr + soc_eps, tag + "non-PV ceiling");
      else
        c.expect(bp.soc <= p.pv_charge_target + soc_eps, tag + "PV ceiling");
    }
  }
  if (t.breakpoints.empty())
    return;
  double depleted_kwh = 0.0;
  for (const auto& j : t.jumps)
    depleted_kwh += j.delta_soc * p.c_max_kwh;
  const double stored = (t.breakpoints.back().soc - t.breakpoints.front().soc) * p.c_max_kwh;
  const double residual = stored - (in - out - depleted_kwh);
  const double scale = std::max({p.c_max_kwh, in + out + depleted_kwh});
  c.expect(std::abs(residual) <= conservation_rel * scale, tag + "energy balance residual "
    + num(residual));
}

void invariant_suite(Check& c)
{
  const auto t0 = Clock::now();
  const GridSpec grid = default_synthetic_grid();
  SynthConfig cfg = default_synth_config(grid, 7);
  cfg.n_users = invariant_users;
  cfg.n_days = invariant_days;
  cfg.validate();
  const VehicleParams p;
  const PvWindow w;
  IngestConfig icfg;
  icfg.grid = grid;
  icfg.tz = sgt;
  const DayRange days{cfg.first_day, cfg.first_day + invariant_days - 1};

  // Users are streamed in batches to bound memory.
  constexpr int batch = 1000;
  std::size_t n_traces = 0, n_events = 0, n_retained = 0;
  for (int b = 0; b < cfg.n_users; b += batch)
  {
    std::vector<LocationRecord> records;
    for (int i = b; i < std::min(cfg.n_users, b + batch); ++i)
    {
      auto r = generate_user(cfg, grid, i);
      records.insert(records.end(), r.begin(), r.end());
    }
    const auto ing = ingest(std::move(records), icfg);
    n_retained += ing.retained_users.size();
    const auto traces = run_scenario(ing.trajectories, ing.retained_users, grid, p, w, sgt, days);
    for (const auto& t : traces)
    {
      check_trace(c, t, p, w);
      try
      {
        verify_trace(t, p, w, sgt);
      }
      catch (const InvariantViolation& e)
      {
        c.expect(false, e.what());
      }
      n_events += t.events.size();
    }
    n_traces += traces.size();
  }
  const double s = seconds_since(t0);
  c.expect(n_retained > 0, "no users retained");
  c.expect(s < invariant_budget_s, "took " + num(s) + " s");
  c.detail = std::to_string(n_retained) + " users, " + std::to_string(n_traces) + " traces, "
    + std::to_string(n_events) + " events, " + num(s, 3) + " s";
}

//==============================================================================
struct Fixture
{
  GridSpec grid;
  std::vector<PlanningArea> areas;
  AreaIndex index;
  IngestResult ing;
  DayRange days;
  std::vector<SocTrace> traces;
};

Fixture synthetic_fixture(int users)
{
  Fixture f;
  f.grid = default_synthetic_grid();
  SynthConfig cfg = default_synth_config(f.grid, 11);
  cfg.n_users = users;
  f.areas = synthetic_areas(f.grid, 4, 6, 11);
  f.index = build_area_index(f.grid, f.areas);
  IngestConfig icfg;
  icfg.grid = f.grid;
  icfg.tz = sgt;
  f.ing = ingest(generate(cfg, f.grid), icfg);
  f.days = observed_days(f.ing.trajectories, f.ing.retained_users, sgt);
  f.traces = run_scenario(f.ing.trajectories, f.ing.retained_users, f.grid, VehicleParams{},
    PvWindow{}, sgt, f.days);
  return f;
}

void scaling_laws(Check& c, const Fixture& f)
{
  ScalingConfig base;
  base.n_usr = static_cast<double>(f.ing.retained_users.size());
  ScalingConfig doubled = base;
  doubled.delta = 2.0 * base.delta;
  ScalingConfig fine = base;
  fine.time_step = Seconds{60};

  const VehicleParams p;
  const auto a = aggregate(f.traces, f.index, f.areas, base, p, f.days, sgt);
  const auto d = aggregate(f.traces, f.index, f.areas, doubled, p, f.days, sgt);
  const auto r = aggregate(f.traces, f.index, f.areas, fine, p, f.days, sgt);
  c.expect(a.rows.size() == d.rows.size() && a.rows.size() == r.rows.size(), "row counts differ");
  if (!c.failures.empty())
    return;

  std::size_t n_peaks = 0;
  for (std::size_t i = 0; i < a.rows.size(); ++i)
  {
    const auto& x = a.rows[i];
    const auto& y = d.rows[i];
    const std::string tag = x.area_id + "/" + format_date(x.day) + ": ";
    c.expect(y.e_ev_kwh == 2.0 * x.e_ev_kwh, tag + "E_ev not doubled");
    c.expect(y.p_ev_peak_kw == 2.0 * x.p_ev_peak_kw, tag + "peak not doubled");
    c.expect(y.peak_step == x.peak_step, tag + "peak argmax moved");
    c.expect(r.rows[i].p_ev_peak_kw >= x.p_ev_peak_kw * (1.0 - refinement_rel),
      tag + "1-min peak below 15-min peak");
    n_peaks += x.p_ev_peak_kw > 0.0 ? 1 : 0;
  }
  c.expect(n_peaks > 0, "no non-zero peaks to test");
  c.detail = std::to_string(a.rows.size()) + " area-days, " + std::to_string(n_peaks)
    + " non-zero peaks";
}

//==============================================================================
bool brute_force_run(const std::set<DayNumber>& days, int k)
{
  for (const DayNumber start : days)
  {
    bool all = true;
    for (int i = 0; i < k && all; ++i)
      all = days.contains(start + i);
    if (all)
      return true;
  }
  return false;
}

void pipeline_properties(Check& c, const Fixture& f, const fs::path& dir)
{
  // Every emitted stay lasts at least tau.
  const IngestConfig icfg;
  std::size_t n_stays = 0;
  for (const auto& t : f.ing.trajectories)
  {
    for (const auto& s : t.stays)
    {
      c.expect(s.departure - s.arrival >= icfg.tau, t.user_id + ": stay shorter than tau");
      ++n_stays;
    }
  }

  // Consecutive-day filter against run enumeration.
  std::mt19937_64 rng(99);
  std::bernoulli_distribution attend(0.7);
  std::uniform_int_distribution<int> len(1, 21), need(1, 7);
  for (int i = 0; i < attendance_patterns; ++i)
  {
    std::set<DayNumber> days;
    const int n = len(rng);
    for (int d = 0; d < n; ++d)
    {
      if (attend(rng))
        days.insert(sep1 + d);
    }
    const int k = i % 2 == 0 ? 5 : need(rng);
    c.expect(has_consecutive_run(days, k) == brute_force_run(days, k),
      "attendance pattern " + std::to_string(i));

    // The same pattern through the full filter, one short stay per day.
    if (i % 10 == 0)
    {
      Trajectory t{"u", {}};
      for (const DayNumber d : days)
        t.stays.push_back({"u", {0, 0}, at(d, 10), at(d, 12)});
      IngestConfig cfg;
      cfg.min_consecutive_days = k;
      const std::vector<Trajectory> ts{t};
      c.expect(!filter_active_users(ts, cfg).empty() == brute_force_run(days, k),
        "filter on pattern " + std::to_string(i));
    }
  }

  // Shuffling input records leaves every output file unchanged.
  SynthOptions so;
  so.users = 150;
  so.records_out = dir / "records.csv";
  so.areas_out = dir / "areas.geojson";
  so.demand_out = dir / "demand.csv";
  run_synth(so);
  RunOptions ro;
  ro.records = so.records_out;
  ro.areas = *so.areas_out;
  ro.demand = *so.demand_out;
  ro.emit_stays = ro.emit_events = true;
  ro.out_dir = dir / "sorted";
  const auto first = run_pipeline(ro);

  std::istringstream in(read_file(so.records_out));
  auto records = read_records_csv(in).records;
  std::shuffle(records.begin(), records.end(), rng);
  std::ostringstream out;
  write_records_csv(out, records);
  write_file(dir / "shuffled.csv", out.str());
  ro.records = dir / "shuffled.csv";
  ro.out_dir = dir / "shuffled";
  const auto second = run_pipeline(ro);
  c.expect(first.output_digests == second.output_digests, "outputs changed after shuffle");

  c.detail = std::to_string(n_stays) + " stays, " + std::to_string(attendance_patterns)
    + " patterns, " + std::to_string(first.output_digests.size()) + " files unchanged by shuffle";
}

//==============================================================================
void statistics(Check& c)
{
  const std::vector<double> hh{820, 1500, 2300, 4100, 5200, 7700, 9000};
  std::vector<double> ev;
  for (const double x : hh)
    ev.push_back(0.125 * x);
  const auto s = regress(hh, ev);
  c.expect(std::abs(s.pearson_r - 1.0) <= stats_tol, "r = " + num(s.pearson_r, 17));
  c.expect(std::abs(s.r_squared - 1.0) <= stats_tol, "R^2 = " + num(s.r_squared, 17));
  c.expect(std::abs(s.ols_slope - 0.125) <= stats_tol, "slope = " + num(s.ols_slope, 17));

  const DemandCurve flat(std::vector<double>(48, 3.5));
  const double nf = night_fraction(flat, PvWindow{});
  c.expect(nf == 2.0 / 3.0, "night fraction = " + num(nf, 17));
  c.detail = "r=" + num(s.pearson_r, 12) + " slope=" + num(s.ols_slope, 12)
    + " night_fraction=" + num(nf, 17);
}

void readme_note(Check& c)
{
  const std::string text = read_file(fs::path(V2GPLAN_SOURCE_DIR) / "README.md");
  for (const char* needle : {"CITYDATA", "not reproducible", "r = 0.62", "slope 0.08",
         "R² = 0.38", "10–20%", "24 W/m²", "synthetic", "substitut"})
    c.expect(text.find(needle) != std::string::npos, std::string("README lacks '") + needle + "'");
  c.detail = "README.md states which results need the proprietary data";
}

//==============================================================================
int run_cli(const std::string& args)
{
  const std::string cmd = std::string(V2GPLAN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void bit_reproducibility(Check& c, const fs::path& dir)
{
  const auto in = [&](const char* f) { return (dir / f).string(); };
  c.expect(run_cli("synth --users 300 --seed 5 --out " + in("records.csv") + " --areas-out "
    + in("areas.geojson") + " --demand-out " + in("demand.csv")) == 0, "synth failed");
  const std::string base = "run --records " + in("records.csv") + " --areas "
    + in("areas.geojson") + " --demand " + in("demand.csv") + " --emit-stays --emit-events";

  std::vector<fs::path> outs;
  for (const int jobs : {1, 8, 1, 8})
  {
    const fs::path o = dir / ("out" + std::to_string(outs.size()));
    c.expect(run_cli(base + " --jobs " + std::to_string(jobs) + " --out-dir " + o.string()) == 0,
      "run with --jobs " + std::to_string(jobs) + " failed");
    outs.push_back(o);
  }
  if (!c.failures.empty())
    return;

  std::size_t n_files = 0;
  for (const auto& e : fs::directory_iterator(outs[0]))
  {
    const auto name = e.path().filename();
    const std::string ref = read_file(e.path());
    for (std::size_t k = 1; k < outs.size(); ++k)
    {
      if (name == "manifest.json")
      {
        // Only the wall-clock stamp and the echoed job count may differ.
        auto a = nlohmann::json::parse(ref);
        auto b = nlohmann::json::parse(read_file(outs[k] / name));
        for (auto* m : {&a, &b})
        {
          m->erase("started_utc");
          (*m)["config"].erase("jobs");
        }
        c.expect(a == b, "manifest.json differs beyond timestamp and jobs");
      }
      else
      {
        c.expect(read_file(outs[k] / name) == ref, name.string() + " differs");
      }
    }
    ++n_files;
  }
  c.expect(n_files >= 9, "too few output files");
  c.detail = std::to_string(n_files) + " files identical across --jobs 1, 8, 1, 8";
}

} // namespace

//==============================================================================
int main()
{
  const fs::path tmp = fs::temp_directory_path() / "v2gplan_acceptance";
  fs::remove_all(tmp);
  fs::create_directories(tmp / "c7");
  fs::create_directories(tmp / "c10");

  std::optional<Fixture> fixture;
  const auto shared = [&]() -> const Fixture&
    {
      if (!fixture)
        fixture = synthetic_fixture(1500);
      return *fixture;
    };

  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
    {"PV potential closed form", pv_closed_form},
    {"charging-point consistency", charging_points},
    {"depletion formula", depletion_formula},
    {"oracle equivalence", oracle_equivalence},
    {"invariants on synthetic data", invariant_suite},
    {"scaling laws", [&](Check& c) { scaling_laws(c, shared()); }},
    {"pipeline properties", [&](Check& c) { pipeline_properties(c, shared(), tmp / "c7"); }},
    {"statistics unit checks", statistics},
    {"non-reproducibility note", readme_note},
    {"bit-reproducibility", [&](Check& c) { bit_reproducibility(c, tmp / "c10"); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i)
  {
    Check c;
    try
    {
      criteria[i].second(c);
    }
    catch (const std::exception& e)
    {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const bool ok = c.failures.empty();
    failed += ok ? 0 : 1;
    std::cout << (ok ? "PASS" : "FAIL") << "  " << std::setw(2) << i + 1 << "  "
              << criteria[i].first << "  [" << c.detail << "]\n";
    for (const auto& f : c.failures)
      std::cout << "        " << f << "\n";
    std::cout.flush();
  }
  fs::remove_all(tmp);
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << "\n";
  return failed == 0 ? 0 : 1;
}
