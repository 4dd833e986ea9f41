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

#include <v2gplan/pipeline.hpp>

#include "CLI11.hpp"

#include <iostream>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_invariant = 3;

void add_synth_options(CLI::App& cmd, v2gplan::SynthOptions& o)
{
  cmd.add_option("--seed", o.seed, "RNG seed")->capture_default_str();
  cmd.add_option("--users", o.users, "Number of synthetic users")->capture_default_str();
  cmd.add_option("--days", o.days, "Number of simulated days")->capture_default_str();
  cmd.add_option("--first-day", o.first_day, "First local day (YYYY-MM-DD)")->capture_default_str();
  cmd.add_option("--tz", o.tz, "Local UTC offset, e.g. +08:00")->capture_default_str();
  cmd.add_option("--cell-size", o.cell_size_m, "Grid cell size in metres")->capture_default_str();
  cmd.add_option("--ping-minutes", o.ping_minutes, "Ping interval during stays")->capture_default_str();
  cmd.add_option("--mean-stays", o.mean_stays_per_day, "Mean out-of-home stays per day")->capture_default_str();
  cmd.add_option("--area-rows", o.area_rows, "Planning-area tiling rows")->capture_default_str();
  cmd.add_option("--area-cols", o.area_cols, "Planning-area tiling columns")->capture_default_str();
  cmd.add_option("--jobs", o.jobs, "Worker threads")->capture_default_str();
  cmd.add_option("--out", o.records_out, "Records CSV to write")->capture_default_str();
  cmd.add_option("--areas-out", o.areas_out, "Also write matching planning areas (GeoJSON)");
  cmd.add_option("--demand-out", o.demand_out, "Also write a half-hourly demand curve (CSV)");
}

void add_run_options(CLI::App& cmd, v2gplan::RunOptions& o,
  std::optional<std::string>& first_day, std::optional<int>& n_days)
{
  auto& v = o.vehicle;
  cmd.add_option("--records", o.records, "Location records CSV")->required();
  cmd.add_option("--areas", o.areas, "Planning areas GeoJSON")->required();
  cmd.add_option("--demand", o.demand, "System demand curve CSV")->required();
  cmd.add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
  cmd.add_option("--delta", o.delta, "EV penetration rate")->capture_default_str();
  cmd.add_option("--n-pop", o.n_pop, "City population")->capture_default_str();
  cmd.add_option("--c-max", v.c_max_kwh, "Battery capacity (kWh)")->capture_default_str();
  cmd.add_option("--l-max", v.l_max_km, "Vehicle range (km)")->capture_default_str();
  cmd.add_option("--p-charge", v.p_charge_kw, "Charging power (kW)")->capture_default_str();
  cmd.add_option("--p-discharge", v.p_discharge_kw, "Discharging power (kW)")->capture_default_str();
  cmd.add_option("--c-thr", v.c_thr, "SOC threshold")->capture_default_str();
  cmd.add_option("--c-init", v.c_init, "SOC at local midnight")->capture_default_str();
  cmd.add_option("--pv-charge-target", v.pv_charge_target, "SOC target inside the PV window")->capture_default_str();
  cmd.add_option("--pv-start", o.pv_start, "PV window start (HH:MM)")->capture_default_str();
  cmd.add_option("--pv-end", o.pv_end, "PV window end (HH:MM)")->capture_default_str();
  cmd.add_option("--tau", o.tau_hours, "Minimum stay time (hours)")->capture_default_str();
  cmd.add_option("--min-days", o.min_days, "Consecutive active days required")->capture_default_str();
  cmd.add_option("--cell-size", o.cell_size_m, "Grid cell size (m)")->capture_default_str();
  cmd.add_option("--time-step", o.time_step_minutes, "Demand profile step (minutes)")->capture_default_str();
  cmd.add_option("--tz", o.tz, "Local UTC offset")->capture_default_str();
  cmd.add_option("--days-in-month", o.days_in_month, "Days in the household billing month")->capture_default_str();
  cmd.add_option("--hist-bin", o.hist_bin_width, "Coverage histogram bin width")->capture_default_str();
  cmd.add_option("--eta-pv", o.eta_pv, "PV module efficiency")->capture_default_str();
  cmd.add_option("--a-pv", o.a_pv, "PV panel area per unit ground area")->capture_default_str();
  cmd.add_option("--irradiance", o.irradiance_w_m2, "Typical irradiance (W/m^2)")->capture_default_str();
  cmd.add_option("--first-day", first_day, "Simulate from this local day (YYYY-MM-DD)");
  cmd.add_option("--n-days", n_days, "Number of days to simulate");
  cmd.add_flag("--emit-stays", o.emit_stays, "Write stays.csv");
  cmd.add_flag("--emit-events", o.emit_events, "Write events.csv");
  cmd.add_option("--jobs", o.jobs, "Worker threads (output does not depend on it)")->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Vehicle-to-grid supply and demand estimation from mobility records"};
  app.require_subcommand(1);

  v2gplan::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic location records");
  add_synth_options(*synth_cmd, synth);

  v2gplan::RunOptions run;
  std::optional<std::string> first_day;
  std::optional<int> n_days;
  auto* run_cmd = app.add_subcommand("run", "Run the full estimation pipeline");
  add_run_options(*run_cmd, run, first_day, n_days);

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_usage;
  }

  try
  {
    if (*synth_cmd)
    {
      const auto s = v2gplan::run_synth(synth);
      std::cerr << "wrote " << s.n_records << " records to " << synth.records_out.string()
                << " (sha256 " << s.records_digest << ")\n";
    }
    else
    {
      run.first_day = first_day;
      run.n_days = n_days;
      const auto s = v2gplan::run_pipeline(run);
      std::cerr << "records " << s.n_records << ", users " << s.n_users
                << ", retained " << s.n_retained << ", events " << s.n_events
                << "; outputs in " << run.out_dir.string() << "\n";
    }
  }
  catch (const v2gplan::InvariantViolation& e)
  {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return exit_invariant;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  }
  return exit_ok;
}
