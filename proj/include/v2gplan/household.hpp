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

#ifndef V2GPLAN__HOUSEHOLD_HPP
#define V2GPLAN__HOUSEHOLD_HPP

#include <v2gplan/errors.hpp>
#include <v2gplan/geo.hpp>
#include <v2gplan/time.hpp>
#include <v2gplan/v2g.hpp>

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace v2gplan {

/// Uniformly spaced system-demand samples covering one day from 00:00.
/// Sample i covers [i * step, (i + 1) * step).
class DemandCurve
{
public:
  DemandCurve(std::vector<double> samples)
  : _samples(std::move(samples))
  {
    if (_samples.size() < 2)
      throw InvalidInput("demand curve needs at least two samples");
    if (seconds_per_day % static_cast<std::int64_t>(_samples.size()) != 0)
      throw InvalidInput("demand curve spacing must divide 24 h");
    for (const double v : _samples)
    {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidInput("demand curve samples must be finite and non-negative");
    }
  }

  const std::vector<double>& samples() const { return _samples; }

  Seconds step() const
  {
    return Seconds{seconds_per_day / static_cast<std::int64_t>(_samples.size())};
  }

private:
  std::vector<double> _samples;
};

/// Share of daily demand falling in [00:00, start) and [end, 24:00). Samples
/// straddling a boundary are split pro rata. `start == end` means no daytime
/// window at all.
inline double night_fraction(const DemandCurve& curve, Seconds start, Seconds end)
{
  if (start < Seconds{0} || end > Seconds{seconds_per_day} || end < start)
    throw InvalidInput("night_fraction: window must satisfy 0 <= start <= end <= 24h");

  const double step = static_cast<double>(curve.step().count());
  const double ws = static_cast<double>(start.count());
  const double we = static_cast<double>(end.count());
  double total = 0.0;
  double day = 0.0;
  for (std::size_t i = 0; i < curve.samples().size(); ++i)
  {
    const double v = curve.samples()[i];
    const double lo = static_cast<double>(i) * step;
    const double hi = lo + step;
    const double overlap = std::max(0.0, std::min(hi, we) - std::max(lo, ws));
    total += v;
    day += v * overlap / step;
  }
  if (!(total > 0.0))
    throw UndefinedFraction("night_fraction: demand curve sums to zero");
  return std::clamp((total - day) / total, 0.0, 1.0);
}

inline double night_fraction(const DemandCurve& curve, const PvWindow& window)
{
  return night_fraction(curve, window.start, window.end);
}

/// Night-time household energy of one area for a typical day, or nullopt
/// when the area carries no household data.
inline std::optional<double> household_night_energy(const PlanningArea& area,
  int days_in_month, double night_fraction)
{
  if (days_in_month < 1)
    throw InvalidInput("days_in_month must be positive");
  if (!(night_fraction >= 0.0 && night_fraction <= 1.0))
    throw InvalidInput("night fraction must lie in [0, 1]");
  if (!area.households || !area.monthly_kwh_per_household)
    return std::nullopt;
  return *area.monthly_kwh_per_household * *area.households / days_in_month
    * night_fraction;
}

//==============================================================================
struct RegressionSummary
{
  double pearson_r = 0.0;
  double p_value = 1.0;
  double ols_slope = 0.0;
  double ols_intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

/// Pearson correlation with a two-sided t-test (n - 2 degrees of freedom)
/// and the OLS fit of y on x. Requires at least three points and a
/// non-constant x.
inline RegressionSummary regress(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size())
    throw InvalidInput("regress: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 3)
    throw InvalidInput("regress: at least three points are required");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i)
  {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i)
  {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0))
    throw DegenerateRegressor("regress: regressor has zero variance");

  RegressionSummary s;
  s.n_points = n;
  s.ols_slope = sxy / sxx;
  s.ols_intercept = my - s.ols_slope * mx;
  if (!(syy > 0.0))
  {
    // Constant response: the fit is exact with slope 0 and nothing to explain.
    s.pearson_r = 0.0;
    s.r_squared = 0.0;
    s.p_value = 1.0;
    return s;
  }

  s.pearson_r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i)
  {
    const double e = y[i] - (s.ols_intercept + s.ols_slope * x[i]);
    ss_res += e * e;
  }
  s.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);

  const double dof = static_cast<double>(n - 2);
  const double one_minus = 1.0 - s.pearson_r * s.pearson_r;
  if (one_minus <= 0.0)
  {
    s.p_value = 0.0;
  }
  else
  {
    const double t = s.pearson_r * std::sqrt(dof / one_minus);
    const boost::math::students_t dist(dof);
    s.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return s;
}

struct CoverageRow
{
  std::string area_id;
  double e_ev_kwh = 0.0;
  double e_hh_kwh = 0.0;
  double ratio = 0.0;
};

struct HistogramBin
{
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
};

struct CoverageInput
{
  std::string area_id;
  double e_ev_kwh = 0.0;
  std::optional<double> e_hh_kwh;
};

struct CoverageReport
{
  std::vector<CoverageRow> rows;
  std::vector<HistogramBin> histogram;
  /// Withheld with fewer than three paired areas.
  std::optional<RegressionSummary> regression;
  /// Areas dropped for lacking household data or having zero household energy.
  std::size_t excluded = 0;
};

/// Histogram of `values` with bins [k*w, (k+1)*w) from zero up to the bin
/// holding the largest value.
inline std::vector<HistogramBin> histogram(std::span<const double> values,
  double bin_width)
{
  if (!(bin_width > 0.0))
    throw InvalidInput("histogram bin width must be positive");
  std::vector<HistogramBin> bins;
  if (values.empty())
    return bins;
  std::size_t top = 0;
  for (const double v : values)
  {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidInput("histogram values must be finite and non-negative");
    top = std::max(top, static_cast<std::size_t>(std::floor(v / bin_width)));
  }
  bins.resize(top + 1);
  for (std::size_t k = 0; k < bins.size(); ++k)
  {
    bins[k].low = static_cast<double>(k) * bin_width;
    bins[k].high = static_cast<double>(k + 1) * bin_width;
  }
  for (const double v : values)
    ++bins[static_cast<std::size_t>(std::floor(v / bin_width))].count;
  return bins;
}

/// Coverage ratio E_ev / E_hh per paired area and its histogram. Areas
/// without household data or with zero household energy are left out.
inline CoverageReport coverage_ratios(std::span<const CoverageInput> inputs,
  double bin_width = 0.05)
{
  CoverageReport report;
  std::vector<double> ratios;
  for (const auto& in : inputs)
  {
    if (!in.e_hh_kwh || !(*in.e_hh_kwh > 0.0))
    {
      ++report.excluded;
      continue;
    }
    const double r = in.e_ev_kwh / *in.e_hh_kwh;
    report.rows.push_back({in.area_id, in.e_ev_kwh, *in.e_hh_kwh, r});
    ratios.push_back(r);
  }
  report.histogram = histogram(ratios, bin_width);
  return report;
}

/// Regression of E_ev on E_hh over the paired rows of a report.
inline RegressionSummary regress_coverage(const CoverageReport& report)
{
  std::vector<double> ev, hh;
  for (const auto& r : report.rows)
  {
    ev.push_back(r.e_ev_kwh);
    hh.push_back(r.e_hh_kwh);
  }
  return regress(hh, ev);
}

/// Ratios, histogram and, with at least three paired areas, the regression.
inline CoverageReport coverage_and_stats(std::span<const CoverageInput> inputs,
  double bin_width = 0.05)
{
  CoverageReport report = coverage_ratios(inputs, bin_width);
  if (report.rows.size() >= 3)
    report.regression = regress_coverage(report);
  return report;
}

} // namespace v2gplan

#endif // V2GPLAN__HOUSEHOLD_HPP
