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

#ifndef V2GPLAN__TIME_HPP
#define V2GPLAN__TIME_HPP

#include <v2gplan/errors.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace v2gplan {

/// Record-level instants have whole-second resolution.
using Instant = std::chrono::sys_seconds;

/// Engine-level instants. Charge events end at fractional seconds.
using FineInstant = std::chrono::sys_time<std::chrono::duration<double>>;

using Seconds = std::chrono::seconds;
using FineSeconds = std::chrono::duration<double>;

inline constexpr std::int64_t seconds_per_day = 86400;

/// Local calendar day, counted in days since 1970-01-01 in the configured
/// time zone.
using DayNumber = std::int64_t;

/// A fixed offset from UTC. Daylight saving is not modelled.
struct UtcOffset
{
  Seconds offset{0};

  friend bool operator==(const UtcOffset&, const UtcOffset&) = default;
};

inline FineInstant to_fine(Instant t)
{
  return FineInstant{FineSeconds{static_cast<double>(t.time_since_epoch().count())}};
}

inline double hours(FineSeconds d)
{
  return d.count() / 3600.0;
}

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b)
{
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0)))
    --q;
  return q;
}

inline bool parse_int(std::string_view s, int& out)
{
  if (s.empty())
    return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

} // namespace detail

inline DayNumber local_day(Instant t, UtcOffset tz)
{
  return detail::floor_div(
    (t + tz.offset).time_since_epoch().count(), seconds_per_day);
}

inline DayNumber local_day(FineInstant t, UtcOffset tz)
{
  const double local = t.time_since_epoch().count()
    + static_cast<double>(tz.offset.count());
  return static_cast<DayNumber>(std::floor(local / seconds_per_day));
}

/// UTC instant of local midnight starting `day`.
inline Instant day_start(DayNumber day, UtcOffset tz)
{
  return Instant{Seconds{day * seconds_per_day}} - tz.offset;
}

/// Parses `+08:00`, `-0530`, `+8`, `UTC+8`, `Z` or `UTC`.
inline std::optional<UtcOffset> parse_utc_offset(std::string_view s)
{
  if (s.starts_with("UTC"))
    s.remove_prefix(3);
  if (s.empty() || s == "Z")
    return UtcOffset{};
  int sign = 0;
  if (s.front() == '+')
    sign = 1;
  else if (s.front() == '-')
    sign = -1;
  else
    return std::nullopt;
  s.remove_prefix(1);

  int h = 0;
  int m = 0;
  if (const auto colon = s.find(':'); colon != std::string_view::npos)
  {
    if (!detail::parse_int(s.substr(0, colon), h)
      || !detail::parse_int(s.substr(colon + 1), m))
      return std::nullopt;
  }
  else if (s.size() == 4)
  {
    if (!detail::parse_int(s.substr(0, 2), h)
      || !detail::parse_int(s.substr(2), m))
      return std::nullopt;
  }
  else if (!detail::parse_int(s, h))
  {
    return std::nullopt;
  }
  if (h < 0 || h > 14 || m < 0 || m > 59)
    return std::nullopt;
  return UtcOffset{Seconds{sign * (h * 3600 + m * 60)}};
}

inline std::string format_utc_offset(UtcOffset tz)
{
  const auto total = tz.offset.count();
  const auto a = total < 0 ? -total : total;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%c%02lld:%02lld", total < 0 ? '-' : '+',
    static_cast<long long>(a / 3600), static_cast<long long>((a % 3600) / 60));
  return buf;
}

/// Parses an ISO-8601 instant `YYYY-MM-DDTHH:MM:SS` followed by `Z` or a
/// numeric offset. Returns nullopt on any malformed field.
inline std::optional<Instant> parse_iso8601(std::string_view s)
{
  using namespace std::chrono;
  if (s.size() < 20 || s[4] != '-' || s[7] != '-'
    || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' || s[16] != ':')
    return std::nullopt;

  int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  if (!detail::parse_int(s.substr(0, 4), y)
    || !detail::parse_int(s.substr(5, 2), mo)
    || !detail::parse_int(s.substr(8, 2), d)
    || !detail::parse_int(s.substr(11, 2), hh)
    || !detail::parse_int(s.substr(14, 2), mm)
    || !detail::parse_int(s.substr(17, 2), ss))
    return std::nullopt;

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
    day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60)
    return std::nullopt;

  const auto tz = parse_utc_offset(s.substr(19));
  if (!tz)
    return std::nullopt;

  return Instant{sys_days{ymd}} + std::chrono::hours{hh} + minutes{mm} + seconds{ss}
    - tz->offset;
}

/// `YYYY-MM-DD` of a local day.
inline std::string format_date(DayNumber day)
{
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day}}};
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::optional<DayNumber> parse_date(std::string_view s)
{
  using namespace std::chrono;
  int y = 0, mo = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-'
    || !detail::parse_int(s.substr(0, 4), y)
    || !detail::parse_int(s.substr(5, 2), mo)
    || !detail::parse_int(s.substr(8, 2), d))
    return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
    day{static_cast<unsigned>(d)}};
  if (!ymd.ok())
    return std::nullopt;
  return sys_days{ymd}.time_since_epoch().count();
}

/// Formats an instant in local time, e.g. `2020-09-01T18:00:00+08:00`.
inline std::string format_local(Instant t, UtcOffset tz)
{
  const auto local = (t + tz.offset).time_since_epoch().count();
  const auto day = detail::floor_div(local, seconds_per_day);
  const auto sod = local - day * seconds_per_day;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "T%02lld:%02lld:%02lld",
    static_cast<long long>(sod / 3600), static_cast<long long>((sod % 3600) / 60),
    static_cast<long long>(sod % 60));
  return format_date(day) + buf + format_utc_offset(tz);
}

/// Fine instants are rounded to the nearest second for display.
inline std::string format_local(FineInstant t, UtcOffset tz)
{
  const auto s = static_cast<std::int64_t>(std::llround(t.time_since_epoch().count()));
  return format_local(Instant{Seconds{s}}, tz);
}

inline std::string format_utc(Instant t)
{
  std::string s = format_local(t, UtcOffset{});
  s.resize(s.size() - 6);
  return s + "Z";
}

/// Parses `HH:MM` (or `HH:MM:SS`) into seconds since midnight. `24:00` is
/// accepted as the end of day.
inline std::optional<Seconds> parse_time_of_day(std::string_view s)
{
  int h = 0, m = 0, sec = 0;
  if (s.size() != 5 && s.size() != 8)
    return std::nullopt;
  if (s[2] != ':' || !detail::parse_int(s.substr(0, 2), h)
    || !detail::parse_int(s.substr(3, 2), m))
    return std::nullopt;
  if (s.size() == 8
    && (s[5] != ':' || !detail::parse_int(s.substr(6, 2), sec)))
    return std::nullopt;
  if (h < 0 || m < 0 || m > 59 || sec < 0 || sec > 59)
    return std::nullopt;
  const auto total = h * 3600 + m * 60 + sec;
  if (total > seconds_per_day)
    return std::nullopt;
  return Seconds{total};
}

inline std::string format_time_of_day(Seconds s)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld",
    static_cast<long long>(s.count() / 3600),
    static_cast<long long>((s.count() % 3600) / 60));
  return buf;
}

} // namespace v2gplan

#endif // V2GPLAN__TIME_HPP
