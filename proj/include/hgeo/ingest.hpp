#pragma once

// Turning raw observations into arrival tables: geo-tagged event logs (one
// row per matching message) and coarse cumulative-interest series sampled
// on a fixed bin grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hgeo/arrivals.hpp"
#include "hgeo/csv.hpp"
#include "hgeo/effdist.hpp"
#include "hgeo/error.hpp"
#include "hgeo/region_graph.hpp"

namespace hgeo {

struct GeoEvent {
  double timestamp = 0.0;  // UNIX seconds
  double lat = 0.0;
  double lon = 0.0;
  std::optional<std::string> region_id;
};

/// Pre-assigned id if present, otherwise the nearest centroid by great-circle
/// distance; equal distances go to the smaller id.
inline std::size_t assign_region(const GeoEvent& event, std::span<const Region> regions) {
  if (regions.empty()) throw Error(ErrorCode::InvalidParameter, "no regions to assign to");
  if (event.region_id) {
    for (std::size_t i = 0; i < regions.size(); ++i) {
      if (regions[i].id == *event.region_id) return i;
    }
    throw Error(ErrorCode::UnknownRegionId, "event region '" + *event.region_id + "'");
  }
  if (!(event.lat >= -90.0 && event.lat <= 90.0 && event.lon >= -180.0 && event.lon <= 180.0)) {
    throw Error(ErrorCode::InvalidCoordinate, "event coordinates out of range");
  }
  const Region probe{"", "", event.lat, event.lon, 1.0};
  std::size_t best = 0;
  double best_d = geographic_distance(probe, regions[0]);
  for (std::size_t i = 1; i < regions.size(); ++i) {
    const double d = geographic_distance(probe, regions[i]);
    if (d < best_d || (d == best_d && regions[i].id < regions[best].id)) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

struct EventLog {
  std::vector<GeoEvent> events;
  std::size_t malformed = 0;
};

/// CSV `timestamp,lat,lon[,region_id]`. Rows that cannot be parsed are
/// counted, not fatal. With a region_id present the coordinates may be empty.
inline EventLog read_events_csv(std::istream& in) {
  const auto table = csv::read(in);
  const auto c_ts = table.require_column("timestamp");
  const auto c_lat = table.require_column("lat");
  const auto c_lon = table.require_column("lon");
  const auto c_region = table.column("region_id");

  EventLog log;
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    if (f.size() != table.header.size()) {
      ++log.malformed;
      continue;
    }
    GeoEvent ev;
    auto ts = csv::parse_double(f[c_ts]);
    if (!ts || !std::isfinite(*ts)) {
      ++log.malformed;
      continue;
    }
    ev.timestamp = *ts;
    if (c_region && !csv::trim(f[*c_region]).empty()) ev.region_id = std::string(csv::trim(f[*c_region]));
    auto lat = csv::parse_double(f[c_lat]);
    auto lon = csv::parse_double(f[c_lon]);
    if (lat && lon) {
      ev.lat = *lat;
      ev.lon = *lon;
    } else if (!ev.region_id) {
      ++log.malformed;
      continue;
    }
    log.events.push_back(std::move(ev));
  }
  return log;
}

struct EventArrivals {
  ArrivalTable arrivals;
  std::size_t rejected = 0;  // events whose region could not be assigned
};

/// Minimum timestamp per assigned region, divided by `time_unit` (seconds
/// per output time unit).
inline EventArrivals first_arrivals(std::span<const GeoEvent> events, std::span<const Region> regions,
                                    double time_unit = 1.0) {
  if (!(time_unit > 0.0)) throw Error(ErrorCode::InvalidParameter, "time unit must be > 0");
  EventArrivals out{ArrivalTable(Provenance::Events, 0.0), 0};
  for (const auto& ev : events) {
    try {
      const auto r = assign_region(ev, regions);
      out.arrivals.observe(regions[r].id, ev.timestamp / time_unit);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnknownRegionId && e.code() != ErrorCode::InvalidCoordinate &&
          e.code() != ErrorCode::InvalidParameter) {
        throw;
      }
      ++out.rejected;
    }
  }
  return out;
}

struct CoarseSeries {
  struct Bin {
    double start = 0.0;
    double cumulative = 0.0;
  };
  std::string region_id;
  std::vector<Bin> bins;
  double bin_width = 14.0;

  /// Starts strictly increasing on a uniform grid; counts non-negative and
  /// non-decreasing.
  void validate() const {
    if (!(bin_width > 0.0)) throw Error(ErrorCode::InvalidParameter, "bin width must be > 0");
    for (std::size_t k = 0; k < bins.size(); ++k) {
      if (!(bins[k].cumulative >= 0.0)) {
        throw Error(ErrorCode::NonMonotoneCumulative, "negative count in series '" + region_id + "'");
      }
      if (k == 0) continue;
      const double gap = bins[k].start - bins[k - 1].start;
      if (std::abs(gap - bin_width) > 1e-9 * std::max(1.0, bin_width)) {
        throw Error(ErrorCode::InvalidParameter, "series '" + region_id + "' is not on a uniform bin grid");
      }
      if (bins[k].cumulative < bins[k - 1].cumulative) {
        throw Error(ErrorCode::NonMonotoneCumulative, "series '" + region_id + "' decreases at bin " +
                                                          csv::format_number(bins[k].start));
      }
    }
  }
};

/// Start of the first bin whose cumulative count reaches `threshold`.
inline ArrivalTable arrivals_from_coarse(std::span<const CoarseSeries> series, double threshold = 1.0) {
  if (!(threshold >= 1.0)) throw Error(ErrorCode::InvalidParameter, "threshold must be >= 1");
  double width = series.empty() ? 0.0 : series.front().bin_width;
  for (const auto& s : series) {
    s.validate();
    if (s.bin_width != width) throw Error(ErrorCode::InvalidParameter, "series use different bin widths");
  }
  ArrivalTable table(Provenance::CoarseBins, width);
  for (const auto& s : series) {
    for (const auto& b : s.bins) {
      if (b.cumulative >= threshold) {
        table.observe(s.region_id, b.start);
        break;
      }
    }
  }
  return table;
}

/// CSV `region_id,bin_start,cumulative_count`, grouped per region and sorted
/// by bin start. The bin width is declared by the caller.
inline std::vector<CoarseSeries> read_coarse_csv(std::istream& in, double bin_width) {
  const auto table = csv::read(in);
  const auto c_id = table.require_column("region_id");
  const auto c_start = table.require_column("bin_start");
  const auto c_count = table.require_column("cumulative_count");

  std::map<std::string, CoarseSeries> by_region;
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    if (f.size() != table.header.size()) {
      throw Error(ErrorCode::ParseError, "wrong field count at line " + std::to_string(row.line));
    }
    auto start = csv::parse_double(f[c_start]);
    auto count = csv::parse_double(f[c_count]);
    if (!start || !count || !std::isfinite(*start) || !std::isfinite(*count)) {
      throw Error(ErrorCode::ParseError, "unparseable bin at line " + std::to_string(row.line));
    }
    std::string id(csv::trim(f[c_id]));
    auto& s = by_region[id];
    s.region_id = id;
    s.bin_width = bin_width;
    s.bins.push_back({*start, *count});
  }
  std::vector<CoarseSeries> out;
  for (auto& [id, s] : by_region) {
    std::stable_sort(s.bins.begin(), s.bins.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    for (std::size_t k = 1; k < s.bins.size(); ++k) {
      if (s.bins[k].start == s.bins[k - 1].start) {
        throw Error(ErrorCode::ParseError, "duplicate bin for region '" + id + "'");
      }
    }
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

/// Re-expresses exact arrivals as cumulative 0/1 series on the grid
/// origin + k * width, ending at the bin that contains each arrival. Arrivals
/// before `origin` are rejected.
inline std::vector<CoarseSeries> coarsen(const ArrivalTable& fine, double width, double origin = 0.0) {
  if (!(width > 0.0)) throw Error(ErrorCode::InvalidParameter, "bin width must be > 0");
  std::vector<CoarseSeries> out;
  for (const auto& [id, t] : fine) {
    if (t < origin) throw Error(ErrorCode::InvalidParameter, "arrival before the bin origin");
    const auto last = static_cast<std::size_t>(std::floor((t - origin) / width));
    CoarseSeries s{id, {}, width};
    for (std::size_t k = 0; k <= last; ++k) {
      s.bins.push_back({origin + width * static_cast<double>(k), k == last ? 1.0 : 0.0});
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace hgeo
