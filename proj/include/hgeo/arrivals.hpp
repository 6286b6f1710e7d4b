#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "hgeo/csv.hpp"
#include "hgeo/error.hpp"

namespace hgeo {

enum class Provenance { Simulated, Events, CoarseBins };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Simulated: return "simulated";
    case Provenance::Events: return "events";
    case Provenance::CoarseBins: return "coarse-bins";
  }
  return "unknown";
}

inline Provenance parse_provenance(std::string_view s) {
  if (s == "simulated") return Provenance::Simulated;
  if (s == "events") return Provenance::Events;
  if (s == "coarse-bins") return Provenance::CoarseBins;
  throw Error(ErrorCode::ParseError, "unknown provenance '" + std::string(s) + "'");
}

/// First-arrival time per region id. Regions without an arrival are simply
/// absent. Times share one epoch and unit; `resolution` is the time
/// quantisation of the source (0 for exact).
class ArrivalTable {
 public:
  ArrivalTable() = default;
  ArrivalTable(Provenance provenance, double resolution) : provenance_(provenance), resolution_(resolution) {
    if (!(resolution >= 0.0)) throw Error(ErrorCode::InvalidParameter, "resolution must be >= 0");
  }

  void set(const std::string& region, double t) {
    if (!std::isfinite(t)) throw Error(ErrorCode::InvalidParameter, "arrival time must be finite");
    times_[region] = t;
  }

  /// Keeps the earlier of the existing and the new time.
  void observe(const std::string& region, double t) {
    if (!std::isfinite(t)) throw Error(ErrorCode::InvalidParameter, "arrival time must be finite");
    auto [it, inserted] = times_.emplace(region, t);
    if (!inserted && t < it->second) it->second = t;
  }

  std::optional<double> at(std::string_view region) const {
    auto it = times_.find(std::string(region));
    if (it == times_.end()) return std::nullopt;
    return it->second;
  }

  bool empty() const noexcept { return times_.empty(); }
  std::size_t size() const noexcept { return times_.size(); }
  Provenance provenance() const noexcept { return provenance_; }
  double resolution() const noexcept { return resolution_; }

  // Ordered by region id.
  auto begin() const { return times_.begin(); }
  auto end() const { return times_.end(); }

  friend bool operator==(const ArrivalTable&, const ArrivalTable&) = default;

 private:
  Provenance provenance_ = Provenance::Simulated;
  double resolution_ = 0.0;
  std::map<std::string, double> times_;
};

/// CSV `region_id,arrival_time,provenance,resolution`, rows sorted by id.
inline void write_arrivals_csv(std::ostream& out, const ArrivalTable& table) {
  out << "region_id,arrival_time,provenance,resolution\n";
  for (const auto& [id, t] : table) {
    out << csv::escape(id) << ',' << csv::format_number(t) << ',' << to_string(table.provenance()) << ','
        << csv::format_number(table.resolution()) << '\n';
  }
}

/// Reads the arrival export. The provenance/resolution columns are optional;
/// a bare `region_id,arrival_time` file is read as exact event data.
/// Rows with an empty arrival_time are treated as absent.
inline ArrivalTable read_arrivals_csv(std::istream& in) {
  const auto table = csv::read(in);
  const auto c_id = table.require_column("region_id");
  const auto c_t = table.require_column("arrival_time");
  const auto c_prov = table.column("provenance");
  const auto c_res = table.column("resolution");

  std::optional<ArrivalTable> out;
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    if (f.size() != table.header.size()) {
      throw Error(ErrorCode::ParseError, "wrong field count at line " + std::to_string(row.line));
    }
    if (!out) {
      Provenance prov = c_prov ? parse_provenance(csv::trim(f[*c_prov])) : Provenance::Events;
      double res = 0.0;
      if (c_res) {
        auto r = csv::parse_double(f[*c_res]);
        if (!r) throw Error(ErrorCode::ParseError, "unparseable resolution at line " + std::to_string(row.line));
        res = *r;
      }
      out.emplace(prov, res);
    }
    if (csv::trim(f[c_t]).empty()) continue;
    auto t = csv::parse_double(f[c_t]);
    if (!t || !std::isfinite(*t)) {
      throw Error(ErrorCode::ParseError, "invalid arrival_time at line " + std::to_string(row.line));
    }
    std::string id(csv::trim(f[c_id]));
    if (out->at(id)) throw Error(ErrorCode::DuplicateRegionId, "region '" + id + "' listed twice");
    out->set(id, *t);
  }
  return out ? *out : ArrivalTable(Provenance::Events, 0.0);
}

}  // namespace hgeo
