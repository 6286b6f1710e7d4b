#pragma once

// Region metadata plus the directed flux graph between regions, and the two
// quantities derived from it: destination probabilities (column-normalised
// out-flux) and per-capita coupling rates.
//
// Orientation: a single directed flow(a -> b) is stored. The transition
// probability P(m | n) is the chance of choosing destination m when leaving
// n, i.e. flow(n -> m) / sum_k flow(n -> k). Coupling w(a -> b) is
// flow(a -> b) / N_a.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hgeo/csv.hpp"
#include "hgeo/error.hpp"

namespace hgeo {

struct Region {
  std::string id;
  std::string name;
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, (-180, 180]
  double population = 1.0;
};

/// Throws InvalidCoordinate / NonPositivePopulation. A longitude of exactly
/// -180 is folded onto +180.
inline Region validated(Region r) {
  if (r.id.empty()) throw Error(ErrorCode::ParseError, "region id must be non-empty");
  if (!std::isfinite(r.lat) || r.lat < -90.0 || r.lat > 90.0) {
    throw Error(ErrorCode::InvalidCoordinate, "latitude out of range for region '" + r.id + "'");
  }
  if (r.lon == -180.0) r.lon = 180.0;
  if (!std::isfinite(r.lon) || r.lon <= -180.0 || r.lon > 180.0) {
    throw Error(ErrorCode::InvalidCoordinate, "longitude out of range for region '" + r.id + "'");
  }
  if (!std::isfinite(r.population) || r.population <= 0.0) {
    throw Error(ErrorCode::NonPositivePopulation, "population must be positive for region '" + r.id + "'");
  }
  return r;
}

/// Validates regions in input order and rejects duplicate ids.
inline std::vector<Region> load_regions(std::vector<Region> records) {
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<Region> out;
  out.reserve(records.size());
  for (auto& rec : records) {
    auto r = validated(std::move(rec));
    if (!seen.emplace(r.id, out.size()).second) {
      throw Error(ErrorCode::DuplicateRegionId, "duplicate region id '" + r.id + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Region table with header `id,name,lat,lon,population`.
inline std::vector<Region> load_regions(const csv::Table& table) {
  const auto c_id = table.require_column("id");
  const auto c_name = table.require_column("name");
  const auto c_lat = table.require_column("lat");
  const auto c_lon = table.require_column("lon");
  const auto c_pop = table.require_column("population");

  std::vector<Region> records;
  records.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    if (f.size() != table.header.size()) {
      throw Error(ErrorCode::ParseError, "wrong field count at line " + std::to_string(row.line));
    }
    auto lat = csv::parse_double(f[c_lat]);
    auto lon = csv::parse_double(f[c_lon]);
    if (!lat || !lon) {
      throw Error(ErrorCode::InvalidCoordinate, "unparseable coordinate at line " + std::to_string(row.line));
    }
    auto pop = csv::parse_double(f[c_pop]);
    if (!pop) {
      throw Error(ErrorCode::NonPositivePopulation, "unparseable population at line " + std::to_string(row.line));
    }
    records.push_back(Region{std::string(csv::trim(f[c_id])), f[c_name], *lat, *lon, *pop});
  }
  return load_regions(std::move(records));
}

inline std::vector<Region> read_regions_csv(std::istream& in) { return load_regions(csv::read(in)); }

/// Dense square matrix of directed flows; flow(from, to). The diagonal is
/// kept at zero.
class FluxMatrix {
 public:
  FluxMatrix() = default;
  explicit FluxMatrix(std::size_t n) : n_(n), flow_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }

  double flow(std::size_t from, std::size_t to) const { return flow_[from * n_ + to]; }

  void set(std::size_t from, std::size_t to, double w) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::NegativeWeight, "flux must be finite and >= 0");
    if (from != to) flow_[from * n_ + to] = w;
  }

  double out_flux(std::size_t from) const {
    double s = 0.0;
    for (std::size_t to = 0; to < n_; ++to) s += flow_[from * n_ + to];
    return s;
  }

  double in_flux(std::size_t to) const {
    double s = 0.0;
    for (std::size_t from = 0; from < n_; ++from) s += flow_[from * n_ + to];
    return s;
  }

  FluxMatrix scaled(double c) const {
    FluxMatrix out = *this;
    for (auto& v : out.flow_) v *= c;
    return out;
  }

  std::span<const double> row(std::size_t from) const { return {flow_.data() + from * n_, n_}; }

  friend bool operator==(const FluxMatrix&, const FluxMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> flow_;
};

struct Edge {
  std::string from;
  std::string to;
  double weight = 0.0;
};

enum class EdgeMode { Directed, Undirected };

struct FluxBuild {
  FluxMatrix flux;
  std::size_t self_loops = 0;  // self-loop records dropped
};

inline std::unordered_map<std::string, std::size_t> index_regions(std::span<const Region> regions) {
  std::unordered_map<std::string, std::size_t> idx;
  idx.reserve(regions.size());
  for (std::size_t i = 0; i < regions.size(); ++i) idx.emplace(regions[i].id, i);
  return idx;
}

/// Aggregates an edge list: duplicates summed, self-loops counted and
/// dropped, undirected records expanded into both directions.
inline FluxBuild build_flux(std::span<const Edge> edges, std::span<const Region> regions,
                            EdgeMode mode = EdgeMode::Directed) {
  const auto idx = index_regions(regions);
  FluxBuild out{FluxMatrix(regions.size()), 0};
  // Accumulate in a separate buffer: FluxMatrix::set rejects diagonal writes.
  std::vector<double> acc(regions.size() * regions.size(), 0.0);
  const auto n = regions.size();
  for (const auto& e : edges) {
    auto a = idx.find(e.from);
    if (a == idx.end()) throw Error(ErrorCode::UnknownRegionId, "edge endpoint '" + e.from + "'");
    auto b = idx.find(e.to);
    if (b == idx.end()) throw Error(ErrorCode::UnknownRegionId, "edge endpoint '" + e.to + "'");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw Error(ErrorCode::NegativeWeight, "edge " + e.from + "->" + e.to + " has invalid weight");
    }
    if (a->second == b->second) {
      ++out.self_loops;
      continue;
    }
    acc[a->second * n + b->second] += e.weight;
    if (mode == EdgeMode::Undirected) acc[b->second * n + a->second] += e.weight;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) out.flux.set(i, j, acc[i * n + j]);
    }
  }
  return out;
}

/// Edge list with header `from,to,weight`.
inline std::vector<Edge> parse_edges(const csv::Table& table) {
  const auto c_from = table.require_column("from");
  const auto c_to = table.require_column("to");
  const auto c_w = table.require_column("weight");
  std::vector<Edge> edges;
  edges.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    if (f.size() != table.header.size()) {
      throw Error(ErrorCode::ParseError, "wrong field count at line " + std::to_string(row.line));
    }
    auto w = csv::parse_double(f[c_w]);
    if (!w) throw Error(ErrorCode::ParseError, "unparseable weight at line " + std::to_string(row.line));
    edges.push_back(Edge{std::string(csv::trim(f[c_from])), std::string(csv::trim(f[c_to])), *w});
  }
  return edges;
}

/// P(dest | origin); columns indexed by origin sum to one unless the origin
/// has no out-flux, in which case the column is all zero and listed in
/// `sinks`.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(std::size_t n) : n_(n), p_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t dest, std::size_t origin) const { return p_[origin * n_ + dest]; }
  const std::vector<std::size_t>& sinks() const noexcept { return sinks_; }

 private:
  friend TransitionMatrix derive_transitions(const FluxMatrix&);
  std::size_t n_ = 0;
  std::vector<double> p_;  // origin-major
  std::vector<std::size_t> sinks_;
};

inline TransitionMatrix derive_transitions(const FluxMatrix& flux) {
  const auto n = flux.size();
  TransitionMatrix t(n);
  for (std::size_t origin = 0; origin < n; ++origin) {
    const double total = flux.out_flux(origin);
    if (total <= 0.0) {
      t.sinks_.push_back(origin);
      continue;
    }
    for (std::size_t dest = 0; dest < n; ++dest) {
      if (dest != origin) t.p_[origin * n + dest] = flux.flow(origin, dest) / total;
    }
  }
  return t;
}

/// Per-capita rates w(from -> to) = flow(from -> to) / N_from.
class CouplingMatrix {
 public:
  CouplingMatrix() = default;
  explicit CouplingMatrix(std::size_t n) : n_(n), w_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t from, std::size_t to) const { return w_[from * n_ + to]; }

 private:
  friend CouplingMatrix derive_coupling(const FluxMatrix&, std::span<const Region>);
  std::size_t n_ = 0;
  std::vector<double> w_;
};

inline CouplingMatrix derive_coupling(const FluxMatrix& flux, std::span<const Region> regions) {
  if (regions.size() != flux.size()) {
    throw Error(ErrorCode::InvalidParameter, "flux dimension does not match region count");
  }
  const auto n = flux.size();
  CouplingMatrix c(n);
  for (std::size_t from = 0; from < n; ++from) {
    const double pop = regions[from].population;
    if (!(pop > 0.0)) throw Error(ErrorCode::NonPositivePopulation, "region '" + regions[from].id + "'");
    for (std::size_t to = 0; to < n; ++to) c.w_[from * n + to] = flux.flow(from, to) / pop;
  }
  return c;
}

struct GraphDiagnostics {
  std::vector<std::size_t> sinks;     // no out-flux
  std::vector<std::size_t> isolated;  // neither in- nor out-flux
};

/// Immutable region graph. Derived matrices are computed at construction;
/// use with_flux() to obtain a graph over a different flux matrix.
class RegionGraph {
 public:
  struct OutEdge {
    std::size_t to;
    double probability;  // P(to | from)
    double rate;         // w(from -> to)
  };

  RegionGraph() = default;

  RegionGraph(std::vector<Region> regions, FluxMatrix flux)
      : regions_(load_regions(std::move(regions))), flux_(std::move(flux)) {
    if (flux_.size() != regions_.size()) {
      throw Error(ErrorCode::InvalidParameter, "flux dimension does not match region count");
    }
    index_ = index_regions(regions_);
    transitions_ = derive_transitions(flux_);
    coupling_ = derive_coupling(flux_, regions_);

    const auto n = regions_.size();
    lex_rank_.resize(n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return regions_[a].id < regions_[b].id; });
    for (std::size_t r = 0; r < n; ++r) lex_rank_[order[r]] = r;
    by_id_ = std::move(order);

    out_edges_.resize(n);
    for (std::size_t from = 0; from < n; ++from) {
      for (std::size_t to = 0; to < n; ++to) {
        if (from != to && flux_.flow(from, to) > 0.0) {
          out_edges_[from].push_back(OutEdge{to, transitions_(to, from), coupling_(from, to)});
        }
      }
    }
    diagnostics_.sinks = transitions_.sinks();
    for (std::size_t i = 0; i < n; ++i) {
      if (flux_.out_flux(i) <= 0.0 && flux_.in_flux(i) <= 0.0) diagnostics_.isolated.push_back(i);
    }
  }

  RegionGraph with_flux(FluxMatrix flux) const { return RegionGraph(regions_, std::move(flux)); }

  std::size_t size() const noexcept { return regions_.size(); }
  const std::vector<Region>& regions() const noexcept { return regions_; }
  const Region& region(std::size_t i) const { return regions_[i]; }
  const FluxMatrix& flux() const noexcept { return flux_; }
  const TransitionMatrix& transitions() const noexcept { return transitions_; }
  const CouplingMatrix& coupling() const noexcept { return coupling_; }
  const GraphDiagnostics& diagnostics() const noexcept { return diagnostics_; }
  std::span<const OutEdge> out_edges(std::size_t from) const { return out_edges_[from]; }

  std::optional<std::size_t> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view id) const {
    if (auto i = find(id)) return *i;
    throw Error(ErrorCode::UnknownRegionId, "region '" + std::string(id) + "'");
  }

  /// Position of region i in lexicographic id order; used for tie-breaking.
  std::size_t lex_rank(std::size_t i) const { return lex_rank_[i]; }
  /// Region indices sorted by id.
  const std::vector<std::size_t>& by_id() const noexcept { return by_id_; }

 private:
  std::vector<Region> regions_;
  FluxMatrix flux_;
  TransitionMatrix transitions_;
  CouplingMatrix coupling_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> lex_rank_;
  std::vector<std::size_t> by_id_;
  std::vector<std::vector<OutEdge>> out_edges_;
  GraphDiagnostics diagnostics_;
};

}  // namespace hgeo
