#pragma once

// Effective distances: every edge n -> m is given the length 1 - ln P(m | n),
// so the most probable route is the shortest one, and path lengths add.
// Shortest-path trees over these lengths define the hidden geometry seen from
// a chosen origin.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "hgeo/arrivals.hpp"
#include "hgeo/csv.hpp"
#include "hgeo/error.hpp"
#include "hgeo/parallel.hpp"
#include "hgeo/region_graph.hpp"

namespace hgeo {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();
inline constexpr double kEarthRadiusKm = 6371.0;

/// 1 - ln(p) for p in (0, 1]; always >= 1.
inline double edge_length(double p) {
  if (!(p > 0.0)) throw Error(ErrorCode::NonPositiveProbability, "edge length needs p > 0");
  if (p > 1.0) throw Error(ErrorCode::InvalidParameter, "edge length needs p <= 1");
  return 1.0 - std::log(p);
}

struct EffectiveDistanceField {
  std::size_t source = 0;
  std::vector<double> distance;                       // kUnreachable if no path
  std::vector<std::optional<std::size_t>> predecessor;  // empty at the source and unreachable nodes

  bool reachable(std::size_t v) const { return std::isfinite(distance[v]); }
};

/// Dijkstra over effective edge lengths following the spreading direction.
/// Equal tentative distances are settled in id order, and an equal-length
/// alternative route replaces the predecessor when its last hop comes from a
/// lexicographically smaller id, so trees are deterministic.
inline EffectiveDistanceField shortest_path_field(const RegionGraph& graph, std::size_t source) {
  const auto n = graph.size();
  if (source >= n) throw Error(ErrorCode::UnknownRegionId, "source index out of range");

  EffectiveDistanceField field;
  field.source = source;
  field.distance.assign(n, kUnreachable);
  field.predecessor.assign(n, std::nullopt);
  std::vector<bool> settled(n, false);

  using Entry = std::tuple<double, std::size_t, std::size_t>;  // distance, lex rank, node
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  field.distance[source] = 0.0;
  heap.emplace(0.0, graph.lex_rank(source), source);

  while (!heap.empty()) {
    auto [d, rank, u] = heap.top();
    heap.pop();
    if (settled[u] || d > field.distance[u]) continue;
    settled[u] = true;
    for (const auto& e : graph.out_edges(u)) {
      if (settled[e.to]) continue;
      const double nd = d + edge_length(e.probability);
      auto& best = field.distance[e.to];
      auto& pred = field.predecessor[e.to];
      if (nd < best) {
        best = nd;
        pred = u;
        heap.emplace(nd, graph.lex_rank(e.to), e.to);
      } else if (nd == best && pred && graph.lex_rank(u) < graph.lex_rank(*pred)) {
        pred = u;
      }
    }
  }
  return field;
}

inline EffectiveDistanceField shortest_path_field(const RegionGraph& graph, std::string_view source_id) {
  return shortest_path_field(graph, graph.index_of(source_id));
}

/// Row-major square matrix; (s, v) is the effective distance from s to v.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, kUnreachable) {}
  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t s, std::size_t v) const { return d_[s * n_ + v]; }
  double& operator()(std::size_t s, std::size_t v) { return d_[s * n_ + v]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

/// One independent shortest-path field per source, evaluated as a parallel
/// map over sources.
inline DistanceMatrix all_pairs_effective(const RegionGraph& graph, unsigned threads = 0) {
  const auto n = graph.size();
  auto rows = parallel_map(n, [&](std::size_t s) { return shortest_path_field(graph, s).distance; }, threads);
  DistanceMatrix m(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t v = 0; v < n; ++v) m(s, v) = rows[s][v];
  }
  return m;
}

/// Great-circle distance in km (haversine, R = 6371.0 km).
inline double geographic_distance(const Region& a, const Region& b) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double phi1 = a.lat * deg;
  const double phi2 = b.lat * deg;
  const double dphi = (b.lat - a.lat) * deg;
  const double dlambda = (b.lon - a.lon) * deg;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

// ---------------------------------------------------------------------------
// Radial layout

struct RadialLayout {
  struct Node {
    std::size_t index;
    double r;
    double theta;         // radians, [0, 2*pi)
    double sector_begin;  // angular span owned by this node's subtree
    double sector_end;
  };
  std::size_t source = 0;
  std::vector<Node> nodes;  // reachable nodes in depth-first order, root first
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (parent, child)
};

/// Radius is the effective distance. Each subtree owns an angular sector
/// proportional to its leaf count; children are visited in id order and a
/// node sits at the middle of its sector. The root is placed at theta = 0.
inline RadialLayout radial_layout(const EffectiveDistanceField& field, const RegionGraph& graph) {
  const auto n = graph.size();
  if (field.distance.size() != n) throw Error(ErrorCode::InvalidParameter, "field does not match graph");

  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t id_pos = 0; id_pos < n; ++id_pos) {
    const auto v = graph.by_id()[id_pos];
    if (field.predecessor[v]) children[*field.predecessor[v]].push_back(v);
  }

  // Leaf counts via reverse pre-order.
  std::vector<std::size_t> order;
  std::vector<std::size_t> stack{field.source};
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (auto it = children[v].rbegin(); it != children[v].rend(); ++it) stack.push_back(*it);
  }
  std::vector<std::size_t> leaves(n, 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto v = *it;
    if (children[v].empty()) {
      leaves[v] = 1;
    } else {
      for (auto c : children[v]) leaves[v] += leaves[c];
    }
  }

  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> begin(n, 0.0), end(n, 0.0);
  begin[field.source] = 0.0;
  end[field.source] = two_pi;

  RadialLayout layout;
  layout.source = field.source;
  for (auto v : order) {
    double theta = v == field.source ? 0.0 : 0.5 * (begin[v] + end[v]);
    if (theta >= two_pi) theta -= two_pi;
    layout.nodes.push_back({v, field.distance[v], theta, begin[v], end[v]});
    double cursor = begin[v];
    const double span = end[v] - begin[v];
    for (auto c : children[v]) {
      begin[c] = cursor;
      cursor += span * static_cast<double>(leaves[c]) / static_cast<double>(leaves[v]);
      end[c] = cursor;
      layout.edges.emplace_back(v, c);
    }
  }
  return layout;
}

// ---------------------------------------------------------------------------
// Stage histogram

struct StageHistogram {
  struct Stage {
    double t_begin = 0.0;
    double t_end = 0.0;
    std::vector<std::size_t> regions;  // newly arrived in this slice
    std::vector<std::size_t> counts;   // per distance bin
    double mean_distance = std::numeric_limits<double>::quiet_NaN();
  };
  double bin_width = 1.0;
  std::size_t bins = 0;
  std::vector<Stage> stages;
  std::vector<std::size_t> unreachable;  // arrived but no finite distance
};

/// Splits [min, max] arrival into k equal slices (the last one closed) and
/// histograms the effective distance of the regions arriving in each slice.
/// Bin j covers [j * bin_width, (j + 1) * bin_width).
inline StageHistogram stage_histogram(const EffectiveDistanceField& field, const RegionGraph& graph,
                                      const ArrivalTable& arrivals, std::size_t k, double bin_width) {
  if (arrivals.empty()) throw Error(ErrorCode::EmptyArrivals, "no arrivals to stage");
  if (k < 1) throw Error(ErrorCode::InvalidParameter, "need at least one stage");
  if (!(bin_width > 0.0)) throw Error(ErrorCode::InvalidParameter, "bin width must be > 0");

  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -t_min;
  for (const auto& [id, t] : arrivals) {
    graph.index_of(id);
    t_min = std::min(t_min, t);
    t_max = std::max(t_max, t);
  }
  const double slice = (t_max - t_min) / static_cast<double>(k);

  StageHistogram h;
  h.bin_width = bin_width;
  h.stages.resize(k);
  for (std::size_t s = 0; s < k; ++s) {
    h.stages[s].t_begin = t_min + slice * static_cast<double>(s);
    h.stages[s].t_end = s + 1 == k ? t_max : t_min + slice * static_cast<double>(s + 1);
  }

  double max_d = 0.0;
  for (const auto& [id, t] : arrivals) {
    const auto v = graph.index_of(id);
    if (!field.reachable(v)) {
      h.unreachable.push_back(v);
      continue;
    }
    std::size_t s = 0;
    if (slice > 0.0) {
      s = static_cast<std::size_t>(std::floor((t - t_min) / slice));
      s = std::min(s, k - 1);
    }
    h.stages[s].regions.push_back(v);
    max_d = std::max(max_d, field.distance[v]);
  }

  h.bins = static_cast<std::size_t>(std::floor(max_d / bin_width)) + 1;
  for (auto& st : h.stages) {
    st.counts.assign(h.bins, 0);
    double sum = 0.0;
    for (auto v : st.regions) {
      auto b = std::min(h.bins - 1, static_cast<std::size_t>(std::floor(field.distance[v] / bin_width)));
      ++st.counts[b];
      sum += field.distance[v];
    }
    if (!st.regions.empty()) st.mean_distance = sum / static_cast<double>(st.regions.size());
  }
  return h;
}

// ---------------------------------------------------------------------------
// Exports

/// CSV `source,target,effective_distance`; `inf` marks unreachable targets.
/// Targets are written in id order.
inline void write_distances_csv(std::ostream& out, const RegionGraph& graph,
                                std::span<const EffectiveDistanceField> fields) {
  out << "source,target,effective_distance\n";
  for (const auto& f : fields) {
    for (auto v : graph.by_id()) {
      out << csv::escape(graph.region(f.source).id) << ',' << csv::escape(graph.region(v).id) << ','
          << csv::format_number(f.distance[v]) << '\n';
    }
  }
}

/// CSV `stage,t_begin,t_end,bin_lower,bin_upper,count`, one row per
/// (stage, bin); stages are numbered from 1.
inline void write_stage_histogram_csv(std::ostream& out, const StageHistogram& h) {
  out << "stage,t_begin,t_end,bin_lower,bin_upper,count\n";
  for (std::size_t s = 0; s < h.stages.size(); ++s) {
    const auto& st = h.stages[s];
    for (std::size_t b = 0; b < h.bins; ++b) {
      out << s + 1 << ',' << csv::format_number(st.t_begin) << ',' << csv::format_number(st.t_end) << ','
          << csv::format_number(h.bin_width * static_cast<double>(b)) << ','
          << csv::format_number(h.bin_width * static_cast<double>(b + 1)) << ',' << st.counts[b] << '\n';
    }
  }
}

}  // namespace hgeo
