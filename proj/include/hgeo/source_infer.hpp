#pragma once

// Source inference: for every candidate origin, regress arrival time on
// effective distance from that origin and rank candidates by R^2. The true
// origin is the one from which the spreading looks like a wave with a
// constant effective velocity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hgeo/arrivals.hpp"
#include "hgeo/csv.hpp"
#include "hgeo/effdist.hpp"
#include "hgeo/error.hpp"
#include "hgeo/parallel.hpp"
#include "hgeo/region_graph.hpp"

namespace hgeo {

struct FitPoint {
  double x = 0.0;  // effective distance
  double t = 0.0;  // arrival time
  double weight = 1.0;
};

struct FitResult {
  double slope = 0.0;      // time per unit effective distance
  double intercept = 0.0;  // time
  double r_squared = 0.0;  // coefficient of determination, [0, 1]
  std::size_t n_points = 0;
  double ss_res = 0.0;  // (weighted) residual sum of squares
  double rmse = 0.0;    // sqrt(ss_res / total weight)
};

/// Weighted least squares t = slope * x + intercept (unit weights give
/// ordinary least squares). R^2 = 1 - SS_res / SS_tot, and 0 when all t are
/// equal. If all x coincide the slope is 0 and the intercept is the mean t.
inline FitResult linear_fit(std::span<const FitPoint> points) {
  if (points.size() < 2) throw Error(ErrorCode::TooFewPoints, "linear fit needs at least 2 points");
  double sw = 0.0, sx = 0.0, st = 0.0;
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.t) || !(p.weight > 0.0)) {
      throw Error(ErrorCode::InvalidParameter, "fit points must be finite with positive weight");
    }
    sw += p.weight;
    sx += p.weight * p.x;
    st += p.weight * p.t;
  }
  const double mx = sx / sw;
  const double mt = st / sw;
  double sxx = 0.0, sxt = 0.0, stt = 0.0;
  for (const auto& p : points) {
    const double dx = p.x - mx;
    const double dt = p.t - mt;
    sxx += p.weight * dx * dx;
    sxt += p.weight * dx * dt;
    stt += p.weight * dt * dt;
  }

  FitResult fit;
  fit.n_points = points.size();
  fit.slope = sxx > 0.0 ? sxt / sxx : 0.0;
  fit.intercept = mt - fit.slope * mx;
  double ss_res = 0.0;
  for (const auto& p : points) {
    const double r = p.t - (fit.slope * p.x + fit.intercept);
    ss_res += p.weight * r * r;
  }
  fit.ss_res = ss_res;
  fit.rmse = std::sqrt(ss_res / sw);
  fit.r_squared = stt > 0.0 ? std::clamp(1.0 - ss_res / stt, 0.0, 1.0) : 0.0;
  return fit;
}

/// Non-overlapping windows [t0 + k w, t0 + (k + 1) w) aligned to the earliest
/// time; each nonempty window becomes one point at the (weighted) mean
/// distance and mean time, carrying the summed weight.
inline std::vector<FitPoint> window_smooth(std::span<const FitPoint> sorted_points, double window_duration) {
  if (sorted_points.empty()) throw Error(ErrorCode::EmptyInput, "nothing to smooth");
  if (!(window_duration > 0.0)) throw Error(ErrorCode::InvalidParameter, "window duration must be > 0");
  const double t0 = sorted_points.front().t;

  std::vector<FitPoint> out;
  std::size_t current = 0;
  double sw = 0.0, sx = 0.0, st = 0.0;
  auto flush = [&] {
    if (sw > 0.0) out.push_back({sx / sw, st / sw, sw});
    sw = sx = st = 0.0;
  };
  double prev_t = t0;
  for (const auto& p : sorted_points) {
    if (p.t < prev_t) throw Error(ErrorCode::InvalidParameter, "points must be sorted by time");
    prev_t = p.t;
    const auto k = static_cast<std::size_t>(std::floor((p.t - t0) / window_duration));
    if (k != current) {
      flush();
      current = k;
    }
    sw += p.weight;
    sx += p.weight * p.x;
    st += p.weight * p.t;
  }
  flush();
  return out;
}

struct ScoreOptions {
  /// Smoothing window in arrival-time units; nullopt fits the raw points.
  std::optional<double> window_duration;
  /// Weight each region by ln(1 + N_n).
  bool population_weighting = false;
};

/// (D_eff(candidate, n), T_a(n)) for regions with a present arrival and a
/// finite distance, sorted by time then distance.
inline std::vector<FitPoint> candidate_points(const RegionGraph& graph, const EffectiveDistanceField& field,
                                              const ArrivalTable& arrivals, bool population_weighting = false) {
  std::vector<FitPoint> pts;
  pts.reserve(arrivals.size());
  for (const auto& [id, t] : arrivals) {
    const auto v = graph.index_of(id);
    if (!field.reachable(v)) continue;
    const double w = population_weighting ? std::log1p(graph.region(v).population) : 1.0;
    pts.push_back({field.distance[v], t, w});
  }
  std::sort(pts.begin(), pts.end(),
            [](const FitPoint& a, const FitPoint& b) { return a.t != b.t ? a.t < b.t : a.x < b.x; });
  return pts;
}

inline FitResult score_candidate(const RegionGraph& graph, const ArrivalTable& arrivals, std::size_t candidate,
                                 const ScoreOptions& options = {}) {
  const auto field = shortest_path_field(graph, candidate);
  auto pts = candidate_points(graph, field, arrivals, options.population_weighting);
  if (pts.size() < 2) {
    throw Error(ErrorCode::TooFewPoints, "candidate '" + graph.region(candidate).id + "' reaches " +
                                             std::to_string(pts.size()) + " region(s) with arrivals");
  }
  if (options.window_duration) pts = window_smooth(pts, *options.window_duration);
  return linear_fit(pts);
}

inline FitResult score_candidate(const RegionGraph& graph, const ArrivalTable& arrivals, std::string_view candidate,
                                 const ScoreOptions& options = {}) {
  return score_candidate(graph, arrivals, graph.index_of(candidate), options);
}

struct SourceRanking {
  struct Entry {
    std::size_t candidate;
    FitResult fit;
  };
  struct Skipped {
    std::size_t candidate;
    std::string reason;
  };
  std::vector<Entry> entries;  // best first
  std::vector<Skipped> skipped;

  const Entry& best() const { return entries.front(); }

  /// 1-based rank of `candidate`, or nullopt when it was not scorable.
  std::optional<std::size_t> rank_of(std::size_t candidate) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].candidate == candidate) return i + 1;
    }
    return std::nullopt;
  }
};

/// Scores every region as a candidate origin (a parallel map over
/// candidates) and orders by R^2 descending, then residual sum ascending,
/// then id.
inline SourceRanking infer_source(const RegionGraph& graph, const ArrivalTable& arrivals,
                                  const ScoreOptions& options = {}, unsigned threads = 0) {
  for (const auto& [id, t] : arrivals) graph.index_of(id);

  struct Outcome {
    std::optional<FitResult> fit;
    std::string reason;
  };
  auto outcomes = parallel_map(
      graph.size(),
      [&](std::size_t c) -> Outcome {
        try {
          return {score_candidate(graph, arrivals, c, options), {}};
        } catch (const Error& e) {
          if (e.code() != ErrorCode::TooFewPoints) throw;
          return {std::nullopt, e.what()};
        }
      },
      threads);

  SourceRanking ranking;
  for (std::size_t c = 0; c < outcomes.size(); ++c) {
    if (outcomes[c].fit) {
      ranking.entries.push_back({c, *outcomes[c].fit});
    } else {
      ranking.skipped.push_back({c, outcomes[c].reason});
    }
  }
  if (ranking.entries.empty()) throw Error(ErrorCode::NoScorableCandidate, "no candidate could be scored");
  std::sort(ranking.entries.begin(), ranking.entries.end(), [&](const auto& a, const auto& b) {
    if (a.fit.r_squared != b.fit.r_squared) return a.fit.r_squared > b.fit.r_squared;
    if (a.fit.ss_res != b.fit.ss_res) return a.fit.ss_res < b.fit.ss_res;
    return graph.lex_rank(a.candidate) < graph.lex_rank(b.candidate);
  });
  return ranking;
}

/// Average (fractional) ranks, 1-based.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const auto n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

struct ArrivalComparison {
  double rho = 0.0;
  std::size_t common_regions = 0;
};

/// Spearman rank correlation over regions present in both tables, with
/// average ranks for ties. A table that is constant over the common regions
/// has no defined correlation and yields rho = 0.
inline ArrivalComparison compare_arrivals(const ArrivalTable& a, const ArrivalTable& b) {
  std::vector<double> ta, tb;
  for (const auto& [id, t] : a) {
    if (auto u = b.at(id)) {
      ta.push_back(t);
      tb.push_back(*u);
    }
  }
  if (ta.size() < 3) {
    throw Error(ErrorCode::TooFewCommonRegions,
                "need at least 3 common regions, found " + std::to_string(ta.size()));
  }
  const auto ra = average_ranks(ta);
  const auto rb = average_ranks(tb);
  return {pearson(ra, rb), ta.size()};
}

// ---------------------------------------------------------------------------
// Exports

/// CSV `candidate,slope,intercept,r_squared,n_points`, best first.
inline void write_ranking_csv(std::ostream& out, const SourceRanking& ranking, const RegionGraph& graph) {
  out << "candidate,slope,intercept,r_squared,n_points\n";
  for (const auto& e : ranking.entries) {
    out << csv::escape(graph.region(e.candidate).id) << ',' << csv::format_number(e.fit.slope) << ','
        << csv::format_number(e.fit.intercept) << ',' << csv::format_number(e.fit.r_squared) << ','
        << e.fit.n_points << '\n';
  }
}

struct ScatterRow {
  std::size_t region;
  double geographic_km;
  double effective_distance;
  std::optional<double> arrival;
};

/// Geographic and effective distance from `source` alongside the arrival
/// time, one row per region in id order.
inline std::vector<ScatterRow> distance_scatter(const RegionGraph& graph, const ArrivalTable& arrivals,
                                                std::size_t source) {
  const auto field = shortest_path_field(graph, source);
  std::vector<ScatterRow> rows;
  for (auto v : graph.by_id()) {
    rows.push_back({v, geographic_distance(graph.region(source), graph.region(v)), field.distance[v],
                    arrivals.at(graph.region(v).id)});
  }
  return rows;
}

/// CSV `region_id,geographic_km,effective_distance,arrival_time`; missing
/// arrivals are left empty.
inline void write_scatter_csv(std::ostream& out, std::span<const ScatterRow> rows, const RegionGraph& graph) {
  out << "region_id,geographic_km,effective_distance,arrival_time\n";
  for (const auto& r : rows) {
    out << csv::escape(graph.region(r.region).id) << ',' << csv::format_number(r.geographic_km) << ','
        << csv::format_number(r.effective_distance) << ',' << (r.arrival ? csv::format_number(*r.arrival) : "")
        << '\n';
  }
}

}  // namespace hgeo
