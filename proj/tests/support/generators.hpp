#pragma once

// Random graph generators and brute-force oracles shared by the unit and
// acceptance suites. Oracles recompute everything from the raw flux so they
// never share a code path with the library routine under test.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hgeo/region_graph.hpp"

namespace hgeo::testing {

using Rng = std::mt19937_64;

inline std::string region_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "R%03zu", i);
  return buf;
}

/// Uniform on the sphere.
inline std::pair<double, double> random_centroid(Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> lon(-179.999, 180.0);
  const double lat = std::asin(u(rng)) * 180.0 / std::numbers::pi;
  return {lat, lon(rng)};
}

/// Directed graph on n nodes; each ordered pair carries a flow with
/// probability `density`, weight uniform in (0.1, 10).
inline RegionGraph random_directed_graph(Rng& rng, std::size_t n, double density) {
  std::vector<Region> regions;
  std::uniform_real_distribution<double> pop(10.0, 1000.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto [lat, lon] = random_centroid(rng);
    regions.push_back({region_name(i), region_name(i), lat, lon, pop(rng)});
  }
  std::bernoulli_distribution edge(density);
  std::uniform_real_distribution<double> w(0.1, 10.0);
  FluxMatrix flux(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b && edge(rng)) flux.set(a, b, w(rng));
    }
  }
  return RegionGraph(std::move(regions), std::move(flux));
}

struct OutbreakGraphSpec {
  std::size_t nodes = 50;
  std::size_t extra_edges = 75;      // on top of a random spanning tree
  double weight_sigma = 1.0;         // lognormal spread of tie strengths
  double mobility_rate = 1e-3;       // per-capita out-rate, per unit time
};

/// Connected undirected tie graph expanded into symmetric flows (a random
/// spanning tree plus extra random ties, lognormal strengths). Populations
/// are set so every region has the same per-capita out-rate, which keeps
/// region populations stationary under the coupling. Centroids are random
/// and unrelated to the topology.
inline RegionGraph outbreak_graph(Rng& rng, const OutbreakGraphSpec& spec = {}) {
  const auto n = spec.nodes;
  std::lognormal_distribution<double> strength(0.0, spec.weight_sigma);
  std::vector<double> acc(n * n, 0.0);
  auto tie = [&](std::size_t a, std::size_t b) {
    const double w = strength(rng);
    acc[a * n + b] += w;
    acc[b * n + a] += w;
  };
  for (std::size_t v = 1; v < n; ++v) {
    std::uniform_int_distribution<std::size_t> parent(0, v - 1);
    tie(parent(rng), v);
  }
  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  for (std::size_t e = 0; e < spec.extra_edges;) {
    const auto a = any(rng), b = any(rng);
    if (a == b || acc[a * n + b] > 0.0) continue;
    tie(a, b);
    ++e;
  }

  FluxMatrix flux(n);
  std::vector<Region> regions;
  for (std::size_t a = 0; a < n; ++a) {
    double out = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b) {
        flux.set(a, b, acc[a * n + b]);
        out += acc[a * n + b];
      }
    }
    auto [lat, lon] = random_centroid(rng);
    regions.push_back({region_name(a), region_name(a), lat, lon, out / spec.mobility_rate});
  }
  return RegionGraph(std::move(regions), std::move(flux));
}

/// Shortest effective distance by exhaustive enumeration of simple paths,
/// with lengths recomputed from the raw flux.
inline std::vector<double> brute_force_distances(const FluxMatrix& flux, std::size_t source) {
  const auto n = flux.size();
  std::vector<double> out_total(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b) out_total[a] += flux.flow(a, b);
    }
  }
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<bool> on_path(n, false);
  auto dfs = [&](auto&& self, std::size_t u, double length) -> void {
    best[u] = std::min(best[u], length);
    on_path[u] = true;
    for (std::size_t v = 0; v < n; ++v) {
      if (v == u || on_path[v] || flux.flow(u, v) <= 0.0) continue;
      self(self, v, length + 1.0 - std::log(flux.flow(u, v) / out_total[u]));
    }
    on_path[u] = false;
  };
  dfs(dfs, source, 0.0);
  return best;
}

}  // namespace hgeo::testing
