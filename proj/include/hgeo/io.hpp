#pragma once

// JSON file formats: graph bundle, scenario config, radial layout and
// arrival comparison. Floating-point values are rounded to nine
// significant digits before serialisation so output files are stable.

#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hgeo/csv.hpp"
#include "hgeo/effdist.hpp"
#include "hgeo/error.hpp"
#include "hgeo/region_graph.hpp"
#include "hgeo/source_infer.hpp"

namespace hgeo::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kBundleFormat = "hgeo.graph-bundle";
inline constexpr int kBundleVersion = 1;

inline double round9(double v) { return std::strtod(csv::format_number(v).c_str(), nullptr); }

inline json parse_json(std::istream& in) {
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

struct BundleInfo {
  EdgeMode edge_mode = EdgeMode::Directed;
  std::size_t self_loops_dropped = 0;
};

/// Regions and flux are authoritative; transitions and coupling are written
/// for inspection and recomputed on load. Matrices are row = origin:
/// flux[a][b] = flow(a -> b), transitions[n][m] = P(m | n),
/// coupling[a][b] = w(a -> b).
inline json bundle_to_json(const RegionGraph& g, const BundleInfo& info = {}) {
  const auto n = g.size();
  json regions = json::array();
  for (const auto& r : g.regions()) {
    regions.push_back({{"id", r.id},
                       {"name", r.name},
                       {"lat", round9(r.lat)},
                       {"lon", round9(r.lon)},
                       {"population", round9(r.population)}});
  }
  json flux = json::array(), trans = json::array(), coup = json::array();
  for (std::size_t a = 0; a < n; ++a) {
    json fr = json::array(), tr = json::array(), cr = json::array();
    for (std::size_t b = 0; b < n; ++b) {
      fr.push_back(round9(g.flux().flow(a, b)));
      tr.push_back(round9(g.transitions()(b, a)));
      cr.push_back(round9(g.coupling()(a, b)));
    }
    flux.push_back(std::move(fr));
    trans.push_back(std::move(tr));
    coup.push_back(std::move(cr));
  }
  auto ids = [&](const std::vector<std::size_t>& v) {
    json out = json::array();
    for (auto i : v) out.push_back(g.region(i).id);
    return out;
  };
  return {{"format", kBundleFormat},
          {"version", kBundleVersion},
          {"node_count", n},
          {"regions", std::move(regions)},
          {"flux", std::move(flux)},
          {"transitions", std::move(trans)},
          {"coupling", std::move(coup)},
          {"diagnostics",
           {{"sink_regions", ids(g.diagnostics().sinks)},
            {"isolated_regions", ids(g.diagnostics().isolated)},
            {"self_loops_dropped", info.self_loops_dropped},
            {"edge_mode", info.edge_mode == EdgeMode::Directed ? "directed" : "undirected"}}}};
}

inline RegionGraph bundle_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kBundleFormat) {
      throw Error(ErrorCode::ParseError, "not a graph bundle");
    }
    if (j.at("version").get<int>() != kBundleVersion) {
      throw Error(ErrorCode::ParseError, "unsupported bundle version");
    }
    std::vector<Region> regions;
    for (const auto& r : j.at("regions")) {
      regions.push_back(Region{r.at("id").get<std::string>(), r.at("name").get<std::string>(),
                               r.at("lat").get<double>(), r.at("lon").get<double>(),
                               r.at("population").get<double>()});
    }
    const auto& rows = j.at("flux");
    if (rows.size() != regions.size()) throw Error(ErrorCode::ParseError, "flux row count mismatch");
    FluxMatrix flux(regions.size());
    for (std::size_t a = 0; a < regions.size(); ++a) {
      if (rows[a].size() != regions.size()) throw Error(ErrorCode::ParseError, "flux column count mismatch");
      for (std::size_t b = 0; b < regions.size(); ++b) {
        if (a != b) flux.set(a, b, rows[a][b].get<double>());
      }
    }
    return RegionGraph(std::move(regions), std::move(flux));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed graph bundle: ") + e.what());
  }
}

/// Simulation scenario. `seed_region` may be omitted, in which case the
/// caller picks one.
struct Scenario {
  double alpha = 0.0;
  double beta = 0.0;
  double dt = 0.01;
  double horizon = 1.0;
  std::optional<std::string> seed_region;
  double initial_infected = 1.0;
  double epsilon = 0.01;
};

inline Scenario scenario_from_json(const json& j) {
  try {
    Scenario s;
    s.alpha = j.at("alpha").get<double>();
    s.beta = j.value("beta", 0.0);
    s.dt = j.at("dt").get<double>();
    s.horizon = j.at("horizon").get<double>();
    if (j.contains("seed_region") && !j["seed_region"].is_null()) s.seed_region = j["seed_region"].get<std::string>();
    s.initial_infected = j.at("initial_infected").get<double>();
    s.epsilon = j.value("epsilon", 0.01);
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed scenario: ") + e.what());
  }
}

inline json scenario_to_json(const Scenario& s) {
  return {{"alpha", round9(s.alpha)},
          {"beta", round9(s.beta)},
          {"dt", round9(s.dt)},
          {"horizon", round9(s.horizon)},
          {"seed_region", s.seed_region ? json(*s.seed_region) : json(nullptr)},
          {"initial_infected", round9(s.initial_infected)},
          {"epsilon", round9(s.epsilon)}};
}

/// `{source, nodes:[{id, r, theta}], edges:[{parent, child}]}`
inline json layout_to_json(const RadialLayout& layout, const RegionGraph& g) {
  json nodes = json::array(), edges = json::array();
  for (const auto& nd : layout.nodes) {
    nodes.push_back({{"id", g.region(nd.index).id}, {"r", round9(nd.r)}, {"theta", round9(nd.theta)}});
  }
  for (const auto& [p, c] : layout.edges) edges.push_back({{"parent", g.region(p).id}, {"child", g.region(c).id}});
  return {{"source", g.region(layout.source).id}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

/// `{rho, common_regions}`
inline json comparison_to_json(const ArrivalComparison& c) {
  return {{"rho", round9(c.rho)}, {"common_regions", c.common_regions}};
}

inline void write_json(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

}  // namespace hgeo::io
