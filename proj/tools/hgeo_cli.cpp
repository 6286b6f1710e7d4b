// hgeo: command-line driver for the effective-distance pipeline.
//
//   hgeo build     --regions regions.csv --edges edges.csv [--undirected]
//   hgeo simulate  --graph graph.json --scenario scenario.json
//   hgeo arrivals  --graph graph.json (--events events.csv | --coarse series.csv --bin-width W)
//   hgeo infer     --graph graph.json --arrivals arrivals.csv
//   hgeo export    --graph graph.json --source ID --arrivals arrivals.csv
//   hgeo compare   a.csv b.csv
//
// Every command computes all of its outputs before writing any of them, and
// exits nonzero without touching the output directory on validation errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "hgeo/hgeo.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  std::optional<double> window_duration;
  std::optional<double> epsilon;
  double threshold = 1.0;
  bool undirected = false;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw hgeo::Error(hgeo::ErrorCode::IoError, "cannot open '" + path + "'");
  return in;
}

/// Staged output files; commit() writes temporaries first and renames them
/// into place only once every file has been written successfully.
class OutputSet {
 public:
  explicit OutputSet(std::string dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  void commit() const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw hgeo::Error(hgeo::ErrorCode::IoError, "cannot create '" + dir_ + "': " + ec.message());

    std::vector<std::pair<fs::path, fs::path>> staged;
    auto cleanup = [&] {
      for (const auto& [tmp, dst] : staged) fs::remove(tmp, ec);
    };
    for (const auto& [name, content] : files_) {
      const fs::path dst = fs::path(dir_) / name;
      fs::path tmp = dst;
      tmp += ".tmp";
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << content;
      out.close();
      staged.emplace_back(tmp, dst);
      if (!out) {
        cleanup();
        throw hgeo::Error(hgeo::ErrorCode::IoError, "cannot write '" + dst.string() + "'");
      }
    }
    for (const auto& [tmp, dst] : staged) {
      fs::rename(tmp, dst, ec);
      if (ec) {
        cleanup();
        throw hgeo::Error(hgeo::ErrorCode::IoError, "cannot move into '" + dst.string() + "': " + ec.message());
      }
    }
    for (const auto& [name, content] : files_) std::cout << "wrote " << (fs::path(dir_) / name).string() << '\n';
  }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

hgeo::RegionGraph load_bundle(const std::string& path) {
  auto in = open_input(path);
  return hgeo::io::bundle_from_json(hgeo::io::parse_json(in));
}

std::string ids_of(const hgeo::RegionGraph& g, const std::vector<std::size_t>& v) {
  std::string out;
  for (auto i : v) out += (out.empty() ? "" : " ") + g.region(i).id;
  return out.empty() ? "-" : out;
}

// --- build ------------------------------------------------------------------

struct BuildArgs {
  std::string regions;
  std::string edges;
};

void run_build(const BuildArgs& args, const GlobalOptions& global) {
  auto rin = open_input(args.regions);
  auto regions = hgeo::read_regions_csv(rin);
  auto ein = open_input(args.edges);
  const auto edges = hgeo::parse_edges(hgeo::csv::read(ein));
  const auto mode = global.undirected ? hgeo::EdgeMode::Undirected : hgeo::EdgeMode::Directed;
  auto built = hgeo::build_flux(edges, regions, mode);
  hgeo::RegionGraph graph(std::move(regions), std::move(built.flux));

  std::ostringstream out;
  hgeo::io::write_json(out, hgeo::io::bundle_to_json(graph, {mode, built.self_loops}));
  OutputSet outputs(global.output_dir);
  outputs.add("graph.json", out.str());
  outputs.commit();

  std::cout << "nodes: " << graph.size() << '\n'
            << "self-loops dropped: " << built.self_loops << '\n'
            << "sink regions: " << ids_of(graph, graph.diagnostics().sinks) << '\n'
            << "isolated regions: " << ids_of(graph, graph.diagnostics().isolated) << '\n';
}

// --- simulate -----------------------------------------------------------------

struct SimulateArgs {
  std::string graph;
  std::string scenario;
  std::size_t sample_every = 1;
};

void run_simulate(const SimulateArgs& args, const GlobalOptions& global) {
  const auto graph = load_bundle(args.graph);
  auto sin = open_input(args.scenario);
  auto scenario = hgeo::io::scenario_from_json(hgeo::io::parse_json(sin));
  if (global.epsilon) scenario.epsilon = *global.epsilon;
  if (graph.size() == 0) throw hgeo::Error(hgeo::ErrorCode::InvalidParameter, "graph has no regions");

  std::size_t seed;
  if (scenario.seed_region) {
    seed = graph.index_of(*scenario.seed_region);
  } else {
    std::mt19937_64 rng(global.seed);
    seed = std::uniform_int_distribution<std::size_t>(0, graph.size() - 1)(rng);
    std::cout << "seed region: " << graph.region(seed).id << '\n';
  }
  const auto kind = scenario.initial_infected == 0.0 ? hgeo::RunKind::Null : hgeo::RunKind::Outbreak;
  const hgeo::SIParams params{scenario.alpha, scenario.beta, scenario.dt, scenario.horizon};
  const auto traj = hgeo::simulate(graph, params, seed, scenario.initial_infected, kind);
  const auto arrivals = hgeo::arrival_times(traj, graph, scenario.epsilon);

  std::ostringstream traj_csv, arr_csv;
  hgeo::write_trajectory_csv(traj_csv, traj, graph, args.sample_every);
  hgeo::write_arrivals_csv(arr_csv, arrivals);
  OutputSet outputs(global.output_dir);
  outputs.add("trajectory.csv", traj_csv.str());
  outputs.add("arrivals.csv", arr_csv.str());
  outputs.commit();
  std::cout << "regions reached: " << arrivals.size() << '/' << graph.size() << '\n';
  if (traj.clamped() > 0) std::cout << "clamped round-off negatives: " << traj.clamped() << '\n';
}

// --- arrivals ---------------------------------------------------------------

struct ArrivalsArgs {
  std::string graph;
  std::string regions;
  std::string events;
  std::string coarse;
  double bin_width = 0.0;
  std::string time_unit = "seconds";
};

void run_arrivals(const ArrivalsArgs& args, const GlobalOptions& global) {
  hgeo::ArrivalTable table;
  if (!args.events.empty()) {
    std::vector<hgeo::Region> regions;
    if (!args.graph.empty()) {
      regions = load_bundle(args.graph).regions();
    } else if (!args.regions.empty()) {
      auto rin = open_input(args.regions);
      regions = hgeo::read_regions_csv(rin);
    } else {
      throw hgeo::Error(hgeo::ErrorCode::InvalidParameter, "--events needs --graph or --regions");
    }
    auto ein = open_input(args.events);
    const auto log = hgeo::read_events_csv(ein);
    const double unit = args.time_unit == "days" ? 86400.0 : args.time_unit == "hours" ? 3600.0 : 1.0;
    auto result = hgeo::first_arrivals(log.events, regions, unit);
    table = std::move(result.arrivals);
    std::cout << "events: " << log.events.size() << ", malformed rows: " << log.malformed
              << ", unassignable events: " << result.rejected << '\n';
  } else {
    if (!(args.bin_width > 0.0)) throw hgeo::Error(hgeo::ErrorCode::InvalidParameter, "--coarse needs --bin-width > 0");
    auto cin = open_input(args.coarse);
    const auto series = hgeo::read_coarse_csv(cin, args.bin_width);
    table = hgeo::arrivals_from_coarse(series, global.threshold);
    if (!args.graph.empty()) {
      const auto graph = load_bundle(args.graph);
      for (const auto& [id, t] : table) graph.index_of(id);
    }
  }

  std::ostringstream out;
  hgeo::write_arrivals_csv(out, table);
  OutputSet outputs(global.output_dir);
  outputs.add("arrivals.csv", out.str());
  outputs.commit();
  std::cout << "regions with arrivals: " << table.size() << '\n';
}

// --- infer --------------------------------------------------------------------

struct InferArgs {
  std::string graph;
  std::string arrivals;
  bool weight_population = false;
};

void run_infer(const InferArgs& args, const GlobalOptions& global) {
  const auto graph = load_bundle(args.graph);
  auto ain = open_input(args.arrivals);
  const auto arrivals = hgeo::read_arrivals_csv(ain);

  hgeo::ScoreOptions options;
  const double window = global.window_duration.value_or(14.0);
  if (window < 0.0) throw hgeo::Error(hgeo::ErrorCode::InvalidParameter, "--window-duration must be >= 0");
  if (window > 0.0) options.window_duration = window;
  options.population_weighting = args.weight_population;

  std::size_t present = 0;
  for (const auto& [id, t] : arrivals) {
    graph.index_of(id);
    ++present;
  }
  if (present < 2) {
    throw hgeo::Error(hgeo::ErrorCode::TooFewPoints, "need arrivals for at least 2 regions, found " +
                                                         std::to_string(present));
  }

  hgeo::SourceRanking ranking;
  try {
    ranking = hgeo::infer_source(graph, arrivals, options);
  } catch (const hgeo::Error& e) {
    if (e.code() != hgeo::ErrorCode::NoScorableCandidate) throw;
    throw hgeo::Error(hgeo::ErrorCode::TooFewPoints, "no candidate reaches 2 or more regions with arrivals");
  }
  const auto scatter = hgeo::distance_scatter(graph, arrivals, ranking.best().candidate);

  std::ostringstream rank_csv, scatter_csv;
  hgeo::write_ranking_csv(rank_csv, ranking, graph);
  hgeo::write_scatter_csv(scatter_csv, scatter, graph);
  OutputSet outputs(global.output_dir);
  outputs.add("ranking.csv", rank_csv.str());
  outputs.add("scatter.csv", scatter_csv.str());
  outputs.commit();

  const auto& best = ranking.best();
  std::cout << "best source: " << graph.region(best.candidate).id
            << " (r_squared=" << hgeo::csv::format_number(best.fit.r_squared)
            << ", slope=" << hgeo::csv::format_number(best.fit.slope)
            << ", rmse=" << hgeo::csv::format_number(best.fit.rmse) << ")\n";
  if (!ranking.skipped.empty()) std::cout << "unscorable candidates: " << ranking.skipped.size() << '\n';
}

// --- export -------------------------------------------------------------------

struct ExportArgs {
  std::string graph;
  std::string source;
  std::string arrivals;
  std::size_t stages = 4;
  double bin_width = 1.0;
  bool all_pairs = false;
};

void run_export(const ExportArgs& args, const GlobalOptions& global) {
  const auto graph = load_bundle(args.graph);
  auto ain = open_input(args.arrivals);
  const auto arrivals = hgeo::read_arrivals_csv(ain);
  const auto field = hgeo::shortest_path_field(graph, args.source);

  const auto layout = hgeo::radial_layout(field, graph);
  const auto hist = hgeo::stage_histogram(field, graph, arrivals, args.stages, args.bin_width);
  std::vector<hgeo::EffectiveDistanceField> fields;
  if (args.all_pairs) {
    for (auto s : graph.by_id()) fields.push_back(hgeo::shortest_path_field(graph, s));
  } else {
    fields.push_back(field);
  }

  std::ostringstream layout_json, stages_csv, dist_csv;
  hgeo::io::write_json(layout_json, hgeo::io::layout_to_json(layout, graph));
  hgeo::write_stage_histogram_csv(stages_csv, hist);
  hgeo::write_distances_csv(dist_csv, graph, fields);
  OutputSet outputs(global.output_dir);
  outputs.add("layout.json", layout_json.str());
  outputs.add("stages.csv", stages_csv.str());
  outputs.add("distances.csv", dist_csv.str());
  outputs.commit();
  if (!hist.unreachable.empty()) {
    std::cout << "arrived but unreachable from source: " << ids_of(graph, hist.unreachable) << '\n';
  }
}

// --- compare ------------------------------------------------------------------

struct CompareArgs {
  std::string a;
  std::string b;
};

void run_compare(const CompareArgs& args, const GlobalOptions& global) {
  auto ain = open_input(args.a);
  auto bin = open_input(args.b);
  const auto result = hgeo::compare_arrivals(hgeo::read_arrivals_csv(ain), hgeo::read_arrivals_csv(bin));
  std::ostringstream out;
  hgeo::io::write_json(out, hgeo::io::comparison_to_json(result));
  OutputSet outputs(global.output_dir);
  outputs.add("comparison.json", out.str());
  outputs.commit();
  std::cout << "rho=" << hgeo::csv::format_number(result.rho) << " over " << result.common_regions
            << " common regions\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective-distance analysis of spreading processes on region graphs"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  double window = 0.0, epsilon = 0.0;
  auto* window_opt = app.add_option("--window-duration", window,
                                    "Smoothing window in arrival-time units for infer (default 14, 0 = raw fit)");
  auto* epsilon_opt = app.add_option("--epsilon", epsilon, "Infected fraction that marks an arrival (simulate)");
  app.add_option("--output-dir", global.output_dir, "Directory for output files")->capture_default_str();
  app.add_option("--seed", global.seed, "Random seed (picks the seed region when a scenario omits it)")
      ->capture_default_str();
  app.add_option("--threshold", global.threshold, "Cumulative count marking a coarse-series arrival")
      ->capture_default_str();
  app.add_flag("--undirected", global.undirected, "Treat edge-list weights as undirected ties (build)");

  BuildArgs build;
  auto* cmd_build = app.add_subcommand("build", "Validate regions and edges, write graph.json");
  cmd_build->add_option("--regions", build.regions, "Region table CSV (id,name,lat,lon,population)")->required();
  cmd_build->add_option("--edges", build.edges, "Edge list CSV (from,to,weight)")->required();

  SimulateArgs sim;
  auto* cmd_sim = app.add_subcommand("simulate", "Run the meta-population SI model, write trajectory.csv and arrivals.csv");
  cmd_sim->add_option("--graph", sim.graph, "Graph bundle")->required();
  cmd_sim->add_option("--scenario", sim.scenario, "Scenario JSON")->required();
  cmd_sim->add_option("--sample-every", sim.sample_every, "Write every k-th integration step to trajectory.csv")
      ->capture_default_str();

  ArrivalsArgs arr;
  auto* cmd_arr = app.add_subcommand("arrivals", "Extract first arrivals from events or coarse series");
  cmd_arr->add_option("--graph", arr.graph, "Graph bundle (region centroids / id validation)");
  cmd_arr->add_option("--regions", arr.regions, "Region table CSV, alternative to --graph");
  auto* ev = cmd_arr->add_option("--events", arr.events, "Event log CSV (timestamp,lat,lon[,region_id])");
  auto* co = cmd_arr->add_option("--coarse", arr.coarse, "Coarse series CSV (region_id,bin_start,cumulative_count)");
  cmd_arr->add_option("--bin-width", arr.bin_width, "Bin width of the coarse series");
  cmd_arr->add_option("--time-unit", arr.time_unit, "Unit of event-derived arrival times")
      ->check(CLI::IsMember({"seconds", "hours", "days"}))
      ->capture_default_str();
  ev->excludes(co);
  cmd_arr->callback([&] {
    if (arr.events.empty() && arr.coarse.empty()) throw CLI::ValidationError("one of --events or --coarse is required");
  });

  InferArgs inf;
  auto* cmd_inf = app.add_subcommand("infer", "Rank candidate sources, write ranking.csv and scatter.csv");
  cmd_inf->add_option("--graph", inf.graph, "Graph bundle")->required();
  cmd_inf->add_option("--arrivals", inf.arrivals, "Arrival table CSV")->required();
  cmd_inf->add_flag("--weight-population", inf.weight_population, "Weight regions by ln(1 + population)");

  ExportArgs ex;
  auto* cmd_ex = app.add_subcommand("export", "Write layout.json, stages.csv and distances.csv for one source");
  cmd_ex->add_option("--graph", ex.graph, "Graph bundle")->required();
  cmd_ex->add_option("--source", ex.source, "Source region id")->required();
  cmd_ex->add_option("--arrivals", ex.arrivals, "Arrival table CSV")->required();
  cmd_ex->add_option("--stages", ex.stages, "Number of equal time slices")->capture_default_str();
  cmd_ex->add_option("--bin-width", ex.bin_width, "Effective-distance histogram bin width")->capture_default_str();
  cmd_ex->add_flag("--all-pairs", ex.all_pairs, "Write distances from every source, not just --source");

  CompareArgs cmp;
  auto* cmd_cmp = app.add_subcommand("compare", "Spearman correlation of two arrival tables, write comparison.json");
  cmd_cmp->add_option("a", cmp.a, "First arrival table")->required();
  cmd_cmp->add_option("b", cmp.b, "Second arrival table")->required();

  CLI11_PARSE(app, argc, argv);
  if (*window_opt) global.window_duration = window;
  if (*epsilon_opt) global.epsilon = epsilon;

  try {
    if (*cmd_build) run_build(build, global);
    if (*cmd_sim) run_simulate(sim, global);
    if (*cmd_arr) run_arrivals(arr, global);
    if (*cmd_inf) run_infer(inf, global);
    if (*cmd_ex) run_export(ex, global);
    if (*cmd_cmp) run_compare(cmp, global);
  } catch (const hgeo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
