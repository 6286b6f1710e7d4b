// End-to-end tests of the hgeo command-line tool against fixture files.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hgeo/hgeo.hpp"

namespace fs = std::filesystem;

namespace hgeo {
namespace {

const fs::path kFixtures = HGEO_FIXTURES_DIR;

struct RunResult {
  int exit_code;
  std::string output;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("hgeo_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args) const {
    const auto log = dir_ / "cli.log";
    const std::string cmd = std::string(HGEO_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status), slurp(log)};
  }

  fs::path write(const std::string& name, const std::string& content) const {
    std::ofstream(dir_ / name, std::ios::binary) << content;
    return dir_ / name;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path out(const std::string& name) const { return dir_ / "out" / name; }
  std::string out_flag() const { return " --output-dir " + (dir_ / "out").string(); }

  fs::path build_fixture_graph() const {
    auto r = run("build --undirected --regions " + (kFixtures / "regions.csv").string() + " --edges " +
                 (kFixtures / "edges.csv").string() + out_flag());
    EXPECT_EQ(r.exit_code, 0) << r.output;
    return out("graph.json");
  }

  fs::path dir_;
};

TEST_F(CliTest, BuildSmallGraph) {
  auto regions = write("regions.csv", "id,name,lat,lon,population\nA,a,0,0,10\nB,b,0,1,20\nC,c,1,0,30\n");
  auto edges = write("edges.csv", "from,to,weight\nA,B,3\nB,C,1\nC,A,2\nA,A,4\n");
  auto r = run("build --regions " + regions.string() + " --edges " + edges.string() + out_flag());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  std::ifstream in(out("graph.json"));
  auto j = io::parse_json(in);
  EXPECT_EQ(j["node_count"], 3);
  EXPECT_EQ(j["diagnostics"]["self_loops_dropped"], 1);
  EXPECT_EQ(j["diagnostics"]["edge_mode"], "directed");
}

TEST_F(CliTest, BuildRejectsUnknownEndpoint) {
  auto regions = write("regions.csv", "id,name,lat,lon,population\nA,a,0,0,10\n");
  auto edges = write("edges.csv", "from,to,weight\nA,Z,3\n");
  auto r = run("build --regions " + regions.string() + " --edges " + edges.string() + out_flag());
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.output.find("UnknownRegionId"), std::string::npos);
  EXPECT_FALSE(fs::exists(out("graph.json")));
}

TEST_F(CliTest, BuildWorldSizedGraph) {
  std::ostringstream regions, edges;
  regions << "id,name,lat,lon,population\n";
  edges << "from,to,weight\n";
  for (int i = 0; i < 261; ++i) {
    regions << "R" << i << ",Region " << i << "," << (i % 170) - 85 << "," << (i * 7) % 360 - 179 << "," << 100 + i
            << "\n";
    edges << "R" << i << ",R" << (i + 1) % 261 << "," << 1 + i % 5 << "\n";
  }
  auto r = run("build --undirected --regions " + write("r.csv", regions.str()).string() + " --edges " +
               write("e.csv", edges.str()).string() + out_flag());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("nodes: 261"), std::string::npos);
  std::ifstream in(out("graph.json"));
  EXPECT_EQ(io::parse_json(in)["node_count"], 261);
}

TEST_F(CliTest, SimulateNullScenario) {
  auto graph = build_fixture_graph();
  auto r = run("simulate --graph " + graph.string() + " --scenario " + (kFixtures / "null_scenario.json").string() +
               out_flag());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  std::ifstream in(out("trajectory.csv"));
  auto table = csv::read(in);
  ASSERT_FALSE(table.rows.empty());
  for (const auto& row : table.rows) EXPECT_EQ(row.fields[3], "0");
  std::ifstream arr(out("arrivals.csv"));
  EXPECT_TRUE(read_arrivals_csv(arr).empty());
}

TEST_F(CliTest, SimulateLogisticMatchesClosedForm) {
  auto regions = write("regions.csv", "id,name,lat,lon,population\nX,x,0,0,1000\n");
  auto edges = write("edges.csv", "from,to,weight\n");
  ASSERT_EQ(run("build --regions " + regions.string() + " --edges " + edges.string() + out_flag()).exit_code, 0);
  auto scenario = write("s.json", R"({"alpha":0.5,"dt":0.001,"horizon":40,"seed_region":"X","initial_infected":1})");
  auto r = run("simulate --sample-every 500 --graph " + out("graph.json").string() + " --scenario " +
               scenario.string() + out_flag());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  std::ifstream in(out("trajectory.csv"));
  auto table = csv::read(in);
  ASSERT_EQ(table.rows.size(), 81u);
  for (const auto& row : table.rows) {
    const double t = *csv::parse_double(row.fields[0]);
    const double g = std::exp(0.5 * t);
    const double exact = 1000.0 * g / (999.0 + g);
    EXPECT_NEAR(*csv::parse_double(row.fields[3]), exact, 1e-6 * exact);
  }
  std::ifstream arr(out("arrivals.csv"));
  const double exact_arrival = std::log(0.01 * 999.0 / 0.99) / 0.5;
  EXPECT_NEAR(*read_arrivals_csv(arr).at("X"), exact_arrival, 2e-3);
}

TEST_F(CliTest, SimulateDecayScenario) {
  auto regions = write("regions.csv", "id,name,lat,lon,population\nX,x,0,0,1000\n");
  auto edges = write("edges.csv", "from,to,weight\n");
  ASSERT_EQ(run("build --regions " + regions.string() + " --edges " + edges.string() + out_flag()).exit_code, 0);
  auto scenario =
      write("s.json", R"({"alpha":0,"beta":0.2,"dt":0.01,"horizon":10,"seed_region":"X","initial_infected":400})");
  ASSERT_EQ(run("simulate --graph " + out("graph.json").string() + " --scenario " + scenario.string() + out_flag())
                .exit_code,
            0);
  std::ifstream in(out("trajectory.csv"));
  for (const auto& row : csv::read(in).rows) {
    const double exact = 400.0 * std::exp(-0.2 * *csv::parse_double(row.fields[0]));
    EXPECT_NEAR(*csv::parse_double(row.fields[3]), exact, 1e-6 * exact);
  }
}

TEST_F(CliTest, SimulatePicksSeedFromRngWhenScenarioOmitsIt) {
  auto graph = build_fixture_graph();
  auto scenario = write("s.json", R"({"alpha":0.4,"dt":0.5,"horizon":5,"initial_infected":1})");
  auto a = run("--seed 5 simulate --graph " + graph.string() + " --scenario " + scenario.string() + out_flag());
  auto b = run("--seed 5 simulate --graph " + graph.string() + " --scenario " + scenario.string() + out_flag());
  ASSERT_EQ(a.exit_code, 0) << a.output;
  EXPECT_NE(a.output.find("seed region: "), std::string::npos);
  EXPECT_EQ(a.output, b.output);
}

TEST_F(CliTest, InferExactLine) {
  auto graph = build_fixture_graph();
  std::ifstream gin(graph);
  const auto g = io::bundle_from_json(io::parse_json(gin));
  const auto field = shortest_path_field(g, "JP");
  std::ostringstream arr;
  arr << "region_id,arrival_time\n";
  for (std::size_t v = 0; v < g.size(); ++v) arr << g.region(v).id << ',' << 2.0 * field.distance[v] + 3.0 << '\n';
  auto r = run("infer --graph " + graph.string() + " --arrivals " + write("a.csv", arr.str()).string() + out_flag());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  std::ifstream in(out("ranking.csv"));
  auto table = csv::read(in);
  EXPECT_EQ(table.rows[0].fields[0], "JP");
  EXPECT_EQ(table.rows[0].fields[3], "1");
  EXPECT_TRUE(fs::exists(out("scatter.csv")));
}

TEST_F(CliTest, InferSimulatedOutbreakFindsSeed) {
  auto graph = build_fixture_graph();
  ASSERT_EQ(run("simulate --graph " + graph.string() + " --scenario " + (kFixtures / "scenario.json").string() +
                out_flag())
                .exit_code,
            0);
  auto r = run("--window-duration 0 infer --graph " + graph.string() + " --arrivals " + out("arrivals.csv").string() +
               out_flag());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  std::ifstream in(out("ranking.csv"));
  EXPECT_EQ(csv::read(in).rows[0].fields[0], "PH");

  std::ifstream sc(out("scatter.csv"));
  auto scatter = csv::read(sc);
  EXPECT_EQ(scatter.header, (std::vector<std::string>{"region_id", "geographic_km", "effective_distance", "arrival_time"}));
  EXPECT_EQ(scatter.rows.size(), 10u);
}

TEST_F(CliTest, InferNeedsTwoRegions) {
  auto graph = build_fixture_graph();
  auto r = run("infer --graph " + graph.string() + " --arrivals " +
               write("a.csv", "region_id,arrival_time\nPH,1\n").string() + out_flag());
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.output.find("TooFewPoints"), std::string::npos);
  EXPECT_FALSE(fs::exists(out("ranking.csv")));
}

TEST_F(CliTest, ExportChainLayoutAndStages) {
  auto regions = write("regions.csv", "id,name,lat,lon,population\nA,a,0,0,1\nB,b,0,1,1\nC,c,0,2,1\n");
  auto edges = write("edges.csv", "from,to,weight\nA,B,1\nB,C,1\n");
  ASSERT_EQ(run("build --regions " + regions.string() + " --edges " + edges.string() + out_flag()).exit_code, 0);
  auto arrivals = write("a.csv", "region_id,arrival_time\nA,0\nB,1\nC,2\n");
  auto r = run("export --stages 2 --bin-width 1 --graph " + out("graph.json").string() + " --source A --arrivals " +
               arrivals.string() + out_flag());
  ASSERT_EQ(r.exit_code, 0) << r.output;

  std::ifstream lin(out("layout.json"));
  auto layout = io::parse_json(lin);
  EXPECT_EQ(layout["source"], "A");
  ASSERT_EQ(layout["nodes"].size(), 3u);
  EXPECT_EQ(layout["nodes"][2]["r"], 2.0);
  EXPECT_EQ(layout["nodes"][1]["theta"], layout["nodes"][2]["theta"]);
  EXPECT_EQ(layout["edges"].size(), 2u);

  EXPECT_EQ(slurp(out("stages.csv")),
            "stage,t_begin,t_end,bin_lower,bin_upper,count\n"
            "1,0,1,0,1,1\n1,0,1,1,2,0\n1,0,1,2,3,0\n"
            "2,1,2,0,1,0\n2,1,2,1,2,1\n2,1,2,2,3,1\n");
  EXPECT_EQ(slurp(out("distances.csv")), "source,target,effective_distance\nA,A,0\nA,B,1\nA,C,2\n");
}

TEST_F(CliTest, CompareArrivalTables) {
  auto a = write("a.csv", "region_id,arrival_time\nr1,1\nr2,2\nr3,3\nr4,4\nr5,5\n");
  auto b = write("b.csv", "region_id,arrival_time\nr1,1\nr2,3\nr3,2\nr4,5\nr5,4\n");
  auto rev = write("rev.csv", "region_id,arrival_time\nr1,5\nr2,4\nr3,3\nr4,2\nr5,1\n");
  auto rho = [&](const fs::path& x, const fs::path& y) {
    EXPECT_EQ(run("compare " + x.string() + " " + y.string() + out_flag()).exit_code, 0);
    std::ifstream in(out("comparison.json"));
    auto j = io::parse_json(in);
    EXPECT_EQ(j["common_regions"], 5);
    return j["rho"].get<double>();
  };
  EXPECT_EQ(rho(a, a), 1.0);
  EXPECT_EQ(rho(a, rev), -1.0);
  EXPECT_NEAR(rho(a, b), 0.8, 1e-9);
}

TEST_F(CliTest, ArrivalsFromEventsAndCoarseSeries) {
  auto graph = build_fixture_graph();
  auto r = run("arrivals --time-unit days --graph " + graph.string() + " --events " +
               (kFixtures / "events.csv").string() + out_flag());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("malformed rows: 1"), std::string::npos);
  std::ifstream ev(out("arrivals.csv"));
  auto events = read_arrivals_csv(ev);
  EXPECT_EQ(events.size(), 10u);
  EXPECT_NEAR(*events.at("PH"), 1343000000.0 / 86400.0, 1e-4);  // earlier than the pre-assigned PH event

  auto c = run("--threshold 2 arrivals --coarse " + (kFixtures / "coarse.csv").string() +
               " --bin-width 14 --graph " + graph.string() + out_flag());
  ASSERT_EQ(c.exit_code, 0) << c.output;
  std::ifstream co(out("arrivals.csv"));
  auto coarse = read_arrivals_csv(co);
  EXPECT_EQ(coarse.provenance(), Provenance::CoarseBins);
  EXPECT_EQ(coarse.resolution(), 14.0);
  EXPECT_EQ(coarse.at("PH"), 0.0);
  EXPECT_EQ(coarse.at("KR"), 14.0);
  EXPECT_EQ(coarse.at("US-CA"), 28.0);
  EXPECT_FALSE(coarse.at("HU"));
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  auto graph = build_fixture_graph();
  const std::string sim = "simulate --sample-every 20 --graph " + graph.string() + " --scenario " +
                          (kFixtures / "scenario.json").string() + out_flag();
  ASSERT_EQ(run(sim).exit_code, 0);
  const auto first = slurp(out("trajectory.csv")) + slurp(out("arrivals.csv"));
  ASSERT_EQ(run(sim).exit_code, 0);
  EXPECT_EQ(first, slurp(out("trajectory.csv")) + slurp(out("arrivals.csv")));
}

}  // namespace
}  // namespace hgeo
