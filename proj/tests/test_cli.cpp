// End-to-end checks of the command line tool: every subcommand is run as a
// real subprocess and judged only by its exit code and the files it writes.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef RIDEMATCH_CLI_PATH
#error "RIDEMATCH_CLI_PATH must point at the built binary"
#endif

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RIDEMATCH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  EXPECT_TRUE(static_cast<bool>(in)) << "missing file: " << path;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string first_line(const std::string& text) {
  return text.substr(0, text.find('\n'));
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(testing::TempDir()) / "cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

class CliFlow : public testing::Test {
 protected:
  // One generated instance shared by the match tests.
  static void SetUpTestSuite() {
    gen_dir_ = new fs::path(fresh_dir("gen"));
    ASSERT_EQ(run_cli("gen --out " + gen_dir_->string() +
                      " --seed 5 --passengers 10 --drivers 5"),
              0);
  }
  static void TearDownTestSuite() {
    delete gen_dir_;
    gen_dir_ = nullptr;
  }
  static std::string instance_flags() {
    const fs::path& d = *gen_dir_;
    return " --nodes " + (d / "nodes.csv").string() + " --links " +
           (d / "links.csv").string() + " --drivers-file " + (d / "drivers.csv").string() +
           " --passengers-file " + (d / "passengers.csv").string();
  }
  static fs::path* gen_dir_;
};

fs::path* CliFlow::gen_dir_ = nullptr;

TEST_F(CliFlow, GenWritesTheFourInstanceFiles) {
  EXPECT_EQ(first_line(slurp(*gen_dir_ / "nodes.csv")), "id,x_km,y_km");
  EXPECT_EQ(first_line(slurp(*gen_dir_ / "links.csv")), "from,to,length_km,travel_time_s");
  EXPECT_EQ(first_line(slurp(*gen_dir_ / "drivers.csv")),
            "id,origin,destination,earliest_departure_s,capacity,max_excess_s");
  EXPECT_EQ(first_line(slurp(*gen_dir_ / "passengers.csv")),
            "id,origin,destination,earliest_departure_s,max_excess_s,max_wait_s");
}

TEST_F(CliFlow, MatchIsDeterministicAcrossRuns) {
  const fs::path out1 = fresh_dir("match1");
  const fs::path out2 = fresh_dir("match2");
  ASSERT_EQ(run_cli("match" + instance_flags() + " --out " + out1.string() +
                    " --dump-candidates"),
            0);
  ASSERT_EQ(run_cli("match" + instance_flags() + " --out " + out2.string()), 0);

  const std::string matches = slurp(out1 / "matches.csv");
  EXPECT_EQ(first_line(matches), "driver_id,request_ids,stop_sequence,route_dist_km,savings_km");
  EXPECT_EQ(matches, slurp(out2 / "matches.csv"));
  EXPECT_EQ(slurp(out1 / "metrics.json"), slurp(out2 / "metrics.json"));
  EXPECT_EQ(first_line(slurp(out1 / "candidates.csv")),
            "driver_id,request_ids,route_dist_km,savings_km,stop_sequence");

  const nlohmann::json j = nlohmann::json::parse(slurp(out1 / "metrics.json"));
  EXPECT_TRUE(j.contains("vkt_km"));
  EXPECT_TRUE(j["deltas_pct"].contains("vkt_km"));
}

TEST_F(CliFlow, FlagsOverrideTheConfigFile) {
  const fs::path dir = fresh_dir("precedence");
  const fs::path cfg = dir / "run.cfg";
  {
    std::ofstream os(cfg);
    os << "capacity = 3\nseed = 5\nn_passengers = 6\nn_drivers = 4\n";
  }
  ASSERT_EQ(run_cli("gen --config " + cfg.string() + " --capacity 1 --out " + dir.string()),
            0);
  std::istringstream drivers(slurp(dir / "drivers.csv"));
  std::string header, row;
  std::getline(drivers, header);
  ASSERT_TRUE(static_cast<bool>(std::getline(drivers, row)));
  // capacity is the fifth column
  std::istringstream cells(row);
  std::string cell;
  for (int i = 0; i < 5; ++i) std::getline(cells, cell, ',');
  EXPECT_EQ(cell, "1");
}

TEST_F(CliFlow, SimulateAggregatesReplications) {
  const fs::path out = fresh_dir("simulate");
  ASSERT_EQ(run_cli("simulate --passengers 12 --drivers 6 --replications 3 --threads 2"
                    " --seed 7 --out " +
                    out.string()),
            0);
  const nlohmann::json j = nlohmann::json::parse(slurp(out / "metrics.json"));
  EXPECT_EQ(j["replications"].get<int>(), 3);
  EXPECT_TRUE(j["deltas_pct"]["vkt_km"].contains("mean"));
  EXPECT_TRUE(j["deltas_pct"]["vkt_km"].contains("stdev"));
  EXPECT_EQ(first_line(slurp(out / "runtimes.csv")), "stage,seconds,combination_count");
}

TEST_F(CliFlow, SweepWritesOneRowPerCell) {
  const fs::path out = fresh_dir("sweep");
  const fs::path grid = out / "grid.txt";
  {
    std::ofstream os(grid);
    os << "supply_ratio = 0.5\ncapacity = 1, 2\nexcess_ratio = 0.3\n";
  }
  ASSERT_EQ(run_cli("sweep --passengers 10 --replications 2 --seed 2 --grid " +
                    grid.string() + " --out " + out.string()),
            0);
  std::istringstream in(slurp(out / "sweep.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line,
            "supply_ratio,capacity,excess_ratio,mean_vkt_saving_pct,stdev_vkt_saving_pct,"
            "mean_trips_saving_pct,mean_matched_requests");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2);
}

TEST_F(CliFlow, BadUsageFailsLoudly) {
  EXPECT_NE(run_cli(""), 0);                        // a subcommand is required
  EXPECT_NE(run_cli("sweep --passengers 4"), 0);    // --grid is required
  EXPECT_NE(run_cli("simulate --replications 2"), 0);  // no participants
  EXPECT_NE(run_cli("match --nodes /nonexistent.csv"), 0);
  EXPECT_NE(run_cli("gen --capacity 0"), 0);        // rejected by validation
}

}  // namespace
