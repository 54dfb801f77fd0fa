// Command-line front end: gen / match / simulate / sweep.
//
// Option precedence everywhere: built-in defaults, then --config file, then
// explicit flags.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ridematch/ridematch.hpp"

namespace {

using namespace ridematch;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::ParseError, "cannot open output file: " + path.string());
  return os;
}

// Config knobs shared by the subcommands. Values land in the RunConfig only
// when the flag was actually given, so the config file keeps authority over
// everything left untouched.
struct ConfigFlags {
  std::string config_path;
  long long seed = 0;
  int passengers = 0;
  int drivers = 0;
  double supply_ratio = 0;
  int capacity = 0;
  double excess_ratio = 0;
  double wait_ratio = 0;
  double batch_window_s = 0;
  int batches = 0;
  int replications = 0;
  int threads = 0;
  bool no_prune = false;
  bool greedy_combos = false;
  bool greedy_assign = false;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "key=value config file");
    app.add_option("--seed", seed, "master random seed");
    app.add_option("--passengers", passengers, "number of trip requests to sample");
    app.add_option("--drivers", drivers, "number of driver offers to sample");
    app.add_option("--supply-ratio", supply_ratio, "drivers per passenger (when --drivers is 0)");
    app.add_option("--capacity", capacity, "seats available per driver");
    app.add_option("--excess-ratio", excess_ratio, "max excess as a fraction of solo time");
    app.add_option("--wait-ratio", wait_ratio, "max wait as a fraction of max excess");
    app.add_option("--batch-window", batch_window_s, "matching window length in seconds");
    app.add_option("--batches", batches, "number of windows in the horizon");
    app.add_option("--replications", replications, "independent seeded replications");
    app.add_option("--threads", threads, "worker threads for replications");
    app.add_flag("--no-prune", no_prune, "skip the geometric candidate filter");
    app.add_flag("--greedy-combos", greedy_combos, "grow combinations along one branch only");
    app.add_flag("--greedy-assign", greedy_assign, "assign by descending savings instead of exactly");
  }

  RunConfig resolve(const CLI::App& app) const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config_file(config_path);
    auto given = [&](const std::string& name) { return app.count(name) > 0; };
    if (given("--seed")) cfg.seed = static_cast<std::uint64_t>(seed);
    if (given("--passengers")) cfg.n_passengers = passengers;
    if (given("--drivers")) cfg.n_drivers = drivers;
    if (given("--supply-ratio")) cfg.supply_ratio = supply_ratio;
    if (given("--capacity")) cfg.capacity = capacity;
    if (given("--excess-ratio")) cfg.excess_ratio = excess_ratio;
    if (given("--wait-ratio")) cfg.wait_ratio = wait_ratio;
    if (given("--batch-window")) cfg.batch_window_s = batch_window_s;
    if (given("--batches")) cfg.n_batches = batches;
    if (given("--replications")) cfg.replications = replications;
    if (given("--threads")) cfg.threads = threads;
    if (no_prune) cfg.prune = false;
    if (greedy_combos) cfg.combo_mode = InsertMode::Greedy;
    if (greedy_assign) cfg.assign_mode = AssignMode::Greedy;
    validate_config(cfg);
    return cfg;
  }
};

struct InstancePaths {
  std::string nodes = "nodes.csv";
  std::string links = "links.csv";
  std::string drivers = "drivers.csv";
  std::string passengers = "passengers.csv";

  void attach(CLI::App& app) {
    app.add_option("--nodes", nodes, "node CSV (id,x_km,y_km)");
    app.add_option("--links", links, "link CSV (from,to,length_km,travel_time_s)");
    app.add_option("--drivers-file", drivers, "driver CSV");
    app.add_option("--passengers-file", passengers, "passenger CSV");
  }
};

int cmd_gen(const ConfigFlags& flags, const CLI::App& app, const std::string& out_dir) {
  const RunConfig cfg = flags.resolve(app);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  const RoadNetwork net = gen_network(cfg);
  const Instance ins = gen_instance(net, cfg);
  {
    auto nodes_os = open_out(dir / "nodes.csv");
    auto links_os = open_out(dir / "links.csv");
    write_network_csv(nodes_os, links_os, net);
  }
  {
    auto drivers_os = open_out(dir / "drivers.csv");
    auto passengers_os = open_out(dir / "passengers.csv");
    write_instance_csv(drivers_os, passengers_os, ins, net);
  }
  std::cout << "wrote " << net.nodes().size() << " nodes, " << net.links().size()
            << " links, " << ins.drivers.size() << " drivers, " << ins.requests.size()
            << " passengers to " << out_dir << "\n";
  return 0;
}

int cmd_match(const ConfigFlags& flags, const CLI::App& app, const InstancePaths& paths,
              const std::string& out_dir, bool dump_candidates) {
  const RunConfig cfg = flags.resolve(app);
  const RoadNetwork net = load_network_csv(paths.nodes, paths.links);
  const Instance ins = load_instance_csv(net, paths.drivers, paths.passengers, cfg);
  const BatchResult batch = run_batch(net, ins, cfg);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  {
    auto os = open_out(dir / "matches.csv");
    write_matches_csv(os, batch.candidates, batch.assignment, net);
  }
  {
    auto os = open_out(dir / "metrics.json");
    write_metrics_json(os, compute_metrics(ins, batch.plans));
  }
  {
    auto os = open_out(dir / "runtimes.csv");
    const auto rows = runtime_rows(batch);
    write_runtimes_csv(os, rows);
  }
  if (dump_candidates) {
    auto os = open_out(dir / "candidates.csv");
    write_candidates_csv(os, batch.candidates, net);
  }
  std::cout << batch.assignment.chosen.size() << " matches, total savings "
            << format_double(batch.assignment.total_savings_km) << " km, "
            << batch.combination_count << " combinations\n";
  return 0;
}

int cmd_simulate(const ConfigFlags& flags, const CLI::App& app, const std::string& out_dir) {
  const RunConfig cfg = flags.resolve(app);
  if (resolved_drivers(cfg) <= 0 || cfg.n_passengers <= 0) {
    fail(ErrorCode::InvalidConfig, "simulate needs n_passengers and n_drivers (or supply_ratio)");
  }
  const RoadNetwork net = gen_network(cfg);
  const std::vector<RepResult> reps = run_replications(net, cfg, cfg.replications);
  const Aggregate agg = aggregate_results(reps);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  {
    auto os = open_out(dir / "metrics.json");
    write_aggregate_json(os, agg);
  }
  {
    auto os = open_out(dir / "runtimes.csv");
    const auto rows = runtime_rows(reps);
    write_runtimes_csv(os, rows);
  }
  std::cout << agg.replications << " replications, mean VKT saving "
            << format_double(agg.vkt_saving_pct.mean, 3) << "% (sd "
            << format_double(agg.vkt_saving_pct.stdev, 3) << ")\n";
  return 0;
}

int cmd_sweep(const ConfigFlags& flags, const CLI::App& app, const std::string& grid_path,
              const std::string& out_dir) {
  const RunConfig cfg = flags.resolve(app);
  if (cfg.n_passengers <= 0) {
    fail(ErrorCode::InvalidConfig, "sweep needs n_passengers");
  }
  std::ifstream in(grid_path);
  if (!in) fail(ErrorCode::ParseError, "cannot open grid file: " + grid_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const SweepGrid grid = parse_grid(buf.str());

  const RoadNetwork net = gen_network(cfg);
  const std::vector<SweepRow> rows = sensitivity_sweep(net, cfg, grid);

  std::filesystem::create_directories(out_dir);
  {
    auto os = open_out(std::filesystem::path(out_dir) / "sweep.csv");
    write_sweep_csv(os, rows);
  }
  std::cout << rows.size() << " sweep cells written to " << out_dir << "/sweep.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ride-sharing matcher and batch simulator"};
  app.require_subcommand(1);

  std::string out_dir = "out";
  ConfigFlags gen_flags, match_flags, sim_flags, sweep_flags;
  InstancePaths match_paths;
  bool dump_candidates = false;
  std::string grid_path;

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic network and instance");
  gen_flags.attach(*gen);
  gen->add_option("--out", out_dir, "output directory");

  CLI::App* match = app.add_subcommand("match", "run one matching batch on instance files");
  match_flags.attach(*match);
  match_paths.attach(*match);
  match->add_option("--out", out_dir, "output directory");
  match->add_flag("--dump-candidates", dump_candidates, "also write candidates.csv");

  CLI::App* simulate = app.add_subcommand("simulate", "run seeded replications");
  sim_flags.attach(*simulate);
  simulate->add_option("--out", out_dir, "output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "sensitivity sweep over a parameter grid");
  sweep_flags.attach(*sweep);
  sweep->add_option("--grid", grid_path, "grid file (supply_ratio/capacity/excess_ratio lists)")
      ->required();
  sweep->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gen_flags, *gen, out_dir);
    if (match->parsed()) {
      return cmd_match(match_flags, *match, match_paths, out_dir, dump_candidates);
    }
    if (simulate->parsed()) return cmd_simulate(sim_flags, *simulate, out_dir);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, *sweep, grid_path, out_dir);
  } catch (const ridematch::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
