#pragma once

// Batch simulator: synthetic networks and demand, the prune/combine/assign
// pipeline with per-stage timing, a rolling horizon for multi-window runs,
// network-impact metrics against the everyone-drives-solo base case, seeded
// replications, and sensitivity sweeps over supply, capacity, and excess.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ridematch/assign.hpp"
#include "ridematch/combos.hpp"
#include "ridematch/csv.hpp"
#include "ridematch/demand.hpp"
#include "ridematch/dyntree.hpp"
#include "ridematch/errors.hpp"
#include "ridematch/network.hpp"
#include "ridematch/pruning.hpp"
#include "ridematch/rng.hpp"

namespace ridematch {

enum class AssignMode { Exact, Greedy };

struct RunConfig {
  double excess_ratio = 0.20;  // max excess = ratio * solo time, all participants
  double wait_ratio = 0.50;    // max wait = ratio * max excess
  int capacity = 4;
  double batch_window_s = 1800;
  int n_batches = 1;
  int n_passengers = 0;
  int n_drivers = 0;        // 0 with supply_ratio > 0 derives from n_passengers
  double supply_ratio = 0;  // drivers per passenger
  std::uint64_t seed = 1;
  bool prune = true;
  InsertMode combo_mode = InsertMode::Exact;
  AssignMode assign_mode = AssignMode::Exact;
  // Synthetic network: perturbed rows x cols grid, link speeds sampled in
  // [30, v_max_kmh]; v_max_kmh caps generated speeds only, the pruning bound
  // always derives from the actual links.
  double v_max_kmh = 60;
  int net_rows = 8;
  int net_cols = 8;
  double net_spacing_km = 1.0;
  double net_extra_link_ratio = 0.15;
  // Demand zones: zone_grid^2 blocks over the bounding box; per-instance
  // random weights u^concentration unless fixed weights are supplied.
  int zone_grid = 4;
  double zone_concentration = 2.0;
  std::vector<double> zone_weights;
  // Passenger trip-length shaping: destination draws decay as
  // exp(-euclidean/decay_km), producing short local hops against the drivers'
  // unshaped long trips. 0 disables the decay.
  double passenger_trip_decay_km = 0;
  std::size_t max_combos_per_driver = 0;  // 0 = unlimited
  int replications = 20;
  int threads = 1;
};

inline int resolved_drivers(const RunConfig& c) {
  if (c.n_drivers > 0) return c.n_drivers;
  if (c.supply_ratio > 0) {
    return static_cast<int>(std::llround(c.supply_ratio * c.n_passengers));
  }
  return 0;
}

inline void validate_config(const RunConfig& c) {
  auto bad = [](const std::string& msg) { fail(ErrorCode::InvalidConfig, msg); };
  if (c.excess_ratio < 0 || c.wait_ratio < 0) bad("ratios must be >= 0");
  if (c.capacity < 1) bad("capacity must be >= 1");
  if (c.batch_window_s <= 0) bad("batch_window_s must be > 0");
  if (c.n_batches < 1) bad("n_batches must be >= 1");
  if (c.n_passengers < 0 || c.n_drivers < 0) bad("participant counts must be >= 0");
  if (c.supply_ratio < 0) bad("supply_ratio must be >= 0");
  if (c.net_rows < 2 || c.net_cols < 2) bad("network grid must be at least 2x2");
  if (c.net_spacing_km <= 0) bad("net_spacing_km must be > 0");
  if (c.net_extra_link_ratio < 0) bad("net_extra_link_ratio must be >= 0");
  if (c.zone_grid < 1) bad("zone_grid must be >= 1");
  if (c.zone_concentration < 0) bad("zone_concentration must be >= 0");
  if (!c.zone_weights.empty() &&
      c.zone_weights.size() !=
          static_cast<std::size_t>(c.zone_grid) * static_cast<std::size_t>(c.zone_grid)) {
    bad("zone_weights must have zone_grid^2 entries");
  }
  for (double w : c.zone_weights) {
    if (w < 0) bad("zone_weights must be >= 0");
  }
  if (c.passenger_trip_decay_km < 0) bad("passenger_trip_decay_km must be >= 0");
  if (c.replications < 1) bad("replications must be >= 1");
  if (c.threads < 1) bad("threads must be >= 1");
}

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& what) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorCode::InvalidConfig, what + ": not a boolean: " + v);
}

inline std::vector<double> parse_double_list(const std::string& v, const std::string& what) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    const std::size_t b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const std::size_t e = item.find_last_not_of(" \t");
    out.push_back(csv_double(item.substr(b, e - b + 1), what));
  }
  return out;
}

}  // namespace detail

inline void set_config_key(RunConfig& c, const std::string& key, const std::string& value) {
  const std::string what = "config key " + key;
  if (key == "excess_ratio") {
    c.excess_ratio = csv_double(value, what);
  } else if (key == "wait_ratio") {
    c.wait_ratio = csv_double(value, what);
  } else if (key == "capacity") {
    c.capacity = static_cast<int>(csv_long(value, what));
  } else if (key == "batch_window_s") {
    c.batch_window_s = csv_double(value, what);
  } else if (key == "n_batches") {
    c.n_batches = static_cast<int>(csv_long(value, what));
  } else if (key == "n_passengers") {
    c.n_passengers = static_cast<int>(csv_long(value, what));
  } else if (key == "n_drivers") {
    c.n_drivers = static_cast<int>(csv_long(value, what));
  } else if (key == "supply_ratio") {
    c.supply_ratio = csv_double(value, what);
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(csv_long(value, what));
  } else if (key == "prune") {
    c.prune = detail::parse_bool(value, what);
  } else if (key == "combo_mode") {
    if (value == "exact") {
      c.combo_mode = InsertMode::Exact;
    } else if (value == "greedy") {
      c.combo_mode = InsertMode::Greedy;
    } else {
      fail(ErrorCode::InvalidConfig, what + ": expected exact or greedy");
    }
  } else if (key == "assign_mode") {
    if (value == "exact") {
      c.assign_mode = AssignMode::Exact;
    } else if (value == "greedy") {
      c.assign_mode = AssignMode::Greedy;
    } else {
      fail(ErrorCode::InvalidConfig, what + ": expected exact or greedy");
    }
  } else if (key == "v_max_kmh") {
    c.v_max_kmh = csv_double(value, what);
  } else if (key == "net_rows") {
    c.net_rows = static_cast<int>(csv_long(value, what));
  } else if (key == "net_cols") {
    c.net_cols = static_cast<int>(csv_long(value, what));
  } else if (key == "net_spacing_km") {
    c.net_spacing_km = csv_double(value, what);
  } else if (key == "net_extra_link_ratio") {
    c.net_extra_link_ratio = csv_double(value, what);
  } else if (key == "zone_grid") {
    c.zone_grid = static_cast<int>(csv_long(value, what));
  } else if (key == "zone_concentration") {
    c.zone_concentration = csv_double(value, what);
  } else if (key == "zone_weights") {
    c.zone_weights = detail::parse_double_list(value, what);
  } else if (key == "passenger_trip_decay_km") {
    c.passenger_trip_decay_km = csv_double(value, what);
  } else if (key == "max_combos_per_driver") {
    c.max_combos_per_driver = static_cast<std::size_t>(csv_long(value, what));
  } else if (key == "replications") {
    c.replications = static_cast<int>(csv_long(value, what));
  } else if (key == "threads") {
    c.threads = static_cast<int>(csv_long(value, what));
  } else {
    fail(ErrorCode::InvalidConfig, "unknown config key: " + key);
  }
}

// Flat key=value lines; blank lines and # comments allowed.
inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::InvalidConfig, "config line missing '=': " + line);
    }
    auto trim = [](std::string s) {
      const std::size_t b = s.find_first_not_of(" \t");
      const std::size_t e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    set_config_key(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  validate_config(c);
  return c;
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

// --- Synthetic network ------------------------------------------------------

struct SyntheticNetwork {
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
};

inline SyntheticNetwork gen_network_specs(const RunConfig& cfg) {
  validate_config(cfg);
  if (cfg.v_max_kmh < 30) fail(ErrorCode::InvalidConfig, "v_max_kmh must be >= 30");
  Rng rng(derive_seed(cfg.seed, 100));
  const int rows = cfg.net_rows;
  const int cols = cfg.net_cols;
  const double sp = cfg.net_spacing_km;

  SyntheticNetwork out;
  out.nodes.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      NodeSpec n;
      n.id = "n" + std::to_string(r * cols + c);
      n.x_km = c * sp + rng.uniform(-0.3, 0.3) * sp;
      n.y_km = r * sp + rng.uniform(-0.3, 0.3) * sp;
      out.nodes.push_back(std::move(n));
    }
  }

  auto euclid = [&](int a, int b) {
    const double dx = out.nodes[static_cast<std::size_t>(a)].x_km -
                      out.nodes[static_cast<std::size_t>(b)].x_km;
    const double dy = out.nodes[static_cast<std::size_t>(a)].y_km -
                      out.nodes[static_cast<std::size_t>(b)].y_km;
    return std::hypot(dx, dy);
  };
  auto add_link = [&](int a, int b) {
    const double base = euclid(a, b);
    if (base <= 0) return;
    LinkSpec l;
    l.from = out.nodes[static_cast<std::size_t>(a)].id;
    l.to = out.nodes[static_cast<std::size_t>(b)].id;
    l.length_km = base * (1.0 + rng.uniform(0.0, 0.25));
    const double speed_kmh = rng.uniform(30.0, cfg.v_max_kmh);
    l.travel_time_s = l.length_km / speed_kmh * 3600.0;
    out.links.push_back(std::move(l));
  };

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int a = r * cols + c;
      if (c + 1 < cols) {
        add_link(a, a + 1);
        add_link(a + 1, a);
      }
      if (r + 1 < rows) {
        add_link(a, a + cols);
        add_link(a + cols, a);
      }
    }
  }
  const long long grid_links = static_cast<long long>(out.links.size());
  const long long extra = std::llround(cfg.net_extra_link_ratio * grid_links);
  const int n = rows * cols;
  for (long long i = 0; i < extra; ++i) {
    const int a = static_cast<int>(rng.uniform_int(0, n - 1));
    const int b = static_cast<int>(rng.uniform_int(0, n - 1));
    if (a != b) add_link(a, b);
  }
  return out;
}

inline RoadNetwork gen_network(const RunConfig& cfg) {
  const SyntheticNetwork s = gen_network_specs(cfg);
  return load_network(s.nodes, s.links);
}

// --- Instances ----------------------------------------------------------------

struct Instance {
  std::vector<DriverOffer> drivers;
  std::vector<TripRequest> requests;
  TravelMatrix tt;  // over every stop node of the instance
};

namespace detail {

struct ZoneIndex {
  int grid = 1;
  std::vector<std::vector<NodeId>> zone_nodes;
};

inline ZoneIndex make_zones(const RoadNetwork& net, int grid) {
  ZoneIndex z;
  z.grid = grid;
  z.zone_nodes.assign(static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid), {});
  double minx = net.nodes().front().x_km, maxx = minx;
  double miny = net.nodes().front().y_km, maxy = miny;
  for (const Node& n : net.nodes()) {
    minx = std::min(minx, n.x_km);
    maxx = std::max(maxx, n.x_km);
    miny = std::min(miny, n.y_km);
    maxy = std::max(maxy, n.y_km);
  }
  auto cell = [&](double v, double lo, double hi) {
    if (hi <= lo) return 0;
    const int c = static_cast<int>((v - lo) / (hi - lo) * grid);
    return std::clamp(c, 0, grid - 1);
  };
  for (std::size_t i = 0; i < net.nodes().size(); ++i) {
    const Node& n = net.nodes()[i];
    const int zx = cell(n.x_km, minx, maxx);
    const int zy = cell(n.y_km, miny, maxy);
    z.zone_nodes[static_cast<std::size_t>(zy) * static_cast<std::size_t>(grid) +
                 static_cast<std::size_t>(zx)]
        .push_back(static_cast<NodeId>(i));
  }
  return z;
}

// Per-instance zone weights: supplied ones masked to populated zones, or
// u^concentration draws (concentration 0 = uniform over populated zones).
inline std::vector<double> make_zone_weights(const ZoneIndex& zones, const RunConfig& cfg,
                                             Rng& rng) {
  std::vector<double> w(zones.zone_nodes.size(), 0.0);
  for (std::size_t z = 0; z < w.size(); ++z) {
    const double draw = std::pow(rng.uniform01(), cfg.zone_concentration);
    if (zones.zone_nodes[z].empty()) continue;
    w[z] = cfg.zone_weights.empty() ? draw : cfg.zone_weights[z];
  }
  double total = 0;
  for (double v : w) total += v;
  if (total <= 0) {
    for (std::size_t z = 0; z < w.size(); ++z) {
      w[z] = zones.zone_nodes[z].empty() ? 0.0 : 1.0;
    }
  }
  return w;
}

struct OdSampler {
  const RoadNetwork& net;
  const ZoneIndex& zones;
  std::vector<double> cumulative;

  OdSampler(const RoadNetwork& n, const ZoneIndex& z, std::span<const double> weights)
      : net(n), zones(z), cumulative(weights.size(), 0.0) {
    double run = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      run += weights[i];
      cumulative[i] = run;
    }
  }

  NodeId sample_node(Rng& rng) const {
    const double total = cumulative.back();
    const double u = rng.uniform(0.0, total);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t z = static_cast<std::size_t>(it - cumulative.begin());
    if (z >= cumulative.size()) z = cumulative.size() - 1;
    while (zones.zone_nodes[z].empty()) z = (z + 1) % zones.zone_nodes.size();
    const auto& nodes = zones.zone_nodes[z];
    return nodes[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<long long>(nodes.size()) - 1))];
  }

  std::pair<NodeId, NodeId> sample_od(Rng& rng) const {
    const NodeId o = sample_node(rng);
    for (int tries = 0; tries < 64; ++tries) {
      const NodeId d = sample_node(rng);
      if (d != o) return {o, d};
    }
    // Degenerate weights (all mass on one single-node zone): fall back to a
    // uniform draw over the other nodes.
    const long long n = static_cast<long long>(net.nodes().size());
    NodeId d = o;
    while (d == o) d = static_cast<NodeId>(rng.uniform_int(0, n - 1));
    return {o, d};
  }

  // Gravity-style draw: the destination mass falls off as exp(-dist/decay_km)
  // around the sampled origin, yielding short local trips.
  std::pair<NodeId, NodeId> sample_od_local(Rng& rng, double decay_km) const {
    const NodeId o = sample_node(rng);
    const Node& on = net.nodes()[static_cast<std::size_t>(o)];
    std::vector<double> mass(net.nodes().size(), 0.0);
    double total = 0;
    for (std::size_t i = 0; i < net.nodes().size(); ++i) {
      if (static_cast<NodeId>(i) == o) continue;
      const Node& n = net.nodes()[i];
      const double dist = std::hypot(n.x_km - on.x_km, n.y_km - on.y_km);
      mass[i] = std::exp(-dist / decay_km);
      total += mass[i];
    }
    double u = rng.uniform(0.0, total);
    for (std::size_t i = 0; i < mass.size(); ++i) {
      u -= mass[i];
      if (u <= 0 && mass[i] > 0) return {o, static_cast<NodeId>(i)};
    }
    return sample_od(rng);
  }
};

struct RawTrip {
  NodeId origin = -1;
  NodeId destination = -1;
  double departure_s = 0;
};

inline Instance finish_instance(const RoadNetwork& net, std::span<const RawTrip> raw_drivers,
                                std::span<const RawTrip> raw_passengers,
                                const RunConfig& cfg) {
  std::vector<NodeId> stops;
  for (const RawTrip& t : raw_drivers) {
    stops.push_back(t.origin);
    stops.push_back(t.destination);
  }
  for (const RawTrip& t : raw_passengers) {
    stops.push_back(t.origin);
    stops.push_back(t.destination);
  }
  Instance ins{{}, {}, travel_matrix(net, stops)};
  for (std::size_t i = 0; i < raw_drivers.size(); ++i) {
    const RawTrip& t = raw_drivers[i];
    DriverOffer d;
    d.id = "d" + std::to_string(i);
    d.origin = t.origin;
    d.destination = t.destination;
    d.earliest_departure_s = t.departure_s;
    d.capacity = cfg.capacity;
    const LegCost leg = ins.tt.at(t.origin, t.destination);
    d.sp_time_s = leg.time_s;
    d.sp_dist_km = leg.distance_km;
    d.max_excess_s = derive_constraints(leg.time_s, cfg.excess_ratio, cfg.wait_ratio).max_excess_s;
    ins.drivers.push_back(std::move(d));
  }
  for (std::size_t i = 0; i < raw_passengers.size(); ++i) {
    const RawTrip& t = raw_passengers[i];
    TripRequest r;
    r.id = "r" + std::to_string(i);
    r.origin = t.origin;
    r.destination = t.destination;
    r.earliest_departure_s = t.departure_s;
    const LegCost leg = ins.tt.at(t.origin, t.destination);
    r.sp_time_s = leg.time_s;
    r.sp_dist_km = leg.distance_km;
    const ConstraintBounds b =
        derive_constraints(leg.time_s, cfg.excess_ratio, cfg.wait_ratio);
    r.max_excess_s = b.max_excess_s;
    r.max_wait_s = b.max_wait_s;
    ins.requests.push_back(std::move(r));
  }
  return ins;
}

}  // namespace detail

// Seeded demand sampling. Zone weights, passengers, and drivers consume
// independent derived streams, so configurations that differ only in ratios,
// capacity, or driver count still sample the same passengers (paired seeds).
inline Instance gen_instance(const RoadNetwork& net, const RunConfig& cfg) {
  validate_config(cfg);
  if (net.nodes().size() < 2) {
    fail(ErrorCode::InvalidConfig, "instance generation needs at least 2 nodes");
  }
  const detail::ZoneIndex zones = detail::make_zones(net, cfg.zone_grid);
  Rng wrng(derive_seed(cfg.seed, 0));
  const std::vector<double> weights = detail::make_zone_weights(zones, cfg, wrng);
  const detail::OdSampler sampler(net, zones, weights);

  const double horizon_s = cfg.batch_window_s * cfg.n_batches;
  auto draw = [&](Rng& rng, int count, double decay_km) {
    std::vector<detail::RawTrip> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      detail::RawTrip t;
      std::tie(t.origin, t.destination) =
          decay_km > 0 ? sampler.sample_od_local(rng, decay_km) : sampler.sample_od(rng);
      t.departure_s = rng.uniform(0.0, horizon_s);
      out.push_back(t);
    }
    return out;
  };
  Rng prng(derive_seed(cfg.seed, 1));
  const std::vector<detail::RawTrip> passengers =
      draw(prng, cfg.n_passengers, cfg.passenger_trip_decay_km);
  Rng drng(derive_seed(cfg.seed, 2));
  const std::vector<detail::RawTrip> drivers = draw(drng, resolved_drivers(cfg), 0.0);
  return detail::finish_instance(net, drivers, passengers, cfg);
}

// Instance from CSV rows; node names resolved against the network, bounds
// derived from the config unless a row overrides them.
inline Instance make_instance(const RoadNetwork& net, std::span<const DriverRow> driver_rows,
                              std::span<const PassengerRow> passenger_rows,
                              const RunConfig& cfg) {
  validate_config(cfg);
  std::vector<NodeId> stops;
  for (const DriverRow& r : driver_rows) {
    stops.push_back(net.node(r.origin));
    stops.push_back(net.node(r.destination));
  }
  for (const PassengerRow& r : passenger_rows) {
    stops.push_back(net.node(r.origin));
    stops.push_back(net.node(r.destination));
  }
  Instance ins{{}, {}, travel_matrix(net, stops)};
  for (const DriverRow& row : driver_rows) {
    DriverOffer d;
    d.id = row.id;
    d.origin = net.node(row.origin);
    d.destination = net.node(row.destination);
    d.earliest_departure_s = row.earliest_departure_s;
    d.capacity = row.capacity;
    const LegCost leg = ins.tt.at(d.origin, d.destination);
    d.sp_time_s = leg.time_s;
    d.sp_dist_km = leg.distance_km;
    d.max_excess_s =
        row.has_excess_override
            ? row.max_excess_s
            : derive_constraints(leg.time_s, cfg.excess_ratio, cfg.wait_ratio).max_excess_s;
    ins.drivers.push_back(std::move(d));
  }
  for (const PassengerRow& row : passenger_rows) {
    TripRequest r;
    r.id = row.id;
    r.origin = net.node(row.origin);
    r.destination = net.node(row.destination);
    r.earliest_departure_s = row.earliest_departure_s;
    const LegCost leg = ins.tt.at(r.origin, r.destination);
    r.sp_time_s = leg.time_s;
    r.sp_dist_km = leg.distance_km;
    const ConstraintBounds b =
        derive_constraints(leg.time_s, cfg.excess_ratio, cfg.wait_ratio);
    r.max_excess_s = row.has_excess_override ? row.max_excess_s : b.max_excess_s;
    r.max_wait_s = row.has_wait_override ? row.max_wait_s : b.max_wait_s;
    ins.requests.push_back(std::move(r));
  }
  return ins;
}

inline Instance load_instance_csv(const RoadNetwork& net, const std::string& drivers_path,
                                  const std::string& passengers_path, const RunConfig& cfg) {
  const auto drivers = parse_drivers_csv(read_csv(drivers_path), drivers_path);
  const auto passengers = parse_passengers_csv(read_csv(passengers_path), passengers_path);
  return make_instance(net, drivers, passengers, cfg);
}

// --- Batch pipeline -----------------------------------------------------------

struct StageTimes {
  double pruning_s = 0;
  double combos_s = 0;
  double assign_s = 0;

  double total_s() const { return pruning_s + combos_s + assign_s; }
};

struct MatchedPlan {
  std::string driver_id;
  std::vector<std::string> request_ids;
  std::vector<Stop> stops;
  std::vector<double> arrivals_s;
  double route_dist_km = 0;
  double route_time_s = 0;
  double savings_km = 0;
};

struct BatchResult {
  Assignment assignment;
  std::vector<Candidate> candidates;
  std::vector<MatchedPlan> plans;
  StageTimes times;
  long long candidate_pair_count = 0;
  long long combination_count = 0;
  long long feasibility_checks = 0;
};

inline BatchResult run_batch_core(const RoadNetwork& net, const TravelMatrix& tt,
                                  std::span<const DriverOffer> drivers,
                                  std::span<const TripRequest> requests,
                                  const RunConfig& cfg) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };
  BatchResult out;

  const auto t0 = clock::now();
  const auto by_driver = candidate_requests_by_driver(drivers, requests, net, cfg.prune);
  for (const auto& list : by_driver) {
    out.candidate_pair_count += static_cast<long long>(list.size());
  }
  const auto t1 = clock::now();

  InsertStats istats;
  for (std::size_t di = 0; di < drivers.size(); ++di) {
    std::vector<TripRequest> mine;
    mine.reserve(by_driver[di].size());
    for (std::size_t ri : by_driver[di]) mine.push_back(requests[ri]);
    std::vector<Candidate> grown =
        driver_candidates(drivers[di], mine, requests, tt, cfg.combo_mode,
                          cfg.max_combos_per_driver, &istats);
    std::move(grown.begin(), grown.end(), std::back_inserter(out.candidates));
  }
  out.combination_count = static_cast<long long>(out.candidates.size());
  out.feasibility_checks = istats.feasibility_checks;
  const auto t2 = clock::now();

  const AssignmentProblem problem = make_assignment_problem(out.candidates, drivers, requests);
  out.assignment =
      cfg.assign_mode == AssignMode::Exact ? solve_exact(problem) : solve_greedy(problem);
  const auto t3 = clock::now();

  out.times.pruning_s = seconds(t0, t1);
  out.times.combos_s = seconds(t1, t2);
  out.times.assign_s = seconds(t2, t3);

  for (int j : out.assignment.chosen) {
    const Candidate& c = out.candidates[static_cast<std::size_t>(j)];
    MatchedPlan p;
    p.driver_id = c.driver_id;
    p.request_ids = c.request_ids;
    p.stops = c.best_stops;
    p.arrivals_s = c.best_arrivals_s;
    p.route_dist_km = c.route_dist_km;
    p.route_time_s = c.route_time_s;
    p.savings_km = c.savings_km;
    out.plans.push_back(std::move(p));
  }
  return out;
}

inline BatchResult run_batch(const RoadNetwork& net, const Instance& ins,
                             const RunConfig& cfg) {
  return run_batch_core(net, ins.tt, ins.drivers, ins.requests, cfg);
}

// --- Metrics ------------------------------------------------------------------

struct MetricSet {
  double vehicle_trips = 0;
  double vkt_km = 0;
  double vht_h = 0;
};

struct NetworkMetrics {
  MetricSet base;        // everyone drives their solo shortest path
  MetricSet shared;      // matched drivers detour, their passengers ride along
  MetricSet deltas_pct;  // savings vs base, percent (positive = reduction)
};

inline NetworkMetrics compute_metrics(const Instance& ins,
                                      std::span<const MatchedPlan> plans) {
  NetworkMetrics m;
  m.base.vehicle_trips =
      static_cast<double>(ins.drivers.size() + ins.requests.size());
  for (const DriverOffer& d : ins.drivers) {
    m.base.vkt_km += d.sp_dist_km;
    m.base.vht_h += d.sp_time_s / 3600.0;
  }
  for (const TripRequest& r : ins.requests) {
    m.base.vkt_km += r.sp_dist_km;
    m.base.vht_h += r.sp_time_s / 3600.0;
  }

  std::unordered_set<std::string> matched_drivers;
  std::unordered_set<std::string> matched_requests;
  for (const MatchedPlan& p : plans) {
    matched_drivers.insert(p.driver_id);
    for (const std::string& rid : p.request_ids) matched_requests.insert(rid);
    m.shared.vkt_km += p.route_dist_km;
    m.shared.vht_h += p.route_time_s / 3600.0;
  }
  for (const DriverOffer& d : ins.drivers) {
    if (matched_drivers.count(d.id) != 0) continue;
    m.shared.vkt_km += d.sp_dist_km;
    m.shared.vht_h += d.sp_time_s / 3600.0;
  }
  std::size_t unmatched_requests = 0;
  for (const TripRequest& r : ins.requests) {
    if (matched_requests.count(r.id) != 0) continue;
    ++unmatched_requests;
    m.shared.vkt_km += r.sp_dist_km;
    m.shared.vht_h += r.sp_time_s / 3600.0;
  }
  m.shared.vehicle_trips = static_cast<double>(ins.drivers.size() + unmatched_requests);

  auto delta = [](double base, double shared) {
    return base > 0 ? 100.0 * (base - shared) / base : 0.0;
  };
  m.deltas_pct.vehicle_trips = delta(m.base.vehicle_trips, m.shared.vehicle_trips);
  m.deltas_pct.vkt_km = delta(m.base.vkt_km, m.shared.vkt_km);
  m.deltas_pct.vht_h = delta(m.base.vht_h, m.shared.vht_h);
  return m;
}

// --- Rolling horizon ------------------------------------------------------------

struct HorizonResult {
  std::vector<BatchResult> batches;
  std::vector<MatchedPlan> plans;
  NetworkMetrics metrics;
  StageTimes times;  // summed over batches
  long long candidate_pair_count = 0;
  long long combination_count = 0;
  long long feasibility_checks = 0;
};

// Window w covers departures in [w*W, (w+1)*W); drivers belong to exactly one
// window, unmatched passengers stay eligible while their latest pickup has
// not passed the window start.
inline HorizonResult run_horizon(const RoadNetwork& net, const Instance& ins,
                                 const RunConfig& cfg) {
  validate_config(cfg);
  const double W = cfg.batch_window_s;
  const int nb = cfg.n_batches;
  auto window_of = [&](double t) {
    const int w = static_cast<int>(std::floor(t / W));
    return std::clamp(w, 0, nb - 1);
  };

  HorizonResult out;
  std::unordered_set<std::string> matched;
  for (int w = 0; w < nb; ++w) {
    std::vector<DriverOffer> drivers;
    for (const DriverOffer& d : ins.drivers) {
      if (window_of(d.earliest_departure_s) == w) drivers.push_back(d);
    }
    std::vector<TripRequest> requests;
    for (const TripRequest& r : ins.requests) {
      if (matched.count(r.id) != 0) continue;
      if (window_of(r.earliest_departure_s) > w) continue;
      if (r.latest_pickup_s() < w * W) continue;
      requests.push_back(r);
    }
    BatchResult b = run_batch_core(net, ins.tt, drivers, requests, cfg);
    for (const MatchedPlan& p : b.plans) {
      for (const std::string& rid : p.request_ids) matched.insert(rid);
      out.plans.push_back(p);
    }
    out.times.pruning_s += b.times.pruning_s;
    out.times.combos_s += b.times.combos_s;
    out.times.assign_s += b.times.assign_s;
    out.candidate_pair_count += b.candidate_pair_count;
    out.combination_count += b.combination_count;
    out.feasibility_checks += b.feasibility_checks;
    out.batches.push_back(std::move(b));
  }
  out.metrics = compute_metrics(ins, out.plans);
  return out;
}

// --- Replications ---------------------------------------------------------------

struct RepResult {
  NetworkMetrics metrics;
  StageTimes times;
  long long candidate_pair_count = 0;
  long long combination_count = 0;
  long long feasibility_checks = 0;
  int matched_requests = 0;
};

inline RepResult run_replication(const RoadNetwork& net, const RunConfig& cfg) {
  const Instance ins = gen_instance(net, cfg);
  HorizonResult h = run_horizon(net, ins, cfg);
  RepResult r;
  r.metrics = h.metrics;
  r.times = h.times;
  r.candidate_pair_count = h.candidate_pair_count;
  r.combination_count = h.combination_count;
  r.feasibility_checks = h.feasibility_checks;
  for (const MatchedPlan& p : h.plans) {
    r.matched_requests += static_cast<int>(p.request_ids.size());
  }
  return r;
}

// n seeded replications; results are slot-indexed so the worker count never
// changes the output.
inline std::vector<RepResult> run_replications(const RoadNetwork& net, const RunConfig& cfg,
                                               int n) {
  validate_config(cfg);
  if (n < 1) fail(ErrorCode::InvalidConfig, "replications must be >= 1");
  std::vector<RepResult> out(static_cast<std::size_t>(n));
  auto run_one = [&](int r) {
    RunConfig rep_cfg = cfg;
    rep_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
    out[static_cast<std::size_t>(r)] = run_replication(net, rep_cfg);
  };
  const int workers = std::min(cfg.threads, n);
  if (workers <= 1) {
    for (int r = 0; r < n; ++r) run_one(r);
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (int r = next.fetch_add(1); r < n; r = next.fetch_add(1)) run_one(r);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

struct MeanStd {
  double mean = 0;
  double stdev = 0;  // sample standard deviation
};

inline MeanStd mean_std(std::span<const double> xs) {
  MeanStd m;
  if (xs.empty()) return m;
  double sum = 0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stdev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) return 0;
  const std::size_t n = xs.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return 0;
  return sxy / std::sqrt(sxx * syy);
}

struct Aggregate {
  int replications = 0;
  MeanStd vehicle_trips, vkt_km, vht_h;
  MeanStd trips_saving_pct, vkt_saving_pct, vht_saving_pct;
  MeanStd combination_count, total_runtime_s, matched_requests;
};

inline Aggregate aggregate_results(std::span<const RepResult> reps) {
  Aggregate a;
  a.replications = static_cast<int>(reps.size());
  auto collect = [&](auto getter) {
    std::vector<double> xs;
    xs.reserve(reps.size());
    for (const RepResult& r : reps) xs.push_back(getter(r));
    return mean_std(xs);
  };
  a.vehicle_trips = collect([](const RepResult& r) { return r.metrics.shared.vehicle_trips; });
  a.vkt_km = collect([](const RepResult& r) { return r.metrics.shared.vkt_km; });
  a.vht_h = collect([](const RepResult& r) { return r.metrics.shared.vht_h; });
  a.trips_saving_pct =
      collect([](const RepResult& r) { return r.metrics.deltas_pct.vehicle_trips; });
  a.vkt_saving_pct = collect([](const RepResult& r) { return r.metrics.deltas_pct.vkt_km; });
  a.vht_saving_pct = collect([](const RepResult& r) { return r.metrics.deltas_pct.vht_h; });
  a.combination_count =
      collect([](const RepResult& r) { return static_cast<double>(r.combination_count); });
  a.total_runtime_s = collect([](const RepResult& r) { return r.times.total_s(); });
  a.matched_requests =
      collect([](const RepResult& r) { return static_cast<double>(r.matched_requests); });
  return a;
}

// --- Sensitivity sweep -----------------------------------------------------------

struct SweepGrid {
  std::vector<double> supply_ratios;
  std::vector<int> capacities;
  std::vector<double> excess_ratios;
};

// Grid file: lines supply_ratio=..., capacity=..., excess_ratio=..., each a
// comma-separated list.
inline SweepGrid parse_grid(const std::string& text) {
  SweepGrid g;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::InvalidConfig, "grid line missing '=': " + line);
    }
    std::string key = line.substr(first, eq - first);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    const std::string value = line.substr(eq + 1);
    if (key == "supply_ratio") {
      g.supply_ratios = detail::parse_double_list(value, "grid supply_ratio");
    } else if (key == "capacity") {
      for (double v : detail::parse_double_list(value, "grid capacity")) {
        g.capacities.push_back(static_cast<int>(std::llround(v)));
      }
    } else if (key == "excess_ratio") {
      g.excess_ratios = detail::parse_double_list(value, "grid excess_ratio");
    } else {
      fail(ErrorCode::InvalidConfig, "unknown grid key: " + key);
    }
  }
  if (g.supply_ratios.empty() || g.capacities.empty() || g.excess_ratios.empty()) {
    fail(ErrorCode::InvalidConfig,
         "grid needs supply_ratio, capacity, and excess_ratio lists");
  }
  return g;
}

struct SweepRow {
  double supply_ratio = 0;
  int capacity = 0;
  double excess_ratio = 0;
  MeanStd vkt_saving_pct;
  MeanStd trips_saving_pct;
  MeanStd matched_requests;
};

// Every cell reuses the base seed, so cells differing only in capacity or
// excess ratio see identical sampled demand (paired comparisons).
inline std::vector<SweepRow> sensitivity_sweep(const RoadNetwork& net, const RunConfig& base,
                                               const SweepGrid& grid) {
  std::vector<SweepRow> rows;
  for (double supply : grid.supply_ratios) {
    for (int capacity : grid.capacities) {
      for (double excess : grid.excess_ratios) {
        RunConfig cfg = base;
        cfg.supply_ratio = supply;
        cfg.n_drivers = 0;
        cfg.capacity = capacity;
        cfg.excess_ratio = excess;
        const std::vector<RepResult> reps = run_replications(net, cfg, base.replications);
        const Aggregate a = aggregate_results(reps);
        SweepRow row;
        row.supply_ratio = supply;
        row.capacity = capacity;
        row.excess_ratio = excess;
        row.vkt_saving_pct = a.vkt_saving_pct;
        row.trips_saving_pct = a.trips_saving_pct;
        row.matched_requests = a.matched_requests;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

// --- Output writers --------------------------------------------------------------

inline void write_network_csv(std::ostream& nodes_os, std::ostream& links_os,
                              const RoadNetwork& net) {
  nodes_os << "id,x_km,y_km\n";
  for (const Node& n : net.nodes()) {
    nodes_os << n.name << ',' << format_double(n.x_km) << ',' << format_double(n.y_km)
             << '\n';
  }
  links_os << "from,to,length_km,travel_time_s\n";
  for (const Link& l : net.links()) {
    links_os << net.name(l.from) << ',' << net.name(l.to) << ','
             << format_double(l.length_km) << ',' << format_double(l.travel_time_s) << '\n';
  }
}

// Bounds are written as explicit override columns so a reload reproduces the
// instance under any config.
inline void write_instance_csv(std::ostream& drivers_os, std::ostream& passengers_os,
                               const Instance& ins, const RoadNetwork& net) {
  drivers_os << "id,origin,destination,earliest_departure_s,capacity,max_excess_s\n";
  for (const DriverOffer& d : ins.drivers) {
    drivers_os << d.id << ',' << net.name(d.origin) << ',' << net.name(d.destination) << ','
               << format_double(d.earliest_departure_s) << ',' << d.capacity << ','
               << format_double(d.max_excess_s) << '\n';
  }
  passengers_os << "id,origin,destination,earliest_departure_s,max_excess_s,max_wait_s\n";
  for (const TripRequest& r : ins.requests) {
    passengers_os << r.id << ',' << net.name(r.origin) << ',' << net.name(r.destination)
                  << ',' << format_double(r.earliest_departure_s) << ','
                  << format_double(r.max_excess_s) << ',' << format_double(r.max_wait_s)
                  << '\n';
  }
}

inline void write_matches_csv(std::ostream& os, std::span<const MatchedPlan> plans,
                              const RoadNetwork& net) {
  os << "driver_id,request_ids,stop_sequence,route_dist_km,savings_km\n";
  for (const MatchedPlan& p : plans) {
    os << p.driver_id << ',' << join_ids(p.request_ids) << ','
       << format_stop_sequence(p.stops, net) << ',' << format_double(p.route_dist_km) << ','
       << format_double(p.savings_km) << '\n';
  }
}

inline void write_metrics_json(std::ostream& os, const NetworkMetrics& m) {
  nlohmann::json j;
  j["vehicle_trips"] = m.shared.vehicle_trips;
  j["vkt_km"] = m.shared.vkt_km;
  j["vht_h"] = m.shared.vht_h;
  j["base"] = {{"vehicle_trips", m.base.vehicle_trips},
               {"vkt_km", m.base.vkt_km},
               {"vht_h", m.base.vht_h}};
  j["deltas_pct"] = {{"vehicle_trips", m.deltas_pct.vehicle_trips},
                     {"vkt_km", m.deltas_pct.vkt_km},
                     {"vht_h", m.deltas_pct.vht_h}};
  os << j.dump(2) << '\n';
}

inline void write_aggregate_json(std::ostream& os, const Aggregate& a) {
  auto ms = [](const MeanStd& m) {
    return nlohmann::json{{"mean", m.mean}, {"stdev", m.stdev}};
  };
  nlohmann::json j;
  j["replications"] = a.replications;
  j["vehicle_trips"] = ms(a.vehicle_trips);
  j["vkt_km"] = ms(a.vkt_km);
  j["vht_h"] = ms(a.vht_h);
  j["deltas_pct"] = {{"vehicle_trips", ms(a.trips_saving_pct)},
                     {"vkt_km", ms(a.vkt_saving_pct)},
                     {"vht_h", ms(a.vht_saving_pct)}};
  j["combination_count"] = ms(a.combination_count);
  j["matched_requests"] = ms(a.matched_requests);
  j["total_runtime_s"] = ms(a.total_runtime_s);
  os << j.dump(2) << '\n';
}

struct RuntimeRow {
  std::string stage;
  double seconds = 0;
  long long combination_count = 0;
};

inline std::vector<RuntimeRow> runtime_rows(const BatchResult& b) {
  return {{"pruning", b.times.pruning_s, b.combination_count},
          {"combos", b.times.combos_s, b.combination_count},
          {"assign", b.times.assign_s, b.combination_count},
          {"total", b.times.total_s(), b.combination_count}};
}

inline std::vector<RuntimeRow> runtime_rows(std::span<const RepResult> reps) {
  std::vector<RuntimeRow> rows;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const RepResult& r = reps[i];
    const std::string tag = "r" + std::to_string(i) + ":";
    rows.push_back({tag + "pruning", r.times.pruning_s, r.combination_count});
    rows.push_back({tag + "combos", r.times.combos_s, r.combination_count});
    rows.push_back({tag + "assign", r.times.assign_s, r.combination_count});
    rows.push_back({tag + "total", r.times.total_s(), r.combination_count});
  }
  return rows;
}

// The seconds column is wall-clock and therefore the one output that is not
// reproducible bit for bit.
inline void write_runtimes_csv(std::ostream& os, std::span<const RuntimeRow> rows) {
  os << "stage,seconds,combination_count\n";
  for (const RuntimeRow& r : rows) {
    os << r.stage << ',' << format_double(r.seconds) << ',' << r.combination_count << '\n';
  }
}

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os << "supply_ratio,capacity,excess_ratio,mean_vkt_saving_pct,stdev_vkt_saving_pct,"
        "mean_trips_saving_pct,mean_matched_requests\n";
  for (const SweepRow& r : rows) {
    os << format_double(r.supply_ratio) << ',' << r.capacity << ','
       << format_double(r.excess_ratio) << ',' << format_double(r.vkt_saving_pct.mean) << ','
       << format_double(r.vkt_saving_pct.stdev) << ','
       << format_double(r.trips_saving_pct.mean) << ','
       << format_double(r.matched_requests.mean) << '\n';
  }
}

}  // namespace ridematch
