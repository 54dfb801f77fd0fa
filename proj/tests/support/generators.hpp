#pragma once

// Seeded random instances for property tests: small strongly connected
// networks, one driver with a handful of requests, and random set-packing
// problems. Bounds are drawn wide enough that feasible schedules are common
// but far from guaranteed.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ridematch/assign.hpp"
#include "ridematch/demand.hpp"
#include "ridematch/network.hpp"
#include "ridematch/rng.hpp"

namespace testsupport {

using ridematch::AssignmentProblem;
using ridematch::DriverOffer;
using ridematch::LinkSpec;
using ridematch::NodeId;
using ridematch::NodeSpec;
using ridematch::RoadNetwork;
using ridematch::Rng;
using ridematch::TravelMatrix;
using ridematch::TripRequest;

// Random strongly connected network: a bidirectional random tree plus a few
// extra one-way links. Lengths exceed the straight line, speeds 30-60 km/h.
inline RoadNetwork random_network(Rng& rng, int n_nodes, double span_km = 5.0) {
  std::vector<NodeSpec> nodes;
  for (int i = 0; i < n_nodes; ++i) {
    nodes.push_back(NodeSpec{"n" + std::to_string(i), rng.uniform(0.0, span_km),
                             rng.uniform(0.0, span_km)});
  }
  std::vector<LinkSpec> links;
  auto add_link = [&](int a, int b) {
    const double dx = nodes[static_cast<std::size_t>(a)].x_km -
                      nodes[static_cast<std::size_t>(b)].x_km;
    const double dy = nodes[static_cast<std::size_t>(a)].y_km -
                      nodes[static_cast<std::size_t>(b)].y_km;
    const double length = std::max(std::hypot(dx, dy), 0.01) * (1.0 + rng.uniform(0.0, 0.3));
    const double speed_kmh = rng.uniform(30.0, 60.0);
    links.push_back(LinkSpec{nodes[static_cast<std::size_t>(a)].id,
                             nodes[static_cast<std::size_t>(b)].id, length,
                             length / speed_kmh * 3600.0});
  };
  for (int i = 1; i < n_nodes; ++i) {
    const int j = static_cast<int>(rng.uniform_int(0, i - 1));
    add_link(i, j);
    add_link(j, i);
  }
  const long extra = rng.uniform_int(0, n_nodes);
  for (long e = 0; e < extra; ++e) {
    const int a = static_cast<int>(rng.uniform_int(0, n_nodes - 1));
    const int b = static_cast<int>(rng.uniform_int(0, n_nodes - 1));
    if (a != b) add_link(a, b);
  }
  return load_network(nodes, links);
}

inline TravelMatrix full_matrix(const RoadNetwork& net) {
  std::vector<NodeId> all;
  for (std::size_t i = 0; i < net.nodes().size(); ++i) all.push_back(static_cast<NodeId>(i));
  return travel_matrix(net, std::move(all));
}

inline std::pair<NodeId, NodeId> random_od(Rng& rng, const RoadNetwork& net) {
  const long n = static_cast<long>(net.nodes().size());
  const NodeId o = static_cast<NodeId>(rng.uniform_int(0, n - 1));
  NodeId d = o;
  while (d == o) d = static_cast<NodeId>(rng.uniform_int(0, n - 1));
  return {o, d};
}

inline DriverOffer random_driver(Rng& rng, const RoadNetwork& net, const TravelMatrix& tt,
                                 int capacity, const std::string& id = "d0") {
  DriverOffer d;
  d.id = id;
  std::tie(d.origin, d.destination) = random_od(rng, net);
  d.earliest_departure_s = rng.uniform(0.0, 600.0);
  d.capacity = capacity;
  const ridematch::LegCost leg = tt.at(d.origin, d.destination);
  d.sp_time_s = leg.time_s;
  d.sp_dist_km = leg.distance_km;
  d.max_excess_s = rng.uniform(0.4, 1.2) * leg.time_s + rng.uniform(100.0, 600.0);
  return d;
}

inline TripRequest random_request(Rng& rng, const RoadNetwork& net, const TravelMatrix& tt,
                                  const std::string& id, double anchor_departure_s) {
  TripRequest r;
  r.id = id;
  std::tie(r.origin, r.destination) = random_od(rng, net);
  r.earliest_departure_s = std::max(0.0, anchor_departure_s + rng.uniform(-60.0, 240.0));
  const ridematch::LegCost leg = tt.at(r.origin, r.destination);
  r.sp_time_s = leg.time_s;
  r.sp_dist_km = leg.distance_km;
  r.max_excess_s = rng.uniform(0.4, 1.2) * leg.time_s + rng.uniform(60.0, 450.0);
  r.max_wait_s = rng.uniform(0.3, 1.0) * r.max_excess_s + rng.uniform(30.0, 300.0);
  return r;
}

struct SmallInstance {
  RoadNetwork net;
  TravelMatrix tt;
  DriverOffer driver;
  std::vector<TripRequest> requests;
};

inline SmallInstance random_small_instance(Rng& rng, int n_requests, int capacity_lo = 1,
                                           int capacity_hi = 4) {
  SmallInstance ins;
  ins.net = random_network(rng, static_cast<int>(rng.uniform_int(6, 14)));
  ins.tt = full_matrix(ins.net);
  const int capacity = static_cast<int>(rng.uniform_int(capacity_lo, capacity_hi));
  ins.driver = random_driver(rng, ins.net, ins.tt, capacity);
  for (int i = 0; i < n_requests; ++i) {
    ins.requests.push_back(random_request(rng, ins.net, ins.tt, "r" + std::to_string(i),
                                          ins.driver.earliest_departure_s));
  }
  return ins;
}

// Random set-packing input, duplicate values injected on purpose so value
// ties actually occur. Negative and zero values appear as well.
inline AssignmentProblem random_assignment_problem(Rng& rng, int n_candidates) {
  AssignmentProblem p;
  p.n_drivers = static_cast<int>(rng.uniform_int(2, 6));
  p.n_passengers = static_cast<int>(rng.uniform_int(2, 8));
  for (int i = 0; i < n_candidates; ++i) {
    p.driver_of.push_back(static_cast<int>(rng.uniform_int(0, p.n_drivers - 1)));
    const int k = static_cast<int>(rng.uniform_int(1, 3));
    std::vector<int> passengers;
    for (int j = 0; j < k; ++j) {
      const int pass = static_cast<int>(rng.uniform_int(0, p.n_passengers - 1));
      if (std::find(passengers.begin(), passengers.end(), pass) == passengers.end()) {
        passengers.push_back(pass);
      }
    }
    std::sort(passengers.begin(), passengers.end());
    p.passengers_of.push_back(std::move(passengers));
    double value = rng.uniform(-2.0, 8.0);
    if (!p.values.empty() && rng.chance(0.2)) {
      value = p.values[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<long>(p.values.size()) - 1))];
    }
    p.values.push_back(value);
  }
  return p;
}

}  // namespace testsupport
