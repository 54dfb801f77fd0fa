#pragma once

// Geometric pre-filter on driver/request pairs. A driver bounded by a total
// driving time of sp_time + max_excess can only visit points whose Euclidean
// focal sum (origin, destination) is at most v_max * budget, because network
// link lengths are never shorter than straight-line distance. Likewise the
// driver can only reach pickups within v_max * (latest_pickup - departure) of
// the origin. Both regions are intersected conservatively, so the filter can
// over-include but never drops a pair that has a feasible sequence.

#include <cmath>
#include <span>
#include <vector>

#include "ridematch/demand.hpp"
#include "ridematch/network.hpp"

namespace ridematch {

struct PointKm {
  double x = 0;
  double y = 0;
};

// Coordinates are km-scale, so the plain square root cannot overflow and
// avoids hypot's range-protection cost in the pair loop.
inline double euclid_km(const PointKm& a, const PointKm& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

struct DriverEllipse {
  PointKm focus1;       // driver origin
  PointKm focus2;       // driver destination
  double major_axis_km = 0;  // 2a = v_max * (sp_time + max_excess)
};

struct PickupCircle {
  PointKm center;       // passenger origin
  double radius_km = 0;  // v_max * max(0, latest_pickup - driver departure)
};

inline PointKm node_point(const RoadNetwork& net, NodeId id) {
  const Node& n = net.nodes()[static_cast<std::size_t>(id)];
  return PointKm{n.x_km, n.y_km};
}

inline DriverEllipse driver_ellipse(const DriverOffer& driver, const RoadNetwork& net) {
  DriverEllipse e;
  e.focus1 = node_point(net, driver.origin);
  e.focus2 = node_point(net, driver.destination);
  e.major_axis_km =
      net.max_speed_kmh() * (driver.sp_time_s + driver.max_excess_s) / 3600.0;
  return e;
}

inline PickupCircle pickup_circle(const TripRequest& request, double driver_departure_s,
                                  const RoadNetwork& net) {
  PickupCircle c;
  c.center = node_point(net, request.origin);
  const double budget_s = std::max(0.0, request.latest_pickup_s() - driver_departure_s);
  c.radius_km = net.max_speed_kmh() * budget_s / 3600.0;
  return c;
}

// True whenever the regions can intersect: any common point p satisfies
// |f1 p| + |f2 p| <= 2a and |p c| <= r, hence the focal sum at the center is
// at most 2a + 2r. The converse may fail, which only admits extra pairs.
inline bool intersects(const DriverEllipse& e, const PickupCircle& c) {
  const double focal_sum = euclid_km(e.focus1, c.center) + euclid_km(e.focus2, c.center);
  return focal_sum <= e.major_axis_km + 2.0 * c.radius_km + geometry_slack_km;
}

struct CandidatePair {
  std::size_t driver = 0;   // index into the drivers span
  std::size_t request = 0;  // index into the requests span
};

// Driver-major, request-minor order; deterministic for a given input order.
// Request constants are hoisted out of the driver loop, and a far-field
// precheck (the focal sum is at least twice the distance to the foci
// midpoint, so far centers cannot pass) skips both square roots for the
// bulk of rejected pairs.
inline std::vector<CandidatePair> candidate_pairs(std::span<const DriverOffer> drivers,
                                                  std::span<const TripRequest> requests,
                                                  const RoadNetwork& net) {
  struct RequestGeom {
    PointKm origin;
    double latest_pickup_s;
  };
  std::vector<RequestGeom> geom;
  geom.reserve(requests.size());
  for (const TripRequest& r : requests) {
    geom.push_back(RequestGeom{node_point(net, r.origin), r.latest_pickup_s()});
  }
  const double kmh = net.max_speed_kmh();

  std::vector<CandidatePair> out;
  for (std::size_t di = 0; di < drivers.size(); ++di) {
    const DriverEllipse e = driver_ellipse(drivers[di], net);
    const PointKm mid{(e.focus1.x + e.focus2.x) / 2, (e.focus1.y + e.focus2.y) / 2};
    const double depart_s = drivers[di].earliest_departure_s;
    for (std::size_t ri = 0; ri < requests.size(); ++ri) {
      const RequestGeom& g = geom[ri];
      const double radius_km =
          kmh * std::max(0.0, g.latest_pickup_s - depart_s) / 3600.0;
      const double reach = e.major_axis_km + 2.0 * radius_km + geometry_slack_km;
      const double dx = g.origin.x - mid.x;
      const double dy = g.origin.y - mid.y;
      if (4.0 * (dx * dx + dy * dy) > reach * reach) continue;
      if (intersects(e, PickupCircle{g.origin, radius_km})) {
        out.push_back(CandidatePair{di, ri});
      }
    }
  }
  return out;
}

// Same filter grouped per driver, the shape combination generation consumes.
inline std::vector<std::vector<std::size_t>> candidate_requests_by_driver(
    std::span<const DriverOffer> drivers, std::span<const TripRequest> requests,
    const RoadNetwork& net, bool prune_enabled = true) {
  std::vector<std::vector<std::size_t>> by_driver(drivers.size());
  if (!prune_enabled) {
    for (auto& list : by_driver) {
      list.resize(requests.size());
      for (std::size_t ri = 0; ri < requests.size(); ++ri) list[ri] = ri;
    }
    return by_driver;
  }
  for (const CandidatePair& p : candidate_pairs(drivers, requests, net)) {
    by_driver[p.driver].push_back(p.request);
  }
  return by_driver;
}

}  // namespace ridematch
