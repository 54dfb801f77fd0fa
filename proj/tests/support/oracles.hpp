#pragma once

// Brute-force reference implementations used only by tests. Everything here
// recomputes results from the scheduling rules directly (permutations, subset
// enumeration) without touching the tree, combination, or solver machinery,
// so the library can be checked against an independent source of truth.

#include <algorithm>
#include <bit>
#include <optional>
#include <span>
#include <vector>

#include "ridematch/assign.hpp"
#include "ridematch/demand.hpp"
#include "ridematch/dyntree.hpp"
#include "ridematch/network.hpp"

namespace testsupport {

using ridematch::AssignmentProblem;
using ridematch::DriverOffer;
using ridematch::Stop;
using ridematch::StopKind;
using ridematch::TravelMatrix;
using ridematch::TripRequest;
using ridematch::time_slack_s;

struct SimulatedRoute {
  std::vector<Stop> stops;  // start, middle stops, end
  std::vector<double> arrivals_s;
  double dist_km = 0;
  double time_s = 0;  // driving time only
};

// Replays one pickup/drop-off ordering under the scheduling rules: the driver
// leaves at their earliest departure, waits at a pickup until the passenger's
// earliest departure, and every wait, detour, and seat bound must hold.
inline std::optional<SimulatedRoute> simulate_route(const DriverOffer& driver,
                                                    std::span<const TripRequest> requests,
                                                    std::span<const Stop> middle,
                                                    const TravelMatrix& tt) {
  SimulatedRoute out;
  out.stops.push_back(origin_stop(driver));
  out.arrivals_s.push_back(driver.earliest_departure_s);

  double t = driver.earliest_departure_s;
  int q = 0;
  std::vector<const TripRequest*> picked;
  auto find = [&](const std::string& id) -> const TripRequest* {
    for (const TripRequest& r : requests) {
      if (r.id == id) return &r;
    }
    return nullptr;
  };

  std::vector<Stop> rest(middle.begin(), middle.end());
  rest.push_back(destination_stop(driver));
  for (const Stop& s : rest) {
    const ridematch::LegCost leg = tt.at(out.stops.back().node, s.node);
    const double raw = t + leg.time_s;
    out.dist_km += leg.distance_km;
    out.time_s += leg.time_s;
    double service = raw;
    if (s.kind == StopKind::PickupRequest) {
      const TripRequest* r = find(s.owner);
      if (r == nullptr) return std::nullopt;
      service = std::max(raw, r->earliest_departure_s);
      if (service - r->earliest_departure_s > r->max_wait_s + time_slack_s) {
        return std::nullopt;
      }
      if (++q > driver.capacity) return std::nullopt;
      picked.push_back(r);
    } else if (s.kind == StopKind::DropoffRequest) {
      const TripRequest* r = find(s.owner);
      if (r == nullptr) return std::nullopt;
      if (std::find(picked.begin(), picked.end(), r) == picked.end()) return std::nullopt;
      if (raw - r->earliest_departure_s - r->sp_time_s > r->max_excess_s + time_slack_s) {
        return std::nullopt;
      }
      --q;
    } else if (s.kind == StopKind::DriverDestination) {
      if (raw - driver.earliest_departure_s - driver.sp_time_s >
          driver.max_excess_s + time_slack_s) {
        return std::nullopt;
      }
    }
    out.stops.push_back(s);
    out.arrivals_s.push_back(service);
    t = service;
  }
  return out;
}

// All feasible orderings of the 2m pickup/drop-off stops (pickup before
// drop-off per request), as full start-to-end stop sequences. Every
// precedence-respecting ordering is generated and each complete ordering is
// simulated on its own; nothing is shared with how the tree prunes.
inline std::vector<std::vector<Stop>> oracle_sequences(const DriverOffer& driver,
                                                       std::span<const TripRequest> requests,
                                                       const TravelMatrix& tt) {
  const std::size_t m = requests.size();
  std::vector<std::vector<Stop>> out;
  std::vector<Stop> middle;
  std::vector<bool> picked_up(m, false);
  std::vector<bool> dropped_off(m, false);
  auto generate = [&](auto&& self) -> void {
    if (middle.size() == 2 * m) {
      if (auto route = simulate_route(driver, requests, middle, tt)) {
        out.push_back(std::move(route->stops));
      }
      return;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!picked_up[i]) {
        picked_up[i] = true;
        middle.push_back(pickup_stop(requests[i]));
        self(self);
        middle.pop_back();
        picked_up[i] = false;
      } else if (!dropped_off[i]) {
        dropped_off[i] = true;
        middle.push_back(dropoff_stop(requests[i]));
        self(self);
        middle.pop_back();
        dropped_off[i] = false;
      }
    }
  };
  generate(generate);
  return out;
}

inline bool stop_less(const Stop& a, const Stop& b) {
  if (a.owner != b.owner) return a.owner < b.owner;
  if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  return a.node < b.node;
}

inline bool sequence_less(const std::vector<Stop>& a, const std::vector<Stop>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), stop_less);
}

inline std::vector<std::vector<Stop>> sorted_sequences(std::vector<std::vector<Stop>> seqs) {
  std::sort(seqs.begin(), seqs.end(), sequence_less);
  return seqs;
}

// Best achievable savings over all feasible orderings; the combo is folded in
// ascending id order, mirroring how production code values a served set.
inline std::optional<double> oracle_best_savings(const DriverOffer& driver,
                                                 std::vector<TripRequest> requests,
                                                 const TravelMatrix& tt) {
  std::sort(requests.begin(), requests.end(),
            [](const TripRequest& a, const TripRequest& b) { return a.id < b.id; });
  std::optional<double> best;
  for (const std::vector<Stop>& seq : oracle_sequences(driver, requests, tt)) {
    const std::span<const Stop> middle(seq.data() + 1, seq.size() - 2);
    const auto route = simulate_route(driver, requests, middle, tt);
    const double value = candidate_value(driver, requests, route->dist_km);
    if (!best || value > *best) best = value;
  }
  return best;
}

struct OracleSubset {
  std::vector<std::string> request_ids;  // sorted
  double savings_km = 0;
};

// Every nonempty feasible subset of the candidate requests with its best
// savings, sorted by id set. Subsets larger than the seat count are skipped:
// a combination never exceeds the vehicle capacity even though interleaved
// pickups could serve more over a route.
inline std::vector<OracleSubset> oracle_feasible_subsets(const DriverOffer& driver,
                                                         std::span<const TripRequest> requests,
                                                         const TravelMatrix& tt) {
  std::vector<OracleSubset> out;
  const std::size_t m = requests.size();
  for (std::size_t mask = 1; mask < (std::size_t{1} << m); ++mask) {
    if (std::popcount(mask) > driver.capacity) continue;
    std::vector<TripRequest> subset;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask & (std::size_t{1} << i)) subset.push_back(requests[i]);
    }
    if (auto savings = oracle_best_savings(driver, subset, tt)) {
      OracleSubset row;
      for (const TripRequest& r : subset) row.request_ids.push_back(r.id);
      std::sort(row.request_ids.begin(), row.request_ids.end());
      row.savings_km = *savings;
      out.push_back(std::move(row));
    }
  }
  std::sort(out.begin(), out.end(), [](const OracleSubset& a, const OracleSubset& b) {
    return a.request_ids < b.request_ids;
  });
  return out;
}

struct OraclePacking {
  double best_value = 0;  // empty selection when nothing positive exists
  std::vector<int> best_set;
};

// Exhaustive set packing: every subset of candidates, rejecting any pair that
// shares a driver or a passenger; values folded in ascending candidate order.
inline OraclePacking oracle_set_packing(const AssignmentProblem& p) {
  const std::size_t n = p.size();
  OraclePacking best;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<int> chosen;
    std::vector<bool> driver_used(static_cast<std::size_t>(p.n_drivers), false);
    std::vector<bool> passenger_used(static_cast<std::size_t>(p.n_passengers), false);
    bool ok = true;
    double value = 0;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask & (std::size_t{1} << i))) continue;
      if (driver_used[static_cast<std::size_t>(p.driver_of[i])]) {
        ok = false;
        break;
      }
      driver_used[static_cast<std::size_t>(p.driver_of[i])] = true;
      for (int pass : p.passengers_of[i]) {
        if (passenger_used[static_cast<std::size_t>(pass)]) {
          ok = false;
          break;
        }
        passenger_used[static_cast<std::size_t>(pass)] = true;
      }
      value += p.values[i];
      chosen.push_back(static_cast<int>(i));
    }
    if (!ok) continue;
    if (value > best.best_value ||
        (value == best.best_value && !best.best_set.empty() && chosen < best.best_set)) {
      best.best_value = value;
      best.best_set = chosen;
    }
  }
  return best;
}

}  // namespace testsupport
