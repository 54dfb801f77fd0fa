#pragma once

// Demand-side trip requests and supply-side driver offers, plus the derived
// level-of-service bounds: a participant may spend at most max_excess_s more
// than their solo shortest-path time door to door, and a passenger may wait
// at most max_wait_s past their earliest departure for pickup.

#include <span>
#include <string>
#include <vector>

#include "ridematch/csv.hpp"
#include "ridematch/errors.hpp"
#include "ridematch/network.hpp"

namespace ridematch {

struct ConstraintBounds {
  double max_excess_s = 0;
  double max_wait_s = 0;
};

// max_excess = excess_ratio * solo time; max_wait = wait_ratio * max_excess.
inline ConstraintBounds derive_constraints(double sp_time_s, double excess_ratio,
                                           double wait_ratio) {
  if (excess_ratio < 0 || wait_ratio < 0) {
    fail(ErrorCode::InvalidConfig, "constraint ratios must be >= 0");
  }
  ConstraintBounds b;
  b.max_excess_s = excess_ratio * sp_time_s;
  b.max_wait_s = wait_ratio * b.max_excess_s;
  return b;
}

struct TripRequest {
  std::string id;
  NodeId origin = -1;
  NodeId destination = -1;
  double earliest_departure_s = 0;
  double sp_time_s = 0;
  double sp_dist_km = 0;
  double max_excess_s = 0;
  double max_wait_s = 0;
  int seats = 1;

  double latest_pickup_s() const { return earliest_departure_s + max_wait_s; }
};

struct DriverOffer {
  std::string id;
  NodeId origin = -1;
  NodeId destination = -1;
  double earliest_departure_s = 0;  // departure is fixed at this instant
  int capacity = 1;
  double sp_time_s = 0;
  double sp_dist_km = 0;
  double max_excess_s = 0;
};

enum class StopKind {
  DriverOrigin,
  PickupRequest,
  DropoffRequest,
  DriverDestination,
};

inline int load_delta(StopKind kind) {
  switch (kind) {
    case StopKind::PickupRequest:
      return 1;
    case StopKind::DropoffRequest:
      return -1;
    default:
      return 0;
  }
}

inline const char* stop_kind_name(StopKind kind) {
  switch (kind) {
    case StopKind::DriverOrigin:
      return "start";
    case StopKind::PickupRequest:
      return "pickup";
    case StopKind::DropoffRequest:
      return "dropoff";
    case StopKind::DriverDestination:
      return "end";
  }
  return "?";
}

struct Stop {
  StopKind kind = StopKind::DriverOrigin;
  std::string owner;  // request id, or driver id for endpoint stops
  NodeId node = -1;

  int load() const { return load_delta(kind); }

  bool operator==(const Stop&) const = default;
};

inline Stop pickup_stop(const TripRequest& r) {
  return Stop{StopKind::PickupRequest, r.id, r.origin};
}
inline Stop dropoff_stop(const TripRequest& r) {
  return Stop{StopKind::DropoffRequest, r.id, r.destination};
}
inline Stop origin_stop(const DriverOffer& d) {
  return Stop{StopKind::DriverOrigin, d.id, d.origin};
}
inline Stop destination_stop(const DriverOffer& d) {
  return Stop{StopKind::DriverDestination, d.id, d.destination};
}

// Distance saved by serving `combo` along a route of route_dist_km compared
// to everyone driving solo: sum of passenger solo distances plus the driver's
// solo distance minus the shared route length. Can be negative for long
// detours; the assignment stage decides whether such candidates are used.
inline double candidate_value(const DriverOffer& driver,
                              std::span<const TripRequest> combo,
                              double route_dist_km) {
  double value = driver.sp_dist_km - route_dist_km;
  for (const TripRequest& r : combo) value += r.sp_dist_km;
  return value;
}

// --- CSV schemas ------------------------------------------------------------
//
// drivers:    id,origin,destination,earliest_departure_s,capacity[,max_excess_s]
// passengers: id,origin,destination,earliest_departure_s[,max_excess_s,max_wait_s]
//
// Bounds default to the config ratios applied to the participant's solo time;
// the optional override columns take precedence row by row (blank = derive).

struct DriverRow {
  std::string id, origin, destination;
  double earliest_departure_s = 0;
  int capacity = 1;
  bool has_excess_override = false;
  double max_excess_s = 0;
};

struct PassengerRow {
  std::string id, origin, destination;
  double earliest_departure_s = 0;
  bool has_excess_override = false;
  double max_excess_s = 0;
  bool has_wait_override = false;
  double max_wait_s = 0;
};

inline std::vector<DriverRow> parse_drivers_csv(const CsvTable& table, const std::string& what) {
  const int c_id = csv_column(table, "id", what);
  const int c_o = csv_column(table, "origin", what);
  const int c_d = csv_column(table, "destination", what);
  const int c_dep = csv_column(table, "earliest_departure_s", what);
  const int c_cap = csv_column(table, "capacity", what);
  const int c_exc = csv_column(table, "max_excess_s", what, false);
  std::vector<DriverRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    DriverRow r;
    r.id = row[static_cast<std::size_t>(c_id)];
    r.origin = row[static_cast<std::size_t>(c_o)];
    r.destination = row[static_cast<std::size_t>(c_d)];
    r.earliest_departure_s = csv_double(row[static_cast<std::size_t>(c_dep)], what);
    r.capacity = static_cast<int>(csv_long(row[static_cast<std::size_t>(c_cap)], what));
    if (r.capacity < 1) fail(ErrorCode::ParseError, what + ": capacity must be >= 1");
    if (c_exc >= 0 && static_cast<std::size_t>(c_exc) < row.size() &&
        !row[static_cast<std::size_t>(c_exc)].empty()) {
      r.has_excess_override = true;
      r.max_excess_s = csv_double(row[static_cast<std::size_t>(c_exc)], what);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<PassengerRow> parse_passengers_csv(const CsvTable& table,
                                                      const std::string& what) {
  const int c_id = csv_column(table, "id", what);
  const int c_o = csv_column(table, "origin", what);
  const int c_d = csv_column(table, "destination", what);
  const int c_dep = csv_column(table, "earliest_departure_s", what);
  const int c_exc = csv_column(table, "max_excess_s", what, false);
  const int c_wait = csv_column(table, "max_wait_s", what, false);
  std::vector<PassengerRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    PassengerRow r;
    r.id = row[static_cast<std::size_t>(c_id)];
    r.origin = row[static_cast<std::size_t>(c_o)];
    r.destination = row[static_cast<std::size_t>(c_d)];
    r.earliest_departure_s = csv_double(row[static_cast<std::size_t>(c_dep)], what);
    if (c_exc >= 0 && static_cast<std::size_t>(c_exc) < row.size() &&
        !row[static_cast<std::size_t>(c_exc)].empty()) {
      r.has_excess_override = true;
      r.max_excess_s = csv_double(row[static_cast<std::size_t>(c_exc)], what);
    }
    if (c_wait >= 0 && static_cast<std::size_t>(c_wait) < row.size() &&
        !row[static_cast<std::size_t>(c_wait)].empty()) {
      r.has_wait_override = true;
      r.max_wait_s = csv_double(row[static_cast<std::size_t>(c_wait)], what);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace ridematch
