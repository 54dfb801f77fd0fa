#pragma once

// Per-driver schedule trees. Every root-to-leaf path is one feasible
// pickup/drop-off sequence for the driver and the served request set: root is
// the driver origin at the fixed departure time, leaves are the driver
// destination, pickups precede their drop-offs, and every node satisfies the
// wait, excess-time, and capacity bounds. Inserting a request produces a new
// tree holding exactly the feasible sequences of the enlarged set; the input
// tree is never mutated, so trees for smaller sets stay valid for reuse.

#include <algorithm>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ridematch/csv.hpp"
#include "ridematch/demand.hpp"
#include "ridematch/errors.hpp"
#include "ridematch/network.hpp"

namespace ridematch {

// Absolute tolerance on time-bound comparisons. Shared by the test oracles so
// boundary instances classify identically on both sides.
inline constexpr double time_slack_s = 1e-9;

enum class FeasibilityOutcome {
  Feasible,
  TimeViolated,
  CapacityViolatedPickup,
  CapacityViolatedInterval,
  PrecedenceViolated,
};

inline const char* outcome_name(FeasibilityOutcome o) {
  switch (o) {
    case FeasibilityOutcome::Feasible:
      return "feasible";
    case FeasibilityOutcome::TimeViolated:
      return "time";
    case FeasibilityOutcome::CapacityViolatedPickup:
      return "capacity-pickup";
    case FeasibilityOutcome::CapacityViolatedInterval:
      return "capacity-interval";
    case FeasibilityOutcome::PrecedenceViolated:
      return "precedence";
  }
  return "?";
}

struct TreeNode {
  Stop stop;
  // Service time at the stop: the raw arrival, or the end of the wait when
  // the vehicle reaches a pickup before the passenger's earliest departure.
  double arrival_s = 0;
  int occupancy_after = 0;
  std::vector<std::unique_ptr<TreeNode>> children;
};

// Candidate placement of one stop, presented to check_stop.
struct StopContext {
  Stop stop;
  double raw_arrival_s = 0;   // parent service time + travel time to the stop
  int occupancy_before = 0;
  bool pickup_visited = true;  // owner's pickup already lies on this path
  // True when re-validating an existing node that now sits between a newly
  // inserted pickup and its drop-off; a capacity overflow there is reported
  // as CapacityViolatedInterval instead of CapacityViolatedPickup.
  bool interval_copy = false;
};

struct StopCheck {
  FeasibilityOutcome outcome = FeasibilityOutcome::Feasible;
  double service_time_s = 0;
  int occupancy_after = 0;
};

namespace detail {

inline const TripRequest* find_request(std::span<const TripRequest> requests,
                                       const std::string& id) {
  for (const TripRequest& r : requests) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

}  // namespace detail

// Validates one stop placement. Pickups wait for the passenger's earliest
// departure, so the wait bound compares the raw arrival against t_ED + max
// wait; drop-offs and the driver destination check the door-to-door excess
// over the owner's solo time. Time checks run before capacity checks so a
// TimeViolated verdict licenses abandoning the whole subtree (arrival times
// only grow towards the leaves).
inline StopCheck check_stop(const DriverOffer& driver,
                            std::span<const TripRequest> requests,
                            const StopContext& ctx) {
  StopCheck out;
  out.service_time_s = ctx.raw_arrival_s;
  out.occupancy_after = ctx.occupancy_before + ctx.stop.load();
  switch (ctx.stop.kind) {
    case StopKind::DriverOrigin:
      out.service_time_s = driver.earliest_departure_s;
      return out;
    case StopKind::PickupRequest: {
      const TripRequest* r = detail::find_request(requests, ctx.stop.owner);
      if (r == nullptr) fail(ErrorCode::InvalidConfig, "unknown request: " + ctx.stop.owner);
      out.service_time_s = std::max(ctx.raw_arrival_s, r->earliest_departure_s);
      if (out.service_time_s - r->earliest_departure_s > r->max_wait_s + time_slack_s) {
        out.outcome = FeasibilityOutcome::TimeViolated;
        return out;
      }
      if (out.occupancy_after > driver.capacity) {
        out.outcome = ctx.interval_copy ? FeasibilityOutcome::CapacityViolatedInterval
                                        : FeasibilityOutcome::CapacityViolatedPickup;
        return out;
      }
      return out;
    }
    case StopKind::DropoffRequest: {
      const TripRequest* r = detail::find_request(requests, ctx.stop.owner);
      if (r == nullptr) fail(ErrorCode::InvalidConfig, "unknown request: " + ctx.stop.owner);
      if (!ctx.pickup_visited) {
        out.outcome = FeasibilityOutcome::PrecedenceViolated;
        return out;
      }
      const double excess = ctx.raw_arrival_s - r->earliest_departure_s - r->sp_time_s;
      if (excess > r->max_excess_s + time_slack_s) {
        out.outcome = FeasibilityOutcome::TimeViolated;
        return out;
      }
      return out;
    }
    case StopKind::DriverDestination: {
      const double excess =
          ctx.raw_arrival_s - driver.earliest_departure_s - driver.sp_time_s;
      if (excess > driver.max_excess_s + time_slack_s) {
        out.outcome = FeasibilityOutcome::TimeViolated;
        return out;
      }
      return out;
    }
  }
  fail(ErrorCode::InvalidConfig, "invalid stop kind");
}

class ScheduleTree {
 public:
  ScheduleTree(DriverOffer driver, std::vector<TripRequest> served,
               std::unique_ptr<TreeNode> root)
      : driver_(std::move(driver)), served_(std::move(served)), root_(std::move(root)) {
    std::sort(served_.begin(), served_.end(),
              [](const TripRequest& a, const TripRequest& b) { return a.id < b.id; });
  }

  ScheduleTree(ScheduleTree&&) = default;
  ScheduleTree& operator=(ScheduleTree&&) = default;

  const DriverOffer& driver() const { return driver_; }
  const std::vector<TripRequest>& served() const { return served_; }
  const TreeNode& root() const { return *root_; }

  bool serves(const std::string& request_id) const {
    return detail::find_request(served_, request_id) != nullptr;
  }

 private:
  DriverOffer driver_;
  std::vector<TripRequest> served_;  // sorted by id
  std::unique_ptr<TreeNode> root_;
};

// Solo schedule: origin at the fixed departure, destination one leg later.
inline ScheduleTree init_tree(const DriverOffer& driver, const TravelMatrix& tt) {
  auto root = std::make_unique<TreeNode>();
  root->stop = origin_stop(driver);
  root->arrival_s = driver.earliest_departure_s;
  root->occupancy_after = 0;

  auto leaf = std::make_unique<TreeNode>();
  leaf->stop = destination_stop(driver);
  leaf->arrival_s =
      driver.earliest_departure_s + tt.at(driver.origin, driver.destination).time_s;
  leaf->occupancy_after = 0;
  root->children.push_back(std::move(leaf));
  return ScheduleTree(driver, {}, std::move(root));
}

struct InsertStats {
  long long feasibility_checks = 0;
};

namespace detail {

// Insertion walks the old tree once per placement branch. At every position
// it first tries the pending stop of the current phase (pickup, then its
// drop-off strictly below), then re-validates copies of the old children with
// the accumulated delay. Old branches survive only where a later placement
// still completes them; leaves are kept only once both stops are placed.
class Inserter {
 public:
  Inserter(const DriverOffer& driver, std::span<const TripRequest> requests,
           const TripRequest& request, const TravelMatrix& tt, InsertStats* stats)
      : driver_(driver), requests_(requests), request_(request), tt_(tt), stats_(stats) {}

  enum class Phase { PlacePickup, PlaceDropoff, Done };

  std::vector<std::unique_ptr<TreeNode>> build(
      const std::vector<std::unique_ptr<TreeNode>>& old_children, NodeId parent_node,
      double parent_t, int parent_q, Phase phase) {
    std::vector<std::unique_ptr<TreeNode>> out;
    if (phase != Phase::Done) {
      const Stop pending =
          phase == Phase::PlacePickup ? pickup_stop(request_) : dropoff_stop(request_);
      StopContext ctx;
      ctx.stop = pending;
      ctx.raw_arrival_s = parent_t + tt_.at(parent_node, pending.node).time_s;
      ctx.occupancy_before = parent_q;
      ctx.pickup_visited = phase == Phase::PlaceDropoff;
      const StopCheck chk = checked(ctx);
      if (chk.outcome == FeasibilityOutcome::TimeViolated) {
        // Any deeper placement arrives later still, so nothing below this
        // parent can host the pending stop: the subtree is dead.
        return out;
      }
      if (chk.outcome == FeasibilityOutcome::Feasible) {
        const Phase next =
            phase == Phase::PlacePickup ? Phase::PlaceDropoff : Phase::Done;
        auto kids = build(old_children, pending.node, chk.service_time_s,
                          chk.occupancy_after, next);
        if (!kids.empty()) {
          out.push_back(make_node(pending, chk, std::move(kids)));
        }
      }
      // A capacity hit only skips this position; the vehicle frees a seat at
      // the next drop-off, so later positions are still tried.
    }
    for (const auto& oc : old_children) {
      StopContext ctx;
      ctx.stop = oc->stop;
      ctx.raw_arrival_s = parent_t + tt_.at(parent_node, oc->stop.node).time_s;
      ctx.occupancy_before = parent_q;
      ctx.pickup_visited = true;
      ctx.interval_copy = phase == Phase::PlaceDropoff;
      const StopCheck chk = checked(ctx);
      if (chk.outcome != FeasibilityOutcome::Feasible) continue;
      if (oc->children.empty()) {
        if (phase == Phase::Done) out.push_back(make_node(oc->stop, chk, {}));
        continue;
      }
      auto kids = build(oc->children, oc->stop.node, chk.service_time_s,
                        chk.occupancy_after, phase);
      if (!kids.empty()) out.push_back(make_node(oc->stop, chk, std::move(kids)));
    }
    return out;
  }

 private:
  StopCheck checked(const StopContext& ctx) {
    if (stats_ != nullptr) ++stats_->feasibility_checks;
    return check_stop(driver_, requests_, ctx);
  }

  static std::unique_ptr<TreeNode> make_node(const Stop& stop, const StopCheck& chk,
                                             std::vector<std::unique_ptr<TreeNode>> kids) {
    auto node = std::make_unique<TreeNode>();
    node->stop = stop;
    node->arrival_s = chk.service_time_s;
    node->occupancy_after = chk.occupancy_after;
    node->children = std::move(kids);
    return node;
  }

  const DriverOffer& driver_;
  std::span<const TripRequest> requests_;
  const TripRequest& request_;
  const TravelMatrix& tt_;
  InsertStats* stats_;
};

}  // namespace detail

// Grows the tree by one request. Returns the new tree, or nothing when no
// sequence serving the enlarged set survives; the input tree is untouched.
inline std::optional<ScheduleTree> insert_request(const ScheduleTree& tree,
                                                  const TripRequest& request,
                                                  const TravelMatrix& tt,
                                                  InsertStats* stats = nullptr) {
  if (tree.serves(request.id)) {
    fail(ErrorCode::InvalidConfig, "request already served: " + request.id);
  }
  std::vector<TripRequest> all = tree.served();
  all.push_back(request);
  detail::Inserter inserter(tree.driver(), all, request, tt, stats);
  auto kids = inserter.build(tree.root().children, tree.root().stop.node,
                             tree.root().arrival_s, tree.root().occupancy_after,
                             detail::Inserter::Phase::PlacePickup);
  if (kids.empty()) return std::nullopt;
  auto root = std::make_unique<TreeNode>();
  root->stop = tree.root().stop;
  root->arrival_s = tree.root().arrival_s;
  root->occupancy_after = tree.root().occupancy_after;
  root->children = std::move(kids);
  return ScheduleTree(tree.driver(), std::move(all), std::move(root));
}

struct BestSequence {
  std::vector<Stop> stops;
  std::vector<double> arrivals_s;
  std::vector<int> occupancy;
  double route_dist_km = 0;
  double route_time_s = 0;  // driving time only, waits excluded
  double savings_km = 0;
};

namespace detail {

inline bool stop_seq_less(const std::vector<Stop>& a, const std::vector<Stop>& b) {
  auto key = [](const Stop& s) {
    return std::tuple<const std::string&, int, NodeId>(s.owner, static_cast<int>(s.kind),
                                                       s.node);
  };
  return std::lexicographical_compare(
      a.begin(), a.end(), b.begin(), b.end(),
      [&](const Stop& x, const Stop& y) { return key(x) < key(y); });
}

struct PathWalker {
  const TravelMatrix& tt;
  BestSequence best;
  bool found = false;

  std::vector<Stop> stops;
  std::vector<double> arrivals;
  std::vector<int> occupancy;

  void walk(const TreeNode& node, double dist_km, double time_s) {
    stops.push_back(node.stop);
    arrivals.push_back(node.arrival_s);
    occupancy.push_back(node.occupancy_after);
    if (node.children.empty()) {
      consider(dist_km, time_s);
    } else {
      for (const auto& child : node.children) {
        const LegCost leg = tt.at(node.stop.node, child->stop.node);
        walk(*child, dist_km + leg.distance_km, time_s + leg.time_s);
      }
    }
    stops.pop_back();
    arrivals.pop_back();
    occupancy.pop_back();
  }

  void consider(double dist_km, double time_s) {
    const double arrival = arrivals.back();
    const bool better =
        !found || dist_km < best.route_dist_km ||
        (dist_km == best.route_dist_km &&
         (arrival < best.arrivals_s.back() ||
          (arrival == best.arrivals_s.back() && stop_seq_less(stops, best.stops))));
    if (!better) return;
    found = true;
    best.stops = stops;
    best.arrivals_s = arrivals;
    best.occupancy = occupancy;
    best.route_dist_km = dist_km;
    best.route_time_s = time_s;
  }
};

}  // namespace detail

// Shortest root-to-leaf path by route distance; ties go to the earlier
// destination arrival, then the lexicographically smaller stop sequence.
inline BestSequence best_sequence(const ScheduleTree& tree, const TravelMatrix& tt) {
  detail::PathWalker walker{tt, {}, false, {}, {}, {}};
  walker.walk(tree.root(), 0.0, 0.0);
  walker.best.savings_km =
      candidate_value(tree.driver(), tree.served(), walker.best.route_dist_km);
  return walker.best;
}

inline std::vector<std::vector<Stop>> enumerate_sequences(const ScheduleTree& tree) {
  std::vector<std::vector<Stop>> out;
  std::vector<Stop> path;
  auto walk = [&](auto&& self, const TreeNode& node) -> void {
    path.push_back(node.stop);
    if (node.children.empty()) {
      out.push_back(path);
    } else {
      for (const auto& child : node.children) self(self, *child);
    }
    path.pop_back();
  };
  walk(walk, tree.root());
  return out;
}

// Rebuilds a single-branch tree holding only the best sequence.
inline ScheduleTree make_path_tree(const ScheduleTree& tree, const TravelMatrix& tt) {
  const BestSequence best = best_sequence(tree, tt);
  std::unique_ptr<TreeNode> head;
  TreeNode* tail = nullptr;
  for (std::size_t i = 0; i < best.stops.size(); ++i) {
    auto node = std::make_unique<TreeNode>();
    node->stop = best.stops[i];
    node->arrival_s = best.arrivals_s[i];
    node->occupancy_after = best.occupancy[i];
    TreeNode* raw = node.get();
    if (tail == nullptr) {
      head = std::move(node);
    } else {
      tail->children.push_back(std::move(node));
    }
    tail = raw;
  }
  return ScheduleTree(tree.driver(), tree.served(), std::move(head));
}

// Single-branch variant: the input collapses to its best path before the
// insertion and only the best resulting path is kept. Much cheaper than the
// exact insert, but it can reject a request the full tree would admit.
inline std::optional<ScheduleTree> insert_request_greedy(const ScheduleTree& tree,
                                                         const TripRequest& request,
                                                         const TravelMatrix& tt,
                                                         InsertStats* stats = nullptr) {
  const ScheduleTree path = make_path_tree(tree, tt);
  auto grown = insert_request(path, request, tt, stats);
  if (!grown) return std::nullopt;
  return make_path_tree(*grown, tt);
}

inline void dump_tree(const ScheduleTree& tree, const RoadNetwork& net, std::ostream& os) {
  auto walk = [&](auto&& self, const TreeNode& node, int depth) -> void {
    for (int i = 0; i < depth; ++i) os << "  ";
    os << stop_kind_name(node.stop.kind) << ' ' << node.stop.owner << ' '
       << net.name(node.stop.node) << " t=" << format_double(node.arrival_s, 3)
       << " q=" << node.occupancy_after << '\n';
    for (const auto& child : node.children) self(self, *child, depth + 1);
  };
  walk(walk, tree.root(), 0);
}

inline std::string dump_tree_string(const ScheduleTree& tree, const RoadNetwork& net) {
  std::ostringstream os;
  dump_tree(tree, net, os);
  return os.str();
}

}  // namespace ridematch
