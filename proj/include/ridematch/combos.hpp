#pragma once

// Level-wise candidate generation. Level 1 holds every request the driver can
// serve alone; level k joins pairs of level-(k-1) combinations that differ in
// one request, keeps a union only if all its (k-1)-subsets are feasible, and
// confirms it by inserting the new request into a retained parent tree.
// Feasibility is anti-monotone (dropping a request never breaks a sequence),
// which is what makes the join sound. Growth stops at the vehicle capacity.

#include <algorithm>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ridematch/demand.hpp"
#include "ridematch/dyntree.hpp"
#include "ridematch/errors.hpp"
#include "ridematch/network.hpp"
#include "ridematch/pruning.hpp"

namespace ridematch {

enum class InsertMode { Exact, Greedy };

struct Candidate {
  std::string driver_id;
  std::vector<std::string> request_ids;  // sorted
  std::vector<Stop> best_stops;
  std::vector<double> best_arrivals_s;
  double route_dist_km = 0;
  double route_time_s = 0;
  double savings_km = 0;
  ScheduleTree tree;  // retained so the next level can grow from it
};

struct ComboConfig {
  InsertMode mode = InsertMode::Exact;
  bool prune = true;
  std::size_t max_combos_per_driver = 0;  // 0 = unlimited
};

struct ComboStats {
  long long feasibility_checks = 0;
  long long candidates = 0;
};

namespace detail {

inline std::vector<std::string> served_ids(const ScheduleTree& tree) {
  std::vector<std::string> ids;
  ids.reserve(tree.served().size());
  for (const TripRequest& r : tree.served()) ids.push_back(r.id);
  return ids;
}

inline Candidate make_candidate(ScheduleTree tree, const TravelMatrix& tt) {
  BestSequence best = best_sequence(tree, tt);
  return Candidate{tree.driver().id,
                   served_ids(tree),
                   std::move(best.stops),
                   std::move(best.arrivals_s),
                   best.route_dist_km,
                   best.route_time_s,
                   best.savings_km,
                   std::move(tree)};
}

inline std::optional<ScheduleTree> grow(const ScheduleTree& tree, const TripRequest& r,
                                        const TravelMatrix& tt, InsertMode mode,
                                        InsertStats* stats) {
  return mode == InsertMode::Exact ? insert_request(tree, r, tt, stats)
                                   : insert_request_greedy(tree, r, tt, stats);
}

}  // namespace detail

inline std::vector<Candidate> feasible_singletons(const DriverOffer& driver,
                                                  std::span<const TripRequest> candidates,
                                                  const TravelMatrix& tt,
                                                  InsertMode mode = InsertMode::Exact,
                                                  InsertStats* stats = nullptr) {
  const ScheduleTree solo = init_tree(driver, tt);
  std::vector<Candidate> out;
  for (const TripRequest& r : candidates) {
    auto grown = detail::grow(solo, r, tt, mode, stats);
    if (grown) out.push_back(detail::make_candidate(std::move(*grown), tt));
  }
  std::sort(out.begin(), out.end(),
            [](const Candidate& a, const Candidate& b) { return a.request_ids < b.request_ids; });
  return out;
}

// Joins a fully built level k-1 into level k. Inputs must share one driver
// and be sorted by request_ids; output is sorted and deduplicated.
inline std::vector<Candidate> grow_level(std::span<const Candidate> level,
                                         std::span<const TripRequest> requests,
                                         const TravelMatrix& tt,
                                         InsertMode mode = InsertMode::Exact,
                                         InsertStats* stats = nullptr,
                                         std::size_t budget = 0) {
  std::vector<Candidate> out;
  if (level.size() < 2) return out;
  const std::size_t k1 = level.front().request_ids.size();
  for (const Candidate& c : level) {
    if (c.request_ids.size() != k1 || c.driver_id != level.front().driver_id) {
      fail(ErrorCode::InvalidConfig, "grow_level: mixed level input");
    }
  }

  std::set<std::vector<std::string>> present;
  for (const Candidate& c : level) present.insert(c.request_ids);
  std::set<std::vector<std::string>> emitted;

  bool exhausted = false;
  for (std::size_t i = 0; i < level.size() && !exhausted; ++i) {
    for (std::size_t j = i + 1; j < level.size(); ++j) {
      if (budget != 0 && out.size() >= budget) {
        exhausted = true;
        break;
      }
      std::vector<std::string> u;
      std::set_union(level[i].request_ids.begin(), level[i].request_ids.end(),
                     level[j].request_ids.begin(), level[j].request_ids.end(),
                     std::back_inserter(u));
      if (u.size() != k1 + 1) continue;  // parents must overlap in k-2 requests
      if (emitted.count(u) != 0) continue;

      // Clique condition: every (k-1)-subset of the union must be feasible.
      bool clique = true;
      for (std::size_t drop = 0; drop < u.size() && clique; ++drop) {
        std::vector<std::string> sub;
        sub.reserve(u.size() - 1);
        for (std::size_t t = 0; t < u.size(); ++t) {
          if (t != drop) sub.push_back(u[t]);
        }
        clique = present.count(sub) != 0;
      }
      if (!clique) continue;
      emitted.insert(u);

      // level[i] is the lexicographically smaller parent; it receives the
      // one request it lacks.
      std::string added;
      for (const std::string& id : level[j].request_ids) {
        if (!std::binary_search(level[i].request_ids.begin(), level[i].request_ids.end(),
                                id)) {
          added = id;
          break;
        }
      }
      const TripRequest* r = detail::find_request(requests, added);
      if (r == nullptr) fail(ErrorCode::InvalidConfig, "grow_level: unknown request " + added);
      auto grown = detail::grow(level[i].tree, *r, tt, mode, stats);
      if (grown) out.push_back(detail::make_candidate(std::move(*grown), tt));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Candidate& a, const Candidate& b) { return a.request_ids < b.request_ids; });
  return out;
}

// Levels 1..capacity for one driver over its surviving candidate requests.
inline std::vector<Candidate> driver_candidates(const DriverOffer& driver,
                                                std::span<const TripRequest> mine,
                                                std::span<const TripRequest> requests,
                                                const TravelMatrix& tt, InsertMode mode,
                                                std::size_t max_combos,
                                                InsertStats* stats = nullptr) {
  std::vector<Candidate> all;
  std::size_t taken = 0;
  auto remaining = [&]() -> std::size_t {
    if (max_combos == 0) return 0;
    return max_combos > taken ? max_combos - taken : 0;
  };

  std::vector<Candidate> level = feasible_singletons(driver, mine, tt, mode, stats);
  if (max_combos != 0 && level.size() > max_combos) {
    level.erase(level.begin() + static_cast<std::ptrdiff_t>(max_combos), level.end());
  }
  int k = 1;
  while (!level.empty()) {
    taken += level.size();
    const bool exhausted = max_combos != 0 && remaining() == 0;
    const bool at_capacity = k >= driver.capacity;
    std::vector<Candidate> next;
    if (!exhausted && !at_capacity) {
      next = grow_level(level, requests, tt, mode, stats, remaining());
    }
    std::move(level.begin(), level.end(), std::back_inserter(all));
    level = std::move(next);
    ++k;
  }
  return all;
}

// All candidates for all drivers, levels 1..capacity, geometric pre-filter
// applied per driver unless disabled.
inline std::vector<Candidate> build_candidates(std::span<const DriverOffer> drivers,
                                               std::span<const TripRequest> requests,
                                               const RoadNetwork& net, const TravelMatrix& tt,
                                               const ComboConfig& config,
                                               ComboStats* stats = nullptr) {
  const auto by_driver = candidate_requests_by_driver(drivers, requests, net, config.prune);
  InsertStats insert_stats;
  std::vector<Candidate> all;
  for (std::size_t di = 0; di < drivers.size(); ++di) {
    std::vector<TripRequest> mine;
    mine.reserve(by_driver[di].size());
    for (std::size_t ri : by_driver[di]) mine.push_back(requests[ri]);
    std::vector<Candidate> grown =
        driver_candidates(drivers[di], mine, requests, tt, config.mode,
                          config.max_combos_per_driver, &insert_stats);
    std::move(grown.begin(), grown.end(), std::back_inserter(all));
  }
  if (stats != nullptr) {
    stats->feasibility_checks += insert_stats.feasibility_checks;
    stats->candidates += static_cast<long long>(all.size());
  }
  return all;
}

inline std::string join_ids(std::span<const std::string> ids, char sep = ';') {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i != 0) out.push_back(sep);
    out += ids[i];
  }
  return out;
}

inline std::string format_stop_sequence(std::span<const Stop> stops, const RoadNetwork& net) {
  std::string out;
  for (std::size_t i = 0; i < stops.size(); ++i) {
    if (i != 0) out.push_back(';');
    out += stop_kind_name(stops[i].kind);
    out.push_back(':');
    out += stops[i].owner;
    out.push_back(':');
    out += net.name(stops[i].node);
  }
  return out;
}

inline void write_candidates_csv(std::ostream& os, std::span<const Candidate> candidates,
                                 const RoadNetwork& net) {
  os << "driver_id,request_ids,route_dist_km,savings_km,stop_sequence\n";
  for (const Candidate& c : candidates) {
    os << c.driver_id << ',' << join_ids(c.request_ids) << ','
       << format_double(c.route_dist_km) << ',' << format_double(c.savings_km) << ','
       << format_stop_sequence(c.best_stops, net) << '\n';
  }
}

}  // namespace ridematch
