#pragma once

// Set-packing assignment: pick at most one candidate per driver, covering
// each passenger at most once, maximizing total distance savings. Solved
// exactly by depth-first branch-and-bound over conflict components; a greedy
// scan provides the fallback used on purpose for heuristic pipelines.

#include <algorithm>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ridematch/combos.hpp"
#include "ridematch/errors.hpp"

namespace ridematch {

// Bound comparisons tolerate the rounding drift between a value summed in
// search order and the same set summed canonically (ascending index). The
// slack only weakens pruning, never the optimum.
inline constexpr double assign_bound_slack_km = 1e-6;

struct AssignmentProblem {
  int n_drivers = 0;
  int n_passengers = 0;
  std::vector<int> driver_of;                   // candidate -> driver index
  std::vector<std::vector<int>> passengers_of;  // candidate -> sorted passenger indices
  std::vector<double> values;                   // candidate -> savings (may be negative)

  std::size_t size() const { return values.size(); }
};

struct Assignment {
  std::vector<int> chosen;  // sorted original candidate indices
  double total_savings_km = 0;
  std::vector<int> matched_drivers;     // sorted
  std::vector<int> matched_passengers;  // sorted
};

namespace detail {

// Canonical value of a chosen set: fold in ascending candidate order. Tests
// and tie comparisons rely on this exact summation order.
inline double canonical_value(const AssignmentProblem& p, std::span<const int> chosen_sorted) {
  double total = 0;
  for (int j : chosen_sorted) total += p.values[static_cast<std::size_t>(j)];
  return total;
}

inline Assignment finish_assignment(const AssignmentProblem& p, std::vector<int> chosen) {
  std::sort(chosen.begin(), chosen.end());
  Assignment a;
  a.total_savings_km = canonical_value(p, chosen);
  for (int j : chosen) {
    a.matched_drivers.push_back(p.driver_of[static_cast<std::size_t>(j)]);
    for (int r : p.passengers_of[static_cast<std::size_t>(j)]) {
      a.matched_passengers.push_back(r);
    }
  }
  a.chosen = std::move(chosen);
  std::sort(a.matched_drivers.begin(), a.matched_drivers.end());
  std::sort(a.matched_passengers.begin(), a.matched_passengers.end());
  return a;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(b)] = a;
  }
};

// Exact search within one conflict component. Candidates are branched in
// decreasing-value order. Two admissible bounds prune the search: at node
// entry, greedily raised dual prices cover every remaining candidate, and any
// resource-disjoint completion is bounded by the total price (weak duality);
// inside the branching loop, a per-driver suffix bound counts only each
// driver's most valuable remaining candidate. Pruning is strict so
// equal-value optima survive long enough for the lexicographic tie-break on
// original indices.
class ComponentSolver {
 public:
  ComponentSolver(const AssignmentProblem& p, std::vector<int> order,
                  std::vector<char>& driver_used, std::vector<char>& passenger_used)
      : p_(p),
        driver_used_(driver_used),
        passenger_used_(passenger_used),
        prices_(static_cast<std::size_t>(p.n_drivers + p.n_passengers), 0.0),
        freq_(static_cast<std::size_t>(p.n_drivers + p.n_passengers), 0),
        owner_(static_cast<std::size_t>(p.n_drivers + p.n_passengers), -1),
        incidence_(static_cast<std::size_t>(p.n_drivers + p.n_passengers)),
        slack_(p.size(), 0.0),
        in_seed_(p.size(), 0) {
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double va = p_.values[static_cast<std::size_t>(a)];
      const double vb = p_.values[static_cast<std::size_t>(b)];
      if (va != vb) return va > vb;
      return a < b;
    });
    order_ = std::move(order);
  }

  std::vector<int> solve() {
    best_set_.clear();
    best_value_ = 0;  // choosing nothing is feasible
    seed_incumbent();
    dfs(order_, 0.0);
    return best_set_;
  }

 private:
  // Resources share one price/frequency index space: drivers first, then
  // passengers.
  std::size_t res_driver(int j) const {
    return static_cast<std::size_t>(p_.driver_of[static_cast<std::size_t>(j)]);
  }
  std::size_t res_passenger(int r) const {
    return static_cast<std::size_t>(p_.n_drivers + r);
  }

  bool conflicts(int j) const {
    if (driver_used_[static_cast<std::size_t>(p_.driver_of[static_cast<std::size_t>(j)])]) {
      return true;
    }
    for (int r : p_.passengers_of[static_cast<std::size_t>(j)]) {
      if (passenger_used_[static_cast<std::size_t>(r)]) return true;
    }
    return false;
  }

  void mark(int j, char v) {
    driver_used_[static_cast<std::size_t>(p_.driver_of[static_cast<std::size_t>(j)])] = v;
    for (int r : p_.passengers_of[static_cast<std::size_t>(j)]) {
      passenger_used_[static_cast<std::size_t>(r)] = v;
    }
  }

  void offer(std::vector<int> sorted) {
    const double value = canonical_value(p_, sorted);
    if (value > best_value_ ||
        (value == best_value_ &&
         std::lexicographical_compare(sorted.begin(), sorted.end(), best_set_.begin(),
                                      best_set_.end()))) {
      best_value_ = value;
      best_set_ = std::move(sorted);
    }
  }

  void consider_incumbent() {
    std::vector<int> sorted = stack_;
    std::sort(sorted.begin(), sorted.end());
    offer(std::move(sorted));
  }

  // Greedy incumbent plus single-candidate swap rounds before the search: a
  // strong feasible solution up front lets the bounds cut whole subtrees
  // immediately. Equal-value sets are never pruned, so seeding cannot change
  // which optimum the search reports.
  void seed_incumbent() {
    auto set_owner = [&](int j, int val) {
      owner_[res_driver(j)] = val;
      for (int r : p_.passengers_of[static_cast<std::size_t>(j)]) {
        owner_[res_passenger(r)] = val;
      }
    };
    std::vector<int> seed;
    for (int j : order_) {
      if (conflicts(j)) continue;
      mark(j, 1);
      set_owner(j, j);
      in_seed_[static_cast<std::size_t>(j)] = 1;
      seed.push_back(j);
    }
    for (int round = 0; round < 4; ++round) {
      bool improved = false;
      for (int j : order_) {
        if (in_seed_[static_cast<std::size_t>(j)]) continue;
        evict_.clear();
        auto consider = [&](std::size_t res) {
          const int k = owner_[res];
          if (k >= 0 && std::find(evict_.begin(), evict_.end(), k) == evict_.end()) {
            evict_.push_back(k);
          }
        };
        consider(res_driver(j));
        for (int r : p_.passengers_of[static_cast<std::size_t>(j)]) {
          consider(res_passenger(r));
        }
        double lost = 0;
        for (int k : evict_) lost += p_.values[static_cast<std::size_t>(k)];
        if (p_.values[static_cast<std::size_t>(j)] <= lost + assign_bound_slack_km) {
          continue;
        }
        for (int k : evict_) {
          mark(k, 0);
          set_owner(k, -1);
          in_seed_[static_cast<std::size_t>(k)] = 0;
        }
        mark(j, 1);
        set_owner(j, j);
        in_seed_[static_cast<std::size_t>(j)] = 1;
        improved = true;
      }
      if (!improved) break;
    }
    seed.clear();
    for (int j : order_) {
      if (!in_seed_[static_cast<std::size_t>(j)]) continue;
      seed.push_back(j);
      mark(j, 0);
      set_owner(j, -1);
      in_seed_[static_cast<std::size_t>(j)] = 0;
    }
    std::sort(seed.begin(), seed.end());
    best_value_ = canonical_value(p_, seed);
    best_set_ = std::move(seed);
  }

  // Raises the price of one resource per uncovered candidate, preferring the
  // resource shared with the most remaining candidates, until each candidate's
  // value is covered by the prices on its resources; a refund sweep then gives
  // back price wherever every covering constraint keeps slack. Any feasible
  // completion uses every resource at most once, so its value is at most the
  // price total.
  double dual_bound(const std::vector<int>& items) {
    touched_.clear();
    for (int j : items) {
      auto touch = [&](std::size_t res) {
        if (freq_[res] == 0) touched_.push_back(static_cast<int>(res));
        ++freq_[res];
        incidence_[res].push_back(j);
      };
      touch(res_driver(j));
      for (int r : p_.passengers_of[static_cast<std::size_t>(j)]) touch(res_passenger(r));
    }
    double total = 0;
    for (int j : items) {
      double cover = prices_[res_driver(j)];
      for (int r : p_.passengers_of[static_cast<std::size_t>(j)]) {
        cover += prices_[res_passenger(r)];
      }
      const double deficit = p_.values[static_cast<std::size_t>(j)] - cover;
      if (deficit <= 0) continue;
      std::size_t target = res_driver(j);
      for (int r : p_.passengers_of[static_cast<std::size_t>(j)]) {
        if (freq_[res_passenger(r)] > freq_[target]) target = res_passenger(r);
      }
      prices_[target] += deficit;
      total += deficit;
    }
    for (int j : items) {
      double cover = prices_[res_driver(j)];
      for (int r : p_.passengers_of[static_cast<std::size_t>(j)]) {
        cover += prices_[res_passenger(r)];
      }
      slack_[static_cast<std::size_t>(j)] =
          std::max(0.0, cover - p_.values[static_cast<std::size_t>(j)]);
    }
    for (int res : touched_) {
      const std::size_t r = static_cast<std::size_t>(res);
      if (prices_[r] <= 0) continue;
      double refund = prices_[r];
      for (int j : incidence_[r]) {
        refund = std::min(refund, slack_[static_cast<std::size_t>(j)]);
      }
      if (refund <= 0) continue;
      prices_[r] -= refund;
      total -= refund;
      for (int j : incidence_[r]) slack_[static_cast<std::size_t>(j)] -= refund;
    }
    for (int res : touched_) {
      const std::size_t r = static_cast<std::size_t>(res);
      freq_[r] = 0;
      prices_[r] = 0;
      incidence_[r].clear();
    }
    return total;
  }

  void dfs(const std::vector<int>& items, double cur) {
    consider_incumbent();
    if (items.empty()) return;
    if (cur + dual_bound(items) < best_value_ - assign_bound_slack_km) return;

    // A candidate whose driver and passengers appear in no other remaining
    // candidate belongs to every optimum below this node: taking it is always
    // feasible and its positive value makes skipping it strictly worse. All
    // such candidates are committed without branching, which collapses the
    // sparse tails of the search.
    touched_.clear();
    for (int j : items) {
      auto touch = [&](std::size_t res) {
        if (freq_[res] == 0) touched_.push_back(static_cast<int>(res));
        ++freq_[res];
      };
      touch(res_driver(j));
      for (int r : p_.passengers_of[static_cast<std::size_t>(j)]) touch(res_passenger(r));
    }
    std::vector<int> contested;
    contested.reserve(items.size());
    double iso_value = 0;
    std::size_t n_iso = 0;
    for (int j : items) {
      bool shared = freq_[res_driver(j)] > 1;
      for (int r : p_.passengers_of[static_cast<std::size_t>(j)]) {
        shared = shared || freq_[res_passenger(r)] > 1;
      }
      if (shared) {
        contested.push_back(j);
      } else {
        stack_.push_back(j);
        iso_value += p_.values[static_cast<std::size_t>(j)];
        ++n_iso;
      }
    }
    for (int res : touched_) freq_[static_cast<std::size_t>(res)] = 0;
    if (n_iso > 0) {
      dfs(contested, cur + iso_value);
      stack_.resize(stack_.size() - n_iso);
      return;
    }
    // items is value-descending, so walking it backwards visits values in
    // ascending order and a driver's running top is its first appearance in
    // the suffix. bound[i] is nonincreasing in i, which keeps `break` valid.
    std::vector<double> bound(items.size() + 1, 0.0);
    touched_.clear();
    for (std::size_t i = items.size(); i-- > 0;) {
      const std::size_t d = res_driver(items[i]);
      const double v = p_.values[static_cast<std::size_t>(items[i])];
      if (prices_[d] == 0) touched_.push_back(static_cast<int>(d));
      bound[i] = bound[i + 1] + v - prices_[d];
      prices_[d] = v;
    }
    for (int d : touched_) prices_[static_cast<std::size_t>(d)] = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (cur + bound[i] < best_value_ - assign_bound_slack_km) break;
      const int j = items[i];
      mark(j, 1);
      stack_.push_back(j);
      std::vector<int> next;
      next.reserve(items.size() - i);
      for (std::size_t t = i + 1; t < items.size(); ++t) {
        if (!conflicts(items[t])) next.push_back(items[t]);
      }
      dfs(next, cur + p_.values[static_cast<std::size_t>(j)]);
      stack_.pop_back();
      mark(j, 0);
    }
  }

  const AssignmentProblem& p_;
  std::vector<char>& driver_used_;
  std::vector<char>& passenger_used_;
  std::vector<int> order_;
  std::vector<int> stack_;
  std::vector<int> best_set_;
  std::vector<double> prices_;  // bound scratch, zeroed between uses
  std::vector<int> freq_;
  std::vector<int> touched_;
  std::vector<int> owner_;  // seed scratch: resource -> chosen candidate
  std::vector<std::vector<int>> incidence_;
  std::vector<double> slack_;
  std::vector<char> in_seed_;
  std::vector<int> evict_;
  double best_value_ = 0;
};

}  // namespace detail

// Optimal assignment. Non-positive candidates are dropped up front: removing
// one from any solution keeps it feasible without lowering the value, and the
// tie-break prefers the smaller chosen set, so they are never part of the
// reported optimum.
inline Assignment solve_exact(const AssignmentProblem& p) {
  std::vector<int> keep;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p.values[j] > 0) keep.push_back(static_cast<int>(j));
  }

  detail::UnionFind uf(p.size());
  std::unordered_map<int, int> driver_seen;
  std::unordered_map<int, int> passenger_seen;
  for (int j : keep) {
    auto [dit, dnew] = driver_seen.try_emplace(p.driver_of[static_cast<std::size_t>(j)], j);
    if (!dnew) uf.unite(dit->second, j);
    for (int r : p.passengers_of[static_cast<std::size_t>(j)]) {
      auto [rit, rnew] = passenger_seen.try_emplace(r, j);
      if (!rnew) uf.unite(rit->second, j);
    }
  }

  std::vector<std::vector<int>> components;
  std::unordered_map<int, std::size_t> root_to_comp;
  for (int j : keep) {  // keep is ascending, so components are too
    const int root = uf.find(j);
    auto [it, fresh] = root_to_comp.try_emplace(root, components.size());
    if (fresh) components.emplace_back();
    components[it->second].push_back(j);
  }

  std::vector<char> driver_used(static_cast<std::size_t>(p.n_drivers), 0);
  std::vector<char> passenger_used(static_cast<std::size_t>(p.n_passengers), 0);
  std::vector<int> chosen;
  for (const std::vector<int>& comp : components) {
    detail::ComponentSolver solver(p, comp, driver_used, passenger_used);
    std::vector<int> picked = solver.solve();
    chosen.insert(chosen.end(), picked.begin(), picked.end());
  }
  return detail::finish_assignment(p, std::move(chosen));
}

// Scan by decreasing value, take whatever fits. No positivity filter: this is
// the deliberately myopic fallback, and it will happily lock in a bad trade.
inline Assignment solve_greedy(const AssignmentProblem& p) {
  std::vector<int> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double va = p.values[static_cast<std::size_t>(a)];
    const double vb = p.values[static_cast<std::size_t>(b)];
    if (va != vb) return va > vb;
    return a < b;
  });
  std::vector<char> driver_used(static_cast<std::size_t>(p.n_drivers), 0);
  std::vector<char> passenger_used(static_cast<std::size_t>(p.n_passengers), 0);
  std::vector<int> chosen;
  for (int j : order) {
    bool conflict = driver_used[static_cast<std::size_t>(p.driver_of[static_cast<std::size_t>(j)])];
    for (int r : p.passengers_of[static_cast<std::size_t>(j)]) {
      conflict = conflict || passenger_used[static_cast<std::size_t>(r)];
    }
    if (conflict) continue;
    driver_used[static_cast<std::size_t>(p.driver_of[static_cast<std::size_t>(j)])] = 1;
    for (int r : p.passengers_of[static_cast<std::size_t>(j)]) {
      passenger_used[static_cast<std::size_t>(r)] = 1;
    }
    chosen.push_back(j);
  }
  return detail::finish_assignment(p, std::move(chosen));
}

inline bool assignment_valid(const AssignmentProblem& p, const Assignment& a) {
  std::vector<int> driver_count(static_cast<std::size_t>(p.n_drivers), 0);
  std::vector<int> passenger_count(static_cast<std::size_t>(p.n_passengers), 0);
  for (int j : a.chosen) {
    if (j < 0 || static_cast<std::size_t>(j) >= p.size()) return false;
    if (++driver_count[static_cast<std::size_t>(p.driver_of[static_cast<std::size_t>(j)])] > 1) {
      return false;
    }
    for (int r : p.passengers_of[static_cast<std::size_t>(j)]) {
      if (++passenger_count[static_cast<std::size_t>(r)] > 1) return false;
    }
  }
  return a.total_savings_km == detail::canonical_value(p, a.chosen);
}

// Bridges candidate lists to the index-based problem. Drivers and requests
// are looked up by id; every candidate must reference known participants.
inline AssignmentProblem make_assignment_problem(std::span<const Candidate> candidates,
                                                 std::span<const DriverOffer> drivers,
                                                 std::span<const TripRequest> requests) {
  std::unordered_map<std::string, int> driver_index;
  for (std::size_t i = 0; i < drivers.size(); ++i) {
    driver_index[drivers[i].id] = static_cast<int>(i);
  }
  std::unordered_map<std::string, int> request_index;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    request_index[requests[i].id] = static_cast<int>(i);
  }
  AssignmentProblem p;
  p.n_drivers = static_cast<int>(drivers.size());
  p.n_passengers = static_cast<int>(requests.size());
  for (const Candidate& c : candidates) {
    auto dit = driver_index.find(c.driver_id);
    if (dit == driver_index.end()) {
      fail(ErrorCode::InvalidConfig, "candidate references unknown driver " + c.driver_id);
    }
    p.driver_of.push_back(dit->second);
    std::vector<int> ps;
    for (const std::string& rid : c.request_ids) {
      auto rit = request_index.find(rid);
      if (rit == request_index.end()) {
        fail(ErrorCode::InvalidConfig, "candidate references unknown request " + rid);
      }
      ps.push_back(rit->second);
    }
    std::sort(ps.begin(), ps.end());
    p.passengers_of.push_back(std::move(ps));
    p.values.push_back(c.savings_km);
  }
  return p;
}

inline void write_matches_csv(std::ostream& os, std::span<const Candidate> candidates,
                              const Assignment& a, const RoadNetwork& net) {
  os << "driver_id,request_ids,stop_sequence,route_dist_km,savings_km\n";
  for (int j : a.chosen) {
    const Candidate& c = candidates[static_cast<std::size_t>(j)];
    os << c.driver_id << ',' << join_ids(c.request_ids) << ','
       << format_stop_sequence(c.best_stops, net) << ',' << format_double(c.route_dist_km)
       << ',' << format_double(c.savings_km) << '\n';
  }
}

}  // namespace ridematch
