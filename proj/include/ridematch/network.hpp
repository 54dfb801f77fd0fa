#pragma once

// Road network: directed graph with per-link length (km) and travel time (s).
// Shortest paths minimize travel time; the distance of a query is the length
// of the time-optimal path (ties broken toward the shorter path). All other
// modules obtain distances and times from here, usually through a
// TravelMatrix precomputed over the nodes an instance actually references.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ridematch/csv.hpp"
#include "ridematch/errors.hpp"

namespace ridematch {

using NodeId = std::int32_t;

struct Node {
  std::string name;
  double x_km = 0;
  double y_km = 0;
};

struct Link {
  NodeId from = -1;
  NodeId to = -1;
  double length_km = 0;
  double travel_time_s = 0;
};

struct NodeSpec {
  std::string id;
  double x_km = 0;
  double y_km = 0;
};

struct LinkSpec {
  std::string from;
  std::string to;
  double length_km = 0;
  double travel_time_s = 0;
};

struct LegCost {
  double distance_km = 0;
  double time_s = 0;

  bool operator==(const LegCost&) const = default;
};

// Slack for the length >= straight-line validation, in km.
inline constexpr double geometry_slack_km = 1e-9;

class RoadNetwork {
 public:
  RoadNetwork() = default;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }

  NodeId node(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorCode::DanglingLink, "unknown node id '" + name + "'");
    return it->second;
  }

  bool has_node(const std::string& name) const { return index_.count(name) != 0; }

  const std::string& name(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].name; }

  double euclid_km(NodeId a, NodeId b) const {
    const Node& na = nodes_[static_cast<std::size_t>(a)];
    const Node& nb = nodes_[static_cast<std::size_t>(b)];
    return std::hypot(na.x_km - nb.x_km, na.y_km - nb.y_km);
  }

  // Fastest link speed in the network, km/h, fixed at load time. Free-flow
  // speeds bound Euclidean reachability: euclid(a,b) <= max_speed * time(a,b).
  double max_speed_kmh() const { return max_speed_kmh_; }

  // Outgoing (link index) lists per node.
  const std::vector<std::vector<int>>& adjacency() const { return out_; }

  friend RoadNetwork load_network(std::span<const NodeSpec>, std::span<const LinkSpec>);

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<std::vector<int>> out_;
  std::unordered_map<std::string, NodeId> index_;
  double max_speed_kmh_ = 0;
};

inline RoadNetwork load_network(std::span<const NodeSpec> nodes, std::span<const LinkSpec> links) {
  RoadNetwork net;
  net.nodes_.reserve(nodes.size());
  for (const NodeSpec& spec : nodes) {
    if (net.index_.count(spec.id)) {
      fail(ErrorCode::DuplicateId, "duplicate node id '" + spec.id + "'");
    }
    net.index_[spec.id] = static_cast<NodeId>(net.nodes_.size());
    net.nodes_.push_back(Node{spec.id, spec.x_km, spec.y_km});
  }
  net.out_.resize(net.nodes_.size());
  net.links_.reserve(links.size());
  for (const LinkSpec& spec : links) {
    auto from = net.index_.find(spec.from);
    auto to = net.index_.find(spec.to);
    if (from == net.index_.end() || to == net.index_.end()) {
      fail(ErrorCode::DanglingLink,
           "link " + spec.from + "->" + spec.to + " references an undefined node");
    }
    if (spec.length_km <= 0 || spec.travel_time_s <= 0) {
      fail(ErrorCode::GeometryViolation,
           "link " + spec.from + "->" + spec.to + " must have positive length and travel time");
    }
    const double straight = net.euclid_km(from->second, to->second);
    if (spec.length_km < straight - geometry_slack_km) {
      fail(ErrorCode::GeometryViolation,
           "link " + spec.from + "->" + spec.to + " is shorter than the straight line between its endpoints");
    }
    net.out_[static_cast<std::size_t>(from->second)].push_back(static_cast<int>(net.links_.size()));
    net.links_.push_back(Link{from->second, to->second, spec.length_km, spec.travel_time_s});
    net.max_speed_kmh_ =
        std::max(net.max_speed_kmh_, spec.length_km / (spec.travel_time_s / 3600.0));
  }
  return net;
}

inline RoadNetwork load_network_csv(const std::string& nodes_path, const std::string& links_path) {
  const CsvTable nt = read_csv(nodes_path);
  const int n_id = csv_column(nt, "id", nodes_path);
  const int n_x = csv_column(nt, "x_km", nodes_path);
  const int n_y = csv_column(nt, "y_km", nodes_path);
  std::vector<NodeSpec> nodes;
  nodes.reserve(nt.rows.size());
  for (const auto& row : nt.rows) {
    nodes.push_back(NodeSpec{row[static_cast<std::size_t>(n_id)],
                             csv_double(row[static_cast<std::size_t>(n_x)], nodes_path),
                             csv_double(row[static_cast<std::size_t>(n_y)], nodes_path)});
  }
  const CsvTable lt = read_csv(links_path);
  const int l_from = csv_column(lt, "from", links_path);
  const int l_to = csv_column(lt, "to", links_path);
  const int l_len = csv_column(lt, "length_km", links_path);
  const int l_time = csv_column(lt, "travel_time_s", links_path);
  std::vector<LinkSpec> links;
  links.reserve(lt.rows.size());
  for (const auto& row : lt.rows) {
    links.push_back(LinkSpec{row[static_cast<std::size_t>(l_from)],
                             row[static_cast<std::size_t>(l_to)],
                             csv_double(row[static_cast<std::size_t>(l_len)], links_path),
                             csv_double(row[static_cast<std::size_t>(l_time)], links_path)});
  }
  return load_network(nodes, links);
}

namespace detail {

// Single-source shortest paths minimizing (time, then distance).
inline void dijkstra(const RoadNetwork& net, NodeId source, std::vector<LegCost>& cost,
                     std::vector<bool>& settled) {
  const std::size_t n = net.nodes().size();
  cost.assign(n, LegCost{std::numeric_limits<double>::infinity(),
                         std::numeric_limits<double>::infinity()});
  settled.assign(n, false);
  using Entry = std::pair<std::pair<double, double>, NodeId>;  // ((time, dist), node)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  cost[static_cast<std::size_t>(source)] = LegCost{0, 0};
  queue.push({{0, 0}, source});
  while (!queue.empty()) {
    const auto [key, u] = queue.top();
    queue.pop();
    if (settled[static_cast<std::size_t>(u)]) continue;
    settled[static_cast<std::size_t>(u)] = true;
    for (int li : net.adjacency()[static_cast<std::size_t>(u)]) {
      const Link& link = net.links()[static_cast<std::size_t>(li)];
      const double t = key.first + link.travel_time_s;
      const double d = key.second + link.length_km;
      LegCost& c = cost[static_cast<std::size_t>(link.to)];
      if (t < c.time_s || (t == c.time_s && d < c.distance_km)) {
        c = LegCost{d, t};
        queue.push({{t, d}, link.to});
      }
    }
  }
}

}  // namespace detail

inline LegCost shortest_path(const RoadNetwork& net, NodeId a, NodeId b) {
  std::vector<LegCost> cost;
  std::vector<bool> settled;
  detail::dijkstra(net, a, cost, settled);
  const LegCost& c = cost[static_cast<std::size_t>(b)];
  if (!settled[static_cast<std::size_t>(b)]) {
    fail(ErrorCode::Unreachable, "no path from " + net.name(a) + " to " + net.name(b));
  }
  return c;
}

// Origin x destination table of shortest-path costs over a stop set.
class TravelMatrix {
 public:
  TravelMatrix() = default;

  TravelMatrix(const RoadNetwork& net, std::vector<NodeId> stops) {
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
    stops_ = std::move(stops);
    const int n = static_cast<int>(stops_.size());
    row_.reserve(stops_.size());
    for (int i = 0; i < n; ++i) row_[stops_[static_cast<std::size_t>(i)]] = i;
    cell_.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    std::vector<LegCost> cost;
    std::vector<bool> settled;
    for (int i = 0; i < n; ++i) {
      const NodeId origin = stops_[static_cast<std::size_t>(i)];
      detail::dijkstra(net, origin, cost, settled);
      for (int j = 0; j < n; ++j) {
        const NodeId dest = stops_[static_cast<std::size_t>(j)];
        if (!settled[static_cast<std::size_t>(dest)]) {
          fail(ErrorCode::Unreachable,
               "no path from " + net.name(origin) + " to " + net.name(dest));
        }
        cell_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
              static_cast<std::size_t>(j)] = cost[static_cast<std::size_t>(dest)];
      }
    }
  }

  const LegCost& at(NodeId a, NodeId b) const {
    const auto ia = row_.find(a);
    const auto ib = row_.find(b);
    if (ia == row_.end() || ib == row_.end()) {
      fail(ErrorCode::Unreachable, "node not covered by travel matrix");
    }
    return cell_[static_cast<std::size_t>(ia->second) * stops_.size() +
                 static_cast<std::size_t>(ib->second)];
  }

  bool contains(NodeId a) const { return row_.count(a) != 0; }
  const std::vector<NodeId>& stops() const { return stops_; }

 private:
  std::vector<NodeId> stops_;
  std::unordered_map<NodeId, int> row_;
  std::vector<LegCost> cell_;
};

inline TravelMatrix travel_matrix(const RoadNetwork& net, std::vector<NodeId> stops) {
  return TravelMatrix(net, std::move(stops));
}

}  // namespace ridematch
