#include "ridematch/network.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "ridematch/errors.hpp"
#include "ridematch/rng.hpp"
#include "support/generators.hpp"

using namespace ridematch;

namespace {

std::vector<NodeSpec> square_nodes() {
  return {{"a", 0, 0}, {"b", 1, 0}, {"c", 1, 1}, {"d", 0, 1}};
}

// a->b->c and a->d->c; the direct legs are faster but longer overall.
std::vector<LinkSpec> square_links() {
  return {
      {"a", "b", 1.0, 60}, {"b", "a", 1.0, 60}, {"b", "c", 1.0, 60}, {"c", "b", 1.0, 60},
      {"c", "d", 1.0, 60}, {"d", "c", 1.0, 60}, {"d", "a", 1.0, 60}, {"a", "d", 1.0, 60},
  };
}

TEST(Network, LoadAndLookup) {
  const auto nodes = square_nodes();
  const auto links = square_links();
  const RoadNetwork net = load_network(nodes, links);
  EXPECT_EQ(net.nodes().size(), 4u);
  EXPECT_EQ(net.links().size(), 8u);
  EXPECT_EQ(net.name(net.node("c")), "c");
  EXPECT_TRUE(net.has_node("a"));
  EXPECT_FALSE(net.has_node("zz"));
  EXPECT_THROW(net.node("zz"), Error);
}

TEST(Network, RejectsDuplicateNode) {
  auto nodes = square_nodes();
  nodes.push_back({"a", 2, 2});
  try {
    load_network(nodes, square_links());
    FAIL() << "expected duplicate id error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateId);
  }
}

TEST(Network, RejectsDanglingLink) {
  auto links = square_links();
  links.push_back({"a", "nope", 1.0, 60});
  try {
    load_network(square_nodes(), links);
    FAIL() << "expected dangling link error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DanglingLink);
  }
}

TEST(Network, RejectsNonPositiveLink) {
  auto links = square_links();
  links.push_back({"a", "b", 0.0, 60});
  EXPECT_THROW(load_network(square_nodes(), links), Error);
  links.back() = {"a", "b", 1.0, -5};
  EXPECT_THROW(load_network(square_nodes(), links), Error);
}

TEST(Network, RejectsLinkShorterThanStraightLine) {
  auto links = square_links();
  links.push_back({"a", "c", 1.0, 60});  // straight line is sqrt(2)
  try {
    load_network(square_nodes(), links);
    FAIL() << "expected geometry error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GeometryViolation);
  }
}

TEST(Network, ShortestPathOnRing) {
  const RoadNetwork net = load_network(square_nodes(), square_links());
  const LegCost ac = shortest_path(net, net.node("a"), net.node("c"));
  EXPECT_DOUBLE_EQ(ac.time_s, 120);
  EXPECT_DOUBLE_EQ(ac.distance_km, 2.0);
  const LegCost aa = shortest_path(net, net.node("a"), net.node("a"));
  EXPECT_DOUBLE_EQ(aa.time_s, 0);
  EXPECT_DOUBLE_EQ(aa.distance_km, 0);
}

TEST(Network, TimeTiesBreakTowardShorterDistance) {
  // Two a->b paths with equal time, different length.
  const std::vector<NodeSpec> nodes{{"a", 0, 0}, {"m", 1, 0.5}, {"k", 1, -0.5}, {"b", 2, 0}};
  const std::vector<LinkSpec> links{
      {"a", "m", 2.0, 60},  {"m", "b", 2.0, 60},   // 120 s, 4.0 km
      {"a", "k", 1.2, 60},  {"k", "b", 1.2, 60},   // 120 s, 2.4 km
      {"b", "a", 4.0, 240},
  };
  const RoadNetwork net = load_network(nodes, links);
  const LegCost ab = shortest_path(net, net.node("a"), net.node("b"));
  EXPECT_DOUBLE_EQ(ab.time_s, 120);
  EXPECT_DOUBLE_EQ(ab.distance_km, 2.4);
}

TEST(Network, UnreachableNodeFails) {
  const std::vector<NodeSpec> nodes{{"a", 0, 0}, {"b", 1, 0}};
  const std::vector<LinkSpec> links{{"a", "b", 1.0, 60}};
  const RoadNetwork net = load_network(nodes, links);
  try {
    shortest_path(net, net.node("b"), net.node("a"));
    FAIL() << "expected unreachable error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unreachable);
  }
}

TEST(Network, MaxSpeedIsFastestLink) {
  const std::vector<NodeSpec> nodes{{"a", 0, 0}, {"b", 1, 0}};
  const std::vector<LinkSpec> links{{"a", "b", 1.0, 120}, {"b", "a", 2.0, 120}};
  const RoadNetwork net = load_network(nodes, links);
  EXPECT_DOUBLE_EQ(net.max_speed_kmh(), 60.0);  // 2 km in 120 s
}

TEST(Network, TravelMatrixMatchesDijkstra) {
  Rng rng(42);
  for (int round = 0; round < 20; ++round) {
    const RoadNetwork net = testsupport::random_network(rng, 10);
    const TravelMatrix tt = testsupport::full_matrix(net);
    for (NodeId a = 0; a < 10; ++a) {
      for (NodeId b = 0; b < 10; ++b) {
        EXPECT_EQ(tt.at(a, b), shortest_path(net, a, b));
      }
    }
  }
}

TEST(Network, TravelMatrixCoversOnlyRequestedStops) {
  const RoadNetwork net = load_network(square_nodes(), square_links());
  const TravelMatrix tt = travel_matrix(net, {net.node("a"), net.node("c"), net.node("a")});
  EXPECT_EQ(tt.stops().size(), 2u);  // duplicates collapse
  EXPECT_TRUE(tt.contains(net.node("a")));
  EXPECT_FALSE(tt.contains(net.node("b")));
  EXPECT_THROW(tt.at(net.node("a"), net.node("b")), Error);
}

TEST(Network, TriangleInequalityOverRandomNetworks) {
  Rng rng(7);
  for (int round = 0; round < 10; ++round) {
    const RoadNetwork net = testsupport::random_network(rng, 12);
    const TravelMatrix tt = testsupport::full_matrix(net);
    for (NodeId a = 0; a < 12; ++a) {
      for (NodeId b = 0; b < 12; ++b) {
        for (NodeId c = 0; c < 12; ++c) {
          EXPECT_LE(tt.at(a, c).time_s, tt.at(a, b).time_s + tt.at(b, c).time_s + 1e-9);
        }
      }
    }
  }
}

TEST(Network, CsvRoundTrip) {
  const std::string dir = testing::TempDir();
  const std::string nodes_path = dir + "/nodes_rt.csv";
  const std::string links_path = dir + "/links_rt.csv";
  {
    std::ofstream nodes(nodes_path);
    nodes << "id,x_km,y_km\na,0,0\nb,1,0\n";
    std::ofstream links(links_path);
    links << "from,to,length_km,travel_time_s\na,b,1.5,90\nb,a,1.25,75\n";
  }
  const RoadNetwork net = load_network_csv(nodes_path, links_path);
  EXPECT_EQ(net.nodes().size(), 2u);
  const LegCost ab = shortest_path(net, net.node("a"), net.node("b"));
  EXPECT_DOUBLE_EQ(ab.distance_km, 1.5);
  EXPECT_DOUBLE_EQ(ab.time_s, 90);
}

}  // namespace
