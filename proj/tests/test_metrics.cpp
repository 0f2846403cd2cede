#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "cpisnet/metrics.hpp"
#include "oracles.hpp"

using namespace cpisnet;

namespace {

BinaryNetwork graph(std::size_t n, std::initializer_list<std::pair<std::size_t, std::size_t>> edges) {
  auto net = BinaryNetwork::with_size(n);
  for (auto [i, j] : edges) net.add_edge(i, j);
  return net;
}

BinaryNetwork complete(std::size_t n) {
  auto net = BinaryNetwork::with_size(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) net.add_edge(i, j);
  return net;
}

BinaryNetwork random_graph(std::mt19937_64& rng, std::size_t n, double p) {
  std::bernoulli_distribution b(p);
  auto net = BinaryNetwork::with_size(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && b(rng)) net.add_edge(i, j);
  return net;
}

const auto kChain = graph(3, {{0, 1}, {1, 2}});

}  // namespace

TEST(ShortestPaths, Examples) {
  const auto d = shortest_paths(kChain);
  EXPECT_EQ(d(0, 2), 2);
  EXPECT_FALSE(d.reachable(2, 0));
  EXPECT_EQ(d.capped(2, 0), 4);
  const auto k4 = shortest_paths(complete(4));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(k4(i, j), i == j ? 0 : 1);
}

TEST(ModifiedAspl, HandValues) {
  EXPECT_NEAR(modified_aspl(kChain), 16.0 / 6.0, 1e-12);
  EXPECT_EQ(modified_aspl(complete(5)), 1.0);
  EXPECT_EQ(modified_aspl(BinaryNetwork::with_size(6)), 4.0);
  EXPECT_THROW(modified_aspl(BinaryNetwork::with_size(1)), InvalidArgument);
}

TEST(FractionSpl, HandValues) {
  EXPECT_EQ(fraction_spl_le(complete(4), 2), 1.0);
  EXPECT_EQ(fraction_spl_le(kChain, 2), 0.5);
  EXPECT_EQ(fraction_spl_le(BinaryNetwork::with_size(4), 3), 0.0);
  EXPECT_THROW(fraction_spl_le(kChain, 1), InvalidArgument);
  EXPECT_THROW(fraction_spl_le(kChain, 4), InvalidArgument);
}

TEST(Assortativity, TwoCycleUndefined) {
  EXPECT_FALSE(assortativity(graph(2, {{0, 1}, {1, 0}})).has_value());
  EXPECT_FALSE(assortativity(BinaryNetwork::with_size(3)).has_value());
}

TEST(Assortativity, StarAgainstEdgeListCorrelation) {
  const auto star = graph(4, {{0, 1}, {0, 2}, {0, 3}});
  // Symmetrised edge list: each edge contributes (a,b) and (b,a).
  std::vector<double> x, y;
  const auto out = star.out_degrees();
  const auto in = star.in_degrees();
  for (const auto& [i, j] : star.edges()) {
    const double a = static_cast<double>(out[i] + in[i]);
    const double b = static_cast<double>(out[j] + in[j]);
    x.push_back(a);
    y.push_back(b);
    x.push_back(b);
    y.push_back(a);
  }
  const auto expected = oracle::pearson(x, y);
  ASSERT_TRUE(expected.has_value());
  const auto r = assortativity(star, AssortativityVariant::total_total);
  ASSERT_TRUE(r.has_value());
  EXPECT_NEAR(*r, *expected, 1e-12);
  EXPECT_NEAR(*r, -1.0, 1e-12);
}

TEST(Assortativity, SymmetricGraphTransposeReversesVariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto net = random_graph(rng, 8, 0.2);
    for (const auto& [i, j] : net.edges()) net.add_edge(j, i);
    ASSERT_EQ(net, net.transposed());
    const auto a = assortativity(net, AssortativityVariant::out_in);
    const auto b = assortativity(net.transposed(), AssortativityVariant::in_out);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) {
      EXPECT_NEAR(*a, *b, 1e-12);
    }
  }
}

TEST(Assortativity, OutInInvariantUnderTranspose) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto net = random_graph(rng, 8, 0.3);
    const auto a = assortativity(net);
    const auto b = assortativity(net.transposed());
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) {
      EXPECT_NEAR(*a, *b, 1e-12);
    }
  }
}

TEST(Assortativity, MatchesSymmetrisedPearson) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto net = random_graph(rng, 9, 0.25);
    const auto out = net.out_degrees();
    const auto in = net.in_degrees();
    std::vector<double> x, y;
    for (const auto& [i, j] : net.edges()) {
      x.push_back(static_cast<double>(out[i]));
      y.push_back(static_cast<double>(in[j]));
      x.push_back(static_cast<double>(in[j]));
      y.push_back(static_cast<double>(out[i]));
    }
    const auto expected = oracle::pearson(x, y);
    const auto r = assortativity(net);
    ASSERT_EQ(expected.has_value(), r.has_value());
    if (r) {
      EXPECT_NEAR(*r, *expected, 1e-9);
    }
  }
}

TEST(Clustering, HandValues) {
  EXPECT_NEAR(avg_clustering(complete(3)), 1.0, 1e-12);
  EXPECT_EQ(avg_clustering(kChain), 0.0);
  const auto cycle = graph(3, {{0, 1}, {1, 2}, {2, 0}});
  EXPECT_NEAR(avg_clustering(cycle), oracle::avg_clustering(oracle::to_adj(cycle)), 1e-12);
  EXPECT_NEAR(avg_clustering(cycle), 0.5, 1e-12);
  EXPECT_THROW(avg_clustering(BinaryNetwork::with_size(2)), InvalidArgument);
}

TEST(Clustering, MatchesTripleSumOracle) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto net = random_graph(rng, 3 + trial % 7, 0.1 + 0.004 * trial);
    EXPECT_NEAR(avg_clustering(net), oracle::avg_clustering(oracle::to_adj(net)), 1e-12);
  }
}

TEST(EdgeTransitivity, HandValues) {
  EXPECT_EQ(edge_transitivity(graph(3, {{0, 1}, {1, 2}, {0, 2}})), 1.0);
  EXPECT_EQ(edge_transitivity(kChain), 0.0);
  EXPECT_EQ(edge_transitivity(complete(4)), 1.0);
  EXPECT_FALSE(edge_transitivity(graph(2, {{0, 1}, {1, 0}})).has_value());
}

TEST(MetricsProperty, OracleOnRandomSmallGraphs) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const auto net = random_graph(rng, n, 0.35);
    const auto adj = oracle::to_adj(net);
    const auto d = shortest_paths(net);
    const auto ref = oracle::path_enumeration_spl(adj);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(d(i, j), ref[i][j]);
    EXPECT_EQ(modified_aspl(net), oracle::modified_aspl(adj));
    EXPECT_EQ(fraction_spl_le(net, 2), oracle::fraction_le(adj, 2));
    EXPECT_EQ(fraction_spl_le(net, 3), oracle::fraction_le(adj, 3));
    EXPECT_EQ(edge_transitivity(net), oracle::edge_transitivity(adj));
  }
}

TEST(MetricsProperty, AsplFromDistanceFractions) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const auto net = random_graph(rng, 12, 0.12);
    const auto d = shortest_paths(net);
    const double pairs = 12.0 * 11.0;
    double f[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 12; ++j)
        if (i != j && d(i, j) >= 1 && d(i, j) <= 3) f[d(i, j)] += 1.0 / pairs;
    EXPECT_NEAR(modified_aspl(net), 4 - 3 * f[1] - 2 * f[2] - f[3], 1e-12);
  }
}

TEST(MetricsProperty, MonotoneUnderEdgeAddition) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    auto net = random_graph(rng, 10, 0.05);
    double prev = modified_aspl(net);
    for (int step = 0; step < 20; ++step) {
      const auto i = rng() % 10, j = rng() % 10;
      if (i == j) continue;
      net.add_edge(i, j);
      const double cur = modified_aspl(net);
      EXPECT_LE(cur, prev);
      prev = cur;
    }
  }
}

TEST(MetricsProperty, RelabelingInvariance) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const auto net = random_graph(rng, 11, 0.2);
    std::vector<std::size_t> perm(11);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto a = compute_measures(net);
    const auto b = compute_measures(net.permuted(perm));
    for (Measure m : kAllMeasures) {
      ASSERT_EQ(a[m].has_value(), b[m].has_value()) << measure_name(m);
      if (a[m]) {
        EXPECT_NEAR(*a[m], *b[m], 1e-12) << measure_name(m);
      }
    }
  }
}

TEST(MetricsProperty, SixNodeShortestPathOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto net = random_graph(rng, 6, 0.1 + 0.002 * trial);
    const auto d = shortest_paths(net);
    const auto ref = oracle::path_enumeration_spl(oracle::to_adj(net));
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) ASSERT_EQ(d(i, j), ref[i][j]);
  }
}

TEST(MeasureVectorBasics, Invariants) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const auto mv = compute_measures(random_graph(rng, 10, 0.2));
    EXPECT_GE(*mv[Measure::frac_spl_le2], 0.0);
    EXPECT_LE(*mv[Measure::frac_spl_le2], *mv[Measure::frac_spl_le3]);
    EXPECT_LE(*mv[Measure::frac_spl_le3], 1.0);
    EXPECT_GE(*mv[Measure::modified_aspl], 1.0);
    EXPECT_LE(*mv[Measure::modified_aspl], 4.0);
  }
}
