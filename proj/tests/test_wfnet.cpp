#include <gtest/gtest.h>

#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <map>
#include <set>

#include "oracles.hpp"
#include "snapnet/rng.hpp"
#include "snapnet/wfnet.hpp"

using namespace snapnet;

namespace {

SnapshotDataset random_strings(std::size_t n, int length, std::uint64_t seed) {
  SnapshotDataset ds(n, length);
  PhiloxStream rng(seed, 0);
  for (std::size_t r = 0; r < n; ++r)
    for (int i = 0; i < length; ++i) ds.set(r, i, (rng() & 1u) ? -1 : 1);
  return ds;
}

// p(k) ~ k^-gamma on [1, kmax], inverse-CDF sampling
std::vector<std::size_t> power_law_sample(std::size_t n, double gamma, std::size_t kmax, std::uint64_t seed) {
  std::vector<double> cdf(kmax + 1, 0.0);
  for (std::size_t k = 1; k <= kmax; ++k) cdf[k] = cdf[k - 1] + std::pow(static_cast<double>(k), -gamma);
  PhiloxStream rng(seed, 1);
  std::vector<std::size_t> out(n);
  for (auto& k : out) {
    const double u = rng.uniform() * cdf[kmax];
    k = static_cast<std::size_t>(std::upper_bound(cdf.begin() + 1, cdf.end(), u) - cdf.begin());
  }
  return out;
}

std::vector<std::size_t> poisson_sample(std::size_t n, double lam, std::uint64_t seed) {
  PhiloxStream rng(seed, 2);
  std::vector<std::size_t> out(n);
  for (auto& k : out) {
    double p = std::exp(-lam), c = p, u = rng.uniform();
    std::size_t j = 0;
    while (u > c) {
      ++j;
      p *= lam / static_cast<double>(j);
      c += p;
    }
    k = j;
  }
  return out;
}

std::map<std::size_t, std::size_t> histogram(const std::vector<std::size_t>& d) {
  std::map<std::size_t, std::size_t> h;
  for (auto k : d) ++h[k];
  return h;
}

}  // namespace

TEST(Graph, StarAndRingDegrees) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> star, ring;
  for (std::uint32_t v = 1; v < 6; ++v) star.emplace_back(0, v);
  for (std::uint32_t v = 0; v < 7; ++v) ring.emplace_back(v, (v + 1) % 7);
  const auto s = Graph::from_edges(6, star);
  const auto r = Graph::from_edges(7, ring);
  EXPECT_EQ(s.degree(0), 5u);
  for (std::size_t v = 1; v < 6; ++v) EXPECT_EQ(s.degree(v), 1u);
  for (std::size_t v = 0; v < 7; ++v) EXPECT_EQ(r.degree(v), 2u);
  EXPECT_EQ(s.edges(), 5u);
  EXPECT_EQ(r.edges(), 7u);
  EXPECT_EQ(r.edge_list().front(), (std::pair<std::uint32_t, std::uint32_t>{0, 1}));
}

TEST(Graph, RejectsSelfEdgesAndMergesDuplicates) {
  EXPECT_THROW(Graph::from_edges(3, {{1, 1}}), InputError);
  EXPECT_THROW(Graph::from_edges(3, {{0, 3}}), InputError);
  const auto g = Graph::from_edges(3, {{0, 1}, {1, 0}, {0, 1}});
  EXPECT_EQ(g.edges(), 1u);
}

TEST(Network, MatchesBruteForceAdjacency) {
  const auto ds = random_strings(300, 24, 5);
  const double cutoff = 8.7;
  const auto g = geometric_graph(ds, cutoff, {}, 2);
  std::size_t edges = 0;
  for (std::size_t a = 0; a < ds.rows(); ++a)
    for (std::size_t b = 0; b < ds.rows(); ++b) {
      if (a == b) continue;
      const bool linked = oracle::hamming_rows(ds, a, b) <= cutoff;
      const bool found = std::binary_search(g.neighbors_begin(a), g.neighbors_end(a), static_cast<std::uint32_t>(b));
      ASSERT_EQ(linked, found) << a << " " << b;
      edges += linked;
    }
  EXPECT_EQ(g.edges() * 2, edges);
}

TEST(Network, SubsetIsInducedSubgraph) {
  const auto ds = random_strings(120, 16, 9);
  const auto full = geometric_graph(ds, 5.0);
  std::vector<std::uint32_t> subset;
  for (std::uint32_t r = 0; r < 120; r += 3) subset.push_back(r);
  const auto sub = geometric_graph(ds, 5.0, subset);
  for (std::size_t a = 0; a < subset.size(); ++a)
    for (std::size_t b = 0; b < subset.size(); ++b) {
      const bool in_full = std::binary_search(full.neighbors_begin(subset[a]), full.neighbors_end(subset[a]), subset[b]);
      const bool in_sub = std::binary_search(sub.neighbors_begin(a), sub.neighbors_end(a), static_cast<std::uint32_t>(b));
      EXPECT_EQ(in_full, in_sub);
    }
}

TEST(Network, CutoffIsMeanNthNeighbourDistance) {
  const auto ds = random_strings(150, 20, 3);
  for (int n : {1, 3}) {
    double s = 0.0;
    for (std::size_t a = 0; a < ds.rows(); ++a) {
      std::vector<int> d;
      for (std::size_t b = 0; b < ds.rows(); ++b)
        if (b != a) d.push_back(oracle::hamming_rows(ds, a, b));
      std::sort(d.begin(), d.end());
      s += d[static_cast<std::size_t>(n - 1)];
    }
    EXPECT_DOUBLE_EQ(cutoff_radius(ds, n), s / 150.0);
  }
  const auto net = build_network_auto(ds, 3);
  EXPECT_EQ(net.neighbor_rank, 3);
  EXPECT_DOUBLE_EQ(net.cutoff, cutoff_radius(ds, 3));
}

TEST(Network, RandomStringDegreesAreBinomial) {
  // for uniform random strings the degree of a node is Binomial(N-1, p)
  // with p the probability that two strings differ in at most floor(R) sites
  const int L = 30;
  const std::size_t n = 3000;
  const auto ds = random_strings(n, L, 17);
  const double cutoff = 9.0;
  const auto g = geometric_graph(ds, cutoff);
  double p = 0.0;
  for (int h = 0; h <= 9; ++h) p += std::exp(std::lgamma(L + 1.0) - std::lgamma(h + 1.0) - std::lgamma(L - h + 1.0)) * std::pow(0.5, L);
  boost::math::binomial_distribution<> bin(static_cast<double>(n - 1), p);
  const auto hist = histogram(g.degrees());
  const std::size_t kmax = hist.rbegin()->first + 5;
  std::vector<std::size_t> counts(kmax + 1, 0);
  std::vector<double> probs(kmax + 1, 0.0);
  for (auto [k, c] : hist) counts[k] = c;
  for (std::size_t k = 0; k <= kmax; ++k) probs[k] = boost::math::pdf(bin, static_cast<double>(k));
  probs[kmax] += boost::math::cdf(boost::math::complement(bin, static_cast<double>(kmax)));
  EXPECT_GT(oracle::chi_square(counts, probs).p_value, 1e-3);
}

TEST(Network, BelowUnitCutoffLinksOnlyRepeats) {
  auto ds = SnapshotDataset::from_rows({{1, 1, 1}, {1, 1, 1}, {1, -1, 1}, {1, 1, 1}, {1, -1, 1}});
  const auto net = build_network(ds, 0.5);
  EXPECT_EQ(net.graph.degree(0), 2u);
  EXPECT_EQ(net.graph.degree(2), 1u);
  EXPECT_EQ(net.graph.edges(), 4u);
  const auto lab = classify_network(net, 3);
  EXPECT_EQ(lab.type, NetworkType::Probability);
}

TEST(Network, NegativeCutoffThrows) {
  const auto ds = random_strings(10, 8, 1);
  EXPECT_THROW(build_network(ds, -1.0), InputError);
  EXPECT_THROW(cutoff_radius(ds, 10), InputError);
  EXPECT_THROW(cutoff_radius(ds, 0), InputError);
}

TEST(Degrees, BinsAreNormalized) {
  const std::vector<std::size_t> d = {0, 1, 1, 2, 3, 3, 3, 7, 8};
  for (auto b : {Binning::Linear, Binning::Log}) {
    const auto dd = degree_distribution(d, b);
    std::size_t total = 0;
    double freq = 0.0;
    for (const auto& bin : dd.bins) {
      total += bin.count;
      freq += bin.frequency;
      EXPECT_NEAR(bin.density * static_cast<double>(bin.hi - bin.lo), bin.frequency, 1e-15);
    }
    EXPECT_EQ(total, d.size());
    EXPECT_NEAR(freq, 1.0, 1e-12);
  }
  const auto lg = degree_distribution(d, Binning::Log);
  ASSERT_EQ(lg.bins.size(), 5u);  // {0} [1,2) [2,4) [4,8) [8,16)
  EXPECT_EQ(lg.bins[2].count, 4u);
  EXPECT_EQ(lg.bins[3].count, 1u);
  EXPECT_EQ(parse_binning("log"), Binning::Log);
  EXPECT_THROW(parse_binning("cubic"), InputError);
  EXPECT_THROW(degree_distribution(std::vector<std::size_t>{}, Binning::Linear), InputError);
}

TEST(Components, CountsAndMacroscopicThreshold) {
  // triangle, path of 2, 15 isolated nodes: 20 nodes in total
  const auto g = Graph::from_edges(20, {{0, 1}, {1, 2}, {0, 2}, {3, 4}});
  const auto cs = connected_components(g, 0.1);
  EXPECT_EQ(cs.count(), 17u);
  EXPECT_EQ(cs.sizes[0], 3u);
  EXPECT_EQ(cs.sizes[1], 2u);
  EXPECT_EQ(cs.macroscopic, 2u);  // 3 and 2 both reach 10% of 20
  EXPECT_EQ(cs.label[0], cs.label[2]);
  EXPECT_NE(cs.label[0], cs.label[3]);
  EXPECT_EQ(connected_components(g, 0.15).macroscopic, 1u);
}

TEST(Components, FullyConnectedAtLargeCutoff) {
  const auto ds = random_strings(50, 10, 2);
  const auto cs = cluster_count(build_network(ds, 10.0));
  EXPECT_EQ(cs.count(), 1u);
  EXPECT_EQ(cs.macroscopic, 1u);
}

TEST(LoopNetwork, WeightsAreTargetMultiplicities) {
  const auto ds = SnapshotDataset::from_rows({{1, 1, 1, 1},
                                              {1, 1, 1, 1},
                                              {1, 1, 1, -1},
                                              {1, 1, 1, 1},
                                              {-1, -1, -1, -1},
                                              {1, 1, 1, -1}});
  const auto ln = build_loop_network(ds, 1.0);
  ASSERT_EQ(ln.nodes(), 3u);
  EXPECT_EQ(ln.representative, (std::vector<std::uint32_t>{0, 2, 4}));
  EXPECT_EQ(ln.multiplicity, (std::vector<std::size_t>{3, 2, 1}));
  EXPECT_EQ(ln.weight(0, 0), 3u);
  EXPECT_EQ(ln.weight(0, 1), 2u);
  EXPECT_EQ(ln.weight(1, 0), 3u);
  EXPECT_EQ(ln.weight(0, 2), 0u);
  EXPECT_EQ(ln.loop_degree(0), 6u);
  EXPECT_EQ(ln.loop_degree(2), 1u);
}

TEST(LoopNetwork, SumOfMultiplicitiesIsRowCount) {
  auto ds = random_strings(400, 6, 4);  // 64 configurations, many repeats
  const auto ln = build_loop_network(ds, 2.0);
  std::size_t s = 0;
  for (auto m : ln.multiplicity) s += m;
  EXPECT_EQ(s, 400u);
  std::set<std::vector<int>> uniq;
  for (std::size_t r = 0; r < ds.rows(); ++r) uniq.insert(ds.row(r));
  EXPECT_EQ(ln.nodes(), uniq.size());
}

TEST(PowerLaw, RecoversPlantedExponent) {
  for (double gamma : {2.0, 2.5, 3.0}) {
    const auto d = power_law_sample(20000, gamma, 2000, static_cast<std::uint64_t>(gamma * 10));
    const auto f = fit_power_law(histogram(d), 1, 2000);
    EXPECT_NEAR(f.gamma, gamma, 4.0 * f.sigma + 1e-3) << gamma;
    EXPECT_LT(f.ks, 0.02);
  }
}

TEST(PowerLaw, TailBeatsPoisson) {
  const auto pl = power_law_sample(5000, 2.5, 1000, 3);
  const auto h = histogram(pl);
  const auto f = fit_power_law_auto(h, h.rbegin()->first);
  ASSERT_TRUE(f.has_value());
  EXPECT_GT(compare_tails(h, *f).vuong_z, 2.0);

  const auto po = poisson_sample(5000, 6.0, 4);
  const auto hp = histogram(po);
  const auto fp = fit_power_law_auto(hp, hp.rbegin()->first);
  ASSERT_TRUE(fp.has_value());
  EXPECT_LT(compare_tails(hp, *fp).vuong_z, 2.0);
}

TEST(PowerLaw, TruncatedPoissonMle) {
  // on the full support the MLE is the sample mean
  const auto po = poisson_sample(4000, 3.0, 8);
  const auto h = histogram(po);
  double mean = 0.0;
  for (auto k : po) mean += static_cast<double>(k);
  mean /= 4000.0;
  EXPECT_NEAR(fit_truncated_poisson(h, 0, 200), mean, 1e-6);
}

TEST(Classify, RandomStringsAreErdosRenyi) {
  const auto ds = random_strings(2000, 40, 21);
  const auto net = build_network_auto(ds, 3);
  const auto lab = classify_network(net, 0);
  EXPECT_EQ(lab.type, NetworkType::ErdosRenyi) << lab.reason << " dispersion " << lab.dispersion;
}

TEST(Classify, HeavyTailedGraphIsScaleFree) {
  // configuration model on power-law degrees; self and repeated edges dropped
  const std::size_t n = 10000;
  const auto deg = power_law_sample(n, 2.2, 1000, 12);
  std::vector<std::uint32_t> stubs;
  for (std::size_t v = 0; v < n; ++v) stubs.insert(stubs.end(), deg[v], static_cast<std::uint32_t>(v));
  if (stubs.size() % 2) stubs.pop_back();
  PhiloxStream rng(77, 0);
  for (std::size_t i = stubs.size(); i > 1; --i) std::swap(stubs[i - 1], stubs[rng.below(i)]);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2)
    if (stubs[i] != stubs[i + 1]) edges.emplace_back(stubs[i], stubs[i + 1]);
  WaveFunctionNetwork net{Graph::from_edges(n, edges), 5.0, 3};
  const auto lab = classify_network(net, 0);
  ASSERT_TRUE(lab.tail.has_value());
  EXPECT_EQ(lab.type, NetworkType::ScaleFree)
      << lab.reason << " z " << lab.tail->vuong_z << " gamma " << lab.tail->power_law.gamma << " k_min "
      << lab.tail->power_law.k_min;
  EXPECT_EQ(classify_network(net, 0, {}, false).type, NetworkType::Indeterminate);
}
