#include <gtest/gtest.h>

#include "oracles.hpp"
#include "snapnet/metric.hpp"

using namespace snapnet;

namespace {

SnapshotDataset random_dataset(std::size_t n, int len, std::uint64_t seed, double p_down = 0.5) {
  PhiloxStream rng(seed, 0);
  SnapshotDataset ds(n, len);
  for (std::size_t r = 0; r < n; ++r)
    for (int i = 0; i < len; ++i)
      if (rng.uniform() < p_down) ds.set(r, i, -1);
  return ds;
}

/// O(N^2) reference: sort all other rows by (distance, index).
std::vector<std::pair<double, std::uint32_t>> brute_neighbors(const SnapshotDataset& ds, const std::vector<double>* noise,
                                                             std::size_t r) {
  std::vector<std::pair<double, std::uint32_t>> all;
  const auto a = ds.row(r);
  for (std::size_t s = 0; s < ds.rows(); ++s) {
    if (s == r) continue;
    double d = hamming(a, ds.row(s));
    if (noise) d = std::sqrt(d * d + std::pow((*noise)[r] - (*noise)[s], 2));
    all.emplace_back(d, static_cast<std::uint32_t>(s));
  }
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

TEST(Overlap, Examples) {
  const std::vector<int> a(8, 1), b(8, -1);
  EXPECT_EQ(overlap(a, a), 8);
  EXPECT_EQ(overlap(a, b), -8);
  EXPECT_EQ(overlap({1, 1, -1, 1}, {1, -1, -1, -1}), 0);
  EXPECT_THROW(overlap({1, 1}, {1}), ShapeError);
}

TEST(Hamming, Examples) {
  const std::vector<int> a(8, 1), b(8, -1);
  EXPECT_EQ(hamming(a, a), 0);
  EXPECT_EQ(hamming(a, b), 8);
  EXPECT_EQ(hamming({1, 1, -1, 1}, {1, -1, -1, -1}), 2);
  EXPECT_THROW(hamming({1, 1}, {1}), ShapeError);
}

TEST(Hamming, MetricAxiomsAndPackedAgreement) {
  const auto ds = random_dataset(40, 100, 3);
  for (std::size_t r = 0; r < 40; ++r)
    for (std::size_t s = 0; s < 40; ++s) {
      const int d = hamming(ds, r, s);
      ASSERT_EQ(d, hamming(ds.row(r), ds.row(s)));
      ASSERT_EQ(d, hamming(ds, s, r));
      ASSERT_EQ(d == 0, ds.row(r) == ds.row(s));
      ASSERT_EQ(overlap(ds, r, s), overlap(ds.row(r), ds.row(s)));
      for (std::size_t t = 0; t < 40; ++t) ASSERT_LE(d, hamming(ds, r, t) + hamming(ds, t, s));
    }
}

TEST(Knn, SortedNeighborsSmallCase) {
  // distances: d(0,1) = 1, d(0,2) = 2, d(1,2) = 3
  const auto ds = SnapshotDataset::from_rows({{1, 1, 1, 1}, {-1, 1, 1, 1}, {1, -1, -1, 1}});
  const auto nt = knn(ds, 2);
  EXPECT_EQ(nt.neighbor(0, 0), 1u);
  EXPECT_EQ(nt.dist(0, 0), 1.0);
  EXPECT_EQ(nt.neighbor(0, 1), 2u);
  EXPECT_EQ(nt.dist(0, 1), 2.0);
  EXPECT_EQ(nt.dist(2, 0), 2.0);
  EXPECT_EQ(nt.dist(2, 1), 3.0);
}

TEST(Knn, MatchesBruteForce) {
  const auto ds = random_dataset(200, 16, 5);
  const auto nt = knn(ds, 10, 2);
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto ref = brute_neighbors(ds, nullptr, r);
    for (int k = 0; k < 10; ++k) {
      ASSERT_EQ(nt.dist(r, k), ref[static_cast<std::size_t>(k)].first) << r << " " << k;
      ASSERT_EQ(nt.neighbor(r, k), ref[static_cast<std::size_t>(k)].second) << r << " " << k;
    }
  }
}

TEST(Knn, AugmentedMatchesBruteForceWithDuplicates) {
  // strongly biased rows so that many configurations repeat
  const auto ds = random_dataset(300, 12, 6, 0.08);
  const auto ads = augment_repetitions(ds, 9);
  ASSERT_GT(ads.duplicate_rows, 0u);
  const auto nt = knn(ads, 5);
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto ref = brute_neighbors(ds, &ads.noise, r);
    for (int k = 0; k < 5; ++k) {
      ASSERT_DOUBLE_EQ(nt.dist(r, k), ref[static_cast<std::size_t>(k)].first);
      ASSERT_EQ(nt.neighbor(r, k), ref[static_cast<std::size_t>(k)].second);
    }
  }
}

TEST(Knn, RelabelingPermutesTable) {
  const auto ds = random_dataset(120, 20, 7);
  std::vector<std::vector<int>> rows;
  for (std::size_t r = 0; r < ds.rows(); ++r) rows.push_back(ds.row(r));
  std::vector<std::vector<int>> rev(rows.rbegin(), rows.rend());
  const auto a = knn(ds, 4);
  const auto b = knn(SnapshotDataset::from_rows(rev), 4);
  const std::size_t n = rows.size();
  for (std::size_t r = 0; r < n; ++r)
    for (int k = 0; k < 4; ++k) EXPECT_EQ(a.dist(r, k), b.dist(n - 1 - r, k));
}

TEST(Knn, TooManyNeighborsThrows) {
  const auto ds = random_dataset(5, 8, 1);
  EXPECT_THROW(knn(ds, 5), InputError);
}

TEST(Knn, IdenticalRowsAugmentedArePositive) {
  const SnapshotDataset ds(50, 10);
  const auto ads = augment_repetitions(ds, 4);
  const auto nt = knn(ads, 1);
  for (std::size_t r = 0; r < 50; ++r) {
    EXPECT_GT(nt.dist(r, 0), 0.0);
    EXPECT_DOUBLE_EQ(nt.dist(r, 0), std::abs(ads.noise[r] - ads.noise[nt.neighbor(r, 0)]));
  }
}

TEST(Augment, DistinctRowsGetZeroNoise) {
  SnapshotDataset ds(64, 6);
  for (std::size_t r = 0; r < 64; ++r)
    for (int i = 0; i < 6; ++i)
      if ((r >> i) & 1u) ds.set(r, i, -1);
  const auto ads = augment_repetitions(ds, 1);
  EXPECT_EQ(ads.width, 0.0);
  for (double x : ads.noise) EXPECT_EQ(x, 0.0);
}

TEST(Augment, IdenticalRowsUniformNoise) {
  const SnapshotDataset ds(1000, 8);
  const auto ads = augment_repetitions(ds, 2);
  EXPECT_DOUBLE_EQ(ads.width, 0.5 * 999.0 / 1000.0);
  EXPECT_EQ(ads.duplicate_rows, 999u);
  for (double x : ads.noise) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, ads.width);
  }
  EXPECT_GT(oracle::ks_uniform_p(ads.noise, ads.width), 0.01);
}

TEST(Augment, ConstantMustStayBelowOne) {
  const SnapshotDataset ds(10, 4);
  EXPECT_THROW(augment_repetitions(ds, 1, 1.0), InputError);
  EXPECT_THROW(augment_repetitions(ds, 1, 0.0), InputError);
}

TEST(Repetitions, Stats) {
  const auto ds = SnapshotDataset::from_rows({{1, 1}, {1, -1}, {1, 1}, {1, 1}, {-1, -1}});
  const auto st = repetition_stats(ds);
  EXPECT_EQ(st.duplicate_rows, 2u);
  EXPECT_EQ(st.repeated_rows, 3u);
  EXPECT_EQ(st.multiplicity, (std::vector<std::size_t>{3, 1, 3, 3, 1}));
  EXPECT_EQ(st.multiplicity_histogram.at(3), 1u);
  EXPECT_EQ(st.multiplicity_histogram.at(1), 2u);
}
