#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "snapnet/dmrg.hpp"
#include "snapnet/sampler.hpp"

using namespace snapnet;

namespace {

RealMps ghz(int n) {
  RealMps psi;
  psi.sites.resize(static_cast<std::size_t>(n));
  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    const int dl = i == 0 ? 1 : 2, dr = i == n - 1 ? 1 : 2;
    auto& s = psi.sites[static_cast<std::size_t>(i)];
    s[0] = Eigen::MatrixXd::Zero(dl, dr);
    s[1] = Eigen::MatrixXd::Zero(dl, dr);
    if (i == 0) {
      s[0](0, 0) = r;
      s[1](0, 1) = r;
    } else if (i == n - 1) {
      s[0](0, 0) = 1;
      s[1](1, 0) = 1;
    } else {
      s[0](0, 0) = 1;
      s[1](1, 1) = 1;
    }
  }
  return psi;
}

RealMps ground_state(const ModelSpec& spec) {
  DmrgConfig cfg;
  cfg.seed = 5;
  return dmrg_ground_state(build_mpo(spec), cfg).state;
}

std::vector<std::size_t> counts(const SnapshotDataset& ds) {
  std::vector<std::size_t> c(std::size_t{1} << ds.length(), 0);
  for (std::size_t r = 0; r < ds.rows(); ++r) ++c[oracle::row_index(ds, r)];
  return c;
}

}  // namespace

TEST(Dataset, PackingRoundTrip) {
  const std::vector<std::vector<int>> rows = {{1, -1, 1, 1}, {-1, -1, -1, 1}};
  const auto ds = SnapshotDataset::from_rows(rows);
  EXPECT_EQ(ds.rows(), 2u);
  EXPECT_EQ(ds.length(), 4);
  EXPECT_EQ(ds.row(0), rows[0]);
  EXPECT_EQ(ds.row(1), rows[1]);
  EXPECT_THROW(SnapshotDataset::from_rows({{1, 0}}), InputError);
  EXPECT_THROW(SnapshotDataset::from_rows({{1, 1}, {1}}), ShapeError);
}

TEST(Dataset, LongRowsSpanWords) {
  SnapshotDataset ds(3, 130);
  ds.set(1, 129, -1);
  ds.set(2, 64, -1);
  EXPECT_EQ(ds.words_per_row(), 3u);
  EXPECT_EQ(ds.get(1, 129), -1);
  EXPECT_EQ(ds.get(1, 128), 1);
  EXPECT_EQ(ds.get(2, 64), -1);
  EXPECT_EQ(ds.get(0, 64), 1);
}

TEST(Basis, ParseAndUnitary) {
  EXPECT_EQ(parse_basis("y"), Basis::Y);
  EXPECT_THROW(parse_basis("w"), InputError);
  for (Basis b : kAllBases) {
    const Eigen::Matrix2cd u = basis_unitary(b);
    EXPECT_LT((u * u.adjoint() - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(RotateBasis, ZIsIdentity) {
  auto psi = ground_state({ModelFamily::Ising, 6, {{"h", 0.7}}});
  const auto rot = rotate_basis(psi, Basis::Z);
  ASSERT_TRUE(std::holds_alternative<RealMps>(rot));
  const auto& r = std::get<RealMps>(rot);
  for (std::size_t i = 0; i < psi.sites.size(); ++i)
    for (std::size_t s = 0; s < 2; ++s) EXPECT_EQ(r.sites[i][s], psi.sites[i][s]);
}

TEST(RotateBasis, YIsComplexXIsReal) {
  auto psi = polarized_state(4);
  EXPECT_TRUE(std::holds_alternative<RealMps>(rotate_basis(psi, Basis::X)));
  EXPECT_TRUE(std::holds_alternative<ComplexMps>(rotate_basis(psi, Basis::Y)));
}

TEST(PerfectSample, PolarizedStateIsDeterministic) {
  const auto ds = perfect_sample(polarized_state(10), 500, 1);
  for (std::size_t r = 0; r < ds.rows(); ++r)
    for (int i = 0; i < 10; ++i) ASSERT_EQ(ds.get(r, i), 1);
}

TEST(PerfectSample, PolarizedInXIsUniform) {
  auto ds = sample_in_basis(polarized_state(4), Basis::X, 100000, 3);
  EXPECT_EQ(ds.basis, Basis::X);
  const auto chi = oracle::chi_square(counts(ds), std::vector<double>(16, 1.0 / 16.0));
  EXPECT_GT(chi.p_value, 0.01) << "chi2 " << chi.statistic;
}

TEST(PerfectSample, GhzGivesTwoRows) {
  auto psi = ghz(4);
  normalize(psi);
  const auto ds = perfect_sample(psi, 10000, 7);
  std::set<std::vector<int>> distinct;
  std::size_t up = 0;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    distinct.insert(ds.row(r));
    up += ds.get(r, 0) == 1;
  }
  EXPECT_EQ(distinct.size(), 2u);
  EXPECT_NEAR(static_cast<double>(up) / 1e4, 0.5, 0.02);
}

TEST(PerfectSample, IsingCriticalMatchesBornRule) {
  const auto psi = ground_state({ModelFamily::Ising, 6, {{"h", 1.0}}});
  const Eigen::VectorXcd dense = to_dense(psi).cast<std::complex<double>>();
  const auto ds = sample_in_basis(psi, Basis::Z, 100000, 11);
  const auto chi = oracle::chi_square(counts(ds), oracle::born_probabilities(dense, Basis::Z, 6));
  EXPECT_GT(chi.p_value, 0.01) << "chi2 " << chi.statistic << " dof " << chi.dof;
}

TEST(PerfectSample, IsingYBasisTotalVariation) {
  const ModelSpec spec{ModelFamily::Ising, 6, {{"h", 0.5}}};
  const auto psi = ground_state(spec);
  // the sampled state is the exact ground state
  const auto ed = oracle::ground_state(oracle::dense_hamiltonian(spec));
  EXPECT_NEAR(std::norm(ed.dot(to_dense(psi).cast<std::complex<double>>())), 1.0, 1e-8);
  const auto probs = oracle::born_probabilities(ed, Basis::Y, 6);
  const auto ds = sample_in_basis(psi, Basis::Y, 100000, 12);
  const auto c = counts(ds);
  double tv = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) tv += std::abs(static_cast<double>(c[k]) / 1e5 - probs[k]);
  EXPECT_LT(0.5 * tv, 0.02);
}

TEST(PerfectSample, MarginalsMatchExpectations) {
  const auto psi = ground_state({ModelFamily::XXZ, 8, {{"J", 1.0}, {"J_z", 0.5}}});
  const cplx i1(0.0, 1.0);
  std::map<Basis, Eigen::Matrix2cd> ops;
  ops[Basis::X] << 0, 1, 1, 0;
  ops[Basis::Y] << 0, -i1, i1, 0;
  ops[Basis::Z] << 1, 0, 0, -1;
  for (Basis b : kAllBases) {
    const auto exact = site_expectations(psi, ops[b]);
    const auto ds = sample_in_basis(psi, b, 20000, 40 + static_cast<int>(b));
    for (int i = 0; i < 8; ++i) {
      double m = 0.0;
      for (std::size_t r = 0; r < ds.rows(); ++r) m += ds.get(r, i);
      m /= static_cast<double>(ds.rows());
      const double se = std::sqrt(std::max(1.0 - exact[static_cast<std::size_t>(i)] * exact[static_cast<std::size_t>(i)], 1e-4) / 20000.0);
      EXPECT_NEAR(m, exact[static_cast<std::size_t>(i)], 4 * se) << to_string(b) << " site " << i;
    }
  }
}

TEST(PerfectSample, SeedDeterminismAndJobIndependence) {
  const auto psi = ground_state({ModelFamily::Ising, 10, {{"h", 1.0}}});
  const auto a = sample_in_basis(psi, Basis::X, 3000, 77, 1);
  const auto b = sample_in_basis(psi, Basis::X, 3000, 77, 1);
  const auto c = sample_in_basis(psi, Basis::X, 3000, 77, 3);
  const auto d = sample_in_basis(psi, Basis::X, 3000, 78, 1);
  EXPECT_TRUE(a.same_bits(b));
  EXPECT_TRUE(a.same_bits(c));
  EXPECT_FALSE(a.same_bits(d));
}

TEST(PerfectSample, UnnormalizedStateThrows) {
  auto psi = polarized_state(4);
  psi.sites[2][0] *= 2.0;
  psi.center = 0;  // lie about the gauge so the check sees the bad norm
  EXPECT_THROW(perfect_sample(psi, 10, 1), NumericalError);
}

TEST(Decimate, PairProducts) {
  const auto ds = SnapshotDataset::from_rows({{1, -1, 1, 1}});
  const auto out = decimate(ds, 1);
  EXPECT_EQ(out.row(0), (std::vector<int>{-1, 1}));
  EXPECT_EQ(out.level, 1);
  EXPECT_EQ(decimate(ds, 2).row(0), (std::vector<int>{-1}));
}

TEST(Decimate, AllUpStaysAllUp) {
  const SnapshotDataset ds(5, 16);
  for (int steps = 0; steps <= 4; ++steps) {
    const auto out = decimate(ds, steps);
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (int i = 0; i < out.length(); ++i) EXPECT_EQ(out.get(r, i), 1);
  }
}

TEST(Decimate, MatchesExplicitProductsAndCommutesWithPermutation) {
  PhiloxStream rng(8, 0);
  std::vector<std::vector<int>> rows(50, std::vector<int>(96));
  for (auto& r : rows)
    for (auto& v : r) v = rng.uniform() < 0.5 ? 1 : -1;
  const auto ds = SnapshotDataset::from_rows(rows);
  const auto out = decimate(ds, 3);
  ASSERT_EQ(out.length(), 12);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int j = 0; j < 12; ++j) {
      int p = 1;
      for (int k = 0; k < 8; ++k) p *= rows[r][static_cast<std::size_t>(8 * j + k)];
      EXPECT_EQ(out.get(r, j), p);
    }
  auto perm = rows;
  std::reverse(perm.begin(), perm.end());
  const auto out_perm = decimate(SnapshotDataset::from_rows(perm), 3);
  for (std::size_t r = 0; r < rows.size(); ++r) EXPECT_EQ(out_perm.row(r), out.row(rows.size() - 1 - r));
}

TEST(Decimate, NonDivisibleLengthThrows) {
  const SnapshotDataset ds(2, 6);
  EXPECT_THROW(decimate(ds, 2), ShapeError);
}
