#include <gtest/gtest.h>

#include "oracles.hpp"
#include "snapnet/mps.hpp"

using namespace snapnet;

namespace {

/// Random MPS with bond dimension chi (not normalized, not canonical).
RealMps random_mps(int n, int chi, std::uint64_t seed) {
  PhiloxStream rng(seed, 0);
  RealMps psi;
  psi.sites.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int dl = std::min({chi, 1 << std::min(i, 20), 1 << std::min(n - i, 20)});
    const int dr = std::min({chi, 1 << std::min(i + 1, 20), 1 << std::min(n - i - 1, 20)});
    for (auto& m : psi.sites[static_cast<std::size_t>(i)]) {
      m.resize(dl, dr);
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.normal();
    }
  }
  return psi;
}

}  // namespace

TEST(Mps, CanonicalizeGivesIsometries) {
  for (int c : {0, 3, 7}) {
    auto psi = random_mps(8, 6, 11);
    const Eigen::VectorXd before = to_dense(psi);
    canonicalize(psi, c);
    EXPECT_LT(isometry_error(psi), 1e-10);
    const Eigen::VectorXd after = to_dense(psi);
    EXPECT_LT((before - after).cwiseAbs().maxCoeff(), 1e-10 * before.cwiseAbs().maxCoeff());
    // moving the center again keeps everything isometric
    canonicalize(psi, 7 - c);
    EXPECT_LT(isometry_error(psi), 1e-10);
  }
}

TEST(Mps, NormalizeAndInner) {
  auto psi = random_mps(10, 8, 5);
  normalize(psi, 4);
  EXPECT_NEAR(norm(psi), 1.0, 1e-12);
  EXPECT_NEAR(inner(psi, psi), 1.0, 1e-10);
  EXPECT_NEAR(to_dense(psi).norm(), 1.0, 1e-10);
}

TEST(Mps, ExpectationIsingProductState) {
  const ModelSpec spec{ModelFamily::Ising, 10, {{"h", 0.0}}};
  EXPECT_NEAR(expectation(polarized_state(10), build_mpo(spec)), -9.0, 1e-12);
}

TEST(Mps, ExpectationIdentityIsOne) {
  auto psi = random_mps(8, 4, 2);
  normalize(psi);
  Mpo id;
  for (int i = 0; i < 8; ++i) {
    MpoTensor w(1, 1);
    w.add(0, 0, pauli::identity());
    id.sites.push_back(w);
  }
  EXPECT_NEAR(expectation(psi, id), 1.0, 1e-12);
}

TEST(Mps, ExpectationMatchesDense) {
  for (auto fam : {ModelFamily::Ising, ModelFamily::ClusterIsing, ModelFamily::XXZ, ModelFamily::SSH}) {
    ModelSpec spec{fam, 8, {}};
    for (const auto& p : required_params(fam)) spec.params[p] = 0.3 + 0.2 * static_cast<double>(spec.params.size());
    auto psi = random_mps(8, 5, 17);
    const Eigen::VectorXcd v = to_dense(psi).cast<std::complex<double>>();
    const double ref = std::real(v.dot(oracle::dense_hamiltonian(spec) * v)) / v.squaredNorm();
    EXPECT_NEAR(expectation(psi, build_mpo(spec)), ref, 1e-10) << to_string(fam);
  }
}

TEST(Mps, ExpectationLengthMismatch) {
  const ModelSpec spec{ModelFamily::Ising, 8, {{"h", 1.0}}};
  EXPECT_THROW(expectation(polarized_state(6), build_mpo(spec)), ShapeError);
}

TEST(Truncate, ProductStateUnchanged) {
  auto psi = random_product_state(12, 3);
  TruncationReport rep;
  const auto out = truncate(psi, 1, 1e-12, &rep);
  EXPECT_EQ(out.max_bond(), 1);
  EXPECT_NEAR(rep.fidelity_bound(), 1.0, 1e-14);
  EXPECT_LT((to_dense(psi) - to_dense(out)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Truncate, SingletExactAtChi2) {
  RealMps psi;
  psi.sites.resize(2);
  const double r = 1.0 / std::sqrt(2.0);
  psi.sites[0][0] = (Eigen::MatrixXd(1, 2) << 1, 0).finished();
  psi.sites[0][1] = (Eigen::MatrixXd(1, 2) << 0, 1).finished();
  psi.sites[1][0] = (Eigen::MatrixXd(2, 1) << 0, -r).finished();
  psi.sites[1][1] = (Eigen::MatrixXd(2, 1) << r, 0).finished();
  TruncationReport rep;
  const auto out = truncate(psi, 2, 1e-12, &rep);
  EXPECT_NEAR(rep.fidelity_bound(), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(inner(psi, out)), 1.0, 1e-12);
}

TEST(Truncate, FidelityMatchesDenseSvdOracle) {
  // Fully random L=8 state: exact MPS has bonds 2,4,8,16,8,4,2.
  PhiloxStream rng(21, 0);
  Eigen::VectorXd v(256);
  for (auto& x : v) x = rng.normal();
  v.normalize();
  auto psi = random_mps(8, 16, 1);
  // overwrite with an exact MPS of v built by successive dense SVDs
  {
    Eigen::MatrixXd rest = v.transpose();  // 1 x 256
    Eigen::Index dl = 1;
    for (int i = 0; i < 7; ++i) {
      const Eigen::Index cols = rest.size() / (dl * 2);
      // rows: (left bond, s) with s slower -> stack s blocks
      Eigen::MatrixXd m(2 * dl, cols);
      for (int s = 0; s < 2; ++s)
        for (Eigen::Index a = 0; a < dl; ++a)
          for (Eigen::Index c = 0; c < cols; ++c) m(s * dl + a, c) = rest(a, s * cols + c);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Eigen::Index k = svd.singularValues().size();
      auto& site = psi.sites[static_cast<std::size_t>(i)];
      site[0] = svd.matrixU().topRows(dl);
      site[1] = svd.matrixU().bottomRows(dl);
      rest = svd.singularValues().asDiagonal() * svd.matrixV().transpose();
      dl = k;
    }
    auto& last = psi.sites[7];
    last[0] = rest.col(0);
    last[1] = rest.col(1);
  }
  ASSERT_LT((to_dense(psi) - v).norm(), 1e-10);
  psi.center = 7;

  TruncationReport rep;
  const auto out = truncate(psi, 4, 1e-14, &rep);
  EXPECT_LE(out.max_bond(), 4);
  EXPECT_NEAR(norm(out), 1.0, 1e-12);
  const double fid = std::pow(to_dense(out).dot(v), 2);
  EXPECT_NEAR(fid, rep.fidelity_bound(), 1e-10);

  // Oracle: the same right-to-left sweep done on dense vectors.
  Eigen::VectorXd w = v;
  double prod = 1.0;
  for (int b = 6; b >= 0; --b) {
    // matrix with rows = sites [0, b], cols = sites [b+1, 8)
    const Eigen::Index rows = Eigen::Index{1} << (b + 1);
    Eigen::MatrixXd m = Eigen::Map<Eigen::MatrixXd>(w.data(), 256 / rows, rows).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues();
    const Eigen::Index k = std::min<Eigen::Index>(4, s.size());
    prod *= s.head(k).squaredNorm() / s.squaredNorm();
    Eigen::MatrixXd mk = svd.matrixU().leftCols(k) * s.head(k).asDiagonal() * svd.matrixV().leftCols(k).transpose();
    mk /= mk.norm();
    Eigen::MatrixXd mt = mk.transpose();
    w = Eigen::Map<Eigen::VectorXd>(mt.data(), 256);
  }
  EXPECT_NEAR(prod, rep.fidelity_bound(), 1e-10);
  EXPECT_NEAR(std::pow(w.dot(v), 2), fid, 1e-10);
}

TEST(Truncate, CutoffBoundsDiscardedWeight) {
  auto psi = random_mps(10, 12, 8);
  TruncationReport rep;
  const auto out = truncate(psi, 100, 1e-3, &rep);
  for (double e : rep.discarded_weight) EXPECT_LE(e, 1e-3);
  EXPECT_NEAR(norm(out), 1.0, 1e-12);
  EXPECT_LT(isometry_error(out), 1e-10);
}
