#include <gtest/gtest.h>

#include <cstring>

#include "oracles.hpp"
#include "snapnet/models.hpp"

using namespace snapnet;

namespace {

ModelSpec make(ModelFamily f, int n, std::map<std::string, double> p) { return {f, n, std::move(p)}; }

std::vector<ModelSpec> all_models(int n) {
  return {make(ModelFamily::Ising, n, {{"h", 0.7}}), make(ModelFamily::ClusterIsing, n, {{"h", 0.4}}),
          make(ModelFamily::XXZ, n, {{"J", 1.0}, {"J_z", -0.6}}),
          make(ModelFamily::SSH, n, {{"J_A", 1.3}, {"J_B", 0.45}})};
}

}  // namespace

TEST(BuildMpo, IsingClassicalLimit) {
  const auto h = mpo_to_dense(build_mpo(make(ModelFamily::Ising, 4, {{"h", 0.0}})));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  EXPECT_NEAR(es.eigenvalues()(0), -3.0, 1e-12);
  // diagonal: -sum z_i z_{i+1}
  EXPECT_NEAR((h - Eigen::MatrixXd(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0, 0.0);
}

TEST(BuildMpo, IsingL10MatchesTermByTerm) {
  const auto spec = make(ModelFamily::Ising, 10, {{"h", 1.0}});
  const Eigen::MatrixXd h = mpo_to_dense(build_mpo(spec));
  const oracle::CMat ref = oracle::dense_hamiltonian(spec);
  EXPECT_LT((h.cast<std::complex<double>>() - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BuildMpo, XXChainL4MatchesED) {
  const auto spec = make(ModelFamily::XXZ, 4, {{"J", 1.0}, {"J_z", 0.0}});
  const Eigen::MatrixXd h = mpo_to_dense(build_mpo(spec));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  EXPECT_NEAR(es.eigenvalues()(0), oracle::ground_energy(oracle::dense_hamiltonian(spec)), 1e-12);
  // free-fermion value: 2 * sum of negative modes of the hopping matrix with t = 2
  double e = 0.0;
  for (int k = 1; k <= 4; ++k) e += std::min(0.0, 2.0 * 2.0 * std::cos(M_PI * k / 5.0));
  EXPECT_NEAR(es.eigenvalues()(0), e, 1e-12);
}

TEST(BuildMpo, AllFamiliesHermitianAndEqualOracle) {
  for (int n : {4, 6, 8, 10}) {
    for (const auto& spec : all_models(n)) {
      const Eigen::MatrixXd h = mpo_to_dense(build_mpo(spec));
      EXPECT_LT((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-12) << to_string(spec.family);
      const oracle::CMat ref = oracle::dense_hamiltonian(spec);
      EXPECT_LT((h.cast<std::complex<double>>() - ref).cwiseAbs().maxCoeff(), 1e-12)
          << to_string(spec.family) << " L=" << n;
    }
  }
}

TEST(BuildMpo, SshSpectrumEqualsFreeFermions) {
  for (int n : {4, 6, 8}) {
    const double ja = 1.3, jb = 0.45;
    const Eigen::MatrixXd h = mpo_to_dense(build_mpo(make(ModelFamily::SSH, n, {{"J_A", ja}, {"J_B", jb}})));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    const auto ff = oracle::ssh_free_fermion_spectrum(n, ja, jb);
    ASSERT_EQ(static_cast<std::size_t>(es.eigenvalues().size()), ff.size());
    for (std::size_t k = 0; k < ff.size(); ++k) EXPECT_NEAR(es.eigenvalues()(static_cast<Eigen::Index>(k)), ff[k], 1e-10);
  }
}

TEST(BuildMpo, Deterministic) {
  for (const auto& spec : all_models(12)) {
    const auto a = build_mpo(spec), b = build_mpo(spec);
    ASSERT_EQ(a.length(), b.length());
    for (int i = 0; i < a.length(); ++i) {
      const auto& wa = a.sites[static_cast<std::size_t>(i)];
      const auto& wb = b.sites[static_cast<std::size_t>(i)];
      ASSERT_EQ(wa.blocks.size(), wb.blocks.size());
      for (std::size_t k = 0; k < wa.blocks.size(); ++k)
        EXPECT_EQ(std::memcmp(wa.blocks[k].data(), wb.blocks[k].data(), sizeof(double) * 4), 0);
    }
  }
}

TEST(BuildMpo, BoundaryBondsAreOne) {
  for (const auto& spec : all_models(8)) {
    const auto mpo = build_mpo(spec);
    EXPECT_EQ(mpo.sites.front().left_dim, 1);
    EXPECT_EQ(mpo.sites.back().right_dim, 1);
  }
}

TEST(BuildMpo, Errors) {
  EXPECT_THROW(build_mpo(make(ModelFamily::Ising, 8, {})), ParameterError);
  EXPECT_THROW(build_mpo(make(ModelFamily::Ising, 8, {{"h", std::nan("")}})), ParameterError);
  EXPECT_THROW(build_mpo(make(ModelFamily::SSH, 7, {{"J_A", 1.0}, {"J_B", 1.0}})), ShapeError);
  EXPECT_THROW(build_mpo(make(ModelFamily::XXZ, 8, {{"J", 1.0}})), ParameterError);
  EXPECT_THROW(build_mpo(make(ModelFamily::Ising, 8, {{"h", 1.0}, {"J", 1.0}})), ParameterError);
  EXPECT_THROW(parse_family("Heisenberg"), InputError);
}
