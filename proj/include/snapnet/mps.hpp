#pragma once

// Open-boundary matrix product states for spin-1/2 chains.
//
// Site tensor i is stored as two matrices A[i][s] (s = 0 for |up>, 1 for
// |down>) of shape D_{i} x D_{i+1}, with D_0 = D_L = 1, so that
//
//   <s_0 ... s_{L-1} | psi> = A[0][s_0] A[1][s_1] ... A[L-1][s_{L-1}].
//
// Left-canonical: sum_s A[s]^H A[s] = 1; right-canonical: sum_s A[s] A[s]^H = 1.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "snapnet/error.hpp"
#include "snapnet/models.hpp"
#include "snapnet/rng.hpp"

namespace snapnet {

using cplx = std::complex<double>;

template <class Scalar>
struct Mps {
  using scalar_type = Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Site = std::array<Matrix, 2>;

  std::vector<Site> sites;
  int center = -1;  ///< orthogonality center, -1 when not canonical

  int length() const { return static_cast<int>(sites.size()); }

  /// Dimension of the bond to the right of site i.
  Eigen::Index bond_dim(int i) const { return sites[static_cast<std::size_t>(i)][0].cols(); }

  Eigen::Index max_bond() const {
    Eigen::Index m = 1;
    for (const auto& s : sites) m = std::max({m, s[0].rows(), s[0].cols()});
    return m;
  }
};

using RealMps = Mps<double>;
using ComplexMps = Mps<cplx>;

namespace detail {

inline double conj_if(double x) { return x; }
inline cplx conj_if(cplx x) { return std::conj(x); }
inline double abs2(double x) { return x * x; }
inline double abs2(cplx x) { return std::norm(x); }

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Thin QR: M = Q R with Q having min(rows, cols) orthonormal columns.
template <class Scalar>
void thin_qr(const Mat<Scalar>& m, Mat<Scalar>& q, Mat<Scalar>& r) {
  const Eigen::Index k = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<Mat<Scalar>> qr(m);
  q = qr.householderQ() * Mat<Scalar>::Identity(m.rows(), k);
  r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
}

/// [A_0; A_1] stacked vertically, (2 D_l) x D_r.
template <class Scalar>
Mat<Scalar> stack_rows(const typename Mps<Scalar>::Site& a) {
  const Eigen::Index dl = a[0].rows();
  Mat<Scalar> m(2 * dl, a[0].cols());
  m.topRows(dl) = a[0];
  m.bottomRows(dl) = a[1];
  return m;
}

/// [A_0, A_1] side by side, D_l x (2 D_r).
template <class Scalar>
Mat<Scalar> stack_cols(const typename Mps<Scalar>::Site& a) {
  const Eigen::Index dr = a[0].cols();
  Mat<Scalar> m(a[0].rows(), 2 * dr);
  m.leftCols(dr) = a[0];
  m.rightCols(dr) = a[1];
  return m;
}

template <class Scalar>
void left_orthonormalize(Mps<Scalar>& psi, int i) {
  auto& site = psi.sites[static_cast<std::size_t>(i)];
  const Eigen::Index dl = site[0].rows();
  Mat<Scalar> q, r;
  thin_qr<Scalar>(stack_rows<Scalar>(site), q, r);
  site[0] = q.topRows(dl);
  site[1] = q.bottomRows(dl);
  auto& next = psi.sites[static_cast<std::size_t>(i + 1)];
  next[0] = r * next[0];
  next[1] = r * next[1];
}

template <class Scalar>
void right_orthonormalize(Mps<Scalar>& psi, int i) {
  auto& site = psi.sites[static_cast<std::size_t>(i)];
  const Eigen::Index dr = site[0].cols();
  Mat<Scalar> q, r;
  thin_qr<Scalar>(stack_cols<Scalar>(site).adjoint(), q, r);
  const Mat<Scalar> qh = q.adjoint();
  site[0] = qh.leftCols(dr);
  site[1] = qh.rightCols(dr);
  const Mat<Scalar> rh = r.adjoint();
  auto& prev = psi.sites[static_cast<std::size_t>(i - 1)];
  prev[0] = prev[0] * rh;
  prev[1] = prev[1] * rh;
}

}  // namespace detail

/// Product state from local amplitudes (up, down) per site.
template <class Scalar>
Mps<Scalar> product_state(const std::vector<std::array<Scalar, 2>>& local) {
  Mps<Scalar> psi;
  psi.sites.resize(local.size());
  for (std::size_t i = 0; i < local.size(); ++i) {
    for (int s = 0; s < 2; ++s) {
      psi.sites[i][static_cast<std::size_t>(s)].resize(1, 1);
      psi.sites[i][static_cast<std::size_t>(s)](0, 0) = local[i][static_cast<std::size_t>(s)];
    }
  }
  return psi;
}

/// All spins up along z.
inline RealMps polarized_state(int length) {
  return product_state<double>(std::vector<std::array<double, 2>>(static_cast<std::size_t>(length), {1.0, 0.0}));
}

/// Product of real single-site states cos(phi)|up> + sin(phi)|down> with
/// phi uniform on [0, 2 pi), drawn from Philox stream (seed, 0).
inline RealMps random_product_state(int length, std::uint64_t seed) {
  PhiloxStream rng(seed, 0);
  std::vector<std::array<double, 2>> local(static_cast<std::size_t>(length));
  for (auto& a : local) {
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    a = {std::cos(phi), std::sin(phi)};
  }
  return product_state(local);
}

/// Moves the orthogonality center to site c (norm unchanged).
template <class Scalar>
void canonicalize(Mps<Scalar>& psi, int c) {
  const int n = psi.length();
  if (c < 0 || c >= n) throw InputError("canonicalize: center out of range");
  const int left_done = (psi.center >= 0) ? psi.center : 0;
  const int right_done = (psi.center >= 0) ? psi.center : n - 1;
  if (psi.center < 0) {
    for (int i = 0; i < c; ++i) detail::left_orthonormalize(psi, i);
    for (int i = n - 1; i > c; --i) detail::right_orthonormalize(psi, i);
  } else {
    for (int i = left_done; i < c; ++i) detail::left_orthonormalize(psi, i);
    for (int i = right_done; i > c; --i) detail::right_orthonormalize(psi, i);
  }
  psi.center = c;
}

/// <a|b>.
template <class Scalar>
Scalar inner(const Mps<Scalar>& a, const Mps<Scalar>& b) {
  if (a.length() != b.length()) throw ShapeError("inner: length mismatch");
  detail::Mat<Scalar> env = detail::Mat<Scalar>::Ones(1, 1);
  for (int i = 0; i < a.length(); ++i) {
    const auto& sa = a.sites[static_cast<std::size_t>(i)];
    const auto& sb = b.sites[static_cast<std::size_t>(i)];
    env = (sa[0].adjoint() * env * sb[0] + sa[1].adjoint() * env * sb[1]).eval();
  }
  return env(0, 0);
}

template <class Scalar>
double norm(const Mps<Scalar>& psi) {
  if (psi.center >= 0) {
    const auto& s = psi.sites[static_cast<std::size_t>(psi.center)];
    return std::sqrt(s[0].squaredNorm() + s[1].squaredNorm());
  }
  return std::sqrt(std::abs(inner(psi, psi)));
}

/// Canonicalizes at c (default 0) and rescales to unit norm.
template <class Scalar>
void normalize(Mps<Scalar>& psi, int c = 0) {
  canonicalize(psi, c);
  const double nrm = norm(psi);
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericalError("normalize: state has zero or non-finite norm");
  auto& s = psi.sites[static_cast<std::size_t>(c)];
  s[0] /= nrm;
  s[1] /= nrm;
}

/// Dense amplitude vector, site 0 as the most significant bit.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> to_dense(const Mps<Scalar>& psi) {
  if (psi.length() > 24) throw InputError("to_dense: chain too long");
  // rows of `acc` enumerate configurations of the sites seen so far
  detail::Mat<Scalar> acc = detail::Mat<Scalar>::Ones(1, 1);
  for (const auto& site : psi.sites) {
    detail::Mat<Scalar> next(acc.rows() * 2, site[0].cols());
    for (Eigen::Index r = 0; r < acc.rows(); ++r) {
      next.row(2 * r) = acc.row(r) * site[0];
      next.row(2 * r + 1) = acc.row(r) * site[1];
    }
    acc = std::move(next);
  }
  return acc.col(0);
}

/// <psi|H|psi> / <psi|psi>.
template <class Scalar>
double expectation(const Mps<Scalar>& psi, const Mpo& mpo) {
  if (psi.length() != mpo.length())
    throw ShapeError("expectation: MPS length " + std::to_string(psi.length()) +
                     " differs from MPO length " + std::to_string(mpo.length()));
  using M = detail::Mat<Scalar>;
  std::vector<M> env(1, M::Ones(1, 1));
  for (int i = 0; i < psi.length(); ++i) {
    const auto& a = psi.sites[static_cast<std::size_t>(i)];
    const auto& w = mpo.sites[static_cast<std::size_t>(i)];
    const Eigen::Index dr = a[0].cols();
    std::vector<M> next(static_cast<std::size_t>(w.right_dim), M::Zero(dr, dr));
    for (int wa = 0; wa < w.left_dim; ++wa) {
      const M& e = env[static_cast<std::size_t>(wa)];
      if (e.squaredNorm() == 0.0) continue;
      std::array<M, 2> ea = {e * a[0], e * a[1]};
      for (int wb = 0; wb < w.right_dim; ++wb) {
        if (!w.is_nonzero(wa, wb)) continue;
        const auto& op = w.block(wa, wb);
        for (int so = 0; so < 2; ++so)
          for (int si = 0; si < 2; ++si)
            if (op(so, si) != 0.0)
              next[static_cast<std::size_t>(wb)].noalias() +=
                  op(so, si) * (a[static_cast<std::size_t>(so)].adjoint() * ea[static_cast<std::size_t>(si)]);
      }
    }
    env = std::move(next);
  }
  const double nrm2 = std::real(inner(psi, psi));
  return std::real(env[0](0, 0)) / nrm2;
}

/// <psi| O_i |psi> / <psi|psi> for every site i.
template <class Scalar>
std::vector<double> site_expectations(const Mps<Scalar>& psi, const Eigen::Matrix2cd& op) {
  using C = detail::Mat<cplx>;
  const int n = psi.length();
  std::vector<C> right(static_cast<std::size_t>(n + 1));
  right[static_cast<std::size_t>(n)] = C::Ones(1, 1);
  for (int i = n - 1; i >= 0; --i) {
    const auto& a = psi.sites[static_cast<std::size_t>(i)];
    const C a0 = a[0].template cast<cplx>();
    const C a1 = a[1].template cast<cplx>();
    const C& r = right[static_cast<std::size_t>(i + 1)];
    right[static_cast<std::size_t>(i)] = a0 * r * a0.adjoint() + a1 * r * a1.adjoint();
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  C left = C::Ones(1, 1);
  const double nrm2 = std::real(right[0](0, 0));
  for (int i = 0; i < n; ++i) {
    const auto& a = psi.sites[static_cast<std::size_t>(i)];
    const std::array<C, 2> ac = {a[0].template cast<cplx>(), a[1].template cast<cplx>()};
    const C& r = right[static_cast<std::size_t>(i + 1)];
    cplx val = 0.0;
    for (int so = 0; so < 2; ++so)
      for (int si = 0; si < 2; ++si)
        if (op(so, si) != 0.0)
          val += op(so, si) * (ac[static_cast<std::size_t>(so)].adjoint() * left *
                               ac[static_cast<std::size_t>(si)] * r).trace();
    out[static_cast<std::size_t>(i)] = std::real(val) / nrm2;
    left = (ac[0].adjoint() * left * ac[0] + ac[1].adjoint() * left * ac[1]).eval();
  }
  return out;
}

struct TruncationReport {
  std::vector<double> discarded_weight;  ///< per bond, bond b is between sites b and b+1

  double fidelity_bound() const {
    double f = 1.0;
    for (double e : discarded_weight) f *= (1.0 - e);
    return f;
  }
};

/// Number of singular values to keep: at most `max_bond`, and as few as
/// possible while the discarded share of sum s^2 stays <= cutoff.
inline Eigen::Index keep_count(const Eigen::VectorXd& s, Eigen::Index max_bond, double cutoff,
                               double* discarded) {
  const double total = s.squaredNorm();
  Eigen::Index k = s.size();
  double tail = 0.0;
  while (k > 1) {
    const double next_tail = tail + s(k - 1) * s(k - 1);
    if (next_tail > cutoff * total) break;
    tail = next_tail;
    --k;
  }
  while (k > max_bond) {
    tail += s(k - 1) * s(k - 1);
    --k;
  }
  if (discarded) *discarded = total > 0.0 ? tail / total : 0.0;
  return k;
}

/// Compresses every bond to at most `max_bond` states, dropping at most a
/// `cutoff` share of the weight when the cap is not binding. The result is
/// normalized with its center at site 0.
template <class Scalar>
Mps<Scalar> truncate(Mps<Scalar> psi, Eigen::Index max_bond, double cutoff,
                     TruncationReport* report = nullptr) {
  using M = detail::Mat<Scalar>;
  const int n = psi.length();
  normalize(psi, n - 1);
  std::vector<double> discarded(static_cast<std::size_t>(std::max(n - 1, 0)), 0.0);
  for (int i = n - 1; i > 0; --i) {
    auto& site = psi.sites[static_cast<std::size_t>(i)];
    const Eigen::Index dr = site[0].cols();
    const M m = detail::stack_cols<Scalar>(site);
    Eigen::BDCSVD<M> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues();
    double eps = 0.0;
    const Eigen::Index k = keep_count(s, max_bond, cutoff, &eps);
    discarded[static_cast<std::size_t>(i - 1)] = eps;
    const M vh = svd.matrixV().leftCols(k).adjoint();
    site[0] = vh.leftCols(dr);
    site[1] = vh.rightCols(dr);
    const double kept = s.head(k).norm();
    const M us = svd.matrixU().leftCols(k) * (s.head(k) / kept).asDiagonal();
    auto& prev = psi.sites[static_cast<std::size_t>(i - 1)];
    prev[0] = prev[0] * us;
    prev[1] = prev[1] * us;
  }
  psi.center = 0;
  if (report) report->discarded_weight = std::move(discarded);
  return psi;
}

/// Largest deviation from the left/right isometry conditions implied by the
/// current center.
template <class Scalar>
double isometry_error(const Mps<Scalar>& psi) {
  double err = 0.0;
  for (int i = 0; i < psi.length(); ++i) {
    if (i == psi.center) continue;
    const auto& a = psi.sites[static_cast<std::size_t>(i)];
    if (psi.center < 0 || i < psi.center) {
      const detail::Mat<Scalar> g = a[0].adjoint() * a[0] + a[1].adjoint() * a[1];
      err = std::max(err, (g - detail::Mat<Scalar>::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
    } else {
      const detail::Mat<Scalar> g = a[0] * a[0].adjoint() + a[1] * a[1].adjoint();
      err = std::max(err, (g - detail::Mat<Scalar>::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
    }
  }
  return err;
}

template <class Scalar>
Mps<cplx> to_complex(const Mps<Scalar>& psi) {
  Mps<cplx> out;
  out.center = psi.center;
  out.sites.resize(psi.sites.size());
  for (std::size_t i = 0; i < psi.sites.size(); ++i)
    for (std::size_t s = 0; s < 2; ++s) out.sites[i][s] = psi.sites[i][s].template cast<cplx>();
  return out;
}

}  // namespace snapnet
