#pragma once

// Two-site DMRG ground-state search for real MPOs.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "snapnet/error.hpp"
#include "snapnet/models.hpp"
#include "snapnet/mps.hpp"
#include "snapnet/rng.hpp"

namespace snapnet {

struct DmrgConfig {
  int max_bond = 64;
  double svd_cutoff = 1e-10;   ///< discarded-weight threshold per bond
  int max_sweeps = 30;
  double energy_tol = 1e-10;   ///< |E_sweep - E_prev| <= energy_tol * max(1, |E|) at convergence
  int lanczos_iters = 40;      ///< Krylov dimension per Lanczos restart
  double lanczos_tol = 1e-10;  ///< residual norm of the local eigenproblem
  std::uint64_t seed = 1;      ///< random product initial state and noise
  // Random perturbation of each two-site update during the first sweeps,
  // relative to |theta| and divided by 10 per sweep. Without it a symmetric
  // start can stay in the wrong symmetry sector (Cluster-Ising, h > 1).
  double noise = 1e-3;
  int noise_sweeps = 3;

  void validate() const {
    if (max_bond < 2) throw InputError("dmrg: max_bond must be >= 2");
    if (!(svd_cutoff > 0.0) || !(energy_tol > 0.0) || !(lanczos_tol > 0.0))
      throw InputError("dmrg: tolerances must be positive");
    if (max_sweeps < 1) throw InputError("dmrg: max_sweeps must be >= 1");
    if (lanczos_iters < 2) throw InputError("dmrg: lanczos_iters must be >= 2");
    if (!(noise >= 0.0) || noise_sweeps < 0) throw InputError("dmrg: noise settings must be non-negative");
  }
};

/// Average single-site magnetizations along x, y, z.
struct SectorInfo {
  double mx = 0.0;
  double my = 0.0;
  double mz = 0.0;
};

template <class Scalar>
SectorInfo sector_info(const Mps<Scalar>& psi) {
  const cplx i1(0.0, 1.0);
  Eigen::Matrix2cd sx, sy, sz;
  sx << 0, 1, 1, 0;
  sy << 0, -i1, i1, 0;
  sz << 1, 0, 0, -1;
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  return {mean(site_expectations(psi, sx)), mean(site_expectations(psi, sy)),
          mean(site_expectations(psi, sz))};
}

struct DmrgResult {
  RealMps state;                    ///< normalized, center at site 0
  double energy = 0.0;              ///< <psi|H|psi> of `state`
  std::vector<double> sweep_energies;
  double max_discarded_weight = 0.0;
  int sweeps = 0;
  SectorInfo sector;
};

struct LanczosResult {
  double eigenvalue = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

/// Lowest eigenpair of a symmetric operator given as a matvec. `v` holds the
/// start vector on entry and the eigenvector on exit. Uses full
/// reorthogonalization and restarts from the current Ritz vector.
template <class MatVec>
LanczosResult lanczos_ground(MatVec&& apply, Eigen::VectorXd& v, int krylov_dim, double tol,
                             int max_restarts = 6) {
  const Eigen::Index n = v.size();
  double nv = v.norm();
  if (!(nv > 0.0) || !std::isfinite(nv)) throw NumericalError("lanczos: zero or non-finite start vector");
  v /= nv;
  const int m_max = static_cast<int>(std::min<Eigen::Index>(krylov_dim, n));
  LanczosResult res;
  for (int restart = 0; restart <= max_restarts; ++restart) {
    Eigen::MatrixXd basis(n, m_max);
    std::vector<double> alpha, beta;
    basis.col(0) = v;
    Eigen::VectorXd w(n);
    Eigen::VectorXd ritz;
    double theta = 0.0;
    int m = 0;
    bool converged = false;
    for (int j = 0; j < m_max; ++j) {
      apply(basis.col(j), w);
      ++res.iterations;
      const double a = basis.col(j).dot(w);
      if (!std::isfinite(a)) throw NumericalError("lanczos: non-finite Rayleigh quotient");
      alpha.push_back(a);
      w -= a * basis.col(j);
      if (j > 0) w -= beta.back() * basis.col(j - 1);
      // two passes of classical Gram-Schmidt against the whole basis
      for (int pass = 0; pass < 2; ++pass)
        w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
      const double b = w.norm();
      m = j + 1;
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (int k = 0; k < m; ++k) {
        t(k, k) = alpha[static_cast<std::size_t>(k)];
        if (k + 1 < m) t(k, k + 1) = t(k + 1, k) = beta[static_cast<std::size_t>(k)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      theta = es.eigenvalues()(0);
      ritz = es.eigenvectors().col(0);
      res.residual = b * std::abs(ritz(m - 1));
      const double scale = std::max(1.0, std::abs(theta));
      if (res.residual < tol * scale || b < 1e-14 * scale) {
        converged = true;
        break;
      }
      if (j + 1 < m_max) {
        beta.push_back(b);
        basis.col(j + 1) = w / b;
      }
    }
    v = basis.leftCols(m) * ritz;
    v.normalize();
    res.eigenvalue = theta;
    if (converged) return res;
  }
  return res;
}

namespace detail {

using Envs = std::vector<Eigen::MatrixXd>;

/// Left environment of sites [0, i+1) from that of [0, i).
inline Envs grow_left(const Envs& left, const RealMps::Site& a, const MpoTensor& w) {
  const Eigen::Index dr = a[0].cols();
  Envs out(static_cast<std::size_t>(w.right_dim), Eigen::MatrixXd::Zero(dr, dr));
  for (int wa = 0; wa < w.left_dim; ++wa) {
    const auto& e = left[static_cast<std::size_t>(wa)];
    const std::array<Eigen::MatrixXd, 2> ea = {e * a[0], e * a[1]};
    for (int wb = 0; wb < w.right_dim; ++wb) {
      if (!w.is_nonzero(wa, wb)) continue;
      const auto& op = w.block(wa, wb);
      for (int so = 0; so < 2; ++so)
        for (int si = 0; si < 2; ++si)
          if (op(so, si) != 0.0)
            out[static_cast<std::size_t>(wb)].noalias() +=
                op(so, si) * (a[static_cast<std::size_t>(so)].transpose() * ea[static_cast<std::size_t>(si)]);
    }
  }
  return out;
}

/// Right environment of sites [i, L) from that of [i+1, L).
inline Envs grow_right(const Envs& right, const RealMps::Site& a, const MpoTensor& w) {
  const Eigen::Index dl = a[0].rows();
  Envs out(static_cast<std::size_t>(w.left_dim), Eigen::MatrixXd::Zero(dl, dl));
  for (int wb = 0; wb < w.right_dim; ++wb) {
    const auto& e = right[static_cast<std::size_t>(wb)];
    const std::array<Eigen::MatrixXd, 2> ae = {a[0] * e, a[1] * e};
    for (int wa = 0; wa < w.left_dim; ++wa) {
      if (!w.is_nonzero(wa, wb)) continue;
      const auto& op = w.block(wa, wb);
      for (int so = 0; so < 2; ++so)
        for (int si = 0; si < 2; ++si)
          if (op(so, si) != 0.0)
            out[static_cast<std::size_t>(wa)].noalias() +=
                op(so, si) * (ae[static_cast<std::size_t>(so)] * a[static_cast<std::size_t>(si)].transpose());
    }
  }
  return out;
}

/// Effective two-site Hamiltonian acting on theta, stored as four
/// column-major D_l x D_r blocks in the order (s1, s2) = 00, 01, 10, 11.
class TwoSiteOperator {
 public:
  TwoSiteOperator(const Envs& left, const MpoTensor& w1, const MpoTensor& w2, const Envs& right,
                  Eigen::Index dl, Eigen::Index dr)
      : left_(left), w1_(w1), w2_(w2), dl_(dl), dr_(dr) {
    right_t_.reserve(right.size());
    for (const auto& r : right) right_t_.push_back(r.transpose());
    const auto nl = static_cast<std::size_t>(w1.left_dim);
    const auto nm = static_cast<std::size_t>(w1.right_dim);
    const auto nr = static_cast<std::size_t>(w2.right_dim);
    t_.assign(nl * 4, Eigen::MatrixXd(dl, dr));
    b_.assign(nm * 4, Eigen::MatrixXd(dl, dr));
    c_.assign(nr * 4, Eigen::MatrixXd(dl, dr));
  }

  Eigen::Index size() const { return 4 * dl_ * dr_; }

  template <class In, class Out>
  void operator()(const In& x, Out& y) {
    const Eigen::Index blk = dl_ * dr_;
    auto theta = [&](int s) { return Eigen::Map<const Eigen::MatrixXd>(x.data() + s * blk, dl_, dr_); };
    const int nl = w1_.left_dim, nm = w1_.right_dim, nr = w2_.right_dim;
    for (int a = 0; a < nl; ++a)
      for (int s = 0; s < 4; ++s) t_[idx(a, s)].noalias() = left_[static_cast<std::size_t>(a)] * theta(s);
    for (int m = 0; m < nm; ++m) {
      for (int s = 0; s < 4; ++s) b_[idx(m, s)].setZero();
      for (int a = 0; a < nl; ++a) {
        if (!w1_.is_nonzero(a, m)) continue;
        const auto& op = w1_.block(a, m);
        for (int s1o = 0; s1o < 2; ++s1o)
          for (int s1i = 0; s1i < 2; ++s1i) {
            const double c = op(s1o, s1i);
            if (c == 0.0) continue;
            for (int s2 = 0; s2 < 2; ++s2) b_[idx(m, 2 * s1o + s2)] += c * t_[idx(a, 2 * s1i + s2)];
          }
      }
    }
    for (int r = 0; r < nr; ++r) {
      for (int s = 0; s < 4; ++s) c_[idx(r, s)].setZero();
      for (int m = 0; m < nm; ++m) {
        if (!w2_.is_nonzero(m, r)) continue;
        const auto& op = w2_.block(m, r);
        for (int s2o = 0; s2o < 2; ++s2o)
          for (int s2i = 0; s2i < 2; ++s2i) {
            const double c = op(s2o, s2i);
            if (c == 0.0) continue;
            for (int s1 = 0; s1 < 2; ++s1) c_[idx(r, 2 * s1 + s2o)] += c * b_[idx(m, 2 * s1 + s2i)];
          }
      }
    }
    for (int s = 0; s < 4; ++s) {
      Eigen::Map<Eigen::MatrixXd> out(y.data() + s * blk, dl_, dr_);
      out.setZero();
      for (int r = 0; r < nr; ++r) out.noalias() += c_[idx(r, s)] * right_t_[static_cast<std::size_t>(r)];
    }
  }

 private:
  static std::size_t idx(int w, int s) { return static_cast<std::size_t>(w * 4 + s); }

  const Envs& left_;
  const MpoTensor& w1_;
  const MpoTensor& w2_;
  Envs right_t_;
  Eigen::Index dl_, dr_;
  std::vector<Eigen::MatrixXd> t_, b_, c_;
};

inline Eigen::VectorXd merge_two_sites(const RealMps::Site& a, const RealMps::Site& b) {
  const Eigen::Index dl = a[0].rows(), dr = b[0].cols();
  Eigen::VectorXd theta(4 * dl * dr);
  for (int s1 = 0; s1 < 2; ++s1)
    for (int s2 = 0; s2 < 2; ++s2) {
      Eigen::Map<Eigen::MatrixXd> blk(theta.data() + (2 * s1 + s2) * dl * dr, dl, dr);
      blk.noalias() = a[static_cast<std::size_t>(s1)] * b[static_cast<std::size_t>(s2)];
    }
  return theta;
}

/// Splits theta by SVD. With `move_right` the left site becomes left-canonical
/// and the singular values go right; otherwise the right site becomes
/// right-canonical. Returns the discarded weight.
inline double split_two_sites(const Eigen::VectorXd& theta, Eigen::Index dl, Eigen::Index dr,
                              const DmrgConfig& cfg, bool move_right, RealMps::Site& a,
                              RealMps::Site& b, Eigen::VectorXd* kept_theta = nullptr) {
  Eigen::MatrixXd m(2 * dl, 2 * dr);
  for (int s1 = 0; s1 < 2; ++s1)
    for (int s2 = 0; s2 < 2; ++s2)
      m.block(s1 * dl, s2 * dr, dl, dr) =
          Eigen::Map<const Eigen::MatrixXd>(theta.data() + (2 * s1 + s2) * dl * dr, dl, dr);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  double eps = 0.0;
  const Eigen::Index k = keep_count(s, cfg.max_bond, cfg.svd_cutoff, &eps);
  const Eigen::VectorXd sk = s.head(k) / s.head(k).norm();
  Eigen::MatrixXd u = svd.matrixU().leftCols(k);
  Eigen::MatrixXd vt = svd.matrixV().leftCols(k).transpose();
  if (move_right)
    vt = sk.asDiagonal() * vt;
  else
    u = u * sk.asDiagonal();
  for (int s1 = 0; s1 < 2; ++s1) a[static_cast<std::size_t>(s1)] = u.middleRows(s1 * dl, dl);
  for (int s2 = 0; s2 < 2; ++s2) b[static_cast<std::size_t>(s2)] = vt.middleCols(s2 * dr, dr);
  if (kept_theta) *kept_theta = merge_two_sites(a, b);
  return eps;
}

}  // namespace detail

/// Ground state of `mpo` by two-site DMRG from a random product state.
/// Each sweep goes left-to-right and back, ending with the orthogonality
/// center at site 0. Throws ConvergenceError when the sweep energy has not
/// settled within `energy_tol` (relative to |E| once |E| > 1) after
/// `max_sweeps`.
inline DmrgResult dmrg_ground_state(const Mpo& mpo, const DmrgConfig& cfg) {
  cfg.validate();
  const int n = mpo.length();
  if (n < 2) throw ShapeError("dmrg: chain must have at least two sites");
  RealMps psi = random_product_state(n, cfg.seed);
  normalize(psi, 0);

  using detail::Envs;
  std::vector<Envs> left(static_cast<std::size_t>(n + 1)), right(static_cast<std::size_t>(n + 1));
  left[0] = Envs(1, Eigen::MatrixXd::Ones(1, 1));
  right[static_cast<std::size_t>(n)] = Envs(1, Eigen::MatrixXd::Ones(1, 1));
  for (int i = n - 1; i >= 1; --i)
    right[static_cast<std::size_t>(i)] =
        detail::grow_right(right[static_cast<std::size_t>(i + 1)], psi.sites[static_cast<std::size_t>(i)],
                           mpo.sites[static_cast<std::size_t>(i)]);

  DmrgResult result;
  double prev = std::numeric_limits<double>::infinity();
  double delta = std::numeric_limits<double>::infinity();

  // Each two-site step returns the energy of the state it leaves behind.
  // Once the noise is off, a truncated update that would raise the energy is
  // rejected in favour of an exact re-split of the current tensors, so
  // energies never increase.
  const std::uint64_t noise_seed = derive_seed(cfg.seed, 0x6e6f697365ull);
  auto optimize = [&](int i, bool move_right, double noise, std::uint64_t stream) -> double {
    auto& a = psi.sites[static_cast<std::size_t>(i)];
    auto& b = psi.sites[static_cast<std::size_t>(i + 1)];
    const Eigen::Index dl = a[0].rows(), dr = b[0].cols();
    const Eigen::Index bond = a[0].cols();
    detail::TwoSiteOperator heff(left[static_cast<std::size_t>(i)], mpo.sites[static_cast<std::size_t>(i)],
                                 mpo.sites[static_cast<std::size_t>(i + 1)],
                                 right[static_cast<std::size_t>(i + 2)], dl, dr);
    const Eigen::VectorXd current = detail::merge_two_sites(a, b);
    Eigen::VectorXd h_vec(current.size());
    heff(current, h_vec);
    const double e_current = current.dot(h_vec) / current.squaredNorm();

    Eigen::VectorXd theta = current;
    lanczos_ground(heff, theta, cfg.lanczos_iters, cfg.lanczos_tol);
    if (noise > 0.0) {
      PhiloxStream rng(noise_seed, stream);
      Eigen::VectorXd r(theta.size());
      for (Eigen::Index k = 0; k < r.size(); ++k) r(k) = rng.uniform() - 0.5;
      theta += (noise * theta.norm() / r.norm()) * r;
    }
    RealMps::Site na, nb;
    Eigen::VectorXd kept;
    const double eps = detail::split_two_sites(theta, dl, dr, cfg, move_right, na, nb, &kept);
    heff(kept, h_vec);
    double energy = kept.dot(h_vec) / kept.squaredNorm();
    if (noise > 0.0 || energy <= e_current) {
      a = std::move(na);
      b = std::move(nb);
      result.max_discarded_weight = std::max(result.max_discarded_weight, eps);
    } else {
      DmrgConfig exact = cfg;
      exact.max_bond = static_cast<int>(bond);
      exact.svd_cutoff = 0.0;
      detail::split_two_sites(current / current.norm(), dl, dr, exact, move_right, a, b);
      energy = e_current;
    }
    if (move_right)
      left[static_cast<std::size_t>(i + 1)] =
          detail::grow_left(left[static_cast<std::size_t>(i)], a, mpo.sites[static_cast<std::size_t>(i)]);
    else
      right[static_cast<std::size_t>(i + 1)] =
          detail::grow_right(right[static_cast<std::size_t>(i + 2)], b, mpo.sites[static_cast<std::size_t>(i + 1)]);
    return energy;
  };

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const double noise = sweep <= cfg.noise_sweeps ? cfg.noise * std::pow(0.1, sweep - 1) : 0.0;
    const auto stream = static_cast<std::uint64_t>(sweep) << 32;
    for (int i = 0; i <= n - 2; ++i) optimize(i, true, noise, stream + static_cast<std::uint64_t>(i));
    double energy = 0.0;
    for (int i = n - 2; i >= 0; --i) {
      const double e = optimize(i, false, noise, stream + static_cast<std::uint64_t>(n + i));
      if (i == 0) energy = e;
    }
    if (!std::isfinite(energy)) throw NumericalError("dmrg: non-finite energy");
    result.sweep_energies.push_back(energy);
    result.sweeps = sweep;
    delta = std::abs(energy - prev);
    prev = energy;
    if (sweep >= cfg.noise_sweeps + 2 && delta <= cfg.energy_tol * std::max(1.0, std::abs(energy))) {
      psi.center = 0;
      result.state = std::move(psi);
      result.energy = expectation(result.state, mpo);
      result.sector = sector_info(result.state);
      return result;
    }
  }
  throw ConvergenceError("dmrg: energy not converged after " + std::to_string(cfg.max_sweeps) +
                             " sweeps (last delta " + std::to_string(delta) + ")",
                         delta, prev);
}

}  // namespace snapnet
