#pragma once

// Finite-size scaling of degree moments in subsampled networks.
//
// Nodes are drawn without replacement from a pool of N_tot snapshots and
// linked with one cutoff R fixed at the largest scale. For a scale-free
// network with a size-dependent degree cutoff, consecutive moment ratios
// <k^{i+1}>/<k^i> grow as a power of N_s with an exponent that does not
// depend on i.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "snapnet/error.hpp"
#include "snapnet/rng.hpp"
#include "snapnet/sampler.hpp"
#include "snapnet/wfnet.hpp"

namespace snapnet {

/// (1/N) sum_v k_v^i.
inline double moment(const std::vector<std::size_t>& degrees, int i) {
  if (i < 1) throw InputError("moment: order must be >= 1");
  if (degrees.empty()) throw InputError("moment: empty network");
  // Kahan summation keeps the reduction order-independent to rounding
  double s = 0.0, c = 0.0;
  for (auto k : degrees) {
    const double y = std::pow(static_cast<double>(k), i) - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s / static_cast<double>(degrees.size());
}

inline double moment(const Graph& g, int i) { return moment(g.degrees(), i); }

/// `count` distinct indices out of [0, pool), in draw order (partial
/// Fisher-Yates on Philox stream (seed, stream)).
inline std::vector<std::uint32_t> sample_without_replacement(std::size_t pool, std::size_t count, std::uint64_t seed,
                                                             std::uint64_t stream) {
  if (count > pool) throw InputError("sample_without_replacement: count exceeds pool");
  std::vector<std::uint32_t> idx(pool);
  std::iota(idx.begin(), idx.end(), 0u);
  PhiloxStream rng(seed, stream);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(pool - k));
    std::swap(idx[k], idx[j]);
  }
  idx.resize(count);
  return idx;
}

/// b networks on N_s distinct pool rows each, linked with the fixed cutoff.
/// With N_s == N_tot there is nothing to sample and a single network is
/// returned.
inline std::vector<Graph> subsample_networks(const SnapshotDataset& pool, std::size_t n_s, std::size_t b, double cutoff,
                                             std::uint64_t seed, int jobs = 1) {
  if (n_s > pool.rows())
    throw InputError("subsample_networks: scale " + std::to_string(n_s) + " exceeds pool size " +
                     std::to_string(pool.rows()));
  if (n_s == 0 || b == 0) throw InputError("subsample_networks: scale and batch must be positive");
  if (n_s == pool.rows()) return {geometric_graph(pool, cutoff, {}, jobs)};
  std::vector<Graph> out;
  for (std::size_t j = 0; j < b; ++j)
    out.push_back(geometric_graph(pool, cutoff, sample_without_replacement(pool.rows(), n_s, seed, j), jobs));
  return out;
}

struct FssOptions {
  std::vector<std::size_t> scales;  ///< empty: 8 log-spaced values in [pool/50, pool/5]
  std::size_t batch = 100;
  std::vector<int> orders = {2, 3, 4};
  int neighbor_rank = 3;
  std::uint64_t seed = 1;
  double consistency_sigmas = 2.0;  ///< pairwise slope agreement
  double curvature_sigmas = 3.0;    ///< allowed quadratic term in log-log
  int jobs = 1;
};

/// Log-spaced integer scales between lo and hi inclusive.
inline std::vector<std::size_t> log_spaced_scales(std::size_t lo, std::size_t hi, int count) {
  if (count < 2 || lo == 0 || hi <= lo) throw InputError("log_spaced_scales: need count >= 2 and 0 < lo < hi");
  std::vector<std::size_t> s;
  for (int k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) / (count - 1);
    s.push_back(static_cast<std::size_t>(std::llround(std::exp(std::log(static_cast<double>(lo)) * (1 - t) +
                                                               std::log(static_cast<double>(hi)) * t))));
  }
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

struct ScaleStats {
  std::size_t n_s = 0;
  std::vector<std::vector<double>> batch_moments;  ///< [batch][order - 1], orders 1..max+1
  std::vector<double> mean_moments;                ///< orders 1..max+1
  std::vector<double> moment_se;                   ///< jackknife SE of each mean moment
  std::map<int, double> log_ratio;                 ///< i -> log(<k^{i+1}>/<k^i>)
  std::map<int, double> log_ratio_se;
};

struct SlopeFit {
  int order = 0;
  double slope = 0.0;  ///< d log ratio / d log N_s, equal to -fss_exponent
  double slope_se = 0.0;
  double curvature = 0.0;  ///< quadratic coefficient of a second fit
  double curvature_se = 0.0;
  double fss_exponent() const { return -slope; }
};

enum class FssVerdict { ScaleFreeConfirmed, NotConfirmed };

inline std::string to_string(FssVerdict v) {
  return v == FssVerdict::ScaleFreeConfirmed ? "ScaleFreeConfirmed" : "NotConfirmed";
}

struct FssRun {
  std::size_t pool_size = 0;
  std::vector<std::size_t> scales;
  std::size_t batch = 0;
  double cutoff = 0.0;
  int neighbor_rank = 0;
  std::uint64_t seed = 0;
  std::vector<ScaleStats> per_scale;
  std::vector<SlopeFit> fits;
  std::optional<PowerLawFit> gamma_fit;  ///< tail fit of the largest-scale network
  std::vector<int> orders_below_validity;  ///< orders with i <= gamma - 1
  FssVerdict verdict = FssVerdict::NotConfirmed;
  std::string reason;
};

namespace detail {

/// Weighted least squares y = X beta; returns beta and its covariance
/// scaled by max(1, reduced chi^2).
inline void wls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, Eigen::VectorXd& beta,
                Eigen::MatrixXd& cov) {
  const Eigen::MatrixXd xtw = x.transpose() * w.asDiagonal();
  const Eigen::MatrixXd a = xtw * x;
  const Eigen::MatrixXd ainv = a.inverse();
  beta = ainv * (xtw * y);
  const Eigen::VectorXd r = y - x * beta;
  const double dof = static_cast<double>(x.rows() - x.cols());
  const double chi2 = r.dot(w.asDiagonal() * r);
  const double scale = dof > 0 ? std::max(1.0, chi2 / dof) : 1.0;
  cov = ainv * scale;
}

}  // namespace detail

/// Moment-ratio slopes and their pairwise consistency. The verdict also
/// asks every ratio curve to be straight in log-log (no quadratic term
/// beyond `curvature_sigmas`), since short-tailed networks can produce
/// similar average slopes along visibly bent curves.
inline void moment_ratio_scaling(FssRun& run, const std::vector<int>& orders, double consistency_sigmas,
                                 double curvature_sigmas) {
  if (run.per_scale.size() < 4) throw InputError("moment_ratio_scaling: need at least 4 scales");
  run.fits.clear();
  const auto m = static_cast<Eigen::Index>(run.per_scale.size());
  for (int i : orders) {
    Eigen::VectorXd lx(m), y(m), w(m);
    for (Eigen::Index s = 0; s < m; ++s) {
      const auto& st = run.per_scale[static_cast<std::size_t>(s)];
      lx(s) = std::log(static_cast<double>(st.n_s));
      y(s) = st.log_ratio.at(i);
      const double se = st.log_ratio_se.at(i);
      w(s) = 1.0 / std::max(se * se, 1e-12);
    }
    if (!y.allFinite())
      throw NumericalError("moment_ratio_scaling: undefined moment ratio (networks without links) for order " +
                           std::to_string(i));
    const double xc = lx.mean();
    Eigen::MatrixXd x1(m, 2), x2(m, 3);
    for (Eigen::Index s = 0; s < m; ++s) {
      const double t = lx(s) - xc;
      x1.row(s) << 1.0, t;
      x2.row(s) << 1.0, t, t * t;
    }
    Eigen::VectorXd b1, b2;
    Eigen::MatrixXd c1, c2;
    detail::wls(x1, y, w, b1, c1);
    detail::wls(x2, y, w, b2, c2);
    SlopeFit f;
    f.order = i;
    f.slope = b1(1);
    f.slope_se = std::sqrt(c1(1, 1));
    f.curvature = b2(2);
    f.curvature_se = std::sqrt(c2(2, 2));
    run.fits.push_back(f);
  }
  bool consistent = true, straight = true;
  std::string why;
  for (std::size_t a = 0; a < run.fits.size(); ++a) {
    const auto& fa = run.fits[a];
    if (std::abs(fa.curvature) > curvature_sigmas * fa.curvature_se) {
      straight = false;
      why += "order " + std::to_string(fa.order) + " ratio curve is bent; ";
    }
    for (std::size_t b = a + 1; b < run.fits.size(); ++b) {
      const auto& fb = run.fits[b];
      if (std::abs(fa.slope - fb.slope) > consistency_sigmas * std::hypot(fa.slope_se, fb.slope_se)) {
        consistent = false;
        why += "slopes of orders " + std::to_string(fa.order) + " and " + std::to_string(fb.order) + " differ; ";
      }
    }
  }
  bool growing = true;
  for (const auto& f : run.fits)
    if (!(f.slope > 0.0)) growing = false;
  if (!growing) why += "moment ratios do not grow with N_s; ";
  run.verdict = (consistent && straight && growing) ? FssVerdict::ScaleFreeConfirmed : FssVerdict::NotConfirmed;
  if (why.size() >= 2) why.resize(why.size() - 2);
  run.reason = run.verdict == FssVerdict::ScaleFreeConfirmed ? "moment-ratio slopes agree and curves are straight" : why;
}

/// Full test on a pool of snapshots.
inline FssRun fss_test(const SnapshotDataset& pool, const FssOptions& opt) {
  FssRun run;
  run.pool_size = pool.rows();
  run.batch = opt.batch;
  run.seed = opt.seed;
  run.neighbor_rank = opt.neighbor_rank;
  run.scales = opt.scales.empty() ? log_spaced_scales(std::max<std::size_t>(pool.rows() / 50, 2),
                                                      std::max<std::size_t>(pool.rows() / 5, 3), 8)
                                  : opt.scales;
  std::sort(run.scales.begin(), run.scales.end());
  if (opt.orders.empty()) throw InputError("fss: no moment orders");
  if (run.scales.back() > pool.rows())
    throw InputError("fss: largest scale " + std::to_string(run.scales.back()) + " exceeds pool size " +
                     std::to_string(pool.rows()));
  if (run.scales.size() < 4) throw InputError("fss: need at least 4 scales");
  const int max_order = *std::max_element(opt.orders.begin(), opt.orders.end()) + 1;

  // cutoff of the largest-scale network
  const auto largest = sample_without_replacement(pool.rows(), run.scales.back(), opt.seed, 0xC0FFEEull);
  SnapshotDataset top(largest.size(), pool.length());
  for (std::size_t k = 0; k < largest.size(); ++k)
    std::copy(pool.row_words(largest[k]), pool.row_words(largest[k]) + pool.words_per_row(), top.row_words(k));
  run.cutoff = cutoff_radius(top, opt.neighbor_rank, opt.jobs);
  {
    const Graph g = geometric_graph(top, run.cutoff, {}, opt.jobs);
    std::map<std::size_t, std::size_t> hist;
    std::size_t kmax = 0;
    for (auto k : g.degrees()) {
      ++hist[k];
      kmax = std::max(kmax, k);
    }
    if (kmax >= 2) run.gamma_fit = fit_power_law_auto(hist, kmax);
    if (run.gamma_fit)
      for (int i : opt.orders)
        if (static_cast<double>(i) <= run.gamma_fit->gamma - 1.0) run.orders_below_validity.push_back(i);
  }

  // every subnetwork is an induced subgraph of the pool network
  const Graph pool_graph = geometric_graph(pool, run.cutoff, {}, opt.jobs);
  std::vector<char> in_subset(pool.rows(), 0);
  for (std::size_t si = 0; si < run.scales.size(); ++si) {
    const std::size_t n_s = run.scales[si];
    ScaleStats st;
    st.n_s = n_s;
    const std::size_t batches = (n_s == pool.rows()) ? 1 : opt.batch;
    for (std::size_t j = 0; j < batches; ++j) {
      const auto nodes = sample_without_replacement(pool.rows(), n_s, opt.seed, (si << 32) | j);
      for (auto v : nodes) in_subset[v] = 1;
      std::vector<std::size_t> deg(n_s);
      for (std::size_t a = 0; a < n_s; ++a) {
        std::size_t d = 0;
        for (auto p = pool_graph.neighbors_begin(nodes[a]); p != pool_graph.neighbors_end(nodes[a]); ++p) d += in_subset[*p];
        deg[a] = d;
      }
      for (auto v : nodes) in_subset[v] = 0;
      std::vector<double> mom;
      for (int i = 1; i <= max_order; ++i) mom.push_back(moment(deg, i));
      st.batch_moments.push_back(std::move(mom));
    }
    const double bn = static_cast<double>(batches);
    const double prefactor = n_s < pool.rows()
                                 ? std::sqrt(static_cast<double>(n_s) / static_cast<double>(pool.rows() - n_s))
                                 : 0.0;
    for (int i = 1; i <= max_order; ++i) {
      double mean = 0.0;
      for (const auto& bm : st.batch_moments) mean += bm[static_cast<std::size_t>(i - 1)];
      mean /= bn;
      double var = 0.0;
      for (const auto& bm : st.batch_moments) var += std::pow(bm[static_cast<std::size_t>(i - 1)] - mean, 2);
      st.mean_moments.push_back(mean);
      st.moment_se.push_back(prefactor * std::sqrt(var / bn));
    }
    for (int i : opt.orders) {
      const double num = st.mean_moments[static_cast<std::size_t>(i)];
      const double den = st.mean_moments[static_cast<std::size_t>(i - 1)];
      st.log_ratio[i] = std::log(num / den);
      // same jackknife estimator applied to the per-batch log ratios
      double var = 0.0;
      for (const auto& bm : st.batch_moments) {
        const double r = std::log(bm[static_cast<std::size_t>(i)] / bm[static_cast<std::size_t>(i - 1)]);
        var += std::isfinite(r) ? std::pow(r - st.log_ratio[i], 2) : 0.0;
      }
      st.log_ratio_se[i] = prefactor * std::sqrt(var / bn);
    }
    run.per_scale.push_back(std::move(st));
  }
  moment_ratio_scaling(run, opt.orders, opt.consistency_sigmas, opt.curvature_sigmas);
  // below R = 1 only repeated configurations link, so every degree grows
  // linearly with N_s and all ratios share slope 1 without any power law
  if (run.cutoff < 1.0) {
    run.verdict = FssVerdict::NotConfirmed;
    run.reason = "cutoff below 1: probability network, degrees grow linearly with N_s";
  }
  return run;
}

}  // namespace snapnet
