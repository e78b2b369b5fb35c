#pragma once

// TWO-NN intrinsic-dimension estimation and minimal-complexity basis choice.
//
// Under local uniformity the ratio mu = r2 / r1 of second to first
// neighbour distance is Pareto distributed, P(mu > x) = x^{-d}. The top
// `discard_fraction` of the ratios is treated as right-censored at the
// largest retained value, which gives the closed-form MLE
//
//   d = k / (sum_{i <= k} log mu_(i) + (n - k) log mu_(k)),
//
// with k = n - floor(discard_fraction * n) retained ratios.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "snapnet/error.hpp"
#include "snapnet/metric.hpp"
#include "snapnet/sampler.hpp"

namespace snapnet {

struct IdEstimate {
  double value = 0.0;
  double ci = 0.0;  ///< 95% half-width
  std::size_t n_used = 0;
  std::size_t n_total = 0;
  double discard_fraction = 0.0;
  std::size_t duplicate_rows = 0;
  double noise_width = 0.0;
  std::string method = "two-nn-censored-mle";
};

/// Estimate from precomputed ratios mu = r2 / r1 (all >= 1).
inline IdEstimate two_nn_from_ratios(std::vector<double> mu, double discard_fraction = 0.1) {
  if (!(discard_fraction >= 0.0 && discard_fraction < 1.0))
    throw InputError("two_nn: discard fraction must lie in [0, 1)");
  const std::size_t n = mu.size();
  if (n < 3) throw InputError("two_nn: need at least 3 ratios");
  for (double m : mu)
    if (!(m >= 1.0) || !std::isfinite(m)) throw NumericalError("two_nn: neighbour ratio below 1 or not finite");
  std::sort(mu.begin(), mu.end());
  const auto dropped = static_cast<std::size_t>(std::floor(discard_fraction * static_cast<double>(n)));
  const std::size_t k = n - dropped;
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::log(mu[i]);
  sum += static_cast<double>(dropped) * std::log(mu[k - 1]);
  if (!(sum > 0.0)) throw NumericalError("two_nn: all retained neighbour ratios equal 1");
  IdEstimate e;
  e.value = static_cast<double>(k) / sum;
  e.ci = 1.959963984540054 * e.value / std::sqrt(static_cast<double>(k));
  e.n_used = k;
  e.n_total = n;
  e.discard_fraction = discard_fraction;
  return e;
}

struct TwoNnOptions {
  double discard_fraction = 0.1;
  double noise_constant = 0.5;
  int jobs = 1;
};

/// TWO-NN on a snapshot dataset: augment repeated rows with the noise
/// feature, take the two nearest neighbours of every row, estimate.
inline IdEstimate two_nn(const SnapshotDataset& ds, std::uint64_t seed, const TwoNnOptions& opt = {}) {
  if (ds.rows() < 100) throw InputError("two_nn: need at least 100 rows, got " + std::to_string(ds.rows()));
  const AugmentedDataset ads = augment_repetitions(ds, seed, opt.noise_constant);
  const NeighborTable nt = knn(ads, 2, opt.jobs);
  std::vector<double> mu(ds.rows());
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const double r1 = nt.dist(r, 0);
    const double r2 = nt.dist(r, 1);
    if (!(r1 > 0.0)) throw NumericalError("two_nn: zero first-neighbour distance after augmentation");
    mu[r] = r2 / r1;
  }
  IdEstimate e = two_nn_from_ratios(std::move(mu), opt.discard_fraction);
  e.duplicate_rows = ads.duplicate_rows;
  e.noise_width = ads.width;
  return e;
}

/// Two nearest Euclidean neighbour distances for real points (rows of a
/// row-major n x dim array). With `period` > 0 coordinates live on a flat
/// torus of that side length.
inline std::vector<double> euclidean_ratios(const std::vector<double>& pts, int dim, double period = 0.0) {
  const std::size_t n = pts.size() / static_cast<std::size_t>(dim);
  std::vector<double> mu(n);
  for (std::size_t i = 0; i < n; ++i) {
    double b1 = INFINITY, b2 = INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (int c = 0; c < dim; ++c) {
        double dx = std::abs(pts[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] -
                             pts[j * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)]);
        if (period > 0.0) dx = std::min(dx, period - dx);
        s += dx * dx;
      }
      if (s < b1) {
        b2 = b1;
        b1 = s;
      } else if (s < b2) {
        b2 = s;
      }
    }
    if (!(b1 > 0.0)) throw NumericalError("euclidean_ratios: duplicate points");
    mu[i] = std::sqrt(b2 / b1);
  }
  return mu;
}

struct BasisScan {
  std::map<Basis, IdEstimate> estimates;
  Basis minimal = Basis::Z;
  std::vector<Basis> ties;  ///< bases within combined ci of the minimum, minimal first
  bool tie() const { return ties.size() > 1; }
};

/// argmin over bases; bases whose estimate differs from the minimum by less
/// than sqrt(ci_min^2 + ci_b^2) are recorded as tied.
inline BasisScan select_minimal_basis(const std::map<Basis, IdEstimate>& scans) {
  if (scans.size() < 2) throw InputError("select_minimal_basis: need estimates for at least two bases");
  BasisScan out;
  out.estimates = scans;
  auto best = scans.begin();
  for (auto it = scans.begin(); it != scans.end(); ++it)
    if (it->second.value < best->second.value) best = it;
  out.minimal = best->first;
  out.ties.push_back(best->first);
  for (const auto& [b, e] : scans) {
    if (b == best->first) continue;
    const double tol = std::hypot(e.ci, best->second.ci);
    if (std::abs(e.value - best->second.value) < tol) out.ties.push_back(b);
  }
  return out;
}

}  // namespace snapnet
