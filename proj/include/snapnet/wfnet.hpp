#pragma once

// Wave-function networks: geometric graphs on snapshots with a Hamming
// cutoff, their degree statistics, connected components, the weighted loop
// variant on unique configurations, and the network-type decision.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "snapnet/error.hpp"
#include "snapnet/metric.hpp"
#include "snapnet/parallel.hpp"
#include "snapnet/sampler.hpp"

namespace snapnet {

/// R = mean over rows of the raw Hamming distance to the n-th neighbour.
inline double cutoff_radius(const SnapshotDataset& ds, int n = 3, int jobs = 1) {
  if (n < 1) throw InputError("cutoff_radius: neighbour rank must be >= 1");
  if (ds.rows() <= static_cast<std::size_t>(n))
    throw InputError("cutoff_radius: need more than " + std::to_string(n) + " rows");
  const NeighborTable nt = knn(ds, n, jobs);
  double s = 0.0;
  for (std::size_t r = 0; r < ds.rows(); ++r) s += nt.dist(r, n - 1);
  return s / static_cast<double>(ds.rows());
}

/// Undirected simple graph in compressed adjacency form.
class Graph {
 public:
  Graph() : offsets_(1, 0) {}

  /// From per-node neighbour lists (each list sorted, symmetric overall).
  static Graph from_lists(const std::vector<std::vector<std::uint32_t>>& lists) {
    Graph g;
    g.offsets_.assign(lists.size() + 1, 0);
    for (std::size_t v = 0; v < lists.size(); ++v) g.offsets_[v + 1] = g.offsets_[v] + lists[v].size();
    g.adj_.reserve(g.offsets_.back());
    for (const auto& l : lists) g.adj_.insert(g.adj_.end(), l.begin(), l.end());
    return g;
  }

  /// From an undirected edge list (u != v; duplicates are merged).
  static Graph from_edges(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    std::vector<std::vector<std::uint32_t>> lists(n);
    for (auto [u, v] : edges) {
      if (u == v) throw InputError("graph: self-edges are not allowed");
      if (u >= n || v >= n) throw InputError("graph: edge endpoint out of range");
      lists[u].push_back(v);
      lists[v].push_back(u);
    }
    for (auto& l : lists) {
      std::sort(l.begin(), l.end());
      l.erase(std::unique(l.begin(), l.end()), l.end());
    }
    return from_lists(lists);
  }

  std::size_t nodes() const { return offsets_.size() - 1; }
  std::size_t edges() const { return adj_.size() / 2; }
  std::size_t degree(std::size_t v) const { return offsets_[v + 1] - offsets_[v]; }
  const std::uint32_t* neighbors_begin(std::size_t v) const { return adj_.data() + offsets_[v]; }
  const std::uint32_t* neighbors_end(std::size_t v) const { return adj_.data() + offsets_[v + 1]; }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> d(nodes());
    for (std::size_t v = 0; v < nodes(); ++v) d[v] = degree(v);
    return d;
  }

  /// Edge list with u < v, sorted.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edge_list() const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> e;
    e.reserve(edges());
    for (std::size_t v = 0; v < nodes(); ++v)
      for (auto p = neighbors_begin(v); p != neighbors_end(v); ++p)
        if (v < *p) e.emplace_back(static_cast<std::uint32_t>(v), *p);
    return e;
  }

  bool operator==(const Graph&) const = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> adj_;
};

struct WaveFunctionNetwork {
  Graph graph;
  double cutoff = 0.0;
  int neighbor_rank = 0;  ///< n of the cutoff rule, 0 when R was given directly
};

/// Neighbour lists d(x_r, x_s) <= R among the rows listed in `subset`
/// (all rows when empty). Node ids are positions in `subset`.
inline Graph geometric_graph(const SnapshotDataset& ds, double cutoff, const std::vector<std::uint32_t>& subset = {},
                             int jobs = 1) {
  if (!(cutoff >= 0.0)) throw InputError("build_network: cutoff must be >= 0");
  const bool all = subset.empty();
  const std::size_t n = all ? ds.rows() : subset.size();
  const std::size_t words = ds.words_per_row();
  const int thr = static_cast<int>(std::floor(cutoff));
  std::vector<std::vector<std::uint32_t>> lists(n);
  parallel_chunks(n, jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a) {
      const std::uint64_t* ra = ds.row_words(all ? a : subset[a]);
      auto& l = lists[a];
      for (std::size_t b = 0; b < n; ++b) {
        if (b == a) continue;
        if (hamming_words(ra, ds.row_words(all ? b : subset[b]), words) <= thr) l.push_back(static_cast<std::uint32_t>(b));
      }
    }
  });
  return Graph::from_lists(lists);
}

inline WaveFunctionNetwork build_network(const SnapshotDataset& ds, double cutoff, int jobs = 1) {
  return {geometric_graph(ds, cutoff, {}, jobs), cutoff, 0};
}

/// Network with the cutoff set by the n-th neighbour rule.
inline WaveFunctionNetwork build_network_auto(const SnapshotDataset& ds, int n = 3, int jobs = 1) {
  const double r = cutoff_radius(ds, n, jobs);
  auto net = build_network(ds, r, jobs);
  net.neighbor_rank = n;
  return net;
}

// ---------------------------------------------------------------- degrees

enum class Binning { Linear, Log };

inline std::string to_string(Binning b) { return b == Binning::Linear ? "linear" : "log"; }
inline Binning parse_binning(const std::string& s) {
  if (s == "linear") return Binning::Linear;
  if (s == "log") return Binning::Log;
  throw InputError("unknown binning '" + s + "' (expected linear or log)");
}

struct DegreeBin {
  std::size_t lo = 0;  ///< first degree in the bin
  std::size_t hi = 0;  ///< one past the last degree
  std::size_t count = 0;
  double frequency = 0.0;  ///< count / nodes
  double density = 0.0;    ///< frequency / (hi - lo)
};

struct DegreeDistribution {
  Binning binning = Binning::Linear;
  std::map<std::size_t, std::size_t> histogram;  ///< degree -> node count
  std::vector<DegreeBin> bins;
  std::size_t nodes = 0;
};

/// Linear: one bin per degree 0..k_max. Log: {0}, [1,2), [2,4), [4,8), ...
inline DegreeDistribution degree_distribution(const std::vector<std::size_t>& degrees, Binning binning) {
  if (degrees.empty()) throw InputError("degree_distribution: empty network");
  DegreeDistribution dd;
  dd.binning = binning;
  dd.nodes = degrees.size();
  for (auto k : degrees) ++dd.histogram[k];
  const std::size_t kmax = dd.histogram.rbegin()->first;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  if (binning == Binning::Linear) {
    for (std::size_t k = 0; k <= kmax; ++k) edges.emplace_back(k, k + 1);
  } else {
    edges.emplace_back(0, 1);
    for (std::size_t lo = 1; lo <= kmax; lo *= 2) edges.emplace_back(lo, lo * 2);
  }
  const double n = static_cast<double>(dd.nodes);
  for (auto [lo, hi] : edges) {
    DegreeBin b{lo, hi, 0, 0.0, 0.0};
    for (auto it = dd.histogram.lower_bound(lo); it != dd.histogram.end() && it->first < hi; ++it) b.count += it->second;
    b.frequency = static_cast<double>(b.count) / n;
    b.density = b.frequency / static_cast<double>(hi - lo);
    dd.bins.push_back(b);
  }
  return dd;
}

inline DegreeDistribution degree_distribution(const WaveFunctionNetwork& net, Binning binning) {
  return degree_distribution(net.graph.degrees(), binning);
}

// ------------------------------------------------------------- components

struct ComponentSummary {
  std::vector<std::size_t> sizes;  ///< descending
  std::vector<std::uint32_t> label;  ///< per node, components numbered by size order
  std::size_t macroscopic = 0;     ///< components holding >= threshold of the nodes
  double threshold = 0.1;
  std::size_t count() const { return sizes.size(); }
};

inline ComponentSummary connected_components(const Graph& g, double macroscopic_fraction = 0.1) {
  const std::size_t n = g.nodes();
  std::vector<std::uint32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t v = 0; v < n; ++v)
    for (auto p = g.neighbors_begin(v); p != g.neighbors_end(v); ++p) {
      const auto a = find(static_cast<std::uint32_t>(v)), b = find(*p);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  std::map<std::uint32_t, std::size_t> size_of;
  for (std::size_t v = 0; v < n; ++v) ++size_of[find(static_cast<std::uint32_t>(v))];
  // order: larger first, then by smallest member
  std::vector<std::pair<std::size_t, std::uint32_t>> order;
  for (auto [root, s] : size_of) order.emplace_back(s, root);
  std::stable_sort(order.begin(), order.end(), [](auto a, auto b) { return a.first > b.first; });
  std::map<std::uint32_t, std::uint32_t> rank;
  ComponentSummary cs;
  cs.threshold = macroscopic_fraction;
  for (std::size_t i = 0; i < order.size(); ++i) {
    rank[order[i].second] = static_cast<std::uint32_t>(i);
    cs.sizes.push_back(order[i].first);
    if (static_cast<double>(order[i].first) >= macroscopic_fraction * static_cast<double>(n)) ++cs.macroscopic;
  }
  cs.label.resize(n);
  for (std::size_t v = 0; v < n; ++v) cs.label[v] = rank[find(static_cast<std::uint32_t>(v))];
  return cs;
}

inline ComponentSummary cluster_count(const WaveFunctionNetwork& net, double macroscopic_fraction = 0.1) {
  return connected_components(net.graph, macroscopic_fraction);
}

// ------------------------------------------------------------ loop network

/// One node per distinct configuration. Every pair of configurations within
/// the cutoff is joined by two directed links, each weighted by the
/// multiplicity of its target; every node has a self-loop weighted by its
/// own multiplicity.
struct LoopNetwork {
  std::vector<std::uint32_t> representative;  ///< first dataset row of each node
  std::vector<std::size_t> multiplicity;      ///< self-loop weight
  Graph projection;                           ///< undirected links between distinct nodes
  double cutoff = 0.0;

  std::size_t nodes() const { return representative.size(); }

  /// Weight of the directed link u -> v (0 when absent).
  std::size_t weight(std::size_t u, std::size_t v) const {
    if (u == v) return multiplicity[u];
    const auto* b = projection.neighbors_begin(u);
    const auto* e = projection.neighbors_end(u);
    return std::binary_search(b, e, static_cast<std::uint32_t>(v)) ? multiplicity[v] : 0;
  }

  /// Weighted in-degree including the self-loop.
  std::size_t loop_degree(std::size_t v) const { return multiplicity[v] * (1 + projection.degree(v)); }

  std::vector<std::size_t> loop_degrees() const {
    std::vector<std::size_t> d(nodes());
    for (std::size_t v = 0; v < nodes(); ++v) d[v] = loop_degree(v);
    return d;
  }
};

/// `cutoff` should come from the full dataset (repetitions included).
inline LoopNetwork build_loop_network(const SnapshotDataset& ds, double cutoff, int jobs = 1) {
  const auto first = first_occurrence(ds);
  LoopNetwork ln;
  ln.cutoff = cutoff;
  std::vector<std::size_t> node_of(ds.rows());
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    if (first[r] == r) {
      node_of[r] = ln.representative.size();
      ln.representative.push_back(static_cast<std::uint32_t>(r));
      ln.multiplicity.push_back(0);
    }
    ++ln.multiplicity[node_of[first[r]]];
  }
  ln.projection = geometric_graph(ds, cutoff, ln.representative, jobs);
  return ln;
}

// --------------------------------------------------------- tail analysis

struct PowerLawFit {
  double gamma = 0.0;
  double sigma = 0.0;  ///< asymptotic standard error
  std::size_t k_min = 0;
  std::size_t k_max = 0;
  std::size_t n_tail = 0;
  double ks = 1.0;  ///< KS distance on [k_min, k_max]
};

namespace detail {

/// Moments of log k under p(k) ~ k^-gamma on [a, b].
inline void power_law_moments(double gamma, std::size_t a, std::size_t b, double& mean_log, double& var_log) {
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t k = a; k <= b; ++k) {
    const double lk = std::log(static_cast<double>(k));
    const double w = std::exp(-gamma * lk);
    z += w;
    m1 += w * lk;
    m2 += w * lk * lk;
  }
  mean_log = m1 / z;
  var_log = std::max(m2 / z - mean_log * mean_log, 0.0);
}

}  // namespace detail

/// Discrete power-law MLE restricted to [k_min, k_max] (both >= 1).
inline PowerLawFit fit_power_law(const std::map<std::size_t, std::size_t>& hist, std::size_t k_min, std::size_t k_max) {
  if (k_min < 1 || k_max <= k_min) throw InputError("fit_power_law: need 1 <= k_min < k_max");
  PowerLawFit f;
  f.k_min = k_min;
  f.k_max = k_max;
  double slog = 0.0;
  for (auto it = hist.lower_bound(k_min); it != hist.end() && it->first <= k_max; ++it) {
    f.n_tail += it->second;
    slog += static_cast<double>(it->second) * std::log(static_cast<double>(it->first));
  }
  if (f.n_tail == 0) throw InputError("fit_power_law: no nodes in range");
  const double target = slog / static_cast<double>(f.n_tail);
  // the model mean of log k decreases monotonically in gamma
  double lo = -5.0, hi = 15.0, m = 0.0, v = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    detail::power_law_moments(mid, k_min, k_max, m, v);
    (m > target ? lo : hi) = mid;
  }
  f.gamma = 0.5 * (lo + hi);
  detail::power_law_moments(f.gamma, k_min, k_max, m, v);
  f.sigma = v > 0.0 ? 1.0 / std::sqrt(static_cast<double>(f.n_tail) * v) : INFINITY;
  // KS distance between empirical and model CDF
  double z = 0.0;
  for (std::size_t k = k_min; k <= k_max; ++k) z += std::pow(static_cast<double>(k), -f.gamma);
  double cm = 0.0, ce = 0.0, ks = 0.0;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    cm += std::pow(static_cast<double>(k), -f.gamma) / z;
    auto it = hist.find(k);
    if (it != hist.end()) ce += static_cast<double>(it->second) / static_cast<double>(f.n_tail);
    ks = std::max(ks, std::abs(cm - ce));
  }
  f.ks = ks;
  return f;
}

/// Chooses k_min by minimizing the KS distance over candidates that leave at
/// least `min_tail` nodes in [k_min, k_max].
inline std::optional<PowerLawFit> fit_power_law_auto(const std::map<std::size_t, std::size_t>& hist, std::size_t k_max,
                                                     std::size_t min_tail = 50) {
  std::optional<PowerLawFit> best;
  for (auto it = hist.lower_bound(1); it != hist.end() && it->first < k_max; ++it) {
    std::size_t tail = 0;
    for (auto jt = it; jt != hist.end() && jt->first <= k_max; ++jt) tail += jt->second;
    if (tail < min_tail) break;
    const auto f = fit_power_law(hist, it->first, k_max);
    if (!best || f.ks < best->ks) best = f;
  }
  return best;
}

/// Zero-truncated-range Poisson: MLE of lambda for data restricted to [a, b].
inline double fit_truncated_poisson(const std::map<std::size_t, std::size_t>& hist, std::size_t a, std::size_t b) {
  double n = 0.0, s = 0.0;
  for (auto it = hist.lower_bound(a); it != hist.end() && it->first <= b; ++it) {
    n += static_cast<double>(it->second);
    s += static_cast<double>(it->second * it->first);
  }
  const double target = s / n;
  auto model_mean = [&](double lam) {
    double z = 0.0, m = 0.0;
    const double ll = std::log(lam);
    double maxlog = -INFINITY;
    for (std::size_t k = a; k <= b; ++k)
      maxlog = std::max(maxlog, static_cast<double>(k) * ll - std::lgamma(static_cast<double>(k) + 1.0));
    for (std::size_t k = a; k <= b; ++k) {
      const double w = std::exp(static_cast<double>(k) * ll - std::lgamma(static_cast<double>(k) + 1.0) - maxlog);
      z += w;
      m += w * static_cast<double>(k);
    }
    return m / z;
  };
  double lo = 1e-6, hi = std::max(10.0, 4.0 * static_cast<double>(b));
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    (model_mean(mid) < target ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi);
}

struct TailComparison {
  PowerLawFit power_law;
  double poisson_lambda = 0.0;
  double log_likelihood_ratio = 0.0;  ///< sum over tail nodes, power law minus Poisson
  double vuong_z = 0.0;               ///< normalized ratio, > 0 favours the power law
  double mean_ratio() const {
    return power_law.n_tail ? log_likelihood_ratio / static_cast<double>(power_law.n_tail) : 0.0;
  }
};

/// Per-node log-likelihood ratio of a power law versus a Poisson law, both
/// truncated to the power-law fitting range.
inline TailComparison compare_tails(const std::map<std::size_t, std::size_t>& hist, const PowerLawFit& pl) {
  TailComparison tc;
  tc.power_law = pl;
  const std::size_t a = pl.k_min, b = pl.k_max;
  const double lam = fit_truncated_poisson(hist, a, b);
  tc.poisson_lambda = lam;
  double zp = 0.0;
  for (std::size_t k = a; k <= b; ++k) zp += std::pow(static_cast<double>(k), -pl.gamma);
  std::vector<double> lp;
  double maxlog = -INFINITY;
  for (std::size_t k = a; k <= b; ++k)
    maxlog = std::max(maxlog, static_cast<double>(k) * std::log(lam) - std::lgamma(static_cast<double>(k) + 1.0));
  double zq = 0.0;
  for (std::size_t k = a; k <= b; ++k)
    zq += std::exp(static_cast<double>(k) * std::log(lam) - std::lgamma(static_cast<double>(k) + 1.0) - maxlog);
  const double log_zq = std::log(zq) + maxlog;
  double s = 0.0, s2 = 0.0, n = 0.0;
  for (auto it = hist.lower_bound(a); it != hist.end() && it->first <= b; ++it) {
    const double k = static_cast<double>(it->first);
    const double l = (-pl.gamma * std::log(k) - std::log(zp)) - (k * std::log(lam) - std::lgamma(k + 1.0) - log_zq);
    const double c = static_cast<double>(it->second);
    s += c * l;
    s2 += c * l * l;
    n += c;
  }
  tc.log_likelihood_ratio = s;
  const double mean = s / n;
  const double var = std::max(s2 / n - mean * mean, 1e-300);
  tc.vuong_z = mean * std::sqrt(n / var);
  return tc;
}

// ----------------------------------------------------------- classification

enum class NetworkType { ErdosRenyi, ScaleFree, Probability, Indeterminate };

inline std::string to_string(NetworkType t) {
  switch (t) {
    case NetworkType::ErdosRenyi: return "ErdosRenyi";
    case NetworkType::ScaleFree: return "ScaleFree";
    case NetworkType::Probability: return "Probability";
    case NetworkType::Indeterminate: return "Indeterminate";
  }
  return "?";
}

struct NetworkClassifierOptions {
  double vuong_margin = 5.0;     ///< significance: normalized log-likelihood ratio
  double min_mean_ratio = 2.0;   ///< effect size: log-likelihood ratio per tail node, in nats
  double min_span = 4.0;         ///< k_max / k_min for a credible power law
  double max_gamma = 3.0;        ///< scale-free tails need a diverging second moment
  std::size_t min_tail = 50;     ///< nodes in the fitted range
  double max_dispersion = 20.0;  ///< variance / mean still accepted as short-tailed
  double macroscopic_fraction = 0.1;
};

struct NetworkLabel {
  NetworkType type = NetworkType::Indeterminate;
  double cutoff = 0.0;
  double mean_degree = 0.0;
  double dispersion = 0.0;  ///< variance / mean of the degrees
  std::size_t max_degree = 0;
  std::size_t duplicate_rows = 0;
  std::size_t components = 0;
  std::size_t macroscopic_components = 0;
  std::optional<TailComparison> tail;
  std::optional<bool> fss_confirmed;  ///< set when a scaling test was run
  std::string reason;
};

/// Decision: R < 1 gives a probability network. Otherwise the tail of the
/// degree distribution decides: a power law with gamma < max_gamma that
/// beats a Poisson law both significantly (Vuong z) and by a large margin
/// per node, over a wide enough range (and, when available, passes the
/// scaling test) is scale-free; a short tail where the power law is not
/// clearly preferred is Erdos-Renyi; anything else is indeterminate.
inline NetworkLabel classify_network(const WaveFunctionNetwork& net, std::size_t duplicate_rows,
                                     const NetworkClassifierOptions& opt = {},
                                     std::optional<bool> fss_confirmed = std::nullopt) {
  NetworkLabel lab;
  lab.cutoff = net.cutoff;
  lab.duplicate_rows = duplicate_rows;
  lab.fss_confirmed = fss_confirmed;
  const auto degrees = net.graph.degrees();
  if (degrees.empty()) throw InputError("classify_network: empty network");
  const auto comps = connected_components(net.graph, opt.macroscopic_fraction);
  lab.components = comps.count();
  lab.macroscopic_components = comps.macroscopic;
  double s = 0.0, s2 = 0.0;
  for (auto k : degrees) {
    s += static_cast<double>(k);
    s2 += static_cast<double>(k) * static_cast<double>(k);
    lab.max_degree = std::max(lab.max_degree, k);
  }
  const double n = static_cast<double>(degrees.size());
  lab.mean_degree = s / n;
  const double var = s2 / n - lab.mean_degree * lab.mean_degree;
  lab.dispersion = lab.mean_degree > 0.0 ? var / lab.mean_degree : 0.0;
  if (net.cutoff < 1.0) {
    lab.type = NetworkType::Probability;
    lab.reason = "cutoff below 1: links only join repeated configurations";
    return lab;
  }
  std::map<std::size_t, std::size_t> hist;
  for (auto k : degrees) ++hist[k];
  std::optional<PowerLawFit> pl;
  if (lab.max_degree >= 2) pl = fit_power_law_auto(hist, lab.max_degree, opt.min_tail);
  if (pl) lab.tail = compare_tails(hist, *pl);
  if (lab.tail && lab.tail->vuong_z > opt.vuong_margin && lab.tail->mean_ratio() > opt.min_mean_ratio) {
    const double span = static_cast<double>(pl->k_max) / static_cast<double>(pl->k_min);
    if (span >= opt.min_span && pl->gamma < opt.max_gamma) {
      if (fss_confirmed.has_value() && !*fss_confirmed) {
        lab.type = NetworkType::Indeterminate;
        lab.reason = "power-law tail preferred but the scaling test did not confirm it";
        return lab;
      }
      lab.type = NetworkType::ScaleFree;
      lab.reason = "power-law tail preferred over Poisson";
      return lab;
    }
    lab.type = NetworkType::Indeterminate;
    lab.reason = span < opt.min_span ? "power law preferred over too narrow a degree range"
                                     : "power law preferred but too steep for a scale-free tail";
    return lab;
  }
  if (lab.dispersion <= opt.max_dispersion) {
    lab.type = NetworkType::ErdosRenyi;
    lab.reason = "short-tailed degree distribution";
    return lab;
  }
  lab.type = NetworkType::Indeterminate;
  lab.reason = "no power law preferred but the degree variance is too large for a random network";
  return lab;
}

}  // namespace snapnet
