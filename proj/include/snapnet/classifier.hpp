#pragma once

// Phase classification from snapshot datasets.
//
//   1. I_d in x, y, z selects the minimal-complexity basis.
//   2. The network built in that basis is typed.
//   3. Probability network: one macroscopic cluster -> Paramagnet, several -> SSB.
//      Scale-free -> Critical.
//      Erdos-Renyi -> I_d under decimation: an abrupt drop at level l* -> SSB,
//      no significant decrease -> SPT.
//   Anything inconclusive ends in Indeterminate, never in a guessed phase.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "snapnet/error.hpp"
#include "snapnet/fss.hpp"
#include "snapnet/intrinsic_dim.hpp"
#include "snapnet/metric.hpp"
#include "snapnet/sampler.hpp"
#include "snapnet/wfnet.hpp"

namespace snapnet {

enum class PhaseLabel { Paramagnet, SSB, SPT, Critical, Indeterminate };

inline std::string to_string(PhaseLabel p) {
  switch (p) {
    case PhaseLabel::Paramagnet: return "Paramagnet";
    case PhaseLabel::SSB: return "SSB";
    case PhaseLabel::SPT: return "SPT";
    case PhaseLabel::Critical: return "Critical";
    case PhaseLabel::Indeterminate: return "Indeterminate";
  }
  return "?";
}

/// A dataset is requested as (basis, decimation level). Level-l datasets
/// come from chains 2^l times longer than level 0 and are compared at the
/// level-0 embedding dimension.
struct DatasetKey {
  Basis basis = Basis::Z;
  int level = 0;
  auto operator<=>(const DatasetKey&) const = default;
};

inline std::string describe(const DatasetKey& k, int base_length) {
  std::ostringstream os;
  os << to_string(k.basis) << "-basis snapshots at level " << k.level;
  if (base_length > 0) os << " (chain length " << (base_length << k.level) << ")";
  return os.str();
}

/// Raised when a branch of the decision needs datasets that were not given.
class MissingInputs : public InputError {
 public:
  MissingInputs(std::vector<DatasetKey> keys, int base_length)
      : InputError(message(keys, base_length)), keys_(std::move(keys)) {}
  const std::vector<DatasetKey>& keys() const { return keys_; }

 private:
  static std::string message(const std::vector<DatasetKey>& keys, int base_length) {
    std::string m = "missing inputs; generate:";
    for (const auto& k : keys) m += "\n  " + describe(k, base_length);
    return m;
  }
  std::vector<DatasetKey> keys_;
};

/// Returns the dataset for a key, or nullopt when it cannot be provided.
/// May throw NumericalError when producing it fails.
using DatasetProvider = std::function<std::optional<SnapshotDataset>(const DatasetKey&)>;

inline DatasetProvider provider_from_map(std::map<DatasetKey, SnapshotDataset> data) {
  auto shared = std::make_shared<std::map<DatasetKey, SnapshotDataset>>(std::move(data));
  return [shared](const DatasetKey& k) -> std::optional<SnapshotDataset> {
    auto it = shared->find(k);
    if (it == shared->end()) return std::nullopt;
    return it->second;
  };
}

struct ClassifierConfig {
  std::size_t n_id = 1000;    ///< rows used for I_d
  std::size_t n_net = 10000;  ///< rows used for networks
  std::size_t fss_pool = 10000;  ///< level-0 rows available to the scaling test
  int neighbor_rank = 3;
  int max_level = 2;
  double drop_sigmas = 3.0;
  double drop_fraction = 0.25;
  double flat_sigmas = 2.0;
  bool run_fss = true;
  FssOptions fss = [] {
    FssOptions o;
    o.scales = log_spaced_scales(200, 2000, 8);
    o.batch = 50;
    return o;
  }();
  TwoNnOptions two_nn;
  NetworkClassifierOptions network;
  std::uint64_t seed = 1;
  int jobs = 1;

  void validate() const {
    if (n_id < 100) throw InputError("classifier: n_id must be at least 100");
    if (n_net <= static_cast<std::size_t>(neighbor_rank)) throw InputError("classifier: n_net too small");
    if (max_level < 1) throw InputError("classifier: max_level must be >= 1");
    if (!(drop_fraction >= 0.0 && drop_fraction < 1.0)) throw InputError("classifier: drop_fraction must lie in [0, 1)");
  }
};

struct TracePoint {
  int level = 0;
  int chain_length = 0;
  std::optional<IdEstimate> estimate;
  std::string failure;  ///< set when the dataset could not be produced
};

struct DecimationTrace {
  Basis basis = Basis::Z;
  int base_length = 0;
  std::vector<TracePoint> points;
};

enum class TraceVerdict { Drop, Flat, Inconclusive };

struct TraceDecision {
  TraceVerdict verdict = TraceVerdict::Inconclusive;
  std::optional<int> l_star;
  std::string evidence;
};

/// Drop: I(l+1) < I(l) - max(drop_sigmas * cc, drop_fraction * I(l)) at the
/// first such l, with cc the combined ci; l* = l + 1. Flat: no step
/// decreases by more than flat_sigmas * cc (increases are allowed, since
/// coarser supports can lift constraints of the fine-grained data).
inline TraceDecision decide_trace(const DecimationTrace& t, double drop_sigmas, double drop_fraction,
                                  double flat_sigmas) {
  TraceDecision d;
  std::ostringstream ev;
  ev.precision(4);
  bool significant_decrease = false;
  bool complete = true;
  for (std::size_t i = 0; i + 1 < t.points.size(); ++i) {
    const auto& a = t.points[i];
    const auto& b = t.points[i + 1];
    if (!a.estimate || !b.estimate) {
      complete = false;
      break;
    }
    const double ia = a.estimate->value, ib = b.estimate->value;
    const double cc = std::hypot(a.estimate->ci, b.estimate->ci);
    const double drop_thr = std::max(drop_sigmas * cc, drop_fraction * ia);
    ev << "l=" << a.level << "->" << b.level << ": " << ia << " -> " << ib << " (combined ci " << cc << "); ";
    if (ib < ia - drop_thr) {
      d.verdict = TraceVerdict::Drop;
      d.l_star = b.level;
      d.evidence = ev.str() + "abrupt drop beyond " + std::to_string(drop_thr);
      return d;
    }
    if (ib < ia - flat_sigmas * cc) significant_decrease = true;
  }
  if (!complete) {
    d.evidence = ev.str() + "trace incomplete";
    return d;
  }
  d.verdict = significant_decrease ? TraceVerdict::Inconclusive : TraceVerdict::Flat;
  d.evidence = ev.str() + (significant_decrease ? "decrease without an abrupt drop" : "no significant decrease");
  return d;
}

struct BranchStep {
  std::string decision;
  std::string evidence;
};

struct ClassificationReport {
  BasisScan scan;
  std::map<Basis, NetworkLabel> networks;
  std::map<Basis, RepetitionStats> repetitions;
  std::vector<std::size_t> cluster_sizes;  ///< minimal basis, largest first (at most 10)
  std::optional<FssRun> fss;
  std::optional<DecimationTrace> trace;
  std::optional<TraceDecision> trace_decision;
  PhaseLabel label = PhaseLabel::Indeterminate;
  std::optional<int> l_star;
  std::optional<int> order_support;  ///< K = 1 for clustering SSB, else 2^{l*} bound
  std::vector<BranchStep> path;
  std::vector<std::string> notes;
  ClassifierConfig config;
};

namespace detail {

inline SnapshotDataset head(const SnapshotDataset& ds, std::size_t n) {
  return ds.rows() > n ? ds.slice(0, n) : ds;
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

}  // namespace detail

/// Level-l dataset decimated to the level-0 embedding dimension.
inline SnapshotDataset at_level(const SnapshotDataset& ds, int level, int base_length) {
  const int steps = level - ds.level;
  if (steps < 0) throw InputError("classifier: dataset is already decimated beyond the requested level");
  SnapshotDataset out = steps > 0 ? decimate(ds, steps) : ds;
  if (out.length() != base_length)
    throw ShapeError("classifier: level-" + std::to_string(level) + " dataset has embedding dimension " +
                     std::to_string(out.length()) + ", expected " + std::to_string(base_length));
  return out;
}

inline DecimationTrace decimation_trace(const DatasetProvider& provide, Basis basis, int base_length, int max_level,
                                        std::size_t n_id, std::uint64_t seed, const TwoNnOptions& opt) {
  DecimationTrace t;
  t.basis = basis;
  t.base_length = base_length;
  std::vector<DatasetKey> missing;
  for (int l = 0; l <= max_level; ++l) {
    TracePoint p;
    p.level = l;
    p.chain_length = base_length << l;
    try {
      auto ds = provide({basis, l});
      if (!ds) {
        missing.push_back({basis, l});
        continue;
      }
      const auto dec = at_level(detail::head(*ds, n_id), l, base_length);
      p.estimate = two_nn(dec, derive_seed(seed, 0x7472616365ull + static_cast<std::uint64_t>(l)), opt);
    } catch (const NumericalError& e) {
      p.failure = e.what();
    }
    t.points.push_back(std::move(p));
  }
  if (!missing.empty()) throw MissingInputs(missing, base_length);
  return t;
}

/// Runs the decision tree. Level-0 datasets for all three bases are needed;
/// higher levels are requested only when the decimation branch is reached.
inline ClassificationReport classify_state(const DatasetProvider& provide, const ClassifierConfig& cfg) {
  cfg.validate();
  ClassificationReport rep;
  rep.config = cfg;

  std::map<Basis, SnapshotDataset> level0;
  std::vector<DatasetKey> missing;
  for (Basis b : kAllBases) {
    auto ds = provide({b, 0});
    if (ds)
      level0.emplace(b, std::move(*ds));
    else
      missing.push_back({b, 0});
  }
  if (!missing.empty()) throw MissingInputs(missing, 0);
  const int base_length = level0.begin()->second.length();
  for (const auto& [b, ds] : level0)
    if (ds.length() != base_length) throw ShapeError("classifier: level-0 datasets differ in length");

  // (a) minimal-complexity basis
  std::map<Basis, IdEstimate> ids;
  for (const auto& [b, ds] : level0)
    ids.emplace(b, two_nn(detail::head(ds, cfg.n_id), derive_seed(cfg.seed, static_cast<std::uint64_t>(b)), cfg.two_nn));
  rep.scan = select_minimal_basis(ids);
  const Basis amin = rep.scan.minimal;
  {
    std::string ev;
    for (const auto& [b, e] : ids) ev += to_string(b) + ": " + detail::fmt(e.value) + " +- " + detail::fmt(e.ci) + "; ";
    rep.path.push_back({"minimal-complexity basis " + to_string(amin), ev});
    if (rep.scan.tie()) rep.notes.push_back("minimal basis tied within ci with another basis");
  }

  // (b) networks
  for (const auto& [b, ds] : level0) {
    const auto data = detail::head(ds, cfg.n_net);
    rep.repetitions.emplace(b, repetition_stats(data));
    const auto net = build_network_auto(data, cfg.neighbor_rank, cfg.jobs);
    std::optional<bool> confirmed;
    auto lab = classify_network(net, rep.repetitions.at(b).duplicate_rows, cfg.network);
    if (b == amin && lab.type == NetworkType::ScaleFree && cfg.run_fss) {
      const std::size_t need = cfg.fss.scales.empty() ? 0 : *std::max_element(cfg.fss.scales.begin(), cfg.fss.scales.end());
      const auto pool = detail::head(ds, std::max(cfg.fss_pool, cfg.n_net));
      if (pool.rows() >= need && need > 0) {
        FssOptions fo = cfg.fss;
        fo.neighbor_rank = cfg.neighbor_rank;
        fo.jobs = cfg.jobs;
        fo.seed = derive_seed(cfg.seed, 0x667373ull);
        rep.fss = fss_test(pool, fo);
        confirmed = rep.fss->verdict == FssVerdict::ScaleFreeConfirmed;
        lab = classify_network(net, rep.repetitions.at(b).duplicate_rows, cfg.network, confirmed);
      } else {
        rep.notes.push_back("scaling test skipped: " + std::to_string(pool.rows()) + " rows, largest scale " +
                            std::to_string(need));
      }
    }
    if (b == amin) {
      const auto cs = connected_components(net.graph, cfg.network.macroscopic_fraction);
      for (std::size_t i = 0; i < std::min<std::size_t>(10, cs.sizes.size()); ++i) rep.cluster_sizes.push_back(cs.sizes[i]);
    }
    rep.networks.emplace(b, std::move(lab));
  }
  const auto& lab = rep.networks.at(amin);
  rep.path.push_back({"network in " + to_string(amin) + " is " + to_string(lab.type),
                      lab.reason + "; R = " + detail::fmt(lab.cutoff) + ", mean degree " + detail::fmt(lab.mean_degree) +
                          ", dispersion " + detail::fmt(lab.dispersion) +
                          (lab.tail ? ", power-law z = " + detail::fmt(lab.tail->vuong_z) + ", gamma = " +
                                          detail::fmt(lab.tail->power_law.gamma)
                                    : std::string()) +
                          (rep.fss ? ", scaling test " + to_string(rep.fss->verdict) : std::string())});

  switch (lab.type) {
    case NetworkType::Probability: {
      const std::string ev = std::to_string(lab.macroscopic_components) + " components with at least " +
                             detail::fmt(100.0 * cfg.network.macroscopic_fraction) + "% of the nodes";
      if (lab.macroscopic_components >= 2) {
        rep.label = PhaseLabel::SSB;
        rep.order_support = 1;
        rep.path.push_back({"clustered probability network: SSB (K = 1)", ev});
      } else {
        rep.label = PhaseLabel::Paramagnet;
        rep.path.push_back({"single dominant cluster: Paramagnet", ev});
      }
      break;
    }
    case NetworkType::ScaleFree:
      rep.label = PhaseLabel::Critical;
      rep.path.push_back({"scale-free network: Critical", lab.reason});
      break;
    case NetworkType::ErdosRenyi: {
      rep.trace = decimation_trace(provide, amin, base_length, cfg.max_level, cfg.n_id, cfg.seed, cfg.two_nn);
      for (const auto& p : rep.trace->points)
        if (!p.failure.empty()) rep.notes.push_back("level " + std::to_string(p.level) + " failed: " + p.failure);
      rep.trace_decision = decide_trace(*rep.trace, cfg.drop_sigmas, cfg.drop_fraction, cfg.flat_sigmas);
      const auto& td = *rep.trace_decision;
      if (td.verdict == TraceVerdict::Drop) {
        rep.label = PhaseLabel::SSB;
        rep.l_star = td.l_star;
        rep.order_support = 1 << *td.l_star;
        rep.path.push_back({"I_d drops under decimation: SSB with l* = " + std::to_string(*td.l_star), td.evidence});
      } else if (td.verdict == TraceVerdict::Flat) {
        rep.label = PhaseLabel::SPT;
        rep.path.push_back({"I_d never decreases under decimation: SPT", td.evidence});
      } else {
        rep.label = PhaseLabel::Indeterminate;
        rep.path.push_back({"decimation trace inconclusive", td.evidence});
      }
      break;
    }
    case NetworkType::Indeterminate:
      rep.label = PhaseLabel::Indeterminate;
      rep.path.push_back({"network type undetermined", lab.reason});
      break;
  }
  return rep;
}

inline ClassificationReport classify_state(const std::map<DatasetKey, SnapshotDataset>& inputs,
                                           const ClassifierConfig& cfg) {
  return classify_state(provider_from_map(inputs), cfg);
}

}  // namespace snapnet
