#pragma once

// Model -> ground states -> snapshots -> classification, with datasets
// produced on demand for whatever the decision tree asks for.
//
// Ordered phases: a finite chain has a quasi-degenerate ground space and
// DMRG may return either a symmetric cat state or one symmetry-broken
// sector. The Z2 generator P tells them apart (|<P>| ~ 1 for a cat, ~ 0 for
// a collapsed state). When collapsed, further DMRG seeds are tried until a
// second state of the same energy with small overlap turns up; snapshots
// from the two runs are interleaved.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "snapnet/classifier.hpp"
#include "snapnet/dmrg.hpp"
#include "snapnet/models.hpp"
#include "snapnet/sampler.hpp"

namespace snapnet {

struct TwoRunOptions {
  bool enabled = true;
  int max_attempts = 6;             ///< DMRG runs in total, first one included
  double collapse_threshold = 0.5;  ///< |<P>| below this counts as collapsed
  double max_overlap = 0.5;         ///< |<psi1|psi2>|^2 below this counts as the other sector
  double energy_rtol = 1e-6;
};

/// Global spin flip that maps the ordered configurations onto each other:
/// prod X for Ising, XXZ and SSH, prod Z for the cluster model (whose order
/// lives in y).
inline char symmetry_generator(ModelFamily f) { return f == ModelFamily::ClusterIsing ? 'Z' : 'X'; }

/// <psi| prod_i op |psi> for op = X or Z.
inline double parity_expectation(const RealMps& psi, char op) {
  RealMps flipped = psi;
  for (auto& s : flipped.sites) {
    if (op == 'X')
      std::swap(s[0], s[1]);
    else
      s[1] = -s[1];
  }
  return inner(psi, flipped) / inner(psi, psi);
}

struct GroundStateRecord {
  ModelSpec model;
  std::vector<DmrgResult> runs;  ///< one, or two for a merged collapsed pair
  std::vector<std::uint64_t> seeds;
  double parity = 0.0;           ///< <P> of the first run
  bool collapsed = false;
  std::string note;
};

inline GroundStateRecord solve_ground_state(const ModelSpec& spec, const DmrgConfig& dmrg, const TwoRunOptions& tr) {
  validate(spec);
  const Mpo mpo = build_mpo(spec);
  GroundStateRecord rec;
  rec.model = spec;
  rec.runs.push_back(dmrg_ground_state(mpo, dmrg));
  rec.seeds.push_back(dmrg.seed);
  const char gen = symmetry_generator(spec.family);
  rec.parity = parity_expectation(rec.runs[0].state, gen);
  rec.collapsed = std::abs(rec.parity) < tr.collapse_threshold;
  std::ostringstream os;
  os.precision(4);
  os << "L=" << spec.length << ": <P" << gen << "> = " << rec.parity;
  if (!rec.collapsed) {
    os << ", symmetric ground state";
  } else if (!tr.enabled) {
    os << ", collapsed to one sector (two-run protocol disabled)";
  } else {
    const double e0 = rec.runs[0].energy;
    bool found = false;
    for (int k = 1; k < tr.max_attempts && !found; ++k) {
      DmrgConfig c = dmrg;
      c.seed = dmrg.seed + static_cast<std::uint64_t>(k);
      auto r = dmrg_ground_state(mpo, c);
      const double ov = detail::abs2(inner(rec.runs[0].state, r.state));
      if (std::abs(r.energy - e0) <= tr.energy_rtol * std::max(1.0, std::abs(e0)) && ov < tr.max_overlap) {
        os << ", collapsed; merged with DMRG seed " << c.seed << " (overlap " << ov << ")";
        rec.runs.push_back(std::move(r));
        rec.seeds.push_back(c.seed);
        found = true;
      }
    }
    if (!found) os << ", collapsed; no second sector within " << tr.max_attempts << " DMRG seeds";
  }
  rec.note = os.str();
  return rec;
}

/// Samples every run of the record; with two runs, even rows come from the
/// first and odd rows from the second.
inline SnapshotDataset sample_record(const GroundStateRecord& rec, Basis b, std::size_t n, std::uint64_t seed,
                                     int jobs = 1) {
  if (rec.runs.empty()) throw InputError("sample_record: no ground state");
  SnapshotDataset out;
  if (rec.runs.size() == 1) {
    out = sample_in_basis(rec.runs[0].state, b, n, seed, jobs);
  } else {
    const auto a = sample_in_basis(rec.runs[0].state, b, (n + 1) / 2, derive_seed(seed, 1), jobs);
    const auto c = sample_in_basis(rec.runs[1].state, b, n / 2, derive_seed(seed, 2), jobs);
    out = SnapshotDataset(n, a.length());
    for (std::size_t r = 0; r < n; ++r) {
      const auto& src = (r % 2 == 0) ? a : c;
      std::copy_n(src.row_words(r / 2), src.words_per_row(), out.row_words(r));
    }
  }
  out.basis = b;
  out.model = rec.model;
  out.seed = seed;
  return out;
}

struct PipelineConfig {
  ModelSpec model;  ///< length is the level-0 chain length
  DmrgConfig dmrg;
  TwoRunOptions two_run;
  ClassifierConfig classifier;
};

/// Ground states keyed by chain length, solved at most once.
class GroundStateCache {
 public:
  GroundStateCache(ModelSpec base, DmrgConfig dmrg, TwoRunOptions tr)
      : base_(std::move(base)), dmrg_(dmrg), tr_(tr) {}

  const GroundStateRecord& at(int length) {
    auto it = cache_.find(length);
    if (it != cache_.end()) return it->second;
    ModelSpec s = base_;
    s.length = length;
    return cache_.emplace(length, solve_ground_state(s, dmrg_, tr_)).first->second;
  }

  const std::map<int, GroundStateRecord>& records() const { return cache_; }

 private:
  ModelSpec base_;
  DmrgConfig dmrg_;
  TwoRunOptions tr_;
  std::map<int, GroundStateRecord> cache_;
};

/// Level 0: enough rows of the level-0 chain for I_d, the network and the
/// scaling pool. Level l: n_id rows of the chain
/// 2^l times longer (decimated later by the classifier). Datasets are
/// memoized. DMRG failures surface as NumericalError, which the decimation
/// trace records as a failed point.
inline DatasetProvider model_provider(std::shared_ptr<GroundStateCache> cache, const PipelineConfig& cfg) {
  auto memo = std::make_shared<std::map<DatasetKey, SnapshotDataset>>();
  const int base = cfg.model.length;
  const auto& cc = cfg.classifier;
  const std::size_t n0 = std::max({cc.n_net, cc.n_id, cc.run_fss ? cc.fss_pool : 0});
  return [cache, memo, base, n0, n_id = cc.n_id, seed = cc.seed, jobs = cc.jobs](const DatasetKey& k)
             -> std::optional<SnapshotDataset> {
    auto it = memo->find(k);
    if (it != memo->end()) return it->second;
    const auto& rec = cache->at(base << k.level);
    const std::uint64_t s =
        derive_seed(derive_seed(seed, 0x73616d70ull + static_cast<std::uint64_t>(k.basis)), static_cast<std::uint64_t>(k.level));
    auto ds = sample_record(rec, k.basis, k.level == 0 ? n0 : n_id, s, jobs);
    return memo->emplace(k, std::move(ds)).first->second;
  };
}

struct PipelineResult {
  ClassificationReport report;
  std::vector<GroundStateRecord> ground_states;  ///< by chain length
};

inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  validate(cfg.model);
  cfg.dmrg.validate();
  cfg.classifier.validate();
  auto cache = std::make_shared<GroundStateCache>(cfg.model, cfg.dmrg, cfg.two_run);
  PipelineResult res;
  res.report = classify_state(model_provider(cache, cfg), cfg.classifier);
  for (const auto& [len, rec] : cache->records()) {
    res.ground_states.push_back(rec);
    res.report.notes.push_back("ground state " + rec.note);
  }
  return res;
}

}  // namespace snapnet
