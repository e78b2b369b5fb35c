#pragma once

// Run configuration. Precedence, lowest first: built-in defaults, preset,
// config file, `--set key.path=value` overrides, dedicated CLI flags.
// Unknown keys are errors, so typos never fall back to defaults silently.

#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "snapnet/io.hpp"

namespace snapnet {

struct SamplingPlan {
  std::vector<Basis> bases = {Basis::X, Basis::Y, Basis::Z};
  std::size_t n_samples = 10000;
  std::vector<int> levels = {0};  ///< chains of length L * 2^l, decimated l times
  std::uint64_t seed = 1;
};

struct RunConfig {
  std::string preset = "desk";
  ModelSpec model{ModelFamily::Ising, 40, {{"h", 1.0}}};
  DmrgConfig dmrg;
  TwoRunOptions two_run;
  SamplingPlan sampling;
  Binning binning = Binning::Linear;
  ClassifierConfig classifier;  ///< also carries the I_d, network and FSS settings
  std::string output_dir = "snapnet-out";
  int jobs = 1;
};

/// desk: L = 40, I_d on 1e3 rows, networks on 1e4, FSS pool 1e4 with 8 scales
/// in [2e2, 2e3] and b = 50. paper: L = 80, FSS pool 1e5, scales [2e3, 2e4],
/// b = 100.
inline void apply_preset(RunConfig& c, const std::string& name) {
  if (name == "desk") {
    c.model.length = 40;
    c.sampling.n_samples = 10000;
    c.classifier.n_id = 1000;
    c.classifier.n_net = 10000;
    c.classifier.fss_pool = 10000;
    c.classifier.fss.scales = log_spaced_scales(200, 2000, 8);
    c.classifier.fss.batch = 50;
  } else if (name == "paper") {
    c.model.length = 80;
    c.sampling.n_samples = 10000;
    c.classifier.n_id = 1000;
    c.classifier.n_net = 10000;
    c.classifier.fss_pool = 100000;
    c.classifier.fss.scales = log_spaced_scales(2000, 20000, 8);
    c.classifier.fss.batch = 100;
  } else {
    throw InputError("unknown preset '" + name + "' (expected desk or paper)");
  }
  c.preset = name;
}

namespace detail {

/// Reads an object, remembering which keys were consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw InputError(where() + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw InputError(where(key) + ": wrong type (" + std::string(j_.at(key).type_name()) + ")");
    }
  }

  std::optional<ObjectReader> child(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return ObjectReader(j_.at(key), where(key));
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) throw InputError(where(k) + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class T>
void positive(const std::string& where, T v) {
  if (!(v > T{})) throw InputError(where + ": must be positive");
}

}  // namespace detail

/// Overlays a config document onto `c` (whose preset is already applied).
inline void merge_config(RunConfig& c, const json& doc) {
  detail::ObjectReader top(doc, "");
  top.raw("preset");  // consumed by load_config
  if (auto m = top.child("model")) {
    if (const json* raw = m->raw("family")) {
      if (!raw->is_string()) throw InputError("model.family: expected a string");
      c.model.family = parse_family(raw->get<std::string>());
      c.model.params.clear();
    }
    m->get("L", c.model.length);
    if (auto p = m->child("params")) {
      for (const auto& name : required_params(c.model.family)) {
        if (!p->raw(name.c_str())) continue;
        double v = 0.0;
        p->get(name.c_str(), v);
        c.model.params[name] = v;
      }
      p->finish();
    }
    if (const json* b = m->raw("boundary"))
      if (*b != "open") throw InputError("model.boundary: only \"open\" is supported");
    m->finish();
  }
  if (auto d = top.child("dmrg")) {
    d->get("max_bond", c.dmrg.max_bond);
    d->get("svd_cutoff", c.dmrg.svd_cutoff);
    d->get("max_sweeps", c.dmrg.max_sweeps);
    d->get("energy_tol", c.dmrg.energy_tol);
    d->get("lanczos_iters", c.dmrg.lanczos_iters);
    d->get("lanczos_tol", c.dmrg.lanczos_tol);
    d->get("seed", c.dmrg.seed);
    d->get("noise", c.dmrg.noise);
    d->get("noise_sweeps", c.dmrg.noise_sweeps);
    d->finish();
  }
  if (auto t = top.child("two_run")) {
    t->get("enabled", c.two_run.enabled);
    t->get("max_attempts", c.two_run.max_attempts);
    t->get("collapse_threshold", c.two_run.collapse_threshold);
    t->get("max_overlap", c.two_run.max_overlap);
    t->get("energy_rtol", c.two_run.energy_rtol);
    t->finish();
  }
  if (auto s = top.child("sampling")) {
    if (const json* b = s->raw("bases")) {
      if (!b->is_array() || b->empty()) throw InputError("sampling.bases: expected a non-empty array");
      c.sampling.bases.clear();
      for (const auto& x : *b) {
        if (!x.is_string()) throw InputError("sampling.bases: entries must be strings");
        c.sampling.bases.push_back(parse_basis(x.get<std::string>()));
      }
    }
    s->get("n_samples", c.sampling.n_samples);
    s->get("levels", c.sampling.levels);
    s->get("seed", c.sampling.seed);
    s->finish();
  }
  auto& cl = c.classifier;
  if (auto i = top.child("intrinsic_dim")) {
    i->get("n_rows", cl.n_id);
    i->get("discard_fraction", cl.two_nn.discard_fraction);
    i->get("noise_constant", cl.two_nn.noise_constant);
    i->finish();
  }
  if (auto n = top.child("network")) {
    n->get("neighbor_rank", cl.neighbor_rank);
    if (const json* b = n->raw("binning")) {
      if (!b->is_string()) throw InputError("network.binning: expected a string");
      c.binning = parse_binning(b->get<std::string>());
    }
    n->get("n_rows", cl.n_net);
    n->get("vuong_margin", cl.network.vuong_margin);
    n->get("min_mean_ratio", cl.network.min_mean_ratio);
    n->get("min_span", cl.network.min_span);
    n->get("max_gamma", cl.network.max_gamma);
    n->get("min_tail", cl.network.min_tail);
    n->get("max_dispersion", cl.network.max_dispersion);
    n->get("macroscopic_fraction", cl.network.macroscopic_fraction);
    n->finish();
  }
  if (auto f = top.child("fss")) {
    f->get("pool", c.classifier.fss_pool);
    f->get("scales", cl.fss.scales);
    f->get("batch", cl.fss.batch);
    f->get("orders", cl.fss.orders);
    f->get("consistency_sigmas", cl.fss.consistency_sigmas);
    f->get("curvature_sigmas", cl.fss.curvature_sigmas);
    f->get("seed", cl.fss.seed);
    f->finish();
  }
  if (auto k = top.child("classifier")) {
    k->get("max_level", cl.max_level);
    k->get("drop_sigmas", cl.drop_sigmas);
    k->get("drop_fraction", cl.drop_fraction);
    k->get("flat_sigmas", cl.flat_sigmas);
    k->get("run_fss", cl.run_fss);
    k->get("seed", cl.seed);
    k->finish();
  }
  top.get("output_dir", c.output_dir);
  top.get("jobs", c.jobs);
  top.finish();
}

inline void validate(const RunConfig& c) {
  validate(c.model);
  c.dmrg.validate();
  c.classifier.validate();
  if (c.sampling.n_samples == 0) throw InputError("sampling.n_samples: must be positive");
  for (int l : c.sampling.levels)
    if (l < 0 || l > 8) throw InputError("sampling.levels: entries must lie in [0, 8]");
  if (c.two_run.max_attempts < 1) throw InputError("two_run.max_attempts: must be >= 1");
  if (c.classifier.neighbor_rank < 1) throw InputError("network.neighbor_rank: must be >= 1");
  if (c.classifier.fss.orders.empty()) throw InputError("fss.orders: must not be empty");
  for (int i : c.classifier.fss.orders)
    if (i < 1) throw InputError("fss.orders: orders must be >= 1");
  if (c.classifier.fss.scales.size() < 4) throw InputError("fss.scales: need at least 4 scales");
  for (auto s : c.classifier.fss.scales)
    if (s == 0 || s > c.classifier.fss_pool) throw InputError("fss.scales: every scale must lie in [1, fss.pool]");
  detail::positive("fss.batch", c.classifier.fss.batch);
  detail::positive("jobs", c.jobs);
}

/// Effective configuration, every default included. `output_dir` and `jobs`
/// do not change results and are left out of the hashed form.
inline json to_json(const RunConfig& c, bool with_runtime = true) {
  const auto& cl = c.classifier;
  json bases = json::array();
  for (Basis b : c.sampling.bases) bases.push_back(to_string(b));
  json j = {{"preset", c.preset},
            {"model", to_json(c.model)},
            {"dmrg", to_json(c.dmrg)},
            {"two_run",
             {{"enabled", c.two_run.enabled},
              {"max_attempts", c.two_run.max_attempts},
              {"collapse_threshold", c.two_run.collapse_threshold},
              {"max_overlap", c.two_run.max_overlap},
              {"energy_rtol", c.two_run.energy_rtol}}},
            {"sampling", {{"bases", bases}, {"n_samples", c.sampling.n_samples}, {"levels", c.sampling.levels}, {"seed", c.sampling.seed}}},
            {"intrinsic_dim",
             {{"n_rows", cl.n_id}, {"discard_fraction", cl.two_nn.discard_fraction}, {"noise_constant", cl.two_nn.noise_constant}}},
            {"network",
             {{"neighbor_rank", cl.neighbor_rank},
              {"binning", to_string(c.binning)},
              {"n_rows", cl.n_net},
              {"vuong_margin", cl.network.vuong_margin},
              {"min_mean_ratio", cl.network.min_mean_ratio},
              {"min_span", cl.network.min_span},
              {"max_gamma", cl.network.max_gamma},
              {"min_tail", cl.network.min_tail},
              {"max_dispersion", cl.network.max_dispersion},
              {"macroscopic_fraction", cl.network.macroscopic_fraction}}},
            {"fss",
             {{"pool", c.classifier.fss_pool},
              {"scales", cl.fss.scales},
              {"batch", cl.fss.batch},
              {"orders", cl.fss.orders},
              {"consistency_sigmas", cl.fss.consistency_sigmas},
              {"curvature_sigmas", cl.fss.curvature_sigmas},
              {"seed", cl.fss.seed}}},
            {"classifier",
             {{"max_level", cl.max_level},
              {"drop_sigmas", cl.drop_sigmas},
              {"drop_fraction", cl.drop_fraction},
              {"flat_sigmas", cl.flat_sigmas},
              {"run_fss", cl.run_fss},
              {"seed", cl.seed}}}};
  if (with_runtime) {
    j["output_dir"] = c.output_dir;
    j["jobs"] = c.jobs;
  }
  return j;
}

inline std::string config_hash(const RunConfig& c) { return fnv1a_hex(to_json(c, false).dump()); }

/// Applies "a.b.c=value" (value parsed as JSON, else taken as a string).
inline void set_path(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw InputError("--set expects key.path=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw InputError("--set: empty key in '" + path + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

/// Defaults -> preset -> file -> overrides; SNAPNET_OUTPUT_DIR replaces the
/// file's output_dir (a later --out flag replaces both).
inline RunConfig load_config(const std::optional<fs::path>& file, const std::vector<std::string>& overrides = {},
                             const std::optional<std::string>& preset = std::nullopt) {
  json doc = json::object();
  if (file) {
    doc = read_json(*file);
    if (!doc.is_object()) throw InputError(file->string() + ": top level must be an object");
  }
  for (const auto& o : overrides) set_path(doc, o);
  RunConfig c;
  std::string p = preset.value_or(doc.contains("preset") && doc["preset"].is_string() ? doc["preset"].get<std::string>() : "desk");
  apply_preset(c, p);
  merge_config(c, doc);
  if (const char* env = std::getenv("SNAPNET_OUTPUT_DIR"); env && *env) c.output_dir = env;
  c.classifier.jobs = c.jobs;
  c.classifier.two_nn.jobs = c.jobs;
  c.classifier.fss.jobs = c.jobs;
  c.classifier.fss.neighbor_rank = c.classifier.neighbor_rank;
  validate(c);
  return c;
}

inline PipelineConfig pipeline_config(const RunConfig& c) {
  PipelineConfig p;
  p.model = c.model;
  p.dmrg = c.dmrg;
  p.two_run = c.two_run;
  p.classifier = c.classifier;
  return p;
}

inline Provenance provenance(const RunConfig& c) {
  Provenance p;
  p.config_hash = config_hash(c);
  p.seeds = {{"dmrg", c.dmrg.seed}, {"sampling", c.sampling.seed}, {"classifier", c.classifier.seed}, {"fss", c.classifier.fss.seed}};
  return p;
}

}  // namespace snapnet
