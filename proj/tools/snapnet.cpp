// snapnet: ground states, snapshots, networks and phase classification.
//
// Exit codes: 0 success (any verdict, Indeterminate included), 2 input
// error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "snapnet/config.hpp"
#include "snapnet/io.hpp"
#include "snapnet/pipeline.hpp"

using namespace snapnet;

namespace {

constexpr int kInputExit = 2;
constexpr int kNumericalExit = 3;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string preset;
  std::string out;
  int jobs = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "JSON run configuration");
  app->add_option("--set", c.sets, "override a config key, e.g. --set model.params.h=0.5")->take_all();
  app->add_option("--preset", c.preset, "desk or paper (default: from config, else desk)");
  app->add_option("-o,--out", c.out, "output directory (overrides config and SNAPNET_OUTPUT_DIR)");
  app->add_option("-j,--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
}

RunConfig resolve(const Common& c, std::vector<std::string> extra = {}) {
  std::vector<std::string> sets = c.sets;
  if (c.jobs > 0) sets.push_back("jobs=" + std::to_string(c.jobs));
  sets.insert(sets.end(), extra.begin(), extra.end());
  auto cfg = load_config(c.config.empty() ? std::nullopt : std::optional<fs::path>(c.config), sets,
                         c.preset.empty() ? std::nullopt : std::optional<std::string>(c.preset));
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

void write_effective_config(const RunConfig& cfg) {
  json j = to_json(cfg);
  j["config_hash"] = config_hash(cfg);
  j["version"] = kVersion;
  write_file(fs::path(cfg.output_dir) / "config.effective.json", dump(j));
}

std::string stem_for(const SnapshotDataset& ds) {
  return "snapshots_" + to_string(ds.basis) + "_l" + std::to_string(ds.level);
}

// ------------------------------------------------------------- subcommands

int cmd_ground_state(const Common& common) {
  const auto cfg = resolve(common);
  const auto prov = provenance(cfg);
  const auto rec = solve_ground_state(cfg.model, cfg.dmrg, cfg.two_run);
  const fs::path out(cfg.output_dir);
  const auto side = write_checkpoint(out / "ground_state", rec, cfg.dmrg, prov);
  std::ostringstream log;
  log.precision(17);
  log << "run,dmrg_seed,sweep,energy\n";
  for (std::size_t k = 0; k < rec.runs.size(); ++k)
    for (std::size_t s = 0; s < rec.runs[k].sweep_energies.size(); ++s)
      log << k << ',' << rec.seeds[k] << ',' << s + 1 << ',' << rec.runs[k].sweep_energies[s] << '\n';
  write_file(out / "energies.csv", log.str());
  write_effective_config(cfg);
  std::printf("E = %.12f after %d sweeps (%s)\n", rec.runs[0].energy, rec.runs[0].sweeps, rec.note.c_str());
  std::printf("wrote %s\n", side.string().c_str());
  return 0;
}

int cmd_sample(const Common& common, const std::string& checkpoint, const std::vector<std::string>& flags) {
  const auto cfg = resolve(common, flags);
  const auto prov = provenance(cfg);
  const auto ck = read_checkpoint(checkpoint);
  const fs::path out(cfg.output_dir);
  for (int level : cfg.sampling.levels) {
    const int block = 1 << level;
    if (ck.record.model.length % block != 0)
      throw ShapeError("level " + std::to_string(level) + " needs a chain length divisible by " + std::to_string(block) +
                       ", checkpoint has L = " + std::to_string(ck.record.model.length));
    for (Basis b : cfg.sampling.bases) {
      const std::uint64_t seed = derive_seed(cfg.sampling.seed, static_cast<std::uint64_t>(b));
      auto ds = sample_record(ck.record, b, cfg.sampling.n_samples, seed, cfg.jobs);
      if (level > 0) ds = decimate(ds, level);
      const auto side = write_snapshots(out / stem_for(ds), ds, prov);
      std::printf("wrote %s (%zu x %d)\n", side.string().c_str(), ds.rows(), ds.length());
    }
  }
  write_effective_config(cfg);
  return 0;
}

int cmd_analyze(const Common& common, const std::vector<std::string>& files, bool neighbors) {
  const auto cfg = resolve(common);
  const auto prov = provenance(cfg);
  const auto& cl = cfg.classifier;
  const fs::path out(cfg.output_dir);
  json items = json::array();
  std::map<Basis, IdEstimate> by_basis;
  for (const auto& f : files) {
    const auto ds = read_snapshots(f);
    const std::string stem = fs::path(f).stem().string();
    const auto id_rows = ds.rows() > cl.n_id ? ds.slice(0, cl.n_id) : ds;
    const auto est = two_nn(id_rows, derive_seed(cl.seed, static_cast<std::uint64_t>(ds.basis)), cl.two_nn);
    const auto data = ds.rows() > cl.n_net ? ds.slice(0, cl.n_net) : ds;
    const auto reps = repetition_stats(data);
    const auto net = build_network_auto(data, cl.neighbor_rank, cfg.jobs);
    const auto label = classify_network(net, reps.duplicate_rows, cl.network);
    const auto net_side = write_network(out / (stem + ".network"), net, fs::path(f).filename().string(), prov);
    write_file(out / (stem + ".degrees.csv"), degree_csv(degree_distribution(net, cfg.binning)));
    if (neighbors) write_file(out / (stem + ".knn.csv"), neighbor_csv(knn(data, cl.neighbor_rank, cfg.jobs)));
    items.push_back({{"file", f},
                     {"basis", to_string(ds.basis)},
                     {"level", ds.level},
                     {"L", ds.length()},
                     {"n_samples", ds.rows()},
                     {"intrinsic_dimension", to_json(est)},
                     {"network", to_json(label)},
                     {"network_file", net_side.filename().string()},
                     {"degree_file", stem + ".degrees.csv"},
                     {"binning", to_string(cfg.binning)}});
    if (ds.level == 0) by_basis[ds.basis] = est;
    std::printf("%s: basis %s, I_d = %.3f +- %.3f, R = %.3f, network %s\n", f.c_str(), to_string(ds.basis).c_str(),
                est.value, est.ci, net.cutoff, to_string(label.type).c_str());
  }
  json summary = {{"kind", "analysis"}, {"datasets", items}, {"provenance", to_json(prov)}};
  if (by_basis.size() >= 2) {
    const auto scan = select_minimal_basis(by_basis);
    json ties = json::array();
    for (Basis b : scan.ties) ties.push_back(to_string(b));
    summary["minimal_basis"] = to_string(scan.minimal);
    summary["basis_ties"] = ties;
    std::printf("minimal-complexity basis: %s\n", to_string(scan.minimal).c_str());
  }
  write_file(out / "analysis.json", dump(summary));
  write_effective_config(cfg);
  return 0;
}

int cmd_fss(const Common& common, const std::string& pool_file) {
  const auto cfg = resolve(common);
  const auto pool = read_snapshots(pool_file);
  FssOptions opt = cfg.classifier.fss;
  const std::size_t need = *std::max_element(opt.scales.begin(), opt.scales.end());
  if (pool.rows() < need)
    throw InputError("pool has " + std::to_string(pool.rows()) + " rows but the largest scale is " + std::to_string(need));
  const auto run = fss_test(pool, opt);
  const auto side = write_fss(fs::path(cfg.output_dir) / "fss", run, provenance(cfg));
  write_effective_config(cfg);
  std::printf("verdict: %s (%s)\n", to_string(run.verdict).c_str(), run.reason.c_str());
  for (const auto& f : run.fits)
    std::printf("  i = %d: slope %.4f +- %.4f\n", f.order, f.slope, f.slope_se);
  std::printf("wrote %s\n", side.string().c_str());
  return 0;
}

int cmd_classify(const Common& common, const std::vector<std::string>& snapshots) {
  const auto cfg = resolve(common);
  const auto prov = provenance(cfg);
  json doc = {{"kind", "classification"}, {"config", to_json(cfg, false)}, {"provenance", to_json(prov)}};
  ClassificationReport report;
  if (snapshots.empty()) {
    const auto res = run_pipeline(pipeline_config(cfg));
    report = res.report;
    json gs = json::array();
    for (const auto& r : res.ground_states) gs.push_back(ground_state_summary(r));
    doc["ground_states"] = gs;
  } else {
    std::map<DatasetKey, SnapshotDataset> in;
    for (const auto& f : snapshots) {
      auto ds = read_snapshots(f);
      const DatasetKey key{ds.basis, ds.level};
      if (in.contains(key)) throw InputError(f + ": a dataset for " + to_string(ds.basis) + " level " +
                                             std::to_string(ds.level) + " was already given");
      in.emplace(key, std::move(ds));
    }
    report = classify_state(in, cfg.classifier);
  }
  doc["report"] = to_json(report);
  const fs::path out(cfg.output_dir);
  write_file(out / "report.json", dump(doc));
  write_effective_config(cfg);
  std::printf("%s\n", verdict_line(report).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"snapnet: phase classification from wave-function snapshots"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  auto* gs = app.add_subcommand("ground-state", "DMRG ground state of the configured model");
  add_common(gs, common);

  auto* sample = app.add_subcommand("sample", "draw snapshots from a checkpoint");
  add_common(sample, common);
  std::string checkpoint, bases, n_samples, level, seed;
  sample->add_option("checkpoint", checkpoint, "checkpoint sidecar (ground_state.json)")->required();
  sample->add_option("--bases", bases, "comma-separated subset of x,y,z");
  sample->add_option("-n,--n-samples", n_samples, "snapshots per basis");
  sample->add_option("-l,--level", level, "decimation level");
  sample->add_option("-s,--seed", seed, "sampling seed");

  auto* analyze = app.add_subcommand("analyze", "I_d, networks and degree distributions of snapshot files");
  add_common(analyze, common);
  std::vector<std::string> files;
  bool neighbors = false;
  analyze->add_option("snapshots", files, "snapshot sidecars (.json) or CSV files")->required();
  analyze->add_flag("--neighbors", neighbors, "also export the neighbour table as CSV");

  auto* fss = app.add_subcommand("fss", "finite-size-scaling test on a snapshot pool");
  add_common(fss, common);
  std::string pool;
  fss->add_option("pool", pool, "snapshot pool sidecar (.json)")->required();

  auto* classify = app.add_subcommand("classify", "run the full classification");
  add_common(classify, common);
  std::vector<std::string> given;
  classify->add_option("--snapshots", given, "classify these datasets instead of generating them");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInputExit;
  }

  try {
    if (gs->parsed()) return cmd_ground_state(common);
    if (sample->parsed()) {
      std::vector<std::string> flags;
      if (!bases.empty()) {
        json arr = json::array();
        std::stringstream ss(bases);
        std::string b;
        while (std::getline(ss, b, ',')) arr.push_back(b);
        flags.push_back("sampling.bases=" + arr.dump());
      }
      if (!n_samples.empty()) flags.push_back("sampling.n_samples=" + n_samples);
      if (!level.empty()) flags.push_back("sampling.levels=[" + level + "]");
      if (!seed.empty()) flags.push_back("sampling.seed=" + seed);
      return cmd_sample(common, checkpoint, flags);
    }
    if (analyze->parsed()) return cmd_analyze(common, files, neighbors);
    if (fss->parsed()) return cmd_fss(common, pool);
    if (classify->parsed()) return cmd_classify(common, given);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumericalExit;
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kInputExit;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kInputExit;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kInputExit;
  }
  return kInputExit;
}
