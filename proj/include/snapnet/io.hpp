#pragma once

// File formats. Everything is written deterministically (sorted JSON keys,
// shortest round-trip doubles, no timestamps), so rerunning a config gives
// byte-identical files and write -> read -> write is the identity.
//
//   MPS checkpoint   <stem>.json sidecar + <stem>.<k>.snmps per DMRG run
//                    "SNMPS\0\0\0", u32 format, u32 scalar (0 = real),
//                    u64 L, i64 center, then per site u64 rows, u64 cols and
//                    rows*cols f64 for each physical index (column-major).
//                    All integers and floats little-endian.
//   snapshots        <stem>.json + <stem>.bin + <stem>.csv
//                    .bin: rows of ceil(L/8) bytes, site i in byte i/8,
//                    bit i%8 (LSB first), set bit = -1.
//   network          <stem>.edges ("u v" per line, u < v) + <stem>.json
//   degrees          CSV "k,P_k"
//   fss              <stem>.json + <stem>.curves.csv
//   report           pretty JSON

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "snapnet/classifier.hpp"
#include "snapnet/dmrg.hpp"
#include "snapnet/error.hpp"
#include "snapnet/fss.hpp"
#include "snapnet/pipeline.hpp"
#include "snapnet/version.hpp"
#include "snapnet/wfnet.hpp"

namespace snapnet {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// FNV-1a 64 as 16 hex digits; used for config hashes.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

/// Stamped into every artifact.
struct Provenance {
  std::string config_hash;
  json seeds = json::object();
};

inline json to_json(const Provenance& p) {
  return {{"version", kVersion}, {"format_version", kFormatVersion}, {"config_hash", p.config_hash}, {"seeds", p.seeds}};
}

inline Provenance provenance_from_json(const json& j) {
  Provenance p;
  p.config_hash = j.value("config_hash", "");
  p.seeds = j.value("seeds", json::object());
  return p;
}

// ------------------------------------------------------------ file helpers

/// Writes to a temporary sibling and renames, so a path is either absent
/// or complete.
inline void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int b = 0; b < 4; ++b) buf_.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) buf_.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
  void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(const std::string& s, std::string what) : s_(s), what_(std::move(what)) {}
  std::uint64_t u(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int b = 0; b < bytes; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s_[pos_++])) << (8 * b);
    return v;
  }
  double f64() { return std::bit_cast<double>(u(8)); }
  std::string raw(std::size_t n) {
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > s_.size()) throw InputError(what_ + ": truncated file");
  }
  const std::string& s_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// ------------------------------------------------------------ model, dmrg

inline json to_json(const ModelSpec& m) {
  json p = json::object();
  for (const auto& [k, v] : m.params) p[k] = v;
  return {{"family", to_string(m.family)}, {"L", m.length}, {"params", p}, {"boundary", "open"}};
}

inline ModelSpec model_from_json(const json& j) {
  ModelSpec m;
  try {
    m.family = parse_family(j.at("family").get<std::string>());
    m.length = j.at("L").get<int>();
    for (const auto& [k, v] : j.at("params").items()) m.params[k] = v.get<double>();
    if (j.contains("boundary") && j.at("boundary") != "open") throw InputError("model.boundary: only \"open\" is supported");
  } catch (const json::exception& e) {
    throw InputError(std::string("model: ") + e.what());
  }
  validate(m);
  return m;
}

inline json to_json(const DmrgConfig& c) {
  return {{"max_bond", c.max_bond},         {"svd_cutoff", c.svd_cutoff},       {"max_sweeps", c.max_sweeps},
          {"energy_tol", c.energy_tol},     {"lanczos_iters", c.lanczos_iters}, {"lanczos_tol", c.lanczos_tol},
          {"seed", c.seed},                 {"noise", c.noise},                 {"noise_sweeps", c.noise_sweeps}};
}

// --------------------------------------------------------- MPS checkpoints

inline std::string encode_mps(const RealMps& psi) {
  detail::ByteWriter w;
  w.raw("SNMPS\0\0\0", 8);
  w.u32(static_cast<std::uint32_t>(kFormatVersion));
  w.u32(0);
  w.u64(static_cast<std::uint64_t>(psi.length()));
  w.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(psi.center)));
  for (const auto& s : psi.sites) {
    w.u64(static_cast<std::uint64_t>(s[0].rows()));
    w.u64(static_cast<std::uint64_t>(s[0].cols()));
    for (const auto& m : s)
      for (Eigen::Index k = 0; k < m.size(); ++k) w.f64(m.data()[k]);
  }
  return w.str();
}

inline RealMps decode_mps(const std::string& bytes, const std::string& what = "checkpoint") {
  detail::ByteReader r(bytes, what);
  if (r.raw(8) != std::string("SNMPS\0\0\0", 8)) throw InputError(what + ": not an MPS checkpoint");
  const auto ver = r.u(4);
  if (ver != static_cast<std::uint64_t>(kFormatVersion))
    throw InputError(what + ": unsupported format version " + std::to_string(ver));
  if (r.u(4) != 0) throw InputError(what + ": only real checkpoints are supported");
  const auto n = r.u(8);
  if (n == 0 || n > (1u << 20)) throw InputError(what + ": bad chain length");
  RealMps psi;
  psi.center = static_cast<int>(static_cast<std::int64_t>(r.u(8)));
  Eigen::Index prev = 1;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto rows = static_cast<Eigen::Index>(r.u(8));
    const auto cols = static_cast<Eigen::Index>(r.u(8));
    if (rows != prev || cols < 1 || cols > 65536) throw ShapeError(what + ": inconsistent bond dimensions");
    RealMps::Site s;
    for (auto& m : s) {
      m.resize(rows, cols);
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = r.f64();
    }
    psi.sites.push_back(std::move(s));
    prev = cols;
  }
  if (prev != 1) throw ShapeError(what + ": right boundary bond must be 1");
  if (!r.done()) throw InputError(what + ": trailing bytes");
  return psi;
}

/// Sidecar for one ground-state record. Payload names are relative to the
/// sidecar's directory.
inline json checkpoint_json(const GroundStateRecord& rec, const DmrgConfig& cfg, const std::vector<std::string>& payloads,
                            const Provenance& prov) {
  json runs = json::array();
  for (std::size_t k = 0; k < rec.runs.size(); ++k) {
    const auto& r = rec.runs[k];
    runs.push_back({{"payload", payloads.at(k)},
                    {"dmrg_seed", rec.seeds.at(k)},
                    {"energy", r.energy},
                    {"sweeps", r.sweeps},
                    {"sweep_energies", r.sweep_energies},
                    {"max_discarded_weight", r.max_discarded_weight},
                    {"max_bond", r.state.max_bond()},
                    {"magnetization", {{"x", r.sector.mx}, {"y", r.sector.my}, {"z", r.sector.mz}}}});
  }
  return {{"kind", "mps-checkpoint"}, {"model", to_json(rec.model)}, {"dmrg", to_json(cfg)},
          {"runs", runs},             {"parity", rec.parity},      {"collapsed", rec.collapsed},
          {"sector_note", rec.note},  {"provenance", to_json(prov)}};
}

/// Writes <stem>.json and <stem>.<k>.snmps; returns the sidecar path.
inline fs::path write_checkpoint(const fs::path& stem, const GroundStateRecord& rec, const DmrgConfig& cfg,
                                 const Provenance& prov) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < rec.runs.size(); ++k) {
    const fs::path p = stem.string() + "." + std::to_string(k) + ".snmps";
    write_file(p, encode_mps(rec.runs[k].state));
    names.push_back(p.filename().string());
  }
  const fs::path side = stem.string() + ".json";
  write_file(side, dump(checkpoint_json(rec, cfg, names, prov)));
  return side;
}

struct Checkpoint {
  GroundStateRecord record;
  json sidecar;
};

inline Checkpoint read_checkpoint(const fs::path& sidecar) {
  Checkpoint c;
  c.sidecar = read_json(sidecar);
  if (c.sidecar.value("kind", "") != "mps-checkpoint") throw InputError(sidecar.string() + ": not a checkpoint sidecar");
  auto& rec = c.record;
  rec.model = model_from_json(c.sidecar.at("model"));
  rec.parity = c.sidecar.value("parity", 0.0);
  rec.collapsed = c.sidecar.value("collapsed", false);
  rec.note = c.sidecar.value("sector_note", "");
  for (const auto& r : c.sidecar.at("runs")) {
    DmrgResult d;
    const fs::path payload = sidecar.parent_path() / r.at("payload").get<std::string>();
    d.state = decode_mps(read_file(payload), payload.string());
    if (d.state.length() != rec.model.length) throw ShapeError(payload.string() + ": length differs from the model");
    d.energy = r.at("energy").get<double>();
    d.sweeps = r.at("sweeps").get<int>();
    d.sweep_energies = r.at("sweep_energies").get<std::vector<double>>();
    d.max_discarded_weight = r.at("max_discarded_weight").get<double>();
    const auto& m = r.at("magnetization");
    d.sector = {m.at("x").get<double>(), m.at("y").get<double>(), m.at("z").get<double>()};
    rec.seeds.push_back(r.at("dmrg_seed").get<std::uint64_t>());
    rec.runs.push_back(std::move(d));
  }
  if (rec.runs.empty()) throw InputError(sidecar.string() + ": no runs");
  return c;
}

// ---------------------------------------------------------------- snapshots

inline std::string encode_snapshots(const SnapshotDataset& ds) {
  const std::size_t row_bytes = (static_cast<std::size_t>(ds.length()) + 7) / 8;
  std::string out(ds.rows() * row_bytes, '\0');
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto* w = ds.row_words(r);
    for (std::size_t b = 0; b < row_bytes; ++b)
      out[r * row_bytes + b] = static_cast<char>((w[b / 8] >> (8 * (b % 8))) & 0xFF);
  }
  return out;
}

inline SnapshotDataset decode_snapshots(const std::string& bytes, std::size_t rows, int length) {
  const std::size_t row_bytes = (static_cast<std::size_t>(length) + 7) / 8;
  if (bytes.size() != rows * row_bytes)
    throw ShapeError("snapshot payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                     std::to_string(rows * row_bytes));
  SnapshotDataset ds(rows, length);
  const std::uint64_t pad = length % 8 ? ~((std::uint64_t{1} << (length % 8)) - 1) & 0xFF : 0;
  for (std::size_t r = 0; r < rows; ++r) {
    auto* w = ds.row_words(r);
    for (std::size_t b = 0; b < row_bytes; ++b) {
      const auto byte = static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[r * row_bytes + b]));
      if (b + 1 == row_bytes && (byte & pad)) throw InputError("snapshot payload: padding bits must be zero");
      w[b / 8] |= byte << (8 * (b % 8));
    }
  }
  return ds;
}

inline std::string snapshots_csv(const SnapshotDataset& ds) {
  std::string out;
  out.reserve(ds.rows() * static_cast<std::size_t>(ds.length()) * 3);
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (int i = 0; i < ds.length(); ++i) {
      if (i) out += ',';
      out += ds.get(r, i) < 0 ? "-1" : "1";
    }
    out += '\n';
  }
  return out;
}

inline SnapshotDataset snapshots_from_csv(const std::string& text) {
  std::vector<std::vector<int>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<int> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      if (cell == "1" || cell == "+1")
        row.push_back(1);
      else if (cell == "-1")
        row.push_back(-1);
      else
        throw InputError("snapshot CSV: entry '" + cell + "' is not +1 or -1");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("snapshot CSV: no rows");
  return SnapshotDataset::from_rows(rows);
}

inline json snapshot_json(const SnapshotDataset& ds, const std::string& payload, const Provenance& prov) {
  return {{"kind", "snapshots"},
          {"model", ds.model ? to_json(*ds.model) : json(nullptr)},
          {"basis", to_string(ds.basis)},
          {"level", ds.level},
          {"n_samples", ds.rows()},
          {"L", ds.length()},
          {"seed", ds.seed},
          {"payload", payload},
          {"bit_order", "row-major, ceil(L/8) bytes per row, site i in byte i/8 bit i%8, set bit = -1"},
          {"basis_convention",
           "x: (1/sqrt2)[[1,1],[1,-1]], y: (1/sqrt2)[[1,-i],[1,i]], z: identity; row k is the +1 (k=0) or -1 (k=1) "
           "eigenvector"},
          {"provenance", to_json(prov)}};
}

/// Writes <stem>.json, <stem>.bin and (optionally) <stem>.csv.
inline fs::path write_snapshots(const fs::path& stem, const SnapshotDataset& ds, const Provenance& prov, bool csv = true) {
  const fs::path bin = stem.string() + ".bin";
  write_file(bin, encode_snapshots(ds));
  if (csv) write_file(stem.string() + ".csv", snapshots_csv(ds));
  const fs::path side = stem.string() + ".json";
  write_file(side, dump(snapshot_json(ds, bin.filename().string(), prov)));
  return side;
}

/// Reads a snapshot sidecar (.json) or, for interoperability, a bare CSV.
inline SnapshotDataset read_snapshots(const fs::path& path) {
  if (path.extension() == ".csv") return snapshots_from_csv(read_file(path));
  const json j = read_json(path);
  if (j.value("kind", "") != "snapshots") throw InputError(path.string() + ": not a snapshot sidecar");
  const auto rows = j.at("n_samples").get<std::size_t>();
  const int length = j.at("L").get<int>();
  if (rows == 0) throw InputError(path.string() + ": dataset has no rows");
  auto ds = decode_snapshots(read_file(path.parent_path() / j.at("payload").get<std::string>()), rows, length);
  ds.basis = parse_basis(j.at("basis").get<std::string>());
  ds.level = j.at("level").get<int>();
  ds.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("model").is_null()) ds.model = model_from_json(j.at("model"));
  return ds;
}

// --------------------------------------------------------------- networks

inline std::string edge_list_text(const Graph& g) {
  std::string out;
  for (auto [u, v] : g.edge_list()) out += std::to_string(u) + " " + std::to_string(v) + "\n";
  return out;
}

inline Graph graph_from_edge_list(const std::string& text, std::size_t nodes) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> e;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    long long u = -1, v = -1;
    std::string extra;
    if (!(ls >> u >> v) || (ls >> extra) || u < 0 || v < 0)
      throw InputError("edge list line " + std::to_string(lineno) + ": expected two node ids");
    e.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
  }
  return Graph::from_edges(nodes, e);
}

inline json network_json(const WaveFunctionNetwork& net, const std::string& edges_file, const std::string& dataset,
                         const Provenance& prov) {
  return {{"kind", "network"},
          {"nodes", net.graph.nodes()},
          {"edges", net.graph.edges()},
          {"cutoff", net.cutoff},
          {"neighbor_rank", net.neighbor_rank},
          {"dataset", dataset},
          {"edge_file", edges_file},
          {"provenance", to_json(prov)}};
}

inline fs::path write_network(const fs::path& stem, const WaveFunctionNetwork& net, const std::string& dataset,
                              const Provenance& prov) {
  const fs::path edges = stem.string() + ".edges";
  write_file(edges, edge_list_text(net.graph));
  const fs::path side = stem.string() + ".json";
  write_file(side, dump(network_json(net, edges.filename().string(), dataset, prov)));
  return side;
}

inline WaveFunctionNetwork read_network(const fs::path& sidecar) {
  const json j = read_json(sidecar);
  if (j.value("kind", "") != "network") throw InputError(sidecar.string() + ": not a network sidecar");
  WaveFunctionNetwork net;
  net.graph = graph_from_edge_list(read_file(sidecar.parent_path() / j.at("edge_file").get<std::string>()),
                                   j.at("nodes").get<std::size_t>());
  net.cutoff = j.at("cutoff").get<double>();
  net.neighbor_rank = j.at("neighbor_rank").get<int>();
  if (net.graph.edges() != j.at("edges").get<std::size_t>()) throw InputError(sidecar.string() + ": edge count mismatch");
  return net;
}

/// Two columns: degree (bin start for log binning) and P_k (frequency for
/// linear bins, frequency per unit degree for log bins).
inline std::string degree_csv(const DegreeDistribution& dd) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "k,P_k\n";
  for (const auto& b : dd.bins) {
    if (dd.binning == Binning::Log && b.count == 0) continue;
    os << b.lo << ',' << (dd.binning == Binning::Linear ? b.frequency : b.density) << '\n';
  }
  return os.str();
}

inline std::string neighbor_csv(const NeighborTable& nt) {
  std::ostringstream os;
  os << std::setprecision(17) << "row,rank,neighbor,distance\n";
  for (std::size_t r = 0; r < nt.rows; ++r)
    for (int k = 0; k < nt.n_max; ++k) os << r << ',' << k + 1 << ',' << nt.neighbor(r, k) << ',' << nt.dist(r, k) << '\n';
  return os.str();
}

// ------------------------------------------------------------- estimates

inline json to_json(const IdEstimate& e) {
  return {{"value", e.value},
          {"ci", e.ci},
          {"n_used", e.n_used},
          {"n_total", e.n_total},
          {"discard_fraction", e.discard_fraction},
          {"duplicate_rows", e.duplicate_rows},
          {"noise_width", e.noise_width},
          {"method", e.method}};
}

inline IdEstimate id_from_json(const json& j) {
  IdEstimate e;
  e.value = j.at("value");
  e.ci = j.at("ci");
  e.n_used = j.at("n_used");
  e.n_total = j.at("n_total");
  e.discard_fraction = j.at("discard_fraction");
  e.duplicate_rows = j.at("duplicate_rows");
  e.noise_width = j.at("noise_width");
  e.method = j.at("method");
  return e;
}

inline json to_json(const PowerLawFit& f) {
  return {{"gamma", f.gamma}, {"sigma", f.sigma}, {"k_min", f.k_min}, {"k_max", f.k_max}, {"n_tail", f.n_tail}, {"ks", f.ks}};
}

inline PowerLawFit power_law_from_json(const json& j) {
  PowerLawFit f;
  f.gamma = j.at("gamma");
  f.sigma = j.at("sigma");
  f.k_min = j.at("k_min");
  f.k_max = j.at("k_max");
  f.n_tail = j.at("n_tail");
  f.ks = j.at("ks");
  return f;
}

inline json to_json(const NetworkLabel& l) {
  json j = {{"type", to_string(l.type)},
            {"reason", l.reason},
            {"cutoff", l.cutoff},
            {"mean_degree", l.mean_degree},
            {"dispersion", l.dispersion},
            {"max_degree", l.max_degree},
            {"duplicate_rows", l.duplicate_rows},
            {"components", l.components},
            {"macroscopic_components", l.macroscopic_components},
            {"scaling_test", l.fss_confirmed ? json(*l.fss_confirmed) : json(nullptr)}};
  if (l.tail)
    j["tail"] = {{"power_law", to_json(l.tail->power_law)},
                 {"poisson_lambda", l.tail->poisson_lambda},
                 {"log_likelihood_ratio", l.tail->log_likelihood_ratio},
                 {"mean_ratio", l.tail->mean_ratio()},
                 {"vuong_z", l.tail->vuong_z}};
  else
    j["tail"] = nullptr;
  return j;
}

// ---------------------------------------------------------------------- fss

inline json to_json(const FssRun& run) {
  json scales = json::array();
  for (const auto& st : run.per_scale) {
    json lr = json::object(), lse = json::object();
    for (const auto& [i, v] : st.log_ratio) lr[std::to_string(i)] = v;
    for (const auto& [i, v] : st.log_ratio_se) lse[std::to_string(i)] = v;
    scales.push_back({{"n_s", st.n_s},
                      {"batch_moments", st.batch_moments},
                      {"mean_moments", st.mean_moments},
                      {"moment_se", st.moment_se},
                      {"log_ratio", lr},
                      {"log_ratio_se", lse}});
  }
  json fits = json::array();
  for (const auto& f : run.fits)
    fits.push_back({{"order", f.order},
                    {"slope", f.slope},
                    {"slope_se", f.slope_se},
                    {"fss_exponent", f.fss_exponent()},
                    {"curvature", f.curvature},
                    {"curvature_se", f.curvature_se}});
  return {{"kind", "fss"},
          {"pool_size", run.pool_size},
          {"scales", run.scales},
          {"batch", run.batch},
          {"cutoff", run.cutoff},
          {"neighbor_rank", run.neighbor_rank},
          {"seed", run.seed},
          {"per_scale", scales},
          {"fits", fits},
          {"gamma_fit", run.gamma_fit ? to_json(*run.gamma_fit) : json(nullptr)},
          {"orders_below_validity", run.orders_below_validity},
          {"verdict", to_string(run.verdict)},
          {"reason", run.reason}};
}

inline FssRun fss_from_json(const json& j) {
  if (j.value("kind", "") != "fss") throw InputError("not an fss document");
  FssRun run;
  run.pool_size = j.at("pool_size");
  run.scales = j.at("scales").get<std::vector<std::size_t>>();
  run.batch = j.at("batch");
  run.cutoff = j.at("cutoff");
  run.neighbor_rank = j.at("neighbor_rank");
  run.seed = j.at("seed");
  for (const auto& s : j.at("per_scale")) {
    ScaleStats st;
    st.n_s = s.at("n_s");
    st.batch_moments = s.at("batch_moments").get<std::vector<std::vector<double>>>();
    st.mean_moments = s.at("mean_moments").get<std::vector<double>>();
    st.moment_se = s.at("moment_se").get<std::vector<double>>();
    for (const auto& [k, v] : s.at("log_ratio").items()) st.log_ratio[std::stoi(k)] = v.get<double>();
    for (const auto& [k, v] : s.at("log_ratio_se").items()) st.log_ratio_se[std::stoi(k)] = v.get<double>();
    run.per_scale.push_back(std::move(st));
  }
  for (const auto& f : j.at("fits")) {
    SlopeFit s;
    s.order = f.at("order");
    s.slope = f.at("slope");
    s.slope_se = f.at("slope_se");
    s.curvature = f.at("curvature");
    s.curvature_se = f.at("curvature_se");
    run.fits.push_back(s);
  }
  if (!j.at("gamma_fit").is_null()) run.gamma_fit = power_law_from_json(j.at("gamma_fit"));
  run.orders_below_validity = j.at("orders_below_validity").get<std::vector<int>>();
  const auto v = j.at("verdict").get<std::string>();
  if (v == to_string(FssVerdict::ScaleFreeConfirmed))
    run.verdict = FssVerdict::ScaleFreeConfirmed;
  else if (v == to_string(FssVerdict::NotConfirmed))
    run.verdict = FssVerdict::NotConfirmed;
  else
    throw InputError("fss: unknown verdict '" + v + "'");
  run.reason = j.at("reason");
  return run;
}

/// Plot-ready moment-ratio curves: one row per (order, scale) with the fit.
inline std::string fss_curves_csv(const FssRun& run) {
  std::ostringstream os;
  os << std::setprecision(17) << "order,n_s,log_n_s,log_ratio,log_ratio_se,slope,fss_exponent\n";
  for (const auto& f : run.fits)
    for (const auto& st : run.per_scale)
      os << f.order << ',' << st.n_s << ',' << std::log(static_cast<double>(st.n_s)) << ',' << st.log_ratio.at(f.order)
         << ',' << st.log_ratio_se.at(f.order) << ',' << f.slope << ',' << f.fss_exponent() << '\n';
  return os.str();
}

inline fs::path write_fss(const fs::path& stem, const FssRun& run, const Provenance& prov) {
  json j = to_json(run);
  j["provenance"] = to_json(prov);
  write_file(stem.string() + ".curves.csv", fss_curves_csv(run));
  const fs::path side = stem.string() + ".json";
  write_file(side, dump(j));
  return side;
}

// ------------------------------------------------------------------ report

inline json to_json(const TwoNnOptions& o) {
  return {{"discard_fraction", o.discard_fraction}, {"noise_constant", o.noise_constant}};
}

inline json to_json(const NetworkClassifierOptions& o) {
  return {{"vuong_margin", o.vuong_margin},         {"min_mean_ratio", o.min_mean_ratio},
          {"min_span", o.min_span},                 {"max_gamma", o.max_gamma},
          {"min_tail", o.min_tail},                 {"max_dispersion", o.max_dispersion},
          {"macroscopic_fraction", o.macroscopic_fraction}};
}

inline json to_json(const FssOptions& o) {
  return {{"scales", o.scales},
          {"batch", o.batch},
          {"orders", o.orders},
          {"neighbor_rank", o.neighbor_rank},
          {"seed", o.seed},
          {"consistency_sigmas", o.consistency_sigmas},
          {"curvature_sigmas", o.curvature_sigmas}};
}

inline json to_json(const ClassifierConfig& c) {
  return {{"n_id", c.n_id},
          {"n_net", c.n_net},
          {"fss_pool", c.fss_pool},
          {"neighbor_rank", c.neighbor_rank},
          {"max_level", c.max_level},
          {"drop_sigmas", c.drop_sigmas},
          {"drop_fraction", c.drop_fraction},
          {"flat_sigmas", c.flat_sigmas},
          {"run_fss", c.run_fss},
          {"fss", to_json(c.fss)},
          {"two_nn", to_json(c.two_nn)},
          {"network", to_json(c.network)},
          {"seed", c.seed}};
}

inline json to_json(const ClassificationReport& r) {
  json ids = json::object(), nets = json::object(), reps = json::object();
  for (const auto& [b, e] : r.scan.estimates) ids[to_string(b)] = to_json(e);
  for (const auto& [b, l] : r.networks) nets[to_string(b)] = to_json(l);
  for (const auto& [b, s] : r.repetitions)
    reps[to_string(b)] = {{"duplicate_rows", s.duplicate_rows}, {"repeated_rows", s.repeated_rows}};
  json ties = json::array();
  for (Basis b : r.scan.ties) ties.push_back(to_string(b));
  json path = json::array();
  for (const auto& s : r.path) path.push_back({{"decision", s.decision}, {"evidence", s.evidence}});
  json trace = nullptr;
  if (r.trace) {
    json pts = json::array();
    for (const auto& p : r.trace->points)
      pts.push_back({{"level", p.level},
                     {"chain_length", p.chain_length},
                     {"estimate", p.estimate ? to_json(*p.estimate) : json(nullptr)},
                     {"failure", p.failure.empty() ? json(nullptr) : json(p.failure)}});
    trace = {{"basis", to_string(r.trace->basis)}, {"base_length", r.trace->base_length}, {"points", pts}};
  }
  json decision = nullptr;
  if (r.trace_decision) {
    const char* v = r.trace_decision->verdict == TraceVerdict::Drop   ? "drop"
                    : r.trace_decision->verdict == TraceVerdict::Flat ? "flat"
                                                                      : "inconclusive";
    decision = {{"verdict", v},
                {"l_star", r.trace_decision->l_star ? json(*r.trace_decision->l_star) : json(nullptr)},
                {"evidence", r.trace_decision->evidence}};
  }
  return {{"label", to_string(r.label)},
          {"minimal_basis", to_string(r.scan.minimal)},
          {"basis_ties", ties},
          {"intrinsic_dimension", ids},
          {"networks", nets},
          {"repetitions", reps},
          {"cluster_sizes", r.cluster_sizes},
          {"fss", r.fss ? to_json(*r.fss) : json(nullptr)},
          {"decimation_trace", trace},
          {"trace_decision", decision},
          {"l_star", r.l_star ? json(*r.l_star) : json(nullptr)},
          {"order_support", r.order_support ? json(*r.order_support) : json(nullptr)},
          {"path", path},
          {"notes", r.notes},
          {"classifier", to_json(r.config)}};
}

inline json ground_state_summary(const GroundStateRecord& rec) {
  json runs = json::array();
  for (std::size_t k = 0; k < rec.runs.size(); ++k)
    runs.push_back({{"dmrg_seed", rec.seeds.at(k)},
                    {"energy", rec.runs[k].energy},
                    {"sweeps", rec.runs[k].sweeps},
                    {"max_discarded_weight", rec.runs[k].max_discarded_weight}});
  return {{"L", rec.model.length}, {"parity", rec.parity}, {"collapsed", rec.collapsed}, {"note", rec.note}, {"runs", runs}};
}

/// One-line terminal verdict.
inline std::string verdict_line(const ClassificationReport& r) {
  std::string s = "verdict: " + to_string(r.label) + " (minimal basis " + to_string(r.scan.minimal) + ", network " +
                  to_string(r.networks.at(r.scan.minimal).type);
  if (r.l_star) s += ", l* = " + std::to_string(*r.l_star);
  if (r.order_support) s += ", K <= " + std::to_string(*r.order_support);
  return s + ")";
}

}  // namespace snapnet
