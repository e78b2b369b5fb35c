#pragma once

// Snapshot datasets, measurement-basis rotation, perfect sampling and
// parity decimation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "snapnet/error.hpp"
#include "snapnet/models.hpp"
#include "snapnet/mps.hpp"
#include "snapnet/parallel.hpp"
#include "snapnet/rng.hpp"

namespace snapnet {

enum class Basis { X, Y, Z };

inline std::string to_string(Basis b) {
  switch (b) {
    case Basis::X: return "x";
    case Basis::Y: return "y";
    case Basis::Z: return "z";
  }
  return "?";
}

inline Basis parse_basis(const std::string& s) {
  if (s == "x" || s == "X") return Basis::X;
  if (s == "y" || s == "Y") return Basis::Y;
  if (s == "z" || s == "Z") return Basis::Z;
  throw InputError("unknown basis '" + s + "' (expected x, y or z)");
}

inline constexpr Basis kAllBases[] = {Basis::X, Basis::Y, Basis::Z};

/// N_s x L matrix of +-1 outcomes, bit-packed row-major. Bit i % 64 of word
/// i / 64 holds site i; a set bit means -1.
class SnapshotDataset {
 public:
  SnapshotDataset() = default;
  SnapshotDataset(std::size_t rows, int length)
      : rows_(rows), length_(length), words_(words_for(length)), bits_(rows * words_for(length), 0) {
    if (length <= 0) throw ShapeError("dataset: length must be positive");
  }

  static std::size_t words_for(int length) { return (static_cast<std::size_t>(length) + 63) / 64; }

  std::size_t rows() const { return rows_; }
  int length() const { return length_; }
  std::size_t words_per_row() const { return words_; }

  int get(std::size_t row, int site) const {
    const auto w = bits_[row * words_ + static_cast<std::size_t>(site) / 64];
    return ((w >> (site % 64)) & 1u) ? -1 : 1;
  }
  void set(std::size_t row, int site, int value) {
    auto& w = bits_[row * words_ + static_cast<std::size_t>(site) / 64];
    const std::uint64_t mask = std::uint64_t{1} << (site % 64);
    if (value < 0)
      w |= mask;
    else
      w &= ~mask;
  }

  const std::uint64_t* row_words(std::size_t row) const { return bits_.data() + row * words_; }
  std::uint64_t* row_words(std::size_t row) { return bits_.data() + row * words_; }
  const std::vector<std::uint64_t>& bits() const { return bits_; }

  std::vector<int> row(std::size_t r) const {
    std::vector<int> out(static_cast<std::size_t>(length_));
    for (int i = 0; i < length_; ++i) out[static_cast<std::size_t>(i)] = get(r, i);
    return out;
  }

  /// Rows [begin, end) as a new dataset with the same metadata.
  SnapshotDataset slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > rows_) throw InputError("dataset slice out of range");
    SnapshotDataset out = *this;
    out.rows_ = end - begin;
    out.bits_.assign(bits_.begin() + static_cast<std::ptrdiff_t>(begin * words_),
                     bits_.begin() + static_cast<std::ptrdiff_t>(end * words_));
    return out;
  }

  static SnapshotDataset from_rows(const std::vector<std::vector<int>>& rows) {
    if (rows.empty()) throw InputError("dataset: no rows");
    SnapshotDataset ds(rows.size(), static_cast<int>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size()) throw ShapeError("dataset: ragged rows");
      for (std::size_t i = 0; i < rows[r].size(); ++i) {
        const int v = rows[r][i];
        if (v != 1 && v != -1) throw InputError("dataset: entries must be +1 or -1");
        ds.set(r, static_cast<int>(i), v);
      }
    }
    return ds;
  }

  bool same_bits(const SnapshotDataset& o) const {
    return rows_ == o.rows_ && length_ == o.length_ && bits_ == o.bits_;
  }

  // metadata
  Basis basis = Basis::Z;
  int level = 0;                   ///< decimation level
  std::optional<ModelSpec> model;  ///< origin, when known
  std::uint64_t seed = 0;

 private:
  std::size_t rows_ = 0;
  int length_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// Rows of `a` followed by rows of `b`; metadata taken from `a`.
inline SnapshotDataset concatenate(const SnapshotDataset& a, const SnapshotDataset& b) {
  if (a.length() != b.length()) throw ShapeError("concatenate: length mismatch");
  SnapshotDataset out(a.rows() + b.rows(), a.length());
  out.basis = a.basis;
  out.level = a.level;
  out.model = a.model;
  out.seed = a.seed;
  std::copy(a.bits().begin(), a.bits().end(), out.row_words(0));
  if (b.rows() > 0) std::copy(b.bits().begin(), b.bits().end(), out.row_words(a.rows()));
  return out;
}

using AnyMps = std::variant<RealMps, ComplexMps>;

/// Single-site unitary U with U_{k s} = <e_k|s>, where e_0 (e_1) is the +1
/// (-1) eigenvector of the Pauli matrix along `b`:
///   x: (1/sqrt2) [[1, 1], [1, -1]],  y: (1/sqrt2) [[1, -i], [1, i]],  z: identity.
inline Eigen::Matrix2cd basis_unitary(Basis b) {
  const double r = 1.0 / std::sqrt(2.0);
  const cplx i1(0.0, 1.0);
  Eigen::Matrix2cd u;
  switch (b) {
    case Basis::X: u << r, r, r, -r; break;
    case Basis::Y: u << r, -i1 * r, r, i1 * r; break;
    case Basis::Z: u = Eigen::Matrix2cd::Identity(); break;
  }
  return u;
}

namespace detail {
template <class Scalar, class U>
Mps<Scalar> apply_onsite(Mps<Scalar> psi, const U& u) {
  for (auto& a : psi.sites) {
    const auto a0 = a[0];
    const auto a1 = a[1];
    a[0] = u(0, 0) * a0 + u(0, 1) * a1;
    a[1] = u(1, 0) * a0 + u(1, 1) * a1;
  }
  return psi;
}
}  // namespace detail

/// State whose z-basis statistics equal the `b`-basis statistics of psi.
/// Real states stay real for x and z; y produces a complex MPS. The
/// canonical center is preserved (the rotation is an on-site unitary).
template <class Scalar>
AnyMps rotate_basis(const Mps<Scalar>& psi, Basis b) {
  if (b == Basis::Z) return psi;
  if constexpr (std::is_same_v<Scalar, double>) {
    if (b == Basis::X) return detail::apply_onsite(psi, basis_unitary(b).real().eval());
    return detail::apply_onsite(to_complex(psi), basis_unitary(b));
  } else {
    return detail::apply_onsite(psi, basis_unitary(b));
  }
}

inline AnyMps rotate_basis(const AnyMps& psi, Basis b) {
  return std::visit([b](const auto& m) { return rotate_basis(m, b); }, psi);
}

/// Draws N_s z-basis snapshots of psi by sequential conditional sampling.
/// Row r uses Philox stream (seed, r), so rows are independent of `jobs`.
/// psi must be normalized; it is brought to right-canonical form (center 0)
/// on a local copy.
template <class Scalar>
SnapshotDataset perfect_sample(const Mps<Scalar>& psi_in, std::size_t n_samples, std::uint64_t seed,
                               int jobs = 1) {
  if (psi_in.length() == 0) throw ShapeError("perfect_sample: empty state");
  Mps<Scalar> psi = psi_in;
  canonicalize(psi, 0);
  const double nrm = norm(psi);
  if (std::abs(nrm - 1.0) > 1e-8)
    throw NumericalError("perfect_sample: state is not normalized (norm " + std::to_string(nrm) + ")");
  const int n = psi.length();
  SnapshotDataset ds(n_samples, n);
  ds.seed = seed;
  using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  parallel_chunks(n_samples, jobs, [&](std::size_t begin, std::size_t end) {
    RowVec v, w0, w1;
    for (std::size_t r = begin; r < end; ++r) {
      PhiloxStream rng(seed, r);
      v = RowVec::Ones(1);
      for (int i = 0; i < n; ++i) {
        const auto& a = psi.sites[static_cast<std::size_t>(i)];
        w0.noalias() = v * a[0];
        w1.noalias() = v * a[1];
        // with everything to the right isometric, the conditional weights
        // are plain squared norms
        const double p0 = w0.squaredNorm();
        const double p1 = w1.squaredNorm();
        if (!(std::abs(p0 + p1 - 1.0) <= 1e-8))
          throw NumericalError("perfect_sample: conditional probabilities sum to " +
                               std::to_string(p0 + p1) + " at site " + std::to_string(i));
        const bool down = rng.uniform() * (p0 + p1) >= p0;
        if (down) {
          ds.set(r, i, -1);
          v = w1 / std::sqrt(p1);
        } else {
          v = w0 / std::sqrt(p0);
        }
      }
    }
  });
  return ds;
}

inline SnapshotDataset perfect_sample(const AnyMps& psi, std::size_t n_samples, std::uint64_t seed,
                                      int jobs = 1) {
  return std::visit([&](const auto& m) { return perfect_sample(m, n_samples, seed, jobs); }, psi);
}

/// Rotates psi into basis b and samples; fills the basis metadata.
inline SnapshotDataset sample_in_basis(const RealMps& psi, Basis b, std::size_t n_samples,
                                       std::uint64_t seed, int jobs = 1) {
  auto ds = perfect_sample(rotate_basis(psi, b), n_samples, seed, jobs);
  ds.basis = b;
  return ds;
}

/// Replaces each block of 2^steps consecutive sites by the product of its
/// entries (the block parity).
inline SnapshotDataset decimate(const SnapshotDataset& ds, int steps) {
  if (steps < 0) throw InputError("decimate: steps must be >= 0");
  const int block = 1 << steps;
  if (ds.length() % block != 0)
    throw ShapeError("decimate: length " + std::to_string(ds.length()) + " is not divisible by " +
                     std::to_string(block));
  const int out_len = ds.length() / block;
  SnapshotDataset out(ds.rows(), out_len);
  out.basis = ds.basis;
  out.level = ds.level + steps;
  out.model = ds.model;
  out.seed = ds.seed;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const std::uint64_t* src = ds.row_words(r);
    for (int j = 0; j < out_len; ++j) {
      int parity = 0;
      for (int k = j * block; k < (j + 1) * block; ++k)
        parity ^= static_cast<int>((src[k / 64] >> (k % 64)) & 1u);
      if (parity) out.set(r, j, -1);
    }
  }
  return out;
}

}  // namespace snapnet
