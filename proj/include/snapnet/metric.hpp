#pragma once

// Overlap / Hamming geometry on snapshot rows, exact k-nearest neighbours
// and the noise column that separates repeated configurations.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "snapnet/error.hpp"
#include "snapnet/parallel.hpp"
#include "snapnet/rng.hpp"
#include "snapnet/sampler.hpp"

namespace snapnet {

/// q = sum_i a_i b_i.
inline int overlap(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ShapeError("overlap: rows differ in length");
  int q = 0;
  for (std::size_t i = 0; i < a.size(); ++i) q += a[i] * b[i];
  return q;
}

/// d = (L - q) / 2, the number of differing sites.
inline int hamming(const std::vector<int>& a, const std::vector<int>& b) {
  return (static_cast<int>(a.size()) - overlap(a, b)) / 2;
}

inline int hamming_words(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  int d = 0;
  for (std::size_t w = 0; w < words; ++w) d += std::popcount(a[w] ^ b[w]);
  return d;
}

inline int hamming(const SnapshotDataset& ds, std::size_t r, std::size_t s) {
  return hamming_words(ds.row_words(r), ds.row_words(s), ds.words_per_row());
}

inline int overlap(const SnapshotDataset& ds, std::size_t r, std::size_t s) {
  return ds.length() - 2 * hamming(ds, r, s);
}

/// Snapshot rows plus one non-negative real feature per row.
struct AugmentedDataset {
  SnapshotDataset base;
  std::vector<double> noise;  ///< noise[s] in [0, width]
  double width = 0.0;
  std::size_t duplicate_rows = 0;  ///< rows equal to some earlier row
};

/// Number of rows that repeat an earlier row, and the per-row multiplicity
/// of each row's configuration.
struct RepetitionStats {
  std::size_t duplicate_rows = 0;
  std::size_t repeated_rows = 0;            ///< rows with at least one identical partner
  std::vector<std::size_t> multiplicity;    ///< per row
  std::map<std::size_t, std::size_t> multiplicity_histogram;  ///< multiplicity -> distinct configs
};

namespace detail {
struct WordsHash {
  std::size_t words;
  const SnapshotDataset* ds;
  std::size_t operator()(std::size_t r) const {
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    const auto* p = ds->row_words(r);
    for (std::size_t w = 0; w < words; ++w) h = derive_seed(h, p[w]);
    return static_cast<std::size_t>(h);
  }
};
struct WordsEq {
  std::size_t words;
  const SnapshotDataset* ds;
  bool operator()(std::size_t a, std::size_t b) const {
    return std::equal(ds->row_words(a), ds->row_words(a) + words, ds->row_words(b));
  }
};
}  // namespace detail

/// Groups identical rows. Returns, for each row, the index of the first row
/// carrying the same configuration.
inline std::vector<std::size_t> first_occurrence(const SnapshotDataset& ds) {
  const std::size_t w = ds.words_per_row();
  std::unordered_map<std::size_t, std::size_t, detail::WordsHash, detail::WordsEq> seen(
      ds.rows() * 2 + 1, detail::WordsHash{w, &ds}, detail::WordsEq{w, &ds});
  std::vector<std::size_t> first(ds.rows());
  for (std::size_t r = 0; r < ds.rows(); ++r) first[r] = seen.try_emplace(r, r).first->second;
  return first;
}

inline RepetitionStats repetition_stats(const SnapshotDataset& ds) {
  RepetitionStats st;
  const auto first = first_occurrence(ds);
  std::vector<std::size_t> count(ds.rows(), 0);
  for (std::size_t r = 0; r < ds.rows(); ++r) ++count[first[r]];
  st.multiplicity.resize(ds.rows());
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    st.multiplicity[r] = count[first[r]];
    if (first[r] != r) ++st.duplicate_rows;
    if (st.multiplicity[r] > 1) ++st.repeated_rows;
    if (first[r] == r) ++st.multiplicity_histogram[count[r]];
  }
  return st;
}

/// Appends a uniform [0, w] noise feature with w = c * N_rep / N_s, where
/// N_rep counts rows duplicating an earlier row. w is 0 (and the column
/// identically 0) when there are no duplicates. Requires 0 < c < 1 so that
/// the feature never reorders distinct configurations.
inline AugmentedDataset augment_repetitions(const SnapshotDataset& ds, std::uint64_t seed, double c = 0.5) {
  if (!(c > 0.0 && c < 1.0)) throw InputError("augment_repetitions: constant must lie in (0, 1)");
  AugmentedDataset out;
  out.base = ds;
  out.noise.assign(ds.rows(), 0.0);
  if (ds.rows() == 0) return out;
  const auto first = first_occurrence(ds);
  std::size_t dup = 0;
  for (std::size_t r = 0; r < ds.rows(); ++r) dup += (first[r] != r);
  out.duplicate_rows = dup;
  if (dup == 0) return out;
  out.width = c * static_cast<double>(dup) / static_cast<double>(ds.rows());
  PhiloxStream rng(seed, 0x6e6f697365ull);
  for (auto& x : out.noise) x = out.width * rng.uniform();
  return out;
}

/// Exact n_max nearest neighbours of every row, self excluded. Ties in
/// distance are broken by the smaller row index.
struct NeighborTable {
  std::size_t rows = 0;
  int n_max = 0;
  std::vector<std::uint32_t> index;  ///< rows x n_max
  std::vector<double> distance;      ///< rows x n_max, non-decreasing per row
  std::size_t repeated_rows = 0;     ///< rows with a zero-Hamming partner

  std::uint32_t neighbor(std::size_t r, int k) const { return index[r * static_cast<std::size_t>(n_max) + static_cast<std::size_t>(k)]; }
  double dist(std::size_t r, int k) const { return distance[r * static_cast<std::size_t>(n_max) + static_cast<std::size_t>(k)]; }
};

namespace detail {

/// Shared kNN kernel. Augmented distances sqrt(h^2 + dn^2) with dn < 1 keep
/// the Hamming order between different h values, so only rows up to the
/// Hamming threshold that fills n_max slots need their real distance.
inline NeighborTable knn_impl(const SnapshotDataset& ds, const std::vector<double>* noise, int n_max, int jobs) {
  const std::size_t n = ds.rows();
  if (n_max < 1) throw InputError("knn: n_max must be >= 1");
  if (static_cast<std::size_t>(n_max) >= n)
    throw InputError("knn: n_max (" + std::to_string(n_max) + ") must be smaller than the row count (" +
                     std::to_string(n) + ")");
  if (n > 0xFFFFFFFFull) throw InputError("knn: too many rows");
  NeighborTable t;
  t.rows = n;
  t.n_max = n_max;
  t.index.resize(n * static_cast<std::size_t>(n_max));
  t.distance.resize(n * static_cast<std::size_t>(n_max));
  const std::size_t words = ds.words_per_row();
  const int len = ds.length();
  std::vector<char> repeated(n, 0);
  parallel_chunks(n, jobs, [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint16_t> d(n);
    std::vector<std::size_t> hist(static_cast<std::size_t>(len) + 1);
    std::vector<std::pair<double, std::uint32_t>> cand;
    for (std::size_t r = begin; r < end; ++r) {
      std::fill(hist.begin(), hist.end(), 0);
      const std::uint64_t* a = ds.row_words(r);
      for (std::size_t s = 0; s < n; ++s) {
        const int h = hamming_words(a, ds.row_words(s), words);
        d[s] = static_cast<std::uint16_t>(h);
        ++hist[static_cast<std::size_t>(h)];
      }
      --hist[0];  // self
      repeated[r] = hist[0] > 0;
      std::size_t acc = 0;
      int thr = 0;
      while (acc + hist[static_cast<std::size_t>(thr)] < static_cast<std::size_t>(n_max)) {
        acc += hist[static_cast<std::size_t>(thr)];
        ++thr;
      }
      cand.clear();
      for (std::size_t s = 0; s < n; ++s) {
        if (s == r || d[s] > thr) continue;
        double dist = d[s];
        if (noise) {
          const double dn = (*noise)[s] - (*noise)[r];
          dist = std::sqrt(dist * dist + dn * dn);
        }
        cand.emplace_back(dist, static_cast<std::uint32_t>(s));
      }
      const auto k = static_cast<std::ptrdiff_t>(n_max);
      std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
      for (int j = 0; j < n_max; ++j) {
        const std::size_t o = r * static_cast<std::size_t>(n_max) + static_cast<std::size_t>(j);
        t.distance[o] = cand[static_cast<std::size_t>(j)].first;
        t.index[o] = cand[static_cast<std::size_t>(j)].second;
      }
    }
  });
  for (char c : repeated) t.repeated_rows += (c != 0);
  return t;
}

}  // namespace detail

/// Exact kNN under the Hamming metric.
inline NeighborTable knn(const SnapshotDataset& ds, int n_max, int jobs = 1) {
  return detail::knn_impl(ds, nullptr, n_max, jobs);
}

/// Exact kNN under sqrt(hamming^2 + (noise_r - noise_s)^2).
inline NeighborTable knn(const AugmentedDataset& ads, int n_max, int jobs = 1) {
  if (!(ads.width < 1.0)) throw InputError("knn: noise width must stay below 1");
  if (ads.noise.size() != ads.base.rows()) throw ShapeError("knn: noise column length mismatch");
  return detail::knn_impl(ads.base, &ads.noise, n_max, jobs);
}

}  // namespace snapnet
