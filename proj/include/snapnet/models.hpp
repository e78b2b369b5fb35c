#pragma once

// Matrix-product-operator representations of the four spin-1/2 chains used
// throughout the toolkit. All chains have open boundaries.
//
//   Ising         H = -sum Z_i Z_{i+1} - h sum X_i
//   ClusterIsing  H = -sum X_i Z_{i+1} X_{i+2} + h sum Y_i Y_{i+1}
//   XXZ           H = J sum (X_i X_{i+1} + Y_i Y_{i+1}) + J_z sum Z_i Z_{i+1}
//   SSH           H = sum_i t_i (a+_i a_{i+1} + h.c.),  t_i = J_A (i odd), J_B (i even)
//
// SSH is stored after the Jordan-Wigner mapping a+_i a_{i+1} + h.c. ->
// (X_i X_{i+1} + Y_i Y_{i+1}) / 2; nearest-neighbour hopping leaves no string.
// Site indices in the comments above are 1-based; code is 0-based.
// Basis index 0 is |up> (Z = +1), index 1 is |down>.

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "snapnet/error.hpp"

namespace snapnet {

enum class ModelFamily { Ising, ClusterIsing, XXZ, SSH };

inline std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::Ising: return "Ising";
    case ModelFamily::ClusterIsing: return "ClusterIsing";
    case ModelFamily::XXZ: return "XXZ";
    case ModelFamily::SSH: return "SSH";
  }
  return "?";
}

inline ModelFamily parse_family(const std::string& name) {
  if (name == "Ising") return ModelFamily::Ising;
  if (name == "ClusterIsing") return ModelFamily::ClusterIsing;
  if (name == "XXZ") return ModelFamily::XXZ;
  if (name == "SSH") return ModelFamily::SSH;
  throw InputError("unknown model family '" + name +
                   "' (expected Ising, ClusterIsing, XXZ or SSH)");
}

/// Parameter names each family requires.
inline std::vector<std::string> required_params(ModelFamily f) {
  switch (f) {
    case ModelFamily::Ising:
    case ModelFamily::ClusterIsing: return {"h"};
    case ModelFamily::XXZ: return {"J", "J_z"};
    case ModelFamily::SSH: return {"J_A", "J_B"};
  }
  return {};
}

struct ModelSpec {
  ModelFamily family = ModelFamily::Ising;
  int length = 0;
  std::map<std::string, double> params;

  double param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw ParameterError("missing parameter '" + name + "'");
    return it->second;
  }

  bool operator==(const ModelSpec&) const = default;
};

inline void validate(const ModelSpec& spec) {
  if (spec.length < 4) throw ShapeError("chain length must be at least 4");
  if (spec.length % 2 != 0)
    throw ShapeError("chain length must be even, got " + std::to_string(spec.length));
  const auto req = required_params(spec.family);
  for (const auto& name : req) {
    const double v = spec.param(name);
    if (!std::isfinite(v))
      throw ParameterError("parameter '" + name + "' is not finite");
  }
  const std::set<std::string> allowed(req.begin(), req.end());
  for (const auto& [name, _] : spec.params)
    if (!allowed.contains(name))
      throw ParameterError("parameter '" + name + "' is not used by " +
                           to_string(spec.family));
}

namespace pauli {
inline Eigen::Matrix2d identity() { return Eigen::Matrix2d::Identity(); }
inline Eigen::Matrix2d x() { return (Eigen::Matrix2d() << 0, 1, 1, 0).finished(); }
inline Eigen::Matrix2d z() { return (Eigen::Matrix2d() << 1, 0, 0, -1).finished(); }
/// i*Y, which is real; Y_i Y_j = -(iY)_i (iY)_j.
inline Eigen::Matrix2d iy() { return (Eigen::Matrix2d() << 0, 1, -1, 0).finished(); }
}  // namespace pauli

/// Rank-4 MPO tensor stored as a (left x right) grid of 2x2 operator
/// blocks; block(a, b)(out, in) = W[a, b, in, out].
struct MpoTensor {
  int left_dim = 1;
  int right_dim = 1;
  std::vector<Eigen::Matrix2d> blocks;
  std::vector<char> nonzero;

  MpoTensor() = default;
  MpoTensor(int left, int right)
      : left_dim(left),
        right_dim(right),
        blocks(static_cast<std::size_t>(left * right), Eigen::Matrix2d::Zero()),
        nonzero(static_cast<std::size_t>(left * right), 0) {}

  const Eigen::Matrix2d& block(int a, int b) const {
    return blocks[static_cast<std::size_t>(a * right_dim + b)];
  }
  bool is_nonzero(int a, int b) const {
    return nonzero[static_cast<std::size_t>(a * right_dim + b)] != 0;
  }
  void add(int a, int b, const Eigen::Matrix2d& op) {
    const auto k = static_cast<std::size_t>(a * right_dim + b);
    blocks[k] += op;
    nonzero[k] = blocks[k].cwiseAbs().maxCoeff() > 0.0 ? 1 : 0;
  }
};

struct Mpo {
  std::vector<MpoTensor> sites;

  int length() const { return static_cast<int>(sites.size()); }
  int max_bond() const {
    int m = 1;
    for (const auto& w : sites) m = std::max({m, w.left_dim, w.right_dim});
    return m;
  }
};

/// A string of single-site operators on consecutive sites, with a
/// coefficient that depends on the first site of the string.
struct LocalTerm {
  std::vector<Eigen::Matrix2d> ops;
  std::vector<double> coeff;  // coeff[i] for a string starting at site i
};

/// Finite-state-automaton MPO for a sum of local strings on an open chain.
/// State 0 is "nothing placed yet", the last state is "string complete",
/// and each string of length m owns m-1 intermediate states. Strings that
/// would run off the right end never reach the final state and drop out.
inline Mpo mpo_from_terms(int length, const std::vector<LocalTerm>& terms) {
  int dim = 2;
  std::vector<int> first_state;
  for (const auto& t : terms) {
    first_state.push_back(dim - 1);
    dim += static_cast<int>(t.ops.size()) - 1;
  }
  const int start = 0;
  const int final = dim - 1;
  Mpo mpo;
  mpo.sites.reserve(static_cast<std::size_t>(length));
  const auto id = pauli::identity();
  for (int i = 0; i < length; ++i) {
    MpoTensor bulk(dim, dim);
    bulk.add(start, start, id);
    bulk.add(final, final, id);
    for (std::size_t p = 0; p < terms.size(); ++p) {
      const auto& t = terms[p];
      const int m = static_cast<int>(t.ops.size());
      const double c = t.coeff[static_cast<std::size_t>(i)];
      if (m == 1) {
        if (c != 0.0) bulk.add(start, final, c * t.ops[0]);
        continue;
      }
      const int s0 = first_state[p];
      if (c != 0.0) bulk.add(start, s0, c * t.ops[0]);
      for (int k = 1; k < m - 1; ++k) bulk.add(s0 + k - 1, s0 + k, t.ops[static_cast<std::size_t>(k)]);
      bulk.add(s0 + m - 2, final, t.ops[static_cast<std::size_t>(m - 1)]);
    }
    const int left = (i == 0) ? 1 : dim;
    const int right = (i == length - 1) ? 1 : dim;
    MpoTensor w(left, right);
    for (int a = 0; a < left; ++a) {
      const int ga = (i == 0) ? start : a;
      for (int b = 0; b < right; ++b) {
        const int gb = (i == length - 1) ? final : b;
        if (bulk.is_nonzero(ga, gb)) w.add(a, b, bulk.block(ga, gb));
      }
    }
    mpo.sites.push_back(std::move(w));
  }
  return mpo;
}

/// MPO of the model Hamiltonian described by `spec`.
inline Mpo build_mpo(const ModelSpec& spec) {
  validate(spec);
  const int n = spec.length;
  const auto un = static_cast<std::size_t>(n);
  auto uniform = [un](double c) { return std::vector<double>(un, c); };
  using namespace pauli;
  std::vector<LocalTerm> terms;
  switch (spec.family) {
    case ModelFamily::Ising: {
      const double h = spec.param("h");
      terms.push_back({{z(), z()}, uniform(-1.0)});
      terms.push_back({{x()}, uniform(-h)});
      break;
    }
    case ModelFamily::ClusterIsing: {
      const double h = spec.param("h");
      terms.push_back({{x(), z(), x()}, uniform(-1.0)});
      terms.push_back({{iy(), iy()}, uniform(-h)});
      break;
    }
    case ModelFamily::XXZ: {
      const double j = spec.param("J");
      const double jz = spec.param("J_z");
      terms.push_back({{x(), x()}, uniform(j)});
      terms.push_back({{iy(), iy()}, uniform(-j)});
      terms.push_back({{z(), z()}, uniform(jz)});
      break;
    }
    case ModelFamily::SSH: {
      const double ja = spec.param("J_A");
      const double jb = spec.param("J_B");
      std::vector<double> t(un);
      for (std::size_t i = 0; i < un; ++i) t[i] = 0.5 * ((i % 2 == 0) ? ja : jb);
      std::vector<double> minus_t(un);
      for (std::size_t i = 0; i < un; ++i) minus_t[i] = -t[i];
      terms.push_back({{x(), x()}, t});
      terms.push_back({{iy(), iy()}, minus_t});
      break;
    }
  }
  return mpo_from_terms(n, terms);
}

/// Dense 2^L x 2^L matrix of an MPO (site 0 is the most significant bit).
/// Intended for small chains only.
inline Eigen::MatrixXd mpo_to_dense(const Mpo& mpo) {
  const int n = mpo.length();
  if (n > 14) throw InputError("mpo_to_dense: chain too long for a dense matrix");
  // partial[a] is the operator on sites [0, i) with open right MPO index a.
  std::vector<Eigen::MatrixXd> partial(1, Eigen::MatrixXd::Ones(1, 1));
  for (const auto& w : mpo.sites) {
    const Eigen::Index dim = partial[0].rows();
    std::vector<Eigen::MatrixXd> next(static_cast<std::size_t>(w.right_dim),
                                      Eigen::MatrixXd::Zero(2 * dim, 2 * dim));
    for (int a = 0; a < w.left_dim; ++a) {
      for (int b = 0; b < w.right_dim; ++b) {
        if (!w.is_nonzero(a, b)) continue;
        const auto& op = w.block(a, b);
        auto& dst = next[static_cast<std::size_t>(b)];
        const auto& src = partial[static_cast<std::size_t>(a)];
        for (Eigen::Index r = 0; r < dim; ++r)
          for (Eigen::Index c = 0; c < dim; ++c) {
            if (src(r, c) == 0.0) continue;
            for (int so = 0; so < 2; ++so)
              for (int si = 0; si < 2; ++si)
                dst(2 * r + so, 2 * c + si) += op(so, si) * src(r, c);
          }
      }
    }
    partial = std::move(next);
  }
  return partial[0];
}

}  // namespace snapnet
