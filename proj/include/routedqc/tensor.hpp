// Copyright 2026 The routedqc authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>

#include "routedqc/relation.hpp"

namespace rqc {

using Complex = std::complex<double>;

// Flat amplitude index. Intermediate link products can span dozens of wire
// systems whose formal dimension product exceeds 2^64, so 128 bits are used.
using FlatIndex = unsigned __int128;

inline constexpr double kDefaultAtol = 1e-9;

/// A labelled Hilbert space split into ordered sectors keyed by index values.
struct SectoredSpace {
  std::string label;
  std::vector<std::pair<IndexValue, int64_t>> sectors;  // (value, dim >= 1)

  static SectoredSpace unsectored(std::string label, int64_t dim) {
    return SectoredSpace{std::move(label),
                         {{IndexValue::atom("full"), dim}}};
  }

  int64_t total_dim() const {
    int64_t d = 0;
    for (const auto& [v, dim] : sectors) d += dim;
    return d;
  }

  int sector_index(const IndexValue& v) const {
    for (size_t i = 0; i < sectors.size(); ++i)
      if (sectors[i].first == v) return static_cast<int>(i);
    return -1;
  }

  int64_t sector_offset(int sector) const {
    int64_t off = 0;
    for (int i = 0; i < sector; ++i) off += sectors[i].second;
    return off;
  }

  /// Sector index containing the given basis index.
  int sector_of(int64_t basis) const {
    for (size_t i = 0; i < sectors.size(); ++i) {
      if (basis < sectors[i].second) return static_cast<int>(i);
      basis -= sectors[i].second;
    }
    throw Error("ShapeMismatch", "basis index out of range on " + label);
  }

  void validate() const {
    if (sectors.empty())
      throw Error("ShapeMismatch", "space " + label + " has no sectors");
    std::set<IndexValue> seen;
    for (const auto& [v, dim] : sectors) {
      if (dim < 1) throw Error("ShapeMismatch", "sector dim < 1 on " + label);
      if (!seen.insert(v).second)
        throw Error("ShapeMismatch", "duplicate sector on " + label);
    }
  }

  friend bool operator==(const SectoredSpace& a, const SectoredSpace& b) {
    return a.label == b.label && a.sectors == b.sectors;
  }
};

struct Matrix {
  int64_t rows = 0, cols = 0;
  std::vector<Complex> a;  // row-major

  Matrix() = default;
  Matrix(int64_t r, int64_t c) : rows(r), cols(c), a(r * c, Complex(0, 0)) {}
  Complex& at(int64_t r, int64_t c) { return a[r * cols + c]; }
  const Complex& at(int64_t r, int64_t c) const { return a[r * cols + c]; }

  static Matrix identity(int64_t n) {
    Matrix m(n, n);
    for (int64_t i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  Matrix dagger() const {
    Matrix m(cols, rows);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < cols; ++c) m.at(c, r) = std::conj(at(r, c));
    return m;
  }

  Matrix operator*(const Matrix& o) const {
    if (cols != o.rows) throw Error("ShapeMismatch", "matrix product");
    Matrix m(rows, o.cols);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t k = 0; k < cols; ++k) {
        Complex v = at(r, k);
        if (v == Complex(0, 0)) continue;
        for (int64_t c = 0; c < o.cols; ++c) m.at(r, c) += v * o.at(k, c);
      }
    return m;
  }

  double max_abs_diff(const Matrix& o) const {
    if (rows != o.rows || cols != o.cols)
      throw Error("ShapeMismatch", "matrix comparison");
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i)
      m = std::max(m, std::abs(a[i] - o.a[i]));
    return m;
  }
};

/**
 * A Choi vector: a complex tensor over an ordered list of labelled,
 * sector-decomposed systems. Systems are kept sorted by label; amplitudes
 * are held sparsely (ordered by flat index) with a dense export.
 */
class ChoiTensor {
 public:
  ChoiTensor() = default;

  explicit ChoiTensor(std::vector<SectoredSpace> systems)
      : systems_(std::move(systems)) {
    std::sort(systems_.begin(), systems_.end(),
              [](const SectoredSpace& a, const SectoredSpace& b) {
                return a.label < b.label;
              });
    for (size_t i = 0; i < systems_.size(); ++i) {
      systems_[i].validate();
      if (i && systems_[i].label == systems_[i - 1].label)
        throw Error("SpaceMismatch", "duplicate system " + systems_[i].label);
    }
    strides_.assign(systems_.size(), 1);
    FlatIndex total = 1;
    for (size_t i = systems_.size(); i-- > 0;) {
      strides_[i] = total;
      FlatIndex d = static_cast<FlatIndex>(systems_[i].total_dim());
      if (total > (FlatIndex(1) << 120) / (d > 0 ? d : 1))
        throw Error("ShapeMismatch", "tensor too large");
      total *= d;
    }
    total_ = total;
  }

  const std::vector<SectoredSpace>& systems() const { return systems_; }
  FlatIndex total_dim() const { return total_; }
  const std::map<FlatIndex, Complex>& entries() const { return amps_; }

  int system_index(const std::string& label) const {
    for (size_t i = 0; i < systems_.size(); ++i)
      if (systems_[i].label == label) return static_cast<int>(i);
    return -1;
  }

  FlatIndex flat(const std::vector<int64_t>& idx) const {
    if (idx.size() != systems_.size())
      throw Error("ShapeMismatch", "index arity");
    FlatIndex f = 0;
    for (size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] < 0 || idx[i] >= systems_[i].total_dim())
        throw Error("ShapeMismatch", "index out of range");
      f += static_cast<FlatIndex>(idx[i]) * strides_[i];
    }
    return f;
  }

  std::vector<int64_t> unflat(FlatIndex f) const {
    std::vector<int64_t> idx(systems_.size());
    for (size_t i = 0; i < systems_.size(); ++i) {
      idx[i] = static_cast<int64_t>(f / strides_[i]);
      f %= strides_[i];
    }
    return idx;
  }

  void add_amp(FlatIndex f, Complex v) {
    if (v == Complex(0, 0)) return;
    auto [it, inserted] = amps_.emplace(f, v);
    if (!inserted) {
      it->second += v;
      if (it->second == Complex(0, 0)) amps_.erase(it);
    }
  }
  void add_amp(const std::vector<int64_t>& idx, Complex v) {
    add_amp(flat(idx), v);
  }

  Complex amp(FlatIndex f) const {
    auto it = amps_.find(f);
    return it == amps_.end() ? Complex(0, 0) : it->second;
  }
  Complex amp(const std::vector<int64_t>& idx) const { return amp(flat(idx)); }

  std::vector<Complex> to_dense() const {
    if (total_ > (FlatIndex(1) << 24))
      throw Error("ShapeMismatch", "tensor too large for dense export");
    std::vector<Complex> d(static_cast<size_t>(total_), Complex(0, 0));
    for (const auto& [f, v] : amps_) d[static_cast<size_t>(f)] = v;
    return d;
  }

  double norm2() const {  // <t|t>
    double n = 0;
    for (const auto& [f, v] : amps_) n += std::norm(v);
    return n;
  }

  ChoiTensor& operator*=(Complex c) {
    if (c == Complex(0, 0)) {
      amps_.clear();
      return *this;
    }
    for (auto& [f, v] : amps_) v *= c;
    return *this;
  }

  /// Elementwise sum; systems must agree exactly.
  ChoiTensor& operator+=(const ChoiTensor& o) {
    if (!(systems_size_equal(o)))
      throw Error("SpaceMismatch", "tensor sum over different systems");
    for (const auto& [f, v] : o.amps_) add_amp(f, v);
    return *this;
  }

  bool systems_size_equal(const ChoiTensor& o) const {
    if (systems_.size() != o.systems_.size()) return false;
    for (size_t i = 0; i < systems_.size(); ++i)
      if (systems_[i].label != o.systems_[i].label ||
          systems_[i].total_dim() != o.systems_[i].total_dim())
        return false;
    return true;
  }

  /// Renames a system, keeping its sector structure.
  void relabel(const std::string& from, const std::string& to) {
    int i = system_index(from);
    if (i < 0) throw Error("SpaceMismatch", "no system " + from);
    std::vector<SectoredSpace> systems = systems_;
    systems[i].label = to;
    ChoiTensor renamed(systems);
    // Flat indices are preserved only if the sort order is unchanged;
    // remap explicitly to be safe.
    for (const auto& [f, v] : amps_) {
      auto idx = unflat(f);
      std::vector<int64_t> nidx(idx.size());
      for (size_t s = 0; s < systems_.size(); ++s) {
        const std::string& l = s == static_cast<size_t>(i)
                                   ? to
                                   : systems_[s].label;
        nidx[renamed.system_index(l)] = idx[s];
      }
      renamed.add_amp(nidx, v);
    }
    *this = std::move(renamed);
  }

 private:
  std::vector<SectoredSpace> systems_;
  std::vector<FlatIndex> strides_;
  FlatIndex total_ = 1;
  std::map<FlatIndex, Complex> amps_;
};

/// <a|b> with conjugation on `a`; systems must agree by label and dims.
inline Complex inner_product(const ChoiTensor& a, const ChoiTensor& b) {
  if (!a.systems_size_equal(b))
    throw Error("SpaceMismatch", "inner product over different systems");
  Complex s(0, 0);
  for (const auto& [f, v] : a.entries()) s += std::conj(v) * b.amp(f);
  return s;
}

inline double max_abs_diff(const ChoiTensor& a, const ChoiTensor& b) {
  if (!a.systems_size_equal(b))
    throw Error("SpaceMismatch", "comparing tensors over different systems");
  double m = 0;
  for (const auto& [f, v] : a.entries()) m = std::max(m, std::abs(v - b.amp(f)));
  for (const auto& [f, v] : b.entries()) m = std::max(m, std::abs(v - a.amp(f)));
  return m;
}

inline FlatIndex out_stride(const ChoiTensor& t, int system) {
  FlatIndex s = 1;
  for (size_t i = t.systems().size(); i-- > static_cast<size_t>(system) + 1;)
    s *= static_cast<FlatIndex>(t.systems()[i].total_dim());
  return s;
}

/**
 * Pure link product: contracts the systems shared (by label) between the two
 * tensors; with no shared system it is the tensor product. Shared systems
 * must carry identical sector structure.
 */
inline ChoiTensor link_product(const ChoiTensor& a, const ChoiTensor& b) {
  std::vector<int> a_shared, b_shared;
  for (size_t i = 0; i < b.systems().size(); ++i) {
    int ai = a.system_index(b.systems()[i].label);
    if (ai >= 0) {
      if (!(a.systems()[ai] == b.systems()[i]))
        throw Error("SpaceMismatch",
                    "shared system " + b.systems()[i].label +
                        " has mismatched sectors");
      a_shared.push_back(ai);
      b_shared.push_back(static_cast<int>(i));
    }
  }
  std::vector<int> a_keep, b_keep;
  for (size_t i = 0; i < a.systems().size(); ++i)
    if (std::find(a_shared.begin(), a_shared.end(), static_cast<int>(i)) ==
        a_shared.end())
      a_keep.push_back(static_cast<int>(i));
  for (size_t i = 0; i < b.systems().size(); ++i)
    if (std::find(b_shared.begin(), b_shared.end(), static_cast<int>(i)) ==
        b_shared.end())
      b_keep.push_back(static_cast<int>(i));

  std::vector<SectoredSpace> out_systems;
  for (int i : a_keep) out_systems.push_back(a.systems()[i]);
  for (int i : b_keep) out_systems.push_back(b.systems()[i]);
  ChoiTensor out(out_systems);

  // Shared-key strides (arbitrary but consistent between the two sides).
  std::vector<FlatIndex> skey_stride(a_shared.size(), 1);
  {
    FlatIndex s = 1;
    for (size_t i = a_shared.size(); i-- > 0;) {
      skey_stride[i] = s;
      s *= static_cast<FlatIndex>(a.systems()[a_shared[i]].total_dim());
    }
  }

  // Bucket b's entries by shared key.
  std::map<FlatIndex, std::vector<std::pair<FlatIndex, Complex>>> buckets;
  for (const auto& [f, v] : b.entries()) {
    auto idx = b.unflat(f);
    FlatIndex key = 0;
    for (size_t i = 0; i < b_shared.size(); ++i)
      key += static_cast<FlatIndex>(idx[b_shared[i]]) * skey_stride[i];
    // Remaining part encoded as the positions in the result tensor.
    FlatIndex part = 0;
    for (size_t i = 0; i < b_keep.size(); ++i) {
      int oi = out.system_index(b.systems()[b_keep[i]].label);
      part += static_cast<FlatIndex>(idx[b_keep[i]]) * out_stride(out, oi);
    }
    buckets[key].push_back({part, v});
  }

  for (const auto& [f, v] : a.entries()) {
    auto idx = a.unflat(f);
    FlatIndex key = 0;
    for (size_t i = 0; i < a_shared.size(); ++i)
      key += static_cast<FlatIndex>(idx[a_shared[i]]) * skey_stride[i];
    auto it = buckets.find(key);
    if (it == buckets.end()) continue;
    FlatIndex apart = 0;
    for (size_t i = 0; i < a_keep.size(); ++i) {
      int oi = out.system_index(a.systems()[a_keep[i]].label);
      apart += static_cast<FlatIndex>(idx[a_keep[i]]) * out_stride(out, oi);
    }
    for (const auto& [bpart, bv] : it->second) out.add_amp(apart + bpart, v * bv);
  }
  return out;
}

/**
 * Choi vector of a matrix: |A> = sum_i |i>^in (x) A|i>^out, with the matrix
 * read over the given system orderings (row index = out, column = in).
 */
inline ChoiTensor choi_of_matrix(const Matrix& m,
                                 const std::vector<SectoredSpace>& in_systems,
                                 const std::vector<SectoredSpace>& out_systems) {
  int64_t din = 1, dout = 1;
  for (const auto& s : in_systems) din *= s.total_dim();
  for (const auto& s : out_systems) dout *= s.total_dim();
  if (m.rows != dout || m.cols != din)
    throw Error("ShapeMismatch", "matrix shape does not match systems");
  std::vector<SectoredSpace> all = in_systems;
  all.insert(all.end(), out_systems.begin(), out_systems.end());
  ChoiTensor t(all);

  // Precompute result strides for the given-order in/out digits.
  auto strides_for = [&](const std::vector<SectoredSpace>& systems) {
    std::vector<FlatIndex> st;
    for (const auto& s : systems)
      st.push_back(out_stride(t, t.system_index(s.label)));
    return st;
  };
  auto in_st = strides_for(in_systems);
  auto out_st = strides_for(out_systems);
  auto place = [&](int64_t flat_given, const std::vector<SectoredSpace>& sys,
                   const std::vector<FlatIndex>& st) {
    FlatIndex acc = 0;
    for (size_t i = sys.size(); i-- > 0;) {
      int64_t d = sys[i].total_dim();
      acc += static_cast<FlatIndex>(flat_given % d) * st[i];
      flat_given /= d;
    }
    return acc;
  };
  for (int64_t r = 0; r < m.rows; ++r)
    for (int64_t c = 0; c < m.cols; ++c) {
      Complex v = m.at(r, c);
      if (v == Complex(0, 0)) continue;
      t.add_amp(place(c, in_systems, in_st) + place(r, out_systems, out_st), v);
    }
  return t;
}

/// Inverse of choi_of_matrix for the same system orderings.
inline Matrix matrix_of_choi(const ChoiTensor& t,
                             const std::vector<std::string>& in_labels,
                             const std::vector<std::string>& out_labels) {
  if (in_labels.size() + out_labels.size() != t.systems().size())
    throw Error("ShapeMismatch", "labels do not partition the systems");
  int64_t din = 1, dout = 1;
  std::vector<int> in_idx, out_idx;
  for (const auto& l : in_labels) {
    int i = t.system_index(l);
    if (i < 0) throw Error("SpaceMismatch", "no system " + l);
    in_idx.push_back(i);
    din *= t.systems()[i].total_dim();
  }
  for (const auto& l : out_labels) {
    int i = t.system_index(l);
    if (i < 0) throw Error("SpaceMismatch", "no system " + l);
    out_idx.push_back(i);
    dout *= t.systems()[i].total_dim();
  }
  Matrix m(dout, din);
  for (const auto& [f, v] : t.entries()) {
    auto idx = t.unflat(f);
    int64_t r = 0, c = 0;
    for (int i : out_idx) r = r * t.systems()[i].total_dim() + idx[i];
    for (int i : in_idx) c = c * t.systems()[i].total_dim() + idx[i];
    m.at(r, c) += v;
  }
  return m;
}

/// Sectorial-constraint check for a Choi tensor against a route.
struct RoutedMapCheck {
  Relation route;
  std::vector<std::string> in_systems;   // labels matching route in-arrows
  std::vector<std::string> out_systems;  // labels matching route out-arrows
};

/**
 * True iff every cross-sector block (k, l) with k not related to l vanishes
 * (all amplitudes below atol). The i-th in/out system corresponds to the
 * i-th (sorted) in/out arrow of the route; sector values must match the
 * arrow alphabets.
 */
inline bool follows_route(const ChoiTensor& t, const RoutedMapCheck& chk,
                          double atol = kDefaultAtol,
                          std::string* offending = nullptr) {
  if (chk.in_systems.size() != chk.route.in_arrows().size() ||
      chk.out_systems.size() != chk.route.out_arrows().size())
    throw Error("SpaceMismatch", "system lists do not match the route");
  std::vector<int> in_idx, out_idx;
  for (const auto& l : chk.in_systems) {
    int i = t.system_index(l);
    if (i < 0) throw Error("SpaceMismatch", "no system " + l);
    in_idx.push_back(i);
  }
  for (const auto& l : chk.out_systems) {
    int i = t.system_index(l);
    if (i < 0) throw Error("SpaceMismatch", "no system " + l);
    out_idx.push_back(i);
  }
  for (const auto& [f, v] : t.entries()) {
    if (std::abs(v) <= atol) continue;
    auto idx = t.unflat(f);
    std::vector<IndexValue> k, l;
    for (int i : in_idx)
      k.push_back(t.systems()[i].sectors[t.systems()[i].sector_of(idx[i])].first);
    for (int i : out_idx)
      l.push_back(t.systems()[i].sectors[t.systems()[i].sector_of(idx[i])].first);
    if (!chk.route.relates(k, l)) {
      if (offending) {
        std::ostringstream os;
        os << "block (";
        for (const auto& x : k) os << x.str();
        os << " -> ";
        for (const auto& x : l) os << x.str();
        os << ") populated with |amp| = " << std::abs(v);
        *offending = os.str();
      }
      return false;
    }
  }
  return true;
}

/**
 * Reshapes the tensor into a matrix M over the given in/out partition and
 * checks M^dag M = P_domain (Frobenius norm <= atol). With `unitary` set it
 * additionally checks M M^dag = P_codomain. The projectors default to the
 * identity; a diagonal 0/1 mask may be supplied for practical subspaces.
 */
inline bool is_isometry(const ChoiTensor& t,
                        const std::vector<std::string>& in_labels,
                        const std::vector<std::string>& out_labels,
                        const std::vector<bool>& domain_mask = {},
                        double atol = kDefaultAtol, bool unitary = false,
                        const std::vector<bool>& codomain_mask = {}) {
  Matrix m = matrix_of_choi(t, in_labels, out_labels);
  Matrix mtm = m.dagger() * m;
  Matrix p = Matrix::identity(m.cols);
  if (!domain_mask.empty()) {
    if (static_cast<int64_t>(domain_mask.size()) != m.cols)
      throw Error("ShapeMismatch", "domain mask size");
    for (int64_t i = 0; i < m.cols; ++i)
      if (!domain_mask[i]) p.at(i, i) = 0;
  }
  double err2 = 0;
  for (int64_t i = 0; i < m.cols; ++i)
    for (int64_t j = 0; j < m.cols; ++j)
      err2 += std::norm(mtm.at(i, j) - p.at(i, j));
  if (std::sqrt(err2) > atol) return false;
  if (unitary) {
    Matrix mmt = m * m.dagger();
    Matrix q = Matrix::identity(m.rows);
    if (!codomain_mask.empty()) {
      if (static_cast<int64_t>(codomain_mask.size()) != m.rows)
        throw Error("ShapeMismatch", "codomain mask size");
      for (int64_t i = 0; i < m.rows; ++i)
        if (!codomain_mask[i]) q.at(i, i) = 0;
    }
    double err2b = 0;
    for (int64_t i = 0; i < m.rows; ++i)
      for (int64_t j = 0; j < m.rows; ++j)
        err2b += std::norm(mmt.at(i, j) - q.at(i, j));
    if (std::sqrt(err2b) > atol) return false;
  }
  return true;
}

/**
 * True iff the reshaped map M satisfies M^dag M = a diagonal 0/1 projector:
 * an isometry on its support, zero elsewhere. Circuits with unreachable
 * configurations flesh nodes with such partial isometries.
 */
inline bool is_partial_isometry(const ChoiTensor& t,
                                const std::vector<std::string>& in_labels,
                                const std::vector<std::string>& out_labels,
                                double atol = kDefaultAtol) {
  Matrix m = matrix_of_choi(t, in_labels, out_labels);
  Matrix mtm = m.dagger() * m;
  for (int64_t i = 0; i < mtm.rows; ++i)
    for (int64_t j = 0; j < mtm.cols; ++j) {
      if (i == j) {
        double d = std::abs(mtm.at(i, j));
        if (std::min(d, std::abs(d - 1.0)) > atol) return false;
      } else if (std::abs(mtm.at(i, j)) > atol) {
        return false;
      }
    }
  return true;
}

/// Identity-channel Choi vector |1>>^{from,to} between isomorphic spaces.
inline ChoiTensor identity_choi(const SectoredSpace& from,
                                const SectoredSpace& to) {
  if (from.total_dim() != to.total_dim())
    throw Error("ShapeMismatch", "identity between different dimensions");
  ChoiTensor t({from, to});
  int fi = t.system_index(from.label);
  int ti = t.system_index(to.label);
  std::vector<int64_t> idx(2);
  for (int64_t i = 0; i < from.total_dim(); ++i) {
    idx[fi] = i;
    idx[ti] = i;
    t.add_amp(idx, Complex(1, 0));
  }
  return t;
}

}  // namespace rqc
