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

#include "routedqc/tensor.hpp"

namespace rqc {

/// Key of one internal control operator: the agents applied before k, the
/// agent k whose output the operator consumes, and the agent (or F) it
/// feeds. k == 0 encodes the initial slot (nothing applied yet); ell == 0
/// encodes the final transfer into F.
struct OpKey {
  std::vector<int> k_prev;  // sorted, without k
  int k = 0;
  int ell = 0;

  friend bool operator<(const OpKey& a, const OpKey& b) {
    return std::tie(a.k_prev, a.k, a.ell) < std::tie(b.k_prev, b.k, b.ell);
  }
  friend bool operator==(const OpKey& a, const OpKey& b) {
    return a.k_prev == b.k_prev && a.k == b.k && a.ell == b.ell;
  }
  std::string str() const {
    std::ostringstream os;
    os << "V[" << IndexValue::agents(k_prev).str() << "," << k << "->"
       << (ell == 0 ? std::string("F") : std::to_string(ell)) << "]";
    return os.str();
  }
};

/// A slot of the layered isometry structure: (K_n \ k, k). The blocks of a
/// slot jointly form one column block of the n-th internal isometry.
struct SlotKey {
  std::vector<int> k_prev;
  int k = 0;  // 0 for the initial slot

  friend bool operator<(const SlotKey& a, const SlotKey& b) {
    return std::tie(a.k_prev, a.k) < std::tie(b.k_prev, b.k);
  }
  std::string str() const {
    return "(" + IndexValue::agents(k_prev).str() + "," +
           (k == 0 ? std::string("0") : std::to_string(k)) + ")";
  }
};

/**
 * Dimensions and internal operator blocks of an N-slot quantum circuit with
 * quantum control of causal order. Absent keys denote zero blocks.
 */
struct QcqcSpec {
  std::string name;
  int n_agents = 0;
  int64_t d_P = 1, d_F = 1, d_AI = 2, d_AO = 2;
  std::vector<int64_t> d_alpha;  // d_alpha[n-1] = dim of alpha_n, n = 1..N
  std::map<OpKey, Matrix> ops;

  int64_t alpha_dim(int n) const {  // n in 1..N
    if (n < 1 || n > n_agents) throw Error("DimMismatch", "alpha index");
    return d_alpha[n - 1];
  }

  /// Expected shape of the block for `key` (rows, cols).
  std::pair<int64_t, int64_t> block_shape(const OpKey& key) const {
    int n = static_cast<int>(key.k_prev.size()) + (key.k == 0 ? 0 : 1);
    int64_t cols = n == 0 ? d_P : d_AO * alpha_dim(n);
    int64_t rows = key.ell == 0 ? d_F : d_AI * alpha_dim(n + 1);
    return {rows, cols};
  }

  const Matrix* block(const OpKey& key) const {
    auto it = ops.find(key);
    return it == ops.end() ? nullptr : &it->second;
  }

  void set_block(const OpKey& key, Matrix m) {
    auto [rows, cols] = block_shape(key);
    if (m.rows != rows || m.cols != cols)
      throw Error("DimMismatch", "block " + key.str() + " has shape " +
                                     std::to_string(m.rows) + "x" +
                                     std::to_string(m.cols) + ", expected " +
                                     std::to_string(rows) + "x" +
                                     std::to_string(cols));
    ops[key] = std::move(m);
  }

  /// All valid slots: the initial one, every (K_n\k, k) with 1 <= n <= N.
  std::vector<SlotKey> slots() const {
    std::vector<SlotKey> out;
    out.push_back({{}, 0});
    for (int n = 1; n <= n_agents; ++n)
      for (const auto& kn : subsets_of_size(n_agents, n))
        for (int k : kn) {
          std::vector<int> prev;
          for (int j : kn)
            if (j != k) prev.push_back(j);
          out.push_back({prev, k});
        }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Successor labels of a slot: agents not yet applied, or 0 (=F) if none.
  std::vector<int> successors(const SlotKey& s) const {
    std::vector<int> used = s.k_prev;
    if (s.k != 0) used.push_back(s.k);
    if (static_cast<int>(used.size()) == n_agents) return {0};
    std::vector<int> out;
    for (int l = 1; l <= n_agents; ++l)
      if (std::find(used.begin(), used.end(), l) == used.end())
        out.push_back(l);
    return out;
  }

  void validate_dims() const {
    if (n_agents < 1) throw Error("DimMismatch", "need at least one agent");
    if (static_cast<int>(d_alpha.size()) != n_agents)
      throw Error("DimMismatch", "d_alpha must list alpha_1..alpha_N");
    for (int64_t d : {d_P, d_F, d_AI, d_AO})
      if (d < 1) throw Error("DimMismatch", "dimensions must be positive");
    for (int64_t d : d_alpha)
      if (d < 1) throw Error("DimMismatch", "dimensions must be positive");
    for (const auto& [key, m] : ops) {
      if (key.k == 0 && !key.k_prev.empty())
        throw Error("DimMismatch", "initial slot must have empty history");
      if (key.k != 0) {
        if (key.k < 1 || key.k > n_agents ||
            std::find(key.k_prev.begin(), key.k_prev.end(), key.k) !=
                key.k_prev.end())
          throw Error("DimMismatch", "bad op key " + key.str());
      }
      std::vector<int> used = key.k_prev;
      if (key.k != 0) used.push_back(key.k);
      if (key.ell == 0) {
        if (static_cast<int>(used.size()) != n_agents)
          throw Error("DimMismatch", "final block before all agents acted");
      } else if (key.ell < 1 || key.ell > n_agents ||
                 std::find(used.begin(), used.end(), key.ell) != used.end()) {
        throw Error("DimMismatch", "bad successor in " + key.str());
      }
      auto [rows, cols] = block_shape(key);
      if (m.rows != rows || m.cols != cols)
        throw Error("DimMismatch", "block " + key.str() + " misshapen");
    }
  }
};

enum class SlotStatus { Pass, Vacuous, Fail };

struct SlotReport {
  SlotKey slot;
  SlotStatus status;
  double deviation;  // Frobenius distance to the closer of 1 and 0
};

struct SpecReport {
  std::vector<SlotReport> slots;
  // Pairs of final slots whose blocks into F have overlapping ranges.
  std::vector<std::string> final_overlaps;
  bool ok = false;

  std::string summary() const {
    std::ostringstream os;
    int fails = 0, vacuous = 0;
    for (const auto& s : slots) {
      if (s.status == SlotStatus::Fail) {
        ++fails;
        os << "  slot " << s.slot.str() << ": completeness sum off by "
           << s.deviation << "\n";
      } else if (s.status == SlotStatus::Vacuous) {
        ++vacuous;
      }
    }
    for (const auto& f : final_overlaps) os << "  " << f << "\n";
    std::ostringstream head;
    head << (ok ? "spec valid" : "spec INVALID") << " (" << slots.size()
         << " slots, " << vacuous << " vacuous, " << fails << " failing, "
         << final_overlaps.size() << " final overlaps)\n"
         << os.str();
    return head.str();
  }
};

/**
 * Checks the layered isometry conditions. Per slot (K_n\k, k), the sum over
 * successors l of V^dag V must be the identity on the slot's input space
 * (the successor tag keeps different l orthogonal). The final transfers
 * into F carry no tag, so the blocks of distinct last agents must moreover
 * have mutually orthogonal ranges. A slot whose blocks are all zero is
 * reported as vacuous (an intentionally unreachable configuration), not as
 * a failure.
 */
inline SpecReport validate_spec(const QcqcSpec& s,
                                double atol = kDefaultAtol) {
  s.validate_dims();
  SpecReport rep;
  rep.ok = true;
  for (const auto& slot : s.slots()) {
    int64_t din = slot.k == 0
                      ? s.d_P
                      : s.d_AO * s.alpha_dim(static_cast<int>(
                                     slot.k_prev.size()) + 1);
    Matrix sum(din, din);
    for (int l : s.successors(slot)) {
      const Matrix* m = s.block({slot.k_prev, slot.k, l});
      if (!m) continue;
      Matrix c = m->dagger() * (*m);
      for (size_t i = 0; i < sum.a.size(); ++i) sum.a[i] += c.a[i];
    }
    double to_id = sum.max_abs_diff(Matrix::identity(din));
    double to_zero = 0;
    for (const auto& v : sum.a) to_zero = std::max(to_zero, std::abs(v));
    SlotReport sr;
    sr.slot = slot;
    if (to_id <= atol) {
      sr.status = SlotStatus::Pass;
      sr.deviation = to_id;
    } else if (to_zero <= atol) {
      sr.status = SlotStatus::Vacuous;
      sr.deviation = to_zero;
    } else {
      sr.status = SlotStatus::Fail;
      sr.deviation = std::min(to_id, to_zero);
      rep.ok = false;
    }
    rep.slots.push_back(std::move(sr));
  }
  // Cross condition on the final layer.
  std::vector<std::pair<SlotKey, const Matrix*>> finals;
  for (const auto& [key, m] : s.ops)
    if (key.ell == 0) finals.push_back({{key.k_prev, key.k}, &m});
  for (size_t i = 0; i < finals.size(); ++i)
    for (size_t j = i + 1; j < finals.size(); ++j) {
      Matrix cross = finals[i].second->dagger() * (*finals[j].second);
      double m = 0;
      for (const auto& v : cross.a) m = std::max(m, std::abs(v));
      if (m > atol) {
        rep.final_overlaps.push_back(
            "final blocks " + finals[i].first.str() + " and " +
            finals[j].first.str() + " overlap (|V^dag V'| = " +
            std::to_string(m) + ")");
        rep.ok = false;
      }
    }
  return rep;
}

inline std::string agent_in_label(int k) {
  return "A" + std::to_string(k) + "I";
}
inline std::string agent_out_label(int k) {
  return "A" + std::to_string(k) + "O";
}

/// The Choi process vector over P, A_1^I, A_1^O, ..., A_N^I, A_N^O, F.
struct ProcessVector {
  ChoiTensor w;
};

/**
 * Builds |w> as the sum over all agent orderings of the linked chain of
 * internal operator Chois, contracting the ancilla systems along the chain.
 * Permutations are summed in lexicographic order.
 */
inline ProcessVector process_vector(const QcqcSpec& s, bool force = false) {
  if (!force) {
    SpecReport rep = validate_spec(s);
    if (!rep.ok)
      throw Error("DimMismatch",
                  "spec fails the completeness check; " + rep.summary());
  }
  const int N = s.n_agents;
  std::vector<SectoredSpace> final_systems;
  final_systems.push_back(SectoredSpace::unsectored("P", s.d_P));
  final_systems.push_back(SectoredSpace::unsectored("F", s.d_F));
  for (int k = 1; k <= N; ++k) {
    final_systems.push_back(
        SectoredSpace::unsectored(agent_in_label(k), s.d_AI));
    final_systems.push_back(
        SectoredSpace::unsectored(agent_out_label(k), s.d_AO));
  }
  ChoiTensor sum(final_systems);

  auto alpha_space = [&](int n) {
    return SectoredSpace::unsectored("al" + std::to_string(n),
                                     s.alpha_dim(n));
  };

  std::vector<int> perm(N);
  for (int i = 0; i < N; ++i) perm[i] = i + 1;
  do {
    // Assemble the chain for this ordering; skip as soon as a block is zero.
    bool dead = false;
    std::vector<ChoiTensor> terms;
    {
      const Matrix* m = s.block({{}, 0, perm[0]});
      if (!m) {
        dead = true;
      } else {
        terms.push_back(choi_of_matrix(
            *m, {SectoredSpace::unsectored("P", s.d_P)},
            {SectoredSpace::unsectored(agent_in_label(perm[0]), s.d_AI),
             alpha_space(1)}));
      }
    }
    for (int n = 1; n <= N - 1 && !dead; ++n) {
      std::vector<int> prev(perm.begin(), perm.begin() + (n - 1));
      std::sort(prev.begin(), prev.end());
      const Matrix* m = s.block({prev, perm[n - 1], perm[n]});
      if (!m) {
        dead = true;
        break;
      }
      terms.push_back(choi_of_matrix(
          *m,
          {SectoredSpace::unsectored(agent_out_label(perm[n - 1]), s.d_AO),
           alpha_space(n)},
          {SectoredSpace::unsectored(agent_in_label(perm[n]), s.d_AI),
           alpha_space(n + 1)}));
    }
    if (!dead) {
      std::vector<int> prev(perm.begin(), perm.end() - 1);
      std::sort(prev.begin(), prev.end());
      const Matrix* m = s.block({prev, perm[N - 1], 0});
      if (!m) {
        dead = true;
      } else {
        terms.push_back(choi_of_matrix(
            *m,
            {SectoredSpace::unsectored(agent_out_label(perm[N - 1]), s.d_AO),
             alpha_space(N)},
            {SectoredSpace::unsectored("F", s.d_F)}));
      }
    }
    if (dead) continue;
    ChoiTensor term = terms[0];
    for (size_t i = 1; i < terms.size(); ++i)
      term = link_product(term, terms[i]);
    sum += term;
  } while (std::next_permutation(perm.begin(), perm.end()));

  return ProcessVector{std::move(sum)};
}

/**
 * Plugs one Choi tensor per agent (over A_k^I -> A_k^O, ancillas allowed as
 * extra systems) into the process vector, yielding the induced map's Choi.
 */
inline ChoiTensor compose_with_agents(const ProcessVector& w,
                                      const std::vector<ChoiTensor>& agents) {
  ChoiTensor acc = w.w;
  for (size_t i = 0; i < agents.size(); ++i) {
    int k = static_cast<int>(i) + 1;
    if (agents[i].system_index(agent_in_label(k)) < 0 ||
        agents[i].system_index(agent_out_label(k)) < 0)
      throw Error("SpaceMismatch",
                  "agent " + std::to_string(k) + " tensor lacks its systems");
    acc = link_product(acc, agents[i]);
  }
  return acc;
}

/**
 * Mixed-process matrix: splits F = F' (x) alpha_F (with F basis index
 * f = f' * d_alphaF + a) and returns Tr_alphaF |w><w| as a dense matrix over
 * the remaining systems in canonical order.
 */
inline Matrix mixed_process_matrix(const ProcessVector& w, int64_t d_alphaF) {
  const ChoiTensor& t = w.w;
  int fi = t.system_index("F");
  if (fi < 0) throw Error("SpaceMismatch", "process vector lacks F");
  int64_t d_F = t.systems()[fi].total_dim();
  if (d_alphaF < 1 || d_F % d_alphaF != 0)
    throw Error("DimMismatch", "F does not factor by the given alpha_F dim");
  int64_t reduced_total = static_cast<int64_t>(t.total_dim()) / d_alphaF;

  // Reduced flat index: same system order, F replaced by F' = F / alpha_F.
  std::vector<int64_t> dims;
  for (const auto& sp : t.systems()) dims.push_back(sp.total_dim());
  auto reduced_flat = [&](const std::vector<int64_t>& idx, int64_t fprime) {
    int64_t f = 0;
    for (size_t i = 0; i < dims.size(); ++i) {
      int64_t d = static_cast<int>(i) == fi ? dims[i] / d_alphaF : dims[i];
      int64_t x = static_cast<int>(i) == fi ? fprime : idx[i];
      f = f * d + x;
    }
    return f;
  };

  // Bucket amplitudes by the traced alpha_F index.
  std::map<int64_t, std::vector<std::pair<int64_t, Complex>>> buckets;
  for (const auto& [f, v] : t.entries()) {
    auto idx = t.unflat(f);
    int64_t a = idx[fi] % d_alphaF;
    int64_t fprime = idx[fi] / d_alphaF;
    buckets[a].push_back({reduced_flat(idx, fprime), v});
  }
  Matrix W(reduced_total, reduced_total);
  for (const auto& [a, entries] : buckets)
    for (const auto& [i, vi] : entries)
      for (const auto& [j, vj] : entries)
        W.at(i, j) += vi * std::conj(vj);
  return W;
}

/// Positive semidefiniteness via pivoted-free LDL^H with tolerance.
inline bool is_psd(const Matrix& m, double tol = 1e-9) {
  if (m.rows != m.cols) return false;
  int64_t n = m.rows;
  // Hermiticity first.
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < i; ++j)
      if (std::abs(m.at(i, j) - std::conj(m.at(j, i))) > tol) return false;
  Matrix a = m;
  for (int64_t k = 0; k < n; ++k) {
    double d = a.at(k, k).real();
    if (d < -tol) return false;
    if (d <= tol) {
      // Zero pivot: the whole row/col must vanish.
      for (int64_t j = k + 1; j < n; ++j)
        if (std::abs(a.at(k, j)) > 10 * tol) return false;
      continue;
    }
    for (int64_t i = k + 1; i < n; ++i) {
      Complex lik = a.at(i, k) / d;
      for (int64_t j = k + 1; j < n; ++j)
        a.at(i, j) -= lik * std::conj(a.at(j, k));
    }
  }
  return true;
}

}  // namespace rqc
