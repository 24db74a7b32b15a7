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

#include <random>

#include "routedqc/qcqc.hpp"

namespace rqc {

/// A reference circuit together with its expected structural facts.
struct NamedProcess {
  std::string name;
  QcqcSpec spec;
  std::string notes;
};

/**
 * The quantum switch as a 2-slot circuit: the control qubit in P selects
 * which agent acts first, the target of dimension d flows through both, and
 * the order is recorded in the control part of F. P = control (x) target
 * with basis index c*d + t; F = target (x) record with index t*2 + c.
 */
inline NamedProcess quantum_switch(int64_t d_target = 2) {
  if (d_target < 2) throw Error("DimMismatch", "target dimension >= 2");
  QcqcSpec s;
  s.name = "switch";
  s.n_agents = 2;
  s.d_AI = s.d_AO = d_target;
  s.d_P = 2 * d_target;
  s.d_F = 2 * d_target;
  s.d_alpha = {1, 1};
  // First hop: control value 0 sends the target to agent 1, value 1 to 2.
  for (int k1 = 1; k1 <= 2; ++k1) {
    Matrix m(d_target, 2 * d_target);
    for (int64_t t = 0; t < d_target; ++t)
      m.at(t, (k1 - 1) * d_target + t) = 1;
    s.set_block({{}, 0, k1}, std::move(m));
  }
  // Middle hop: plain transfer between the agents.
  s.set_block({{}, 1, 2}, Matrix::identity(d_target));
  s.set_block({{}, 2, 1}, Matrix::identity(d_target));
  // Final hop: target to F, order record appended (0 = agent 1 was first).
  for (int k2 = 1; k2 <= 2; ++k2) {
    Matrix m(2 * d_target, d_target);
    for (int64_t t = 0; t < d_target; ++t) m.at(t * 2 + (2 - k2), t) = 1;
    std::vector<int> prev{3 - k2};
    s.set_block({prev, k2, 0}, std::move(m));
  }
  NamedProcess p;
  p.name = "switch";
  p.spec = std::move(s);
  p.notes = "coherent two-agent order controlled by a qubit in P";
  return p;
}

/**
 * A three-agent circuit with dynamical causal order: the first agent is
 * chosen coherently, the second is selected by the first agent's output
 * qubit (cyclic successor on |0>, predecessor on |1>). A two-dimensional
 * ancilla records that choice, and the last agent's identity is recorded
 * into F as well, so the final transfers have orthogonal ranges.
 * F = target (x) choice record (x) last-agent record, index (t*2+c)*3+k3-1.
 */
inline NamedProcess grenoble() {
  QcqcSpec s;
  s.name = "grenoble";
  s.n_agents = 3;
  s.d_AI = s.d_AO = 2;
  s.d_P = 1;
  s.d_F = 12;
  s.d_alpha = {1, 1, 2};
  auto next = [](int k) { return k % 3 + 1; };
  auto prev = [](int k) { return (k + 1) % 3 + 1; };
  // Slot 0: uniform superposition of who goes first, fixed input |0>.
  for (int k1 = 1; k1 <= 3; ++k1) {
    Matrix m(2, 1);
    m.at(0, 0) = 1.0 / std::sqrt(3.0);
    s.set_block({{}, 0, k1}, std::move(m));
  }
  // Slot 1: dynamical choice of the second agent by the output basis value.
  for (int k1 = 1; k1 <= 3; ++k1)
    for (int b = 0; b <= 1; ++b) {
      int k2 = b == 0 ? next(k1) : prev(k1);
      Matrix m(2, 2);
      m.at(b, b) = 1;
      s.set_block({{}, k1, k2}, std::move(m));
    }
  // Slot 2: transfer to the remaining agent, recording whether the second
  // agent was the cyclic successor of the first.
  for (int k1 = 1; k1 <= 3; ++k1)
    for (int k2 = 1; k2 <= 3; ++k2) {
      if (k2 == k1) continue;
      int k3 = 6 - k1 - k2;
      int c = k2 == next(k1) ? 0 : 1;
      Matrix m(4, 2);
      for (int64_t t = 0; t < 2; ++t) m.at(t * 2 + c, t) = 1;
      s.set_block({{k1}, k2, k3}, std::move(m));
    }
  // Slot 3: output and records move to F, tagging the final agent.
  for (int k3 = 1; k3 <= 3; ++k3) {
    std::vector<int> prev_set;
    for (int j = 1; j <= 3; ++j)
      if (j != k3) prev_set.push_back(j);
    Matrix m(12, 4);
    for (int64_t x = 0; x < 4; ++x) m.at(x * 3 + (k3 - 1), x) = 1;
    s.set_block({prev_set, k3, 0}, std::move(m));
  }
  NamedProcess p;
  p.name = "grenoble";
  p.spec = std::move(s);
  p.notes = "dynamical order: second agent depends on the first's output";
  return p;
}

/**
 * The 4-agent double-switch circuit: agents 1,2 act first in a coherently
 * controlled order, then 3,4, with the handover amplitude -1/sqrt(2) on
 * (k2 = 2, k3 = 3) acting as a control-basis change, and the parity of the
 * last agent recorded in the alpha_F part of F (F index = t*2 + parity).
 */
inline NamedProcess zurich(int64_t d = 2) {
  QcqcSpec s;
  s.name = "zurich";
  s.n_agents = 4;
  s.d_AI = s.d_AO = d;
  s.d_P = 1;
  s.d_F = 2 * d;
  s.d_alpha = {1, 1, 1, 1};
  for (int k1 : {1, 2}) {
    Matrix m(d, 1);
    m.at(0, 0) = 1.0 / std::sqrt(2.0);
    s.set_block({{}, 0, k1}, std::move(m));
  }
  for (int k1 : {1, 2}) {
    int k2 = 3 - k1;
    s.set_block({{}, k1, k2}, Matrix::identity(d));
  }
  for (int k1 : {1, 2})
    for (int k3 : {3, 4}) {
      int k2 = 3 - k1;
      Matrix m = Matrix::identity(d);
      double sign = (k2 == 2 && k3 == 3) ? -1.0 : 1.0;
      for (auto& v : m.a) v *= sign / std::sqrt(2.0);
      s.set_block({{k1}, k2, k3}, std::move(m));
    }
  for (int k3 : {3, 4}) {
    int k4 = 7 - k3;
    s.set_block({{1, 2}, k3, k4}, Matrix::identity(d));
  }
  for (int k4 : {3, 4}) {
    std::vector<int> prev;
    for (int j = 1; j <= 4; ++j)
      if (j != k4) prev.push_back(j);
    Matrix m(2 * d, d);
    for (int64_t t = 0; t < d; ++t) m.at(t * 2 + (k4 % 2), t) = 1;
    s.set_block({prev, k4, 0}, std::move(m));
  }
  NamedProcess p;
  p.name = "zurich";
  p.spec = std::move(s);
  p.notes = "double switch; middle handover changes the control basis";
  return p;
}

/// Fixed-order circuit: identities along the given permutation only.
inline NamedProcess fixed_order(int N, const std::vector<int>& order,
                                int64_t d = 2) {
  if (static_cast<int>(order.size()) != N)
    throw Error("DimMismatch", "order must list all agents");
  std::vector<int> check = order;
  std::sort(check.begin(), check.end());
  for (int i = 0; i < N; ++i)
    if (check[i] != i + 1)
      throw Error("DimMismatch", "order must be a permutation of 1..N");
  QcqcSpec s;
  s.name = "fixed";
  s.n_agents = N;
  s.d_AI = s.d_AO = d;
  s.d_P = d;
  s.d_F = d;
  s.d_alpha.assign(N, 1);
  s.set_block({{}, 0, order[0]}, Matrix::identity(d));
  std::vector<int> prev;
  for (int i = 0; i + 1 < N; ++i) {
    std::vector<int> sorted_prev = prev;
    s.set_block({sorted_prev, order[i], order[i + 1]}, Matrix::identity(d));
    prev.push_back(order[i]);
    std::sort(prev.begin(), prev.end());
  }
  s.set_block({prev, order[N - 1], 0}, Matrix::identity(d));
  NamedProcess p;
  p.name = "fixed";
  p.spec = std::move(s);
  p.notes = "causally ordered chain";
  return p;
}

namespace detail {

/// Deterministic standard complex Gaussian (Box-Muller on a fixed engine).
inline Complex std_gaussian(std::mt19937_64& rng) {
  // Map to (0,1]; the constant below is 2^-64.
  auto unit = [&]() {
    return (static_cast<double>(rng()) + 1.0) * 5.421010862427522e-20;
  };
  double r = std::sqrt(-2.0 * std::log(unit()));
  double t = 2.0 * 3.14159265358979323846 * unit();
  return {r * std::cos(t), r * std::sin(t)};
}

/// Haar-distributed isometry: QR of a Gaussian matrix via modified
/// Gram-Schmidt with the R diagonal phase fixed to be real positive.
inline Matrix haar_isometry(std::mt19937_64& rng, int64_t rows,
                            int64_t cols) {
  if (rows < cols) throw Error("ShapeMismatch", "isometry needs rows >= cols");
  Matrix m(rows, cols);
  for (auto& v : m.a) v = std_gaussian(rng);
  for (int64_t c = 0; c < cols; ++c) {
    for (int64_t p = 0; p < c; ++p) {
      Complex dot(0, 0);
      for (int64_t r = 0; r < rows; ++r)
        dot += std::conj(m.at(r, p)) * m.at(r, c);
      for (int64_t r = 0; r < rows; ++r) m.at(r, c) -= dot * m.at(r, p);
    }
    double norm = 0;
    for (int64_t r = 0; r < rows; ++r) norm += std::norm(m.at(r, c));
    norm = std::sqrt(norm);
    for (int64_t r = 0; r < rows; ++r) m.at(r, c) /= norm;
    // Fix the phase so that the first nonzero entry of the column is real
    // positive (sign-fixed R diagonal).
    for (int64_t r = 0; r < rows; ++r) {
      if (std::abs(m.at(r, c)) > 1e-12) {
        Complex phase = m.at(r, c) / std::abs(m.at(r, c));
        for (int64_t q = 0; q < rows; ++q) m.at(q, c) /= phase;
        break;
      }
    }
  }
  return m;
}

}  // namespace detail

/**
 * Draws a random circuit: for every slot one joint Haar isometry from the
 * slot input space into the direct sum of its successor spaces, sliced into
 * the per-successor blocks. The whole final layer is one Haar isometry from
 * the direct sum over last agents into F, which keeps the final ranges
 * orthogonal. Always passes the isometry checks; deterministic per seed.
 */
inline NamedProcess random_spec(int N, int64_t d, uint64_t seed) {
  QcqcSpec s;
  s.name = "random-" + std::to_string(seed);
  s.n_agents = N;
  s.d_AI = s.d_AO = d;
  s.d_P = d;
  s.d_F = N * d * 1;  // room for the joint final isometry
  s.d_alpha.assign(N, 1);
  std::mt19937_64 rng(seed);
  for (const auto& slot : s.slots()) {
    auto succ = s.successors(slot);
    if (succ[0] == 0) continue;  // final layer handled jointly below
    int n = static_cast<int>(slot.k_prev.size()) + (slot.k == 0 ? 0 : 1);
    int64_t din = slot.k == 0 ? s.d_P : s.d_AO * s.alpha_dim(n);
    int64_t dout_each = s.d_AI * s.alpha_dim(n + 1);
    Matrix joint = detail::haar_isometry(
        rng, dout_each * static_cast<int64_t>(succ.size()), din);
    for (size_t i = 0; i < succ.size(); ++i) {
      Matrix block(dout_each, din);
      for (int64_t r = 0; r < dout_each; ++r)
        for (int64_t c = 0; c < din; ++c)
          block.at(r, c) = joint.at(static_cast<int64_t>(i) * dout_each + r, c);
      s.set_block({slot.k_prev, slot.k, succ[i]}, std::move(block));
    }
  }
  {
    int64_t din_each = s.d_AO * s.alpha_dim(N);
    Matrix joint = detail::haar_isometry(rng, s.d_F, N * din_each);
    for (int k = 1; k <= N; ++k) {
      std::vector<int> prev;
      for (int j = 1; j <= N; ++j)
        if (j != k) prev.push_back(j);
      Matrix block(s.d_F, din_each);
      for (int64_t r = 0; r < s.d_F; ++r)
        for (int64_t c = 0; c < din_each; ++c)
          block.at(r, c) = joint.at(r, (k - 1) * din_each + c);
      s.set_block({prev, k, 0}, std::move(block));
    }
  }
  NamedProcess p;
  p.name = s.name;
  p.spec = std::move(s);
  p.notes = "Haar-random isometric slots";
  return p;
}

inline std::vector<std::string> catalog_names() {
  return {"switch", "grenoble", "zurich", "fixed2", "fixed3"};
}

inline NamedProcess catalog_process(const std::string& name) {
  if (name == "switch") return quantum_switch();
  if (name == "grenoble") return grenoble();
  if (name == "zurich") return zurich();
  if (name == "fixed2") return fixed_order(2, {1, 2});
  if (name == "fixed3") return fixed_order(3, {1, 2, 3});
  if (name.rfind("random", 0) == 0) {
    // "random<N>:<seed>"
    size_t colon = name.find(':');
    int n = std::stoi(name.substr(6, colon - 6));
    uint64_t seed = colon == std::string::npos
                        ? 1
                        : std::stoull(name.substr(colon + 1));
    return random_spec(n, 2, seed);
  }
  throw Error("InvalidValue", "unknown catalog process " + name);
}

}  // namespace rqc
