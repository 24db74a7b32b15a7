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

#include "routedqc/json_io.hpp"

namespace rqc::testing {

/**
 * Applies the self-adjointness relabelling to the adjoint of the generic
 * graph: V_m -> V_{N-m+2}, arrow values K -> (N\K) u {k} on the arrows of
 * agent k, null -> null, and the open-arrow conventions restored. The result
 * should equal generic_graph(N) exactly.
 */
inline RoutedGraph relabel_generic_adjoint(const RoutedGraph& adj, int N) {
  auto node_map = [&](const NodeId& n) -> NodeId {
    if (n == kOpen || n[0] == 'A') return n;
    int m = std::stoi(n.substr(1));
    return v_node(N - m + 2);
  };
  auto agent_of_arrow = [&](const Arrow& a) -> int {
    const NodeId& an = a.from[0] == 'A' ? a.from : a.to;
    if (an[0] != 'A') return 0;
    return std::stoi(an.substr(1));
  };
  std::vector<int> all;
  for (int k = 1; k <= N; ++k) all.push_back(k);
  auto value_map = [&](const IndexValue& v, int k) -> IndexValue {
    if (v.is_null() || k == 0) return v;
    std::vector<int> out;
    for (int j : all)
      if (!v.contains_agent(j)) out.push_back(j);
    out.push_back(k);
    return IndexValue::agents(out);
  };

  std::vector<NodeId> nodes(adj.nodes().begin(), adj.nodes().end());
  for (auto& n : nodes) n = node_map(n);

  std::map<ArrowId, std::pair<ArrowId, int>> arrow_map;  // old id -> (new, k)
  std::vector<Arrow> arrows;
  for (const auto& a : adj.arrows()) {
    Arrow na;
    na.from = node_map(a.from);
    na.to = node_map(a.to);
    int k = agent_of_arrow(a);
    if (na.from == kOpen) {
      na.id = "P->V1";
      na.alphabet = {IndexValue::agents({})};
    } else if (na.to == kOpen) {
      na.id = v_node(N + 1) + "->F";
      na.alphabet = {IndexValue::atom("NF")};
    } else {
      na.id = na.from + "->" + na.to;
      for (const auto& v : a.alphabet) na.alphabet.push_back(value_map(v, k));
      na.alphabet = make_alphabet(na.alphabet);
      for (const auto& v : a.one_dim) na.one_dim.push_back(value_map(v, k));
      na.one_dim = make_alphabet(na.one_dim);
    }
    arrow_map[a.id] = {na.id, k};
    arrows.push_back(std::move(na));
  }

  std::map<NodeId, Relation> routes;
  for (const auto& [n, r] : adj.routes()) {
    NodeId nn = node_map(n);
    Relation::ArrowList in, out;
    std::map<ArrowId, std::pair<ArrowId, int>> local;  // by old id
    for (const auto& [id, alpha] : r.in_arrows()) local[id] = arrow_map[id];
    for (const auto& [id, alpha] : r.out_arrows()) local[id] = arrow_map[id];
    auto find_arrow = [&](const ArrowId& nid) -> const Arrow& {
      for (const auto& a : arrows)
        if (a.id == nid) return a;
      throw Error("InvalidGraph", "lost arrow " + nid);
    };
    for (const auto& [id, alpha] : r.in_arrows())
      in.emplace_back(local[id].first, find_arrow(local[id].first).alphabet);
    for (const auto& [id, alpha] : r.out_arrows())
      out.emplace_back(local[id].first, find_arrow(local[id].first).alphabet);
    Relation nr(in, out);
    auto map_value = [&](const ArrowId& old_id, const IndexValue& v) {
      const auto& [nid, k] = local[old_id];
      if (nid == "P->V1") return IndexValue::agents({});
      if (nid == v_node(N + 1) + "->F") return IndexValue::atom("NF");
      return value_map(v, k);
    };
    for (const auto& p : r.rows()) {
      std::map<ArrowId, IndexValue> im, om;
      for (size_t i = 0; i < r.in_arrows().size(); ++i) {
        const ArrowId& old_id = r.in_arrows()[i].first;
        im[local[old_id].first] = map_value(old_id, p.first[i]);
      }
      for (size_t i = 0; i < r.out_arrows().size(); ++i) {
        const ArrowId& old_id = r.out_arrows()[i].first;
        om[local[old_id].first] = map_value(old_id, p.second[i]);
      }
      nr.add_pair(im, om);
    }
    routes.emplace(nn, std::move(nr));
  }
  return RoutedGraph(nodes, arrows, routes);
}

/// Seeded complex Gaussian, independent of the library's sampling.
inline Complex gaussian(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1e-12, 1.0);
  double r = std::sqrt(-2.0 * std::log(u(rng)));
  double t = 2.0 * 3.14159265358979323846 * u(rng);
  return {r * std::cos(t), r * std::sin(t)};
}

/// Random isometry via Gram-Schmidt on Gaussian columns (rows >= cols).
inline Matrix random_isometry(std::mt19937_64& rng, int64_t rows,
                              int64_t cols) {
  if (rows < cols) throw Error("ShapeMismatch", "isometry needs rows >= cols");
  Matrix m(rows, cols);
  for (auto& v : m.a) v = gaussian(rng);
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
  }
  return m;
}

/// Builds the choice-function input vector (aligned with cf.slots) realising
/// the given successor choices per already-acted set for a generic graph.
inline std::vector<IndexValue> generic_bifurcations(
    const RoutedGraph& g, const ChoiceFunction& cf, int N,
    const std::map<std::vector<int>, int>& bif) {
  std::vector<IndexValue> out;
  for (const auto& slot : cf.slots) {
    if (slot.choices.size() == 1) {
      out.push_back(slot.choices[0]);
      continue;
    }
    // Nontrivial slots of the generic graph sit at V-nodes; recover the set
    // K' from the branch label by matching against the known labels.
    int m = std::stoi(slot.node.substr(1));
    bool found = false;
    for (int sz = 0; sz <= N && !found; ++sz)
      for (const auto& kp : subsets_of_size(N, sz)) {
        if (generic_v_branch(N, m, kp) != slot.branch || sz != m - 1)
          continue;
        int l = bif.at(kp);
        std::vector<int> knl = kp;
        knl.push_back(l);
        // Chosen output row: K' u l on the arrow to A_l, null elsewhere.
        const Relation& r = g.route(slot.node);
        std::map<ArrowId, IndexValue> om;
        for (const auto& [id, alpha] : r.out_arrows())
          om[id] = IndexValue::null();
        om[va_arrow(m, l)] = IndexValue::agents(knl);
        std::vector<IndexValue> row;
        for (const auto& [id, alpha] : r.out_arrows()) row.push_back(om[id]);
        out.push_back(detail::encode_choice(row));
        found = true;
        break;
      }
    if (!found)
      throw Error("InvalidBifurcation", "cannot decode slot " + slot.branch);
  }
  return out;
}

/// The full generic-pipeline composition for a circuit spec: skeletal
/// supermap of the generic graph, V-node fleshing, slot adapters, linked.
inline ProcessVector via_generic_pipeline(const QcqcSpec& spec) {
  RoutedGraph g = generic_graph(spec.n_agents);
  SkeletalSupermap s = skeletal(g, generic_dims(spec.n_agents, spec));
  FleshingOut f =
      merge_fleshings(flesh_v_nodes(s, spec), flesh_a_nodes(s, spec));
  return compose_fleshed(s, f);
}

}  // namespace rqc::testing
