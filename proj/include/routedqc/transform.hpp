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

#include "routedqc/generic.hpp"

namespace rqc {

enum class MergeDirection {
  Up,    // the agent node is the sole child of the internal node
  Down,  // the agent node is the sole parent of the internal node
};

struct TransformRecord {
  std::string kind;
  std::vector<NodeId> nodes;
  std::vector<ArrowId> arrows_added;
  std::vector<ArrowId> arrows_removed;
};

using TransformLog = std::vector<TransformRecord>;

// ---------------------------------------------------------------------------
// Ancilla-arrow variant.
// ---------------------------------------------------------------------------

namespace detail {

/// Extends a route with a constant-valued arrow on one side.
inline Relation extend_route(const Relation& r, const ArrowId& arrow,
                             const IndexValue& value, bool input) {
  Relation::ArrowList in = r.in_arrows(), out = r.out_arrows();
  (input ? in : out).emplace_back(arrow, Alphabet{value});
  Relation e(in, out);
  for (const auto& p : r.rows()) {
    std::map<ArrowId, IndexValue> im, om;
    for (size_t i = 0; i < r.in_arrows().size(); ++i)
      im[r.in_arrows()[i].first] = p.first[i];
    for (size_t i = 0; i < r.out_arrows().size(); ++i)
      om[r.out_arrows()[i].first] = p.second[i];
    (input ? im : om)[arrow] = value;
    e.add_pair(im, om);
  }
  return e;
}

}  // namespace detail

/**
 * Adds direct V_n -> V_{n+1} arrows to a generic graph, one singleton
 * non-one-dimensional index each, giving the ancilla systems their own
 * wires. Arrows whose assigned dimension is 1 are marked one-dimensional.
 */
inline RoutedGraph alpha_variant(const RoutedGraph& g,
                                 const std::vector<int64_t>& alpha_dims,
                                 TransformLog* log = nullptr) {
  int N = 0;
  while (g.nodes().count(a_node(N + 1))) ++N;
  if (N == 0 || !g.nodes().count(v_node(N + 1)))
    throw Error("InvalidGraph", "not a generic graph");
  if (static_cast<int>(alpha_dims.size()) != N)
    throw Error("DimMismatch", "need one ancilla dimension per layer");

  std::vector<Arrow> arrows = g.arrows();
  std::map<NodeId, Relation> routes = g.routes();
  TransformRecord rec{"alpha-variant", {}, {}, {}};
  for (int n = 1; n <= N; ++n) {
    ArrowId id = v_node(n) + "->" + v_node(n + 1);
    IndexValue value = IndexValue::atom("a" + std::to_string(n));
    Arrow a{id, v_node(n), v_node(n + 1), {value}, {}};
    if (alpha_dims[n - 1] == 1) a.one_dim = {value};
    arrows.push_back(a);
    rec.arrows_added.push_back(id);
    routes.insert_or_assign(
        v_node(n),
        detail::extend_route(routes.at(v_node(n)), id, value, /*input=*/false));
    routes.insert_or_assign(
        v_node(n + 1),
        detail::extend_route(routes.at(v_node(n + 1)), id, value, true));
  }
  if (log) log->push_back(std::move(rec));
  return RoutedGraph(std::vector<NodeId>(g.nodes().begin(), g.nodes().end()),
                     std::move(arrows), std::move(routes));
}

// ---------------------------------------------------------------------------
// Split-node generic graph.
// ---------------------------------------------------------------------------

/// Node id of the branch-split internal node carrying the already-acted set.
inline NodeId vhat_node(int N, int m, const std::vector<int>& kn) {
  if (kn.empty()) return v_node(1);
  if (static_cast<int>(kn.size()) == N) return v_node(N + 1);
  return v_node(m) + "^" + IndexValue::agents(kn).str();
}

/**
 * The split-node generic graph: one internal node per branch of each
 * V-node, each intermediate node carrying a live branch plus a null branch.
 */
inline RoutedGraph split_graph(int N) {
  if (N < 1) throw Error("InvalidGraph", "need at least one agent");
  const IndexValue null = IndexValue::null();
  std::vector<NodeId> nodes;
  for (int k = 1; k <= N; ++k) nodes.push_back(a_node(k));
  for (int n = 0; n <= N; ++n)
    for (const auto& kn : subsets_of_size(N, n))
      nodes.push_back(vhat_node(N, n + 1, kn));

  std::vector<Arrow> arrows;
  arrows.push_back(Arrow{"P->V1", kOpen, v_node(1),
                         {IndexValue::agents({})}, {}});
  arrows.push_back(Arrow{v_node(N + 1) + "->F", v_node(N + 1), kOpen,
                         {IndexValue::atom("NF")}, {}});
  auto in_arrow_id = [&](int n, const std::vector<int>& kprev, int k) {
    return vhat_node(N, n, kprev) + "->" + a_node(k);
  };
  auto out_arrow_id = [&](int k, int n, const std::vector<int>& kn) {
    return a_node(k) + "->" + vhat_node(N, n + 1, kn);
  };
  for (int n = 1; n <= N; ++n)
    for (int k = 1; k <= N; ++k)
      for (const auto& kn : subsets_of_size(N, n)) {
        if (std::find(kn.begin(), kn.end(), k) == kn.end()) continue;
        std::vector<int> kprev;
        for (int j : kn)
          if (j != k) kprev.push_back(j);
        Alphabet alpha = make_alphabet({IndexValue::agents(kn), null});
        arrows.push_back(Arrow{in_arrow_id(n, kprev, k), vhat_node(N, n, kprev),
                               a_node(k), alpha, {null}});
        arrows.push_back(Arrow{out_arrow_id(k, n, kn), a_node(k),
                               vhat_node(N, n + 1, kn), alpha, {null}});
      }

  std::map<NodeId, Relation> routes;
  // Agent routes: inputs equal outputs, exactly one non-null.
  for (int k = 1; k <= N; ++k) {
    Relation::ArrowList in, out;
    for (int n = 1; n <= N; ++n)
      for (const auto& kn : subsets_of_size(N, n)) {
        if (std::find(kn.begin(), kn.end(), k) == kn.end()) continue;
        std::vector<int> kprev;
        for (int j : kn)
          if (j != k) kprev.push_back(j);
        Alphabet alpha = make_alphabet({IndexValue::agents(kn), null});
        in.emplace_back(in_arrow_id(n, kprev, k), alpha);
        out.emplace_back(out_arrow_id(k, n, kn), alpha);
      }
    Relation r(in, out);
    for (int n = 1; n <= N; ++n)
      for (const auto& kn : subsets_of_size(N, n)) {
        if (std::find(kn.begin(), kn.end(), k) == kn.end()) continue;
        std::vector<int> kprev;
        for (int j : kn)
          if (j != k) kprev.push_back(j);
        std::map<ArrowId, IndexValue> im, om;
        for (const auto& [id, alpha] : r.in_arrows()) im[id] = null;
        for (const auto& [id, alpha] : r.out_arrows()) om[id] = null;
        im[in_arrow_id(n, kprev, k)] = IndexValue::agents(kn);
        om[out_arrow_id(k, n, kn)] = IndexValue::agents(kn);
        r.add_pair(im, om);
      }
    routes.emplace(a_node(k), std::move(r));
  }
  // Internal nodes.
  for (int n = 0; n <= N; ++n)
    for (const auto& kn : subsets_of_size(N, n)) {
      NodeId node = vhat_node(N, n + 1, kn);
      Relation::ArrowList in, out;
      if (n == 0) {
        in.emplace_back("P->V1", Alphabet{IndexValue::agents({})});
      } else {
        for (int k : kn) {
          std::vector<int> kprev;
          for (int j : kn)
            if (j != k) kprev.push_back(j);
          in.emplace_back(out_arrow_id(k, n, kn),
                          make_alphabet({IndexValue::agents(kn), null}));
        }
      }
      if (n == N) {
        out.emplace_back(v_node(N + 1) + "->F",
                         Alphabet{IndexValue::atom("NF")});
      } else {
        for (int l = 1; l <= N; ++l) {
          if (std::find(kn.begin(), kn.end(), l) != kn.end()) continue;
          std::vector<int> knl = kn;
          knl.push_back(l);
          std::sort(knl.begin(), knl.end());
          out.emplace_back(in_arrow_id(n + 1, kn, l),
                           make_alphabet({IndexValue::agents(knl), null}));
        }
      }
      Relation r(in, out);
      // Null branch for the intermediate nodes.
      if (n > 0 && n < N) {
        std::map<ArrowId, IndexValue> im, om;
        for (const auto& [id, alpha] : r.in_arrows()) im[id] = null;
        for (const auto& [id, alpha] : r.out_arrows()) om[id] = null;
        r.add_pair(im, om);
      }
      // Live rows.
      std::vector<int> ks = n == 0 ? std::vector<int>{0} : kn;
      for (int k : ks) {
        std::vector<int> ls;
        if (n == N) {
          ls = {0};
        } else {
          for (int l = 1; l <= N; ++l)
            if (std::find(kn.begin(), kn.end(), l) == kn.end())
              ls.push_back(l);
        }
        for (int l : ls) {
          std::map<ArrowId, IndexValue> im, om;
          for (const auto& [id, alpha] : r.in_arrows()) im[id] = null;
          for (const auto& [id, alpha] : r.out_arrows()) om[id] = null;
          if (n == 0)
            im["P->V1"] = IndexValue::agents({});
          else
            im[out_arrow_id(k, n, kn)] = IndexValue::agents(kn);
          if (n == N) {
            om[v_node(N + 1) + "->F"] = IndexValue::atom("NF");
          } else {
            std::vector<int> knl = kn;
            knl.push_back(l);
            std::sort(knl.begin(), knl.end());
            om[in_arrow_id(n + 1, kn, l)] = IndexValue::agents(knl);
          }
          r.add_pair(im, om);
        }
      }
      routes.emplace(node, std::move(r));
    }
  return RoutedGraph(nodes, arrows, routes);
}

/// Dimension assignment realising a circuit spec on the split graph.
inline DimensionAssignment split_dims(int N, const QcqcSpec& spec) {
  if (spec.n_agents != N) throw Error("DimMismatch", "agent count mismatch");
  RoutedGraph g = split_graph(N);
  DimensionAssignment da;
  da.dims["P->V1"][IndexValue::agents({})] = spec.d_P;
  da.dims[v_node(N + 1) + "->F"][IndexValue::atom("NF")] = spec.d_F;
  for (const auto& a : g.arrows()) {
    if (!a.is_internal()) continue;
    bool into_agent = a.to[0] == 'A';
    for (const auto& v : a.alphabet) {
      if (v.is_null()) {
        da.dims[a.id][v] = 1;
      } else {
        int n = static_cast<int>(v.agent_ids().size());
        da.dims[a.id][v] = (into_agent ? spec.d_AI : spec.d_AO) *
                           spec.alpha_dim(n);
      }
    }
  }
  return da;
}

/**
 * Re-lays a generic-graph fleshing onto the split graph: every sector block
 * of a V-node tensor moves to its branch node, and the intermediate nodes
 * gain an amplitude-one null-to-null entry (the phase convention fixed to
 * zero). The V tensors must be routed isometries on their practical spaces.
 */
inline FleshingOut split_fleshing(const SkeletalSupermap& generic_s,
                                  const FleshingOut& f,
                                  const SkeletalSupermap& split_s) {
  int N = 0;
  while (generic_s.graph.nodes().count(a_node(N + 1))) ++N;
  const IndexValue null = IndexValue::null();

  // Precondition: each V-node carries an isometry on its populated sectors
  // (a partial isometry on the practical space; circuits with unreachable
  // configurations leave some sectors empty).
  for (const auto& [node, t] : f.internal) {
    const Relation& r = generic_s.graph.route(node);
    std::vector<std::string> in, out;
    for (const auto& [id, alpha] : r.in_arrows()) in.push_back(id);
    for (const auto& [id, alpha] : r.out_arrows()) out.push_back(id);
    if (!is_partial_isometry(t, in, out, 1e-9))
      throw Error("NotIsometryFleshing",
                  node + " is not fleshed with a routed (partial) isometry");
  }

  FleshingOut out;
  auto split_wire_systems = [&](const NodeId& node) {
    std::vector<SectoredSpace> systems;
    for (const auto* a : split_s.graph.in_arrows(node))
      systems.push_back(split_s.wire(a->id));
    for (const auto* a : split_s.graph.out_arrows(node))
      systems.push_back(split_s.wire(a->id));
    return systems;
  };

  // Collect the split tensors per (m, K) node.
  std::map<NodeId, ChoiTensor> split_tensors;
  for (int n = 0; n <= N; ++n)
    for (const auto& kn : subsets_of_size(N, n)) {
      NodeId node = vhat_node(N, n + 1, kn);
      ChoiTensor t(split_wire_systems(node));
      if (n > 0 && n < N) {
        // Null branch: all wires in their null sectors, amplitude one.
        std::vector<int64_t> idx(t.systems().size(), 0);
        for (size_t q = 0; q < t.systems().size(); ++q) {
          const SectoredSpace& sp = t.systems()[q];
          int sec = sp.sector_index(null);
          idx[q] = sec < 0 ? 0 : sp.sector_offset(sec);
        }
        t.add_amp(idx, Complex(1, 0));
      }
      split_tensors.emplace(node, std::move(t));
    }

  for (int n = 0; n <= N; ++n) {
    const NodeId gnode = v_node(n + 1);
    const ChoiTensor& t = f.internal.at(gnode);
    for (const auto& [flat, v] : t.entries()) {
      auto idx = t.unflat(flat);
      // Identify the populated in and out sectors and their inner indices.
      std::vector<int> kn;
      int64_t in_inner = 0, out_inner = 0;
      int in_agent = 0, out_agent = 0;
      std::vector<int> knl;
      for (size_t q = 0; q < t.systems().size(); ++q) {
        const SectoredSpace& sp = t.systems()[q];
        int sec = sp.sector_of(idx[q]);
        const IndexValue& val = sp.sectors[sec].first;
        int64_t inner = idx[q] - sp.sector_offset(sec);
        if (sp.label == "P->V1") {
          in_inner = idx[q];
        } else if (sp.label == v_node(N + 1) + "->F") {
          out_inner = idx[q];
        } else if (val.is_null()) {
          continue;
        } else if (sp.label.rfind("A", 0) == 0) {  // A_k -> V_{n+1}
          kn = val.agent_ids();
          in_inner = inner;
          in_agent = std::stoi(sp.label.substr(1, sp.label.find("->") - 1));
        } else {  // V_{n+1} -> A_l
          knl = val.agent_ids();
          out_inner = inner;
          out_agent = std::stoi(sp.label.substr(sp.label.find(">A") + 2));
        }
      }
      NodeId snode = vhat_node(N, n + 1, kn);
      ChoiTensor& st = split_tensors.at(snode);
      std::vector<int64_t> sidx(st.systems().size(), 0);
      for (size_t q = 0; q < st.systems().size(); ++q) {
        const SectoredSpace& sp = st.systems()[q];
        int nsec = sp.sector_index(null);
        if (nsec >= 0) sidx[q] = sp.sector_offset(nsec);
      }
      if (n == 0) {
        sidx[st.system_index("P->V1")] = in_inner;
      } else {
        std::string in_id = a_node(in_agent) + "->" + snode;
        const SectoredSpace& sp = st.systems()[st.system_index(in_id)];
        sidx[st.system_index(in_id)] =
            sp.sector_offset(sp.sector_index(IndexValue::agents(kn))) +
            in_inner;
      }
      if (n == N) {
        sidx[st.system_index(v_node(N + 1) + "->F")] = out_inner;
      } else {
        std::string out_id = snode + "->" + a_node(out_agent);
        const SectoredSpace& sp = st.systems()[st.system_index(out_id)];
        sidx[st.system_index(out_id)] =
            sp.sector_offset(sp.sector_index(IndexValue::agents(knl))) +
            out_inner;
      }
      st.add_amp(sidx, v);
    }
  }
  for (auto& [node, t] : split_tensors) out.internal.emplace(node, std::move(t));

  // Rebuild the slot adapters on the split wires.
  if (!f.adapters.empty()) {
    int64_t d_AI = 0, d_AO = 0;
    std::vector<NodeId> agents;
    std::vector<int> ids;
    for (int k = 1; k <= N; ++k) {
      agents.push_back(a_node(k));
      ids.push_back(k);
      const ChoiTensor& ad = f.adapters.at(a_node(k));
      d_AI = ad.systems()[ad.system_index(agent_in_label(k))].total_dim();
      d_AO = ad.systems()[ad.system_index(agent_out_label(k))].total_dim();
    }
    FleshingOut adapters = flesh_a_nodes(split_s, d_AI, d_AO, agents, ids);
    out.adapters = std::move(adapters.adapters);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Node merging.
// ---------------------------------------------------------------------------

/**
 * Merges the internal node `v` into the node `a` (Up: `a` is the sole child
 * of `v`; Down: `a` is the sole parent). Requires the graph to be valid with
 * a fully loop-free branch graph, and the branch association between the two
 * nodes to be one-to-one. The merged node keeps the id of `a` and the route
 * `lambda_a * lambda_v`.
 */
inline RoutedGraph merge_nodes(const RoutedGraph& g, const NodeId& v,
                               const NodeId& a, MergeDirection dir,
                               TransformLog* log = nullptr) {
  if (!g.nodes().count(v) || !g.nodes().count(a))
    throw Error("PreconditionFailed", "unknown node to merge");
  // Sole child / parent condition.
  const auto vs_out = g.out_arrows(v);
  const auto vs_in = g.in_arrows(v);
  if (dir == MergeDirection::Up) {
    for (const auto* ar : vs_out)
      if (ar->to != a)
        throw Error("PreconditionFailed",
                    a + " is not the sole child of " + v);
    if (g.arrows_between(v, a).empty())
      throw Error("PreconditionFailed", "nodes are not adjacent");
  } else {
    for (const auto* ar : vs_in)
      if (ar->from != a)
        throw Error("PreconditionFailed",
                    a + " is not the sole parent of " + v);
    if (g.arrows_between(a, v).empty())
      throw Error("PreconditionFailed", "nodes are not adjacent");
  }

  // Validity without any loops at all.
  ValidityReport rep = is_valid(g);
  if (!rep.valid || !is_loop_free(*rep.branch_graph))
    throw Error("PreconditionFailed",
                "merge requires a valid, loop-free graph");

  // One-to-one branch association across the connecting arrows.
  {
    auto vb = branches(g.route(v));
    auto ab = branches(g.route(a));
    auto linked = [&](const Branch& bv, const Branch& ba) {
      auto arrows = dir == MergeDirection::Up ? g.arrows_between(v, a)
                                              : g.arrows_between(a, v);
      for (const auto* ar : arrows) {
        std::set<IndexValue> lv =
            dir == MergeDirection::Up
                ? link_values(g, {v, bv.label}, {a, ba.label}, ar->id)
                : link_values(g, {a, ba.label}, {v, bv.label}, ar->id);
        if (!lv.empty()) return true;
      }
      return false;
    };
    std::set<std::string> used_v;
    for (const auto& ba : ab) {
      int count = 0;
      std::string match;
      for (const auto& bv : vb)
        if (linked(bv, ba)) {
          ++count;
          match = bv.label;
        }
      if (count != 1)
        throw Error("PreconditionFailed",
                    "branch " + ba.label + " of " + a + " is linked to " +
                        std::to_string(count) + " branches of " + v);
      used_v.insert(match);
    }
    for (const auto& bv : vb)
      if (!used_v.count(bv.label))
        throw Error("PreconditionFailed",
                    "branch " + bv.label + " of " + v +
                        " has no associated branch of " + a);
  }

  std::set<ArrowId> internalised;
  {
    auto arrows = dir == MergeDirection::Up ? g.arrows_between(v, a)
                                            : g.arrows_between(a, v);
    for (const auto* ar : arrows) internalised.insert(ar->id);
  }
  Relation merged_route =
      compose({g.route(a), g.route(v)}, internalised);

  std::vector<NodeId> nodes;
  for (const auto& n : g.nodes())
    if (n != v) nodes.push_back(n);
  std::vector<Arrow> arrows;
  TransformRecord rec{dir == MergeDirection::Up ? "merge-up" : "merge-down",
                      {v, a},
                      {},
                      {}};
  for (const auto& ar : g.arrows()) {
    if (internalised.count(ar.id)) {
      rec.arrows_removed.push_back(ar.id);
      continue;
    }
    Arrow na = ar;
    if (na.from == v) na.from = a;
    if (na.to == v) na.to = a;
    arrows.push_back(std::move(na));
  }
  std::map<NodeId, Relation> routes;
  for (const auto& [n, r] : g.routes())
    if (n != v && n != a) routes.emplace(n, r);
  routes.emplace(a, std::move(merged_route));
  RoutedGraph out(nodes, arrows, routes);
  ValidityReport after = is_valid(out);
  if (!after.valid)
    throw Error("PreconditionFailed",
                "merged graph fails validation: " + after.summary());
  if (log) log->push_back(std::move(rec));
  return out;
}

/// Fleshing of a merged node: the link product of the two node tensors over
/// the internalised wires.
inline ChoiTensor merge_fleshing(const ChoiTensor& fa, const ChoiTensor& fv,
                                 MergeDirection) {
  return link_product(fa, fv);
}

// ---------------------------------------------------------------------------
// Arrow removal driven by the zero structure of a circuit spec.
// ---------------------------------------------------------------------------

struct RemovalReport {
  RoutedGraph graph;
  std::vector<ArrowId> removed;
  // Branches of the original routes left with no surviving row.
  std::vector<std::string> vanished;
  bool valid = false;
};

/**
 * Removes from a generic graph every arrow whose non-null sectors can never
 * be populated by the given circuit: a slot is live only if a chain of
 * nonzero blocks reaches it from P and continues to F. Routes are restricted
 * to the surviving arrows and the result is revalidated.
 */
inline RemovalReport remove_arrows(const RoutedGraph& g, const QcqcSpec& spec,
                                   double zero_tol = 1e-12) {
  int N = spec.n_agents;
  auto nonzero = [&](const Matrix* m) {
    if (!m) return false;
    for (const auto& v : m->a)
      if (std::abs(v) > zero_tol) return true;
    return false;
  };
  // Forward reachability of slots (K_n \ k, k).
  std::set<std::pair<std::vector<int>, int>> fwd;
  for (int l = 1; l <= N; ++l)
    if (nonzero(spec.block({{}, 0, l}))) fwd.insert({{}, l});
  for (int n = 1; n < N; ++n) {
    for (const auto& kn : subsets_of_size(N, n))
      for (int k : kn) {
        std::vector<int> prev;
        for (int j : kn)
          if (j != k) prev.push_back(j);
        if (!fwd.count({prev, k})) continue;
        for (int l = 1; l <= N; ++l) {
          if (std::find(kn.begin(), kn.end(), l) != kn.end()) continue;
          if (nonzero(spec.block({prev, k, l}))) fwd.insert({kn, l});
        }
      }
  }
  // Backward reachability from F.
  std::set<std::pair<std::vector<int>, int>> bwd;
  for (int k = 1; k <= N; ++k) {
    std::vector<int> prev;
    for (int j = 1; j <= N; ++j)
      if (j != k) prev.push_back(j);
    if (nonzero(spec.block({prev, k, 0}))) bwd.insert({prev, k});
  }
  for (int n = N - 1; n >= 1; --n)
    for (const auto& kn : subsets_of_size(N, n))
      for (int k : kn) {
        std::vector<int> prev;
        for (int j : kn)
          if (j != k) prev.push_back(j);
        bool alive = false;
        for (int l = 1; l <= N && !alive; ++l) {
          if (std::find(kn.begin(), kn.end(), l) != kn.end()) continue;
          if (nonzero(spec.block({prev, k, l})) && bwd.count({kn, l}))
            alive = true;
        }
        if (alive) bwd.insert({prev, k});
      }
  auto populated = [&](const std::vector<int>& kn, int k) {
    std::vector<int> prev;
    for (int j : kn)
      if (j != k) prev.push_back(j);
    return fwd.count({prev, k}) > 0 && bwd.count({prev, k}) > 0;
  };

  // An arrow at layer n for agent k survives iff some set K_n containing k
  // is populated in both directions.
  std::set<ArrowId> removed;
  for (int n = 1; n <= N; ++n)
    for (int k = 1; k <= N; ++k) {
      bool live = false;
      for (const auto& kn : subsets_of_size(N, n)) {
        if (std::find(kn.begin(), kn.end(), k) == kn.end()) continue;
        if (populated(kn, k)) live = true;
      }
      if (!live) {
        removed.insert(va_arrow(n, k));
        removed.insert(av_arrow(k, n + 1));
      }
    }

  RemovalReport rep;
  for (const auto& id : removed) rep.removed.push_back(id);

  std::vector<Arrow> arrows;
  for (const auto& a : g.arrows())
    if (!removed.count(a.id)) arrows.push_back(a);
  std::map<NodeId, Relation> routes;
  for (const auto& [node, r] : g.routes()) {
    Relation::ArrowList in, out;
    std::vector<int> in_keep, out_keep, in_drop, out_drop;
    for (size_t i = 0; i < r.in_arrows().size(); ++i)
      if (removed.count(r.in_arrows()[i].first))
        in_drop.push_back(static_cast<int>(i));
      else {
        in.push_back(r.in_arrows()[i]);
        in_keep.push_back(static_cast<int>(i));
      }
    for (size_t i = 0; i < r.out_arrows().size(); ++i)
      if (removed.count(r.out_arrows()[i].first))
        out_drop.push_back(static_cast<int>(i));
      else {
        out.push_back(r.out_arrows()[i]);
        out_keep.push_back(static_cast<int>(i));
      }
    Relation nr(in, out);
    std::set<std::pair<std::vector<IndexValue>, std::vector<IndexValue>>> kept;
    for (const auto& p : r.rows()) {
      bool ok = true;
      for (int i : in_drop)
        if (!p.first[i].is_null()) ok = false;
      for (int i : out_drop)
        if (!p.second[i].is_null()) ok = false;
      if (!ok) continue;
      std::vector<IndexValue> iv, ov;
      for (int i : in_keep) iv.push_back(p.first[i]);
      for (int i : out_keep) ov.push_back(p.second[i]);
      nr.add_row(std::move(iv), std::move(ov));
    }
    // Branches of the old route with no surviving row.
    for (const auto& b : branches(r)) {
      bool alive = false;
      for (const auto& p : r.rows()) {
        if (!b.inputs.count(p.first)) continue;
        bool ok = true;
        for (int i : in_drop)
          if (!p.first[i].is_null()) ok = false;
        for (int i : out_drop)
          if (!p.second[i].is_null()) ok = false;
        if (ok) alive = true;
      }
      if (!alive) rep.vanished.push_back(node + "^" + b.label);
    }
    routes.emplace(node, std::move(nr));
  }
  rep.graph =
      RoutedGraph(std::vector<NodeId>(g.nodes().begin(), g.nodes().end()),
                  std::move(arrows), std::move(routes));
  rep.valid = is_valid(rep.graph).valid;
  return rep;
}

// ---------------------------------------------------------------------------
// Agent-localised graph.
// ---------------------------------------------------------------------------

/// Arrow id of the level-n transfer between two agents.
inline ArrowId aa_arrow(int k, int l, int n) {
  return a_node(k) + "->" + a_node(l) + "#" + std::to_string(n);
}

/**
 * The agent-localised graph: only V_1 and V_{N+1} remain internal; agents
 * hand the state to each other directly over per-level arrows, with the
 * already-acted set as the index value.
 */
inline RoutedGraph local_graph(int N) {
  if (N < 2) throw Error("InvalidGraph", "need at least two agents");
  const IndexValue null = IndexValue::null();
  std::vector<int> full;
  for (int k = 1; k <= N; ++k) full.push_back(k);

  std::vector<NodeId> nodes{v_node(1), v_node(N + 1)};
  for (int k = 1; k <= N; ++k) nodes.push_back(a_node(k));

  std::vector<Arrow> arrows;
  arrows.push_back(Arrow{"P->V1", kOpen, v_node(1),
                         {IndexValue::agents({})}, {}});
  arrows.push_back(Arrow{v_node(N + 1) + "->F", v_node(N + 1), kOpen,
                         {IndexValue::atom("NF")}, {}});
  for (int k = 1; k <= N; ++k) {
    arrows.push_back(Arrow{va_arrow(1, k), v_node(1), a_node(k),
                           make_alphabet({IndexValue::agents({k}), null}),
                           {null}});
    arrows.push_back(Arrow{av_arrow(k, N + 1), a_node(k), v_node(N + 1),
                           make_alphabet({IndexValue::agents(full), null}),
                           {null}});
  }
  for (int n = 2; n <= N; ++n)
    for (int k = 1; k <= N; ++k)
      for (int l = 1; l <= N; ++l) {
        if (k == l) continue;
        Alphabet alpha{null};
        for (const auto& kn : subsets_of_size(N, n))
          if (std::find(kn.begin(), kn.end(), k) != kn.end() &&
              std::find(kn.begin(), kn.end(), l) != kn.end())
            alpha.push_back(IndexValue::agents(kn));
        arrows.push_back(
            Arrow{aa_arrow(k, l, n), a_node(k), a_node(l),
                  make_alphabet(alpha), {null}});
      }

  std::map<NodeId, Relation> routes;
  {
    Relation::ArrowList in{{"P->V1", {IndexValue::agents({})}}}, out;
    for (int k = 1; k <= N; ++k)
      out.emplace_back(va_arrow(1, k),
                       make_alphabet({IndexValue::agents({k}), null}));
    Relation r(in, out);
    for (int l = 1; l <= N; ++l) {
      std::map<ArrowId, IndexValue> im{{"P->V1", IndexValue::agents({})}}, om;
      for (int k = 1; k <= N; ++k)
        om[va_arrow(1, k)] = k == l ? IndexValue::agents({l}) : null;
      r.add_pair(im, om);
    }
    routes.emplace(v_node(1), std::move(r));
  }
  {
    Relation::ArrowList in,
        out{{v_node(N + 1) + "->F", {IndexValue::atom("NF")}}};
    for (int k = 1; k <= N; ++k)
      in.emplace_back(av_arrow(k, N + 1),
                      make_alphabet({IndexValue::agents(full), null}));
    Relation r(in, out);
    for (int k = 1; k <= N; ++k) {
      std::map<ArrowId, IndexValue> im,
          om{{v_node(N + 1) + "->F", IndexValue::atom("NF")}};
      for (int m = 1; m <= N; ++m)
        im[av_arrow(m, N + 1)] = m == k ? IndexValue::agents(full) : null;
      r.add_pair(im, om);
    }
    routes.emplace(v_node(N + 1), std::move(r));
  }
  for (int k = 1; k <= N; ++k) {
    Relation::ArrowList in, out;
    in.emplace_back(va_arrow(1, k),
                    make_alphabet({IndexValue::agents({k}), null}));
    out.emplace_back(av_arrow(k, N + 1),
                     make_alphabet({IndexValue::agents(full), null}));
    for (int n = 2; n <= N; ++n)
      for (int j = 1; j <= N; ++j) {
        if (j == k) continue;
        Alphabet ain{null}, aout{null};
        for (const auto& kn : subsets_of_size(N, n))
          if (std::find(kn.begin(), kn.end(), k) != kn.end() &&
              std::find(kn.begin(), kn.end(), j) != kn.end()) {
            ain.push_back(IndexValue::agents(kn));
            aout.push_back(IndexValue::agents(kn));
          }
        in.emplace_back(aa_arrow(j, k, n), make_alphabet(ain));
        out.emplace_back(aa_arrow(k, j, n), make_alphabet(aout));
      }
    Relation r(in, out);
    // One row per (position n, set K_n containing k, predecessor j,
    // successor l).
    for (int n = 1; n <= N; ++n)
      for (const auto& kn : subsets_of_size(N, n)) {
        if (std::find(kn.begin(), kn.end(), k) == kn.end()) continue;
        std::vector<int> preds;
        if (n == 1)
          preds = {0};
        else
          for (int j : kn)
            if (j != k) preds.push_back(j);
        std::vector<int> succs;
        if (n == N)
          succs = {0};
        else
          for (int l = 1; l <= N; ++l)
            if (std::find(kn.begin(), kn.end(), l) == kn.end())
              succs.push_back(l);
        for (int j : preds)
          for (int l : succs) {
            std::map<ArrowId, IndexValue> im, om;
            for (const auto& [id, alpha] : r.in_arrows()) im[id] = null;
            for (const auto& [id, alpha] : r.out_arrows()) om[id] = null;
            if (j == 0)
              im[va_arrow(1, k)] = IndexValue::agents({k});
            else
              im[aa_arrow(j, k, n)] = IndexValue::agents(kn);
            if (l == 0) {
              om[av_arrow(k, N + 1)] = IndexValue::agents(full);
            } else {
              std::vector<int> knl = kn;
              knl.push_back(l);
              std::sort(knl.begin(), knl.end());
              om[aa_arrow(k, l, n + 1)] = IndexValue::agents(knl);
            }
            r.add_pair(im, om);
          }
      }
    routes.emplace(a_node(k), std::move(r));
  }
  return RoutedGraph(nodes, arrows, routes);
}

// ---------------------------------------------------------------------------
// Whole-pipeline helpers: a rewritten graph together with its skeleton and
// a fleshing realising the given circuit on it.
// ---------------------------------------------------------------------------

struct PipelineResult {
  RoutedGraph graph;
  SkeletalSupermap skeleton;
  FleshingOut fleshing;
  TransformLog log;
};

/// Fleshing of the split-node graph realising `spec`.
inline PipelineResult split_pipeline(const QcqcSpec& spec) {
  int N = spec.n_agents;
  SkeletalSupermap s =
      skeletal(generic_graph(N), generic_dims(N, spec));
  FleshingOut f =
      merge_fleshings(flesh_v_nodes(s, spec), flesh_a_nodes(s, spec));
  PipelineResult out{split_graph(N), {}, {}, {}};
  out.skeleton = skeletal(out.graph, split_dims(N, spec));
  out.fleshing = split_fleshing(s, f, out.skeleton);
  out.log.push_back({"split", {}, {}, {}});
  return out;
}

/**
 * Splits the generic graph and absorbs every mergeable internal node into
 * an agent: the second layer into its sole parent and (for N = 3) the third
 * layer into its sole child. Defined for two and three agents; beyond that
 * the interior nodes have several parents and children.
 */
inline PipelineResult merged_pipeline(const QcqcSpec& spec) {
  int N = spec.n_agents;
  if (N != 2 && N != 3)
    throw Error("PreconditionFailed",
                "the merge pipeline needs two or three agents");
  PipelineResult split = split_pipeline(spec);
  RoutedGraph cur = split.graph;
  TransformLog log = split.log;
  std::map<NodeId, ChoiTensor> agents;
  for (int k = 1; k <= N; ++k)
    agents.emplace(a_node(k), split.fleshing.adapters.at(a_node(k)));
  for (int k = 1; k <= N; ++k) {
    NodeId vh = vhat_node(N, 2, {k});
    cur = merge_nodes(cur, vh, a_node(k), MergeDirection::Down, &log);
    agents.insert_or_assign(
        a_node(k), merge_fleshing(agents.at(a_node(k)),
                                  split.fleshing.internal.at(vh),
                                  MergeDirection::Down));
  }
  if (N == 3) {
    for (const auto& k2 : subsets_of_size(3, 2)) {
      int z = 6 - k2[0] - k2[1];
      NodeId vh = vhat_node(3, 3, k2);
      cur = merge_nodes(cur, vh, a_node(z), MergeDirection::Up, &log);
      agents.insert_or_assign(
          a_node(z), merge_fleshing(agents.at(a_node(z)),
                                    split.fleshing.internal.at(vh),
                                    MergeDirection::Up));
    }
  }
  PipelineResult out{cur, {}, {}, std::move(log)};
  out.skeleton = skeletal(cur, split_dims(N, spec));
  out.fleshing.internal.emplace("V1", split.fleshing.internal.at("V1"));
  out.fleshing.internal.emplace(v_node(N + 1),
                                split.fleshing.internal.at(v_node(N + 1)));
  for (auto& [n, t] : agents) out.fleshing.adapters.emplace(n, std::move(t));
  return out;
}

// ---------------------------------------------------------------------------
// Transform log serialisation lives in json_io.hpp.
// ---------------------------------------------------------------------------

}  // namespace rqc
