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

#include "routedqc/branch_graph.hpp"
#include "routedqc/qcqc.hpp"

namespace rqc {

inline NodeId a_node(int k) { return "A" + std::to_string(k); }
inline NodeId v_node(int m) { return "V" + std::to_string(m); }  // m = n+1

inline ArrowId va_arrow(int n, int k) {  // V_n -> A_k
  return v_node(n) + "->" + a_node(k);
}
inline ArrowId av_arrow(int k, int m) {  // A_k -> V_{n+1}
  return a_node(k) + "->" + v_node(m);
}

/**
 * The generic routed graph for N-slot circuits with coherent control of the
 * order of N agents: nodes A_1..A_N and V_1..V_{N+1}, arrows V_n -> A_k and
 * A_k -> V_{n+1} indexed by the n-element agent sets containing k plus the
 * null value, and routes forcing exactly one global agent ordering.
 */
inline RoutedGraph generic_graph(int N) {
  if (N < 1) throw Error("InvalidGraph", "need at least one agent");
  std::vector<NodeId> nodes;
  for (int k = 1; k <= N; ++k) nodes.push_back(a_node(k));
  for (int m = 1; m <= N + 1; ++m) nodes.push_back(v_node(m));

  const IndexValue null = IndexValue::null();
  std::vector<Arrow> arrows;
  arrows.push_back(Arrow{"P->V1", kOpen, v_node(1),
                         {IndexValue::agents({})}, {}});
  arrows.push_back(Arrow{v_node(N + 1) + "->F", v_node(N + 1), kOpen,
                         {IndexValue::atom("NF")}, {}});
  auto x_alphabet = [&](int n, int k) {
    Alphabet a{null};
    for (const auto& kn : subsets_of_size(N, n))
      if (std::find(kn.begin(), kn.end(), k) != kn.end())
        a.push_back(IndexValue::agents(kn));
    return make_alphabet(a);
  };
  for (int n = 1; n <= N; ++n)
    for (int k = 1; k <= N; ++k) {
      arrows.push_back(Arrow{va_arrow(n, k), v_node(n), a_node(k),
                             x_alphabet(n, k), {null}});
      arrows.push_back(Arrow{av_arrow(k, n + 1), a_node(k), v_node(n + 1),
                             x_alphabet(n, k), {null}});
    }

  std::map<NodeId, Relation> routes;
  // A_k: inputs equal outputs, with exactly one non-null index.
  for (int k = 1; k <= N; ++k) {
    Relation::ArrowList in, out;
    for (int n = 1; n <= N; ++n) {
      in.emplace_back(va_arrow(n, k), x_alphabet(n, k));
      out.emplace_back(av_arrow(k, n + 1), x_alphabet(n, k));
    }
    Relation r(in, out);
    for (int n = 1; n <= N; ++n)
      for (const auto& kn : subsets_of_size(N, n)) {
        if (std::find(kn.begin(), kn.end(), k) == kn.end()) continue;
        std::map<ArrowId, IndexValue> im, om;
        for (int m = 1; m <= N; ++m) {
          IndexValue v = m == n ? IndexValue::agents(kn) : null;
          im[va_arrow(m, k)] = v;
          om[av_arrow(k, m + 1)] = v;
        }
        r.add_pair(im, om);
      }
    routes.emplace(a_node(k), std::move(r));
  }
  // V_1: one agent is sent first.
  {
    Relation::ArrowList in{{"P->V1", {IndexValue::agents({})}}};
    Relation::ArrowList out;
    for (int k = 1; k <= N; ++k)
      out.emplace_back(va_arrow(1, k), x_alphabet(1, k));
    Relation r(in, out);
    for (int l = 1; l <= N; ++l) {
      std::map<ArrowId, IndexValue> im{{"P->V1", IndexValue::agents({})}}, om;
      for (int k = 1; k <= N; ++k)
        om[va_arrow(1, k)] = k == l ? IndexValue::agents({l}) : null;
      r.add_pair(im, om);
    }
    routes.emplace(v_node(1), std::move(r));
  }
  // V_{n+1}, 1 <= n <= N-1: the incoming set grows by the next agent.
  for (int n = 1; n <= N - 1; ++n) {
    Relation::ArrowList in, out;
    for (int k = 1; k <= N; ++k) {
      in.emplace_back(av_arrow(k, n + 1), x_alphabet(n, k));
      out.emplace_back(va_arrow(n + 1, k), x_alphabet(n + 1, k));
    }
    Relation r(in, out);
    for (const auto& kn : subsets_of_size(N, n))
      for (int k : kn)
        for (int l = 1; l <= N; ++l) {
          if (std::find(kn.begin(), kn.end(), l) != kn.end()) continue;
          std::vector<int> knl = kn;
          knl.push_back(l);
          std::map<ArrowId, IndexValue> im, om;
          for (int m = 1; m <= N; ++m) {
            im[av_arrow(m, n + 1)] = m == k ? IndexValue::agents(kn) : null;
            om[va_arrow(n + 1, m)] = m == l ? IndexValue::agents(knl) : null;
          }
          r.add_pair(im, om);
        }
    routes.emplace(v_node(n + 1), std::move(r));
  }
  // V_{N+1}: one agent is last.
  {
    Relation::ArrowList in, out{{v_node(N + 1) + "->F",
                                 {IndexValue::atom("NF")}}};
    for (int k = 1; k <= N; ++k)
      in.emplace_back(av_arrow(k, N + 1), x_alphabet(N, k));
    std::vector<int> full;
    for (int k = 1; k <= N; ++k) full.push_back(k);
    Relation r(in, out);
    for (int k = 1; k <= N; ++k) {
      std::map<ArrowId, IndexValue> im, om{{v_node(N + 1) + "->F",
                                            IndexValue::atom("NF")}};
      for (int m = 1; m <= N; ++m)
        im[av_arrow(m, N + 1)] = m == k ? IndexValue::agents(full) : null;
      r.add_pair(im, om);
    }
    routes.emplace(v_node(N + 1), std::move(r));
  }
  return RoutedGraph(nodes, arrows, routes);
}

// ---------------------------------------------------------------------------
// Canonical branch labels of the generic graph's routes, built from the
// same minimal-input convention as branches().
// ---------------------------------------------------------------------------

/// Branch of A_k that acts in position n with prior-and-self set kn (kn must
/// contain k and have size n).
inline std::string generic_a_branch(int k, const std::vector<int>& kn) {
  int n = static_cast<int>(kn.size());
  return "[" + va_arrow(n, k) + "=" + IndexValue::agents(kn).str() + "]";
}

/// Branch of V_{m} (m = n+1) with already-acted set kn (|kn| = m-1). For
/// V_1 the unique branch is labelled by the open arrow.
inline std::string generic_v_branch(int N, int m,
                                    const std::vector<int>& kn) {
  if (m == 1) return "[P->V1={}]";
  int maxk = *std::max_element(kn.begin(), kn.end());
  return "[" + av_arrow(maxk, m) + "=" + IndexValue::agents(kn).str() + "]";
}

/**
 * Closed-form choice function: the recursion K_1 = l^(emptyset),
 * K_{n+1} = K_n u l^(K_n) determines the branch happening at every node.
 * `bif` must provide a successor l not in K' for every subset K' of size
 * 0..N-1. Returns the branch label per node.
 */
inline std::map<NodeId, std::string> closed_form_choice(
    int N, const std::map<std::vector<int>, int>& bif) {
  for (int n = 0; n <= N - 1; ++n)
    for (const auto& kn : subsets_of_size(N, n)) {
      auto it = bif.find(kn);
      if (it == bif.end())
        throw Error("InvalidBifurcation",
                    "missing choice for " + IndexValue::agents(kn).str());
      if (it->second < 1 || it->second > N ||
          std::find(kn.begin(), kn.end(), it->second) != kn.end())
        throw Error("InvalidBifurcation",
                    "invalid successor for " + IndexValue::agents(kn).str());
    }
  std::map<NodeId, std::string> out;
  std::vector<int> current;  // K_n along the realised chain
  std::vector<int> position_of(N + 1, 0);
  out[v_node(1)] = generic_v_branch(N, 1, {});
  for (int n = 1; n <= N; ++n) {
    int next = bif.at(current);
    current.push_back(next);
    std::sort(current.begin(), current.end());
    position_of[next] = n;
    out[a_node(next)] = generic_a_branch(next, current);
    if (n <= N - 1) out[v_node(n + 1)] = generic_v_branch(N, n + 1, current);
  }
  out[v_node(N + 1)] = generic_v_branch(N, N + 1, current);
  return out;
}

// ---------------------------------------------------------------------------
// Skeletal supermap and fleshing out.
// ---------------------------------------------------------------------------

struct DimensionAssignment {
  std::map<ArrowId, std::map<IndexValue, int64_t>> dims;

  int64_t at(const ArrowId& arrow, const IndexValue& v) const {
    auto it = dims.find(arrow);
    if (it != dims.end()) {
      auto jt = it->second.find(v);
      if (jt != it->second.end()) return jt->second;
    }
    throw Error("MissingDim", "no dimension for " + v.str() + " on " + arrow);
  }
};

struct PracticalSpace {
  // One entry per practical tuple: the tuple plus its sector dimension.
  std::vector<std::pair<std::vector<IndexValue>, int64_t>> sectors;
  int64_t total = 0;
};

/// The routed graph interpreted as wires: one sectorised space per arrow.
struct SkeletalSupermap {
  RoutedGraph graph;
  DimensionAssignment dims;
  std::map<ArrowId, SectoredSpace> wires;

  const SectoredSpace& wire(const ArrowId& id) const {
    auto it = wires.find(id);
    if (it == wires.end()) throw Error("MissingDim", "no wire for " + id);
    return it->second;
  }
};

inline SkeletalSupermap skeletal(const RoutedGraph& g,
                                 const DimensionAssignment& dims) {
  SkeletalSupermap s;
  s.graph = g;
  s.dims = dims;
  for (const auto& a : g.arrows()) {
    SectoredSpace sp;
    sp.label = a.id;
    for (const auto& v : a.alphabet) {
      int64_t d = dims.at(a.id, v);
      if (alphabet_contains(a.one_dim, v) && d != 1)
        throw Error("OneDimViolation",
                    "value " + v.str() + " on " + a.id + " must have dim 1");
      sp.sectors.emplace_back(v, d);
    }
    sp.validate();
    s.wires.emplace(a.id, std::move(sp));
  }
  return s;
}

/// Practical input (or output) space of a node: one sector per tuple in the
/// route's practical domain (codomain), of the product dimension.
inline PracticalSpace practical_space(const SkeletalSupermap& s,
                                      const NodeId& node, bool input) {
  const Relation& r = s.graph.route(node);
  const auto& arrows = input ? r.in_arrows() : r.out_arrows();
  PracticalSpace ps;
  auto tuples = input ? practical_domain(r) : practical_codomain(r);
  for (const auto& t : tuples) {
    int64_t d = 1;
    for (size_t i = 0; i < arrows.size(); ++i) {
      const SectoredSpace& w = s.wire(arrows[i].first);
      d *= w.sectors[w.sector_index(t[i])].second;
    }
    ps.sectors.emplace_back(t, d);
    ps.total += d;
  }
  return ps;
}

/// 0/1 mask over the formal product space of a node's in (or out) wires,
/// true on basis states whose sector combination is practically reachable.
/// Wire order = sorted arrow ids (the order of matrix_of_choi labels).
inline std::vector<bool> practical_mask(const SkeletalSupermap& s,
                                        const NodeId& node, bool input) {
  const Relation& r = s.graph.route(node);
  const auto& arrows = input ? r.in_arrows() : r.out_arrows();
  auto tuples = input ? practical_domain(r) : practical_codomain(r);
  int64_t total = 1;
  std::vector<const SectoredSpace*> ws;
  for (const auto& [id, alpha] : arrows) {
    ws.push_back(&s.wire(id));
    total *= ws.back()->total_dim();
  }
  std::vector<bool> mask(total, false);
  for (int64_t f = 0; f < total; ++f) {
    int64_t rest = f;
    std::vector<IndexValue> sector(ws.size());
    for (size_t i = ws.size(); i-- > 0;) {
      int64_t d = ws[i]->total_dim();
      int64_t b = rest % d;
      rest /= d;
      sector[i] = ws[i]->sectors[ws[i]->sector_of(b)].first;
    }
    if (tuples.count(sector)) mask[f] = true;
  }
  return mask;
}

/// Dimension assignment realising a QC-QC on the generic graph: the sector
/// for K_n on V_n -> A_k carries the agent input plus the ancilla, and the
/// one on A_k -> V_{n+1} the agent output plus the ancilla.
inline DimensionAssignment generic_dims(int N, const QcqcSpec& spec) {
  if (spec.n_agents != N) throw Error("DimMismatch", "agent count mismatch");
  DimensionAssignment da;
  const IndexValue null = IndexValue::null();
  da.dims["P->V1"][IndexValue::agents({})] = spec.d_P;
  da.dims[v_node(N + 1) + "->F"][IndexValue::atom("NF")] = spec.d_F;
  for (int n = 1; n <= N; ++n)
    for (int k = 1; k <= N; ++k) {
      auto& in_map = da.dims[va_arrow(n, k)];
      auto& out_map = da.dims[av_arrow(k, n + 1)];
      in_map[null] = 1;
      out_map[null] = 1;
      for (const auto& kn : subsets_of_size(N, n)) {
        if (std::find(kn.begin(), kn.end(), k) == kn.end()) continue;
        in_map[IndexValue::agents(kn)] = spec.d_AI * spec.alpha_dim(n);
        out_map[IndexValue::agents(kn)] = spec.d_AO * spec.alpha_dim(n);
      }
    }
  return da;
}

/// Node tensors of a fleshing out: internal isometries plus the slot
/// adapters that expose each agent's unsectorised A_k^I -> A_k^O slot.
struct FleshingOut {
  std::map<NodeId, ChoiTensor> internal;
  std::map<NodeId, ChoiTensor> adapters;

  const ChoiTensor* tensor_for(const NodeId& n) const {
    auto it = internal.find(n);
    if (it != internal.end()) return &it->second;
    auto jt = adapters.find(n);
    if (jt != adapters.end()) return &jt->second;
    return nullptr;
  }
};

/**
 * Fleshes out every V-node of the generic skeletal supermap with the
 * internal operator blocks of `spec`, laid block-diagonally over the wire
 * sectors (the basis within a sector is agent-system-major, ancilla-minor).
 */
inline FleshingOut flesh_v_nodes(const SkeletalSupermap& s,
                                 const QcqcSpec& spec) {
  const int N = spec.n_agents;
  FleshingOut f;
  const IndexValue null = IndexValue::null();

  auto wire_systems = [&](const NodeId& node) {
    std::vector<SectoredSpace> systems;
    for (const auto* a : s.graph.in_arrows(node)) systems.push_back(s.wire(a->id));
    for (const auto* a : s.graph.out_arrows(node)) systems.push_back(s.wire(a->id));
    return systems;
  };

  // V_1.
  {
    ChoiTensor t(wire_systems(v_node(1)));
    int pi = t.system_index("P->V1");
    for (int l = 1; l <= N; ++l) {
      const Matrix* m = spec.block({{}, 0, l});
      if (!m) continue;
      int oi = t.system_index(va_arrow(1, l));
      const SectoredSpace& osp = t.systems()[oi];
      int64_t ooff = osp.sector_offset(osp.sector_index(IndexValue::agents({l})));
      std::vector<int64_t> idx(t.systems().size(), 0);
      // Null sectors elsewhere: offset of the null sector is its position.
      for (size_t q = 0; q < t.systems().size(); ++q) {
        if (static_cast<int>(q) == pi || static_cast<int>(q) == oi) continue;
        const SectoredSpace& sp = t.systems()[q];
        idx[q] = sp.sector_offset(sp.sector_index(null));
      }
      for (int64_t r = 0; r < m->rows; ++r)
        for (int64_t c = 0; c < m->cols; ++c) {
          Complex v = m->at(r, c);
          if (v == Complex(0, 0)) continue;
          idx[pi] = c;
          idx[oi] = ooff + r;
          t.add_amp(idx, v);
        }
    }
    f.internal.emplace(v_node(1), std::move(t));
  }
  // V_{n+1} for 1 <= n <= N-1.
  for (int n = 1; n <= N - 1; ++n) {
    ChoiTensor t(wire_systems(v_node(n + 1)));
    for (const auto& kn : subsets_of_size(N, n))
      for (int k : kn)
        for (int l = 1; l <= N; ++l) {
          if (std::find(kn.begin(), kn.end(), l) != kn.end()) continue;
          std::vector<int> prev;
          for (int j : kn)
            if (j != k) prev.push_back(j);
          const Matrix* m = spec.block({prev, k, l});
          if (!m) continue;
          std::vector<int> knl = kn;
          knl.push_back(l);
          std::sort(knl.begin(), knl.end());
          int ii = t.system_index(av_arrow(k, n + 1));
          int oi = t.system_index(va_arrow(n + 1, l));
          const SectoredSpace& isp = t.systems()[ii];
          const SectoredSpace& osp = t.systems()[oi];
          int64_t ioff =
              isp.sector_offset(isp.sector_index(IndexValue::agents(kn)));
          int64_t ooff =
              osp.sector_offset(osp.sector_index(IndexValue::agents(knl)));
          std::vector<int64_t> idx(t.systems().size(), 0);
          for (size_t q = 0; q < t.systems().size(); ++q) {
            if (static_cast<int>(q) == ii || static_cast<int>(q) == oi)
              continue;
            const SectoredSpace& sp = t.systems()[q];
            idx[q] = sp.sector_offset(sp.sector_index(null));
          }
          for (int64_t r = 0; r < m->rows; ++r)
            for (int64_t c = 0; c < m->cols; ++c) {
              Complex v = m->at(r, c);
              if (v == Complex(0, 0)) continue;
              idx[ii] = ioff + c;
              idx[oi] = ooff + r;
              t.add_amp(idx, v);
            }
        }
    f.internal.emplace(v_node(n + 1), std::move(t));
  }
  // V_{N+1}.
  {
    ChoiTensor t(wire_systems(v_node(N + 1)));
    int oi = t.system_index(v_node(N + 1) + "->F");
    std::vector<int> full;
    for (int k = 1; k <= N; ++k) full.push_back(k);
    for (int k = 1; k <= N; ++k) {
      std::vector<int> prev;
      for (int j : full)
        if (j != k) prev.push_back(j);
      const Matrix* m = spec.block({prev, k, 0});
      if (!m) continue;
      int ii = t.system_index(av_arrow(k, N + 1));
      const SectoredSpace& isp = t.systems()[ii];
      int64_t ioff =
          isp.sector_offset(isp.sector_index(IndexValue::agents(full)));
      std::vector<int64_t> idx(t.systems().size(), 0);
      for (size_t q = 0; q < t.systems().size(); ++q) {
        if (static_cast<int>(q) == ii || static_cast<int>(q) == oi) continue;
        const SectoredSpace& sp = t.systems()[q];
        idx[q] = sp.sector_offset(sp.sector_index(null));
      }
      for (int64_t r = 0; r < m->rows; ++r)
        for (int64_t c = 0; c < m->cols; ++c) {
          Complex v = m->at(r, c);
          if (v == Complex(0, 0)) continue;
          idx[ii] = ioff + c;
          idx[oi] = r;
          t.add_amp(idx, v);
        }
    }
    f.internal.emplace(v_node(N + 1), std::move(t));
  }
  return f;
}

/**
 * Builds the slot adapters: for every branch of an agent node the incoming
 * non-null sector (isomorphic to A_k^I (x) ancilla) is split, the agent part
 * exposed on an open A_k^I/A_k^O pair, and the ancilla routed past the slot
 * into the matching outgoing sector. Independent of the particular circuit.
 *
 * Requires every branch of every A-node to consist of a single input row and
 * a single output row, each with exactly one non-null sector.
 */
inline FleshingOut flesh_a_nodes(const SkeletalSupermap& s, int64_t d_AI,
                                 int64_t d_AO,
                                 const std::vector<NodeId>& agent_nodes,
                                 const std::vector<int>& agent_ids) {
  FleshingOut f;
  for (size_t ai = 0; ai < agent_nodes.size(); ++ai) {
    const NodeId& node = agent_nodes[ai];
    int k = agent_ids[ai];
    const Relation& r = s.graph.route(node);
    std::vector<SectoredSpace> systems;
    for (const auto& [id, alpha] : r.in_arrows()) systems.push_back(s.wire(id));
    for (const auto& [id, alpha] : r.out_arrows()) systems.push_back(s.wire(id));
    systems.push_back(SectoredSpace::unsectored(agent_in_label(k), d_AI));
    systems.push_back(SectoredSpace::unsectored(agent_out_label(k), d_AO));
    ChoiTensor t(systems);
    int aii = t.system_index(agent_in_label(k));
    int aoi = t.system_index(agent_out_label(k));

    for (const auto& b : branches(r)) {
      if (b.inputs.size() != 1 || b.outputs.size() != 1)
        throw Error("NotSplittable",
                    "adapter needs single-row branches at " + node);
      const auto& in_row = *b.inputs.begin();
      const auto& out_row = *b.outputs.begin();
      auto locate = [&](const Relation::ArrowList& arrows,
                        const std::vector<IndexValue>& row, int64_t* dim,
                        int* sys, int64_t* off,
                        std::vector<std::pair<int, int64_t>>* null_idx) {
        int found = -1;
        for (size_t i = 0; i < arrows.size(); ++i) {
          const SectoredSpace& w = s.wire(arrows[i].first);
          int sec = w.sector_index(row[i]);
          int64_t d = w.sectors[sec].second;
          int sysi = t.system_index(arrows[i].first);
          if (d == 1) {
            null_idx->push_back({sysi, w.sector_offset(sec)});
          } else {
            if (found >= 0)
              throw Error("NotSplittable",
                          "branch row has several wide sectors at " + node);
            found = static_cast<int>(i);
            *dim = d;
            *sys = sysi;
            *off = w.sector_offset(sec);
          }
        }
        if (found < 0)
          throw Error("NotSplittable",
                      "branch row has no wide sector at " + node);
      };
      int64_t din = 0, dout = 0, ioff = 0, ooff = 0;
      int isys = -1, osys = -1;
      std::vector<std::pair<int, int64_t>> fixed;
      locate(r.in_arrows(), in_row, &din, &isys, &ioff, &fixed);
      locate(r.out_arrows(), out_row, &dout, &osys, &ooff, &fixed);
      if (din % d_AI != 0 || dout % d_AO != 0 || din / d_AI != dout / d_AO)
        throw Error("DimMismatch",
                    "branch sectors at " + node + " do not factor over the "
                    "agent dimensions");
      int64_t d_anc = din / d_AI;
      std::vector<int64_t> idx(t.systems().size(), 0);
      for (const auto& [sysi, off] : fixed) idx[sysi] = off;
      for (int64_t a = 0; a < d_AI; ++a)
        for (int64_t m = 0; m < d_anc; ++m)
          for (int64_t bq = 0; bq < d_AO; ++bq) {
            idx[isys] = ioff + a * d_anc + m;
            idx[aii] = a;
            idx[aoi] = bq;
            idx[osys] = ooff + bq * d_anc + m;
            t.add_amp(idx, Complex(1, 0));
          }
    }
    f.adapters.emplace(node, std::move(t));
  }
  return f;
}

/// Adapters for the generic graph's agent nodes.
inline FleshingOut flesh_a_nodes(const SkeletalSupermap& s,
                                 const QcqcSpec& spec) {
  std::vector<NodeId> nodes;
  std::vector<int> ids;
  for (int k = 1; k <= spec.n_agents; ++k) {
    nodes.push_back(a_node(k));
    ids.push_back(k);
  }
  return flesh_a_nodes(s, spec.d_AI, spec.d_AO, nodes, ids);
}

inline FleshingOut merge_fleshings(FleshingOut a, const FleshingOut& b) {
  for (const auto& [n, t] : b.internal) a.internal.emplace(n, t);
  for (const auto& [n, t] : b.adapters) a.adapters.emplace(n, t);
  return a;
}

/**
 * Links every node tensor over the wire systems, leaving the open-ended
 * wires (relabelled P and F when unique) and the adapters' agent systems.
 * Composition streams along breadth-first layers from the global past.
 */
inline ProcessVector compose_fleshed(const SkeletalSupermap& s,
                                     const FleshingOut& f) {
  for (const auto& n : s.graph.nodes())
    if (!f.tensor_for(n)) throw Error("UncoveredNode", n);

  // BFS layering from nodes fed by open-in arrows.
  std::map<NodeId, int> layer;
  std::vector<NodeId> frontier;
  for (const auto* a : s.graph.open_in_arrows())
    if (!layer.count(a->to)) {
      layer[a->to] = 0;
      frontier.push_back(a->to);
    }
  int depth = 0;
  while (!frontier.empty()) {
    ++depth;
    std::vector<NodeId> next;
    for (const auto& n : frontier)
      for (const auto* a : s.graph.out_arrows(n))
        if (!a->is_open_out() && !layer.count(a->to)) {
          layer[a->to] = depth;
          next.push_back(a->to);
        }
    frontier = std::move(next);
  }
  std::vector<NodeId> order(s.graph.nodes().begin(), s.graph.nodes().end());
  std::sort(order.begin(), order.end(), [&](const NodeId& a, const NodeId& b) {
    int la = layer.count(a) ? layer[a] : 1 << 20;
    int lb = layer.count(b) ? layer[b] : 1 << 20;
    if (la != lb) return la < lb;
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });

  ChoiTensor acc = *f.tensor_for(order[0]);
  for (size_t i = 1; i < order.size(); ++i)
    acc = link_product(acc, *f.tensor_for(order[i]));

  auto open_in = s.graph.open_in_arrows();
  auto open_out = s.graph.open_out_arrows();
  if (open_in.size() == 1 && acc.system_index(open_in[0]->id) >= 0)
    acc.relabel(open_in[0]->id, "P");
  if (open_out.size() == 1 && acc.system_index(open_out[0]->id) >= 0)
    acc.relabel(open_out[0]->id, "F");
  return ProcessVector{std::move(acc)};
}

}  // namespace rqc
