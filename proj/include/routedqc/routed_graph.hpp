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

#include "routedqc/relation.hpp"

namespace rqc {

using NodeId = std::string;

inline const NodeId kOpen = "OPEN";

struct Arrow {
  ArrowId id;
  NodeId from;  // kOpen for an arrow coming from nowhere
  NodeId to;    // kOpen for an arrow going nowhere
  Alphabet alphabet;
  Alphabet one_dim;  // subset of `alphabet` marked one-dimensional

  bool is_open_in() const { return from == kOpen; }
  bool is_open_out() const { return to == kOpen; }
  bool is_internal() const { return !is_open_in() && !is_open_out(); }
};

/**
 * A routed graph: a directed multigraph whose arrows carry index alphabets
 * and whose nodes carry relations ("routes") from their in-arrow tuples to
 * their out-arrow tuples. Structure is validated at construction.
 */
class RoutedGraph {
 public:
  RoutedGraph() = default;

  RoutedGraph(std::vector<NodeId> nodes, std::vector<Arrow> arrows,
              std::map<NodeId, Relation> routes)
      : nodes_(nodes.begin(), nodes.end()),
        arrows_(std::move(arrows)),
        routes_(std::move(routes)) {
    std::sort(arrows_.begin(), arrows_.end(),
              [](const Arrow& a, const Arrow& b) { return a.id < b.id; });
    validate();
  }

  const std::set<NodeId>& nodes() const { return nodes_; }
  const std::vector<Arrow>& arrows() const { return arrows_; }
  const std::map<NodeId, Relation>& routes() const { return routes_; }
  const Relation& route(const NodeId& n) const {
    auto it = routes_.find(n);
    if (it == routes_.end()) throw Error("InvalidGraph", "no route for " + n);
    return it->second;
  }

  const Arrow& arrow(const ArrowId& id) const {
    auto it =
        std::lower_bound(arrows_.begin(), arrows_.end(), id,
                         [](const Arrow& a, const ArrowId& i) { return a.id < i; });
    if (it == arrows_.end() || it->id != id)
      throw Error("InvalidGraph", "no arrow " + id);
    return *it;
  }

  std::vector<const Arrow*> in_arrows(const NodeId& n) const {
    std::vector<const Arrow*> out;
    for (const auto& a : arrows_)
      if (a.to == n) out.push_back(&a);
    return out;
  }
  std::vector<const Arrow*> out_arrows(const NodeId& n) const {
    std::vector<const Arrow*> out;
    for (const auto& a : arrows_)
      if (a.from == n) out.push_back(&a);
    return out;
  }
  std::vector<const Arrow*> arrows_between(const NodeId& from,
                                           const NodeId& to) const {
    std::vector<const Arrow*> out;
    for (const auto& a : arrows_)
      if (a.from == from && a.to == to) out.push_back(&a);
    return out;
  }
  std::vector<const Arrow*> open_in_arrows() const {
    std::vector<const Arrow*> out;
    for (const auto& a : arrows_)
      if (a.is_open_in()) out.push_back(&a);
    return out;
  }
  std::vector<const Arrow*> open_out_arrows() const {
    std::vector<const Arrow*> out;
    for (const auto& a : arrows_)
      if (a.is_open_out()) out.push_back(&a);
    return out;
  }

 private:
  void validate() const {
    std::set<ArrowId> ids;
    for (const auto& a : arrows_) {
      if (!ids.insert(a.id).second)
        throw Error("ArrowCollision", "duplicate arrow id " + a.id);
      if (a.alphabet.empty())
        throw Error("InvalidAlphabet", "empty alphabet on " + a.id);
      for (const auto& v : a.one_dim)
        if (!alphabet_contains(a.alphabet, v))
          throw Error("OneDimViolation",
                      "one-dim value " + v.str() + " not in alphabet of " + a.id);
      if (a.from != kOpen && !nodes_.count(a.from))
        throw Error("InvalidGraph", "unknown node " + a.from);
      if (a.to != kOpen && !nodes_.count(a.to))
        throw Error("InvalidGraph", "unknown node " + a.to);
      if (a.from == kOpen && a.to == kOpen)
        throw Error("InvalidGraph", "arrow " + a.id + " is open on both ends");
    }
    for (const auto& n : nodes_) {
      auto it = routes_.find(n);
      if (it == routes_.end())
        throw Error("InvalidGraph", "missing route for node " + n);
      const Relation& r = it->second;
      auto expect = [&](const std::vector<const Arrow*>& arrows,
                        const Relation::ArrowList& got, const char* side) {
        if (arrows.size() != got.size())
          throw Error("InvalidGraph",
                      "route of " + n + " has wrong " + side + " arity");
        std::vector<std::pair<ArrowId, Alphabet>> want;
        for (const Arrow* a : arrows) want.emplace_back(a->id, a->alphabet);
        std::sort(want.begin(), want.end());
        for (size_t i = 0; i < want.size(); ++i) {
          if (want[i].first != got[i].first)
            throw Error("InvalidGraph", "route of " + n + " expects arrow " +
                                            got[i].first + " but graph has " +
                                            want[i].first);
          if (want[i].second != got[i].second)
            throw Error("AlphabetMismatch",
                        "route of " + n + " disagrees with alphabet of " +
                            want[i].first);
        }
      };
      expect(in_arrows(n), r.in_arrows(), "input");
      expect(out_arrows(n), r.out_arrows(), "output");
    }
  }

  std::set<NodeId> nodes_;
  std::vector<Arrow> arrows_;
  std::map<NodeId, Relation> routes_;
};

/// Reverses all arrows and takes the converse of every route.
inline RoutedGraph adjoint(const RoutedGraph& g) {
  std::vector<Arrow> arrows;
  for (const auto& a : g.arrows())
    arrows.push_back(Arrow{a.id, a.to, a.from, a.alphabet, a.one_dim});
  std::map<NodeId, Relation> routes;
  for (const auto& [n, r] : g.routes()) routes.emplace(n, converse(r));
  return RoutedGraph(std::vector<NodeId>(g.nodes().begin(), g.nodes().end()),
                     std::move(arrows), std::move(routes));
}

/// A branch slot in the choice-function input: one bifurcation choice per
/// branch of every node. `choices` are encoded output rows of the branch;
/// a singleton list is a trivial slot.
struct BifurcationSlot {
  NodeId node;
  std::string branch;         // branch label
  std::vector<IndexValue> choices;  // sorted encoded rows (size >= 1)
};

/**
 * The choice function of a univocal routed graph, tabulated over the full
 * product of bifurcation alphabets. Rows are addressed by the mixed-radix
 * rank of the choice vector (slot order = `slots` order); each row stores,
 * per node (in `node_order`), the index of the branch that happens.
 */
class ChoiceFunction {
 public:
  std::vector<BifurcationSlot> slots;
  std::vector<NodeId> node_order;
  std::vector<std::vector<std::string>> node_branches;  // per node, sorted
  std::vector<uint16_t> table;  // size = n_inputs() * node_order.size()

  size_t n_inputs() const {
    size_t n = 1;
    for (const auto& s : slots) n *= s.choices.size();
    return n;
  }

  size_t rank_of(const std::vector<IndexValue>& choice_vector) const {
    if (choice_vector.size() != slots.size())
      throw Error("OutOfDomain", "bifurcation vector has wrong arity");
    size_t rank = 0;
    for (size_t i = 0; i < slots.size(); ++i) {
      const auto& ch = slots[i].choices;
      auto it = std::lower_bound(ch.begin(), ch.end(), choice_vector[i]);
      if (it == ch.end() || *it != choice_vector[i])
        throw Error("OutOfDomain", "invalid bifurcation choice " +
                                       choice_vector[i].str() + " for " +
                                       slots[i].node + "^" + slots[i].branch);
      rank = rank * ch.size() + static_cast<size_t>(it - ch.begin());
    }
    return rank;
  }

  std::vector<IndexValue> choices_at(size_t rank) const {
    std::vector<IndexValue> out(slots.size());
    for (size_t i = slots.size(); i-- > 0;) {
      size_t radix = slots[i].choices.size();
      out[i] = slots[i].choices[rank % radix];
      rank /= radix;
    }
    return out;
  }

  /// Branch label that happens at `node` for the given input rank.
  const std::string& branch_at(size_t rank, const NodeId& node) const {
    size_t ni = node_index(node);
    return node_branches[ni][table[rank * node_order.size() + ni]];
  }

  size_t node_index(const NodeId& node) const {
    auto it = std::lower_bound(node_order.begin(), node_order.end(), node);
    if (it == node_order.end() || *it != node)
      throw Error("OutOfDomain", "unknown node " + node);
    return static_cast<size_t>(it - node_order.begin());
  }

  int branch_index(const NodeId& node, const std::string& label) const {
    const auto& bl = node_branches[node_index(node)];
    auto it = std::lower_bound(bl.begin(), bl.end(), label);
    if (it == bl.end() || *it != label) return -1;
    return static_cast<int>(it - bl.begin());
  }
};

namespace detail {

struct ChoicePieces {
  std::vector<Relation> augmented;
  std::set<ArrowId> internal;
  std::set<ArrowId> open_ids;
  std::map<NodeId, std::vector<Branch>> node_branches;
};

inline ChoicePieces prepare_choice(const RoutedGraph& g) {
  for (const auto& a : g.arrows())
    if (!a.is_internal() && a.alphabet.size() != 1)
      throw Error("NontrivialOpenArrow", a.id);

  ChoicePieces p;
  for (const auto& a : g.arrows())
    (a.is_internal() ? p.internal : p.open_ids).insert(a.id);
  for (const auto& n : g.nodes()) {
    AugmentedRelation aug;
    try {
      aug = augment(g.route(n), n);
    } catch (const Error& e) {
      if (e.kind() == "NotBranched")
        throw Error("NotBranched", "route of node " + n);
      throw;
    }
    p.node_branches[n] = aug.branch_list;
    p.augmented.push_back(aug.as_relation);
  }
  return p;
}

}  // namespace detail

/**
 * The choice relation of a branched routed graph: the link product of all
 * augmented routes over the internal arrows. Inputs are the per-branch
 * bifurcation alphabets, outputs the per-node branch names; the trivially
 * indexed open arrows are elided.
 */
inline Relation choice_relation(const RoutedGraph& g) {
  detail::ChoicePieces p = detail::prepare_choice(g);
  Relation full = compose(p.augmented, p.internal);
  Relation::ArrowList rin, rout;
  std::vector<int> in_keep, out_keep;
  for (size_t i = 0; i < full.in_arrows().size(); ++i)
    if (!p.open_ids.count(full.in_arrows()[i].first)) {
      rin.push_back(full.in_arrows()[i]);
      in_keep.push_back(static_cast<int>(i));
    }
  for (size_t i = 0; i < full.out_arrows().size(); ++i)
    if (!p.open_ids.count(full.out_arrows()[i].first)) {
      rout.push_back(full.out_arrows()[i]);
      out_keep.push_back(static_cast<int>(i));
    }
  Relation elided(rin, rout);
  for (const auto& pr : full.rows()) {
    std::vector<IndexValue> iv, ov;
    for (int i : in_keep) iv.push_back(pr.first[i]);
    for (int i : out_keep) ov.push_back(pr.second[i]);
    elided.add_row(std::move(iv), std::move(ov));
  }
  return elided;
}

/**
 * Tabulates the choice function of `g`. Throws NotUnivocal if the choice
 * relation is not a total single-valued function of the bifurcation choices.
 */
inline ChoiceFunction choice_function(const RoutedGraph& g) {
  detail::ChoicePieces pieces = detail::prepare_choice(g);
  detail::ValuePool pool;
  detail::Table acc = detail::compose_table(pieces.augmented, pieces.internal,
                                            pool, /*keep_shared=*/false);
  {
    std::set<std::string> drop;
    for (const auto& id : pieces.open_ids) {
      drop.insert("i:" + id);
      drop.insert("o:" + id);
    }
    detail::drop_columns(acc, drop);
  }

  ChoiceFunction cf;
  for (const auto& [n, bl] : pieces.node_branches) {
    for (const auto& b : bl) {
      BifurcationSlot slot;
      slot.node = n;
      slot.branch = b.label;
      for (const auto& row : b.outputs)
        slot.choices.push_back(detail::encode_choice(row));
      std::sort(slot.choices.begin(), slot.choices.end());
      cf.slots.push_back(std::move(slot));
    }
    cf.node_order.push_back(n);
  }
  std::sort(cf.node_order.begin(), cf.node_order.end());
  std::sort(cf.slots.begin(), cf.slots.end(),
            [](const BifurcationSlot& a, const BifurcationSlot& b) {
              return std::tie(a.node, a.branch) < std::tie(b.node, b.branch);
            });
  for (const auto& n : cf.node_order) {
    std::vector<std::string> labels;
    for (const auto& b : pieces.node_branches.at(n)) labels.push_back(b.label);
    std::sort(labels.begin(), labels.end());
    cf.node_branches.push_back(std::move(labels));
  }

  size_t n_inputs = cf.n_inputs();
  size_t n_nodes = cf.node_order.size();
  if (acc.nrows != n_inputs)
    throw Error("NotUnivocal",
                "choice relation has " + std::to_string(acc.nrows) +
                    " rows; expected " + std::to_string(n_inputs));

  // Map aux columns onto slots (with per-slot code->digit tables) and bran
  // columns onto nodes.
  std::vector<int> slot_col(cf.slots.size(), -1);
  std::vector<std::unordered_map<int32_t, size_t>> slot_digit(cf.slots.size());
  for (size_t s = 0; s < cf.slots.size(); ++s) {
    if (cf.slots[s].choices.size() <= 1) continue;
    std::string col =
        "i:aux:" + cf.slots[s].node + ":" + cf.slots[s].branch;
    slot_col[s] = acc.col_index(col);
    if (slot_col[s] < 0)
      throw Error("NotUnivocal", "missing aux column " + col);
    for (size_t d = 0; d < cf.slots[s].choices.size(); ++d)
      slot_digit[s][pool.code(cf.slots[s].choices[d])] = d;
  }
  std::vector<int> node_col(n_nodes, -1);
  std::vector<std::unordered_map<int32_t, uint16_t>> node_branch_code(n_nodes);
  for (size_t ni = 0; ni < n_nodes; ++ni) {
    node_col[ni] = acc.col_index("o:bran:" + cf.node_order[ni]);
    if (node_col[ni] < 0)
      throw Error("NotUnivocal",
                  "missing branch column for node " + cf.node_order[ni]);
    const auto& labels = cf.node_branches[ni];
    for (size_t bi = 0; bi < labels.size(); ++bi)
      node_branch_code[ni][pool.code(IndexValue::atom(labels[bi]))] =
          static_cast<uint16_t>(bi);
  }

  cf.table.assign(n_inputs * n_nodes, 0);
  std::vector<bool> filled(n_inputs, false);
  for (size_t r = 0; r < acc.nrows; ++r) {
    const int32_t* row = acc.row(r);
    size_t rank = 0;
    for (size_t s = 0; s < cf.slots.size(); ++s) {
      size_t radix = cf.slots[s].choices.size();
      size_t digit = 0;
      if (slot_col[s] >= 0) {
        auto it = slot_digit[s].find(row[slot_col[s]]);
        if (it == slot_digit[s].end())
          throw Error("NotUnivocal", "unexpected bifurcation value");
        digit = it->second;
      }
      rank = rank * radix + digit;
    }
    if (filled[rank])
      throw Error("NotUnivocal", "choice relation not single-valued");
    filled[rank] = true;
    for (size_t ni = 0; ni < n_nodes; ++ni) {
      auto it = node_branch_code[ni].find(row[node_col[ni]]);
      if (it == node_branch_code[ni].end())
        throw Error("NotUnivocal", "unknown branch value in table");
      cf.table[rank * n_nodes + ni] = it->second;
    }
  }
  return cf;
}

inline bool is_univocal(const RoutedGraph& g) {
  try {
    choice_function(g);
    return true;
  } catch (const Error& e) {
    if (e.kind() == "NotUnivocal") return false;
    throw;
  }
}

inline bool is_biunivocal(const RoutedGraph& g) {
  return is_univocal(g) && is_univocal(adjoint(g));
}

/// Evaluates the M^gamma-Happens function at a bifurcation vector.
inline bool happens(const ChoiceFunction& cf, const NodeId& node,
                    const std::string& branch,
                    const std::vector<IndexValue>& bifurcations) {
  size_t rank = cf.rank_of(bifurcations);
  return cf.branch_at(rank, node) == branch;
}

}  // namespace rqc
