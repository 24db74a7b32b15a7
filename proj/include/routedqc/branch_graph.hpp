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

#include "routedqc/routed_graph.hpp"

namespace rqc {

struct BranchNode {
  NodeId node;
  std::string branch;

  friend bool operator==(const BranchNode& a, const BranchNode& b) {
    return a.node == b.node && a.branch == b.branch;
  }
  friend bool operator<(const BranchNode& a, const BranchNode& b) {
    return std::tie(a.node, a.branch) < std::tie(b.node, b.branch);
  }
  std::string str() const { return node + "^" + branch; }
};

enum class EdgeColor { Solid, Green, Red };

struct BranchGraph {
  std::vector<BranchNode> nodes;  // sorted
  std::set<std::pair<BranchNode, BranchNode>> solid;
  std::set<std::pair<BranchNode, BranchNode>> green;
  std::set<std::pair<BranchNode, BranchNode>> red;
  std::set<BranchNode> unreachable;  // never selected by the choice function
};

namespace detail {

/// All globally consistent assignments of index values to every arrow.
struct AssignmentTable {
  std::vector<ArrowId> arrows;  // column per arrow
  ValuePool pool;
  std::vector<int32_t> data;
  size_t nrows = 0;

  const int32_t* row(size_t r) const { return data.data() + r * arrows.size(); }
  int col(const ArrowId& id) const {
    for (size_t i = 0; i < arrows.size(); ++i)
      if (arrows[i] == id) return static_cast<int>(i);
    return -1;
  }
};

inline AssignmentTable global_assignments(const RoutedGraph& g) {
  AssignmentTable at;
  std::vector<Relation> routes;
  std::set<ArrowId> internal;
  for (const auto& a : g.arrows())
    if (a.is_internal()) internal.insert(a.id);
  for (const auto& n : g.nodes()) routes.push_back(g.route(n));
  Table t = compose_table(routes, internal, at.pool, /*keep_shared=*/true);
  at.arrows.reserve(t.cols.size());
  for (const auto& c : t.cols) at.arrows.push_back(c.substr(2));
  at.data = std::move(t.data);
  at.nrows = t.nrows;
  return at;
}

}  // namespace detail

/**
 * The set of values on an arrow from src.node to dst.node that extend to a
 * globally consistent assignment lying in the given branches. Returns the
 * empty set when the nodes are not adjacent; with several arrows between the
 * two nodes, `via` selects one (else AmbiguousArrow).
 */
inline std::set<IndexValue> link_values(
    const RoutedGraph& g, const BranchNode& src, const BranchNode& dst,
    const std::optional<ArrowId>& via = std::nullopt) {
  std::vector<const Arrow*> arrows = g.arrows_between(src.node, dst.node);
  if (arrows.empty()) return {};
  const Arrow* arrow = nullptr;
  if (via) {
    for (const Arrow* a : arrows)
      if (a->id == *via) arrow = a;
    if (!arrow) throw Error("AmbiguousArrow", "no arrow " + *via +
                                                  " between " + src.node +
                                                  " and " + dst.node);
  } else if (arrows.size() > 1) {
    throw Error("AmbiguousArrow", "several arrows between " + src.node +
                                      " and " + dst.node +
                                      "; specify one explicitly");
  } else {
    arrow = arrows[0];
  }

  detail::AssignmentTable at = detail::global_assignments(g);
  auto branch_of = [&](const NodeId& n,
                       const std::string& label) -> Branch {
    for (const auto& b : branches(g.route(n)))
      if (b.label == label) return b;
    throw Error("InvalidBranch", n + " has no branch " + label);
  };
  Branch sb = branch_of(src.node, src.branch);
  Branch db = branch_of(dst.node, dst.branch);

  // Columns of src's out-arrows and dst's in-arrows, in sorted-arrow order
  // (the order used by route rows and hence by branch input/output rows).
  auto cols_of = [&](const std::vector<const Arrow*>& as) {
    std::vector<std::pair<ArrowId, int>> cols;
    for (const Arrow* a : as) cols.emplace_back(a->id, at.col(a->id));
    std::sort(cols.begin(), cols.end());
    return cols;
  };
  auto src_cols = cols_of(g.out_arrows(src.node));
  auto dst_cols = cols_of(g.in_arrows(dst.node));
  int arrow_col = at.col(arrow->id);

  std::set<IndexValue> vals;
  for (size_t r = 0; r < at.nrows; ++r) {
    std::vector<IndexValue> srow, drow;
    for (const auto& [id, c] : src_cols)
      srow.push_back(at.pool.value(at.row(r)[c]));
    if (!sb.outputs.count(srow)) continue;
    for (const auto& [id, c] : dst_cols)
      drow.push_back(at.pool.value(at.row(r)[c]));
    if (!db.inputs.count(drow)) continue;
    vals.insert(at.pool.value(at.row(r)[arrow_col]));
  }
  return vals;
}

/// True iff the link-value set along some arrow src.node -> dst.node has a
/// non-one-dimensional element or more than one element.
inline bool strong_parent(const RoutedGraph& g, const BranchNode& src,
                          const BranchNode& dst) {
  for (const Arrow* a : g.arrows_between(src.node, dst.node)) {
    std::set<IndexValue> lv = link_values(g, src, dst, a->id);
    if (lv.size() > 1) return true;
    for (const auto& v : lv)
      if (!alphabet_contains(a->one_dim, v)) return true;
  }
  return false;
}

inline bool happens(const ChoiceFunction& cf, const BranchNode& target,
                    const std::vector<IndexValue>& bifurcations) {
  return happens(cf, target.node, target.branch, bifurcations);
}

/**
 * The branches whose bifurcation choice the target's Happens function
 * depends on. Branches with a single output row are never reported.
 */
inline std::set<BranchNode> weak_parents(const ChoiceFunction& cf,
                                         const BranchNode& target) {
  size_t n_nodes = cf.node_order.size();
  size_t tn = cf.node_index(target.node);
  int tb = cf.branch_index(target.node, target.branch);
  if (tb < 0) throw Error("InvalidBranch", target.str());

  std::set<BranchNode> parents;
  size_t n_inputs = cf.n_inputs();
  // stride[s] = product of radices after slot s.
  std::vector<size_t> stride(cf.slots.size(), 1);
  for (size_t s = cf.slots.size(); s-- > 1;)
    stride[s - 1] = stride[s] * cf.slots[s].choices.size();
  for (size_t s = 0; s < cf.slots.size(); ++s) {
    size_t radix = cf.slots[s].choices.size();
    if (radix <= 1) continue;
    size_t groups = n_inputs / radix;
    std::vector<uint8_t> base(groups, 2);  // 2 = unseen
    bool depends = false;
    for (size_t rank = 0; rank < n_inputs && !depends; ++rank) {
      size_t grp = (rank / (stride[s] * radix)) * stride[s] + rank % stride[s];
      uint8_t h = cf.table[rank * n_nodes + tn] == static_cast<uint16_t>(tb);
      if (base[grp] == 2)
        base[grp] = h;
      else if (base[grp] != h)
        depends = true;
    }
    if (depends) parents.insert({cf.slots[s].node, cf.slots[s].branch});
  }
  return parents;
}

namespace detail {

/// For every nontrivial slot, the set of (node, branch-index) whose Happens
/// value depends on that slot's choice. One pass per slot over the table.
inline std::map<size_t, std::set<std::pair<size_t, uint16_t>>>
weak_dependency_matrix(const ChoiceFunction& cf) {
  size_t n_nodes = cf.node_order.size();
  size_t n_inputs = cf.n_inputs();
  std::vector<size_t> stride(cf.slots.size(), 1);
  for (size_t s = cf.slots.size(); s-- > 1;)
    stride[s - 1] = stride[s] * cf.slots[s].choices.size();

  std::map<size_t, std::set<std::pair<size_t, uint16_t>>> result;
  for (size_t s = 0; s < cf.slots.size(); ++s) {
    size_t radix = cf.slots[s].choices.size();
    if (radix <= 1) continue;
    size_t groups = n_inputs / radix;
    // Baseline branch per (group, node); uint16_t max = unseen.
    std::vector<uint16_t> base(groups * n_nodes, 0xffff);
    auto& deps = result[s];
    for (size_t rank = 0; rank < n_inputs; ++rank) {
      size_t grp = (rank / (stride[s] * radix)) * stride[s] + rank % stride[s];
      const uint16_t* row = cf.table.data() + rank * n_nodes;
      uint16_t* b = base.data() + grp * n_nodes;
      for (size_t ni = 0; ni < n_nodes; ++ni) {
        if (b[ni] == 0xffff) {
          b[ni] = row[ni];
        } else if (b[ni] != row[ni]) {
          deps.insert({ni, row[ni]});
          deps.insert({ni, b[ni]});
        }
      }
    }
  }
  return result;
}

/// Matches each branch of `converse(route)` (adjoint view) to the label of
/// the corresponding branch of `route` (inputs and outputs swap roles).
inline std::map<std::string, std::string> adjoint_branch_map(
    const Relation& route) {
  std::map<std::string, std::string> m;
  auto orig = branches(route);
  for (const auto& ab : branches(converse(route))) {
    bool found = false;
    for (const auto& ob : orig)
      if (ob.outputs == ab.inputs && ob.inputs == ab.outputs) {
        m[ab.label] = ob.label;
        found = true;
        break;
      }
    if (!found)
      throw Error("InvalidBranch", "no matching adjoint branch for " + ab.label);
  }
  return m;
}

}  // namespace detail

/**
 * Builds the branch graph of a bi-univocal routed graph: solid edges from
 * strong parents, green dashed edges from weak parents, red dashed edges
 * from weak parents in the adjoint graph.
 */
inline BranchGraph build_branch_graph(const RoutedGraph& g) {
  RoutedGraph adj = adjoint(g);
  ChoiceFunction cf, cf_adj;
  try {
    cf = choice_function(g);
    cf_adj = choice_function(adj);
  } catch (const Error& e) {
    if (e.kind() == "NotUnivocal")
      throw Error("NotBiunivocal", e.what());
    throw;
  }

  BranchGraph bg;
  std::map<NodeId, std::vector<Branch>> node_branches;
  for (const auto& n : g.nodes()) {
    node_branches[n] = branches(g.route(n));
    for (const auto& b : node_branches[n]) bg.nodes.push_back({n, b.label});
  }
  std::sort(bg.nodes.begin(), bg.nodes.end());

  // Unreachable branches: never selected by the choice function.
  {
    size_t n_nodes = cf.node_order.size();
    std::vector<std::set<uint16_t>> seen(n_nodes);
    for (size_t rank = 0; rank < cf.n_inputs(); ++rank)
      for (size_t ni = 0; ni < n_nodes; ++ni)
        seen[ni].insert(cf.table[rank * n_nodes + ni]);
    for (size_t ni = 0; ni < n_nodes; ++ni)
      for (size_t bi = 0; bi < cf.node_branches[ni].size(); ++bi)
        if (!seen[ni].count(static_cast<uint16_t>(bi)))
          bg.unreachable.insert(
              {cf.node_order[ni], cf.node_branches[ni][bi]});
  }

  // Solid edges: strong parents along existing arrows.
  detail::AssignmentTable at = detail::global_assignments(g);
  std::set<std::pair<NodeId, NodeId>> adjacent;
  for (const auto& a : g.arrows())
    if (a.is_internal()) adjacent.insert({a.from, a.to});
  for (const auto& [from, to] : adjacent) {
    for (const Arrow* a : g.arrows_between(from, to)) {
      int arrow_col = at.col(a->id);
      auto cols_of = [&](const std::vector<const Arrow*>& as) {
        std::vector<std::pair<ArrowId, int>> cols;
        for (const Arrow* x : as) cols.emplace_back(x->id, at.col(x->id));
        std::sort(cols.begin(), cols.end());
        return cols;
      };
      auto src_cols = cols_of(g.out_arrows(from));
      auto dst_cols = cols_of(g.in_arrows(to));
      // Per (src-branch, dst-branch): the set of values seen on this arrow.
      std::map<std::pair<std::string, std::string>, std::set<IndexValue>> lv;
      for (size_t r = 0; r < at.nrows; ++r) {
        std::vector<IndexValue> srow, drow;
        for (const auto& [id, c] : src_cols)
          srow.push_back(at.pool.value(at.row(r)[c]));
        for (const auto& [id, c] : dst_cols)
          drow.push_back(at.pool.value(at.row(r)[c]));
        const Branch* sb = nullptr;
        const Branch* db = nullptr;
        for (const auto& b : node_branches[from])
          if (b.outputs.count(srow)) sb = &b;
        for (const auto& b : node_branches[to])
          if (b.inputs.count(drow)) db = &b;
        if (!sb || !db) continue;
        lv[{sb->label, db->label}].insert(at.pool.value(at.row(r)[arrow_col]));
      }
      for (const auto& [key, vals] : lv) {
        bool strong = vals.size() > 1;
        for (const auto& v : vals)
          if (!alphabet_contains(a->one_dim, v)) strong = true;
        if (strong)
          bg.solid.insert({BranchNode{from, key.first},
                           BranchNode{to, key.second}});
      }
    }
  }

  // Green edges: weak parents with respect to g.
  {
    auto deps = detail::weak_dependency_matrix(cf);
    for (const auto& [s, targets] : deps) {
      BranchNode parent{cf.slots[s].node, cf.slots[s].branch};
      for (const auto& [ni, bi] : targets)
        bg.green.insert(
            {parent, BranchNode{cf.node_order[ni], cf.node_branches[ni][bi]}});
    }
  }

  // Red edges: N^beta -> M^gamma iff M^gamma is a weak parent of N^beta in
  // the adjoint graph. Adjoint branches are mapped back structurally.
  {
    std::map<NodeId, std::map<std::string, std::string>> to_orig;
    for (const auto& n : g.nodes())
      to_orig[n] = detail::adjoint_branch_map(g.route(n));
    auto deps = detail::weak_dependency_matrix(cf_adj);
    for (const auto& [s, targets] : deps) {
      BranchNode parent{cf_adj.slots[s].node,
                        to_orig[cf_adj.slots[s].node].at(cf_adj.slots[s].branch)};
      for (const auto& [ni, bi] : targets) {
        const NodeId& tnode = cf_adj.node_order[ni];
        BranchNode child{tnode,
                         to_orig[tnode].at(cf_adj.node_branches[ni][bi])};
        bg.red.insert({child, parent});
      }
    }
  }
  return bg;
}

namespace detail {

struct ColoredEdge {
  int from, to;
  EdgeColor color;
};

/// Tarjan strongly-connected components over the union edge set.
inline std::vector<std::vector<int>> sccs(size_t n,
                                          const std::vector<ColoredEdge>& edges) {
  std::vector<std::vector<int>> out_adj(n);
  for (const auto& e : edges) out_adj[e.from].push_back(e.to);
  std::vector<int> index(n, -1), low(n, 0), on_stack(n, 0);
  std::vector<int> stack;
  std::vector<std::vector<int>> comps;
  int counter = 0;
  // Iterative Tarjan.
  struct Frame {
    int v;
    size_t child;
  };
  for (size_t root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call;
    call.push_back({static_cast<int>(root), 0});
    while (!call.empty()) {
      Frame& f = call.back();
      int v = f.v;
      if (f.child == 0) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = 1;
      }
      bool descended = false;
      while (f.child < out_adj[v].size()) {
        int w = out_adj[v][f.child++];
        if (index[w] == -1) {
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        std::vector<int> comp;
        while (true) {
          int w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp.push_back(w);
          if (w == v) break;
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
      }
      call.pop_back();
      if (!call.empty()) {
        int parent = call.back().v;
        low[parent] = std::min(low[parent], low[v]);
      }
    }
  }
  return comps;
}

inline std::vector<ColoredEdge> all_edges(const BranchGraph& bg,
                                          std::map<BranchNode, int>& idx) {
  idx.clear();
  for (size_t i = 0; i < bg.nodes.size(); ++i)
    idx[bg.nodes[i]] = static_cast<int>(i);
  std::vector<ColoredEdge> edges;
  for (const auto& [a, b] : bg.solid)
    edges.push_back({idx.at(a), idx.at(b), EdgeColor::Solid});
  for (const auto& [a, b] : bg.green)
    edges.push_back({idx.at(a), idx.at(b), EdgeColor::Green});
  for (const auto& [a, b] : bg.red)
    edges.push_back({idx.at(a), idx.at(b), EdgeColor::Red});
  return edges;
}

}  // namespace detail

/**
 * Reports every cycle-carrying component whose edges are not monochromatic
 * green or monochromatic red; empty result means only weak loops remain.
 */
inline std::vector<std::string> weak_loop_violations(const BranchGraph& bg) {
  std::map<BranchNode, int> idx;
  auto edges = detail::all_edges(bg, idx);
  auto comps = detail::sccs(bg.nodes.size(), edges);
  std::vector<std::string> violations;
  for (const auto& comp : comps) {
    std::set<int> members(comp.begin(), comp.end());
    // Internal edges of the component.
    std::set<EdgeColor> colors;
    size_t n_internal = 0;
    for (const auto& e : edges)
      if (members.count(e.from) && members.count(e.to)) {
        ++n_internal;
        colors.insert(e.color);
      }
    bool cyclic = comp.size() > 1 || n_internal > 0;  // self-loops included
    if (!cyclic) continue;
    bool weak = colors.size() == 1 && (*colors.begin() == EdgeColor::Green ||
                                       *colors.begin() == EdgeColor::Red);
    if (weak) continue;
    std::ostringstream os;
    os << "non-weak loop through {";
    for (size_t i = 0; i < comp.size(); ++i) {
      if (i) os << ", ";
      os << bg.nodes[comp[i]].str();
    }
    os << "}";
    violations.push_back(os.str());
  }
  return violations;
}

inline bool only_weak_loops(const BranchGraph& bg) {
  return weak_loop_violations(bg).empty();
}

/// True iff the branch graph has no directed cycle at all (of any colour).
inline bool is_loop_free(const BranchGraph& bg) {
  std::map<BranchNode, int> idx;
  auto edges = detail::all_edges(bg, idx);
  auto comps = detail::sccs(bg.nodes.size(), edges);
  for (const auto& comp : comps) {
    if (comp.size() > 1) return false;
    for (const auto& e : edges)
      if (e.from == comp[0] && e.to == comp[0]) return false;
  }
  return true;
}

struct ValidityReport {
  bool routes_branched = false;
  bool open_arrows_trivial = false;
  bool univocal = false;
  bool adjoint_univocal = false;
  bool loops_weak = false;
  bool valid = false;
  std::string failure_stage;         // empty when valid
  std::vector<std::string> details;  // offending nodes / cycles
  std::optional<BranchGraph> branch_graph;  // present when bi-univocal

  std::string summary() const {
    if (valid) {
      bool loop_free = branch_graph && is_loop_free(*branch_graph);
      return std::string("VALID (bi-univocal; branch graph ") +
             (loop_free ? "loop-free" : "has only weak loops") + ")";
    }
    std::string s = "INVALID (" + failure_stage;
    for (const auto& d : details) s += "; " + d;
    return s + ")";
  }
};

/// Runs the full validity pipeline: branched routes, trivially indexed open
/// arrows, bi-univocality, and the only-weak-loops condition.
inline ValidityReport is_valid(const RoutedGraph& g) {
  ValidityReport rep;
  rep.routes_branched = true;
  for (const auto& [n, r] : g.routes()) {
    if (!is_branched(r)) {
      rep.routes_branched = false;
      rep.details.push_back("route of " + n + " is not branched");
    }
  }
  if (!rep.routes_branched) {
    rep.failure_stage = "routes not branched";
    return rep;
  }
  rep.open_arrows_trivial = true;
  for (const auto& a : g.arrows())
    if (!a.is_internal() && a.alphabet.size() != 1) {
      rep.open_arrows_trivial = false;
      rep.details.push_back("open arrow " + a.id + " is nontrivially indexed");
    }
  if (!rep.open_arrows_trivial) {
    rep.failure_stage = "open arrows nontrivial";
    return rep;
  }
  rep.univocal = is_univocal(g);
  if (!rep.univocal) {
    rep.failure_stage = "not univocal";
    return rep;
  }
  rep.adjoint_univocal = is_univocal(adjoint(g));
  if (!rep.adjoint_univocal) {
    rep.failure_stage = "adjoint not univocal";
    return rep;
  }
  rep.branch_graph = build_branch_graph(g);
  auto violations = weak_loop_violations(*rep.branch_graph);
  rep.loops_weak = violations.empty();
  if (!rep.loops_weak) {
    rep.failure_stage = "non-weak loops";
    rep.details = violations;
    return rep;
  }
  rep.valid = true;
  return rep;
}

/// Deterministic Graphviz rendering: solid black strong-parent edges, dashed
/// green / dashed red weak-parent edges.
inline std::string to_dot(const BranchGraph& bg) {
  std::ostringstream os;
  os << "digraph branches {\n";
  std::map<BranchNode, std::string> name;
  int i = 0;
  for (const auto& n : bg.nodes) {
    name[n] = "b" + std::to_string(i++);
    os << "  " << name[n] << " [label=\"" << n.node << "^" << n.branch << "\"";
    if (bg.unreachable.count(n)) os << " style=dotted";
    os << "];\n";
  }
  for (const auto& [a, b] : bg.solid)
    os << "  " << name[a] << " -> " << name[b] << ";\n";
  for (const auto& [a, b] : bg.green)
    os << "  " << name[a] << " -> " << name[b]
       << " [style=dashed color=green];\n";
  for (const auto& [a, b] : bg.red)
    os << "  " << name[a] << " -> " << name[b]
       << " [style=dashed color=red];\n";
  os << "}\n";
  return os.str();
}

}  // namespace rqc
