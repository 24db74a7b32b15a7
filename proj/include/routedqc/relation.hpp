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

#include <cassert>
#include <map>
#include <optional>
#include <unordered_map>

#include "routedqc/index_value.hpp"

namespace rqc {

using ArrowId = std::string;

/// An assignment of one value per arrow, entries sorted by arrow id.
struct IndexTuple {
  std::vector<std::pair<ArrowId, IndexValue>> entries;

  IndexTuple() = default;
  explicit IndexTuple(std::vector<std::pair<ArrowId, IndexValue>> e)
      : entries(std::move(e)) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t i = 1; i < entries.size(); ++i)
      if (entries[i].first == entries[i - 1].first)
        throw Error("InvalidTuple", "duplicate arrow id " + entries[i].first);
  }

  const IndexValue& value_for(const ArrowId& id) const {
    auto it = std::lower_bound(
        entries.begin(), entries.end(), id,
        [](const auto& e, const ArrowId& a) { return e.first < a; });
    if (it == entries.end() || it->first != id)
      throw Error("InvalidTuple", "no entry for arrow " + id);
    return it->second;
  }

  std::string str() const {
    std::ostringstream os;
    os << '(';
    for (size_t i = 0; i < entries.size(); ++i) {
      if (i) os << ' ';
      os << entries[i].first << '=' << entries[i].second.str();
    }
    os << ')';
    return os.str();
  }

  friend bool operator==(const IndexTuple& a, const IndexTuple& b) {
    return a.entries == b.entries;
  }
  friend bool operator<(const IndexTuple& a, const IndexTuple& b) {
    return a.entries < b.entries;
  }
};

/**
 * A finite Boolean relation between tuples of index values.
 *
 * Arrows (with their alphabets) name the input and output legs; the relation
 * itself is stored extensionally as the set of related (in, out) rows, each
 * row aligned with the sorted arrow lists.
 */
class Relation {
 public:
  using ArrowList = std::vector<std::pair<ArrowId, Alphabet>>;
  // Values aligned with in_arrows() / out_arrows() order.
  using Row = std::pair<std::vector<IndexValue>, std::vector<IndexValue>>;

  Relation() = default;

  Relation(ArrowList in_arrows, ArrowList out_arrows,
           std::vector<Row> pairs = {})
      : in_(sorted(std::move(in_arrows))), out_(sorted(std::move(out_arrows))) {
    for (auto& r : pairs) add_pair_unaligned(r);
  }

  const ArrowList& in_arrows() const { return in_; }
  const ArrowList& out_arrows() const { return out_; }
  const std::set<Row>& rows() const { return pairs_; }
  size_t size() const { return pairs_.size(); }

  int in_index(const ArrowId& id) const { return find_index(in_, id); }
  int out_index(const ArrowId& id) const { return find_index(out_, id); }

  /// Adds a related pair given as (arrow->value) maps; validates alphabets.
  void add_pair(const std::map<ArrowId, IndexValue>& in,
                const std::map<ArrowId, IndexValue>& out) {
    pairs_.insert(Row{align(in_, in), align(out_, out)});
  }

  /// Adds a pair whose value vectors are already aligned with the arrow order.
  void add_row(std::vector<IndexValue> in, std::vector<IndexValue> out) {
    Row r{std::move(in), std::move(out)};
    check_row(r);
    pairs_.insert(std::move(r));
  }

  IndexTuple in_tuple(const std::vector<IndexValue>& vals) const {
    return tuple_of(in_, vals);
  }
  IndexTuple out_tuple(const std::vector<IndexValue>& vals) const {
    return tuple_of(out_, vals);
  }

  bool relates(const std::vector<IndexValue>& in,
               const std::vector<IndexValue>& out) const {
    return pairs_.count(Row{in, out}) > 0;
  }

  /// λ(k): all output rows related to the given input row.
  std::set<std::vector<IndexValue>> image(
      const std::vector<IndexValue>& in) const {
    std::set<std::vector<IndexValue>> img;
    for (auto it = pairs_.lower_bound(Row{in, {}});
         it != pairs_.end() && it->first == in; ++it)
      img.insert(it->second);
    return img;
  }

  friend bool operator==(const Relation& a, const Relation& b) {
    return a.in_ == b.in_ && a.out_ == b.out_ && a.pairs_ == b.pairs_;
  }

 private:
  static ArrowList sorted(ArrowList arrows) {
    std::sort(arrows.begin(), arrows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t i = 1; i < arrows.size(); ++i)
      if (arrows[i].first == arrows[i - 1].first)
        throw Error("ArrowCollision", "duplicate arrow " + arrows[i].first);
    for (auto& a : arrows) {
      a.second = make_alphabet(a.second);
      if (a.second.empty())
        throw Error("InvalidAlphabet", "empty alphabet on " + a.first);
    }
    return arrows;
  }

  static int find_index(const ArrowList& arrows, const ArrowId& id) {
    for (size_t i = 0; i < arrows.size(); ++i)
      if (arrows[i].first == id) return static_cast<int>(i);
    throw Error("InvalidTuple", "relation has no arrow " + id);
  }

  static std::vector<IndexValue> align(const ArrowList& arrows,
                                       const std::map<ArrowId, IndexValue>& m) {
    if (m.size() != arrows.size())
      throw Error("InvalidTuple", "value map does not cover the arrow list");
    std::vector<IndexValue> vals;
    vals.reserve(arrows.size());
    for (const auto& [id, alpha] : arrows) {
      auto it = m.find(id);
      if (it == m.end()) throw Error("InvalidTuple", "missing value for " + id);
      if (!alphabet_contains(alpha, it->second))
        throw Error("InvalidValue",
                    "value " + it->second.str() + " not in alphabet of " + id);
      vals.push_back(it->second);
    }
    return vals;
  }

  static IndexTuple tuple_of(const ArrowList& arrows,
                             const std::vector<IndexValue>& vals) {
    if (vals.size() != arrows.size())
      throw Error("InvalidTuple", "row width does not match arrow list");
    std::vector<std::pair<ArrowId, IndexValue>> entries;
    entries.reserve(vals.size());
    for (size_t i = 0; i < vals.size(); ++i)
      entries.emplace_back(arrows[i].first, vals[i]);
    return IndexTuple(std::move(entries));
  }

  void check_row(const Row& r) const {
    if (r.first.size() != in_.size() || r.second.size() != out_.size())
      throw Error("InvalidTuple", "row width does not match arrow lists");
    for (size_t i = 0; i < in_.size(); ++i)
      if (!alphabet_contains(in_[i].second, r.first[i]))
        throw Error("InvalidValue", "value " + r.first[i].str() +
                                        " not in alphabet of " + in_[i].first);
    for (size_t i = 0; i < out_.size(); ++i)
      if (!alphabet_contains(out_[i].second, r.second[i]))
        throw Error("InvalidValue", "value " + r.second[i].str() +
                                        " not in alphabet of " + out_[i].first);
  }

  void add_pair_unaligned(Row& r) {
    check_row(r);
    pairs_.insert(std::move(r));
  }

  ArrowList in_, out_;
  std::set<Row> pairs_;
};

/// Practical domain: inputs related to at least one output.
inline std::set<std::vector<IndexValue>> practical_domain(const Relation& r) {
  std::set<std::vector<IndexValue>> dom;
  for (const auto& p : r.rows()) dom.insert(p.first);
  return dom;
}

/// Practical codomain: outputs related to at least one input.
inline std::set<std::vector<IndexValue>> practical_codomain(const Relation& r) {
  std::set<std::vector<IndexValue>> cod;
  for (const auto& p : r.rows()) cod.insert(p.second);
  return cod;
}

inline Relation converse(const Relation& r) {
  Relation c(r.out_arrows(), r.in_arrows());
  for (const auto& p : r.rows()) c.add_row(p.second, p.first);
  return c;
}

inline bool is_branched(const Relation& r) {
  // Group inputs by image; distinct images must be pairwise disjoint.
  std::map<std::vector<IndexValue>, std::set<std::vector<IndexValue>>> images;
  for (const auto& p : r.rows()) images[p.first].insert(p.second);
  std::set<std::set<std::vector<IndexValue>>> distinct;
  for (const auto& [in, img] : images) distinct.insert(img);
  std::set<std::vector<IndexValue>> seen;
  for (const auto& img : distinct)
    for (const auto& out : img)
      if (!seen.insert(out).second) return false;
  return true;
}

/// A branch of a branched relation: a maximal fully-related block.
struct Branch {
  std::string label;  // canonical; derived from the minimal input row
  std::set<std::vector<IndexValue>> inputs;   // K^beta
  std::set<std::vector<IndexValue>> outputs;  // L^beta
};

inline std::string branch_label_for(const Relation& r,
                                    const std::vector<IndexValue>& min_input) {
  // Render the non-null entries, dropping arrows with singleton alphabets
  // (they carry no information and would clutter the label). When every
  // arrow is singleton, fall back to rendering all non-null entries.
  const auto& arrows = r.in_arrows();
  auto render = [&](bool skip_singletons) {
    std::ostringstream os;
    os << '[';
    bool any = false;
    for (size_t i = 0; i < min_input.size(); ++i) {
      if (min_input[i].is_null()) continue;
      if (skip_singletons && arrows[i].second.size() == 1) continue;
      if (any) os << ' ';
      os << arrows[i].first << '=' << min_input[i].str();
      any = true;
    }
    if (!any) os << "null";
    os << ']';
    return os.str();
  };
  std::string label = render(true);
  if (label == "[null]") {
    std::string full = render(false);
    if (full != "[null]") return full;
  }
  return label;
}

/// The unique partition of the practical domain/codomain of a branched
/// relation into branches. The empty relation has zero branches.
inline std::vector<Branch> branches(const Relation& r) {
  std::map<std::vector<IndexValue>, std::set<std::vector<IndexValue>>> images;
  for (const auto& p : r.rows()) images[p.first].insert(p.second);
  std::map<std::set<std::vector<IndexValue>>,
           std::set<std::vector<IndexValue>>>
      groups;  // image -> set of inputs
  for (const auto& [in, img] : images) groups[img].insert(in);
  // Branched check: distinct images pairwise disjoint.
  std::set<std::vector<IndexValue>> seen;
  for (const auto& [img, ins] : groups)
    for (const auto& out : img)
      if (!seen.insert(out).second)
        throw Error("NotBranched", "relation images overlap without agreeing");
  std::vector<Branch> out;
  for (const auto& [img, ins] : groups) {
    Branch b;
    b.inputs = ins;
    b.outputs = img;
    b.label = branch_label_for(r, *ins.begin());
    out.push_back(std::move(b));
  }
  std::sort(out.begin(), out.end(),
            [](const Branch& a, const Branch& b) { return a.label < b.label; });
  return out;
}

namespace detail {

/// Encodes a full output row as a single atom, so bifurcation choices can
/// ride on ordinary arrows.
inline IndexValue encode_choice(const std::vector<IndexValue>& out_row) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < out_row.size(); ++i) {
    if (i) os << '|';
    os << out_row[i].str();
  }
  os << "]";
  return IndexValue::atom(os.str());
}

inline std::vector<IndexValue> decode_choice(const IndexValue& v) {
  const std::string& s = v.atom_name();
  if (s.size() < 2 || s.front() != '[' || s.back() != ']')
    throw Error("InvalidBifurcation", "not an encoded choice: " + v.str());
  std::vector<IndexValue> out;
  std::string body = s.substr(1, s.size() - 2);
  if (body.empty()) return out;
  std::istringstream is(body);
  std::string tok;
  while (std::getline(is, tok, '|')) out.push_back(IndexValue::parse(tok));
  return out;
}

}  // namespace detail

/**
 * The augmented version of a branched relation: alongside the original input
 * it takes one bifurcation choice per branch and outputs the chosen row of
 * the branch that happens, together with that branch's name.
 *
 * Auxiliary inputs for branches with a single output row are trivial; they
 * are kept in `aux_in` but omitted from the materialised relation.
 */
struct AugmentedRelation {
  Relation base;
  std::vector<Branch> branch_list;
  // One entry per branch, aligned with branch_list: the aux-in alphabet
  // (encoded output rows of that branch).
  std::vector<Alphabet> aux_in;
  Alphabet aux_out;       // encoded branch labels
  Relation as_relation;   // over base arrows + nontrivial aux + branch output
};

/**
 * Augments a branched relation. `prefix` namespaces the auxiliary arrow ids
 * ("aux:<prefix>:<branch>" and "bran:<prefix>") so augmented routes of
 * different nodes can be composed side by side.
 */
inline AugmentedRelation augment(const Relation& r,
                                 const std::string& prefix = "") {
  AugmentedRelation a;
  a.base = r;
  a.branch_list = branches(r);  // throws NotBranched if not branched

  Relation::ArrowList in = r.in_arrows();
  std::vector<int> aux_col(a.branch_list.size(), -1);
  for (size_t bi = 0; bi < a.branch_list.size(); ++bi) {
    const Branch& b = a.branch_list[bi];
    Alphabet alpha;
    for (const auto& out_row : b.outputs)
      alpha.push_back(detail::encode_choice(out_row));
    alpha = make_alphabet(alpha);
    a.aux_in.push_back(alpha);
    if (alpha.size() > 1)
      in.emplace_back("aux:" + prefix + ":" + b.label, alpha);
  }
  Relation::ArrowList out = r.out_arrows();
  for (const auto& b : a.branch_list)
    a.aux_out.push_back(IndexValue::atom(b.label));
  a.aux_out = make_alphabet(a.aux_out);
  out.emplace_back("bran:" + prefix, a.aux_out);

  Relation rel(in, out);
  // Enumerate every combination of nontrivial bifurcation choices; the
  // happening branch forwards its own choice.
  std::vector<size_t> nontrivial;
  for (size_t bi = 0; bi < a.branch_list.size(); ++bi)
    if (a.aux_in[bi].size() > 1) nontrivial.push_back(bi);

  std::vector<size_t> pick(nontrivial.size(), 0);
  auto emit_for_choice = [&]() {
    for (size_t bi = 0; bi < a.branch_list.size(); ++bi) {
      const Branch& b = a.branch_list[bi];
      // The choice for branch bi under the current pick.
      std::vector<IndexValue> chosen_row;
      if (a.aux_in[bi].size() == 1) {
        chosen_row = detail::decode_choice(a.aux_in[bi][0]);
      } else {
        size_t pos = std::find(nontrivial.begin(), nontrivial.end(), bi) -
                     nontrivial.begin();
        chosen_row = detail::decode_choice(a.aux_in[bi][pick[pos]]);
      }
      for (const auto& in_row : b.inputs) {
        std::vector<IndexValue> full_in = in_row;
        for (size_t p = 0; p < nontrivial.size(); ++p)
          full_in.push_back(a.aux_in[nontrivial[p]][pick[p]]);
        std::vector<IndexValue> full_out = chosen_row;
        full_out.push_back(IndexValue::atom(b.label));
        // Rows must be aligned with the sorted arrow lists of `rel`.
        std::map<ArrowId, IndexValue> im, om;
        const auto& bin = r.in_arrows();
        for (size_t i = 0; i < bin.size(); ++i) im[bin[i].first] = in_row[i];
        for (size_t p = 0; p < nontrivial.size(); ++p)
          im["aux:" + prefix + ":" + a.branch_list[nontrivial[p]].label] =
              a.aux_in[nontrivial[p]][pick[p]];
        const auto& bout = r.out_arrows();
        for (size_t i = 0; i < bout.size(); ++i)
          om[bout[i].first] = chosen_row[i];
        om["bran:" + prefix] = IndexValue::atom(b.label);
        rel.add_pair(im, om);
      }
    }
  };
  if (nontrivial.empty()) {
    emit_for_choice();
  } else {
    while (true) {
      emit_for_choice();
      size_t p = 0;
      while (p < pick.size()) {
        if (++pick[p] < a.aux_in[nontrivial[p]].size()) break;
        pick[p] = 0;
        ++p;
      }
      if (p == pick.size()) break;
    }
  }
  a.as_relation = std::move(rel);
  return a;
}

// ---------------------------------------------------------------------------
// Multi-term composition (Boolean link product) via relational join.
// ---------------------------------------------------------------------------

namespace detail {

/// Interning pool: IndexValue <-> dense int code, local to one join run.
class ValuePool {
 public:
  int32_t code(const IndexValue& v) {
    auto it = codes_.find(v);
    if (it != codes_.end()) return it->second;
    int32_t c = static_cast<int32_t>(values_.size());
    values_.push_back(v);
    codes_.emplace(v, c);
    return c;
  }
  const IndexValue& value(int32_t c) const { return values_[c]; }

 private:
  std::map<IndexValue, int32_t> codes_;
  std::vector<IndexValue> values_;
};

/// A flat column-oriented table of interned rows used by the join engine.
struct Table {
  std::vector<std::string> cols;  // unique column names
  std::vector<int32_t> data;      // rows * cols, row-major
  size_t nrows = 0;

  size_t ncols() const { return cols.size(); }
  const int32_t* row(size_t r) const { return data.data() + r * ncols(); }
  int col_index(const std::string& name) const {
    for (size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return static_cast<int>(i);
    return -1;
  }
};

/// Equality-joins two tables on their common columns (cartesian product if
/// none), keeping one copy of each shared column.
inline Table join(const Table& a, const Table& b) {
  std::vector<int> a_shared, b_shared;
  for (size_t i = 0; i < b.cols.size(); ++i) {
    int ai = a.col_index(b.cols[i]);
    if (ai >= 0) {
      a_shared.push_back(ai);
      b_shared.push_back(static_cast<int>(i));
    }
  }
  std::vector<int> b_keep;
  for (size_t i = 0; i < b.cols.size(); ++i)
    if (std::find(b_shared.begin(), b_shared.end(), static_cast<int>(i)) ==
        b_shared.end())
      b_keep.push_back(static_cast<int>(i));

  Table out;
  out.cols = a.cols;
  for (int i : b_keep) out.cols.push_back(b.cols[i]);

  // Index the smaller-row-count side on the shared key.
  std::unordered_map<std::string, std::vector<size_t>> index;
  auto key_of = [&](const Table& t, size_t r, const std::vector<int>& cols) {
    std::string key;
    key.reserve(cols.size() * 4);
    for (int c : cols) {
      int32_t v = t.row(r)[c];
      key.append(reinterpret_cast<const char*>(&v), 4);
    }
    return key;
  };
  for (size_t r = 0; r < b.nrows; ++r)
    index[key_of(b, r, b_shared)].push_back(r);

  for (size_t ra = 0; ra < a.nrows; ++ra) {
    auto it = index.find(key_of(a, ra, a_shared));
    if (it == index.end()) continue;
    for (size_t rb : it->second) {
      const int32_t* arow = a.row(ra);
      out.data.insert(out.data.end(), arow, arow + a.ncols());
      for (int i : b_keep) out.data.push_back(b.row(rb)[i]);
      ++out.nrows;
    }
  }
  return out;
}

inline void drop_columns(Table& t, const std::set<std::string>& names) {
  std::vector<int> keep;
  for (size_t i = 0; i < t.cols.size(); ++i)
    if (!names.count(t.cols[i])) keep.push_back(static_cast<int>(i));
  if (keep.size() == t.cols.size()) return;
  std::vector<std::string> cols;
  for (int i : keep) cols.push_back(t.cols[i]);
  std::vector<int32_t> data;
  data.reserve(t.nrows * keep.size());
  for (size_t r = 0; r < t.nrows; ++r)
    for (int i : keep) data.push_back(t.row(r)[i]);
  t.cols = std::move(cols);
  t.data = std::move(data);
  // Deduplicate rows (Boolean semantics): sort an index permutation, then
  // copy unique rows in their original first-seen order via a stable mark.
  size_t w = t.cols.size();
  if (w == 0) {
    t.nrows = t.nrows > 0 ? 1 : 0;
    t.data.clear();
    return;
  }
  std::vector<size_t> order(t.nrows);
  for (size_t r = 0; r < t.nrows; ++r) order[r] = r;
  auto cmp = [&](size_t a, size_t b) {
    const int32_t* ra = t.data.data() + a * w;
    const int32_t* rb = t.data.data() + b * w;
    return std::lexicographical_compare(ra, ra + w, rb, rb + w);
  };
  std::sort(order.begin(), order.end(), cmp);
  std::vector<int32_t> dedup;
  dedup.reserve(t.data.size());
  size_t kept = 0;
  for (size_t i = 0; i < order.size(); ++i) {
    if (i > 0) {
      const int32_t* ra = t.data.data() + order[i - 1] * w;
      const int32_t* rb = t.data.data() + order[i] * w;
      if (std::equal(ra, ra + w, rb)) continue;
    }
    const int32_t* rb = t.data.data() + order[i] * w;
    dedup.insert(dedup.end(), rb, rb + w);
    ++kept;
  }
  t.data = std::move(dedup);
  t.nrows = kept;
}

/// Column names for a relation placed in a join: "i:<arrow>" / "o:<arrow>".
inline Table table_of(const Relation& r, ValuePool& pool) {
  Table t;
  for (const auto& [id, alpha] : r.in_arrows()) t.cols.push_back("i:" + id);
  for (const auto& [id, alpha] : r.out_arrows()) t.cols.push_back("o:" + id);
  for (const auto& p : r.rows()) {
    for (const auto& v : p.first) t.data.push_back(pool.code(v));
    for (const auto& v : p.second) t.data.push_back(pool.code(v));
    ++t.nrows;
  }
  return t;
}

}  // namespace detail

namespace detail {

/**
 * Joins all relations over the arrows in `shared` (each must be produced by
 * exactly one relation and consumed by exactly one). Column naming in the
 * result: "i:<arrow>" for surviving inputs, "o:<arrow>" for surviving
 * outputs, "s:<arrow>" for shared arrows when `keep_shared` is set (with
 * `keep_shared` false they are traced out as soon as both endpoints are in).
 */
inline Table compose_table(const std::vector<Relation>& relations,
                           const std::set<ArrowId>& shared, ValuePool& pool,
                           bool keep_shared) {
  // Validate the shared/unshared arrow structure.
  std::map<ArrowId, int> in_count, out_count;
  std::map<ArrowId, Alphabet> in_alpha, out_alpha;
  for (const auto& r : relations) {
    for (const auto& [id, alpha] : r.in_arrows()) {
      in_count[id]++;
      in_alpha[id] = alpha;
    }
    for (const auto& [id, alpha] : r.out_arrows()) {
      out_count[id]++;
      out_alpha[id] = alpha;
    }
  }
  for (const auto& id : shared) {
    if (in_count[id] != 1 || out_count[id] != 1)
      throw Error("ArrowCollision", "shared arrow " + id +
                                        " must have exactly one producer and "
                                        "one consumer");
    if (in_alpha[id] != out_alpha[id])
      throw Error("AlphabetMismatch", "alphabets differ on shared " + id);
  }
  for (const auto& [id, c] : in_count)
    if (!shared.count(id) && (c > 1 || out_count[id] > 0))
      throw Error("ArrowCollision", "unshared arrow " + id + " is not unique");
  for (const auto& [id, c] : out_count)
    if (!shared.count(id) && c > 1)
      throw Error("ArrowCollision", "unshared arrow " + id + " is not unique");

  std::vector<Table> tables;
  for (const auto& r : relations) {
    Table t = table_of(r, pool);
    // Unify shared columns up front: rename "i:X"/"o:X" to "s:X".
    for (auto& c : t.cols) {
      ArrowId id = c.substr(2);
      if (shared.count(id)) c = "s:" + id;
    }
    // A relation may touch a shared arrow on both sides (self-loop): then the
    // rename above creates duplicate column names; filter rows and keep one.
    std::map<std::string, int> first;
    std::vector<int> dup_of(t.cols.size(), -1);
    for (size_t i = 0; i < t.cols.size(); ++i) {
      auto it = first.find(t.cols[i]);
      if (it == first.end())
        first[t.cols[i]] = static_cast<int>(i);
      else
        dup_of[i] = it->second;
    }
    bool has_dup = false;
    for (int d : dup_of)
      if (d >= 0) has_dup = true;
    if (has_dup) {
      Table filtered;
      for (size_t i = 0; i < t.cols.size(); ++i)
        if (dup_of[i] < 0) filtered.cols.push_back(t.cols[i]);
      for (size_t r2 = 0; r2 < t.nrows; ++r2) {
        bool ok = true;
        for (size_t i = 0; i < t.cols.size(); ++i)
          if (dup_of[i] >= 0 && t.row(r2)[i] != t.row(r2)[dup_of[i]])
            ok = false;
        if (!ok) continue;
        for (size_t i = 0; i < t.cols.size(); ++i)
          if (dup_of[i] < 0) filtered.data.push_back(t.row(r2)[i]);
        ++filtered.nrows;
      }
      t = std::move(filtered);
    }
    tables.push_back(std::move(t));
  }
  if (tables.empty()) {
    Table t;
    t.nrows = 1;  // empty product: the unit relation
    return t;
  }

  // Greedy schedule: start from the smallest table; repeatedly join the
  // smallest table sharing a column, falling back to the smallest overall.
  std::vector<bool> used(tables.size(), false);
  size_t start = 0;
  for (size_t i = 1; i < tables.size(); ++i)
    if (tables[i].nrows < tables[start].nrows) start = i;
  Table acc = std::move(tables[start]);
  used[start] = true;
  std::set<std::string> acc_cols(acc.cols.begin(), acc.cols.end());
  size_t remaining = tables.size() - 1;
  while (remaining > 0) {
    int best = -1;
    bool best_connected = false;
    for (size_t i = 0; i < tables.size(); ++i) {
      if (used[i]) continue;
      bool connected = false;
      for (const auto& c : tables[i].cols)
        if (acc_cols.count(c)) connected = true;
      if (best < 0 || (connected && !best_connected) ||
          (connected == best_connected &&
           tables[i].nrows < tables[best].nrows)) {
        best = static_cast<int>(i);
        best_connected = connected;
      }
    }
    acc = join(acc, tables[best]);
    used[best] = true;
    --remaining;
    acc_cols.clear();
    for (const auto& c : acc.cols) acc_cols.insert(c);
    if (!keep_shared) {
      // Trace out shared columns no longer referenced by pending tables.
      std::set<std::string> pending;
      for (size_t i = 0; i < tables.size(); ++i)
        if (!used[i])
          for (const auto& c : tables[i].cols) pending.insert(c);
      std::set<std::string> drop;
      for (const auto& c : acc.cols)
        if (c.rfind("s:", 0) == 0 && !pending.count(c)) drop.insert(c);
      if (!drop.empty()) {
        drop_columns(acc, drop);
        acc_cols.clear();
        for (const auto& c : acc.cols) acc_cols.insert(c);
      }
    }
  }
  return acc;
}

}  // namespace detail

/**
 * Multi-term link product of relations: contracts every arrow in `shared`
 * (which must be produced by exactly one relation and consumed by exactly
 * one), relating the remaining inputs to the remaining outputs whenever a
 * consistent assignment of all shared arrows exists.
 */
inline Relation compose(const std::vector<Relation>& relations,
                        const std::set<ArrowId>& shared) {
  std::map<ArrowId, Alphabet> in_alpha, out_alpha;
  for (const auto& r : relations) {
    for (const auto& [id, alpha] : r.in_arrows()) in_alpha[id] = alpha;
    for (const auto& [id, alpha] : r.out_arrows()) out_alpha[id] = alpha;
  }
  detail::ValuePool pool;
  detail::Table acc =
      detail::compose_table(relations, shared, pool, /*keep_shared=*/false);

  // Assemble the result relation from the remaining i:/o: columns.
  Relation::ArrowList rin, rout;
  std::vector<int> in_cols, out_cols;
  for (size_t i = 0; i < acc.cols.size(); ++i) {
    const std::string& c = acc.cols[i];
    ArrowId id = c.substr(2);
    if (c.rfind("i:", 0) == 0) {
      rin.emplace_back(id, in_alpha[id]);
      in_cols.push_back(static_cast<int>(i));
    } else if (c.rfind("o:", 0) == 0) {
      rout.emplace_back(id, out_alpha[id]);
      out_cols.push_back(static_cast<int>(i));
    }
  }
  // Sort column extraction to match the sorted arrow lists of Relation.
  std::vector<size_t> in_order(rin.size()), out_order(rout.size());
  for (size_t i = 0; i < in_order.size(); ++i) in_order[i] = i;
  for (size_t i = 0; i < out_order.size(); ++i) out_order[i] = i;
  std::sort(in_order.begin(), in_order.end(), [&](size_t a, size_t b) {
    return rin[a].first < rin[b].first;
  });
  std::sort(out_order.begin(), out_order.end(), [&](size_t a, size_t b) {
    return rout[a].first < rout[b].first;
  });

  Relation result(rin, rout);
  for (size_t r = 0; r < acc.nrows; ++r) {
    std::vector<IndexValue> iv, ov;
    iv.reserve(in_order.size());
    ov.reserve(out_order.size());
    for (size_t i : in_order)
      iv.push_back(pool.value(acc.row(r)[in_cols[i]]));
    for (size_t i : out_order)
      ov.push_back(pool.value(acc.row(r)[out_cols[i]]));
    result.add_row(std::move(iv), std::move(ov));
  }
  return result;
}

}  // namespace rqc
