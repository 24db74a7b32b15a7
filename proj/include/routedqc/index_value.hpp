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

#include <algorithm>
#include <cstdint>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rqc {

class Error : public std::runtime_error {
 public:
  Error(const std::string& kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(kind) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

/**
 * A single index value carried by an arrow of a routed graph.
 *
 * Three variants exist: the null value (rendered "-"), a sorted set of agent
 * ids (rendered "{1,3}"), and an opaque atom (rendered "@name"). Agent-set
 * values are what the generic QC-QC graphs use; atoms cover everything else
 * (ancilla markers, encoded tuples, branch names).
 */
class IndexValue {
 public:
  enum class Kind : uint8_t { Null = 0, Agents = 1, Atom = 2 };

  IndexValue() : kind_(Kind::Null) {}

  static IndexValue null() { return IndexValue(); }

  static IndexValue agents(std::vector<int> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    IndexValue v;
    v.kind_ = Kind::Agents;
    v.agents_ = std::move(ids);
    return v;
  }

  static IndexValue agents(std::initializer_list<int> ids) {
    return agents(std::vector<int>(ids));
  }

  static IndexValue atom(std::string name) {
    if (name.empty()) throw Error("InvalidValue", "empty atom name");
    IndexValue v;
    v.kind_ = Kind::Atom;
    v.atom_ = std::move(name);
    return v;
  }

  Kind kind() const { return kind_; }
  bool is_null() const { return kind_ == Kind::Null; }

  const std::vector<int>& agent_ids() const {
    if (kind_ != Kind::Agents) throw Error("InvalidValue", "not an agent set");
    return agents_;
  }

  const std::string& atom_name() const {
    if (kind_ != Kind::Atom) throw Error("InvalidValue", "not an atom");
    return atom_;
  }

  bool contains_agent(int k) const {
    return kind_ == Kind::Agents &&
           std::binary_search(agents_.begin(), agents_.end(), k);
  }

  std::string str() const {
    switch (kind_) {
      case Kind::Null:
        return "-";
      case Kind::Agents: {
        std::ostringstream os;
        os << '{';
        for (size_t i = 0; i < agents_.size(); ++i) {
          if (i) os << ',';
          os << agents_[i];
        }
        os << '}';
        return os.str();
      }
      case Kind::Atom:
        return "@" + atom_;
    }
    return "-";
  }

  // Inverse of str(). Accepts "-", "{}", "{1,3}", "@name".
  static IndexValue parse(const std::string& s) {
    if (s == "-") return null();
    if (!s.empty() && s.front() == '@') return atom(s.substr(1));
    if (s.size() >= 2 && s.front() == '{' && s.back() == '}') {
      std::vector<int> ids;
      std::string body = s.substr(1, s.size() - 2);
      std::istringstream is(body);
      std::string tok;
      while (std::getline(is, tok, ',')) {
        if (tok.empty()) continue;
        ids.push_back(std::stoi(tok));
      }
      return agents(std::move(ids));
    }
    throw Error("InvalidValue", "cannot parse index value '" + s + "'");
  }

  friend bool operator==(const IndexValue& a, const IndexValue& b) {
    if (a.kind_ != b.kind_) return false;
    switch (a.kind_) {
      case Kind::Null:
        return true;
      case Kind::Agents:
        return a.agents_ == b.agents_;
      case Kind::Atom:
        return a.atom_ == b.atom_;
    }
    return false;
  }
  friend bool operator!=(const IndexValue& a, const IndexValue& b) {
    return !(a == b);
  }
  friend bool operator<(const IndexValue& a, const IndexValue& b) {
    if (a.kind_ != b.kind_) return a.kind_ < b.kind_;
    switch (a.kind_) {
      case Kind::Null:
        return false;
      case Kind::Agents:
        return a.agents_ < b.agents_;
      case Kind::Atom:
        return a.atom_ < b.atom_;
    }
    return false;
  }

 private:
  Kind kind_;
  std::vector<int> agents_;
  std::string atom_;
};

inline std::ostream& operator<<(std::ostream& os, const IndexValue& v) {
  return os << v.str();
}

using Alphabet = std::vector<IndexValue>;  // kept sorted and duplicate-free

inline Alphabet make_alphabet(std::vector<IndexValue> vals) {
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  return vals;
}

inline bool alphabet_contains(const Alphabet& a, const IndexValue& v) {
  return std::binary_search(a.begin(), a.end(), v);
}

// All agent subsets of {1..n_agents} with the given size, in sorted order.
inline std::vector<std::vector<int>> subsets_of_size(int n_agents, int size) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) == size) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i <= n_agents; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(1);
  return out;
}

}  // namespace rqc
