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

#include <json.hpp>

#include "routedqc/generic.hpp"

namespace rqc {

using Json = nlohmann::ordered_json;

// --------------------------------------------------------------------------
// Routed graphs. Route rows are aligned with the node's in/out arrow lists
// sorted by arrow id. parse(serialize(g)) == g.
// --------------------------------------------------------------------------

inline Json graph_to_json(const RoutedGraph& g) {
  Json j;
  j["nodes"] = Json::array();
  for (const auto& n : g.nodes()) j["nodes"].push_back(n);
  j["arrows"] = Json::array();
  for (const auto& a : g.arrows()) {
    Json ja;
    ja["id"] = a.id;
    ja["from"] = a.from;
    ja["to"] = a.to;
    ja["alphabet"] = Json::array();
    for (const auto& v : a.alphabet) ja["alphabet"].push_back(v.str());
    ja["one_dim"] = Json::array();
    for (const auto& v : a.one_dim) ja["one_dim"].push_back(v.str());
    j["arrows"].push_back(std::move(ja));
  }
  j["routes"] = Json::object();
  for (const auto& [n, r] : g.routes()) {
    Json rows = Json::array();
    for (const auto& p : r.rows()) {
      Json in = Json::array(), out = Json::array();
      for (const auto& v : p.first) in.push_back(v.str());
      for (const auto& v : p.second) out.push_back(v.str());
      rows.push_back(Json::array({in, out}));
    }
    j["routes"][n] = std::move(rows);
  }
  return j;
}

inline RoutedGraph graph_from_json(const Json& j) {
  std::vector<NodeId> nodes;
  for (const auto& n : j.at("nodes")) nodes.push_back(n.get<std::string>());
  std::vector<Arrow> arrows;
  for (const auto& ja : j.at("arrows")) {
    Arrow a;
    a.id = ja.at("id").get<std::string>();
    a.from = ja.at("from").get<std::string>();
    a.to = ja.at("to").get<std::string>();
    for (const auto& v : ja.at("alphabet"))
      a.alphabet.push_back(IndexValue::parse(v.get<std::string>()));
    a.alphabet = make_alphabet(a.alphabet);
    if (ja.contains("one_dim"))
      for (const auto& v : ja.at("one_dim"))
        a.one_dim.push_back(IndexValue::parse(v.get<std::string>()));
    a.one_dim = make_alphabet(a.one_dim);
    arrows.push_back(std::move(a));
  }
  // Arrow lookup for route arity.
  std::map<NodeId, Relation::ArrowList> ins, outs;
  for (const auto& a : arrows) {
    if (a.to != kOpen) ins[a.to].emplace_back(a.id, a.alphabet);
    if (a.from != kOpen) outs[a.from].emplace_back(a.id, a.alphabet);
  }
  std::map<NodeId, Relation> routes;
  for (const auto& n : nodes) {
    Relation r(ins[n], outs[n]);
    const Json& rows = j.at("routes").at(n);
    for (const auto& row : rows) {
      std::vector<IndexValue> in, out;
      for (const auto& v : row.at(0))
        in.push_back(IndexValue::parse(v.get<std::string>()));
      for (const auto& v : row.at(1))
        out.push_back(IndexValue::parse(v.get<std::string>()));
      r.add_row(std::move(in), std::move(out));
    }
    routes.emplace(n, std::move(r));
  }
  return RoutedGraph(nodes, arrows, routes);
}

// --------------------------------------------------------------------------
// Circuit specifications.
// --------------------------------------------------------------------------

inline Json spec_to_json(const QcqcSpec& s) {
  Json j;
  j["name"] = s.name;
  j["n_agents"] = s.n_agents;
  j["d_P"] = s.d_P;
  j["d_F"] = s.d_F;
  j["d_AI"] = s.d_AI;
  j["d_AO"] = s.d_AO;
  j["d_alpha"] = s.d_alpha;
  j["ops"] = Json::array();
  for (const auto& [key, m] : s.ops) {
    Json op;
    op["K"] = IndexValue::agents(key.k_prev).str();
    op["k"] = key.k;
    if (key.ell == 0)
      op["l"] = "F";
    else
      op["l"] = key.ell;
    op["rows"] = m.rows;
    op["cols"] = m.cols;
    Json mat = Json::array();
    for (const auto& v : m.a)
      mat.push_back(Json::array({v.real(), v.imag()}));
    op["matrix"] = std::move(mat);
    j["ops"].push_back(std::move(op));
  }
  return j;
}

inline QcqcSpec spec_from_json(const Json& j) {
  QcqcSpec s;
  s.name = j.value("name", "");
  s.n_agents = j.at("n_agents").get<int>();
  s.d_P = j.at("d_P").get<int64_t>();
  s.d_F = j.at("d_F").get<int64_t>();
  s.d_AI = j.at("d_AI").get<int64_t>();
  s.d_AO = j.at("d_AO").get<int64_t>();
  s.d_alpha = j.at("d_alpha").get<std::vector<int64_t>>();
  for (const auto& op : j.at("ops")) {
    OpKey key;
    key.k_prev =
        IndexValue::parse(op.at("K").get<std::string>()).agent_ids();
    key.k = op.at("k").get<int>();
    if (op.at("l").is_string()) {
      if (op.at("l").get<std::string>() != "F")
        throw Error("InvalidValue", "op successor must be an agent or 'F'");
      key.ell = 0;
    } else {
      key.ell = op.at("l").get<int>();
    }
    Matrix m(op.at("rows").get<int64_t>(), op.at("cols").get<int64_t>());
    const Json& mat = op.at("matrix");
    if (mat.size() != m.a.size())
      throw Error("DimMismatch", "matrix entry count");
    for (size_t i = 0; i < m.a.size(); ++i)
      m.a[i] = Complex(mat[i][0].get<double>(), mat[i][1].get<double>());
    s.set_block(key, std::move(m));
  }
  s.validate_dims();
  return s;
}

// --------------------------------------------------------------------------
// Tensor dumps: dense row-major amplitudes in canonical system order.
// --------------------------------------------------------------------------

inline Json tensor_to_json(const ChoiTensor& t) {
  Json j;
  j["systems"] = Json::array();
  for (const auto& sp : t.systems()) {
    Json js;
    js["label"] = sp.label;
    js["sectors"] = Json::array();
    for (const auto& [v, d] : sp.sectors)
      js["sectors"].push_back(Json::array({v.str(), d}));
    j["systems"].push_back(std::move(js));
  }
  Json amps = Json::array();
  for (const auto& v : t.to_dense())
    amps.push_back(Json::array({v.real(), v.imag()}));
  j["amplitudes"] = std::move(amps);
  return j;
}

inline ChoiTensor tensor_from_json(const Json& j) {
  std::vector<SectoredSpace> systems;
  for (const auto& js : j.at("systems")) {
    SectoredSpace sp;
    sp.label = js.at("label").get<std::string>();
    for (const auto& sec : js.at("sectors"))
      sp.sectors.emplace_back(IndexValue::parse(sec[0].get<std::string>()),
                              sec[1].get<int64_t>());
    systems.push_back(std::move(sp));
  }
  ChoiTensor t(systems);
  const Json& amps = j.at("amplitudes");
  if (amps.size() != t.total_dim())
    throw Error("ShapeMismatch", "amplitude count");
  for (size_t i = 0; i < amps.size(); ++i) {
    Complex v(amps[i][0].get<double>(), amps[i][1].get<double>());
    t.add_amp(static_cast<FlatIndex>(i), v);
  }
  return t;
}

}  // namespace rqc
