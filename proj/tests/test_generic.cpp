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

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "routedqc/catalog.hpp"
#include "routedqc/generic.hpp"

using namespace rqc;
using rqc::testing::via_generic_pipeline;

TEST_CASE("generic graph structure") {
  RoutedGraph g2 = generic_graph(2);
  CHECK(g2.nodes().size() == 5);
  CHECK(g2.arrows().size() == 10);  // 2N^2 internal + 2 open

  RoutedGraph g3 = generic_graph(3);
  int internal = 0, open = 0;
  for (const auto& a : g3.arrows()) (a.is_internal() ? internal : open)++;
  CHECK(internal == 18);
  CHECK(open == 2);

  // Degenerate single-agent case: the chain V1 -> A1 -> V2.
  RoutedGraph g1 = generic_graph(1);
  CHECK(g1.nodes().size() == 3);
  CHECK(g1.arrows().size() == 4);
  for (const auto& a : g1.arrows())
    if (a.is_internal()) CHECK(a.alphabet.size() == 2);  // {1} and null
  CHECK(is_valid(g1).valid);
}

TEST_CASE("closed-form choice: worked examples") {
  {
    std::map<std::vector<int>, int> bif{{{}, 1}, {{1}, 2}, {{2}, 1}};
    auto out = closed_form_choice(2, bif);
    CHECK(out.at("A1") == generic_a_branch(1, {1}));
    CHECK(out.at("A2") == generic_a_branch(2, {1, 2}));
    CHECK(out.at("V2") == generic_v_branch(2, 2, {1}));
  }
  {
    // Order (3, 1, 2).
    std::map<std::vector<int>, int> bif{
        {{}, 3},      {{1}, 2},    {{2}, 1},    {{3}, 1},
        {{1, 2}, 3},  {{1, 3}, 2}, {{2, 3}, 1}};
    auto out = closed_form_choice(3, bif);
    CHECK(out.at("V2") == generic_v_branch(3, 2, {3}));
    CHECK(out.at("V3") == generic_v_branch(3, 3, {1, 3}));
    CHECK(out.at("A3") == generic_a_branch(3, {3}));
    CHECK(out.at("A1") == generic_a_branch(1, {1, 3}));
    CHECK(out.at("A2") == generic_a_branch(2, {1, 2, 3}));
  }
  CHECK_THROWS_WITH(closed_form_choice(2, {{{}, 1}}),
                    Catch::Matchers::ContainsSubstring("InvalidBifurcation"));
}

TEST_CASE("closed form agrees with the composed choice function pointwise") {
  for (int N : {2, 3}) {
    RoutedGraph g = generic_graph(N);
    ChoiceFunction cf = choice_function(g);
    size_t total = cf.n_inputs();
    for (size_t rank = 0; rank < total; ++rank) {
      // Decode the slot choices into successor picks per subset.
      auto choices = cf.choices_at(rank);
      std::map<std::vector<int>, int> bif;
      for (size_t si = 0; si < cf.slots.size(); ++si) {
        const auto& slot = cf.slots[si];
        if (slot.node[0] != 'V') continue;
        int m = std::stoi(slot.node.substr(1));
        if (m > N) continue;  // the last V-node makes no choice
        auto row = detail::decode_choice(choices[si]);
        const auto& out_arrows = g.route(slot.node).out_arrows();
        for (size_t i = 0; i < row.size(); ++i) {
          if (row[i].is_null()) continue;
          const Arrow& a = g.arrow(out_arrows[i].first);
          int l = std::stoi(a.to.substr(1));
          std::vector<int> kprime = row[i].agent_ids();
          kprime.erase(std::find(kprime.begin(), kprime.end(), l));
          bif[kprime] = l;
        }
      }
      auto closed = closed_form_choice(N, bif);
      for (const auto& [node, label] : closed)
        CHECK(cf.branch_at(rank, node) == label);
    }
  }
}

TEST_CASE("skeletal supermap practical spaces") {
  QcqcSpec sw = quantum_switch(2).spec;
  SkeletalSupermap s = skeletal(generic_graph(2), generic_dims(2, sw));
  PracticalSpace v3_in = practical_space(s, "V3", /*input=*/true);
  CHECK(v3_in.total == 4);
  CHECK(v3_in.sectors.size() == 2);
  for (const auto& [tuple, dim] : v3_in.sectors) CHECK(dim == 2);
  // P side is the unsectorised past.
  PracticalSpace v1_in = practical_space(s, "V1", true);
  CHECK(v1_in.total == sw.d_P);

  // All dims 1: practical totals count admissible tuples.
  DimensionAssignment ones;
  RoutedGraph g = generic_graph(2);
  for (const auto& a : g.arrows())
    for (const auto& v : a.alphabet) ones.dims[a.id][v] = 1;
  SkeletalSupermap s1 = skeletal(g, ones);
  PracticalSpace pa = practical_space(s1, "A1", true);
  CHECK(pa.total == static_cast<int64_t>(
                        practical_domain(g.route("A1")).size()));
}

TEST_CASE("one-dimensional values must have dimension one") {
  QcqcSpec sw = quantum_switch(2).spec;
  DimensionAssignment bad = generic_dims(2, sw);
  bad.dims["V1->A1"][IndexValue::null()] = 2;
  CHECK_THROWS_WITH(skeletal(generic_graph(2), bad),
                    Catch::Matchers::ContainsSubstring("OneDimViolation"));
  DimensionAssignment missing = generic_dims(2, sw);
  missing.dims.erase("V1->A1");
  CHECK_THROWS_WITH(skeletal(generic_graph(2), missing),
                    Catch::Matchers::ContainsSubstring("MissingDim"));
}

TEST_CASE("fleshed V-nodes follow their routes and block support") {
  QcqcSpec sw = quantum_switch(2).spec;
  RoutedGraph g = generic_graph(2);
  SkeletalSupermap s = skeletal(g, generic_dims(2, sw));
  FleshingOut f = flesh_v_nodes(s, sw);

  // |V2> has exactly two populated sector blocks: the 1->2 and the 2->1
  // transfer.
  const ChoiTensor& v2 = f.internal.at("V2");
  std::set<std::pair<std::string, std::string>> populated;
  for (const auto& [flat, v] : v2.entries()) {
    auto idx = v2.unflat(flat);
    std::string in, out;
    for (size_t q = 0; q < v2.systems().size(); ++q) {
      const auto& sp = v2.systems()[q];
      const IndexValue& sec = sp.sectors[sp.sector_of(idx[q])].first;
      if (sec.is_null()) continue;
      (sp.label.rfind("A", 0) == 0 ? in : out) = sp.label + "=" + sec.str();
    }
    populated.insert({in, out});
  }
  std::set<std::pair<std::string, std::string>> expect{
      {"A1->V2={1}", "V2->A2={1,2}"}, {"A2->V2={2}", "V2->A1={1,2}"}};
  CHECK(populated == expect);

  // Every fleshed node follows its route.
  for (const auto& [node, t] : f.internal) {
    const Relation& r = g.route(node);
    std::vector<std::string> in, out;
    for (const auto& [id, alpha] : r.in_arrows()) in.push_back(id);
    for (const auto& [id, alpha] : r.out_arrows()) out.push_back(id);
    CHECK(follows_route(t, {r, in, out}));
  }

  // Zeroed block: the corresponding sector block is zero.
  QcqcSpec zeroed = sw;
  zeroed.ops.erase(OpKey{{}, 1, 2});
  FleshingOut fz = flesh_v_nodes(s, zeroed);
  const ChoiTensor& v2z = fz.internal.at("V2");
  for (const auto& [flat, v] : v2z.entries()) {
    auto idx = v2z.unflat(flat);
    int ii = v2z.system_index("A1->V2");
    const auto& sp = v2z.systems()[ii];
    CHECK(sp.sectors[sp.sector_of(idx[ii])].first.is_null());
  }
}

TEST_CASE("fleshed V-nodes of the dynamical-order circuit are routed "
          "isometries on the practical spaces") {
  QcqcSpec gr = grenoble().spec;
  RoutedGraph g = generic_graph(3);
  SkeletalSupermap s = skeletal(g, generic_dims(3, gr));
  FleshingOut f = flesh_v_nodes(s, gr);
  for (const auto& [node, t] : f.internal) {
    const Relation& r = g.route(node);
    std::vector<std::string> in, out;
    for (const auto& [id, alpha] : r.in_arrows()) in.push_back(id);
    for (const auto& [id, alpha] : r.out_arrows()) out.push_back(id);
    CHECK(is_isometry(t, in, out, practical_mask(s, node, true), 1e-9));
  }
}

TEST_CASE("double-switch V-nodes are isometries on their populated "
          "sectors only") {
  QcqcSpec z = zurich().spec;
  RoutedGraph g = generic_graph(4);
  SkeletalSupermap s = skeletal(g, generic_dims(4, z));
  FleshingOut f = flesh_v_nodes(s, z);
  for (const auto& [node, t] : f.internal) {
    const Relation& r = g.route(node);
    std::vector<std::string> in, out;
    for (const auto& [id, alpha] : r.in_arrows()) in.push_back(id);
    for (const auto& [id, alpha] : r.out_arrows()) out.push_back(id);
    INFO(node);
    CHECK(is_partial_isometry(t, in, out, 1e-9));
  }
  // On the full practical space the middle layers are not isometric: the
  // orders never realised carry empty sectors.
  const ChoiTensor& v2 = f.internal.at("V2");
  const Relation& r = g.route("V2");
  std::vector<std::string> in, out;
  for (const auto& [id, alpha] : r.in_arrows()) in.push_back(id);
  for (const auto& [id, alpha] : r.out_arrows()) out.push_back(id);
  CHECK_FALSE(is_isometry(v2, in, out, practical_mask(s, "V2", true), 1e-9));
}

TEST_CASE("slot adapters") {
  QcqcSpec sw = quantum_switch(2).spec;
  RoutedGraph g = generic_graph(2);
  SkeletalSupermap s = skeletal(g, generic_dims(2, sw));
  FleshingOut f = flesh_a_nodes(s, sw);
  REQUIRE(f.adapters.size() == 2);

  // The adapter follows the agent route.
  for (int k = 1; k <= 2; ++k) {
    const ChoiTensor& t = f.adapters.at(a_node(k));
    const Relation& r = g.route(a_node(k));
    std::vector<std::string> in, out;
    for (const auto& [id, alpha] : r.in_arrows()) in.push_back(id);
    for (const auto& [id, alpha] : r.out_arrows()) out.push_back(id);
    CHECK(follows_route(t, {r, in, out}));
  }

  // Plugging the identity into the slot gives the identity embedding of
  // every practical in-sector onto its matching out-sector.
  const ChoiTensor& t = f.adapters.at("A1");
  ChoiTensor slot_id = choi_of_matrix(
      Matrix::identity(2), {SectoredSpace::unsectored("A1I", 2)},
      {SectoredSpace::unsectored("A1O", 2)});
  ChoiTensor wired = link_product(t, slot_id);
  // Expected: sum over branches of |1>> between matching wire sectors.
  ChoiTensor expect(wired.systems());
  std::vector<SectoredSpace> wires;
  const Relation& r = g.route("A1");
  for (const auto& b : branches(r)) {
    const auto& in_row = *b.inputs.begin();
    const auto& out_row = *b.outputs.begin();
    std::vector<int64_t> idx(expect.systems().size(), 0);
    // locate the non-null sector on each side
    for (size_t i = 0; i < r.in_arrows().size(); ++i) {
      int sys = expect.system_index(r.in_arrows()[i].first);
      const auto& sp = expect.systems()[sys];
      idx[sys] = sp.sector_offset(sp.sector_index(in_row[i]));
    }
    for (size_t i = 0; i < r.out_arrows().size(); ++i) {
      int sys = expect.system_index(r.out_arrows()[i].first);
      const auto& sp = expect.systems()[sys];
      idx[sys] = sp.sector_offset(sp.sector_index(out_row[i]));
    }
    // identity within the sector (dims match for the switch)
    int in_sys = -1, out_sys = -1;
    for (size_t i = 0; i < r.in_arrows().size(); ++i)
      if (!(*b.inputs.begin())[i].is_null())
        in_sys = expect.system_index(r.in_arrows()[i].first);
    for (size_t i = 0; i < r.out_arrows().size(); ++i)
      if (!(*b.outputs.begin())[i].is_null())
        out_sys = expect.system_index(r.out_arrows()[i].first);
    std::vector<int64_t> base = idx;
    for (int64_t q = 0; q < 2; ++q) {
      idx = base;
      idx[in_sys] += q;
      idx[out_sys] += q;
      expect.add_amp(idx, Complex(1, 0));
    }
  }
  CHECK(max_abs_diff(wired, expect) < 1e-13);
}

TEST_CASE("single-agent adapter is the plain identity wiring") {
  QcqcSpec s1;
  s1.n_agents = 1;
  s1.d_AI = s1.d_AO = 2;
  s1.d_P = 2;
  s1.d_F = 2;
  s1.d_alpha = {1};
  s1.set_block({{}, 0, 1}, Matrix::identity(2));
  s1.set_block({{}, 1, 0}, Matrix::identity(2));
  RoutedGraph g = generic_graph(1);
  SkeletalSupermap s = skeletal(g, generic_dims(1, s1));
  FleshingOut f = flesh_a_nodes(s, s1);
  const ChoiTensor& t = f.adapters.at("A1");
  // Wires have a single populated sector of dim 2 and a null sector.
  // Expect sum over a,b |{1}+a> |a>^{A1I} |b>^{A1O} |{1}+b>.
  CHECK(t.entries().size() == 4);
  for (const auto& [flat, v] : t.entries()) CHECK(v == Complex(1, 0));
}

TEST_CASE("composing the fleshed skeleton recovers the process vector") {
  // The permutation-sum and the layered composition agree elementwise far
  // below the working tolerance (the sector bases share all phases).
  for (const char* name : {"switch", "grenoble", "fixed2", "zurich"}) {
    QcqcSpec spec = catalog_process(name).spec;
    ProcessVector direct = process_vector(spec);
    ProcessVector via = via_generic_pipeline(spec);
    INFO(name);
    CHECK(max_abs_diff(direct.w, via.w) <= 1e-12);
  }
  for (uint64_t seed : {7u, 8u}) {
    QcqcSpec spec = random_spec(2, 2, seed).spec;
    CHECK(max_abs_diff(process_vector(spec).w,
                       via_generic_pipeline(spec).w) <= 1e-9);
  }
  {
    QcqcSpec spec = random_spec(3, 2, 5).spec;
    CHECK(max_abs_diff(process_vector(spec).w,
                       via_generic_pipeline(spec).w) <= 1e-9);
  }
  {
    // Fully populated four-agent circuit: all 24 orders interfere.
    QcqcSpec spec = random_spec(4, 2, 3).spec;
    CHECK(max_abs_diff(process_vector(spec).w,
                       via_generic_pipeline(spec).w) <= 1e-9);
  }
}

TEST_CASE("uncovered nodes are reported") {
  QcqcSpec sw = quantum_switch(2).spec;
  RoutedGraph g = generic_graph(2);
  SkeletalSupermap s = skeletal(g, generic_dims(2, sw));
  FleshingOut f = flesh_v_nodes(s, sw);  // no adapters
  CHECK_THROWS_WITH(compose_fleshed(s, f),
                    Catch::Matchers::ContainsSubstring("UncoveredNode"));
}
