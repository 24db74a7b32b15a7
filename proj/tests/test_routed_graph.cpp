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
#include "routedqc/generic.hpp"
#include "routedqc/json_io.hpp"

using namespace rqc;

namespace {

IndexValue at(const std::string& s) { return IndexValue::atom(s); }

/// A one-node graph with singleton open arrows and an identity-like route.
RoutedGraph one_node_graph() {
  std::vector<Arrow> arrows{
      {"in->X", kOpen, "X", {at("p")}, {}},
      {"X->out", "X", kOpen, {at("f")}, {}},
  };
  Relation r({{"in->X", {at("p")}}}, {{"X->out", {at("f")}}});
  r.add_row({at("p")}, {at("f")});
  return RoutedGraph({"X"}, arrows, {{"X", r}});
}

/// W -> X -> Y chain whose middle route violates branchedness.
RoutedGraph non_branched_graph() {
  Alphabet c{at("0"), at("1"), at("2")};
  Alphabet d{at("u"), at("v")};
  std::vector<Arrow> arrows{
      {"in->W", kOpen, "W", {at("p")}, {}},
      {"W->X", "W", "X", c, {}},
      {"X->Y", "X", "Y", d, {}},
      {"Y->out", "Y", kOpen, {at("f")}, {}},
  };
  Relation w({{"in->W", {at("p")}}}, {{"W->X", c}});
  w.add_row({at("p")}, {at("0")});
  w.add_row({at("p")}, {at("1")});
  Relation x({{"W->X", c}}, {{"X->Y", d}});
  x.add_row({at("0")}, {at("u")});
  x.add_row({at("1")}, {at("u")});
  x.add_row({at("1")}, {at("v")});
  Relation y({{"X->Y", d}}, {{"Y->out", {at("f")}}});
  y.add_row({at("u")}, {at("f")});
  y.add_row({at("v")}, {at("f")});
  return RoutedGraph({"W", "X", "Y"}, arrows,
                     {{"W", w}, {"X", x}, {"Y", y}});
}

}  // namespace

TEST_CASE("adjoint flips arrows and routes; involution") {
  RoutedGraph g = one_node_graph();
  RoutedGraph a = adjoint(g);
  CHECK(a.arrow("in->X").from == "X");
  CHECK(a.arrow("in->X").to == kOpen);
  CHECK(graph_to_json(adjoint(a)) == graph_to_json(g));

  RoutedGraph g3 = generic_graph(3);
  CHECK(graph_to_json(adjoint(adjoint(g3))) == graph_to_json(g3));
}

TEST_CASE("the generic graph is self-adjoint under the relabelling") {
  for (int N : {2, 3}) {
    RoutedGraph g = generic_graph(N);
    RoutedGraph relabelled =
        rqc::testing::relabel_generic_adjoint(adjoint(g), N);
    CHECK(graph_to_json(relabelled) == graph_to_json(g));
  }
}

TEST_CASE("choice relation of a one-node graph is a constant") {
  RoutedGraph g = one_node_graph();
  Relation cr = choice_relation(g);
  CHECK(cr.size() == 1);
  REQUIRE(cr.out_arrows().size() == 1);
  CHECK(cr.out_arrows()[0].first == "bran:X");
}

TEST_CASE("choice function of the 2-agent generic graph") {
  RoutedGraph g = generic_graph(2);
  ChoiceFunction cf = choice_function(g);
  // Only V1 carries a nontrivial bifurcation: 2 inputs in total.
  CHECK(cf.n_inputs() == 2);

  std::map<std::vector<int>, int> bif{{{}, 1}, {{1}, 2}, {{2}, 1}};
  auto vec = rqc::testing::generic_bifurcations(g, cf, 2, bif);
  size_t rank = cf.rank_of(vec);
  CHECK(cf.branch_at(rank, "A1") == generic_a_branch(1, {1}));
  CHECK(cf.branch_at(rank, "A2") == generic_a_branch(2, {1, 2}));
  CHECK(cf.branch_at(rank, "V2") == generic_v_branch(2, 2, {1}));
  CHECK(cf.branch_at(rank, "V1") == generic_v_branch(2, 1, {}));
  CHECK(cf.branch_at(rank, "V3") == generic_v_branch(2, 3, {1, 2}));

  // The other choice sends agent 2 first.
  bif[{}] = 2;
  rank = cf.rank_of(rqc::testing::generic_bifurcations(g, cf, 2, bif));
  CHECK(cf.branch_at(rank, "A2") == generic_a_branch(2, {2}));
  CHECK(cf.branch_at(rank, "V2") == generic_v_branch(2, 2, {2}));
}

TEST_CASE("happens function on the 2-agent graph") {
  RoutedGraph g = generic_graph(2);
  ChoiceFunction cf = choice_function(g);
  std::map<std::vector<int>, int> bif{{{}, 1}, {{1}, 2}, {{2}, 1}};
  auto vec1 = rqc::testing::generic_bifurcations(g, cf, 2, bif);
  bif[{}] = 2;
  auto vec2 = rqc::testing::generic_bifurcations(g, cf, 2, bif);

  std::string v2_first = generic_v_branch(2, 2, {1});
  CHECK(happens(cf, "V2", v2_first, vec1));
  CHECK_FALSE(happens(cf, "V2", v2_first, vec2));
  CHECK_THROWS_WITH(happens(cf, "V2", v2_first, {}),
                    Catch::Matchers::ContainsSubstring("OutOfDomain"));
  // Single-branch nodes happen for sure.
  CHECK(happens(cf, "V1", generic_v_branch(2, 1, {}), vec1));
  CHECK(happens(cf, "V3", generic_v_branch(2, 3, {1, 2}), vec2));
}

TEST_CASE("choice relation of the 3-agent graph is total and single-valued") {
  RoutedGraph g = generic_graph(3);
  Relation cr = choice_relation(g);
  // Bifurcation space: 3 (V1) x 2^3 (V2 branches) x 1 = 24.
  CHECK(cr.size() == 24);
  std::set<std::vector<IndexValue>> inputs;
  for (const auto& p : cr.rows()) CHECK(inputs.insert(p.first).second);
  ChoiceFunction cf = choice_function(g);
  CHECK(cf.n_inputs() == 24);
}

TEST_CASE("univocality verdicts") {
  CHECK(is_univocal(generic_graph(2)));
  CHECK(is_univocal(generic_graph(3)));
  CHECK(is_biunivocal(generic_graph(2)));
  CHECK(is_biunivocal(generic_graph(3)));
  // A non-branched route is a precondition failure, not a verdict.
  CHECK_THROWS_WITH(is_univocal(non_branched_graph()),
                    Catch::Matchers::ContainsSubstring("NotBranched"));
}

TEST_CASE("nontrivially indexed open arrows are rejected") {
  Alphabet two{at("0"), at("1")};
  std::vector<Arrow> arrows{
      {"in->X", kOpen, "X", two, {}},
      {"X->out", "X", kOpen, {at("f")}, {}},
  };
  Relation r({{"in->X", two}}, {{"X->out", {at("f")}}});
  r.add_row({at("0")}, {at("f")});
  r.add_row({at("1")}, {at("f")});
  RoutedGraph g({"X"}, arrows, {{"X", r}});
  CHECK_THROWS_WITH(choice_relation(g),
                    Catch::Matchers::ContainsSubstring("NontrivialOpenArrow"));
}

TEST_CASE("graph json round-trips") {
  for (int N : {1, 2, 3}) {
    RoutedGraph g = generic_graph(N);
    Json j = graph_to_json(g);
    RoutedGraph back = graph_from_json(j);
    CHECK(graph_to_json(back) == j);
  }
  RoutedGraph g = non_branched_graph();
  CHECK(graph_to_json(graph_from_json(graph_to_json(g))) == graph_to_json(g));
}

TEST_CASE("choice function size formula") {
  for (int N : {2, 3}) {
    RoutedGraph g = generic_graph(N);
    ChoiceFunction cf = choice_function(g);
    size_t expect = 1;
    for (const auto& [n, r] : g.routes())
      for (const auto& b : branches(r)) expect *= b.outputs.size();
    CHECK(cf.n_inputs() == expect);
    CHECK(cf.table.size() == expect * cf.node_order.size());
  }
}
