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
#include "routedqc/tensor.hpp"

using namespace rqc;
using rqc::testing::gaussian;
using rqc::testing::random_isometry;

namespace {

SectoredSpace qubit(const std::string& label) {
  return SectoredSpace::unsectored(label, 2);
}

Matrix random_matrix(std::mt19937_64& rng, int64_t rows, int64_t cols) {
  Matrix m(rows, cols);
  for (auto& v : m.a) v = gaussian(rng);
  return m;
}

}  // namespace

TEST_CASE("identity choi acts as relabelling") {
  ChoiTensor id = identity_choi(qubit("X"), qubit("Xp"));
  std::mt19937_64 rng(5);
  ChoiTensor psi(std::vector<SectoredSpace>{qubit("X")});
  psi.add_amp({0}, gaussian(rng));
  psi.add_amp({1}, gaussian(rng));
  ChoiTensor moved = link_product(id, psi);
  REQUIRE(moved.systems().size() == 1);
  CHECK(moved.systems()[0].label == "Xp");
  CHECK(std::abs(moved.amp({0}) - psi.amp({0})) < 1e-14);
  CHECK(std::abs(moved.amp({1}) - psi.amp({1})) < 1e-14);
}

TEST_CASE("link product composes maps: |U>> * |V>> = |VU>>") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix u = random_matrix(rng, 2, 2);
    Matrix v = random_matrix(rng, 2, 2);
    ChoiTensor cu = choi_of_matrix(u, {qubit("X")}, {qubit("Y")});
    ChoiTensor cv = choi_of_matrix(v, {qubit("Y")}, {qubit("Z")});
    ChoiTensor prod = link_product(cu, cv);
    Matrix vu = v * u;
    ChoiTensor expect = choi_of_matrix(vu, {qubit("X")}, {qubit("Z")});
    CHECK(max_abs_diff(prod, expect) < 1e-12);
  }
}

TEST_CASE("link product is commutative and associative") {
  std::mt19937_64 rng(29);
  ChoiTensor a(std::vector<SectoredSpace>{qubit("X"), qubit("Y")});
  ChoiTensor b(std::vector<SectoredSpace>{qubit("Y"), qubit("Z")});
  ChoiTensor c(std::vector<SectoredSpace>{qubit("Z"), qubit("W")});
  for (int64_t i = 0; i < 2; ++i)
    for (int64_t j = 0; j < 2; ++j) {
      a.add_amp({i, j}, gaussian(rng));
      b.add_amp({i, j}, gaussian(rng));
      c.add_amp({i, j}, gaussian(rng));
    }
  CHECK(max_abs_diff(link_product(a, b), link_product(b, a)) < 1e-12);
  CHECK(max_abs_diff(link_product(link_product(a, b), c),
                     link_product(a, link_product(b, c))) < 1e-12);
  // No shared systems: plain tensor product, still commutative.
  CHECK(max_abs_diff(link_product(a, c), link_product(c, a)) < 1e-12);
}

TEST_CASE("choi of simple matrices") {
  ChoiTensor id = choi_of_matrix(Matrix::identity(2), {qubit("X")},
                                 {qubit("Y")});
  CHECK(std::abs(id.amp({0, 0}) - Complex(1, 0)) < 1e-15);
  CHECK(std::abs(id.amp({1, 1}) - Complex(1, 0)) < 1e-15);
  CHECK(std::abs(id.amp({0, 1})) < 1e-15);

  Matrix x(2, 2);
  x.at(0, 1) = 1;
  x.at(1, 0) = 1;
  ChoiTensor cx = choi_of_matrix(x, {qubit("X")}, {qubit("Y")});
  CHECK(std::abs(cx.amp({0, 1}) - Complex(1, 0)) < 1e-15);
  CHECK(std::abs(cx.amp({1, 0}) - Complex(1, 0)) < 1e-15);
  CHECK(std::abs(cx.amp({0, 0})) < 1e-15);
}

TEST_CASE("matrix/choi round trip is exact") {
  std::mt19937_64 rng(31);
  Matrix v = random_isometry(rng, 3, 2);
  SectoredSpace in = SectoredSpace::unsectored("in", 2);
  SectoredSpace out = SectoredSpace::unsectored("out", 3);
  ChoiTensor c = choi_of_matrix(v, {in}, {out});
  Matrix back = matrix_of_choi(c, {"in"}, {"out"});
  CHECK(back.rows == 3);
  CHECK(back.cols == 2);
  for (size_t i = 0; i < v.a.size(); ++i) CHECK(back.a[i] == v.a[i]);
}

TEST_CASE("follows_route") {
  // Two sectored spaces with two sectors each; identity-like route.
  SectoredSpace in{"in", {{IndexValue::atom("a"), 1}, {IndexValue::atom("b"), 2}}};
  SectoredSpace out{"out", {{IndexValue::atom("a"), 1}, {IndexValue::atom("b"), 2}}};
  Relation route({{"wi", {IndexValue::atom("a"), IndexValue::atom("b")}}},
                 {{"wo", {IndexValue::atom("a"), IndexValue::atom("b")}}});
  route.add_row({IndexValue::atom("a")}, {IndexValue::atom("a")});
  route.add_row({IndexValue::atom("b")}, {IndexValue::atom("b")});
  RoutedMapCheck chk{route, {"in"}, {"out"}};

  Matrix block(3, 3);
  block.at(0, 0) = 1;
  block.at(1, 1) = 1;
  block.at(2, 2) = 1;
  ChoiTensor good = choi_of_matrix(block, {in}, {out});
  CHECK(follows_route(good, chk));

  std::mt19937_64 rng(41);
  ChoiTensor bad = choi_of_matrix(random_matrix(rng, 3, 3), {in}, {out});
  std::string why;
  CHECK_FALSE(follows_route(bad, chk, kDefaultAtol, &why));
  CHECK(why.find("block") != std::string::npos);
}

TEST_CASE("is_isometry") {
  ChoiTensor id = choi_of_matrix(Matrix::identity(2), {qubit("in")},
                                 {qubit("out")});
  CHECK(is_isometry(id, {"in"}, {"out"}, {}, 1e-12));
  CHECK(is_isometry(id, {"in"}, {"out"}, {}, 1e-12, /*unitary=*/true));

  Matrix half = Matrix::identity(2);
  for (auto& v : half.a) v /= std::sqrt(2.0);
  ChoiTensor h = choi_of_matrix(half, {qubit("in")}, {qubit("out")});
  CHECK_FALSE(is_isometry(h, {"in"}, {"out"}));

  std::mt19937_64 rng(43);
  Matrix v = random_isometry(rng, 5, 3);
  ChoiTensor cv = choi_of_matrix(v, {SectoredSpace::unsectored("in", 3)},
                                 {SectoredSpace::unsectored("out", 5)});
  CHECK(is_isometry(cv, {"in"}, {"out"}));
  CHECK_FALSE(is_isometry(cv, {"in"}, {"out"}, {}, 1e-9, /*unitary=*/true));
}

TEST_CASE("chain of identity chois is the identity on the ends") {
  ChoiTensor chain = link_product(
      link_product(identity_choi(qubit("A"), qubit("B")),
                   identity_choi(qubit("B"), qubit("C"))),
      identity_choi(qubit("C"), qubit("D")));
  CHECK(max_abs_diff(chain, identity_choi(qubit("A"), qubit("D"))) < 1e-13);
}

TEST_CASE("normalisation: <<V|V>> equals the domain dimension") {
  std::mt19937_64 rng(47);
  for (int64_t din : {2, 3}) {
    Matrix v = random_isometry(rng, 2 * din, din);
    ChoiTensor cv =
        choi_of_matrix(v, {SectoredSpace::unsectored("in", din)},
                       {SectoredSpace::unsectored("out", 2 * din)});
    CHECK(std::abs(inner_product(cv, cv) - Complex(double(din), 0)) < 1e-9);
  }
}

TEST_CASE("composed maps follow the composed route") {
  // lambda: a->c, b->d; mu: c->e, d->e, d->f. Random maps masked to the
  // allowed blocks must compose into a map following lambda * mu.
  auto val = [](const char* s) { return IndexValue::atom(s); };
  SectoredSpace X{"X", {{val("a"), 1}, {val("b"), 2}}};
  SectoredSpace Y{"Y", {{val("c"), 2}, {val("d"), 1}}};
  SectoredSpace Z{"Z", {{val("e"), 1}, {val("f"), 2}}};
  Relation lambda({{"x", {val("a"), val("b")}}}, {{"y", {val("c"), val("d")}}});
  lambda.add_row({val("a")}, {val("c")});
  lambda.add_row({val("b")}, {val("d")});
  Relation mu({{"y", {val("c"), val("d")}}}, {{"z", {val("e"), val("f")}}});
  mu.add_row({val("c")}, {val("e")});
  mu.add_row({val("d")}, {val("e")});
  mu.add_row({val("d")}, {val("f")});

  std::mt19937_64 rng(53);
  auto masked = [&](const SectoredSpace& si, const SectoredSpace& so,
                    const Relation& r) {
    Matrix m(so.total_dim(), si.total_dim());
    for (int64_t row = 0; row < m.rows; ++row)
      for (int64_t col = 0; col < m.cols; ++col) {
        IndexValue ks = si.sectors[si.sector_of(col)].first;
        IndexValue ls = so.sectors[so.sector_of(row)].first;
        if (r.relates({ks}, {ls})) m.at(row, col) = gaussian(rng);
      }
    return m;
  };
  ChoiTensor ca = choi_of_matrix(masked(X, Y, lambda), {X}, {Y});
  ChoiTensor cb = choi_of_matrix(masked(Y, Z, mu), {Y}, {Z});
  REQUIRE(follows_route(ca, {lambda, {"X"}, {"Y"}}));
  REQUIRE(follows_route(cb, {mu, {"Y"}, {"Z"}}));
  ChoiTensor composed = link_product(ca, cb);
  Relation lm = compose({lambda, mu}, {"y"});
  CHECK(follows_route(composed, {lm, {"X"}, {"Z"}}));
}

TEST_CASE("link product agrees with a dense contraction") {
  // Independent oracle: dense loops over all indices of X,Y,Z,W.
  std::mt19937_64 rng(61);
  SectoredSpace X{"X", {{IndexValue::atom("a"), 2}, {IndexValue::atom("b"), 1}}};
  SectoredSpace Y{"Y", {{IndexValue::atom("c"), 2}, {IndexValue::atom("d"), 2}}};
  SectoredSpace Z = SectoredSpace::unsectored("Z", 3);
  SectoredSpace W = SectoredSpace::unsectored("W", 2);
  ChoiTensor a(std::vector<SectoredSpace>{X, Y, Z});
  ChoiTensor b(std::vector<SectoredSpace>{Y, Z, W});
  auto dense_fill = [&](ChoiTensor& t) {
    for (FlatIndex f = 0; f < t.total_dim(); ++f)
      t.add_amp(f, gaussian(rng));
  };
  dense_fill(a);
  dense_fill(b);
  ChoiTensor prod = link_product(a, b);  // contracts Y and Z
  REQUIRE(prod.systems().size() == 2);   // W, X in canonical order
  int xi = prod.system_index("X"), wi = prod.system_index("W");
  for (int64_t x = 0; x < 3; ++x)
    for (int64_t w = 0; w < 2; ++w) {
      Complex want(0, 0);
      for (int64_t y = 0; y < 4; ++y)
        for (int64_t z = 0; z < 3; ++z)
          want += a.amp({x, y, z}) * b.amp({w, y, z});
      std::vector<int64_t> idx(2);
      idx[xi] = x;
      idx[wi] = w;
      CHECK(std::abs(prod.amp(idx) - want) < 1e-12);
    }
}

TEST_CASE("mismatched shared sectors are rejected") {
  SectoredSpace plain = SectoredSpace::unsectored("Y", 2);
  SectoredSpace split{"Y", {{IndexValue::atom("a"), 1},
                            {IndexValue::atom("b"), 1}}};
  ChoiTensor t1(std::vector<SectoredSpace>{qubit("X"), plain});
  ChoiTensor t2(std::vector<SectoredSpace>{split, qubit("Z")});
  CHECK_THROWS_WITH(link_product(t1, t2),
                    Catch::Matchers::ContainsSubstring("SpaceMismatch"));
}

TEST_CASE("tensor sum, scaling and relabel") {
  std::mt19937_64 rng(59);
  ChoiTensor a(std::vector<SectoredSpace>{qubit("X")});
  a.add_amp({0}, Complex(1, 0));
  ChoiTensor b(std::vector<SectoredSpace>{qubit("X")});
  b.add_amp({1}, Complex(0, 1));
  ChoiTensor s = a;
  s += b;
  CHECK(std::abs(s.amp({0}) - Complex(1, 0)) < 1e-15);
  CHECK(std::abs(s.amp({1}) - Complex(0, 1)) < 1e-15);
  s *= Complex(2, 0);
  CHECK(std::abs(s.amp({1}) - Complex(0, 2)) < 1e-15);
  s.relabel("X", "Q");
  CHECK(s.system_index("Q") == 0);
  CHECK(s.system_index("X") == -1);
}
