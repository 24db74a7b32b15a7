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
#include <cstdio>
#include <fstream>

#include "routedqc/cli.hpp"

using namespace rqc;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& content) {
  std::string path = "cli_tmp_" + name;
  std::ofstream f(path);
  f << content;
  return path;
}

}  // namespace

TEST_CASE("generate emits the expected graph sizes") {
  CliRun r = run({"generate", "--family", "generic", "--n", "2"});
  REQUIRE(r.code == 0);
  Json j = Json::parse(r.out);
  CHECK(j.at("nodes").size() == 5);
  CHECK(j.at("arrows").size() == 10);
  // Output parses back into a graph.
  RoutedGraph g = graph_from_json(j);
  CHECK(g.nodes().size() == 5);

  CliRun split = run({"generate", "--family", "split", "--n", "3"});
  REQUIRE(split.code == 0);
  CHECK(Json::parse(split.out).at("nodes").size() == 11);

  CliRun local = run({"generate", "--family", "local", "--n", "4"});
  REQUIRE(local.code == 0);
  CHECK(Json::parse(local.out).at("nodes").size() == 6);

  CliRun alpha = run({"generate", "--family", "alpha", "--n", "2",
                      "--alpha-dims", "2,2"});
  REQUIRE(alpha.code == 0);
  CHECK(Json::parse(alpha.out).at("arrows").size() == 12);
}

TEST_CASE("validate prints a verdict and sets the exit code") {
  CliRun gen = run({"generate", "--family", "generic", "--n", "3"});
  std::string path = temp_file("g3.json", gen.out);
  CliRun v = run({"validate", path});
  CHECK(v.code == 0);
  CHECK(v.out == "VALID (bi-univocal; branch graph loop-free)\n");

  CliRun vj = run({"validate", path, "--json"});
  CHECK(vj.code == 0);
  Json j = Json::parse(vj.out);
  CHECK(j.at("valid").get<bool>());
  CHECK(j.at("branch_graph_loop_free").get<bool>());
  std::remove(path.c_str());
}

TEST_CASE("branch-graph emits deterministic dot") {
  CliRun gen = run({"generate", "--family", "generic", "--n", "2"});
  std::string path = temp_file("g2.json", gen.out);
  CliRun d1 = run({"branch-graph", path, "--dot"});
  CliRun d2 = run({"branch-graph", path, "--dot"});
  CHECK(d1.code == 0);
  CHECK(d1.out == d2.out);
  CHECK(d1.out.find("digraph branches") != std::string::npos);
  CliRun j = run({"branch-graph", path, "--json"});
  CHECK(Json::parse(j.out).at("nodes").size() == 8);
  std::remove(path.c_str());
}

TEST_CASE("verify passes for the catalog processes") {
  for (const char* name : {"switch", "grenoble", "fixed2", "zurich"}) {
    CliRun r = run({"verify", "--process", name});
    INFO(name << ": " << r.out << r.err);
    CHECK(r.code == 0);
    CHECK(r.out.find("PASS") != std::string::npos);
  }
  CliRun split = run({"verify", "--process", "switch", "--pipeline", "split"});
  CHECK(split.code == 0);
  CliRun merged = run({"verify", "--process", "grenoble", "--pipeline",
                       "merged", "--json"});
  CHECK(merged.code == 0);
  Json j = Json::parse(merged.out);
  CHECK(j.at("pass").get<bool>());
  CHECK(j.at("max_delta").get<double>() <= 1e-9);
}

TEST_CASE("verify can dump the composed tensor") {
  std::string dump = "cli_tmp_dump.json";
  CliRun r = run({"verify", "--process", "switch", "--dump", dump});
  REQUIRE(r.code == 0);
  std::ifstream in(dump);
  REQUIRE(in.good());
  Json j;
  in >> j;
  ChoiTensor t = tensor_from_json(j);
  CHECK(max_abs_diff(t, process_vector(quantum_switch().spec).w) <= 1e-12);
  std::remove(dump.c_str());
}

TEST_CASE("verify accepts a spec file") {
  std::string path =
      temp_file("sw.json", spec_to_json(quantum_switch().spec).dump());
  CliRun r = run({"verify", "--process", path});
  CHECK(r.code == 0);
  std::remove(path.c_str());
}

TEST_CASE("transform applies a pipeline file") {
  CliRun gen = run({"generate", "--family", "generic", "--n", "2"});
  std::string gpath = temp_file("g2b.json", gen.out);
  std::string ppath = temp_file(
      "pipe.json", R"({"steps":[{"op":"remove-arrows","process":"fixed2"}]})");
  CliRun t = run({"transform", gpath, ppath});
  REQUIRE(t.code == 0);
  Json j = Json::parse(t.out);
  CHECK(j.at("log").size() == 1);
  CHECK(j.at("log")[0].at("arrows_removed").size() == 4);
  RoutedGraph g = graph_from_json(j.at("graph"));
  CHECK(is_valid(g).valid);

  std::string mpath = temp_file(
      "pipe2.json",
      R"({"steps":[{"op":"alpha","dims":[1,1]}]})");
  CliRun t2 = run({"transform", gpath, mpath});
  CHECK(t2.code == 0);
  std::remove(gpath.c_str());
  std::remove(ppath.c_str());
  std::remove(mpath.c_str());
}

TEST_CASE("catalog list and export") {
  CliRun l = run({"catalog", "list"});
  CHECK(l.code == 0);
  CHECK(l.out.find("switch") != std::string::npos);
  CHECK(l.out.find("zurich") != std::string::npos);
  CliRun e = run({"catalog", "export", "switch"});
  CHECK(e.code == 0);
  QcqcSpec s = spec_from_json(Json::parse(e.out));
  CHECK(s.n_agents == 2);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({"generate", "--family", "generic"}).code == 2);
  CHECK(run({"generate", "--family", "nope", "--n", "2"}).code == 2);
  CHECK(run({"validate", "no_such_file.json"}).code == 2);
  CHECK(run({"catalog", "export"}).code == 2);
  CHECK(run({"verify", "--process", "unknown-name"}).code == 2);
}

TEST_CASE("atol override via the environment") {
  setenv("ROUTED_QC_ATOL", "1e-2", 1);
  CliRun r = run({"verify", "--process", "switch", "--json"});
  unsetenv("ROUTED_QC_ATOL");
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out).at("atol").get<double>() == 1e-2);
}
