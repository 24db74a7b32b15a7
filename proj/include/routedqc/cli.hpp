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

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "routedqc/catalog.hpp"
#include "routedqc/json_io.hpp"
#include "routedqc/transform.hpp"

namespace rqc {

namespace detail {

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open " + path);
  Json j;
  in >> j;
  return j;
}

inline void emit(const std::string& text, const std::string& out_path,
                 std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    if (!text.empty() && text.back() != '\n') out << "\n";
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw Error("IoError", "cannot write " + out_path);
  f << text;
}

inline double cli_atol() {
  if (const char* env = std::getenv("ROUTED_QC_ATOL")) {
    try {
      return std::stod(env);
    } catch (...) {
      throw Error("InvalidValue", "bad ROUTED_QC_ATOL value");
    }
  }
  return kDefaultAtol;
}

/// Loads a circuit spec from a catalog name or a JSON file path.
inline QcqcSpec load_spec(const std::string& which) {
  if (which.size() > 5 && which.substr(which.size() - 5) == ".json")
    return spec_from_json(load_json(which));
  return catalog_process(which).spec;
}

inline Json log_to_json(const TransformLog& log) {
  Json j = Json::array();
  for (const auto& rec : log) {
    Json r;
    r["kind"] = rec.kind;
    r["nodes"] = rec.nodes;
    r["arrows_added"] = rec.arrows_added;
    r["arrows_removed"] = rec.arrows_removed;
    j.push_back(std::move(r));
  }
  return j;
}

}  // namespace detail

/**
 * Command-line front end. Subcommands: generate, validate, branch-graph,
 * verify, transform, catalog. Exit codes: 0 success, 1 validation or
 * verification failure, 2 usage error.
 */
inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  auto usage = [&](const std::string& msg) {
    if (!msg.empty()) err << "error: " << msg << "\n";
    err << "usage: routedqc <command> [options]\n"
           "  generate --family generic|split|alpha|local --n N"
           " [--alpha-dims d,...] [-o FILE]\n"
           "  validate GRAPH.json [--json]\n"
           "  branch-graph GRAPH.json [--dot|--json] [-o FILE]\n"
           "  verify --process NAME|SPEC.json"
           " [--pipeline generic|split|merged] [--routed-slots] [--json]\n"
           "  transform GRAPH.json PIPELINE.json [-o FILE]\n"
           "  catalog list | catalog export NAME [-o FILE]\n";
    return 2;
  };
  if (args.empty()) return usage("missing command");

  // Minimal flag parsing: positionals plus --key [value] options.
  std::string cmd = args[0];
  std::vector<std::string> pos;
  std::map<std::string, std::string> opt;
  std::set<std::string> flags{"--json", "--dot", "--routed-slots"};
  for (size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) == 0) {
      if (flags.count(a)) {
        opt[a] = "1";
      } else {
        if (i + 1 >= args.size()) return usage("option " + a + " needs a value");
        opt[a] = args[++i];
      }
    } else if (a == "-o") {
      if (i + 1 >= args.size()) return usage("-o needs a value");
      opt["-o"] = args[++i];
    } else {
      pos.push_back(a);
    }
  }
  std::string out_path = opt.count("-o") ? opt["-o"] : "";

  try {
    if (cmd == "generate") {
      if (!opt.count("--family") || !opt.count("--n"))
        return usage("generate needs --family and --n");
      int n = std::stoi(opt["--n"]);
      const std::string& fam = opt["--family"];
      RoutedGraph g;
      if (fam == "generic") {
        g = generic_graph(n);
      } else if (fam == "split") {
        g = split_graph(n);
      } else if (fam == "local") {
        g = local_graph(n);
      } else if (fam == "alpha") {
        std::vector<int64_t> dims(n, 2);
        if (opt.count("--alpha-dims")) {
          dims.clear();
          std::istringstream is(opt["--alpha-dims"]);
          std::string tok;
          while (std::getline(is, tok, ',')) dims.push_back(std::stoll(tok));
        }
        g = alpha_variant(generic_graph(n), dims);
      } else {
        return usage("unknown family " + fam);
      }
      detail::emit(graph_to_json(g).dump(2), out_path, out);
      return 0;
    }

    if (cmd == "validate") {
      if (pos.size() != 1) return usage("validate needs a graph file");
      RoutedGraph g = graph_from_json(detail::load_json(pos[0]));
      ValidityReport rep = is_valid(g);
      if (opt.count("--json")) {
        Json j;
        j["valid"] = rep.valid;
        j["bi_univocal"] = rep.univocal && rep.adjoint_univocal;
        j["loops_weak"] = rep.loops_weak;
        j["failure_stage"] = rep.failure_stage;
        j["details"] = rep.details;
        if (rep.branch_graph)
          j["branch_graph_loop_free"] = is_loop_free(*rep.branch_graph);
        detail::emit(j.dump(2), out_path, out);
      } else {
        detail::emit(rep.summary(), out_path, out);
      }
      return rep.valid ? 0 : 1;
    }

    if (cmd == "branch-graph") {
      if (pos.size() != 1) return usage("branch-graph needs a graph file");
      RoutedGraph g = graph_from_json(detail::load_json(pos[0]));
      BranchGraph bg = build_branch_graph(g);
      if (opt.count("--json")) {
        Json j;
        j["nodes"] = Json::array();
        for (const auto& n : bg.nodes) j["nodes"].push_back(n.str());
        auto edges = [&](const std::set<std::pair<BranchNode, BranchNode>>& s) {
          Json a = Json::array();
          for (const auto& [x, y] : s)
            a.push_back(Json::array({x.str(), y.str()}));
          return a;
        };
        j["solid"] = edges(bg.solid);
        j["green"] = edges(bg.green);
        j["red"] = edges(bg.red);
        detail::emit(j.dump(2), out_path, out);
      } else {
        detail::emit(to_dot(bg), out_path, out);
      }
      return 0;
    }

    if (cmd == "verify") {
      if (!opt.count("--process")) return usage("verify needs --process");
      QcqcSpec spec = detail::load_spec(opt["--process"]);
      double atol = detail::cli_atol();
      std::string pipeline =
          opt.count("--pipeline") ? opt["--pipeline"] : "generic";
      if (opt.count("--routed-slots")) {
        // Compose only the internal nodes, leaving routed agent slots open.
        SkeletalSupermap s = skeletal(generic_graph(spec.n_agents),
                                      generic_dims(spec.n_agents, spec));
        FleshingOut f = flesh_v_nodes(s, spec);
        ChoiTensor acc = f.internal.begin()->second;
        for (auto it = std::next(f.internal.begin());
             it != f.internal.end(); ++it)
          acc = link_product(acc, it->second);
        out << "routed-supermap tensor over " << acc.systems().size()
            << " systems (agent slots left open)\n";
        return 0;
      }
      ProcessVector direct = process_vector(spec);
      ProcessVector via;
      if (pipeline == "generic") {
        SkeletalSupermap s = skeletal(generic_graph(spec.n_agents),
                                      generic_dims(spec.n_agents, spec));
        FleshingOut f = merge_fleshings(flesh_v_nodes(s, spec),
                                        flesh_a_nodes(s, spec));
        via = compose_fleshed(s, f);
      } else if (pipeline == "split") {
        PipelineResult p = split_pipeline(spec);
        via = compose_fleshed(p.skeleton, p.fleshing);
      } else if (pipeline == "merged") {
        PipelineResult p = merged_pipeline(spec);
        via = compose_fleshed(p.skeleton, p.fleshing);
      } else {
        return usage("unknown pipeline " + pipeline);
      }
      double delta = max_abs_diff(direct.w, via.w);
      bool pass = delta <= atol;
      if (opt.count("--dump"))
        detail::emit(tensor_to_json(via.w).dump(), opt["--dump"], out);
      if (opt.count("--json")) {
        Json j;
        j["process"] = spec.name;
        j["pipeline"] = pipeline;
        j["max_delta"] = delta;
        j["atol"] = atol;
        j["pass"] = pass;
        detail::emit(j.dump(2), out_path, out);
      } else {
        std::ostringstream os;
        os << "verify " << spec.name << " via " << pipeline
           << " pipeline: max|delta| = " << delta << (pass ? " <= " : " > ")
           << atol << ": " << (pass ? "PASS" : "FAIL");
        detail::emit(os.str(), out_path, out);
      }
      return pass ? 0 : 1;
    }

    if (cmd == "transform") {
      if (pos.size() != 2)
        return usage("transform needs a graph file and a pipeline file");
      RoutedGraph g = graph_from_json(detail::load_json(pos[0]));
      Json pipe = detail::load_json(pos[1]);
      TransformLog log;
      for (const auto& step : pipe.at("steps")) {
        std::string op = step.at("op").get<std::string>();
        if (op == "alpha") {
          std::vector<int64_t> dims =
              step.at("dims").get<std::vector<int64_t>>();
          g = alpha_variant(g, dims, &log);
        } else if (op == "merge") {
          MergeDirection dir = step.at("dir").get<std::string>() == "up"
                                   ? MergeDirection::Up
                                   : MergeDirection::Down;
          g = merge_nodes(g, step.at("v").get<std::string>(),
                          step.at("a").get<std::string>(), dir, &log);
        } else if (op == "remove-arrows") {
          QcqcSpec spec =
              detail::load_spec(step.at("process").get<std::string>());
          RemovalReport rep = remove_arrows(g, spec);
          TransformRecord rec{"remove-arrows", {}, {}, rep.removed};
          log.push_back(std::move(rec));
          g = rep.graph;
        } else {
          return usage("unknown transform op " + op);
        }
      }
      Json j;
      j["graph"] = graph_to_json(g);
      j["log"] = detail::log_to_json(log);
      detail::emit(j.dump(2), out_path, out);
      return 0;
    }

    if (cmd == "catalog") {
      if (pos.empty()) return usage("catalog needs list or export");
      if (pos[0] == "list") {
        std::ostringstream os;
        for (const auto& n : catalog_names()) os << n << "\n";
        detail::emit(os.str(), out_path, out);
        return 0;
      }
      if (pos[0] == "export") {
        if (pos.size() != 2) return usage("catalog export needs a name");
        NamedProcess p = catalog_process(pos[1]);
        detail::emit(spec_to_json(p.spec).dump(2), out_path, out);
        return 0;
      }
      return usage("unknown catalog action " + pos[0]);
    }

    return usage("unknown command " + cmd);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: bad input file: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace rqc
