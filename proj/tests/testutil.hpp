#pragma once

// Shared helpers for the test suites: terse model builders, fixture loading,
// and a seeded generator of random pool-based collaborations.

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bpmn2mdp/bpmn2mdp.hpp"

namespace testutil {

using namespace bpmn2mdp;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fixture_path(const std::string& name) {
  return std::string(MODELS_DIR) + "/" + name;
}

inline ProcessModel load_fixture(const std::string& name) {
  return parse(read_file(fixture_path(name)));
}

inline FlowNode node(std::string id, NodeKind kind, std::string name = "",
                     std::optional<std::string> signal = std::nullopt,
                     std::optional<double> days = std::nullopt,
                     std::optional<double> wd = std::nullopt) {
  FlowNode n;
  n.id = std::move(id);
  n.name = name.empty() ? n.id : std::move(name);
  n.kind = kind;
  n.signal = std::move(signal);
  n.duration_days = days;
  n.effort_wd = wd;
  return n;
}

inline SequenceFlow flow(std::string id, std::string source, std::string target,
                         std::optional<double> probability = std::nullopt) {
  SequenceFlow f;
  f.id = std::move(id);
  f.source = std::move(source);
  f.target = std::move(target);
  f.probability = probability;
  return f;
}

// start -> each interior node in order -> end, with generated flow ids
inline Diagram chain(std::string id, std::vector<FlowNode> nodes, int level = 1,
                     std::string role = "") {
  Diagram d;
  d.id = std::move(id);
  d.name = d.id;
  d.level = level;
  d.role = std::move(role);
  d.nodes = std::move(nodes);
  for (std::size_t i = 0; i + 1 < d.nodes.size(); ++i)
    d.flows.push_back(flow(d.id + "_f" + std::to_string(i), d.nodes[i].id,
                           d.nodes[i + 1].id));
  return d;
}

struct RandomModelOptions {
  int max_diagrams = 3;
  int max_nodes = 10;  // per diagram, including start and end
  int max_messages = 3;
};

// Random pool-based collaboration: acyclic control flow (every flow points
// to a later node, so completion is inherent), exclusive gateways only, with
// dyadic branch probabilities that sum to exactly 1.0, and task-to-task
// message flows across distinct pools. Node names are diagram-prefixed, so
// no two diagrams are structural duplicates.
inline ProcessModel random_pooled_model(std::mt19937& rng,
                                        const RandomModelOptions& opt = {}) {
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };

  ProcessModel m;
  int nd = pick(1, opt.max_diagrams);
  std::vector<std::vector<std::string>> tasks(nd);

  for (int di = 0; di < nd; ++di) {
    std::string p = "d" + std::to_string(di) + "_";
    Diagram d;
    d.id = "d" + std::to_string(di);
    d.name = d.id;
    d.level = 1;

    int interior = pick(1, opt.max_nodes - 2);
    d.nodes.push_back(node(p + "s", NodeKind::StartEvent));
    for (int i = 0; i < interior; ++i) {
      bool gateway = pick(0, 3) == 0;
      if (gateway)
        d.nodes.push_back(node(p + "g" + std::to_string(i),
                               NodeKind::ExclusiveGateway));
      else {
        d.nodes.push_back(node(p + "t" + std::to_string(i), NodeKind::Task, "",
                               std::nullopt, pick(0, 5), pick(0, 5)));
        tasks[di].push_back(d.nodes.back().id);
      }
    }
    d.nodes.push_back(node(p + "e", NodeKind::EndEvent));

    int last = interior + 1;  // index of the end node
    int fi = 0;
    for (int i = 0; i < last; ++i) {
      const FlowNode& n = d.nodes[i];
      auto add = [&](int target, std::optional<double> prob) {
        d.flows.push_back(flow(p + "f" + std::to_string(fi++), n.id,
                               d.nodes[target].id, prob));
      };
      if (n.kind == NodeKind::ExclusiveGateway) {
        int t1 = pick(i + 1, last);
        int t2 = pick(i + 1, last);
        if (pick(0, 1)) {  // probabilistic
          double p1 = pick(0, 1) ? 0.5 : 0.25;
          if (t1 == t2) {
            add(t1, 1.0);
          } else {
            add(t1, p1);
            add(t2, 1.0 - p1);
          }
        } else {  // nondeterministic
          add(t1, std::nullopt);
          if (t1 != t2) add(t2, std::nullopt);
        }
      } else {
        add(pick(i + 1, last), std::nullopt);
      }
    }

    // every non-start node gets an incoming flow (reachable, splice-safe);
    // extra out-flows avoid gateways so probability sums stay intact
    for (int i = 1; i <= last; ++i) {
      bool has_in = false;
      for (const auto& f : d.flows) has_in = has_in || f.target == d.nodes[i].id;
      if (has_in) continue;
      int j = i - 1;
      while (d.nodes[j].kind == NodeKind::ExclusiveGateway) --j;
      d.flows.push_back(flow(p + "f" + std::to_string(fi++), d.nodes[j].id,
                             d.nodes[i].id));
    }

    m.pools.push_back({"pool" + std::to_string(di), "pool" + std::to_string(di),
                       {d.id}});
    m.diagrams.push_back(std::move(d));
  }

  if (nd >= 2) {
    int nm = pick(1, opt.max_messages);
    for (int j = 0; j < nm; ++j) {
      int a = pick(0, nd - 1);
      int b = pick(0, nd - 2);
      if (b >= a) ++b;
      if (tasks[a].empty() || tasks[b].empty()) continue;
      MessageFlow f;
      f.id = "mf" + std::to_string(j);
      f.source = tasks[a][pick(0, int(tasks[a].size()) - 1)];
      f.target = tasks[b][pick(0, int(tasks[b].size()) - 1)];
      m.message_flows.push_back(std::move(f));
    }
  }

  m.abstraction_levels = 1;
  return m;
}

}  // namespace testutil
