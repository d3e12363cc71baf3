#pragma once

// Guarded-command MDP generation. Each diagram becomes one module whose
// integer state variable enumerates control locations; modules synchronize
// on signal labels (thrower plus all catchers fire together).
//
// Locations are token configurations: location i < n is "one token at node
// i", location n is "all tokens consumed" (done), and configurations that
// hold several tokens (parallel regions, merged baselines) get auxiliary
// locations past n. Node semantics per kind:
//   start/task/throw   consume one token, one command per outgoing flow
//   exclusive gateway  consume one token; probabilistic out-flows form one
//                      command with a branch per flow, otherwise one command
//                      per flow
//   parallel gateway   consume one token per incoming flow, produce one on
//                      every outgoing flow
//   catch event        consume one token, produce one on every outgoing
//                      flow (message readiness is the synchronization label,
//                      never a token count)
//   end event          consume one token, produce nothing
// Throw/catch/end-signal commands are labeled with their signal unless the
// whole link lives inside the same diagram (merged baseline), where the
// synchronization is structural and the command stays silent.

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "model.hpp"

namespace bpmn2mdp {

struct Command {
  std::optional<std::string> action;  // sync label; set for event participation
  int guard_location = 0;
  std::vector<std::pair<double, int>> branches;  // probability, target location
  std::string source;                            // acting node id
  bool task_completion = false;
};

struct StateVar {
  std::string name;
  int max = 0;  // range [0 .. max]
};

struct MdpModule {
  std::string name;  // diagram id
  StateVar state_var;
  int location_count = 0;
  int initial_location = 0;
  int done_location = 0;
  std::map<std::string, int> location_of;  // node id -> single-token location
  std::vector<std::string> node_ids;       // diagram node order
  std::vector<std::string> node_names;
  // token count per node index, per location
  std::vector<std::vector<std::uint16_t>> location_configs;
  std::vector<Command> commands;
};

namespace detail {

inline std::string config_key(const std::vector<std::uint16_t>& c) {
  return std::string(reinterpret_cast<const char*>(c.data()),
                     c.size() * sizeof(std::uint16_t));
}

}  // namespace detail

inline MdpModule generate_module(const Diagram& d,
                                 const std::vector<EventLink>& links,
                                 std::uint64_t max_locations = 1'000'000) {
  const std::size_t n = d.nodes.size();

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(d.nodes[i].id, i);

  std::map<std::string, const EventLink*> link_of;
  for (const auto& l : links) link_of.emplace(l.signal, &l);

  // Labels: signal unless the link is entirely intra-diagram.
  auto label_for = [&](const FlowNode& node) -> std::optional<std::string> {
    bool event = node.kind == NodeKind::IntermediateThrowEvent ||
                 node.kind == NodeKind::IntermediateCatchEvent ||
                 (node.kind == NodeKind::EndEvent && node.signal);
    if (!event || !node.signal) return std::nullopt;
    auto it = link_of.find(*node.signal);
    if (it == link_of.end())
      throw UnlinkedSignal("signal '" + *node.signal + "' of node '" +
                           node.id + "' has no event link");
    const EventLink& l = *it->second;
    bool intra = l.thrower.diagram_id == d.id;
    for (const auto& c : l.catchers) intra = intra && c.diagram_id == d.id;
    if (intra) return std::nullopt;
    return *node.signal;
  };

  std::vector<std::vector<const SequenceFlow*>> outs(n);
  std::vector<int> in_degree(n, 0);
  for (const auto& f : d.flows) {
    outs[index.at(f.source)].push_back(&f);
    ++in_degree[index.at(f.target)];
  }

  std::vector<int> required(n, 1);
  std::vector<std::optional<std::string>> labels(n);
  std::size_t start = n;
  for (std::size_t i = 0; i < n; ++i) {
    const FlowNode& node = d.nodes[i];
    if (node.kind == NodeKind::ParallelGateway)
      required[i] = std::max(1, in_degree[i]);
    labels[i] = label_for(node);
    if (node.kind == NodeKind::StartEvent) start = i;
  }
  if (start == n) throw Error("diagram " + d.id + " has no start event");

  MdpModule mod;
  mod.name = d.id;
  mod.state_var.name = "s_" + d.id;
  for (std::size_t i = 0; i < n; ++i) {
    mod.node_ids.push_back(d.nodes[i].id);
    mod.node_names.push_back(d.nodes[i].name);
    mod.location_of.emplace(d.nodes[i].id, static_cast<int>(i));
  }
  mod.done_location = static_cast<int>(n);
  mod.initial_location = static_cast<int>(start);

  // Locations 0..n-1 are the single-token configurations, n is empty (done);
  // multi-token configurations get fresh indices in discovery order.
  std::unordered_map<std::string, int> loc_of;
  std::vector<std::vector<std::uint16_t>> configs;
  configs.resize(n + 1, std::vector<std::uint16_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) configs[i][i] = 1;
  for (std::size_t i = 0; i <= n; ++i)
    loc_of.emplace(detail::config_key(configs[i]), static_cast<int>(i));

  auto location = [&](const std::vector<std::uint16_t>& c) {
    auto key = detail::config_key(c);
    auto it = loc_of.find(key);
    if (it != loc_of.end()) return it->second;
    if (configs.size() >= max_locations)
      throw StateSpaceLimitExceeded(configs.size(), 0);
    int loc = static_cast<int>(configs.size());
    configs.push_back(c);
    loc_of.emplace(std::move(key), loc);
    return loc;
  };

  std::vector<std::uint16_t> init(n, 0);
  init[start] = 1;
  int init_loc = location(init);
  (void)init_loc;  // == start by construction

  std::deque<int> queue{static_cast<int>(start)};
  std::set<int> seen{static_cast<int>(start)};

  while (!queue.empty()) {
    int loc = queue.front();
    queue.pop_front();
    const std::vector<std::uint16_t> cfg = configs[loc];

    for (std::size_t i = 0; i < n; ++i) {
      if (cfg[i] < required[i]) continue;
      const FlowNode& node = d.nodes[i];

      auto base = cfg;
      base[i] = static_cast<std::uint16_t>(base[i] - required[i]);

      auto push_command = [&](std::vector<std::pair<double, int>> branches) {
        Command c;
        c.action = labels[i];
        c.guard_location = loc;
        c.branches = std::move(branches);
        c.source = node.id;
        c.task_completion = node.kind == NodeKind::Task;
        for (const auto& [p, tgt] : c.branches)
          if (!seen.count(tgt)) {
            seen.insert(tgt);
            queue.push_back(tgt);
          }
        mod.commands.push_back(std::move(c));
      };

      switch (node.kind) {
        case NodeKind::EndEvent:
          push_command({{1.0, location(base)}});
          break;
        case NodeKind::ParallelGateway:
        case NodeKind::IntermediateCatchEvent: {
          if (outs[i].empty()) break;  // stuck token
          auto next = base;
          for (const auto* f : outs[i]) ++next[index.at(f->target)];
          push_command({{1.0, location(next)}});
          break;
        }
        case NodeKind::ExclusiveGateway: {
          if (outs[i].empty()) break;
          if (outs[i].front()->probability) {
            // validate guarantees all-or-none and sum 1
            std::vector<std::pair<double, int>> branches;
            for (const auto* f : outs[i]) {
              auto next = base;
              ++next[index.at(f->target)];
              int tgt = location(next);
              bool merged = false;
              for (auto& [p, t] : branches)
                if (t == tgt) {
                  p += *f->probability;
                  merged = true;
                }
              if (!merged) branches.emplace_back(*f->probability, tgt);
            }
            push_command(std::move(branches));
          } else {
            for (const auto* f : outs[i]) {
              auto next = base;
              ++next[index.at(f->target)];
              push_command({{1.0, location(next)}});
            }
          }
          break;
        }
        default: {  // start, task, throw
          for (const auto* f : outs[i]) {
            auto next = base;
            ++next[index.at(f->target)];
            push_command({{1.0, location(next)}});
          }
          break;
        }
      }
    }
  }

  mod.location_configs = std::move(configs);
  mod.location_count = static_cast<int>(mod.location_configs.size());
  mod.state_var.max = mod.location_count - 1;
  return mod;
}

struct RewardStructure {
  std::string name;
  // (module name, command index) -> reward on that command
  std::map<std::pair<std::string, int>, double> values;
};

// Task completion commands carry the task's duration ("days") and effort
// ("wd"). Without a timeline the model has no reward structures at all.
inline std::vector<RewardStructure> attach_rewards(
    const std::vector<MdpModule>& modules, const ProcessModel& m) {
  if (!m.timeline) return {};
  RewardStructure days{"days", {}}, wd{"wd", {}};
  for (const auto& mod : modules) {
    const Diagram* d = m.diagram(mod.name);
    if (!d) continue;
    for (std::size_t ci = 0; ci < mod.commands.size(); ++ci) {
      const Command& c = mod.commands[ci];
      if (!c.task_completion) continue;
      const FlowNode* node = d->node(c.source);
      if (!node) continue;
      days.values[{mod.name, static_cast<int>(ci)}] =
          node->duration_days.value_or(0.0);
      wd.values[{mod.name, static_cast<int>(ci)}] =
          node->effort_wd.value_or(0.0);
    }
  }
  return {std::move(days), std::move(wd)};
}

struct LabelAtom {
  std::string label;
  std::string module;
  int location = 0;
};

// Milestone names label every location whose configuration holds a token at
// an identically named node.
inline std::vector<LabelAtom> milestone_labels(
    const std::vector<MdpModule>& modules, const ProcessModel& m) {
  std::vector<LabelAtom> atoms;
  if (!m.timeline) return atoms;
  for (const auto& ms : m.timeline->milestones) {
    if (ms.name == "done_all") continue;
    for (const auto& mod : modules) {
      for (std::size_t i = 0; i < mod.node_names.size(); ++i) {
        if (mod.node_names[i] != ms.name) continue;
        for (int loc = 0; loc < mod.location_count; ++loc)
          if (mod.location_configs[loc][i] > 0)
            atoms.push_back({ms.name, mod.name, loc});
      }
    }
  }
  return atoms;
}

struct ComposeOptions {
  std::uint64_t max_states = 10'000'000;
};

struct ComposedAction {
  int label = -1;  // index into action_labels; -1 for a silent step
  std::vector<std::pair<double, std::uint32_t>> branches;
  std::vector<double> rewards;  // parallel to reward_names; empty == all zero
};

struct ComposedMdp {
  std::vector<std::string> module_names;
  std::vector<std::string> action_labels;
  std::vector<std::string> reward_names;
  std::uint32_t initial = 0;
  std::vector<std::vector<ComposedAction>> actions;     // per state
  std::vector<std::vector<std::int32_t>> states;        // location tuples
  std::map<std::string, std::vector<std::uint8_t>> labels;
  std::uint64_t transition_count = 0;
  double build_seconds = 0.0;

  std::uint64_t state_count() const { return states.size(); }
};

// Interleaving product with full synchronization on shared labels: a labeled
// action fires exactly when every module owning that label has an enabled
// command for it; silent commands interleave freely. Exploration is a BFS
// from the initial location tuple, so state numbering is deterministic.
inline ComposedMdp compose_modules(const std::vector<MdpModule>& modules,
                                   const std::vector<EventLink>& /*links*/,
                                   const std::vector<RewardStructure>& rewards,
                                   const std::vector<LabelAtom>& atoms = {},
                                   const ComposeOptions& opts = {}) {
  auto t0 = std::chrono::steady_clock::now();
  const std::size_t k = modules.size();

  ComposedMdp mdp;
  for (const auto& m : modules) mdp.module_names.push_back(m.name);
  for (const auto& r : rewards) mdp.reward_names.push_back(r.name);

  // Per module and location: silent command indices / per-label indices.
  std::vector<std::vector<std::vector<int>>> silent(k);
  std::vector<std::map<std::string, std::vector<std::vector<int>>>> labeled(k);
  std::map<std::string, std::vector<int>> owners;
  for (std::size_t mi = 0; mi < k; ++mi) {
    silent[mi].resize(modules[mi].location_count);
    for (std::size_t ci = 0; ci < modules[mi].commands.size(); ++ci) {
      const Command& c = modules[mi].commands[ci];
      if (c.action) {
        auto& per_loc = labeled[mi][*c.action];
        if (per_loc.empty()) per_loc.resize(modules[mi].location_count);
        per_loc[c.guard_location].push_back(static_cast<int>(ci));
      } else {
        silent[mi][c.guard_location].push_back(static_cast<int>(ci));
      }
    }
    for (const auto& [label, per_loc] : labeled[mi])
      owners[label].push_back(static_cast<int>(mi));
  }
  for (const auto& [label, mods] : owners) mdp.action_labels.push_back(label);

  std::vector<std::vector<std::vector<double>>> cmd_rewards(k);
  for (std::size_t mi = 0; mi < k; ++mi)
    cmd_rewards[mi].resize(modules[mi].commands.size());
  for (std::size_t ri = 0; ri < rewards.size(); ++ri)
    for (const auto& [key, v] : rewards[ri].values) {
      for (std::size_t mi = 0; mi < k; ++mi) {
        if (modules[mi].name != key.first) continue;
        auto& vec = cmd_rewards[mi][key.second];
        if (vec.empty()) vec.assign(rewards.size(), 0.0);
        vec[ri] = v;
      }
    }

  auto pack = [&](const std::vector<std::int32_t>& t) {
    return std::string(reinterpret_cast<const char*>(t.data()),
                       t.size() * sizeof(std::int32_t));
  };

  std::unordered_map<std::string, std::uint32_t> state_of;
  std::vector<std::int32_t> init(k);
  for (std::size_t mi = 0; mi < k; ++mi) init[mi] = modules[mi].initial_location;

  auto intern = [&](std::vector<std::int32_t> tuple) {
    auto key = pack(tuple);
    auto it = state_of.find(key);
    if (it != state_of.end()) return it->second;
    if (mdp.states.size() >= opts.max_states)
      throw StateSpaceLimitExceeded(mdp.states.size(), mdp.transition_count);
    auto idx = static_cast<std::uint32_t>(mdp.states.size());
    state_of.emplace(std::move(key), idx);
    mdp.states.push_back(std::move(tuple));
    return idx;
  };

  mdp.initial = intern(init);

  auto add_rewards = [&](std::vector<double>& acc, const std::vector<double>& r) {
    if (r.empty()) return;
    if (acc.empty()) acc.assign(r.size(), 0.0);
    for (std::size_t i = 0; i < r.size(); ++i) acc[i] += r[i];
  };

  for (std::uint32_t si = 0; si < mdp.states.size(); ++si) {
    const std::vector<std::int32_t> locs = mdp.states[si];
    std::vector<ComposedAction> acts;

    for (std::size_t mi = 0; mi < k; ++mi) {
      for (int ci : silent[mi][locs[mi]]) {
        const Command& c = modules[mi].commands[ci];
        ComposedAction a;
        for (const auto& [p, tgt] : c.branches) {
          auto tuple = locs;
          tuple[mi] = tgt;
          a.branches.emplace_back(p, intern(std::move(tuple)));
        }
        add_rewards(a.rewards, cmd_rewards[mi][ci]);
        acts.push_back(std::move(a));
      }
    }

    for (std::size_t li = 0; li < mdp.action_labels.size(); ++li) {
      const std::string& label = mdp.action_labels[li];
      const auto& mods = owners.at(label);
      std::vector<const std::vector<int>*> enabled;
      bool ok = true;
      for (int mi : mods) {
        const auto& per_loc = labeled[mi].at(label);
        const auto& cmds = per_loc[locs[mi]];
        if (cmds.empty()) {
          ok = false;
          break;
        }
        enabled.push_back(&cmds);
      }
      if (!ok) continue;

      // every combination of enabled commands, owner-major order
      std::vector<std::size_t> pick(mods.size(), 0);
      while (true) {
        ComposedAction a;
        a.label = static_cast<int>(li);
        std::vector<std::pair<double, std::vector<std::int32_t>>> partial{
            {1.0, locs}};
        for (std::size_t oi = 0; oi < mods.size(); ++oi) {
          int mi = mods[oi];
          const Command& c = modules[mi].commands[(*enabled[oi])[pick[oi]]];
          add_rewards(a.rewards, cmd_rewards[mi][(*enabled[oi])[pick[oi]]]);
          std::vector<std::pair<double, std::vector<std::int32_t>>> next;
          for (const auto& [p, tuple] : partial)
            for (const auto& [bp, tgt] : c.branches) {
              auto t2 = tuple;
              t2[mi] = tgt;
              next.emplace_back(p * bp, std::move(t2));
            }
          partial = std::move(next);
        }
        for (auto& [p, tuple] : partial)
          a.branches.emplace_back(p, intern(std::move(tuple)));
        acts.push_back(std::move(a));

        std::size_t oi = 0;
        for (; oi < mods.size(); ++oi) {
          if (++pick[oi] < enabled[oi]->size()) break;
          pick[oi] = 0;
        }
        if (oi == mods.size()) break;
      }
    }

    for (const auto& a : acts) mdp.transition_count += a.branches.size();
    mdp.actions.resize(mdp.states.size());
    mdp.actions[si] = std::move(acts);
  }

  std::vector<std::uint8_t> done(mdp.states.size(), 0);
  for (std::size_t si = 0; si < mdp.states.size(); ++si) {
    bool all = true;
    for (std::size_t mi = 0; mi < k; ++mi)
      all = all && mdp.states[si][mi] == modules[mi].done_location;
    done[si] = all ? 1 : 0;
  }
  mdp.labels["done_all"] = std::move(done);

  std::map<std::string, std::vector<std::pair<int, int>>> atom_map;
  for (const auto& a : atoms) {
    for (std::size_t mi = 0; mi < k; ++mi)
      if (modules[mi].name == a.module)
        atom_map[a.label].emplace_back(static_cast<int>(mi), a.location);
  }
  for (const auto& [label, pairs] : atom_map) {
    std::vector<std::uint8_t> bits(mdp.states.size(), 0);
    for (std::size_t si = 0; si < mdp.states.size(); ++si)
      for (const auto& [mi, loc] : pairs)
        if (mdp.states[si][mi] == loc) bits[si] = 1;
    mdp.labels[label] = std::move(bits);
  }

  mdp.build_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return mdp;
}

}  // namespace bpmn2mdp
