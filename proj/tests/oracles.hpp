#pragma once

// Independent oracles for the generated MDPs.
//
// enumerate_global walks the token semantics directly over the ProcessModel
// (global token maps, no per-diagram location interning, no module
// composition), so its state and transition counts cross-check the module
// generator and composer without sharing code with them.
//
// pi_reach computes reachability probabilities by policy iteration with
// exact linear-system evaluation (dense Gaussian elimination), a different
// algorithm family from the engine's value iteration.

#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpmn2mdp/bpmn2mdp.hpp"

namespace oracle {

using namespace bpmn2mdp;

struct GlobalCounts {
  std::uint64_t states = 0;
  std::uint64_t transitions = 0;
};

inline GlobalCounts enumerate_global(const ProcessModel& m) {
  using DiagState = std::map<std::string, int>;  // node id -> tokens (no zeros)
  using State = std::vector<DiagState>;

  const std::size_t nd = m.diagrams.size();

  std::map<std::string, const EventLink*> link_of;
  for (const auto& l : m.event_links) link_of.emplace(l.signal, &l);

  auto label_for = [&](const Diagram& d,
                       const FlowNode& n) -> std::optional<std::string> {
    bool event = n.kind == NodeKind::IntermediateThrowEvent ||
                 n.kind == NodeKind::IntermediateCatchEvent ||
                 (n.kind == NodeKind::EndEvent && n.signal);
    if (!event || !n.signal) return std::nullopt;
    const EventLink& l = *link_of.at(*n.signal);
    bool intra = l.thrower.diagram_id == d.id;
    for (const auto& c : l.catchers) intra = intra && c.diagram_id == d.id;
    if (intra) return std::nullopt;
    return *n.signal;
  };

  // static owners per label, in diagram order
  std::map<std::string, std::vector<std::size_t>> owners;
  for (std::size_t di = 0; di < nd; ++di)
    for (const auto& n : m.diagrams[di].nodes)
      if (auto l = label_for(m.diagrams[di], n)) {
        auto& v = owners[*l];
        if (v.empty() || v.back() != di) v.push_back(di);
      }

  struct Option {
    std::optional<std::string> label;
    std::vector<std::pair<double, DiagState>> branches;
  };

  auto local_options = [&](std::size_t di, const DiagState& st) {
    const Diagram& d = m.diagrams[di];
    std::vector<Option> opts;
    for (const auto& n : d.nodes) {
      auto outs = d.out_flows(n.id);
      int have = 0;
      if (auto it = st.find(n.id); it != st.end()) have = it->second;
      int need = n.kind == NodeKind::ParallelGateway
                     ? std::max<std::size_t>(1, d.in_flows(n.id).size())
                     : 1;
      if (have < need) continue;

      DiagState base = st;
      base[n.id] -= need;
      if (base[n.id] == 0) base.erase(n.id);
      auto lbl = label_for(d, n);

      auto put = [&](const std::vector<std::string>& targets) {
        DiagState next = base;
        for (const auto& t : targets) ++next[t];
        return next;
      };

      if (n.kind == NodeKind::EndEvent) {
        opts.push_back({lbl, {{1.0, base}}});
      } else if (n.kind == NodeKind::ParallelGateway ||
                 n.kind == NodeKind::IntermediateCatchEvent) {
        if (outs.empty()) continue;
        std::vector<std::string> all;
        for (const auto* f : outs) all.push_back(f->target);
        opts.push_back({lbl, {{1.0, put(all)}}});
      } else if (n.kind == NodeKind::ExclusiveGateway && !outs.empty() &&
                 outs.front()->probability) {
        Option o{lbl, {}};
        for (const auto* f : outs) {
          DiagState next = put({f->target});
          bool merged = false;
          for (auto& [p, s2] : o.branches)
            if (s2 == next) {
              p += *f->probability;
              merged = true;
            }
          if (!merged) o.branches.emplace_back(*f->probability, next);
        }
        opts.push_back(std::move(o));
      } else {
        for (const auto* f : outs)
          opts.push_back({lbl, {{1.0, put({f->target})}}});
      }
    }
    return opts;
  };

  auto key_of = [](const State& s) {
    std::string k;
    for (const auto& ds : s) {
      for (const auto& [id, c] : ds) k += id + ":" + std::to_string(c) + ",";
      k += ";";
    }
    return k;
  };

  State init(nd);
  for (std::size_t di = 0; di < nd; ++di)
    for (const auto& n : m.diagrams[di].nodes)
      if (n.kind == NodeKind::StartEvent) init[di][n.id] = 1;

  std::set<std::string> seen{key_of(init)};
  std::deque<State> queue{init};
  GlobalCounts counts;

  while (!queue.empty()) {
    State s = queue.front();
    queue.pop_front();
    ++counts.states;

    auto visit = [&](const State& t) {
      if (seen.insert(key_of(t)).second) queue.push_back(t);
    };

    std::vector<std::vector<Option>> opts(nd);
    for (std::size_t di = 0; di < nd; ++di) opts[di] = local_options(di, s[di]);

    for (std::size_t di = 0; di < nd; ++di)
      for (const auto& o : opts[di]) {
        if (o.label) continue;
        counts.transitions += o.branches.size();
        for (const auto& [p, ds] : o.branches) {
          State t = s;
          t[di] = ds;
          visit(t);
        }
      }

    for (const auto& [label, parts] : owners) {
      std::vector<std::vector<const Option*>> enabled;
      bool ok = true;
      for (std::size_t di : parts) {
        std::vector<const Option*> here;
        for (const auto& o : opts[di])
          if (o.label && *o.label == label) here.push_back(&o);
        if (here.empty()) {
          ok = false;
          break;
        }
        enabled.push_back(std::move(here));
      }
      if (!ok) continue;

      std::vector<std::size_t> pickv(parts.size(), 0);
      while (true) {
        std::vector<std::pair<double, State>> partial{{1.0, s}};
        for (std::size_t oi = 0; oi < parts.size(); ++oi) {
          const Option& o = *enabled[oi][pickv[oi]];
          std::vector<std::pair<double, State>> next;
          for (const auto& [p, st] : partial)
            for (const auto& [bp, ds] : o.branches) {
              State t = st;
              t[parts[oi]] = ds;
              next.emplace_back(p * bp, std::move(t));
            }
          partial = std::move(next);
        }
        counts.transitions += partial.size();
        for (auto& [p, t] : partial) visit(t);

        std::size_t oi = 0;
        for (; oi < parts.size(); ++oi) {
          if (++pickv[oi] < enabled[oi].size()) break;
          pickv[oi] = 0;
        }
        if (oi == parts.size()) break;
      }
    }
  }
  return counts;
}

// Policy iteration with exact evaluation. States without actions are
// absorbing; the returned value is for the initial state.
inline double pi_reach(const ComposedMdp& m, const std::string& label,
                       bool minimize) {
  const auto& goal = m.labels.at(label);
  const std::uint32_t n = static_cast<std::uint32_t>(m.state_count());

  auto branches_of = [&](std::uint32_t s, int choice)
      -> std::vector<std::pair<double, std::uint32_t>> {
    if (m.actions[s].empty()) return {{1.0, s}};  // absorbing
    return m.actions[s][choice].branches;
  };
  auto action_count = [&](std::uint32_t s) {
    return m.actions[s].empty() ? std::size_t(1) : m.actions[s].size();
  };

  std::vector<int> policy(n, 0);
  std::vector<double> values(n, 0.0);

  // Minimal reachability needs its certainly-zero states pinned up front:
  // greedy one-step improvement cannot escape into a goal-avoiding cycle
  // whose current evaluation already satisfies the Bellman equation. A state
  // keeps a positive minimum exactly when every action puts some probability
  // on the positive set; the rest are clamped to zero and left out of the
  // linear systems.
  std::vector<std::uint8_t> zero(n, 0);
  if (minimize) {
    std::vector<std::uint8_t> pos(goal.begin(), goal.end());
    for (bool grew = true; grew;) {
      grew = false;
      for (std::uint32_t s = 0; s < n; ++s) {
        if (pos[s]) continue;
        bool every = true;
        for (std::size_t ai = 0; ai < action_count(s); ++ai) {
          bool some = false;
          for (const auto& [p, t] : branches_of(s, static_cast<int>(ai)))
            if (pos[t]) {
              some = true;
              break;
            }
          if (!some) {
            every = false;
            break;
          }
        }
        if (every) {
          pos[s] = 1;
          grew = true;
        }
      }
    }
    for (std::uint32_t s = 0; s < n; ++s) zero[s] = !pos[s];
  }

  for (int round = 0; round < 500; ++round) {
    // reachability of goal inside the chosen chain
    std::vector<std::uint8_t> reach(goal.begin(), goal.end());
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::uint32_t s = 0; s < n; ++s) {
        if (reach[s]) continue;
        for (const auto& [p, t] : branches_of(s, policy[s]))
          if (reach[t]) {
            reach[s] = 1;
            changed = true;
            break;
          }
      }
    }

    std::vector<std::uint32_t> unknown;
    std::vector<int> index(n, -1);
    for (std::uint32_t s = 0; s < n; ++s)
      if (reach[s] && !goal[s] && !zero[s]) {
        index[s] = static_cast<int>(unknown.size());
        unknown.push_back(s);
      }

    const std::size_t k = unknown.size();
    std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
    for (std::size_t r = 0; r < k; ++r) {
      a[r][r] = 1.0;
      for (const auto& [p, t] : branches_of(unknown[r], policy[unknown[r]])) {
        if (goal[t])
          a[r][k] += p;
        else if (index[t] >= 0)
          a[r][index[t]] -= p;
        // successors outside the reach set contribute 0
      }
    }
    // Gaussian elimination, partial pivoting
    for (std::size_t col = 0; col < k; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < k; ++r)
        if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
      std::swap(a[col], a[piv]);
      if (std::abs(a[col][col]) < 1e-14)
        throw std::runtime_error("singular policy evaluation system");
      for (std::size_t r = 0; r < k; ++r) {
        if (r == col) continue;
        double f = a[r][col] / a[col][col];
        if (f == 0.0) continue;
        for (std::size_t c2 = col; c2 <= k; ++c2) a[r][c2] -= f * a[col][c2];
      }
    }
    for (std::uint32_t s = 0; s < n; ++s)
      values[s] = goal[s] ? 1.0 : (index[s] >= 0 ? a[index[s]][k] / a[index[s]][index[s]] : 0.0);

    // greedy improvement with a strict margin; zero-clamped states stay put
    bool improved = false;
    for (std::uint32_t s = 0; s < n; ++s) {
      if (goal[s] || zero[s] || m.actions[s].empty()) continue;
      double cur = 0.0;
      for (const auto& [p, t] : branches_of(s, policy[s])) cur += p * values[t];
      int best = policy[s];
      double bestq = cur;
      for (std::size_t ai = 0; ai < action_count(s); ++ai) {
        double q = 0.0;
        for (const auto& [p, t] : branches_of(s, static_cast<int>(ai)))
          q += p * values[t];
        if ((minimize && q < bestq - 1e-10) || (!minimize && q > bestq + 1e-10)) {
          bestq = q;
          best = static_cast<int>(ai);
        }
      }
      if (best != policy[s]) {
        policy[s] = best;
        improved = true;
      }
    }
    if (!improved) return values[m.initial];
  }
  throw std::runtime_error("policy iteration did not settle");
}

}  // namespace oracle
