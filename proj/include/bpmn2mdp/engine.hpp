#pragma once

// Explicit-state analysis: reachability probabilities (min/max over
// schedulers) and expected accumulated rewards until a goal label.
//
// Both analyses run a qualitative precomputation first (the classic
// probability-0 / probability-1 fixpoints), so qualitative answers are exact
// 0.0 or 1.0 rather than iteration artifacts; value iteration then runs only
// on the remaining states, where its fixpoint is unique. Expected rewards
// use +infinity for states that cannot reach the goal with probability one
// under the relevant schedulers; minimal rewards iterate from above, which
// stays correct in the presence of zero-reward cycles.
//
// States without outgoing actions are treated as absorbing. A non-goal
// absorbing state therefore has reach probability 0 and reward +infinity.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mdp.hpp"

namespace bpmn2mdp {

struct StateSpaceStats {
  std::uint64_t states = 0;
  std::uint64_t transitions = 0;  // (state, action, branch) triples
  double build_seconds = 0.0;
};

inline StateSpaceStats count_state_space(const ComposedMdp& m) {
  return {m.state_count(), m.transition_count, m.build_seconds};
}

struct DeadlockReport {
  bool deadlock_free = true;
  std::optional<std::uint32_t> witness;  // first stuck state, if any
};

// Terminal success states (done_all) are absorbing by design, not deadlocks.
inline DeadlockReport check_deadlock_free(const ComposedMdp& m) {
  const auto& done = m.labels.at("done_all");
  for (std::uint32_t s = 0; s < m.state_count(); ++s)
    if (m.actions[s].empty() && !done[s]) return {false, s};
  return {true, std::nullopt};
}

struct EngineOptions {
  double epsilon = 1e-8;  // absolute convergence threshold
  std::uint64_t max_iterations = 1'000'000;
};

namespace detail {

// States with optimal reach probability 0. For minimize, a state escapes the
// zero set only if every action keeps some mass on the escaping set.
inline std::vector<std::uint8_t> prob0_set(const ComposedMdp& m,
                                           const std::vector<std::uint8_t>& goal,
                                           bool minimize) {
  std::vector<std::uint8_t> reach(goal.begin(), goal.end());
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::uint32_t s = 0; s < m.state_count(); ++s) {
      if (reach[s] || m.actions[s].empty()) continue;
      bool add = minimize;
      for (const auto& a : m.actions[s]) {
        bool hit = false;
        for (const auto& [p, t] : a.branches) hit = hit || reach[t];
        if (minimize)
          add = add && hit;
        else if (hit) {
          add = true;
          break;
        }
      }
      if (add) {
        reach[s] = 1;
        changed = true;
      }
    }
  }
  std::vector<std::uint8_t> zero(m.state_count(), 0);
  for (std::uint32_t s = 0; s < m.state_count(); ++s) zero[s] = !reach[s];
  return zero;
}

// States with optimal reach probability 1: greatest fixpoint u over a least
// fixpoint v. minimize quantifies over all actions, maximize over some.
inline std::vector<std::uint8_t> prob1_set(const ComposedMdp& m,
                                           const std::vector<std::uint8_t>& goal,
                                           bool minimize) {
  const std::uint32_t n = static_cast<std::uint32_t>(m.state_count());
  std::vector<std::uint8_t> u(n, 1);
  while (true) {
    std::vector<std::uint8_t> v(n, 0);
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::uint32_t s = 0; s < n; ++s) {
        if (v[s]) continue;
        bool add = false;
        if (goal[s]) {
          add = true;
        } else if (!m.actions[s].empty()) {
          add = minimize;
          for (const auto& a : m.actions[s]) {
            bool stays = true, hits = false;
            for (const auto& [p, t] : a.branches) {
              stays = stays && u[t];
              hits = hits || v[t];
            }
            bool good = stays && hits;
            if (minimize)
              add = add && good;
            else if (good) {
              add = true;
              break;
            }
          }
        }
        if (add) {
          v[s] = 1;
          grew = true;
        }
      }
    }
    if (v == u) return u;
    u = std::move(v);
  }
}

}  // namespace detail

struct ReachResult {
  double value = 0.0;           // at the initial state
  std::vector<double> values;   // per state
  std::vector<std::uint8_t> prob0, prob1;
  std::uint64_t iterations = 0;
};

inline ReachResult reach_probability(const ComposedMdp& m,
                                     const std::string& goal_label,
                                     bool minimize,
                                     const EngineOptions& opts = {}) {
  auto it = m.labels.find(goal_label);
  if (it == m.labels.end()) throw Error("unknown label '" + goal_label + "'");
  const auto& goal = it->second;
  const std::uint32_t n = static_cast<std::uint32_t>(m.state_count());

  ReachResult r;
  r.prob0 = detail::prob0_set(m, goal, minimize);
  r.prob1 = detail::prob1_set(m, goal, minimize);
  r.values.assign(n, 0.0);
  std::vector<std::uint32_t> undecided;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (r.prob1[s])
      r.values[s] = 1.0;
    else if (!r.prob0[s])
      undecided.push_back(s);
  }

  while (!undecided.empty()) {
    if (++r.iterations > opts.max_iterations)
      throw NonConvergence("value iteration exceeded " +
                           std::to_string(opts.max_iterations) +
                           " iterations");
    double delta = 0.0;
    for (std::uint32_t s : undecided) {
      double best = minimize ? 2.0 : -1.0;
      for (const auto& a : m.actions[s]) {
        double q = 0.0;
        for (const auto& [p, t] : a.branches) q += p * r.values[t];
        best = minimize ? std::min(best, q) : std::max(best, q);
      }
      delta = std::max(delta, std::abs(best - r.values[s]));
      r.values[s] = best;
    }
    if (delta < opts.epsilon) break;
  }

  r.value = r.values[m.initial];
  return r;
}

struct RewardResult {
  double value = 0.0;  // at the initial state; may be +infinity
  std::vector<double> values;
  std::uint64_t iterations = 0;
};

// Expected accumulated reward until the goal label. Minimal rewards are
// finite where some scheduler reaches the goal almost surely; maximal
// rewards are finite where every scheduler does.
inline RewardResult expected_reward(const ComposedMdp& m,
                                    const std::string& reward_name,
                                    const std::string& goal_label,
                                    bool minimize,
                                    const EngineOptions& opts = {}) {
  std::size_t ri = m.reward_names.size();
  for (std::size_t i = 0; i < m.reward_names.size(); ++i)
    if (m.reward_names[i] == reward_name) ri = i;
  if (ri == m.reward_names.size())
    throw Error("unknown reward structure '" + reward_name + "'");

  auto it = m.labels.find(goal_label);
  if (it == m.labels.end()) throw Error("unknown label '" + goal_label + "'");
  const auto& goal = it->second;
  const std::uint32_t n = static_cast<std::uint32_t>(m.state_count());
  const double inf = std::numeric_limits<double>::infinity();

  // Finite set: Prob1E for minimal rewards, Prob1A for maximal ones.
  std::vector<std::uint8_t> finite = detail::prob1_set(m, goal, !minimize);

  RewardResult r;
  r.values.assign(n, 0.0);
  std::vector<std::uint32_t> active;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (goal[s]) continue;
    if (!finite[s]) {
      r.values[s] = inf;
    } else {
      if (minimize) r.values[s] = inf;  // iterate downward from above
      active.push_back(s);
    }
  }

  while (!active.empty()) {
    if (++r.iterations > opts.max_iterations)
      throw NonConvergence("reward iteration exceeded " +
                           std::to_string(opts.max_iterations) +
                           " iterations");
    double delta = 0.0;
    for (std::uint32_t s : active) {
      double best = minimize ? inf : -1.0;
      for (const auto& a : m.actions[s]) {
        double q = a.rewards.empty() ? 0.0 : a.rewards[ri];
        for (const auto& [p, t] : a.branches) q += p * r.values[t];
        best = minimize ? std::min(best, q) : std::max(best, q);
      }
      double old = r.values[s];
      if (std::isinf(old) && std::isinf(best)) {
        // not yet propagated; force another sweep
        delta = inf;
      } else if (std::isinf(old) != std::isinf(best)) {
        delta = inf;
        r.values[s] = best;
      } else {
        delta = std::max(delta, std::abs(best - old));
        r.values[s] = best;
      }
    }
    if (delta < opts.epsilon) break;
  }

  r.value = r.values[m.initial];
  return r;
}

}  // namespace bpmn2mdp
