#pragma once

// Single include for the whole pipeline: parse BPMN XML, convert pool-based
// collaborations to event-based form, generate one MDP module per diagram,
// compose, analyze, and emit PRISM.

#include "convert.hpp"
#include "dialect.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "mdp.hpp"
#include "model.hpp"
#include "prism.hpp"
#include "prism_read.hpp"
#include "xml.hpp"

namespace bpmn2mdp {

struct CompiledModel {
  std::vector<MdpModule> modules;
  std::vector<RewardStructure> rewards;
  std::vector<LabelAtom> atoms;
  std::vector<EventLink> links;
};

// Modules for every diagram of an event-based model, plus rewards and
// milestone labels. The input must already be event-based (convert first).
inline CompiledModel compile(const ProcessModel& m,
                             std::uint64_t max_locations = 1'000'000) {
  CompiledModel c;
  c.links = m.event_links;
  for (const auto& d : m.diagrams)
    c.modules.push_back(generate_module(d, m.event_links, max_locations));
  c.rewards = attach_rewards(c.modules, m);
  c.atoms = milestone_labels(c.modules, m);
  return c;
}

inline ComposedMdp compose(const CompiledModel& c,
                           const ComposeOptions& opts = {}) {
  return compose_modules(c.modules, c.links, c.rewards, c.atoms, opts);
}

}  // namespace bpmn2mdp
