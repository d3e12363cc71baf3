#pragma once

// Process model core: diagrams of flow nodes joined by sequence flows, with
// pool/message-flow (pool-based) or signal-link (event-based) communication.
// All types are plain values; validate() reports broken invariants as data.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "errors.hpp"

namespace bpmn2mdp {

namespace detail {

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace detail

enum class NodeKind {
  StartEvent,
  EndEvent,
  Task,
  IntermediateThrowEvent,
  IntermediateCatchEvent,
  ExclusiveGateway,
  ParallelGateway,
};

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::StartEvent: return "startEvent";
    case NodeKind::EndEvent: return "endEvent";
    case NodeKind::Task: return "task";
    case NodeKind::IntermediateThrowEvent: return "intermediateThrowEvent";
    case NodeKind::IntermediateCatchEvent: return "intermediateCatchEvent";
    case NodeKind::ExclusiveGateway: return "exclusiveGateway";
    case NodeKind::ParallelGateway: return "parallelGateway";
  }
  return "?";
}

struct FlowNode {
  std::string id;
  std::string name;
  NodeKind kind = NodeKind::Task;
  // Required on throw/catch events, permitted on an EndEvent that broadcasts
  // its completion, absent everywhere else.
  std::optional<std::string> signal;
  std::optional<double> duration_days;  // Task only
  std::optional<double> effort_wd;      // Task only
  bool operator==(const FlowNode&) const = default;
};

struct SequenceFlow {
  std::string id;
  std::string source;  // node id
  std::string target;  // node id
  // Only on flows leaving an ExclusiveGateway; per gateway all or none.
  std::optional<double> probability;
  std::optional<std::string> label;
  bool operator==(const SequenceFlow&) const = default;
};

struct Diagram {
  std::string id;
  std::string name;
  int level = 1;
  std::string role;
  std::vector<FlowNode> nodes;
  std::vector<SequenceFlow> flows;

  bool operator==(const Diagram&) const = default;

  const FlowNode* node(const std::string& node_id) const {
    for (const auto& n : nodes)
      if (n.id == node_id) return &n;
    return nullptr;
  }
  FlowNode* node(const std::string& node_id) {
    for (auto& n : nodes)
      if (n.id == node_id) return &n;
    return nullptr;
  }
  const FlowNode* node_by_name(const std::string& nm) const {
    for (const auto& n : nodes)
      if (n.name == nm) return &n;
    return nullptr;
  }
  std::vector<const SequenceFlow*> out_flows(const std::string& node_id) const {
    std::vector<const SequenceFlow*> r;
    for (const auto& f : flows)
      if (f.source == node_id) r.push_back(&f);
    return r;
  }
  std::vector<const SequenceFlow*> in_flows(const std::string& node_id) const {
    std::vector<const SequenceFlow*> r;
    for (const auto& f : flows)
      if (f.target == node_id) r.push_back(&f);
    return r;
  }
};

struct MessageFlow {
  std::string id;
  std::string source;  // node id, in some diagram A
  std::string target;  // node id, in some diagram B != A
  std::string name;
  bool operator==(const MessageFlow&) const = default;
};

struct Pool {
  std::string id;
  std::string name;
  std::vector<std::string> diagram_ids;
  bool operator==(const Pool&) const = default;
};

struct NodeRef {
  std::string diagram_id;
  std::string node_id;
  bool operator==(const NodeRef&) const = default;
  auto operator<=>(const NodeRef&) const = default;
};

// Event-based communication: one thrower per signal, one or more catchers.
struct EventLink {
  std::string signal;
  NodeRef thrower;
  std::vector<NodeRef> catchers;
  bool operator==(const EventLink&) const = default;
};

struct Milestone {
  std::string name;
  long day = 0;
  bool operator==(const Milestone&) const = default;
};

struct Timeline {
  std::vector<Milestone> milestones;  // strictly increasing day
  bool operator==(const Timeline&) const = default;
};

struct ProcessModel {
  std::vector<Diagram> diagrams;
  std::vector<Pool> pools;
  std::vector<MessageFlow> message_flows;
  std::vector<EventLink> event_links;
  std::optional<Timeline> timeline;
  int abstraction_levels = 1;  // max diagram level

  bool operator==(const ProcessModel&) const = default;

  const Diagram* diagram(const std::string& id) const {
    for (const auto& d : diagrams)
      if (d.id == id) return &d;
    return nullptr;
  }
  Diagram* diagram(const std::string& id) {
    for (auto& d : diagrams)
      if (d.id == id) return &d;
    return nullptr;
  }
  // Diagram owning a node id, if any. Node ids are document-unique.
  const Diagram* diagram_of_node(const std::string& node_id) const {
    for (const auto& d : diagrams)
      if (d.node(node_id)) return &d;
    return nullptr;
  }
};

inline int max_level(const ProcessModel& m) {
  int lv = 1;
  for (const auto& d : m.diagrams) lv = std::max(lv, d.level);
  return lv;
}

namespace detail {

inline void validate_diagram(const Diagram& d, std::vector<Violation>& out) {
  auto add = [&](const std::string& el, const std::string& rule) {
    out.push_back({el, rule});
  };

  if (d.level < 1) add(d.id, "diagram level must be >= 1");

  int starts = 0, ends = 0;
  std::set<std::string> names, ids;
  for (const auto& n : d.nodes) {
    if (n.kind == NodeKind::StartEvent) ++starts;
    if (n.kind == NodeKind::EndEvent) ++ends;
    if (!names.insert(n.name).second)
      add(n.id, "duplicate node name '" + n.name + "' in diagram " + d.id);
    if (!ids.insert(n.id).second) add(n.id, "duplicate node id");

    bool event = n.kind == NodeKind::IntermediateThrowEvent ||
                 n.kind == NodeKind::IntermediateCatchEvent;
    if (event && !n.signal)
      add(n.id, "throw/catch event requires a signal");
    if (n.signal && !event && n.kind != NodeKind::EndEvent)
      add(n.id, "signal on a node that is not a throw/catch/end event");
    if (n.signal && n.signal->empty()) add(n.id, "empty signal name");
    if ((n.duration_days || n.effort_wd) && n.kind != NodeKind::Task)
      add(n.id, "duration/effort on a non-task node");
    if (n.duration_days && *n.duration_days < 0)
      add(n.id, "negative duration_days");
    if (n.effort_wd && *n.effort_wd < 0) add(n.id, "negative effort_wd");
  }
  if (starts != 1)
    add(d.id, "diagram must contain exactly one start event (has " +
                  std::to_string(starts) + ")");
  if (ends < 1) add(d.id, "diagram must contain at least one end event");

  std::set<std::string> flow_ids;
  for (const auto& f : d.flows) {
    if (!flow_ids.insert(f.id).second) add(f.id, "duplicate flow id");
    const FlowNode* src = d.node(f.source);
    const FlowNode* tgt = d.node(f.target);
    if (!src) add(f.id, "flow source '" + f.source + "' not in diagram");
    if (!tgt) add(f.id, "flow target '" + f.target + "' not in diagram");
    if (f.probability) {
      if (!src || src->kind != NodeKind::ExclusiveGateway)
        add(f.id, "probability on a flow not leaving an exclusive gateway");
      else if (*f.probability <= 0.0 || *f.probability > 1.0)
        add(f.id, "probability outside (0,1]");
    }
  }

  // Per exclusive gateway: all out-flows annotated or none; sums to 1.
  for (const auto& n : d.nodes) {
    if (n.kind != NodeKind::ExclusiveGateway) continue;
    auto outs = d.out_flows(n.id);
    int annotated = 0;
    double sum = 0.0;
    for (const auto* f : outs) {
      if (f->probability) {
        ++annotated;
        sum += *f->probability;
      }
    }
    if (annotated != 0 && annotated != static_cast<int>(outs.size()))
      add(n.id, "gateway out-flows must be all or none probability-annotated");
    else if (annotated > 0 && std::abs(sum - 1.0) > 1e-9)
      add(n.id, "gateway out-flow probabilities do not sum to 1");
  }
}

}  // namespace detail

// Collects every broken invariant; an empty result means the model is sound.
inline std::vector<Violation> validate(const ProcessModel& m) {
  std::vector<Violation> out;
  auto add = [&](const std::string& el, const std::string& rule) {
    out.push_back({el, rule});
  };

  std::set<std::string> diagram_ids;
  std::set<std::string> node_ids;
  for (const auto& d : m.diagrams) {
    if (!diagram_ids.insert(d.id).second) add(d.id, "duplicate diagram id");
    detail::validate_diagram(d, out);
    for (const auto& n : d.nodes)
      if (!node_ids.insert(n.id).second)
        add(n.id, "node id reused across diagrams");
  }

  if (m.abstraction_levels != max_level(m))
    add("model", "abstraction_levels must equal the maximum diagram level");

  if (!m.message_flows.empty() && !m.event_links.empty())
    add("model", "message flows and event links are mutually exclusive");

  // Pools: membership is a partition; referenced diagrams exist.
  std::map<std::string, std::string> pool_of;
  std::set<std::string> pool_ids;
  for (const auto& p : m.pools) {
    if (!pool_ids.insert(p.id).second) add(p.id, "duplicate pool id");
    for (const auto& did : p.diagram_ids) {
      if (!m.diagram(did)) add(p.id, "pool references missing diagram " + did);
      auto [it, fresh] = pool_of.emplace(did, p.id);
      if (!fresh) add(did, "diagram belongs to more than one pool");
    }
  }

  for (const auto& f : m.message_flows) {
    const Diagram* a = m.diagram_of_node(f.source);
    const Diagram* b = m.diagram_of_node(f.target);
    if (!a) add(f.id, "message flow source node not found");
    if (!b) add(f.id, "message flow target node not found");
    if (a && b) {
      if (a->id == b->id) {
        add(f.id, "message flow must connect different diagrams");
      } else {
        auto pa = pool_of.find(a->id);
        auto pb = pool_of.find(b->id);
        if (pa == pool_of.end() || pb == pool_of.end() ||
            pa->second == pb->second)
          add(f.id, "message flow must cross two distinct pools");
      }
    }
  }

  std::set<std::string> signals;
  for (const auto& l : m.event_links) {
    const std::string el = "link:" + l.signal;
    if (l.signal.empty()) add(el, "event link with empty signal");
    if (!signals.insert(l.signal).second)
      add(el, "more than one thrower/link for signal '" + l.signal + "'");
    if (l.catchers.empty()) add(el, "event link without catchers");

    const Diagram* td = m.diagram(l.thrower.diagram_id);
    const FlowNode* tn = td ? td->node(l.thrower.node_id) : nullptr;
    if (!tn) {
      add(el, "thrower node not found");
    } else {
      bool throwish = tn->kind == NodeKind::IntermediateThrowEvent ||
                      tn->kind == NodeKind::EndEvent;
      if (!throwish) add(el, "thrower must be a throw event or an end event");
      if (!tn->signal || *tn->signal != l.signal)
        add(el, "thrower signal does not match link signal");
    }
    for (const auto& c : l.catchers) {
      const Diagram* cd = m.diagram(c.diagram_id);
      const FlowNode* cn = cd ? cd->node(c.node_id) : nullptr;
      if (!cn) {
        add(el, "catcher node not found");
      } else {
        if (cn->kind != NodeKind::IntermediateCatchEvent)
          add(el, "catcher must be a catch event");
        if (!cn->signal || *cn->signal != l.signal)
          add(el, "catcher signal does not match link signal");
      }
    }
  }

  if (m.timeline) {
    long prev = -1;
    for (const auto& ms : m.timeline->milestones) {
      if (ms.name.empty()) add("timeline", "milestone with empty name");
      if (ms.day <= prev)
        add("timeline", "milestone days must be strictly increasing");
      prev = ms.day;
    }
  }

  return out;
}

inline void require_valid(const ProcessModel& m) {
  auto v = validate(m);
  if (!v.empty()) throw ValidationError(std::move(v));
}

}  // namespace bpmn2mdp
