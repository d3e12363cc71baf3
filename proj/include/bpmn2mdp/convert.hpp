#pragma once

// Pool-based -> event-based conversion: structural deduplication of diagrams,
// replacement of cross-pool message flows by signal throw/catch splices, pool
// removal, and the single-diagram merge used as the pool-based sizing
// baseline.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dialect.hpp"
#include "model.hpp"
#include "xml.hpp"

namespace bpmn2mdp {

// Structural fingerprint: invariant under node/flow reordering and id
// renaming, sensitive to kinds, names, signals, durations, probabilities,
// role, and the flow relation over node names. Level, diagram id/name and
// flow labels are presentation data and stay out.
inline std::string canonical_form(const Diagram& d) {
  std::vector<std::string> node_lines, flow_lines;
  for (const auto& n : d.nodes) {
    std::string l = std::string("n|") + to_string(n.kind) + "|" + n.name + "|";
    if (n.signal) l += *n.signal;
    l += "|";
    if (n.duration_days) l += detail::format_double(*n.duration_days);
    l += "|";
    if (n.effort_wd) l += detail::format_double(*n.effort_wd);
    node_lines.push_back(std::move(l));
  }
  for (const auto& f : d.flows) {
    const FlowNode* s = d.node(f.source);
    const FlowNode* t = d.node(f.target);
    std::string l = "f|" + (s ? s->name : f.source) + "->" +
                    (t ? t->name : f.target) + "|";
    if (f.probability) l += detail::format_double(*f.probability);
    flow_lines.push_back(std::move(l));
  }
  std::sort(node_lines.begin(), node_lines.end());
  std::sort(flow_lines.begin(), flow_lines.end());

  std::string out = "role|" + d.role + "\n";
  for (const auto& l : node_lines) out += l + "\n";
  for (const auto& l : flow_lines) out += l + "\n";
  return out;
}

struct DedupReport {
  struct Removal {
    std::string removed;
    std::string kept;
    bool operator==(const Removal&) const = default;
  };
  std::vector<Removal> removals;
  std::vector<std::string> notes;

  bool empty() const { return removals.empty() && notes.empty(); }

  std::string to_text() const {
    std::string s;
    for (const auto& r : removals)
      s += "removed " + r.removed + " (duplicate of " + r.kept + ")\n";
    for (const auto& n : notes) s += n + "\n";
    if (s.empty()) s = "no duplicate processes\n";
    return s;
  }
};

// Groups diagrams by canonical form and keeps, per group, the diagram with
// the lowest level (ties: lexicographically smallest id). Message flows of
// removed diagrams are rewired to the same-named node of the survivor;
// flows that become endpoint-identical collapse into one.
inline std::pair<ProcessModel, DedupReport> deduplicate_processes(
    const ProcessModel& m) {
  ProcessModel out = m;
  DedupReport report;

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < out.diagrams.size(); ++i)
    groups[canonical_form(out.diagrams[i])].push_back(i);

  std::set<std::size_t> removed;
  std::map<std::string, std::string> node_remap;  // old node id -> survivor's
  std::vector<std::pair<std::string, std::string>> removals_by_idx;

  for (auto& [canon, idxs] : groups) {
    if (idxs.size() < 2) continue;
    std::size_t rep = idxs.front();
    for (std::size_t i : idxs) {
      const Diagram& a = out.diagrams[i];
      const Diagram& r = out.diagrams[rep];
      if (a.level < r.level || (a.level == r.level && a.id < r.id)) rep = i;
    }
    for (std::size_t i : idxs) {
      if (i == rep) continue;
      removed.insert(i);
      for (const auto& n : out.diagrams[i].nodes) {
        const FlowNode* twin = out.diagrams[rep].node_by_name(n.name);
        if (twin) node_remap[n.id] = twin->id;
      }
    }
  }

  // Report removals in original diagram order.
  for (std::size_t i = 0; i < out.diagrams.size(); ++i) {
    if (!removed.count(i)) continue;
    const std::string& canon_rep = canonical_form(out.diagrams[i]);
    std::size_t rep = 0;
    for (std::size_t j : groups[canon_rep])
      if (!removed.count(j)) rep = j;
    report.removals.push_back({out.diagrams[i].id, out.diagrams[rep].id});
  }

  for (auto& f : out.message_flows) {
    auto s = node_remap.find(f.source);
    auto t = node_remap.find(f.target);
    if (s != node_remap.end()) {
      report.notes.push_back("rewired message flow " + f.id + ": source " +
                             f.source + " -> " + s->second);
      f.source = s->second;
    }
    if (t != node_remap.end()) {
      report.notes.push_back("rewired message flow " + f.id + ": target " +
                             f.target + " -> " + t->second);
      f.target = t->second;
    }
  }

  // Collapse flows that now share both endpoints.
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<MessageFlow> kept_flows;
  for (auto& f : out.message_flows) {
    if (seen.emplace(f.source, f.target).second) {
      kept_flows.push_back(std::move(f));
    } else {
      report.notes.push_back("collapsed duplicate message flow " + f.id);
    }
  }
  out.message_flows = std::move(kept_flows);

  std::vector<Diagram> kept;
  for (std::size_t i = 0; i < out.diagrams.size(); ++i)
    if (!removed.count(i)) kept.push_back(std::move(out.diagrams[i]));
  out.diagrams = std::move(kept);

  for (auto& p : out.pools) {
    std::vector<std::string> ids;
    for (auto& did : p.diagram_ids)
      if (out.diagram(did)) ids.push_back(did);
    p.diagram_ids = std::move(ids);
  }
  std::erase_if(out.pools, [](const Pool& p) { return p.diagram_ids.empty(); });

  out.abstraction_levels = max_level(out);
  return {std::move(out), std::move(report)};
}

namespace detail {

// One communication: every message flow sharing the derived signal name.
struct MessageGroup {
  std::string signal;
  std::string source_diagram;
  std::string source_node;
  std::vector<NodeRef> targets;  // distinct, ordered by diagram id
};

inline std::vector<MessageGroup> group_message_flows(const ProcessModel& m) {
  std::map<std::string, MessageGroup> by_signal;
  for (const auto& f : m.message_flows) {
    const Diagram* a = m.diagram_of_node(f.source);
    const Diagram* b = m.diagram_of_node(f.target);
    const std::string sig = "msg_" + a->id + "_" + a->node(f.source)->name +
                            "_" + b->node(f.target)->name;
    auto [it, fresh] = by_signal.emplace(sig, MessageGroup{});
    MessageGroup& g = it->second;
    if (fresh) {
      g.signal = sig;
      g.source_diagram = a->id;
      g.source_node = f.source;
    } else if (g.source_node != f.source) {
      throw SpliceError("signal name collision between message flows from '" +
                        g.source_node + "' and '" + f.source + "'");
    }
    NodeRef ref{b->id, f.target};
    if (std::find(g.targets.begin(), g.targets.end(), ref) == g.targets.end())
      g.targets.push_back(ref);
  }
  std::vector<MessageGroup> groups;
  for (auto& [sig, g] : by_signal) {
    std::sort(g.targets.begin(), g.targets.end());
    groups.push_back(std::move(g));
  }
  // map order == signal order == (source diagram, source name, target name):
  // splices from one source land in target-name order.
  return groups;
}

struct IdAllocator {
  std::set<std::string> used;

  explicit IdAllocator(const ProcessModel& m) {
    for (const auto& d : m.diagrams) {
      used.insert(d.id);
      for (const auto& n : d.nodes) used.insert(n.id);
      for (const auto& f : d.flows) used.insert(f.id);
    }
    for (const auto& p : m.pools) used.insert(p.id);
    for (const auto& f : m.message_flows) used.insert(f.id);
  }

  std::string fresh(const std::string& base) {
    std::string id = base;
    for (int k = 2; !used.insert(id).second; ++k)
      id = base + "_" + std::to_string(k);
    return id;
  }
};

inline std::string fresh_node_name(const Diagram& d, const std::string& base) {
  std::string name = base;
  for (int k = 2; d.node_by_name(name) != nullptr; ++k)
    name = base + "_" + std::to_string(k);
  return name;
}

inline void check_spliceable_source(const FlowNode& n) {
  if (n.kind == NodeKind::ExclusiveGateway || n.kind == NodeKind::ParallelGateway)
    throw SpliceError("message flow source '" + n.id +
                      "' is a gateway; splicing would break its out-flows");
  if (n.kind == NodeKind::StartEvent) return;  // has out-flows; splice works
}

inline void check_spliceable_target(const FlowNode& n) {
  if (n.kind == NodeKind::StartEvent)
    throw SpliceError("message flow target '" + n.id +
                      "' is a start event with no incoming flow to splice");
  if (n.kind == NodeKind::ExclusiveGateway || n.kind == NodeKind::ParallelGateway)
    throw SpliceError("message flow target '" + n.id +
                      "' is a gateway; splicing would break its in-flows");
}

}  // namespace detail

// Replaces each message dependency by an IntermediateThrowEvent spliced after
// the source and an IntermediateCatchEvent spliced before each target, tied
// by a fresh signal ("msg_" + source diagram + "_" + source name + "_" +
// target name). An EndEvent source carries the signal itself.
inline ProcessModel replace_message_flows(const ProcessModel& m) {
  ProcessModel out = m;
  if (out.message_flows.empty()) {
    out.event_links = derive_event_links(out);
    return out;
  }

  auto groups = detail::group_message_flows(out);
  detail::IdAllocator ids(out);
  std::map<std::string, std::string> tail;  // source node id -> chain tail

  for (const auto& g : groups) {
    Diagram* A = out.diagram(g.source_diagram);
    const std::string& src = g.source_node;
    // note: node pointers go stale on nodes.push_back, so only the id (a
    // stable copy) survives past any insertion below
    FlowNode* a = A->node(src);
    detail::check_spliceable_source(*a);

    if (a->kind == NodeKind::EndEvent) {
      if (a->signal)
        throw SpliceError("end event '" + src +
                          "' cannot source a second message signal");
      a->signal = g.signal;
    } else {
      auto it = tail.find(src);
      const std::string from = it == tail.end() ? src : it->second;
      std::vector<SequenceFlow*> outs;
      for (auto& f : A->flows)
        if (f.source == from) outs.push_back(&f);
      if (outs.empty())
        throw SpliceError("message flow source '" + src +
                          "' has no outgoing flow to splice");

      FlowNode t;
      t.id = ids.fresh("throw_" + g.signal);
      t.name = detail::fresh_node_name(*A, g.signal);
      t.kind = NodeKind::IntermediateThrowEvent;
      t.signal = g.signal;
      if (outs.size() > 1) {
        // A multi-flow continuation is deferred behind an exclusive gateway
        // so the choice happens after the synchronization, one step at a
        // time; the sizing baseline routes its rendezvous the same way.
        FlowNode route;
        route.id = ids.fresh("route_" + g.signal);
        route.name = detail::fresh_node_name(*A, g.signal + "_route");
        route.kind = NodeKind::ExclusiveGateway;
        for (auto* f : outs) f->source = route.id;
        A->flows.push_back({ids.fresh("flow_" + g.signal + "_cnt"), t.id,
                            route.id, std::nullopt, std::nullopt});
        A->nodes.push_back(std::move(route));
      } else {
        outs.front()->source = t.id;
      }
      A->flows.push_back({ids.fresh("flow_" + g.signal + "_src"), from, t.id,
                          std::nullopt, std::nullopt});
      tail[src] = t.id;
      A->nodes.push_back(std::move(t));
    }

    for (const auto& ref : g.targets) {
      Diagram* B = out.diagram(ref.diagram_id);
      const std::string& tgt = ref.node_id;
      detail::check_spliceable_target(*B->node(tgt));
      std::vector<SequenceFlow*> ins;
      for (auto& f : B->flows)
        if (f.target == tgt) ins.push_back(&f);
      if (ins.empty())
        throw SpliceError("message flow target '" + tgt +
                          "' has no incoming flow to splice");

      FlowNode c;
      c.id = ids.fresh("catch_" + g.signal);
      c.name = detail::fresh_node_name(*B, g.signal);
      c.kind = NodeKind::IntermediateCatchEvent;
      c.signal = g.signal;
      for (auto* f : ins) f->target = c.id;
      B->flows.push_back({ids.fresh("flow_" + g.signal + "_tgt"), c.id, tgt,
                          std::nullopt, std::nullopt});
      B->nodes.push_back(std::move(c));
    }
  }

  out.message_flows.clear();
  out.event_links = derive_event_links(out);
  return out;
}

inline ProcessModel remove_pools(const ProcessModel& m) {
  ProcessModel out = m;
  out.pools.clear();
  return out;
}

// Full pipeline. Event-based input is returned untouched with an empty
// report; pool-based input is deduplicated, spliced, and freed of pools.
inline std::pair<ProcessModel, DedupReport> convert_to_event_based(
    const ProcessModel& m) {
  require_valid(m);
  if (classify_dialect(m) == Dialect::EventBased) return {m, DedupReport{}};

  auto [deduped, report] = deduplicate_processes(m);
  ProcessModel spliced = replace_message_flows(deduped);
  ProcessModel out = remove_pools(spliced);
  require_valid(out);
  return {std::move(out), std::move(report)};
}

// Single-diagram merge, the pool-based sizing baseline: a fresh global start
// fans out through one parallel gateway to every diagram's (demoted) start,
// and each message dependency becomes a throw/catch pair feeding a parallel
// rendezvous gateway. The rendezvous joins the thrower's token with one
// readiness token per target and releases all continuations at once, so both
// sides block exactly as the synchronized signal semantics does; targets with
// several incoming flows get an exclusive merge first, keeping the join
// count at one token per participant.
inline Diagram merge_diagrams(const ProcessModel& m) {
  require_valid(m);

  ProcessModel work = m;  // ids get prefixed; grouping still sees originals
  Diagram merged;
  merged.id = "merged";
  merged.name = "merged";
  merged.level = 1;

  auto pref = [](const std::string& did, const std::string& s) {
    return did + "." + s;
  };

  std::vector<std::string> entry_nodes;
  for (const auto& d : m.diagrams) {
    for (const auto& n : d.nodes) {
      FlowNode c = n;
      c.id = pref(d.id, n.id);
      c.name = pref(d.id, n.name);
      if (c.kind == NodeKind::StartEvent) {
        c.kind = NodeKind::Task;  // demoted; the merged diagram has one start
        entry_nodes.push_back(c.id);
      }
      merged.nodes.push_back(std::move(c));
    }
    for (const auto& f : d.flows) {
      SequenceFlow c = f;
      c.id = pref(d.id, f.id);
      c.source = pref(d.id, f.source);
      c.target = pref(d.id, f.target);
      merged.flows.push_back(std::move(c));
    }
  }

  FlowNode gs{"merged_start", "merged_start", NodeKind::StartEvent, {}, {}, {}};
  FlowNode fork{"merged_fork", "merged_fork", NodeKind::ParallelGateway, {}, {}, {}};
  merged.nodes.insert(merged.nodes.begin(), {gs, fork});
  merged.flows.push_back({"merged_f0", gs.id, fork.id, std::nullopt, std::nullopt});
  int fi = 0;
  for (const auto& e : entry_nodes)
    merged.flows.push_back({"merged_f" + std::to_string(++fi), fork.id, e,
                            std::nullopt, std::nullopt});

  auto groups = detail::group_message_flows(m);

  ProcessModel holder;  // id allocation scope for the merged diagram
  holder.diagrams.push_back(std::move(merged));
  detail::IdAllocator ids(holder);
  Diagram& md = holder.diagrams.front();

  // Per source node: where its continuation currently emanates from, and
  // which flow ids form that continuation.
  struct Cont {
    std::string node;
    std::vector<std::string> flow_ids;
  };
  std::map<std::string, Cont> conts;

  for (const auto& g : groups) {
    const std::string src = pref(g.source_diagram, g.source_node);
    // node pointers go stale on nodes.push_back, so keep only the kind and
    // refer to nodes by id from here on
    const NodeKind src_kind = md.node(src)->kind;
    detail::check_spliceable_source(*md.node(src));

    FlowNode t;
    t.id = ids.fresh("throw_" + g.signal);
    t.name = detail::fresh_node_name(md, g.signal);
    t.kind = NodeKind::IntermediateThrowEvent;
    t.signal = g.signal;
    FlowNode sync;
    sync.id = ids.fresh("sync_" + g.signal);
    sync.name = detail::fresh_node_name(md, g.signal + "_sync");
    sync.kind = NodeKind::ParallelGateway;

    if (src_kind == NodeKind::EndEvent) {
      // pred(s) -> T -> SYNC -> end: the end consumes its token only once
      // every target is ready, like a signal-carrying end event.
      std::vector<SequenceFlow*> ins;
      for (auto& f : md.flows)
        if (f.target == src) ins.push_back(&f);
      if (ins.empty())
        throw SpliceError("message flow source '" + src +
                          "' has no incoming flow to splice");
      for (auto* f : ins) f->target = t.id;
      md.flows.push_back({ids.fresh("flow_" + g.signal + "_src"), t.id,
                          sync.id, std::nullopt, std::nullopt});
      md.flows.push_back({ids.fresh("flow_" + g.signal + "_res"), sync.id,
                          src, std::nullopt, std::nullopt});
    } else {
      Cont cont;
      auto it = conts.find(src);
      if (it != conts.end()) {
        cont = it->second;
      } else {
        cont.node = src;
        for (const auto& f : md.flows)
          if (f.source == src) cont.flow_ids.push_back(f.id);
      }
      if (cont.flow_ids.empty())
        throw SpliceError("message flow source '" + src +
                          "' has no outgoing flow to splice");
      // continuation resumes from SYNC; control runs tail -> T -> SYNC. A
      // multi-flow continuation goes through an exclusive gateway so the
      // rendezvous releases exactly one path, mirroring the splice pipeline.
      std::vector<std::string> next_cont = cont.flow_ids;
      if (cont.flow_ids.size() > 1) {
        FlowNode route;
        route.id = ids.fresh("route_" + g.signal);
        route.name = detail::fresh_node_name(md, g.signal + "_route");
        route.kind = NodeKind::ExclusiveGateway;
        for (auto& f : md.flows)
          if (std::find(cont.flow_ids.begin(), cont.flow_ids.end(), f.id) !=
              cont.flow_ids.end())
            f.source = route.id;
        SequenceFlow cf{ids.fresh("flow_" + g.signal + "_cnt"), sync.id,
                        route.id, std::nullopt, std::nullopt};
        next_cont = {cf.id};
        md.flows.push_back(std::move(cf));
        md.nodes.push_back(std::move(route));
      } else {
        for (auto& f : md.flows)
          if (f.id == cont.flow_ids.front()) f.source = sync.id;
      }
      md.flows.push_back({ids.fresh("flow_" + g.signal + "_src"), cont.node,
                          t.id, std::nullopt, std::nullopt});
      md.flows.push_back({ids.fresh("flow_" + g.signal + "_syn"), t.id,
                          sync.id, std::nullopt, std::nullopt});
      conts[src] = {sync.id, next_cont};
    }

    md.nodes.push_back(t);

    for (const auto& ref : g.targets) {
      const std::string tgt = pref(ref.diagram_id, ref.node_id);
      detail::check_spliceable_target(*md.node(tgt));
      std::vector<SequenceFlow*> ins;
      for (auto& f : md.flows)
        if (f.target == tgt) ins.push_back(&f);
      if (ins.empty())
        throw SpliceError("message flow target '" + tgt +
                          "' has no incoming flow to splice");

      FlowNode c;
      c.id = ids.fresh("catch_" + g.signal);
      c.name = detail::fresh_node_name(md, g.signal + "_recv");
      c.kind = NodeKind::IntermediateCatchEvent;
      c.signal = g.signal;

      if (ins.size() > 1) {
        // exclusive merge keeps the rendezvous at one token per participant
        FlowNode x;
        x.id = ids.fresh("xor_" + g.signal);
        x.name = detail::fresh_node_name(md, g.signal + "_merge");
        x.kind = NodeKind::ExclusiveGateway;
        for (auto* f : ins) f->target = x.id;
        md.flows.push_back({ids.fresh("flow_" + g.signal + "_mrg"), x.id,
                            c.id, std::nullopt, std::nullopt});
        md.nodes.push_back(std::move(x));
      } else {
        ins.front()->target = c.id;
      }
      md.flows.push_back({ids.fresh("flow_" + g.signal + "_rdy"), c.id,
                          sync.id, std::nullopt, std::nullopt});
      md.flows.push_back({ids.fresh("flow_" + g.signal + "_tgt"), sync.id,
                          tgt, std::nullopt, std::nullopt});
      md.nodes.push_back(std::move(c));
    }

    md.nodes.push_back(std::move(sync));
  }

  return std::move(holder.diagrams.front());
}

// Wraps the merged diagram as a standalone event-based model (links between
// its throw/catch pairs stay internal and are derived from the signals).
inline ProcessModel merged_baseline(const ProcessModel& m) {
  ProcessModel out;
  out.diagrams.push_back(merge_diagrams(m));
  out.timeline = m.timeline;
  out.abstraction_levels = 1;
  out.event_links = derive_event_links(out);
  return out;
}

}  // namespace bpmn2mdp
