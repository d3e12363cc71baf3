#pragma once

// BPMN 2.0 interchange subset. Reading goes through boost::property_tree;
// writing is done by hand so that output is byte-deterministic.
//
// Accepted vocabulary: definitions, collaboration, participant, process,
// laneSet/lane, startEvent, endEvent, task, intermediateThrowEvent,
// intermediateCatchEvent, exclusiveGateway, parallelGateway, sequenceFlow,
// messageFlow, signal, plus the extension attributes probability,
// durationDays, effortWd, level, role and the timeline/milestone elements
// (any namespace prefix is accepted; the canonical prefix is "ext").
// Unknown elements produce a warning; diagram-interchange elements are
// ignored outright. Missing node names default to the node id.

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <charconv>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "model.hpp"

namespace bpmn2mdp {

namespace detail {

inline std::string local_name(const std::string& qname) {
  auto pos = qname.rfind(':');
  return pos == std::string::npos ? qname : qname.substr(pos + 1);
}

inline bool di_element(const std::string& qname) {
  auto pos = qname.find(':');
  if (pos != std::string::npos) {
    std::string prefix = qname.substr(0, pos);
    if (prefix == "bpmndi" || prefix == "di" || prefix == "dc" ||
        prefix == "omgdi" || prefix == "omgdc")
      return true;
  }
  std::string l = local_name(qname);
  return l == "BPMNDiagram" || l == "BPMNPlane" || l == "BPMNShape" ||
         l == "BPMNEdge" || l == "BPMNLabel" || l == "Bounds" ||
         l == "waypoint";
}

using ptree = boost::property_tree::ptree;

inline std::optional<std::string> attr(const ptree& el, const std::string& name) {
  auto attrs = el.get_child_optional("<xmlattr>");
  if (!attrs) return std::nullopt;
  for (const auto& [k, v] : *attrs)
    if (local_name(k) == name) return v.data();
  return std::nullopt;
}

inline std::string required_attr(const ptree& el, const std::string& name,
                                 const std::string& context) {
  auto v = attr(el, name);
  if (!v || v->empty())
    throw ParseError("missing mandatory attribute '" + name + "' on " + context);
  return *v;
}

inline double parse_double(const std::string& s, const std::string& context) {
  const char* b = s.c_str();
  char* e = nullptr;
  double v = std::strtod(b, &e);
  if (e == b || *e != '\0')
    throw ParseError("bad numeric value '" + s + "' on " + context);
  return v;
}

inline long parse_long(const std::string& s, const std::string& context) {
  const char* b = s.c_str();
  char* e = nullptr;
  long v = std::strtol(b, &e, 10);
  if (e == b || *e != '\0')
    throw ParseError("bad integer value '" + s + "' on " + context);
  return v;
}

struct SignalFixup {
  std::size_t diagram;
  std::size_t node;
  std::string signal_ref;
};

inline std::optional<NodeKind> node_kind(const std::string& local) {
  if (local == "startEvent") return NodeKind::StartEvent;
  if (local == "endEvent") return NodeKind::EndEvent;
  if (local == "task") return NodeKind::Task;
  if (local == "intermediateThrowEvent") return NodeKind::IntermediateThrowEvent;
  if (local == "intermediateCatchEvent") return NodeKind::IntermediateCatchEvent;
  if (local == "exclusiveGateway") return NodeKind::ExclusiveGateway;
  if (local == "parallelGateway") return NodeKind::ParallelGateway;
  return std::nullopt;
}

}  // namespace detail

// Builds event links from matching throw/catch signal names across diagrams.
// Signals lacking a thrower or any catcher stay unlinked (module generation
// reports them); a second thrower for one signal is a validation failure.
inline std::vector<EventLink> derive_event_links(const ProcessModel& m) {
  std::map<std::string, std::vector<NodeRef>> throwers, catchers;
  for (const auto& d : m.diagrams) {
    for (const auto& n : d.nodes) {
      if (!n.signal) continue;
      if (n.kind == NodeKind::IntermediateThrowEvent ||
          n.kind == NodeKind::EndEvent)
        throwers[*n.signal].push_back({d.id, n.id});
      else if (n.kind == NodeKind::IntermediateCatchEvent)
        catchers[*n.signal].push_back({d.id, n.id});
    }
  }
  std::vector<Violation> bad;
  for (const auto& [sig, list] : throwers)
    if (list.size() > 1)
      bad.push_back({"signal:" + sig, "more than one thrower for signal '" + sig + "'"});
  if (!bad.empty()) throw ValidationError(std::move(bad));

  std::vector<EventLink> links;
  for (const auto& [sig, list] : throwers) {
    auto it = catchers.find(sig);
    if (it == catchers.end()) continue;
    links.push_back({sig, list.front(), it->second});
  }
  return links;
}

inline ProcessModel parse(const std::string& xml_text,
                          std::vector<std::string>* warnings = nullptr) {
  namespace xp = boost::property_tree::xml_parser;
  detail::ptree doc;
  try {
    std::istringstream in(xml_text);
    xp::read_xml(in, doc, xp::trim_whitespace | xp::no_comments);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw ParseError(std::string("malformed XML: ") + e.what());
  }

  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };

  const detail::ptree* defs = nullptr;
  for (const auto& [name, sub] : doc)
    if (detail::local_name(name) == "definitions") defs = &sub;
  if (!defs) throw ParseError("document has no definitions element");

  ProcessModel m;
  std::set<std::string> seen_ids;
  auto claim_id = [&](const std::string& id, const std::string& what) {
    if (!seen_ids.insert(id).second)
      throw ParseError("duplicate id '" + id + "' on " + what);
  };

  std::map<std::string, std::string> signal_names;  // signal element id -> name
  std::vector<detail::SignalFixup> fixups;

  for (const auto& [qname, el] : *defs) {
    if (qname == "<xmlattr>") continue;
    if (detail::di_element(qname)) continue;
    std::string local = detail::local_name(qname);

    if (local == "collaboration") {
      for (const auto& [cq, cel] : el) {
        if (cq == "<xmlattr>") continue;
        std::string cl = detail::local_name(cq);
        if (cl == "participant") {
          Pool p;
          p.id = detail::required_attr(cel, "id", "participant");
          claim_id(p.id, "participant");
          p.name = detail::attr(cel, "name").value_or(p.id);
          if (auto multi = detail::attr(cel, "processRefs")) {
            std::istringstream ss(*multi);
            std::string tok;
            while (ss >> tok) p.diagram_ids.push_back(tok);
          } else if (auto one = detail::attr(cel, "processRef")) {
            p.diagram_ids.push_back(*one);
          }
          m.pools.push_back(std::move(p));
        } else if (cl == "messageFlow") {
          MessageFlow f;
          f.id = detail::required_attr(cel, "id", "messageFlow");
          claim_id(f.id, "messageFlow");
          f.source = detail::required_attr(cel, "sourceRef", "messageFlow " + f.id);
          f.target = detail::required_attr(cel, "targetRef", "messageFlow " + f.id);
          f.name = detail::attr(cel, "name").value_or("");
          m.message_flows.push_back(std::move(f));
        } else {
          warn("ignored unknown element '" + cl + "' in collaboration");
        }
      }
    } else if (local == "process") {
      Diagram d;
      d.id = detail::required_attr(el, "id", "process");
      claim_id(d.id, "process");
      d.name = detail::attr(el, "name").value_or(d.id);
      if (auto lv = detail::attr(el, "level"))
        d.level = static_cast<int>(detail::parse_long(*lv, "process " + d.id));
      if (auto role = detail::attr(el, "role")) d.role = *role;

      for (const auto& [nq, nel] : el) {
        if (nq == "<xmlattr>") continue;
        if (detail::di_element(nq)) continue;
        std::string nl = detail::local_name(nq);

        if (auto kind = detail::node_kind(nl)) {
          FlowNode n;
          n.kind = *kind;
          n.id = detail::required_attr(nel, "id", nl);
          claim_id(n.id, nl + " " + n.id);
          n.name = detail::attr(nel, "name").value_or(n.id);
          if (auto v = detail::attr(nel, "durationDays"))
            n.duration_days = detail::parse_double(*v, nl + " " + n.id);
          if (auto v = detail::attr(nel, "effortWd"))
            n.effort_wd = detail::parse_double(*v, nl + " " + n.id);
          for (const auto& [eq, eel] : nel) {
            if (eq == "<xmlattr>") continue;
            std::string elcl = detail::local_name(eq);
            if (elcl == "signalEventDefinition") {
              fixups.push_back(
                  {m.diagrams.size(), d.nodes.size(),
                   detail::required_attr(eel, "signalRef",
                                         "signalEventDefinition of " + n.id)});
            } else if (elcl == "incoming" || elcl == "outgoing" ||
                       elcl == "documentation") {
              // structurally redundant here
            } else {
              warn("ignored unknown element '" + elcl + "' in node " + n.id);
            }
          }
          d.nodes.push_back(std::move(n));
        } else if (nl == "sequenceFlow") {
          SequenceFlow f;
          f.id = detail::required_attr(nel, "id", "sequenceFlow");
          claim_id(f.id, "sequenceFlow");
          f.source = detail::required_attr(nel, "sourceRef", "sequenceFlow " + f.id);
          f.target = detail::required_attr(nel, "targetRef", "sequenceFlow " + f.id);
          if (auto nm = detail::attr(nel, "name")) f.label = *nm;
          if (auto p = detail::attr(nel, "probability"))
            f.probability = detail::parse_double(*p, "sequenceFlow " + f.id);
          d.flows.push_back(std::move(f));
        } else if (nl == "laneSet") {
          for (const auto& [lq, lel] : nel) {
            if (lq == "<xmlattr>") continue;
            if (detail::local_name(lq) == "lane" && d.role.empty())
              if (auto nm = detail::attr(lel, "name")) d.role = *nm;
          }
        } else if (nl == "documentation") {
          // ignore
        } else {
          warn("ignored unknown element '" + nl + "' in process " + d.id);
        }
      }
      m.diagrams.push_back(std::move(d));
    } else if (local == "signal") {
      std::string id = detail::required_attr(el, "id", "signal");
      claim_id(id, "signal");
      signal_names[id] = detail::attr(el, "name").value_or(id);
    } else if (local == "timeline") {
      Timeline tl;
      for (const auto& [tq, tel] : el) {
        if (tq == "<xmlattr>") continue;
        if (detail::local_name(tq) == "milestone") {
          Milestone ms;
          ms.name = detail::required_attr(tel, "name", "milestone");
          ms.day = detail::parse_long(
              detail::required_attr(tel, "day", "milestone " + ms.name),
              "milestone " + ms.name);
          tl.milestones.push_back(std::move(ms));
        } else {
          warn("ignored unknown element in timeline");
        }
      }
      m.timeline = std::move(tl);
    } else {
      warn("ignored unknown element '" + local + "'");
    }
  }

  for (const auto& fx : fixups) {
    auto it = signal_names.find(fx.signal_ref);
    if (it == signal_names.end())
      throw ParseError("unresolved signalRef '" + fx.signal_ref + "'");
    m.diagrams[fx.diagram].nodes[fx.node].signal = it->second;
  }

  m.abstraction_levels = max_level(m);

  if (m.pools.empty() && m.message_flows.empty())
    m.event_links = derive_event_links(m);

  require_valid(m);
  return m;
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string r;
  r.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': r += "&amp;"; break;
      case '<': r += "&lt;"; break;
      case '>': r += "&gt;"; break;
      case '"': r += "&quot;"; break;
      default: r += c;
    }
  }
  return r;
}

inline std::string format_attr(const std::string& k, const std::string& v) {
  return " " + k + "=\"" + xml_escape(v) + "\"";
}

}  // namespace detail

inline std::string serialize(const ProcessModel& m) {
  using detail::format_attr;
  std::string o;
  o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o += "<bpmn:definitions"
       " xmlns:bpmn=\"http://www.omg.org/spec/BPMN/20100524/MODEL\""
       " xmlns:ext=\"urn:bpmn2mdp:ext\""
       " id=\"definitions\" targetNamespace=\"urn:bpmn2mdp:models\">\n";

  // Distinct signal names, each as one signal element with a fresh id.
  std::set<std::string> used_ids;
  for (const auto& d : m.diagrams) {
    used_ids.insert(d.id);
    for (const auto& n : d.nodes) used_ids.insert(n.id);
    for (const auto& f : d.flows) used_ids.insert(f.id);
  }
  for (const auto& p : m.pools) used_ids.insert(p.id);
  for (const auto& f : m.message_flows) used_ids.insert(f.id);

  std::set<std::string> signal_set;
  for (const auto& d : m.diagrams)
    for (const auto& n : d.nodes)
      if (n.signal) signal_set.insert(*n.signal);

  std::map<std::string, std::string> signal_id;
  int sig_n = 0;
  for (const auto& s : signal_set) {
    std::string id;
    do {
      id = "sig_" + std::to_string(++sig_n);
    } while (used_ids.count(id));
    used_ids.insert(id);
    signal_id[s] = id;
  }

  if (!m.pools.empty() || !m.message_flows.empty()) {
    o += "  <bpmn:collaboration id=\"collaboration\">\n";
    for (const auto& p : m.pools) {
      o += "    <bpmn:participant" + format_attr("id", p.id) +
           format_attr("name", p.name);
      if (p.diagram_ids.size() == 1) {
        o += format_attr("processRef", p.diagram_ids.front());
      } else if (!p.diagram_ids.empty()) {
        std::string joined;
        for (const auto& d : p.diagram_ids) {
          if (!joined.empty()) joined += " ";
          joined += d;
        }
        o += format_attr("processRef", p.diagram_ids.front());
        o += format_attr("ext:processRefs", joined);
      }
      o += "/>\n";
    }
    for (const auto& f : m.message_flows) {
      o += "    <bpmn:messageFlow" + format_attr("id", f.id);
      if (!f.name.empty()) o += format_attr("name", f.name);
      o += format_attr("sourceRef", f.source) + format_attr("targetRef", f.target) +
           "/>\n";
    }
    o += "  </bpmn:collaboration>\n";
  }

  for (const auto& d : m.diagrams) {
    o += "  <bpmn:process" + format_attr("id", d.id) + format_attr("name", d.name) +
         format_attr("ext:level", std::to_string(d.level));
    if (!d.role.empty()) o += format_attr("ext:role", d.role);
    o += ">\n";
    for (const auto& n : d.nodes) {
      std::string tag = std::string("bpmn:") + to_string(n.kind);
      o += "    <" + tag + format_attr("id", n.id) + format_attr("name", n.name);
      if (n.duration_days)
        o += format_attr("ext:durationDays", detail::format_double(*n.duration_days));
      if (n.effort_wd)
        o += format_attr("ext:effortWd", detail::format_double(*n.effort_wd));
      if (n.signal) {
        o += ">\n      <bpmn:signalEventDefinition" +
             format_attr("signalRef", signal_id.at(*n.signal)) + "/>\n    </" +
             tag + ">\n";
      } else {
        o += "/>\n";
      }
    }
    for (const auto& f : d.flows) {
      o += "    <bpmn:sequenceFlow" + format_attr("id", f.id);
      if (f.label) o += format_attr("name", *f.label);
      o += format_attr("sourceRef", f.source) + format_attr("targetRef", f.target);
      if (f.probability)
        o += format_attr("ext:probability", detail::format_double(*f.probability));
      o += "/>\n";
    }
    o += "  </bpmn:process>\n";
  }

  for (const auto& s : signal_set)
    o += "  <bpmn:signal" + format_attr("id", signal_id.at(s)) +
         format_attr("name", s) + "/>\n";

  if (m.timeline) {
    o += "  <ext:timeline>\n";
    for (const auto& ms : m.timeline->milestones)
      o += "    <ext:milestone" + format_attr("name", ms.name) +
           format_attr("day", std::to_string(ms.day)) + "/>\n";
    o += "  </ext:timeline>\n";
  }

  o += "</bpmn:definitions>\n";
  return o;
}

}  // namespace bpmn2mdp
