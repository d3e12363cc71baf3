#pragma once

// Deterministic PRISM-language emission. Identical input always yields
// byte-identical output: ordering is fixed, doubles print in shortest
// round-trip form, newlines are LF.
//
// Names from diagrams (module names, signals, milestones) are sanitized to
// PRISM identifiers through a registry that resolves collisions with
// numeric suffixes. Task-completion commands stay silent in memory but are
// emitted with a unique private action label [r_<module>_<index>] so reward
// items can reference them precisely; a label owned by a single module never
// synchronizes with anything, so behavior is unchanged.

#include <cctype>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "engine.hpp"
#include "mdp.hpp"

namespace bpmn2mdp {
namespace detail {

inline const std::set<std::string>& prism_keywords() {
  static const std::set<std::string> kw{
      "A",      "bool",      "clock",  "const",     "ctmc",      "C",
      "double", "dtmc",      "E",      "endinit",   "endinvariant",
      "endmodule", "endrewards", "endsystem", "false", "formula", "filter",
      "func",   "F",         "global", "G",         "init",      "invariant",
      "I",      "int",       "label",  "max",       "mdp",       "min",
      "module", "X",         "nondeterministic",    "Pmax",      "Pmin",
      "P",      "probabilistic", "prob", "pta",     "rate",      "rewards",
      "Rmax",   "Rmin",      "R",      "S",         "stochastic","system",
      "true",   "U",         "W"};
  return kw;
}

// One namespace of sanitized identifiers; same raw name maps to the same
// identifier, distinct raw names never collide.
class IdentRegistry {
 public:
  explicit IdentRegistry(std::initializer_list<std::string> reserved = {}) {
    for (const auto& r : reserved) used_.insert(r);
  }

  std::string get(const std::string& raw) {
    auto it = memo_.find(raw);
    if (it != memo_.end()) return it->second;
    std::string s;
    for (char ch : raw)
      s += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_') ? ch
                                                                       : '_';
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front())))
      s = "x" + s;
    if (prism_keywords().count(s)) s += "_";
    std::string candidate = s;
    for (int k = 2; used_.count(candidate); ++k)
      candidate = s + "_" + std::to_string(k);
    used_.insert(candidate);
    memo_.emplace(raw, candidate);
    return candidate;
  }

 private:
  std::map<std::string, std::string> memo_;
  std::set<std::string> used_;
};

}  // namespace detail

inline std::string emit_model(const std::vector<MdpModule>& modules,
                              const std::vector<RewardStructure>& rewards,
                              const std::vector<LabelAtom>& atoms = {}) {
  detail::IdentRegistry idents;    // modules, variables, action labels
  detail::IdentRegistry prop_ids;  // quoted label names
  prop_ids.get("done_all");

  // Reward-carrying commands get private action labels.
  std::map<std::pair<std::string, int>, std::string> reward_label;
  for (const auto& mod : modules) {
    for (const auto& rs : rewards)
      for (const auto& [key, v] : rs.values)
        if (key.first == mod.name && !reward_label.count(key))
          reward_label[key] = idents.get("r_" + mod.name + "_" +
                                         std::to_string(key.second));
  }

  std::ostringstream out;
  out << "mdp\n";

  std::map<std::string, std::string> var_of;  // module name -> variable
  for (const auto& mod : modules) {
    std::string mname = idents.get("module_" + mod.name);
    std::string vname = idents.get(mod.state_var.name);
    var_of[mod.name] = vname;

    out << "\nmodule " << mname << "\n";
    out << "  " << vname << " : [0.." << mod.state_var.max << "] init "
        << mod.initial_location << ";\n";
    for (std::size_t ci = 0; ci < mod.commands.size(); ++ci) {
      const Command& c = mod.commands[ci];
      std::string label;
      if (c.action) label = idents.get(*c.action);
      auto rit = reward_label.find({mod.name, static_cast<int>(ci)});
      if (rit != reward_label.end()) label = rit->second;
      out << "  [" << label << "] " << vname << "=" << c.guard_location
          << " -> ";
      for (std::size_t bi = 0; bi < c.branches.size(); ++bi) {
        if (bi) out << " + ";
        out << detail::format_double(c.branches[bi].first) << " : (" << vname
            << "'=" << c.branches[bi].second << ")";
      }
      out << ";\n";
    }
    out << "endmodule\n";
  }

  out << "\nlabel \"done_all\" = ";
  for (std::size_t mi = 0; mi < modules.size(); ++mi) {
    if (mi) out << " & ";
    out << var_of.at(modules[mi].name) << "=" << modules[mi].done_location;
  }
  out << ";\n";

  std::map<std::string, std::vector<std::pair<std::string, int>>> label_disj;
  for (const auto& a : atoms)
    label_disj[a.label].emplace_back(var_of.at(a.module), a.location);
  for (const auto& [raw, disj] : label_disj) {
    out << "label \"" << prop_ids.get(raw) << "\" = ";
    for (std::size_t i = 0; i < disj.size(); ++i) {
      if (i) out << " | ";
      out << disj[i].first << "=" << disj[i].second;
    }
    out << ";\n";
  }

  for (const auto& rs : rewards) {
    out << "\nrewards \"" << prop_ids.get(rs.name) << "\"\n";
    for (const auto& mod : modules) {
      std::vector<std::pair<int, double>> items;
      for (const auto& [key, v] : rs.values)
        if (key.first == mod.name) items.emplace_back(key.second, v);
      for (const auto& [ci, v] : items)
        out << "  [" << reward_label.at({mod.name, ci}) << "] "
            << var_of.at(mod.name) << "=" << mod.commands[ci].guard_location
            << " : " << detail::format_double(v) << ";\n";
    }
    out << "endrewards\n";
  }

  return out.str();
}

// Reachability properties over the done_all label; reward properties are
// included only when reward structures exist.
inline std::string emit_properties(bool with_rewards) {
  std::string s;
  s += "// phi1\n";
  s += "Pmin=? [ F \"done_all\" ]\n";
  s += "// phi2\n";
  s += "Pmax=? [ F \"done_all\" ]\n";
  s += "// phi3\n";
  s += "filter(forall, Pmax>=1 [ F \"done_all\" ], true)\n";
  if (with_rewards) {
    s += "// phi4\n";
    s += "R{\"days\"}min=? [ F \"done_all\" ]\n";
    s += "// phi5\n";
    s += "R{\"wd\"}max=? [ F \"done_all\" ]\n";
  }
  return s;
}

}  // namespace bpmn2mdp
