// Command line front end: convert pool-based BPMN to event-based form and
// PRISM code, report state-space statistics, and check standard properties.
//
// Exit codes: 0 success, 1 usage error, 2 invalid input (parse, validation,
// dialect, splice, or linking errors), 3 resource limits (state-space cap,
// non-convergence), 4 property violation found by `check`.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "bpmn2mdp/bpmn2mdp.hpp"

namespace fs = std::filesystem;
using namespace bpmn2mdp;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
}

struct Options {
  std::string input;
  std::string out_dir;
  std::uint64_t max_states = 10'000'000;
  double epsilon = 1e-8;
  bool baseline_merged = false;
  bool deterministic = true;  // stable ordering is always on
  std::string format = "dat";
  std::vector<std::string> properties;
};

struct Prepared {
  ProcessModel converted;
  DedupReport report;
  Dialect dialect = Dialect::EventBased;
};

Prepared prepare(const Options& opt) {
  std::vector<std::string> warnings;
  ProcessModel m = parse(read_file(opt.input), &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  Prepared p;
  p.dialect = classify_dialect(m);
  auto [converted, report] = convert_to_event_based(m);
  p.converted = std::move(converted);
  p.report = std::move(report);
  return p;
}

ComposedMdp build(const ProcessModel& m, const Options& opt) {
  CompiledModel c = compile(m, opt.max_states);
  ComposeOptions co;
  co.max_states = opt.max_states;
  return compose(c, co);
}

bool want(const Options& opt, const std::string& prop) {
  if (opt.properties.empty()) return true;
  for (const auto& p : opt.properties)
    if (p == prop) return true;
  return false;
}

int cmd_convert(const Options& opt) {
  Prepared p = prepare(opt);

  fs::path input(opt.input);
  fs::path dir = opt.out_dir.empty() ? input.parent_path() : fs::path(opt.out_dir);
  if (!opt.out_dir.empty()) fs::create_directories(dir);
  std::string stem = input.stem().string();

  CompiledModel c = compile(p.converted, opt.max_states);
  std::string model_ext = opt.format == "prism" ? ".prism" : ".dat";

  fs::path model_path = dir / (stem + model_ext);
  fs::path props_path = dir / (stem + ".props");
  fs::path xml_path = dir / (stem + ".ebpmn.xml");
  fs::path report_path = dir / (stem + "_dedup_report.txt");

  write_file(model_path, emit_model(c.modules, c.rewards, c.atoms));
  write_file(props_path, emit_properties(!c.rewards.empty()));
  write_file(xml_path, serialize(p.converted));
  write_file(report_path, p.report.to_text());

  std::cout << "dialect: "
            << (p.dialect == Dialect::PoolBased ? "pool-based" : "event-based")
            << "\n";
  std::cout << "diagrams: " << p.converted.diagrams.size() << "\n";
  std::cout << "signals: " << p.converted.event_links.size() << "\n";
  std::cout << "wrote " << model_path.string() << "\n";
  std::cout << "wrote " << props_path.string() << "\n";
  std::cout << "wrote " << xml_path.string() << "\n";
  std::cout << "wrote " << report_path.string() << "\n";
  return 0;
}

int cmd_stats(const Options& opt) {
  Prepared p = prepare(opt);
  ComposedMdp mdp = build(p.converted, opt);
  StateSpaceStats s = count_state_space(mdp);

  std::printf("states:      %llu\n", static_cast<unsigned long long>(s.states));
  std::printf("transitions: %llu\n",
              static_cast<unsigned long long>(s.transitions));
  std::printf("build:       %.3fs\n", s.build_seconds);

  if (opt.baseline_merged) {
    std::vector<std::string> warnings;
    ProcessModel original = parse(read_file(opt.input), &warnings);
    ProcessModel merged = merged_baseline(original);
    ComposedMdp base = build(merged, opt);
    StateSpaceStats b = count_state_space(base);
    std::printf("baseline states:      %llu\n",
                static_cast<unsigned long long>(b.states));
    std::printf("baseline transitions: %llu\n",
                static_cast<unsigned long long>(b.transitions));
    double rs = b.states ? 100.0 * (1.0 - double(s.states) / double(b.states))
                         : 0.0;
    double rt = b.transitions
                    ? 100.0 * (1.0 - double(s.transitions) / double(b.transitions))
                    : 0.0;
    std::printf("reduction: %.1f%% in states and %.1f%% in transitions\n", rs,
                rt);
  }
  return 0;
}

int cmd_check(const Options& opt) {
  Prepared p = prepare(opt);
  ComposedMdp mdp = build(p.converted, opt);
  EngineOptions eo;
  eo.epsilon = opt.epsilon;

  bool violated = false;

  DeadlockReport dl = check_deadlock_free(mdp);
  std::printf("deadlock-free: %s\n", dl.deadlock_free ? "yes" : "no");
  if (!dl.deadlock_free) violated = true;

  std::optional<ReachResult> rmin, rmax;
  if (want(opt, "phi1")) {
    rmin = reach_probability(mdp, "done_all", /*minimize=*/true, eo);
    bool ok = rmin->value == 1.0;
    std::printf("phi1 Pmin(F done_all) = %.10g %s\n", rmin->value,
                ok ? "[ok]" : "[violated]");
    if (!ok) violated = true;
  }
  if (want(opt, "phi2") || want(opt, "phi3"))
    rmax = reach_probability(mdp, "done_all", /*minimize=*/false, eo);
  if (want(opt, "phi2")) {
    bool ok = rmax->value == 1.0;
    std::printf("phi2 Pmax(F done_all) = %.10g %s\n", rmax->value,
                ok ? "[ok]" : "[violated]");
    if (!ok) violated = true;
  }
  if (want(opt, "phi3")) {
    bool all = true;
    for (std::uint32_t s = 0; s < mdp.state_count(); ++s)
      all = all && rmax->prob1[s];
    std::printf("phi3 forall Pmax>=1 (F done_all): %s\n",
                all ? "yes [ok]" : "no [violated]");
    if (!all) violated = true;
  }

  bool has_rewards = !mdp.reward_names.empty();
  if (want(opt, "phi4")) {
    if (has_rewards) {
      RewardResult r = expected_reward(mdp, "days", "done_all", true, eo);
      std::printf("phi4 Rmin(days, F done_all) = %.10g\n", r.value);
    } else {
      std::printf("phi4 Rmin(days, F done_all): not applicable\n");
    }
  }
  if (want(opt, "phi5")) {
    if (has_rewards) {
      RewardResult r = expected_reward(mdp, "wd", "done_all", false, eo);
      std::printf("phi5 Rmax(wd, F done_all) = %.10g\n", r.value);
    } else {
      std::printf("phi5 Rmax(wd, F done_all): not applicable\n");
    }
  }

  return violated ? 4 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based BPMN to event-based BPMN and PRISM MDP compiler"};
  app.require_subcommand(1);

  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("input", opt.input, "BPMN XML file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--max-states", opt.max_states,
                    "state-space cap for composition");
    sub->add_option("--epsilon", opt.epsilon,
                    "convergence threshold for value iteration");
    sub->add_flag("--deterministic", opt.deterministic,
                  "stable output ordering (always on; kept for scripts)");
  };

  CLI::App* convert = app.add_subcommand(
      "convert", "convert to event-based form, emit PRISM model + properties");
  add_common(convert);
  convert->add_option("--out-dir", opt.out_dir, "output directory");
  convert->add_option("--format", opt.format, "model file format")
      ->check(CLI::IsMember({"dat", "prism"}));

  CLI::App* stats =
      app.add_subcommand("stats", "print state-space statistics");
  add_common(stats);
  stats->add_flag("--baseline-merged", opt.baseline_merged,
                  "also build the merged single-diagram baseline and report "
                  "the reduction");

  CLI::App* check =
      app.add_subcommand("check", "evaluate standard properties");
  add_common(check);
  check->add_option("--property", opt.properties,
                    "restrict to specific properties (phi1..phi5)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (convert->parsed()) return cmd_convert(opt);
    if (stats->parsed()) return cmd_stats(opt);
    return cmd_check(opt);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const AmbiguousDialect& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SpliceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnlinkedSignal& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const StateSpaceLimitExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NonConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
