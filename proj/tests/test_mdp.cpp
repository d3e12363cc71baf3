// Module generation and parallel composition, cross-checked against an
// independent whole-model token enumerator.

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "bpmn2mdp/bpmn2mdp.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace bpmn2mdp;
using testutil::chain;
using testutil::flow;
using testutil::load_fixture;
using testutil::node;

TEST_CASE("a straight-line diagram yields one location per node plus done") {
  auto m = load_fixture("linear.bpmn");
  auto mod = generate_module(m.diagrams[0], m.event_links);

  CHECK(mod.name == "lin");
  CHECK(mod.state_var.name == "s_lin");
  CHECK(mod.location_count == 5);  // 4 nodes + done
  CHECK(mod.state_var.max == 4);
  CHECK(mod.initial_location == mod.location_of.at("lin_s"));
  CHECK(mod.done_location == 4);

  REQUIRE(mod.commands.size() == 4);
  for (const auto& c : mod.commands) {
    CHECK_FALSE(c.action.has_value());  // nothing to synchronize with
    REQUIRE(c.branches.size() == 1);
    CHECK(c.branches[0].first == 1.0);
  }
  // tasks are the reward carriers
  int completions = 0;
  for (const auto& c : mod.commands) completions += c.task_completion;
  CHECK(completions == 2);

  // the end event empties the diagram
  const Command& last = mod.commands.back();
  CHECK(last.source == "lin_e");
  CHECK(last.branches[0].second == mod.done_location);
}

TEST_CASE("parallel regions get auxiliary multi-token locations") {
  auto m = load_fixture("parallel.bpmn");
  auto mod = generate_module(m.diagrams[0], m.event_links);

  // 6 single-token locations, the empty one, and {a,b} {b,join} {a,join}
  // {join:2} discovered by the walk
  CHECK(mod.location_count == 11);

  // the fork's command puts one token on each branch
  bool fork_seen = false;
  for (const auto& c : mod.commands) {
    if (c.source != "pl_fork") continue;
    fork_seen = true;
    REQUIRE(c.branches.size() == 1);
    const auto& cfg = mod.location_configs[c.branches[0].second];
    CHECK(cfg[mod.location_of.at("pl_a")] == 1);
    CHECK(cfg[mod.location_of.at("pl_b")] == 1);
  }
  CHECK(fork_seen);

  // the join waits for both tokens: no command fires it from a single-token
  // location
  for (const auto& c : mod.commands) {
    if (c.source != "pl_join") continue;
    const auto& cfg = mod.location_configs[c.guard_location];
    CHECK(cfg[mod.location_of.at("pl_join")] == 2);
  }

  auto counts = oracle::enumerate_global(m);
  auto composed = compose(compile(m));
  CHECK(composed.state_count() == counts.states);
  CHECK(composed.transition_count == counts.transitions);
  CHECK(composed.state_count() == 8);
  CHECK(composed.transition_count == 8);
}

TEST_CASE("probabilistic branches to one target merge their mass") {
  Diagram d;
  d.id = "d";
  d.name = "d";
  d.nodes = {node("s", NodeKind::StartEvent), node("g", NodeKind::ExclusiveGateway),
             node("t", NodeKind::Task), node("e", NodeKind::EndEvent)};
  d.flows = {flow("f1", "s", "g"), flow("f2", "g", "t", 0.25),
             flow("f3", "g", "t", 0.75), flow("f4", "t", "e")};
  auto mod = generate_module(d, {});
  for (const auto& c : mod.commands) {
    if (c.source != "g") continue;
    REQUIRE(c.branches.size() == 1);
    CHECK(c.branches[0].first == 1.0);
  }
}

TEST_CASE("a nondeterministic gateway becomes one command per flow") {
  auto m = load_fixture("divergent.bpmn");
  auto mod = generate_module(m.diagrams[0], m.event_links);
  int gw_commands = 0;
  for (const auto& c : mod.commands) gw_commands += c.source == "dv_gw";
  CHECK(gw_commands == 2);
}

TEST_CASE("signals synchronize across diagrams but not within one") {
  auto linked = load_fixture("linked_ok.bpmn");
  auto thrower = generate_module(*linked.diagram("lk1"), linked.event_links);
  bool labeled = false;
  for (const auto& c : thrower.commands)
    if (c.source == "lk1_th") {
      CHECK(c.action == "handoff_ready");
      labeled = true;
    }
  CHECK(labeled);

  // same wiring squeezed into one diagram: the signal goes quiet
  ProcessModel intra;
  Diagram d;
  d.id = "one";
  d.name = "one";
  d.nodes = {node("s", NodeKind::StartEvent),
             node("th", NodeKind::IntermediateThrowEvent, "", "ping"),
             node("c", NodeKind::IntermediateCatchEvent, "", "ping"),
             node("e", NodeKind::EndEvent)};
  d.flows = {flow("f1", "s", "th"), flow("f2", "th", "c"),
             flow("f3", "c", "e")};
  intra.diagrams.push_back(d);
  intra.event_links = derive_event_links(intra);
  REQUIRE(intra.event_links.size() == 1);
  auto mod = generate_module(intra.diagrams[0], intra.event_links);
  for (const auto& c : mod.commands) CHECK_FALSE(c.action.has_value());
}

TEST_CASE("a signal without a link is reported even on unreachable nodes") {
  Diagram d;
  d.id = "d";
  d.name = "d";
  d.nodes = {node("s", NodeKind::StartEvent), node("e", NodeKind::EndEvent),
             node("c", NodeKind::IntermediateCatchEvent, "", "ghost"),
             node("t", NodeKind::Task)};
  d.flows = {flow("f1", "s", "e"), flow("f2", "c", "t")};  // c has no in-flow
  CHECK_THROWS_AS(generate_module(d, {}), UnlinkedSignal);
}

TEST_CASE("a diagram without a start event cannot become a module") {
  Diagram d;
  d.id = "d";
  d.name = "d";
  d.nodes = {node("t", NodeKind::Task), node("e", NodeKind::EndEvent)};
  d.flows = {flow("f1", "t", "e")};
  CHECK_THROWS_AS(generate_module(d, {}), Error);
}

TEST_CASE("rewards exist exactly when the model has a timeline") {
  auto lin = load_fixture("linear.bpmn");
  auto c = compile(lin);
  REQUIRE(c.rewards.size() == 2);
  CHECK(c.rewards[0].name == "days");
  CHECK(c.rewards[1].name == "wd");

  // one entry per task-completion command, valued from the task
  const auto& mod = c.modules[0];
  double total_days = 0.0;
  for (const auto& [key, v] : c.rewards[0].values) {
    CHECK(key.first == "lin");
    CHECK(mod.commands[key.second].task_completion);
    total_days += v;
  }
  CHECK(total_days == 10.0);  // 3 + 7

  auto plain = load_fixture("parallel.bpmn");  // durations but no timeline
  CHECK(compile(plain).rewards.empty());
}

TEST_CASE("milestone names label every location holding that node") {
  auto lin = load_fixture("linear.bpmn");
  auto c = compile(lin);
  REQUIRE(c.atoms.size() == 2);  // t_second and finished, one location each
  CHECK(c.atoms[0].label == "t_second");
  CHECK(c.atoms[0].location == c.modules[0].location_of.at("lin_b"));
  CHECK(c.atoms[1].label == "finished");

  auto composed = compose(c);
  REQUIRE(composed.labels.count("t_second") == 1);
  const auto& bits = composed.labels.at("t_second");
  std::size_t marked = 0;
  for (auto b : bits) marked += b;
  CHECK(marked == 1);  // exactly one reachable state holds that token

  // the milestone state is the one whose location tuple says lin_b
  for (std::size_t s = 0; s < composed.state_count(); ++s)
    if (bits[s])
      CHECK(composed.states[s][0] == c.modules[0].location_of.at("lin_b"));
}

TEST_CASE("done_all marks exactly the fully drained states") {
  auto m = load_fixture("linked_ok.bpmn");
  auto composed = compose(compile(m));
  const auto& done = composed.labels.at("done_all");
  std::size_t marked = 0;
  for (std::size_t s = 0; s < composed.state_count(); ++s) {
    if (!done[s]) continue;
    ++marked;
    CHECK(composed.states[s][0] == 4);  // lk1: 4 nodes -> done location 4
    CHECK(composed.states[s][1] == 4);
  }
  CHECK(marked == 1);
}

TEST_CASE("composition is a breadth-first walk with stable numbering") {
  auto m = load_fixture("linked_ok.bpmn");
  auto a = compose(compile(m));
  auto b = compose(compile(m));
  CHECK(a.initial == 0u);
  CHECK(a.states == b.states);
  CHECK(a.transition_count == b.transition_count);
  CHECK(a.module_names == std::vector<std::string>{"lk1", "lk2"});

  auto counts = oracle::enumerate_global(m);
  CHECK(a.state_count() == counts.states);
  CHECK(a.transition_count == counts.transitions);
}

TEST_CASE("exploration stops at the configured state budget") {
  auto m = load_fixture("pep_3level.bpmn");
  auto [conv, report] = convert_to_event_based(m);
  auto c = compile(conv);
  ComposeOptions opts;
  opts.max_states = 3;
  try {
    compose(c, opts);
    FAIL("expected the state budget to trip");
  } catch (const StateSpaceLimitExceeded& e) {
    CHECK(e.states_explored == 3);
  }

  CHECK_THROWS_AS(generate_module(load_fixture("parallel.bpmn").diagrams[0],
                                  {}, 7),
                  StateSpaceLimitExceeded);
}

TEST_CASE("composed state graphs match the token enumerator everywhere") {
  std::mt19937 rng(7151);
  testutil::RandomModelOptions opt;
  opt.max_nodes = 8;
  for (int i = 0; i < 30; ++i) {
    CAPTURE(i);
    auto m = testutil::random_pooled_model(rng, opt);
    auto [conv, report] = convert_to_event_based(m);

    auto composed = compose(compile(conv));
    auto counts = oracle::enumerate_global(conv);
    CHECK(composed.state_count() == counts.states);
    CHECK(composed.transition_count == counts.transitions);

    auto baseline = merged_baseline(m);
    auto bcomposed = compose(compile(baseline));
    auto bcounts = oracle::enumerate_global(baseline);
    CHECK(bcomposed.state_count() == bcounts.states);
    CHECK(bcomposed.transition_count == bcounts.transitions);
  }
}

TEST_CASE("the showcase model composes small next to its merged baseline") {
  auto m = load_fixture("pep_3level.bpmn");
  auto [conv, report] = convert_to_event_based(m);
  auto converted = compose(compile(conv));
  auto merged = compose(compile(merged_baseline(m)));

  CHECK(converted.state_count() > 0);
  CHECK(merged.state_count() > converted.state_count());
  CHECK(merged.transition_count > converted.transition_count);

  auto counts = oracle::enumerate_global(conv);
  CHECK(converted.state_count() == counts.states);
  CHECK(converted.transition_count == counts.transitions);
}
