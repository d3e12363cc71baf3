#pragma once

#include "model.hpp"

namespace bpmn2mdp {

enum class Dialect { PoolBased, EventBased };

inline const char* to_string(Dialect d) {
  return d == Dialect::PoolBased ? "pool-based" : "event-based";
}

// Pool-based iff the model communicates through pools or message flows.
// A single isolated diagram is event-based (conversion is a no-op for it).
inline Dialect classify_dialect(const ProcessModel& m) {
  bool pooled = !m.pools.empty() || !m.message_flows.empty();
  if (pooled && !m.event_links.empty())
    throw AmbiguousDialect(
        "model mixes message flows/pools with event links");
  return pooled ? Dialect::PoolBased : Dialect::EventBased;
}

}  // namespace bpmn2mdp
