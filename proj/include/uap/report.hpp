#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uap/ledger.hpp"

namespace uap {

struct LossTracePoint {
  int index = 0;                     // generation or PGD iteration, 0-based
  std::uint64_t images_consumed = 0; // cumulative distinct images after it
  double loss = 0.0;                 // attacker objective (maximized)
};

// Bookkeeping for one attack run. Invariant: total_queries equals the budget
// q times images_consumed, and equals the oracle's query-counter delta.
struct AttackReport {
  std::string algorithm;                       // "yoqo" | "yoqt"
  std::map<std::string, std::string> config;   // flat snapshot, stable order
  std::uint64_t images_consumed = 0;
  std::uint64_t total_queries = 0;
  std::vector<LossTracePoint> loss_trace;
  AuditSummary audit;
  double wall_time_ms = 0.0;
};

// One line of structured text per record; volatile fields (wall time) are
// separated so reruns compare byte-identical on the stable part.
std::string report_to_json(const AttackReport& report, bool include_volatile = true);

std::string format_double(double v);  // shortest round-trip decimal form

}  // namespace uap
