#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "uap/dataset.hpp"

namespace uap {

struct LedgerEntry {
  std::int64_t image_id = -1;
  std::uint64_t query_index = 0;  // global 0-based position in the run
  double distance = 0.0;          // l-infinity distance from the base image
};

// Append-only record of every oracle call an attack makes, enforcing the
// per-epsilon-neighborhood budget: at most q queries per base image, every
// query within l-infinity epsilon of its base.
class QueryLedger {
 public:
  QueryLedger(int budget_q, double epsilon);

  // Validates and appends one query. Throws BudgetError when the image's
  // count would exceed q, or when the queried point leaves the epsilon-ball
  // (a protocol violation, reported before the budget check).
  void record_query(std::int64_t image_id, std::span<const double> queried_point,
                    std::span<const float> base_point);

  int budget() const { return budget_; }
  double epsilon() const { return epsilon_; }
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  std::size_t total_queries() const { return entries_.size(); }
  std::size_t distinct_images() const { return counts_.size(); }
  int max_queries_per_image() const;
  std::vector<std::int64_t> queried_image_ids() const;  // sorted, distinct

 private:
  int budget_;
  double epsilon_;
  std::vector<LedgerEntry> entries_;
  std::unordered_map<std::int64_t, int> counts_;
};

struct AuditSummary {
  int budget = 0;
  double epsilon = 0.0;
  std::uint64_t total_queries = 0;
  std::uint64_t distinct_images = 0;
  int max_per_image = 0;
  std::uint64_t budget_violations = 0;    // entries beyond q for their image
  std::uint64_t distance_violations = 0;  // entries with distance > epsilon
};

// Recomputes the audit from the raw entry list (does not trust the counters).
AuditSummary audit_ledger(int budget_q, double epsilon, std::span<const LedgerEntry> entries);
AuditSummary audit_ledger(const QueryLedger& ledger);

struct FlaggedPair {
  std::int64_t id_a = -1;
  std::int64_t id_b = -1;
  double distance = 0.0;
};

struct NeighborhoodReport {
  std::uint64_t images_audited = 0;
  std::uint64_t pairs_scanned = 0;
  // +infinity when fewer than two distinct images were queried.
  double min_pairwise_distance = 0.0;
  // Base-image pairs closer than 2*epsilon: such bases could share one
  // epsilon-ball, so per-image counting alone would not certify the budget.
  std::vector<FlaggedPair> flagged_pairs;
};

// Exhaustive pairwise l-infinity scan over the queried base images.
NeighborhoodReport audit_neighborhoods(std::span<const std::int64_t> queried_ids,
                                       const Dataset& images, double epsilon);
NeighborhoodReport audit_neighborhoods(const QueryLedger& ledger, const Dataset& images);

}  // namespace uap
