#include "uap/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uap/errors.hpp"

namespace uap {

QueryLedger::QueryLedger(int budget_q, double epsilon) : budget_(budget_q), epsilon_(epsilon) {
  if (budget_q < 1) throw std::invalid_argument("ledger: budget q must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("ledger: epsilon must be > 0");
}

void QueryLedger::record_query(std::int64_t image_id, std::span<const double> queried_point,
                               std::span<const float> base_point) {
  if (queried_point.size() != base_point.size()) {
    throw ShapeError("ledger: queried point and base image differ in size");
  }
  double dist = 0.0;
  for (std::size_t k = 0; k < queried_point.size(); ++k) {
    dist = std::max(dist, std::abs(queried_point[k] - static_cast<double>(base_point[k])));
  }
  if (!(dist <= epsilon_)) {
    throw BudgetError("ledger: query left the epsilon-ball of image " +
                          std::to_string(image_id) + " (distance " + std::to_string(dist) +
                          " > epsilon " + std::to_string(epsilon_) + ")",
                      image_id);
  }
  int& count = counts_[image_id];
  if (count >= budget_) {
    throw BudgetError("ledger: image " + std::to_string(image_id) +
                          " already queried " + std::to_string(count) +
                          " times, budget q=" + std::to_string(budget_),
                      image_id);
  }
  ++count;
  entries_.push_back({image_id, static_cast<std::uint64_t>(entries_.size()), dist});
}

int QueryLedger::max_queries_per_image() const {
  int m = 0;
  for (const auto& [id, c] : counts_) m = std::max(m, c);
  return m;
}

std::vector<std::int64_t> QueryLedger::queried_image_ids() const {
  std::vector<std::int64_t> ids;
  ids.reserve(counts_.size());
  for (const auto& [id, c] : counts_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

AuditSummary audit_ledger(int budget_q, double epsilon, std::span<const LedgerEntry> entries) {
  AuditSummary s;
  s.budget = budget_q;
  s.epsilon = epsilon;
  s.total_queries = entries.size();
  std::unordered_map<std::int64_t, int> counts;
  for (const auto& e : entries) {
    const int c = ++counts[e.image_id];
    if (c > budget_q) ++s.budget_violations;
    if (!(e.distance <= epsilon)) ++s.distance_violations;
    s.max_per_image = std::max(s.max_per_image, c);
  }
  s.distinct_images = counts.size();
  return s;
}

AuditSummary audit_ledger(const QueryLedger& ledger) {
  return audit_ledger(ledger.budget(), ledger.epsilon(), ledger.entries());
}

NeighborhoodReport audit_neighborhoods(std::span<const std::int64_t> queried_ids,
                                       const Dataset& images, double epsilon) {
  NeighborhoodReport report;
  report.images_audited = queried_ids.size();
  report.min_pairwise_distance = std::numeric_limits<double>::infinity();
  const double flag_below = 2.0 * epsilon;
  const std::size_t n = images.shape.size();
  for (std::size_t a = 0; a + 1 < queried_ids.size(); ++a) {
    const float* pa = images.image(static_cast<int>(queried_ids[a])).data();
    for (std::size_t b = a + 1; b < queried_ids.size(); ++b) {
      const float* pb = images.image(static_cast<int>(queried_ids[b])).data();
      ++report.pairs_scanned;
      // Once the running max can neither be flagged nor improve the minimum,
      // the rest of the coordinates cannot change the report.
      const double cutoff = std::max(flag_below, report.min_pairwise_distance);
      double dist = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        dist = std::max(dist, std::abs(static_cast<double>(pa[k]) - pb[k]));
        if (dist >= cutoff) break;
      }
      report.min_pairwise_distance = std::min(report.min_pairwise_distance, dist);
      if (dist < flag_below) {
        report.flagged_pairs.push_back({queried_ids[a], queried_ids[b], dist});
      }
    }
  }
  return report;
}

NeighborhoodReport audit_neighborhoods(const QueryLedger& ledger, const Dataset& images) {
  const auto ids = ledger.queried_image_ids();
  return audit_neighborhoods(ids, images, ledger.epsilon());
}

}  // namespace uap
