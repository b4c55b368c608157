#include "uap/report.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>

namespace uap {

std::string format_double(double v) {
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string report_to_json(const AttackReport& report, bool include_volatile) {
  nlohmann::ordered_json j;
  j["algorithm"] = report.algorithm;
  j["config"] = report.config;
  j["images_consumed"] = report.images_consumed;
  j["total_queries"] = report.total_queries;
  j["audit"] = {{"budget", report.audit.budget},
                {"epsilon", report.audit.epsilon},
                {"total_queries", report.audit.total_queries},
                {"distinct_images", report.audit.distinct_images},
                {"max_per_image", report.audit.max_per_image},
                {"budget_violations", report.audit.budget_violations},
                {"distance_violations", report.audit.distance_violations}};
  nlohmann::ordered_json trace = nlohmann::ordered_json::array();
  for (const auto& p : report.loss_trace) {
    trace.push_back({{"index", p.index},
                     {"images_consumed", p.images_consumed},
                     {"loss", p.loss}});
  }
  j["loss_trace"] = std::move(trace);
  if (include_volatile) j["wall_time_ms"] = report.wall_time_ms;
  return j.dump();
}

}  // namespace uap
