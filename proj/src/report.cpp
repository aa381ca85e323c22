#include <cstdio>
#include <sstream>
#include <string>

#include "specvla/harness.hpp"

namespace specvla {

namespace {

using nlohmann::json;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

json policy_to_json(const PolicyReport& p, const RunConfig& config) {
  json j;
  j["label"] = policy_label(p.policy);
  j["mode"] = p.policy.mode == AcceptMode::kStrict ? "strict" : "relaxed";
  j["r"] = p.policy.r;
  j["per_dimension_r"] = p.policy.per_dimension_r ? json(*p.policy.per_dimension_r) : json(nullptr);
  j["episodes"] = p.episodes;
  j["steps"] = p.steps;
  j["accepted_total"] = p.accepted_total;
  j["emitted_total"] = p.emitted_total;
  j["mean_accepted"] = p.mean_accepted;
  j["tokens_per_pass"] = p.tokens_per_pass;
  j["length_histogram"] = p.histogram;
  j["length_distribution"] = p.proportions;
  json positions = json::array();
  for (const auto& v : p.per_position) positions.push_back(v ? json(*v) : json(nullptr));
  j["per_position_accepted"] = positions;
  j["success_proxy_rate"] = p.success_rate;
  j["success_tolerance"] = config.success_tolerance;
  j["ar_match_rate"] = p.ar_match_rate;
  j["estimated_speedup"] = p.estimated_speedup;
  if (p.measured) {
    j["measured_speedup"] = {
        {"measured", p.measured->measured},     {"analytic", p.measured->analytic},
        {"ar_seconds", p.measured->ar_seconds}, {"spec_seconds", p.measured->spec_seconds},
        {"tokens_per_pass", p.measured->tokens_per_pass}, {"reliable", p.measured->reliable},
    };
  } else {
    j["measured_speedup"] = nullptr;
  }
  j["identities_ok"] = p.identities_ok;
  return j;
}

}  // namespace

json report_to_json(const Report& report) {
  json j;
  j["schema_version"] = Report::kSchemaVersion;
  j["kind"] = "bench";
  j["config"] = config_to_json(report.config);
  j["identities_ok"] = report.identities_ok();
  j["policies"] = json::array();
  for (const auto& p : report.policies) j["policies"].push_back(policy_to_json(p, report.config));
  return j;
}

std::string report_to_csv(const Report& report) {
  std::ostringstream out;
  out << "policy,r,length,count,proportion\n";
  for (const auto& p : report.policies) {
    for (std::size_t k = 0; k < p.histogram.size(); ++k) {
      out << policy_label(p.policy) << ',' << p.policy.r << ',' << k << ',' << p.histogram[k] << ','
          << fmt("%.10f", p.proportions[k]) << '\n';
    }
  }
  return out.str();
}

std::string report_to_table(const Report& report) {
  std::ostringstream out;
  const std::size_t w0 = 16;

  out << "Acceptance summary (length = tokens per verification pass)\n";
  out << pad_right("policy", w0) << pad("length", 9) << pad("accepted", 10) << pad("est.spd", 9)
      << pad("meas.spd", 10) << pad("SR-proxy", 10) << pad("AR-match", 10) << '\n';
  for (const auto& p : report.policies) {
    std::string measured = "-";
    if (p.measured) measured = fmt("%.2fx", p.measured->measured) + (p.measured->reliable ? "" : "?");
    out << pad_right(policy_label(p.policy), w0) << pad(fmt("%.3f", p.tokens_per_pass), 9)
        << pad(fmt("%.3f", p.mean_accepted), 10) << pad(fmt("%.2fx", p.estimated_speedup), 9)
        << pad(measured, 10) << pad(fmt("%.1f%%", 100.0 * p.success_rate), 10)
        << pad(fmt("%.1f%%", 100.0 * p.ar_match_rate), 10) << '\n';
  }

  out << "\nDraft acceptance length distribution (% of passes)\n";
  out << pad_right("policy", w0);
  const std::size_t buckets = report.policies.empty() ? 0 : report.policies.front().histogram.size();
  for (std::size_t k = 0; k < buckets; ++k) out << pad(std::to_string(k), 8);
  out << '\n';
  for (const auto& p : report.policies) {
    out << pad_right(policy_label(p.policy), w0);
    for (double v : p.proportions) out << pad(fmt("%.2f", 100.0 * v), 8);
    out << '\n';
  }

  out << "\nMean draft acceptance length by starting position\n";
  out << pad_right("policy", w0);
  for (int d = 0; d < report.config.report_positions; ++d) out << pad(std::to_string(d), 8);
  out << '\n';
  for (const auto& p : report.policies) {
    out << pad_right(policy_label(p.policy), w0);
    for (const auto& v : p.per_position) out << pad(v ? fmt("%.2f", *v) : "-", 8);
    out << '\n';
  }
  out << "\nSR-proxy is token drift within " << report.config.success_tolerance
      << " bins of the verifier argmax, not task success.\n";
  return out.str();
}

std::string render(const Report& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson: return report_to_json(report).dump(2) + "\n";
    case ReportFormat::kCsv: return report_to_csv(report);
    case ReportFormat::kTable: return report_to_table(report);
  }
  return {};
}

json ablation_to_json(const AblationReport& report) {
  json j;
  j["schema_version"] = Report::kSchemaVersion;
  j["kind"] = "ablation";
  j["config"] = config_to_json(report.config);
  j["identities_ok"] = report.identities_ok;
  j["rows"] = json::array();
  for (const auto& row : report.rows) {
    j["rows"].push_back({{"r", row.r}, {"tokens_per_pass", row.tokens_per_pass},
                         {"success_proxy_rate", row.success_rate}});
  }
  return j;
}

std::string ablation_to_csv(const AblationReport& report) {
  std::ostringstream out;
  out << "r,tokens_per_pass,success_proxy_rate\n";
  for (const auto& row : report.rows) {
    out << row.r << ',' << fmt("%.10f", row.tokens_per_pass) << ',' << fmt("%.10f", row.success_rate) << '\n';
  }
  return out.str();
}

std::string ablation_to_table(const AblationReport& report) {
  std::ostringstream out;
  out << "Relaxation threshold sweep\n";
  out << pad("r", 6) << pad("length", 10) << pad("SR-proxy", 10) << '\n';
  for (const auto& row : report.rows) {
    out << pad(std::to_string(row.r), 6) << pad(fmt("%.3f", row.tokens_per_pass), 10)
        << pad(fmt("%.1f%%", 100.0 * row.success_rate), 10) << '\n';
  }
  return out.str();
}

std::string render(const AblationReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson: return ablation_to_json(report).dump(2) + "\n";
    case ReportFormat::kCsv: return ablation_to_csv(report);
    case ReportFormat::kTable: return ablation_to_table(report);
  }
  return {};
}

}  // namespace specvla
