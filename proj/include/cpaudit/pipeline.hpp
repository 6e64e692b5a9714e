#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cpaudit/bundle.hpp"
#include "cpaudit/cookies.hpp"
#include "cpaudit/domains.hpp"
#include "cpaudit/filters.hpp"
#include "cpaudit/fingerprint.hpp"
#include "cpaudit/pii.hpp"
#include "cpaudit/report.hpp"

namespace cpaudit::pipeline {

// All analysis inputs, loaded and validated up front.
struct AnalysisConfig {
    domains::SuffixRuleSet psl;
    domains::OwnershipDb ownership;
    filters::CompiledFilterSet filter_set;
    fingerprint::ApiCatalog catalog;
    std::optional<pii::PiiProfile> profile;
    cookies::IdentifierThresholds thresholds;
    std::map<std::string, std::string> input_versions;  // recorded in every report
};

// Runs every per-bundle module: party classification, filter matching,
// cookie analysis, fingerprint scanning, PII scanning, tracker verdicts.
report::BundleAnalysis analyze_bundle(const bundle::CaptureBundle& b, const AnalysisConfig& config);

// Groups analyses by hotspot_id and aggregates each group.
std::vector<report::HotspotReport> aggregate_all(const std::vector<report::BundleAnalysis>& analyses,
                                                 const AnalysisConfig& config);

}  // namespace cpaudit::pipeline
