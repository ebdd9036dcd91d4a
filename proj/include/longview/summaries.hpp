#pragma once

#include <string>

#include "longview/common.hpp"

namespace longview {

enum class SummarySystem { ThVae, LlmTldr, SkeletonImport, External };

std::string_view summary_system_name(SummarySystem system);
SummarySystem parse_summary_system(std::string_view name);

// First-person evidence summary of one timeline.
struct TimelineSummary {
    std::string timeline_id;
    SummarySystem system = SummarySystem::External;
    std::string text;
};

// Sentinel for a missing changes section (naive baseline, degenerate runs).
// Metrics treat it as absent.
inline constexpr const char* kNoChangesSentinel = "\xE2\x80\x94";  // em dash

struct HighLevelSummary {
    std::string timeline_id;
    SummarySystem system = SummarySystem::External;
    std::string main_body;
    std::string changes_section;

    bool has_changes() const {
        return !changes_section.empty() && changes_section != kNoChangesSentinel;
    }
};

}  // namespace longview
