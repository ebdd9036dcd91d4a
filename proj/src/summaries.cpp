#include "longview/summaries.hpp"

namespace longview {

std::string_view summary_system_name(SummarySystem system) {
    switch (system) {
        case SummarySystem::ThVae: return "thvae";
        case SummarySystem::LlmTldr: return "tldr";
        case SummarySystem::SkeletonImport: return "skeleton";
        case SummarySystem::External: return "external";
    }
    return "external";
}

SummarySystem parse_summary_system(std::string_view name) {
    if (name == "thvae") return SummarySystem::ThVae;
    if (name == "tldr") return SummarySystem::LlmTldr;
    if (name == "skeleton") return SummarySystem::SkeletonImport;
    if (name == "external") return SummarySystem::External;
    throw ValidationError("unknown summary system: '" + std::string(name) + "'");
}

}  // namespace longview
