#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "longview/metrics/metrics.hpp"
#include "longview/metrics/permutation.hpp"
#include "longview/summaries.hpp"
#include "longview/text.hpp"

namespace longview::metrics {

struct MetricValues {
    std::optional<double> mhic_sem;
    std::optional<double> fc_timeline;
    std::optional<double> fc_expert_m;
    std::optional<double> fc_expert_c;
    std::optional<double> fc_expert;  // mean of the available parts
    std::optional<double> ea_m;
    std::optional<double> ea_c;
    std::optional<double> intra_nli;
    std::optional<double> coherence;
    std::optional<double> ppl_timeline;
    std::optional<double> ppl_high_level;

    std::optional<double> by_name(const std::string& name) const;
};

const std::vector<std::string>& metric_names();

struct TimelineMetricReport {
    std::string timeline_id;
    std::string system;
    std::string variant;
    MetricValues values;
};

struct Comparison {
    std::string metric;
    std::string system_a;
    std::string system_b;
    double p_value = 1.0;
    std::int64_t n_resamples = 0;
    std::uint64_t seed = 0;
};

struct RunReport {
    std::string run_id;
    std::string template_hash;
    std::map<std::string, std::string> backend_ids;
    std::vector<TimelineMetricReport> per_timeline;
    std::vector<Comparison> comparisons;

    std::string to_json() const;  // includes computed aggregates
    static RunReport from_json(const std::string& text);
};

// All inputs for scoring one (timeline, system) record.
struct ScoringInputs {
    std::string timeline_text;  // posts joined; chunked at the configured cutoff
    TimelineSummary timeline_summary;
    HighLevelSummary high_level;
    std::optional<HighLevelSummary> gold;
    std::optional<EvidenceSet> evidence;
    size_t chunk_cutoff = 60;
};

MetricValues score_record(const ScoringInputs& inputs, MetricBackends& backends,
                          const core::Tokenizer& tokenizer);

// Paired per-timeline comparisons between two reports, one test per metric
// with values present on both sides for the same timeline ids.
std::vector<Comparison> compare_reports(const RunReport& a, const RunReport& b,
                                        std::int64_t n_resamples, std::uint64_t seed);

// Evidence JSONL: {"timeline_id": str, "evidences": [str...]}
std::vector<EvidenceSet> read_evidence_jsonl(const std::string& path);

}  // namespace longview::metrics
