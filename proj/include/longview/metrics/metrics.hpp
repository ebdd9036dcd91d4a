#pragma once

#include <optional>
#include <string>
#include <vector>

#include "longview/metrics/backends.hpp"
#include "longview/summaries.hpp"
#include "longview/text.hpp"

namespace longview::metrics {

struct EvidenceSet {
    std::string timeline_id;
    std::vector<std::string> evidences;  // non-empty, deduplicated

    void validate() const;
};

// Premise prefix used on timeline-summary sentences. Fixed, not configurable,
// so reports stay comparable.
inline constexpr const char* kPremisePrefix = "The individual wrote: ";

// mean over evidences of the best recall score against any summary sentence
double mhic_sem(const EvidenceSet& evidence, const TimelineSummary& summary, Embedder& embedder);

// C(A,B): mean over (a,b) pairs of (1 - p_contradict(a,b)); A is the premise side
double consistency(const std::vector<std::string>& premises,
                   const std::vector<std::string>& hypotheses, NliScorer& nli);

// mean over summary sentences of the max chunk entailment probability
double fc_timeline(const std::vector<core::Chunk>& chunks, const TimelineSummary& summary,
                   NliScorer& nli);

struct FcExpert {
    std::optional<double> main;
    std::optional<double> changes;
    std::optional<double> mean() const;  // unified FC_Expert
};

FcExpert fc_expert(const HighLevelSummary& gold, const HighLevelSummary& generated,
                   NliScorer& nli);

// C(T_p, S_m) with every premise sentence prefixed
double ea_main(const TimelineSummary& summary, const std::string& main_body, NliScorer& nli);

// mean entailment of changes sentences from the whole prefixed summary;
// absent when the changes section is missing
std::optional<double> ea_changes(const TimelineSummary& summary, const std::string& changes_section,
                                 NliScorer& nli);

// mean non-contradiction over ordered sentence pairs; 1.0 for a single sentence
double intra_nli(const HighLevelSummary& summary, NliScorer& nli);

// mean per-token log-likelihood of the high-level summary given the timeline summary
std::optional<double> coherence_score(const TimelineSummary& source,
                                      const HighLevelSummary& summary, LmScorer* lm);

double fluency_ppl(const std::string& text, LmScorer& lm);

// Cross-annotator intersection: exact substring containments keep the shorter
// span; pairs at embedding cosine >= 0.60 keep the shorter span; exact dedup.
EvidenceSet evidence_intersection(const std::vector<EvidenceSet>& annotations, Embedder& embedder);

}  // namespace longview::metrics
