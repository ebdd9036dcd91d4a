#include "longview/metrics/metrics.hpp"

#include <algorithm>
#include <set>

namespace longview::metrics {

void EvidenceSet::validate() const {
    if (evidences.empty()) throw ArgumentError("evidence set is empty");
    std::set<std::string> seen;
    for (const std::string& e : evidences) {
        if (trim(e).empty()) throw ValidationError("evidence set contains an empty string");
        if (!seen.insert(e).second) {
            throw ValidationError("evidence set contains a duplicate: '" + e + "'");
        }
    }
}

double mhic_sem(const EvidenceSet& evidence, const TimelineSummary& summary, Embedder& embedder) {
    evidence.validate();
    std::vector<std::string> sentences = core::sentence_texts(summary.text);
    if (sentences.empty()) throw ArgumentError("mhic_sem: summary has no sentences");
    double total = 0.0;
    for (const std::string& e : evidence.evidences) {
        double best = 0.0;
        for (const std::string& t : sentences) {
            best = std::max(best, embedder.recall_score(e, t));
        }
        total += best;
    }
    return total / static_cast<double>(evidence.evidences.size());
}

double consistency(const std::vector<std::string>& premises,
                   const std::vector<std::string>& hypotheses, NliScorer& nli) {
    if (premises.empty() || hypotheses.empty()) {
        throw ArgumentError("consistency: both sentence lists must be non-empty");
    }
    double total = 0.0;
    for (const std::string& a : premises) {
        for (const std::string& b : hypotheses) {
            total += 1.0 - nli.score(a, b).contradict;
        }
    }
    return total / (static_cast<double>(premises.size()) * static_cast<double>(hypotheses.size()));
}

double fc_timeline(const std::vector<core::Chunk>& chunks, const TimelineSummary& summary,
                   NliScorer& nli) {
    if (chunks.empty()) throw ArgumentError("fc_timeline: no timeline chunks");
    std::vector<std::string> sentences = core::sentence_texts(summary.text);
    if (sentences.empty()) throw ArgumentError("fc_timeline: summary has no sentences");
    double total = 0.0;
    for (const std::string& t : sentences) {
        double best = 0.0;
        for (const core::Chunk& d : chunks) {
            best = std::max(best, nli.score(d.text, t).entail);
        }
        total += best;
    }
    return total / static_cast<double>(sentences.size());
}

std::optional<double> FcExpert::mean() const {
    if (main && changes) return (*main + *changes) / 2.0;
    if (main) return main;
    if (changes) return changes;
    return std::nullopt;
}

FcExpert fc_expert(const HighLevelSummary& gold, const HighLevelSummary& generated,
                   NliScorer& nli) {
    FcExpert out;
    std::vector<std::string> gold_main = core::sentence_texts(gold.main_body);
    std::vector<std::string> gen_main = core::sentence_texts(generated.main_body);
    if (!gold_main.empty() && !gen_main.empty()) {
        out.main = consistency(gold_main, gen_main, nli);
    }
    if (gold.has_changes() && generated.has_changes()) {
        std::vector<std::string> gold_changes = core::sentence_texts(gold.changes_section);
        std::vector<std::string> gen_changes = core::sentence_texts(generated.changes_section);
        if (!gold_changes.empty() && !gen_changes.empty()) {
            out.changes = consistency(gold_changes, gen_changes, nli);
        }
    }
    return out;
}

namespace {

std::vector<std::string> prefixed_sentences(const std::string& text) {
    std::vector<std::string> out;
    for (const std::string& s : core::sentence_texts(text)) {
        out.push_back(std::string(kPremisePrefix) + s);
    }
    return out;
}

}  // namespace

double ea_main(const TimelineSummary& summary, const std::string& main_body, NliScorer& nli) {
    std::vector<std::string> premises = prefixed_sentences(summary.text);
    std::vector<std::string> hypotheses = core::sentence_texts(main_body);
    return consistency(premises, hypotheses, nli);
}

std::optional<double> ea_changes(const TimelineSummary& summary,
                                 const std::string& changes_section, NliScorer& nli) {
    if (changes_section.empty() || changes_section == kNoChangesSentinel) return std::nullopt;
    std::vector<std::string> hypotheses = core::sentence_texts(changes_section);
    if (hypotheses.empty()) return std::nullopt;
    std::string premise = std::string(kPremisePrefix) + summary.text;
    double total = 0.0;
    for (const std::string& s : hypotheses) total += nli.score(premise, s).entail;
    return total / static_cast<double>(hypotheses.size());
}

double intra_nli(const HighLevelSummary& summary, NliScorer& nli) {
    std::string text = summary.main_body;
    if (summary.has_changes()) {
        text += " ";
        text += summary.changes_section;
    }
    std::vector<std::string> sentences = core::sentence_texts(text);
    if (sentences.empty()) throw ArgumentError("intra_nli: summary has no sentences");
    size_t n = sentences.size();
    if (n == 1) return 1.0;  // vacuously consistent
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            total += 1.0 - nli.score(sentences[i], sentences[j]).contradict;
        }
    }
    return total / static_cast<double>(n * (n - 1));
}

std::optional<double> coherence_score(const TimelineSummary& source,
                                      const HighLevelSummary& summary, LmScorer* lm) {
    if (lm == nullptr) return std::nullopt;
    std::string target = summary.main_body;
    if (summary.has_changes()) {
        target += " ";
        target += summary.changes_section;
    }
    return lm->conditional_loglik(source.text, target);
}

double fluency_ppl(const std::string& text, LmScorer& lm) {
    if (trim(text).empty()) throw ArgumentError("fluency_ppl: empty text");
    return lm.perplexity(text);
}

// ---------------------------------------------------------------------------
// Evidence intersection
// ---------------------------------------------------------------------------

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ArgumentError("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

EvidenceSet evidence_intersection(const std::vector<EvidenceSet>& annotations,
                                  Embedder& embedder) {
    if (annotations.size() < 2) {
        throw ArgumentError("evidence_intersection needs at least two annotators");
    }
    for (const EvidenceSet& set : annotations) set.validate();

    constexpr double kCosineThreshold = 0.60;
    std::vector<std::string> kept;
    auto keep = [&kept](const std::string& span) { kept.push_back(trim(span)); };

    for (size_t i = 0; i < annotations.size(); ++i) {
        for (size_t j = i + 1; j < annotations.size(); ++j) {
            for (const std::string& a : annotations[i].evidences) {
                for (const std::string& b : annotations[j].evidences) {
                    std::string na = normalize_space(to_lower(a));
                    std::string nb = normalize_space(to_lower(b));
                    if (na == nb) {
                        keep(a);
                    } else if (nb.find(na) != std::string::npos) {
                        keep(a);  // a is the contained, shorter span
                    } else if (na.find(nb) != std::string::npos) {
                        keep(b);
                    } else if (cosine(embedder.embed(a), embedder.embed(b)) >= kCosineThreshold) {
                        keep(na.size() <= nb.size() ? a : b);
                    }
                }
            }
        }
    }

    EvidenceSet out;
    out.timeline_id = annotations.front().timeline_id;
    std::set<std::string> seen;
    for (const std::string& span : kept) {
        if (seen.insert(span).second) out.evidences.push_back(span);
    }
    return out;
}

}  // namespace longview::metrics
