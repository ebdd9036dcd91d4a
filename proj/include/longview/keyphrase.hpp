#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "longview/llm/gateway.hpp"
#include "longview/timeline.hpp"

namespace longview::keyphrase {

struct FewShotExample {
    std::string segment_text;
    std::vector<std::string> phrases;

    // Every phrase must occur verbatim (case-insensitive) in segment_text.
    void validate() const;
};

struct KeyPhrase {
    std::string text;
    int post_index = -1;
    std::optional<std::pair<size_t, size_t>> char_span;  // offsets into the post text
    bool aligned = false;
};

struct KeyPhraseSet {
    int segment_index = 0;
    std::vector<KeyPhrase> phrases;

    std::vector<std::string> texts() const;
};

struct AlignOptions {
    // Minimum character-3-gram overlap for fuzzy window alignment.
    double trigram_threshold = 0.8;
};

// Exact case-insensitive substring match across the segment's posts, else the
// best contiguous window by character 3-gram overlap (accepted at or above
// the threshold), else unaligned with post_index -1.
KeyPhrase align_phrase(const std::string& phrase, const core::Segment& segment,
                       const AlignOptions& options = {});

llm::PromptRequest build_keyphrase_prompt(const core::Segment& segment,
                                          const std::vector<FewShotExample>& examples);

// Newline/semicolon-separated phrases from the raw LLM response, deduplicated
// on normalized text.
std::vector<std::string> parse_phrase_response(const std::string& response);

KeyPhraseSet extract_keyphrases(const core::Segment& segment,
                                const std::vector<FewShotExample>& examples,
                                llm::Gateway& gateway, const AlignOptions& options = {});

// Exemplar file: {"segment_text": str, "phrases": [str...]}.
FewShotExample read_exemplar_file(const std::string& path);
std::vector<FewShotExample> read_exemplar_dir(const std::string& dir);

std::string keyphrases_to_jsonl(const std::string& timeline_id,
                                const std::vector<KeyPhraseSet>& sets);
// Keyed by timeline id, ordered by segment_index.
std::vector<std::pair<std::string, KeyPhraseSet>> read_keyphrases_jsonl(const std::string& path);

}  // namespace longview::keyphrase
