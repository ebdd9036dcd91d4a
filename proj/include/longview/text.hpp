#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "longview/common.hpp"

namespace longview::core {

struct Sentence {
    std::string text;
    size_t begin = 0;  // char offsets into the source string
    size_t end = 0;
};

// Deterministic rule: a sentence ends at a run of {. ! ?} followed by
// whitespace or end of input. No abbreviation guard. Surrounding whitespace
// is excluded from the sentence span.
std::vector<Sentence> split_sentences(std::string_view text);

std::vector<std::string> sentence_texts(std::string_view text);

// Token counting behind the chunker. The active NLI backend may supply its
// own tokenizer; the stub counts whitespace tokens.
class Tokenizer {
  public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
    size_t count(std::string_view text) const { return tokenize(text).size(); }
};

class WhitespaceTokenizer final : public Tokenizer {
  public:
    std::vector<std::string> tokenize(std::string_view text) const override {
        return whitespace_tokens(text);
    }
};

struct Chunk {
    std::string text;
    size_t token_count = 0;
};

// Greedy packing of whole sentences into chunks of at most `cutoff` tokens.
// A single sentence longer than the cutoff is hard-split at token boundaries.
// Chunk texts are whitespace-normalized sentence joins.
std::vector<Chunk> chunk_text(std::string_view text, size_t cutoff, const Tokenizer& tokenizer);

}  // namespace longview::core
