#include "longview/text.hpp"

#include <cctype>

namespace longview::core {

namespace {

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<Sentence> split_sentences(std::string_view text) {
    std::vector<Sentence> sentences;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        while (i < n && is_space(text[i])) ++i;
        if (i >= n) break;
        size_t begin = i;
        size_t end = n;
        while (i < n) {
            if (is_terminal(text[i])) {
                size_t run_end = i;
                while (run_end + 1 < n && is_terminal(text[run_end + 1])) ++run_end;
                if (run_end + 1 >= n || is_space(text[run_end + 1])) {
                    end = run_end + 1;
                    i = run_end + 1;
                    break;
                }
                i = run_end + 1;
            } else {
                ++i;
            }
        }
        if (i >= n) end = n;
        // drop trailing whitespace from unterminated final sentences
        while (end > begin && is_space(text[end - 1])) --end;
        if (end > begin) {
            Sentence s;
            s.begin = begin;
            s.end = end;
            s.text = std::string(text.substr(begin, end - begin));
            sentences.push_back(std::move(s));
        }
    }
    return sentences;
}

std::vector<std::string> sentence_texts(std::string_view text) {
    std::vector<std::string> out;
    for (auto& s : split_sentences(text)) out.push_back(std::move(s.text));
    return out;
}

std::vector<Chunk> chunk_text(std::string_view text, size_t cutoff, const Tokenizer& tokenizer) {
    if (cutoff < 1) throw ArgumentError("chunk cutoff must be >= 1");
    std::vector<Chunk> chunks;
    std::string current_text;
    size_t current_tokens = 0;

    auto flush = [&] {
        if (current_tokens > 0) {
            chunks.push_back(Chunk{current_text, current_tokens});
            current_text.clear();
            current_tokens = 0;
        }
    };
    auto append_piece = [&](const std::string& piece, size_t tokens) {
        if (current_tokens + tokens > cutoff) flush();
        if (!current_text.empty()) current_text.push_back(' ');
        current_text += piece;
        current_tokens += tokens;
    };

    for (const Sentence& sentence : split_sentences(text)) {
        std::string norm = normalize_space(sentence.text);
        std::vector<std::string> tokens = tokenizer.tokenize(norm);
        if (tokens.empty()) continue;
        if (tokens.size() <= cutoff) {
            append_piece(norm, tokens.size());
            continue;
        }
        // oversized sentence: hard-split at token boundaries
        flush();
        for (size_t start = 0; start < tokens.size(); start += cutoff) {
            size_t count = std::min(cutoff, tokens.size() - start);
            std::string piece = tokens[start];
            for (size_t j = 1; j < count; ++j) {
                piece.push_back(' ');
                piece += tokens[start + j];
            }
            append_piece(piece, count);
        }
    }
    flush();
    return chunks;
}

}  // namespace longview::core
