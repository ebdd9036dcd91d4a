#include "longview/keyphrase.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace longview::keyphrase {

using nlohmann::json;

void FewShotExample::validate() const {
    if (trim(segment_text).empty()) throw ValidationError("exemplar has empty segment_text");
    std::string haystack = to_lower(segment_text);
    for (const std::string& phrase : phrases) {
        if (haystack.find(to_lower(phrase)) == std::string::npos) {
            throw ValidationError("exemplar phrase '" + phrase +
                                  "' does not occur verbatim in its segment text");
        }
    }
}

std::vector<std::string> KeyPhraseSet::texts() const {
    std::vector<std::string> out;
    out.reserve(phrases.size());
    for (const KeyPhrase& p : phrases) out.push_back(p.text);
    return out;
}

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

namespace {

std::set<std::string> char_trigrams(std::string_view s) {
    std::set<std::string> grams;
    if (s.size() < 3) return grams;
    for (size_t i = 0; i + 3 <= s.size(); ++i) grams.insert(std::string(s.substr(i, 3)));
    return grams;
}

double trigram_overlap(const std::set<std::string>& phrase_grams, std::string_view window) {
    if (phrase_grams.empty()) return 0.0;
    size_t hits = 0;
    if (window.size() >= 3) {
        std::set<std::string> seen;
        for (size_t i = 0; i + 3 <= window.size(); ++i) {
            std::string g(window.substr(i, 3));
            if (phrase_grams.count(g) && seen.insert(g).second) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(phrase_grams.size());
}

}  // namespace

KeyPhrase align_phrase(const std::string& phrase, const core::Segment& segment,
                       const AlignOptions& options) {
    std::string needle = trim(phrase);
    if (needle.empty()) throw ArgumentError("phrase is empty");
    std::string needle_lower = to_lower(needle);

    KeyPhrase result;
    result.text = needle;

    // exact case-insensitive substring, earliest post wins
    for (size_t pi = 0; pi < segment.posts.size(); ++pi) {
        std::string haystack = to_lower(segment.posts[pi].text);
        size_t pos = haystack.find(needle_lower);
        if (pos != std::string::npos) {
            result.post_index = static_cast<int>(pi);
            result.char_span = {pos, pos + needle_lower.size()};
            result.aligned = true;
            return result;
        }
    }

    // best window by character 3-gram overlap
    std::set<std::string> grams = char_trigrams(needle_lower);
    double best = 0.0;
    for (size_t pi = 0; pi < segment.posts.size(); ++pi) {
        std::string haystack = to_lower(segment.posts[pi].text);
        if (haystack.size() < needle_lower.size()) continue;
        for (size_t off = 0; off + needle_lower.size() <= haystack.size(); ++off) {
            std::string_view window(haystack.data() + off, needle_lower.size());
            double overlap = trigram_overlap(grams, window);
            if (overlap > best) {
                best = overlap;
                result.post_index = static_cast<int>(pi);
                result.char_span = {off, off + needle_lower.size()};
            }
        }
    }
    if (best >= options.trigram_threshold && result.char_span.has_value()) {
        result.aligned = true;
    } else {
        result.post_index = -1;
        result.char_span.reset();
        result.aligned = false;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Prompting
// ---------------------------------------------------------------------------

llm::PromptRequest build_keyphrase_prompt(const core::Segment& segment,
                                          const std::vector<FewShotExample>& examples) {
    if (examples.empty()) throw ArgumentError("key-phrase extraction needs at least one exemplar");
    llm::PromptRequest request;
    request.system_instruction =
        "Extract short key phrases indicative of the writer's mental health from the posts: "
        "mood, relationships, behaviours, and events tied to their mental state. "
        "Copy phrases verbatim from the text. Write one phrase per line and nothing else.";
    size_t budget = 0;
    for (const FewShotExample& example : examples) {
        size_t tokens = 0;
        for (const std::string& phrase : example.phrases) {
            tokens += whitespace_tokens(phrase).size();
        }
        budget = std::max(budget, tokens);
        request.few_shot_blocks.push_back({example.segment_text, join(example.phrases, "\n")});
    }
    request.user_content = segment.joined_text();
    request.max_new_tokens = static_cast<int>(std::max<size_t>(16, 4 * budget));
    request.temperature = 0.0;
    return request;
}

std::vector<std::string> parse_phrase_response(const std::string& response) {
    std::vector<std::string> raw;
    for (const std::string& line : split_lines(response)) {
        size_t start = 0;
        for (size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ';') {
                raw.emplace_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
    }
    std::vector<std::string> phrases;
    std::set<std::string> seen;
    for (std::string& item : raw) {
        std::string p = trim(item);
        // tolerate bullet prefixes from instruction drift
        while (!p.empty() && (p.front() == '-' || p.front() == '*' || p.front() == '>')) {
            p = trim(p.substr(1));
        }
        if (p.empty()) continue;
        std::string key = normalize_space(to_lower(p));
        if (seen.insert(key).second) phrases.push_back(p);
    }
    return phrases;
}

KeyPhraseSet extract_keyphrases(const core::Segment& segment,
                                const std::vector<FewShotExample>& examples,
                                llm::Gateway& gateway, const AlignOptions& options) {
    llm::PromptRequest request = build_keyphrase_prompt(segment, examples);
    llm::LlmResponse response = gateway.complete(request);

    KeyPhraseSet set;
    set.segment_index = segment.segment_index;
    std::vector<KeyPhrase> aligned;
    std::vector<KeyPhrase> unaligned;
    for (const std::string& phrase : parse_phrase_response(response.text)) {
        KeyPhrase kp = align_phrase(phrase, segment, options);
        (kp.aligned ? aligned : unaligned).push_back(std::move(kp));
    }
    std::stable_sort(aligned.begin(), aligned.end(), [](const KeyPhrase& a, const KeyPhrase& b) {
        if (a.post_index != b.post_index) return a.post_index < b.post_index;
        return a.char_span->first < b.char_span->first;
    });
    set.phrases = std::move(aligned);
    set.phrases.insert(set.phrases.end(), unaligned.begin(), unaligned.end());
    return set;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

FewShotExample read_exemplar_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open exemplar file: " + path);
    json obj;
    try {
        in >> obj;
    } catch (const json::exception& e) {
        throw ValidationError("exemplar file " + path + ": " + e.what());
    }
    FewShotExample example;
    example.segment_text = obj.at("segment_text").get<std::string>();
    for (const json& p : obj.at("phrases")) example.phrases.push_back(p.get<std::string>());
    example.validate();
    return example;
}

std::vector<FewShotExample> read_exemplar_dir(const std::string& dir) {
    std::vector<std::string> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw IoError("no .json exemplar files in " + dir);
    std::vector<FewShotExample> examples;
    for (const std::string& path : paths) examples.push_back(read_exemplar_file(path));
    return examples;
}

std::string keyphrases_to_jsonl(const std::string& timeline_id,
                                const std::vector<KeyPhraseSet>& sets) {
    std::ostringstream out;
    for (const KeyPhraseSet& set : sets) {
        json phrases = json::array();
        for (const KeyPhrase& p : set.phrases) {
            json span = nullptr;
            if (p.char_span) span = json::array({p.char_span->first, p.char_span->second});
            phrases.push_back({{"text", p.text},
                               {"post_index", p.post_index},
                               {"char_span", span},
                               {"aligned", p.aligned}});
        }
        json obj = {{"timeline_id", timeline_id},
                    {"segment_index", set.segment_index},
                    {"phrases", phrases}};
        out << obj.dump() << '\n';
    }
    return out.str();
}

std::vector<std::pair<std::string, KeyPhraseSet>> read_keyphrases_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open key-phrase file: " + path);
    std::vector<std::pair<std::string, KeyPhraseSet>> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            json obj = json::parse(line);
            KeyPhraseSet set;
            set.segment_index = obj.at("segment_index").get<int>();
            for (const json& p : obj.at("phrases")) {
                KeyPhrase kp;
                kp.text = p.at("text").get<std::string>();
                kp.post_index = p.at("post_index").get<int>();
                if (!p.at("char_span").is_null()) {
                    kp.char_span = {p.at("char_span")[0].get<size_t>(),
                                    p.at("char_span")[1].get<size_t>()};
                }
                kp.aligned = p.at("aligned").get<bool>();
                set.phrases.push_back(std::move(kp));
            }
            out.emplace_back(obj.at("timeline_id").get<std::string>(), std::move(set));
        } catch (const json::exception& e) {
            throw ValidationError("key-phrase file " + path + " line " + std::to_string(line_no) +
                                  ": " + e.what());
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second.segment_index < b.second.segment_index;
    });
    return out;
}

}  // namespace longview::keyphrase
