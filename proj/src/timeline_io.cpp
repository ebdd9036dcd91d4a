#include "longview/timeline_io.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace longview::core {

using nlohmann::json;

std::int64_t parse_iso8601_utc(std::string_view text) {
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    int consumed = 0;
    std::string s(text);
    if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &year, &month, &day, &hour, &minute,
                    &second, &consumed) != 6) {
        throw ValidationError("invalid ISO-8601 timestamp: '" + s + "'");
    }
    std::string_view rest = text.substr(static_cast<size_t>(consumed));
    if (!rest.empty() && rest.front() == '.') {
        size_t i = 1;
        while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) ++i;
        rest = rest.substr(i);
    }
    if (rest != "Z" && rest != "+00:00") {
        throw ValidationError("timestamp must be UTC ('Z'): '" + s + "'");
    }
    std::tm tm{};
    tm.tm_year = year - 1900;
    tm.tm_mon = month - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = minute;
    tm.tm_sec = second;
    time_t t = timegm(&tm);
    if (t == static_cast<time_t>(-1)) {
        throw ValidationError("timestamp out of range: '" + s + "'");
    }
    return static_cast<std::int64_t>(t);
}

std::string format_iso8601_utc(std::int64_t seconds) {
    time_t t = static_cast<time_t>(seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return std::string(buf);
}

namespace {

void warn_unknown_fields(const json& obj, std::initializer_list<const char*> known,
                         const std::string& where, const WarningSink& warn) {
    if (!warn) return;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool found = false;
        for (const char* k : known) {
            if (it.key() == k) {
                found = true;
                break;
            }
        }
        if (!found) warn("ignoring unknown field '" + it.key() + "' in " + where);
    }
}

Timeline parse_timeline(const json& obj, const WarningSink& warn) {
    if (!obj.is_object()) throw ValidationError("timeline record is not a JSON object");
    warn_unknown_fields(obj, {"timeline_id", "user_id", "posts"}, "timeline record", warn);
    Timeline t;
    t.timeline_id = obj.at("timeline_id").get<std::string>();
    t.user_id = obj.at("user_id").get<std::string>();
    for (const json& p : obj.at("posts")) {
        warn_unknown_fields(p, {"post_id", "timestamp", "text", "moc_label"},
                            "post of timeline '" + t.timeline_id + "'", warn);
        Post post;
        post.post_id = p.at("post_id").get<std::string>();
        post.timestamp_utc = parse_iso8601_utc(p.at("timestamp").get<std::string>());
        post.text = p.at("text").get<std::string>();
        post.label = parse_moc_label(p.at("moc_label").get<std::string>());
        t.posts.push_back(std::move(post));
    }
    return t;
}

}  // namespace

std::vector<Timeline> read_timelines_jsonl(std::istream& in, const WarningSink& warn) {
    std::vector<Timeline> timelines;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError("timelines line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            timelines.push_back(parse_timeline(obj, warn));
        } catch (const json::exception& e) {
            throw ValidationError("timelines line " + std::to_string(line_no) + ": " + e.what());
        }
        auto warnings = validate_timeline(timelines.back());
        if (warn) {
            for (const auto& w : warnings) warn(w);
        }
    }
    return timelines;
}

std::vector<Timeline> read_timelines_file(const std::string& path, const WarningSink& warn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open timelines file: " + path);
    return read_timelines_jsonl(in, warn);
}

void write_timelines_jsonl(std::ostream& out, const std::vector<Timeline>& timelines) {
    for (const Timeline& t : timelines) {
        json posts = json::array();
        for (const Post& p : t.posts) {
            posts.push_back({{"post_id", p.post_id},
                             {"timestamp", format_iso8601_utc(p.timestamp_utc)},
                             {"text", p.text},
                             {"moc_label", std::string(moc_label_tag(p.label))}});
        }
        json obj = {{"timeline_id", t.timeline_id}, {"user_id", t.user_id}, {"posts", posts}};
        out << obj.dump() << '\n';
    }
}

std::string segments_to_jsonl(const std::vector<std::vector<Segment>>& per_timeline) {
    std::ostringstream out;
    for (const auto& segments : per_timeline) {
        for (const Segment& seg : segments) {
            json post_ids = json::array();
            for (const Post& p : seg.posts) post_ids.push_back(p.post_id);
            json obj = {{"timeline_id", seg.source_timeline_id},
                        {"segment_index", seg.segment_index},
                        {"phase", std::string(mood_phase_name(seg.phase))},
                        {"post_ids", post_ids},
                        {"text", seg.joined_text()}};
            out << obj.dump() << '\n';
        }
    }
    return out.str();
}

}  // namespace longview::core
