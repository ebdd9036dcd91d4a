#include "longview/timeline.hpp"

namespace longview::core {

MocLabel parse_moc_label(std::string_view tag) {
    if (tag == "0") return MocLabel::None;
    if (tag == "IS") return MocLabel::Is;
    if (tag == "ISB") return MocLabel::Isb;
    if (tag == "IE") return MocLabel::Ie;
    if (tag == "IEP") return MocLabel::Iep;
    throw ValidationError("unknown MoC label: '" + std::string(tag) + "'");
}

std::string_view moc_label_tag(MocLabel label) {
    switch (label) {
        case MocLabel::None: return "0";
        case MocLabel::Is: return "IS";
        case MocLabel::Isb: return "ISB";
        case MocLabel::Ie: return "IE";
        case MocLabel::Iep: return "IEP";
    }
    return "0";
}

MoodPhase moc_group(MocLabel label) {
    switch (label) {
        case MocLabel::None: return MoodPhase::Neutral;
        case MocLabel::Is:
        case MocLabel::Isb: return MoodPhase::Switch;
        case MocLabel::Ie:
        case MocLabel::Iep: return MoodPhase::Escalation;
    }
    return MoodPhase::Neutral;
}

std::string_view mood_phase_name(MoodPhase phase) {
    switch (phase) {
        case MoodPhase::Neutral: return "NEUTRAL";
        case MoodPhase::Switch: return "SWITCH";
        case MoodPhase::Escalation: return "ESCALATION";
    }
    return "NEUTRAL";
}

std::string Segment::joined_text() const {
    std::string out;
    for (size_t i = 0; i < posts.size(); ++i) {
        if (i) out.push_back('\n');
        out += posts[i].text;
    }
    return out;
}

std::vector<std::string> validate_timeline(const Timeline& timeline) {
    if (timeline.posts.empty()) {
        throw ValidationError("timeline '" + timeline.timeline_id + "' has no posts");
    }
    for (size_t i = 0; i < timeline.posts.size(); ++i) {
        if (trim(timeline.posts[i].text).empty()) {
            throw ValidationError("timeline '" + timeline.timeline_id + "' post " +
                                  std::to_string(i) + " has empty text");
        }
        if (i > 0 && timeline.posts[i].timestamp_utc < timeline.posts[i - 1].timestamp_utc) {
            throw ValidationError("timeline '" + timeline.timeline_id +
                                  "' timestamps decrease at post " + std::to_string(i));
        }
    }
    std::vector<std::string> warnings;
    size_t n = timeline.posts.size();
    if (n < 12 || n > 124) {
        warnings.push_back("timeline '" + timeline.timeline_id + "' has " + std::to_string(n) +
                           " posts, outside the typical [12,124] range");
    }
    return warnings;
}

std::vector<Segment> segment_timeline(const Timeline& timeline) {
    validate_timeline(timeline);
    std::vector<Segment> segments;
    for (const Post& post : timeline.posts) {
        MoodPhase phase = moc_group(post.label);
        if (segments.empty() || segments.back().phase != phase) {
            Segment seg;
            seg.segment_index = static_cast<int>(segments.size());
            seg.phase = phase;
            seg.source_timeline_id = timeline.timeline_id;
            segments.push_back(std::move(seg));
        }
        segments.back().posts.push_back(post);
    }
    return segments;
}

}  // namespace longview::core
