#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "longview/common.hpp"

namespace longview::core {

// Moments-of-change tags attached to each post. "0" marks no change.
enum class MocLabel { None, Is, Isb, Ie, Iep };

enum class MoodPhase { Neutral, Switch, Escalation };

MocLabel parse_moc_label(std::string_view tag);  // throws ValidationError on unknown tags
std::string_view moc_label_tag(MocLabel label);

// Total mapping: {0}->Neutral, {IS,ISB}->Switch, {IE,IEP}->Escalation.
MoodPhase moc_group(MocLabel label);
std::string_view mood_phase_name(MoodPhase phase);

struct Post {
    std::string post_id;
    std::int64_t timestamp_utc = 0;  // seconds since epoch
    std::string text;
    MocLabel label = MocLabel::None;
};

struct Timeline {
    std::string timeline_id;
    std::string user_id;
    std::vector<Post> posts;
};

struct Segment {
    int segment_index = 0;
    MoodPhase phase = MoodPhase::Neutral;
    std::vector<Post> posts;
    std::string source_timeline_id;

    // Post texts joined with newlines; the unit fed to key-phrase extraction
    // and segment encoding.
    std::string joined_text() const;
};

// Hard errors: empty posts, empty post text, decreasing timestamps.
// Returns soft warnings (e.g. post count outside the typical [12,124] range).
std::vector<std::string> validate_timeline(const Timeline& timeline);

// Maximal runs of consecutive posts sharing a MoodPhase, in order.
std::vector<Segment> segment_timeline(const Timeline& timeline);

}  // namespace longview::core
