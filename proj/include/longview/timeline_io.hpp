#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "longview/timeline.hpp"

namespace longview::core {

using WarningSink = std::function<void(const std::string&)>;

// "YYYY-MM-DDTHH:MM:SSZ" (optional fractional seconds, ignored). Strict UTC.
std::int64_t parse_iso8601_utc(std::string_view text);
std::string format_iso8601_utc(std::int64_t seconds);

// One timeline per line. Unknown moc_label values are errors; unknown extra
// fields are ignored with a warning.
std::vector<Timeline> read_timelines_jsonl(std::istream& in, const WarningSink& warn = {});
std::vector<Timeline> read_timelines_file(const std::string& path, const WarningSink& warn = {});

void write_timelines_jsonl(std::ostream& out, const std::vector<Timeline>& timelines);

std::string segments_to_jsonl(const std::vector<std::vector<Segment>>& per_timeline);

}  // namespace longview::core
