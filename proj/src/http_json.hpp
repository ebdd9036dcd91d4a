#pragma once

#include <string>

#include <json.hpp>

#include "longview/common.hpp"

namespace longview {

// One-shot JSON POST; throws IoError on transport failure, ValidationError on
// a non-200 status or a malformed body.
nlohmann::json http_post_json(const std::string& url, const nlohmann::json& payload);

}  // namespace longview
