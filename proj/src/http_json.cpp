#include "http_json.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace longview {

nlohmann::json http_post_json(const std::string& url, const nlohmann::json& payload) {
    httplib::Result result = [&]() -> httplib::Result {
        size_t scheme_end = url.find("://");
        if (scheme_end == std::string::npos) throw ConfigError("bad url: " + url);
        size_t path_start = url.find('/', scheme_end + 3);
        std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
        std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
        httplib::Client client(origin);
        client.set_connection_timeout(std::chrono::seconds(30));
        client.set_read_timeout(std::chrono::seconds(120));
        return client.Post(path, payload.dump(), "application/json");
    }();
    if (!result) {
        throw IoError("HTTP POST " + url + " failed: " + httplib::to_string(result.error()));
    }
    if (result->status != 200) {
        throw ValidationError("HTTP POST " + url + " returned status " +
                              std::to_string(result->status));
    }
    try {
        return nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed JSON response: ") + e.what());
    }
}

}  // namespace longview
