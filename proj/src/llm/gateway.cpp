#include "longview/llm/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

namespace longview::llm {

using nlohmann::json;

void PromptRequest::validate() const {
    if (max_new_tokens < 1) throw ArgumentError("max_new_tokens must be >= 1");
    if (temperature < 0.0) throw ArgumentError("temperature must be >= 0");
}

void BackendConfig::validate() const {
    if (kind == BackendKind::HttpChat && !endpoint_url.has_value()) {
        throw ConfigError("HTTP_CHAT backend requires endpoint_url");
    }
    if (timeout_s <= 0.0) throw ConfigError("timeout_s must be positive");
    if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

// ---------------------------------------------------------------------------
// Prompt rendering
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kSystemMark = "<<SYSTEM>>";
constexpr std::string_view kExInMark = "<<EXAMPLE_INPUT>>";
constexpr std::string_view kExOutMark = "<<EXAMPLE_OUTPUT>>";
constexpr std::string_view kInputMark = "<<INPUT>>";
constexpr std::string_view kOutputMark = "<<OUTPUT>>";

bool is_marker_like(std::string_view line) {
    size_t i = 0;
    while (i < line.size() && line[i] == '\\') ++i;
    return starts_with(line.substr(i), "<<");
}

void append_body(std::string& out, std::string_view body) {
    for (const std::string& line : split_lines(body)) {
        if (is_marker_like(line)) out.push_back('\\');
        out += line;
        out.push_back('\n');
    }
}

std::string unescape_body(const std::vector<std::string>& lines) {
    std::string out;
    for (size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (!line.empty() && line.front() == '\\' && is_marker_like(line.substr(1))) {
            line.remove_prefix(1);
        }
        if (i) out.push_back('\n');
        out += line;
    }
    return out;
}

}  // namespace

std::string render_prompt(const PromptRequest& request) {
    std::string out;
    out += kSystemMark;
    out.push_back('\n');
    append_body(out, request.system_instruction);
    for (const FewShotBlock& block : request.few_shot_blocks) {
        out += kExInMark;
        out.push_back('\n');
        append_body(out, block.input);
        out += kExOutMark;
        out.push_back('\n');
        append_body(out, block.output);
    }
    out += kInputMark;
    out.push_back('\n');
    append_body(out, request.user_content);
    out += kOutputMark;
    out.push_back('\n');
    return out;
}

PromptRequest parse_prompt(const std::string& rendered) {
    PromptRequest request;
    std::vector<std::string> lines = split_lines(rendered);
    if (!lines.empty() && lines.back().empty()) lines.pop_back();

    std::vector<std::string> body;
    std::string section;
    std::string pending_example_input;
    bool have_example_input = false;

    auto close_section = [&](const std::string& next) {
        std::string text = unescape_body(body);
        body.clear();
        if (section == kSystemMark) {
            request.system_instruction = text;
        } else if (section == kExInMark) {
            pending_example_input = text;
            have_example_input = true;
        } else if (section == kExOutMark) {
            if (!have_example_input) throw ProtocolError("example output without input");
            request.few_shot_blocks.push_back({pending_example_input, text});
            have_example_input = false;
        } else if (section == kInputMark) {
            request.user_content = text;
        } else if (!section.empty()) {
            throw ProtocolError("unknown prompt section: " + section);
        }
        section = next;
    };

    for (const std::string& line : lines) {
        if (line == kSystemMark || line == kExInMark || line == kExOutMark ||
            line == kInputMark || line == kOutputMark) {
            close_section(line);
        } else {
            body.push_back(line);
        }
    }
    close_section("");
    return request;
}

// ---------------------------------------------------------------------------
// Stub backend
// ---------------------------------------------------------------------------

namespace {

// No first-person pronouns here; the high-level summarizer asserts their
// absence in stub-mode output.
constexpr const char* kStubWords[] = {
    "steady",  "findings", "suggest", "gradual",  "support", "patterns", "remain",  "notable",
    "changes", "appear",   "between", "sessions", "overall", "signals",  "reflect", "ongoing",
    "themes",  "emerge",   "across",  "entries",  "careful", "review",   "shows",   "context",
};
constexpr size_t kStubWordCount = sizeof(kStubWords) / sizeof(kStubWords[0]);

}  // namespace

LlmResponse StubGateway::complete(const PromptRequest& request) {
    request.validate();
    config_.validate();
    LlmResponse response;
    response.backend_id = backend_id();
    response.latency_ms = 0;

    for (const FewShotBlock& block : request.few_shot_blocks) {
        if (block.input == request.user_content) {
            response.text = block.output;
            response.finish_reason = FinishReason::Stop;
            return response;
        }
    }

    std::uint64_t digest = fnv1a64(render_prompt(request));
    digest = fnv1a64_mix(digest, request.seed.value_or(0));

    constexpr int kSentenceLength = 6;
    int count = std::min(kSentenceLength, request.max_new_tokens);
    std::string text;
    for (int i = 0; i < count; ++i) {
        digest = fnv1a64_mix(digest, static_cast<std::uint64_t>(i) + 1);
        std::string word = kStubWords[digest % kStubWordCount];
        if (i == 0) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
        if (i) text.push_back(' ');
        text += word;
    }
    text.push_back('.');
    response.text = text;
    response.finish_reason =
        count < kSentenceLength ? FinishReason::Length : FinishReason::Stop;
    return response;
}

// ---------------------------------------------------------------------------
// Local backend hook
// ---------------------------------------------------------------------------

LlmResponse LocalGateway::complete(const PromptRequest& request) {
    request.validate();
    if (!fn_) throw GatewayError("no local model registered", backend_id(), 0);
    auto start = std::chrono::steady_clock::now();
    LlmResponse response;
    response.text = fn_(render_prompt(request), request);
    response.finish_reason = FinishReason::Stop;
    response.backend_id = backend_id();
    response.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    return response;
}

// ---------------------------------------------------------------------------
// HTTP chat backend
// ---------------------------------------------------------------------------

namespace {

struct ConcurrencyLimiter {
    explicit ConcurrencyLimiter(int limit) : available(limit) {}
    std::mutex mu;
    std::condition_variable cv;
    int available;

    struct Slot {
        ConcurrencyLimiter& limiter;
        explicit Slot(ConcurrencyLimiter& l) : limiter(l) {
            std::unique_lock<std::mutex> lock(limiter.mu);
            limiter.cv.wait(lock, [&] { return limiter.available > 0; });
            --limiter.available;
        }
        ~Slot() {
            {
                std::lock_guard<std::mutex> lock(limiter.mu);
                ++limiter.available;
            }
            limiter.cv.notify_one();
        }
    };
};

const json* walk_path(const json& root, const std::string& dotted) {
    const json* node = &root;
    size_t start = 0;
    while (start <= dotted.size()) {
        size_t dot = dotted.find('.', start);
        std::string seg = dotted.substr(start, dot == std::string::npos ? dot : dot - start);
        if (seg.empty()) return nullptr;
        if (node->is_array()) {
            size_t idx = 0;
            try {
                idx = std::stoul(seg);
            } catch (...) {
                return nullptr;
            }
            if (idx >= node->size()) return nullptr;
            node = &(*node)[idx];
        } else if (node->is_object()) {
            auto it = node->find(seg);
            if (it == node->end()) return nullptr;
            node = &*it;
        } else {
            return nullptr;
        }
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return node;
}

struct ParsedUrl {
    bool https = false;
    std::string host;
    int port = 80;
    std::string path = "/";
};

ParsedUrl parse_url(const std::string& url) {
    ParsedUrl out;
    std::string rest;
    if (starts_with(url, "http://")) {
        rest = url.substr(7);
    } else if (starts_with(url, "https://")) {
        out.https = true;
        out.port = 443;
        rest = url.substr(8);
    } else {
        throw ConfigError("endpoint_url must start with http:// or https://: " + url);
    }
    size_t slash = rest.find('/');
    std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    if (slash != std::string::npos) out.path = rest.substr(slash);
    size_t colon = hostport.find(':');
    if (colon == std::string::npos) {
        out.host = hostport;
    } else {
        out.host = hostport.substr(0, colon);
        out.port = std::stoi(hostport.substr(colon + 1));
    }
    if (out.host.empty()) throw ConfigError("endpoint_url has no host: " + url);
    return out;
}

json build_chat_payload(const PromptRequest& request, const std::string& model) {
    json messages = json::array();
    if (!request.system_instruction.empty()) {
        messages.push_back({{"role", "system"}, {"content", request.system_instruction}});
    }
    for (const FewShotBlock& block : request.few_shot_blocks) {
        messages.push_back({{"role", "user"}, {"content", block.input}});
        messages.push_back({{"role", "assistant"}, {"content", block.output}});
    }
    messages.push_back({{"role", "user"}, {"content", request.user_content}});
    json payload = {{"model", model},
                    {"messages", messages},
                    {"max_tokens", request.max_new_tokens},
                    {"temperature", request.temperature}};
    if (request.seed.has_value()) payload["seed"] = *request.seed;
    return payload;
}

}  // namespace

HttpChatGateway::HttpChatGateway(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
    std::string url = config_.endpoint_url.value_or("");
    if (const char* env_url = std::getenv("LONGVIEW_LLM_URL")) url = env_url;
    ParsedUrl parsed = parse_url(url);
    host_ = parsed.host;
    port_ = parsed.port;
    path_ = parsed.path;
    https_ = parsed.https;
    limiter_ = std::make_shared<ConcurrencyLimiter>(std::max(1, config_.max_concurrent));
}

LlmResponse HttpChatGateway::complete(const PromptRequest& request) {
    request.validate();
    const char* api_key = std::getenv("LONGVIEW_LLM_API_KEY");
    if (api_key == nullptr || *api_key == '\0') {
        throw GatewayError("LONGVIEW_LLM_API_KEY is not set", backend_id(), 0);
    }

    ConcurrencyLimiter::Slot slot(*static_cast<ConcurrencyLimiter*>(limiter_.get()));

    const json payload = build_chat_payload(request, config_.model_name);
    const std::string body = payload.dump();
    const int attempts_allowed = config_.max_retries + 1;
    std::string last_error;

    auto start = std::chrono::steady_clock::now();
    for (int attempt = 0; attempt < attempts_allowed; ++attempt) {
        if (attempt > 0) {
            int backoff = config_.backoff_base_ms * (1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        }
        httplib::Result result = [&] {
            auto seconds = std::chrono::duration<double>(config_.timeout_s);
            httplib::Headers headers = {{"Authorization", std::string("Bearer ") + api_key}};
            if (https_) {
                httplib::SSLClient client(host_, port_);
                client.set_connection_timeout(seconds);
                client.set_read_timeout(seconds);
                client.set_write_timeout(seconds);
                return client.Post(path_, headers, body, "application/json");
            }
            httplib::Client client(host_, port_);
            client.set_connection_timeout(seconds);
            client.set_read_timeout(seconds);
            client.set_write_timeout(seconds);
            return client.Post(path_, headers, body, "application/json");
        }();

        if (!result) {
            last_error = httplib::to_string(result.error());
            continue;
        }
        if (result->status >= 500) {
            last_error = "server status " + std::to_string(result->status);
            continue;
        }
        if (result->status != 200) {
            throw ProtocolError("backend returned status " + std::to_string(result->status) +
                                ": " + result->body);
        }

        json parsed;
        try {
            parsed = json::parse(result->body);
        } catch (const json::exception& e) {
            throw ProtocolError(std::string("malformed backend payload: ") + e.what());
        }
        const json* content = walk_path(parsed, config_.response_path);
        if (content == nullptr || !content->is_string()) {
            throw ProtocolError("response path '" + config_.response_path +
                                "' missing or not a string");
        }

        LlmResponse response;
        response.text = content->get<std::string>();
        response.finish_reason = FinishReason::Stop;
        // Sibling finish_reason, when the path points inside a choice object.
        size_t last_dot = config_.response_path.rfind('.');
        if (last_dot != std::string::npos) {
            size_t parent_dot = config_.response_path.rfind('.', last_dot - 1);
            if (parent_dot != std::string::npos) {
                const json* choice =
                    walk_path(parsed, config_.response_path.substr(0, parent_dot));
                if (choice != nullptr && choice->is_object()) {
                    auto it = choice->find("finish_reason");
                    if (it != choice->end() && it->is_string() && *it == "length") {
                        response.finish_reason = FinishReason::Length;
                    }
                }
            }
        }
        if (response.text.empty()) {
            throw ProtocolError("backend returned empty completion text");
        }
        response.backend_id = backend_id();
        response.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
        return response;
    }
    throw GatewayError("transport failure after " + std::to_string(attempts_allowed) +
                           " attempts: " + last_error,
                       backend_id(), attempts_allowed);
}

// ---------------------------------------------------------------------------

std::unique_ptr<Gateway> make_gateway(const BackendConfig& config, LocalModelFn local_fn) {
    config.validate();
    switch (config.kind) {
        case BackendKind::Stub: return std::make_unique<StubGateway>(config);
        case BackendKind::Local: return std::make_unique<LocalGateway>(config, std::move(local_fn));
        case BackendKind::HttpChat: return std::make_unique<HttpChatGateway>(config);
    }
    throw ConfigError("unknown backend kind");
}

LlmResponse complete(const PromptRequest& request, const BackendConfig& config) {
    return make_gateway(config)->complete(request);
}

}  // namespace longview::llm
