#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "longview/common.hpp"

namespace longview::llm {

struct FewShotBlock {
    std::string input;
    std::string output;
};

struct PromptRequest {
    std::string system_instruction;
    std::string user_content;
    int max_new_tokens = 256;
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
    std::vector<FewShotBlock> few_shot_blocks;

    void validate() const;
};

enum class FinishReason { Stop, Length, Error };

struct LlmResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::Stop;
    std::int64_t latency_ms = 0;
    std::string backend_id;
};

enum class BackendKind { HttpChat, Local, Stub };

struct BackendConfig {
    BackendKind kind = BackendKind::Stub;
    std::optional<std::string> endpoint_url;  // required iff kind == HttpChat
    std::string model_name = "stub";
    double timeout_s = 30.0;
    int max_retries = 2;
    // JSON pointer-ish dotted path into the HTTP response, e.g.
    // "choices.0.message.content".
    std::string response_path = "choices.0.message.content";
    int backoff_base_ms = 100;
    int max_concurrent = 4;

    void validate() const;
};

struct GatewayError : std::runtime_error {
    GatewayError(const std::string& message, std::string backend, int attempt_count)
        : std::runtime_error(message), backend_id(std::move(backend)), attempts(attempt_count) {}
    std::string backend_id;
    int attempts = 0;
};

struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Canonical prompt text; identical for every backend kind. Lines inside the
// carried texts that begin with a section marker are escaped so the rendering
// parses back losslessly.
std::string render_prompt(const PromptRequest& request);
PromptRequest parse_prompt(const std::string& rendered);

class Gateway {
  public:
    virtual ~Gateway() = default;
    virtual LlmResponse complete(const PromptRequest& request) = 0;
    virtual std::string backend_id() const = 0;
};

// Deterministic offline backend. If user_content exactly matches a few-shot
// input the exemplar's output is returned; otherwise a digest-derived sentence
// of the rendered prompt and seed.
class StubGateway final : public Gateway {
  public:
    explicit StubGateway(BackendConfig config) : config_(std::move(config)) {}
    LlmResponse complete(const PromptRequest& request) override;
    std::string backend_id() const override { return "stub:" + config_.model_name; }

  private:
    BackendConfig config_;
};

// Hook for an in-process model: receives the rendered prompt, returns text.
using LocalModelFn = std::function<std::string(const std::string& rendered_prompt,
                                               const PromptRequest& request)>;

class LocalGateway final : public Gateway {
  public:
    LocalGateway(BackendConfig config, LocalModelFn fn)
        : config_(std::move(config)), fn_(std::move(fn)) {}
    LlmResponse complete(const PromptRequest& request) override;
    std::string backend_id() const override { return "local:" + config_.model_name; }

  private:
    BackendConfig config_;
    LocalModelFn fn_;
};

// JSON chat-completion client (messages array with system/user/assistant
// roles). Endpoint from config, overridable via LONGVIEW_LLM_URL; bearer
// token from LONGVIEW_LLM_API_KEY. Retries transport failures with
// exponential backoff.
class HttpChatGateway final : public Gateway {
  public:
    explicit HttpChatGateway(BackendConfig config);
    LlmResponse complete(const PromptRequest& request) override;
    std::string backend_id() const override { return "http:" + config_.model_name; }

  private:
    BackendConfig config_;
    std::string host_;
    int port_ = 80;
    std::string path_;
    bool https_ = false;
    std::shared_ptr<void> limiter_;
};

std::unique_ptr<Gateway> make_gateway(const BackendConfig& config, LocalModelFn local_fn = {});

LlmResponse complete(const PromptRequest& request, const BackendConfig& config);

}  // namespace longview::llm
