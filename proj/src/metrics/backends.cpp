#include "longview/metrics/backends.hpp"

#include <cmath>

#include <json.hpp>

#include "../http_json.hpp"

namespace longview::metrics {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Stubs
// ---------------------------------------------------------------------------

namespace {

std::uint64_t pair_digest(std::string_view tag, std::string_view a, std::string_view b) {
    std::uint64_t h = fnv1a64(tag);
    h = fnv1a64(a, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(b, h);
    return h;
}

double unit_fraction(std::uint64_t h) {
    return static_cast<double>(h % 1000003ULL) / 1000003.0;
}

}  // namespace

double StubEmbedder::recall_score(const std::string& reference, const std::string& candidate) {
    if (normalize_space(to_lower(reference)) == normalize_space(to_lower(candidate))) return 1.0;
    return 0.95 * unit_fraction(pair_digest("recall", reference, candidate));
}

std::vector<double> StubEmbedder::embed(const std::string& text) {
    constexpr int kDim = 16;
    Rng rng(fnv1a64(normalize_space(to_lower(text))));
    std::vector<double> v(kDim);
    double norm = 0.0;
    for (double& x : v) {
        x = rng.next_gaussian();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        v[0] = 1.0;
        return v;
    }
    for (double& x : v) x /= norm;
    return v;
}

NliProbs StubNliScorer::score(const std::string& premise, const std::string& hypothesis) {
    if (normalize_space(to_lower(premise)) == normalize_space(to_lower(hypothesis))) {
        return {1.0, 0.0, 0.0};
    }
    std::uint64_t h = pair_digest("nli", premise, hypothesis);
    double a = unit_fraction(h) + 1e-6;
    double b = unit_fraction(fnv1a64_mix(h, 1)) + 1e-6;
    double c = unit_fraction(fnv1a64_mix(h, 2)) + 1e-6;
    double total = a + b + c;
    return {a / total, b / total, c / total};
}

double StubLmScorer::perplexity(const std::string& text) {
    std::vector<std::string> tokens = whitespace_tokens(text);
    if (tokens.empty()) throw ArgumentError("perplexity of empty text is undefined");
    double nll = 0.0;
    for (size_t i = 0; i < tokens.size(); ++i) {
        std::uint64_t h = pair_digest("ppl", i > 0 ? tokens[i - 1] : "", tokens[i]);
        // surprisal in [ln 2, ln 100]
        nll += std::log(2.0) + unit_fraction(h) * (std::log(100.0) - std::log(2.0));
    }
    return std::exp(nll / static_cast<double>(tokens.size()));
}

double StubLmScorer::conditional_loglik(const std::string& source, const std::string& target) {
    std::vector<std::string> tokens = whitespace_tokens(target);
    if (tokens.empty()) throw ArgumentError("conditional_loglik of empty target is undefined");
    std::uint64_t src = fnv1a64(normalize_space(to_lower(source)));
    double total = 0.0;
    for (size_t i = 0; i < tokens.size(); ++i) {
        std::uint64_t h = fnv1a64(tokens[i], fnv1a64_mix(src, i));
        total += -(0.1 + 2.9 * unit_fraction(h));
    }
    return total / static_cast<double>(tokens.size());
}

// ---------------------------------------------------------------------------
// HTTP adapters
// ---------------------------------------------------------------------------

namespace {

class HttpEmbedder final : public Embedder {
  public:
    explicit HttpEmbedder(std::string base) : base_(std::move(base)) {}
    double recall_score(const std::string& reference, const std::string& candidate) override {
        json out = http_post_json(base_ + "/recall",
                                  {{"reference", reference}, {"candidate", candidate}});
        return out.at("score").get<double>();
    }
    std::vector<double> embed(const std::string& text) override {
        json out = http_post_json(base_ + "/embed", {{"text", text}});
        return out.at("vector").get<std::vector<double>>();
    }
    std::string id() const override { return "http-embedder:" + base_; }

  private:
    std::string base_;
};

class HttpNli final : public NliScorer {
  public:
    explicit HttpNli(std::string base) : base_(std::move(base)) {}
    NliProbs score(const std::string& premise, const std::string& hypothesis) override {
        json out = http_post_json(base_ + "/nli",
                                  {{"premise", premise}, {"hypothesis", hypothesis}});
        return {out.at("entail").get<double>(), out.at("neutral").get<double>(),
                out.at("contradict").get<double>()};
    }
    std::string id() const override { return "http-nli:" + base_; }

  private:
    std::string base_;
};

class HttpLm final : public LmScorer {
  public:
    explicit HttpLm(std::string base) : base_(std::move(base)) {}
    double perplexity(const std::string& text) override {
        if (trim(text).empty()) throw ArgumentError("perplexity of empty text is undefined");
        json out = http_post_json(base_ + "/ppl", {{"text", text}});
        return out.at("ppl").get<double>();
    }
    double conditional_loglik(const std::string& source, const std::string& target) override {
        json out = http_post_json(base_ + "/loglik", {{"source", source}, {"target", target}});
        return out.at("loglik").get<double>();
    }
    std::string id() const override { return "http-lm:" + base_; }

  private:
    std::string base_;
};

}  // namespace

std::unique_ptr<Embedder> make_http_embedder(const std::string& base_url) {
    return std::make_unique<HttpEmbedder>(base_url);
}
std::unique_ptr<NliScorer> make_http_nli(const std::string& base_url) {
    return std::make_unique<HttpNli>(base_url);
}
std::unique_ptr<LmScorer> make_http_lm(const std::string& base_url) {
    return std::make_unique<HttpLm>(base_url);
}

MetricBackends MetricBackends::stubs() {
    MetricBackends b;
    b.embedder = std::make_shared<StubEmbedder>();
    b.nli = std::make_shared<StubNliScorer>();
    b.lm = std::make_shared<StubLmScorer>();
    return b;
}

}  // namespace longview::metrics
