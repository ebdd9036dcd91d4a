#pragma once

#include <memory>
#include <string>
#include <vector>

#include "longview/common.hpp"

namespace longview::metrics {

// Recall-oriented semantic similarity plus sentence embeddings.
class Embedder {
  public:
    virtual ~Embedder() = default;
    virtual double recall_score(const std::string& reference, const std::string& candidate) = 0;
    virtual std::vector<double> embed(const std::string& text) = 0;  // unit norm
    virtual std::string id() const = 0;
};

struct NliProbs {
    double entail = 0.0;
    double neutral = 0.0;
    double contradict = 0.0;
};

class NliScorer {
  public:
    virtual ~NliScorer() = default;
    virtual NliProbs score(const std::string& premise, const std::string& hypothesis) = 0;
    virtual std::string id() const = 0;
};

class LmScorer {
  public:
    virtual ~LmScorer() = default;
    virtual double perplexity(const std::string& text) = 0;  // >= 1; empty text is an error
    // mean per-token log-likelihood of target given source, <= 0
    virtual double conditional_loglik(const std::string& source, const std::string& target) = 0;
    virtual std::string id() const = 0;
};

// ---------------------------------------------------------------------------
// Deterministic stubs. Hash-derived values; identical text pairs score as
// perfect matches so identity cases are exact.
// ---------------------------------------------------------------------------

class StubEmbedder final : public Embedder {
  public:
    double recall_score(const std::string& reference, const std::string& candidate) override;
    std::vector<double> embed(const std::string& text) override;
    std::string id() const override { return "stub-embedder"; }
};

class StubNliScorer final : public NliScorer {
  public:
    NliProbs score(const std::string& premise, const std::string& hypothesis) override;
    std::string id() const override { return "stub-nli"; }
};

class StubLmScorer final : public LmScorer {
  public:
    double perplexity(const std::string& text) override;
    double conditional_loglik(const std::string& source, const std::string& target) override;
    std::string id() const override { return "stub-lm"; }
};

// ---------------------------------------------------------------------------
// HTTP adapters for live model services. JSON shapes:
//   POST <base>/recall  {"reference","candidate"}      -> {"score": float}
//   POST <base>/embed   {"text"}                       -> {"vector": [float...]}
//   POST <base>/nli     {"premise","hypothesis"}       -> {"entail","neutral","contradict"}
//   POST <base>/ppl     {"text"}                       -> {"ppl": float}
//   POST <base>/loglik  {"source","target"}            -> {"loglik": float}
// ---------------------------------------------------------------------------

std::unique_ptr<Embedder> make_http_embedder(const std::string& base_url);
std::unique_ptr<NliScorer> make_http_nli(const std::string& base_url);
std::unique_ptr<LmScorer> make_http_lm(const std::string& base_url);

struct MetricBackends {
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<NliScorer> nli;
    std::shared_ptr<LmScorer> lm;  // may be null (coherence/ppl reported absent)

    static MetricBackends stubs();
};

}  // namespace longview::metrics
