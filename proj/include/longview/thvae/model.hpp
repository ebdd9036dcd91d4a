#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "longview/ad.hpp"
#include "longview/keyphrase.hpp"
#include "longview/summaries.hpp"
#include "longview/thvae/config.hpp"
#include "longview/thvae/layers.hpp"
#include "longview/timeline.hpp"

namespace longview::thvae {

struct TrainingInstabilityError : std::runtime_error {
    TrainingInstabilityError(const std::string& message, int layer)
        : std::runtime_error(message), layer_index(layer) {}
    int layer_index = -1;
};

struct EncodedSegment {
    ad::Tensor keyphrase_encoding;   // v, [1,d]
    std::vector<double> word_weights;  // alpha, length m, sums to 1
    ad::Tensor weighted_embeddings;  // [m,d]
    ad::Tensor segment_encoding;     // s_enc, [1,d]
};

struct LatentLayer {
    ad::Tensor mu;       // [1,d]
    ad::Tensor log_var;  // [1,d]
    ad::Tensor sample;   // z, [1,d]
};

struct LatentHierarchy {
    std::vector<LatentLayer> layers;
};

enum class HierarchyMode { Posterior, Prior };

struct ElboTerms {
    double reconstruction_nll = 0.0;   // summed token NLL, PAD masked
    std::vector<double> kl_per_layer;  // closed-form diagonal-Gaussian KL
    double kl_weight = 1.0;            // beta
    double total_loss = 0.0;           // recon + beta * sum(kl)
};

struct DecodeOptions {
    bool greedy = true;
    std::uint64_t seed = 0;            // sampling seed when greedy == false
    bool sample_latents = false;       // default: z = mu at generation
    std::uint64_t latent_seed = 0;
};

// Normalized attention over word embeddings: alpha_i proportional to
// max(cos(v, w_i), 0) + 1e-8. Throws on an all-zero v.
std::vector<double> attention_weights(const ad::Tensor& v, const ad::Tensor& word_embeddings);

// Closed-form KL(N(mu_q, e^lv_q) || N(mu_p, e^lv_p)) summed over dimensions.
double gaussian_kl(const std::vector<double>& mu_q, const std::vector<double>& lv_q,
                   const std::vector<double>& mu_p, const std::vector<double>& lv_p);

class ThVaeModel {
  public:
    ThVaeModel(ThVaeConfig config, Vocabulary vocab, std::uint64_t seed);

    const ThVaeConfig& config() const { return config_; }
    const Vocabulary& vocab() const { return vocab_; }
    ad::ParamStore& params() { return params_; }
    const ad::ParamStore& params() const { return params_; }
    std::int64_t training_step_count() const { return training_step_count_; }
    void set_training_step_count(std::int64_t n) { training_step_count_ = n; }

    // --- public operations (eval mode, no gradient tracking) ---

    ad::Tensor encode_keyphrases(const keyphrase::KeyPhraseSet& phrases);

    EncodedSegment encode_segment(const core::Segment& segment,
                                  const keyphrase::KeyPhraseSet& phrases,
                                  const std::function<void(const std::string&)>& warn = {});

    // [pooled_length x d] from the chronological segment encodings.
    ad::Tensor encode_timeline(const std::vector<EncodedSegment>& segments);

    LatentHierarchy hierarchy_forward(const ad::Tensor& pooled, HierarchyMode mode,
                                      bool deterministic = true, std::uint64_t seed = 0);

    ElboTerms elbo(const std::vector<int>& segment_tokens, const EncodedSegment& encoded,
                   double beta, bool deterministic = true, std::uint64_t noise_seed = 0);

    TimelineSummary generate_summary(const core::Timeline& timeline,
                                     const std::vector<keyphrase::KeyPhraseSet>& keyphrases,
                                     const DecodeOptions& decode = {});

    // --- graph-level API (training, gradient checks) ---

    struct LossVars {
        ad::Var total;
        ad::Var recon;
        std::vector<ad::Var> kls;
    };

    // Full differentiable path: tokens + phrases -> encoders -> hierarchy ->
    // decoder -> loss. `noise` holds one [1,d] tensor per latent layer
    // (empty => z = mu).
    LossVars build_loss(ad::Session& session, const std::vector<int>& token_ids,
                        const std::vector<std::string>& phrase_texts, double beta,
                        const std::vector<ad::Tensor>& noise);

    // ELBO continuation from a fixed weighted-embedding sequence.
    LossVars build_loss_from_weighted(ad::Session& session, const std::vector<int>& ids,
                                      const ad::Var& weighted, double beta,
                                      const std::vector<ad::Tensor>& noise);

    std::vector<int> tokenize_segment(const core::Segment& segment,
                                      const std::function<void(const std::string&)>& warn = {}) const;

    // layer handles (exposed for unit tests)
    const GruCell& keyphrase_gru() const { return kp_gru_; }
    const GruCell& sequence_gru() const { return seq_gru_; }

  private:
    struct SegVars {
        ad::Var v;
        ad::Var alpha;     // [m,1]
        ad::Var weighted;  // [m,d]
        ad::Var hidden;    // [m,d], GRU states
        ad::Var s_enc;     // [1,d]
    };
    struct HierVars {
        struct Layer {
            ad::Var mu_q, lv_q, mu_p, lv_p, z;
        };
        std::vector<Layer> layers;
        ad::Var exit_pooled;  // [1,d]
    };

    ad::Var embed_rows(ad::Session& s, const std::vector<int>& ids);
    ad::Var phrase_vector(ad::Session& s, const std::vector<std::string>& phrase_texts);
    SegVars build_segment(ad::Session& s, const std::vector<int>& ids,
                          const std::vector<std::string>& phrase_texts);
    HierVars build_posterior(ad::Session& s, const ad::Var& pooled,
                             const std::vector<ad::Tensor>& noise);
    HierVars build_prior_sample(ad::Session& s, const std::vector<ad::Tensor>& noise);
    ad::Var decoder_logits(ad::Session& s, const std::vector<int>& input_ids,
                           const ad::Var& memory, const ad::Var& exit_pooled);
    std::vector<ad::Tensor> make_noise(std::uint64_t seed) const;

    ThVaeConfig config_;
    Vocabulary vocab_;
    ad::ParamStore params_;
    std::int64_t training_step_count_ = 0;

    GruCell kp_gru_;
    GruCell seq_gru_;  // shared segment- and timeline-level encoder
    std::vector<ResidualCell1> entry_;
    std::vector<std::vector<ResidualCell2>> post_cells_;
    std::vector<Linear> post_mu_, post_lv_, post_inject_;
    std::vector<std::vector<ResidualCell2>> prior_cells_;
    std::vector<Linear> prior_mu_, prior_lv_, prior_inject_;
    std::vector<ResidualCell1> exit_;
    std::vector<DecoderLayer> dec_layers_;
    Linear bridge_;
    GruCell out_gru_;
    Linear out_proj_;

    friend struct CheckpointCodec;
};

}  // namespace longview::thvae
