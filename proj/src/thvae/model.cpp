#include "longview/thvae/model.hpp"

#include <algorithm>
#include <cmath>

namespace longview::thvae {

using namespace ad;

// ---------------------------------------------------------------------------
// Free functions
// ---------------------------------------------------------------------------

namespace {

constexpr double kAlphaFloor = 1e-8;

Var attention_alpha(const Var& v, const Var& words) {
    Var dots = matmul_nt(words, v);                         // [m,1]
    Var row_norms = sqrt_(sum_cols(square(words)));         // [m,1]
    Var v_norm = sqrt_(sum_all(square(v)));                 // [1,1]
    Var one = constant(Tensor::full(1, 1, 1.0));
    Var cosines = mul_scalar_var(div(dots, row_norms), div(one, v_norm));
    Var clipped = add_scalar(relu(cosines), kAlphaFloor);
    return mul_scalar_var(clipped, div(one, sum_all(clipped)));
}

}  // namespace

std::vector<double> attention_weights(const ad::Tensor& v, const ad::Tensor& word_embeddings) {
    if (word_embeddings.rows < 1) throw ArgumentError("attention_weights: no word embeddings");
    if (v.size() != static_cast<size_t>(word_embeddings.cols)) {
        throw ArgumentError("attention_weights: dimension mismatch");
    }
    double norm = 0.0;
    for (double x : v.v) norm += x * x;
    if (norm <= 0.0) throw ArgumentError("attention_weights: key-phrase encoding is all-zero");
    for (int i = 0; i < word_embeddings.rows; ++i) {
        double rn = 0.0;
        for (int j = 0; j < word_embeddings.cols; ++j) {
            rn += word_embeddings.at(i, j) * word_embeddings.at(i, j);
        }
        if (rn <= 0.0) throw ArgumentError("attention_weights: zero word embedding row");
    }
    Tensor row = v;
    row.rows = 1;
    row.cols = static_cast<int>(v.size());
    Var alpha = attention_alpha(constant(row), constant(word_embeddings));
    return alpha->val.v;
}

double gaussian_kl(const std::vector<double>& mu_q, const std::vector<double>& lv_q,
                   const std::vector<double>& mu_p, const std::vector<double>& lv_p) {
    if (mu_q.size() != lv_q.size() || mu_q.size() != mu_p.size() || mu_q.size() != lv_p.size()) {
        throw ArgumentError("gaussian_kl: size mismatch");
    }
    double kl = 0.0;
    for (size_t i = 0; i < mu_q.size(); ++i) {
        double diff = mu_q[i] - mu_p[i];
        kl += 0.5 * (std::exp(lv_q[i] - lv_p[i]) + diff * diff * std::exp(-lv_p[i]) - 1.0 +
                     lv_p[i] - lv_q[i]);
    }
    return kl;
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

ThVaeModel::ThVaeModel(ThVaeConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
    config_.validate();
    if (config_.latent_dim != vocab_.embedding_dim) {
        throw ConfigError("latent_dim must equal the vocabulary embedding_dim");
    }
    const int d = config_.latent_dim;
    Rng rng(seed);

    params_.add("embedding", Tensor::randn(vocab_.size(), d, rng, 0.1));
    params_.add("kp.default", Tensor::randn(1, d, rng, 0.1));
    kp_gru_ = GruCell(params_, "kp.gru", d, d, rng);
    seq_gru_ = GruCell(params_, "seq.gru", d, d, rng);

    for (int i = 0; i < config_.cells_per_block; ++i) {
        entry_.emplace_back(params_, "hier.entry" + std::to_string(i), d, config_, rng);
    }
    for (int i = 0; i < config_.num_latents; ++i) {
        std::string qp = "hier.q" + std::to_string(i);
        std::string pp = "hier.p" + std::to_string(i);
        std::vector<ResidualCell2> qcells, pcells;
        for (int c = 0; c < config_.cells_per_group; ++c) {
            qcells.emplace_back(params_, qp + ".cell" + std::to_string(c), d, config_, rng);
        }
        post_cells_.push_back(std::move(qcells));
        post_mu_.emplace_back(params_, qp + ".mu", d, d, rng, 0.01);
        post_lv_.emplace_back(params_, qp + ".lv", d, d, rng, 0.01);
        post_inject_.emplace_back(params_, qp + ".inject", d, d, rng);
        for (int c = 0; c < config_.cells_per_group; ++c) {
            pcells.emplace_back(params_, pp + ".cell" + std::to_string(c), d, config_, rng);
        }
        prior_cells_.push_back(std::move(pcells));
        prior_mu_.emplace_back(params_, pp + ".mu", d, d, rng, 0.01);
        prior_lv_.emplace_back(params_, pp + ".lv", d, d, rng, 0.01);
        prior_inject_.emplace_back(params_, pp + ".inject", d, d, rng);
    }
    params_.add("hier.prior.h0", Tensor::randn(config_.pooled_length, d, rng, 0.1));
    for (int i = 0; i < config_.cells_per_block; ++i) {
        exit_.emplace_back(params_, "hier.exit" + std::to_string(i), d, config_, rng);
    }

    for (int i = 0; i < config_.decoder_layers; ++i) {
        dec_layers_.emplace_back(params_, "dec.layer" + std::to_string(i), config_, rng);
    }
    bridge_ = Linear(params_, "dec.bridge", d, d, rng);
    out_gru_ = GruCell(params_, "dec.gru", d, d, rng);
    out_proj_ = Linear(params_, "dec.proj", d, vocab_.size(), rng);
}

// ---------------------------------------------------------------------------
// Graph builders
// ---------------------------------------------------------------------------

Var ThVaeModel::embed_rows(ad::Session& s, const std::vector<int>& ids) {
    Var table = s.param("embedding");
    std::vector<Var> rows;
    rows.reserve(ids.size());
    for (int id : ids) {
        if (id < 0 || id >= vocab_.size()) throw ArgumentError("token id out of range");
        rows.push_back(slice_rows(table, id, id + 1));
    }
    return concat_rows(rows);
}

Var ThVaeModel::phrase_vector(ad::Session& s, const std::vector<std::string>& phrase_texts) {
    std::vector<Var> embeddings;
    for (const std::string& phrase : phrase_texts) {
        std::vector<int> ids = vocab_.encode(phrase);
        if (ids.empty()) continue;
        embeddings.push_back(mean_rows(embed_rows(s, ids)));
    }
    if (embeddings.empty()) return s.param("kp.default");
    return kp_gru_.run_last(s, concat_rows(embeddings));
}

ThVaeModel::SegVars ThVaeModel::build_segment(ad::Session& s, const std::vector<int>& ids,
                                              const std::vector<std::string>& phrase_texts) {
    if (ids.empty()) throw ValidationError("segment has no tokens");
    SegVars out;
    out.v = phrase_vector(s, phrase_texts);
    Var words = embed_rows(s, ids);
    out.alpha = attention_alpha(out.v, words);
    out.weighted = mul_colvec(words, out.alpha);
    out.hidden = seq_gru_.run_all(s, out.weighted);
    out.s_enc = slice_rows(out.hidden, out.hidden->val.rows - 1, out.hidden->val.rows);
    return out;
}

ThVaeModel::HierVars ThVaeModel::build_posterior(ad::Session& s, const Var& pooled,
                                                 const std::vector<ad::Tensor>& noise) {
    const int d = config_.latent_dim;
    HierVars out;
    Var h = pooled;
    for (const ResidualCell1& cell : entry_) h = cell.fwd(s, h);
    Var hp = s.param("hier.prior.h0");
    for (int i = 0; i < config_.num_latents; ++i) {
        Var g = h;
        for (const ResidualCell2& cell : post_cells_[i]) g = cell.fwd(s, g);
        Var pooled_g = mean_rows(g);
        HierVars::Layer layer;
        layer.mu_q = post_mu_[i].fwd(s, pooled_g);
        layer.lv_q = post_lv_[i].fwd(s, pooled_g);
        if (i < static_cast<int>(noise.size())) {
            Var eps = constant(noise[i]);
            layer.z = add(layer.mu_q, mul(exp_(scale(layer.lv_q, 0.5)), eps));
        } else {
            layer.z = layer.mu_q;
        }

        // prior parameters for the same z_{<i} context (teacher-forced)
        Var gp = hp;
        for (const ResidualCell2& cell : prior_cells_[i]) gp = cell.fwd(s, gp);
        Var pooled_p = mean_rows(gp);
        layer.mu_p = prior_mu_[i].fwd(s, pooled_p);
        layer.lv_p = prior_lv_[i].fwd(s, pooled_p);

        h = add_rowvec(g, post_inject_[i].fwd(s, layer.z));
        hp = add_rowvec(gp, prior_inject_[i].fwd(s, layer.z));
        out.layers.push_back(std::move(layer));
    }
    for (const ResidualCell1& cell : exit_) h = cell.fwd(s, h);
    out.exit_pooled = mean_rows(h);
    (void)d;
    return out;
}

ThVaeModel::HierVars ThVaeModel::build_prior_sample(ad::Session& s,
                                                    const std::vector<ad::Tensor>& noise) {
    HierVars out;
    Var hp = s.param("hier.prior.h0");
    for (int i = 0; i < config_.num_latents; ++i) {
        Var gp = hp;
        for (const ResidualCell2& cell : prior_cells_[i]) gp = cell.fwd(s, gp);
        Var pooled_p = mean_rows(gp);
        HierVars::Layer layer;
        layer.mu_p = prior_mu_[i].fwd(s, pooled_p);
        layer.lv_p = prior_lv_[i].fwd(s, pooled_p);
        layer.mu_q = layer.mu_p;
        layer.lv_q = layer.lv_p;
        if (i < static_cast<int>(noise.size())) {
            Var eps = constant(noise[i]);
            layer.z = add(layer.mu_p, mul(exp_(scale(layer.lv_p, 0.5)), eps));
        } else {
            layer.z = layer.mu_p;
        }
        hp = add_rowvec(gp, prior_inject_[i].fwd(s, layer.z));
        out.layers.push_back(std::move(layer));
    }
    Var h = hp;
    for (const ResidualCell1& cell : exit_) h = cell.fwd(s, h);
    out.exit_pooled = mean_rows(h);
    return out;
}

Var ThVaeModel::decoder_logits(ad::Session& s, const std::vector<int>& input_ids,
                               const Var& memory, const Var& exit_pooled) {
    Var x = add(embed_rows(s, input_ids),
                constant(positional_encoding(static_cast<int>(input_ids.size()),
                                             config_.latent_dim)));
    for (const DecoderLayer& layer : dec_layers_) x = layer.fwd(s, x, memory);

    Var h = tanh_(bridge_.fwd(s, exit_pooled));
    std::vector<Var> states;
    states.reserve(input_ids.size());
    for (int t = 0; t < x->val.rows; ++t) {
        h = out_gru_.step(s, slice_rows(x, t, t + 1), h);
        states.push_back(h);
    }
    return out_proj_.fwd(s, concat_rows(states));
}

ThVaeModel::LossVars ThVaeModel::build_loss(ad::Session& s, const std::vector<int>& token_ids,
                                            const std::vector<std::string>& phrase_texts,
                                            double beta,
                                            const std::vector<ad::Tensor>& noise) {
    std::vector<int> ids = token_ids;
    if (static_cast<int>(ids.size()) > config_.max_segment_tokens) {
        ids.resize(config_.max_segment_tokens);
    }
    if (ids.empty()) throw ValidationError("segment has no tokens");
    Var v = phrase_vector(s, phrase_texts);
    Var words = embed_rows(s, ids);
    Var weighted = mul_colvec(words, attention_alpha(v, words));
    return build_loss_from_weighted(s, ids, weighted, beta, noise);
}

ThVaeModel::LossVars ThVaeModel::build_loss_from_weighted(ad::Session& s,
                                                          const std::vector<int>& ids,
                                                          const ad::Var& weighted, double beta,
                                                          const std::vector<ad::Tensor>& noise) {
    if (beta < 0.0 || beta > 1.0) throw ArgumentError("beta must be in [0,1]");
    if (weighted->val.rows != static_cast<int>(ids.size())) {
        throw ArgumentError("weighted embedding rows must match the token count");
    }
    Var hidden = seq_gru_.run_all(s, weighted);
    Var pooled = adaptive_avg_pool_rows(hidden, config_.pooled_length);
    HierVars hier = build_posterior(s, pooled, noise);

    std::vector<Var> zs;
    for (const auto& layer : hier.layers) zs.push_back(layer.z);
    Var memory = concat_rows(zs);

    std::vector<int> input_ids;
    input_ids.push_back(Vocabulary::kBos);
    input_ids.insert(input_ids.end(), ids.begin(), ids.end());
    std::vector<int> targets(ids.begin(), ids.end());
    targets.push_back(Vocabulary::kEos);
    for (int& t : targets) {
        if (t == Vocabulary::kPad) t = -1;  // masked
    }

    Var logits = decoder_logits(s, input_ids, memory, hier.exit_pooled);
    Var picked = pick_per_row(log_softmax_rows(logits), targets);

    LossVars out;
    out.recon = scale(sum_all(picked), -1.0);
    for (const auto& layer : hier.layers) {
        // 0.5 * sum(exp(lvq-lvp) + (muq-mup)^2 * exp(-lvp) - 1 + lvp - lvq)
        Var diff = sub(layer.mu_q, layer.mu_p);
        Var term = add(add(exp_(sub(layer.lv_q, layer.lv_p)),
                           mul(square(diff), exp_(scale(layer.lv_p, -1.0)))),
                       add_scalar(sub(layer.lv_p, layer.lv_q), -1.0));
        out.kls.push_back(scale(sum_all(term), 0.5));
    }
    Var kl_sum = out.kls[0];
    for (size_t i = 1; i < out.kls.size(); ++i) kl_sum = add(kl_sum, out.kls[i]);
    out.total = add(out.recon, scale(kl_sum, beta));
    return out;
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

std::vector<ad::Tensor> ThVaeModel::make_noise(std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<Tensor> noise;
    for (int i = 0; i < config_.num_latents; ++i) {
        noise.push_back(Tensor::randn(1, config_.latent_dim, rng, 1.0));
    }
    return noise;
}

std::vector<int> ThVaeModel::tokenize_segment(
    const core::Segment& segment, const std::function<void(const std::string&)>& warn) const {
    std::string text = segment.joined_text();
    if (trim(text).empty()) throw ValidationError("segment text is empty");
    std::vector<int> ids = vocab_.encode(text);
    if (static_cast<int>(ids.size()) > config_.max_segment_tokens) {
        if (warn) {
            warn("segment " + std::to_string(segment.segment_index) + " of timeline '" +
                 segment.source_timeline_id + "' truncated from " + std::to_string(ids.size()) +
                 " to " + std::to_string(config_.max_segment_tokens) + " tokens");
        }
        ids.resize(config_.max_segment_tokens);
    }
    return ids;
}

ad::Tensor ThVaeModel::encode_keyphrases(const keyphrase::KeyPhraseSet& phrases) {
    Session s(params_, /*training=*/false, /*grad_enabled=*/false);
    return phrase_vector(s, phrases.texts())->val;
}

EncodedSegment ThVaeModel::encode_segment(const core::Segment& segment,
                                          const keyphrase::KeyPhraseSet& phrases,
                                          const std::function<void(const std::string&)>& warn) {
    std::vector<int> ids = tokenize_segment(segment, warn);
    Session s(params_, /*training=*/false, /*grad_enabled=*/false);
    SegVars seg = build_segment(s, ids, phrases.texts());
    EncodedSegment out;
    out.keyphrase_encoding = seg.v->val;
    out.word_weights = seg.alpha->val.v;
    out.weighted_embeddings = seg.weighted->val;
    out.segment_encoding = seg.s_enc->val;
    return out;
}

ad::Tensor ThVaeModel::encode_timeline(const std::vector<EncodedSegment>& segments) {
    if (segments.empty()) throw ArgumentError("encode_timeline: no segments");
    Session s(params_, /*training=*/false, /*grad_enabled=*/false);
    std::vector<Var> rows;
    rows.reserve(segments.size());
    for (const EncodedSegment& seg : segments) rows.push_back(constant(seg.segment_encoding));
    Var states = seq_gru_.run_all(s, concat_rows(rows));
    return adaptive_avg_pool_rows(states, config_.pooled_length)->val;
}

LatentHierarchy ThVaeModel::hierarchy_forward(const ad::Tensor& pooled, HierarchyMode mode,
                                              bool deterministic, std::uint64_t seed) {
    Session s(params_, /*training=*/false, /*grad_enabled=*/false);
    std::vector<Tensor> noise;
    if (!deterministic) noise = make_noise(seed);
    HierVars vars;
    if (mode == HierarchyMode::Posterior) {
        if (pooled.rows != config_.pooled_length || pooled.cols != config_.latent_dim) {
            throw ArgumentError("hierarchy_forward: pooled input must be [pooled_length x d]");
        }
        vars = build_posterior(s, constant(pooled), noise);
    } else {
        vars = build_prior_sample(s, noise);
    }
    LatentHierarchy out;
    for (auto& layer : vars.layers) {
        LatentLayer l;
        if (mode == HierarchyMode::Posterior) {
            l.mu = layer.mu_q->val;
            l.log_var = layer.lv_q->val;
        } else {
            l.mu = layer.mu_p->val;
            l.log_var = layer.lv_p->val;
        }
        if (!l.mu.all_finite() || !l.log_var.all_finite()) {
            throw TrainingInstabilityError("non-finite latent parameters at layer " +
                                               std::to_string(out.layers.size()),
                                           static_cast<int>(out.layers.size()));
        }
        l.sample = layer.z->val;
        out.layers.push_back(std::move(l));
    }
    return out;
}

ElboTerms ThVaeModel::elbo(const std::vector<int>& segment_tokens, const EncodedSegment& encoded,
                           double beta, bool deterministic, std::uint64_t noise_seed) {
    if (segment_tokens.empty()) throw ValidationError("elbo: empty token sequence");
    Session s(params_, /*training=*/false, /*grad_enabled=*/false);
    std::vector<Tensor> noise;
    if (!deterministic) noise = make_noise(noise_seed);
    LossVars loss = build_loss_from_weighted(s, segment_tokens,
                                             constant(encoded.weighted_embeddings), beta, noise);
    ElboTerms terms;
    terms.reconstruction_nll = loss.recon->val.v[0];
    for (const Var& kl : loss.kls) terms.kl_per_layer.push_back(std::max(0.0, kl->val.v[0]));
    terms.kl_weight = beta;
    terms.total_loss = loss.total->val.v[0];
    if (!std::isfinite(terms.total_loss)) {
        throw TrainingInstabilityError("non-finite ELBO", -1);
    }
    return terms;
}

TimelineSummary ThVaeModel::generate_summary(const core::Timeline& timeline,
                                             const std::vector<keyphrase::KeyPhraseSet>& keyphrases,
                                             const DecodeOptions& decode) {
    if (training_step_count_ == 0) {
        throw ValidationError("generate_summary: model has not been trained");
    }
    std::vector<core::Segment> segments = core::segment_timeline(timeline);

    auto phrases_for = [&](int segment_index) -> std::vector<std::string> {
        for (const keyphrase::KeyPhraseSet& set : keyphrases) {
            if (set.segment_index == segment_index) return set.texts();
        }
        return {};
    };

    Session s(params_, /*training=*/false, /*grad_enabled=*/false);
    std::vector<Var> enc_rows;
    for (const core::Segment& segment : segments) {
        std::vector<int> ids = tokenize_segment(segment);
        SegVars seg = build_segment(s, ids, phrases_for(segment.segment_index));
        enc_rows.push_back(seg.s_enc);
    }
    Var states = seq_gru_.run_all(s, concat_rows(enc_rows));
    Var pooled = adaptive_avg_pool_rows(states, config_.pooled_length);

    std::vector<Tensor> noise;
    if (decode.sample_latents) noise = make_noise(decode.latent_seed);
    HierVars hier = build_posterior(s, pooled, noise);
    std::vector<Var> zs;
    for (const auto& layer : hier.layers) zs.push_back(layer.z);
    Var memory = concat_rows(zs);

    Rng sample_rng(decode.seed);
    std::vector<int> generated{Vocabulary::kBos};
    std::vector<int> content;
    for (int step = 0; step < config_.max_decode_tokens; ++step) {
        Var logits = decoder_logits(s, generated, memory, hier.exit_pooled);
        int last = logits->val.rows - 1;
        std::vector<double> row(vocab_.size());
        for (int j = 0; j < vocab_.size(); ++j) row[j] = logits->val.at(last, j);
        row[Vocabulary::kPad] = -1e30;
        row[Vocabulary::kBos] = -1e30;
        if (step == 0) row[Vocabulary::kEos] = -1e30;  // min length 1

        int next = 0;
        if (decode.greedy) {
            next = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        } else {
            double mx = *std::max_element(row.begin(), row.end());
            double total = 0.0;
            for (double& x : row) {
                x = std::exp(x - mx);
                total += x;
            }
            double r = sample_rng.next_double() * total;
            double acc = 0.0;
            for (size_t j = 0; j < row.size(); ++j) {
                acc += row[j];
                if (r <= acc) {
                    next = static_cast<int>(j);
                    break;
                }
            }
        }
        if (next == Vocabulary::kEos) break;
        generated.push_back(next);
        content.push_back(next);
    }

    TimelineSummary summary;
    summary.timeline_id = timeline.timeline_id;
    summary.system = SummarySystem::ThVae;
    summary.text = vocab_.decode(content);
    return summary;
}

}  // namespace longview::thvae
