#include "longview/thvae/config.hpp"

namespace longview::thvae {

void ThVaeConfig::validate() const {
    if (num_latents < 1) throw ConfigError("num_latents must be >= 1");
    if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
    if (cells_per_block < 1) throw ConfigError("cells_per_block must be >= 1");
    if (cells_per_group < 1) throw ConfigError("cells_per_group must be >= 1");
    if (decoder_layers < 1) throw ConfigError("decoder_layers must be >= 1");
    if (pooled_length < 1) throw ConfigError("pooled_length must be >= 1");
    if (conv_mul_kernels.empty()) throw ConfigError("conv_mul_kernels must be non-empty");
    for (int k : conv_mul_kernels) {
        if (k < 1 || k % 2 == 0) throw ConfigError("conv_mul kernels must be odd");
    }
    if (conv_kernel < 1 || conv_kernel % 2 == 0) throw ConfigError("conv_kernel must be odd");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (kl_warmup_steps < 0) throw ConfigError("kl_warmup_steps must be >= 0");
    if (max_segment_tokens < 1) throw ConfigError("max_segment_tokens must be >= 1");
}

ThVaeConfig ThVaeConfig::micro() {
    ThVaeConfig c;
    c.num_latents = 2;
    c.latent_dim = 8;
    c.cells_per_block = 1;
    c.cells_per_group = 1;
    c.decoder_layers = 1;
    c.pooled_length = 4;
    c.conv_mul_kernels = {3, 5};
    c.kl_warmup_steps = 0;
    c.max_segment_tokens = 64;
    return c;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, int embedding_dim) {
    Vocabulary v;
    v.embedding_dim = embedding_dim;
    v.tokens = {"<pad>", "<bos>", "<eos>", "<unk>"};
    for (std::string& t : tokens) {
        if (t == "<pad>" || t == "<bos>" || t == "<eos>" || t == "<unk>") continue;
        v.tokens.push_back(std::move(t));
    }
    for (size_t i = 0; i < v.tokens.size(); ++i) {
        v.token_to_id.emplace(v.tokens[i], static_cast<int>(i));
    }
    return v;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, int embedding_dim) {
    std::vector<std::string> ordered;
    std::unordered_map<std::string, int> seen;
    for (const std::string& text : texts) {
        for (const std::string& token : whitespace_tokens(to_lower(text))) {
            if (seen.emplace(token, 1).second) ordered.push_back(token);
        }
    }
    return from_tokens(std::move(ordered), embedding_dim);
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
    std::vector<int> ids;
    for (const std::string& token : whitespace_tokens(to_lower(text))) {
        auto it = token_to_id.find(token);
        ids.push_back(it == token_to_id.end() ? kUnk : it->second);
    }
    return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
    std::vector<std::string> words;
    for (int id : ids) {
        if (id <= kUnk) continue;
        if (id < 0 || id >= size()) continue;
        words.push_back(tokens[id]);
    }
    return join(words, " ");
}

}  // namespace longview::thvae
