#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "longview/common.hpp"

namespace longview::thvae {

struct ThVaeConfig {
    int num_latents = 5;
    int latent_dim = 768;  // must equal the vocabulary embedding dim
    int cells_per_block = 3;
    int cells_per_group = 1;
    int decoder_layers = 6;
    int pooled_length = 32;
    std::vector<int> conv_mul_kernels = {3, 5, 7};
    double learning_rate = 5e-4;
    int kl_warmup_steps = 2000;
    int max_segment_tokens = 320;

    // internal architecture constants
    int conv_kernel = 3;        // single-kernel conv in both residual cells
    int ffn_multiplier = 2;     // transformer feed-forward width
    int se_reduction = 4;       // squeeze-excitation bottleneck divisor
    int max_decode_tokens = 512;

    void validate() const;

    static ThVaeConfig micro();  // tiny configuration used by numeric tests
};

struct Vocabulary {
    std::vector<std::string> tokens;  // index == token id; specials first
    std::unordered_map<std::string, int> token_to_id;
    int embedding_dim = 768;

    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;

    static Vocabulary build(const std::vector<std::string>& texts, int embedding_dim);
    static Vocabulary from_tokens(std::vector<std::string> tokens, int embedding_dim);

    int size() const { return static_cast<int>(tokens.size()); }
    // lowercase whitespace tokens; unknown tokens map to <unk>
    std::vector<int> encode(std::string_view text) const;
    std::string decode(const std::vector<int>& ids) const;  // skips special ids
};

}  // namespace longview::thvae
