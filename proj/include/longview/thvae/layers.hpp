#pragma once

#include <string>
#include <vector>

#include "longview/ad.hpp"
#include "longview/thvae/config.hpp"

namespace longview::thvae {

using ad::ParamStore;
using ad::Session;
using ad::Var;

struct Linear {
    std::string w, b;
    int in = 0, out = 0;

    Linear() = default;
    Linear(ParamStore& store, const std::string& prefix, int in_dim, int out_dim, Rng& rng,
           double scale = -1.0, bool zero = false);
    Var fwd(Session& s, const Var& x) const;  // x [N,in] -> [N,out]
};

// GRU cell, PyTorch gate convention:
//   r = sigmoid(x Wr + h Ur + br)
//   z = sigmoid(x Wz + h Uz + bz)
//   n = tanh(x Wn + bn_in + r * (h Un + bn_hh))
//   h' = (1 - z) * n + z * h
struct GruCell {
    std::string wr, ur, br, wz, uz, bz, wn, un, bn_in, bn_hh;
    int in = 0, hidden = 0;

    GruCell() = default;
    GruCell(ParamStore& store, const std::string& prefix, int in_dim, int hidden_dim, Rng& rng);
    Var step(Session& s, const Var& x, const Var& h) const;  // [1,in],[1,H] -> [1,H]
    // Hidden state after each input row, starting from zeros. [T,in] -> [T,H]
    Var run_all(Session& s, const Var& seq) const;
    Var run_last(Session& s, const Var& seq) const;
};

// Channel statistics over rows. Training mode uses batch statistics and
// updates running buffers; eval mode applies the stored running statistics.
struct BatchNorm1d {
    std::string gamma, beta, run_mean, run_var;
    int channels = 0;
    double eps = 1e-5;
    double momentum = 0.1;

    BatchNorm1d() = default;
    BatchNorm1d(ParamStore& store, const std::string& prefix, int channels_);
    Var fwd(Session& s, const Var& x) const;  // [T,C] -> [T,C]
};

struct SqueezeExcite {
    Linear fc1, fc2;

    SqueezeExcite() = default;
    SqueezeExcite(ParamStore& store, const std::string& prefix, int channels, int reduction,
                  Rng& rng);
    Var fwd(Session& s, const Var& x) const;
};

struct Conv1d {
    std::string w, b;
    int kernel = 0, cin = 0, cout = 0;

    Conv1d() = default;
    Conv1d(ParamStore& store, const std::string& prefix, int kernel_, int cin_, int cout_,
           Rng& rng, bool zero = false);
    Var fwd(Session& s, const Var& x) const;
};

// residual cell 1: x + conv_mul(SE(conv(swish(BN(x))))); the multi-kernel
// bank outputs are summed and start zero-initialized so the cell is the
// identity at construction.
struct ResidualCell1 {
    BatchNorm1d bn;
    Conv1d conv;
    SqueezeExcite se;
    std::vector<Conv1d> bank;

    ResidualCell1() = default;
    ResidualCell1(ParamStore& store, const std::string& prefix, int channels,
                  const ThVaeConfig& config, Rng& rng);
    Var fwd(Session& s, const Var& x) const;
};

// residual cell 2: x + SE(conv(swish(BN(x)))); the single conv starts
// zero-initialized.
struct ResidualCell2 {
    BatchNorm1d bn;
    Conv1d conv;
    SqueezeExcite se;

    ResidualCell2() = default;
    ResidualCell2(ParamStore& store, const std::string& prefix, int channels,
                  const ThVaeConfig& config, Rng& rng);
    Var fwd(Session& s, const Var& x) const;
};

struct LayerNorm {
    std::string gamma, beta;
    int dim = 0;
    double eps = 1e-5;

    LayerNorm() = default;
    LayerNorm(ParamStore& store, const std::string& prefix, int dim_);
    Var fwd(Session& s, const Var& x) const;  // per-row normalization
};

// Pre-norm transformer decoder layer, single-head attention.
struct DecoderLayer {
    LayerNorm ln1, ln2, ln3;
    Linear self_q, self_k, self_v, self_o;
    Linear cross_q, cross_k, cross_v, cross_o;
    Linear ff1, ff2;
    int dim = 0;

    DecoderLayer() = default;
    DecoderLayer(ParamStore& store, const std::string& prefix, const ThVaeConfig& config,
                 Rng& rng);
    Var fwd(Session& s, const Var& x, const Var& memory) const;  // causal self-attention
};

// Sinusoidal encoding rows [length, dim].
ad::Tensor positional_encoding(int length, int dim);

}  // namespace longview::thvae
