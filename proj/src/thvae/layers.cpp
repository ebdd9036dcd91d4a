#include "longview/thvae/layers.hpp"

#include <cmath>

namespace longview::thvae {

using namespace ad;

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

Linear::Linear(ParamStore& store, const std::string& prefix, int in_dim, int out_dim, Rng& rng,
               double scale, bool zero)
    : w(prefix + ".w"), b(prefix + ".b"), in(in_dim), out(out_dim) {
    if (scale < 0.0) scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
    store.add(w, zero ? Tensor::zeros(in_dim, out_dim) : Tensor::randn(in_dim, out_dim, rng, scale));
    store.add(b, Tensor::zeros(1, out_dim));
}

Var Linear::fwd(Session& s, const Var& x) const {
    return add_rowvec(matmul(x, s.param(w)), s.param(b));
}

// ---------------------------------------------------------------------------
// GRU
// ---------------------------------------------------------------------------

GruCell::GruCell(ParamStore& store, const std::string& prefix, int in_dim, int hidden_dim,
                 Rng& rng)
    : wr(prefix + ".wr"), ur(prefix + ".ur"), br(prefix + ".br"),
      wz(prefix + ".wz"), uz(prefix + ".uz"), bz(prefix + ".bz"),
      wn(prefix + ".wn"), un(prefix + ".un"), bn_in(prefix + ".bn_in"), bn_hh(prefix + ".bn_hh"),
      in(in_dim), hidden(hidden_dim) {
    double si = 1.0 / std::sqrt(static_cast<double>(in_dim));
    double sh = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    store.add(wr, Tensor::randn(in_dim, hidden_dim, rng, si));
    store.add(ur, Tensor::randn(hidden_dim, hidden_dim, rng, sh));
    store.add(br, Tensor::zeros(1, hidden_dim));
    store.add(wz, Tensor::randn(in_dim, hidden_dim, rng, si));
    store.add(uz, Tensor::randn(hidden_dim, hidden_dim, rng, sh));
    store.add(bz, Tensor::zeros(1, hidden_dim));
    store.add(wn, Tensor::randn(in_dim, hidden_dim, rng, si));
    store.add(un, Tensor::randn(hidden_dim, hidden_dim, rng, sh));
    store.add(bn_in, Tensor::zeros(1, hidden_dim));
    store.add(bn_hh, Tensor::zeros(1, hidden_dim));
}

Var GruCell::step(Session& s, const Var& x, const Var& h) const {
    Var r = sigmoid(add_rowvec(add(matmul(x, s.param(wr)), matmul(h, s.param(ur))), s.param(br)));
    Var z = sigmoid(add_rowvec(add(matmul(x, s.param(wz)), matmul(h, s.param(uz))), s.param(bz)));
    Var hn = add_rowvec(matmul(h, s.param(un)), s.param(bn_hh));
    Var n = tanh_(add(add_rowvec(matmul(x, s.param(wn)), s.param(bn_in)), mul(r, hn)));
    // (1 - z) * n + z * h
    return add(sub(n, mul(z, n)), mul(z, h));
}

Var GruCell::run_all(Session& s, const Var& seq) const {
    Var h = constant(Tensor::zeros(1, hidden));
    std::vector<Var> states;
    states.reserve(seq->val.rows);
    for (int t = 0; t < seq->val.rows; ++t) {
        h = step(s, slice_rows(seq, t, t + 1), h);
        states.push_back(h);
    }
    return concat_rows(states);
}

Var GruCell::run_last(Session& s, const Var& seq) const {
    Var h = constant(Tensor::zeros(1, hidden));
    for (int t = 0; t < seq->val.rows; ++t) {
        h = step(s, slice_rows(seq, t, t + 1), h);
    }
    return h;
}

// ---------------------------------------------------------------------------
// BatchNorm
// ---------------------------------------------------------------------------

BatchNorm1d::BatchNorm1d(ParamStore& store, const std::string& prefix, int channels_)
    : gamma(prefix + ".gamma"), beta(prefix + ".beta"),
      run_mean(prefix + ".run_mean"), run_var(prefix + ".run_var"), channels(channels_) {
    store.add(gamma, Tensor::full(1, channels_, 1.0));
    store.add(beta, Tensor::zeros(1, channels_));
    store.add(run_mean, Tensor::zeros(1, channels_), /*trainable=*/false);
    store.add(run_var, Tensor::full(1, channels_, 1.0), /*trainable=*/false);
}

Var BatchNorm1d::fwd(Session& s, const Var& x) const {
    if (s.training()) {
        Var mu = mean_rows(x);
        Var centered = add_rowvec(x, scale(mu, -1.0));
        Var var = mean_rows(square(centered));
        Var inv_std =
            div(constant(Tensor::full(1, channels, 1.0)), sqrt_(add_scalar(var, eps)));
        Var norm = mul_rowvec(centered, inv_std);

        // running buffers track biased batch statistics
        ParamStore::Entry& rm = s.store().at(run_mean);
        ParamStore::Entry& rv = s.store().at(run_var);
        for (int c = 0; c < channels; ++c) {
            rm.value.v[c] = (1.0 - momentum) * rm.value.v[c] + momentum * mu->val.v[c];
            rv.value.v[c] = (1.0 - momentum) * rv.value.v[c] + momentum * var->val.v[c];
        }
        return add_rowvec(mul_rowvec(norm, s.param(gamma)), s.param(beta));
    }
    const Tensor& rm = s.store().at(run_mean).value;
    const Tensor& rv = s.store().at(run_var).value;
    Tensor shift(1, channels), inv(1, channels);
    for (int c = 0; c < channels; ++c) {
        shift.v[c] = -rm.v[c];
        inv.v[c] = 1.0 / std::sqrt(rv.v[c] + eps);
    }
    Var norm = mul_rowvec(add_rowvec(x, constant(shift)), constant(inv));
    return add_rowvec(mul_rowvec(norm, s.param(gamma)), s.param(beta));
}

// ---------------------------------------------------------------------------
// Squeeze-Excitation
// ---------------------------------------------------------------------------

SqueezeExcite::SqueezeExcite(ParamStore& store, const std::string& prefix, int channels,
                             int reduction, Rng& rng) {
    int hidden = std::max(1, channels / reduction);
    fc1 = Linear(store, prefix + ".fc1", channels, hidden, rng);
    fc2 = Linear(store, prefix + ".fc2", hidden, channels, rng);
}

Var SqueezeExcite::fwd(Session& s, const Var& x) const {
    Var pooled = mean_rows(x);
    Var gate = sigmoid(fc2.fwd(s, swish(fc1.fwd(s, pooled))));
    return mul_rowvec(x, gate);
}

// ---------------------------------------------------------------------------
// Conv and residual cells
// ---------------------------------------------------------------------------

Conv1d::Conv1d(ParamStore& store, const std::string& prefix, int kernel_, int cin_, int cout_,
               Rng& rng, bool zero)
    : w(prefix + ".w"), b(prefix + ".b"), kernel(kernel_), cin(cin_), cout(cout_) {
    double scale = 1.0 / std::sqrt(static_cast<double>(kernel_ * cin_));
    store.add(w, zero ? Tensor::zeros(kernel_ * cin_, cout_)
                      : Tensor::randn(kernel_ * cin_, cout_, rng, scale));
    store.add(b, Tensor::zeros(1, cout_));
}

Var Conv1d::fwd(Session& s, const Var& x) const {
    return conv1d_same(x, s.param(w), s.param(b), kernel);
}

ResidualCell1::ResidualCell1(ParamStore& store, const std::string& prefix, int channels,
                             const ThVaeConfig& config, Rng& rng) {
    bn = BatchNorm1d(store, prefix + ".bn", channels);
    conv = Conv1d(store, prefix + ".conv", config.conv_kernel, channels, channels, rng);
    se = SqueezeExcite(store, prefix + ".se", channels, config.se_reduction, rng);
    for (size_t i = 0; i < config.conv_mul_kernels.size(); ++i) {
        bank.emplace_back(store, prefix + ".bank" + std::to_string(i),
                          config.conv_mul_kernels[i], channels, channels, rng, /*zero=*/true);
    }
}

Var ResidualCell1::fwd(Session& s, const Var& x) const {
    Var u = se.fwd(s, conv.fwd(s, swish(bn.fwd(s, x))));
    Var out = bank[0].fwd(s, u);
    for (size_t i = 1; i < bank.size(); ++i) out = add(out, bank[i].fwd(s, u));
    return add(x, out);
}

ResidualCell2::ResidualCell2(ParamStore& store, const std::string& prefix, int channels,
                             const ThVaeConfig& config, Rng& rng) {
    bn = BatchNorm1d(store, prefix + ".bn", channels);
    conv = Conv1d(store, prefix + ".conv", config.conv_kernel, channels, channels, rng,
                  /*zero=*/true);
    se = SqueezeExcite(store, prefix + ".se", channels, config.se_reduction, rng);
}

Var ResidualCell2::fwd(Session& s, const Var& x) const {
    return add(x, se.fwd(s, conv.fwd(s, swish(bn.fwd(s, x)))));
}

// ---------------------------------------------------------------------------
// LayerNorm and decoder layer
// ---------------------------------------------------------------------------

LayerNorm::LayerNorm(ParamStore& store, const std::string& prefix, int dim_)
    : gamma(prefix + ".gamma"), beta(prefix + ".beta"), dim(dim_) {
    store.add(gamma, Tensor::full(1, dim_, 1.0));
    store.add(beta, Tensor::zeros(1, dim_));
}

Var LayerNorm::fwd(Session& s, const Var& x) const {
    Var mu = mean_cols(x);
    Var centered = add_colvec(x, scale(mu, -1.0));
    Var var = mean_cols(square(centered));
    Var inv = div(constant(Tensor::full(x->val.rows, 1, 1.0)), sqrt_(add_scalar(var, eps)));
    Var norm = mul_colvec(centered, inv);
    return add_rowvec(mul_rowvec(norm, s.param(gamma)), s.param(beta));
}

DecoderLayer::DecoderLayer(ParamStore& store, const std::string& prefix,
                           const ThVaeConfig& config, Rng& rng)
    : dim(config.latent_dim) {
    int d = config.latent_dim;
    int f = config.ffn_multiplier * d;
    ln1 = LayerNorm(store, prefix + ".ln1", d);
    ln2 = LayerNorm(store, prefix + ".ln2", d);
    ln3 = LayerNorm(store, prefix + ".ln3", d);
    self_q = Linear(store, prefix + ".selfq", d, d, rng);
    self_k = Linear(store, prefix + ".selfk", d, d, rng);
    self_v = Linear(store, prefix + ".selfv", d, d, rng);
    self_o = Linear(store, prefix + ".selfo", d, d, rng);
    cross_q = Linear(store, prefix + ".crossq", d, d, rng);
    cross_k = Linear(store, prefix + ".crossk", d, d, rng);
    cross_v = Linear(store, prefix + ".crossv", d, d, rng);
    cross_o = Linear(store, prefix + ".crosso", d, d, rng);
    ff1 = Linear(store, prefix + ".ff1", d, f, rng);
    ff2 = Linear(store, prefix + ".ff2", f, d, rng);
}

namespace {

Var attention(Session& s, const Var& q, const Var& k, const Var& v, bool causal, int dim) {
    Var scores = scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(dim)));
    if (causal) {
        Tensor mask(scores->val.rows, scores->val.cols);
        for (int i = 0; i < mask.rows; ++i) {
            for (int j = i + 1; j < mask.cols; ++j) mask.at(i, j) = -1e9;
        }
        scores = add(scores, constant(mask));
    }
    return matmul(softmax_rows(scores), v);
}

}  // namespace

Var DecoderLayer::fwd(Session& s, const Var& x, const Var& memory) const {
    Var h1 = ln1.fwd(s, x);
    Var self_attn = attention(s, self_q.fwd(s, h1), self_k.fwd(s, h1), self_v.fwd(s, h1),
                              /*causal=*/true, dim);
    Var x2 = add(x, self_o.fwd(s, self_attn));

    Var h2 = ln2.fwd(s, x2);
    Var cross_attn = attention(s, cross_q.fwd(s, h2), cross_k.fwd(s, memory),
                               cross_v.fwd(s, memory), /*causal=*/false, dim);
    Var x3 = add(x2, cross_o.fwd(s, cross_attn));

    Var h3 = ln3.fwd(s, x3);
    return add(x3, ff2.fwd(s, swish(ff1.fwd(s, h3))));
}

Tensor positional_encoding(int length, int dim) {
    Tensor pe(length, dim);
    for (int t = 0; t < length; ++t) {
        for (int i = 0; i < dim; i += 2) {
            double angle = t / std::pow(10000.0, static_cast<double>(i) / dim);
            pe.at(t, i) = std::sin(angle);
            if (i + 1 < dim) pe.at(t, i + 1) = std::cos(angle);
        }
    }
    return pe;
}

}  // namespace longview::thvae
