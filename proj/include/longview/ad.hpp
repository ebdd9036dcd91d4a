#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "longview/common.hpp"

// Minimal reverse-mode autodiff over row-major double matrices. Graphs are
// built per forward pass and freed when the roots go out of scope.
namespace longview::ad {

struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, double x) {
        Tensor t(r, c);
        std::fill(t.v.begin(), t.v.end(), x);
        return t;
    }
    static Tensor randn(int r, int c, Rng& rng, double scale) {
        Tensor t(r, c);
        for (double& x : t.v) x = rng.next_gaussian() * scale;
        return t;
    }
    static Tensor row_vector(std::vector<double> data) {
        Tensor t;
        t.rows = 1;
        t.cols = static_cast<int>(data.size());
        t.v = std::move(data);
        return t;
    }

    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;
};

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor val;
    Tensor grad;  // allocated on demand during backward
    std::vector<Var> parents;
    std::function<void(Node&)> back;
    bool needs_grad = false;

    explicit Node(Tensor t) : val(std::move(t)) {}
    void ensure_grad() {
        if (grad.rows != val.rows || grad.cols != val.cols) grad = Tensor(val.rows, val.cols);
    }
};

Var constant(Tensor t);
Var leaf(Tensor t);  // gradient-tracking input

// Elementwise (same shape).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

// Broadcasts: r is [1,C] against m [R,C]; c is [R,1] against m [R,C].
Var add_rowvec(const Var& m, const Var& r);
Var mul_rowvec(const Var& m, const Var& r);
Var add_colvec(const Var& m, const Var& c);
Var mul_colvec(const Var& m, const Var& c);

// s is [1,1], broadcast over all of a.
Var mul_scalar_var(const Var& a, const Var& s);

Var scale(const Var& a, double k);
Var add_scalar(const Var& a, double k);

Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);  // a * b^T

Var sigmoid(const Var& a);
Var tanh_(const Var& a);
Var exp_(const Var& a);
Var log_(const Var& a);
Var sqrt_(const Var& a);
Var relu(const Var& a);
Var square(const Var& a);
Var swish(const Var& a);  // x * sigmoid(x)

Var sum_all(const Var& a);            // [1,1]
Var sum_rows(const Var& a);           // [1,C], sum over rows
Var mean_rows(const Var& a);          // [1,C]
Var mean_cols(const Var& a);          // [R,1]
Var sum_cols(const Var& a);           // [R,1]

Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& a, int r0, int r1);  // rows [r0, r1)

Var log_softmax_rows(const Var& a);
Var softmax_rows(const Var& a);

// out[t,0] = a[t, indices[t]]; indices[t] < 0 selects nothing (out 0, no grad).
Var pick_per_row(const Var& a, std::vector<int> indices);

// x [T,Cin], w [k*Cin,Cout], b [1,Cout]; zero same-padding, odd k.
Var conv1d_same(const Var& x, const Var& w, const Var& b, int k);

// PyTorch-style bins: out row j averages input rows [floor(j*T/L), ceil((j+1)*T/L)).
Var adaptive_avg_pool_rows(const Var& a, int out_rows);

// Scalar loss only.
void backward(const Var& root);

// ---------------------------------------------------------------------------
// Parameter store: named tensors plus Adam state; creation order is the
// canonical serialization order.
// ---------------------------------------------------------------------------

class ParamStore {
  public:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor adam_m;
        Tensor adam_v;
        bool trainable = true;
    };

    int add(const std::string& name, Tensor init, bool trainable = true);
    bool contains(const std::string& name) const { return index_.count(name) > 0; }
    Entry& at(const std::string& name);
    const Entry& at(const std::string& name) const;
    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    // Flat view over trainable coordinates, for gradient checks.
    std::int64_t trainable_size() const;
    double get_coord(std::int64_t i) const;
    void set_coord(std::int64_t i, double x);

    bool all_finite() const;

  private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, int> index_;
};

// One forward/backward pass. Caches a leaf per touched parameter so each
// parameter appears once in the graph; after backward the accumulated
// gradients are read back via grads().
class Session {
  public:
    explicit Session(ParamStore& store, bool training = false, bool grad_enabled = true)
        : store_(&store), training_(training), grad_enabled_(grad_enabled) {}

    Var param(const std::string& name);
    bool training() const { return training_; }
    bool grad_enabled() const { return grad_enabled_; }
    ParamStore& store() { return *store_; }

    const std::unordered_map<std::string, Var>& touched() const { return leaves_; }

  private:
    ParamStore* store_;
    bool training_;
    bool grad_enabled_;
    std::unordered_map<std::string, Var> leaves_;
};

struct AdamOptions {
    double learning_rate = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Applies one update from the gradients accumulated in `session`'s leaves.
// `step` is 1-based for bias correction.
void adam_step(Session& session, const AdamOptions& options, std::int64_t step);

}  // namespace longview::ad
