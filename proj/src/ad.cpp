#include "longview/ad.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace longview::ad {

bool Tensor::all_finite() const {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a->val.same_shape(b->val)) {
        throw ArgumentError(std::string(op) + ": shape mismatch " +
                            std::to_string(a->val.rows) + "x" + std::to_string(a->val.cols) +
                            " vs " + std::to_string(b->val.rows) + "x" +
                            std::to_string(b->val.cols));
    }
}

Var make_node(Tensor val, std::vector<Var> parents, std::function<void(Node&)> back) {
    bool needs = false;
    for (const Var& p : parents) needs = needs || p->needs_grad;
    auto node = std::make_shared<Node>(std::move(val));
    if (needs) {
        node->needs_grad = true;
        node->parents = std::move(parents);
        node->back = std::move(back);
    }
    return node;
}

void accumulate(Node& parent, const Tensor& delta) {
    parent.ensure_grad();
    for (size_t i = 0; i < delta.size(); ++i) parent.grad.v[i] += delta.v[i];
}

}  // namespace

Var constant(Tensor t) { return std::make_shared<Node>(std::move(t)); }

Var leaf(Tensor t) {
    auto node = std::make_shared<Node>(std::move(t));
    node->needs_grad = true;
    return node;
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out = a->val;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] += b->val.v[i];
    return make_node(std::move(out), {a, b}, [ap = a.get(), bp = b.get()](Node& n) {
        if (ap->needs_grad) accumulate(*ap, n.grad);
        if (bp->needs_grad) accumulate(*bp, n.grad);
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a->val;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] -= b->val.v[i];
    return make_node(std::move(out), {a, b}, [ap = a.get(), bp = b.get()](Node& n) {
        if (ap->needs_grad) accumulate(*ap, n.grad);
        if (bp->needs_grad) {
            bp->ensure_grad();
            for (size_t i = 0; i < n.grad.size(); ++i) bp->grad.v[i] -= n.grad.v[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor out = a->val;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] *= b->val.v[i];
    return make_node(std::move(out), {a, b}, [ap = a.get(), bp = b.get()](Node& n) {
        if (ap->needs_grad) {
            ap->ensure_grad();
            for (size_t i = 0; i < n.grad.size(); ++i) ap->grad.v[i] += n.grad.v[i] * bp->val.v[i];
        }
        if (bp->needs_grad) {
            bp->ensure_grad();
            for (size_t i = 0; i < n.grad.size(); ++i) bp->grad.v[i] += n.grad.v[i] * ap->val.v[i];
        }
    });
}

Var div(const Var& a, const Var& b) {
    check_same_shape(a, b, "div");
    Tensor out = a->val;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] /= b->val.v[i];
    return make_node(std::move(out), {a, b}, [ap = a.get(), bp = b.get()](Node& n) {
        if (ap->needs_grad) {
            ap->ensure_grad();
            for (size_t i = 0; i < n.grad.size(); ++i) ap->grad.v[i] += n.grad.v[i] / bp->val.v[i];
        }
        if (bp->needs_grad) {
            bp->ensure_grad();
            for (size_t i = 0; i < n.grad.size(); ++i) {
                double bi = bp->val.v[i];
                bp->grad.v[i] -= n.grad.v[i] * ap->val.v[i] / (bi * bi);
            }
        }
    });
}

Var add_rowvec(const Var& m, const Var& r) {
    if (r->val.rows != 1 || r->val.cols != m->val.cols) {
        throw ArgumentError("add_rowvec: expected [1," + std::to_string(m->val.cols) + "]");
    }
    Tensor out = m->val;
    for (int i = 0; i < out.rows; ++i) {
        for (int j = 0; j < out.cols; ++j) out.at(i, j) += r->val.at(0, j);
    }
    return make_node(std::move(out), {m, r}, [mp = m.get(), rp = r.get()](Node& n) {
        if (mp->needs_grad) accumulate(*mp, n.grad);
        if (rp->needs_grad) {
            rp->ensure_grad();
            for (int i = 0; i < n.grad.rows; ++i) {
                for (int j = 0; j < n.grad.cols; ++j) rp->grad.at(0, j) += n.grad.at(i, j);
            }
        }
    });
}

Var mul_rowvec(const Var& m, const Var& r) {
    if (r->val.rows != 1 || r->val.cols != m->val.cols) {
        throw ArgumentError("mul_rowvec: expected [1," + std::to_string(m->val.cols) + "]");
    }
    Tensor out = m->val;
    for (int i = 0; i < out.rows; ++i) {
        for (int j = 0; j < out.cols; ++j) out.at(i, j) *= r->val.at(0, j);
    }
    return make_node(std::move(out), {m, r}, [mp = m.get(), rp = r.get()](Node& n) {
        if (mp->needs_grad) {
            mp->ensure_grad();
            for (int i = 0; i < n.grad.rows; ++i) {
                for (int j = 0; j < n.grad.cols; ++j) {
                    mp->grad.at(i, j) += n.grad.at(i, j) * rp->val.at(0, j);
                }
            }
        }
        if (rp->needs_grad) {
            rp->ensure_grad();
            for (int i = 0; i < n.grad.rows; ++i) {
                for (int j = 0; j < n.grad.cols; ++j) {
                    rp->grad.at(0, j) += n.grad.at(i, j) * mp->val.at(i, j);
                }
            }
        }
    });
}

Var add_colvec(const Var& m, const Var& c) {
    if (c->val.cols != 1 || c->val.rows != m->val.rows) {
        throw ArgumentError("add_colvec: expected [" + std::to_string(m->val.rows) + ",1]");
    }
    Tensor out = m->val;
    for (int i = 0; i < out.rows; ++i) {
        for (int j = 0; j < out.cols; ++j) out.at(i, j) += c->val.at(i, 0);
    }
    return make_node(std::move(out), {m, c}, [mp = m.get(), cp = c.get()](Node& n) {
        if (mp->needs_grad) accumulate(*mp, n.grad);
        if (cp->needs_grad) {
            cp->ensure_grad();
            for (int i = 0; i < n.grad.rows; ++i) {
                for (int j = 0; j < n.grad.cols; ++j) cp->grad.at(i, 0) += n.grad.at(i, j);
            }
        }
    });
}

Var mul_colvec(const Var& m, const Var& c) {
    if (c->val.cols != 1 || c->val.rows != m->val.rows) {
        throw ArgumentError("mul_colvec: expected [" + std::to_string(m->val.rows) + ",1]");
    }
    Tensor out = m->val;
    for (int i = 0; i < out.rows; ++i) {
        for (int j = 0; j < out.cols; ++j) out.at(i, j) *= c->val.at(i, 0);
    }
    return make_node(std::move(out), {m, c}, [mp = m.get(), cp = c.get()](Node& n) {
        if (mp->needs_grad) {
            mp->ensure_grad();
            for (int i = 0; i < n.grad.rows; ++i) {
                for (int j = 0; j < n.grad.cols; ++j) {
                    mp->grad.at(i, j) += n.grad.at(i, j) * cp->val.at(i, 0);
                }
            }
        }
        if (cp->needs_grad) {
            cp->ensure_grad();
            for (int i = 0; i < n.grad.rows; ++i) {
                for (int j = 0; j < n.grad.cols; ++j) {
                    cp->grad.at(i, 0) += n.grad.at(i, j) * mp->val.at(i, j);
                }
            }
        }
    });
}

Var mul_scalar_var(const Var& a, const Var& s) {
    if (s->val.rows != 1 || s->val.cols != 1) throw ArgumentError("mul_scalar_var: s must be 1x1");
    double k = s->val.v[0];
    Tensor out = a->val;
    for (double& x : out.v) x *= k;
    return make_node(std::move(out), {a, s}, [ap = a.get(), sp = s.get(), k](Node& n) {
        if (ap->needs_grad) {
            ap->ensure_grad();
            for (size_t i = 0; i < n.grad.size(); ++i) ap->grad.v[i] += k * n.grad.v[i];
        }
        if (sp->needs_grad) {
            sp->ensure_grad();
            double dot = 0.0;
            for (size_t i = 0; i < n.grad.size(); ++i) dot += n.grad.v[i] * ap->val.v[i];
            sp->grad.v[0] += dot;
        }
    });
}

Var scale(const Var& a, double k) {
    Tensor out = a->val;
    for (double& x : out.v) x *= k;
    return make_node(std::move(out), {a}, [ap = a.get(), k](Node& n) {
        ap->ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i) ap->grad.v[i] += k * n.grad.v[i];
    });
}

Var add_scalar(const Var& a, double k) {
    Tensor out = a->val;
    for (double& x : out.v) x += k;
    return make_node(std::move(out), {a},
                     [ap = a.get()](Node& n) { accumulate(*ap, n.grad); });
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
    if (a->val.cols != b->val.rows) {
        throw ArgumentError("matmul: inner dims " + std::to_string(a->val.cols) + " vs " +
                            std::to_string(b->val.rows));
    }
    const int R = a->val.rows, K = a->val.cols, C = b->val.cols;
    Tensor out(R, C);
    for (int i = 0; i < R; ++i) {
        for (int k = 0; k < K; ++k) {
            double aik = a->val.at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < C; ++j) out.at(i, j) += aik * b->val.at(k, j);
        }
    }
    return make_node(std::move(out), {a, b}, [ap = a.get(), bp = b.get(), R, K, C](Node& n) {
        if (ap->needs_grad) {
            ap->ensure_grad();
            for (int i = 0; i < R; ++i) {
                for (int j = 0; j < C; ++j) {
                    double g = n.grad.at(i, j);
                    if (g == 0.0) continue;
                    for (int k = 0; k < K; ++k) ap->grad.at(i, k) += g * bp->val.at(k, j);
                }
            }
        }
        if (bp->needs_grad) {
            bp->ensure_grad();
            for (int i = 0; i < R; ++i) {
                for (int k = 0; k < K; ++k) {
                    double av = ap->val.at(i, k);
                    if (av == 0.0) continue;
                    for (int j = 0; j < C; ++j) bp->grad.at(k, j) += av * n.grad.at(i, j);
                }
            }
        }
    });
}

Var matmul_nt(const Var& a, const Var& b) {
    if (a->val.cols != b->val.cols) {
        throw ArgumentError("matmul_nt: inner dims " + std::to_string(a->val.cols) + " vs " +
                            std::to_string(b->val.cols));
    }
    const int R = a->val.rows, K = a->val.cols, C = b->val.rows;
    Tensor out(R, C);
    for (int i = 0; i < R; ++i) {
        for (int j = 0; j < C; ++j) {
            double s = 0.0;
            for (int k = 0; k < K; ++k) s += a->val.at(i, k) * b->val.at(j, k);
            out.at(i, j) = s;
        }
    }
    return make_node(std::move(out), {a, b}, [ap = a.get(), bp = b.get(), R, K, C](Node& n) {
        if (ap->needs_grad) {
            ap->ensure_grad();
            for (int i = 0; i < R; ++i) {
                for (int j = 0; j < C; ++j) {
                    double g = n.grad.at(i, j);
                    if (g == 0.0) continue;
                    for (int k = 0; k < K; ++k) ap->grad.at(i, k) += g * bp->val.at(j, k);
                }
            }
        }
        if (bp->needs_grad) {
            bp->ensure_grad();
            for (int i = 0; i < R; ++i) {
                for (int j = 0; j < C; ++j) {
                    double g = n.grad.at(i, j);
                    if (g == 0.0) continue;
                    for (int k = 0; k < K; ++k) bp->grad.at(j, k) += g * ap->val.at(i, k);
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Nonlinearities
// ---------------------------------------------------------------------------

namespace {

template <typename Fwd, typename Back>
Var unary_op(const Var& a, Fwd fwd, Back back_fn) {
    Tensor out = a->val;
    for (double& x : out.v) x = fwd(x);
    return make_node(std::move(out), {a}, [ap = a.get(), back_fn](Node& n) {
        ap->ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i) {
            ap->grad.v[i] += n.grad.v[i] * back_fn(ap->val.v[i], n.val.v[i]);
        }
    });
}

}  // namespace

Var sigmoid(const Var& a) {
    return unary_op(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Var tanh_(const Var& a) {
    return unary_op(
        a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp_(const Var& a) {
    return unary_op(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log_(const Var& a) {
    return unary_op(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var sqrt_(const Var& a) {
    return unary_op(
        a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return 0.5 / y; });
}

Var relu(const Var& a) {
    return unary_op(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var square(const Var& a) {
    return unary_op(
        a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var swish(const Var& a) { return mul(a, sigmoid(a)); }

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

Var sum_all(const Var& a) {
    Tensor out(1, 1);
    for (double x : a->val.v) out.v[0] += x;
    return make_node(std::move(out), {a}, [ap = a.get()](Node& n) {
        ap->ensure_grad();
        double g = n.grad.v[0];
        for (double& x : ap->grad.v) x += g;
    });
}

Var sum_rows(const Var& a) {
    Tensor out(1, a->val.cols);
    for (int i = 0; i < a->val.rows; ++i) {
        for (int j = 0; j < a->val.cols; ++j) out.at(0, j) += a->val.at(i, j);
    }
    return make_node(std::move(out), {a}, [ap = a.get()](Node& n) {
        ap->ensure_grad();
        for (int i = 0; i < ap->grad.rows; ++i) {
            for (int j = 0; j < ap->grad.cols; ++j) ap->grad.at(i, j) += n.grad.at(0, j);
        }
    });
}

Var mean_rows(const Var& a) { return scale(sum_rows(a), 1.0 / a->val.rows); }

Var sum_cols(const Var& a) {
    Tensor out(a->val.rows, 1);
    for (int i = 0; i < a->val.rows; ++i) {
        for (int j = 0; j < a->val.cols; ++j) out.at(i, 0) += a->val.at(i, j);
    }
    return make_node(std::move(out), {a}, [ap = a.get()](Node& n) {
        ap->ensure_grad();
        for (int i = 0; i < ap->grad.rows; ++i) {
            for (int j = 0; j < ap->grad.cols; ++j) ap->grad.at(i, j) += n.grad.at(i, 0);
        }
    });
}

Var mean_cols(const Var& a) { return scale(sum_cols(a), 1.0 / a->val.cols); }

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ArgumentError("concat_rows: empty input");
    int cols = parts[0]->val.cols;
    int rows = 0;
    for (const Var& p : parts) {
        if (p->val.cols != cols) throw ArgumentError("concat_rows: column mismatch");
        rows += p->val.rows;
    }
    Tensor out(rows, cols);
    int r = 0;
    for (const Var& p : parts) {
        std::copy(p->val.v.begin(), p->val.v.end(), out.v.begin() + static_cast<size_t>(r) * cols);
        r += p->val.rows;
    }
    std::vector<Var> parents = parts;
    return make_node(std::move(out), std::move(parents), [cols](Node& n) {
        int r0 = 0;
        for (const Var& p : n.parents) {
            if (p->needs_grad) {
                p->ensure_grad();
                for (int i = 0; i < p->val.rows; ++i) {
                    for (int j = 0; j < cols; ++j) p->grad.at(i, j) += n.grad.at(r0 + i, j);
                }
            }
            r0 += p->val.rows;
        }
    });
}

Var slice_rows(const Var& a, int r0, int r1) {
    if (r0 < 0 || r1 > a->val.rows || r0 >= r1) throw ArgumentError("slice_rows: bad range");
    Tensor out(r1 - r0, a->val.cols);
    std::copy(a->val.v.begin() + static_cast<size_t>(r0) * a->val.cols,
              a->val.v.begin() + static_cast<size_t>(r1) * a->val.cols, out.v.begin());
    return make_node(std::move(out), {a}, [ap = a.get(), r0](Node& n) {
        ap->ensure_grad();
        for (int i = 0; i < n.grad.rows; ++i) {
            for (int j = 0; j < n.grad.cols; ++j) ap->grad.at(r0 + i, j) += n.grad.at(i, j);
        }
    });
}

// ---------------------------------------------------------------------------
// Softmax family
// ---------------------------------------------------------------------------

Var log_softmax_rows(const Var& a) {
    Tensor out = a->val;
    for (int i = 0; i < out.rows; ++i) {
        double mx = out.at(i, 0);
        for (int j = 1; j < out.cols; ++j) mx = std::max(mx, out.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < out.cols; ++j) sum += std::exp(out.at(i, j) - mx);
        double lse = mx + std::log(sum);
        for (int j = 0; j < out.cols; ++j) out.at(i, j) -= lse;
    }
    return make_node(std::move(out), {a}, [ap = a.get()](Node& n) {
        ap->ensure_grad();
        for (int i = 0; i < n.grad.rows; ++i) {
            double gsum = 0.0;
            for (int j = 0; j < n.grad.cols; ++j) gsum += n.grad.at(i, j);
            for (int j = 0; j < n.grad.cols; ++j) {
                ap->grad.at(i, j) += n.grad.at(i, j) - std::exp(n.val.at(i, j)) * gsum;
            }
        }
    });
}

Var softmax_rows(const Var& a) {
    Tensor out = a->val;
    for (int i = 0; i < out.rows; ++i) {
        double mx = out.at(i, 0);
        for (int j = 1; j < out.cols; ++j) mx = std::max(mx, out.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < out.cols; ++j) {
            double e = std::exp(out.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < out.cols; ++j) out.at(i, j) /= sum;
    }
    return make_node(std::move(out), {a}, [ap = a.get()](Node& n) {
        ap->ensure_grad();
        for (int i = 0; i < n.grad.rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < n.grad.cols; ++j) dot += n.grad.at(i, j) * n.val.at(i, j);
            for (int j = 0; j < n.grad.cols; ++j) {
                ap->grad.at(i, j) += n.val.at(i, j) * (n.grad.at(i, j) - dot);
            }
        }
    });
}

Var pick_per_row(const Var& a, std::vector<int> indices) {
    if (static_cast<int>(indices.size()) != a->val.rows) {
        throw ArgumentError("pick_per_row: index count must equal row count");
    }
    Tensor out(a->val.rows, 1);
    for (int i = 0; i < a->val.rows; ++i) {
        int j = indices[i];
        if (j >= a->val.cols) throw ArgumentError("pick_per_row: index out of range");
        out.at(i, 0) = j < 0 ? 0.0 : a->val.at(i, j);
    }
    return make_node(std::move(out), {a}, [ap = a.get(), idx = std::move(indices)](Node& n) {
        ap->ensure_grad();
        for (int i = 0; i < n.grad.rows; ++i) {
            if (idx[i] >= 0) ap->grad.at(i, idx[i]) += n.grad.at(i, 0);
        }
    });
}

// ---------------------------------------------------------------------------
// Convolution and pooling
// ---------------------------------------------------------------------------

Var conv1d_same(const Var& x, const Var& w, const Var& b, int k) {
    if (k < 1 || k % 2 == 0) throw ArgumentError("conv1d_same: kernel size must be odd");
    const int T = x->val.rows, cin = x->val.cols;
    if (w->val.rows != k * cin) throw ArgumentError("conv1d_same: weight rows != k*Cin");
    const int cout = w->val.cols;
    if (b->val.rows != 1 || b->val.cols != cout) throw ArgumentError("conv1d_same: bad bias");
    const int pad = (k - 1) / 2;

    Tensor out(T, cout);
    for (int t = 0; t < T; ++t) {
        for (int o = 0; o < cout; ++o) out.at(t, o) = b->val.at(0, o);
        for (int j = 0; j < k; ++j) {
            int src = t + j - pad;
            if (src < 0 || src >= T) continue;
            for (int c = 0; c < cin; ++c) {
                double xv = x->val.at(src, c);
                if (xv == 0.0) continue;
                const int wr = j * cin + c;
                for (int o = 0; o < cout; ++o) out.at(t, o) += xv * w->val.at(wr, o);
            }
        }
    }
    return make_node(std::move(out), {x, w, b},
                     [xp = x.get(), wp = w.get(), bp = b.get(), k, T, cin, cout, pad](Node& n) {
                         if (bp->needs_grad) {
                             bp->ensure_grad();
                             for (int t = 0; t < T; ++t) {
                                 for (int o = 0; o < cout; ++o) bp->grad.at(0, o) += n.grad.at(t, o);
                             }
                         }
                         for (int t = 0; t < T; ++t) {
                             for (int j = 0; j < k; ++j) {
                                 int src = t + j - pad;
                                 if (src < 0 || src >= T) continue;
                                 const int wr0 = j * cin;
                                 for (int c = 0; c < cin; ++c) {
                                     if (wp->needs_grad) {
                                         wp->ensure_grad();
                                         double xv = xp->val.at(src, c);
                                         for (int o = 0; o < cout; ++o) {
                                             wp->grad.at(wr0 + c, o) += xv * n.grad.at(t, o);
                                         }
                                     }
                                     if (xp->needs_grad) {
                                         xp->ensure_grad();
                                         double s = 0.0;
                                         for (int o = 0; o < cout; ++o) {
                                             s += wp->val.at(wr0 + c, o) * n.grad.at(t, o);
                                         }
                                         xp->grad.at(src, c) += s;
                                     }
                                 }
                             }
                         }
                     });
}

Var adaptive_avg_pool_rows(const Var& a, int out_rows) {
    if (out_rows < 1) throw ArgumentError("adaptive_avg_pool_rows: out_rows must be >= 1");
    const int T = a->val.rows, C = a->val.cols;
    Tensor out(out_rows, C);
    for (int j = 0; j < out_rows; ++j) {
        int start = static_cast<int>((static_cast<long long>(j) * T) / out_rows);
        int end = static_cast<int>(
            (static_cast<long long>(j + 1) * T + out_rows - 1) / out_rows);
        for (int c = 0; c < C; ++c) {
            double s = 0.0;
            for (int r = start; r < end; ++r) s += a->val.at(r, c);
            out.at(j, c) = s / (end - start);
        }
    }
    return make_node(std::move(out), {a}, [ap = a.get(), out_rows, T](Node& n) {
        ap->ensure_grad();
        for (int j = 0; j < out_rows; ++j) {
            int start = static_cast<int>((static_cast<long long>(j) * T) / out_rows);
            int end = static_cast<int>(
                (static_cast<long long>(j + 1) * T + out_rows - 1) / out_rows);
            double inv = 1.0 / (end - start);
            for (int c = 0; c < n.grad.cols; ++c) {
                double g = n.grad.at(j, c) * inv;
                for (int r = start; r < end; ++r) ap->grad.at(r, c) += g;
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

void backward(const Var& root) {
    if (root->val.rows != 1 || root->val.cols != 1) {
        throw ArgumentError("backward: root must be a scalar");
    }
    if (!root->needs_grad) return;

    // iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.push_back({root.get(), 0});
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next].get();
            ++next;
            if (parent->needs_grad && visited.insert(parent).second) {
                stack.push_back({parent, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad.v[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->back && node->grad.size() == node->val.size()) node->back(*node);
    }
}

// ---------------------------------------------------------------------------
// ParamStore / Session / Adam
// ---------------------------------------------------------------------------

int ParamStore::add(const std::string& name, Tensor init, bool trainable) {
    if (index_.count(name)) throw ArgumentError("duplicate parameter name: " + name);
    Entry entry;
    entry.name = name;
    entry.adam_m = Tensor(init.rows, init.cols);
    entry.adam_v = Tensor(init.rows, init.cols);
    entry.value = std::move(init);
    entry.trainable = trainable;
    entries_.push_back(std::move(entry));
    index_[name] = static_cast<int>(entries_.size()) - 1;
    return index_[name];
}

ParamStore::Entry& ParamStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ArgumentError("unknown parameter: " + name);
    return entries_[it->second];
}

const ParamStore::Entry& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ArgumentError("unknown parameter: " + name);
    return entries_[it->second];
}

std::int64_t ParamStore::trainable_size() const {
    std::int64_t n = 0;
    for (const Entry& e : entries_) {
        if (e.trainable) n += static_cast<std::int64_t>(e.value.size());
    }
    return n;
}

double ParamStore::get_coord(std::int64_t i) const {
    for (const Entry& e : entries_) {
        if (!e.trainable) continue;
        auto n = static_cast<std::int64_t>(e.value.size());
        if (i < n) return e.value.v[i];
        i -= n;
    }
    throw ArgumentError("parameter coordinate out of range");
}

void ParamStore::set_coord(std::int64_t i, double x) {
    for (Entry& e : entries_) {
        if (!e.trainable) continue;
        auto n = static_cast<std::int64_t>(e.value.size());
        if (i < n) {
            e.value.v[i] = x;
            return;
        }
        i -= n;
    }
    throw ArgumentError("parameter coordinate out of range");
}

bool ParamStore::all_finite() const {
    for (const Entry& e : entries_) {
        if (!e.value.all_finite()) return false;
    }
    return true;
}

Var Session::param(const std::string& name) {
    auto it = leaves_.find(name);
    if (it != leaves_.end()) return it->second;
    const ParamStore::Entry& entry = store_->at(name);
    Var v = (grad_enabled_ && entry.trainable) ? leaf(entry.value) : constant(entry.value);
    leaves_.emplace(name, v);
    return v;
}

void adam_step(Session& session, const AdamOptions& options, std::int64_t step) {
    const double bc1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
    for (auto& [name, var] : session.touched()) {
        if (!var->needs_grad || var->grad.size() != var->val.size()) continue;
        ParamStore::Entry& entry = session.store().at(name);
        for (size_t i = 0; i < entry.value.size(); ++i) {
            double g = var->grad.v[i];
            entry.adam_m.v[i] = options.beta1 * entry.adam_m.v[i] + (1.0 - options.beta1) * g;
            entry.adam_v.v[i] = options.beta2 * entry.adam_v.v[i] + (1.0 - options.beta2) * g * g;
            double mhat = entry.adam_m.v[i] / bc1;
            double vhat = entry.adam_v.v[i] / bc2;
            entry.value.v[i] -= options.learning_rate * mhat / (std::sqrt(vhat) + options.eps);
        }
    }
}

}  // namespace longview::ad
