#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace fedccl {

struct Layer {
    Tensor2 w;               // out x in
    std::vector<double> b;   // out
};

// Feature extractor = layers [0, split), classifier = layers [split, size).
// ReLU after every layer except the last; the classifier input (post-ReLU
// activation of layer split-1, or the raw batch when split == 0) is the
// embedding.
struct ModelParams {
    std::vector<Layer> layers;
    std::size_t split = 0;

    std::size_t input_dim() const { return layers.front().w.cols; }
    std::size_t output_dim() const { return layers.back().w.rows; }
    std::size_t embedding_dim() const {
        return split == 0 ? layers.front().w.cols : layers[split - 1].w.rows;
    }
};

using Gradients = ModelParams;

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 64;
    std::size_t local_epochs = 1;
    double temperature = 0.07;
    std::uint64_t seed = 1;
};

inline void validate(const TrainConfig& cfg) {
    if (cfg.learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");
    if (cfg.temperature <= 0.0) throw std::invalid_argument("temperature must be > 0");
    if (cfg.local_epochs < 1) throw std::invalid_argument("local_epochs must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

// dims = [input, hidden..., classes]; the last layer is the classifier.
inline ModelParams init_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("init_mlp: need at least input and output dims");
    ModelParams p;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Rng rng = Rng::stream(seed, {0x1217u, l});
        Layer layer;
        layer.w = Tensor2(dims[l + 1], dims[l]);
        layer.b.assign(dims[l + 1], 0.0);
        const double scale = std::sqrt(2.0 / static_cast<double>(dims[l]));
        for (auto& x : layer.w.data) x = scale * rng.gaussian();
        p.layers.push_back(std::move(layer));
    }
    p.split = p.layers.size() - 1;
    return p;
}

inline void check_congruent(const ModelParams& a, const ModelParams& b, const char* what) {
    if (a.layers.size() != b.layers.size())
        throw std::invalid_argument(std::string(what) + ": layer count mismatch");
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        if (!a.layers[l].w.same_shape(b.layers[l].w) || a.layers[l].b.size() != b.layers[l].b.size())
            throw std::invalid_argument(std::string(what) + ": shape mismatch at layer " +
                                        std::to_string(l));
    }
}

namespace detail {

// out = a * w^T + b, row-major everywhere
inline void affine(const Tensor2& a, const Layer& layer, Tensor2& out) {
    const std::size_t B = a.rows, I = a.cols, O = layer.w.rows;
    out = Tensor2(B, O);
    for (std::size_t r = 0; r < B; ++r) {
        const double* ar = a.data.data() + r * I;
        double* orow = out.data.data() + r * O;
        for (std::size_t o = 0; o < O; ++o) {
            const double* wr = layer.w.data.data() + o * I;
            double s = layer.b[o];
            for (std::size_t i = 0; i < I; ++i) s += ar[i] * wr[i];
            orow[o] = s;
        }
    }
}

inline void relu_inplace(Tensor2& t) {
    for (auto& x : t.data) x = x > 0.0 ? x : 0.0;
}

}  // namespace detail

struct ForwardTrace {
    // activations[0] = input batch; activations[l+1] = output of layer l
    // (post-ReLU for all but the last layer, raw logits for the last).
    std::vector<Tensor2> activations;
};

struct ForwardResult {
    Tensor2 features;
    Tensor2 logits;
};

inline ForwardResult forward(const ModelParams& params, const Tensor2& batch,
                             ForwardTrace* trace = nullptr) {
    if (batch.cols != params.input_dim())
        throw std::invalid_argument("forward: batch has " + std::to_string(batch.cols) +
                                    " columns, model expects " + std::to_string(params.input_dim()));
    if (trace) {
        trace->activations.clear();
        trace->activations.push_back(batch);
    }
    Tensor2 a = batch;
    Tensor2 features;
    if (params.split == 0) features = batch;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        Tensor2 z;
        detail::affine(a, params.layers[l], z);
        if (l + 1 < params.layers.size()) detail::relu_inplace(z);
        a = std::move(z);
        if (trace) trace->activations.push_back(a);
        if (l + 1 == params.split) features = a;
    }
    return {std::move(features), std::move(a)};
}

inline Tensor2 softmax_rows(const Tensor2& logits) {
    Tensor2 p(logits.rows, logits.cols);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        auto in = logits.row(r);
        auto out = p.row(r);
        double mx = in[0];
        for (double x : in) mx = std::max(mx, x);
        double sum = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            out[c] = std::exp(in[c] - mx);
            sum += out[c];
        }
        for (auto& x : out) x /= sum;
    }
    return p;
}

// Extra loss evaluated on the embedding batch; its gradient is chained back
// through the feature extractor.
struct ExtraTerm {
    double value = 0.0;
    Tensor2 dfeatures;  // same shape as features; empty means zero
};
using ExtraLossFn = std::function<ExtraTerm(const Tensor2& features)>;

struct LossGrads {
    double total = 0.0;
    double ce = 0.0;
    double extra = 0.0;
    Gradients grads;
    Tensor2 input_grad;  // filled only when requested
};

namespace detail {

inline void check_finite_activations(const ForwardTrace& trace) {
    for (std::size_t l = 1; l < trace.activations.size(); ++l) {
        if (!all_finite(trace.activations[l]))
            throw std::runtime_error("non-finite activation at layer " + std::to_string(l - 1));
    }
}

// Backward pass from dL/dlogits. extra_dfeatures (if non-empty) is added to
// the gradient of the classifier input before continuing through f.
inline void backward(const ModelParams& params, const ForwardTrace& trace, Tensor2 dlogits,
                     const Tensor2* extra_dfeatures, Gradients& grads, Tensor2* input_grad) {
    const std::size_t L = params.layers.size();
    grads.layers.assign(L, {});
    grads.split = params.split;
    Tensor2 g = std::move(dlogits);  // dL/dz of current layer
    for (std::size_t li = L; li-- > 0;) {
        const Layer& layer = params.layers[li];
        const Tensor2& a_in = trace.activations[li];
        const std::size_t B = g.rows, O = layer.w.rows, I = layer.w.cols;
        Layer& gl = grads.layers[li];
        gl.w = Tensor2(O, I);
        gl.b.assign(O, 0.0);
        for (std::size_t r = 0; r < B; ++r) {
            const double* grow = g.data.data() + r * O;
            const double* arow = a_in.data.data() + r * I;
            for (std::size_t o = 0; o < O; ++o) {
                const double gv = grow[o];
                if (gv == 0.0) continue;
                double* wrow = gl.w.data.data() + o * I;
                for (std::size_t i = 0; i < I; ++i) wrow[i] += gv * arow[i];
                gl.b[o] += gv;
            }
        }
        const bool need_da = li > 0 || input_grad != nullptr;
        if (!need_da) break;
        Tensor2 da(B, I);
        for (std::size_t r = 0; r < B; ++r) {
            const double* grow = g.data.data() + r * O;
            double* darow = da.data.data() + r * I;
            for (std::size_t o = 0; o < O; ++o) {
                const double gv = grow[o];
                if (gv == 0.0) continue;
                const double* wrow = layer.w.data.data() + o * I;
                for (std::size_t i = 0; i < I; ++i) darow[i] += gv * wrow[i];
            }
        }
        if (li == params.split && extra_dfeatures && !extra_dfeatures->data.empty()) {
            // Skip exact zeros so a zero-weighted extra term cannot perturb
            // the sign of -0.0 entries.
            for (std::size_t i = 0; i < da.data.size(); ++i) {
                const double ev = extra_dfeatures->data[i];
                if (ev != 0.0) da.data[i] += ev;
            }
        }
        if (li > 0) {
            // ReLU mask of the producing layer
            for (std::size_t i = 0; i < da.data.size(); ++i)
                if (a_in.data[i] <= 0.0) da.data[i] = 0.0;
            g = std::move(da);
        } else if (input_grad) {
            *input_grad = std::move(da);
        }
    }
}

}  // namespace detail

// Mean cross-entropy over the batch plus an optional extra loss on the
// embeddings; gradients are exact analytic derivatives of the sum.
inline LossGrads loss_and_grads(const ModelParams& params, const Tensor2& batch,
                                const std::vector<int>& labels, const ExtraLossFn& extra = nullptr,
                                bool with_input_grad = false) {
    if (batch.rows == 0) throw std::invalid_argument("loss_and_grads: empty batch");
    if (labels.size() != batch.rows)
        throw std::invalid_argument("loss_and_grads: labels/batch size mismatch");
    const std::size_t C = params.output_dim();
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= C)
            throw std::invalid_argument("loss_and_grads: label out of range");

    ForwardTrace trace;
    ForwardResult fr = forward(params, batch, &trace);
    detail::check_finite_activations(trace);

    const std::size_t B = batch.rows;
    Tensor2 probs = softmax_rows(fr.logits);
    double ce = 0.0;
    Tensor2 dlogits(B, C);
    const double invB = 1.0 / static_cast<double>(B);
    for (std::size_t r = 0; r < B; ++r) {
        const auto prow = probs.row(r);
        auto drow = dlogits.row(r);
        const int y = labels[r];
        ce -= std::log(std::max(prow[y], 1e-300));
        for (std::size_t c = 0; c < C; ++c)
            drow[c] = (prow[c] - (static_cast<int>(c) == y ? 1.0 : 0.0)) * invB;
    }
    ce *= invB;

    LossGrads out;
    out.ce = ce;
    Tensor2 extra_grad;
    if (extra) {
        ExtraTerm term = extra(fr.features);
        out.extra = term.value;
        if (!term.dfeatures.data.empty()) {
            if (!term.dfeatures.same_shape(fr.features))
                throw std::invalid_argument("extra loss gradient shape mismatch");
            extra_grad = std::move(term.dfeatures);
        }
    }
    out.total = out.ce + out.extra;
    detail::backward(params, trace, std::move(dlogits), extra_grad.data.empty() ? nullptr : &extra_grad,
                     out.grads, with_input_grad ? &out.input_grad : nullptr);
    return out;
}

// Gradient of the mean CE w.r.t. the input batch, for attack generation.
inline Tensor2 input_gradient(const ModelParams& params, const Tensor2& batch,
                              const std::vector<int>& labels, const ExtraLossFn& extra = nullptr) {
    return loss_and_grads(params, batch, labels, extra, true).input_grad;
}

inline ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double lr) {
    check_congruent(params, grads, "sgd_step");
    ModelParams next = params;
    for (std::size_t l = 0; l < next.layers.size(); ++l) {
        auto& layer = next.layers[l];
        const auto& gl = grads.layers[l];
        for (std::size_t i = 0; i < layer.w.data.size(); ++i) layer.w.data[i] -= lr * gl.w.data[i];
        for (std::size_t i = 0; i < layer.b.size(); ++i) layer.b[i] -= lr * gl.b[i];
    }
    return next;
}

inline std::vector<int> predict(const ModelParams& params, const Tensor2& batch) {
    ForwardResult fr = forward(params, batch);
    std::vector<int> out(batch.rows);
    for (std::size_t r = 0; r < batch.rows; ++r) {
        auto row = fr.logits.row(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c)
            if (row[c] > row[best]) best = c;
        out[r] = static_cast<int>(best);
    }
    return out;
}

inline double accuracy(const ModelParams& params, const Tensor2& x, const std::vector<int>& y) {
    if (x.rows == 0) return 0.0;
    const std::vector<int> pred = predict(params, x);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (pred[i] == y[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(x.rows);
}

}  // namespace fedccl
