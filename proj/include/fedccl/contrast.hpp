#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "model.hpp"
#include "signals.hpp"
#include "tensor.hpp"

namespace fedccl {

struct ContrastConfig {
    double temperature = 0.07;
    double w_local = 1.0;
    double w_global = 1.0;
    bool use_local = true;
    bool use_global = true;

    void validate() const {
        if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
        if (w_local < 0.0 || w_global < 0.0)
            throw std::invalid_argument("contrast weights must be >= 0");
    }
};

// Signals a client trains against: the previous round's pooled local signals
// and the previous round's global table.
struct ContrastContext {
    std::vector<std::vector<std::vector<double>>> local_pool;  // class -> signals
    GlobalSignalTable global_table;

    bool has_local() const {
        for (const auto& c : local_pool)
            if (!c.empty()) return true;
        return false;
    }
    bool has_global() const { return !global_table.empty(); }
    bool empty() const { return !has_local() && !has_global(); }
};

struct SampleContrast {
    double value = 0.0;
    std::vector<double> grad;  // d(value)/d(embedding)
    bool skipped = false;
};

namespace detail {

// d cos(e, z) / d e, written into `out` scaled by `coef`.
inline void add_cos_grad(std::span<const double> e, double e_norm,
                         std::span<const double> z, double coef, std::vector<double>& out) {
    const double z_norm = norm(z);
    if (e_norm < 1e-12 || z_norm < 1e-12) return;
    const double cos = dot(e, z) / (e_norm * z_norm);
    const double inv_e = 1.0 / e_norm;
    for (std::size_t d = 0; d < e.size(); ++d) {
        out[d] += coef * (z[d] / z_norm - cos * e[d] * inv_e) * inv_e;
    }
}

inline double logsumexp(const std::vector<double>& xs) {
    double m = xs.front();
    for (double x : xs) m = std::max(m, x);
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace detail

// Pulls the embedding toward the pooled same-class signals and away from all
// other classes' signals: -log of the summed positive mass over the summed
// total mass. With no negatives the ratio is 1 and the loss exactly 0.
inline SampleContrast local_contrast(std::span<const double> embedding, int label,
                                     const std::vector<std::vector<std::vector<double>>>& pool,
                                     double tau) {
    SampleContrast out;
    out.grad.assign(embedding.size(), 0.0);
    if (label < 0 || static_cast<std::size_t>(label) >= pool.size() ||
        pool[static_cast<std::size_t>(label)].empty()) {
        out.skipped = true;
        return out;
    }

    const double e_norm = norm(embedding);
    std::vector<const std::vector<double>*> signals;
    std::vector<bool> positive;
    bool any_negative = false;
    for (std::size_t j = 0; j < pool.size(); ++j) {
        for (const auto& z : pool[j]) {
            signals.push_back(&z);
            positive.push_back(static_cast<int>(j) == label);
            any_negative = any_negative || static_cast<int>(j) != label;
        }
    }
    if (!any_negative) return out;  // numerator = denominator

    std::vector<double> scaled(signals.size());
    std::vector<double> pos_scaled;
    for (std::size_t m = 0; m < signals.size(); ++m) {
        scaled[m] = cosine_sim(embedding, std::span<const double>(*signals[m])) / tau;
        if (positive[m]) pos_scaled.push_back(scaled[m]);
    }
    const double lse_all = detail::logsumexp(scaled);
    const double lse_pos = detail::logsumexp(pos_scaled);
    out.value = lse_all - lse_pos;

    // d loss / d scaled[m]: exp(s-lse_all) for every signal, minus
    // exp(s-lse_pos) for positives; chain through /tau.
    for (std::size_t m = 0; m < signals.size(); ++m) {
        double coef = std::exp(scaled[m] - lse_all);
        if (positive[m]) coef -= std::exp(scaled[m] - lse_pos);
        detail::add_cos_grad(embedding, e_norm, std::span<const double>(*signals[m]), coef / tau,
                             out.grad);
    }
    return out;
}

// Softmax cross-entropy over the per-class global signals with the sample's
// class as target.
inline SampleContrast global_contrast(std::span<const double> embedding, int label,
                                      const GlobalSignalTable& table, double tau) {
    SampleContrast out;
    out.grad.assign(embedding.size(), 0.0);
    const std::size_t lbl = static_cast<std::size_t>(label);
    if (label < 0 || lbl >= table.classes() || !table.present[lbl]) {
        out.skipped = true;
        return out;
    }

    const double e_norm = norm(embedding);
    std::vector<std::size_t> classes;
    std::vector<double> scaled;
    std::size_t target_idx = 0;
    for (std::size_t j = 0; j < table.classes(); ++j) {
        if (!table.present[j]) continue;
        if (j == lbl) target_idx = classes.size();
        classes.push_back(j);
        scaled.push_back(cosine_sim(embedding, std::span<const double>(table.signal[j])) / tau);
    }
    const double lse = detail::logsumexp(scaled);
    out.value = lse - scaled[target_idx];

    for (std::size_t m = 0; m < classes.size(); ++m) {
        double coef = std::exp(scaled[m] - lse);
        if (m == target_idx) coef -= 1.0;
        detail::add_cos_grad(embedding, e_norm,
                             std::span<const double>(table.signal[classes[m]]), coef / tau,
                             out.grad);
    }
    return out;
}

struct BatchContrast {
    double local_value = 0.0;   // batch mean, unweighted
    double global_value = 0.0;  // batch mean, unweighted
    double total = 0.0;         // w_local * local + w_global * global
    Tensor2 dfeatures;          // d(total)/d(embeddings)
    std::size_t skipped_local = 0;
    std::size_t skipped_global = 0;
};

// Both losses over one batch of embeddings; values are means over the full
// batch, with skipped samples contributing zero.
inline BatchContrast contrast_batch(const Tensor2& features, std::span<const int> labels,
                                    const ContrastContext& ctx, const ContrastConfig& cfg) {
    cfg.validate();
    if (features.rows != labels.size())
        throw std::invalid_argument("contrast_batch: features/labels size mismatch");
    if (features.rows == 0) throw std::invalid_argument("contrast_batch: empty batch");

    BatchContrast out;
    out.dfeatures = Tensor2(features.rows, features.cols);
    const double inv_b = 1.0 / static_cast<double>(features.rows);
    const bool do_local = cfg.use_local && ctx.has_local();
    const bool do_global = cfg.use_global && ctx.has_global();

    for (std::size_t i = 0; i < features.rows; ++i) {
        const auto e = features.row(i);
        auto drow = out.dfeatures.row(i);
        if (do_local) {
            const SampleContrast sc = local_contrast(e, labels[i], ctx.local_pool, cfg.temperature);
            if (sc.skipped) {
                ++out.skipped_local;
            } else {
                out.local_value += sc.value * inv_b;
                const double w = cfg.w_local * inv_b;
                for (std::size_t d = 0; d < e.size(); ++d) drow[d] += w * sc.grad[d];
            }
        }
        if (do_global) {
            const SampleContrast sc =
                global_contrast(e, labels[i], ctx.global_table, cfg.temperature);
            if (sc.skipped) {
                ++out.skipped_global;
            } else {
                out.global_value += sc.value * inv_b;
                const double w = cfg.w_global * inv_b;
                for (std::size_t d = 0; d < e.size(); ++d) drow[d] += w * sc.grad[d];
            }
        }
    }
    out.total = cfg.w_local * out.local_value + cfg.w_global * out.global_value;
    return out;
}

struct TotalLoss {
    LossGrads lg;
    double loss_local = 0.0;
    double loss_global = 0.0;
    std::size_t skipped = 0;
};

// CE plus whichever contrast terms are enabled and have signals available.
// When neither term applies, this takes the exact plain-CE path so the
// baseline protocol is reproduced bit for bit.
inline TotalLoss total_loss(const ModelParams& params, const Tensor2& batch,
                            const std::vector<int>& labels, const ContrastContext& ctx,
                            const ContrastConfig& cfg, bool with_input_grad = false) {
    TotalLoss out;
    const bool active = (cfg.use_local && ctx.has_local()) || (cfg.use_global && ctx.has_global());
    if (!active) {
        out.lg = loss_and_grads(params, batch, labels, nullptr, with_input_grad);
        return out;
    }
    const ExtraLossFn fn = [&](const Tensor2& feats) {
        BatchContrast bc = contrast_batch(feats, std::span<const int>(labels), ctx, cfg);
        out.loss_local = bc.local_value;
        out.loss_global = bc.global_value;
        out.skipped = bc.skipped_local + bc.skipped_global;
        ExtraTerm term;
        term.value = bc.total;
        term.dfeatures = std::move(bc.dfeatures);
        return term;
    };
    out.lg = loss_and_grads(params, batch, labels, fn, with_input_grad);
    return out;
}

}  // namespace fedccl
