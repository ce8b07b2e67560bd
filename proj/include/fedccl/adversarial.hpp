#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "contrast.hpp"
#include "datagen.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace fedccl {

struct AttackConfig {
    double eps = 0.3;
    double alpha = 0.01;
    std::size_t steps = 40;
    double clamp_lo = 0.0;
    double clamp_hi = 1.0;
    bool random_start = true;
    std::string objective = "ce";  // "ce" or "total"

    void validate() const {
        if (eps < 0.0) throw std::invalid_argument("attack: eps must be >= 0");
        if (!(alpha > 0.0)) throw std::invalid_argument("attack: alpha must be > 0");
        if (steps < 1) throw std::invalid_argument("attack: steps must be >= 1");
        if (clamp_lo > clamp_hi) throw std::invalid_argument("attack: clamp range inverted");
        if (objective != "ce" && objective != "total")
            throw std::invalid_argument("attack: objective must be 'ce' or 'total'");
    }
};

inline AttackConfig fgsm_config(double eps, double lo = 0.0, double hi = 1.0) {
    AttackConfig atk;
    atk.eps = eps;
    atk.alpha = eps > 0.0 ? eps : 1.0;
    atk.steps = 1;
    atk.clamp_lo = lo;
    atk.clamp_hi = hi;
    atk.random_start = false;
    return atk;
}

inline AttackConfig pgd_config(double eps, double alpha, std::size_t steps, double lo = 0.0,
                               double hi = 1.0) {
    AttackConfig atk;
    atk.eps = eps;
    atk.alpha = alpha;
    atk.steps = steps;
    atk.clamp_lo = lo;
    atk.clamp_hi = hi;
    atk.random_start = true;
    return atk;
}

namespace detail {

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

// Iterated sign-gradient ascent on the chosen objective, projected onto the
// max-norm ball around the original batch and clamped to the valid range.
// steps=1 with alpha=eps and no random start is the one-shot sign attack.
inline Tensor2 pgd_perturb(const ModelParams& params, const Tensor2& batch,
                           const std::vector<int>& labels, const AttackConfig& atk,
                           const ContrastContext& ctx, const ContrastConfig& ccfg, Rng& rng) {
    atk.validate();
    for (double x : batch.data) {
        if (x < atk.clamp_lo || x > atk.clamp_hi)
            throw std::invalid_argument("pgd_perturb: batch outside clamp range");
    }
    if (atk.eps == 0.0) return batch;

    const ContrastContext empty_ctx;
    const bool use_total = atk.objective == "total";

    Tensor2 x = batch;
    if (atk.random_start) {
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const double v = batch.data[i] + rng.uniform(-atk.eps, atk.eps);
            x.data[i] = std::clamp(v, atk.clamp_lo, atk.clamp_hi);
        }
    }
    for (std::size_t step = 0; step < atk.steps; ++step) {
        const TotalLoss tl =
            total_loss(params, x, labels, use_total ? ctx : empty_ctx, ccfg, true);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            double v = x.data[i] + atk.alpha * detail::sgn(tl.lg.input_grad.data[i]);
            v = std::clamp(v, batch.data[i] - atk.eps, batch.data[i] + atk.eps);
            x.data[i] = std::clamp(v, atk.clamp_lo, atk.clamp_hi);
        }
    }
    return x;
}

inline Tensor2 pgd_perturb(const ModelParams& params, const Tensor2& batch,
                           const std::vector<int>& labels, const AttackConfig& atk, Rng& rng) {
    return pgd_perturb(params, batch, labels, atk, ContrastContext{}, ContrastConfig{}, rng);
}

struct AdversarialLoss {
    TotalLoss tl;
    Tensor2 perturbed;
};

// Robust objective: perturb the batch against the configured attack
// objective, then evaluate CE plus both contrast terms on the perturbed
// inputs while the signals stay the clean-data ones from the context.
// Gradients treat the perturbation as a constant.
inline AdversarialLoss adversarial_total_loss(const ModelParams& params, const Tensor2& batch,
                                              const std::vector<int>& labels,
                                              const ContrastContext& ctx,
                                              const ContrastConfig& ccfg, const AttackConfig& atk,
                                              Rng& rng) {
    AdversarialLoss out;
    out.perturbed = pgd_perturb(params, batch, labels, atk, ctx, ccfg, rng);
    out.tl = total_loss(params, out.perturbed, labels, ctx, ccfg);
    return out;
}

// White-box accuracy on perturbed test inputs, batched; a zero-radius attack
// degenerates to the clean accuracy bit for bit.
inline double evaluate_under_attack(const ModelParams& params, const Dataset& test,
                                    const AttackConfig& atk, std::uint64_t seed) {
    if (test.size() == 0) return 0.0;
    Rng rng = Rng::stream(seed, {0xADF1EEull});
    constexpr std::size_t kChunk = 256;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < test.size(); start += kChunk) {
        const std::size_t end = std::min(test.size(), start + kChunk);
        Tensor2 xb(end - start, test.features.cols);
        std::vector<int> yb(end - start);
        for (std::size_t r = start; r < end; ++r) {
            const auto src = test.features.row(r);
            auto dst = xb.row(r - start);
            std::copy(src.begin(), src.end(), dst.begin());
            yb[r - start] = test.labels[r];
        }
        const Tensor2 xa = pgd_perturb(params, xb, yb, atk, rng);
        const std::vector<int> pred = predict(params, xa);
        for (std::size_t i = 0; i < yb.size(); ++i)
            if (pred[i] == yb[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(test.size());
}

}  // namespace fedccl
