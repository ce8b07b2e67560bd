#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "adversarial.hpp"
#include "contrast.hpp"
#include "datagen.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "signals.hpp"
#include "tensor.hpp"

namespace fedccl {

enum class LocalPipeline { clustered, averaged };
enum class GlobalPipeline { clustered, averaged };

struct FederationConfig {
    TrainConfig train;
    ContrastConfig contrast;
    std::vector<std::size_t> hidden = {64, 32};
    std::size_t rounds = 50;
    LocalPipeline local_pipe = LocalPipeline::clustered;
    GlobalPipeline global_pipe = GlobalPipeline::clustered;
    bool adversarial_training = false;
    AttackConfig attack;

    void validate() const {
        fedccl::validate(train);
        contrast.validate();
        if (adversarial_training) attack.validate();
    }
};

struct ClientRoundMetrics {
    int client_id = -1;
    double loss_ce = 0.0;
    double loss_local = 0.0;
    double loss_global = 0.0;
    double acc = 0.0;  // post-update local model on the client's own test split
    std::size_t skipped_samples = 0;
    std::size_t n_train = 0;
};

struct RoundMetrics {
    std::size_t round = 0;
    std::vector<ClientRoundMetrics> clients;
    double avg_acc = 0.0;
    double avg_ce = 0.0;
    double avg_local = 0.0;
    double avg_global = 0.0;
    double acc_global = 0.0;  // aggregated model, mean over client test splits
    std::size_t skipped_samples = 0;
    std::vector<std::size_t> signal_counts;  // pooled local signals per class
    double wall_ms = 0.0;                    // never serialized
};

struct ClientUpdate {
    ModelParams params;
    LocalSignalSet signals;
    ClientRoundMetrics metrics;
    bool skipped = false;
};

namespace detail {

inline void gather_batch(const Dataset& data, const std::vector<std::size_t>& order,
                         std::size_t start, std::size_t end, Tensor2& xb, std::vector<int>& yb) {
    xb = Tensor2(end - start, data.features.cols);
    yb.resize(end - start);
    for (std::size_t r = start; r < end; ++r) {
        const auto src = data.features.row(order[r]);
        auto dst = xb.row(r - start);
        std::copy(src.begin(), src.end(), dst.begin());
        yb[r - start] = data.labels[order[r]];
    }
}

inline EmbeddingsByClass embed_by_class(const ModelParams& params, const Dataset& data) {
    EmbeddingsByClass by_class(static_cast<std::size_t>(data.n_classes));
    constexpr std::size_t kChunk = 512;
    for (std::size_t start = 0; start < data.size(); start += kChunk) {
        const std::size_t end = std::min(data.size(), start + kChunk);
        Tensor2 xb(end - start, data.features.cols);
        for (std::size_t r = start; r < end; ++r) {
            const auto src = data.features.row(r);
            auto dst = xb.row(r - start);
            std::copy(src.begin(), src.end(), dst.begin());
        }
        const ForwardResult fr = forward(params, xb);
        for (std::size_t r = start; r < end; ++r) {
            const auto e = fr.features.row(r - start);
            by_class[static_cast<std::size_t>(data.labels[r])].emplace_back(e.begin(), e.end());
        }
    }
    return by_class;
}

}  // namespace detail

// One client round: load the global model, run E epochs of mini-batch SGD on
// the combined objective (optionally on attacked batches), then derive the
// client's signals from the updated model on clean data.
inline ClientUpdate client_local_update(const ClientDataset& data, const ModelParams& global_params,
                                        const ContrastContext& ctx, const FederationConfig& cfg,
                                        std::size_t round, std::uint64_t run_seed) {
    ClientUpdate out;
    out.metrics.client_id = data.client_id;
    out.signals.client_id = data.client_id;
    out.params = global_params;
    if (data.train.size() == 0) {
        out.skipped = true;
        return out;
    }
    out.metrics.n_train = data.train.size();

    const std::uint64_t cid = static_cast<std::uint64_t>(data.client_id);
    Rng shuffle_rng = Rng::stream(run_seed, {0xF00D01ull, round, cid});
    Rng attack_rng = Rng::stream(run_seed, {0xF00D02ull, round, cid});

    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);

    double sum_ce = 0.0, sum_local = 0.0, sum_global = 0.0;
    std::size_t seen = 0;
    Tensor2 xb;
    std::vector<int> yb;
    for (std::size_t epoch = 0; epoch < cfg.train.local_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.train.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.train.batch_size);
            detail::gather_batch(data.train, order, start, end, xb, yb);
            TotalLoss tl;
            if (cfg.adversarial_training) {
                tl = adversarial_total_loss(out.params, xb, yb, ctx, cfg.contrast, cfg.attack,
                                            attack_rng)
                         .tl;
            } else {
                tl = total_loss(out.params, xb, yb, ctx, cfg.contrast);
            }
            out.params = sgd_step(out.params, tl.lg.grads, cfg.train.learning_rate);
            const double b = static_cast<double>(end - start);
            sum_ce += tl.lg.ce * b;
            sum_local += tl.loss_local * b;
            sum_global += tl.loss_global * b;
            out.metrics.skipped_samples += tl.skipped;
            seen += end - start;
        }
    }
    const double inv = 1.0 / static_cast<double>(seen);
    out.metrics.loss_ce = sum_ce * inv;
    out.metrics.loss_local = sum_local * inv;
    out.metrics.loss_global = sum_global * inv;

    const EmbeddingsByClass embs = detail::embed_by_class(out.params, data.train);
    out.signals = cfg.local_pipe == LocalPipeline::clustered
                      ? local_signals(embs, data.client_id)
                      : avg_local_signal(embs, data.client_id);
    out.metrics.acc = accuracy(out.params, data.test.features, data.test.labels);
    return out;
}

// Size-weighted entrywise parameter average.
inline ModelParams server_aggregate_params(const std::vector<ModelParams>& params,
                                           const std::vector<std::size_t>& sizes) {
    if (params.empty()) throw std::invalid_argument("aggregate: no contributions");
    if (params.size() != sizes.size())
        throw std::invalid_argument("aggregate: params/sizes count mismatch");
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (total == 0) throw std::invalid_argument("aggregate: zero total dataset size");

    ModelParams out = params.front();
    for (auto& layer : out.layers) {
        std::fill(layer.w.data.begin(), layer.w.data.end(), 0.0);
        std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        check_congruent(out, params[k], "aggregate");
        const double w = static_cast<double>(sizes[k]) / static_cast<double>(total);
        for (std::size_t l = 0; l < out.layers.size(); ++l) {
            const auto& src = params[k].layers[l];
            auto& dst = out.layers[l];
            for (std::size_t i = 0; i < dst.w.data.size(); ++i) dst.w.data[i] += w * src.w.data[i];
            for (std::size_t i = 0; i < dst.b.size(); ++i) dst.b[i] += w * src.b[i];
        }
    }
    return out;
}

struct RunResult {
    std::vector<RoundMetrics> rounds;
    ModelParams global;
    std::vector<ModelParams> client_params;
};

// Full protocol: per round, every client updates from the same global model
// and previous-round signals; the server pools signals, rebuilds the global
// table, and aggregates parameters. Clients run in a fixed sequential order
// so runs are reproducible on any machine.
inline RunResult run_training(const Scenario& scenario, const FederationConfig& cfg,
                              std::uint64_t run_seed) {
    cfg.validate();
    if (scenario.clients.empty()) throw std::invalid_argument("run_training: no clients");

    std::vector<std::size_t> dims;
    dims.push_back(scenario.input_dim);
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(static_cast<std::size_t>(scenario.n_classes));

    RunResult res;
    res.global = init_mlp(dims, run_seed);
    res.client_params.assign(scenario.clients.size(), res.global);

    ContrastContext ctx;  // empty in round 0: contrast terms vanish
    for (std::size_t t = 0; t < cfg.rounds; ++t) {
        const auto t0 = std::chrono::steady_clock::now();
        RoundMetrics rm;
        rm.round = t;

        std::vector<ClientUpdate> updates;
        updates.reserve(scenario.clients.size());
        for (const auto& client : scenario.clients)
            updates.push_back(client_local_update(client, res.global, ctx, cfg, t, run_seed));

        std::vector<LocalSignalSet> sets;
        std::vector<ModelParams> contrib;
        std::vector<std::size_t> sizes;
        for (auto& u : updates) {
            if (u.skipped) continue;
            sets.push_back(u.signals);
            contrib.push_back(u.params);
            sizes.push_back(u.metrics.n_train);
        }
        if (contrib.empty()) throw std::runtime_error("run_training: every client was empty");

        const ClassSignalPool pool = pool_signals(sets);
        ContrastContext next_ctx;
        next_ctx.local_pool.resize(pool.classes());
        rm.signal_counts.assign(pool.classes(), 0);
        for (std::size_t j = 0; j < pool.classes(); ++j) {
            rm.signal_counts[j] = pool.by_class[j].size();
            for (const auto& p : pool.by_class[j]) next_ctx.local_pool[j].push_back(p.vec);
        }
        next_ctx.global_table = cfg.global_pipe == GlobalPipeline::clustered
                                    ? global_signals(pool)
                                    : avg_global_signal(pool);

        res.global = server_aggregate_params(contrib, sizes);

        std::size_t reporting = 0;
        for (std::size_t k = 0; k < updates.size(); ++k) {
            auto& u = updates[k];
            res.client_params[k] = u.params;
            if (u.skipped) continue;
            rm.clients.push_back(u.metrics);
            rm.avg_acc += u.metrics.acc;
            rm.avg_ce += u.metrics.loss_ce;
            rm.avg_local += u.metrics.loss_local;
            rm.avg_global += u.metrics.loss_global;
            rm.skipped_samples += u.metrics.skipped_samples;
            rm.acc_global += accuracy(res.global, scenario.clients[k].test.features,
                                      scenario.clients[k].test.labels);
            ++reporting;
        }
        const double invn = 1.0 / static_cast<double>(reporting);
        rm.avg_acc *= invn;
        rm.avg_ce *= invn;
        rm.avg_local *= invn;
        rm.avg_global *= invn;
        rm.acc_global *= invn;

        ctx = std::move(next_ctx);
        rm.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                         .count();
        res.rounds.push_back(std::move(rm));
    }
    return res;
}

}  // namespace fedccl
