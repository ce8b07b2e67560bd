#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <vector>

#include "finch.hpp"
#include "tensor.hpp"

namespace fedccl {

// Per-class embedding sets for one client; index = class id. Classes with no
// local samples keep empty lists.
using EmbeddingsByClass = std::vector<std::vector<std::vector<double>>>;

struct LocalSignalSet {
    int client_id = -1;
    std::vector<std::vector<std::vector<double>>> by_class;  // class -> signals
};

struct PooledSignal {
    int client_id = -1;
    std::vector<double> vec;
};

struct ClassSignalPool {
    std::vector<std::vector<PooledSignal>> by_class;  // class -> pooled signals

    std::size_t classes() const { return by_class.size(); }
    bool empty() const {
        for (const auto& c : by_class)
            if (!c.empty()) return false;
        return true;
    }
};

struct GlobalSignalTable {
    // class -> single consistent signal; `present[j]` guards classes that had
    // no pooled signals anywhere.
    std::vector<std::vector<double>> signal;
    std::vector<bool> present;
    std::vector<std::vector<std::vector<double>>> clustered;  // intermediate G_j

    std::size_t classes() const { return signal.size(); }
    bool empty() const {
        for (bool p : present)
            if (p) return false;
        return true;
    }
};

// One signal per final FINCH cluster of each class's embeddings. A single
// sample is its own signal; empty classes stay empty.
inline LocalSignalSet local_signals(const EmbeddingsByClass& embeddings_by_class, int client_id = -1) {
    LocalSignalSet out;
    out.client_id = client_id;
    out.by_class.resize(embeddings_by_class.size());
    for (std::size_t j = 0; j < embeddings_by_class.size(); ++j) {
        const auto& embs = embeddings_by_class[j];
        if (embs.empty()) continue;
        if (embs.size() == 1) {
            out.by_class[j] = {embs.front()};
            continue;
        }
        const FinchResult fin = finch_cluster(embs);
        out.by_class[j] = cluster_means(embs, fin.final_partition());
    }
    return out;
}

// Plain per-class mean baseline (ablation).
inline LocalSignalSet avg_local_signal(const EmbeddingsByClass& embeddings_by_class,
                                       int client_id = -1) {
    LocalSignalSet out;
    out.client_id = client_id;
    out.by_class.resize(embeddings_by_class.size());
    for (std::size_t j = 0; j < embeddings_by_class.size(); ++j) {
        if (embeddings_by_class[j].empty()) continue;
        out.by_class[j] = {mean_of(embeddings_by_class[j])};
    }
    return out;
}

// Per-class concatenation across clients, preserving client order then
// signal order; no deduplication.
inline ClassSignalPool pool_signals(const std::vector<LocalSignalSet>& sets) {
    if (sets.empty()) throw std::invalid_argument("pool_signals: no clients reporting");
    std::size_t classes = 0;
    for (const auto& s : sets) classes = std::max(classes, s.by_class.size());
    ClassSignalPool pool;
    pool.by_class.resize(classes);
    for (const auto& s : sets) {
        for (std::size_t j = 0; j < s.by_class.size(); ++j) {
            for (const auto& v : s.by_class[j]) pool.by_class[j].push_back({s.client_id, v});
        }
    }
    return pool;
}

// Cluster each class's pooled signals, then average the final cluster means
// into the one consistent per-class signal.
inline GlobalSignalTable global_signals(const ClassSignalPool& pool) {
    GlobalSignalTable table;
    const std::size_t classes = pool.classes();
    table.signal.resize(classes);
    table.present.assign(classes, false);
    table.clustered.resize(classes);
    for (std::size_t j = 0; j < classes; ++j) {
        const auto& pooled = pool.by_class[j];
        if (pooled.empty()) continue;
        std::vector<std::vector<double>> vecs;
        vecs.reserve(pooled.size());
        for (const auto& p : pooled) vecs.push_back(p.vec);
        if (vecs.size() == 1) {
            table.clustered[j] = vecs;
        } else {
            const FinchResult fin = finch_cluster(vecs);
            table.clustered[j] = cluster_means(vecs, fin.final_partition());
        }
        table.signal[j] = mean_of(table.clustered[j]);
        table.present[j] = true;
    }
    return table;
}

// Plain mean of each class's pooled signals (ablation baseline).
inline GlobalSignalTable avg_global_signal(const ClassSignalPool& pool) {
    GlobalSignalTable table;
    const std::size_t classes = pool.classes();
    table.signal.resize(classes);
    table.present.assign(classes, false);
    table.clustered.resize(classes);
    for (std::size_t j = 0; j < classes; ++j) {
        const auto& pooled = pool.by_class[j];
        if (pooled.empty()) continue;
        std::vector<std::vector<double>> vecs;
        vecs.reserve(pooled.size());
        for (const auto& p : pooled) vecs.push_back(p.vec);
        table.signal[j] = mean_of(vecs);
        table.clustered[j] = {table.signal[j]};
        table.present[j] = true;
    }
    return table;
}

}  // namespace fedccl
