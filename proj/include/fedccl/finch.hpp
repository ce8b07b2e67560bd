#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tensor.hpp"

namespace fedccl {

struct ClusterPartition {
    std::vector<std::size_t> assignment;  // vector index -> cluster id in [0, k)
    std::size_t k = 0;
    std::size_t level = 0;
};

struct NeighborTable {
    std::vector<std::size_t> first_neighbor;
};

// First neighbor under cosine similarity; equal similarities break toward
// the lowest candidate index.
inline NeighborTable first_neighbors(const std::vector<std::vector<double>>& vectors) {
    const std::size_t n = vectors.size();
    if (n < 2) throw std::invalid_argument("first_neighbors: need at least 2 vectors");
    NeighborTable t;
    t.first_neighbor.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = i == 0 ? 1 : 0;
        double best_sim = cosine_sim(vectors[i], vectors[best]);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double s = cosine_sim(vectors[i], vectors[j]);
            if (s > best_sim) {
                best_sim = s;
                best = j;
            }
        }
        t.first_neighbor[i] = best;
    }
    return t;
}

namespace detail {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[b] = a;
    }
};

}  // namespace detail

// Connected components of the undirected graph with an edge (m, n) whenever
// n is m's first neighbor, m is n's first neighbor, or both share a first
// neighbor. Linking every node to its first neighbor covers all three
// clauses. Component ids follow first appearance.
inline ClusterPartition adjacency_partition(const NeighborTable& neighbors) {
    const std::size_t n = neighbors.first_neighbor.size();
    detail::UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = neighbors.first_neighbor[i];
        if (j >= n || j == i) throw std::invalid_argument("adjacency_partition: bad neighbor table");
        uf.unite(i, j);
    }
    ClusterPartition p;
    p.assignment.assign(n, 0);
    std::vector<std::size_t> label(n, SIZE_MAX);
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = uf.find(i);
        if (label[root] == SIZE_MAX) label[root] = next++;
        p.assignment[i] = label[root];
    }
    p.k = next;
    return p;
}

inline std::vector<std::vector<double>> cluster_means(const std::vector<std::vector<double>>& vectors,
                                                      const ClusterPartition& partition) {
    if (partition.assignment.size() != vectors.size())
        throw std::invalid_argument("cluster_means: partition does not match vectors");
    const std::size_t d = vectors.empty() ? 0 : vectors.front().size();
    std::vector<std::vector<double>> sums(partition.k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(partition.k, 0);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const std::size_t c = partition.assignment[i];
        ++counts[c];
        for (std::size_t j = 0; j < d; ++j) sums[c][j] += vectors[i][j];
    }
    for (std::size_t c = 0; c < partition.k; ++c) {
        const double inv = 1.0 / static_cast<double>(counts[c]);
        for (auto& x : sums[c]) x *= inv;
    }
    return sums;
}

struct FinchResult {
    std::vector<ClusterPartition> levels;
    const ClusterPartition& final_partition() const { return levels.back(); }
};

// First-neighbor hierarchical clustering. Level 0 partitions the points by
// the first-neighbor graph; each next level clusters the current level's
// cluster means and relabels points through the composition. A step whose
// cluster count reaches 1 or stops changing is discarded, so the final
// partition is the last non-trivial one (level 0 is always kept, even when
// it is a single cluster).
inline FinchResult finch_cluster(const std::vector<std::vector<double>>& vectors) {
    if (vectors.empty()) throw std::invalid_argument("finch_cluster: empty input");
    FinchResult res;
    if (vectors.size() == 1) {
        ClusterPartition p;
        p.assignment = {0};
        p.k = 1;
        p.level = 0;
        res.levels.push_back(std::move(p));
        return res;
    }
    ClusterPartition current = adjacency_partition(first_neighbors(vectors));
    current.level = 0;
    res.levels.push_back(current);
    while (res.levels.back().k > 1) {
        const ClusterPartition& prev = res.levels.back();
        const auto means = cluster_means(vectors, prev);
        ClusterPartition meta = adjacency_partition(first_neighbors(means));
        if (meta.k <= 1 || meta.k >= prev.k) break;
        ClusterPartition merged;
        merged.assignment.resize(vectors.size());
        for (std::size_t i = 0; i < vectors.size(); ++i)
            merged.assignment[i] = meta.assignment[prev.assignment[i]];
        merged.k = meta.k;
        merged.level = prev.level + 1;
        res.levels.push_back(std::move(merged));
    }
    return res;
}

}  // namespace fedccl
