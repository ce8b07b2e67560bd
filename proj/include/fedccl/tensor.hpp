#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedccl {

// Dense row-major matrix of 64-bit floats.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
};

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Tensor2& t) { return all_finite(std::span<const double>(t.data)); }

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Cosine similarity with a zero-norm guard: vectors with norm below 1e-12
// yield similarity 0 and, when requested, set *degenerate.
inline double cosine_sim(std::span<const double> a, std::span<const double> b,
                         bool* degenerate = nullptr) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_sim: length mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    const double na = norm(a);
    const double nb = norm(b);
    if (na < 1e-12 || nb < 1e-12) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return dot(a, b) / (na * nb);
}

inline double cosine_sim(const std::vector<double>& a, const std::vector<double>& b,
                         bool* degenerate = nullptr) {
    return cosine_sim(std::span<const double>(a), std::span<const double>(b), degenerate);
}

inline std::vector<double> mean_of(const std::vector<std::vector<double>>& vs) {
    if (vs.empty()) throw std::invalid_argument("mean_of: empty set");
    std::vector<double> m(vs.front().size(), 0.0);
    for (const auto& v : vs)
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += v[i];
    const double inv = 1.0 / static_cast<double>(vs.size());
    for (auto& x : m) x *= inv;
    return m;
}

}  // namespace fedccl
