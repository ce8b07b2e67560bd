#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace fedccl {

struct Dataset {
    Tensor2 features;  // n x d
    std::vector<int> labels;
    int n_classes = 0;

    std::size_t size() const { return labels.size(); }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
        for (int y : labels) ++counts[static_cast<std::size_t>(y)];
        return counts;
    }

    void validate(const std::string& what) const {
        if (features.rows != labels.size())
            throw std::invalid_argument(what + ": feature/label count mismatch");
        for (int y : labels) {
            if (y < 0 || y >= n_classes)
                throw std::invalid_argument(what + ": label out of range [0, C)");
        }
        if (!all_finite(features)) throw std::invalid_argument(what + ": non-finite feature");
    }
};

inline Dataset subset(const Dataset& d, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.n_classes = d.n_classes;
    out.features = Tensor2(idx.size(), d.features.cols);
    out.labels.reserve(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto src = d.features.row(idx[r]);
        auto dst = out.features.row(r);
        std::copy(src.begin(), src.end(), dst.begin());
        out.labels.push_back(d.labels[idx[r]]);
    }
    return out;
}

inline std::vector<std::vector<std::size_t>> indices_by_class(const std::vector<int>& labels,
                                                              int n_classes) {
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= n_classes) throw std::invalid_argument("label out of range [0, C)");
        by_class[static_cast<std::size_t>(y)].push_back(i);
    }
    return by_class;
}

// Integer apportionment of `total` across weights by largest remainder.
inline std::vector<std::size_t> largest_remainder(std::size_t total,
                                                  const std::vector<double>& weights) {
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(wsum > 0.0)) throw std::invalid_argument("largest_remainder: weights sum to zero");
    std::vector<std::size_t> counts(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> frac;  // (-fraction, index) for stable sort
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double share = static_cast<double>(total) * weights[i] / wsum;
        counts[i] = static_cast<std::size_t>(std::floor(share));
        assigned += counts[i];
        frac.push_back({-(share - std::floor(share)), i});
    }
    std::stable_sort(frac.begin(), frac.end());
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[frac[k % frac.size()].second];
    return counts;
}

struct TrainTest {
    Dataset train;
    Dataset test;
};

// Isotropic Gaussian blobs at mutually separated unit-norm centers.
// Centers are orthogonalized while possible, rejection-sampled past that.
// Split rule: per class, the last floor(n/5) samples go to test.
inline TrainTest synth_gaussians(std::size_t n_classes, std::size_t dim,
                                 std::size_t n_per_class, std::uint64_t seed,
                                 double sigma = 0.25) {
    if (n_classes < 2) throw std::invalid_argument("synth_gaussians: need >= 2 classes");
    if (dim == 0 || n_per_class == 0)
        throw std::invalid_argument("synth_gaussians: dim and n_per_class must be positive");

    Rng crng = Rng::stream(seed, {0x5EED01ull});
    std::vector<std::vector<double>> centers;
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::vector<double> v(dim);
        double best_sep = 2.0;
        std::vector<double> best;
        for (int attempt = 0; attempt < 256; ++attempt) {
            for (auto& x : v) x = crng.gaussian();
            // Project out existing centers when dimensions allow exact orthogonality.
            if (centers.size() < dim) {
                for (const auto& u : centers) {
                    const double p = dot(std::span<const double>(v), std::span<const double>(u));
                    for (std::size_t k = 0; k < dim; ++k) v[k] -= p * u[k];
                }
            }
            const double n = norm(std::span<const double>(v));
            if (n < 1e-8) continue;
            for (auto& x : v) x /= n;
            double worst = 0.0;
            for (const auto& u : centers)
                worst = std::max(worst, std::abs(cosine_sim(v, u)));
            if (worst < best_sep) {
                best_sep = worst;
                best = v;
            }
            if (worst <= 0.5) break;
        }
        centers.push_back(best);
    }

    const std::size_t n_test = n_per_class / 5;
    const std::size_t n_train = n_per_class - n_test;
    TrainTest out;
    out.train.n_classes = out.test.n_classes = static_cast<int>(n_classes);
    out.train.features = Tensor2(n_train * n_classes, dim);
    out.test.features = Tensor2(n_test * n_classes, dim);
    std::size_t tr = 0, te = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        Rng srng = Rng::stream(seed, {0x5EED02ull, static_cast<std::uint64_t>(c)});
        for (std::size_t s = 0; s < n_per_class; ++s) {
            const bool is_test = s >= n_train;
            auto row = is_test ? out.test.features.row(te) : out.train.features.row(tr);
            for (std::size_t k = 0; k < dim; ++k)
                row[k] = centers[c][k] + sigma * srng.gaussian();
            if (is_test) {
                out.test.labels.push_back(static_cast<int>(c));
                ++te;
            } else {
                out.train.labels.push_back(static_cast<int>(c));
                ++tr;
            }
        }
    }
    return out;
}

namespace detail {

// Smooth 28x28 grayscale template: coarse 7x7 random grid, bilinear upsample.
inline std::vector<double> image_template(Rng& rng) {
    constexpr std::size_t G = 7, S = 28;
    std::vector<double> grid(G * G);
    for (auto& g : grid) g = rng.uniform01();
    std::vector<double> img(S * S);
    const double scale = static_cast<double>(G - 1) / static_cast<double>(S - 1);
    for (std::size_t r = 0; r < S; ++r) {
        const double gr = static_cast<double>(r) * scale;
        const std::size_t r0 = std::min(static_cast<std::size_t>(gr), G - 2);
        const double fr = gr - static_cast<double>(r0);
        for (std::size_t c = 0; c < S; ++c) {
            const double gc = static_cast<double>(c) * scale;
            const std::size_t c0 = std::min(static_cast<std::size_t>(gc), G - 2);
            const double fc = gc - static_cast<double>(c0);
            const double v00 = grid[r0 * G + c0], v01 = grid[r0 * G + c0 + 1];
            const double v10 = grid[(r0 + 1) * G + c0], v11 = grid[(r0 + 1) * G + c0 + 1];
            img[r * S + c] = (1 - fr) * ((1 - fc) * v00 + fc * v01) +
                             fr * ((1 - fc) * v10 + fc * v11);
        }
    }
    return img;
}

inline void render_image_sample(const std::vector<double>& tmpl, Rng& rng,
                                std::span<double> out) {
    constexpr std::size_t S = 28;
    const int dx = static_cast<int>(rng.uniform_index(7)) - 3;
    const int dy = static_cast<int>(rng.uniform_index(7)) - 3;
    const double intensity = 0.6 + 0.4 * rng.uniform01();
    for (std::size_t r = 0; r < S; ++r) {
        const std::size_t sr = static_cast<std::size_t>((static_cast<int>(r) + dy + 28) % 28);
        for (std::size_t c = 0; c < S; ++c) {
            const std::size_t sc = static_cast<std::size_t>((static_cast<int>(c) + dx + 28) % 28);
            double v = intensity * tmpl[sr * S + sc] + 0.25 * rng.gaussian();
            out[r * S + c] = std::clamp(v, 0.0, 1.0);
        }
    }
}

}  // namespace detail

// Deterministic 28x28 image stand-in: one smooth template per class, samples
// jittered by translation, intensity, and pixel noise. `variant` separates
// otherwise identical corpora.
inline TrainTest synth_images(std::size_t n_classes, std::size_t n_train_per_class,
                              std::size_t n_test_per_class, std::uint64_t seed,
                              std::uint64_t variant = 0) {
    if (n_classes < 2) throw std::invalid_argument("synth_images: need >= 2 classes");
    constexpr std::size_t D = 28 * 28;
    TrainTest out;
    out.train.n_classes = out.test.n_classes = static_cast<int>(n_classes);
    out.train.features = Tensor2(n_train_per_class * n_classes, D);
    out.test.features = Tensor2(n_test_per_class * n_classes, D);
    std::size_t tr = 0, te = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        Rng trng = Rng::stream(seed, {0x5EED10ull, variant, static_cast<std::uint64_t>(c)});
        const std::vector<double> tmpl = detail::image_template(trng);
        Rng srng = Rng::stream(seed, {0x5EED11ull, variant, static_cast<std::uint64_t>(c)});
        for (std::size_t s = 0; s < n_train_per_class; ++s) {
            detail::render_image_sample(tmpl, srng, out.train.features.row(tr));
            out.train.labels.push_back(static_cast<int>(c));
            ++tr;
        }
        Rng erng = Rng::stream(seed, {0x5EED12ull, variant, static_cast<std::uint64_t>(c)});
        for (std::size_t s = 0; s < n_test_per_class; ++s) {
            detail::render_image_sample(tmpl, erng, out.test.features.row(te));
            out.test.labels.push_back(static_cast<int>(c));
            ++te;
        }
    }
    return out;
}

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in, const std::string& path, std::size_t offset) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (in.gcount() != 4)
        throw std::runtime_error(path + ": truncated file at byte " + std::to_string(offset));
    return (static_cast<std::uint32_t>(buf[0]) << 24) | (static_cast<std::uint32_t>(buf[1]) << 16) |
           (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

inline void write_be_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace detail

// IDX image/label pair -> dataset with pixels in [0,1], rows flattened.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error(images_path + ": cannot open");
    const std::uint32_t img_magic = detail::read_be_u32(img, images_path, 0);
    if (img_magic != 0x00000803u)
        throw std::runtime_error(images_path + ": bad magic at byte 0 (got 0x" +
                                 [&] {
                                     char b[16];
                                     std::snprintf(b, sizeof b, "%08x", img_magic);
                                     return std::string(b);
                                 }() +
                                 ", want 0x00000803)");
    const std::uint32_t n = detail::read_be_u32(img, images_path, 4);
    const std::uint32_t rows = detail::read_be_u32(img, images_path, 8);
    const std::uint32_t cols = detail::read_be_u32(img, images_path, 12);

    std::ifstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw std::runtime_error(labels_path + ": cannot open");
    const std::uint32_t lbl_magic = detail::read_be_u32(lbl, labels_path, 0);
    if (lbl_magic != 0x00000801u)
        throw std::runtime_error(labels_path + ": bad magic at byte 0 (got 0x" +
                                 [&] {
                                     char b[16];
                                     std::snprintf(b, sizeof b, "%08x", lbl_magic);
                                     return std::string(b);
                                 }() +
                                 ", want 0x00000801)");
    const std::uint32_t n_lbl = detail::read_be_u32(lbl, labels_path, 4);
    if (n != n_lbl)
        throw std::runtime_error(images_path + ": image count " + std::to_string(n) +
                                 " != label count " + std::to_string(n_lbl));

    Dataset out;
    const std::size_t d = static_cast<std::size_t>(rows) * cols;
    out.features = Tensor2(n, d);
    out.labels.resize(n);
    std::vector<unsigned char> buf(d);
    for (std::size_t i = 0; i < n; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(d));
        if (img.gcount() != static_cast<std::streamsize>(d))
            throw std::runtime_error(images_path + ": truncated file at byte " +
                                     std::to_string(16 + i * d));
        auto row = out.features.row(i);
        for (std::size_t k = 0; k < d; ++k) row[k] = static_cast<double>(buf[k]) / 255.0;
    }
    int max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        unsigned char y;
        lbl.read(reinterpret_cast<char*>(&y), 1);
        if (lbl.gcount() != 1)
            throw std::runtime_error(labels_path + ": truncated file at byte " +
                                     std::to_string(8 + i));
        out.labels[i] = static_cast<int>(y);
        max_label = std::max(max_label, out.labels[i]);
    }
    out.n_classes = max_label + 1;
    return out;
}

// Inverse of load_idx for features already in [0,1]; rows*cols must equal the
// feature width.
inline void save_idx(const Dataset& data, std::size_t rows, std::size_t cols,
                     const std::string& images_path, const std::string& labels_path) {
    if (rows * cols != data.features.cols)
        throw std::invalid_argument("save_idx: rows*cols != feature width");
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error(images_path + ": cannot open for writing");
    detail::write_be_u32(img, 0x00000803u);
    detail::write_be_u32(img, static_cast<std::uint32_t>(data.size()));
    detail::write_be_u32(img, static_cast<std::uint32_t>(rows));
    detail::write_be_u32(img, static_cast<std::uint32_t>(cols));
    std::vector<unsigned char> buf(data.features.cols);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto row = data.features.row(i);
        for (std::size_t k = 0; k < row.size(); ++k)
            buf[k] = static_cast<unsigned char>(
                std::lround(std::clamp(row[k], 0.0, 1.0) * 255.0));
        img.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size()));
    }
    std::ofstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw std::runtime_error(labels_path + ": cannot open for writing");
    detail::write_be_u32(lbl, 0x00000801u);
    detail::write_be_u32(lbl, static_cast<std::uint32_t>(data.size()));
    for (int y : data.labels) {
        const unsigned char b = static_cast<unsigned char>(y);
        lbl.write(reinterpret_cast<const char*>(&b), 1);
    }
}

// Deterministic feature-space shifts simulating distinct client domains.
// `seed` is consumed only by additive noise.
inline Dataset domain_transform(const std::string& id, const Dataset& data,
                                std::uint64_t seed = 0) {
    Dataset out = data;
    if (id == "identity") return out;
    if (id == "invert") {
        for (auto& x : out.features.data) x = 1.0 - x;
        return out;
    }
    if (id == "rotate") {
        // Fixed Givens rotation of consecutive feature pairs.
        const double c = std::cos(0.5), s = std::sin(0.5);
        for (std::size_t i = 0; i < out.features.rows; ++i) {
            auto row = out.features.row(i);
            for (std::size_t k = 0; k + 1 < row.size(); k += 2) {
                const double a = row[k], b = row[k + 1];
                row[k] = c * a - s * b;
                row[k + 1] = s * a + c * b;
            }
        }
        return out;
    }
    if (id == "noise") {
        Rng rng = Rng::stream(seed, {0xD0CC00ull});
        for (auto& x : out.features.data) x += 0.1 * rng.gaussian();
        return out;
    }
    if (id == "scale") {
        for (auto& x : out.features.data) x *= 0.5;
        return out;
    }
    throw std::invalid_argument("domain_transform: unknown transform id '" + id + "'");
}

// Per-class Dirichlet(alpha) shares over clients, indices assigned by
// cumulative share after a seeded shuffle. Every index lands exactly once.
inline std::vector<std::vector<std::size_t>> dirichlet_partition(const std::vector<int>& labels,
                                                                 std::size_t n_clients,
                                                                 double alpha,
                                                                 std::uint64_t seed) {
    if (n_clients < 1) throw std::invalid_argument("dirichlet_partition: n_clients < 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet_partition: alpha must be > 0");
    int n_classes = 0;
    for (int y : labels) n_classes = std::max(n_classes, y + 1);
    auto by_class = indices_by_class(labels, n_classes);

    std::vector<std::vector<std::size_t>> clients(n_clients);
    for (int c = 0; c < n_classes; ++c) {
        auto& idx = by_class[static_cast<std::size_t>(c)];
        if (idx.empty()) throw std::invalid_argument("dirichlet_partition: class with no samples");
        Rng shuf = Rng::stream(seed, {0x9A28ull, static_cast<std::uint64_t>(c)});
        shuf.shuffle(idx);
        Rng prop = Rng::stream(seed, {0x9A27ull, static_cast<std::uint64_t>(c)});
        const std::vector<double> p = prop.dirichlet(alpha, n_clients);
        double cum = 0.0;
        std::size_t start = 0;
        for (std::size_t k = 0; k < n_clients; ++k) {
            cum += p[k];
            std::size_t end = (k + 1 == n_clients)
                                  ? idx.size()
                                  : std::min(idx.size(),
                                             static_cast<std::size_t>(std::llround(
                                                 cum * static_cast<double>(idx.size()))));
            end = std::max(end, start);
            for (std::size_t i = start; i < end; ++i) clients[k].push_back(idx[i]);
            start = end;
        }
    }

    // A client that drew ~0 share everywhere still needs one sample.
    for (std::size_t k = 0; k < n_clients; ++k) {
        while (clients[k].empty()) {
            std::size_t donor = n_clients;
            std::size_t best = 1;
            for (std::size_t j = 0; j < n_clients; ++j) {
                if (clients[j].size() > best) {
                    best = clients[j].size();
                    donor = j;
                }
            }
            if (donor == n_clients)
                throw std::runtime_error("dirichlet_partition: fewer samples than clients");
            clients[k].push_back(clients[donor].back());
            clients[donor].pop_back();
        }
    }
    return clients;
}

enum class Regime { balanced_intra, imbalanced_intra, balanced_inter, imbalanced_inter };

inline Regime regime_from_string(const std::string& s) {
    if (s == "balanced-intra") return Regime::balanced_intra;
    if (s == "imbalanced-intra") return Regime::imbalanced_intra;
    if (s == "balanced-inter") return Regime::balanced_inter;
    if (s == "imbalanced-inter") return Regime::imbalanced_inter;
    throw std::invalid_argument("unknown regime '" + s + "'");
}

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::balanced_intra: return "balanced-intra";
        case Regime::imbalanced_intra: return "imbalanced-intra";
        case Regime::balanced_inter: return "balanced-inter";
        case Regime::imbalanced_inter: return "imbalanced-inter";
    }
    return "?";
}

inline bool is_inter(Regime r) {
    return r == Regime::balanced_inter || r == Regime::imbalanced_inter;
}
inline bool is_imbalanced(Regime r) {
    return r == Regime::imbalanced_intra || r == Regime::imbalanced_inter;
}

struct ScenarioSpec {
    Regime regime = Regime::imbalanced_intra;
    std::size_t n_clients = 5;
    double alpha = 0.5;
    std::vector<std::string> transforms;  // inter regimes; cycled over clients when shorter
    std::string dataset = "synth";        // synth | fmnist | mnist
    std::uint64_t seed = 1;
    std::size_t samples_per_client = 600;  // train target per client

    // synth-gaussian knobs
    std::size_t synth_classes = 10;
    std::size_t synth_dim = 32;
    double synth_sigma = 0.25;

    std::vector<std::string> client_transforms() const {
        static const std::vector<std::string> kDefault = {"identity", "invert", "rotate", "noise",
                                                          "scale"};
        const auto& base = transforms.empty() ? kDefault : transforms;
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n_clients; ++i) out.push_back(base[i % base.size()]);
        return out;
    }

    void validate() const {
        if (n_clients < 1) throw std::invalid_argument("scenario: n_clients < 1");
        if (samples_per_client < 1) throw std::invalid_argument("scenario: samples_per_client < 1");
        if (is_imbalanced(regime) && !(alpha > 0.0))
            throw std::invalid_argument("scenario: alpha must be > 0 for imbalanced regimes");
        if (dataset != "synth" && dataset != "fmnist" && dataset != "mnist")
            throw std::invalid_argument("scenario: unknown dataset '" + dataset + "'");
        if (dataset == "synth" && synth_classes < 2)
            throw std::invalid_argument("scenario: synth_classes < 2");
        if (is_inter(regime)) {
            const auto t = client_transforms();
            std::vector<std::string> uniq(t.begin(), t.end());
            std::sort(uniq.begin(), uniq.end());
            uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
            if (uniq.size() < 2)
                throw std::invalid_argument("scenario: inter regimes need >= 2 distinct domains");
        }
    }
};

struct ClientDataset {
    int client_id = -1;
    Dataset train;
    Dataset test;
    std::string domain = "base";
    std::vector<std::size_t> train_class_counts;
};

struct Scenario {
    std::vector<ClientDataset> clients;
    std::vector<std::string> log;
    int n_classes = 0;
    std::size_t input_dim = 0;
    // Indices into the base train pool, kept for partition property checks.
    std::vector<std::vector<std::size_t>> train_indices;
    std::size_t base_train_size = 0;
};

namespace detail {

inline TrainTest resolve_base(const ScenarioSpec& spec, std::vector<std::string>& log) {
    if (spec.dataset == "synth") {
        const std::size_t per_class =
            (spec.n_clients * spec.samples_per_client) / spec.synth_classes + spec.n_clients + 8;
        // 5:1 train:test inside synth_gaussians' 80/20 split covers test demand.
        return synth_gaussians(spec.synth_classes, spec.synth_dim, per_class + per_class / 4,
                               spec.seed, spec.synth_sigma);
    }
    const bool fashion = spec.dataset == "fmnist";
    const char* env = std::getenv(fashion ? "FEDCCL_FMNIST_DIR" : "FEDCCL_MNIST_DIR");
    if (env != nullptr && *env != '\0') {
        namespace fs = std::filesystem;
        const fs::path dir(env);
        TrainTest out;
        out.train = load_idx((dir / "train-images-idx3-ubyte").string(),
                             (dir / "train-labels-idx1-ubyte").string());
        out.test = load_idx((dir / "t10k-images-idx3-ubyte").string(),
                            (dir / "t10k-labels-idx1-ubyte").string());
        const int classes = std::max(out.train.n_classes, out.test.n_classes);
        out.train.n_classes = out.test.n_classes = classes;
        log.push_back(std::string("dataset ") + spec.dataset + " loaded from " + env);
        return out;
    }
    const std::size_t per_class = (spec.n_clients * spec.samples_per_client) / 10 + spec.n_clients + 8;
    log.push_back(std::string("dataset ") + spec.dataset +
                  ": no corpus directory configured, using the built-in synthetic image stand-in");
    return synth_images(10, per_class, per_class / 4 + 2, spec.seed, fashion ? 1 : 2);
}

}  // namespace detail

// Materialize one heterogeneity scenario: per-client train shards drawn from
// a shared pool plus matching-domain test splits.
inline Scenario build_scenario(const ScenarioSpec& spec) {
    spec.validate();
    Scenario scn;
    TrainTest base = detail::resolve_base(spec, scn.log);
    base.train.validate("scenario base train");
    base.test.validate("scenario base test");
    const int C = base.train.n_classes;
    const std::size_t n = spec.n_clients;
    scn.n_classes = C;
    scn.input_dim = base.train.features.cols;
    scn.base_train_size = base.train.size();

    // Per-class shuffled pools.
    auto train_pool = indices_by_class(base.train.labels, C);
    auto test_pool = indices_by_class(base.test.labels, C);
    for (int c = 0; c < C; ++c) {
        Rng r1 = Rng::stream(spec.seed, {0xD0CA01ull, static_cast<std::uint64_t>(c)});
        r1.shuffle(train_pool[static_cast<std::size_t>(c)]);
        Rng r2 = Rng::stream(spec.seed, {0xD0CA02ull, static_cast<std::uint64_t>(c)});
        r2.shuffle(test_pool[static_cast<std::size_t>(c)]);
    }

    std::vector<std::vector<std::size_t>> client_idx(n);
    const std::size_t s = spec.samples_per_client;

    if (is_imbalanced(spec.regime)) {
        // Equal-class pool of n*s samples, then Dirichlet over it.
        std::vector<std::size_t> pool;
        const std::vector<std::size_t> want =
            largest_remainder(n * s, std::vector<double>(static_cast<std::size_t>(C), 1.0));
        for (int c = 0; c < C; ++c) {
            const auto& src = train_pool[static_cast<std::size_t>(c)];
            const std::size_t take = std::min(want[static_cast<std::size_t>(c)], src.size());
            if (take < want[static_cast<std::size_t>(c)])
                scn.log.push_back("class " + std::to_string(c) + ": pool short by " +
                                  std::to_string(want[static_cast<std::size_t>(c)] - take));
            pool.insert(pool.end(), src.begin(), src.begin() + static_cast<std::ptrdiff_t>(take));
        }
        std::vector<int> pool_labels;
        pool_labels.reserve(pool.size());
        for (std::size_t i : pool) pool_labels.push_back(base.train.labels[i]);
        const auto parts = dirichlet_partition(pool_labels, n, spec.alpha, spec.seed);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j : parts[k]) client_idx[k].push_back(pool[j]);
    } else {
        // Per-client class quotas; balanced-intra biases 2 preferred classes 3x.
        std::vector<std::vector<std::size_t>> quota(n);
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<double> w(static_cast<std::size_t>(C), 1.0);
            if (spec.regime == Regime::balanced_intra) {
                w[(2 * k) % static_cast<std::size_t>(C)] = 3.0;
                w[(2 * k + 1) % static_cast<std::size_t>(C)] = 3.0;
            }
            quota[k] = largest_remainder(s, w);
        }
        // Clip to per-class availability, proportionally.
        for (int c = 0; c < C; ++c) {
            const std::size_t avail = train_pool[static_cast<std::size_t>(c)].size();
            std::size_t demand = 0;
            for (std::size_t k = 0; k < n; ++k) demand += quota[k][static_cast<std::size_t>(c)];
            if (demand <= avail) continue;
            scn.log.push_back("class " + std::to_string(c) + ": demand " + std::to_string(demand) +
                              " > available " + std::to_string(avail) + ", clipped");
            std::vector<double> dw;
            for (std::size_t k = 0; k < n; ++k)
                dw.push_back(static_cast<double>(quota[k][static_cast<std::size_t>(c)]));
            const auto clipped = largest_remainder(avail, dw);
            for (std::size_t k = 0; k < n; ++k) quota[k][static_cast<std::size_t>(c)] = clipped[k];
        }
        // Equalize client totals by truncating to the minimum.
        std::size_t min_total = s;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t tot = std::accumulate(quota[k].begin(), quota[k].end(),
                                                    static_cast<std::size_t>(0));
            min_total = std::min(min_total, tot);
        }
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t tot = std::accumulate(quota[k].begin(), quota[k].end(),
                                              static_cast<std::size_t>(0));
            while (tot > min_total) {
                auto it = std::max_element(quota[k].begin(), quota[k].end());
                --*it;
                --tot;
            }
            if (tot != s)
                scn.log.push_back("client " + std::to_string(k) + ": train size " +
                                  std::to_string(tot) + " after truncation (target " +
                                  std::to_string(s) + ")");
        }
        std::vector<std::size_t> cursor(static_cast<std::size_t>(C), 0);
        for (std::size_t k = 0; k < n; ++k) {
            for (int c = 0; c < C; ++c) {
                auto& cur = cursor[static_cast<std::size_t>(c)];
                const auto& src = train_pool[static_cast<std::size_t>(c)];
                for (std::size_t q = 0; q < quota[k][static_cast<std::size_t>(c)]; ++q)
                    client_idx[k].push_back(src[cur++]);
            }
        }
    }

    // Matching-domain test splits: sized at 1/5 of the client's train shard,
    // class-proportional to the shard, drawn round-robin from the test pool.
    const auto transforms = spec.client_transforms();
    std::vector<std::size_t> test_cursor(static_cast<std::size_t>(C), 0);
    for (std::size_t k = 0; k < n; ++k) {
        ClientDataset cd;
        cd.client_id = static_cast<int>(k);
        cd.train = subset(base.train, client_idx[k]);
        cd.train.n_classes = C;
        cd.train_class_counts = cd.train.class_counts();

        std::vector<double> w;
        for (std::size_t cnt : cd.train_class_counts) w.push_back(static_cast<double>(cnt));
        const std::size_t t_total = std::max<std::size_t>(1, cd.train.size() / 5);
        const auto t_quota = largest_remainder(t_total, w);
        std::vector<std::size_t> t_idx;
        for (int c = 0; c < C; ++c) {
            const auto& src = test_pool[static_cast<std::size_t>(c)];
            if (src.empty()) continue;
            auto& cur = test_cursor[static_cast<std::size_t>(c)];
            const std::size_t take = std::min(t_quota[static_cast<std::size_t>(c)], src.size());
            for (std::size_t q = 0; q < take; ++q) t_idx.push_back(src[cur++ % src.size()]);
        }
        cd.test = subset(base.test, t_idx);
        cd.test.n_classes = C;

        if (is_inter(spec.regime)) {
            cd.domain = transforms[k];
            const std::uint64_t tseed = derive_seed(spec.seed, {0xD0CC01ull, k});
            cd.train = domain_transform(cd.domain, cd.train, tseed);
            cd.test = domain_transform(cd.domain, cd.test, derive_seed(spec.seed, {0xD0CC02ull, k}));
        }
        cd.train.validate("client train");
        cd.test.validate("client test");
        scn.clients.push_back(std::move(cd));
    }
    scn.train_indices = std::move(client_idx);
    return scn;
}

}  // namespace fedccl
