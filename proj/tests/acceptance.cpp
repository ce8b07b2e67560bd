// Acceptance gate: each criterion runs standalone and prints exactly one
// verdict line. Exit status 0 means the selected criterion passed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <fedccl/fedccl.hpp>

#include "support/finite_diff.hpp"
#include "support/reference_finch.hpp"
#include "support/temp_dir.hpp"

using namespace fedccl;

namespace {

struct Verdict {
    bool ok = false;
    std::string detail;
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 2) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string fmt_sci(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.1e", v);
    return buf;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ContrastContext random_ctx(Rng& rng, std::size_t classes, std::size_t dim,
                           std::size_t signals_per_class) {
    ContrastContext ctx;
    ctx.local_pool.resize(classes);
    ctx.global_table.signal.resize(classes);
    ctx.global_table.present.assign(classes, true);
    ctx.global_table.clustered.resize(classes);
    for (std::size_t j = 0; j < classes; ++j) {
        for (std::size_t s = 0; s < signals_per_class; ++s) {
            std::vector<double> v(dim);
            for (auto& x : v) x = rng.gaussian();
            ctx.local_pool[j].push_back(v);
        }
        std::vector<double> g(dim);
        for (auto& x : g) x = rng.gaussian();
        ctx.global_table.signal[j] = g;
        ctx.global_table.clustered[j] = {g};
    }
    return ctx;
}

bool embedding_norms_ok(const ModelParams& params, const Tensor2& batch, double floor) {
    const ForwardResult fr = forward(params, batch);
    for (std::size_t r = 0; r < fr.features.rows; ++r)
        if (!(norm(fr.features.row(r)) > floor)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// 1. Gradient oracle: analytic vs central differences on five objectives.

Verdict criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = Rng::stream(0xACC1, {});
    const std::vector<std::size_t> dims{6, 10, 4};
    const std::size_t batch_size = 5;
    const std::size_t classes = dims.back();
    const std::size_t emb_dim = dims[dims.size() - 2];

    ContrastConfig off;
    off.use_local = off.use_global = false;
    ContrastConfig lo = off, go = off, both = off;
    lo.use_local = true;
    lo.w_local = 0.7;
    lo.temperature = 0.2;
    go.use_global = true;
    go.w_global = 1.3;
    go.temperature = 0.2;
    both.use_local = both.use_global = true;
    both.w_local = 0.7;
    both.w_global = 1.3;
    both.temperature = 0.2;
    const ContrastContext empty;

    double worst = 0.0;
    std::size_t checks = 0;
    const auto probe = [&](const Tensor2& batch, const std::vector<int>& labels,
                           const ModelParams& params, const ContrastContext& ctx,
                           const ContrastConfig& cfg) {
        const TotalLoss tl = total_loss(params, batch, labels, ctx, cfg);
        const auto loss = [&](const ModelParams& p) {
            return total_loss(p, batch, labels, ctx, cfg).lg.total;
        };
        worst = std::max(worst, testsupport::fd_param_check(loss, params, tl.lg.grads));
        ++checks;
    };

    for (int draw = 0; draw < 50; ++draw) {
        testsupport::DrawnCase c;
        ContrastContext ctx;
        for (;;) {
            c = testsupport::draw_case(rng, dims, batch_size);
            if (!embedding_norms_ok(c.params, c.batch, 0.5)) continue;
            break;
        }
        ctx = random_ctx(rng, classes, emb_dim, 2);

        probe(c.batch, c.labels, c.params, empty, off);  // plain CE
        probe(c.batch, c.labels, c.params, ctx, lo);     // CE + local term
        probe(c.batch, c.labels, c.params, ctx, go);     // CE + global term
        probe(c.batch, c.labels, c.params, ctx, both);   // full objective

        // Robust objective: the perturbation is held fixed, gradients flow
        // through the clean-signal objective at the perturbed inputs.
        const AttackConfig atk = pgd_config(0.05, 0.02, 3, -10.0, 10.0);
        Tensor2 xadv;
        for (;;) {
            Rng arng = Rng::stream(0xACC1A, {static_cast<std::uint64_t>(draw)});
            xadv = pgd_perturb(c.params, c.batch, c.labels, atk, ctx, both, arng);
            if (testsupport::relu_margins_ok(c.params, xadv, 1e-3) &&
                embedding_norms_ok(c.params, xadv, 0.3))
                break;
            do {
                c = testsupport::draw_case(rng, dims, batch_size);
            } while (!embedding_norms_ok(c.params, c.batch, 0.5));
            ctx = random_ctx(rng, classes, emb_dim, 2);
        }
        probe(xadv, c.labels, c.params, ctx, both);
    }

    const double dt = seconds_since(t0);
    Verdict v;
    v.ok = worst < 1e-4 && dt < 60.0;
    v.detail = "worst rel err " + fmt_sci(worst) + " over " + std::to_string(checks) +
               " gradient checks, " + fmt(dt, 1) + "s";
    return v;
}

// ---------------------------------------------------------------------------
// 2. Clustering oracle: production hierarchy equals the brute-force reference.

Verdict criterion2() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = Rng::stream(0xACC2, {});
    std::size_t mismatches = 0, instances = 0, total_levels = 0;

    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 2 + rng.uniform_index(63);  // 2..64
        const std::size_t d = 2 + rng.uniform_index(15);  // 2..16
        const std::size_t blobs = 1 + rng.uniform_index(4);
        std::vector<std::vector<double>> centers(blobs, std::vector<double>(d));
        for (auto& c : centers)
            for (auto& x : c) x = 4.0 * rng.gaussian();
        std::vector<std::vector<double>> pts(n, std::vector<double>(d));
        for (auto& p : pts) {
            const auto& c = centers[rng.uniform_index(blobs)];
            for (std::size_t j = 0; j < d; ++j) p[j] = c[j] + 0.3 * rng.gaussian();
        }

        const FinchResult got = finch_cluster(pts);
        const std::vector<refclust::RefLevel> want = refclust::ref_finch(pts);
        ++instances;
        total_levels += want.size();
        bool same = got.levels.size() == want.size();
        for (std::size_t l = 0; same && l < want.size(); ++l)
            same = got.levels[l].k == want[l].k && got.levels[l].assignment == want[l].assignment;
        if (!same) ++mismatches;
    }

    const double dt = seconds_since(t0);
    Verdict v;
    v.ok = mismatches == 0 && dt < 60.0;
    v.detail = std::to_string(instances - mismatches) + "/" + std::to_string(instances) +
               " instances exact (" + std::to_string(total_levels) + " levels compared), " +
               fmt(dt, 1) + "s";
    return v;
}

// ---------------------------------------------------------------------------
// Shared experiment drivers.

ExperimentResult run_cfg(const std::string& text) {
    std::ostringstream sink;
    return run_experiment(parse_config_text(text), sink);
}

std::string scenario_block(const std::string& dataset, std::size_t clients, double alpha,
                           std::size_t spc, std::size_t rounds, const std::string& regime,
                           const std::string& train_knobs) {
    std::ostringstream s;
    s << "rounds = " << rounds << "\n"
      << "seeds = 1,2,3\n"
      << "regime = " << regime << "\n"
      << "dataset = " << dataset << "\n"
      << "clients = " << clients << "\n"
      << "alpha = " << alpha << "\n"
      << "samples_per_client = " << spc << "\n"
      << "scenario_seed = 7\n"
      << train_knobs;
    return s.str();
}

// ---------------------------------------------------------------------------
// 3. Baseline reduction: contrast flags off reproduces the baseline bit for bit.

Verdict criterion3() {
    testsupport::TempDir dir;
    std::ostringstream common;
    common << "rounds = 4\nseeds = 1,2\nregime = imbalanced-intra\ndataset = synth\n"
           << "clients = 3\nalpha = 0.5\nsamples_per_client = 60\nscenario_seed = 5\n"
           << "synth_classes = 4\nsynth_dim = 16\nhidden = 16\nbatch = 16\nlr = 0.05\n";

    const std::string out_a = (dir.path() / "fedavg").string();
    const std::string out_b = (dir.path() / "reduced").string();
    const ExperimentResult ra = run_cfg("method = fedavg\nout = " + out_a + "\n" + common.str());
    const ExperimentResult rb = run_cfg("method = fedccl\nuse_local = false\nuse_global = false\nout = " +
                                        out_b + "\n" + common.str());

    bool accs_equal = ra.final_accs.size() == rb.final_accs.size();
    for (std::size_t i = 0; accs_equal && i < ra.final_accs.size(); ++i)
        accs_equal = ra.final_accs[i] == rb.final_accs[i];  // bitwise double equality

    const bool metrics_equal = slurp(ra.metrics_path) == slurp(rb.metrics_path);

    // summary differs only in the method column by construction
    std::string sb = slurp(rb.summary_path);
    std::size_t at;
    while ((at = sb.find("fedccl")) != std::string::npos) sb.replace(at, 6, "fedavg");
    const bool summary_equal = slurp(ra.summary_path) == sb;

    Verdict v;
    v.ok = accs_equal && metrics_equal && summary_equal;
    v.detail = std::string("metrics ") + (metrics_equal ? "identical" : "differ") +
               ", per-seed accuracies " + (accs_equal ? "bitwise equal" : "differ") +
               ", summaries modulo method column " + (summary_equal ? "identical" : "differ");
    return v;
}

// ---------------------------------------------------------------------------
// 4..6. Trend comparisons on reduced scenarios.

const char* kImageTrainKnobs =
    "hidden = 64,32\nbatch = 32\nlr = 0.05\nepochs = 1\n";

std::string image_scenario(std::size_t rounds) {
    return scenario_block("fmnist", 5, 0.05, 400, rounds, "imbalanced-intra", kImageTrainKnobs);
}

Verdict criterion4() {
    const auto t0 = std::chrono::steady_clock::now();
    testsupport::TempDir dir;
    const std::string common = image_scenario(50);
    const double fedavg =
        run_cfg("method = fedavg\nout = " + (dir.path() / "fedavg").string() + "\n" + common)
            .mean_final;
    const double fedccl =
        run_cfg("method = fedccl\nout = " + (dir.path() / "fedccl").string() + "\n" + common)
            .mean_final;
    const double delta = (fedccl - fedavg) * 100.0;
    const double dt = seconds_since(t0);
    Verdict v;
    v.ok = delta >= 2.0 && dt < 900.0;
    v.detail = "fedccl " + fmt(fedccl * 100.0) + ", fedavg " + fmt(fedavg * 100.0) + ", delta " +
               fmt(delta) + " points (need >= 2.00), " + fmt(dt, 0) + "s";
    return v;
}

Verdict criterion5() {
    testsupport::TempDir dir;
    const std::string common = image_scenario(50);
    const auto run_m = [&](const std::string& m) {
        return run_cfg("method = " + m + "\nout = " + (dir.path() / m).string() + "\n" + common)
                   .mean_final *
               100.0;
    };
    const double fedavg = run_m("fedavg");
    const double local_only = run_m("local-only");
    const double global_only = run_m("global-only");
    const double fedccl = run_m("fedccl");
    const double best_single = std::max(local_only, global_only);
    Verdict v;
    v.ok = local_only >= fedavg && global_only >= fedavg && fedccl >= best_single - 0.5;
    v.detail = "fedavg " + fmt(fedavg) + ", local-only " + fmt(local_only) + ", global-only " +
               fmt(global_only) + ", fedccl " + fmt(fedccl) + " (needs local/global >= fedavg, fedccl >= " +
               fmt(best_single - 0.5) + ")";
    return v;
}

Verdict criterion6() {
    testsupport::TempDir dir;
    const std::string common = scenario_block(
        "synth", 5, 1.0, 300, 40, "imbalanced-inter",
        "transforms = identity,invert,rotate\nsynth_classes = 10\nsynth_dim = 32\n"
        "synth_sigma = 0.3\nhidden = 64,32\nbatch = 32\nlr = 0.05\n");
    const auto run_m = [&](const std::string& m) {
        return run_cfg("method = " + m + "\nout = " + (dir.path() / m).string() + "\n" + common)
                   .mean_final *
               100.0;
    };
    const double fedccl = run_m("fedccl");
    const double avg_local = run_m("avg-local");
    const double avg_global = run_m("avg-global");
    Verdict v;
    v.ok = fedccl >= avg_local && fedccl >= avg_global;
    v.detail = "fedccl " + fmt(fedccl) + ", avg-local " + fmt(avg_local) + ", avg-global " +
               fmt(avg_global) + " (fedccl must be >= both)";
    return v;
}

// ---------------------------------------------------------------------------
// 7. Robust-training trend; attack rows are read back from the metrics stream.

std::map<std::string, double> attack_eval_means(const std::string& metrics_path) {
    std::ifstream in(metrics_path);
    if (!in) throw std::runtime_error(metrics_path + ": cannot open");
    std::map<std::string, double> sum;
    std::map<std::string, std::size_t> cnt;
    std::string line;
    while (std::getline(in, line)) {
        const nlohmann::json j = nlohmann::json::parse(line);
        if (j.value("scope", "") != "attack_eval") continue;
        const std::string name = j.at("attack");
        sum[name] += j.at("acc").get<double>();
        cnt[name] += 1;
    }
    std::map<std::string, double> mean;
    for (const auto& [name, s] : sum) mean[name] = s / static_cast<double>(cnt[name]);
    return mean;
}

Verdict criterion7() {
    const auto t0 = std::chrono::steady_clock::now();
    testsupport::TempDir dir;
    const std::string common = scenario_block("mnist", 5, 0.5, 300, 15, "imbalanced-intra",
                                              "hidden = 32\nbatch = 32\nlr = 0.05\n") +
                               "attack = pgd\neps = 0.1\natk_alpha = 0.025\nsteps = 7\n";
    const std::string out_plus = (dir.path() / "fedccl-plus").string();
    const std::string out_base = (dir.path() / "fedavg-plus").string();
    const ExperimentResult rp = run_cfg("method = fedccl-plus\nout = " + out_plus + "\n" + common);
    const ExperimentResult rb = run_cfg(
        "method = fedccl-plus\nuse_local = false\nuse_global = false\nout = " + out_base + "\n" +
        common);
    const auto plus = attack_eval_means(rp.metrics_path);
    const auto base = attack_eval_means(rb.metrics_path);

    const auto ordered = [](const std::map<std::string, double>& m) {
        return m.at("clean") >= m.at("fgsm") - 0.02 && m.at("fgsm") >= m.at("pgd-20") - 0.02;
    };
    const bool fgsm_gap = plus.at("fgsm") >= base.at("fgsm");
    const bool order_ok = ordered(plus) && ordered(base);
    const double dt = seconds_since(t0);

    const auto show = [&](const char* name, const std::map<std::string, double>& m) {
        return std::string(name) + " clean " + fmt(m.at("clean") * 100.0) + " fgsm " +
               fmt(m.at("fgsm") * 100.0) + " pgd20 " + fmt(m.at("pgd-20") * 100.0);
    };
    Verdict v;
    v.ok = fgsm_gap && order_ok;
    v.detail = show("robust", plus) + "; " + show("baseline", base) +
               (fgsm_gap ? "; fgsm gap ok" : "; fgsm gap violated") +
               (order_ok ? "; ordering ok" : "; ordering violated") + ", " + fmt(dt, 0) + "s";
    return v;
}

// ---------------------------------------------------------------------------
// 8. Attack bound property on [0,1] image data.

Verdict criterion8() {
    Rng rng = Rng::stream(0xACC8, {});
    const TrainTest tt = synth_images(10, 30, 10, 9, 1);
    const std::size_t dim = tt.train.features.cols;

    double worst_overshoot = -1.0;
    bool in_range = true;
    std::size_t examples = 0;

    for (int m = 0; m < 5; ++m) {
        const ModelParams params = init_mlp({dim, 16, 10}, rng.next_u64());
        Tensor2 batch(20, dim);
        std::vector<int> labels(20);
        for (std::size_t r = 0; r < batch.rows; ++r) {
            const std::size_t src = rng.uniform_index(tt.train.size());
            const auto row = tt.train.features.row(src);
            std::copy(row.begin(), row.end(), batch.row(r).begin());
            labels[r] = tt.train.labels[src];
        }
        for (double eps : {0.05, 0.3}) {
            const AttackConfig cfgs[] = {
                fgsm_config(eps, 0.0, 1.0),
                pgd_config(eps, eps / 8.0, 20, 0.0, 1.0),
                pgd_config(eps, eps / 4.0, 7, 0.0, 1.0),
            };
            for (const AttackConfig& atk : cfgs) {
                Rng arng = Rng::stream(0xACC8A, {static_cast<std::uint64_t>(m),
                                                 static_cast<std::uint64_t>(eps * 1000)});
                const Tensor2 adv = pgd_perturb(params, batch, labels, atk, arng);
                for (std::size_t i = 0; i < adv.data.size(); ++i) {
                    const double delta = std::abs(adv.data[i] - batch.data[i]);
                    worst_overshoot = std::max(worst_overshoot, delta - eps);
                    in_range = in_range && adv.data[i] >= 0.0 && adv.data[i] <= 1.0;
                }
                examples += adv.rows;
            }
        }
    }

    // zero radius leaves accuracy bit-identical
    const ModelParams params = init_mlp({dim, 16, 10}, 0x517E);
    const double clean = accuracy(params, tt.test.features, tt.test.labels);
    const double atk0_fgsm =
        evaluate_under_attack(params, tt.test, fgsm_config(0.0, 0.0, 1.0), 4);
    const double atk0_pgd =
        evaluate_under_attack(params, tt.test, pgd_config(0.0, 0.01, 20, 0.0, 1.0), 4);
    const bool zero_identical = clean == atk0_fgsm && clean == atk0_pgd;

    Verdict v;
    v.ok = worst_overshoot <= 1e-12 && in_range && zero_identical;
    v.detail = "max bound overshoot " + fmt_sci(std::max(worst_overshoot, 0.0)) + " over " +
               std::to_string(examples) + " examples, range " + (in_range ? "ok" : "violated") +
               ", zero-radius accuracy " + (zero_identical ? "bit-identical" : "differs");
    return v;
}

// ---------------------------------------------------------------------------
// 9. Determinism: identical config and seeds give byte-identical outputs.

Verdict criterion9() {
    testsupport::TempDir dir;
    std::ostringstream common;
    common << "method = fedccl\nrounds = 5\nseeds = 1,2\nregime = imbalanced-intra\n"
           << "dataset = synth\nclients = 3\nalpha = 0.5\nsamples_per_client = 60\n"
           << "scenario_seed = 5\nsynth_classes = 4\nsynth_dim = 16\nhidden = 16,8\n"
           << "batch = 16\nlr = 0.05\n";
    const ExperimentResult r1 =
        run_cfg(common.str() + "out = " + (dir.path() / "first").string() + "\n");
    const ExperimentResult r2 =
        run_cfg(common.str() + "out = " + (dir.path() / "second").string() + "\n");

    // a round trip through the canonical serialization must not change the run
    ExperimentConfig cfg =
        parse_config_text(common.str() + "out = " + (dir.path() / "third").string() + "\n");
    cfg = parse_config_text(serialize_config(cfg));
    std::ostringstream sink;
    const ExperimentResult r3 = run_experiment(cfg, sink);

    const bool summary_equal = slurp(r1.summary_path) == slurp(r2.summary_path) &&
                               slurp(r1.summary_path) == slurp(r3.summary_path);
    const bool metrics_equal = slurp(r1.metrics_path) == slurp(r2.metrics_path) &&
                               slurp(r1.metrics_path) == slurp(r3.metrics_path);
    Verdict v;
    v.ok = summary_equal && metrics_equal;
    v.detail = std::string("summary.csv ") + (summary_equal ? "byte-identical" : "differs") +
               ", metrics.jsonl " + (metrics_equal ? "byte-identical" : "differs") +
               " across 3 runs (one via serialized config)";
    return v;
}

// ---------------------------------------------------------------------------
// 10. Scenario invariants over 10 seeds.

Verdict criterion10() {
    const auto t0 = std::chrono::steady_clock::now();
    bool disjoint = true, covered = true, balanced = true;
    double tv_small = 0.0, tv_large = 0.0;

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ScenarioSpec spec;
        spec.regime = Regime::imbalanced_intra;
        spec.dataset = "synth";
        spec.n_clients = 5;
        spec.alpha = 0.5;
        spec.samples_per_client = 100;
        spec.synth_classes = 10;
        spec.synth_dim = 8;
        spec.seed = seed;
        const Scenario sc = build_scenario(spec);

        std::vector<std::size_t> all;
        for (const auto& idx : sc.train_indices) all.insert(all.end(), idx.begin(), idx.end());
        const std::size_t total = all.size();
        std::sort(all.begin(), all.end());
        disjoint = disjoint && std::adjacent_find(all.begin(), all.end()) == all.end();
        covered = covered && total == spec.n_clients * spec.samples_per_client;
        for (std::size_t i : all) disjoint = disjoint && i < sc.base_train_size;

        ScenarioSpec bal = spec;
        bal.regime = Regime::balanced_intra;
        const Scenario sb = build_scenario(bal);
        for (const auto& cl : sb.clients) {
            const double slack = std::abs(static_cast<double>(cl.train.size()) -
                                          static_cast<double>(bal.samples_per_client));
            balanced = balanced && slack <= static_cast<double>(sb.n_classes);
        }

        // Dirichlet concentration: small alpha must be farther from uniform.
        std::vector<int> labels;
        for (int c = 0; c < 10; ++c)
            for (int i = 0; i < 60; ++i) labels.push_back(c);
        const auto tv_of = [&](double alpha) {
            const auto parts = dirichlet_partition(labels, 5, alpha, seed);
            double tv = 0.0;
            for (const auto& part : parts) {
                std::vector<double> p(10, 0.0);
                for (std::size_t j : part) p[static_cast<std::size_t>(labels[j])] += 1.0;
                double t = 0.0;
                for (double x : p) t += std::abs(x / static_cast<double>(part.size()) - 0.1);
                tv += 0.5 * t;
            }
            return tv / 5.0;
        };
        tv_small += tv_of(0.1);
        tv_large += tv_of(10.0);
    }
    tv_small /= 10.0;
    tv_large /= 10.0;

    const double dt = seconds_since(t0);
    Verdict v;
    v.ok = disjoint && covered && balanced && tv_small > tv_large && dt < 60.0;
    v.detail = std::string("disjoint ") + (disjoint ? "ok" : "violated") + ", coverage " +
               (covered ? "ok" : "violated") + ", balanced slack " +
               (balanced ? "ok" : "violated") + ", TV(0.1)=" + fmt(tv_small, 3) + " > TV(10)=" +
               fmt(tv_large, 3) + (tv_small > tv_large ? " ok" : " violated") + ", " +
               fmt(dt, 1) + "s";
    return v;
}

Verdict run_criterion(int n) {
    switch (n) {
        case 1: return criterion1();
        case 2: return criterion2();
        case 3: return criterion3();
        case 4: return criterion4();
        case 5: return criterion5();
        case 6: return criterion6();
        case 7: return criterion7();
        case 8: return criterion8();
        case 9: return criterion9();
        case 10: return criterion10();
        default: throw std::invalid_argument("criterion number must be 1..10");
    }
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: fedccl_acceptance <criterion 1..10 | all>\n";
        return 2;
    }
    try {
        if (std::strcmp(argv[1], "all") == 0) {
            int failures = 0;
            for (int n = 1; n <= 10; ++n) {
                const Verdict v = run_criterion(n);
                std::cout << "criterion " << n << ": " << (v.ok ? "pass" : "fail") << " ("
                          << v.detail << ")" << std::endl;
                failures += v.ok ? 0 : 1;
            }
            return failures == 0 ? 0 : 1;
        }
        const int n = std::atoi(argv[1]);
        const Verdict v = run_criterion(n);
        std::cout << "criterion " << n << ": " << (v.ok ? "pass" : "fail") << " (" << v.detail
                  << ")" << std::endl;
        return v.ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
