#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "adversarial.hpp"
#include "config.hpp"
#include "datagen.hpp"
#include "federation.hpp"

namespace fedccl {

namespace detail {

inline std::string fmt_pct(double frac) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", frac * 100.0);
    return buf;
}

inline nlohmann::json client_line(std::uint64_t seed, const RoundMetrics& rm,
                                  const ClientRoundMetrics& cm) {
    nlohmann::json j;
    j["seed"] = seed;
    j["round"] = rm.round;
    j["scope"] = "client";
    j["client"] = cm.client_id;
    j["acc"] = cm.acc;
    j["loss_ce"] = cm.loss_ce;
    j["loss_local"] = cm.loss_local;
    j["loss_global"] = cm.loss_global;
    j["skipped_samples"] = cm.skipped_samples;
    return j;
}

inline nlohmann::json round_line(std::uint64_t seed, const RoundMetrics& rm) {
    nlohmann::json j;
    j["seed"] = seed;
    j["round"] = rm.round;
    j["scope"] = "round";
    j["acc"] = rm.avg_acc;
    j["acc_global"] = rm.acc_global;
    j["loss_ce"] = rm.avg_ce;
    j["loss_local"] = rm.avg_local;
    j["loss_global"] = rm.avg_global;
    j["skipped_samples"] = rm.skipped_samples;
    return j;
}

}  // namespace detail

// Mean per-client accuracy over the final min(5, T) rounds, as a fraction.
inline double final_accuracy(const std::vector<RoundMetrics>& rounds) {
    if (rounds.empty()) return 0.0;
    const std::size_t window = std::min<std::size_t>(5, rounds.size());
    double sum = 0.0;
    for (std::size_t i = rounds.size() - window; i < rounds.size(); ++i) sum += rounds[i].avg_acc;
    return sum / static_cast<double>(window);
}

// Scenario seeds are re-derived per training seed so each seed sees an
// independent partition while staying reproducible.
inline Scenario build_scenario_for_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    ScenarioSpec spec = cfg.scenario;
    spec.seed = derive_seed(cfg.scenario.seed, {0x5CE07ull, seed});
    return build_scenario(spec);
}

struct ExperimentResult {
    std::vector<std::uint64_t> seeds;
    std::vector<double> final_accs;  // fraction, parallel to seeds
    double mean_final = 0.0;
    std::string summary_path;
    std::string metrics_path;
};

// Run every seed, append metrics lines, write the summary table. Returns the
// in-memory result for callers that want the numbers directly.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       std::ostream& info = std::cerr) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string metrics_path = (fs::path(cfg.out_dir) / "metrics.jsonl").string();
    const std::string summary_path = (fs::path(cfg.out_dir) / "summary.csv").string();
    std::ofstream metrics(metrics_path, std::ios::trunc);
    if (!metrics) throw std::runtime_error(metrics_path + ": cannot open for writing");

    ExperimentResult result;
    result.metrics_path = metrics_path;
    result.summary_path = summary_path;

    const std::string hash = scenario_hash(cfg);
    for (const std::uint64_t seed : cfg.seeds) {
        const Scenario scenario = build_scenario_for_seed(cfg, seed);
        for (const auto& line : scenario.log) info << "[scenario seed " << seed << "] " << line << "\n";

        FederationConfig fed = cfg.federation();
        fed.train.seed = seed;
        const RunResult run = run_training(scenario, fed, seed);

        for (const auto& rm : run.rounds) {
            for (const auto& cm : rm.clients)
                metrics << detail::client_line(seed, rm, cm).dump() << "\n";
            metrics << detail::round_line(seed, rm).dump() << "\n";
        }

        if (cfg.attack_mode != "none" && !run.rounds.empty()) {
            // Final-model robustness: clean, one-shot sign attack, and the
            // 20-step attack at the same radius, averaged over clients.
            const AttackConfig fgsm = fgsm_config(cfg.eps, cfg.clamp_lo, cfg.clamp_hi);
            AttackConfig pgd20 = pgd_config(cfg.eps, cfg.eps / 8.0, 20, cfg.clamp_lo, cfg.clamp_hi);
            const struct {
                const char* name;
                const AttackConfig* atk;
            } evals[] = {{"fgsm", &fgsm}, {"pgd-20", &pgd20}};

            nlohmann::json jc;
            jc["seed"] = seed;
            jc["round"] = run.rounds.back().round;
            jc["scope"] = "attack_eval";
            jc["attack"] = "clean";
            jc["eps"] = 0.0;
            jc["acc"] = run.rounds.back().avg_acc;
            metrics << jc.dump() << "\n";
            for (const auto& ev : evals) {
                double acc = 0.0;
                for (std::size_t k = 0; k < scenario.clients.size(); ++k)
                    acc += evaluate_under_attack(run.client_params[k], scenario.clients[k].test,
                                                 *ev.atk, derive_seed(seed, {0xA77Cull, k}));
                acc /= static_cast<double>(scenario.clients.size());
                nlohmann::json j;
                j["seed"] = seed;
                j["round"] = run.rounds.back().round;
                j["scope"] = "attack_eval";
                j["attack"] = ev.name;
                j["eps"] = cfg.eps;
                j["acc"] = acc;
                metrics << j.dump() << "\n";
            }
        }

        const double fin = final_accuracy(run.rounds);
        result.seeds.push_back(seed);
        result.final_accs.push_back(fin);
        info << "seed " << seed << ": final accuracy " << detail::fmt_pct(fin) << "%\n";
    }
    metrics.close();

    double mean = 0.0;
    for (double a : result.final_accs) mean += a;
    mean /= static_cast<double>(result.final_accs.size());
    result.mean_final = mean;

    std::ofstream summary(summary_path, std::ios::trunc);
    if (!summary) throw std::runtime_error(summary_path + ": cannot open for writing");
    summary << "method,scenario_hash,seed,final_acc\n";
    for (std::size_t i = 0; i < result.seeds.size(); ++i)
        summary << cfg.method << "," << hash << "," << result.seeds[i] << ","
                << detail::fmt_pct(result.final_accs[i]) << "\n";
    summary << cfg.method << "," << hash << ",mean," << detail::fmt_pct(mean) << "\n";
    summary.close();

    info << "wrote " << metrics_path << " and " << summary_path << "\n";
    return result;
}

namespace detail {

struct SummaryTable {
    std::string method;
    std::string hash;
    double mean_final = 0.0;  // percent
};

inline SummaryTable read_summary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error(path + ": empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != "method,scenario_hash,seed,final_acc")
        throw std::runtime_error(path + ": schema error: expected header "
                                        "'method,scenario_hash,seed,final_acc', got '" +
                                 header + "'");
    SummaryTable t;
    bool have_mean = false;
    double sum = 0.0;
    std::size_t n = 0;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 4)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": schema error: expected 4 columns");
        if (t.method.empty()) t.method = cells[0];
        if (t.hash.empty()) t.hash = cells[1];
        else if (t.hash != cells[1])
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": scenario hash differs within one file");
        const double acc = std::stod(cells[3]);
        if (cells[2] == "mean") {
            t.mean_final = acc;
            have_mean = true;
        } else {
            sum += acc;
            ++n;
        }
    }
    if (t.method.empty()) throw std::runtime_error(path + ": no data rows");
    if (!have_mean) {
        if (n == 0) throw std::runtime_error(path + ": no data rows");
        t.mean_final = sum / static_cast<double>(n);
    }
    return t;
}

}  // namespace detail

// Cross-run delta table against the first file; refuses to compare runs
// whose setups differ.
inline int compare_runs(const std::vector<std::string>& paths, std::ostream& out = std::cout) {
    if (paths.size() < 2) throw std::invalid_argument("compare: need at least 2 summary files");
    std::vector<detail::SummaryTable> tables;
    for (const auto& p : paths) tables.push_back(detail::read_summary(p));
    for (const auto& t : tables) {
        if (t.hash != tables.front().hash)
            throw std::runtime_error("compare: scenario hash mismatch: " + tables.front().hash +
                                     " vs " + t.hash + " (runs are not comparable)");
    }
    out << "method,final_acc,delta\n";
    for (const auto& t : tables) {
        char fin[32], delta[32];
        std::snprintf(fin, sizeof fin, "%.4f", t.mean_final);
        std::snprintf(delta, sizeof delta, "%+.2f", t.mean_final - tables.front().mean_final);
        out << t.method << "," << fin << "," << delta << "\n";
    }
    return 0;
}

}  // namespace fedccl
