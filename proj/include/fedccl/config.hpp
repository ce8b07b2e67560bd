#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adversarial.hpp"
#include "datagen.hpp"
#include "federation.hpp"
#include "model.hpp"

namespace fedccl {

inline const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> kMethods = {
        "fedavg",      "fedccl",     "fedccl-plus", "local-only",
        "global-only", "avg-local", "avg-global"};
    return kMethods;
}

struct ExperimentConfig {
    std::string method = "fedavg";
    std::size_t rounds = 50;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::string out_dir = "runs/default";

    ScenarioSpec scenario;  // scenario.seed is the scenario_seed key (default 7)

    TrainConfig train;  // lr 0.01, batch 64, epochs 1, temperature 0.07
    std::vector<std::size_t> hidden = {64, 32};

    bool use_local = false;
    bool use_global = false;
    double w_local = 1.0;
    double w_global = 1.0;

    std::string attack_mode = "none";  // none | fgsm | pgd
    double eps = 0.3;
    double atk_alpha = 0.01;
    std::size_t atk_steps = 40;
    bool atk_random_start = true;
    std::string attack_objective = "ce";
    double clamp_lo = 0.0;
    double clamp_hi = 1.0;

    bool deterministic = true;  // CLI flag, not a config key

    bool adversarial_training() const { return method == "fedccl-plus"; }
    LocalPipeline local_pipe() const {
        return method == "avg-local" ? LocalPipeline::averaged : LocalPipeline::clustered;
    }
    GlobalPipeline global_pipe() const {
        return method == "avg-global" ? GlobalPipeline::averaged : GlobalPipeline::clustered;
    }

    AttackConfig resolved_attack() const {
        if (attack_mode == "fgsm") {
            AttackConfig atk = fgsm_config(eps, clamp_lo, clamp_hi);
            atk.objective = attack_objective;
            return atk;
        }
        AttackConfig atk = pgd_config(eps, atk_alpha, atk_steps, clamp_lo, clamp_hi);
        atk.random_start = atk_random_start;
        atk.objective = attack_objective;
        return atk;
    }

    ContrastConfig contrast() const {
        ContrastConfig cc;
        cc.temperature = train.temperature;
        cc.use_local = use_local;
        cc.use_global = use_global;
        cc.w_local = w_local;
        cc.w_global = w_global;
        return cc;
    }

    FederationConfig federation() const {
        FederationConfig fc;
        fc.train = train;
        fc.contrast = contrast();
        fc.hidden = hidden;
        fc.rounds = rounds;
        fc.local_pipe = local_pipe();
        fc.global_pipe = global_pipe();
        fc.adversarial_training = adversarial_training();
        fc.attack = resolved_attack();
        return fc;
    }
};

namespace detail {

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> kKeys = {
        "method",        "rounds",       "seeds",          "out",
        "regime",        "dataset",      "clients",        "alpha",
        "samples_per_client", "scenario_seed", "transforms", "synth_classes",
        "synth_dim",     "synth_sigma",  "lr",             "batch",
        "epochs",        "temperature",  "hidden",         "use_local",
        "use_global",    "w_local",      "w_global",       "attack",
        "eps",           "atk_alpha",    "steps",          "random_start",
        "attack_objective", "clamp_lo",  "clamp_hi"};
    return kKeys;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

struct RawConfig {
    std::map<std::string, std::string> kv;
    std::map<std::string, int> line_of;

    bool has(const std::string& k) const { return kv.count(k) > 0; }
};

inline RawConfig tokenize_config(const std::string& text, const std::string& origin) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
        if (known_keys().count(key) == 0)
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
        if (raw.has(key))
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": duplicate key '" + key + "' (first at line " +
                                        std::to_string(raw.line_of.at(key)) + ")");
        raw.kv[key] = value;
        raw.line_of[key] = lineno;
    }
    return raw;
}

inline double to_double(const RawConfig& raw, const std::string& key, double fallback) {
    if (!raw.has(key)) return fallback;
    const std::string& v = raw.kv.at(key);
    std::size_t pos = 0;
    double out;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config field '" + key + "': not a number: '" + v + "'");
    }
    if (pos != v.size())
        throw std::invalid_argument("config field '" + key + "': trailing junk in '" + v + "'");
    return out;
}

inline std::uint64_t to_u64(const RawConfig& raw, const std::string& key, std::uint64_t fallback) {
    if (!raw.has(key)) return fallback;
    const std::string& v = raw.kv.at(key);
    std::size_t pos = 0;
    unsigned long long out;
    try {
        out = std::stoull(v, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config field '" + key + "': not a non-negative integer: '" +
                                    v + "'");
    }
    if (pos != v.size() || v.find('-') != std::string::npos)
        throw std::invalid_argument("config field '" + key + "': not a non-negative integer: '" +
                                    v + "'");
    return out;
}

inline bool to_bool(const RawConfig& raw, const std::string& key, bool fallback) {
    if (!raw.has(key)) return fallback;
    const std::string& v = raw.kv.at(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw std::invalid_argument("config field '" + key + "': expected true or false, got '" + v +
                                "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

}  // namespace detail

// Parse the documented key=value grammar and resolve method consistency
// rules. Unknown keys, malformed values, and flag combinations that
// contradict the method are hard errors.
inline ExperimentConfig parse_config_text(const std::string& text,
                                          const std::string& origin = "<config>") {
    const detail::RawConfig raw = detail::tokenize_config(text, origin);
    ExperimentConfig cfg;

    if (raw.has("method")) cfg.method = raw.kv.at("method");
    if (std::find(known_methods().begin(), known_methods().end(), cfg.method) ==
        known_methods().end())
        throw std::invalid_argument("config field 'method': unknown method '" + cfg.method + "'");

    cfg.rounds = static_cast<std::size_t>(detail::to_u64(raw, "rounds", cfg.rounds));
    if (raw.has("seeds")) {
        cfg.seeds.clear();
        for (const auto& s : detail::split_list(raw.kv.at("seeds"))) {
            detail::RawConfig one;
            one.kv["seeds"] = s;
            cfg.seeds.push_back(detail::to_u64(one, "seeds", 0));
        }
        if (cfg.seeds.empty()) throw std::invalid_argument("config field 'seeds': empty list");
    }
    if (raw.has("out")) cfg.out_dir = raw.kv.at("out");

    if (raw.has("regime")) cfg.scenario.regime = regime_from_string(raw.kv.at("regime"));
    if (raw.has("dataset")) cfg.scenario.dataset = raw.kv.at("dataset");
    cfg.scenario.n_clients =
        static_cast<std::size_t>(detail::to_u64(raw, "clients", cfg.scenario.n_clients));
    cfg.scenario.alpha = detail::to_double(raw, "alpha", cfg.scenario.alpha);
    cfg.scenario.samples_per_client = static_cast<std::size_t>(
        detail::to_u64(raw, "samples_per_client", cfg.scenario.samples_per_client));
    cfg.scenario.seed = detail::to_u64(raw, "scenario_seed", 7);
    if (raw.has("transforms")) cfg.scenario.transforms = detail::split_list(raw.kv.at("transforms"));
    cfg.scenario.synth_classes =
        static_cast<std::size_t>(detail::to_u64(raw, "synth_classes", cfg.scenario.synth_classes));
    cfg.scenario.synth_dim =
        static_cast<std::size_t>(detail::to_u64(raw, "synth_dim", cfg.scenario.synth_dim));
    cfg.scenario.synth_sigma = detail::to_double(raw, "synth_sigma", cfg.scenario.synth_sigma);

    cfg.train.learning_rate = detail::to_double(raw, "lr", cfg.train.learning_rate);
    cfg.train.batch_size =
        static_cast<std::size_t>(detail::to_u64(raw, "batch", cfg.train.batch_size));
    cfg.train.local_epochs =
        static_cast<std::size_t>(detail::to_u64(raw, "epochs", cfg.train.local_epochs));
    cfg.train.temperature = detail::to_double(raw, "temperature", cfg.train.temperature);
    if (raw.has("hidden")) {
        cfg.hidden.clear();
        for (const auto& s : detail::split_list(raw.kv.at("hidden"))) {
            detail::RawConfig one;
            one.kv["hidden"] = s;
            cfg.hidden.push_back(static_cast<std::size_t>(detail::to_u64(one, "hidden", 0)));
        }
    }
    for (std::size_t h : cfg.hidden)
        if (h == 0) throw std::invalid_argument("config field 'hidden': zero-width layer");

    // Contrast flags: method defaults first, explicit keys checked against
    // what the method pins.
    const bool has_ul = raw.has("use_local"), has_ug = raw.has("use_global");
    const bool ul = detail::to_bool(raw, "use_local", false);
    const bool ug = detail::to_bool(raw, "use_global", false);
    auto pin = [&](bool want_local, bool want_global, bool local_pinned, bool global_pinned) {
        cfg.use_local = has_ul && !local_pinned ? ul : want_local;
        cfg.use_global = has_ug && !global_pinned ? ug : want_global;
        if (local_pinned && has_ul && ul != want_local)
            throw std::invalid_argument("config: method=" + cfg.method + " pins use_local=" +
                                        (want_local ? "true" : "false"));
        if (global_pinned && has_ug && ug != want_global)
            throw std::invalid_argument("config: method=" + cfg.method + " pins use_global=" +
                                        (want_global ? "true" : "false"));
    };
    if (cfg.method == "fedavg") pin(false, false, true, true);
    else if (cfg.method == "local-only") pin(true, false, true, true);
    else if (cfg.method == "global-only") pin(false, true, true, true);
    else if (cfg.method == "avg-local") pin(true, true, true, false);
    else if (cfg.method == "avg-global") pin(true, true, false, true);
    else pin(true, true, false, false);  // fedccl, fedccl-plus: overridable

    cfg.w_local = detail::to_double(raw, "w_local", cfg.w_local);
    cfg.w_global = detail::to_double(raw, "w_global", cfg.w_global);
    if (cfg.w_local < 0.0 || cfg.w_global < 0.0)
        throw std::invalid_argument("config: contrast weights must be >= 0");

    if (raw.has("attack")) cfg.attack_mode = raw.kv.at("attack");
    else if (cfg.method == "fedccl-plus") cfg.attack_mode = "pgd";
    if (cfg.attack_mode != "none" && cfg.attack_mode != "fgsm" && cfg.attack_mode != "pgd")
        throw std::invalid_argument("config field 'attack': expected none, fgsm, or pgd");
    if (cfg.method == "fedccl-plus" && cfg.attack_mode == "none")
        throw std::invalid_argument("config: method=fedccl-plus requires attack=fgsm or attack=pgd");

    cfg.eps = detail::to_double(raw, "eps", cfg.eps);
    cfg.atk_alpha = detail::to_double(raw, "atk_alpha", cfg.atk_alpha);
    cfg.atk_steps = static_cast<std::size_t>(detail::to_u64(raw, "steps", cfg.atk_steps));
    cfg.atk_random_start = detail::to_bool(raw, "random_start", cfg.atk_random_start);
    if (raw.has("attack_objective")) cfg.attack_objective = raw.kv.at("attack_objective");
    cfg.clamp_lo = detail::to_double(raw, "clamp_lo", cfg.clamp_lo);
    cfg.clamp_hi = detail::to_double(raw, "clamp_hi", cfg.clamp_hi);

    if (cfg.rounds > 0) {
        // surfacing bad knobs at parse time, not mid-run
        fedccl::validate(cfg.train);
        cfg.scenario.validate();
        cfg.contrast().validate();
        if (cfg.attack_mode != "none") cfg.resolved_attack().validate();
    }
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
inline std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        if constexpr (std::is_same_v<T, std::string>) out += xs[i];
        else out += std::to_string(xs[i]);
    }
    return out;
}

}  // namespace detail

// Canonical text form: every key explicit, fixed order, full double
// precision. parse(serialize(parse(x))) == parse(x).
inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "method = " << cfg.method << "\n";
    out << "rounds = " << cfg.rounds << "\n";
    out << "seeds = " << detail::join(cfg.seeds) << "\n";
    out << "out = " << cfg.out_dir << "\n";
    out << "regime = " << to_string(cfg.scenario.regime) << "\n";
    out << "dataset = " << cfg.scenario.dataset << "\n";
    out << "clients = " << cfg.scenario.n_clients << "\n";
    out << "alpha = " << detail::fmt_double(cfg.scenario.alpha) << "\n";
    out << "samples_per_client = " << cfg.scenario.samples_per_client << "\n";
    out << "scenario_seed = " << cfg.scenario.seed << "\n";
    out << "transforms = " << detail::join(cfg.scenario.transforms) << "\n";
    out << "synth_classes = " << cfg.scenario.synth_classes << "\n";
    out << "synth_dim = " << cfg.scenario.synth_dim << "\n";
    out << "synth_sigma = " << detail::fmt_double(cfg.scenario.synth_sigma) << "\n";
    out << "lr = " << detail::fmt_double(cfg.train.learning_rate) << "\n";
    out << "batch = " << cfg.train.batch_size << "\n";
    out << "epochs = " << cfg.train.local_epochs << "\n";
    out << "temperature = " << detail::fmt_double(cfg.train.temperature) << "\n";
    out << "hidden = " << detail::join(cfg.hidden) << "\n";
    out << "use_local = " << (cfg.use_local ? "true" : "false") << "\n";
    out << "use_global = " << (cfg.use_global ? "true" : "false") << "\n";
    out << "w_local = " << detail::fmt_double(cfg.w_local) << "\n";
    out << "w_global = " << detail::fmt_double(cfg.w_global) << "\n";
    out << "attack = " << cfg.attack_mode << "\n";
    out << "eps = " << detail::fmt_double(cfg.eps) << "\n";
    out << "atk_alpha = " << detail::fmt_double(cfg.atk_alpha) << "\n";
    out << "steps = " << cfg.atk_steps << "\n";
    out << "random_start = " << (cfg.atk_random_start ? "true" : "false") << "\n";
    out << "attack_objective = " << cfg.attack_objective << "\n";
    out << "clamp_lo = " << detail::fmt_double(cfg.clamp_lo) << "\n";
    out << "clamp_hi = " << detail::fmt_double(cfg.clamp_hi) << "\n";
    return out.str();
}

// Identifies the comparison-relevant setup: scenario plus training knobs,
// excluding method, ablation flags, weights, and attack settings. Runs with
// equal hashes are comparable rows of one table.
inline std::string scenario_hash(const ExperimentConfig& cfg) {
    std::ostringstream key;
    key << to_string(cfg.scenario.regime) << "|" << cfg.scenario.dataset << "|"
        << cfg.scenario.n_clients << "|" << detail::fmt_double(cfg.scenario.alpha) << "|"
        << cfg.scenario.samples_per_client << "|" << cfg.scenario.seed << "|"
        << detail::join(cfg.scenario.transforms) << "|" << cfg.scenario.synth_classes << "|"
        << cfg.scenario.synth_dim << "|" << detail::fmt_double(cfg.scenario.synth_sigma) << "|"
        << detail::fmt_double(cfg.train.learning_rate) << "|" << cfg.train.batch_size << "|"
        << cfg.train.local_epochs << "|" << detail::fmt_double(cfg.train.temperature) << "|"
        << detail::join(cfg.hidden) << "|" << cfg.rounds << "|" << detail::join(cfg.seeds);
    const std::string s = key.str();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace fedccl
