#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <fedccl/fedccl.hpp>

int main(int argc, char** argv) {
    CLI::App app{"Deterministic federated-learning simulator with clustered feature contrast"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    bool deterministic = false;
    std::string attack_override;
    double eps_override = -1.0;
    double alpha_override = -1.0;
    long long steps_override = -1;

    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("config", config_path, "key=value config file")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--out", out_override, "output directory (overrides config and FEDCCL_OUT)");
    run->add_flag("--deterministic", deterministic,
                  "force sequential client execution (runs are sequential either way; the flag "
                  "records the guarantee)");
    run->add_option("--attack", attack_override, "attack mode override")
        ->check(CLI::IsMember({"none", "fgsm", "pgd"}));
    run->add_option("--eps", eps_override, "attack radius override")->check(CLI::NonNegativeNumber);
    run->add_option("--alpha", alpha_override, "attack step size override")
        ->check(CLI::PositiveNumber);
    run->add_option("--steps", steps_override, "attack step count override")
        ->check(CLI::PositiveNumber);

    std::vector<std::string> summaries;
    auto* compare = app.add_subcommand("compare", "Print a delta table for >= 2 summary.csv files");
    compare->add_option("summaries", summaries, "summary.csv files; first is the baseline")
        ->required()
        ->expected(2, -1)
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            fedccl::ExperimentConfig cfg = fedccl::parse_config(config_path);
            if (const char* env = std::getenv("FEDCCL_OUT"); env != nullptr && *env != '\0')
                cfg.out_dir = env;
            if (!out_override.empty()) cfg.out_dir = out_override;
            if (!attack_override.empty()) cfg.attack_mode = attack_override;
            if (eps_override >= 0.0) cfg.eps = eps_override;
            if (alpha_override > 0.0) cfg.atk_alpha = alpha_override;
            if (steps_override > 0) cfg.atk_steps = static_cast<std::size_t>(steps_override);
            if (deterministic) cfg.deterministic = true;
            if (cfg.adversarial_training() && cfg.attack_mode == "none")
                throw std::invalid_argument("method=fedccl-plus requires an attack mode");
            fedccl::run_experiment(cfg);
            return 0;
        }
        return fedccl::compare_runs(summaries);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
