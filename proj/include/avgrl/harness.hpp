#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avgrl/api.hpp"
#include "avgrl/mdp.hpp"
#include "avgrl/rl.hpp"

namespace avgrl {

struct RandomMdpSpec {
    int n_states = 5;
    int n_actions = 2;
    double concentration = 1.0;  // symmetric Dirichlet concentration per row
    double r_lo = 0.0;
    double r_hi = 1.0;
    std::uint64_t seed = 0;
    double mix_eps = 0.05;  // exploration mixing applied to every generated instance
};

/// Random tabular MDP: each transition row is a normalized vector of
/// independent Gamma(concentration) variates, rewards are uniform in range,
/// and the result is passed through exploration mixing so every policy's
/// chain is irreducible by construction.
Mdp generate_random_mdp(const RandomMdpSpec& spec);

/// 4-action gridworld (up, right, down, left) with lateral slip; moves into
/// a wall stay in place.  Rewards depend on the current cell only:
/// r(s, a) = cell_rewards.at(s) (missing cells reward 0).  Cell index is
/// row-major: s = y * width + x.
Mdp generate_gridworld(int width, int height, double slip,
                       const std::map<int, double>& cell_rewards);

// ---------------------------------------------------------------------------
// Experiment orchestration.

struct ExperimentConfig {
    static constexpr int schema_version = 1;

    struct Instance {
        std::string kind;  // "random" | "gridworld" | "file"
        RandomMdpSpec random;
        int grid_width = 2, grid_height = 2;
        double grid_slip = 0.1;
        std::map<int, double> grid_rewards;
        std::string file;
    } instance;

    std::optional<double> mix_eps;          // applied before kappa
    std::optional<double> schweitzer_kappa;

    struct Algorithm {
        std::string kind;  // "api" | "rl" | "regret"
        // api block
        ErrorInjector injector;
        int iterations = 50;
        int anchor = 0;
        // rl / regret block
        PolicyUpdateRule rule{PolicyUpdateRule::Kind::softmax, 10.0};
        TdConfig td;
        long tau = 10000;
        std::string features = "tabular";
        // regret block
        std::vector<long> horizons;
        std::vector<long> chat_tau_grid = {2500, 10000, 40000, 160000};
        int chat_seeds = 3;
    } algorithm;

    std::vector<std::uint64_t> seeds;
    std::string output_dir;
};

struct SeedOutcome {
    std::uint64_t seed;
    bool ok;
    std::string error;           // set when !ok
    std::string trace_path;
    int violations = 0;
    double max_slack = 0.0;      // most negative margin across families (0 when clean)
    double final_gap = 0.0;      // J* - J of the last policy
};

struct ResultBundle {
    std::filesystem::path dir;
    std::vector<SeedOutcome> outcomes;
    bool complete;  // false when any seed failed
};

/// Runs the configured algorithm across all seeds (worker pool), writes one
/// trace + certificate summary per seed, a summary table, and a manifest
/// listing every produced file with a content hash.  Outputs carry no
/// timestamps so identical configs produce identical bundles.
ResultBundle run_experiment(const ExperimentConfig& config);

/// FNV-1a 64-bit content hash of a file.
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

}  // namespace avgrl
