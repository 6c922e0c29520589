#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "avgrl/api.hpp"
#include "avgrl/harness.hpp"
#include "avgrl/mdp.hpp"
#include "avgrl/regret.hpp"
#include "avgrl/rl.hpp"
#include "avgrl/transforms.hpp"

namespace avgrl {

// MDP files: JSON with n_states, n_actions, transition[s][a][s'], reward[s][a].
Mdp load_mdp(const std::filesystem::path& path);
void save_mdp(const Mdp& mdp, const std::filesystem::path& path);

StochasticPolicy load_policy(const std::filesystem::path& path);
void save_policy(const StochasticPolicy& policy, const std::filesystem::path& path);

// Feature files declare the flat-index convention alongside the matrix.
FeatureMap load_features(const std::filesystem::path& path);
void save_features(const FeatureMap& features, const std::filesystem::path& path);

void save_transform_records(const std::vector<TransformRecord>& records,
                            const std::filesystem::path& path);

// Traces: JSON lines; the first line is a metadata object with a "kind" tag
// ("api-trace" | "rl-trace" | "discounted-trace"), each following line is one
// iteration row.
void save_api_trace(const ApiTrace& trace, const std::filesystem::path& path);
ApiTrace load_api_trace(const std::filesystem::path& path);

void save_rl_trace(const RlTrace& trace, const std::filesystem::path& path);
RlTrace load_rl_trace(const std::filesystem::path& path);

void save_discounted_trace(const DiscountedTrace& trace, const std::filesystem::path& path);

/// Peeks the "kind" tag of a trace file.
std::string trace_kind(const std::filesystem::path& path);

// Certificate summaries (pass/fail per inequality family with max slack).
struct FamilySummary {
    std::string family;
    int checked = 0;
    int violations = 0;
    double max_violation_slack = 0.0;  // largest failure amount, 0 when clean
    double min_margin = 0.0;           // tightest passing margin observed
};

struct CertificateSummary {
    std::vector<FamilySummary> families;
    bool pass() const;
};

CertificateSummary summarize_api_certificates(const ApiTrace& trace);
CertificateSummary summarize_rl_certificates(const RlTrace& trace);

void save_certificate_summary(const CertificateSummary& summary,
                              const std::filesystem::path& path);

// Experiment configs (documented JSON schema with a schema-version field).
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const ExperimentConfig& config, const std::filesystem::path& path);

}  // namespace avgrl
