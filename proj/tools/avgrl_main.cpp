// avgrl: average-reward MDP toolkit command line.
//
// Exit codes: 0 all certificates pass, 1 certificate violation,
// 2 usage/structural error, 3 numerical/convergence error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "avgrl/bellman.hpp"
#include "avgrl/io.hpp"
#include "avgrl/regret.hpp"
#include "avgrl/transforms.hpp"

using namespace avgrl;
using nlohmann::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

void print_summary(const CertificateSummary& summary) {
    for (const auto& fam : summary.families) {
        std::cout << (fam.violations == 0 ? "PASS" : "FAIL") << "  " << fam.family << "  checked="
                  << fam.checked << " violations=" << fam.violations;
        if (fam.violations > 0) std::cout << " max_slack=" << fam.max_violation_slack;
        std::cout << '\n';
    }
}

int cmd_gen(const std::string& kind, int states, int actions, std::uint64_t seed,
            double concentration, double r_lo, double r_hi, double mix, double kappa, int width,
            int height, double slip, const std::string& rewards_spec, const std::string& out) {
    Mdp mdp = [&] {
        if (kind == "random") {
            RandomMdpSpec spec;
            spec.n_states = states;
            spec.n_actions = actions;
            spec.seed = seed;
            spec.concentration = concentration;
            spec.r_lo = r_lo;
            spec.r_hi = r_hi;
            spec.mix_eps = mix;
            return generate_random_mdp(spec);
        }
        std::map<int, double> cells;
        if (!rewards_spec.empty()) {
            std::stringstream ss(rewards_spec);
            std::string item;
            while (std::getline(ss, item, ',')) {
                auto colon = item.find(':');
                if (colon == std::string::npos)
                    throw StructuralError("bad --rewards entry '" + item +
                                          "', expected cell:value");
                cells[std::stoi(item.substr(0, colon))] = std::stod(item.substr(colon + 1));
            }
        }
        Mdp grid = generate_gridworld(width, height, slip, cells);
        if (mix > 0.0) grid = exploration_mix(grid, mix, "gridworld").first;
        return grid;
    }();
    if (kappa > 0.0) mdp = aperiodicity_transform(mdp, kappa, "gen").first;
    save_mdp(mdp, out);
    std::cout << "wrote " << out << " (" << mdp.n_states() << " states, " << mdp.n_actions()
              << " actions)\n";
    return kExitPass;
}

int cmd_solve(const std::string& mdp_path, const std::string& policy_path, bool optimal,
              bool q_space, int anchor, const std::string& out) {
    Mdp mdp = load_mdp(mdp_path);
    StochasticPolicy policy = [&] {
        if (optimal) {
            ErrorInjector none;
            ApiTrace trace = run_api(mdp, Vec::Zero(mdp.n_states()), none,
                                     2 * mdp.n_states() + 10, anchor);
            return StochasticPolicy::deterministic(trace.rows.back().policy, mdp.n_actions());
        }
        if (policy_path.empty()) return StochasticPolicy::uniform(mdp.n_states(),
                                                                  mdp.n_actions());
        return load_policy(policy_path);
    }();
    EvaluationResult result =
        q_space ? solve_bellman_q(mdp, policy, anchor) : solve_bellman(mdp, policy, anchor);
    json j{{"gain", result.gain},
           {"bias", std::vector<double>(result.bias.data(), result.bias.data() + result.bias.size())},
           {"stationary", std::vector<double>(result.stationary.data(),
                                              result.stationary.data() + result.stationary.size())},
           {"anchor", result.anchor}};
    if (optimal) {
        json probs = json::array();
        for (int s = 0; s < policy.n_states(); ++s) {
            json row = json::array();
            for (int a = 0; a < policy.n_actions(); ++a) row.push_back(policy.prob(s, a));
            probs.push_back(row);
        }
        j["policy"] = probs;
    }
    if (out.empty())
        std::cout << j.dump(1) << '\n';
    else {
        std::ofstream os(out);
        os << j.dump(1) << '\n';
    }
    return kExitPass;
}

int cmd_transform(const std::string& mdp_path, std::optional<double> mix,
                  std::optional<double> kappa, const std::string& out) {
    Mdp mdp = load_mdp(mdp_path);
    std::vector<TransformRecord> records;
    if (mix) {
        auto [next, record] = exploration_mix(mdp, *mix, mdp_path);
        mdp = std::move(next);
        records.push_back(record);
    }
    if (kappa) {
        auto [next, record] = aperiodicity_transform(mdp, *kappa, mdp_path);
        mdp = std::move(next);
        records.push_back(record);
    }
    if (records.empty()) throw StructuralError("transform: give --mix and/or --schweitzer");
    save_mdp(mdp, out);
    save_transform_records(records, out + ".transform.json");
    std::cout << "wrote " << out << " and " << out << ".transform.json\n";
    return kExitPass;
}

int cmd_api_run(const std::string& mdp_path, double eps, double delta, const std::string& mode,
                std::uint64_t seed, int iters, int anchor, const std::string& out) {
    Mdp mdp = load_mdp(mdp_path);
    ErrorInjector injector;
    injector.improvement_eps = eps;
    injector.evaluation_delta = delta;
    injector.mode = ErrorInjector::mode_from_name(mode);
    injector.seed = seed;
    ApiTrace trace = run_api(mdp, Vec::Zero(mdp.n_states()), injector, iters, anchor);
    save_api_trace(trace, out);
    auto summary = summarize_api_certificates(trace);
    save_certificate_summary(summary, out + ".summary.json");
    std::cout << "J* = " << trace.j_star << ", final gap = "
              << trace.j_star - trace.rows.back().gain_exact << ", gamma = " << trace.gamma
              << " (" << trace.gamma_scope << ")\n";
    print_summary(summary);
    return summary.pass() ? kExitPass : kExitViolation;
}

int cmd_rl_run(const std::string& mdp_path, const std::string& rule_name, double beta, long tau,
               int iters, double lambda, const std::string& features_arg, std::uint64_t seed,
               double c1, double c2, double c_alpha, int anchor_sa, const std::string& out) {
    Mdp mdp = load_mdp(mdp_path);
    FeatureMap features = features_arg == "tabular"
                              ? FeatureMap::tabular(mdp.n_states(), mdp.n_actions())
                              : load_features(features_arg);
    PolicyUpdateRule rule{PolicyUpdateRule::kind_from_name(rule_name), beta};
    TdConfig td;
    td.lambda = lambda;
    td.c1 = c1;
    td.c2 = c2;
    td.c_alpha = c_alpha;
    RlTrace trace = run_policy_based(mdp, rule, features, td, tau, iters, seed, anchor_sa);
    trace.feature_kind = features_arg;
    save_rl_trace(trace, out);
    auto summary = summarize_rl_certificates(trace);
    save_certificate_summary(summary, out + ".summary.json");
    std::cout << "J* = " << trace.j_star << ", final gap = "
              << trace.j_star - trace.rows.back().j_next_exact
              << ", gamma = " << trace.gamma_visited << " (visited)\n";
    print_summary(summary);
    return summary.pass() ? kExitPass : kExitViolation;
}

int cmd_regret(const std::vector<std::string>& trace_paths, double c_hat,
               const std::string& out) {
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file) throw StructuralError("cannot write " + out);
        os = &file;
    }
    *os << "K,tau,iterations,pseudo_regret,bound,slack,c_hat,gamma,omega\n";
    bool violated = false;
    std::vector<double> ks, regrets;
    for (const auto& path : trace_paths) {
        RlTrace trace = load_rl_trace(path);
        RegretLedger ledger = build_regret_ledger(trace, c_hat);
        *os << ledger.horizon_k << ',' << ledger.tau << ',' << ledger.iterations << ','
            << ledger.pseudo_regret << ',' << ledger.bound << ',' << ledger.slack << ','
            << ledger.c_hat << ',' << ledger.gamma << ',' << ledger.omega << '\n';
        if (ledger.slack < 0.0) violated = true;
        ks.push_back(static_cast<double>(ledger.horizon_k));
        regrets.push_back(std::max(ledger.pseudo_regret, 1e-12));
    }
    if (ks.size() >= 2) *os << "# loglog_slope," << loglog_slope(ks, regrets) << '\n';
    return violated ? kExitViolation : kExitPass;
}

int cmd_verify(const std::string& trace_path) {
    std::string kind = trace_kind(trace_path);
    if (kind == "api-trace") {
        ApiTrace trace = load_api_trace(trace_path);
        auto summary = summarize_api_certificates(trace);
        // recompute the stored bound columns from the metadata
        FamilySummary bounds;
        bounds.family = "bound_columns";
        bounds.checked = static_cast<int>(trace.rows.size());
        for (const auto& row : trace.rows) {
            double expect =
                theorem_bound(row.k, trace.gamma, trace.injector.improvement_eps,
                              trace.injector.evaluation_delta, trace.j_star, trace.l0);
            if (std::abs(expect - row.bound) > 1e-9) {
                ++bounds.violations;
                bounds.max_violation_slack =
                    std::max(bounds.max_violation_slack, std::abs(expect - row.bound));
                if (bounds.violations == 1)
                    std::cout << "bound column mismatch first at row k=" << row.k << " (stored "
                              << row.bound << ", recomputed " << expect << ")\n";
            }
        }
        summary.families.push_back(bounds);
        print_summary(summary);
        return summary.pass() ? kExitPass : kExitViolation;
    }
    if (kind == "rl-trace") {
        RlTrace trace = load_rl_trace(trace_path);
        auto summary = summarize_rl_certificates(trace);
        print_summary(summary);
        return summary.pass() ? kExitPass : kExitViolation;
    }
    throw StructuralError("no certificate checkers for trace kind '" + kind + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"avgrl: average-reward MDP certificates toolkit"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate an MDP instance file");
    std::string gen_kind = "random", gen_out = "mdp.json", gen_rewards;
    int gen_states = 5, gen_actions = 2, gen_width = 3, gen_height = 3;
    std::uint64_t gen_seed = 0;
    double gen_conc = 1.0, gen_rlo = 0.0, gen_rhi = 1.0, gen_mix = 0.05, gen_kappa = 0.0,
           gen_slip = 0.1;
    gen->add_option("--kind", gen_kind, "random|gridworld")->check(CLI::IsMember({"random", "gridworld"}));
    gen->add_option("--states", gen_states, "state count (random)");
    gen->add_option("--actions", gen_actions, "action count (random)");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--concentration", gen_conc, "transition row concentration");
    gen->add_option("--rlo", gen_rlo, "reward range low");
    gen->add_option("--rhi", gen_rhi, "reward range high");
    gen->add_option("--mix", gen_mix, "exploration mixing rate (0 disables)");
    gen->add_option("--schweitzer", gen_kappa, "aperiodicity parameter (0 disables)");
    gen->add_option("--width", gen_width, "grid width");
    gen->add_option("--height", gen_height, "grid height");
    gen->add_option("--slip", gen_slip, "grid slip probability");
    gen->add_option("--rewards", gen_rewards, "grid cell rewards, e.g. 3:1.0,7:0.5");
    gen->add_option("--out", gen_out, "output MDP file");

    // solve
    auto* solve = app.add_subcommand("solve", "solve the gain/bias equations for a policy");
    std::string solve_mdp, solve_policy, solve_out;
    bool solve_optimal = false, solve_q = false;
    int solve_anchor = 0;
    solve->add_option("--mdp", solve_mdp, "MDP file")->required();
    solve->add_option("--policy", solve_policy, "policy file (default: uniform)");
    solve->add_flag("--optimal", solve_optimal, "solve for the optimal policy instead");
    solve->add_flag("--q", solve_q, "work in state-action space");
    solve->add_option("--anchor", solve_anchor, "anchor index (state, or flat s*|A|+a with --q)");
    solve->add_option("--out", solve_out, "write the result here instead of stdout");

    // transform
    auto* transform = app.add_subcommand("transform", "apply named transforms to an MDP file");
    std::string tr_mdp, tr_out = "transformed.json";
    double tr_mix = -1.0, tr_kappa = -1.0;
    transform->add_option("--mdp", tr_mdp, "MDP file")->required();
    transform->add_option("--mix", tr_mix, "exploration mixing rate");
    transform->add_option("--schweitzer", tr_kappa, "aperiodicity parameter");
    transform->add_option("--out", tr_out, "output MDP file");

    // api-run
    auto* api = app.add_subcommand("api-run", "run approximate policy iteration with injection");
    std::string api_mdp, api_mode = "none", api_out = "trace.jsonl";
    double api_eps = 0.0, api_delta = 0.0;
    std::uint64_t api_seed = 0;
    int api_iters = 50, api_anchor = 0;
    api->add_option("--mdp", api_mdp, "MDP file")->required();
    api->add_option("--eps", api_eps, "improvement error budget");
    api->add_option("--delta", api_delta, "evaluation error budget");
    api->add_option("--mode", api_mode, "none|worst|random")
        ->check(CLI::IsMember({"none", "worst", "random"}));
    api->add_option("--seed", api_seed, "injector seed");
    api->add_option("--iters", api_iters, "iteration count");
    api->add_option("--anchor", api_anchor, "anchor state");
    api->add_option("--out", api_out, "trace output file (JSON lines)");

    // rl-run
    auto* rl = app.add_subcommand("rl-run", "run the policy-based loop with TD evaluation");
    std::string rl_mdp, rl_rule = "softmax", rl_features = "tabular", rl_out = "rl-trace.jsonl";
    double rl_beta = 10.0, rl_lambda = 0.5, rl_c1 = 1.0, rl_c2 = 10.0, rl_calpha = 1.0;
    long rl_tau = 10000;
    int rl_iters = 20, rl_anchor = 0;
    std::uint64_t rl_seed = 0;
    rl->add_option("--mdp", rl_mdp, "MDP file")->required();
    rl->add_option("--rule", rl_rule, "greedy|softmax|mirror")
        ->check(CLI::IsMember({"greedy", "softmax", "mirror"}));
    rl->add_option("--beta", rl_beta, "update rule parameter");
    rl->add_option("--tau", rl_tau, "trajectory length per iteration");
    rl->add_option("--iters", rl_iters, "iteration count");
    rl->add_option("--lambda", rl_lambda, "eligibility decay");
    rl->add_option("--features", rl_features, "'tabular' or a feature file");
    rl->add_option("--seed", rl_seed, "run seed");
    rl->add_option("--c1", rl_c1, "step size numerator");
    rl->add_option("--c2", rl_c2, "step size shift");
    rl->add_option("--calpha", rl_calpha, "gain estimate step scale");
    rl->add_option("--anchor", rl_anchor, "anchor state-action index");
    rl->add_option("--out", rl_out, "trace output file (JSON lines)");

    // regret
    auto* regret = app.add_subcommand("regret", "regret accounting over recorded rl traces");
    std::vector<std::string> regret_traces;
    double regret_chat = 1.0;
    std::string regret_out;
    regret->add_option("--traces", regret_traces, "rl trace files")->required()->expected(-1);
    regret->add_option("--chat", regret_chat, "measured TD constant");
    regret->add_option("--out", regret_out, "CSV output (default stdout)");

    // verify
    auto* verify = app.add_subcommand("verify", "replay a trace through the certificate checkers");
    std::string verify_trace;
    verify->add_option("trace", verify_trace, "trace file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen(gen_kind, gen_states, gen_actions, gen_seed, gen_conc, gen_rlo,
                           gen_rhi, gen_mix, gen_kappa, gen_width, gen_height, gen_slip,
                           gen_rewards, gen_out);
        if (solve->parsed())
            return cmd_solve(solve_mdp, solve_policy, solve_optimal, solve_q, solve_anchor,
                             solve_out);
        if (transform->parsed())
            return cmd_transform(tr_mdp, tr_mix >= 0 ? std::optional<double>(tr_mix) : std::nullopt,
                                 tr_kappa >= 0 ? std::optional<double>(tr_kappa) : std::nullopt,
                                 tr_out);
        if (api->parsed())
            return cmd_api_run(api_mdp, api_eps, api_delta, api_mode, api_seed, api_iters,
                               api_anchor, api_out);
        if (rl->parsed())
            return cmd_rl_run(rl_mdp, rl_rule, rl_beta, rl_tau, rl_iters, rl_lambda, rl_features,
                              rl_seed, rl_c1, rl_c2, rl_calpha, rl_anchor, rl_out);
        if (regret->parsed()) return cmd_regret(regret_traces, regret_chat, regret_out);
        if (verify->parsed()) return cmd_verify(verify_trace);
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << " (last residual " << e.last_residual << ")\n";
        return kExitNumerical;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << " (at step " << e.at_step << ")\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
