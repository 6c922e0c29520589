#include "avgrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "avgrl/bellman.hpp"
#include "avgrl/io.hpp"
#include "avgrl/regret.hpp"
#include "avgrl/rng.hpp"
#include "avgrl/transforms.hpp"

namespace avgrl {

Mdp generate_random_mdp(const RandomMdpSpec& spec) {
    if (spec.n_states < 1 || spec.n_actions < 1)
        throw StructuralError("state and action counts must be positive");
    if (spec.r_lo > spec.r_hi) throw StructuralError("reward range is empty");
    if (!(spec.concentration > 0.0)) throw StructuralError("concentration must be positive");

    CounterRng rng = CounterRng(spec.seed).stream("mdp-gen");
    std::vector<Mat> transition(static_cast<std::size_t>(spec.n_actions));
    for (int a = 0; a < spec.n_actions; ++a) {
        Mat slice(spec.n_states, spec.n_states);
        for (int s = 0; s < spec.n_states; ++s) {
            double sum = 0.0;
            for (int s2 = 0; s2 < spec.n_states; ++s2) {
                double g = rng.next_gamma(spec.concentration);
                slice(s, s2) = g;
                sum += g;
            }
            slice.row(s) /= sum;
        }
        transition[static_cast<std::size_t>(a)] = std::move(slice);
    }
    Mat reward(spec.n_states, spec.n_actions);
    for (int s = 0; s < spec.n_states; ++s)
        for (int a = 0; a < spec.n_actions; ++a)
            reward(s, a) = rng.uniform(spec.r_lo, spec.r_hi);

    Mdp mdp(std::move(transition), std::move(reward));
    if (spec.mix_eps > 0.0) return exploration_mix(mdp, spec.mix_eps, "generated").first;
    return mdp;
}

Mdp generate_gridworld(int width, int height, double slip,
                       const std::map<int, double>& cell_rewards) {
    if (width < 1 || height < 1) throw StructuralError("grid dimensions must be positive");
    if (!(slip >= 0.0 && slip < 1.0)) throw DomainError("slip must lie in [0,1)");
    const int n = width * height;
    const int dx[4] = {0, 1, 0, -1};  // up, right, down, left (y grows downward)
    const int dy[4] = {-1, 0, 1, 0};

    auto move = [&](int s, int dir) {
        int x = s % width, y = s / width;
        int nx = x + dx[dir], ny = y + dy[dir];
        if (nx < 0 || nx >= width || ny < 0 || ny >= height) return s;  // wall: stay
        return ny * width + nx;
    };

    std::vector<Mat> transition(4, Mat::Zero(n, n));
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < 4; ++a) {
            transition[static_cast<std::size_t>(a)](s, move(s, a)) += 1.0 - slip;
            transition[static_cast<std::size_t>(a)](s, move(s, (a + 1) % 4)) += slip / 2.0;
            transition[static_cast<std::size_t>(a)](s, move(s, (a + 3) % 4)) += slip / 2.0;
        }
    Mat reward = Mat::Zero(n, 4);
    for (const auto& [cell, value] : cell_rewards) {
        if (cell < 0 || cell >= n) throw StructuralError("reward cell index out of range");
        reward.row(cell).setConstant(value);
    }
    return Mdp(std::move(transition), std::move(reward));
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StructuralError("cannot open file for hashing: " + path.string());
    std::uint64_t h = 0xCBF29CE484222325ULL;
    char buffer[4096];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buffer[i]);
            h *= 0x100000001B3ULL;
        }
        if (in.eof()) break;
    }
    return h;
}

namespace {

Mdp build_instance(const ExperimentConfig& config) {
    Mdp mdp = [&] {
        if (config.instance.kind == "random") return generate_random_mdp(config.instance.random);
        if (config.instance.kind == "gridworld")
            return generate_gridworld(config.instance.grid_width, config.instance.grid_height,
                                      config.instance.grid_slip, config.instance.grid_rewards);
        if (config.instance.kind == "file") return load_mdp(config.instance.file);
        throw StructuralError("unknown instance kind '" + config.instance.kind + "'");
    }();
    if (config.mix_eps) mdp = exploration_mix(mdp, *config.mix_eps).first;
    if (config.schweitzer_kappa)
        mdp = aperiodicity_transform(mdp, *config.schweitzer_kappa).first;
    return mdp;
}

SeedOutcome run_one_seed(const ExperimentConfig& config, const Mdp& mdp, std::uint64_t seed,
                         const std::filesystem::path& dir, double c_hat) {
    SeedOutcome outcome;
    outcome.seed = seed;
    outcome.ok = true;
    std::filesystem::create_directories(dir);
    const auto& alg = config.algorithm;
    try {
        if (alg.kind == "api") {
            ErrorInjector injector = alg.injector;
            injector.seed = seed;
            ApiTrace trace =
                run_api(mdp, Vec::Zero(mdp.n_states()), injector, alg.iterations, alg.anchor);
            auto path = dir / "trace.jsonl";
            save_api_trace(trace, path);
            outcome.trace_path = path.string();
            auto summary = summarize_api_certificates(trace);
            save_certificate_summary(summary, dir / "summary.json");
            for (const auto& fam : summary.families) {
                outcome.violations += fam.violations;
                outcome.max_slack = std::max(outcome.max_slack, fam.max_violation_slack);
            }
            outcome.final_gap = trace.j_star - trace.rows.back().gain_exact;
        } else if (alg.kind == "rl") {
            FeatureMap features =
                alg.features == "tabular"
                    ? FeatureMap::tabular(mdp.n_states(), mdp.n_actions())
                    : load_features(alg.features);
            RlTrace trace = run_policy_based(mdp, alg.rule, features, alg.td, alg.tau,
                                             alg.iterations, seed);
            auto path = dir / "trace.jsonl";
            save_rl_trace(trace, path);
            outcome.trace_path = path.string();
            auto summary = summarize_rl_certificates(trace);
            save_certificate_summary(summary, dir / "summary.json");
            for (const auto& fam : summary.families) {
                outcome.violations += fam.violations;
                outcome.max_slack = std::max(outcome.max_slack, fam.max_violation_slack);
            }
            outcome.final_gap = trace.j_star - trace.rows.back().j_next_exact;
        } else if (alg.kind == "regret") {
            std::ofstream csv(dir / "regret.csv");
            csv << "K,tau,iterations,pseudo_regret,bound,slack,c_hat,gamma,omega\n";
            double worst_violation = 0.0;
            std::vector<double> ks, regrets;
            // schedule constants: c0 is exact for Q_0 = 0; gamma and omega are
            // not known pre-run, so the schedule uses the uniform-policy values
            Vec q0 = Vec::Zero(mdp.n_states() * mdp.n_actions());
            double c0_prior = optimal_gain_enumeration(mdp).j_star - gap_stats_q(mdp, q0).l;
            StochasticPolicy uniform = StochasticPolicy::uniform(mdp.n_states(),
                                                                 mdp.n_actions());
            double gamma_prior = gamma_lower_bound_sa(mdp, {uniform});
            double omega_prior = 1.0 / mdp.n_actions();
            for (long horizon : alg.horizons) {
                double c5 = c5_constant(gamma_prior, omega_prior, c_hat);
                long tau = optimize_tau(static_cast<double>(horizon), std::max(c0_prior, 1e-6),
                                        c5);
                tau = std::max<long>(tau, 2);
                int iters = std::max<int>(1, static_cast<int>(horizon / tau));
                PolicyUpdateRule rule{PolicyUpdateRule::Kind::mirror_descent,
                                      std::sqrt(static_cast<double>(tau))};
                RlTrace trace =
                    run_policy_based(mdp, rule, FeatureMap::tabular(mdp.n_states(),
                                                                    mdp.n_actions()),
                                     alg.td, tau, iters, seed);
                RegretLedger ledger = build_regret_ledger(trace, c_hat);
                csv << ledger.horizon_k << ',' << ledger.tau << ',' << ledger.iterations << ','
                    << ledger.pseudo_regret << ',' << ledger.bound << ',' << ledger.slack << ','
                    << ledger.c_hat << ',' << ledger.gamma << ',' << ledger.omega << '\n';
                if (ledger.slack < 0.0) worst_violation = std::max(worst_violation, -ledger.slack);
                ks.push_back(static_cast<double>(ledger.horizon_k));
                regrets.push_back(std::max(ledger.pseudo_regret, 1e-12));
            }
            if (ks.size() >= 2) csv << "# loglog_slope," << loglog_slope(ks, regrets) << '\n';
            outcome.trace_path = (dir / "regret.csv").string();
            if (worst_violation > 0.0) {
                outcome.violations = 1;
                outcome.max_slack = worst_violation;
            }
        } else {
            throw StructuralError("unknown algorithm kind '" + alg.kind + "'");
        }
    } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.error = e.what();
    }
    return outcome;
}

}  // namespace

ResultBundle run_experiment(const ExperimentConfig& config) {
    if (config.seeds.empty()) throw StructuralError("experiment needs at least one seed");
    std::set<std::uint64_t> unique(config.seeds.begin(), config.seeds.end());
    if (unique.size() != config.seeds.size())
        throw StructuralError("experiment seeds must be distinct");
    if (config.instance.kind == "file" && !std::filesystem::exists(config.instance.file))
        throw StructuralError("instance file does not exist: " + config.instance.file);
    if (config.output_dir.empty()) throw StructuralError("output directory must be set");

    ResultBundle bundle;
    bundle.dir = config.output_dir;
    std::filesystem::create_directories(bundle.dir);
    save_experiment_config(config, bundle.dir / "config.json");

    Mdp mdp = build_instance(config);
    save_mdp(mdp, bundle.dir / "instance.json");

    // regret runs share one measured TD constant, estimated up front
    double c_hat = 0.0;
    if (config.algorithm.kind == "regret") {
        c_hat = estimate_td_constant(
            mdp, StochasticPolicy::uniform(mdp.n_states(), mdp.n_actions()),
            FeatureMap::tabular(mdp.n_states(), mdp.n_actions()), config.algorithm.td,
            config.algorithm.chat_tau_grid, config.algorithm.chat_seeds, /*base_seed=*/1);
    }

    bundle.outcomes.resize(config.seeds.size());
    unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                       config.seeds.size()));
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= config.seeds.size()) return;
                std::uint64_t seed = config.seeds[i];
                bundle.outcomes[i] = run_one_seed(
                    config, mdp, seed, bundle.dir / ("seed_" + std::to_string(seed)), c_hat);
            }
        });
    for (auto& t : pool) t.join();

    bundle.complete = true;
    std::ofstream summary(bundle.dir / "summary.csv");
    summary << "seed,status,violations,max_slack,final_gap,error\n";
    for (const auto& outcome : bundle.outcomes) {
        if (!outcome.ok) bundle.complete = false;
        summary << outcome.seed << ',' << (outcome.ok ? "ok" : "failed") << ','
                << outcome.violations << ',' << outcome.max_slack << ',' << outcome.final_gap
                << ',' << outcome.error << '\n';
    }
    summary.close();

    // manifest last: every produced file with a content hash, stable order
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(bundle.dir))
        if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
            files.push_back(std::filesystem::relative(entry.path(), bundle.dir));
    std::sort(files.begin(), files.end());
    std::ofstream manifest(bundle.dir / "manifest.json");
    manifest << "{\n  \"files\": [\n";
    for (std::size_t i = 0; i < files.size(); ++i) {
        char hex[17];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a64_file(bundle.dir / files[i])));
        manifest << "    {\"path\": \"" << files[i].generic_string() << "\", \"fnv1a64\": \""
                 << hex << "\"}" << (i + 1 < files.size() ? "," : "") << "\n";
    }
    manifest << "  ]\n}\n";
    return bundle;
}

}  // namespace avgrl
