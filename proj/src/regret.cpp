#include "avgrl/regret.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace avgrl {

RegretDecomposition decompose_regret(const std::vector<double>& rewards,
                                     const std::vector<double>& gains, double j_star) {
    if (gains.empty()) throw StructuralError("decompose_regret needs at least one gain");
    if (rewards.size() % gains.size() != 0)
        throw StructuralError("reward count is not a multiple of the iteration count");
    const std::size_t tau = rewards.size() / gains.size();
    if (tau == 0) throw StructuralError("decompose_regret needs at least one reward per gain");

    RegretDecomposition out{0.0, 0.0, 0.0};
    for (std::size_t t = 0; t < gains.size(); ++t) {
        out.pseudo_regret += static_cast<double>(tau) * (j_star - gains[t]);
        for (std::size_t i = 0; i < tau; ++i) {
            double r = rewards[t * tau + i];
            out.estimation_term += gains[t] - r;
            out.total += j_star - r;
        }
    }
    return out;
}

RegretDecomposition decompose_regret(const RlTrace& trace) {
    RegretDecomposition out{0.0, 0.0, 0.0};
    for (const auto& row : trace.rows) {
        if (row.steps == 0) continue;  // final improvement-only row
        out.pseudo_regret += static_cast<double>(row.steps) * (trace.j_star - row.j_next_exact);
        out.estimation_term +=
            static_cast<double>(row.steps) * row.j_next_exact - row.reward_sum;
        out.total += static_cast<double>(row.steps) * trace.j_star - row.reward_sum;
    }
    return out;
}

double c5_constant(double gamma, double omega, double c_hat) {
    if (!(omega > 0.0 && omega <= 1.0)) throw DomainError("omega must lie in (0,1]");
    return (1.0 + gamma) * std::log(1.0 / omega) + 2.0 * c_hat;
}

double pseudo_regret_bound(double horizon_k, long tau, double gamma, double c0, double delta0_bar,
                           double omega, double c_hat) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0,1]");
    if (tau < 1) throw DomainError("tau must be positive");
    double c5 = c5_constant(gamma, omega, c_hat);
    return (static_cast<double>(tau) * c0 + 2.0 * horizon_k * delta0_bar +
            horizon_k * c5 / std::sqrt(static_cast<double>(tau))) /
           gamma;
}

long optimize_tau(double horizon_k, double c0, double c5) {
    if (!(horizon_k >= 1.0) || !(c0 > 0.0) || !(c5 > 0.0))
        throw DomainError("optimize_tau needs positive inputs");
    double raw = std::pow(horizon_k * c5 / c0, 2.0 / 3.0);
    long tau = std::lround(raw);
    return std::clamp(tau, 1L, static_cast<long>(horizon_k));
}

double estimate_td_constant(const Mdp& mdp, const StochasticPolicy& policy,
                            const FeatureMap& features, const TdConfig& td,
                            const std::vector<long>& tau_grid, int n_seeds,
                            std::uint64_t base_seed, int anchor_sa) {
    if (tau_grid.size() < 4)
        throw DomainError("the TD-constant regression needs at least 4 grid points");
    if (n_seeds < 1) throw DomainError("need at least one seed");

    EvaluationResult exact = solve_bellman_q(mdp, policy, anchor_sa);
    CounterRng root = CounterRng(base_seed).stream("td-calibrate");

    double sxy = 0.0, sxx = 0.0;
    for (std::size_t gi = 0; gi < tau_grid.size(); ++gi) {
        std::vector<double> errors;
        for (int seed = 0; seed < n_seeds; ++seed) {
            CounterRng rng = root.substream(gi * 1000 + static_cast<std::uint64_t>(seed));
            auto trajectory = sample_trajectory(mdp, policy, tau_grid[gi], rng);
            TdState state = td_lambda_run(trajectory, features, td, anchor_sa);
            errors.push_back(
                (features.phi() * state.theta - exact.bias).cwiseAbs().maxCoeff());
        }
        std::sort(errors.begin(), errors.end());
        double median = errors.size() % 2 == 1
                            ? errors[errors.size() / 2]
                            : 0.5 * (errors[errors.size() / 2 - 1] + errors[errors.size() / 2]);
        double x = 1.0 / std::sqrt(static_cast<double>(tau_grid[gi]));
        sxy += median * x;
        sxx += x * x;
    }
    return sxy / sxx;
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw StructuralError("slope fit needs matched samples, at least two");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += std::log(xs[i]);
        my += std::log(ys[i]);
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (std::log(xs[i]) - mx) * (std::log(ys[i]) - my);
        den += (std::log(xs[i]) - mx) * (std::log(xs[i]) - mx);
    }
    return num / den;
}

RegretLedger build_regret_ledger(const RlTrace& trace, double c_hat) {
    RegretLedger ledger{};
    long steps = 0;
    int iters = 0;
    for (const auto& row : trace.rows)
        if (row.steps > 0) {
            steps += row.steps;
            ++iters;
        }
    ledger.horizon_k = steps;
    ledger.tau = trace.tau;
    ledger.iterations = iters;
    ledger.j_star = trace.j_star;
    auto split = decompose_regret(trace);
    ledger.pseudo_regret = split.pseudo_regret;
    ledger.estimation_term = split.estimation_term;
    // measured gamma/omega can underflow to zero for concentrated policies;
    // clamp at the smallest positive double to keep the bound finite
    ledger.gamma = std::max(trace.gamma_visited, std::numeric_limits<double>::min());
    ledger.c0 = trace.c0;
    ledger.omega = std::max(trace.omega_argmax, std::numeric_limits<double>::min());
    ledger.omega_optimal = trace.omega_optimal;
    ledger.c_hat = c_hat;
    ledger.bound = pseudo_regret_bound(static_cast<double>(steps), trace.tau, ledger.gamma,
                                       trace.c0, trace.delta0_bar, ledger.omega, c_hat);
    ledger.slack = ledger.bound - ledger.pseudo_regret;
    return ledger;
}

}  // namespace avgrl
