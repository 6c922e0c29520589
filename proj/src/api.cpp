#include "avgrl/api.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "avgrl/bellman.hpp"
#include "avgrl/rng.hpp"

namespace avgrl {

const char* ErrorInjector::mode_name(Mode m) {
    switch (m) {
        case Mode::none: return "none";
        case Mode::worst_within_budget: return "worst";
        default: return "random";
    }
}

ErrorInjector::Mode ErrorInjector::mode_from_name(const std::string& name) {
    if (name == "none") return Mode::none;
    if (name == "worst") return Mode::worst_within_budget;
    if (name == "random") return Mode::random_within_budget;
    throw StructuralError("unknown injector mode '" + name + "'");
}

namespace {

// Per-state action choice within the improvement budget.  q_sa(s,a) holds
// r(s,a) + sum_s' P(s'|s,a) h(s'); `greedy` the per-state maxima.
struct ImprovementPick {
    std::vector<int> actions;
    double realized_eps;
};

ImprovementPick pick_within_budget(const Mat& q_sa, const std::vector<int>& greedy,
                                   ErrorInjector::Mode mode, double eps, CounterRng* rng) {
    const int n = static_cast<int>(q_sa.rows()), m = static_cast<int>(q_sa.cols());
    ImprovementPick pick;
    pick.actions.resize(static_cast<std::size_t>(n));
    pick.realized_eps = 0.0;
    for (int s = 0; s < n; ++s) {
        double top = q_sa(s, greedy[static_cast<std::size_t>(s)]);
        int chosen = greedy[static_cast<std::size_t>(s)];
        if (mode == ErrorInjector::Mode::worst_within_budget) {
            double worst = top;
            for (int a = 0; a < m; ++a)
                if (top - q_sa(s, a) <= eps && q_sa(s, a) < worst) {
                    worst = q_sa(s, a);
                    chosen = a;
                }
        } else if (mode == ErrorInjector::Mode::random_within_budget) {
            std::vector<int> admissible;
            for (int a = 0; a < m; ++a)
                if (top - q_sa(s, a) <= eps) admissible.push_back(a);
            chosen = admissible[rng->next_below(admissible.size())];
        }
        pick.actions[static_cast<std::size_t>(s)] = chosen;
        pick.realized_eps = std::max(pick.realized_eps, top - q_sa(s, chosen));
    }
    return pick;
}

Vec evaluation_noise(const Vec& residual_exact, ErrorInjector::Mode mode, double delta,
                     CounterRng* rng) {
    const Eigen::Index n = residual_exact.size();
    Vec noise = Vec::Zero(n);
    if (mode == ErrorInjector::Mode::none || delta == 0.0) return noise;
    if (mode == ErrorInjector::Mode::worst_within_budget) {
        // -delta at the argmin of the greedy residual, +delta elsewhere.
        Eigen::Index argmin = 0;
        residual_exact.minCoeff(&argmin);
        noise.setConstant(delta);
        noise(argmin) = -delta;
    } else {
        for (Eigen::Index i = 0; i < n; ++i) noise(i) = rng->uniform(-delta, delta);
    }
    return noise;
}

}  // namespace

namespace {

// Exact (Howard) policy iteration; returns the optimal gain and the policies
// visited on the way.  Used when the deterministic class is too large to
// enumerate.
std::pair<double, std::vector<StochasticPolicy>> exact_policy_iteration(const Mdp& mdp,
                                                                        int anchor) {
    std::vector<StochasticPolicy> visited;
    Vec h = Vec::Zero(mdp.n_states());
    std::vector<int> prev;
    double gain = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < 100000; ++it) {
        auto opt = apply_optimal_op(mdp, h);
        if (opt.greedy == prev) return {gain, visited};
        prev = opt.greedy;
        StochasticPolicy mu = StochasticPolicy::deterministic(opt.greedy, mdp.n_actions());
        EvaluationResult eval = solve_bellman(mdp, mu, anchor);
        visited.push_back(std::move(mu));
        gain = eval.gain;
        h = eval.bias;
    }
    throw ConvergenceError("exact policy iteration did not settle", 0.0);
}

}  // namespace

ApiTrace run_api(const Mdp& mdp, const Vec& h0, const ErrorInjector& injector, int iterations,
                 int anchor) {
    if (h0.size() != mdp.n_states()) throw StructuralError("h0 length mismatch");
    assert_chain_assumptions(mdp);

    ApiTrace trace;
    trace.anchor = anchor;
    trace.injector = injector;
    trace.h0 = h0;

    double policy_count = std::pow(static_cast<double>(mdp.n_actions()), mdp.n_states());
    double gamma = 1.0;
    bool gamma_from_enumeration = policy_count <= 4096.0;
    std::vector<StochasticPolicy> visited_policies;
    if (gamma_from_enumeration) {
        trace.gamma_scope = "all_deterministic";
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& mu :
             enumerate_deterministic_policies(mdp.n_states(), mdp.n_actions())) {
            auto pk = policy_kernel(mdp, mu);
            Vec pi = stationary_distribution(pk.kernel, mdp.tol());
            best = std::max(best, pi.dot(pk.reward_vec));
            gamma = std::min(gamma, pi.minCoeff());
        }
        trace.j_star = best;
    } else {
        trace.gamma_scope = "visited";
        auto [j_star, pilot_policies] = exact_policy_iteration(mdp, anchor);
        trace.j_star = j_star;
        visited_policies = std::move(pilot_policies);
    }

    CounterRng rng = CounterRng(injector.seed).stream("injector");

    auto g0 = gap_stats(mdp, h0);
    trace.l0 = g0.l;
    trace.u0 = g0.u;

    const int n = mdp.n_states(), m = mdp.n_actions();
    Vec h = h0;
    for (int k = 0; k < iterations; ++k) {
        // improvement: greedy values, then a perturbation inside the budget
        Mat q_sa(n, m);
        for (int a = 0; a < m; ++a)
            q_sa.col(a) = mdp.reward().col(a) + mdp.action_kernel(a) * h;
        std::vector<int> greedy(static_cast<std::size_t>(n));
        for (int s = 0; s < n; ++s) {
            int best = 0;
            for (int a = 1; a < m; ++a)
                if (q_sa(s, a) > q_sa(s, best)) best = a;  // ties keep the lowest index
            greedy[static_cast<std::size_t>(s)] = best;
        }
        auto pick = pick_within_budget(q_sa, greedy, injector.mode, injector.improvement_eps,
                                       &rng);
        StochasticPolicy mu = StochasticPolicy::deterministic(pick.actions, m);
        if (!gamma_from_enumeration) visited_policies.push_back(mu);

        // evaluation: exact anchored bias, then bounded noise
        EvaluationResult exact = solve_bellman(mdp, mu, anchor);
        Vec residual = apply_optimal_op(mdp, exact.bias).value - exact.bias;
        Vec noise = evaluation_noise(residual, injector.mode, injector.evaluation_delta, &rng);

        auto g = gap_stats(mdp, h);
        ApiRow row;
        row.k = k;
        row.policy = pick.actions;
        row.h = h;
        row.gain_exact = exact.gain;
        row.u = g.u;
        row.l = g.l;
        row.eps_realized = pick.realized_eps;
        row.delta_realized = noise.cwiseAbs().maxCoeff();
        row.bound = 0.0;  // filled below once gamma is known
        row.bound_statement_form = 0.0;
        trace.rows.push_back(std::move(row));

        h = exact.bias + noise;
    }

    trace.gamma =
        gamma_from_enumeration ? gamma : gamma_lower_bound(mdp, visited_policies);
    for (auto& row : trace.rows) {
        row.bound = theorem_bound(row.k, trace.gamma, injector.improvement_eps,
                                  injector.evaluation_delta, trace.j_star, trace.l0);
        row.bound_statement_form =
            theorem_bound_statement_form(row.k, trace.gamma, injector.improvement_eps,
                                         injector.evaluation_delta, trace.j_star, trace.l0);
    }
    return trace;
}

double theorem_bound(int k, double gamma, double eps, double delta, double j_star, double l0) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0,1]");
    if (eps < 0.0 || delta < 0.0) throw DomainError("error budgets must be non-negative");
    double decay = std::pow(1.0 - gamma, k);
    return (1.0 - decay) / gamma * ((1.0 + gamma) * eps + 2.0 * delta) +
           decay * (j_star - l0 + eps);
}

double theorem_bound_statement_form(int k, double gamma, double eps, double delta, double j_star,
                                    double l0) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0,1]");
    double decay = std::pow(1.0 - gamma, k);
    return (1.0 - decay) / gamma * ((1.0 + gamma) * eps + 2.0 * delta) +
           decay * (j_star - l0 - eps);
}

double asymptotic_gap_limit(double gamma, double eps, double delta) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0,1]");
    return ((1.0 + gamma) * eps + 2.0 * delta) / gamma;
}

double prop311_bound(int k, double gamma, double eps, double delta, double j_star, double l0) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0,1]");
    if (eps < 0.0 || delta < 0.0) throw DomainError("error budgets must be non-negative");
    double decay = std::pow(1.0 - gamma, k);
    return (1.0 - decay) / (gamma * gamma) * ((1.0 + gamma) * eps + 2.0 * delta) +
           (2.0 * delta + eps) / gamma + decay * (j_star - l0 + eps) / gamma;
}

double asymptotic_span_limit(double gamma, double eps, double delta) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0,1]");
    return (eps * (1.0 + 2.0 * gamma) + 2.0 * delta * (1.0 + gamma)) / (gamma * gamma);
}

namespace {

void record(std::vector<Violation>& out, int k, const std::string& name, double lhs, double rhs,
            double tol) {
    if (lhs > rhs + tol) out.push_back({k, name, lhs - rhs});
}

}  // namespace

std::vector<Violation> check_sandwich(const ApiTrace& trace, double tol) {
    std::vector<Violation> out;
    for (const auto& row : trace.rows) {
        record(out, row.k, "l_k - eps_k <= J_{mu_{k+1}}", row.l - row.eps_realized,
               row.gain_exact, tol);
        record(out, row.k, "J_{mu_{k+1}} <= J*", row.gain_exact, trace.j_star, tol);
        record(out, row.k, "J* <= u_k", trace.j_star, row.u, tol);
    }
    return out;
}

std::vector<Violation> check_contraction(const ApiTrace& trace, double gamma, double tol) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0,1]");
    std::vector<Violation> out;
    for (std::size_t k = 1; k < trace.rows.size(); ++k) {
        const auto& prev = trace.rows[k - 1];
        const auto& cur = trace.rows[k];
        double lhs = trace.j_star - cur.l;
        double rhs = (1.0 - gamma) * (trace.j_star - prev.l) + prev.eps_realized +
                     2.0 * prev.delta_realized;
        record(out, cur.k, "(J*-l_k) <= (1-gamma)(J*-l_{k-1}) + eps_{k-1} + 2 delta_k", lhs, rhs,
               tol);
    }
    return out;
}

std::vector<Violation> check_gap_bound(const ApiTrace& trace, double tol) {
    std::vector<Violation> out;
    for (const auto& row : trace.rows)
        record(out, row.k, "J* - J_{mu_{k+1}} <= bound(k)", trace.j_star - row.gain_exact,
               row.bound, tol);
    return out;
}

std::vector<Violation> check_residual_span(const ApiTrace& trace, double tol) {
    std::vector<Violation> out;
    for (const auto& row : trace.rows) {
        double bound = prop311_bound(row.k + 1, trace.gamma, trace.injector.improvement_eps,
                                     trace.injector.evaluation_delta, trace.j_star, trace.l0);
        record(out, row.k, "u_k - l_k <= span_bound(k+1)", row.u - row.l, bound, tol);
    }
    return out;
}

std::vector<Violation> check_injector_budget(const ApiTrace& trace, double tol) {
    std::vector<Violation> out;
    for (const auto& row : trace.rows) {
        record(out, row.k, "realized improvement error <= eps budget", row.eps_realized,
               trace.injector.improvement_eps, tol);
        record(out, row.k, "realized evaluation error <= delta budget", row.delta_realized,
               trace.injector.evaluation_delta, tol);
    }
    return out;
}

// ---------------------------------------------------------------------------

DiscountedTrace run_discounted_api(const Mdp& mdp, const Vec& j0, double alpha,
                                   const ErrorInjector& injector, int iterations) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("discount factor must lie in [0,1)");
    if (j0.size() != mdp.n_states()) throw StructuralError("j0 length mismatch");
    const int n = mdp.n_states(), m = mdp.n_actions();

    // value-iteration oracle for J*_alpha
    Vec j_star = Vec::Zero(n);
    for (int it = 0; it < 1000000; ++it) {
        Vec next(n);
        for (int s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < m; ++a)
                best = std::max(best, mdp.r(s, a) + alpha * mdp.action_kernel(a).row(s).dot(j_star));
            next(s) = best;
        }
        double diff = (next - j_star).cwiseAbs().maxCoeff();
        j_star = std::move(next);
        if (diff * alpha / std::max(1.0 - alpha, 1e-12) < 1e-10) break;
    }

    DiscountedTrace trace;
    trace.alpha = alpha;
    trace.injector = injector;
    trace.j_star_alpha = j_star;
    trace.bound = (injector.improvement_eps + 2.0 * alpha * injector.evaluation_delta) /
                  ((1.0 - alpha) * (1.0 - alpha));
    trace.rescaled_bound = (injector.improvement_eps + 2.0 * alpha * injector.evaluation_delta) /
                           (1.0 - alpha);

    CounterRng rng = CounterRng(injector.seed).stream("injector");
    Vec j = j0;
    for (int k = 0; k < iterations; ++k) {
        Mat q_sa(n, m);
        for (int a = 0; a < m; ++a)
            q_sa.col(a) = mdp.reward().col(a) + alpha * (mdp.action_kernel(a) * j);
        std::vector<int> greedy(static_cast<std::size_t>(n));
        for (int s = 0; s < n; ++s) {
            int best = 0;
            for (int a = 1; a < m; ++a)
                if (q_sa(s, a) > q_sa(s, best)) best = a;
            greedy[static_cast<std::size_t>(s)] = best;
        }
        auto pick = pick_within_budget(q_sa, greedy, injector.mode, injector.improvement_eps,
                                       &rng);
        StochasticPolicy mu = StochasticPolicy::deterministic(pick.actions, m);

        auto pk = policy_kernel(mdp, mu);
        Mat system = Mat::Identity(n, n) - alpha * pk.kernel;
        Vec j_mu = system.partialPivLu().solve(pk.reward_vec);

        // reuse the average-reward noise pattern: argmin of the optimality residual
        Vec residual(n);
        for (int s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < m; ++a)
                best = std::max(best, mdp.r(s, a) + alpha * mdp.action_kernel(a).row(s).dot(j_mu));
            residual(s) = best - j_mu(s);
        }
        Vec noise = evaluation_noise(residual, injector.mode, injector.evaluation_delta, &rng);

        DiscountedRow row;
        row.k = k;
        row.policy = pick.actions;
        row.error_inf = (j_mu - j_star).cwiseAbs().maxCoeff();
        row.eps_realized = pick.realized_eps;
        row.delta_realized = noise.cwiseAbs().maxCoeff();
        trace.rows.push_back(std::move(row));

        j = j_mu + noise;
    }

    // limsup proxy: worst error over the trailing quarter of the run
    std::size_t tail = std::max<std::size_t>(1, trace.rows.size() / 4);
    double worst = 0.0;
    for (std::size_t i = trace.rows.size() - tail; i < trace.rows.size(); ++i)
        worst = std::max(worst, trace.rows[i].error_inf);
    trace.final_rescaled_error = (1.0 - alpha) * worst;
    return trace;
}

}  // namespace avgrl
