#include "avgrl/rl.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "avgrl/bellman.hpp"

namespace avgrl {

FeatureMap::FeatureMap(Mat phi, int n_states, int n_actions)
    : phi_(std::move(phi)), n_states_(n_states), n_actions_(n_actions) {
    if (phi_.rows() != static_cast<Eigen::Index>(n_states) * n_actions)
        throw StructuralError("feature matrix must have |S||A| rows");
    if (phi_.cols() < 1) throw StructuralError("feature matrix needs at least one column");
    for (Eigen::Index i = 0; i < phi_.rows(); ++i)
        if (phi_.row(i).norm() > 1.0 + 1e-12) {
            std::ostringstream os;
            os << "feature row " << i << " has norm " << phi_.row(i).norm() << " > 1";
            throw StructuralError(os.str());
        }
    Eigen::ColPivHouseholderQR<Mat> qr(phi_);
    if (qr.rank() < phi_.cols())
        throw StructuralError("feature columns are linearly dependent");
    Vec ones = Vec::Ones(phi_.rows());
    Vec candidate = qr.solve(ones);
    if ((phi_ * candidate - ones).cwiseAbs().maxCoeff() < 1e-8) theta_e_ = candidate;
}

FeatureMap FeatureMap::tabular(int n_states, int n_actions) {
    return FeatureMap(Mat::Identity(n_states * n_actions, n_states * n_actions), n_states,
                      n_actions);
}

std::vector<Sample> sample_trajectory(const Mdp& mdp, const StochasticPolicy& policy, long length,
                                      CounterRng& rng, std::optional<double> schweitzer_kappa) {
    if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
        throw StructuralError("policy shape does not match mdp");
    if (schweitzer_kappa && !(*schweitzer_kappa > 0.0 && *schweitzer_kappa < 1.0))
        throw DomainError("schweitzer kappa must lie in (0,1)");
    const int n = mdp.n_states(), m = mdp.n_actions();
    const double reward_scale = schweitzer_kappa ? 1.0 - *schweitzer_kappa : 1.0;

    auto pick = [&](auto row_prob, int count) {
        double u = rng.next_double();
        double cum = 0.0;
        for (int i = 0; i < count; ++i) {
            cum += row_prob(i);
            if (u < cum) return i;
        }
        return count - 1;
    };

    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(length));
    int s = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    while (static_cast<long>(out.size()) < length) {
        int a = pick([&](int i) { return policy.prob(s, i); }, m);
        out.push_back({s, a, reward_scale * mdp.r(s, a)});
        if (schweitzer_kappa && static_cast<long>(out.size()) < length &&
            rng.next_double() < *schweitzer_kappa)
            out.push_back(out.back());
        s = pick([&](int i) { return mdp.p(s, a, i); }, n);
    }
    return out;
}

TdState td_lambda_run(const std::vector<Sample>& trajectory, const FeatureMap& features,
                      const TdConfig& config, int anchor_sa) {
    if (trajectory.size() < 2) throw StructuralError("td run needs at least two samples");
    if (!(config.lambda >= 0.0 && config.lambda < 1.0))
        throw DomainError("lambda must lie in [0,1)");
    const int d = features.d(), m = features.n_actions();

    TdState state;
    state.config = config;
    state.theta = Vec::Zero(d);
    state.trace = Vec::Zero(d);
    state.avg_reward_estimate = 0.0;

    for (std::size_t t = 0; t + 1 < trajectory.size(); ++t) {
        const Sample& cur = trajectory[t];
        const Sample& next = trajectory[t + 1];
        Vec phi_t = features.row(sa_index(cur.s, cur.a, m));
        Vec phi_next = features.row(sa_index(next.s, next.a, m));
        state.trace = config.lambda * state.trace + phi_t;
        double td_error = cur.r - state.avg_reward_estimate + phi_next.dot(state.theta) -
                          phi_t.dot(state.theta);
        if (!std::isfinite(td_error))
            throw NumericalError("td update diverged", static_cast<long>(t));
        double beta_t = config.c1 / (static_cast<double>(t) + config.c2);
        state.avg_reward_estimate +=
            config.c_alpha * beta_t * (cur.r - state.avg_reward_estimate);
        state.theta += beta_t * td_error * state.trace;
        ++state.step;
    }
    if (!state.theta.allFinite())
        throw NumericalError("td parameters diverged", state.step);

    if (features.ones_coefficients()) {
        double at_anchor = features.row(anchor_sa).dot(state.theta);
        state.theta -= at_anchor * (*features.ones_coefficients());
    }
    return state;
}

namespace {

// K^lambda = (1-lambda) sum_m lambda^m K^{m+1}, truncated at tail weight 1e-12.
Mat lambda_weighted_kernel(const Mat& kernel, double lambda) {
    if (lambda == 0.0) return kernel;
    Mat acc = (1.0 - lambda) * kernel;
    Mat power = kernel;
    double weight = 1.0 - lambda;
    for (int m = 1; weight * lambda / (1.0 - lambda) > 1e-12 || m < 2; ++m) {
        power = power * kernel;
        weight *= lambda;
        acc += weight * power;
        if (m > 10000) break;
    }
    return acc;
}

}  // namespace

TdConditioning td_conditioning(const FeatureMap& features, const Mat& kernel_sa,
                               const Vec& stationary_sa, double lambda) {
    if (kernel_sa.rows() != features.phi().rows())
        throw StructuralError("kernel size does not match features");
    if (!(lambda >= 0.0 && lambda < 1.0)) throw DomainError("lambda must lie in [0,1)");
    Mat klambda = lambda_weighted_kernel(kernel_sa, lambda);
    Mat a = features.phi().transpose() * stationary_sa.asDiagonal() *
            (Mat::Identity(kernel_sa.rows(), kernel_sa.cols()) - klambda) * features.phi();
    Mat sym = 0.5 * (a + a.transpose());

    double delta;
    if (features.ones_coefficients()) {
        // restrict to the orthogonal complement of the all-ones direction
        const Vec& theta_e = *features.ones_coefficients();
        Eigen::HouseholderQR<Mat> qr(theta_e);
        Mat q = qr.householderQ();
        Mat basis = q.rightCols(q.cols() - 1);
        Eigen::SelfAdjointEigenSolver<Mat> eig(basis.transpose() * sym * basis);
        delta = eig.eigenvalues().minCoeff();
    } else {
        Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
        delta = eig.eigenvalues().minCoeff();
    }
    return {delta, delta > -1e-10};
}

Vec td_projected_fixed_point(const Mdp& mdp, const StochasticPolicy& policy,
                             const FeatureMap& features, double lambda, int anchor_sa) {
    auto sak = state_action_kernel(mdp, policy);
    Vec pi = stationary_distribution(sak.kernel, mdp.tol());
    double gain = pi.dot(sak.reward_vec);

    // r_lambda = sum_j lambda^j K^j (r - J 1)
    Vec centered = sak.reward_vec.array() - gain;
    Vec r_lambda = centered;
    Vec term = centered;
    for (int j = 1; j < 20000; ++j) {
        term = lambda * (sak.kernel * term);
        r_lambda += term;
        if (term.cwiseAbs().maxCoeff() < 1e-14) break;
        if (lambda == 0.0) break;
    }
    Mat klambda = lambda_weighted_kernel(sak.kernel, lambda);
    Mat a = features.phi().transpose() * pi.asDiagonal() *
            (Mat::Identity(sak.kernel.rows(), sak.kernel.cols()) - klambda) * features.phi();
    Vec b = features.phi().transpose() * pi.asDiagonal() * r_lambda;
    Vec theta = a.completeOrthogonalDecomposition().solve(b);
    if (features.ones_coefficients()) {
        double at_anchor = features.row(anchor_sa).dot(theta);
        theta -= at_anchor * (*features.ones_coefficients());
    }
    return theta;
}

// ---------------------------------------------------------------------------

const char* PolicyUpdateRule::kind_name(Kind k) {
    switch (k) {
        case Kind::greedy: return "greedy";
        case Kind::softmax: return "softmax";
        default: return "mirror";
    }
}

PolicyUpdateRule::Kind PolicyUpdateRule::kind_from_name(const std::string& name) {
    if (name == "greedy") return Kind::greedy;
    if (name == "softmax") return Kind::softmax;
    if (name == "mirror") return Kind::mirror_descent;
    throw StructuralError("unknown policy update rule '" + name + "'");
}

namespace {

int infer_states(const Vec& q, int n_actions) {
    if (n_actions < 1 || q.size() % n_actions != 0)
        throw StructuralError("q length is not a multiple of the action count");
    return static_cast<int>(q.size()) / n_actions;
}

int argmax_action(const Vec& q, int s, int m) {
    int best_a = 0;
    double best = q(sa_index(s, 0, m));
    for (int a = 1; a < m; ++a)
        if (q(sa_index(s, a, m)) > best) {
            best = q(sa_index(s, a, m));
            best_a = a;
        }
    return best_a;
}

}  // namespace

StochasticPolicy greedy_update(const Vec& q, int n_actions, double beta) {
    if (beta < 1.0) throw DomainError("greedy update requires beta >= 1");
    const int n = infer_states(q, n_actions);
    Mat probs = Mat::Constant(n, n_actions, 1.0 / (beta * n_actions));
    for (int s = 0; s < n; ++s)
        probs(s, argmax_action(q, s, n_actions)) += 1.0 - 1.0 / beta;
    return StochasticPolicy(std::move(probs));
}

StochasticPolicy softmax_update(const Vec& q, int n_actions, double beta) {
    if (!(beta > 0.0)) throw DomainError("softmax update requires beta > 0");
    const int n = infer_states(q, n_actions);
    Mat probs(n, n_actions);
    for (int s = 0; s < n; ++s) {
        double top = q(sa_index(s, argmax_action(q, s, n_actions), n_actions));
        double z = 0.0;
        for (int a = 0; a < n_actions; ++a) {
            double w = std::exp(beta * (q(sa_index(s, a, n_actions)) - top));
            probs(s, a) = w;
            z += w;
        }
        probs.row(s) /= z;
    }
    return StochasticPolicy(std::move(probs));
}

StochasticPolicy mirror_descent_update(const StochasticPolicy& prev_policy, const Vec& q,
                                       double beta) {
    if (!(beta >= 0.0)) throw DomainError("mirror descent update requires beta >= 0");
    const int m = prev_policy.n_actions();
    const int n = infer_states(q, m);
    if (n != prev_policy.n_states()) throw StructuralError("policy/q shape mismatch");
    if (prev_policy.probs().minCoeff() <= 0.0)
        throw DomainError("mirror descent requires a strictly positive previous policy");
    Mat probs(n, m);
    for (int s = 0; s < n; ++s) {
        // weights in log space with max-subtraction
        double top = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < m; ++a)
            top = std::max(top, std::log(prev_policy.prob(s, a)) + beta * q(sa_index(s, a, m)));
        double z = 0.0;
        for (int a = 0; a < m; ++a) {
            double w = std::exp(std::log(prev_policy.prob(s, a)) + beta * q(sa_index(s, a, m)) -
                                top);
            probs(s, a) = w;
            z += w;
        }
        if (!(z > 0.0) || !std::isfinite(z))
            throw NumericalError("mirror descent row mass vanished", s);
        probs.row(s) /= z;
    }
    return StochasticPolicy(std::move(probs));
}

double improvement_error_cap(PolicyUpdateRule::Kind kind, const Vec& q, int n_actions,
                             double beta, const StochasticPolicy* prev_policy) {
    switch (kind) {
        case PolicyUpdateRule::Kind::greedy:
            return 2.0 * q.cwiseAbs().maxCoeff() / beta;
        case PolicyUpdateRule::Kind::softmax:
            return std::log(static_cast<double>(n_actions)) / beta;
        default: {
            if (prev_policy == nullptr)
                throw StructuralError("mirror cap needs the previous policy");
            const int n = infer_states(q, n_actions);
            double min_mass = 1.0;
            for (int s = 0; s < n; ++s)
                min_mass = std::min(min_mass,
                                    prev_policy->prob(s, argmax_action(q, s, n_actions)));
            return std::log(1.0 / min_mass) / beta;
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

// Exact (J_mu, Q_mu) through the state-space solve: Q = r - J 1 + P h, then
// re-anchored.  Needs only state-chain irreducibility, so it stays valid for
// concentrated policies whose low-probability entries underflow to zero.
EvaluationResult evaluate_q_via_h(const Mdp& mdp, const StochasticPolicy& policy,
                                  int anchor_sa) {
    EvaluationResult h_eval = solve_bellman(mdp, policy, 0);
    const int n = mdp.n_states(), m = mdp.n_actions();
    Vec q(n * m);
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < m; ++a)
            q(sa_index(s, a, m)) =
                mdp.r(s, a) - h_eval.gain + mdp.action_kernel(a).row(s).dot(h_eval.bias);
    q.array() -= q(anchor_sa);
    // invariant distribution of the state-action chain: pi(s) mu(a|s)
    Vec pi_sa(n * m);
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < m; ++a)
            pi_sa(sa_index(s, a, m)) = h_eval.stationary(s) * policy.prob(s, a);
    return {h_eval.gain, std::move(q), std::move(pi_sa), anchor_sa};
}

}  // namespace

RlTrace run_policy_based(const Mdp& mdp, const PolicyUpdateRule& rule, const FeatureMap& features,
                         const TdConfig& td, long tau, int iterations, std::uint64_t seed,
                         int anchor_sa) {
    if (features.n_states() != mdp.n_states() || features.n_actions() != mdp.n_actions())
        throw StructuralError("feature shape does not match mdp");
    if (tau < 2) throw DomainError("tau must be at least 2");
    if (iterations < 0) throw DomainError("iteration count must be non-negative");
    assert_chain_assumptions(mdp);
    const int m = mdp.n_actions();

    RlTrace trace;
    trace.anchor_sa = anchor_sa;
    trace.tau = tau;
    trace.rule = rule;
    trace.td = td;
    trace.seed = seed;

    auto enumeration = optimal_gain_enumeration(mdp);
    trace.j_star = enumeration.j_star;
    std::vector<int> a_star = enumeration.argmax.actions();

    CounterRng root(seed);
    CounterRng trajectory_root = root.stream("trajectory");

    std::vector<StochasticPolicy> visited;
    StochasticPolicy mu = StochasticPolicy::uniform(mdp.n_states(), m);
    visited.push_back(mu);

    Vec q = Vec::Zero(mdp.n_states() * m);
    EvaluationResult q_eval = evaluate_q_via_h(mdp, mu, anchor_sa);

    trace.c0 = trace.j_star - gap_stats_q(mdp, q).l;
    trace.omega_argmax = 1.0;
    trace.omega_optimal = 1.0;
    trace.delta0_bar = 0.0;

    auto min_mass_at = [&](const StochasticPolicy& pol, const std::vector<int>& actions) {
        double lo = 1.0;
        for (int s = 0; s < mdp.n_states(); ++s)
            lo = std::min(lo, pol.prob(s, actions[static_cast<std::size_t>(s)]));
        return lo;
    };
    trace.omega_optimal = std::min(trace.omega_optimal, min_mass_at(mu, a_star));

    for (int k = 0; k <= iterations; ++k) {
        std::vector<int> q_argmax(static_cast<std::size_t>(mdp.n_states()));
        for (int s = 0; s < mdp.n_states(); ++s)
            q_argmax[static_cast<std::size_t>(s)] = argmax_action(q, s, m);
        trace.omega_argmax = std::min(trace.omega_argmax, min_mass_at(mu, q_argmax));

        double cap = improvement_error_cap(rule.kind, q, m, rule.beta, &mu);
        StochasticPolicy mu_next = [&] {
            switch (rule.kind) {
                case PolicyUpdateRule::Kind::greedy: return greedy_update(q, m, rule.beta);
                case PolicyUpdateRule::Kind::softmax: return softmax_update(q, m, rule.beta);
                default: return mirror_descent_update(mu, q, rule.beta);
            }
        }();
        visited.push_back(mu_next);
        trace.omega_optimal = std::min(trace.omega_optimal, min_mass_at(mu_next, a_star));

        RlRow row;
        row.k = k;
        row.policy_next = mu_next.probs();
        row.q = q;
        row.q_exact = q_eval.bias;
        row.j_cur_exact = q_eval.gain;
        row.delta_realized = (q - q_eval.bias).cwiseAbs().maxCoeff();
        row.eps_realized = (apply_optimal_op_q(mdp, q).value -
                            apply_policy_op_q(mdp, mu_next, q))
                               .cwiseAbs()
                               .maxCoeff();
        row.cap = cap;
        row.cap_optimal_action =
            rule.kind == PolicyUpdateRule::Kind::mirror_descent
                ? std::log(1.0 / min_mass_at(mu_next, a_star)) / rule.beta
                : std::numeric_limits<double>::quiet_NaN();
        auto stats = gap_stats_q(mdp, q);
        row.u = stats.u;
        row.l = stats.l;

        EvaluationResult next_eval = evaluate_q_via_h(mdp, mu_next, anchor_sa);
        row.j_next_exact = next_eval.gain;
        row.reward_sum = 0.0;
        row.steps = 0;

        if (k < iterations) {
            CounterRng traj_rng = trajectory_root.substream(static_cast<std::uint64_t>(k));
            auto trajectory = sample_trajectory(mdp, mu_next, tau, traj_rng);
            for (const auto& sample : trajectory) row.reward_sum += sample.r;
            row.steps = static_cast<long>(trajectory.size());

            TdState td_state = td_lambda_run(trajectory, features, td, anchor_sa);
            q = features.phi() * td_state.theta;

            if (features.d() == mdp.n_states() * m) {
                // full-rank square features span everything: no approximation floor
            } else {
                Vec theta_star =
                    td_projected_fixed_point(mdp, mu_next, features, td.lambda, anchor_sa);
                trace.delta0_bar =
                    std::max(trace.delta0_bar, (features.phi() * theta_star - next_eval.bias)
                                                   .cwiseAbs()
                                                   .maxCoeff());
            }
        }
        trace.rows.push_back(std::move(row));
        mu = std::move(mu_next);
        q_eval = std::move(next_eval);
    }

    trace.gamma_visited = gamma_lower_bound_sa(mdp, visited);
    return trace;
}

Prop42Report proposition42_certificate(const RlTrace& trace, double gamma, double tol) {
    // gamma = 0 is the honest value when concentrated policies drive the
    // smallest invariant-distribution entry below double precision; every
    // inequality below remains valid in that limit
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in [0,1]");
    if (trace.rows.empty()) throw PreconditionError("trace has no rows");
    for (const auto& row : trace.rows)
        if (row.q_exact.size() == 0)
            throw PreconditionError("trace lacks exact-oracle columns");

    const std::size_t t_final = trace.rows.size() - 1;
    const double j_star = trace.j_star;
    const double l0 = trace.rows[0].l;

    Prop42Report report;
    report.lhs = j_star - trace.rows[t_final].j_next_exact;

    // unrolled recursion a_k <= (1-gamma) a_{k-1} + eps_k + gamma eps_{k-1} + 2 delta_k,
    // a_0 = J* - l_0 + eps_0
    double a = j_star - l0 + trace.rows[0].eps_realized;
    for (std::size_t j = 1; j <= t_final; ++j) {
        a = (1.0 - gamma) * a + trace.rows[j].eps_realized +
            gamma * trace.rows[j - 1].eps_realized + 2.0 * trace.rows[j].delta_realized;
    }
    report.rhs_unrolled = a;

    // display form (assumes the first improvement error is zero)
    double rhs = std::pow(1.0 - gamma, static_cast<double>(t_final)) * (j_star - l0);
    rhs += trace.rows[t_final].eps_realized;
    for (std::size_t l = 1; l + 1 <= t_final; ++l)
        rhs += std::pow(1.0 - gamma, static_cast<double>(l - 1)) *
               trace.rows[t_final - l].eps_realized;
    for (std::size_t l = 0; l < t_final; ++l)
        rhs += 2.0 * std::pow(1.0 - gamma, static_cast<double>(l)) *
               trace.rows[t_final - l].delta_realized;
    report.rhs_main_text = rhs;

    auto flag = [&](int k, const std::string& name, double lhs, double bound) {
        if (lhs > bound + tol) report.violations.push_back({k, name, lhs - bound});
    };
    for (std::size_t k = 0; k < trace.rows.size(); ++k) {
        const auto& row = trace.rows[k];
        flag(row.k, "l_k - eps_k <= J_{mu_{k+1}}", row.l - row.eps_realized, row.j_next_exact);
        flag(row.k, "J_{mu_{k+1}} <= J*", row.j_next_exact, j_star);
        flag(row.k, "J* <= u_k", j_star, row.u);
        flag(row.k, "eps_k <= cap_k", row.eps_realized, row.cap);
        if (k >= 1) {
            const auto& prev = trace.rows[k - 1];
            flag(row.k, "(J*-l_k) <= (1-gamma)(J*-l_{k-1}) + eps_{k-1} + 2 delta_k",
                 j_star - row.l,
                 (1.0 - gamma) * (j_star - prev.l) + prev.eps_realized +
                     2.0 * row.delta_realized);
        }
    }
    report.pass = report.violations.empty() && report.lhs <= report.rhs_unrolled + tol;
    return report;
}

}  // namespace avgrl
