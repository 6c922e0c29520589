#include "avgrl/bellman.hpp"

#include <cmath>
#include <string>

namespace avgrl {

Vec apply_policy_op(const Mdp& mdp, const StochasticPolicy& policy, const Vec& h) {
    if (h.size() != mdp.n_states()) throw StructuralError("value vector length mismatch");
    auto pk = policy_kernel(mdp, policy);
    return pk.reward_vec + pk.kernel * h;
}

OptimalOpResult apply_optimal_op(const Mdp& mdp, const Vec& h) {
    if (h.size() != mdp.n_states()) throw StructuralError("value vector length mismatch");
    const int n = mdp.n_states(), m = mdp.n_actions();
    Vec value(n);
    std::vector<int> greedy(static_cast<std::size_t>(n), 0);
    for (int s = 0; s < n; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        int best_a = 0;
        for (int a = 0; a < m; ++a) {
            double v = mdp.r(s, a) + mdp.action_kernel(a).row(s).dot(h);
            if (v > best) {
                best = v;
                best_a = a;
            }
        }
        value(s) = best;
        greedy[static_cast<std::size_t>(s)] = best_a;
    }
    return {std::move(value), std::move(greedy)};
}

Vec apply_relative_op(const Mdp& mdp, const StochasticPolicy& policy, const Vec& h, int anchor) {
    Vec out = apply_policy_op(mdp, policy, h);
    out.array() -= out(anchor);
    return out;
}

namespace {

RviResult relative_iteration(const Mat& kernel, const Vec& reward_vec, const Vec& h0, int anchor,
                             double tol, int max_iters) {
    Vec h = h0;
    double residual = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= max_iters; ++it) {
        Vec next = reward_vec + kernel * h;
        next.array() -= next(anchor);
        residual = (next - h).cwiseAbs().maxCoeff();
        h = std::move(next);
        if (residual < tol) return {std::move(h), it};
    }
    throw ConvergenceError("relative value iteration did not converge within " +
                               std::to_string(max_iters) + " iterations",
                           residual);
}

}  // namespace

RviResult relative_value_iteration(const Mdp& mdp, const StochasticPolicy& policy, const Vec& h0,
                                   int anchor, double tol, int max_iters) {
    if (h0.size() != mdp.n_states()) throw StructuralError("value vector length mismatch");
    auto pk = policy_kernel(mdp, policy);
    return relative_iteration(pk.kernel, pk.reward_vec, h0, anchor, tol, max_iters);
}

Vec apply_policy_op_q(const Mdp& mdp, const StochasticPolicy& policy, const Vec& q) {
    if (q.size() != mdp.n_states() * mdp.n_actions())
        throw StructuralError("q vector length mismatch");
    auto sak = state_action_kernel(mdp, policy);
    return sak.reward_vec + sak.kernel * q;
}

OptimalOpQResult apply_optimal_op_q(const Mdp& mdp, const Vec& q) {
    const int n = mdp.n_states(), m = mdp.n_actions();
    if (q.size() != n * m) throw StructuralError("q vector length mismatch");
    // max over policies decouples per next state: sum_s' P(s'|s,a) max_a' q(s',a')
    Vec qmax(n);
    std::vector<int> greedy(static_cast<std::size_t>(n), 0);
    for (int s = 0; s < n; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        int best_a = 0;
        for (int a = 0; a < m; ++a) {
            double v = q(sa_index(s, a, m));
            if (v > best) {
                best = v;
                best_a = a;
            }
        }
        qmax(s) = best;
        greedy[static_cast<std::size_t>(s)] = best_a;
    }
    Vec value(n * m);
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < m; ++a)
            value(sa_index(s, a, m)) = mdp.r(s, a) + mdp.action_kernel(a).row(s).dot(qmax);
    return {std::move(value), std::move(greedy)};
}

Vec apply_relative_op_q(const Mdp& mdp, const StochasticPolicy& policy, const Vec& q,
                        int anchor_sa) {
    Vec out = apply_policy_op_q(mdp, policy, q);
    out.array() -= out(anchor_sa);
    return out;
}

RviResult relative_value_iteration_q(const Mdp& mdp, const StochasticPolicy& policy,
                                     const Vec& q0, int anchor_sa, double tol, int max_iters) {
    if (q0.size() != mdp.n_states() * mdp.n_actions())
        throw StructuralError("q vector length mismatch");
    auto sak = state_action_kernel(mdp, policy);
    return relative_iteration(sak.kernel, sak.reward_vec, q0, anchor_sa, tol, max_iters);
}

namespace {

GapStats residual_extremes(const Vec& residual) {
    GapStats g{};
    g.u = -std::numeric_limits<double>::infinity();
    g.l = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < residual.size(); ++i) {
        if (residual(i) > g.u) {
            g.u = residual(i);
            g.argmax_state = static_cast<int>(i);
        }
        if (residual(i) < g.l) {
            g.l = residual(i);
            g.argmin_state = static_cast<int>(i);
        }
    }
    return g;
}

}  // namespace

GapStats gap_stats(const Mdp& mdp, const Vec& h) {
    return residual_extremes(apply_optimal_op(mdp, h).value - h);
}

GapStats gap_stats_q(const Mdp& mdp, const Vec& q) {
    return residual_extremes(apply_optimal_op_q(mdp, q).value - q);
}

}  // namespace avgrl
