#pragma once

#include <vector>

#include "avgrl/mdp.hpp"

namespace avgrl {

/// r_mu + P_mu h.
Vec apply_policy_op(const Mdp& mdp, const StochasticPolicy& policy, const Vec& h);

/// Component-wise max over actions of r(s,a) + sum_s' P(s'|s,a) h(s'),
/// with the maximizing deterministic selector as witness (ties -> lowest
/// action index).
struct OptimalOpResult {
    Vec value;
    std::vector<int> greedy;
};
OptimalOpResult apply_optimal_op(const Mdp& mdp, const Vec& h);

/// Policy operator recentred so the anchor component is zero.
Vec apply_relative_op(const Mdp& mdp, const StochasticPolicy& policy, const Vec& h, int anchor);

/// Iterates the relative operator until the sup-norm step falls below tol.
struct RviResult {
    Vec bias;
    int iterations;
};
RviResult relative_value_iteration(const Mdp& mdp, const StochasticPolicy& policy, const Vec& h0,
                                   int anchor, double tol = 1e-10, int max_iters = 100000);

// Q-space mirrors of the operators above, over the flat sa_index layout.

Vec apply_policy_op_q(const Mdp& mdp, const StochasticPolicy& policy, const Vec& q);

struct OptimalOpQResult {
    Vec value;
    std::vector<int> greedy;  // greedy action per state (argmax_a' q(s',a'))
};
OptimalOpQResult apply_optimal_op_q(const Mdp& mdp, const Vec& q);

Vec apply_relative_op_q(const Mdp& mdp, const StochasticPolicy& policy, const Vec& q,
                        int anchor_sa);

RviResult relative_value_iteration_q(const Mdp& mdp, const StochasticPolicy& policy,
                                     const Vec& q0, int anchor_sa, double tol = 1e-10,
                                     int max_iters = 100000);

/// max / min components of the optimality-operator residual T h - h, with
/// arg witnesses.
struct GapStats {
    double u;
    double l;
    int argmax_state;
    int argmin_state;
};
GapStats gap_stats(const Mdp& mdp, const Vec& h);

/// Same over T^Q Q - Q (witness indices are flat sa indices).
GapStats gap_stats_q(const Mdp& mdp, const Vec& q);

}  // namespace avgrl
