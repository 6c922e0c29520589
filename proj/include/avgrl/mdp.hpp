#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "avgrl/errors.hpp"

namespace avgrl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Numerical tolerances used by validation and solver residual checks.
/// Defaults are chosen so that double-precision direct solves pass with
/// margin on desk-scale instances.
struct Tolerances {
    double row_sum = 1e-12;     // kernel rows must sum to 1 within this
    double stationary = 1e-10;  // ||pi^T P - pi^T||_inf
    double bellman = 1e-9;      // ||J 1 + h - r - P h||_inf
};

/// Flat state-action index; fixed convention throughout the project.
inline int sa_index(int s, int a, int n_actions) { return s * n_actions + a; }

/// Finite tabular MDP.  transition[a] is the S x S matrix P(s'|s,a) with
/// rows indexed by s; reward is S x A.
class Mdp {
  public:
    Mdp(std::vector<Mat> transition, Mat reward, Tolerances tol = {});

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }

    double p(int s, int a, int s2) const { return transition_[a](s, s2); }
    const Mat& action_kernel(int a) const { return transition_[a]; }
    const std::vector<Mat>& transition() const { return transition_; }

    const Mat& reward() const { return reward_; }
    double r(int s, int a) const { return reward_(s, a); }
    double r_max() const { return r_max_; }

    /// Flattened reward vector over (s,a) in sa_index order.
    Vec reward_sa() const;

    const Tolerances& tol() const { return tol_; }

  private:
    int n_states_, n_actions_;
    std::vector<Mat> transition_;
    Mat reward_;
    double r_max_;
    Tolerances tol_;
};

/// Per-state distribution over actions, probs(s, a) = mu(a|s).
class StochasticPolicy {
  public:
    explicit StochasticPolicy(Mat probs, double row_sum_tol = 1e-12);

    static StochasticPolicy uniform(int n_states, int n_actions);
    static StochasticPolicy deterministic(const std::vector<int>& actions, int n_actions);

    int n_states() const { return static_cast<int>(probs_.rows()); }
    int n_actions() const { return static_cast<int>(probs_.cols()); }
    double prob(int s, int a) const { return probs_(s, a); }
    const Mat& probs() const { return probs_; }

    bool is_deterministic() const;
    /// Chosen action per state; requires is_deterministic().
    std::vector<int> actions() const;

  private:
    Mat probs_;
};

/// Policy-induced state chain: kernel(s, s') = P_mu(s'|s), reward_vec(s) = r_mu(s).
struct PolicyKernel {
    Mat kernel;
    Vec reward_vec;
};

/// Policy-induced state-action chain over sa_index pairs:
/// kernel(sa_index(s,a), sa_index(s',a')) = mu(a'|s') P(s'|s,a).
struct StateActionKernel {
    Mat kernel;
    Vec reward_vec;  // r(s,a) flattened
};

/// Solution of the average-reward Bellman equation for one policy:
/// gain J, bias anchored to 0 at `anchor`, stationary distribution of the
/// kernel the system was solved over (state or state-action space).
struct EvaluationResult {
    double gain;
    Vec bias;
    Vec stationary;
    int anchor;
};

struct IrreducibilityWitness {
    bool irreducible;
    int from = -1;  // when reducible: `to` is unreachable from `from`
    int to = -1;
};

PolicyKernel policy_kernel(const Mdp& mdp, const StochasticPolicy& policy);

StateActionKernel state_action_kernel(const Mdp& mdp, const StochasticPolicy& policy);

/// Strong connectivity of the directed graph of positive kernel entries.
IrreducibilityWitness irreducibility_check(const Mat& kernel);

/// Invariant distribution of an irreducible row-stochastic kernel, computed
/// by a direct linear solve of (K^T - I) pi = 0 with a normalization row, so
/// periodic chains are handled without any power iteration.
Vec stationary_distribution(const Mat& kernel, const Tolerances& tol = {});

double average_reward(const Mdp& mdp, const StochasticPolicy& policy);

/// Solves J 1 + h = r_mu + P_mu h with h(anchor) = 0 as one (n+1) x (n+1)
/// linear system.
EvaluationResult solve_bellman(const Mdp& mdp, const StochasticPolicy& policy, int anchor = 0);

/// Same contract over the |S||A| state-action kernel.
EvaluationResult solve_bellman_q(const Mdp& mdp, const StochasticPolicy& policy,
                                 int anchor_sa = 0);

/// min over the given policies of the minimum stationary-distribution entry
/// (state chains).
double gamma_lower_bound(const Mdp& mdp, const std::vector<StochasticPolicy>& policies);

/// Same over state-action chains (invariant distributions of the
/// state-action kernels).
double gamma_lower_bound_sa(const Mdp& mdp, const std::vector<StochasticPolicy>& policies);

/// All |A|^|S| deterministic policies (guarded; throws DomainError when the
/// count would exceed `limit`).
std::vector<StochasticPolicy> enumerate_deterministic_policies(int n_states, int n_actions,
                                                               long limit = 1L << 20);

/// Brute-force optimal gain over deterministic policies.
struct EnumerationResult {
    double j_star;
    StochasticPolicy argmax;
};
EnumerationResult optimal_gain_enumeration(const Mdp& mdp, long limit = 1L << 20);

/// Verifies the chain assumptions the iteration bounds rest on: every
/// transition diagonal positive, and (on enumerable instances) every
/// deterministic policy irreducible.  Throws PreconditionError naming the
/// violation.
void assert_chain_assumptions(const Mdp& mdp);

}  // namespace avgrl
