#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avgrl/mdp.hpp"
#include "avgrl/rng.hpp"

namespace avgrl {

/// Linear features over state-action pairs: phi is (|S||A|) x d in sa_index
/// row order.  Every row must have Euclidean norm <= 1 and the columns must
/// be linearly independent.
class FeatureMap {
  public:
    FeatureMap(Mat phi, int n_states, int n_actions);

    static FeatureMap tabular(int n_states, int n_actions);

    const Mat& phi() const { return phi_; }
    int d() const { return static_cast<int>(phi_.cols()); }
    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    Vec row(int sa) const { return phi_.row(sa).transpose(); }

    /// Coefficient vector theta_e with phi theta_e = 1, when the all-ones
    /// vector lies in the span of the features.
    const std::optional<Vec>& ones_coefficients() const { return theta_e_; }

  private:
    Mat phi_;
    int n_states_, n_actions_;
    std::optional<Vec> theta_e_;
};

struct TdConfig {
    double lambda = 0.5;   // eligibility decay, in [0,1)
    double c1 = 1.0;       // step size numerator
    double c2 = 10.0;      // step size shift: beta_t = c1/(t + c2)
    double c_alpha = 1.0;  // gain-estimate step scale
};

struct TdState {
    Vec theta;
    double avg_reward_estimate = 0.0;
    Vec trace;  // eligibility vector z_t
    long step = 0;
    TdConfig config;
};

struct Sample {
    int s;
    int a;
    double r;
};

/// Markov-chain rollout of (state, action, reward) triples.  When
/// schweitzer_kappa is set the rollout models the lazified chain from
/// original-system samples: each emitted sample has its reward scaled by
/// (1-kappa) and is duplicated once with probability kappa before the chain
/// advances.
std::vector<Sample> sample_trajectory(const Mdp& mdp, const StochasticPolicy& policy, long length,
                                      CounterRng& rng,
                                      std::optional<double> schweitzer_kappa = {});

/// TD(lambda) over one trajectory.  Per transition:
///   z_t     = lambda z_{t-1} + phi(s_t,a_t)
///   d_t     = r_t - J_t + phi(s_{t+1},a_{t+1})^T theta_t - phi(s_t,a_t)^T theta_t
///   J_{t+1} = J_t + c_alpha beta_t (r_t - J_t)
///   theta_{t+1} = theta_t + beta_t d_t z_t,  beta_t = c1/(t + c2).
/// The final theta is re-anchored so phi(anchor)^T theta = 0 whenever the
/// all-ones vector lies in the feature span.
TdState td_lambda_run(const std::vector<Sample>& trajectory, const FeatureMap& features,
                      const TdConfig& config, int anchor_sa);

/// Conditioning constant of the projected TD(lambda) equation: the smallest
/// value of theta^T Phi^T D (I - K^lambda) Phi theta over unit theta
/// orthogonal to the all-ones coefficient direction, where
/// K^lambda = (1-lambda) sum_m lambda^m K^{m+1} (series truncated at tail
/// weight 1e-12).  A result below -1e-10 indicates a feature/mixing
/// pathology and is reported via the `healthy` flag rather than a throw.
struct TdConditioning {
    double delta;
    bool healthy;
};
TdConditioning td_conditioning(const FeatureMap& features, const Mat& kernel_sa,
                               const Vec& stationary_sa, double lambda);

/// Projected fixed point theta* of the TD(lambda) equation for one policy
/// (used for the function-approximation error split; exact on desk scale).
Vec td_projected_fixed_point(const Mdp& mdp, const StochasticPolicy& policy,
                             const FeatureMap& features, double lambda, int anchor_sa);

// ---------------------------------------------------------------------------
// Policy improvement rules.

struct PolicyUpdateRule {
    enum class Kind { greedy, softmax, mirror_descent };
    Kind kind;
    double beta;

    static const char* kind_name(Kind k);
    static Kind kind_from_name(const std::string& name);
};

/// Puts 1/(beta |A|) on every action and the leftover 1 - 1/beta on the
/// argmax of q per state (ties -> lowest index).  Requires beta >= 1.
StochasticPolicy greedy_update(const Vec& q, int n_actions, double beta);

/// Row-wise softmax of beta*q with max-subtraction.
StochasticPolicy softmax_update(const Vec& q, int n_actions, double beta);

/// Exponentiated update mu'(a|s) proportional to mu(a|s) exp(beta q(s,a)).
/// Requires the previous policy to be strictly positive everywhere.
StochasticPolicy mirror_descent_update(const StochasticPolicy& prev_policy, const Vec& q,
                                       double beta);

/// Provable per-update cap on ||T^Q q - T^Q_{mu'} q||_inf for each rule:
/// greedy   2 max|q| / beta,
/// softmax  log|A| / beta,
/// mirror   (1/beta) log(1 / min_s prev(argmax_a q(s,a) | s)).
double improvement_error_cap(PolicyUpdateRule::Kind kind, const Vec& q, int n_actions,
                             double beta, const StochasticPolicy* prev_policy = nullptr);

// ---------------------------------------------------------------------------
// Generic policy-based loop.

struct RlRow {
    int k;
    Mat policy_next;            // mu_{k+1}
    Vec q;                      // estimate Q_k
    Vec q_exact;                // Q_{mu_k} (anchored)
    double j_next_exact;        // J_{mu_{k+1}}
    double j_cur_exact;         // J_{mu_k}
    double delta_realized;      // ||Q_k - Q_{mu_k}||_inf
    double eps_realized;        // ||T^Q Q_k - T^Q_{mu_{k+1}} Q_k||_inf
    double cap;                 // rule cap for this update (provable form)
    double cap_optimal_action;  // a*-based diagnostic cap (mirror only; else NaN)
    double u, l;                // extremes of T^Q Q_k - Q_k
    double reward_sum;          // rewards collected by the trajectory this iteration
    long steps;                 // emitted samples this iteration
};

struct RlTrace {
    std::vector<RlRow> rows;
    // metadata
    double gamma_visited = 0.0;  // min invariant-distribution entry over visited policies
    double j_star = 0.0;
    double c0 = 0.0;  // J* - l_0
    int anchor_sa = 0;
    long tau = 0;
    PolicyUpdateRule rule{PolicyUpdateRule::Kind::softmax, 1.0};
    TdConfig td;
    std::string feature_kind;  // "tabular" or a file path
    double omega_argmax = 1.0;   // min over run of mu_k(argmax_a Q_k(s,a) | s)
    double omega_optimal = 1.0;  // min over run of mu_k(a*(s) | s), a* by enumeration
    std::uint64_t seed = 0;
    double delta0_bar = 0.0;  // max function-approximation error across iterations
};

/// Alternates a policy-improvement rule applied to Q_k with TD(lambda)
/// evaluation over a fresh length-tau trajectory under the improved policy.
/// Exact-oracle columns are filled via direct solves on desk-scale
/// instances.
RlTrace run_policy_based(const Mdp& mdp, const PolicyUpdateRule& rule, const FeatureMap& features,
                         const TdConfig& td, long tau, int iterations, std::uint64_t seed,
                         int anchor_sa = 0);

struct RlViolation {
    int k;
    std::string inequality;
    double slack;
};

struct Prop42Report {
    double lhs;             // J* - J_{mu_{T+1}}
    double rhs_unrolled;    // derivation-faithful bound with realized errors
    double rhs_main_text;   // display form (assumes eps_0 = 0)
    bool pass;              // lhs <= rhs_unrolled + tol
    std::vector<RlViolation> violations;  // per-row one-step checks and cap checks
};

/// End-to-end certificate: the unrolled per-iteration error decomposition on
/// J* - J_{mu_{T+1}}, the row-wise one-step contraction
/// (J*-l_k) <= (1-gamma)(J*-l_{k-1}) + eps_{k-1} + 2 delta_k, the row-wise
/// sandwich, and the rule caps; all with realized per-iteration errors.
Prop42Report proposition42_certificate(const RlTrace& trace, double gamma, double tol = 1e-9);

}  // namespace avgrl
