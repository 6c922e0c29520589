#include "avgrl/mdp.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace avgrl {

namespace {

void require_stochastic_rows(const Mat& m, double tol, const std::string& what) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            double v = m(i, j);
            if (!(v >= 0.0)) {
                std::ostringstream os;
                os << what << " row " << i << " has negative entry " << v << " at column " << j;
                throw StructuralError(os.str());
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) {
            std::ostringstream os;
            os << what << " row " << i << " sums to " << sum << " (tolerance " << tol << ")";
            throw StructuralError(os.str());
        }
    }
}

}  // namespace

Mdp::Mdp(std::vector<Mat> transition, Mat reward, Tolerances tol)
    : transition_(std::move(transition)), reward_(std::move(reward)), tol_(tol) {
    if (transition_.empty()) throw StructuralError("mdp needs at least one action");
    n_actions_ = static_cast<int>(transition_.size());
    n_states_ = static_cast<int>(transition_[0].rows());
    if (n_states_ < 1) throw StructuralError("mdp needs at least one state");
    for (int a = 0; a < n_actions_; ++a) {
        if (transition_[a].rows() != n_states_ || transition_[a].cols() != n_states_) {
            std::ostringstream os;
            os << "transition slice for action " << a << " is " << transition_[a].rows() << "x"
               << transition_[a].cols() << ", expected " << n_states_ << "x" << n_states_;
            throw StructuralError(os.str());
        }
        require_stochastic_rows(transition_[a], tol_.row_sum,
                                "transition(action " + std::to_string(a) + ")");
    }
    if (reward_.rows() != n_states_ || reward_.cols() != n_actions_)
        throw StructuralError("reward table shape does not match state/action counts");
    if (!reward_.allFinite()) throw StructuralError("reward table has non-finite entries");
    r_max_ = reward_.cwiseAbs().maxCoeff();
}

Vec Mdp::reward_sa() const {
    Vec r(n_states_ * n_actions_);
    for (int s = 0; s < n_states_; ++s)
        for (int a = 0; a < n_actions_; ++a) r(sa_index(s, a, n_actions_)) = reward_(s, a);
    return r;
}

StochasticPolicy::StochasticPolicy(Mat probs, double row_sum_tol) : probs_(std::move(probs)) {
    if (probs_.rows() < 1 || probs_.cols() < 1)
        throw StructuralError("policy table must be non-empty");
    require_stochastic_rows(probs_, row_sum_tol, "policy");
}

StochasticPolicy StochasticPolicy::uniform(int n_states, int n_actions) {
    return StochasticPolicy(Mat::Constant(n_states, n_actions, 1.0 / n_actions));
}

StochasticPolicy StochasticPolicy::deterministic(const std::vector<int>& actions, int n_actions) {
    Mat probs = Mat::Zero(static_cast<Eigen::Index>(actions.size()), n_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] < 0 || actions[s] >= n_actions)
            throw StructuralError("deterministic policy action out of range");
        probs(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
    }
    return StochasticPolicy(std::move(probs));
}

bool StochasticPolicy::is_deterministic() const {
    for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
        int ones = 0;
        for (Eigen::Index a = 0; a < probs_.cols(); ++a) {
            if (probs_(s, a) == 1.0) ++ones;
            else if (probs_(s, a) != 0.0) return false;
        }
        if (ones != 1) return false;
    }
    return true;
}

std::vector<int> StochasticPolicy::actions() const {
    if (!is_deterministic()) throw DomainError("actions() requires a deterministic policy");
    std::vector<int> out(static_cast<std::size_t>(probs_.rows()));
    for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
        for (Eigen::Index a = 0; a < probs_.cols(); ++a)
            if (probs_(s, a) == 1.0) out[static_cast<std::size_t>(s)] = static_cast<int>(a);
    }
    return out;
}

PolicyKernel policy_kernel(const Mdp& mdp, const StochasticPolicy& policy) {
    if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
        throw StructuralError("policy shape does not match mdp");
    const int n = mdp.n_states(), m = mdp.n_actions();
    Mat kernel = Mat::Zero(n, n);
    Vec reward_vec = Vec::Zero(n);
    for (int a = 0; a < m; ++a) {
        kernel += policy.probs().col(a).asDiagonal() * mdp.action_kernel(a);
        reward_vec += policy.probs().col(a).cwiseProduct(mdp.reward().col(a));
    }
    return {std::move(kernel), std::move(reward_vec)};
}

StateActionKernel state_action_kernel(const Mdp& mdp, const StochasticPolicy& policy) {
    if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
        throw StructuralError("policy shape does not match mdp");
    const int n = mdp.n_states(), m = mdp.n_actions();
    Mat kernel = Mat::Zero(n * m, n * m);
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < m; ++a)
            for (int s2 = 0; s2 < n; ++s2)
                for (int a2 = 0; a2 < m; ++a2)
                    kernel(sa_index(s, a, m), sa_index(s2, a2, m)) =
                        policy.prob(s2, a2) * mdp.p(s, a, s2);
    return {std::move(kernel), mdp.reward_sa()};
}

IrreducibilityWitness irreducibility_check(const Mat& kernel) {
    const int n = static_cast<int>(kernel.rows());
    auto bfs = [&](bool transpose) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<int> stack = {0};
        seen[0] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w = 0; w < n; ++w) {
                double edge = transpose ? kernel(w, v) : kernel(v, w);
                if (edge > 0.0 && !seen[static_cast<std::size_t>(w)]) {
                    seen[static_cast<std::size_t>(w)] = 1;
                    stack.push_back(w);
                }
            }
        }
        return seen;
    };
    auto fwd = bfs(false);
    for (int j = 0; j < n; ++j)
        if (!fwd[static_cast<std::size_t>(j)]) return {false, 0, j};  // j unreachable from 0
    auto bwd = bfs(true);
    for (int i = 0; i < n; ++i)
        if (!bwd[static_cast<std::size_t>(i)]) return {false, i, 0};  // 0 unreachable from i
    return {true, -1, -1};
}

Vec stationary_distribution(const Mat& kernel, const Tolerances& tol) {
    const int n = static_cast<int>(kernel.rows());
    auto witness = irreducibility_check(kernel);
    if (!witness.irreducible) {
        std::ostringstream os;
        os << "kernel is reducible: state " << witness.to << " is unreachable from state "
           << witness.from;
        throw DomainError(os.str());
    }
    // (K^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    Mat system = kernel.transpose() - Mat::Identity(n, n);
    system.row(n - 1).setOnes();
    Vec rhs = Vec::Zero(n);
    rhs(n - 1) = 1.0;
    Vec pi = system.partialPivLu().solve(rhs);
    double residual = ((pi.transpose() * kernel).transpose() - pi).cwiseAbs().maxCoeff();
    if (!pi.allFinite() || residual > tol.stationary)
        throw DomainError("stationary distribution solve failed (residual " +
                          std::to_string(residual) + ")");
    return pi;
}

double average_reward(const Mdp& mdp, const StochasticPolicy& policy) {
    auto pk = policy_kernel(mdp, policy);
    Vec pi = stationary_distribution(pk.kernel, mdp.tol());
    return pi.dot(pk.reward_vec);
}

namespace {

// Shared (n+1)-variable solve for (J, h) given any row-stochastic kernel.
EvaluationResult solve_gain_bias(const Mat& kernel, const Vec& reward_vec, int anchor,
                                 const Tolerances& tol) {
    const int n = static_cast<int>(kernel.rows());
    if (anchor < 0 || anchor >= n) throw DomainError("anchor index out of range");
    Vec pi = stationary_distribution(kernel, tol);  // also validates irreducibility
    Mat system = Mat::Zero(n + 1, n + 1);
    system.block(0, 1, n, n) = Mat::Identity(n, n) - kernel;
    system.col(0).head(n).setOnes();
    system(n, 1 + anchor) = 1.0;
    Vec rhs = Vec::Zero(n + 1);
    rhs.head(n) = reward_vec;
    Vec sol = system.partialPivLu().solve(rhs);
    if (!sol.allFinite())
        throw DomainError("gain/bias system is singular (reducible chain?)");
    EvaluationResult result{sol(0), sol.tail(n), std::move(pi), anchor};
    result.bias(anchor) = 0.0;  // exact anchoring
    double residual = (Vec::Constant(n, result.gain) + result.bias - reward_vec -
                       kernel * result.bias)
                          .cwiseAbs()
                          .maxCoeff();
    if (residual > tol.bellman)
        throw DomainError("gain/bias residual " + std::to_string(residual) +
                          " exceeds tolerance");
    return result;
}

}  // namespace

EvaluationResult solve_bellman(const Mdp& mdp, const StochasticPolicy& policy, int anchor) {
    auto pk = policy_kernel(mdp, policy);
    return solve_gain_bias(pk.kernel, pk.reward_vec, anchor, mdp.tol());
}

EvaluationResult solve_bellman_q(const Mdp& mdp, const StochasticPolicy& policy, int anchor_sa) {
    auto sak = state_action_kernel(mdp, policy);
    return solve_gain_bias(sak.kernel, sak.reward_vec, anchor_sa, mdp.tol());
}

double gamma_lower_bound(const Mdp& mdp, const std::vector<StochasticPolicy>& policies) {
    if (policies.empty()) throw DomainError("gamma_lower_bound needs a non-empty policy set");
    double gamma = 1.0;
    for (const auto& mu : policies) {
        auto pk = policy_kernel(mdp, mu);
        gamma = std::min(gamma, stationary_distribution(pk.kernel, mdp.tol()).minCoeff());
    }
    return gamma;
}

double gamma_lower_bound_sa(const Mdp& mdp, const std::vector<StochasticPolicy>& policies) {
    if (policies.empty()) throw DomainError("gamma_lower_bound needs a non-empty policy set");
    // the invariant distribution of the state-action chain factorizes as
    // pi(s) mu(a|s), so only the state chain has to be solved; this stays
    // well-defined when concentrated policies carry underflow-zero entries
    double gamma = 1.0;
    for (const auto& mu : policies) {
        auto pk = policy_kernel(mdp, mu);
        Vec pi = stationary_distribution(pk.kernel, mdp.tol());
        for (int s = 0; s < mdp.n_states(); ++s)
            for (int a = 0; a < mdp.n_actions(); ++a)
                gamma = std::min(gamma, pi(s) * mu.prob(s, a));
    }
    return gamma;
}

std::vector<StochasticPolicy> enumerate_deterministic_policies(int n_states, int n_actions,
                                                               long limit) {
    double count = std::pow(static_cast<double>(n_actions), n_states);
    if (count > static_cast<double>(limit))
        throw DomainError("deterministic policy enumeration would exceed the limit");
    std::vector<StochasticPolicy> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<int> actions(static_cast<std::size_t>(n_states), 0);
    for (;;) {
        out.push_back(StochasticPolicy::deterministic(actions, n_actions));
        int s = 0;
        while (s < n_states) {
            if (++actions[static_cast<std::size_t>(s)] < n_actions) break;
            actions[static_cast<std::size_t>(s)] = 0;
            ++s;
        }
        if (s == n_states) break;
    }
    return out;
}

void assert_chain_assumptions(const Mdp& mdp) {
    for (int s = 0; s < mdp.n_states(); ++s)
        for (int a = 0; a < mdp.n_actions(); ++a)
            if (!(mdp.p(s, a, s) > 0.0)) {
                std::ostringstream os;
                os << "transition diagonal is zero at state " << s << ", action " << a
                   << "; apply the aperiodicity transform first";
                throw PreconditionError(os.str());
            }
    double count = std::pow(static_cast<double>(mdp.n_actions()), mdp.n_states());
    if (count <= 4096.0) {
        auto policies = enumerate_deterministic_policies(mdp.n_states(), mdp.n_actions());
        for (std::size_t i = 0; i < policies.size(); ++i) {
            auto pk = policy_kernel(mdp, policies[i]);
            auto w = irreducibility_check(pk.kernel);
            if (!w.irreducible) {
                std::ostringstream os;
                os << "deterministic policy #" << i << " induces a reducible chain (state "
                   << w.to << " unreachable from " << w.from
                   << "); apply exploration mixing first";
                throw PreconditionError(os.str());
            }
        }
    }
}

EnumerationResult optimal_gain_enumeration(const Mdp& mdp, long limit) {
    auto policies = enumerate_deterministic_policies(mdp.n_states(), mdp.n_actions(), limit);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < policies.size(); ++i) {
        double j = average_reward(mdp, policies[i]);
        if (j > best) {
            best = j;
            best_idx = i;
        }
    }
    return {best, policies[best_idx]};
}

}  // namespace avgrl
