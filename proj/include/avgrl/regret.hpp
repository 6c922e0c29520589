#pragma once

#include <cstdint>
#include <vector>

#include "avgrl/mdp.hpp"
#include "avgrl/rl.hpp"

namespace avgrl {

struct RegretDecomposition {
    double pseudo_regret;     // tau * sum_t (J* - J_{mu_t})
    double estimation_term;   // sum over steps of (J_{mu(t)} - r_t)
    double total;             // sum over steps of (J* - r_t)
};

/// Exact arithmetic split of the total regret into the pseudo-regret and the
/// estimation term.  `rewards` holds all K per-step rewards, `gains` the
/// per-iteration exact gains; each gain spans K/|gains| steps.
RegretDecomposition decompose_regret(const std::vector<double>& rewards,
                                     const std::vector<double>& gains, double j_star);

/// Same split from a recorded trace (per-iteration reward block sums).
RegretDecomposition decompose_regret(const RlTrace& trace);

/// (1/gamma) (tau c0 + 2 K delta0_bar + K c5 / sqrt(tau)) with
/// c5 = (1+gamma) log(1/omega) + 2 c_hat.
double pseudo_regret_bound(double horizon_k, long tau, double gamma, double c0, double delta0_bar,
                           double omega, double c_hat);

double c5_constant(double gamma, double omega, double c_hat);

/// round((K c5 / c0)^(2/3)) clipped to [1, K].
long optimize_tau(double horizon_k, double c0, double c5);

/// Measured TD constant: least squares through the origin of per-tau errors
/// against 1/sqrt(tau) over a grid of at least 4 points.  Per grid point the
/// error is the median over seeds of ||Phi theta - Q_mu||_inf from
/// single-policy TD runs.
double estimate_td_constant(const Mdp& mdp, const StochasticPolicy& policy,
                            const FeatureMap& features, const TdConfig& td,
                            const std::vector<long>& tau_grid, int n_seeds,
                            std::uint64_t base_seed, int anchor_sa = 0);

/// Slope of the least-squares line through (log x_i, log y_i).
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

/// Regret accounting for one completed run.
struct RegretLedger {
    long horizon_k;
    long tau;
    int iterations;
    double j_star;
    double pseudo_regret;
    double estimation_term;
    double bound;       // pseudo_regret_bound with measured constants
    double slack;       // bound - pseudo_regret
    double gamma;
    double c0;
    double omega;          // provable-cap omega used in the bound
    double omega_optimal;  // a*-based omega, recorded for comparison
    double c_hat;
};

RegretLedger build_regret_ledger(const RlTrace& trace, double c_hat);

}  // namespace avgrl
