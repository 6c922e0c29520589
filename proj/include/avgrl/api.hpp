#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avgrl/mdp.hpp"

namespace avgrl {

/// Controlled error injection for the approximate policy iteration loop.
/// The improvement perturbation never exceeds eps in ||T h - T_mu h||_inf
/// and the evaluation noise never exceeds delta in ||h - h_mu||_inf.
struct ErrorInjector {
    enum class Mode { none, worst_within_budget, random_within_budget };
    double improvement_eps = 0.0;
    double evaluation_delta = 0.0;
    Mode mode = Mode::none;
    std::uint64_t seed = 0;

    static const char* mode_name(Mode m);
    static Mode mode_from_name(const std::string& name);
};

/// One iteration of the average-reward loop.  Row k records the estimate
/// h_k in play at the start of the iteration, its residual extremes
/// u_k / l_k, the policy produced from h_k and its exact gain, the errors
/// realized this iteration, and the gap bound for this index.
struct ApiRow {
    int k;
    std::vector<int> policy;        // deterministic policy mu_{k+1}
    Vec h;                          // estimate h_k
    double gain_exact;              // J_{mu_{k+1}}
    double u, l;                    // extremes of T h_k - h_k
    double eps_realized;            // ||T h_k - T_{mu_{k+1}} h_k||_inf
    double delta_realized;          // ||h_{k+1} - h_{mu_{k+1}}||_inf
    double bound;                   // gap bound at k (derivation form)
    double bound_statement_form;    // statement form (initial term carries -eps)
};

struct ApiTrace {
    std::vector<ApiRow> rows;
    // run metadata
    double gamma = 0.0;
    std::string gamma_scope;        // "all_deterministic" or "visited"
    double j_star = 0.0;
    int anchor = 0;
    ErrorInjector injector;
    double l0 = 0.0, u0 = 0.0;      // residual extremes of h_0
    Vec h0;
    std::string evaluation_entry = "direct_solve";
};

/// Average-reward approximate policy iteration with error injection.
/// Requires every deterministic policy to induce an irreducible chain and
/// every diagonal transition entry to be positive (checked on enumerable
/// instances; PreconditionError names the violation).
ApiTrace run_api(const Mdp& mdp, const Vec& h0, const ErrorInjector& injector, int iterations,
                 int anchor = 0);

/// Finite-k gap bound: [(1-(1-gamma)^k)/gamma]((1+gamma)eps + 2 delta)
///                     + (1-gamma)^k (j_star - l0 + eps).
double theorem_bound(int k, double gamma, double eps, double delta, double j_star, double l0);

/// Statement form whose initial-condition term carries -eps instead.
double theorem_bound_statement_form(int k, double gamma, double eps, double delta, double j_star,
                                    double l0);

/// Asymptotic gap limit ((1+gamma)eps + 2 delta)/gamma.
double asymptotic_gap_limit(double gamma, double eps, double delta);

/// Residual-span bound on u_{k-1} - l_{k-1}:
/// [(1-(1-gamma)^k)/gamma^2]((1+gamma)eps + 2 delta) + (2 delta + eps)/gamma
/// + (1-gamma)^k (j_star - l0 + eps)/gamma.
double prop311_bound(int k, double gamma, double eps, double delta, double j_star, double l0);

/// Asymptotic residual-span limit (eps(1+2 gamma) + 2 delta(1+gamma))/gamma^2.
double asymptotic_span_limit(double gamma, double eps, double delta);

struct Violation {
    int k;
    std::string inequality;
    double slack;  // amount by which the inequality failed
};

/// Row-wise sandwich l_k - eps_k <= J_{mu_{k+1}} <= J* <= u_k.
std::vector<Violation> check_sandwich(const ApiTrace& trace, double tol = 1e-9);

/// Row-wise one-step contraction
/// (J* - l_k) <= (1-gamma)(J* - l_{k-1}) + eps_{k-1} + 2 delta_k
/// with realized errors.
std::vector<Violation> check_contraction(const ApiTrace& trace, double gamma, double tol = 1e-9);

/// Row-wise gap bound J* - J_{mu_{k+1}} <= bound(k) (budgets, from metadata).
std::vector<Violation> check_gap_bound(const ApiTrace& trace, double tol = 1e-9);

/// Row-wise residual-span bound u_{k-1} - l_{k-1} <= prop311_bound(k).
std::vector<Violation> check_residual_span(const ApiTrace& trace, double tol = 1e-9);

/// Injector contract: realized errors never exceed budgets.
std::vector<Violation> check_injector_budget(const ApiTrace& trace, double tol = 1e-12);

// ---------------------------------------------------------------------------
// Discounted baseline.

struct DiscountedRow {
    int k;
    std::vector<int> policy;
    double error_inf;           // ||J_{mu_k} - J*_alpha||_inf
    double eps_realized;
    double delta_realized;
};

struct DiscountedTrace {
    std::vector<DiscountedRow> rows;
    double alpha = 0.0;
    double bound = 0.0;           // (eps + 2 alpha delta)/(1-alpha)^2
    double rescaled_bound = 0.0;  // (eps + 2 alpha delta)/(1-alpha)
    double final_rescaled_error = 0.0;  // (1-alpha) * limsup of trailing errors
    Vec j_star_alpha;             // value-iteration oracle
    ErrorInjector injector;
};

/// Discounted-reward approximate policy iteration (value functions are exact
/// fixed points of T^alpha_mu via linear solve, then perturbed).  Emits the
/// asymptotic bound and the rescaled quantities used by the horizon blow-up
/// comparison.
DiscountedTrace run_discounted_api(const Mdp& mdp, const Vec& j0, double alpha,
                                   const ErrorInjector& injector, int iterations);

}  // namespace avgrl
