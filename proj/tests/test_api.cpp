#include <doctest.h>

#include <cmath>

#include "avgrl/api.hpp"
#include "avgrl/bellman.hpp"
#include "test_support.hpp"

using namespace avgrl;
using avgrl::testing::make_instance;

TEST_CASE("run_api without injection reaches the enumerated optimum quickly") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        Mdp mdp = make_instance(5, 2, seed);
        double j_star = optimal_gain_enumeration(mdp).j_star;
        ErrorInjector none;
        ApiTrace trace = run_api(mdp, Vec::Zero(5), none, 12);
        CHECK(trace.j_star == doctest::Approx(j_star).epsilon(1e-12));
        int reached = -1;
        for (const auto& row : trace.rows)
            if (std::abs(row.gain_exact - j_star) < 1e-9) {
                reached = row.k;
                break;
            }
        REQUIRE(reached >= 0);
        CHECK(reached <= 10);
    }
}

TEST_CASE("run_api checks the chain assumptions up front") {
    // no lazification: zero diagonals somewhere
    Mat cycle(3, 3);
    cycle << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    Mdp periodic({cycle, cycle}, Mat::Zero(3, 2));
    ErrorInjector none;
    CHECK_THROWS_AS(run_api(periodic, Vec::Zero(3), none, 5), PreconditionError);
}

TEST_CASE("worst-case injector with zero budgets reproduces the exact trace") {
    Mdp mdp = make_instance(5, 3, 7);
    ErrorInjector none;
    ErrorInjector worst_zero;
    worst_zero.mode = ErrorInjector::Mode::worst_within_budget;
    ApiTrace a = run_api(mdp, Vec::Zero(5), none, 15);
    ApiTrace b = run_api(mdp, Vec::Zero(5), worst_zero, 15);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].policy == b.rows[k].policy);
        CHECK((a.rows[k].h - b.rows[k].h).cwiseAbs().maxCoeff() == 0.0);
        CHECK(a.rows[k].eps_realized == 0.0);
        CHECK(b.rows[k].delta_realized == 0.0);
    }
}

TEST_CASE("injected runs satisfy every certificate family") {
    Mdp mdp = make_instance(6, 2, 11);
    ErrorInjector injector;
    injector.improvement_eps = 0.1;
    injector.evaluation_delta = 0.05;
    injector.seed = 7;
    for (auto mode :
         {ErrorInjector::Mode::worst_within_budget, ErrorInjector::Mode::random_within_budget}) {
        injector.mode = mode;
        ApiTrace trace = run_api(mdp, Vec::Zero(6), injector, 50);
        CHECK(check_injector_budget(trace).empty());
        CHECK(check_sandwich(trace).empty());
        CHECK(check_contraction(trace, trace.gamma).empty());
        CHECK(check_gap_bound(trace).empty());
        CHECK(check_residual_span(trace).empty());
        bool saw_improvement_error = false;
        for (const auto& row : trace.rows) saw_improvement_error |= row.eps_realized > 0.0;
        CHECK(saw_improvement_error);  // the budget actually binds somewhere
    }
}

TEST_CASE("theorem_bound formula") {
    SUBCASE("zero budgets decay to zero") {
        double b = theorem_bound(4000, 0.05, 0.0, 0.0, 1.0, -2.0);
        CHECK(b < 1e-12);
    }
    SUBCASE("k = 0 gives the bare initial condition term") {
        CHECK(theorem_bound(0, 0.3, 0.01, 0.02, 1.5, 0.4) ==
              doctest::Approx(1.5 - 0.4 + 0.01).epsilon(1e-15));
    }
    SUBCASE("large k approaches the asymptotic limit 0.26") {
        double limit = asymptotic_gap_limit(0.2, 0.01, 0.02);
        CHECK(limit == doctest::Approx(0.26).epsilon(1e-15));
        CHECK(theorem_bound(1000, 0.2, 0.01, 0.02, 1.0, 0.0) ==
              doctest::Approx(0.26).epsilon(1e-9));
    }
    SUBCASE("monotone non-increasing when the initial term dominates") {
        double gamma = 0.2, eps = 0.01, delta = 0.02;
        double limit = asymptotic_gap_limit(gamma, eps, delta);
        double j_star = 1.0, l0 = j_star - limit - 0.5;  // J* - l0 + eps >= limit
        double prev = theorem_bound(0, gamma, eps, delta, j_star, l0);
        for (int k = 1; k < 200; ++k) {
            double cur = theorem_bound(k, gamma, eps, delta, j_star, l0);
            CHECK(cur <= prev + 1e-14);
            prev = cur;
        }
    }
    SUBCASE("statement form differs by the sign of the eps term") {
        double diff = theorem_bound(3, 0.3, 0.05, 0.0, 1.0, 0.0) -
                      theorem_bound_statement_form(3, 0.3, 0.05, 0.0, 1.0, 0.0);
        CHECK(diff == doctest::Approx(2 * 0.05 * std::pow(0.7, 3)).epsilon(1e-12));
    }
    SUBCASE("domain errors") {
        CHECK_THROWS_AS(theorem_bound(1, 0.0, 0.0, 0.0, 1.0, 0.0), DomainError);
        CHECK_THROWS_AS(theorem_bound(1, -0.1, 0.0, 0.0, 1.0, 0.0), DomainError);
        CHECK_THROWS_AS(theorem_bound(1, 0.5, -0.1, 0.0, 1.0, 0.0), DomainError);
    }
}

TEST_CASE("prop311_bound formula") {
    SUBCASE("zero budgets decay to zero") {
        CHECK(prop311_bound(5000, 0.05, 0.0, 0.0, 1.0, -1.0) < 1e-12);
    }
    SUBCASE("limit matches the asymptotic span expression") {
        double gamma = 0.25, eps = 0.01, delta = 0.02;
        double expect = (eps * (1 + 2 * gamma) + 2 * delta * (1 + gamma)) / (gamma * gamma);
        CHECK(asymptotic_span_limit(gamma, eps, delta) == doctest::Approx(expect));
        CHECK(prop311_bound(2000, gamma, eps, delta, 1.0, 0.0) ==
              doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("check_sandwich flags a corrupted trace at the first row") {
    Mdp mdp = make_instance(5, 2, 13);
    ErrorInjector none;
    ApiTrace trace = run_api(mdp, Vec::Zero(5), none, 10);
    REQUIRE(check_sandwich(trace).empty());
    trace.j_star -= 0.5;  // corrupt: J* lowered below reachable gains
    auto violations = check_sandwich(trace);
    REQUIRE_FALSE(violations.empty());
    CHECK(violations.front().k == 0);
}

TEST_CASE("check_contraction catches an overestimated gamma on a tight trace") {
    // synthetic rows that satisfy the one-step inequality with equality at
    // gamma = 0.2 and therefore fail it at gamma = 0.4
    ApiTrace trace;
    trace.j_star = 1.0;
    trace.gamma = 0.2;
    double l = 0.0;
    for (int k = 0; k < 6; ++k) {
        ApiRow row{};
        row.k = k;
        row.l = l;
        row.u = 2.0;
        row.gain_exact = 0.9;
        row.eps_realized = 0.0;
        row.delta_realized = 0.0;
        trace.rows.push_back(row);
        l = 1.0 - (1.0 - 0.2) * (1.0 - l);  // exact contraction at gamma = 0.2
    }
    CHECK(check_contraction(trace, 0.2).empty());
    CHECK_FALSE(check_contraction(trace, 0.4).empty());
}

TEST_CASE("run_discounted_api") {
    SUBCASE("exact runs converge to the enumerated discounted optimum") {
        Mdp mdp = make_instance(4, 2, 17);
        double alpha = 0.9;
        ErrorInjector none;
        DiscountedTrace trace = run_discounted_api(mdp, Vec::Zero(4), alpha, none, 60);
        // oracle: componentwise max of the per-policy discounted solves
        Vec best = Vec::Constant(4, -1e300);
        for (const auto& mu : enumerate_deterministic_policies(4, 2)) {
            auto pk = policy_kernel(mdp, mu);
            Mat system = Mat::Identity(4, 4) - alpha * pk.kernel;
            best = best.cwiseMax(system.partialPivLu().solve(pk.reward_vec).eval());
        }
        CHECK((trace.j_star_alpha - best).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(trace.rows.back().error_inf < 1e-8);
    }
    SUBCASE("alpha = 0 is the myopic case with bound eps") {
        Mdp mdp = make_instance(4, 3, 19);
        ErrorInjector injector;
        injector.improvement_eps = 0.01;
        injector.mode = ErrorInjector::Mode::worst_within_budget;
        DiscountedTrace trace = run_discounted_api(mdp, Vec::Zero(4), 0.0, injector, 5);
        CHECK(trace.bound == doctest::Approx(0.01));
        CHECK((trace.j_star_alpha - mdp.reward().rowwise().maxCoeff()).cwiseAbs().maxCoeff() <
              1e-10);
    }
    SUBCASE("rescaled bound grows like the horizon while the error is dominated") {
        Mdp mdp = make_instance(5, 2, 23);
        ErrorInjector injector;
        injector.improvement_eps = 0.01;
        injector.evaluation_delta = 0.01;
        injector.mode = ErrorInjector::Mode::random_within_budget;
        injector.seed = 3;
        DiscountedTrace t90 = run_discounted_api(mdp, Vec::Zero(5), 0.9, injector, 40);
        DiscountedTrace t99 = run_discounted_api(mdp, Vec::Zero(5), 0.99, injector, 40);
        DiscountedTrace t999 = run_discounted_api(mdp, Vec::Zero(5), 0.999, injector, 40);
        CHECK(t99.rescaled_bound / t90.rescaled_bound > 9.0);
        CHECK(t999.rescaled_bound / t99.rescaled_bound > 9.0);
        for (const auto* t : {&t90, &t99, &t999})
            CHECK(t->final_rescaled_error <= t->rescaled_bound + 1e-12);
    }
    SUBCASE("alpha out of range") {
        Mdp mdp = make_instance(3, 2, 29);
        ErrorInjector none;
        CHECK_THROWS_AS(run_discounted_api(mdp, Vec::Zero(3), 1.0, none, 5), DomainError);
        CHECK_THROWS_AS(run_discounted_api(mdp, Vec::Zero(3), -0.1, none, 5), DomainError);
    }
}
