#include <doctest.h>

#include <cmath>

#include "avgrl/bellman.hpp"
#include "avgrl/transforms.hpp"
#include "test_support.hpp"

using namespace avgrl;
using avgrl::testing::make_instance;
using avgrl::testing::random_policy;

TEST_CASE("exploration_mix parameter validation") {
    Mdp mdp = make_instance(3, 2, 1, 0.0, 0.0);
    CHECK_THROWS_AS(exploration_mix(mdp, 0.0), DomainError);
    CHECK_THROWS_AS(exploration_mix(mdp, 1.0), DomainError);
    CHECK_THROWS_AS(exploration_mix(mdp, -0.3), DomainError);
}

TEST_CASE("exploration_mix: mixed rows support the uniform-policy row") {
    Mdp mdp = make_instance(4, 3, 3, 0.0, 0.0);
    auto [mixed, record] = exploration_mix(mdp, 0.2);
    CHECK(record.kind == TransformRecord::Kind::exploration_mix);
    CHECK(record.parameter == 0.2);
    for (int s = 0; s < 4; ++s)
        for (int a = 0; a < 3; ++a)
            for (int s2 = 0; s2 < 4; ++s2) {
                double uniform_row = 0.0;
                for (int a2 = 0; a2 < 3; ++a2) uniform_row += mdp.p(s, a2, s2) / 3.0;
                if (uniform_row > 0.0) CHECK(mixed.p(s, a, s2) > 0.0);
                CHECK(mixed.p(s, a, s2) ==
                      doctest::Approx(0.8 * mdp.p(s, a, s2) + 0.2 * uniform_row)
                          .epsilon(1e-14));
            }
}

TEST_CASE("exploration_mix: identical action dynamics are a fixed point") {
    Mat k(3, 3);
    k << 0.2, 0.3, 0.5, 0.6, 0.1, 0.3, 0.25, 0.25, 0.5;
    Mat reward(3, 2);
    reward << 1.0, 1.0, 0.5, 0.5, 0.0, 0.0;
    Mdp mdp({k, k}, reward);
    for (double eps : {0.01, 0.5, 0.99}) {
        auto [mixed, record] = exploration_mix(mdp, eps);
        for (int a = 0; a < 2; ++a)
            CHECK((mixed.action_kernel(a) - k).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("exploration_mix: optimal-gain perturbation obeys the O(eps) constant") {
    for (std::uint64_t seed : {101ULL, 102ULL, 103ULL}) {
        Mdp mdp = make_instance(4, 2, seed, 0.05, 0.0);  // base is itself mixed, fine
        double eps = 0.05;
        auto [mixed, record] = exploration_mix(mdp, eps);

        auto base_best = optimal_gain_enumeration(mdp);
        auto mixed_best = optimal_gain_enumeration(mixed);

        double span_max = 0.0;
        for (const auto& mu : enumerate_deterministic_policies(4, 2)) {
            auto eval = solve_bellman(mixed, mu, 0);
            span_max = std::max(span_max, eval.bias.maxCoeff() - eval.bias.minCoeff());
        }
        double constant = 2.0 * mdp.r_max() + span_max;
        CHECK(std::abs(base_best.j_star - mixed_best.j_star) <= eps * constant + 1e-12);
    }
}

TEST_CASE("exploration_mix: every policy becomes irreducible") {
    // a chain that is reducible without mixing: two absorbing halves
    Mat stay = Mat::Identity(4, 4);
    Mat cross = Mat::Zero(4, 4);
    cross(0, 1) = 1.0;
    cross(1, 0) = 1.0;
    cross(2, 3) = 1.0;
    cross(3, 2) = 1.0;
    Mat bridge = Mat::Zero(4, 4);
    bridge(0, 2) = 1.0;
    bridge(1, 3) = 1.0;
    bridge(2, 0) = 1.0;
    bridge(3, 1) = 1.0;
    Mdp mdp({stay, cross, bridge}, Mat::Zero(4, 3));

    auto uniform_kernel = policy_kernel(mdp, StochasticPolicy::uniform(4, 3));
    REQUIRE(irreducibility_check(uniform_kernel.kernel).irreducible);

    auto stay_only = StochasticPolicy::deterministic({0, 0, 0, 0}, 3);
    CHECK_FALSE(irreducibility_check(policy_kernel(mdp, stay_only).kernel).irreducible);

    auto [mixed, record] = exploration_mix(mdp, 0.01);
    for (const auto& mu : enumerate_deterministic_policies(4, 3))
        CHECK(irreducibility_check(policy_kernel(mixed, mu).kernel).irreducible);
}

TEST_CASE("aperiodicity_transform parameter validation") {
    Mdp mdp = make_instance(3, 2, 5, 0.0, 0.0);
    CHECK_THROWS_AS(aperiodicity_transform(mdp, 0.0), DomainError);
    CHECK_THROWS_AS(aperiodicity_transform(mdp, 1.0), DomainError);
}

TEST_CASE("aperiodicity_transform: half-lazified 2-cycle") {
    Mat cycle(2, 2);
    cycle << 0.0, 1.0, 1.0, 0.0;
    Mat reward(2, 1);
    reward << 2.0, 4.0;
    Mdp mdp({cycle}, reward);
    auto [lazy, record] = aperiodicity_transform(mdp, 0.5);
    CHECK(lazy.p(0, 0, 0) == doctest::Approx(0.5));
    CHECK(lazy.p(0, 0, 1) == doctest::Approx(0.5));
    CHECK(lazy.p(1, 0, 1) == doctest::Approx(0.5));
    CHECK(lazy.r(0, 0) == doctest::Approx(1.0));
    CHECK(lazy.r(1, 0) == doctest::Approx(2.0));
}

TEST_CASE("aperiodicity_transform: gain scales, bias is preserved") {
    for (std::uint64_t seed : {201ULL, 202ULL}) {
        Mdp mdp = make_instance(4, 3, seed, 0.05, 0.0);
        double kappa = 0.1;
        auto [lazy, record] = aperiodicity_transform(mdp, kappa);
        CounterRng rng(seed);
        for (int trial = 0; trial < 20; ++trial) {
            auto mu = random_policy(4, 3, rng);
            auto base = solve_bellman(mdp, mu, 0);
            auto transformed = solve_bellman(lazy, mu, 0);
            CHECK(std::abs(transformed.gain - (1.0 - kappa) * base.gain) < 1e-10);
            CHECK((transformed.bias - base.bias).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("aperiodicity_transform: argmax policy is unchanged") {
    Mdp mdp = make_instance(4, 3, 301, 0.05, 0.0);
    auto [lazy, record] = aperiodicity_transform(mdp, 0.35);
    auto base_best = optimal_gain_enumeration(mdp);
    auto lazy_best = optimal_gain_enumeration(lazy);
    CHECK(lazy_best.j_star == doctest::Approx((1.0 - 0.35) * base_best.j_star).epsilon(1e-10));
    CHECK(base_best.argmax.actions() == lazy_best.argmax.actions());
}

TEST_CASE("aperiodicity_transform: all diagonals at least kappa") {
    Mdp mdp = make_instance(5, 2, 401, 0.05, 0.0);
    auto [lazy, record] = aperiodicity_transform(mdp, 0.25);
    for (int s = 0; s < 5; ++s)
        for (int a = 0; a < 2; ++a) CHECK(lazy.p(s, a, s) >= 0.25);
}

TEST_CASE("transforms compose and records stack") {
    Mdp mdp = make_instance(3, 2, 501, 0.0, 0.0);
    auto [mixed, r1] = exploration_mix(mdp, 0.05, "base");
    auto [both, r2] = aperiodicity_transform(mixed, 0.1, "mixed");
    CHECK(r1.kind == TransformRecord::Kind::exploration_mix);
    CHECK(r2.kind == TransformRecord::Kind::aperiodicity);
    for (int s = 0; s < 3; ++s)
        for (int a = 0; a < 2; ++a) CHECK(both.p(s, a, s) >= 0.1);
}
