#pragma once

#include <vector>

#include "avgrl/harness.hpp"
#include "avgrl/mdp.hpp"
#include "avgrl/rng.hpp"
#include "avgrl/transforms.hpp"

namespace avgrl::testing {

/// Mixed, lazified random instance satisfying both chain assumptions.
inline Mdp make_instance(int n_states, int n_actions, std::uint64_t seed, double mix = 0.05,
                         double kappa = 0.1) {
    RandomMdpSpec spec;
    spec.n_states = n_states;
    spec.n_actions = n_actions;
    spec.seed = seed;
    spec.mix_eps = mix;
    Mdp mdp = generate_random_mdp(spec);
    if (kappa > 0.0) mdp = aperiodicity_transform(mdp, kappa).first;
    return mdp;
}

/// Random stochastic policy with strictly positive rows.
inline StochasticPolicy random_policy(int n_states, int n_actions, CounterRng& rng) {
    Mat probs(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < n_actions; ++a) {
            probs(s, a) = rng.next_double_open();
            sum += probs(s, a);
        }
        probs.row(s) /= sum;
    }
    return StochasticPolicy(std::move(probs));
}

inline Vec random_vector(int n, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
    return v;
}

}  // namespace avgrl::testing
