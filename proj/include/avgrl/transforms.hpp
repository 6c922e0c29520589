#pragma once

#include <string>
#include <utility>

#include "avgrl/mdp.hpp"

namespace avgrl {

struct TransformRecord {
    enum class Kind { exploration_mix, aperiodicity };
    Kind kind;
    double parameter;     // eps or kappa, in (0,1)
    std::string source;   // provenance label for the input MDP

    static const char* kind_name(Kind k) {
        return k == Kind::exploration_mix ? "exploration_mix" : "aperiodicity";
    }
};

/// Blends every action's dynamics (and rewards) with the uniform-random
/// policy's: P'(s'|s,a) = (1-eps) P(s'|s,a) + eps (1/|A|) sum_a' P(s'|s,a'),
/// r'(s,a) = (1-eps) r(s,a) + eps (1/|A|) sum_a' r(s,a').  Forces
/// irreducibility for every policy once the uniform-policy chain is
/// irreducible, at an O(eps) gain loss.
std::pair<Mdp, TransformRecord> exploration_mix(const Mdp& mdp, double eps,
                                                const std::string& source = "");

/// Lazification P'(i|i,a) = kappa + (1-kappa) P(i|i,a), off-diagonal scaled
/// by (1-kappa), rewards scaled by (1-kappa).  Preserves the bias of every
/// policy exactly and scales its gain by (1-kappa).
std::pair<Mdp, TransformRecord> aperiodicity_transform(const Mdp& mdp, double kappa,
                                                       const std::string& source = "");

}  // namespace avgrl
