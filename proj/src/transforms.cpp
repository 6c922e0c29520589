#include "avgrl/transforms.hpp"

namespace avgrl {

std::pair<Mdp, TransformRecord> exploration_mix(const Mdp& mdp, double eps,
                                                const std::string& source) {
    if (!(eps > 0.0 && eps < 1.0))
        throw DomainError("exploration mix rate must lie in (0,1)");
    const int n = mdp.n_states(), m = mdp.n_actions();
    Mat uniform_kernel = Mat::Zero(n, n);
    for (int a = 0; a < m; ++a) uniform_kernel += mdp.action_kernel(a);
    uniform_kernel /= m;
    Vec uniform_reward = mdp.reward().rowwise().mean();

    std::vector<Mat> transition(static_cast<std::size_t>(m));
    Mat reward(n, m);
    for (int a = 0; a < m; ++a) {
        transition[static_cast<std::size_t>(a)] =
            (1.0 - eps) * mdp.action_kernel(a) + eps * uniform_kernel;
        reward.col(a) = (1.0 - eps) * mdp.reward().col(a) + eps * uniform_reward;
    }
    return {Mdp(std::move(transition), std::move(reward), mdp.tol()),
            TransformRecord{TransformRecord::Kind::exploration_mix, eps, source}};
}

std::pair<Mdp, TransformRecord> aperiodicity_transform(const Mdp& mdp, double kappa,
                                                       const std::string& source) {
    if (!(kappa > 0.0 && kappa < 1.0))
        throw DomainError("aperiodicity parameter must lie in (0,1)");
    const int n = mdp.n_states(), m = mdp.n_actions();
    std::vector<Mat> transition(static_cast<std::size_t>(m));
    for (int a = 0; a < m; ++a) {
        transition[static_cast<std::size_t>(a)] =
            (1.0 - kappa) * mdp.action_kernel(a) + kappa * Mat::Identity(n, n);
    }
    Mat reward = (1.0 - kappa) * mdp.reward();
    return {Mdp(std::move(transition), std::move(reward), mdp.tol()),
            TransformRecord{TransformRecord::Kind::aperiodicity, kappa, source}};
}

}  // namespace avgrl
