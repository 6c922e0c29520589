#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "avgrl/bellman.hpp"
#include "avgrl/harness.hpp"
#include "avgrl/io.hpp"
#include "test_support.hpp"

using namespace avgrl;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "avgrl-tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("generate_random_mdp") {
    SUBCASE("huge concentration approaches uniform rows") {
        RandomMdpSpec spec;
        spec.n_states = 5;
        spec.n_actions = 2;
        spec.concentration = 1e6;
        spec.seed = 1;
        spec.mix_eps = 0.0;
        Mdp mdp = generate_random_mdp(spec);
        for (int a = 0; a < 2; ++a)
            CHECK((mdp.action_kernel(a).array() - 0.2).abs().maxCoeff() < 1e-2);
    }
    SUBCASE("fixed seed reproduces the instance byte for byte") {
        RandomMdpSpec spec;
        spec.n_states = 4;
        spec.n_actions = 3;
        spec.seed = 42;
        auto dir = temp_dir("gen-deterministic");
        save_mdp(generate_random_mdp(spec), dir / "a.json");
        save_mdp(generate_random_mdp(spec), dir / "b.json");
        CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
    }
    SUBCASE("every deterministic policy of a generated instance is irreducible") {
        RandomMdpSpec spec;
        spec.n_states = 6;
        spec.n_actions = 3;
        spec.seed = 5;
        Mdp mdp = generate_random_mdp(spec);
        for (const auto& mu : enumerate_deterministic_policies(6, 3))
            CHECK(irreducibility_check(policy_kernel(mdp, mu).kernel).irreducible);
    }
    SUBCASE("rewards stay inside the requested range") {
        RandomMdpSpec spec;
        spec.n_states = 4;
        spec.n_actions = 2;
        spec.r_lo = -2.0;
        spec.r_hi = 3.0;
        spec.seed = 8;
        spec.mix_eps = 0.0;
        Mdp mdp = generate_random_mdp(spec);
        CHECK(mdp.reward().minCoeff() >= -2.0);
        CHECK(mdp.reward().maxCoeff() <= 3.0);
    }
}

TEST_CASE("generate_gridworld") {
    SUBCASE("one-by-one grid self-loops under every action") {
        Mdp mdp = generate_gridworld(1, 1, 0.3, {{0, 1.0}});
        for (int a = 0; a < 4; ++a) CHECK(mdp.p(0, a, 0) == doctest::Approx(1.0));
    }
    SUBCASE("deterministic grid: staying on the reward cell is optimal") {
        // 2x2, reward on cell 3; pressing into a wall stays put, so the best
        // cycle has length one and the optimal gain equals the cell reward
        Mdp grid = generate_gridworld(2, 2, 0.0, {{3, 0.7}});
        auto [mixed, record] = exploration_mix(grid, 0.01, "grid");
        auto best = optimal_gain_enumeration(mixed);
        // enumeration on the mixed instance stays within the mixing loss
        CHECK(best.j_star > 0.7 - 0.05);
        CHECK(best.j_star <= 0.7 + 1e-9);
    }
    SUBCASE("slippery mixed grid has all policies irreducible") {
        Mdp grid = generate_gridworld(3, 2, 0.2, {{5, 1.0}});
        auto [mixed, record] = exploration_mix(grid, 0.05, "grid");
        for (const auto& mu : enumerate_deterministic_policies(6, 4))
            CHECK(irreducibility_check(policy_kernel(mixed, mu).kernel).irreducible);
    }
    SUBCASE("bad inputs") {
        CHECK_THROWS_AS(generate_gridworld(0, 2, 0.1, {}), StructuralError);
        CHECK_THROWS_AS(generate_gridworld(2, 2, 1.0, {}), DomainError);
        CHECK_THROWS_AS(generate_gridworld(2, 2, 0.1, {{7, 1.0}}), StructuralError);
    }
}

TEST_CASE("run_experiment") {
    ExperimentConfig config;
    config.instance.kind = "random";
    config.instance.random.n_states = 4;
    config.instance.random.n_actions = 2;
    config.instance.random.seed = 11;
    config.schweitzer_kappa = 0.1;
    config.algorithm.kind = "api";
    config.algorithm.injector.improvement_eps = 0.05;
    config.algorithm.injector.evaluation_delta = 0.02;
    config.algorithm.injector.mode = ErrorInjector::Mode::random_within_budget;
    config.algorithm.iterations = 20;
    config.seeds = {1, 2};

    SUBCASE("api experiment produces clean certificates and a manifest") {
        auto dir = temp_dir("exp-api");
        config.output_dir = dir.string();
        ResultBundle bundle = run_experiment(config);
        CHECK(bundle.complete);
        REQUIRE(bundle.outcomes.size() == 2);
        for (const auto& outcome : bundle.outcomes) {
            CHECK(outcome.ok);
            CHECK(outcome.violations == 0);
            CHECK(std::filesystem::exists(outcome.trace_path));
        }
        CHECK(std::filesystem::exists(dir / "manifest.json"));
        CHECK(std::filesystem::exists(dir / "summary.csv"));
        CHECK(std::filesystem::exists(dir / "instance.json"));
    }
    SUBCASE("empty seed list is structural") {
        config.seeds = {};
        config.output_dir = temp_dir("exp-empty").string();
        CHECK_THROWS_AS(run_experiment(config), StructuralError);
    }
    SUBCASE("duplicate seeds are structural") {
        config.seeds = {3, 3};
        config.output_dir = temp_dir("exp-dup").string();
        CHECK_THROWS_AS(run_experiment(config), StructuralError);
    }
    SUBCASE("rerunning the identical config reproduces the bundle bitwise") {
        auto dir = temp_dir("exp-repro");
        config.output_dir = dir.string();
        run_experiment(config);
        std::map<std::string, std::string> snapshot;
        for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
            if (entry.is_regular_file())
                snapshot[std::filesystem::relative(entry.path(), dir).string()] =
                    slurp(entry.path());
        std::filesystem::remove_all(dir);
        run_experiment(config);
        for (const auto& [rel, bytes] : snapshot) {
            CAPTURE(rel);
            CHECK(slurp(dir / rel) == bytes);
        }
    }
}

TEST_CASE("fnv1a64_file is stable and content sensitive") {
    auto dir = temp_dir("hash");
    std::ofstream(dir / "x.txt") << "abc";
    std::ofstream(dir / "y.txt") << "abd";
    CHECK(fnv1a64_file(dir / "x.txt") == fnv1a64_file(dir / "x.txt"));
    CHECK(fnv1a64_file(dir / "x.txt") != fnv1a64_file(dir / "y.txt"));
    CHECK_THROWS_AS(fnv1a64_file(dir / "missing.txt"), StructuralError);
}
