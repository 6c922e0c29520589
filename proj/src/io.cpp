#include "avgrl/io.hpp"

#include <fstream>
#include <json.hpp>

namespace avgrl {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw StructuralError("malformed JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

void write_json(const json& j, const std::filesystem::path& path, int indent = 1) {
    std::ofstream out(path);
    if (!out) throw StructuralError("cannot write file: " + path.string());
    out << j.dump(indent) << '\n';
}

json vec_to_json(const Vec& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vec vec_from_json(const json& j) {
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

json mat_to_json(const Mat& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

Mat mat_from_json(const json& j) {
    if (j.empty()) throw StructuralError("matrix in file is empty");
    Mat m(j.size(), j[0].size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (j[r].size() != j[0].size()) throw StructuralError("ragged matrix in file");
        for (std::size_t c = 0; c < j[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
    return m;
}

template <typename T>
T require(const json& j, const char* key, const std::filesystem::path& path) {
    if (!j.contains(key))
        throw StructuralError(path.string() + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw StructuralError(path.string() + ": bad field '" + key + "': " + e.what());
    }
}

}  // namespace

Mdp load_mdp(const std::filesystem::path& path) {
    json j = read_json(path);
    int n = require<int>(j, "n_states", path);
    int m = require<int>(j, "n_actions", path);
    if (n < 1 || m < 1) throw StructuralError(path.string() + ": counts must be positive");
    const json& tr = j.at("transition");
    if (!j.contains("transition") || static_cast<int>(tr.size()) != n)
        throw StructuralError(path.string() + ": transition must have n_states outer entries");
    std::vector<Mat> transition(static_cast<std::size_t>(m), Mat::Zero(n, n));
    for (int s = 0; s < n; ++s) {
        if (static_cast<int>(tr[s].size()) != m)
            throw StructuralError(path.string() + ": transition[" + std::to_string(s) +
                                  "] must have n_actions entries");
        for (int a = 0; a < m; ++a) {
            if (static_cast<int>(tr[s][a].size()) != n)
                throw StructuralError(path.string() + ": transition[" + std::to_string(s) + "][" +
                                      std::to_string(a) + "] must have n_states entries");
            for (int s2 = 0; s2 < n; ++s2)
                transition[static_cast<std::size_t>(a)](s, s2) = tr[s][a][s2].get<double>();
        }
    }
    Mat reward(n, m);
    const json& rw = j.at("reward");
    if (!j.contains("reward") || static_cast<int>(rw.size()) != n)
        throw StructuralError(path.string() + ": reward must have n_states rows");
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < m; ++a) reward(s, a) = rw[s][a].get<double>();
    return Mdp(std::move(transition), std::move(reward));
}

void save_mdp(const Mdp& mdp, const std::filesystem::path& path) {
    json tr = json::array();
    for (int s = 0; s < mdp.n_states(); ++s) {
        json per_action = json::array();
        for (int a = 0; a < mdp.n_actions(); ++a) {
            json row = json::array();
            for (int s2 = 0; s2 < mdp.n_states(); ++s2) row.push_back(mdp.p(s, a, s2));
            per_action.push_back(std::move(row));
        }
        tr.push_back(std::move(per_action));
    }
    json j{{"n_states", mdp.n_states()},
           {"n_actions", mdp.n_actions()},
           {"transition", std::move(tr)},
           {"reward", mat_to_json(mdp.reward())}};
    write_json(j, path);
}

StochasticPolicy load_policy(const std::filesystem::path& path) {
    json j = read_json(path);
    return StochasticPolicy(mat_from_json(j.at("probs")));
}

void save_policy(const StochasticPolicy& policy, const std::filesystem::path& path) {
    json j{{"n_states", policy.n_states()},
           {"n_actions", policy.n_actions()},
           {"probs", mat_to_json(policy.probs())}};
    write_json(j, path);
}

FeatureMap load_features(const std::filesystem::path& path) {
    json j = read_json(path);
    std::string convention = require<std::string>(j, "index_convention", path);
    if (convention != "state_major")
        throw StructuralError(path.string() +
                              ": index_convention must be 'state_major' (sa = s*|A| + a)");
    return FeatureMap(mat_from_json(j.at("phi")), require<int>(j, "n_states", path),
                      require<int>(j, "n_actions", path));
}

void save_features(const FeatureMap& features, const std::filesystem::path& path) {
    json j{{"n_states", features.n_states()},
           {"n_actions", features.n_actions()},
           {"d", features.d()},
           {"index_convention", "state_major"},
           {"phi", mat_to_json(features.phi())}};
    write_json(j, path);
}

void save_transform_records(const std::vector<TransformRecord>& records,
                            const std::filesystem::path& path) {
    json out = json::array();
    for (const auto& rec : records)
        out.push_back({{"kind", TransformRecord::kind_name(rec.kind)},
                       {"parameter", rec.parameter},
                       {"source", rec.source}});
    write_json(out, path);
}

// ---------------------------------------------------------------------------
// Traces.

void save_api_trace(const ApiTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw StructuralError("cannot write file: " + path.string());
    json meta{{"kind", "api-trace"},
              {"gamma", trace.gamma},
              {"gamma_scope", trace.gamma_scope},
              {"j_star", trace.j_star},
              {"anchor", trace.anchor},
              {"l0", trace.l0},
              {"u0", trace.u0},
              {"h0", vec_to_json(trace.h0)},
              {"evaluation_entry", trace.evaluation_entry},
              {"injector",
               {{"eps", trace.injector.improvement_eps},
                {"delta", trace.injector.evaluation_delta},
                {"mode", ErrorInjector::mode_name(trace.injector.mode)},
                {"seed", trace.injector.seed}}}};
    out << meta.dump() << '\n';
    for (const auto& row : trace.rows) {
        json r{{"k", row.k},
               {"policy", row.policy},
               {"h", vec_to_json(row.h)},
               {"gain_exact", row.gain_exact},
               {"u", row.u},
               {"l", row.l},
               {"eps_realized", row.eps_realized},
               {"delta_realized", row.delta_realized},
               {"bound", row.bound},
               {"bound_statement_form", row.bound_statement_form}};
        out << r.dump() << '\n';
    }
}

namespace {

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open file: " + path.string());
    std::vector<json> lines;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            lines.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw StructuralError(path.string() + ": line " + std::to_string(lineno) + ": " +
                                  e.what());
        }
    }
    if (lines.empty()) throw StructuralError(path.string() + ": empty trace file");
    return lines;
}

}  // namespace

ApiTrace load_api_trace(const std::filesystem::path& path) {
    auto lines = read_jsonl(path);
    const json& meta = lines[0];
    if (require<std::string>(meta, "kind", path) != "api-trace")
        throw StructuralError(path.string() + ": not an api trace");
    ApiTrace trace;
    trace.gamma = require<double>(meta, "gamma", path);
    trace.gamma_scope = require<std::string>(meta, "gamma_scope", path);
    trace.j_star = require<double>(meta, "j_star", path);
    trace.anchor = require<int>(meta, "anchor", path);
    trace.l0 = require<double>(meta, "l0", path);
    trace.u0 = require<double>(meta, "u0", path);
    trace.h0 = vec_from_json(meta.at("h0"));
    trace.evaluation_entry = require<std::string>(meta, "evaluation_entry", path);
    const json& inj = meta.at("injector");
    trace.injector.improvement_eps = inj.at("eps").get<double>();
    trace.injector.evaluation_delta = inj.at("delta").get<double>();
    trace.injector.mode = ErrorInjector::mode_from_name(inj.at("mode").get<std::string>());
    trace.injector.seed = inj.at("seed").get<std::uint64_t>();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const json& r = lines[i];
        ApiRow row;
        row.k = require<int>(r, "k", path);
        row.policy = r.at("policy").get<std::vector<int>>();
        row.h = vec_from_json(r.at("h"));
        row.gain_exact = require<double>(r, "gain_exact", path);
        row.u = require<double>(r, "u", path);
        row.l = require<double>(r, "l", path);
        row.eps_realized = require<double>(r, "eps_realized", path);
        row.delta_realized = require<double>(r, "delta_realized", path);
        row.bound = require<double>(r, "bound", path);
        row.bound_statement_form = require<double>(r, "bound_statement_form", path);
        trace.rows.push_back(std::move(row));
    }
    return trace;
}

void save_rl_trace(const RlTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw StructuralError("cannot write file: " + path.string());
    json meta{{"kind", "rl-trace"},
              {"gamma_visited", trace.gamma_visited},
              {"j_star", trace.j_star},
              {"c0", trace.c0},
              {"anchor_sa", trace.anchor_sa},
              {"tau", trace.tau},
              {"rule", PolicyUpdateRule::kind_name(trace.rule.kind)},
              {"beta", trace.rule.beta},
              {"td",
               {{"lambda", trace.td.lambda},
                {"c1", trace.td.c1},
                {"c2", trace.td.c2},
                {"c_alpha", trace.td.c_alpha}}},
              {"feature_kind", trace.feature_kind},
              {"omega_argmax", trace.omega_argmax},
              {"omega_optimal", trace.omega_optimal},
              {"seed", trace.seed},
              {"delta0_bar", trace.delta0_bar}};
    out << meta.dump() << '\n';
    for (const auto& row : trace.rows) {
        json r{{"k", row.k},
               {"policy_next", mat_to_json(row.policy_next)},
               {"q", vec_to_json(row.q)},
               {"q_exact", vec_to_json(row.q_exact)},
               {"j_next_exact", row.j_next_exact},
               {"j_cur_exact", row.j_cur_exact},
               {"delta_realized", row.delta_realized},
               {"eps_realized", row.eps_realized},
               {"cap", row.cap},
               {"u", row.u},
               {"l", row.l},
               {"reward_sum", row.reward_sum},
               {"steps", row.steps}};
        if (std::isfinite(row.cap_optimal_action))
            r["cap_optimal_action"] = row.cap_optimal_action;
        out << r.dump() << '\n';
    }
}

RlTrace load_rl_trace(const std::filesystem::path& path) {
    auto lines = read_jsonl(path);
    const json& meta = lines[0];
    if (require<std::string>(meta, "kind", path) != "rl-trace")
        throw StructuralError(path.string() + ": not an rl trace");
    RlTrace trace;
    trace.gamma_visited = require<double>(meta, "gamma_visited", path);
    trace.j_star = require<double>(meta, "j_star", path);
    trace.c0 = require<double>(meta, "c0", path);
    trace.anchor_sa = require<int>(meta, "anchor_sa", path);
    trace.tau = require<long>(meta, "tau", path);
    trace.rule.kind = PolicyUpdateRule::kind_from_name(require<std::string>(meta, "rule", path));
    trace.rule.beta = require<double>(meta, "beta", path);
    const json& td = meta.at("td");
    trace.td.lambda = td.at("lambda").get<double>();
    trace.td.c1 = td.at("c1").get<double>();
    trace.td.c2 = td.at("c2").get<double>();
    trace.td.c_alpha = td.at("c_alpha").get<double>();
    trace.feature_kind = require<std::string>(meta, "feature_kind", path);
    trace.omega_argmax = require<double>(meta, "omega_argmax", path);
    trace.omega_optimal = require<double>(meta, "omega_optimal", path);
    trace.seed = require<std::uint64_t>(meta, "seed", path);
    trace.delta0_bar = require<double>(meta, "delta0_bar", path);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const json& r = lines[i];
        RlRow row;
        row.k = require<int>(r, "k", path);
        row.policy_next = mat_from_json(r.at("policy_next"));
        row.q = vec_from_json(r.at("q"));
        row.q_exact = vec_from_json(r.at("q_exact"));
        row.j_next_exact = require<double>(r, "j_next_exact", path);
        row.j_cur_exact = require<double>(r, "j_cur_exact", path);
        row.delta_realized = require<double>(r, "delta_realized", path);
        row.eps_realized = require<double>(r, "eps_realized", path);
        row.cap = require<double>(r, "cap", path);
        row.cap_optimal_action = r.contains("cap_optimal_action")
                                     ? r.at("cap_optimal_action").get<double>()
                                     : std::numeric_limits<double>::quiet_NaN();
        row.u = require<double>(r, "u", path);
        row.l = require<double>(r, "l", path);
        row.reward_sum = require<double>(r, "reward_sum", path);
        row.steps = require<long>(r, "steps", path);
        trace.rows.push_back(std::move(row));
    }
    return trace;
}

void save_discounted_trace(const DiscountedTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw StructuralError("cannot write file: " + path.string());
    json meta{{"kind", "discounted-trace"},
              {"alpha", trace.alpha},
              {"bound", trace.bound},
              {"rescaled_bound", trace.rescaled_bound},
              {"final_rescaled_error", trace.final_rescaled_error},
              {"j_star_alpha", vec_to_json(trace.j_star_alpha)},
              {"injector",
               {{"eps", trace.injector.improvement_eps},
                {"delta", trace.injector.evaluation_delta},
                {"mode", ErrorInjector::mode_name(trace.injector.mode)},
                {"seed", trace.injector.seed}}}};
    out << meta.dump() << '\n';
    for (const auto& row : trace.rows) {
        json r{{"k", row.k},
               {"policy", row.policy},
               {"error_inf", row.error_inf},
               {"eps_realized", row.eps_realized},
               {"delta_realized", row.delta_realized}};
        out << r.dump() << '\n';
    }
}

std::string trace_kind(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw StructuralError(path.string() + ": empty trace file");
    json meta = json::parse(line, nullptr, false);
    if (meta.is_discarded() || !meta.contains("kind"))
        throw StructuralError(path.string() + ": no trace kind tag");
    return meta.at("kind").get<std::string>();
}

// ---------------------------------------------------------------------------
// Certificate summaries.

bool CertificateSummary::pass() const {
    for (const auto& fam : families)
        if (fam.violations > 0) return false;
    return true;
}

namespace {

FamilySummary summarize_family(const std::string& name, int checked,
                               const std::vector<Violation>& violations, double min_margin) {
    FamilySummary fam;
    fam.family = name;
    fam.checked = checked;
    fam.violations = static_cast<int>(violations.size());
    for (const auto& v : violations)
        fam.max_violation_slack = std::max(fam.max_violation_slack, v.slack);
    fam.min_margin = min_margin;
    return fam;
}

}  // namespace

CertificateSummary summarize_api_certificates(const ApiTrace& trace) {
    CertificateSummary summary;
    const int n_rows = static_cast<int>(trace.rows.size());

    double margin = std::numeric_limits<double>::infinity();
    for (const auto& row : trace.rows) {
        margin = std::min(margin, row.gain_exact - (row.l - row.eps_realized));
        margin = std::min(margin, trace.j_star - row.gain_exact);
        margin = std::min(margin, row.u - trace.j_star);
    }
    summary.families.push_back(
        summarize_family("sandwich", 3 * n_rows, check_sandwich(trace), margin));

    margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < trace.rows.size(); ++k) {
        const auto& prev = trace.rows[k - 1];
        const auto& cur = trace.rows[k];
        double rhs = (1.0 - trace.gamma) * (trace.j_star - prev.l) + prev.eps_realized +
                     2.0 * prev.delta_realized;
        margin = std::min(margin, rhs - (trace.j_star - cur.l));
    }
    summary.families.push_back(summarize_family("contraction", std::max(0, n_rows - 1),
                                                check_contraction(trace, trace.gamma), margin));

    margin = std::numeric_limits<double>::infinity();
    for (const auto& row : trace.rows)
        margin = std::min(margin, row.bound - (trace.j_star - row.gain_exact));
    summary.families.push_back(
        summarize_family("gap_bound", n_rows, check_gap_bound(trace), margin));

    margin = std::numeric_limits<double>::infinity();
    for (const auto& row : trace.rows) {
        double bound = prop311_bound(row.k + 1, trace.gamma, trace.injector.improvement_eps,
                                     trace.injector.evaluation_delta, trace.j_star, trace.l0);
        margin = std::min(margin, bound - (row.u - row.l));
    }
    summary.families.push_back(
        summarize_family("residual_span", n_rows, check_residual_span(trace), margin));

    margin = std::numeric_limits<double>::infinity();
    for (const auto& row : trace.rows) {
        margin = std::min(margin, trace.injector.improvement_eps - row.eps_realized);
        margin = std::min(margin, trace.injector.evaluation_delta - row.delta_realized);
    }
    summary.families.push_back(
        summarize_family("injector_budget", 2 * n_rows, check_injector_budget(trace), margin));
    return summary;
}

CertificateSummary summarize_rl_certificates(const RlTrace& trace) {
    CertificateSummary summary;
    auto report = proposition42_certificate(trace, trace.gamma_visited);

    std::vector<Violation> caps, sandwich, onestep, decomposition;
    for (const auto& v : report.violations) {
        Violation violation{v.k, v.inequality, v.slack};
        if (v.inequality.find("cap") != std::string::npos)
            caps.push_back(violation);
        else if (v.inequality.find("(1-gamma)") != std::string::npos)
            onestep.push_back(violation);
        else
            sandwich.push_back(violation);
    }
    if (report.lhs > report.rhs_unrolled + 1e-9)
        decomposition.push_back({static_cast<int>(trace.rows.size()) - 1,
                                 "J* - J_{mu_{T+1}} <= unrolled decomposition",
                                 report.lhs - report.rhs_unrolled});

    const int n_rows = static_cast<int>(trace.rows.size());
    double cap_margin = std::numeric_limits<double>::infinity();
    double sandwich_margin = std::numeric_limits<double>::infinity();
    for (const auto& row : trace.rows) {
        cap_margin = std::min(cap_margin, row.cap - row.eps_realized);
        sandwich_margin =
            std::min({sandwich_margin, row.j_next_exact - (row.l - row.eps_realized),
                      trace.j_star - row.j_next_exact, row.u - trace.j_star});
    }
    double onestep_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < trace.rows.size(); ++k) {
        const auto& prev = trace.rows[k - 1];
        const auto& cur = trace.rows[k];
        double rhs = (1.0 - trace.gamma_visited) * (trace.j_star - prev.l) + prev.eps_realized +
                     2.0 * cur.delta_realized;
        onestep_margin = std::min(onestep_margin, rhs - (trace.j_star - cur.l));
    }
    summary.families.push_back(summarize_family("improvement_caps", n_rows, caps, cap_margin));
    summary.families.push_back(
        summarize_family("q_sandwich", 3 * n_rows, sandwich, sandwich_margin));
    summary.families.push_back(
        summarize_family("q_contraction", std::max(0, n_rows - 1), onestep, onestep_margin));
    summary.families.push_back(summarize_family("q_decomposition", 1, decomposition,
                                                report.rhs_unrolled - report.lhs));
    return summary;
}

void save_certificate_summary(const CertificateSummary& summary,
                              const std::filesystem::path& path) {
    json fams = json::array();
    for (const auto& fam : summary.families) {
        json f{{"family", fam.family},
               {"checked", fam.checked},
               {"violations", fam.violations},
               {"max_violation_slack", fam.max_violation_slack}};
        if (std::isfinite(fam.min_margin)) f["min_margin"] = fam.min_margin;
        fams.push_back(std::move(f));
    }
    write_json(json{{"pass", summary.pass()}, {"families", std::move(fams)}}, path);
}

// ---------------------------------------------------------------------------
// Experiment configs.

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    json j = read_json(path);
    int version = require<int>(j, "schema_version", path);
    if (version != ExperimentConfig::schema_version)
        throw StructuralError(path.string() + ": unsupported schema_version " +
                              std::to_string(version));
    ExperimentConfig config;
    const json& inst = j.at("instance");
    config.instance.kind = require<std::string>(inst, "kind", path);
    if (config.instance.kind == "random") {
        config.instance.random.n_states = require<int>(inst, "n_states", path);
        config.instance.random.n_actions = require<int>(inst, "n_actions", path);
        config.instance.random.concentration = inst.value("concentration", 1.0);
        config.instance.random.r_lo = inst.value("r_lo", 0.0);
        config.instance.random.r_hi = inst.value("r_hi", 1.0);
        config.instance.random.seed = inst.value("seed", 0ULL);
        config.instance.random.mix_eps = inst.value("mix_eps", 0.05);
    } else if (config.instance.kind == "gridworld") {
        config.instance.grid_width = require<int>(inst, "width", path);
        config.instance.grid_height = require<int>(inst, "height", path);
        config.instance.grid_slip = inst.value("slip", 0.1);
        if (inst.contains("cell_rewards"))
            for (const auto& [key, value] : inst.at("cell_rewards").items())
                config.instance.grid_rewards[std::stoi(key)] = value.get<double>();
    } else if (config.instance.kind == "file") {
        config.instance.file = require<std::string>(inst, "file", path);
    } else {
        throw StructuralError(path.string() + ": unknown instance kind");
    }
    if (j.contains("mix_eps")) config.mix_eps = j.at("mix_eps").get<double>();
    if (j.contains("schweitzer_kappa"))
        config.schweitzer_kappa = j.at("schweitzer_kappa").get<double>();

    const json& alg = j.at("algorithm");
    config.algorithm.kind = require<std::string>(alg, "kind", path);
    if (config.algorithm.kind == "api") {
        config.algorithm.injector.improvement_eps = alg.value("eps", 0.0);
        config.algorithm.injector.evaluation_delta = alg.value("delta", 0.0);
        config.algorithm.injector.mode =
            ErrorInjector::mode_from_name(alg.value("mode", std::string("none")));
        config.algorithm.iterations = alg.value("iterations", 50);
        config.algorithm.anchor = alg.value("anchor", 0);
    } else if (config.algorithm.kind == "rl" || config.algorithm.kind == "regret") {
        config.algorithm.rule.kind =
            PolicyUpdateRule::kind_from_name(alg.value("rule", std::string("softmax")));
        config.algorithm.rule.beta = alg.value("beta", 10.0);
        config.algorithm.td.lambda = alg.value("lambda", 0.5);
        config.algorithm.td.c1 = alg.value("c1", 1.0);
        config.algorithm.td.c2 = alg.value("c2", 10.0);
        config.algorithm.td.c_alpha = alg.value("c_alpha", 1.0);
        config.algorithm.tau = alg.value("tau", 10000L);
        config.algorithm.iterations = alg.value("iterations", 20);
        config.algorithm.features = alg.value("features", std::string("tabular"));
        if (alg.contains("horizons"))
            config.algorithm.horizons = alg.at("horizons").get<std::vector<long>>();
        if (alg.contains("chat_tau_grid"))
            config.algorithm.chat_tau_grid = alg.at("chat_tau_grid").get<std::vector<long>>();
        config.algorithm.chat_seeds = alg.value("chat_seeds", 3);
    } else {
        throw StructuralError(path.string() + ": unknown algorithm kind");
    }
    config.seeds = require<std::vector<std::uint64_t>>(j, "seeds", path);
    config.output_dir = require<std::string>(j, "output_dir", path);
    return config;
}

void save_experiment_config(const ExperimentConfig& config, const std::filesystem::path& path) {
    json inst{{"kind", config.instance.kind}};
    if (config.instance.kind == "random") {
        inst["n_states"] = config.instance.random.n_states;
        inst["n_actions"] = config.instance.random.n_actions;
        inst["concentration"] = config.instance.random.concentration;
        inst["r_lo"] = config.instance.random.r_lo;
        inst["r_hi"] = config.instance.random.r_hi;
        inst["seed"] = config.instance.random.seed;
        inst["mix_eps"] = config.instance.random.mix_eps;
    } else if (config.instance.kind == "gridworld") {
        inst["width"] = config.instance.grid_width;
        inst["height"] = config.instance.grid_height;
        inst["slip"] = config.instance.grid_slip;
        json cells = json::object();
        for (const auto& [cell, value] : config.instance.grid_rewards)
            cells[std::to_string(cell)] = value;
        inst["cell_rewards"] = std::move(cells);
    } else {
        inst["file"] = config.instance.file;
    }
    json alg{{"kind", config.algorithm.kind}};
    if (config.algorithm.kind == "api") {
        alg["eps"] = config.algorithm.injector.improvement_eps;
        alg["delta"] = config.algorithm.injector.evaluation_delta;
        alg["mode"] = ErrorInjector::mode_name(config.algorithm.injector.mode);
        alg["iterations"] = config.algorithm.iterations;
        alg["anchor"] = config.algorithm.anchor;
    } else {
        alg["rule"] = PolicyUpdateRule::kind_name(config.algorithm.rule.kind);
        alg["beta"] = config.algorithm.rule.beta;
        alg["lambda"] = config.algorithm.td.lambda;
        alg["c1"] = config.algorithm.td.c1;
        alg["c2"] = config.algorithm.td.c2;
        alg["c_alpha"] = config.algorithm.td.c_alpha;
        alg["tau"] = config.algorithm.tau;
        alg["iterations"] = config.algorithm.iterations;
        alg["features"] = config.algorithm.features;
        alg["horizons"] = config.algorithm.horizons;
        alg["chat_tau_grid"] = config.algorithm.chat_tau_grid;
        alg["chat_seeds"] = config.algorithm.chat_seeds;
    }
    json j{{"schema_version", ExperimentConfig::schema_version},
           {"instance", std::move(inst)},
           {"algorithm", std::move(alg)},
           {"seeds", config.seeds},
           {"output_dir", config.output_dir}};
    if (config.mix_eps) j["mix_eps"] = *config.mix_eps;
    if (config.schweitzer_kappa) j["schweitzer_kappa"] = *config.schweitzer_kappa;
    write_json(j, path);
}

}  // namespace avgrl
