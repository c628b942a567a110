#include "gendisc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "gendisc/average_solver.hpp"
#include "gendisc/evaluator.hpp"
#include "gendisc/io.hpp"
#include "gendisc/ldp.hpp"
#include "gendisc/numeric.hpp"
#include "gendisc/risk_solver.hpp"

namespace gendisc::cli {

namespace {

using io::json;
namespace fs = std::filesystem;

const std::map<std::string, std::string> tasks = {
    {"solve-average", "average-reward solution and time-extended slices"},
    {"solve-risk", "risk-sensitive solution at --gamma"},
    {"evaluate", "exact (and optional Monte-Carlo) values of a policy at --horizon"},
    {"verify", "full verification suite on the model"},
    {"ldp-check", "large-deviation bound by path enumeration"},
    {"sweep-gamma", "lambda of a policy over a gamma grid"},
    {"gen-model", "random model with a kernel floor"},
};

template <typename T>
T get(const json& doc, const char* key) {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::ConfigError, std::string("config: field '") + key + "' has the wrong type");
    }
}

Model load(const ExperimentConfig& c) {
    if (c.model_path)
        return io::load_model(*c.model_path);
    if (c.generator)
        return gen_model(*c.generator);
    throw Error(ErrorCode::ConfigError, "no model: pass --model PATH or generator parameters");
}

json model_summary(const Model& m) {
    return {{"n_states", m.n_states()}, {"n_actions", m.n_actions()}, {"delta", ergodicity_coefficient(m)},
            {"reward_span", reward_span(m)}};
}

StationaryPolicy pick_policy(const ExperimentConfig& c, const Model& m) {
    if (!c.policy.empty()) {
        StationaryPolicy u(c.policy);
        u.validate(m);
        return u;
    }
    return relative_value_iteration(m, c.tol, 1'000'000).policy;
}

void emit(const ExperimentConfig& c, const json& report, std::ostream& out) {
    const std::string text = report.dump(2) + "\n";
    out << text;
    if (c.out_dir)
        io::write_file(fs::path(*c.out_dir) / "report.json", text);
}

void artifact(const ExperimentConfig& c, const std::string& name, const std::string& text) {
    if (c.out_dir)
        io::write_file(fs::path(*c.out_dir) / name, text);
}

int solve_average(const ExperimentConfig& c, std::ostream& out) {
    const Model m = load(c);
    const DiscountSchedule sched = io::parse_schedule(c.schedule);
    const SpanSolution sol = relative_value_iteration(m, c.tol, 1'000'000);
    const Index N = c.horizon.value_or(default_window(m, c.tol));
    const TimeExtendedSolution te = time_extended_solve(m, sched, c.k, N);
    json report;
    report["task"] = c.task;
    report["model"] = model_summary(m);
    report["schedule"] = io::schedule_to_json(sched);
    report["solution"] = io::to_json(sol);
    report["time_extended"] = {{"k", te.k},
                               {"N", te.N},
                               {"truncation_bound", te.truncation_bound},
                               {"weighted_average", vg_from_lambdas(te, sched, {N}).front()},
                               {"policy_k", io::to_json(te.policy_seq.front())}};
    artifact(c, "lambda_tilde.csv", io::lambda_tilde_csv(te, sched));
    emit(c, report, out);
    return Pass;
}

int solve_risk(const ExperimentConfig& c, std::ostream& out) {
    if (!c.gamma)
        throw Error(ErrorCode::ConfigError, "solve-risk needs --gamma");
    const Model m = load(c);
    const DiscountSchedule sched = io::parse_schedule(c.schedule);
    const RiskSolution sol = risk_relative_value_iteration(m, *c.gamma, std::max(c.tol, 1e-13), 1'000'000);
    const Index N = c.horizon.value_or(100);
    const RiskTimeExtendedSolution te = risk_time_extended_solve(m, sched, *c.gamma, c.k, N);
    json report;
    report["task"] = c.task;
    report["model"] = model_summary(m);
    report["schedule"] = io::schedule_to_json(sched);
    report["solution"] = io::to_json(sol);
    report["time_extended"] = {
        {"k", te.k},
        {"N", te.N},
        {"lambda_k", te.lambda_seq.front()},
        {"max_slice_residual", *std::max_element(te.slice_residual.begin(), te.slice_residual.end())},
        {"policy_k", io::to_json(te.policy_seq.front())}};
    emit(c, report, out);
    return Pass;
}

int evaluate(const ExperimentConfig& c, std::ostream& out) {
    const Model m = load(c);
    const DiscountSchedule sched = io::parse_schedule(c.schedule);
    const StationaryPolicy u = pick_policy(c, m);
    const TimeVaryingPolicy V = TimeVaryingPolicy::stationary(u, c.k);
    const Index n = c.horizon.value_or(1000);
    const SpanSolution pu = poisson_solve(m, u, c.tol);
    const double w_sup = pu.w.maxCoeff();

    json states = json::array();
    for (Index x = 0; x < m.n_states(); ++x) {
        json row;
        row["x"] = x;
        const EvaluationResult r = exact_discounted_value(m, V, sched, c.k, n, x);
        row["discounted_value"] = r.value;
        row["normalizer"] = r.normalizer;
        row["bound_slack"] = 2.0 * w_sup / r.normalizer;
        if (c.gamma)
            row["risk_value"] = exact_risk_value(m, V, sched, *c.gamma, c.k, n, x).value;
        if (c.reps > 0) {
            const SimulationResult s = simulate(m, V, sched, c.k, n, x, c.seed, c.reps, c.gamma);
            row["simulation"] = {{"reps", s.reps}, {"mean", s.discounted_mean}, {"stderr", s.discounted_stderr}};
            if (s.risk_value) {
                row["simulation"]["risk_value"] = *s.risk_value;
                row["simulation"]["risk_stderr"] = *s.risk_stderr;
            }
        }
        states.push_back(std::move(row));
    }

    std::vector<Index> grid;
    for (Index h = 1; h <= n; h *= 10)
        grid.push_back(h);
    if (grid.back() != n)
        grid.push_back(n);
    std::string csv = "n,J_n,bound\n";
    for (const auto& r : exact_discounted_path(m, V, sched, c.k, grid, 0))
        csv += std::to_string(r.n) + "," + io::format_double(r.value) + "," +
               io::format_double(2.0 * w_sup / r.normalizer) + "\n";
    artifact(c, "evaluation.csv", csv);

    json report;
    report["task"] = c.task;
    report["model"] = model_summary(m);
    report["schedule"] = io::schedule_to_json(sched);
    report["policy"] = io::to_json(u);
    report["lambda_u"] = pu.lambda;
    report["horizon"] = n;
    report["states"] = std::move(states);
    emit(c, report, out);
    return Pass;
}

std::vector<Index> ldp_grid(const ExperimentConfig& c, Index S) {
    if (!c.n_grid.empty())
        return c.n_grid;
    Index n_max = 14;
    if (S > 2)
        n_max = std::min<Index>(14, 1 + static_cast<Index>(std::floor(16.0 / std::log2(static_cast<double>(S)))));
    std::vector<Index> grid;
    for (Index n = n_max > 7 ? n_max - 6 : 1; n <= n_max; ++n)
        grid.push_back(n);
    return grid;
}

Eigen::VectorXd test_function(const ExperimentConfig& c, Index S) {
    if (!c.f.empty()) {
        if (c.f.size() != S)
            throw Error(ErrorCode::ConfigError, "--f must have one entry per state");
        return Eigen::Map<const Eigen::VectorXd>(c.f.data(), static_cast<Eigen::Index>(S));
    }
    Eigen::VectorXd f = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(S));
    f(0) = 2.0;
    return f;
}

// I(mu) ~ 0 and I(nu) bounded away from 0 for nu half way to the least
// likely vertex.
json rate_zero_checks(const Eigen::MatrixXd& P, bool& passed) {
    const Eigen::VectorXd mu = invariant_measure(P);
    const RateReport at_mu = rate_function(P, mu);
    Eigen::Index j = 0;
    mu.minCoeff(&j);
    Eigen::VectorXd nu = 0.5 * mu;
    nu(j) += 0.5;
    const double tv = 0.5 * (nu - mu).cwiseAbs().sum();
    const RateReport off = rate_function(P, nu);
    const bool ok_mu = at_mu.value <= 1e-6;
    const bool ok_nu = tv < 0.05 || off.value >= 1e-4;
    passed = passed && ok_mu && ok_nu;
    return {{"rate_at_invariant", at_mu.value},
            {"perturbed_tv", tv},
            {"rate_at_perturbed", off.value},
            {"passed", ok_mu && ok_nu}};
}

json ldp_section(const ExperimentConfig& c, const Model& m, const StationaryPolicy& u, const DiscountSchedule& sched,
                 bool& passed) {
    const Eigen::MatrixXd P = policy_kernel(m, u);
    const Eigen::VectorXd f = test_function(c, m.n_states());
    const std::vector<double> kappas = c.kappas.empty() ? std::vector<double>{0.02, 0.05} : c.kappas;
    const std::vector<Index> grid = ldp_grid(c, m.n_states());

    json section;
    json bounds = json::array();
    std::string csv;
    for (double kappa : kappas) {
        const LdpReport r = ldp_upper_bound_check(P, f, kappa, sched, c.k, grid);
        passed = passed && r.passed;
        bounds.push_back(io::to_json(r));
        const std::string block = io::ldp_csv(r);
        csv += csv.empty() ? block : block.substr(block.find('\n') + 1);
    }
    artifact(c, "ldp.csv", csv);
    section["upper_bound"] = std::move(bounds);

    json dv = json::array();
    const Index n_dv = c.horizon.value_or(1000);
    for (Index x = 0; x < m.n_states(); ++x) {
        const DvResult r = dv_supermartingale_check(P, f, sched, c.k, n_dv, x);
        passed = passed && r.pass;
        json row = io::to_json(r);
        row["x"] = x;
        dv.push_back(std::move(row));
    }
    section["supermartingale"] = std::move(dv);
    section["rate_zeros"] = rate_zero_checks(P, passed);
    return section;
}

json sweep_section(const ExperimentConfig& c, const Model& m, const StationaryPolicy& u, bool& passed) {
    const std::vector<double> gammas =
        c.gammas.empty() ? std::vector<double>{-1.0, -0.5, -0.1, 0.1, 0.5, 1.0} : c.gammas;
    const auto rows = gamma_sweep(m, u, gammas, 1e-13);
    bool monotone = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
        monotone = monotone && rows[i - 1].lambda <= rows[i].lambda + 1e-10;
    passed = passed && monotone;
    artifact(c, "sweep.csv", io::sweep_csv(rows));
    json table = json::array();
    for (const auto& r : rows)
        table.push_back({{"gamma", r.gamma}, {"lambda", r.lambda}, {"certificate", r.certificate},
                         {"residual", r.residual}});
    return {{"rows", std::move(table)}, {"monotone", monotone}};
}

int verify(const ExperimentConfig& c, std::ostream& out) {
    const Model m = load(c);
    const DiscountSchedule sched = io::parse_schedule(c.schedule);
    const double delta = ergodicity_coefficient(m);
    if (delta >= 1.0)
        throw Error(ErrorCode::NotErgodic, "verify needs ergodicity coefficient < 1");
    const std::vector<Index> horizons = c.horizons.empty() ? std::vector<Index>{100, 1000, 10000} : c.horizons;
    const double gamma = c.gamma.value_or(0.5);
    const Index n = c.horizon.value_or(1000);
    bool passed = true;
    json checks;

    const CheckReport t2 = theorem2_check(m, sched, c.k, horizons, c.panel_size, c.seed);
    passed = passed && t2.passed;
    checks["theorem2"] = io::to_json(t2);

    if (certify(m, gamma).kind == Certificate::Uncertified) {
        checks["theorem4"] = {{"name", "theorem4"}, {"skipped", "no certificate for gamma"}};
    } else {
        const CheckReport t4 = theorem4_check(m, sched, gamma, c.k, n, c.panel_size, c.seed);
        passed = passed && t4.passed;
        checks["theorem4"] = io::to_json(t4);
    }

    const SpanSolution opt = relative_value_iteration(m, c.tol, 1'000'000);
    std::vector<TimeVaryingPolicy> policies{TimeVaryingPolicy::stationary(opt.policy, c.k)};
    for (auto& p : random_policy_panel(m, c.k, 100, std::min<Index>(c.panel_size, 10), c.seed))
        policies.push_back(std::move(p));
    CheckReport sandwich;
    sandwich.name = "sandwich";
    for (std::size_t p = 0; p < policies.size(); ++p)
        for (double g : {0.1, 1.0, 5.0})
            for (Index h : {Index{1}, Index{10}, Index{100}})
                for (Index x = 0; x < m.n_states(); ++x)
                    for (const auto& a : sandwich_check(m, policies[p], sched, g, c.k, h, x).assertions)
                        sandwich.add("p=" + std::to_string(p) + " gamma=" + io::format_double(g) +
                                         " n=" + std::to_string(h) + " x=" + std::to_string(x) + " " + a.label,
                                     a.value, a.bound, a.pass);
    passed = passed && sandwich.passed;
    checks["sandwich"] = io::to_json(sandwich);

    checks["gamma_sweep"] = sweep_section(c, m, opt.policy, passed);
    checks["ldp"] = ldp_section(c, m, opt.policy, sched, passed);

    json report;
    report["task"] = c.task;
    report["model"] = model_summary(m);
    report["schedule"] = io::schedule_to_json(sched);
    report["seed"] = c.seed;
    report["checks"] = std::move(checks);
    report["passed"] = passed;
    emit(c, report, out);
    return passed ? Pass : AssertionFailure;
}

int ldp_check(const ExperimentConfig& c, std::ostream& out) {
    const Model m = load(c);
    const DiscountSchedule sched = io::parse_schedule(c.schedule);
    const StationaryPolicy u = pick_policy(c, m);
    bool passed = true;
    json report;
    report["task"] = c.task;
    report["model"] = model_summary(m);
    report["schedule"] = io::schedule_to_json(sched);
    report["policy"] = io::to_json(u);
    report["ldp"] = ldp_section(c, m, u, sched, passed);
    if (c.gamma) {
        const Theorem5Report t5 = theorem5_margin(m, u, sched, c.eps, *c.gamma, c.k, c.horizon.value_or(1000));
        passed = passed && t5.pass;
        report["theorem5"] = io::to_json(t5);
    }
    report["passed"] = passed;
    emit(c, report, out);
    return passed ? Pass : AssertionFailure;
}

int sweep_gamma(const ExperimentConfig& c, std::ostream& out) {
    const Model m = load(c);
    const StationaryPolicy u = pick_policy(c, m);
    bool passed = true;
    json report;
    report["task"] = c.task;
    report["model"] = model_summary(m);
    report["policy"] = io::to_json(u);
    report["sweep"] = sweep_section(c, m, u, passed);
    report["passed"] = passed;
    emit(c, report, out);
    return passed ? Pass : AssertionFailure;
}

int generate(const ExperimentConfig& c, std::ostream& out) {
    if (!c.generator)
        throw Error(ErrorCode::ConfigError, "gen-model needs --n-states, --n-actions, --min-entry");
    const Model m = gen_model(*c.generator);
    const std::string text = io::model_to_json(m).dump(2) + "\n";
    out << text;
    if (c.out_dir)
        io::write_file(fs::path(*c.out_dir) / "model.json", text);
    return Pass;
}

int exit_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidModel:
    case ErrorCode::InvalidSchedule:
    case ErrorCode::InvalidArgument:
        return ConfigFailure;
    case ErrorCode::AssertionFail:
    case ErrorCode::NoConvergence:
        return AssertionFailure;
    default:
        return PreconditionFailure;
    }
}

} // namespace

void apply_config(ExperimentConfig& c, const json& doc) {
    static const std::set<std::string> allowed = {
        "task",  "model", "generator", "schedule",   "gamma", "k",      "horizon", "horizons", "gammas", "eps",
        "tol",   "seed",  "panel_size", "reps",      "f",     "kappas", "n_grid",  "policy",   "out"};
    if (!doc.is_object())
        throw Error(ErrorCode::ConfigError, "config must be a JSON object");
    for (const auto& [key, value] : doc.items())
        if (!allowed.contains(key))
            throw Error(ErrorCode::ConfigError, "config: unknown field '" + key + "'");

    if (doc.contains("task"))
        c.task = get<std::string>(doc, "task");
    if (doc.contains("model"))
        c.model_path = get<std::string>(doc, "model");
    if (doc.contains("generator")) {
        const json& g = doc.at("generator");
        if (!g.is_object())
            throw Error(ErrorCode::ConfigError, "config: generator must be an object");
        for (const auto& [key, value] : g.items())
            if (key != "n_states" && key != "n_actions" && key != "min_entry" && key != "seed")
                throw Error(ErrorCode::ConfigError, "config: unknown generator field '" + key + "'");
        GeneratorSpec spec;
        spec.n_states = get<Index>(g, "n_states");
        spec.n_actions = get<Index>(g, "n_actions");
        spec.min_entry = get<double>(g, "min_entry");
        spec.seed = g.contains("seed") ? get<std::uint64_t>(g, "seed") : 0;
        c.generator = spec;
    }
    if (doc.contains("schedule"))
        c.schedule = doc.at("schedule").is_string() ? get<std::string>(doc, "schedule") : doc.at("schedule").dump();
    if (doc.contains("gamma"))
        c.gamma = get<double>(doc, "gamma");
    if (doc.contains("k"))
        c.k = get<Index>(doc, "k");
    if (doc.contains("horizon"))
        c.horizon = get<Index>(doc, "horizon");
    if (doc.contains("horizons"))
        c.horizons = get<std::vector<Index>>(doc, "horizons");
    if (doc.contains("gammas"))
        c.gammas = get<std::vector<double>>(doc, "gammas");
    if (doc.contains("eps"))
        c.eps = get<double>(doc, "eps");
    if (doc.contains("tol"))
        c.tol = get<double>(doc, "tol");
    if (doc.contains("seed"))
        c.seed = get<std::uint64_t>(doc, "seed");
    if (doc.contains("panel_size"))
        c.panel_size = get<Index>(doc, "panel_size");
    if (doc.contains("reps"))
        c.reps = get<Index>(doc, "reps");
    if (doc.contains("f"))
        c.f = get<std::vector<double>>(doc, "f");
    if (doc.contains("kappas"))
        c.kappas = get<std::vector<double>>(doc, "kappas");
    if (doc.contains("n_grid"))
        c.n_grid = get<std::vector<Index>>(doc, "n_grid");
    if (doc.contains("policy"))
        c.policy = get<std::vector<Index>>(doc, "policy");
    if (doc.contains("out"))
        c.out_dir = get<std::string>(doc, "out");
}

int run(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
    try {
        if (c.task == "solve-average")
            return solve_average(c, out);
        if (c.task == "solve-risk")
            return solve_risk(c, out);
        if (c.task == "evaluate")
            return evaluate(c, out);
        if (c.task == "verify")
            return verify(c, out);
        if (c.task == "ldp-check")
            return ldp_check(c, out);
        if (c.task == "sweep-gamma")
            return sweep_gamma(c, out);
        if (c.task == "gen-model")
            return generate(c, out);
        err << "unknown task '" << c.task << "'\n";
        return ConfigFailure;
    } catch (const Error& e) {
        err << "gendisc: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << "gendisc: " << e.what() << "\n";
        return ConfigFailure;
    }
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Solvers and verification suites for generally discounted controlled Markov chains"};
    app.require_subcommand(1);

    ExperimentConfig c;
    std::string config_path;
    std::optional<double> gamma;
    std::optional<Index> horizon;
    std::string model_path;
    std::string out_dir;
    Index n_states = 0;
    Index n_actions = 1;
    double min_entry = 0.05;

    app.add_option("--config", config_path, "JSON config; its fields override flags");
    app.add_option("--model", model_path, "model JSON file");
    app.add_option("--schedule", c.schedule, "unit | hyperbolic:h:r | tabulated:v0,v1,..[:divergent] | JSON");
    app.add_option("--gamma", gamma, "risk parameter");
    app.add_option("--horizon", horizon, "horizon n or window N");
    app.add_option("--seed", c.seed, "top-level seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--tol", c.tol, "solver tolerance");
    app.add_option("--k", c.k, "start index k");
    app.add_option("--eps", c.eps, "deviation epsilon");
    app.add_option("--panel", c.panel_size, "random policy panel size");
    app.add_option("--reps", c.reps, "Monte-Carlo replicates");
    app.add_option("--policy", c.policy, "stationary policy, one action per state")->delimiter(',');
    app.add_option("--horizons", c.horizons, "horizon grid")->delimiter(',');
    app.add_option("--gammas", c.gammas, "gamma grid")->delimiter(',');
    app.add_option("--f", c.f, "test function")->delimiter(',');
    app.add_option("--kappas", c.kappas, "thresholds")->delimiter(',');
    app.add_option("--n-grid", c.n_grid, "enumeration horizons")->delimiter(',');
    app.add_option("--n-states", n_states, "generator: states");
    app.add_option("--n-actions", n_actions, "generator: actions");
    app.add_option("--min-entry", min_entry, "generator: minimum kernel entry");

    for (const auto& [name, about] : tasks)
        app.add_subcommand(name, about)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Pass : ConfigFailure;
    }

    c.task = app.get_subcommands().front()->get_name();
    c.gamma = gamma;
    c.horizon = horizon;
    if (!model_path.empty())
        c.model_path = model_path;
    if (!out_dir.empty())
        c.out_dir = out_dir;
    if (n_states > 0)
        c.generator = GeneratorSpec{n_states, n_actions, min_entry, c.seed};

    if (!config_path.empty()) {
        try {
            std::ifstream in(config_path);
            if (!in)
                throw Error(ErrorCode::ConfigError, "cannot open config " + config_path);
            json doc;
            try {
                in >> doc;
            } catch (const json::exception&) {
                throw Error(ErrorCode::ConfigError, "config " + config_path + " is not valid JSON");
            }
            apply_config(c, doc);
        } catch (const Error& e) {
            err << "gendisc: " << e.what() << "\n";
            return ConfigFailure;
        }
    }
    return run(c, out, err);
}

} // namespace gendisc::cli
