// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gendisc/average_solver.hpp"
#include "gendisc/evaluator.hpp"
#include "gendisc/generator.hpp"
#include "gendisc/ldp.hpp"
#include "gendisc/risk_solver.hpp"
#include "oracles.hpp"

using namespace gendisc;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

const StationaryPolicy only{std::vector<Index>{0, 0}};

Verdict average_reward_reference() {
    const auto t0 = Clock::now();
    const auto sol = relative_value_iteration(oracle::reference_model());
    const double secs = seconds_since(t0);
    const double el = std::abs(sol.lambda - 2.0 / 3.0);
    const double ew = std::max(std::abs(sol.w(0) - 4.0 / 3.0), std::abs(sol.w(1)));
    return {el <= 1e-10 && ew <= 1e-9 && secs < 1.0,
            "|lambda-2/3|=" + fmt(el) + " max|w-(4/3,0)|=" + fmt(ew) + " time=" + fmt(secs) + "s"};
}

Verdict enumeration_equivalence() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Model m = gen_model({3, 2, 0.05, seed});
        worst = std::max(worst, std::abs(relative_value_iteration(m).lambda - policy_enumeration_oracle(m).lambda));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-8 && secs < 10.0, "max gap=" + fmt(worst) + " over 50 models, time=" + fmt(secs) + "s"};
}

Verdict finite_horizon_optimality() {
    const auto t0 = Clock::now();
    const Model ref = oracle::reference_model();
    const auto s = DiscountSchedule::hyperbolic(1, 1);
    const auto sol = relative_value_iteration(ref);
    const double wn = sol.w.cwiseAbs().maxCoeff();
    const std::vector<Index> ns{100, 1000, 10000, 100000};
    double worst_ratio = 0.0;
    for (Index k : {0u, 5u})
        for (Index x = 0; x < 2; ++x)
            for (const auto& r : exact_discounted_path(ref, TimeVaryingPolicy::stationary(sol.policy, k), s, k, ns, x))
                worst_ratio = std::max(worst_ratio, std::abs(r.value - sol.lambda) / (2.0 * wn / r.normalizer));
    const double secs = seconds_since(t0);
    return {worst_ratio <= 1.0 && secs < 30.0,
            "max |J_n-lambda| / (2||w||/sum phi)=" + fmt(worst_ratio) + " time=" + fmt(secs) + "s"};
}

Verdict risk_oracle() {
    double worst = 0.0;
    int certified = 0;
    std::mt19937_64 rng(2024);
    for (std::uint64_t seed = 0; certified < 20 && seed < 200; ++seed) {
        const Model m = gen_model({3, 2, 0.05, seed});
        std::vector<Index> acts(3);
        for (auto& a : acts)
            a = rng() % 2;
        const StationaryPolicy u(acts);
        const Model pm = policy_model(m, u);
        bool ok = true;
        for (double g : {1.0, -1.0, 0.5, -0.5, 0.1, -0.1})
            ok = ok && certify(pm, g).kind != Certificate::Uncertified;
        if (!ok)
            continue;
        ++certified;
        for (double g : {1.0, -1.0, 0.5, -0.5, 0.1, -0.1}) {
            const double lp = multiplicative_poisson_solve(m, u, g).lambda;
            const double eig = oracle::risk_lambda_eigen(policy_kernel(m, u), policy_reward(m, u), g);
            worst = std::max({worst, std::abs(lp - perron_oracle(m, u, g)), std::abs(lp - eig)});
        }
    }
    Eigen::MatrixXd Q(2, 2);
    Q << 0.75 * std::exp(1.0), 0.25 * std::exp(1.0), 0.5, 0.5;
    const double closed = std::log(oracle::perron_2x2(Q));
    const double ref_gap = std::abs(multiplicative_poisson_solve(oracle::reference_model(), only, 1.0).lambda - closed);
    return {certified == 20 && worst <= 1e-8 && ref_gap <= 1e-9,
            std::to_string(certified) + " models, max gap=" + fmt(worst) + ", reference gamma=1 lambda=" +
                fmt(closed) + " gap=" + fmt(ref_gap)};
}

Verdict risk_upper_bound() {
    const auto s = DiscountSchedule::hyperbolic(1, 1);
    std::vector<Model> models{oracle::reference_model()};
    for (std::uint64_t seed = 0; seed < 3; ++seed)
        models.push_back(gen_model({3, 2, 0.05, seed}));
    Index checked = 0, violations = 0;
    for (const auto& m : models)
        for (double g : {0.5, 1.0}) {
            const auto r = theorem4_check(m, s, g, 0, 1000, 100, 11);
            for (const auto& a : r.assertions) {
                ++checked;
                violations += a.pass ? 0 : 1;
            }
        }
    return {violations == 0, std::to_string(checked) + " evaluations over " + std::to_string(models.size()) +
                                 " models, violations=" + std::to_string(violations)};
}

Verdict sandwich() {
    std::vector<Model> models{oracle::reference_model()};
    for (std::uint64_t seed = 0; seed < 5; ++seed)
        models.push_back(gen_model({3, 2, 0.05, seed}));
    const std::vector<DiscountSchedule> schedules{DiscountSchedule::hyperbolic(1, 1), DiscountSchedule::unit(),
                                                  DiscountSchedule::hyperbolic(2, 0.5)};
    Index checked = 0, violations = 0;
    for (Index mi = 0; mi < models.size(); ++mi) {
        const Model& m = models[mi];
        auto panel = random_policy_panel(m, 0, 100, 10, mi);
        panel.push_back(TimeVaryingPolicy::stationary(relative_value_iteration(m).policy));
        for (const auto& s : schedules)
            for (const auto& V : panel)
                for (double g : {0.1, 1.0, 5.0})
                    for (Index n : {1u, 10u, 100u})
                        for (Index x = 0; x < m.n_states(); ++x) {
                            ++checked;
                            violations += sandwich_check(m, V, s, g, 0, n, x).passed ? 0 : 1;
                        }
    }
    return {violations == 0, std::to_string(checked) + " orderings, violations=" + std::to_string(violations)};
}

Verdict risk_averse_limit() {
    const Model ref = oracle::reference_model();
    const double lu = 2.0 / 3.0;
    std::vector<double> C;
    for (double g : {-1e-1, -1e-2, -1e-3, -1e-4})
        C.push_back(std::abs(multiplicative_poisson_solve(ref, only, g).lambda - lu) / std::abs(g));
    const auto [lo, hi] = std::minmax_element(C.begin(), C.end());
    const double variation = (*hi - *lo) / *lo;

    Eigen::VectorXd cu(2);
    cu << 1.0, 0.0;
    const double e = rate_inf_over_deviation_set(ref.kernel(0), cu, 0.1).e;
    const double gamma = -std::min(0.01, e / 4.0);
    const auto r = theorem5_margin(ref, only, DiscountSchedule::hyperbolic(1, 1), 0.1, gamma, 0, 1000);
    const auto ru = theorem5_margin(ref, only, DiscountSchedule::unit(), 0.1, gamma, 0, 1000);
    return {variation < 0.25 && r.pass && ru.pass,
            "C in [" + fmt(*lo) + ", " + fmt(*hi) + "] variation=" + fmt(variation) + "; gamma=" + fmt(gamma) +
                " hyperbolic value=" + fmt(r.value) + " >= " + fmt(r.lower_bound) + ", unit value=" + fmt(ru.value) +
                " >= " + fmt(ru.lower_bound)};
}

Verdict supermartingale() {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> U(1.0, 10.0);
    Index checked = 0, violations = 0;
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const Eigen::MatrixXd P = i % 2 == 0 ? oracle::reference_model().kernel(0)
                                             : gen_model({3, 1, 0.05, static_cast<std::uint64_t>(i)}).kernel(0);
        Eigen::VectorXd f(P.rows());
        for (Eigen::Index j = 0; j < f.size(); ++j)
            f(j) = U(rng);
        f /= f.minCoeff();
        for (const auto& s : {DiscountSchedule::unit(), DiscountSchedule::hyperbolic(1, 1)}) {
            const auto r = dv_supermartingale_check(P, f, s, 0, 1000, static_cast<Index>(i) % P.rows());
            ++checked;
            violations += r.pass ? 0 : 1;
            worst = std::max(worst, r.lhs / r.d_f);
        }
    }
    return {violations == 0, std::to_string(checked) + " checks, max lhs/d_f=" + fmt(worst) +
                                 ", violations=" + std::to_string(violations)};
}

Verdict ldp_bound() {
    Eigen::VectorXd f(2);
    f << 2.0, 1.0;
    bool ok = true;
    std::string detail;
    for (double kappa : {0.02, 0.05}) {
        const auto r = ldp_upper_bound_check(oracle::reference_model().kernel(0), f, kappa,
                                             DiscountSchedule::hyperbolic(1, 1), 0, {8, 9, 10, 11, 12, 13, 14});
        ok = ok && r.bound_pass && r.trend_pass;
        double worst = 0.0;
        for (const auto& row : r.rows)
            worst = std::max(worst, row.q_exact / row.bound);
        detail += "kappa=" + fmt(kappa) + ": max Q/bound=" + fmt(worst) + " trend=" + (r.trend_pass ? "ok" : "broken") +
                  "; ";
    }
    return {ok, detail};
}

Verdict rate_zeros() {
    double at_mu = 0.0, off_min = INFINITY;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Model m = gen_model({2 + seed % 4, 1, 0.05, seed});
        const Eigen::MatrixXd& P = m.kernel(0);
        const Eigen::VectorXd mu = oracle::stationary_eigen(P);
        at_mu = std::max(at_mu, rate_function(P, mu).value);
        Eigen::Index j = 0;
        mu.minCoeff(&j);
        Eigen::VectorXd nu = 0.5 * mu;
        nu(j) += 0.5;
        if (0.5 * (nu - mu).cwiseAbs().sum() >= 0.05)
            off_min = std::min(off_min, rate_function(P, nu).value);
    }
    std::mt19937_64 rng(505);
    RateOptions opts;
    opts.grid = false;
    double grid_gap = 0.0;
    for (int t = 0; t < 20; ++t) {
        const Eigen::MatrixXd P = gen_model({2, 1, 0.05, 1000 + static_cast<std::uint64_t>(t)}).kernel(0);
        const Eigen::VectorXd nu = oracle::random_probability(rng, 2);
        grid_gap = std::max(grid_gap, std::abs(rate_function(P, nu, opts).value -
                                               oracle::rate_grid_2state(P, nu, rate_log_range)));
    }
    return {at_mu <= 1e-6 && off_min >= 1e-4 && grid_gap <= 1e-6,
            "max I(mu)=" + fmt(at_mu) + " min perturbed I=" + fmt(off_min) + " max optimizer-grid gap=" + fmt(grid_gap)};
}

std::string run_binary(const std::string& cmd, int& status) {
    std::string text;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        status = -1;
        return text;
    }
    char buf[4096];
    while (const std::size_t got = fread(buf, 1, sizeof buf, pipe))
        text.append(buf, got);
    status = pclose(pipe);
    return text;
}

Verdict determinism() {
    const fs::path root = fs::temp_directory_path() / "gendisc_acceptance";
    fs::remove_all(root);
    const std::string base = std::string(GENDISC_CLI_PATH) + " verify --model " + GENDISC_DATA_DIR +
                             "/reference_model.json --seed 3 --out ";
    int s1 = 0, s2 = 0;
    const std::string a = run_binary(base + (root / "a").string(), s1);
    const std::string b = run_binary(base + (root / "b").string(), s2);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    };
    const bool files = slurp(root / "a" / "report.json") == slurp(root / "b" / "report.json");
    const bool same = !a.empty() && a == b && files;
    fs::remove_all(root);
    return {same && s1 == 0 && s2 == 0, std::string("stdout ") + (a == b ? "identical" : "differs") + ", report.json " +
                                            (files ? "identical" : "differs") + ", exit " + std::to_string(s1) + "/" +
                                            std::to_string(s2) + ", " + std::to_string(a.size()) + " bytes"};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"average-reward solution on the reference model", average_reward_reference},
        {"value iteration agrees with policy enumeration", enumeration_equivalence},
        {"finite-horizon optimality bound (hyperbolic)", finite_horizon_optimality},
        {"multiplicative Poisson vs Perron root", risk_oracle},
        {"risk-seeking upper bound over policy panels", risk_upper_bound},
        {"risk-averse / neutral / risk-seeking ordering", sandwich},
        {"risk-averse limit and 2-eps margin", risk_averse_limit},
        {"exponential supermartingale bound", supermartingale},
        {"large-deviation upper bound by path enumeration", ldp_bound},
        {"rate function zeros and grid agreement", rate_zeros},
        {"verify reports are byte-identical", determinism},
    };
    int failures = 0;
    for (Index i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failures += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << v.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - static_cast<Index>(failures)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failures == 0 ? 0 : 1;
}
