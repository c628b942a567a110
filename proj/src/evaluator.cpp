#include "gendisc/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "gendisc/average_solver.hpp"
#include "gendisc/numeric.hpp"
#include "gendisc/risk_solver.hpp"

namespace gendisc {

namespace {

using EIdx = Eigen::Index;

// Kernels and rewards for each distinct entry of a time-varying policy, so the
// forward passes do not rebuild them per step.
struct PolicyTables {
    std::vector<Eigen::MatrixXd> kernel;
    std::vector<Eigen::VectorXd> reward;
    const TimeVaryingPolicy* policy;

    PolicyTables(const Model& model, const TimeVaryingPolicy& p) : policy(&p) {
        p.validate(model);
        for (const auto& u : p.entries()) {
            kernel.push_back(policy_kernel(model, u));
            reward.push_back(policy_reward(model, u));
        }
    }

    std::size_t slot(Index i) const { return static_cast<std::size_t>(&policy->at(i) - policy->entries().data()); }
};

void check_start(const Model& model, const TimeVaryingPolicy& policy, Index k, Index n, Index x) {
    if (n < 1)
        throw Error(ErrorCode::InvalidArgument, "horizon n must be >= 1");
    if (x >= model.n_states())
        throw Error(ErrorCode::InvalidArgument, "start state out of range");
    if (policy.start() > k)
        throw Error(ErrorCode::InvalidArgument, "policy starts after time k");
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

} // namespace

EvaluationResult exact_discounted_value(const Model& model, const TimeVaryingPolicy& policy,
                                        const DiscountSchedule& schedule, Index k, Index n, Index x) {
    return exact_discounted_path(model, policy, schedule, k, {n}, x).front();
}

EvaluationResult exact_discounted_value(const Model& model, const StationaryPolicy& policy,
                                        const DiscountSchedule& schedule, Index k, Index n, Index x) {
    return exact_discounted_value(model, TimeVaryingPolicy::stationary(policy, k), schedule, k, n, x);
}

std::vector<EvaluationResult> exact_discounted_path(const Model& model, const TimeVaryingPolicy& policy,
                                                    const DiscountSchedule& schedule, Index k,
                                                    const std::vector<Index>& horizons, Index x) {
    if (horizons.empty())
        return {};
    const Index n_max = *std::max_element(horizons.begin(), horizons.end());
    for (Index n : horizons)
        check_start(model, policy, k, n, x);
    const PolicyTables tables(model, policy);

    std::vector<double> value_at(n_max + 1, 0.0);
    std::vector<double> norm_at(n_max + 1, 0.0);
    Eigen::RowVectorXd dist = Eigen::RowVectorXd::Zero(static_cast<EIdx>(model.n_states()));
    dist(static_cast<EIdx>(x)) = 1.0;
    CompensatedSum acc;
    CompensatedSum norm;
    for (Index j = 0; j < n_max; ++j) {
        const Index i = k + j;
        const double phi = schedule.phi(i);
        const std::size_t s = tables.slot(i);
        acc.add(phi * dist.dot(tables.reward[s]));
        norm.add(phi);
        value_at[j + 1] = acc.value();
        norm_at[j + 1] = norm.value();
        if (j + 1 < n_max)
            dist = dist * tables.kernel[s];
    }

    std::vector<EvaluationResult> out;
    out.reserve(horizons.size());
    for (Index n : horizons) {
        if (!(norm_at[n] > 0.0))
            throw Error(ErrorCode::InvalidSchedule, "discount weights sum to zero over the horizon");
        out.push_back({value_at[n] / norm_at[n], n, k, x, norm_at[n], std::nullopt});
    }
    return out;
}

EvaluationResult exact_risk_value(const Model& model, const TimeVaryingPolicy& policy, const DiscountSchedule& schedule,
                                  double gamma, Index k, Index n, Index x) {
    if (!std::isfinite(gamma) || std::abs(gamma) < min_abs_gamma)
        throw Error(ErrorCode::GammaZero, "risk functional needs a nonzero gamma");
    check_start(model, policy, k, n, x);
    const PolicyTables tables(model, policy);
    const EIdx S = static_cast<EIdx>(model.n_states());

    // q holds E[exp(gamma sum phi c); X_j = .] divided by e^{log_scale}
    Eigen::RowVectorXd q = Eigen::RowVectorXd::Zero(S);
    q(static_cast<EIdx>(x)) = 1.0;
    double log_scale = 0.0;
    CompensatedSum norm;
    for (Index j = 0; j < n; ++j) {
        const Index i = k + j;
        const double phi = schedule.phi(i);
        const std::size_t s = tables.slot(i);
        norm.add(phi);
        const Eigen::ArrayXd expo = gamma * phi * tables.reward[s].array();
        double peak = -std::numeric_limits<double>::infinity();
        for (EIdx y = 0; y < S; ++y)
            if (q(y) > 0.0)
                peak = std::max(peak, expo(y));
        q.array() *= (expo - peak).exp().transpose();
        log_scale += peak;
        if (j + 1 < n)
            q = q * tables.kernel[s];
        const double total = q.sum();
        q /= total;
        log_scale += std::log(total);
    }
    const double sum_phi = norm.value();
    if (!(sum_phi > 0.0))
        throw Error(ErrorCode::InvalidSchedule, "discount weights sum to zero over the horizon");
    return {log_scale / (gamma * sum_phi), n, k, x, sum_phi, std::nullopt};
}

EvaluationResult exact_risk_value(const Model& model, const StationaryPolicy& policy, const DiscountSchedule& schedule,
                                  double gamma, Index k, Index n, Index x) {
    return exact_risk_value(model, TimeVaryingPolicy::stationary(policy, k), schedule, gamma, k, n, x);
}

SimulationResult simulate(const Model& model, const TimeVaryingPolicy& policy, const DiscountSchedule& schedule,
                          Index k, Index n, Index x0, std::uint64_t seed, Index reps, std::optional<double> gamma,
                          unsigned threads) {
    if (reps < 1)
        throw Error(ErrorCode::InvalidArgument, "reps must be >= 1");
    check_start(model, policy, k, n, x0);
    if (gamma && (!std::isfinite(*gamma) || std::abs(*gamma) < min_abs_gamma))
        throw Error(ErrorCode::GammaZero, "risk estimate needs a nonzero gamma");
    const PolicyTables tables(model, policy);
    const Index S = model.n_states();

    std::vector<Eigen::MatrixXd> cumulative;
    for (const auto& P : tables.kernel) {
        Eigen::MatrixXd C = P;
        for (EIdx y = 1; y < C.cols(); ++y)
            C.col(y) += C.col(y - 1);
        cumulative.push_back(std::move(C));
    }
    std::vector<double> phi(n);
    std::vector<std::size_t> slot(n);
    for (Index j = 0; j < n; ++j) {
        phi[j] = schedule.phi(k + j);
        slot[j] = tables.slot(k + j);
    }
    const double sum_phi = phi_partial_sum(schedule, k, n);

    std::vector<double> totals(reps);
    auto run = [&](Index r) {
        std::seed_seq seq{static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(r)};
        std::mt19937_64 rng(seq);
        Index state = x0;
        CompensatedSum total;
        for (Index j = 0; j < n; ++j) {
            const std::size_t s = slot[j];
            total.add(phi[j] * tables.reward[s](static_cast<EIdx>(state)));
            if (j + 1 == n)
                break;
            const double u = uniform01(rng);
            const auto row = cumulative[s].row(static_cast<EIdx>(state));
            Index next = 0;
            while (next + 1 < S && u >= row(static_cast<EIdx>(next)))
                ++next;
            state = next;
        }
        totals[r] = total.value();
    };

    unsigned workers = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<Index>(workers, reps));
    if (workers <= 1) {
        for (Index r = 0; r < reps; ++r)
            run(r);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t)
            pool.emplace_back([&, t] {
                for (Index r = t; r < reps; r += workers)
                    run(r);
            });
        for (auto& th : pool)
            th.join();
    }

    SimulationResult out;
    out.reps = reps;
    CompensatedSum mean;
    for (double v : totals)
        mean.add(v / sum_phi);
    out.discounted_mean = mean.value() / static_cast<double>(reps);
    if (reps > 1) {
        CompensatedSum ss;
        for (double v : totals)
            ss.add((v / sum_phi - out.discounted_mean) * (v / sum_phi - out.discounted_mean));
        out.discounted_stderr = std::sqrt(ss.value() / static_cast<double>(reps - 1) / static_cast<double>(reps));
    }
    if (gamma) {
        std::vector<double> expo(reps);
        for (Index r = 0; r < reps; ++r)
            expo[r] = *gamma * totals[r];
        const double lse = log_sum_exp(expo);
        const double log_mean = lse - std::log(static_cast<double>(reps));
        out.risk_value = log_mean / (*gamma * sum_phi);
        // delta method on ln(mean Z) with Z = e^{gamma S} rescaled by its mean
        double se = 0.0;
        if (reps > 1) {
            CompensatedSum ss;
            for (double e : expo) {
                const double z = std::exp(e - log_mean) - 1.0;
                ss.add(z * z);
            }
            se = std::sqrt(ss.value() / static_cast<double>(reps - 1) / static_cast<double>(reps)) /
                 std::abs(*gamma * sum_phi);
        }
        out.risk_stderr = se;
    }
    return out;
}

void CheckReport::add(std::string label, double value, double bound, bool pass) {
    assertions.push_back({std::move(label), value, bound, pass});
    passed = passed && pass;
}

void CheckReport::require() const {
    for (const auto& a : assertions) {
        if (!a.pass) {
            std::ostringstream msg;
            msg.precision(17);
            msg << name << ": " << a.label << " value " << a.value << " exceeds bound " << a.bound;
            throw Error(ErrorCode::AssertionFail, msg.str());
        }
    }
}

std::vector<TimeVaryingPolicy> random_policy_panel(const Model& model, Index k, Index window, Index count,
                                                   std::uint64_t seed) {
    if (window < 1)
        throw Error(ErrorCode::InvalidArgument, "panel window must be >= 1");
    const Index S = model.n_states();
    const Index A = model.n_actions();
    std::vector<TimeVaryingPolicy> panel;
    panel.reserve(count);
    for (Index p = 0; p < count; ++p) {
        std::seed_seq seq{static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(p)};
        std::mt19937_64 rng(seq);
        std::vector<StationaryPolicy> entries;
        entries.reserve(window);
        for (Index j = 0; j < window; ++j) {
            std::vector<Index> actions(S);
            for (auto& a : actions)
                a = static_cast<Index>(rng() % A);
            entries.emplace_back(std::move(actions));
        }
        panel.emplace_back(k, std::move(entries));
    }
    return panel;
}

CheckReport theorem2_check(const Model& model, const DiscountSchedule& schedule, Index k,
                           const std::vector<Index>& horizon_grid, Index panel_size, std::uint64_t seed) {
    const SpanSolution sol = relative_value_iteration(model);
    const double w_sup = sol.w.maxCoeff();
    const double phi_k = schedule.phi(k);
    const double tol = sol.span_residual + 1e-12;

    CheckReport report;
    report.name = "theorem2";
    report.values = {{"lambda", sol.lambda}, {"w_sup", w_sup}, {"span_residual", sol.span_residual}};

    const TimeVaryingPolicy optimal = TimeVaryingPolicy::stationary(sol.policy, k);
    for (Index x = 0; x < model.n_states(); ++x) {
        for (const auto& r : exact_discounted_path(model, optimal, schedule, k, horizon_grid, x)) {
            const double bound = (phi_k + 1.0) * w_sup / r.normalizer + tol;
            const double gap = std::abs(r.value - sol.lambda);
            std::ostringstream label;
            label << "optimal x=" << x << " n=" << r.n;
            report.add(label.str(), gap, bound, gap <= bound);
        }
    }

    if (panel_size > 0 && !horizon_grid.empty()) {
        const Index window = std::min<Index>(*std::max_element(horizon_grid.begin(), horizon_grid.end()), 256);
        const auto panel = random_policy_panel(model, k, window, panel_size, seed);
        for (Index p = 0; p < panel.size(); ++p) {
            for (Index x = 0; x < model.n_states(); ++x) {
                for (const auto& r : exact_discounted_path(model, panel[p], schedule, k, horizon_grid, x)) {
                    const double bound = sol.lambda + w_sup * phi_k / r.normalizer + tol;
                    std::ostringstream label;
                    label << "panel p=" << p << " x=" << x << " n=" << r.n;
                    report.add(label.str(), r.value, bound, r.value <= bound);
                }
            }
        }
    }
    return report;
}

CheckReport theorem4_check(const Model& model, const DiscountSchedule& schedule, double gamma, Index k, Index n,
                           const std::vector<TimeVaryingPolicy>& panel) {
    if (!(gamma > 0.0))
        throw Error(ErrorCode::InvalidArgument, "theorem4_check needs gamma > 0");
    const RiskSolution sol = risk_relative_value_iteration(model, gamma);
    if (sol.certificate.kind == Certificate::Uncertified)
        throw Error(ErrorCode::NoCertificate, "neither equivalent rows nor e^{span(gamma c)} Delta < 1 holds");
    const double w_sup = sol.w.maxCoeff();
    const double phi_k = schedule.phi(k);
    const double phi_last = schedule.phi(k + n - 1);
    const double sum_phi = phi_partial_sum(schedule, k, n);

    CheckReport report;
    report.name = "theorem4";
    report.values = {{"gamma", gamma},
                     {"lambda_gamma", sol.lambda},
                     {"w_sup", w_sup},
                     {"residual", sol.residual},
                     {"certificate_bound", sol.certificate.bound}};

    auto check = [&](const TimeVaryingPolicy& V, const std::string& tag) {
        for (Index x = 0; x < model.n_states(); ++x) {
            const EvaluationResult r = exact_risk_value(model, V, schedule, gamma, k, n, x);
            const double slack =
                (phi_k * sol.w(static_cast<EIdx>(x)) + w_sup * (phi_k - phi_last)) / (gamma * sum_phi);
            const double bound = sol.lambda + slack + sol.residual / gamma + 1e-12;
            std::ostringstream label;
            label << tag << " x=" << x << " n=" << n;
            report.add(label.str(), r.value, bound, r.value <= bound);
        }
    };
    check(TimeVaryingPolicy::stationary(sol.policy, k), "optimal");
    for (Index p = 0; p < panel.size(); ++p)
        check(panel[p], "panel p=" + std::to_string(p));
    return report;
}

CheckReport theorem4_check(const Model& model, const DiscountSchedule& schedule, double gamma, Index k, Index n,
                           Index panel_size, std::uint64_t seed) {
    const auto panel = random_policy_panel(model, k, std::min<Index>(n, 256), panel_size, seed);
    return theorem4_check(model, schedule, gamma, k, n, panel);
}

CheckReport sandwich_check(const Model& model, const TimeVaryingPolicy& policy, const DiscountSchedule& schedule,
                           double gamma, Index k, Index n, Index x) {
    if (!(gamma > 0.0))
        throw Error(ErrorCode::InvalidArgument, "sandwich_check needs gamma > 0");
    const double lo = exact_risk_value(model, policy, schedule, -gamma, k, n, x).value;
    const double mid = exact_discounted_value(model, policy, schedule, k, n, x).value;
    const double hi = exact_risk_value(model, policy, schedule, gamma, k, n, x).value;
    constexpr double tol = 1e-12;

    CheckReport report;
    report.name = "sandwich";
    report.values = {{"gamma", gamma}, {"risk_averse", lo}, {"neutral", mid}, {"risk_seeking", hi}};
    report.add("risk_averse <= neutral", lo, mid + tol, lo <= mid + tol);
    report.add("neutral <= risk_seeking", mid, hi + tol, mid <= hi + tol);
    return report;
}

} // namespace gendisc
