#include "gendisc/average_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/LU>

#include "gendisc/numeric.hpp"

namespace gendisc {

namespace {

using EIdx = Eigen::Index;

// Actions whose value is within this (relative) distance of the max count as
// tied; the lowest index among them is selected.
constexpr double tie_tolerance = 1e-12;

// Evaluates max_a [scale * c(x,a) + P^a next (x)] (or the fixed action when
// `fixed` is given) for every x.
Eigen::VectorXd backup(const Model& model, const Eigen::VectorXd& next, double scale,
                       const StationaryPolicy* fixed, StationaryPolicy* selector) {
    const EIdx n = static_cast<EIdx>(model.n_states());
    Eigen::VectorXd out(n);
    std::vector<Index> chosen(static_cast<std::size_t>(n), 0);
    for (EIdx x = 0; x < n; ++x) {
        const Index xs = static_cast<Index>(x);
        if (fixed != nullptr) {
            const Index a = (*fixed)(xs);
            out(x) = scale * model.reward(xs, a) + model.kernel(a).row(x).dot(next);
            chosen[xs] = a;
            continue;
        }
        double best = -std::numeric_limits<double>::infinity();
        std::vector<double> q(model.n_actions());
        for (Index a = 0; a < model.n_actions(); ++a) {
            q[a] = scale * model.reward(xs, a) + model.kernel(a).row(x).dot(next);
            best = std::max(best, q[a]);
        }
        const double cut = best - tie_tolerance * std::max(1.0, std::abs(best));
        Index pick = 0;
        while (q[pick] < cut)
            ++pick;
        out(x) = best;
        chosen[xs] = pick;
    }
    if (selector != nullptr)
        *selector = StationaryPolicy(std::move(chosen));
    return out;
}

SpanSolution iterate_relative(const Model& model, const StationaryPolicy* fixed, double delta,
                              const IterationOptions& opts) {
    if (!(opts.tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
    if (opts.anchor >= model.n_states())
        throw Error(ErrorCode::InvalidArgument, "anchor state out of range");
    if (delta >= 1.0) {
        std::ostringstream msg;
        msg << "ergodicity coefficient " << delta << " >= 1";
        throw Error(ErrorCode::NotErgodic, msg.str());
    }
    const EIdx n = static_cast<EIdx>(model.n_states());
    const EIdx anchor = static_cast<EIdx>(opts.anchor);
    const double stop = opts.tol * (1.0 - delta) / std::max(delta, 1e-300);

    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    Index it = 0;
    while (it < opts.max_iter) {
        ++it;
        Eigen::VectorXd v = backup(model, w, 1.0, fixed, nullptr);
        v.array() -= v(anchor);
        const double step = span_seminorm(Eigen::VectorXd(v - w));
        w = std::move(v);
        if (step <= stop)
            break;
    }

    SpanSolution sol;
    const Eigen::VectorXd tw = backup(model, w, 1.0, fixed, &sol.policy);
    sol.span_residual = span_seminorm(Eigen::VectorXd(tw - w));
    if (sol.span_residual > opts.tol) {
        std::ostringstream msg;
        msg << "span residual " << sol.span_residual << " after " << it << " iterations";
        throw Error(ErrorCode::NoConvergence, msg.str());
    }
    sol.lambda = tw(anchor) - w(anchor);
    sol.w = w.array() - w.minCoeff();
    sol.iterations = it;
    sol.delta = delta;
    double cspan = reward_span(model);
    if (fixed != nullptr)
        cspan = span_seminorm(policy_reward(model, *fixed));
    sol.w_span_bound = cspan / (1.0 - delta);
    return sol;
}

TimeExtendedSolution backward_recursion(const Model& model, const DiscountSchedule& schedule, Index k, Index N,
                                        const TimeVaryingPolicy* policy) {
    if (N < 1)
        throw Error(ErrorCode::InvalidArgument, "window length N must be >= 1");
    const double delta = ergodicity_coefficient(model);
    if (delta >= 1.0)
        throw Error(ErrorCode::NotErgodic, "ergodicity coefficient >= 1");
    const EIdx n = static_cast<EIdx>(model.n_states());

    TimeExtendedSolution sol;
    sol.k = k;
    sol.N = N;
    sol.delta = delta;
    sol.reward_span = reward_span(model);
    sol.truncation_bound = std::pow(delta, static_cast<double>(N)) * sol.reward_span / (1.0 - delta);
    sol.w_grid.resize(static_cast<EIdx>(N), n);
    sol.lambda_tilde.assign(N, 0.0);
    sol.policy_seq.assign(N, StationaryPolicy{});

    Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
    for (Index j = N; j-- > 0;) {
        const Index i = k + j;
        const double phi = schedule.phi(i);
        if (!(phi > 0.0)) {
            std::ostringstream msg;
            msg << "phi(" << i << ") = " << phi << " is not positive";
            throw Error(ErrorCode::InvalidSchedule, msg.str());
        }
        const StationaryPolicy* fixed = policy != nullptr ? &policy->at(i) : nullptr;
        Eigen::VectorXd v = backup(model, next, phi, fixed, &sol.policy_seq[j]);
        sol.lambda_tilde[j] = v(0) / phi;
        sol.w_grid.row(static_cast<EIdx>(j)) = (v.array() - v.minCoeff()).transpose();
        v.array() -= v(0);
        next = std::move(v);
    }
    return sol;
}

} // namespace

double TimeExtendedSolution::slice_truncation_bound(Index i) const {
    if (i < k || i >= k + N)
        throw Error(ErrorCode::InvalidArgument, "slice outside the solved window");
    return std::pow(delta, static_cast<double>(k + N - i)) * reward_span / (1.0 - delta);
}

Eigen::VectorXd bellman_operator(const Model& model, const Eigen::VectorXd& w, StationaryPolicy* selector) {
    return backup(model, w, 1.0, nullptr, selector);
}

SpanSolution relative_value_iteration(const Model& model, const IterationOptions& opts) {
    return iterate_relative(model, nullptr, ergodicity_coefficient(model), opts);
}

SpanSolution relative_value_iteration(const Model& model, double tol, Index max_iter) {
    return relative_value_iteration(model, IterationOptions{tol, max_iter, 0});
}

Eigen::VectorXd invariant_measure(const Eigen::MatrixXd& P) {
    const EIdx n = P.rows();
    if (ergodicity_coefficient(P) >= 1.0)
        throw Error(ErrorCode::NotErgodic, "kernel has ergodicity coefficient 1; invariant measure not unique");
    Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
    A.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::VectorXd mu = A.fullPivLu().solve(b);
    // round-off can leave tiny negatives on transient states
    mu = mu.cwiseMax(0.0);
    return mu / mu.sum();
}

Eigen::VectorXd invariant_measure(const Model& model, const StationaryPolicy& u) {
    return invariant_measure(policy_kernel(model, u));
}

SpanSolution poisson_solve(const Model& model, const StationaryPolicy& u, double tol) {
    u.validate(model);
    const double delta_u = ergodicity_coefficient(policy_kernel(model, u));
    return iterate_relative(model, &u, delta_u, IterationOptions{tol, 1'000'000, 0});
}

EnumerationResult policy_enumeration_oracle(const Model& model) {
    constexpr double limit = 1e6;
    const Index S = model.n_states();
    const Index A = model.n_actions();
    if (static_cast<double>(S) * std::log(static_cast<double>(A)) > std::log(limit) + 1e-12) {
        std::ostringstream msg;
        msg << A << "^" << S << " stationary policies exceed the enumeration limit";
        throw Error(ErrorCode::TooLarge, msg.str());
    }

    EnumerationResult out;
    out.lambda = -std::numeric_limits<double>::infinity();
    std::vector<Index> digits(S, 0);
    while (true) {
        const StationaryPolicy u(digits);
        const Eigen::VectorXd mu = invariant_measure(model, u);
        const double value = mu.dot(policy_reward(model, u));
        ++out.policies;
        if (value > out.lambda) {
            out.lambda = value;
            out.best = u;
        }
        Index pos = 0;
        while (pos < S && ++digits[pos] == A)
            digits[pos++] = 0;
        if (pos == S)
            break;
    }
    return out;
}

Index default_window(const Model& model, double tol) {
    const double delta = ergodicity_coefficient(model);
    const double cspan = reward_span(model);
    if (delta == 0.0 || cspan == 0.0)
        return 1;
    if (delta >= 1.0)
        throw Error(ErrorCode::NotErgodic, "ergodicity coefficient >= 1");
    const double n = std::ceil(std::log(tol * (1.0 - delta) / cspan) / std::log(delta));
    return n < 1.0 ? 1 : static_cast<Index>(n);
}

TimeExtendedSolution time_extended_solve(const Model& model, const DiscountSchedule& schedule, Index k, Index N) {
    return backward_recursion(model, schedule, k, N, nullptr);
}

TimeExtendedSolution time_extended_poisson_solve(const Model& model, const TimeVaryingPolicy& policy,
                                                 const DiscountSchedule& schedule, Index k, Index N) {
    policy.validate(model);
    return backward_recursion(model, schedule, k, N, &policy);
}

std::vector<double> vg_from_lambdas(const TimeExtendedSolution& sol, const DiscountSchedule& schedule,
                                    const std::vector<Index>& n_grid) {
    std::vector<double> out;
    out.reserve(n_grid.size());
    for (Index n : n_grid) {
        if (n < 1 || n > sol.N) {
            std::ostringstream msg;
            msg << "horizon " << n << " outside the solved window [1, " << sol.N << "]";
            throw Error(ErrorCode::InvalidArgument, msg.str());
        }
    }
    // one pass over the window, reading off prefix averages at requested n
    std::vector<Index> sorted = n_grid;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> at(sol.N + 1, 0.0);
    CompensatedSum num;
    CompensatedSum den;
    for (Index j = 0; j < (sorted.empty() ? 0 : sorted.back()); ++j) {
        const double phi = schedule.phi(sol.k + j);
        num.add(sol.lambda_tilde[j] * phi);
        den.add(phi);
        at[j + 1] = num.value() / den.value();
    }
    for (Index n : n_grid)
        out.push_back(at[n]);
    return out;
}

} // namespace gendisc
