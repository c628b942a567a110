#pragma once

#include <vector>

#include <Eigen/Core>

#include "gendisc/model.hpp"
#include "gendisc/schedule.hpp"

namespace gendisc {

/// Relative values and average reward of an additive fixed-point equation.
struct SpanSolution {
    Eigen::VectorXd w;          ///< relative values, min w = 0
    double lambda = 0.0;        ///< average reward per unit time
    double span_residual = 0.0; ///< span(Phi w - w) at the returned w
    Index iterations = 0;
    StationaryPolicy policy;    ///< argmax selector, ties toward the lowest action
    double delta = 0.0;         ///< contraction coefficient used for stopping
    double w_span_bound = 0.0;  ///< span(c)/(1 - delta)
};

/// Backward recursion of the time-extended equation on slices
/// i = k, ..., k+N-1 with terminal slice w(k+N, .) = 0.
struct TimeExtendedSolution {
    Index k = 0;
    Index N = 0;
    Eigen::MatrixXd w_grid;             ///< N x n_states, row j is slice k+j, each with min 0
    std::vector<double> lambda_tilde;   ///< lambda~(k+j), anchored at state 0
    std::vector<StationaryPolicy> policy_seq;
    double delta = 0.0;
    double reward_span = 0.0;
    double truncation_bound = 0.0;      ///< Delta^N span(c)/(1-Delta): slice k vs the infinite window

    /// Delta^{k+N-i} span(c)/(1-Delta), the truncation bound for slice i.
    double slice_truncation_bound(Index i) const;
    /// Selector for absolute time i as a time-varying control.
    TimeVaryingPolicy as_policy() const { return TimeVaryingPolicy(k, policy_seq); }
};

struct IterationOptions {
    double tol = 1e-12;
    Index max_iter = 1'000'000;
    Index anchor = 0;
};

/// Relative value iteration for the average-reward Bellman equation
/// w + lambda = max_a [c(., a) + P^a w]. Stops once
/// span(w_{t+1} - w_t) <= tol (1 - Delta) / Delta, which certifies the
/// iterate within tol of the fixed point in span.
/// Throws NotErgodic if Delta >= 1 and NoConvergence after max_iter.
SpanSolution relative_value_iteration(const Model& model, const IterationOptions& opts = {});
SpanSolution relative_value_iteration(const Model& model, double tol, Index max_iter);

/// Stationary distribution of P^u by a direct linear solve.
Eigen::VectorXd invariant_measure(const Model& model, const StationaryPolicy& u);
Eigen::VectorXd invariant_measure(const Eigen::MatrixXd& P);

/// Additive Poisson equation w + lambda = c_u + P^u w for a fixed policy.
SpanSolution poisson_solve(const Model& model, const StationaryPolicy& u, double tol = 1e-12);

struct EnumerationResult {
    double lambda = 0.0;
    StationaryPolicy best;
    Index policies = 0;
};

/// Exhaustive max over stationary policies of mu_u . c_u. Throws TooLarge
/// above 10^6 policies.
EnumerationResult policy_enumeration_oracle(const Model& model);

/// ceil(log(tol (1-Delta)/span c) / log Delta), at least 1.
Index default_window(const Model& model, double tol);

/// Time-extended discounted Bellman equation by backward recursion.
TimeExtendedSolution time_extended_solve(const Model& model, const DiscountSchedule& schedule, Index k, Index N);

/// Same recursion with the control fixed to a time-varying policy.
TimeExtendedSolution time_extended_poisson_solve(const Model& model, const TimeVaryingPolicy& policy,
                                                 const DiscountSchedule& schedule, Index k, Index N);

/// Weighted averages sum lambda~(i) phi(i) / sum phi(i) over i = k..k+n-1
/// for each n in n_grid (n <= N).
std::vector<double> vg_from_lambdas(const TimeExtendedSolution& sol, const DiscountSchedule& schedule,
                                    const std::vector<Index>& n_grid);

/// Phi w(x) = max_a [c(x,a) + P^a w (x)] with the selector, exposed for
/// contraction tests.
Eigen::VectorXd bellman_operator(const Model& model, const Eigen::VectorXd& w, StationaryPolicy* selector = nullptr);

} // namespace gendisc
