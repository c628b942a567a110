#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "gendisc/errors.hpp"

namespace gendisc {

using Index = std::size_t;

/// Finite controlled Markov chain: one row-stochastic kernel per action and a
/// bounded reward table c(x, a). Immutable after construction.
class Model {
public:
    /// Validates every invariant and throws Error(InvalidModel) on violation:
    /// kernels square and non-negative with rows summing to one within 1e-12,
    /// rewards finite, at least one state and one action. Rows are never
    /// renormalized.
    Model(std::vector<Eigen::MatrixXd> kernel, Eigen::MatrixXd reward);

    Index n_states() const noexcept { return static_cast<Index>(reward_.rows()); }
    Index n_actions() const noexcept { return static_cast<Index>(reward_.cols()); }

    const Eigen::MatrixXd& kernel(Index action) const { return kernel_.at(action); }
    const std::vector<Eigen::MatrixXd>& kernels() const noexcept { return kernel_; }

    /// n_states x n_actions, entry (x, a) = c(x, a).
    const Eigen::MatrixXd& reward() const noexcept { return reward_; }
    double reward(Index x, Index a) const { return reward_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a)); }

    double transition(Index a, Index x, Index y) const {
        return kernel_.at(a)(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    }

    /// Same kernels, rewards replaced.
    Model with_reward(Eigen::MatrixXd reward) const;

    static constexpr double row_sum_tolerance = 1e-12;

private:
    std::vector<Eigen::MatrixXd> kernel_;
    Eigen::MatrixXd reward_;
};

/// Deterministic stationary Markov control x -> u(x).
class StationaryPolicy {
public:
    StationaryPolicy() = default;
    explicit StationaryPolicy(std::vector<Index> actions) : actions_(std::move(actions)) {}

    static StationaryPolicy constant(Index n_states, Index action) {
        return StationaryPolicy(std::vector<Index>(n_states, action));
    }

    Index operator()(Index x) const { return actions_.at(x); }
    Index size() const noexcept { return actions_.size(); }
    const std::vector<Index>& actions() const noexcept { return actions_; }

    /// Throws InvalidArgument unless the policy covers every state with a valid action.
    void validate(const Model& model) const;

    friend bool operator==(const StationaryPolicy&, const StationaryPolicy&) = default;

private:
    std::vector<Index> actions_;
};

/// Markov control (u_k, u_{k+1}, ..., u_{k+N-1}) applied at absolute times
/// k, k+1, ...; the last entry repeats beyond the window.
class TimeVaryingPolicy {
public:
    TimeVaryingPolicy(Index start, std::vector<StationaryPolicy> entries);

    /// Stationary control viewed as a time-varying one starting at `start`.
    static TimeVaryingPolicy stationary(StationaryPolicy u, Index start = 0) {
        return TimeVaryingPolicy(start, {std::move(u)});
    }

    Index start() const noexcept { return start_; }
    Index window() const noexcept { return entries_.size(); }
    const std::vector<StationaryPolicy>& entries() const noexcept { return entries_; }

    /// Control used at absolute time i (i >= start).
    const StationaryPolicy& at(Index i) const;

    void validate(const Model& model) const;

private:
    Index start_;
    std::vector<StationaryPolicy> entries_;
};

/// Rows P^{u(x)}(x, .) stacked into one stochastic matrix.
Eigen::MatrixXd policy_kernel(const Model& model, const StationaryPolicy& u);

/// c(x, u(x)).
Eigen::VectorXd policy_reward(const Model& model, const StationaryPolicy& u);

/// The single-action model (P^u, c(., u(.))).
Model policy_model(const Model& model, const StationaryPolicy& u);

/// Max over row pairs of sum_y (row_i(y) - row_j(y))^+ for an arbitrary
/// stack of probability rows.
double ergodicity_coefficient(const Eigen::MatrixXd& rows);

/// Uniform ergodicity coefficient Delta over all (state, action) rows.
double ergodicity_coefficient(const Model& model);

struct DensityBounds {
    double M;               ///< smallest M >= 1 with 1/M <= n P^a(x,y) <= M
    double delta_bound;     ///< implied Delta <= 1 - 1/M
};

/// Densities with respect to the uniform measure on states. Throws FailsA3
/// when some kernel entry is zero.
DensityBounds density_bounds(const Model& model);

/// Minimal K with P^a(x,y) <= K P^a(x',y) for all a, x, x', y. Throws FailsB1
/// when two rows of the same action have different supports.
double equivalence_constant(const Model& model);

/// e^{|gamma| span(c)} * Delta; the risk iteration stays bounded when < 1.
double b2_margin(const Model& model, double gamma);

/// max c - min c over the whole reward table.
double reward_span(const Model& model);

/// max |c(x, a)|.
double reward_sup_norm(const Model& model);

} // namespace gendisc
