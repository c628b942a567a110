#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gendisc/model.hpp"
#include "gendisc/schedule.hpp"

namespace gendisc {

struct EvaluationResult {
    double value = 0.0;
    Index n = 0;
    Index k = 0;
    Index x = 0;
    double normalizer = 0.0;            ///< sum_{i=k}^{k+n-1} phi(i)
    std::optional<double> bound_slack;  ///< certified distance to the limit, when known
};

/// (sum phi)^-1 E[sum_{i=k}^{k+n-1} phi(i) c(X_{i-k}, a_{i-k})] by forward
/// propagation of the state distribution. The policy is queried at absolute
/// times k, ..., k+n-1, so policy.start() must not exceed k.
EvaluationResult exact_discounted_value(const Model& model, const TimeVaryingPolicy& policy,
                                        const DiscountSchedule& schedule, Index k, Index n, Index x);
EvaluationResult exact_discounted_value(const Model& model, const StationaryPolicy& policy,
                                        const DiscountSchedule& schedule, Index k, Index n, Index x);

/// exact_discounted_value at every horizon in `horizons` from a single
/// forward pass; results follow the order of `horizons`.
std::vector<EvaluationResult> exact_discounted_path(const Model& model, const TimeVaryingPolicy& policy,
                                                    const DiscountSchedule& schedule, Index k,
                                                    const std::vector<Index>& horizons, Index x);

/// (gamma sum phi)^-1 ln E[exp(gamma sum phi(i) c)], computed by a rescaled
/// forward recursion. Throws GammaZero for |gamma| < min_abs_gamma.
EvaluationResult exact_risk_value(const Model& model, const TimeVaryingPolicy& policy, const DiscountSchedule& schedule,
                                  double gamma, Index k, Index n, Index x);
EvaluationResult exact_risk_value(const Model& model, const StationaryPolicy& policy, const DiscountSchedule& schedule,
                                  double gamma, Index k, Index n, Index x);

struct SimulationResult {
    Index reps = 0;
    double discounted_mean = 0.0;
    double discounted_stderr = 0.0;
    std::optional<double> risk_value;   ///< plug-in estimate, present when gamma was given
    std::optional<double> risk_stderr;  ///< delta-method standard error
};

/// Monte-Carlo estimate over `reps` independent paths from x0. Replicate r
/// draws from mt19937_64 seeded with seed_seq{seed, r}, so the result does
/// not depend on `threads` (0 = hardware concurrency).
SimulationResult simulate(const Model& model, const TimeVaryingPolicy& policy, const DiscountSchedule& schedule,
                          Index k, Index n, Index x0, std::uint64_t seed, Index reps,
                          std::optional<double> gamma = std::nullopt, unsigned threads = 0);

struct Assertion {
    std::string label;
    double value = 0.0;
    double bound = 0.0;
    bool pass = true;
};

struct CheckReport {
    std::string name;
    bool passed = true;
    std::vector<Assertion> assertions;
    std::vector<std::pair<std::string, double>> values;

    void add(std::string label, double value, double bound, bool pass);
    /// Throws AssertionFail naming the first violated assertion.
    void require() const;
};

/// `count` policies on the slices k..k+window-1, actions uniform per state
/// and slice; policy p draws from seed_seq{seed, p}.
std::vector<TimeVaryingPolicy> random_policy_panel(const Model& model, Index k, Index window, Index count,
                                                   std::uint64_t seed);

/// Optimal selector against the average-reward solution (lambda, w): for
/// every start state and horizon |J_n - lambda| <= (phi(k) + 1)||w|| / sum phi,
/// and every panel policy J_n <= lambda + phi(k)||w|| / sum phi. Both bounds
/// carry the solver residual and 1e-12.
CheckReport theorem2_check(const Model& model, const DiscountSchedule& schedule, Index k,
                           const std::vector<Index>& horizon_grid, Index panel_size = 100, std::uint64_t seed = 0);

/// For gamma > 0 and every panel policy plus the risk-optimal selector:
/// I_n <= lambda^gamma + (phi(k) w(x) + ||w||(phi(k) - phi(k+n-1))) / (gamma sum phi)
/// + residual/gamma + 1e-12. Throws NoCertificate when neither row condition holds.
CheckReport theorem4_check(const Model& model, const DiscountSchedule& schedule, double gamma, Index k, Index n,
                           const std::vector<TimeVaryingPolicy>& panel);
CheckReport theorem4_check(const Model& model, const DiscountSchedule& schedule, double gamma, Index k, Index n,
                           Index panel_size = 100, std::uint64_t seed = 0);

/// I_n^{-gamma} <= J_n <= I_n^{gamma} at one finite horizon, tolerance 1e-12.
CheckReport sandwich_check(const Model& model, const TimeVaryingPolicy& policy, const DiscountSchedule& schedule,
                           double gamma, Index k, Index n, Index x);

} // namespace gendisc
