#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gendisc/model.hpp"
#include "gendisc/schedule.hpp"

namespace gendisc {

struct WeightedEmpiricalMeasure {
    Eigen::VectorXd nu;
    Index k = 0;
    Index n = 0;             ///< trajectory length
    double normalizer = 0.0; ///< sum_{i=k}^{k+n-1} phi(i)
};

/// nu(y) = sum_i phi(i) 1{X_{i-k} = y} / sum phi over the whole trajectory.
WeightedEmpiricalMeasure weighted_empirical(const std::vector<Index>& trajectory, const DiscountSchedule& schedule,
                                            Index k, Index n_states);

struct RateOptions {
    std::optional<double> d;  ///< restrict to max f <= d min f
    Index starts = 16;        ///< multi-start count, the first start is g = 0
    std::uint64_t seed = 0;
    bool grid = true;         ///< 2-state grid over g(1) at resolution 1e-4
    Index max_iter = 100'000;
};

struct RateReport {
    Eigen::VectorXd nu;
    double value = 0.0;
    Eigen::VectorXd f;             ///< maximizer, min f = 1
    std::optional<double> d;
    Index restarts = 0;
    double gradient_norm = 0.0;    ///< projected-gradient norm at the reported f
    bool converged = true;
    std::string method;            ///< "ascent" or "grid"
};

/// Unconstrained search range for g = ln f when no d is given.
inline constexpr double rate_log_range = 40.0;

/// sum_x nu(x) [g(x) - ln sum_y e^{g(y)} P(x,y)].
double rate_objective(const Eigen::MatrixXd& P, const Eigen::VectorXd& nu, const Eigen::VectorXd& g);

/// I(nu) (or I_d(nu)) by projected gradient ascent on the concave objective
/// above with g(0) = 0, span(g) <= ln d (or rate_log_range). The value is a
/// lower bound on the supremum; `converged` is false when the iteration cap
/// was hit. Throws NotErgodic when Delta_P = 1.
RateReport rate_function(const Eigen::MatrixXd& P, const Eigen::VectorXd& nu, const RateOptions& opts = {});

struct DvResult {
    double lhs = 0.0;   ///< E_x[exp(sum phi(i) ln(f/Pf)(X_{i-k}))]
    double d_f = 0.0;   ///< max f / min f
    bool pass = true;   ///< lhs <= d_f + 1e-12
};

/// Exact forward recursion of the multiplicative functional. Requires
/// finite f with min f >= 1.
DvResult dv_supermartingale_check(const Eigen::MatrixXd& P, const Eigen::VectorXd& f, const DiscountSchedule& schedule,
                                  Index k, Index n, Index x);

struct ThresholdEvent {
    Eigen::VectorXd f;
    double kappa = 0.0;
};

/// P_x(sum phi(i) ln(f/Pf)(X_{i-k}) >= kappa sum phi) by enumerating every
/// path. Allowed for n <= 20 (n <= 22 with two states) and at most 2^24
/// paths; otherwise TooLarge. Shards run on `threads` workers
/// (0 = hardware concurrency) and merge in prefix order.
double exact_Q(const Eigen::MatrixXd& P, const DiscountSchedule& schedule, Index k, Index n,
               const ThresholdEvent& event, Index x, unsigned threads = 0);

struct LdpRow {
    Index n = 0;
    double sum_phi = 0.0;
    double q_exact = 0.0;
    double bound = 0.0;             ///< d e^{-kappa sum phi}
    double normalized_log_q = 0.0;  ///< ln Q / sum phi, -inf when Q = 0
    double envelope = 0.0;          ///< ln d / sum phi - kappa
    bool pass = true;
};

struct LdpReport {
    double d = 0.0;
    double kappa = 0.0;
    double inf_rate = 0.0;  ///< inf of I over {nu : nu(ln f/Pf) >= kappa}, +inf when empty
    std::vector<LdpRow> rows;
    bool bound_pass = true;
    bool trend_pass = true; ///< envelope nonincreasing, ln Q / sum phi under it, inf_rate >= kappa
    bool passed = true;
};

LdpReport ldp_upper_bound_check(const Eigen::MatrixXd& P, const Eigen::VectorXd& f, double kappa,
                                const DiscountSchedule& schedule, Index k, const std::vector<Index>& n_grid,
                                Index x = 0);

struct HalfSpaceRate {
    double value = 0.0;        ///< +inf when the half-space misses the simplex
    Eigen::VectorXd argmin;
};

/// inf { I(nu) : nu . v >= t } over probability vectors.
HalfSpaceRate rate_inf_halfspace(const Eigen::MatrixXd& P, const Eigen::VectorXd& v, double t);

struct DeviationRate {
    double e = 0.0;          ///< min of the two sides that are nonempty
    double upper = 0.0;      ///< inf over nu . cu >= mu . cu + eps
    double lower = 0.0;      ///< inf over nu . cu <= mu . cu - eps
    double mean = 0.0;       ///< mu . cu
    Eigen::VectorXd argmin;
};

/// inf I over { nu : |nu . cu - mu . cu| >= eps }. Throws EmptySet when eps
/// exceeds every achievable deviation.
DeviationRate rate_inf_over_deviation_set(const Eigen::MatrixXd& P, const Eigen::VectorXd& cu, double eps);

struct Theorem5Report {
    double gamma = 0.0;
    double eps = 0.0;
    double lambda_u = 0.0;     ///< average reward of u
    double mean = 0.0;         ///< mu_u . c_u
    double value = 0.0;        ///< exact risk functional at horizon n
    double margin = 0.0;       ///< value - lambda_u
    double lower_bound = 0.0;  ///< mean - eps - slack
    double slack = 0.0;
    double log_prob_bound = 0.0; ///< ln of the bound on P(deviation)
    double e = 0.0;
    double gamma_limit = 0.0;  ///< e / (2 ||c_u||)
    bool pass = true;
};

/// Lower bound on the risk-averse functional under u. The deviation
/// probability is bounded through the exponential-martingale inequality with
/// f = e^{w} from the multiplicative Poisson equation at an optimized tilt.
/// Throws InvalidArgument for gamma >= 0 and PreconditionGamma when
/// |gamma| >= e / (2 ||c_u||).
Theorem5Report theorem5_margin(const Model& model, const StationaryPolicy& u, const DiscountSchedule& schedule,
                               double eps, double gamma, Index k, Index n, Index x = 0);

} // namespace gendisc
