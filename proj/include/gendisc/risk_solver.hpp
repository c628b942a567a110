#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gendisc/model.hpp"
#include "gendisc/schedule.hpp"

namespace gendisc {

/// Which a-priori bound on ||w^gamma|| backs a risk-sensitive solution.
enum class Certificate {
    B1,          ///< equivalent rows: ||w|| <= span(gamma c) + ln K
    B2,          ///< e^{span(gamma c)} Delta < 1: ||w|| <= r(gamma)
    Uncertified, ///< neither holds; iterated anyway
};

std::string to_string(Certificate c);

struct CertificateInfo {
    Certificate kind = Certificate::Uncertified;
    double bound = 0.0;                 ///< the applicable bound on ||w||, +inf when uncertified
    std::optional<double> K;            ///< equivalence constant when rows are equivalent
    double margin = 0.0;                ///< e^{span(gamma c)} Delta
    std::optional<double> r_gamma;      ///< r(gamma) when margin < 1
};

/// Certificate for the control problem (rows compared within the same action).
CertificateInfo certify(const Model& model, double gamma);

struct RiskSolution {
    double gamma = 0.0;
    Eigen::VectorXd w;            ///< min w = 0
    double lambda = 0.0;          ///< risk-sensitive average reward
    double residual = 0.0;        ///< span(T w - w); |lambda - exact| <= residual / |gamma|
    Index iterations = 0;
    StationaryPolicy policy;      ///< extremal selector, ties toward the lowest action
    CertificateInfo certificate;
};

struct RiskTimeExtendedSolution {
    double gamma = 0.0;
    Index k = 0;
    Index N = 0;
    Eigen::MatrixXd w_grid;                  ///< N x n_states, each slice min 0
    std::vector<double> lambda_seq;          ///< lambda^gamma(k+j)
    std::vector<StationaryPolicy> policy_seq;
    std::vector<double> slice_residual;      ///< span(w(i,.) - w(i+1,.)), terminal slice taken as 0
    CertificateInfo certificate;

    TimeVaryingPolicy as_policy() const { return TimeVaryingPolicy(k, policy_seq); }
};

/// |gamma| below this is refused; use poisson_solve for the risk-neutral limit.
inline constexpr double min_abs_gamma = 1e-8;

/// Fixed point of w <- extr_a [gamma c(., a) + ln P^a e^w] - (anchor value),
/// extr = inf for gamma < 0 and sup for gamma > 0, in log space with a
/// shifted exponential sum. Stops on the a-posteriori residual
/// span(T w - w) <= tol. Throws GammaZero, NoConvergence.
RiskSolution risk_relative_value_iteration(const Model& model, double gamma, double tol = 1e-13,
                                           Index max_iter = 1'000'000);

/// Multiplicative Poisson equation for a fixed stationary policy; the
/// certificate is evaluated on the policy kernel.
RiskSolution multiplicative_poisson_solve(const Model& model, const StationaryPolicy& u, double gamma,
                                          double tol = 1e-13, Index max_iter = 1'000'000);

/// (1/gamma) ln rho(diag(e^{gamma c_u}) P^u) by power iteration with a
/// Collatz-Wielandt bracket closed to 1e-13 relative.
double perron_oracle(const Model& model, const StationaryPolicy& u, double gamma);

/// Backward recursion of the time-extended risk equations from w(k+N,.) = 0.
RiskTimeExtendedSolution risk_time_extended_solve(const Model& model, const DiscountSchedule& schedule, double gamma,
                                                  Index k, Index N);

/// span(gamma c) - ln(1 - Delta e^{span(gamma c)}); throws B2Fails when the
/// margin is >= 1.
double r_gamma_bound(const Model& model, double gamma);

struct SweepRow {
    double gamma = 0.0;
    double lambda = 0.0;
    std::string certificate;  ///< "B1", "B2", "uncertified", or "poisson" for the gamma = 0 row
    double residual = 0.0;
};

/// lambda^{u,gamma} over gamma_list plus the gamma = 0 row from poisson_solve,
/// sorted by gamma.
std::vector<SweepRow> gamma_sweep(const Model& model, const StationaryPolicy& u, const std::vector<double>& gamma_list,
                                  double tol = 1e-13);

/// One application of the log-space risk operator (exposed for tests).
Eigen::VectorXd risk_operator(const Model& model, double gamma, const Eigen::VectorXd& w,
                              StationaryPolicy* selector = nullptr);

} // namespace gendisc
