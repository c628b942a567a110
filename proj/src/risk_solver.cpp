#include "gendisc/risk_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gendisc/average_solver.hpp"
#include "gendisc/numeric.hpp"

namespace gendisc {

namespace {

using EIdx = Eigen::Index;

constexpr double tie_tolerance = 1e-12;

void check_gamma(double gamma) {
    if (!std::isfinite(gamma) || std::abs(gamma) < min_abs_gamma) {
        std::ostringstream msg;
        msg << "gamma = " << gamma << " is zero or too close to zero; use the risk-neutral solver";
        throw Error(ErrorCode::GammaZero, msg.str());
    }
}

// ln sum_y P(x,y) e^{w(y)}
double log_expectation(const Eigen::MatrixXd& P, EIdx x, const Eigen::VectorXd& w, double w_max) {
    double sum = 0.0;
    for (EIdx y = 0; y < P.cols(); ++y)
        if (P(x, y) > 0.0)
            sum += P(x, y) * std::exp(w(y) - w_max);
    return w_max + std::log(sum);
}

// extr_a [scale c(x,a) + ln P^a e^next (x)] with extr chosen by sign(gamma);
// `scale` already contains gamma.
Eigen::VectorXd log_backup(const Model& model, double gamma, double scale, const Eigen::VectorXd& next,
                           const StationaryPolicy* fixed, StationaryPolicy* selector) {
    const EIdx n = static_cast<EIdx>(model.n_states());
    const double w_max = next.maxCoeff();
    const bool maximize = gamma > 0.0;
    Eigen::VectorXd out(n);
    std::vector<Index> chosen(static_cast<std::size_t>(n), 0);
    std::vector<double> q(model.n_actions());
    for (EIdx x = 0; x < n; ++x) {
        const Index xs = static_cast<Index>(x);
        if (fixed != nullptr) {
            const Index a = (*fixed)(xs);
            out(x) = scale * model.reward(xs, a) + log_expectation(model.kernel(a), x, next, w_max);
            chosen[xs] = a;
            continue;
        }
        double best = maximize ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        for (Index a = 0; a < model.n_actions(); ++a) {
            q[a] = scale * model.reward(xs, a) + log_expectation(model.kernel(a), x, next, w_max);
            best = maximize ? std::max(best, q[a]) : std::min(best, q[a]);
        }
        const double slack = tie_tolerance * std::max(1.0, std::abs(best));
        Index pick = 0;
        while (maximize ? q[pick] < best - slack : q[pick] > best + slack)
            ++pick;
        out(x) = best;
        chosen[xs] = pick;
    }
    if (selector != nullptr)
        *selector = StationaryPolicy(std::move(chosen));
    return out;
}

CertificateInfo certify_rows(const Model& rows_model, double gamma) {
    CertificateInfo info;
    const double gspan = std::abs(gamma) * reward_span(rows_model);
    info.margin = b2_margin(rows_model, gamma);
    double best = std::numeric_limits<double>::infinity();
    try {
        info.K = equivalence_constant(rows_model);
        best = gspan + std::log(*info.K);
        info.kind = Certificate::B1;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::FailsB1)
            throw;
    }
    if (info.margin < 1.0) {
        info.r_gamma = gspan - std::log1p(-info.margin);
        if (*info.r_gamma < best) {
            best = *info.r_gamma;
            info.kind = Certificate::B2;
        }
    }
    info.bound = best;
    return info;
}

RiskSolution iterate_risk(const Model& model, double gamma, const StationaryPolicy* fixed, double tol,
                          Index max_iter) {
    check_gamma(gamma);
    if (!(tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
    const EIdx n = static_cast<EIdx>(model.n_states());

    RiskSolution sol;
    sol.gamma = gamma;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd tw;
    Index it = 0;
    while (true) {
        ++it;
        tw = log_backup(model, gamma, gamma, w, fixed, &sol.policy);
        sol.residual = span_seminorm(Eigen::VectorXd(tw - w));
        if (sol.residual <= tol)
            break;
        if (it >= max_iter) {
            std::ostringstream msg;
            msg << "risk iteration residual " << sol.residual << " after " << it << " iterations";
            throw Error(ErrorCode::NoConvergence, msg.str());
        }
        w = tw.array() - tw(0);
    }
    sol.lambda = (tw(0) - w(0)) / gamma;
    sol.w = w.array() - w.minCoeff();
    sol.iterations = it;
    return sol;
}

} // namespace

std::string to_string(Certificate c) {
    switch (c) {
    case Certificate::B1: return "B1";
    case Certificate::B2: return "B2";
    case Certificate::Uncertified: return "uncertified";
    }
    return "unknown";
}

CertificateInfo certify(const Model& model, double gamma) { return certify_rows(model, gamma); }

Eigen::VectorXd risk_operator(const Model& model, double gamma, const Eigen::VectorXd& w, StationaryPolicy* selector) {
    check_gamma(gamma);
    return log_backup(model, gamma, gamma, w, nullptr, selector);
}

RiskSolution risk_relative_value_iteration(const Model& model, double gamma, double tol, Index max_iter) {
    check_gamma(gamma);
    const CertificateInfo cert = certify(model, gamma);
    RiskSolution sol = iterate_risk(model, gamma, nullptr, tol, max_iter);
    sol.certificate = cert;
    return sol;
}

RiskSolution multiplicative_poisson_solve(const Model& model, const StationaryPolicy& u, double gamma, double tol,
                                          Index max_iter) {
    check_gamma(gamma);
    u.validate(model);
    const CertificateInfo cert = certify_rows(policy_model(model, u), gamma);
    RiskSolution sol = iterate_risk(model, gamma, &u, tol, max_iter);
    sol.certificate = cert;
    return sol;
}

double perron_oracle(const Model& model, const StationaryPolicy& u, double gamma) {
    check_gamma(gamma);
    const Eigen::MatrixXd P = policy_kernel(model, u);
    if (ergodicity_coefficient(P) >= 1.0)
        throw Error(ErrorCode::NotErgodic, "policy kernel has ergodicity coefficient 1");
    const Eigen::VectorXd c = policy_reward(model, u);
    // shift so every exponent is <= 0
    const double shift = gamma > 0.0 ? c.maxCoeff() : c.minCoeff();
    const Eigen::VectorXd scale = (gamma * (c.array() - shift)).exp();
    const Eigen::MatrixXd Q = scale.asDiagonal() * P;

    Eigen::VectorXd v = Eigen::VectorXd::Ones(P.rows());
    constexpr double rel_tol = 1e-13;
    constexpr Index max_iter = 10'000'000;
    for (Index it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd qv = Q * v;
        const Eigen::ArrayXd ratio = qv.array() / v.array();
        const double lo = ratio.minCoeff();
        const double hi = ratio.maxCoeff();
        if (hi - lo <= rel_tol * hi) {
            const double rho = 0.5 * (lo + hi);
            return shift + std::log(rho) / gamma;
        }
        v = qv / qv.maxCoeff();
    }
    throw Error(ErrorCode::NoConvergence, "power iteration did not close the Perron bracket");
}

RiskTimeExtendedSolution risk_time_extended_solve(const Model& model, const DiscountSchedule& schedule, double gamma,
                                                  Index k, Index N) {
    check_gamma(gamma);
    if (N < 1)
        throw Error(ErrorCode::InvalidArgument, "window length N must be >= 1");
    const EIdx n = static_cast<EIdx>(model.n_states());

    RiskTimeExtendedSolution sol;
    sol.gamma = gamma;
    sol.k = k;
    sol.N = N;
    sol.certificate = certify(model, gamma);
    sol.w_grid.resize(static_cast<EIdx>(N), n);
    sol.lambda_seq.assign(N, 0.0);
    sol.policy_seq.assign(N, StationaryPolicy{});
    sol.slice_residual.assign(N, 0.0);

    Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
    for (Index j = N; j-- > 0;) {
        const Index i = k + j;
        const double phi = schedule.phi(i);
        if (!(phi > 0.0)) {
            std::ostringstream msg;
            msg << "phi(" << i << ") = " << phi << " is not positive";
            throw Error(ErrorCode::InvalidSchedule, msg.str());
        }
        Eigen::VectorXd v = log_backup(model, gamma, gamma * phi, next, nullptr, &sol.policy_seq[j]);
        const double lo = v.minCoeff();
        sol.lambda_seq[j] = lo / (gamma * phi);
        v.array() -= lo;
        sol.slice_residual[j] = span_seminorm(Eigen::VectorXd(v - next));
        sol.w_grid.row(static_cast<EIdx>(j)) = v.transpose();
        next = std::move(v);
    }
    return sol;
}

double r_gamma_bound(const Model& model, double gamma) {
    const double margin = b2_margin(model, gamma);
    if (!(margin < 1.0)) {
        std::ostringstream msg;
        msg << "e^{span(gamma c)} Delta = " << margin << " >= 1";
        throw Error(ErrorCode::B2Fails, msg.str());
    }
    return std::abs(gamma) * reward_span(model) - std::log1p(-margin);
}

std::vector<SweepRow> gamma_sweep(const Model& model, const StationaryPolicy& u, const std::vector<double>& gamma_list,
                                  double tol) {
    std::vector<SweepRow> rows;
    rows.reserve(gamma_list.size() + 1);
    const SpanSolution neutral = poisson_solve(model, u, tol);
    rows.push_back({0.0, neutral.lambda, "poisson", neutral.span_residual});
    for (double g : gamma_list) {
        const RiskSolution s = multiplicative_poisson_solve(model, u, g, tol);
        rows.push_back({g, s.lambda, to_string(s.certificate.kind), s.residual});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.gamma < b.gamma; });
    return rows;
}

} // namespace gendisc
