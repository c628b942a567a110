#include "gendisc/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "gendisc/average_solver.hpp"
#include "gendisc/evaluator.hpp"
#include "gendisc/numeric.hpp"
#include "gendisc/risk_solver.hpp"

namespace gendisc {

namespace {

using EIdx = Eigen::Index;

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double golden = 0.6180339887498949;

void check_kernel(const Eigen::MatrixXd& P) {
    // the model constructor carries the full row-stochastic validation
    (void)Model({P}, Eigen::MatrixXd::Zero(P.rows(), 1));
}

void check_probability(const Eigen::VectorXd& nu, EIdx n) {
    if (nu.size() != n)
        throw Error(ErrorCode::InvalidArgument, "measure has the wrong dimension");
    if (!nu.allFinite() || nu.minCoeff() < 0.0 || std::abs(nu.sum() - 1.0) > 1e-12)
        throw Error(ErrorCode::InvalidArgument, "measure is not a probability vector");
}

double golden_max(const std::function<double(double)>& fn, double a, double b, double tol) {
    double c = b - golden * (b - a);
    double d = a + golden * (b - a);
    double fc = fn(c);
    double fd = fn(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - golden * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + golden * (b - a);
            fd = fn(d);
        }
    }
    return 0.5 * (a + b);
}

// Euclidean projection onto { g : max g - min g <= D }, then g(0) = 0.
Eigen::VectorXd project_span(const Eigen::VectorXd& g, double D) {
    Eigen::VectorXd out = g;
    const double lo = g.minCoeff();
    const double hi = g.maxCoeff();
    if (hi - lo > D) {
        auto cost = [&](double a) { return (g.array() - g.array().max(a).min(a + D)).square().sum(); };
        double a = lo;
        double b = hi - D;
        for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
            const double m1 = a + (b - a) / 3.0;
            const double m2 = b - (b - a) / 3.0;
            if (cost(m1) <= cost(m2))
                b = m2;
            else
                a = m1;
        }
        const double best = 0.5 * (a + b);
        out = g.array().max(best).min(best + D);
    }
    out.array() -= out(0);
    return out;
}

// a(x) = g(x) - ln sum_y e^{g(y)} P(x,y); the objective is nu . a.
Eigen::VectorXd log_ratio(const Eigen::MatrixXd& P, const Eigen::VectorXd& g) {
    const EIdx n = P.rows();
    Eigen::VectorXd a(n);
    for (EIdx x = 0; x < n; ++x) {
        double peak = -inf;
        for (EIdx y = 0; y < n; ++y)
            if (P(x, y) > 0.0)
                peak = std::max(peak, g(y));
        double sum = 0.0;
        for (EIdx y = 0; y < n; ++y)
            if (P(x, y) > 0.0)
                sum += P(x, y) * std::exp(g(y) - peak);
        a(x) = g(x) - peak - std::log(sum);
    }
    return a;
}

Eigen::VectorXd objective_gradient(const Eigen::MatrixXd& P, const Eigen::VectorXd& nu, const Eigen::VectorXd& g) {
    const EIdx n = P.rows();
    Eigen::VectorXd grad = nu;
    for (EIdx x = 0; x < n; ++x) {
        if (nu(x) == 0.0)
            continue;
        Eigen::VectorXd row(n);
        const double peak = g.maxCoeff();
        for (EIdx y = 0; y < n; ++y)
            row(y) = P(x, y) * std::exp(g(y) - peak);
        grad -= nu(x) * row / row.sum();
    }
    return grad;
}

struct Ascent {
    double value = -inf;
    Eigen::VectorXd g;
    double grad_norm = 0.0;
    bool converged = false;
};

Ascent ascend(const Eigen::MatrixXd& P, const Eigen::VectorXd& nu, double D, const Eigen::VectorXd& g0,
              Index max_iter) {
    Ascent out;
    Eigen::VectorXd g = project_span(g0, D);
    double val = rate_objective(P, nu, g);
    double step = 1.0;
    Index it = 0;
    for (; it < max_iter; ++it) {
        const Eigen::VectorXd grad = objective_gradient(P, nu, g);
        out.grad_norm = (project_span(g + grad, D) - g).lpNorm<Eigen::Infinity>();
        if (out.grad_norm <= 1e-11) {
            out.converged = true;
            break;
        }
        bool accepted = false;
        Eigen::VectorXd cand;
        double cv = 0.0;
        while (step >= 1e-30) {
            cand = project_span(g + step * grad, D);
            cv = rate_objective(P, nu, cand);
            if (cv >= val + 1e-4 * grad.dot(cand - g)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            out.converged = out.grad_norm <= 1e-6;
            break;
        }
        const bool stalled = cv - val <= 1e-16 * std::max(1.0, std::abs(val)) &&
                             (cand - g).lpNorm<Eigen::Infinity>() <= 1e-14;
        g = std::move(cand);
        val = std::max(val, cv);
        step *= 2.0;
        if (stalled) {
            out.converged = true;
            break;
        }
    }
    out.value = rate_objective(P, nu, g);
    out.g = std::move(g);
    return out;
}

// I(nu) for two states: g = (0, t), concave in t.
double rate_two_state(const Eigen::MatrixXd& P, const Eigen::VectorXd& nu, double D) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
    auto fn = [&](double t) {
        g(1) = t;
        return rate_objective(P, nu, g);
    };
    const double t = golden_max(fn, -D, D, 1e-10);
    return std::max({fn(t), fn(-D), fn(D), 0.0});
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& y) {
    std::vector<double> u(y.data(), y.data() + y.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumulative += u[j];
        const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0)
            theta = t;
    }
    return (y.array() - theta).max(0.0);
}

// Dykstra's alternating projections onto simplex and { nu . v >= t }.
Eigen::VectorXd project_feasible(const Eigen::VectorXd& start, const Eigen::VectorXd& v, double t) {
    Eigen::VectorXd x = start;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(x.size());
    Eigen::VectorXd q = Eigen::VectorXd::Zero(x.size());
    const double vv = v.squaredNorm();
    Eigen::VectorXd y = x;
    for (int it = 0; it < 2000; ++it) {
        y = project_simplex(x + p);
        p = x + p - y;
        Eigen::VectorXd z = y + q;
        const double gap = t - z.dot(v);
        Eigen::VectorXd xn = gap > 0.0 ? Eigen::VectorXd(z + gap / vv * v) : z;
        q = y + q - xn;
        const double change = (xn - x).lpNorm<Eigen::Infinity>();
        x = std::move(xn);
        if (change < 1e-15)
            break;
    }
    Eigen::VectorXd out = x.cwiseMax(0.0);
    return out / out.sum();
}

HalfSpaceRate halfspace_two_state(const Eigen::MatrixXd& P, const Eigen::VectorXd& v, double t) {
    // nu = (1-p, p); constraint v0 + p (v1 - v0) >= t
    double plo = 0.0;
    double phi = 1.0;
    const double slope = v(1) - v(0);
    if (slope > 0.0)
        plo = std::max(0.0, (t - v(0)) / slope);
    else if (slope < 0.0)
        phi = std::min(1.0, (t - v(0)) / slope);
    if (plo > phi || (slope == 0.0 && v(0) < t))
        return {inf, Eigen::VectorXd()};
    auto rate_at = [&](double p) {
        Eigen::VectorXd nu(2);
        nu << 1.0 - p, p;
        return rate_two_state(P, nu, rate_log_range);
    };
    constexpr double h = 1e-4;
    double best_p = plo;
    double best = rate_at(plo);
    for (double p = plo + h; p < phi; p += h) {
        const double r = rate_at(p);
        if (r < best) {
            best = r;
            best_p = p;
        }
    }
    if (const double r = rate_at(phi); r < best) {
        best = r;
        best_p = phi;
    }
    const double a = std::max(plo, best_p - h);
    const double b = std::min(phi, best_p + h);
    const double p = golden_max([&](double q) { return -rate_at(q); }, a, b, 1e-12);
    if (const double r = rate_at(p); r < best) {
        best = r;
        best_p = p;
    }
    Eigen::VectorXd nu(2);
    nu << 1.0 - best_p, best_p;
    return {best, nu};
}

HalfSpaceRate halfspace_general(const Eigen::MatrixXd& P, const Eigen::VectorXd& v, double t) {
    const EIdx n = P.rows();
    std::vector<Eigen::VectorXd> starts;
    starts.push_back(project_feasible(invariant_measure(P), v, t));
    std::mt19937_64 rng(0x5eed);
    for (int s = 0; s < 7; ++s) {
        Eigen::VectorXd r(n);
        for (EIdx i = 0; i < n; ++i)
            r(i) = -std::log(1.0 - static_cast<double>(rng() >> 11) * 0x1.0p-53);
        starts.push_back(project_feasible(r / r.sum(), v, t));
    }

    HalfSpaceRate best{inf, Eigen::VectorXd()};
    for (const auto& start : starts) {
        Eigen::VectorXd nu = start;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
        for (int it = 0; it < 300; ++it) {
            const Ascent a = ascend(P, nu, rate_log_range, g, 5000);
            g = a.g;
            if (a.value < best.value) {
                best.value = std::max(a.value, 0.0);
                best.argmin = nu;
            }
            Eigen::VectorXd sub = log_ratio(P, g);
            sub.array() -= sub.mean();
            const double norm = sub.norm();
            if (norm == 0.0)
                break;
            nu = project_feasible(nu - (0.2 / std::sqrt(it + 1.0)) * sub / norm, v, t);
        }
    }
    return best;
}

struct TailBound {
    double log_bound = 0.0;
    double theta = 0.0;
};

// ln P(sign (S/sum phi - target) >= 0) via the exponential-martingale
// inequality with f = e^{w^theta}, theta = sign |theta| optimized.
TailBound tail_bound(const Model& model, const StationaryPolicy& u, const Eigen::VectorXd& cu, double target,
                     int sign, double sum_phi) {
    if ((sign > 0 && target > cu.maxCoeff()) || (sign < 0 && target < cu.minCoeff()))
        return {-inf, 0.0};
    const double cspan = span_seminorm(cu);
    auto log_bound = [&](double log_theta) {
        const double theta = sign * std::exp(log_theta);
        const RiskSolution s = multiplicative_poisson_solve(model, u, theta);
        const double kappa = theta * (target - s.lambda) - s.residual;
        return s.w.maxCoeff() - kappa * sum_phi;
    };
    const double lo = std::log(std::max(1e-6 / cspan, 1e-7));
    const double hi = std::log(10.0 / cspan);
    constexpr int grid = 25;
    double best_x = lo;
    double best = inf;
    for (int i = 0; i <= grid; ++i) {
        const double xg = lo + (hi - lo) * i / grid;
        const double b = log_bound(xg);
        if (b < best) {
            best = b;
            best_x = xg;
        }
    }
    const double cell = (hi - lo) / grid;
    const double xr =
        golden_max([&](double xg) { return -log_bound(xg); }, std::max(lo, best_x - cell), std::min(hi, best_x + cell),
                   1e-8);
    if (const double b = log_bound(xr); b < best) {
        best = b;
        best_x = xr;
    }
    return {std::min(best, 0.0), sign * std::exp(best_x)};
}

} // namespace

WeightedEmpiricalMeasure weighted_empirical(const std::vector<Index>& trajectory, const DiscountSchedule& schedule,
                                            Index k, Index n_states) {
    if (trajectory.empty())
        throw Error(ErrorCode::InvalidArgument, "empty trajectory");
    std::vector<CompensatedSum> mass(n_states);
    CompensatedSum norm;
    for (Index j = 0; j < trajectory.size(); ++j) {
        if (trajectory[j] >= n_states)
            throw Error(ErrorCode::InvalidArgument, "trajectory state out of range");
        const double phi = schedule.phi(k + j);
        mass[trajectory[j]].add(phi);
        norm.add(phi);
    }
    WeightedEmpiricalMeasure out;
    out.k = k;
    out.n = trajectory.size();
    out.normalizer = norm.value();
    if (!(out.normalizer > 0.0))
        throw Error(ErrorCode::InvalidSchedule, "discount weights sum to zero along the trajectory");
    out.nu.resize(static_cast<EIdx>(n_states));
    for (Index y = 0; y < n_states; ++y)
        out.nu(static_cast<EIdx>(y)) = mass[y].value() / out.normalizer;
    return out;
}

double rate_objective(const Eigen::MatrixXd& P, const Eigen::VectorXd& nu, const Eigen::VectorXd& g) {
    const Eigen::VectorXd a = log_ratio(P, g);
    CompensatedSum sum;
    for (EIdx x = 0; x < nu.size(); ++x)
        if (nu(x) > 0.0)
            sum.add(nu(x) * a(x));
    return sum.value();
}

RateReport rate_function(const Eigen::MatrixXd& P, const Eigen::VectorXd& nu, const RateOptions& opts) {
    check_kernel(P);
    const EIdx n = P.rows();
    check_probability(nu, n);
    if (ergodicity_coefficient(P) >= 1.0)
        throw Error(ErrorCode::NotErgodic, "kernel has ergodicity coefficient 1");
    if (opts.d && !(*opts.d > 1.0))
        throw Error(ErrorCode::InvalidArgument, "d must exceed 1");
    const double D = opts.d ? std::log(*opts.d) : rate_log_range;

    RateReport report;
    report.nu = nu;
    report.d = opts.d;
    report.method = "ascent";

    Ascent best;
    best.g = Eigen::VectorXd::Zero(n);
    best.value = rate_objective(P, nu, best.g);
    best.converged = true;
    if (n > 1) {
        const double spread = std::min(D / 2.0, 5.0);
        for (Index s = 0; s < std::max<Index>(opts.starts, 1); ++s) {
            Eigen::VectorXd g0 = Eigen::VectorXd::Zero(n);
            if (s > 0) {
                std::seed_seq seq{static_cast<std::uint64_t>(opts.seed), static_cast<std::uint64_t>(s)};
                std::mt19937_64 rng(seq);
                for (EIdx i = 1; i < n; ++i)
                    g0(i) = spread * (2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0);
            }
            Ascent a = ascend(P, nu, D, g0, opts.max_iter);
            ++report.restarts;
            if (s == 0 || a.value > best.value)
                best = std::move(a);
        }
        if (n == 2 && opts.grid) {
            constexpr double h = 1e-4;
            const auto steps = static_cast<long>(std::floor(2.0 * D / h));
            Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
            double grid_best = -inf;
            double grid_t = 0.0;
            for (long i = 0; i <= steps; ++i) {
                g(1) = -D + static_cast<double>(i) * h;
                const double v = rate_objective(P, nu, g);
                if (v > grid_best) {
                    grid_best = v;
                    grid_t = g(1);
                }
            }
            if (grid_best > best.value) {
                best.g = Eigen::VectorXd::Zero(2);
                best.g(1) = grid_t;
                best.value = grid_best;
                best.grad_norm = (project_span(best.g + objective_gradient(P, nu, best.g), D) - best.g)
                                     .lpNorm<Eigen::Infinity>();
                report.method = "grid";
            }
        }
    }
    report.value = rate_objective(P, nu, best.g);
    report.f = (best.g.array() - best.g.minCoeff()).exp();
    report.gradient_norm = best.grad_norm;
    report.converged = best.converged;
    return report;
}

DvResult dv_supermartingale_check(const Eigen::MatrixXd& P, const Eigen::VectorXd& f, const DiscountSchedule& schedule,
                                  Index k, Index n, Index x) {
    check_kernel(P);
    const EIdx S = P.rows();
    if (f.size() != S || !f.allFinite() || f.minCoeff() < 1.0)
        throw Error(ErrorCode::InvalidArgument, "test function must be finite with min f >= 1");
    if (n < 1 || x >= static_cast<Index>(S))
        throw Error(ErrorCode::InvalidArgument, "need n >= 1 and a valid start state");
    const Eigen::ArrayXd h = f.array() / (P * f).array();

    Eigen::RowVectorXd q = Eigen::RowVectorXd::Zero(S);
    q(static_cast<EIdx>(x)) = 1.0;
    for (Index j = 0; j < n; ++j) {
        q.array() *= h.pow(schedule.phi(k + j)).transpose();
        if (j + 1 < n)
            q = q * P;
    }
    DvResult out;
    out.lhs = q.sum();
    out.d_f = f.maxCoeff() / f.minCoeff();
    out.pass = out.lhs <= out.d_f + 1e-12;
    return out;
}

double exact_Q(const Eigen::MatrixXd& P, const DiscountSchedule& schedule, Index k, Index n,
               const ThresholdEvent& event, Index x, unsigned threads) {
    check_kernel(P);
    const Index S = static_cast<Index>(P.rows());
    if (event.f.size() != P.rows() || !event.f.allFinite() || !(event.f.minCoeff() > 0.0))
        throw Error(ErrorCode::InvalidArgument, "test function must be positive and finite");
    if (n < 1 || x >= S)
        throw Error(ErrorCode::InvalidArgument, "need n >= 1 and a valid start state");
    const bool within = n <= 20 || (S == 2 && n <= 22);
    if (!within || static_cast<double>(n - 1) * std::log2(static_cast<double>(S)) > 24.0) {
        std::ostringstream msg;
        msg << S << "^" << n - 1 << " paths exceed the enumeration guard";
        throw Error(ErrorCode::TooLarge, msg.str());
    }

    const Eigen::VectorXd h = (event.f.array() / (P * event.f).array()).log();
    std::vector<double> phi(n);
    CompensatedSum norm;
    for (Index j = 0; j < n; ++j) {
        phi[j] = schedule.phi(k + j);
        norm.add(phi[j]);
    }
    const double threshold = event.kappa * norm.value();
    const double slack = 1e-12 * std::max(1.0, norm.value() * h.cwiseAbs().maxCoeff());
    const double cut = threshold - slack;

    struct Prefix {
        Index state;
        double acc;
        double prob;
    };
    // expand breadth-first to a fixed depth for sharding
    Index depth = 0;
    std::vector<Prefix> frontier{{x, phi[0] * h(static_cast<EIdx>(x)), 1.0}};
    while (depth + 1 < n && frontier.size() < 256) {
        std::vector<Prefix> next;
        for (const auto& p : frontier)
            for (Index y = 0; y < S; ++y) {
                const double pr = P(static_cast<EIdx>(p.state), static_cast<EIdx>(y));
                if (pr > 0.0)
                    next.push_back({y, p.acc + phi[depth + 1] * h(static_cast<EIdx>(y)), p.prob * pr});
            }
        frontier = std::move(next);
        ++depth;
    }

    std::vector<double> shard(frontier.size(), 0.0);
    auto run = [&](std::size_t s) {
        CompensatedSum sum;
        std::function<void(Index, Index, double, double)> dfs = [&](Index j, Index state, double acc, double prob) {
            if (j + 1 == n) {
                if (acc >= cut)
                    sum.add(prob);
                return;
            }
            for (Index y = 0; y < S; ++y) {
                const double pr = P(static_cast<EIdx>(state), static_cast<EIdx>(y));
                if (pr > 0.0)
                    dfs(j + 1, y, acc + phi[j + 1] * h(static_cast<EIdx>(y)), prob * pr);
            }
        };
        dfs(depth, frontier[s].state, frontier[s].acc, frontier[s].prob);
        shard[s] = sum.value();
    };

    unsigned workers = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, frontier.size()));
    if (workers <= 1) {
        for (std::size_t s = 0; s < frontier.size(); ++s)
            run(s);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t s = t; s < frontier.size(); s += workers)
                    run(s);
            });
        for (auto& th : pool)
            th.join();
    }
    CompensatedSum total;
    for (double v : shard)
        total.add(v);
    return std::min(1.0, total.value());
}

LdpReport ldp_upper_bound_check(const Eigen::MatrixXd& P, const Eigen::VectorXd& f, double kappa,
                                const DiscountSchedule& schedule, Index k, const std::vector<Index>& n_grid,
                                Index x) {
    check_kernel(P);
    if (f.size() != P.rows() || !f.allFinite() || f.minCoeff() < 1.0)
        throw Error(ErrorCode::InvalidArgument, "test function must be finite with min f >= 1");
    LdpReport report;
    report.kappa = kappa;
    report.d = f.maxCoeff() / f.minCoeff();
    const Eigen::VectorXd h = (f.array() / (P * f).array()).log();
    report.inf_rate = rate_inf_halfspace(P, h, kappa).value;

    std::vector<Index> grid = n_grid;
    std::sort(grid.begin(), grid.end());
    double previous_envelope = inf;
    for (Index n : grid) {
        LdpRow row;
        row.n = n;
        row.sum_phi = phi_partial_sum(schedule, k, n);
        row.q_exact = exact_Q(P, schedule, k, n, {f, kappa}, x);
        row.bound = report.d * std::exp(-kappa * row.sum_phi);
        row.normalized_log_q = row.q_exact > 0.0 ? std::log(row.q_exact) / row.sum_phi : -inf;
        row.envelope = std::log(report.d) / row.sum_phi - kappa;
        row.pass = row.q_exact <= row.bound + 1e-15;
        report.bound_pass = report.bound_pass && row.pass;
        const bool trend = row.envelope <= previous_envelope + 1e-15 && row.normalized_log_q <= row.envelope + 1e-12;
        report.trend_pass = report.trend_pass && trend;
        previous_envelope = row.envelope;
        report.rows.push_back(row);
    }
    if (std::isfinite(report.inf_rate))
        report.trend_pass = report.trend_pass && report.inf_rate >= kappa - 1e-9;
    report.passed = report.bound_pass && report.trend_pass;
    return report;
}

HalfSpaceRate rate_inf_halfspace(const Eigen::MatrixXd& P, const Eigen::VectorXd& v, double t) {
    check_kernel(P);
    if (v.size() != P.rows() || !v.allFinite())
        throw Error(ErrorCode::InvalidArgument, "constraint vector has the wrong dimension");
    if (ergodicity_coefficient(P) >= 1.0)
        throw Error(ErrorCode::NotErgodic, "kernel has ergodicity coefficient 1");
    if (v.maxCoeff() < t)
        return {inf, Eigen::VectorXd()};
    if (P.rows() == 1)
        return {0.0, Eigen::VectorXd::Ones(1)};
    if (P.rows() == 2)
        return halfspace_two_state(P, v, t);
    return halfspace_general(P, v, t);
}

DeviationRate rate_inf_over_deviation_set(const Eigen::MatrixXd& P, const Eigen::VectorXd& cu, double eps) {
    if (!(eps > 0.0))
        throw Error(ErrorCode::InvalidArgument, "eps must be positive");
    check_kernel(P);
    DeviationRate out;
    out.mean = invariant_measure(P).dot(cu);
    const HalfSpaceRate up = rate_inf_halfspace(P, cu, out.mean + eps);
    const HalfSpaceRate down = rate_inf_halfspace(P, -cu, -(out.mean - eps));
    out.upper = up.value;
    out.lower = down.value;
    if (!std::isfinite(up.value) && !std::isfinite(down.value)) {
        std::ostringstream msg;
        msg << "no probability vector deviates from the mean by " << eps;
        throw Error(ErrorCode::EmptySet, msg.str());
    }
    out.e = std::min(up.value, down.value);
    out.argmin = up.value <= down.value ? up.argmin : down.argmin;
    return out;
}

Theorem5Report theorem5_margin(const Model& model, const StationaryPolicy& u, const DiscountSchedule& schedule,
                               double eps, double gamma, Index k, Index n, Index x) {
    if (!(gamma < 0.0))
        throw Error(ErrorCode::InvalidArgument, "theorem5_margin needs gamma < 0");
    if (!(eps > 0.0))
        throw Error(ErrorCode::InvalidArgument, "eps must be positive");
    u.validate(model);
    const Eigen::MatrixXd P = policy_kernel(model, u);
    const Eigen::VectorXd cu = policy_reward(model, u);
    const double c_sup = cu.cwiseAbs().maxCoeff();

    Theorem5Report r;
    r.gamma = gamma;
    r.eps = eps;
    r.mean = invariant_measure(P).dot(cu);
    r.lambda_u = poisson_solve(model, u).lambda;
    try {
        r.e = rate_inf_over_deviation_set(P, cu, eps).e;
    } catch (const Error& err) {
        if (err.code() != ErrorCode::EmptySet)
            throw;
        r.e = inf;
    }
    r.gamma_limit = c_sup > 0.0 ? r.e / (2.0 * c_sup) : inf;
    if (std::abs(gamma) >= r.gamma_limit) {
        std::ostringstream msg;
        msg << "|gamma| = " << std::abs(gamma) << " >= e/(2||c||) = " << r.gamma_limit;
        throw Error(ErrorCode::PreconditionGamma, msg.str());
    }

    r.value = exact_risk_value(model, u, schedule, gamma, k, n, x).value;
    r.margin = r.value - r.lambda_u;
    const double sum_phi = phi_partial_sum(schedule, k, n);
    if (span_seminorm(cu) == 0.0) {
        r.log_prob_bound = -inf;
    } else {
        const TailBound up = tail_bound(model, u, cu, r.mean + eps, +1, sum_phi);
        const TailBound down = tail_bound(model, u, cu, r.mean - eps, -1, sum_phi);
        r.log_prob_bound = std::min(0.0, log_sum_exp(up.log_bound, down.log_bound));
    }
    const double g = std::abs(gamma) * sum_phi;
    r.slack = log_sum_exp(r.log_prob_bound + 2.0 * c_sup * g, eps * g) / g - eps;
    r.lower_bound = r.mean - eps - r.slack;
    r.pass = r.value >= r.lower_bound - 1e-12;
    return r;
}

} // namespace gendisc
