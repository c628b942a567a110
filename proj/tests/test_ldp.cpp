#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gendisc/average_solver.hpp"
#include "gendisc/evaluator.hpp"
#include "gendisc/generator.hpp"
#include "gendisc/ldp.hpp"
#include "oracles.hpp"

using namespace gendisc;

namespace {

Eigen::MatrixXd ref_P() { return oracle::reference_model().kernel(0); }

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out(i++) = x;
    return out;
}

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no gendisc::Error thrown";
    return ErrorCode::ConfigError;
}

} // namespace

TEST(WeightedEmpirical, Examples) {
    const auto h = DiscountSchedule::hyperbolic(1, 1);
    const auto point = weighted_empirical({2, 2, 2, 2}, h, 3, 3);
    EXPECT_EQ(point.nu, vec({0.0, 0.0, 1.0}));

    const auto freq = weighted_empirical({0, 1, 1, 2, 1}, DiscountSchedule::unit(), 0, 3);
    EXPECT_NEAR(freq.nu(0), 0.2, 1e-15);
    EXPECT_NEAR(freq.nu(1), 0.6, 1e-15);
    EXPECT_NEAR(freq.nu(2), 0.2, 1e-15);

    const auto two = weighted_empirical({0, 1}, h, 0, 2);
    EXPECT_NEAR(two.nu(0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(two.nu(1), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(two.normalizer, 1.5, 1e-15);

    EXPECT_THROW(weighted_empirical({}, h, 0, 2), Error);
    EXPECT_THROW(weighted_empirical({0, 5}, h, 0, 2), Error);
}

TEST(WeightedEmpirical, ConcatenationIsWeightedMixture) {
    std::mt19937_64 rng(61);
    const auto s = DiscountSchedule::hyperbolic(0.5, 0.4);
    for (int t = 0; t < 30; ++t) {
        const Index S = 4;
        const Index n1 = 1 + rng() % 20, n2 = 1 + rng() % 20, k = rng() % 5;
        std::vector<Index> a(n1), b(n2);
        for (auto& x : a)
            x = rng() % S;
        for (auto& x : b)
            x = rng() % S;
        std::vector<Index> ab = a;
        ab.insert(ab.end(), b.begin(), b.end());
        const auto ma = weighted_empirical(a, s, k, S);
        const auto mb = weighted_empirical(b, s, k + n1, S);
        const auto mab = weighted_empirical(ab, s, k, S);
        const Eigen::VectorXd mix = (ma.normalizer * ma.nu + mb.normalizer * mb.nu) / (ma.normalizer + mb.normalizer);
        EXPECT_LE((mab.nu - mix).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_NEAR(mab.nu.sum(), 1.0, 1e-12);
    }
}

TEST(RateFunction, ZeroAtInvariantMeasure) {
    std::mt19937_64 rng(67);
    for (int t = 0; t < 10; ++t) {
        const Model m = oracle::random_model(rng, 2 + t % 4, 1, 0.05);
        const Eigen::VectorXd mu = oracle::stationary_eigen(m.kernel(0));
        EXPECT_LE(rate_function(m.kernel(0), mu).value, 1e-6);
    }
}

TEST(RateFunction, UniformKernelPointMass) {
    const Eigen::MatrixXd U = Eigen::MatrixXd::Constant(2, 2, 0.5);
    const auto r = rate_function(U, vec({1.0, 0.0}));
    EXPECT_NEAR(r.value, std::log(2.0), 1e-6);
    // the supremum is approached as g(1) -> -inf, so the range cap leaves a tiny gap
    EXPECT_LE(r.value, std::log(2.0) + 1e-12);
}

TEST(RateFunction, AgreesWithGridOracleOnTwoStates) {
    std::mt19937_64 rng(71);
    RateOptions opts;
    opts.grid = false;
    for (int t = 0; t < 20; ++t) {
        const Model m = oracle::random_model(rng, 2, 1, 0.05);
        const Eigen::VectorXd nu = oracle::random_probability(rng, 2);
        const auto r = rate_function(m.kernel(0), nu, opts);
        const double grid = oracle::rate_grid_2state(m.kernel(0), nu, rate_log_range);
        EXPECT_NEAR(r.value, grid, 1e-6) << "trial " << t;
        EXPECT_EQ(r.method, "ascent");
    }
}

TEST(RateFunction, ReportedValueIsAttainedByReportedF) {
    std::mt19937_64 rng(73);
    for (int t = 0; t < 10; ++t) {
        const Model m = oracle::random_model(rng, 4, 1, 0.05);
        const Eigen::VectorXd nu = oracle::random_probability(rng, 4);
        const auto r = rate_function(m.kernel(0), nu);
        EXPECT_NEAR(r.f.minCoeff(), 1.0, 1e-12);
        EXPECT_NEAR(rate_objective(m.kernel(0), nu, r.f.array().log().matrix()), r.value, 1e-10);
        EXPECT_GE(r.value, 0.0);
    }
}

TEST(RateFunction, TruncatedRateIsMonotoneInD) {
    std::mt19937_64 rng(79);
    for (int t = 0; t < 10; ++t) {
        const Model m = oracle::random_model(rng, 3, 1, 0.05);
        const Eigen::VectorXd nu = oracle::random_probability(rng, 3);
        double prev = 0.0;
        for (double d : {2.0, 10.0, 100.0}) {
            RateOptions opts;
            opts.d = d;
            const auto r = rate_function(m.kernel(0), nu, opts);
            EXPECT_GE(r.value, prev - 1e-9);
            EXPECT_LE(r.f.maxCoeff(), d * r.f.minCoeff() * (1.0 + 1e-12));
            prev = r.value;
        }
        EXPECT_LE(prev, rate_function(m.kernel(0), nu).value + 1e-9);
    }
}

TEST(RateFunction, PositiveAwayFromInvariantMeasure) {
    std::mt19937_64 rng(83);
    for (int t = 0; t < 10; ++t) {
        const Model m = gen_model({3, 1, 0.05, static_cast<std::uint64_t>(t)});
        const Eigen::VectorXd mu = invariant_measure(m.kernel(0));
        Index j = 0;
        mu.minCoeff(&j);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
        e(static_cast<Eigen::Index>(j)) = 1.0;
        const Eigen::VectorXd nu = 0.5 * mu + 0.5 * e;
        ASSERT_GE(0.5 * (nu - mu).cwiseAbs().sum(), 0.05);
        EXPECT_GE(rate_function(m.kernel(0), nu).value, 1e-4);
    }
}

TEST(RateFunction, Errors) {
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
    EXPECT_EQ(code_of([&] { rate_function(I, vec({0.5, 0.5})); }), ErrorCode::NotErgodic);
    RateOptions bad;
    bad.d = 1.0;
    EXPECT_EQ(code_of([&] { rate_function(ref_P(), vec({0.5, 0.5}), bad); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { rate_function(ref_P(), vec({0.7, 0.5})); }), ErrorCode::InvalidArgument);
}

TEST(DvCheck, Examples) {
    const auto h = DiscountSchedule::hyperbolic(1, 1);
    const auto flat = dv_supermartingale_check(ref_P(), vec({3.0, 3.0}), h, 0, 40, 0);
    EXPECT_NEAR(flat.lhs, 1.0, 1e-14);
    EXPECT_TRUE(flat.pass);

    const Eigen::VectorXd f = vec({2.0, 1.0});
    const Eigen::VectorXd Pf = ref_P() * f;
    for (Index x : {0u, 1u}) {
        const auto one = dv_supermartingale_check(ref_P(), f, h, 4, 1, x);
        EXPECT_NEAR(one.lhs, std::pow(f(x) / Pf(x), h.phi(4)), 1e-15);
        EXPECT_NEAR(one.d_f, 2.0, 0.0);
    }
    EXPECT_TRUE(dv_supermartingale_check(ref_P(), f, h, 0, 30, 0).pass);
    EXPECT_THROW(dv_supermartingale_check(ref_P(), vec({0.5, 1.0}), h, 0, 5, 0), Error);
}

TEST(DvCheck, MatchesPathEnumeration) {
    std::mt19937_64 rng(89);
    const auto h = DiscountSchedule::hyperbolic(1, 1);
    for (int t = 0; t < 10; ++t) {
        const Model m = oracle::random_model(rng, 3, 1);
        Eigen::VectorXd f(3);
        for (int i = 0; i < 3; ++i)
            f(i) = 1.0 + 4.0 * std::uniform_real_distribution<double>(0, 1)(rng);
        const Eigen::VectorXd hfun = (f.array() / (m.kernel(0) * f).array()).log();
        std::vector<double> phi(7);
        for (Index j = 0; j < 7; ++j)
            phi[j] = h.phi(2 + j);
        // log E exp(sum phi h) = gamma * norm * risk value at gamma = 1
        double norm = 0.0;
        for (double p : phi)
            norm += p;
        const double expect = std::exp(norm * oracle::path_enumeration_risk(m.kernel(0), hfun, phi, 1.0, 1));
        EXPECT_NEAR(dv_supermartingale_check(m.kernel(0), f, h, 2, 7, 1).lhs, expect, 1e-12 * expect);
    }
}

TEST(DvCheck, HoldsForRandomTestFunctions) {
    std::mt19937_64 rng(97);
    for (int t = 0; t < 40; ++t) {
        const Model m = gen_model({2 + static_cast<Index>(t % 4), 1, 0.05, static_cast<std::uint64_t>(t)});
        const Index S = m.n_states();
        Eigen::VectorXd f(S);
        for (Index i = 0; i < S; ++i)
            f(i) = 1.0 + 9.0 * std::uniform_real_distribution<double>(0, 1)(rng);
        f /= f.minCoeff();
        for (const auto& s : {DiscountSchedule::unit(), DiscountSchedule::hyperbolic(1, 1)})
            EXPECT_TRUE(dv_supermartingale_check(m.kernel(0), f, s, t % 3, 300, t % S).pass);
    }
}

TEST(ExactQ, TrivialThresholds) {
    const auto h = DiscountSchedule::hyperbolic(1, 1);
    const Eigen::VectorXd f = vec({2.0, 1.0});
    const Eigen::VectorXd hfun = (f.array() / (ref_P() * f).array()).log();
    EXPECT_EQ(exact_Q(ref_P(), h, 0, 10, {f, hfun.maxCoeff() + 0.01}, 0), 0.0);
    EXPECT_NEAR(exact_Q(ref_P(), h, 0, 10, {f, hfun.minCoeff()}, 0), 1.0, 1e-14);
}

TEST(ExactQ, MatchesMonteCarlo) {
    const auto h = DiscountSchedule::hyperbolic(1, 1);
    const Eigen::VectorXd f = vec({2.0, 1.0});
    std::vector<double> phi(14);
    for (Index j = 0; j < 14; ++j)
        phi[j] = h.phi(j);
    const double q = exact_Q(ref_P(), h, 0, 14, {f, 0.05}, 0);
    const auto mc = oracle::mc_threshold(ref_P(), f, phi, 0.05, 0, 2024, 1'000'000);
    EXPECT_LE(std::abs(q - mc.p), 4.0 * mc.stderr_);
}

TEST(ExactQ, ThreadCountDoesNotChangeResult) {
    const Model m = gen_model({3, 1, 0.05, 7});
    const auto h = DiscountSchedule::hyperbolic(1, 1);
    const ThresholdEvent ev{vec({1.0, 3.0, 2.0}), 0.01};
    const double a = exact_Q(m.kernel(0), h, 1, 12, ev, 2, 1);
    const double b = exact_Q(m.kernel(0), h, 1, 12, ev, 2, 5);
    EXPECT_EQ(a, b);
}

TEST(ExactQ, SizeGuards) {
    const auto u = DiscountSchedule::unit();
    const ThresholdEvent ev{vec({2.0, 1.0}), 0.05};
    EXPECT_NO_THROW(exact_Q(ref_P(), u, 0, 22, ev, 0));
    EXPECT_EQ(code_of([&] { exact_Q(ref_P(), u, 0, 23, ev, 0); }), ErrorCode::TooLarge);
    const Model m = gen_model({3, 1, 0.05, 1});
    EXPECT_EQ(code_of([&] { exact_Q(m.kernel(0), u, 0, 20, {vec({1.0, 2.0, 3.0}), 0.0}, 0); }), ErrorCode::TooLarge);
}

TEST(LdpBound, ReferenceExample) {
    const auto h = DiscountSchedule::hyperbolic(1, 1);
    for (double kappa : {0.02, 0.05}) {
        const auto r = ldp_upper_bound_check(ref_P(), vec({2.0, 1.0}), kappa, h, 0, {8, 9, 10, 11, 12, 13, 14});
        EXPECT_TRUE(r.bound_pass);
        EXPECT_TRUE(r.trend_pass);
        EXPECT_EQ(r.rows.size(), 7u);
        for (const auto& row : r.rows)
            EXPECT_NEAR(row.bound, 2.0 * std::exp(-kappa * row.sum_phi), 1e-15);
    }
}

TEST(LdpBound, ConstantTestFunctionAndZeroKappa) {
    const auto h = DiscountSchedule::hyperbolic(1, 1);
    const auto c = ldp_upper_bound_check(ref_P(), vec({1.0, 1.0}), 0.05, h, 0, {5, 10});
    EXPECT_TRUE(c.bound_pass);
    for (const auto& row : c.rows)
        EXPECT_EQ(row.q_exact, 0.0);
    const auto z = ldp_upper_bound_check(ref_P(), vec({2.0, 1.0}), 0.0, h, 0, {5, 10});
    EXPECT_TRUE(z.bound_pass);
    for (const auto& row : z.rows)
        EXPECT_NEAR(row.bound, 2.0, 0.0);
}

TEST(LdpBound, RandomModelsPass) {
    std::mt19937_64 rng(101);
    for (int t = 0; t < 8; ++t) {
        const Model m = gen_model({3, 1, 0.05, static_cast<std::uint64_t>(t)});
        Eigen::VectorXd f(3);
        for (int i = 0; i < 3; ++i)
            f(i) = 1.0 + 3.0 * std::uniform_real_distribution<double>(0, 1)(rng);
        f /= f.minCoeff();
        const auto r = ldp_upper_bound_check(m.kernel(0), f, 0.03, DiscountSchedule::unit(), 0, {6, 9, 12}, t % 3);
        EXPECT_TRUE(r.bound_pass) << "trial " << t;
    }
}

TEST(HalfSpaceRate, TwoStateGridOracle) {
    const Eigen::VectorXd v = vec({1.0, 0.0});
    const Eigen::MatrixXd P = ref_P();
    for (double t : {0.7, 0.8, 0.5, 0.3}) {
        // over nu = (p, 1-p): minimize the grid-oracle rate on the feasible side
        double best = INFINITY;
        for (int i = 0; i <= 1000; ++i) {
            const double p = i / 1000.0;
            if (p < t)
                continue;
            best = std::min(best, oracle::rate_grid_2state(P, vec({p, 1.0 - p}), rate_log_range, 1e-3));
        }
        const auto r = rate_inf_halfspace(P, v, t);
        EXPECT_NEAR(r.value, best, 1e-4) << "t=" << t;
        EXPECT_GE(r.argmin.dot(v), t - 1e-9);
    }
    EXPECT_TRUE(std::isinf(rate_inf_halfspace(P, v, 1.5).value));
}

TEST(DeviationSet, Examples) {
    const Eigen::MatrixXd P = ref_P();
    const Eigen::VectorXd cu = vec({1.0, 0.0});
    EXPECT_EQ(code_of([&] { rate_inf_over_deviation_set(P, cu, 1.5); }), ErrorCode::EmptySet);

    const auto d = rate_inf_over_deviation_set(P, cu, 0.1);
    EXPECT_GT(d.e, 0.0);
    EXPECT_NEAR(d.mean, 2.0 / 3.0, 1e-12);
    double grid = INFINITY;
    for (int i = 0; i <= 2000; ++i) {
        const double p = i / 2000.0;
        if (std::abs(p - 2.0 / 3.0) < 0.1)
            continue;
        grid = std::min(grid, oracle::rate_grid_2state(P, vec({p, 1.0 - p}), rate_log_range, 1e-3));
    }
    EXPECT_NEAR(d.e, grid, 1e-4);

    double prev = INFINITY;
    for (double eps : {0.1, 0.03, 0.01, 0.001}) {
        const double e = rate_inf_over_deviation_set(P, cu, eps).e;
        EXPECT_LT(e, prev);
        prev = e;
    }
    EXPECT_LT(prev, 1e-4);
}

TEST(DeviationSet, HigherDimensionIsPositiveAndFeasible) {
    const Model m = gen_model({4, 1, 0.05, 3});
    const Eigen::VectorXd cu = m.reward().col(0);
    const auto d = rate_inf_over_deviation_set(m.kernel(0), cu, 0.05);
    EXPECT_GT(d.e, 0.0);
    EXPECT_GE(std::abs(d.argmin.dot(cu) - d.mean), 0.05 - 1e-9);
    EXPECT_NEAR(rate_function(m.kernel(0), d.argmin).value, d.e, 1e-6);
}

TEST(RiskAverseMargin, ReferencePasses) {
    const Model ref = oracle::reference_model();
    const StationaryPolicy u({0, 0});
    const auto dev = rate_inf_over_deviation_set(ref.kernel(0), vec({1.0, 0.0}), 0.1);
    const double gamma = -std::min(0.01, dev.e / 4.0);
    for (const auto& s : {DiscountSchedule::hyperbolic(1, 1), DiscountSchedule::unit()}) {
        const auto r = theorem5_margin(ref, u, s, 0.1, gamma, 0, 1000);
        EXPECT_TRUE(r.pass);
        EXPECT_NEAR(r.lambda_u, 2.0 / 3.0, 1e-12);
        EXPECT_NEAR(r.margin, r.value - r.lambda_u, 1e-15);
        // risk aversion never exceeds the risk-neutral functional at the same horizon
        EXPECT_LE(r.value, exact_discounted_value(ref, u, s, 0, 1000, 0).value + 1e-12);
    }
}

TEST(RiskAverseMargin, ConstantRewardHasZeroMargin) {
    const Model m = oracle::reference_model().with_reward(Eigen::MatrixXd::Constant(2, 1, 0.4));
    for (double g : {-0.01, -1.0, -10.0}) {
        const auto r = theorem5_margin(m, StationaryPolicy({0, 0}), DiscountSchedule::hyperbolic(1, 1), 0.1, g, 0, 50);
        EXPECT_TRUE(r.pass);
        EXPECT_NEAR(r.margin, 0.0, 1e-13);
    }
}

TEST(RiskAverseMargin, Errors) {
    const Model ref = oracle::reference_model();
    const StationaryPolicy u({0, 0});
    const auto s = DiscountSchedule::hyperbolic(1, 1);
    EXPECT_EQ(code_of([&] { theorem5_margin(ref, u, s, 0.1, -10.0, 0, 100); }), ErrorCode::PreconditionGamma);
    EXPECT_EQ(code_of([&] { theorem5_margin(ref, u, s, 0.1, 0.5, 0, 100); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { theorem5_margin(ref, u, s, -0.1, -0.001, 0, 100); }), ErrorCode::InvalidArgument);
}

TEST(RiskAverseMargin, SlackVanishesUnderUnitSchedule) {
    const Model ref = oracle::reference_model();
    const StationaryPolicy u({0, 0});
    const double gamma = -0.005;
    double prev = INFINITY;
    for (Index n : {1000u, 4000u, 16000u}) {
        const auto r = theorem5_margin(ref, u, DiscountSchedule::unit(), 0.1, gamma, 0, n);
        EXPECT_TRUE(r.pass);
        EXPECT_LT(r.slack, prev);
        prev = r.slack;
    }
    EXPECT_LT(prev, 0.01);
}
