#include "gendisc/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gendisc/numeric.hpp"

namespace gendisc {

namespace {

using EIdx = Eigen::Index;

EIdx ei(Index i) { return static_cast<EIdx>(i); }

} // namespace

Model::Model(std::vector<Eigen::MatrixXd> kernel, Eigen::MatrixXd reward)
    : kernel_(std::move(kernel)), reward_(std::move(reward)) {
    if (reward_.rows() < 1 || reward_.cols() < 1)
        throw Error(ErrorCode::InvalidModel, "model needs at least one state and one action");
    if (kernel_.size() != static_cast<std::size_t>(reward_.cols())) {
        std::ostringstream msg;
        msg << "reward table has " << reward_.cols() << " actions but " << kernel_.size()
            << " kernels were given";
        throw Error(ErrorCode::InvalidModel, msg.str());
    }
    if (!reward_.allFinite())
        throw Error(ErrorCode::InvalidModel, "reward table contains NaN or infinite entries");

    const EIdx n = reward_.rows();
    for (std::size_t a = 0; a < kernel_.size(); ++a) {
        const auto& P = kernel_[a];
        if (P.rows() != n || P.cols() != n) {
            std::ostringstream msg;
            msg << "kernel " << a << " is " << P.rows() << "x" << P.cols() << ", expected " << n << "x" << n;
            throw Error(ErrorCode::InvalidModel, msg.str());
        }
        for (EIdx x = 0; x < n; ++x) {
            double row = 0.0;
            for (EIdx y = 0; y < n; ++y) {
                const double p = P(x, y);
                if (!std::isfinite(p) || p < 0.0) {
                    std::ostringstream msg;
                    msg << "kernel " << a << " entry (" << x << "," << y << ") = " << p << " is not a probability";
                    throw Error(ErrorCode::InvalidModel, msg.str());
                }
                row += p;
            }
            if (std::abs(row - 1.0) > row_sum_tolerance) {
                std::ostringstream msg;
                msg.precision(17);
                msg << "kernel " << a << " row " << x << " sums to " << row;
                throw Error(ErrorCode::InvalidModel, msg.str());
            }
        }
    }
}

Model Model::with_reward(Eigen::MatrixXd reward) const {
    return Model(kernel_, std::move(reward));
}

void StationaryPolicy::validate(const Model& model) const {
    if (actions_.size() != model.n_states()) {
        std::ostringstream msg;
        msg << "policy covers " << actions_.size() << " states, model has " << model.n_states();
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    for (Index x = 0; x < actions_.size(); ++x) {
        if (actions_[x] >= model.n_actions()) {
            std::ostringstream msg;
            msg << "policy action " << actions_[x] << " at state " << x << " out of range";
            throw Error(ErrorCode::InvalidArgument, msg.str());
        }
    }
}

TimeVaryingPolicy::TimeVaryingPolicy(Index start, std::vector<StationaryPolicy> entries)
    : start_(start), entries_(std::move(entries)) {
    if (entries_.empty())
        throw Error(ErrorCode::InvalidArgument, "time-varying policy needs at least one entry");
}

const StationaryPolicy& TimeVaryingPolicy::at(Index i) const {
    if (i < start_) {
        std::ostringstream msg;
        msg << "time " << i << " precedes policy start " << start_;
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    return entries_[std::min(i - start_, entries_.size() - 1)];
}

void TimeVaryingPolicy::validate(const Model& model) const {
    for (const auto& u : entries_)
        u.validate(model);
}

Eigen::MatrixXd policy_kernel(const Model& model, const StationaryPolicy& u) {
    u.validate(model);
    const EIdx n = ei(model.n_states());
    Eigen::MatrixXd P(n, n);
    for (EIdx x = 0; x < n; ++x)
        P.row(x) = model.kernel(u(static_cast<Index>(x))).row(x);
    return P;
}

Eigen::VectorXd policy_reward(const Model& model, const StationaryPolicy& u) {
    u.validate(model);
    const EIdx n = ei(model.n_states());
    Eigen::VectorXd c(n);
    for (EIdx x = 0; x < n; ++x)
        c(x) = model.reward(static_cast<Index>(x), u(static_cast<Index>(x)));
    return c;
}

Model policy_model(const Model& model, const StationaryPolicy& u) {
    return Model({policy_kernel(model, u)}, Eigen::MatrixXd(policy_reward(model, u)));
}

double ergodicity_coefficient(const Eigen::MatrixXd& rows) {
    double delta = 0.0;
    const EIdx m = rows.rows();
    for (EIdx i = 0; i < m; ++i) {
        for (EIdx j = i + 1; j < m; ++j) {
            // sum of positive parts equals sum of negative parts for two
            // probability rows, so one direction suffices
            double pos = 0.0;
            double neg = 0.0;
            for (EIdx y = 0; y < rows.cols(); ++y) {
                const double d = rows(i, y) - rows(j, y);
                if (d > 0.0)
                    pos += d;
                else
                    neg -= d;
            }
            delta = std::max({delta, pos, neg});
        }
    }
    return std::min(delta, 1.0);
}

double ergodicity_coefficient(const Model& model) {
    const EIdx n = ei(model.n_states());
    const EIdx A = ei(model.n_actions());
    Eigen::MatrixXd rows(n * A, n);
    for (EIdx a = 0; a < A; ++a)
        rows.block(a * n, 0, n, n) = model.kernel(static_cast<Index>(a));
    return ergodicity_coefficient(rows);
}

DensityBounds density_bounds(const Model& model) {
    const double n = static_cast<double>(model.n_states());
    double M = 1.0;
    for (Index a = 0; a < model.n_actions(); ++a) {
        const auto& P = model.kernel(a);
        for (EIdx x = 0; x < P.rows(); ++x) {
            for (EIdx y = 0; y < P.cols(); ++y) {
                const double p = n * P(x, y);
                if (p <= 0.0) {
                    std::ostringstream msg;
                    msg << "kernel " << a << " entry (" << x << "," << y << ") is zero; no finite density bound";
                    throw Error(ErrorCode::FailsA3, msg.str());
                }
                M = std::max({M, p, 1.0 / p});
            }
        }
    }
    return {M, 1.0 - 1.0 / M};
}

double equivalence_constant(const Model& model) {
    double K = 1.0;
    const EIdx n = ei(model.n_states());
    for (Index a = 0; a < model.n_actions(); ++a) {
        const auto& P = model.kernel(a);
        for (EIdx y = 0; y < n; ++y) {
            double hi = 0.0;
            double lo = 1.0;
            for (EIdx x = 0; x < n; ++x) {
                hi = std::max(hi, P(x, y));
                lo = std::min(lo, P(x, y));
            }
            if (hi == 0.0)
                continue;
            if (lo == 0.0) {
                std::ostringstream msg;
                msg << "action " << a << ": column " << y << " is positive in some rows and zero in others";
                throw Error(ErrorCode::FailsB1, msg.str());
            }
            K = std::max(K, hi / lo);
        }
    }
    return K;
}

double reward_span(const Model& model) {
    return model.reward().maxCoeff() - model.reward().minCoeff();
}

double reward_sup_norm(const Model& model) {
    return model.reward().cwiseAbs().maxCoeff();
}

double b2_margin(const Model& model, double gamma) {
    return std::exp(std::abs(gamma) * reward_span(model)) * ergodicity_coefficient(model);
}

} // namespace gendisc
