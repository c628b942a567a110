#include "gendisc/generator.hpp"

#include <random>
#include <sstream>

namespace gendisc {

Model gen_model(const GeneratorSpec& spec) {
    if (spec.n_states < 1 || spec.n_actions < 1)
        throw Error(ErrorCode::InvalidArgument, "generator needs at least one state and one action");
    if (!(spec.min_entry > 0.0) || !(spec.min_entry * static_cast<double>(spec.n_states) < 1.0)) {
        std::ostringstream msg;
        msg << "min_entry " << spec.min_entry << " infeasible for " << spec.n_states << " states";
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    const auto S = static_cast<Eigen::Index>(spec.n_states);
    std::mt19937_64 rng(spec.seed);
    // (0, 1]: the row weights never vanish together
    auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53; };

    const double free_mass = 1.0 - spec.min_entry * static_cast<double>(spec.n_states);
    std::vector<Eigen::MatrixXd> kernel;
    for (Index a = 0; a < spec.n_actions; ++a) {
        Eigen::MatrixXd P(S, S);
        for (Eigen::Index x = 0; x < S; ++x) {
            Eigen::VectorXd u(S);
            for (Eigen::Index y = 0; y < S; ++y)
                u(y) = uniform();
            Eigen::VectorXd row = spec.min_entry + free_mass * (u / u.sum()).array();
            P.row(x) = (row / row.sum()).transpose();
        }
        kernel.push_back(std::move(P));
    }
    Eigen::MatrixXd reward(S, static_cast<Eigen::Index>(spec.n_actions));
    for (Eigen::Index x = 0; x < S; ++x)
        for (Eigen::Index a = 0; a < reward.cols(); ++a)
            reward(x, a) = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return Model(std::move(kernel), std::move(reward));
}

} // namespace gendisc
