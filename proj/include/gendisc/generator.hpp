#pragma once

#include <cstdint>

#include "gendisc/model.hpp"

namespace gendisc {

struct GeneratorSpec {
    Index n_states = 2;
    Index n_actions = 1;
    double min_entry = 0.05;
    std::uint64_t seed = 0;
};

/// Random model with every kernel entry >= min_entry (up to rounding) and
/// rewards uniform in [0, 1). Each row is min_entry + (1 - S min_entry) u/sum u
/// for u uniform, renormalized. Throws InvalidArgument unless
/// 0 < min_entry and min_entry * n_states < 1.
Model gen_model(const GeneratorSpec& spec);

} // namespace gendisc
