#pragma once

#include <functional>
#include <vector>

#include "clickcfa/tape.hpp"

namespace clickcfa::nn {

// Builds one sample's scalar loss on the tape against the given parameter
// vars (which may be leaves or lookahead Combine nodes).
using LossBuilder = std::function<Var(Tape&, const ParamVars&, std::size_t sample_index)>;

struct BatchGrads {
    std::vector<double> losses;             // per-sample loss values
    std::vector<std::vector<double>> grads; // per-sample flat gradients
};

// One forward+backward per sample at fixed parameters. Parameters are leafed
// once; each backward sweep is restricted to that sample's subgraph. Both the
// plain and the meta trainer go through this path, so their per-sample
// gradients are bit-identical given identical batches.
BatchGrads per_sample_grads(const ParamStore& params, const std::vector<std::size_t>& batch,
                            const LossBuilder& build);

} // namespace clickcfa::nn
