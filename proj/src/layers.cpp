#include "clickcfa/layers.hpp"

#include <cmath>

#include "clickcfa/errors.hpp"
#include "clickcfa/training.hpp"

namespace clickcfa::nn {

BatchGrads per_sample_grads(const ParamStore& params, const std::vector<std::size_t>& batch,
                            const LossBuilder& build) {
    BatchGrads out;
    out.losses.reserve(batch.size());
    out.grads.reserve(batch.size());
    Tape tape;
    const ParamVars vars = leaf_store(tape, params);
    std::vector<Var> losses;
    losses.reserve(batch.size());
    for (std::size_t idx : batch) losses.push_back(build(tape, vars, idx));
    for (std::size_t n = 0; n < batch.size(); ++n) {
        tape.backward(losses[n]);
        out.losses.push_back(tape.value1(losses[n]));
        out.grads.emplace_back(params.flat_size(), 0.0);
        tape.harvest_param_grads(out.grads.back());
    }
    return out;
}

void add_gru_params(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                    std::size_t hidden, std::uint64_t seed) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (const char* gate : {"z", "r", "h"}) {
        store.add(prefix + "W" + gate, {hidden, input_dim});
        store.add(prefix + "U" + gate, {hidden, hidden});
        store.add(prefix + "b" + gate, {hidden});
        store.init_uniform(prefix + "W" + gate, bound, seed);
        store.init_uniform(prefix + "U" + gate, bound, seed);
    }
}

void add_linear_params(ParamStore& store, const std::string& prefix, std::size_t in,
                       std::size_t out, double bound, std::uint64_t seed) {
    store.add(prefix + "W", {out, in});
    store.add(prefix + "b", {out});
    store.init_uniform(prefix + "W", bound, seed);
}

Var gru_sequence(Tape& tape, const GruStepVars& p, const double* rows, std::size_t len,
                 std::size_t in_dim, std::size_t hidden, std::vector<Var>* all_states) {
    if (len == 0) fail(ErrorKind::EmptyEncoding, "gru over an empty sequence");
    std::vector<double> zeros(hidden, 0.0);
    Var h = tape.constant(zeros);
    for (std::size_t i = 0; i < len; ++i) {
        h = tape.gru_step(p, {rows + i * in_dim, in_dim}, h);
        if (all_states) all_states->push_back(h);
    }
    return h;
}

Var linear(Tape& tape, const ParamVars& vars, const ParamStore& store, const std::string& prefix,
           Var x) {
    return tape.affine(vars.by_entry[store.entry_index(prefix + "W")], x,
                       vars.by_entry[store.entry_index(prefix + "b")]);
}

} // namespace clickcfa::nn
