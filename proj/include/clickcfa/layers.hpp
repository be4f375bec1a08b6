#pragma once

#include <string>
#include <vector>

#include "clickcfa/tape.hpp"

namespace clickcfa::nn {

// Registers the nine GRU tensors under `prefix` (Wz/Uz/bz, Wr/Ur/br, Wh/Uh/bh).
// Weights are initialized uniform(-1/sqrt(hidden), 1/sqrt(hidden)), biases zero.
void add_gru_params(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                    std::size_t hidden, std::uint64_t seed);

// W (out x in) + b (out), same init rule with the given bound.
void add_linear_params(ParamStore& store, const std::string& prefix, std::size_t in,
                       std::size_t out, double bound, std::uint64_t seed);

// Runs the GRU over `len` rows of width `in_dim` starting from h = 0.
// Returns the final hidden state; optionally collects every hidden state.
Var gru_sequence(Tape& tape, const GruStepVars& p, const double* rows, std::size_t len,
                 std::size_t in_dim, std::size_t hidden, std::vector<Var>* all_states = nullptr);

Var linear(Tape& tape, const ParamVars& vars, const ParamStore& store, const std::string& prefix,
           Var x);

} // namespace clickcfa::nn
