#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "clickcfa/events.hpp"
#include "clickcfa/tensor.hpp"

namespace clickcfa::pretrain {

// This module never sees quiz outcomes: its inputs are bare feature-row
// sequences, so CFA labels are unreachable by construction.

struct LeaveOneOutSample {
    std::vector<double> context; // (len x 5) rows, held-out row removed
    std::size_t len = 0;
    std::array<double, 5> target{};
    std::size_t session = 0;    // origin sequence index
    std::size_t held_index = 0; // origin row index
    std::size_t session_len = 0;
};

struct ExpandStats {
    std::size_t samples = 0;
    std::size_t skipped_single_event = 0;
};

// One sample per (sequence, click). Sequences of length 1 are skipped.
// With gap_marker, an all -1 row marks the hole when it is interior.
std::vector<LeaveOneOutSample>
expand_corpus(const std::vector<click::TimeVaryingEncoding>& sequences, bool gap_marker = false,
              ExpandStats* stats = nullptr);

struct PretrainConfig {
    std::size_t hidden = 128;
    std::size_t batch_size = 32;
    double lr = 0.001;
    std::size_t max_epochs = 100;
    std::uint64_t seed = 1;
};

struct PretrainResult {
    nn::ParamStore gru_checkpoint;               // gru.* only; the head is discarded
    std::vector<std::pair<std::size_t, double>> loss_history; // (epoch, L_pre)
    bool halted_non_decreasing = false; // smoothed loss rose; stopped early with a warning
    bool stopped_early = false;         // < 1e-5 improvement over 10 epochs
};

// Leave-one-out event prediction: GRU over the context, linear 5-dim head,
// ReLU, MSE against the held-out row. Each sample's loss carries a 1/L_uv
// factor so the corpus objective matches the per-session averaging.
PretrainResult run_pretrain(const std::vector<LeaveOneOutSample>& samples,
                            const PretrainConfig& cfg);

} // namespace clickcfa::pretrain
