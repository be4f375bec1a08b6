#include "clickcfa/pretrain.hpp"

#include <cmath>
#include <iostream>

#include "clickcfa/errors.hpp"
#include "clickcfa/layers.hpp"
#include "clickcfa/rng.hpp"
#include "clickcfa/training.hpp"

namespace clickcfa::pretrain {

std::vector<LeaveOneOutSample>
expand_corpus(const std::vector<click::TimeVaryingEncoding>& sequences, bool gap_marker,
              ExpandStats* stats) {
    ExpandStats st;
    std::vector<LeaveOneOutSample> out;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        const auto& rows = sequences[s].rows;
        if (rows.size() < 2) {
            if (!rows.empty()) ++st.skipped_single_event;
            continue;
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            LeaveOneOutSample sample;
            sample.session = s;
            sample.held_index = i;
            sample.session_len = rows.size();
            sample.target = rows[i];
            const bool marked = gap_marker && i > 0 && i + 1 < rows.size();
            sample.len = rows.size() - 1 + (marked ? 1 : 0);
            sample.context.reserve(sample.len * 5);
            for (std::size_t j = 0; j < rows.size(); ++j) {
                if (j == i) {
                    if (marked) sample.context.insert(sample.context.end(), 5, -1.0);
                    continue;
                }
                sample.context.insert(sample.context.end(), rows[j].begin(), rows[j].end());
            }
            out.push_back(std::move(sample));
            ++st.samples;
        }
    }
    if (stats) *stats = st;
    return out;
}

PretrainResult run_pretrain(const std::vector<LeaveOneOutSample>& samples,
                            const PretrainConfig& cfg) {
    nn::ParamStore params;
    nn::add_gru_params(params, "gru.", 5, cfg.hidden, cfg.seed);
    nn::add_linear_params(params, "prehead.", cfg.hidden, 5,
                          1.0 / std::sqrt(static_cast<double>(cfg.hidden)), cfg.seed);
    // keep the rectified output units alive at the start; with a zero bias a
    // unit whose pre-activation starts negative never receives gradient
    for (double& b : params.values("prehead.b")) b = 0.1;

    const nn::LossBuilder build = [&](nn::Tape& tape, const nn::ParamVars& vars,
                                      std::size_t idx) {
        const auto& s = samples[idx];
        const nn::Var h = nn::gru_sequence(tape, nn::gru_step_vars(vars, params, "gru."),
                                           s.context.data(), s.len, 5, cfg.hidden);
        const nn::Var pred = tape.relu(nn::linear(tape, vars, params, "prehead.", h));
        const nn::Var err = tape.mse(pred, s.target);
        return tape.scale(err, 1.0 / static_cast<double>(s.session_len));
    };

    PretrainResult result;
    Rng batch_rng(derive_seed(cfg.seed, 0x9DE7));
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> epoch_losses;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs && !samples.empty(); ++epoch) {
        batch_rng.shuffle(order);
        double l_pre = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
            nn::BatchGrads bg = nn::per_sample_grads(params, batch, build);
            const std::vector<double> unit(batch.size(), 1.0);
            nn::weighted_sgd_apply(params, bg.grads, unit, cfg.lr, batch.size());
            for (double l : bg.losses) {
                if (!std::isfinite(l))
                    fail(ErrorKind::Diverged,
                         "pre-training diverged at epoch " + std::to_string(epoch));
                l_pre += l;
            }
        }
        epoch_losses.push_back(l_pre);
        result.loss_history.emplace_back(epoch, l_pre);

        const std::size_t t = epoch_losses.size();
        if (t >= 6) {
            auto window_mean = [&](std::size_t endi) {
                double s = 0.0;
                for (std::size_t i = endi - 5; i < endi; ++i) s += epoch_losses[i];
                return s / 5.0;
            };
            if (window_mean(t) > window_mean(t - 1)) {
                std::cerr << "warning: pre-training loss rose on the smoothed window; halting at "
                             "epoch "
                          << epoch << "\n";
                result.halted_non_decreasing = true;
                break;
            }
        }
        if (t >= 11 && epoch_losses[t - 11] - epoch_losses[t - 1] < 1e-5) {
            result.stopped_early = true;
            break;
        }
    }

    for (std::size_t i = 0; i < params.entry_count(); ++i) {
        const auto& e = params.entry(i);
        if (e.name.rfind("gru.", 0) != 0) continue;
        const std::size_t idx = result.gru_checkpoint.add(e.name, e.shape, e.trainable);
        auto dst = result.gru_checkpoint.values(idx);
        auto src = params.values(i);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return result;
}

} // namespace clickcfa::pretrain
