#pragma once

#include <cstdint>
#include <vector>

#include "clickcfa/cfa_model.hpp"
#include "clickcfa/clustering.hpp"
#include "clickcfa/training.hpp"

namespace clickcfa::meta {

// Loss-to-weight perceptron: 1 -> 100 (sigmoid) -> 1 (sigmoid), output in (0,1).
class WeightingNet {
public:
    static WeightingNet make(std::uint64_t seed);
    static WeightingNet zeros(); // outputs exactly 0.5 everywhere

    double weigh(double loss_value) const;
    nn::Var forward(nn::Tape& tape, const nn::ParamVars& vars, double loss_value) const;

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

    static constexpr std::size_t kHidden = 100;

private:
    nn::ParamStore params_;
};

// Per-cluster epoch allocation; earlier clusters absorb the remainder, so the
// first cluster trains for ceil(T/N_c) epochs when T % N_c != 0.
std::vector<std::size_t> meta_schedule(std::size_t total_epochs, std::size_t n_clusters);

// Inputs fed to the weighting net; optional per-batch standardization.
std::vector<double> weight_inputs(const std::vector<double>& losses, bool standardize);

// Lookahead parameters w_hat(theta) built on the tape:
// w_hat = w - (alpha/|B|) * sum_n W(L_n; theta) * g_n, with the g_n constant.
struct Lookahead {
    nn::ParamVars w_hat;
    std::vector<nn::Var> sample_weights;
};

Lookahead build_lookahead(nn::Tape& tape, const nn::ParamStore& w, const WeightingNet& net,
                          const nn::ParamVars& theta_vars, const nn::BatchGrads& batch,
                          double alpha, bool standardize);

// One SGD step on theta against the meta loss evaluated at w_hat(theta).
// Exact second-order gradient: the per-sample training gradients are true
// constants with respect to theta. Returns the meta loss value.
double update_theta(WeightingNet& net, const nn::ParamStore& w, const nn::BatchGrads& batch,
                    const std::vector<std::size_t>& meta_batch,
                    const nn::LossBuilder& meta_loss, double alpha, double beta,
                    bool standardize);

// Committed classifier step with weights from the (fresh) theta. Reuses the
// per-sample gradients already computed at w_t.
std::vector<double> commit_update(nn::ParamStore& w, const WeightingNet& net,
                                  const nn::BatchGrads& batch, double alpha, bool standardize);

struct MetaTrainConfig {
    std::size_t batch_size = 32;
    std::size_t meta_batch_size = 32;
    double alpha = 0.001;
    double beta = 0.001;
    std::size_t epochs_total = 100; // T
    std::uint64_t seed = 1;
    bool standardize_weight_input = false;
    bool theta_update_per_epoch = false; // default: per batch
};

struct MetaIterRow {
    std::size_t iteration = 0;
    int cluster = 0;
    double train_loss = 0.0;
    double meta_loss = 0.0;
    double mean_weight = 0.0;
    double std_weight = 0.0;
};

// Algorithm 1: entropy-ordered clusters, T/N_c epochs each; every training
// batch does lookahead -> theta step (on the scheduled cluster) -> committed
// weighted step. Batch order comes from the same stream the plain trainer
// uses; meta batches draw from a separate stream.
std::vector<MetaIterRow> run_algorithm1(cfa::CfaModel& model, WeightingNet& net,
                                        const std::vector<cfa::EncodedSample>& train,
                                        const std::vector<cfa::EncodedSample>& meta,
                                        const cluster::MetaClusterSet& clusters,
                                        const MetaTrainConfig& cfg);

} // namespace clickcfa::meta
