#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "clickcfa/recipe.hpp"
#include "clickcfa/training.hpp"

namespace clickcfa::cfa {

// One model-ready sample: `rows` is len x dim row-major feature rows.
struct EncodedSample {
    std::vector<double> rows;
    std::size_t dim = 5;
    std::size_t len = 0;
    std::array<double, 2> onehot{}; // (1,0) = CFA, (0,1) = non-CFA
    int label = -1;                 // 1 = CFA
    std::size_t session = 0;        // index into the source corpus
};

struct Prediction {
    double p_cfa = 0.0;
    double p_non = 0.0;
    int hard = 0; // 1 = CFA; ties go to non-CFA
};

// GRU (or n-gram GRU / 1-D CNN) trunk with a softmax pair head.
class CfaModel {
public:
    static CfaModel make(ModelKind kind, std::size_t input_dim, std::size_t hidden,
                         std::uint64_t seed, std::size_t conv_channels = 64,
                         std::size_t conv_kernel = 3);

    // Replaces gru.* tensors from a pre-training checkpoint; the head remains
    // at its fresh initialization.
    void load_pretrained_gru(const nn::ParamStore& checkpoint);

    nn::Var build_prob(nn::Tape& tape, const nn::ParamVars& vars,
                       const EncodedSample& sample) const;
    nn::Var build_loss(nn::Tape& tape, const nn::ParamVars& vars,
                       const EncodedSample& sample) const;
    nn::LossBuilder loss_builder(const std::vector<EncodedSample>& data) const;

    Prediction predict(const EncodedSample& sample) const;

    ModelKind kind() const { return kind_; }
    std::size_t input_dim() const { return input_dim_; }
    std::size_t hidden() const { return hidden_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

private:
    ModelKind kind_ = ModelKind::Gru;
    std::size_t input_dim_ = 5;
    std::size_t hidden_ = 128;
    std::size_t conv_channels_ = 64;
    std::size_t conv_kernel_ = 3;
    nn::ParamStore params_;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_acc = -1.0; // -1 when no validation set was supplied
};

struct PlainTrainConfig {
    std::size_t batch_size = 32;
    double lr = 0.001;
    std::size_t epochs = 100;
    std::uint64_t seed = 1;
};

// Unweighted BCE minimization; internally the weighted update path with all
// weights = 1 so the meta trainer's reduction identity holds step for step.
std::vector<EpochMetrics> train_plain(CfaModel& model, const std::vector<EncodedSample>& train,
                                      const PlainTrainConfig& cfg,
                                      const std::vector<EncodedSample>* validation = nullptr);

std::vector<Prediction> predict_all(const CfaModel& model,
                                    const std::vector<EncodedSample>& data);

double accuracy(const std::vector<Prediction>& preds, const std::vector<EncodedSample>& data);

} // namespace clickcfa::cfa
