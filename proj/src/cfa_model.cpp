#include "clickcfa/cfa_model.hpp"

#include <cmath>

#include "clickcfa/errors.hpp"
#include "clickcfa/layers.hpp"
#include "clickcfa/rng.hpp"

namespace clickcfa::cfa {

CfaModel CfaModel::make(ModelKind kind, std::size_t input_dim, std::size_t hidden,
                        std::uint64_t seed, std::size_t conv_channels, std::size_t conv_kernel) {
    CfaModel m;
    m.kind_ = kind;
    m.input_dim_ = input_dim;
    m.hidden_ = hidden;
    m.conv_channels_ = conv_channels;
    m.conv_kernel_ = conv_kernel;
    if (kind == ModelKind::Cnn) {
        m.params_.add("cnn.K", {conv_channels, input_dim * conv_kernel});
        m.params_.add("cnn.b", {conv_channels});
        m.params_.init_uniform("cnn.K", 1.0 / std::sqrt(static_cast<double>(conv_channels)),
                               seed);
        nn::add_linear_params(m.params_, "head.", conv_channels, 2,
                              1.0 / std::sqrt(static_cast<double>(conv_channels)), seed);
    } else {
        nn::add_gru_params(m.params_, "gru.", input_dim, hidden, seed);
        nn::add_linear_params(m.params_, "head.", hidden, 2,
                              1.0 / std::sqrt(static_cast<double>(hidden)), seed);
    }
    return m;
}

void CfaModel::load_pretrained_gru(const nn::ParamStore& checkpoint) {
    if (kind_ == ModelKind::Cnn)
        fail(ErrorKind::Usage, "pre-trained GRU weights do not apply to the CNN model");
    for (std::size_t i = 0; i < checkpoint.entry_count(); ++i) {
        const auto& e = checkpoint.entry(i);
        if (e.name.rfind("gru.", 0) != 0) continue;
        if (!params_.has(e.name)) fail(ErrorKind::Usage, "checkpoint tensor unknown: " + e.name);
        auto dst = params_.values(e.name);
        auto src = checkpoint.values(i);
        if (dst.size() != src.size())
            fail(ErrorKind::Usage, "checkpoint shape mismatch for " + e.name +
                                       " (different hidden size?)");
        std::copy(src.begin(), src.end(), dst.begin());
    }
}

nn::Var CfaModel::build_prob(nn::Tape& tape, const nn::ParamVars& vars,
                             const EncodedSample& sample) const {
    if (sample.len == 0) fail(ErrorKind::EmptyEncoding, "cannot run the model on zero rows");
    if (sample.dim != input_dim_) fail(ErrorKind::Logic, "sample dim mismatch");
    nn::Var features;
    if (kind_ == ModelKind::Cnn) {
        // channel-major copy for the conv
        std::vector<double> chans(sample.dim * sample.len);
        for (std::size_t t = 0; t < sample.len; ++t)
            for (std::size_t c = 0; c < sample.dim; ++c)
                chans[c * sample.len + t] = sample.rows[t * sample.dim + c];
        const nn::Var conv = tape.conv1d(vars.by_entry[params_.entry_index("cnn.K")],
                                         vars.by_entry[params_.entry_index("cnn.b")], chans,
                                         sample.dim, sample.len, conv_kernel_);
        const std::size_t t_pad = std::max(sample.len, conv_kernel_);
        features = tape.maxpool_time(tape.relu(conv), conv_channels_, t_pad - conv_kernel_ + 1);
    } else {
        features = nn::gru_sequence(tape, nn::gru_step_vars(vars, params_, "gru."),
                                    sample.rows.data(), sample.len, sample.dim, hidden_);
    }
    return tape.softmax(nn::linear(tape, vars, params_, "head.", features));
}

nn::Var CfaModel::build_loss(nn::Tape& tape, const nn::ParamVars& vars,
                             const EncodedSample& sample) const {
    return tape.bce(build_prob(tape, vars, sample), sample.onehot);
}

nn::LossBuilder CfaModel::loss_builder(const std::vector<EncodedSample>& data) const {
    return [this, &data](nn::Tape& tape, const nn::ParamVars& vars, std::size_t idx) {
        return build_loss(tape, vars, data[idx]);
    };
}

Prediction CfaModel::predict(const EncodedSample& sample) const {
    nn::Tape tape;
    const nn::ParamVars vars = nn::leaf_store(tape, params_);
    const auto p = tape.value(build_prob(tape, vars, sample));
    Prediction out;
    out.p_cfa = p[0];
    out.p_non = p[1];
    out.hard = p[0] > p[1] ? 1 : 0; // tie goes to non-CFA
    return out;
}

std::vector<EpochMetrics> train_plain(CfaModel& model, const std::vector<EncodedSample>& train,
                                      const PlainTrainConfig& cfg,
                                      const std::vector<EncodedSample>* validation) {
    if (train.empty()) fail(ErrorKind::Degenerate, "empty training set");
    const nn::LossBuilder build = model.loss_builder(train);
    Rng batch_rng(derive_seed(cfg.seed, 0x7A41));

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<EpochMetrics> history;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        batch_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
            nn::BatchGrads bg = nn::per_sample_grads(model.params(), batch, build);
            const std::vector<double> unit(batch.size(), 1.0);
            nn::weighted_sgd_apply(model.params(), bg.grads, unit, cfg.lr, batch.size());
            for (double l : bg.losses) loss_sum += l;
            loss_count += batch.size();
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_sum / static_cast<double>(loss_count);
        if (validation && !validation->empty()) {
            const auto preds = predict_all(model, *validation);
            m.val_acc = accuracy(preds, *validation);
        }
        history.push_back(m);
    }
    return history;
}

std::vector<Prediction> predict_all(const CfaModel& model,
                                    const std::vector<EncodedSample>& data) {
    std::vector<Prediction> out;
    out.reserve(data.size());
    for (const auto& s : data) out.push_back(model.predict(s));
    return out;
}

double accuracy(const std::vector<Prediction>& preds, const std::vector<EncodedSample>& data) {
    if (preds.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i].hard == data[i].label;
    return static_cast<double>(hit) / static_cast<double>(preds.size());
}

} // namespace clickcfa::cfa
