#include "clickcfa/meta_learn.hpp"

#include <cmath>

#include "clickcfa/errors.hpp"
#include "clickcfa/layers.hpp"
#include "clickcfa/rng.hpp"

namespace clickcfa::meta {

namespace {
WeightingNet make_net(std::uint64_t seed, bool zero) {
    WeightingNet net = WeightingNet::zeros();
    if (!zero) {
        net.params().init_uniform("wnet.W1", 1.0 / std::sqrt(double(WeightingNet::kHidden)), seed);
        net.params().init_uniform("wnet.W2", 1.0 / std::sqrt(double(WeightingNet::kHidden)), seed);
    }
    return net;
}
} // namespace

WeightingNet WeightingNet::zeros() {
    WeightingNet net;
    net.params_.add("wnet.W1", {kHidden, 1});
    net.params_.add("wnet.b1", {kHidden});
    net.params_.add("wnet.W2", {1, kHidden});
    net.params_.add("wnet.b2", {1});
    return net;
}

WeightingNet WeightingNet::make(std::uint64_t seed) { return make_net(seed, false); }

double WeightingNet::weigh(double loss_value) const {
    if (!std::isfinite(loss_value)) fail(ErrorKind::Diverged, "non-finite weighting-net input");
    const auto w1 = params_.values("wnet.W1");
    const auto b1 = params_.values("wnet.b1");
    const auto w2 = params_.values("wnet.W2");
    const auto b2 = params_.values("wnet.b2");
    double out = b2[0];
    for (std::size_t i = 0; i < kHidden; ++i) {
        const double h = 1.0 / (1.0 + std::exp(-(w1[i] * loss_value + b1[i])));
        out += w2[i] * h;
    }
    return 1.0 / (1.0 + std::exp(-out));
}

nn::Var WeightingNet::forward(nn::Tape& tape, const nn::ParamVars& vars,
                              double loss_value) const {
    const nn::Var x = tape.constant1(loss_value);
    const nn::Var h = tape.sigmoid(tape.affine(vars.by_entry[params_.entry_index("wnet.W1")], x,
                                               vars.by_entry[params_.entry_index("wnet.b1")]));
    return tape.sigmoid(tape.affine(vars.by_entry[params_.entry_index("wnet.W2")], h,
                                    vars.by_entry[params_.entry_index("wnet.b2")]));
}

std::vector<std::size_t> meta_schedule(std::size_t total_epochs, std::size_t n_clusters) {
    if (n_clusters == 0) fail(ErrorKind::Logic, "schedule over zero clusters");
    std::vector<std::size_t> out(n_clusters, total_epochs / n_clusters);
    const std::size_t rem = total_epochs % n_clusters;
    for (std::size_t i = 0; i < rem; ++i) out[i] += 1;
    return out;
}

std::vector<double> weight_inputs(const std::vector<double>& losses, bool standardize) {
    if (!standardize) return losses;
    double mean = 0.0;
    for (double l : losses) mean += l;
    mean /= static_cast<double>(losses.size());
    double var = 0.0;
    for (double l : losses) var += (l - mean) * (l - mean);
    const double sd = std::sqrt(var / static_cast<double>(losses.size()));
    std::vector<double> out(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i)
        out[i] = (losses[i] - mean) / (sd > 0.0 ? sd : 1.0);
    return out;
}

Lookahead build_lookahead(nn::Tape& tape, const nn::ParamStore& w, const WeightingNet& net,
                          const nn::ParamVars& theta_vars, const nn::BatchGrads& batch,
                          double alpha, bool standardize) {
    Lookahead out;
    const auto inputs = weight_inputs(batch.losses, standardize);
    out.sample_weights.reserve(inputs.size());
    for (double x : inputs) out.sample_weights.push_back(net.forward(tape, theta_vars, x));
    std::vector<const std::vector<double>*> grads;
    grads.reserve(batch.grads.size());
    for (const auto& g : batch.grads) grads.push_back(&g);
    const double coef = -alpha / static_cast<double>(batch.grads.size());
    out.w_hat = nn::combine_store(tape, w, coef, out.sample_weights, grads);
    return out;
}

double update_theta(WeightingNet& net, const nn::ParamStore& w, const nn::BatchGrads& batch,
                    const std::vector<std::size_t>& meta_batch,
                    const nn::LossBuilder& meta_loss, double alpha, double beta,
                    bool standardize) {
    if (meta_batch.empty()) fail(ErrorKind::Logic, "empty meta batch");
    nn::Tape tape;
    const nn::ParamVars theta_vars = nn::leaf_store(tape, net.params());
    const Lookahead look = build_lookahead(tape, w, net, theta_vars, batch, alpha, standardize);
    std::vector<nn::Var> losses;
    losses.reserve(meta_batch.size());
    for (std::size_t m : meta_batch) losses.push_back(meta_loss(tape, look.w_hat, m));
    const nn::Var total = tape.mean(losses);
    tape.backward(total);
    std::vector<double> grad(net.params().flat_size(), 0.0);
    tape.harvest_param_grads(grad);
    nn::sgd_step_inplace(net.params(), grad, beta);
    return tape.value1(total);
}

std::vector<double> commit_update(nn::ParamStore& w, const WeightingNet& net,
                                  const nn::BatchGrads& batch, double alpha, bool standardize) {
    const auto inputs = weight_inputs(batch.losses, standardize);
    std::vector<double> weights(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) weights[i] = net.weigh(inputs[i]);
    nn::weighted_sgd_apply(w, batch.grads, weights, alpha, batch.grads.size());
    return weights;
}

std::vector<MetaIterRow> run_algorithm1(cfa::CfaModel& model, WeightingNet& net,
                                        const std::vector<cfa::EncodedSample>& train,
                                        const std::vector<cfa::EncodedSample>& meta,
                                        const cluster::MetaClusterSet& clusters,
                                        const MetaTrainConfig& cfg) {
    if (train.empty()) fail(ErrorKind::Degenerate, "empty training set");
    if (clusters.clusters.empty()) fail(ErrorKind::Degenerate, "no meta clusters");

    const nn::LossBuilder train_loss = model.loss_builder(train);
    const nn::LossBuilder meta_loss = model.loss_builder(meta);

    // same stream id as the plain trainer so trajectories are comparable
    Rng batch_rng(derive_seed(cfg.seed, 0x7A41));
    Rng meta_rng(derive_seed(cfg.seed, 0xB47A));

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const std::vector<std::size_t> schedule =
        meta_schedule(cfg.epochs_total, clusters.clusters.size());

    std::vector<MetaIterRow> history;
    std::size_t iteration = 0;
    for (std::size_t p = 0; p < clusters.clusters.size(); ++p) {
        const auto& cluster_members = clusters.clusters[p];
        for (std::size_t e = 0; e < schedule[p]; ++e) {
            batch_rng.shuffle(order);
            bool theta_stepped_this_epoch = false;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const std::size_t end = std::min(order.size(), start + cfg.batch_size);
                const std::vector<std::size_t> batch(order.begin() + start,
                                                     order.begin() + end);
                nn::BatchGrads bg = nn::per_sample_grads(model.params(), batch, train_loss);

                double meta_loss_value = std::numeric_limits<double>::quiet_NaN();
                const bool do_theta =
                    !cluster_members.empty() &&
                    (!cfg.theta_update_per_epoch || !theta_stepped_this_epoch);
                if (do_theta) {
                    const std::size_t take =
                        std::min(cfg.meta_batch_size, cluster_members.size());
                    const auto picks = meta_rng.sample_indices(cluster_members.size(), take);
                    std::vector<std::size_t> meta_batch;
                    meta_batch.reserve(take);
                    for (std::size_t i : picks) meta_batch.push_back(cluster_members[i]);

                    const std::uint64_t before = model.params().value_hash();
                    meta_loss_value = update_theta(net, model.params(), bg, meta_batch,
                                                   meta_loss, cfg.alpha, cfg.beta,
                                                   cfg.standardize_weight_input);
                    if (model.params().value_hash() != before)
                        fail(ErrorKind::Logic, "lookahead mutated committed parameters");
                    theta_stepped_this_epoch = true;
                }

                const auto weights = commit_update(model.params(), net, bg, cfg.alpha,
                                                   cfg.standardize_weight_input);

                MetaIterRow row;
                row.iteration = iteration++;
                row.cluster = static_cast<int>(p);
                double lsum = 0.0;
                for (double l : bg.losses) lsum += l;
                row.train_loss = lsum / static_cast<double>(bg.losses.size());
                row.meta_loss = meta_loss_value;
                double wsum = 0.0;
                for (double wv : weights) wsum += wv;
                row.mean_weight = wsum / static_cast<double>(weights.size());
                double wvar = 0.0;
                for (double wv : weights) wvar += (wv - row.mean_weight) * (wv - row.mean_weight);
                row.std_weight = std::sqrt(wvar / static_cast<double>(weights.size()));
                history.push_back(row);
            }
        }
    }
    return history;
}

} // namespace clickcfa::meta
