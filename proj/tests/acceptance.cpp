// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 6-8 run the full pipeline on a 2000-session synthetic
// corpus; criterion 9 drives the installed CLI binary end to end.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "clickcfa/baselines.hpp"
#include "clickcfa/cfa_model.hpp"
#include "clickcfa/clustering.hpp"
#include "clickcfa/corpus.hpp"
#include "clickcfa/errors.hpp"
#include "clickcfa/eval.hpp"
#include "clickcfa/kernels.hpp"
#include "clickcfa/layers.hpp"
#include "clickcfa/meta_learn.hpp"
#include "clickcfa/pretrain.hpp"
#include "clickcfa/report_io.hpp"
#include "clickcfa/rng.hpp"
#include "test_support.hpp"

using namespace clickcfa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

// ---------------------------------------------------------------- criterion 1

void check_op_gradient(Outcome& out, const std::string& name, nn::ParamStore& store,
                       const std::function<nn::Var(nn::Tape&, const nn::ParamVars&)>& build) {
    auto loss_value = [&]() {
        nn::Tape tape;
        const auto vars = nn::leaf_store(tape, store);
        return tape.value1(build(tape, vars));
    };
    nn::Tape tape;
    const auto vars = nn::leaf_store(tape, store);
    const nn::Var loss = build(tape, vars);
    tape.backward(loss);
    std::vector<double> grad(store.flat_size(), 0.0);
    tape.harvest_param_grads(grad);

    Rng coord_rng(1234);
    const auto report = testsup::check_gradient(store, loss_value, grad, 1e-5, 200, &coord_rng);
    out.require(report.checked >= 100,
                name + ": only " + std::to_string(report.checked) + " coordinates");
    out.require(report.max_rel_err < 1e-6,
                name + ": max rel err " + std::to_string(report.max_rel_err));
}

Outcome criterion1() {
    Outcome out;
    const auto t0 = Clock::now();
    Rng rng(101);

    { // GRU cell
        nn::ParamStore store;
        nn::add_gru_params(store, "gru.", 4, 6, 11);
        const auto rows = testsup::random_vec(rng, 4 * 5);
        check_op_gradient(out, "gru-cell", store,
                          [&](nn::Tape& tape, const nn::ParamVars& vars) {
                              return tape.sum(nn::gru_sequence(
                                  tape, nn::gru_step_vars(vars, store, "gru."), rows.data(), 5, 4,
                                  6));
                          });
    }
    { // linear head
        nn::ParamStore store;
        nn::add_linear_params(store, "head.", 16, 8, 0.3, 13);
        const auto x = testsup::random_vec(rng, 16);
        check_op_gradient(out, "linear-head", store,
                          [&](nn::Tape& tape, const nn::ParamVars& vars) {
                              return tape.sum(tape.relu(
                                  tape.affine(vars.by_entry[0], tape.constant(x),
                                              vars.by_entry[1])));
                          });
    }
    { // softmax + bce
        nn::ParamStore store;
        nn::add_linear_params(store, "head.", 56, 2, 0.2, 17);
        const auto x = testsup::random_vec(rng, 56);
        check_op_gradient(out, "softmax-bce", store,
                          [&](nn::Tape& tape, const nn::ParamVars& vars) {
                              const nn::Var p = tape.softmax(tape.affine(
                                  vars.by_entry[0], tape.constant(x), vars.by_entry[1]));
                              return tape.bce(p, {1.0, 0.0});
                          });
    }
    { // mse
        nn::ParamStore store;
        nn::add_linear_params(store, "head.", 24, 5, 0.2, 19);
        const auto x = testsup::random_vec(rng, 24);
        const auto target = testsup::random_vec(rng, 5, 0.0, 1.0);
        check_op_gradient(out, "mse", store, [&](nn::Tape& tape, const nn::ParamVars& vars) {
            const nn::Var pred = tape.affine(vars.by_entry[0], tape.constant(x),
                                             vars.by_entry[1]);
            return tape.mse(pred, target);
        });
    }
    { // conv layer
        nn::ParamStore store;
        store.add("cnn.K", {8, 5 * 3});
        store.add("cnn.b", {8});
        for (double& v : store.values("cnn.K")) v = rng.uniform(-0.4, 0.4);
        const auto input = testsup::random_vec(rng, 5 * 9, 0.0, 1.0);
        check_op_gradient(out, "conv1d", store,
                          [&](nn::Tape& tape, const nn::ParamVars& vars) {
                              const nn::Var conv = tape.conv1d(vars.by_entry[0],
                                                               vars.by_entry[1], input, 5, 9, 3);
                              return tape.sum(tape.maxpool_time(tape.relu(conv), 8, 7));
                          });
    }
    { // weighting net
        meta::WeightingNet net = meta::WeightingNet::make(23);
        check_op_gradient(out, "weighting-net", net.params(),
                          [&](nn::Tape& tape, const nn::ParamVars& vars) {
                              return net.forward(tape, vars, 1.3);
                          });
    }

    const double secs = seconds_since(t0);
    out.require(secs < 60.0, "runtime " + fmt(secs) + "s exceeds 1 minute");
    out.detail = "all six ops < 1e-6 rel err, " + fmt(secs) + "s" +
                 (out.pass ? "" : " -- " + out.detail);
    return out;
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion2() {
    Outcome out;
    const auto t0 = Clock::now();
    Rng rng(202);

    { // 2-layer toy classifier, FD over theta, rel err < 1e-4
        nn::ParamStore clf;
        clf.add("l1.W", {4, 3});
        clf.add("l1.b", {4});
        clf.add("l2.W", {2, 4});
        clf.add("l2.b", {2});
        for (double& v : clf.flat()) v = rng.uniform(-0.7, 0.7);
        std::vector<std::vector<double>> xs;
        std::vector<std::array<double, 2>> ys;
        for (int i = 0; i < 8; ++i) {
            xs.push_back(testsup::random_vec(rng, 3));
            ys.push_back(i % 2 ? std::array<double, 2>{1, 0} : std::array<double, 2>{0, 1});
        }
        const nn::LossBuilder builder = [&](nn::Tape& tape, const nn::ParamVars& vars,
                                            std::size_t i) {
            const nn::Var h = tape.sigmoid(
                tape.affine(vars.by_entry[0], tape.constant(xs[i]), vars.by_entry[1]));
            return tape.bce(tape.softmax(tape.affine(vars.by_entry[2], h, vars.by_entry[3])),
                            ys[i]);
        };
        const std::vector<std::size_t> train_batch{0, 1, 2, 3};
        const std::vector<std::size_t> meta_batch{4, 5, 6, 7};
        const auto bg = nn::per_sample_grads(clf, train_batch, builder);
        const double alpha = 0.2;

        meta::WeightingNet net = meta::WeightingNet::make(7);
        meta::WeightingNet stepped = net;
        std::vector<double> theta0(net.params().flat().begin(), net.params().flat().end());
        meta::update_theta(stepped, clf, bg, meta_batch, builder, alpha, 1.0, false);
        std::vector<double> analytic(theta0.size());
        for (std::size_t j = 0; j < theta0.size(); ++j)
            analytic[j] = theta0[j] - stepped.params().flat()[j];

        auto f = [&]() {
            std::vector<double> weights(bg.losses.size());
            for (std::size_t n = 0; n < weights.size(); ++n)
                weights[n] = net.weigh(bg.losses[n]);
            const auto w_hat =
                nn::lookahead_apply(clf, bg.grads, weights, alpha, bg.grads.size());
            double total = 0.0;
            for (std::size_t m : meta_batch) {
                nn::Tape tape;
                const auto vars = nn::leaf_store(tape, w_hat);
                total += tape.value1(builder(tape, vars, m));
            }
            return total / static_cast<double>(meta_batch.size());
        };
        Rng coord_rng(5);
        const auto report =
            testsup::check_gradient(net.params(), f, analytic, 1e-5, 100, &coord_rng);
        out.require(report.checked >= 100, "too few theta coordinates checked");
        out.require(report.max_rel_err < 1e-4,
                    "2-layer toy: max rel err " + std::to_string(report.max_rel_err));
    }

    { // 1-parameter model vs closed-form hand derivation, 1e-10
        const double w0 = 0.8, x = 1.4, y = 2.0, xm = 0.9, ym = 1.1, alpha = 0.3;
        nn::ParamStore w;
        w.add("w", {1});
        w.values("w")[0] = w0;
        const nn::LossBuilder train_builder = [&](nn::Tape& tape, const nn::ParamVars& vars,
                                                  std::size_t) {
            const nn::Var diff =
                tape.add(tape.scale(vars.by_entry[0], x), tape.constant1(-y));
            return tape.sum(tape.mul(diff, diff));
        };
        const nn::LossBuilder meta_builder = [&](nn::Tape& tape, const nn::ParamVars& vars,
                                                 std::size_t) {
            const nn::Var diff =
                tape.add(tape.scale(vars.by_entry[0], xm), tape.constant1(-ym));
            return tape.sum(tape.mul(diff, diff));
        };
        const auto bg = nn::per_sample_grads(w, {0}, train_builder);
        const double L = (w0 * x - y) * (w0 * x - y);
        const double g = 2.0 * (w0 * x - y) * x;

        meta::WeightingNet net = meta::WeightingNet::make(41);
        // closed-form chain rule through the explicit perceptron
        const auto w1 = net.params().values("wnet.W1");
        const auto b1 = net.params().values("wnet.b1");
        const auto w2 = net.params().values("wnet.W2");
        const double b2 = net.params().values("wnet.b2")[0];
        auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
        double z2 = b2;
        std::vector<double> hid(meta::WeightingNet::kHidden);
        for (std::size_t i = 0; i < hid.size(); ++i) {
            hid[i] = sig(w1[i] * L + b1[i]);
            z2 += w2[i] * hid[i];
        }
        const double s = sig(z2);
        const double s2p = s * (1.0 - s);
        const double w_hat = w0 - alpha * s * g;
        const double dmeta = 2.0 * (w_hat * xm - ym) * xm;
        std::vector<double> expect(net.params().flat_size());
        const std::size_t h = hid.size();
        for (std::size_t i = 0; i < h; ++i) {
            const double s1p = hid[i] * (1.0 - hid[i]);
            expect[i] = dmeta * (-alpha * g) * s2p * w2[i] * s1p * L;      // W1
            expect[h + i] = dmeta * (-alpha * g) * s2p * w2[i] * s1p;      // b1
            expect[2 * h + i] = dmeta * (-alpha * g) * s2p * hid[i];       // W2
        }
        expect[3 * h] = dmeta * (-alpha * g) * s2p; // b2

        meta::WeightingNet stepped = net;
        std::vector<double> theta0(net.params().flat().begin(), net.params().flat().end());
        meta::update_theta(stepped, w, bg, {0}, meta_builder, alpha, 1.0, false);
        double worst = 0.0;
        for (std::size_t j = 0; j < expect.size(); ++j) {
            const double engine = theta0[j] - stepped.params().flat()[j];
            worst = std::max(worst, testsup::rel_err(engine, expect[j]));
        }
        out.require(worst < 1e-10, "closed form mismatch " + std::to_string(worst));
    }

    const double secs = seconds_since(t0);
    out.require(secs < 60.0, "runtime " + fmt(secs) + "s exceeds 1 minute");
    out.detail = "second-order gradient exact, " + fmt(secs) + "s" +
                 (out.pass ? "" : " -- " + out.detail);
    return out;
}

// ------------------------------------------------------- shared corpus + recipe

dataio::SynthArchetype watcher_arch() {
    dataio::SynthArchetype a;
    a.name = "watcher";
    for (auto& row : a.transition) row = {0.5, 0.42, 0.0, 0.0, 0.08};
    a.mean_session_length = 40;
    a.cfa_base_prob = 0.95;
    a.skip_forward_cfa_penalty = -9.0; // never triggers: the chain has no Sf
    return a;
}

dataio::SynthArchetype skipper_arch() {
    dataio::SynthArchetype a;
    a.name = "skipper";
    for (auto& row : a.transition) row = {0.15, 0.15, 0.0, 0.55, 0.15};
    a.mean_session_length = 40;
    a.cfa_base_prob = 0.95;
    a.skip_forward_cfa_penalty = -1.8; // ~0.55 skip fraction saturates p to ~0.05
    return a;
}

TrainRecipe acceptance_recipe(const std::string& preset) {
    TrainRecipe r = recipe_preset(preset);
    r.hidden_dim = 24;
    r.batch_size = 32;
    r.meta_batch_size = 32;
    r.lr = 0.02;
    r.meta_lr = 0.05; // theta gradients scale with alpha/|B|; larger beta collapses weights
    r.epochs = 28;
    r.pretrain_epochs = 1;
    r.meta_fraction = 0.1;
    r.n_folds = 5;
    r.seed = 7;
    return r;
}

struct SharedRuns {
    dataio::Corpus corpus;
    eval::EvalReport gru, pre_gru, pre_meta;
    std::vector<eval::SweepPoint> sweep;
    double build_seconds = 0.0;
};

SharedRuns& shared_runs() {
    static SharedRuns runs = [] {
        SharedRuns r;
        const auto t0 = Clock::now();
        r.corpus = dataio::generate_synthetic({watcher_arch(), skipper_arch()}, 2000, 7);
        eval::PretrainCache cache;
        r.gru = eval::cross_validate(r.corpus, acceptance_recipe("gru"), &cache);
        std::cerr << "  [acceptance] gru done (" << fmt(seconds_since(t0)) << "s)\n";
        r.pre_gru = eval::cross_validate(r.corpus, acceptance_recipe("pre-gru"), &cache);
        std::cerr << "  [acceptance] pre-gru done (" << fmt(seconds_since(t0)) << "s)\n";
        r.pre_meta = eval::cross_validate(r.corpus, acceptance_recipe("pre-gru-meta-c2"), &cache);
        std::cerr << "  [acceptance] pre-gru-meta-c2 done (" << fmt(seconds_since(t0))
                  << "s)\n";
        r.sweep = eval::meta_usage_sweep(r.corpus, acceptance_recipe("gru-meta-c2"),
                                         {0.0, 0.25, 0.5, 0.75, 1.0});
        std::cerr << "  [acceptance] sweep done (" << fmt(seconds_since(t0)) << "s)\n";
        r.build_seconds = seconds_since(t0);
        return r;
    }();
    return runs;
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion3() {
    Outcome out;
    Rng rng(303);

    { // (a) frozen 0.5 net, beta 0: bitwise equal to plain sgd at lr/2
        std::vector<cfa::EncodedSample> train, meta;
        for (int i = 0; i < 48; ++i) {
            cfa::EncodedSample s;
            s.dim = 5;
            s.len = 5;
            s.rows = testsup::random_vec(rng, 25, 0.0, 1.0);
            s.label = i % 2;
            s.onehot = s.label == 1 ? std::array<double, 2>{1, 0} : std::array<double, 2>{0, 1};
            (i < 40 ? train : meta).push_back(s);
        }
        cluster::MetaClusterSet clusters;
        clusters.clusters = {{0, 1, 2, 3}, {4, 5, 6, 7}};
        clusters.centroids = {{0.0}, {1.0}};
        clusters.entropies = {0.0, 1.0};

        for (std::size_t T : {1ul, 2ul, 6ul}) {
            cfa::CfaModel meta_model = cfa::CfaModel::make(ModelKind::Gru, 5, 8, 9);
            cfa::CfaModel plain_model = cfa::CfaModel::make(ModelKind::Gru, 5, 8, 9);
            meta::WeightingNet net = meta::WeightingNet::zeros();
            meta::MetaTrainConfig mcfg;
            mcfg.batch_size = 8;
            mcfg.meta_batch_size = 4;
            mcfg.alpha = 0.04;
            mcfg.beta = 0.0;
            mcfg.epochs_total = T;
            mcfg.seed = 99;
            meta::run_algorithm1(meta_model, net, train, meta, clusters, mcfg);

            cfa::PlainTrainConfig pcfg;
            pcfg.batch_size = 8;
            pcfg.lr = 0.5 * mcfg.alpha;
            pcfg.epochs = T;
            pcfg.seed = 99;
            cfa::train_plain(plain_model, train, pcfg);
            out.require(meta_model.params().value_hash() == plain_model.params().value_hash(),
                        "trajectory diverged at T=" + std::to_string(T));
        }
    }

    { // (b) meta fraction 0 reduces to the no-meta recipe (bit-exact ACC)
        const auto& runs = shared_runs();
        out.require(runs.sweep[0].fraction == 0.0 && runs.sweep[0].meta_size == 0,
                    "sweep fraction-0 row malformed");
        out.require(runs.sweep[0].mean_acc == runs.gru.acc_mean,
                    "fraction-0 sweep row != no-meta recipe (" + fmt(runs.sweep[0].mean_acc) +
                        " vs " + fmt(runs.gru.acc_mean) + ")");
    }

    { // (c) single cluster: epochs 1..T all on that cluster
        out.require(meta::meta_schedule(100, 1) == std::vector<std::size_t>{100},
                    "schedule(100,1) != {100}");
        out.require(meta::meta_schedule(100, 2) == std::vector<std::size_t>{50, 50},
                    "schedule(100,2) != {50,50}");
        std::vector<cfa::EncodedSample> train, meta_set;
        for (int i = 0; i < 24; ++i) {
            cfa::EncodedSample s;
            s.dim = 5;
            s.len = 3;
            s.rows = testsup::random_vec(rng, 15, 0.0, 1.0);
            s.label = i % 2;
            s.onehot = s.label == 1 ? std::array<double, 2>{1, 0} : std::array<double, 2>{0, 1};
            (i < 16 ? train : meta_set).push_back(s);
        }
        cluster::MetaClusterSet single;
        single.clusters = {{0, 1, 2, 3, 4, 5, 6, 7}};
        single.centroids = {{0.0}};
        single.entropies = {0.3};
        cfa::CfaModel model = cfa::CfaModel::make(ModelKind::Gru, 5, 4, 2);
        meta::WeightingNet net = meta::WeightingNet::make(5);
        meta::MetaTrainConfig mcfg;
        mcfg.batch_size = 8;
        mcfg.meta_batch_size = 8;
        mcfg.alpha = 0.01;
        mcfg.beta = 0.01;
        mcfg.epochs_total = 5;
        mcfg.seed = 3;
        const auto history = meta::run_algorithm1(model, net, train, meta_set, single, mcfg);
        out.require(history.size() == 10, "expected 5 epochs x 2 batches on the single cluster");
        for (const auto& row : history)
            out.require(row.cluster == 0, "iteration left the single cluster");
    }

    out.detail = "constant-net bitwise reduction, fraction-0 degeneracy, single-cluster schedule" +
                 (out.pass ? std::string() : " -- " + out.detail);
    return out;
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion4() {
    Outcome out;
    Rng rng(404);

    { // k-means vs exhaustive optimal 2-partition
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t n = 4 + rng.index(5);
            const std::size_t d = 1 + rng.index(3);
            std::vector<std::vector<double>> pts;
            for (std::size_t i = 0; i < n; ++i)
                pts.push_back(testsup::random_vec(rng, d, -5, 5));
            const auto st = cluster::fit_standardize(pts);
            const auto spts = cluster::apply_standardize(pts, st);
            double best = std::numeric_limits<double>::max();
            for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
                std::vector<double> m0(d, 0.0), m1(d, 0.0);
                std::size_t n0 = 0, n1 = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const bool side = mask & (1u << i);
                    for (std::size_t j = 0; j < d; ++j) (side ? m1 : m0)[j] += spts[i][j];
                    (side ? n1 : n0)++;
                }
                for (std::size_t j = 0; j < d; ++j) {
                    m0[j] /= static_cast<double>(n0);
                    m1[j] /= static_cast<double>(n1);
                }
                double sse = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const auto& m = (mask & (1u << i)) ? m1 : m0;
                    for (std::size_t j = 0; j < d; ++j)
                        sse += (spts[i][j] - m[j]) * (spts[i][j] - m[j]);
                }
                best = std::min(best, sse);
            }
            const auto km = cluster::kmeans(pts, 2, 5000 + trial);
            out.require(std::fabs(km.sse - best) <= 1e-9,
                        "kmeans SSE " + std::to_string(km.sse) + " vs brute " +
                            std::to_string(best));
        }
    }
    { // silhouette hand arithmetic
        const std::vector<std::vector<double>> pts{{0.0}, {1.0}, {10.0}, {11.0}};
        const double expect = (19.0 / 21.0 + 17.0 / 19.0) / 2.0;
        out.require(std::fabs(cluster::silhouette_mean(pts, {0, 0, 1, 1}, 2) - expect) <= 1e-9,
                    "silhouette mismatch");
    }
    { // entropy
        const double expect = 0.75 * std::log2(4.0 / 3.0) + 0.5;
        out.require(std::fabs(cluster::label_entropy({1, 1, 1, 0}) - expect) <= 1e-9,
                    "entropy mismatch");
    }
    { // F1 / confusion counts vs brute force
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t n = 1 + rng.index(50);
            std::vector<int> preds(n), labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                preds[i] = static_cast<int>(rng.index(2));
                labels[i] = static_cast<int>(rng.index(2));
            }
            const auto s = eval::score(preds, labels);
            std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                tp += preds[i] == 1 && labels[i] == 1;
                fp += preds[i] == 1 && labels[i] == 0;
                tn += preds[i] == 0 && labels[i] == 0;
                fn += preds[i] == 0 && labels[i] == 1;
            }
            out.require(s.tp == tp && s.fp == fp && s.tn == tn && s.fn == fn,
                        "confusion counts mismatch");
            const double denom = static_cast<double>(2 * tp + fp + fn);
            const double f1 = denom > 0.0 ? 2.0 * tp / denom : 0.0;
            out.require(std::fabs(s.f1 - f1) <= 1e-9, "f1 mismatch");
            out.require(std::fabs(s.acc - double(tp + tn) / n) <= 1e-9, "acc mismatch");
        }
    }
    { // n-gram counts vs brute force
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<int> types;
            const std::size_t len = rng.index(25);
            for (std::size_t i = 0; i < len; ++i)
                types.push_back(static_cast<int>(rng.index(5)));
            for (int n : {3, 4}) {
                const auto enc = baselines::ngram_encode(types, n);
                std::map<std::vector<int>, int> brute, got;
                for (std::size_t i = 0; i + n <= types.size(); ++i)
                    brute[std::vector<int>(types.begin() + i, types.begin() + i + n)]++;
                for (const auto& g : enc.grams) got[g]++;
                out.require(brute == got, "gram counts mismatch");
            }
        }
    }
    { // sum L_uv expansion
        std::vector<click::TimeVaryingEncoding> seqs;
        std::size_t expect = 0, singles = 0;
        for (int i = 0; i < 50; ++i) {
            click::TimeVaryingEncoding enc;
            const std::size_t len = 1 + rng.index(12);
            for (std::size_t j = 0; j < len; ++j)
                enc.rows.push_back({rng.uniform01(), rng.uniform01(), rng.uniform01(), 1.0,
                                    0.25});
            if (len >= 2)
                expect += len;
            else
                ++singles;
            seqs.push_back(std::move(enc));
        }
        pretrain::ExpandStats stats;
        const auto samples = pretrain::expand_corpus(seqs, false, &stats);
        out.require(samples.size() == expect, "expansion count mismatch");
        out.require(stats.skipped_single_event == singles, "skip counter mismatch");
    }

    out.detail = "kmeans/silhouette/entropy/F1/ngram/expansion all match brute force" +
                 (out.pass ? std::string() : " -- " + out.detail);
    return out;
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion5() {
    Outcome out;
    using click::ClickEvent;
    using click::EventType;
    const click::EncodingConfig cfg;

    { // coalescing idempotence + keep-last fixtures
        Rng rng(55);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<ClickEvent> events;
            double t = 0.0;
            const std::size_t n = rng.index(15);
            for (std::size_t i = 0; i < n; ++i) {
                t += rng.uniform(0.5, 8.0);
                events.push_back({static_cast<EventType>(rng.index(5)), rng.uniform(0, 100), t,
                                  1, 1.0});
            }
            const auto once = click::coalesce_events(events, cfg);
            out.require(click::coalesce_events(once, cfg) == once, "coalescing not idempotent");
        }
        const std::vector<ClickEvent> run{{EventType::Pause, 1, 0, 0, 1},
                                          {EventType::Pause, 2, 2, 0, 1},
                                          {EventType::Pause, 3, 4, 0, 1}};
        const auto merged = click::coalesce_events(run, cfg);
        out.require(merged.size() == 1 && merged[0].timestamp == 4.0,
                    "keep-last coalescing failed");
        out.require(click::coalesce_events({{EventType::Pause, 1, 0, 0, 1},
                                            {EventType::Pause, 2, 6, 0, 1}},
                                           cfg)
                            .size() == 2,
                    "gap beyond window must not merge");
    }
    { // 9-case skip classification truth table
        const ClickEvent playing{EventType::Play, 20, 100, 1, 1.0};
        const ClickEvent paused{EventType::Pause, 20, 100, 0, 1.0};
        auto expect = [&](const ClickEvent& prev, click::RawPlayerRecord raw, EventType want,
                          const char* what) {
            out.require(click::classify_event(prev, raw, cfg) == want, what);
        };
        expect(playing, {10, 110, 1, 1.0}, EventType::SkipBack, "case 1");
        expect(playing, {45, 110, 1, 1.0}, EventType::SkipForward, "case 2");
        expect(playing, {30, 110, 1, 1.0}, EventType::Play, "case 3");
        expect(playing, {30, 110, 0, 1.0}, EventType::Pause, "case 4");
        expect(paused, {20, 130, 1, 1.0}, EventType::Play, "case 5");
        expect(paused, {35, 130, 0, 1.0}, EventType::SkipForward, "case 6");
        expect(paused, {5, 130, 0, 1.0}, EventType::SkipBack, "case 7");
        expect(playing, {30, 110, 1, 1.5}, EventType::RateChange, "case 8");
        expect(playing, {30.5, 110, 1, 1.0}, EventType::Play, "case 9 (jitter tolerated)");
    }
    { // CFA labeling exactness
        click::ClickSession s;
        s.events = {{EventType::Play, 0, 0, 1, 1}};
        s.video_length = 10;
        s.quiz = click::QuizOutcome{10, 10, 5};
        out.require(click::compute_cfa(s).cfa == 1, "full points must be CFA");
        out.require(click::compute_cfa(s).one_hot == std::array<int, 2>{1, 0}, "one-hot (1,0)");
        s.quiz->points = 7;
        out.require(click::compute_cfa(s).cfa == 0, "partial points must be non-CFA");
        out.require(click::compute_cfa(s).one_hot == std::array<int, 2>{0, 1}, "one-hot (0,1)");
    }
    { // encoding determinism
        const auto a = dataio::generate_synthetic({watcher_arch()}, 25, 33);
        const auto b = dataio::generate_synthetic({watcher_arch()}, 25, 33);
        out.require(a.sessions == b.sessions, "generation not deterministic");
        for (std::size_t i = 0; i < a.sessions.size(); ++i) {
            const auto ea = click::encode_full_session(a.sessions[i], cfg);
            const auto eb = click::encode_full_session(b.sessions[i], cfg);
            out.require(ea.rows == eb.rows, "encoding not deterministic");
        }
    }

    out.detail = "coalescing, truth table, CFA labels, determinism" +
                 (out.pass ? std::string() : " -- " + out.detail);
    return out;
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion6() {
    Outcome out;
    const auto& runs = shared_runs();

    out.require(runs.gru.acc_mean >= 0.85,
                "plain GRU ACC " + fmt(runs.gru.acc_mean) + " < 0.85");
    for (const auto& fold : runs.pre_meta.folds)
        out.require(fold.selected_k == 2,
                    "cluster selection returned k=" + std::to_string(fold.selected_k));
    out.require(runs.pre_gru.acc_mean >= runs.gru.acc_mean - 0.02,
                "pre-GRU " + fmt(runs.pre_gru.acc_mean) + " below GRU - 0.02");
    out.require(runs.pre_meta.acc_mean >= runs.gru.acc_mean - 0.02,
                "pre-GRU-meta(C2) " + fmt(runs.pre_meta.acc_mean) + " below GRU - 0.02");

    // learned weights are non-degenerate in the meta runs
    double max_std = 0.0;
    for (const auto& fold : runs.pre_meta.folds)
        for (const auto& row : fold.meta_history) max_std = std::max(max_std, row.std_weight);
    out.require(max_std > 1e-3, "weight distribution degenerate (std <= 1e-3)");

    out.detail = "GRU " + fmt(runs.gru.acc_mean) + ", pre-GRU " + fmt(runs.pre_gru.acc_mean) +
                 ", pre-GRU-meta(C2) " + fmt(runs.pre_meta.acc_mean) + ", k=2 on all folds, " +
                 fmt(runs.build_seconds) + "s total" +
                 (out.pass ? std::string() : " -- " + out.detail);
    return out;
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion7() {
    Outcome out;
    const auto& runs = shared_runs();
    out.require(runs.sweep.size() == 5, "expected 5 sweep points");
    std::string curve;
    for (std::size_t i = 0; i < runs.sweep.size(); ++i) {
        curve += (i ? " " : "") + fmt(runs.sweep[i].mean_acc);
        if (i > 0)
            out.require(runs.sweep[i].mean_acc >= runs.sweep[i - 1].mean_acc - 0.02,
                        "curve decreases by more than 0.02 at fraction " +
                            fmt(runs.sweep[i].fraction));
    }
    out.detail = "fraction-vs-ACC curve: " + curve +
                 (out.pass ? std::string() : " -- " + out.detail);
    return out;
}

// ---------------------------------------------------------------- criterion 8

Outcome criterion8() {
    Outcome out;
    const auto& runs = shared_runs();
    const auto dists = eval::gram_analytics(runs.corpus, runs.pre_meta, {});
    double sf_tp = -1.0, sf_tn = -1.0;
    for (const auto& d : dists) {
        if (!d.present) continue;
        double total = 0.0, sf = 0.0;
        for (const auto& [gram, freq] : d.freqs) {
            total += freq;
            if (gram.find("Sf") != std::string::npos) sf += freq;
        }
        out.require(std::fabs(total - 1.0) <= 1e-9,
                    d.subset + " distribution sums to " + fmt(total));
        if (d.subset == "TP") sf_tp = sf;
        if (d.subset == "TN") sf_tn = sf;
    }
    out.require(sf_tp >= 0.0 && sf_tn >= 0.0, "TP/TN subsets missing");
    out.require(sf_tn > sf_tp, "Sf-gram mass TN " + fmt(sf_tn) + " not above TP " + fmt(sf_tp));
    out.detail = "distributions normalized; Sf mass TN " + fmt(sf_tn) + " > TP " + fmt(sf_tp) +
                 (out.pass ? std::string() : " -- " + out.detail);
    return out;
}

// ---------------------------------------------------------------- criterion 9

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome criterion9() {
    Outcome out;
    const char* bin = std::getenv("CLICKCFA_BIN");
    if (!bin) {
        out.pass = false;
        out.detail = "CLICKCFA_BIN not set (run through ctest)";
        return out;
    }
    const fs::path root = fs::temp_directory_path() / "clickcfa_accept";
    fs::remove_all(root);
    fs::create_directories(root);

    // archetype configs
    dataio::write_archetype_file((root / "a.cfg").string(), watcher_arch());
    dataio::write_archetype_file((root / "b.cfg").string(), skipper_arch());

    auto run = [&](const std::string& args) {
        const std::string cmd = std::string(bin) + " " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };

    // generate twice: byte-identical corpora
    out.require(run("generate --archetypes " + (root / "a.cfg").string() + "," +
                    (root / "b.cfg").string() + " --n 160 --seed 7 --out " +
                    (root / "gen1").string()) == 0,
                "generate run 1 failed");
    out.require(run("generate --archetypes " + (root / "a.cfg").string() + "," +
                    (root / "b.cfg").string() + " --n 160 --seed 7 --out " +
                    (root / "gen2").string()) == 0,
                "generate run 2 failed");
    for (const char* f : {"synth.tsv", "synth.quiz.tsv", "synth.truth.tsv"})
        out.require(slurp(root / "gen1" / f) == slurp(root / "gen2" / f),
                    std::string(f) + " differs between identical generate runs");

    // evaluate, then re-execute from the run directory's resolved config
    const std::string small = "--set hidden_dim=6 --set epochs=2 --set pretrain_epochs=1 "
                              "--set n_folds=3 --set meta_fraction=0.2 --set lr=0.02";
    out.require(run("evaluate --recipe gru-meta-c2 --corpus " +
                    (root / "gen1" / "synth.tsv").string() + " --seed 11 " + small + " --out " +
                    (root / "eval1").string()) == 0,
                "evaluate run failed");
    out.require(run("evaluate --config " + (root / "eval1" / "config.resolved").string() +
                    " --out " + (root / "eval2").string()) == 0,
                "re-executed evaluate failed");
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(root / "eval1")) {
        const auto name = entry.path().filename().string();
        out.require(fs::exists(root / "eval2" / name), name + " missing from the re-run");
        out.require(slurp(entry.path()) == slurp(root / "eval2" / name),
                    name + " differs after re-execution");
        ++compared;
    }
    out.require(compared >= 3, "too few evaluate outputs compared");

    // train writes checkpoints; the re-run reproduces them bit for bit
    out.require(run("train --recipe gru --corpus " + (root / "gen1" / "synth.tsv").string() +
                    " --seed 11 " + small + " --out " + (root / "train1").string()) == 0,
                "train run failed");
    out.require(run("train --config " + (root / "train1" / "config.resolved").string() +
                    " --out " + (root / "train2").string()) == 0,
                "re-executed train failed");
    out.require(slurp(root / "train1" / "model.ckpt") == slurp(root / "train2" / "model.ckpt"),
                "model checkpoint differs after re-execution");
    out.require(!slurp(root / "train1" / "model.ckpt").empty(), "empty checkpoint");

    out.detail = "generate, evaluate and train reproduce bitwise from their run configs (" +
                 std::to_string(compared) + " evaluate artifacts compared)" +
                 (out.pass ? std::string() : " -- " + out.detail);
    return out;
}

} // namespace

int main() {
    struct Entry {
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Entry> criteria{
        {"1 gradient exactness", criterion1},
        {"2 second-order meta-gradient", criterion2},
        {"3 reduction identities", criterion3},
        {"4 oracle equivalence", criterion4},
        {"5 encoding determinism and rules", criterion5},
        {"6 synthetic end-to-end", criterion6},
        {"7 meta-usage sweep", criterion7},
        {"8 confusion-subset gram analytics", criterion8},
        {"9 run-directory reproducibility", criterion9},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        std::cout << (out.pass ? "[PASS]" : "[FAIL]") << " criterion " << c.name << ": "
                  << out.detail << "\n";
        std::cout.flush();
        if (!out.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
