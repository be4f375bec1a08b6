#include "clickcfa/eval.hpp"

#include <algorithm>
#include <cmath>

#include "clickcfa/baselines.hpp"
#include "clickcfa/errors.hpp"
#include "clickcfa/rng.hpp"

namespace clickcfa::eval {

Scores score(const std::vector<int>& preds, const std::vector<int>& labels,
             bool positive_is_cfa) {
    if (preds.empty() || preds.size() != labels.size())
        fail(ErrorKind::Degenerate, "score needs equal, non-empty prediction/label lists");
    Scores s;
    const int pos = positive_is_cfa ? 1 : 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool pp = preds[i] == pos;
        const bool pl = labels[i] == pos;
        if (pp && pl)
            ++s.tp;
        else if (pp && !pl)
            ++s.fp;
        else if (!pp && pl)
            ++s.fn;
        else
            ++s.tn;
    }
    s.acc = static_cast<double>(s.tp + s.tn) / static_cast<double>(preds.size());
    const double denom = static_cast<double>(2 * s.tp + s.fp + s.fn);
    s.f1 = denom > 0.0 ? 2.0 * static_cast<double>(s.tp) / denom : 0.0;
    return s;
}

std::size_t model_input_dim(ModelKind kind) {
    switch (kind) {
    case ModelKind::Ngram3: return 15;
    case ModelKind::Ngram4: return 20;
    default: return 5;
    }
}

namespace {

std::size_t pre_answer_count(const click::ClickSession& s) {
    std::size_t cut = 0;
    while (cut < s.events.size() && s.events[cut].timestamp < s.quiz->answer_timestamp) ++cut;
    return cut;
}

std::vector<int> pre_answer_types(const click::ClickSession& s, std::size_t cut) {
    std::vector<int> types;
    types.reserve(cut);
    for (std::size_t i = 0; i < cut; ++i) types.push_back(static_cast<int>(s.events[i].type));
    return types;
}

} // namespace

std::vector<cfa::EncodedSample> build_dataset(const dataio::Corpus& corpus,
                                              const std::vector<std::size_t>& indices,
                                              ModelKind kind, const click::EncodingConfig& cfg,
                                              DatasetStats* stats) {
    DatasetStats st;
    std::vector<cfa::EncodedSample> out;
    const std::size_t dim = model_input_dim(kind);
    for (std::size_t idx : indices) {
        const auto& s = corpus.sessions[idx];
        if (!s.quiz) {
            ++st.dropped_no_label;
            continue;
        }
        const std::size_t cut = pre_answer_count(s);
        if (cut == 0) {
            ++st.dropped_no_prefix;
            continue;
        }
        cfa::EncodedSample sample;
        sample.session = idx;
        sample.dim = dim;
        const auto label = click::compute_cfa(s);
        sample.label = label.cfa;
        sample.onehot = {static_cast<double>(label.one_hot[0]),
                         static_cast<double>(label.one_hot[1])};
        if (kind == ModelKind::Ngram3 || kind == ModelKind::Ngram4) {
            const int n = kind == ModelKind::Ngram3 ? 3 : 4;
            const auto grams = baselines::ngram_encode(pre_answer_types(s, cut), n);
            if (grams.grams.empty()) {
                ++st.dropped_short;
                continue;
            }
            sample.rows = baselines::ngram_rows(grams);
            sample.len = grams.grams.size();
        } else {
            for (std::size_t i = 0; i < cut; ++i) {
                const auto row = click::encode_event_row(
                    s.events[i], i ? s.events[i - 1].timestamp : 0.0, i == 0, s.video_length, cfg);
                sample.rows.insert(sample.rows.end(), row.begin(), row.end());
            }
            sample.len = cut;
        }
        out.push_back(std::move(sample));
        ++st.usable;
    }
    if (stats) *stats = st;
    return out;
}

std::vector<std::vector<double>> criterion_points(const dataio::Corpus& corpus,
                                                  const std::vector<cfa::EncodedSample>& samples,
                                                  Criterion criterion) {
    std::vector<std::vector<double>> points;
    points.reserve(samples.size());
    for (const auto& sample : samples) {
        const auto enc = click::build_static(corpus.sessions[sample.session]);
        if (criterion == Criterion::C1) {
            points.push_back({static_cast<double>(enc.total_clicks)});
        } else {
            std::vector<double> p(5);
            for (int i = 0; i < 5; ++i) p[i] = static_cast<double>(enc.per_type_counts[i]);
            points.push_back(std::move(p));
        }
    }
    return points;
}

namespace {

struct FoldSeeds {
    std::uint64_t pretrain, train, carve, cluster, init, wnet;
};

FoldSeeds fold_seeds(std::uint64_t master, int fold) {
    return {derive_seed(master, 100 + fold), derive_seed(master, 200 + fold),
            derive_seed(master, 400 + fold), derive_seed(master, 500 + fold),
            derive_seed(master, 600 + fold), derive_seed(master, 700 + fold)};
}

std::string pretrain_cache_key(const TrainRecipe& r, int fold) {
    return std::to_string(fold) + ":" + std::to_string(r.hidden_dim) + ":" +
           std::to_string(r.pretrain_epochs) + ":" + std::to_string(r.seed) + ":" +
           (r.pretrain_gap_marker ? "g" : "-");
}

nn::ParamStore pretrain_for_fold(const dataio::Corpus& corpus,
                                 const std::vector<std::size_t>& rest, const TrainRecipe& recipe,
                                 int fold, PretrainCache* cache,
                                 std::vector<std::pair<std::size_t, double>>* history) {
    const std::string key = pretrain_cache_key(recipe, fold);
    if (cache) {
        auto it = cache->by_key.find(key);
        if (it != cache->by_key.end()) return it->second;
    }
    std::vector<click::TimeVaryingEncoding> sequences;
    sequences.reserve(rest.size());
    for (std::size_t idx : rest)
        sequences.push_back(click::encode_full_session(corpus.sessions[idx], recipe.encoding));
    const auto samples =
        pretrain::expand_corpus(sequences, recipe.pretrain_gap_marker, nullptr);
    pretrain::PretrainConfig cfg;
    cfg.hidden = recipe.hidden_dim;
    cfg.batch_size = recipe.batch_size;
    cfg.lr = recipe.lr;
    cfg.max_epochs = recipe.pretrain_epochs;
    cfg.seed = fold_seeds(recipe.seed, fold).pretrain;
    auto result = pretrain::run_pretrain(samples, cfg);
    if (history) *history = result.loss_history;
    if (cache) cache->by_key[key] = result.gru_checkpoint;
    return result.gru_checkpoint;
}

// labeled subset of `indices` (usable for CFA training/testing)
std::vector<std::size_t> labeled_subset(const dataio::Corpus& corpus,
                                        const std::vector<std::size_t>& indices) {
    std::vector<std::size_t> out;
    for (std::size_t idx : indices) {
        const auto& s = corpus.sessions[idx];
        if (s.quiz && pre_answer_count(s) > 0) out.push_back(idx);
    }
    return out;
}

FoldArtifacts run_fold(const dataio::Corpus& corpus, const TrainRecipe& recipe, int fold,
                       PretrainCache* cache) {
    const FoldSeeds seeds = fold_seeds(recipe.seed, fold);
    const auto test_idx = dataio::fold_indices(corpus, fold);
    const auto rest_idx = dataio::non_fold_indices(corpus, fold);

    FoldArtifacts art;
    const auto test_samples = build_dataset(corpus, test_idx, recipe.model, recipe.encoding);
    if (test_samples.empty()) fail(ErrorKind::Degenerate, "fold has no scorable test sessions");

    cfa::CfaModel model =
        cfa::CfaModel::make(recipe.model, model_input_dim(recipe.model), recipe.hidden_dim,
                            seeds.init, recipe.conv_channels, recipe.conv_kernel);
    if (recipe.pretrain) {
        const auto checkpoint =
            pretrain_for_fold(corpus, rest_idx, recipe, fold, cache, &art.pretrain_history);
        model.load_pretrained_gru(checkpoint);
    }

    // carve for every recipe so plain and meta runs share D_train exactly
    // (the meta-fraction-0 degeneracy then reduces to the no-meta recipe)
    const auto labeled = labeled_subset(corpus, rest_idx);
    for (std::size_t t : test_idx)
        for (std::size_t r : rest_idx)
            if (t == r) fail(ErrorKind::Logic, "test fold leaked into the training remainder");
    auto [train_idx, meta_idx] =
        dataio::carve_meta(corpus, labeled, recipe.meta_fraction, seeds.carve);

    if (recipe.meta) {
        const auto train_samples = build_dataset(corpus, train_idx, recipe.model, recipe.encoding);
        const auto meta_samples = build_dataset(corpus, meta_idx, recipe.model, recipe.encoding);
        const auto points = criterion_points(corpus, meta_samples, recipe.criterion);
        const auto curve =
            cluster::select_k(points, recipe.cluster_k_min, recipe.cluster_k_max, seeds.cluster);
        art.selected_k = curve.best_k;
        art.silhouette = curve.scores;
        const auto km = cluster::kmeans(points, curve.best_k, seeds.cluster);
        std::vector<int> labels;
        labels.reserve(meta_samples.size());
        for (const auto& m : meta_samples) labels.push_back(m.label);
        const auto clusters = cluster::order_by_entropy(km, labels);

        meta::WeightingNet net = meta::WeightingNet::make(seeds.wnet);
        meta::MetaTrainConfig mcfg;
        mcfg.batch_size = recipe.batch_size;
        mcfg.meta_batch_size = recipe.meta_batch_size;
        mcfg.alpha = recipe.lr;
        mcfg.beta = recipe.meta_lr;
        mcfg.epochs_total = recipe.epochs;
        mcfg.seed = seeds.train;
        mcfg.standardize_weight_input = recipe.standardize_weight_input;
        mcfg.theta_update_per_epoch = recipe.theta_update_per_epoch;
        art.meta_history =
            meta::run_algorithm1(model, net, train_samples, meta_samples, clusters, mcfg);
    } else {
        const auto train_samples = build_dataset(corpus, train_idx, recipe.model, recipe.encoding);
        cfa::PlainTrainConfig pcfg;
        pcfg.batch_size = recipe.batch_size;
        pcfg.lr = recipe.lr;
        pcfg.epochs = recipe.epochs;
        pcfg.seed = seeds.train;
        art.train_history = cfa::train_plain(model, train_samples, pcfg);
    }

    const auto preds = cfa::predict_all(model, test_samples);
    art.test_size = test_samples.size();
    for (std::size_t i = 0; i < preds.size(); ++i) {
        art.test_pred.push_back(preds[i].hard);
        art.test_label.push_back(test_samples[i].label);
        art.test_sessions.push_back(test_samples[i].session);
    }
    art.scores = score(art.test_pred, art.test_label, recipe.f1_positive_cfa);
    return art;
}

void finalize_report(EvalReport& report) {
    const std::size_t n = report.folds.size();
    double acc_sum = 0.0, f1_sum = 0.0;
    for (const auto& f : report.folds) {
        acc_sum += f.scores.acc;
        f1_sum += f.scores.f1;
    }
    report.acc_mean = acc_sum / static_cast<double>(n);
    report.f1_mean = f1_sum / static_cast<double>(n);
    if (n > 1) {
        double acc_var = 0.0, f1_var = 0.0;
        for (const auto& f : report.folds) {
            acc_var += (f.scores.acc - report.acc_mean) * (f.scores.acc - report.acc_mean);
            f1_var += (f.scores.f1 - report.f1_mean) * (f.scores.f1 - report.f1_mean);
        }
        report.acc_std = std::sqrt(acc_var / static_cast<double>(n - 1));
        report.f1_std = std::sqrt(f1_var / static_cast<double>(n - 1));
    }
}

} // namespace

EvalReport cross_validate(const dataio::Corpus& corpus, const TrainRecipe& recipe,
                          PretrainCache* cache) {
    validate_recipe(recipe);
    dataio::Corpus folded = corpus;
    split_folds(folded, recipe.n_folds, recipe.seed, recipe.stratify_folds);

    EvalReport report;
    report.recipe_name = recipe.name();
    report.fingerprint = recipe_fingerprint(recipe);
    for (std::size_t f = 0; f < recipe.n_folds; ++f)
        report.folds.push_back(run_fold(folded, recipe, static_cast<int>(f), cache));
    finalize_report(report);
    return report;
}

std::vector<std::string> full_grid_names() {
    return {"3gram",       "4gram",       "latent-var",      "cnn",
            "gru",         "pre-gru",     "gru-meta-c1",     "gru-meta-c2",
            "pre-gru-meta-c1", "pre-gru-meta-c2"};
}

std::vector<GridRow> evaluate_grid(const dataio::Corpus& corpus, const TrainRecipe& base,
                                   const std::vector<std::string>& names) {
    PretrainCache cache;
    std::vector<GridRow> rows;
    for (const auto& name : names) {
        GridRow row;
        row.name = name;
        if (name == "latent-var") {
            row.excluded = true; // external hand-crafted-feature model
            rows.push_back(std::move(row));
            continue;
        }
        const TrainRecipe preset = recipe_preset(name);
        TrainRecipe r = base;
        r.model = preset.model;
        r.pretrain = preset.pretrain;
        r.meta = preset.meta;
        r.criterion = preset.criterion;
        row.report = cross_validate(corpus, r, &cache);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<SweepPoint> meta_usage_sweep(const dataio::Corpus& corpus, const TrainRecipe& recipe,
                                         const std::vector<double>& fractions) {
    if (!recipe.meta) fail(ErrorKind::Usage, "meta usage sweep needs a meta-enabled recipe");
    validate_recipe(recipe);
    dataio::Corpus folded = corpus;
    split_folds(folded, recipe.n_folds, recipe.seed, recipe.stratify_folds);

    std::vector<SweepPoint> points(fractions.size());
    for (std::size_t i = 0; i < fractions.size(); ++i) points[i].fraction = fractions[i];

    for (std::size_t f = 0; f < recipe.n_folds; ++f) {
        const FoldSeeds seeds = fold_seeds(recipe.seed, static_cast<int>(f));
        const auto test_idx = dataio::fold_indices(folded, static_cast<int>(f));
        const auto rest_idx = dataio::non_fold_indices(folded, static_cast<int>(f));
        const auto test_samples = build_dataset(folded, test_idx, recipe.model, recipe.encoding);
        const auto labeled = labeled_subset(folded, rest_idx);
        auto [train_idx, meta_idx] =
            dataio::carve_meta(folded, labeled, recipe.meta_fraction, seeds.carve);
        const auto train_samples = build_dataset(folded, train_idx, recipe.model, recipe.encoding);
        const auto meta_all = build_dataset(folded, meta_idx, recipe.model, recipe.encoding);

        nn::ParamStore checkpoint;
        PretrainCache cache;
        if (recipe.pretrain)
            checkpoint = pretrain_for_fold(folded, rest_idx, recipe, static_cast<int>(f), &cache,
                                           nullptr);

        for (std::size_t pi = 0; pi < fractions.size(); ++pi) {
            const double frac = fractions[pi];
            const auto m = static_cast<std::size_t>(std::llround(frac * meta_all.size()));
            points[pi].meta_size = m;

            cfa::CfaModel model = cfa::CfaModel::make(recipe.model, model_input_dim(recipe.model),
                                                      recipe.hidden_dim, seeds.init,
                                                      recipe.conv_channels, recipe.conv_kernel);
            if (recipe.pretrain) model.load_pretrained_gru(checkpoint);

            if (m == 0) {
                cfa::PlainTrainConfig pcfg;
                pcfg.batch_size = recipe.batch_size;
                pcfg.lr = recipe.lr;
                pcfg.epochs = recipe.epochs;
                pcfg.seed = seeds.train;
                cfa::train_plain(model, train_samples, pcfg);
            } else {
                Rng sub_rng(derive_seed(recipe.seed, 800 + 16 * f + pi));
                const auto picks = sub_rng.sample_indices(meta_all.size(), m);
                std::vector<cfa::EncodedSample> meta_sub;
                meta_sub.reserve(m);
                for (std::size_t idx : picks) meta_sub.push_back(meta_all[idx]);

                const auto pts = criterion_points(folded, meta_sub, recipe.criterion);
                const auto curve = cluster::select_k(pts, recipe.cluster_k_min,
                                                     recipe.cluster_k_max, seeds.cluster);
                const auto km = cluster::kmeans(pts, curve.best_k, seeds.cluster);
                std::vector<int> labels;
                labels.reserve(meta_sub.size());
                for (const auto& ms : meta_sub) labels.push_back(ms.label);
                const auto clusters = cluster::order_by_entropy(km, labels);

                meta::WeightingNet net = meta::WeightingNet::make(seeds.wnet);
                meta::MetaTrainConfig mcfg;
                mcfg.batch_size = recipe.batch_size;
                mcfg.meta_batch_size = recipe.meta_batch_size;
                mcfg.alpha = recipe.lr;
                mcfg.beta = recipe.meta_lr;
                mcfg.epochs_total = recipe.epochs;
                mcfg.seed = seeds.train;
                mcfg.standardize_weight_input = recipe.standardize_weight_input;
                mcfg.theta_update_per_epoch = recipe.theta_update_per_epoch;
                meta::run_algorithm1(model, net, train_samples, meta_sub, clusters, mcfg);
            }

            const auto preds = cfa::predict_all(model, test_samples);
            std::vector<int> hard, labels;
            for (std::size_t i = 0; i < preds.size(); ++i) {
                hard.push_back(preds[i].hard);
                labels.push_back(test_samples[i].label);
            }
            points[pi].mean_acc += score(hard, labels, recipe.f1_positive_cfa).acc;
        }
    }
    for (auto& p : points) p.mean_acc /= static_cast<double>(recipe.n_folds);
    return points;
}

GramDistribution gram_distribution(const std::string& subset,
                                   const std::vector<std::vector<int>>& type_seqs) {
    GramDistribution dist;
    dist.subset = subset;
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& seq : type_seqs) {
        const auto enc = baselines::ngram_encode(seq, 4);
        for (const auto& gram : enc.grams) {
            counts[baselines::gram_to_string(gram)]++;
            ++total;
        }
    }
    if (total == 0) {
        dist.present = false;
        return dist;
    }
    std::vector<std::pair<std::string, double>> freqs;
    freqs.reserve(counts.size());
    for (const auto& [gram, c] : counts)
        freqs.emplace_back(gram, static_cast<double>(c) / static_cast<double>(total));
    std::sort(freqs.begin(), freqs.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    dist.freqs = std::move(freqs);
    dist.top2_mass = dist.freqs[0].second + (dist.freqs.size() > 1 ? dist.freqs[1].second : 0.0);
    return dist;
}

std::vector<GramDistribution> gram_analytics(const dataio::Corpus& corpus,
                                             const EvalReport& report,
                                             const click::EncodingConfig& cfg) {
    (void)cfg;
    std::vector<std::vector<int>> by_subset[6]; // CFA, nonCFA, TP, FN, TN, FP
    for (const auto& fold : report.folds) {
        for (std::size_t i = 0; i < fold.test_sessions.size(); ++i) {
            const auto& s = corpus.sessions[fold.test_sessions[i]];
            const auto types = pre_answer_types(s, pre_answer_count(s));
            const int label = fold.test_label[i];
            const int pred = fold.test_pred[i];
            by_subset[label == 1 ? 0 : 1].push_back(types);
            int conf;
            if (pred == 1 && label == 1)
                conf = 2; // TP
            else if (pred == 0 && label == 1)
                conf = 3; // FN
            else if (pred == 0 && label == 0)
                conf = 4; // TN
            else
                conf = 5; // FP
            by_subset[conf].push_back(types);
        }
    }
    static const char* names[6] = {"CFA", "nonCFA", "TP", "FN", "TN", "FP"};
    std::vector<GramDistribution> out;
    for (int i = 0; i < 6; ++i) out.push_back(gram_distribution(names[i], by_subset[i]));
    return out;
}

} // namespace clickcfa::eval
