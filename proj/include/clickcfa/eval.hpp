#pragma once

#include <map>
#include <string>
#include <vector>

#include "clickcfa/cfa_model.hpp"
#include "clickcfa/clustering.hpp"
#include "clickcfa/corpus.hpp"
#include "clickcfa/meta_learn.hpp"
#include "clickcfa/pretrain.hpp"
#include "clickcfa/recipe.hpp"

namespace clickcfa::eval {

struct Scores {
    double acc = 0.0, f1 = 0.0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// ACC and F1 (harmonic mean of precision and recall); F1 = 0 when
// precision + recall = 0. positive_is_cfa flips which label counts as positive.
Scores score(const std::vector<int>& preds, const std::vector<int>& labels,
             bool positive_is_cfa = true);

struct DatasetStats {
    std::size_t usable = 0;
    std::size_t dropped_no_label = 0;  // no quiz outcome
    std::size_t dropped_no_prefix = 0; // no event before the answer
    std::size_t dropped_short = 0;     // too short for the n-gram window
};

std::vector<cfa::EncodedSample> build_dataset(const dataio::Corpus& corpus,
                                              const std::vector<std::size_t>& indices,
                                              ModelKind kind, const click::EncodingConfig& cfg,
                                              DatasetStats* stats = nullptr);

std::size_t model_input_dim(ModelKind kind);

// Static-encoding clustering features for the criterion: C1 = (total clicks),
// C2 = per-type counts.
std::vector<std::vector<double>> criterion_points(const dataio::Corpus& corpus,
                                                  const std::vector<cfa::EncodedSample>& samples,
                                                  Criterion criterion);

struct FoldArtifacts {
    Scores scores;
    std::size_t test_size = 0;
    int selected_k = 0;
    std::vector<std::pair<int, double>> silhouette;
    std::vector<cfa::EpochMetrics> train_history;
    std::vector<meta::MetaIterRow> meta_history;
    std::vector<std::pair<std::size_t, double>> pretrain_history;
    std::vector<int> test_pred, test_label;
    std::vector<std::size_t> test_sessions; // corpus indices of the scored samples
};

struct EvalReport {
    std::string recipe_name;
    std::string fingerprint;
    std::vector<FoldArtifacts> folds;
    double acc_mean = 0.0, acc_std = 0.0; // sample std across folds
    double f1_mean = 0.0, f1_std = 0.0;
};

// Per-fold pre-training checkpoints; recipes inside one grid run share them
// (identical fold remainder + seed produce an identical checkpoint anyway).
struct PretrainCache {
    std::map<std::string, nn::ParamStore> by_key;
};

EvalReport cross_validate(const dataio::Corpus& corpus, const TrainRecipe& recipe,
                          PretrainCache* cache = nullptr);

struct GridRow {
    std::string name;
    bool excluded = false; // latent-var placeholder (external model)
    EvalReport report;
};

// Runs the named recipe presets with the base recipe's hyperparameters and
// emits the Table-II-shaped row set (latent-var kept as an excluded row).
std::vector<GridRow> evaluate_grid(const dataio::Corpus& corpus, const TrainRecipe& base,
                                   const std::vector<std::string>& names);

std::vector<std::string> full_grid_names(); // the ten Table-II rows

struct SweepPoint {
    double fraction = 0.0;
    double mean_acc = 0.0;
    std::size_t meta_size = 0; // per fold, round(fraction * M)
};

// Fig.-5-style ablation: subsample D_meta per fraction, re-cluster, retrain,
// score. Fraction 0 is exactly the plain path on the carved train set.
std::vector<SweepPoint> meta_usage_sweep(const dataio::Corpus& corpus, const TrainRecipe& recipe,
                                         const std::vector<double>& fractions);

struct GramDistribution {
    std::string subset;
    bool present = true; // false: subset empty, omitted with a note
    std::vector<std::pair<std::string, double>> freqs; // sorted by frequency desc
    double top2_mass = 0.0;
};

GramDistribution gram_distribution(const std::string& subset,
                                   const std::vector<std::vector<int>>& type_seqs);

// 4-gram distributions for {CFA, nonCFA} and the confusion subsets
// {TP, FN, TN, FP} of a finished evaluation.
std::vector<GramDistribution> gram_analytics(const dataio::Corpus& corpus,
                                             const EvalReport& report,
                                             const click::EncodingConfig& cfg);

} // namespace clickcfa::eval
