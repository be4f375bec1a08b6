#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "clickcfa/events.hpp"

namespace clickcfa {

enum class ModelKind { Gru, Cnn, Ngram3, Ngram4 };
enum class Criterion { C1, C2 }; // total clicks vs per-type counts

const char* model_kind_name(ModelKind m);
const char* criterion_name(Criterion c);

// Full training configuration. Defaults are the reference settings
// (k = 128, batch 32, lr 0.001, T = 100); experiments override per run.
struct TrainRecipe {
    ModelKind model = ModelKind::Gru;
    bool pretrain = false;
    bool meta = false;
    Criterion criterion = Criterion::C2;

    std::size_t hidden_dim = 128;
    std::size_t batch_size = 32;
    std::size_t meta_batch_size = 32;
    double lr = 0.001;      // alpha
    double meta_lr = 0.001; // beta
    std::size_t epochs = 100; // T
    std::size_t pretrain_epochs = 100;
    double meta_fraction = 0.1;
    std::size_t n_folds = 5;
    int cluster_k_min = 2;
    int cluster_k_max = 19;
    std::uint64_t seed = 1;

    bool stratify_folds = false;
    bool f1_positive_cfa = true;
    bool pretrain_gap_marker = false;
    bool standardize_weight_input = false;
    bool theta_update_per_epoch = false; // default: one theta step per batch

    std::size_t conv_channels = 64;
    std::size_t conv_kernel = 3;

    click::EncodingConfig encoding;

    std::string name() const; // e.g. "pre-gru-meta-c2"
};

// Canonical key=value form (sorted keys); the config.resolved file format.
std::map<std::string, std::string> recipe_to_map(const TrainRecipe& r);
TrainRecipe recipe_from_map(const std::map<std::string, std::string>& kv);

// Presets: gru, pre-gru, gru-meta-c1/c2, pre-gru-meta-c1/c2, 3gram, 4gram, cnn.
TrainRecipe recipe_preset(const std::string& name);
bool is_recipe_preset(const std::string& name);

// True configuration fingerprint (FNV-1a over the canonical map), hex.
std::string recipe_fingerprint(const TrainRecipe& r);

void validate_recipe(const TrainRecipe& r);

// flat key=value files (used for configs and archetypes)
std::map<std::string, std::string> read_kv_file(const std::string& path);
void write_kv_file(const std::string& path, const std::map<std::string, std::string>& kv);

} // namespace clickcfa
