#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "clickcfa/corpus.hpp"
#include "clickcfa/errors.hpp"
#include "clickcfa/eval.hpp"
#include "clickcfa/kernels.hpp"
#include "clickcfa/report_io.hpp"

namespace fs = std::filesystem;
using namespace clickcfa;

namespace {

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Usage: return 1;
    case ErrorKind::Diverged: return 3;
    default: return 2;
    }
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir;   // exact run directory; overrides out_root
    std::string out_root;  // default $CLICKCFA_OUT_ROOT or ./runs
    std::vector<std::string> sets; // key=value recipe/config overrides
    std::string recipe_name;
    std::string corpus_path;
    std::string quiz_path;

    void attach(CLI::App* cmd, bool with_corpus) {
        cmd->add_option("--config", config_path, "key=value config file (a run's config.resolved)");
        cmd->add_option("--out", out_dir, "exact output directory");
        cmd->add_option("--out-root", out_root, "root for timestamped run directories");
        cmd->add_option("--set", sets, "override any config key, e.g. --set hidden_dim=64");
        if (with_corpus) {
            cmd->add_option("--recipe", recipe_name, "recipe preset or 'grid'");
            cmd->add_option("--corpus", corpus_path, "event log (TSV)");
            cmd->add_option("--quiz", quiz_path, "quiz log (default: <corpus stem>.quiz.tsv)");
        }
    }
};

std::string default_quiz_path(const std::string& corpus) {
    fs::path p(corpus);
    fs::path q = p.parent_path() / (p.stem().string() + ".quiz.tsv");
    return q.string();
}

std::string absolute_path(const std::string& p) {
    std::error_code ec;
    const fs::path abs = fs::absolute(p, ec);
    return ec ? p : abs.string();
}

// defaults <- config file <- --recipe preset toggles <- --set pairs <- flags
std::map<std::string, std::string> resolve_config(const CommonArgs& args,
                                                  const std::string& subcommand) {
    std::map<std::string, std::string> kv = recipe_to_map(TrainRecipe{});
    if (!args.config_path.empty()) {
        for (const auto& [k, v] : read_kv_file(args.config_path)) kv[k] = v;
    }
    if (!args.recipe_name.empty() && args.recipe_name != "grid") {
        if (!is_recipe_preset(args.recipe_name))
            fail(ErrorKind::Usage, "unknown recipe: " + args.recipe_name);
        const TrainRecipe preset = recipe_preset(args.recipe_name);
        kv["model"] = model_kind_name(preset.model);
        kv["pretrain"] = preset.pretrain ? "1" : "0";
        kv["meta"] = preset.meta ? "1" : "0";
        kv["criterion"] = criterion_name(preset.criterion);
    }
    if (!args.recipe_name.empty()) kv["in.recipe"] = args.recipe_name;
    for (const auto& s : args.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail(ErrorKind::Usage, "--set expects key=value: " + s);
        kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (!args.corpus_path.empty()) kv["in.corpus"] = absolute_path(args.corpus_path);
    if (kv.count("in.corpus") && !kv.count("in.quiz") && args.quiz_path.empty())
        kv["in.quiz"] = absolute_path(default_quiz_path(kv["in.corpus"]));
    if (!args.quiz_path.empty()) kv["in.quiz"] = absolute_path(args.quiz_path);
    kv["subcommand"] = subcommand;
    return kv;
}

TrainRecipe recipe_of(const std::map<std::string, std::string>& kv) {
    std::map<std::string, std::string> plain;
    for (const auto& [k, v] : kv)
        if (k.rfind("in.", 0) != 0 && k != "subcommand") plain[k] = v;
    return recipe_from_map(plain);
}

std::string open_run_dir(const CommonArgs& args, const std::string& subcommand,
                         const std::map<std::string, std::string>& resolved) {
    std::string dir = args.out_dir;
    if (dir.empty()) {
        std::string root = args.out_root;
        if (root.empty()) {
            const char* env = std::getenv("CLICKCFA_OUT_ROOT");
            root = env ? env : "runs";
        }
        dir = report::make_run_dir(root, subcommand, recipe_fingerprint(recipe_of(resolved)));
    } else {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) fail(ErrorKind::Io, "cannot create output directory " + dir);
    }
    write_kv_file(dir + "/config.resolved", resolved);
    return dir;
}

dataio::Corpus load_corpus(const std::map<std::string, std::string>& kv,
                           dataio::ParseSummary* summary, const click::EncodingConfig& cfg) {
    auto it = kv.find("in.corpus");
    if (it == kv.end()) fail(ErrorKind::Usage, "--corpus is required");
    auto qt = kv.find("in.quiz");
    if (qt == kv.end()) fail(ErrorKind::Usage, "quiz path missing");
    return dataio::parse_log(it->second, qt->second, summary, cfg);
}

void print_summary(const dataio::ParseSummary& sum, std::ostream& out) {
    out << "event_lines=" << sum.event_lines << " malformed_events=" << sum.malformed_events
        << " quiz_lines=" << sum.quiz_lines << " malformed_quiz=" << sum.malformed_quiz
        << " dangling_quiz=" << sum.dangling_quiz << " reclassified=" << sum.reclassified
        << " sessions=" << sum.sessions << " sessions_without_quiz=" << sum.sessions_without_quiz
        << "\n";
    if (sum.empty_input) out << "warning: empty event log\n";
}

int cmd_generate(const CommonArgs& args, const std::string& archetypes_arg, std::size_t n,
                 std::uint64_t seed) {
    auto resolved = resolve_config(args, "generate");
    if (archetypes_arg.empty() && !resolved.count("in.archetypes"))
        fail(ErrorKind::Usage, "--archetypes is required");
    if (!archetypes_arg.empty()) {
        std::string abs;
        std::string token;
        std::istringstream ss(archetypes_arg);
        while (std::getline(ss, token, ',')) {
            if (!abs.empty()) abs += ',';
            abs += absolute_path(token);
        }
        resolved["in.archetypes"] = abs;
    }
    if (n > 0) resolved["in.n_sessions"] = std::to_string(n);
    if (!resolved.count("in.n_sessions")) fail(ErrorKind::Usage, "--n is required");
    if (seed != UINT64_MAX) resolved["seed"] = std::to_string(seed);

    std::vector<dataio::SynthArchetype> archetypes;
    std::istringstream ss(resolved["in.archetypes"]);
    std::string token;
    while (std::getline(ss, token, ','))
        archetypes.push_back(dataio::read_archetype_file(token));

    const auto n_sessions = std::stoull(resolved["in.n_sessions"]);
    const auto the_seed = std::stoull(resolved["seed"]);
    const auto corpus = dataio::generate_synthetic(archetypes, n_sessions, the_seed);

    const std::string dir = open_run_dir(args, "generate", resolved);
    dataio::serialize_corpus(corpus, dir + "/synth.tsv", dir + "/synth.quiz.tsv");
    std::ofstream truth(dir + "/synth.truth.tsv");
    for (const auto& s : corpus.sessions)
        truth << s.user_id << '\t' << s.video_id << '\t' << s.truth_archetype << '\n';
    std::cout << "generated " << corpus.sessions.size() << " sessions -> " << dir << "\n";
    return 0;
}

int cmd_parse(const CommonArgs& args) {
    auto resolved = resolve_config(args, "parse");
    const TrainRecipe recipe = recipe_of(resolved);
    dataio::ParseSummary sum;
    const auto corpus = load_corpus(resolved, &sum, recipe.encoding);
    const std::string dir = open_run_dir(args, "parse", resolved);
    dataio::serialize_corpus(corpus, dir + "/corpus.tsv", dir + "/corpus.quiz.tsv");
    std::ofstream out(dir + "/summary.txt");
    print_summary(sum, out);
    print_summary(sum, std::cout);
    return 0;
}

int cmd_pretrain(const CommonArgs& args) {
    auto resolved = resolve_config(args, "pretrain");
    const TrainRecipe recipe = recipe_of(resolved);
    const auto corpus = load_corpus(resolved, nullptr, recipe.encoding);

    std::vector<click::TimeVaryingEncoding> sequences;
    sequences.reserve(corpus.sessions.size());
    for (const auto& s : corpus.sessions)
        sequences.push_back(click::encode_full_session(s, recipe.encoding));
    pretrain::ExpandStats stats;
    const auto samples = pretrain::expand_corpus(sequences, recipe.pretrain_gap_marker, &stats);

    pretrain::PretrainConfig cfg;
    cfg.hidden = recipe.hidden_dim;
    cfg.batch_size = recipe.batch_size;
    cfg.lr = recipe.lr;
    cfg.max_epochs = recipe.pretrain_epochs;
    cfg.seed = recipe.seed;
    const auto result = pretrain::run_pretrain(samples, cfg);

    const std::string dir = open_run_dir(args, "pretrain", resolved);
    result.gru_checkpoint.save(dir + "/gru.ckpt");
    report::write_pretrain_csv(dir + "/pretrain.csv", result.loss_history);
    std::cout << "pre-trained on " << stats.samples << " leave-one-out samples ("
              << stats.skipped_single_event << " single-event sequences skipped) -> " << dir
              << "\n";
    return 0;
}

int cmd_train(const CommonArgs& args) {
    auto resolved = resolve_config(args, "train");
    const TrainRecipe recipe = recipe_of(resolved);
    const auto corpus = load_corpus(resolved, nullptr, recipe.encoding);
    const std::string dir = open_run_dir(args, "train", resolved);

    std::vector<std::size_t> all(corpus.sessions.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    cfa::CfaModel model = cfa::CfaModel::make(recipe.model, eval::model_input_dim(recipe.model),
                                              recipe.hidden_dim, derive_seed(recipe.seed, 600),
                                              recipe.conv_channels, recipe.conv_kernel);
    if (recipe.pretrain) {
        std::vector<click::TimeVaryingEncoding> sequences;
        for (const auto& s : corpus.sessions)
            sequences.push_back(click::encode_full_session(s, recipe.encoding));
        const auto samples =
            pretrain::expand_corpus(sequences, recipe.pretrain_gap_marker, nullptr);
        pretrain::PretrainConfig pcfg;
        pcfg.hidden = recipe.hidden_dim;
        pcfg.batch_size = recipe.batch_size;
        pcfg.lr = recipe.lr;
        pcfg.max_epochs = recipe.pretrain_epochs;
        pcfg.seed = derive_seed(recipe.seed, 100);
        const auto pre = pretrain::run_pretrain(samples, pcfg);
        report::write_pretrain_csv(dir + "/pretrain.csv", pre.loss_history);
        model.load_pretrained_gru(pre.gru_checkpoint);
    }

    if (recipe.meta) {
        auto [train_idx, meta_idx] =
            dataio::carve_meta(corpus, all, recipe.meta_fraction, derive_seed(recipe.seed, 400));
        const auto train_samples =
            eval::build_dataset(corpus, train_idx, recipe.model, recipe.encoding);
        const auto meta_samples =
            eval::build_dataset(corpus, meta_idx, recipe.model, recipe.encoding);
        const auto points = eval::criterion_points(corpus, meta_samples, recipe.criterion);
        const auto curve = cluster::select_k(points, recipe.cluster_k_min, recipe.cluster_k_max,
                                             derive_seed(recipe.seed, 500));
        report::write_silhouette_csv(dir + "/silhouette.csv", curve.scores);
        const auto km = cluster::kmeans(points, curve.best_k, derive_seed(recipe.seed, 500));
        std::vector<int> labels;
        for (const auto& m : meta_samples) labels.push_back(m.label);
        const auto clusters = cluster::order_by_entropy(km, labels);

        meta::WeightingNet net = meta::WeightingNet::make(derive_seed(recipe.seed, 700));
        meta::MetaTrainConfig mcfg;
        mcfg.batch_size = recipe.batch_size;
        mcfg.meta_batch_size = recipe.meta_batch_size;
        mcfg.alpha = recipe.lr;
        mcfg.beta = recipe.meta_lr;
        mcfg.epochs_total = recipe.epochs;
        mcfg.seed = derive_seed(recipe.seed, 200);
        mcfg.standardize_weight_input = recipe.standardize_weight_input;
        mcfg.theta_update_per_epoch = recipe.theta_update_per_epoch;
        const auto history =
            meta::run_algorithm1(model, net, train_samples, meta_samples, clusters, mcfg);
        report::write_meta_history_csv(dir + "/meta_history.csv", history);
        net.params().save(dir + "/wnet.ckpt");
    } else {
        const auto train_samples = eval::build_dataset(corpus, all, recipe.model, recipe.encoding);
        cfa::PlainTrainConfig pcfg;
        pcfg.batch_size = recipe.batch_size;
        pcfg.lr = recipe.lr;
        pcfg.epochs = recipe.epochs;
        pcfg.seed = derive_seed(recipe.seed, 200);
        const auto history = cfa::train_plain(model, train_samples, pcfg);
        report::write_metrics_csv(dir + "/metrics.csv", history);
    }
    model.params().save(dir + "/model.ckpt");
    std::cout << "trained " << recipe.name() << " -> " << dir << "\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& args) {
    auto resolved = resolve_config(args, "evaluate");
    const TrainRecipe recipe = recipe_of(resolved);
    const auto corpus = load_corpus(resolved, nullptr, recipe.encoding);
    const std::string dir = open_run_dir(args, "evaluate", resolved);

    const std::string which =
        resolved.count("in.recipe") ? resolved.at("in.recipe") : recipe.name();
    std::vector<std::string> names =
        which == "grid" ? eval::full_grid_names() : std::vector<std::string>{which};

    const auto rows = eval::evaluate_grid(corpus, recipe, names);
    report::write_report_csv(dir + "/report.csv", rows);
    std::ofstream txt(dir + "/report.txt");
    txt << report::report_table_text(rows);
    for (const auto& row : rows) {
        if (row.excluded) continue;
        report::write_fold_scores_csv(dir + "/folds-" + row.name + ".csv", row.report);
        if (!row.report.folds.empty() && !row.report.folds[0].silhouette.empty())
            report::write_silhouette_csv(dir + "/silhouette-" + row.name + ".csv",
                                         row.report.folds[0].silhouette);
    }
    std::cout << report::report_table_text(rows);
    std::cout << "evaluation -> " << dir << "\n";
    return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& fractions_arg) {
    auto resolved = resolve_config(args, "sweep");
    if (!fractions_arg.empty()) resolved["in.fractions"] = fractions_arg;
    if (!resolved.count("in.fractions")) resolved["in.fractions"] = "0,0.25,0.5,0.75,1";
    const TrainRecipe recipe = recipe_of(resolved);
    const auto corpus = load_corpus(resolved, nullptr, recipe.encoding);
    const std::string dir = open_run_dir(args, "sweep", resolved);

    std::vector<double> fractions;
    std::istringstream ss(resolved["in.fractions"]);
    std::string token;
    while (std::getline(ss, token, ',')) fractions.push_back(std::stod(token));

    const auto points = eval::meta_usage_sweep(corpus, recipe, fractions);
    report::write_sweep_csv(dir + "/sweep.csv", points);
    for (const auto& p : points)
        std::cout << "fraction " << p.fraction << ": mean ACC " << p.mean_acc << " (|D_meta|="
                  << p.meta_size << ")\n";
    std::cout << "sweep -> " << dir << "\n";
    return 0;
}

int cmd_analyze(const CommonArgs& args, const std::string& checkpoint_arg) {
    auto resolved = resolve_config(args, "analyze");
    if (!checkpoint_arg.empty()) resolved["in.checkpoint"] = absolute_path(checkpoint_arg);
    if (!resolved.count("in.checkpoint"))
        fail(ErrorKind::Usage, "--checkpoint is required for analyze");
    const TrainRecipe recipe = recipe_of(resolved);
    const auto corpus = load_corpus(resolved, nullptr, recipe.encoding);
    const std::string dir = open_run_dir(args, "analyze", resolved);

    cfa::CfaModel model = cfa::CfaModel::make(recipe.model, eval::model_input_dim(recipe.model),
                                              recipe.hidden_dim, derive_seed(recipe.seed, 600),
                                              recipe.conv_channels, recipe.conv_kernel);
    const auto checkpoint = nn::ParamStore::load(resolved.at("in.checkpoint"));
    for (std::size_t i = 0; i < checkpoint.entry_count(); ++i) {
        const auto& e = checkpoint.entry(i);
        if (!model.params().has(e.name))
            fail(ErrorKind::Usage, "checkpoint tensor unknown to this model: " + e.name);
        auto dst = model.params().values(e.name);
        auto src = checkpoint.values(i);
        if (dst.size() != src.size())
            fail(ErrorKind::Usage, "checkpoint shape mismatch for " + e.name);
        std::copy(src.begin(), src.end(), dst.begin());
    }

    std::vector<std::size_t> all(corpus.sessions.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto samples = eval::build_dataset(corpus, all, recipe.model, recipe.encoding);
    if (samples.empty()) fail(ErrorKind::Degenerate, "no scorable sessions to analyze");

    eval::EvalReport report;
    report.recipe_name = recipe.name();
    report.fingerprint = recipe_fingerprint(recipe);
    eval::FoldArtifacts art;
    const auto preds = cfa::predict_all(model, samples);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        art.test_pred.push_back(preds[i].hard);
        art.test_label.push_back(samples[i].label);
        art.test_sessions.push_back(samples[i].session);
    }
    art.scores = eval::score(art.test_pred, art.test_label, recipe.f1_positive_cfa);
    art.test_size = samples.size();
    report.folds.push_back(std::move(art));

    const auto dists = eval::gram_analytics(corpus, report, recipe.encoding);
    report::write_gram_csv(dir + "/grams.csv", dists);
    for (const auto& d : dists) {
        if (!d.present) {
            std::cout << d.subset << ": empty subset (omitted)\n";
            continue;
        }
        std::cout << d.subset << ": top2 mass " << d.top2_mass << ", top grams:";
        for (std::size_t i = 0; i < std::min<std::size_t>(3, d.freqs.size()); ++i)
            std::cout << ' ' << d.freqs[i].first << '(' << d.freqs[i].second << ')';
        std::cout << "\n";
    }
    std::cout << "analytics -> " << dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"clickstream CFA prediction pipeline"};
    app.require_subcommand(1);

    CommonArgs gen_args, parse_args, pre_args, train_args, eval_args, sweep_args, ana_args;
    std::string archetypes, fractions, checkpoint;
    std::size_t n_sessions = 0;
    std::uint64_t gen_seed = UINT64_MAX;

    auto* gen = app.add_subcommand("generate", "generate a synthetic corpus");
    gen_args.attach(gen, false);
    gen->add_option("--archetypes", archetypes, "comma-separated archetype config files");
    gen->add_option("--n", n_sessions, "number of sessions");
    gen->add_option("--seed", gen_seed, "generation seed");

    auto* prs = app.add_subcommand("parse", "parse and normalize an event/quiz log pair");
    parse_args.attach(prs, true);

    auto* pre = app.add_subcommand("pretrain", "self-supervised clickstream pre-training");
    pre_args.attach(pre, true);

    auto* trn = app.add_subcommand("train", "train one recipe on the full corpus");
    train_args.attach(trn, true);

    auto* evl = app.add_subcommand("evaluate", "5-fold cross-validated evaluation");
    eval_args.attach(evl, true);

    auto* swp = app.add_subcommand("sweep", "meta-data usage ablation sweep");
    sweep_args.attach(swp, true);
    swp->add_option("--fractions", fractions, "comma-separated usage fractions");

    auto* ana = app.add_subcommand("analyze", "4-gram analytics per confusion subset");
    ana_args.attach(ana, true);
    ana->add_option("--checkpoint", checkpoint, "trained model checkpoint");

    // convenience: --seed on recipe-bearing subcommands
    std::uint64_t seed_flag = UINT64_MAX;
    for (auto* cmd : {prs, pre, trn, evl, swp, ana})
        cmd->add_option("--seed", seed_flag, "master seed");

    CLI11_PARSE(app, argc, argv);

    auto with_seed = [&](CommonArgs& args) -> CommonArgs& {
        if (seed_flag != UINT64_MAX)
            args.sets.push_back("seed=" + std::to_string(seed_flag));
        return args;
    };

    try {
        if (gen->parsed()) return cmd_generate(gen_args, archetypes, n_sessions, gen_seed);
        if (prs->parsed()) return cmd_parse(with_seed(parse_args));
        if (pre->parsed()) return cmd_pretrain(with_seed(pre_args));
        if (trn->parsed()) return cmd_train(with_seed(train_args));
        if (evl->parsed()) return cmd_evaluate(with_seed(eval_args));
        if (swp->parsed()) return cmd_sweep(with_seed(sweep_args), fractions);
        if (ana->parsed()) return cmd_analyze(with_seed(ana_args), checkpoint);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
