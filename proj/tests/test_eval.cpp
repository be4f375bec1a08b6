#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "clickcfa/errors.hpp"
#include "clickcfa/eval.hpp"
#include "clickcfa/report_io.hpp"
#include "clickcfa/rng.hpp"

using namespace clickcfa;
using namespace clickcfa::eval;

namespace {

dataio::SynthArchetype calm_archetype(double base = 0.95, double penalty = -6.0) {
    dataio::SynthArchetype a;
    a.name = "calm";
    for (auto& row : a.transition) row = {0.5, 0.42, 0.0, 0.0, 0.08};
    a.mean_session_length = 12;
    a.cfa_base_prob = base;
    a.skip_forward_cfa_penalty = penalty;
    return a;
}

dataio::SynthArchetype skippy_archetype(double base = 0.95, double penalty = -2.0) {
    dataio::SynthArchetype a;
    a.name = "skippy";
    for (auto& row : a.transition) row = {0.15, 0.15, 0.0, 0.55, 0.15};
    a.mean_session_length = 12;
    a.cfa_base_prob = base;
    a.skip_forward_cfa_penalty = penalty;
    return a;
}

TrainRecipe small_recipe(const std::string& preset) {
    TrainRecipe r = recipe_preset(preset);
    r.hidden_dim = 6;
    r.epochs = 3;
    r.pretrain_epochs = 1;
    r.batch_size = 16;
    r.meta_batch_size = 16;
    r.lr = 0.02;
    r.meta_lr = 0.02;
    r.meta_fraction = 0.2;
    r.cluster_k_max = 4;
    r.seed = 11;
    return r;
}

} // namespace

TEST_CASE("score arithmetic") {
    SUBCASE("perfect predictions") {
        const auto s = score({1, 0, 1, 1}, {1, 0, 1, 1});
        CHECK(s.acc == 1.0);
        CHECK(s.f1 == 1.0);
    }
    SUBCASE("all-negative predictions on a half-positive set") {
        const auto s = score({0, 0, 0, 0}, {1, 1, 0, 0});
        CHECK(s.acc == 0.5);
        CHECK(s.f1 == 0.0); // zero recall
    }
    SUBCASE("TP=3, FP=1, FN=2 -> F1 = 2/3") {
        // labels: 5 positives (3 hit, 2 missed), 1 negative predicted positive
        const std::vector<int> preds{1, 1, 1, 0, 0, 1, 0};
        const std::vector<int> labels{1, 1, 1, 1, 1, 0, 0};
        const auto s = score(preds, labels);
        CHECK(s.tp == 3);
        CHECK(s.fp == 1);
        CHECK(s.fn == 2);
        CHECK(s.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(s.acc == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
    }
    SUBCASE("empty input is an error") {
        CHECK_THROWS_AS(score({}, {}), Error);
    }
    SUBCASE("flipping the positive class changes F1, not ACC") {
        const std::vector<int> preds{1, 0, 0, 1, 0};
        const std::vector<int> labels{1, 1, 0, 0, 0};
        const auto pos_cfa = score(preds, labels, true);
        const auto pos_non = score(preds, labels, false);
        CHECK(pos_cfa.acc == pos_non.acc);
        CHECK(pos_cfa.f1 != pos_non.f1);
    }
    SUBCASE("confusion counts match a brute-force pass on random pairs") {
        Rng rng(9);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 1 + rng.index(60);
            std::vector<int> preds(n), labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                preds[i] = static_cast<int>(rng.index(2));
                labels[i] = static_cast<int>(rng.index(2));
            }
            const auto s = score(preds, labels);
            std::size_t tp = 0, fp = 0, tn = 0, fn = 0, hits = 0;
            for (std::size_t i = 0; i < n; ++i) {
                hits += preds[i] == labels[i];
                tp += preds[i] == 1 && labels[i] == 1;
                fp += preds[i] == 1 && labels[i] == 0;
                tn += preds[i] == 0 && labels[i] == 0;
                fn += preds[i] == 0 && labels[i] == 1;
            }
            CHECK(s.tp == tp);
            CHECK(s.fp == fp);
            CHECK(s.tn == tn);
            CHECK(s.fn == fn);
            CHECK(s.tp + s.fp + s.tn + s.fn == n);
            CHECK(s.acc == doctest::Approx(double(hits) / n).epsilon(1e-12));
            const double denom = double(2 * tp + fp + fn);
            CHECK(s.f1 == doctest::Approx(denom > 0 ? 2.0 * tp / denom : 0.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("build_dataset counts drops and keeps usable sessions") {
    auto corpus = dataio::generate_synthetic({calm_archetype()}, 30, 3);
    corpus.sessions[0].quiz.reset(); // no label
    corpus.sessions[1].quiz->answer_timestamp = 0.0; // answers before any event
    std::vector<std::size_t> all(corpus.sessions.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    DatasetStats stats;
    const auto data = build_dataset(corpus, all, ModelKind::Gru, {}, &stats);
    CHECK(stats.dropped_no_label == 1);
    CHECK(stats.dropped_no_prefix == 1);
    CHECK(stats.usable == 28);
    CHECK(data.size() == 28);
    for (const auto& s : data) {
        CHECK(s.len >= 1);
        CHECK(s.dim == 5);
        CHECK((s.label == 0 || s.label == 1));
    }
}

TEST_CASE("short sessions are dropped from the n-gram dataset with a counter") {
    auto corpus = dataio::generate_synthetic({calm_archetype()}, 20, 5);
    // truncate one session to 3 pre-answer events; 4-grams need 4
    auto& s = corpus.sessions[0];
    s.events.resize(3);
    s.quiz->answer_timestamp = s.events.back().timestamp + 1.0;
    std::vector<std::size_t> all(corpus.sessions.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    DatasetStats stats;
    const auto data = build_dataset(corpus, all, ModelKind::Ngram4, {}, &stats);
    CHECK(stats.dropped_short == 1);
    CHECK(data.size() == 19);
    for (const auto& d : data) CHECK(d.dim == 20);
}

TEST_CASE("criterion points have the right shapes and values") {
    const auto corpus = dataio::generate_synthetic({calm_archetype()}, 10, 7);
    std::vector<std::size_t> all(10);
    for (std::size_t i = 0; i < 10; ++i) all[i] = i;
    const auto data = build_dataset(corpus, all, ModelKind::Gru, {});
    const auto c1 = criterion_points(corpus, data, Criterion::C1);
    const auto c2 = criterion_points(corpus, data, Criterion::C2);
    REQUIRE(c1.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(c1[i].size() == 1);
        CHECK(c2[i].size() == 5);
        const auto st = click::build_static(corpus.sessions[data[i].session]);
        CHECK(c1[i][0] == double(st.total_clicks));
        double sum = 0;
        for (double v : c2[i]) sum += v;
        CHECK(sum == double(st.total_clicks));
    }
}

TEST_CASE("gram distribution sums to one and matches brute force") {
    const std::vector<std::vector<int>> seqs{{0, 1, 0, 3, 0}, {3, 3, 3, 3}, {0, 1}};
    const auto dist = gram_distribution("X", seqs);
    CHECK(dist.present);
    double total = 0.0;
    for (const auto& [gram, freq] : dist.freqs) total += freq;
    CHECK(std::fabs(total - 1.0) <= 1e-9);
    // brute force: seq1 has 2 grams, seq2 has 1, seq3 none -> 3 grams
    CHECK(dist.freqs.size() == 3);
    for (const auto& [gram, freq] : dist.freqs)
        CHECK(freq == doctest::Approx(1.0 / 3.0));
    CHECK(dist.top2_mass == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("empty subsets are omitted with a note") {
    const auto dist = gram_distribution("FN", {});
    CHECK(!dist.present);
    const auto dist2 = gram_distribution("FN", {{0, 1}}); // too short for any 4-gram
    CHECK(!dist2.present);
}

TEST_CASE("recipe fingerprints are stable and distinguish configurations") {
    const TrainRecipe a = small_recipe("gru");
    TrainRecipe b = a;
    CHECK(recipe_fingerprint(a) == recipe_fingerprint(b));
    b.lr = 0.021;
    CHECK(recipe_fingerprint(a) != recipe_fingerprint(b));
    TrainRecipe c = a;
    c.seed = 12;
    CHECK(recipe_fingerprint(a) != recipe_fingerprint(c));
}

TEST_CASE("cross_validate is deterministic and scores every fold") {
    const auto corpus =
        dataio::generate_synthetic({calm_archetype(), skippy_archetype()}, 80, 21);
    TrainRecipe r = small_recipe("gru");
    r.n_folds = 4;
    const auto a = cross_validate(corpus, r);
    const auto b = cross_validate(corpus, r);
    REQUIRE(a.folds.size() == 4);
    CHECK(a.acc_mean == b.acc_mean);
    CHECK(a.f1_mean == b.f1_mean);
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (std::size_t f = 0; f < a.folds.size(); ++f) {
        CHECK(a.folds[f].scores.acc == b.folds[f].scores.acc);
        CHECK(a.folds[f].test_size > 0);
        for (auto sidx : a.folds[f].test_sessions) {
            CHECK(seen.insert(sidx).second); //折s never share test sessions
            ++total;
        }
    }
    CHECK(total <= corpus.sessions.size());
}

TEST_CASE("meta cross_validate runs the full clustering path") {
    const auto corpus =
        dataio::generate_synthetic({calm_archetype(), skippy_archetype()}, 180, 23);
    TrainRecipe r = small_recipe("gru-meta-c2");
    r.n_folds = 3;
    const auto report = cross_validate(corpus, r);
    REQUIRE(report.folds.size() == 3);
    for (const auto& fold : report.folds) {
        CHECK(fold.selected_k >= 2);
        CHECK(!fold.silhouette.empty());
        CHECK(!fold.meta_history.empty());
        for (const auto& row : fold.meta_history) {
            CHECK(std::isfinite(row.train_loss));
            CHECK(row.mean_weight > 0.0);
            CHECK(row.mean_weight < 1.0);
        }
    }
}

TEST_CASE("sweep fraction 0 equals the no-meta recipe exactly") {
    const auto corpus =
        dataio::generate_synthetic({calm_archetype(), skippy_archetype()}, 300, 29);
    TrainRecipe meta_recipe = small_recipe("gru-meta-c2");
    meta_recipe.n_folds = 4;
    TrainRecipe plain_recipe = meta_recipe;
    plain_recipe.meta = false;
    plain_recipe.model = ModelKind::Gru;
    plain_recipe.pretrain = false;

    const auto sweep = meta_usage_sweep(corpus, meta_recipe, {0.0, 1.0});
    const auto plain = cross_validate(corpus, plain_recipe);
    REQUIRE(sweep.size() == 2);
    CHECK(sweep[0].fraction == 0.0);
    CHECK(sweep[0].meta_size == 0);
    CHECK(sweep[0].mean_acc == plain.acc_mean); // bit-exact degeneracy
    CHECK(sweep[1].meta_size > 0);
}

TEST_CASE("sweep subsets have size round(fraction * M)") {
    const auto corpus =
        dataio::generate_synthetic({calm_archetype(), skippy_archetype()}, 300, 31);
    TrainRecipe r = small_recipe("gru-meta-c2");
    r.n_folds = 4;
    r.meta_fraction = 0.3; // M = round(0.3 * 225) = 67 or 68 per fold
    const auto sweep = meta_usage_sweep(corpus, r, {0.5});
    REQUIRE(sweep.size() == 1);
    CHECK(sweep[0].meta_size > 0);
}

TEST_CASE("grid emits the ten Table-II-shaped rows with latent-var excluded") {
    const auto names = full_grid_names();
    REQUIRE(names.size() == 10);
    CHECK(names[2] == "latent-var");

    const auto corpus =
        dataio::generate_synthetic({calm_archetype(), skippy_archetype()}, 60, 37);
    TrainRecipe base = small_recipe("gru");
    base.n_folds = 3;
    const auto rows = evaluate_grid(corpus, base, {"gru", "latent-var"});
    REQUIRE(rows.size() == 2);
    CHECK(!rows[0].excluded);
    CHECK(rows[1].excluded);
    const auto csv_text = report::report_table_text(rows);
    CHECK(csv_text.find("gru") != std::string::npos);
    CHECK(csv_text.find("latent-var") != std::string::npos);
}

TEST_CASE("gram analytics ranks planted skip-forward grams higher in TN than TP") {
    // generator ties skip-forward to non-CFA; a trained model's TN subset is
    // then Sf-heavy while TP is Sf-light
    const auto corpus =
        dataio::generate_synthetic({calm_archetype(0.95, -6.0), skippy_archetype(0.95, -2.0)},
                                   300, 41);
    TrainRecipe r = small_recipe("gru");
    r.n_folds = 3;
    r.epochs = 6;
    const auto report = cross_validate(corpus, r);
    const auto dists = gram_analytics(corpus, report, r.encoding);
    REQUIRE(dists.size() == 6);
    double sf_tp = -1.0, sf_tn = -1.0;
    for (const auto& d : dists) {
        if (!d.present) continue;
        double total = 0.0, sf_mass = 0.0;
        for (const auto& [gram, freq] : d.freqs) {
            total += freq;
            if (gram.find("Sf") != std::string::npos) sf_mass += freq;
        }
        CHECK(std::fabs(total - 1.0) <= 1e-9);
        if (d.subset == "TP") sf_tp = sf_mass;
        if (d.subset == "TN") sf_tn = sf_mass;
    }
    REQUIRE(sf_tp >= 0.0);
    REQUIRE(sf_tn >= 0.0);
    CHECK(sf_tn > sf_tp);
}
