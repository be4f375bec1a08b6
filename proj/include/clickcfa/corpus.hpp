#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "clickcfa/events.hpp"

namespace clickcfa::dataio {

struct Corpus {
    std::vector<click::ClickSession> sessions;
    std::string dataset_name;
    std::vector<int> fold_assignments; // empty until split_folds
};

struct ParseSummary {
    std::size_t event_lines = 0;
    std::size_t malformed_events = 0;
    std::size_t quiz_lines = 0;
    std::size_t malformed_quiz = 0;
    std::size_t dangling_quiz = 0; // quiz rows with no matching session
    std::size_t reclassified = 0;  // recorded code != derived type
    std::size_t sessions = 0;
    std::size_t sessions_without_quiz = 0;
    bool empty_input = false;
};

// Event log: user<TAB>video<TAB>code<TAB>position<TAB>ts<TAB>state<TAB>rate
// Quiz log:  user<TAB>video<TAB>points<TAB>points_max<TAB>answer_ts
// Malformed lines are counted and skipped; >50% malformed rejects the corpus.
Corpus parse_log(const std::string& events_path, const std::string& quiz_path,
                 ParseSummary* summary = nullptr, const click::EncodingConfig& cfg = {});

// Inverse of parse_log on well-formed corpora: sessions in canonical
// (user, video) order, %.17g numeric formatting.
void serialize_corpus(const Corpus& corpus, const std::string& events_path,
                      const std::string& quiz_path);

// Deterministic equal-size partition; independent of session order (keys on
// session identity). Stratified variant keeps label balance per fold.
void split_folds(Corpus& corpus, std::size_t n_folds, std::uint64_t seed, bool stratify = false);

// Splits `indices` into (train, meta) with |meta| = round(fraction * total).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
carve_meta(const Corpus& corpus, const std::vector<std::size_t>& indices, double fraction,
           std::uint64_t seed);

struct SynthArchetype {
    std::string name;
    std::array<std::array<double, 5>, 5> transition{}; // row-stochastic over event types
    int mean_session_length = 20;
    double cfa_base_prob = 0.8;
    double skip_forward_cfa_penalty = 0.0;
};

void validate_archetype(const SynthArchetype& a);
SynthArchetype read_archetype_file(const std::string& path);
void write_archetype_file(const std::string& path, const SynthArchetype& a);

// Markov-chain player simulation. Sessions are classify-consistent coalescing
// fixpoints (same-type gaps always exceed the window), so serialize/parse is
// an exact round trip. CFA is drawn with probability
// clamp(base + penalty * skip_forward_fraction, 0, 1).
Corpus generate_synthetic(const std::vector<SynthArchetype>& archetypes, std::size_t n_sessions,
                          std::uint64_t seed);

// convenience accessors
std::vector<std::size_t> fold_indices(const Corpus& corpus, int fold);
std::vector<std::size_t> non_fold_indices(const Corpus& corpus, int fold);

} // namespace clickcfa::dataio
