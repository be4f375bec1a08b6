#include "clickcfa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "clickcfa/errors.hpp"
#include "clickcfa/recipe.hpp"
#include "clickcfa/rng.hpp"

namespace clickcfa::dataio {

namespace {

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_int(const std::string& s, long& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtol(s.c_str(), &end, 10);
    return end == s.c_str() + s.size();
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

struct RawEvent {
    int code;
    double position, timestamp, rate;
    int state;
    std::size_t file_order;
};

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// canonical session ordering used by serialization, folds and carving
std::vector<std::size_t> sorted_by_identity(const Corpus& corpus,
                                            const std::vector<std::size_t>& indices) {
    std::vector<std::size_t> order = indices;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& sa = corpus.sessions[a];
        const auto& sb = corpus.sessions[b];
        if (sa.user_id != sb.user_id) return sa.user_id < sb.user_id;
        return sa.video_id < sb.video_id;
    });
    return order;
}

} // namespace

Corpus parse_log(const std::string& events_path, const std::string& quiz_path,
                 ParseSummary* summary, const click::EncodingConfig& cfg) {
    std::ifstream events_in(events_path);
    if (!events_in) fail(ErrorKind::Io, "cannot read event log: " + events_path);

    ParseSummary sum;
    std::map<std::pair<std::string, std::string>, std::vector<RawEvent>> groups;
    std::map<std::string, double> video_max_pos;

    std::string line;
    std::size_t order = 0;
    while (std::getline(events_in, line)) {
        if (line.empty()) continue;
        ++sum.event_lines;
        const auto f = split_tabs(line);
        long code = 0, state = 0;
        double pos = 0, ts = 0, rate = 0;
        const bool ok = f.size() == 7 && !f[0].empty() && !f[1].empty() &&
                        parse_int(f[2], code) && code >= 0 && code <= 4 &&
                        parse_double(f[3], pos) && pos >= 0.0 && parse_double(f[4], ts) &&
                        ts >= 0.0 && parse_int(f[5], state) && (state == 0 || state == 1) &&
                        parse_double(f[6], rate) && rate > 0.0;
        if (!ok) {
            ++sum.malformed_events;
            continue;
        }
        groups[{f[0], f[1]}].push_back(
            {static_cast<int>(code), pos, ts, rate, static_cast<int>(state), order++});
        auto& mp = video_max_pos[f[1]];
        mp = std::max(mp, pos);
    }
    if (sum.event_lines > 0 && sum.malformed_events * 2 > sum.event_lines)
        fail(ErrorKind::CorpusRejected,
             "more than half of the event lines are malformed in " + events_path);
    if (sum.event_lines == 0) sum.empty_input = true;

    struct QuizRow {
        double points, points_max, answer_ts;
    };
    std::map<std::pair<std::string, std::string>, QuizRow> quizzes;
    {
        std::ifstream quiz_in(quiz_path);
        if (!quiz_in) fail(ErrorKind::Io, "cannot read quiz log: " + quiz_path);
        while (std::getline(quiz_in, line)) {
            if (line.empty()) continue;
            ++sum.quiz_lines;
            const auto f = split_tabs(line);
            double points = 0, maxp = 0, ats = 0;
            const bool ok = f.size() == 5 && !f[0].empty() && !f[1].empty() &&
                            parse_double(f[2], points) && points >= 0.0 &&
                            parse_double(f[3], maxp) && maxp > 0.0 && parse_double(f[4], ats) &&
                            ats >= 0.0 && points <= maxp + 1e-9;
            if (!ok) {
                ++sum.malformed_quiz;
                continue;
            }
            const auto key = std::make_pair(f[0], f[1]);
            auto it = quizzes.find(key);
            // several submissions: keep the first attempt
            if (it == quizzes.end() || ats < it->second.answer_ts)
                quizzes[key] = {points, maxp, ats};
        }
    }

    Corpus corpus;
    corpus.dataset_name = events_path;
    for (auto& [key, raws] : groups) {
        std::stable_sort(raws.begin(), raws.end(), [](const RawEvent& a, const RawEvent& b) {
            if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
            return a.file_order < b.file_order;
        });
        click::ClickSession s;
        s.user_id = key.first;
        s.video_id = key.second;
        s.video_length = std::max(1.0, video_max_pos[key.second]);
        for (const RawEvent& r : raws) {
            click::EventType type;
            if (s.events.empty()) {
                type = r.state == 1 ? click::EventType::Play : click::EventType::Pause;
            } else {
                type = click::classify_event(s.events.back(),
                                             {r.position, r.timestamp, r.state, r.rate}, cfg);
            }
            if (static_cast<int>(type) != r.code) ++sum.reclassified;
            s.events.push_back({type, r.position, r.timestamp, r.state, r.rate});
        }
        s.events = click::coalesce_events(s.events, cfg);
        auto qit = quizzes.find(key);
        if (qit != quizzes.end()) {
            s.quiz = click::QuizOutcome{qit->second.points, qit->second.points_max,
                                        qit->second.answer_ts};
        } else {
            ++sum.sessions_without_quiz;
        }
        corpus.sessions.push_back(std::move(s));
    }
    sum.sessions = corpus.sessions.size();
    for (const auto& [key, q] : quizzes)
        if (!groups.count(key)) ++sum.dangling_quiz;
    if (summary) *summary = sum;
    return corpus;
}

void serialize_corpus(const Corpus& corpus, const std::string& events_path,
                      const std::string& quiz_path) {
    std::vector<std::size_t> all(corpus.sessions.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto order = sorted_by_identity(corpus, all);

    std::ofstream ev(events_path);
    std::ofstream qz(quiz_path);
    if (!ev || !qz) fail(ErrorKind::Io, "cannot write corpus files");
    for (std::size_t idx : order) {
        const auto& s = corpus.sessions[idx];
        for (const auto& e : s.events) {
            ev << s.user_id << '\t' << s.video_id << '\t' << static_cast<int>(e.type) << '\t'
               << fmt17(e.position) << '\t' << fmt17(e.timestamp) << '\t' << e.playback_state
               << '\t' << fmt17(e.rate) << '\n';
        }
        if (s.quiz) {
            qz << s.user_id << '\t' << s.video_id << '\t' << fmt17(s.quiz->points) << '\t'
               << fmt17(s.quiz->points_max) << '\t' << fmt17(s.quiz->answer_timestamp) << '\n';
        }
    }
    if (!ev || !qz) fail(ErrorKind::Io, "write failed while serializing corpus");
}

void split_folds(Corpus& corpus, std::size_t n_folds, std::uint64_t seed, bool stratify) {
    const std::size_t n = corpus.sessions.size();
    if (n == 0) fail(ErrorKind::Degenerate, "cannot split an empty corpus");
    if (n_folds < 2) fail(ErrorKind::Usage, "n_folds must be at least 2");
    if (n_folds > n) fail(ErrorKind::Degenerate, "more folds than sessions");

    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    auto order = sorted_by_identity(corpus, all);
    Rng rng(derive_seed(seed, 0xF01D5));
    rng.shuffle(order);

    if (stratify) {
        // group by label (sessions lacking a label form their own stratum),
        // keep dealing across stratum boundaries so fold sizes stay within 1
        std::vector<std::size_t> strata[3];
        for (std::size_t idx : order) {
            const auto& s = corpus.sessions[idx];
            if (!s.quiz)
                strata[2].push_back(idx);
            else
                strata[click::compute_cfa(s).cfa].push_back(idx);
        }
        order.clear();
        for (const auto& st : strata) order.insert(order.end(), st.begin(), st.end());
        corpus.fold_assignments.assign(n, 0);
        for (std::size_t i = 0; i < order.size(); ++i)
            corpus.fold_assignments[order[i]] = static_cast<int>(i % n_folds);
        return;
    }

    corpus.fold_assignments.assign(n, 0);
    const std::size_t base = n / n_folds;
    const std::size_t rem = n % n_folds;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < n_folds; ++f) {
        const std::size_t size = base + (f < rem ? 1 : 0);
        for (std::size_t j = 0; j < size; ++j)
            corpus.fold_assignments[order[pos++]] = static_cast<int>(f);
    }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
carve_meta(const Corpus& corpus, const std::vector<std::size_t>& indices, double fraction,
           std::uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 0.5)
        fail(ErrorKind::Usage, "meta fraction must be in (0, 0.5)");
    const auto m = static_cast<std::size_t>(std::llround(fraction * indices.size()));
    if (m == 0) fail(ErrorKind::Degenerate, "meta split would be empty");
    auto order = sorted_by_identity(corpus, indices);
    Rng rng(derive_seed(seed, 0xCA57E));
    rng.shuffle(order);
    std::vector<std::size_t> meta(order.begin(), order.begin() + m);
    std::vector<std::size_t> train(order.begin() + m, order.end());
    return {std::move(train), std::move(meta)};
}

void validate_archetype(const SynthArchetype& a) {
    for (const auto& row : a.transition) {
        double sum = 0.0;
        for (double p : row) {
            if (p < 0.0 || p > 1.0)
                fail(ErrorKind::Degenerate, "transition probability outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            fail(ErrorKind::Degenerate, "transition matrix row does not sum to 1");
    }
    if (a.mean_session_length < 1) fail(ErrorKind::Degenerate, "mean_session_length must be >= 1");
    if (a.cfa_base_prob < 0.0 || a.cfa_base_prob > 1.0)
        fail(ErrorKind::Degenerate, "cfa_base_prob outside [0,1]");
}

namespace {
const char* kTransKeys[5] = {"trans_play", "trans_pause", "trans_skip_back", "trans_skip_forward",
                             "trans_rate_change"};
}

SynthArchetype read_archetype_file(const std::string& path) {
    const auto kv = read_kv_file(path);
    SynthArchetype a;
    auto need = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) fail(ErrorKind::Usage, std::string("archetype missing key ") + key);
        return it->second;
    };
    a.name = need("name");
    a.mean_session_length = std::stoi(need("mean_session_length"));
    a.cfa_base_prob = std::stod(need("cfa_base_prob"));
    a.skip_forward_cfa_penalty = std::stod(need("skip_forward_cfa_penalty"));
    for (int r = 0; r < 5; ++r) {
        std::istringstream row(need(kTransKeys[r]));
        for (int c = 0; c < 5; ++c) {
            if (!(row >> a.transition[r][c]))
                fail(ErrorKind::Usage, std::string("archetype row too short: ") + kTransKeys[r]);
        }
    }
    validate_archetype(a);
    return a;
}

void write_archetype_file(const std::string& path, const SynthArchetype& a) {
    std::map<std::string, std::string> kv;
    kv["name"] = a.name;
    kv["mean_session_length"] = std::to_string(a.mean_session_length);
    kv["cfa_base_prob"] = fmt17(a.cfa_base_prob);
    kv["skip_forward_cfa_penalty"] = fmt17(a.skip_forward_cfa_penalty);
    for (int r = 0; r < 5; ++r) {
        std::string row;
        for (int c = 0; c < 5; ++c) {
            if (c) row += ' ';
            row += fmt17(a.transition[r][c]);
        }
        kv[kTransKeys[r]] = row;
    }
    write_kv_file(path, kv);
}

Corpus generate_synthetic(const std::vector<SynthArchetype>& archetypes, std::size_t n_sessions,
                          std::uint64_t seed) {
    if (archetypes.empty()) fail(ErrorKind::Usage, "need at least one archetype");
    if (n_sessions == 0) fail(ErrorKind::Usage, "n_sessions must be positive");
    for (const auto& a : archetypes) validate_archetype(a);

    static const double kRates[5] = {0.75, 1.0, 1.25, 1.5, 2.0};
    const click::EncodingConfig cfg;
    Rng rng(derive_seed(seed, 0x6E6));
    Corpus corpus;
    corpus.dataset_name = "synthetic";
    corpus.sessions.reserve(n_sessions);

    for (std::size_t si = 0; si < n_sessions; ++si) {
        const std::size_t ai = archetypes.size() == 1 ? 0 : rng.index(archetypes.size());
        const SynthArchetype& arch = archetypes[ai];
        const int length = std::max(3, rng.poisson(arch.mean_session_length));

        click::ClickSession s;
        char idbuf[16];
        std::snprintf(idbuf, sizeof idbuf, "u%06zu", si);
        s.user_id = idbuf;
        std::snprintf(idbuf, sizeof idbuf, "v%06zu", si);
        s.video_id = idbuf;
        s.truth_archetype = static_cast<int>(ai);

        double t = 1.6e9 + static_cast<double>(si) * 1.0e5;
        double pos = rng.uniform(10.0, 60.0);
        double rate = 1.0;
        s.events.push_back({click::EventType::Play, pos, t, 1, rate});

        for (int i = 1; i < length; ++i) {
            const auto& prev = s.events.back();
            const int cur = static_cast<int>(prev.type);
            // draw the next type from the chain
            double u = rng.uniform01();
            int next = 4;
            for (int c = 0; c < 5; ++c) {
                if (u < arch.transition[cur][c]) {
                    next = c;
                    break;
                }
                u -= arch.transition[cur][c];
            }
            const double dt = next == cur ? rng.uniform(cfg.coalesce_window + 0.5, 25.0)
                                          : rng.uniform(1.0, 20.0);
            t += dt;
            const double before = click::pre_click_position(prev, t);

            click::ClickEvent e;
            e.timestamp = t;
            e.rate = rate;
            e.playback_state = prev.playback_state;
            auto type = static_cast<click::EventType>(next);
            switch (type) {
            case click::EventType::Play:
                e.position = before;
                e.playback_state = 1;
                break;
            case click::EventType::Pause:
                e.position = before;
                e.playback_state = 0;
                break;
            case click::EventType::SkipBack: {
                if (before <= cfg.eps_skip + 4.0) { // cannot skip back near the start
                    type = prev.playback_state == 1 ? click::EventType::Play
                                                    : click::EventType::Pause;
                    e.position = before;
                    e.playback_state = prev.playback_state;
                } else {
                    const double d = rng.uniform(cfg.eps_skip + 3.0, std::min(60.0, before));
                    e.position = before - d;
                }
                break;
            }
            case click::EventType::SkipForward:
                e.position = before + rng.uniform(cfg.eps_skip + 3.0, 60.0);
                break;
            case click::EventType::RateChange: {
                std::size_t ri = rng.index(5);
                while (kRates[ri] == rate) ri = (ri + 1) % 5;
                rate = kRates[ri];
                e.rate = rate;
                e.position = before;
                break;
            }
            }
            e.type = type;
            // generator self-check: parsing must rederive exactly this type
            const auto derived = click::classify_event(
                prev, {e.position, e.timestamp, e.playback_state, e.rate}, cfg);
            if (derived != e.type)
                fail(ErrorKind::Logic, "synthetic event inconsistent with classifier");
            s.events.push_back(e);
        }

        double max_pos = 0.0;
        std::size_t sf = 0;
        for (const auto& e : s.events) {
            max_pos = std::max(max_pos, e.position);
            if (e.type == click::EventType::SkipForward) ++sf;
        }
        s.video_length = std::max(1.0, max_pos);

        const double sf_frac = static_cast<double>(sf) / s.events.size();
        const double p_cfa = std::clamp(
            arch.cfa_base_prob + arch.skip_forward_cfa_penalty * sf_frac, 0.0, 1.0);
        const bool cfa = rng.uniform01() < p_cfa;
        click::QuizOutcome q;
        q.points_max = 10.0;
        q.points = cfa ? 10.0 : rng.uniform(0.0, 9.0);
        q.answer_timestamp = s.events.back().timestamp + rng.uniform(2.0, 10.0);
        s.quiz = q;

        corpus.sessions.push_back(std::move(s));
    }
    return corpus;
}

std::vector<std::size_t> fold_indices(const Corpus& corpus, int fold) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < corpus.fold_assignments.size(); ++i)
        if (corpus.fold_assignments[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> non_fold_indices(const Corpus& corpus, int fold) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < corpus.fold_assignments.size(); ++i)
        if (corpus.fold_assignments[i] != fold) out.push_back(i);
    return out;
}

} // namespace clickcfa::dataio
