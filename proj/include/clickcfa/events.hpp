#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace clickcfa::click {

// The five player event types; integer codes are part of the wire format.
enum class EventType : int { Play = 0, Pause = 1, SkipBack = 2, SkipForward = 3, RateChange = 4 };

constexpr int kEventTypeCount = 5;
const char* event_type_name(EventType t); // "Pl","Pa","Sb","Sf","Sp"

struct ClickEvent {
    EventType type = EventType::Play;
    double position = 0.0;  // seconds into the video
    double timestamp = 0.0; // UNIX seconds
    int playback_state = 1; // 0 paused, 1 playing
    double rate = 1.0;      // playback speed

    bool operator==(const ClickEvent&) const = default;
};

struct QuizOutcome {
    double points = 0.0;
    double points_max = 1.0;
    double answer_timestamp = 0.0;

    bool operator==(const QuizOutcome&) const = default;
};

struct ClickSession {
    std::string user_id;
    std::string video_id;
    double video_length = 1.0;
    std::vector<ClickEvent> events; // sorted by timestamp
    std::optional<QuizOutcome> quiz;
    int truth_archetype = -1; // synthetic corpora only; -1 for parsed data

    bool operator==(const ClickSession&) const = default;
};

struct TimeVaryingEncoding {
    std::vector<std::array<double, 5>> rows; // one per pre-answer event
    std::size_t length() const { return rows.size(); }
};

struct StaticEncoding {
    std::size_t total_clicks = 0;
    std::array<std::size_t, 5> per_type_counts{};
};

struct CfaLabel {
    int cfa = 0;                  // 1 iff full points on first attempt
    std::array<int, 2> one_hot{}; // cfa=1 -> (1,0), cfa=0 -> (0,1)
};

// Feature-row normalization constants. The row layout is
// (type_code/4, position/video_length clamped to [0,1],
//  min(dt, dt_cap)/dt_cap with dt_1 = 0, playback_state, rate/rate_max).
struct EncodingConfig {
    double eps_skip = 1.0;        // position discrepancy tolerated before a skip
    double coalesce_window = 5.0; // seconds
    double rate_max = 4.0;
    double dt_cap = 300.0; // seconds
};

struct RawPlayerRecord {
    double position = 0.0;
    double timestamp = 0.0;
    int state = 1;
    double rate = 1.0;
};

// Position of the player immediately before the new record fired.
double pre_click_position(const ClickEvent& prev, double now);

EventType classify_event(const ClickEvent& prev, const RawPlayerRecord& raw,
                         const EncodingConfig& cfg = {});

// Merges maximal runs of same-type events whose successive timestamps are
// within the window, keeping the last event of each run.
std::vector<ClickEvent> coalesce_events(const std::vector<ClickEvent>& events,
                                        const EncodingConfig& cfg = {});

std::array<double, 5> encode_event_row(const ClickEvent& e, double prev_timestamp, bool first,
                                       double video_length, const EncodingConfig& cfg = {});

// Rows for events strictly before the first quiz answer. Throws EmptyEncoding
// if the session has no quiz or no pre-answer event.
TimeVaryingEncoding build_time_varying(const ClickSession& session,
                                       const EncodingConfig& cfg = {});

// Rows for the whole (coalesced) session; used by pre-training.
TimeVaryingEncoding encode_full_session(const ClickSession& session,
                                        const EncodingConfig& cfg = {});

StaticEncoding build_static(const ClickSession& session);

CfaLabel compute_cfa(const ClickSession& session);

} // namespace clickcfa::click
