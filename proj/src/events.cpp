#include "clickcfa/events.hpp"

#include <algorithm>
#include <cmath>

#include "clickcfa/errors.hpp"

namespace clickcfa::click {

const char* event_type_name(EventType t) {
    switch (t) {
    case EventType::Play: return "Pl";
    case EventType::Pause: return "Pa";
    case EventType::SkipBack: return "Sb";
    case EventType::SkipForward: return "Sf";
    case EventType::RateChange: return "Sp";
    }
    return "?";
}

double pre_click_position(const ClickEvent& prev, double now) {
    if (prev.playback_state == 1) return prev.position + prev.rate * (now - prev.timestamp);
    return prev.position;
}

EventType classify_event(const ClickEvent& prev, const RawPlayerRecord& raw,
                         const EncodingConfig& cfg) {
    if (raw.position < 0.0 || raw.rate <= 0.0)
        fail(ErrorKind::MalformedRecord, "negative position or non-positive rate");
    if (raw.rate != prev.rate) return EventType::RateChange;
    const double before = pre_click_position(prev, raw.timestamp);
    if (before - raw.position > cfg.eps_skip) return EventType::SkipBack;
    if (raw.position - before > cfg.eps_skip) return EventType::SkipForward;
    return raw.state == 1 ? EventType::Play : EventType::Pause;
}

std::vector<ClickEvent> coalesce_events(const std::vector<ClickEvent>& events,
                                        const EncodingConfig& cfg) {
    std::vector<ClickEvent> out;
    out.reserve(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (!out.empty() && out.back().type == events[i].type &&
            events[i].timestamp - out.back().timestamp <= cfg.coalesce_window) {
            out.back() = events[i]; // extend the run, keep its final state
        } else {
            out.push_back(events[i]);
        }
    }
    return out;
}

std::array<double, 5> encode_event_row(const ClickEvent& e, double prev_timestamp, bool first,
                                       double video_length, const EncodingConfig& cfg) {
    const double dt = first ? 0.0 : std::min(e.timestamp - prev_timestamp, cfg.dt_cap);
    return {static_cast<double>(e.type) / 4.0,
            std::clamp(e.position / video_length, 0.0, 1.0),
            dt / cfg.dt_cap,
            static_cast<double>(e.playback_state),
            std::min(e.rate / cfg.rate_max, 1.0)};
}

namespace {
TimeVaryingEncoding encode_prefix(const ClickSession& s, std::size_t count,
                                  const EncodingConfig& cfg) {
    TimeVaryingEncoding enc;
    enc.rows.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        enc.rows.push_back(encode_event_row(s.events[i], i ? s.events[i - 1].timestamp : 0.0,
                                            i == 0, s.video_length, cfg));
    }
    return enc;
}
} // namespace

TimeVaryingEncoding build_time_varying(const ClickSession& session, const EncodingConfig& cfg) {
    if (!session.quiz)
        fail(ErrorKind::EmptyEncoding,
             "session " + session.user_id + "/" + session.video_id + " has no quiz answer");
    std::size_t cut = 0;
    while (cut < session.events.size() &&
           session.events[cut].timestamp < session.quiz->answer_timestamp)
        ++cut;
    if (cut == 0)
        fail(ErrorKind::EmptyEncoding, "session " + session.user_id + "/" + session.video_id +
                                           " has no events before the answer");
    return encode_prefix(session, cut, cfg);
}

TimeVaryingEncoding encode_full_session(const ClickSession& session, const EncodingConfig& cfg) {
    return encode_prefix(session, session.events.size(), cfg);
}

StaticEncoding build_static(const ClickSession& session) {
    StaticEncoding enc;
    enc.total_clicks = session.events.size();
    for (const auto& e : session.events) enc.per_type_counts[static_cast<int>(e.type)]++;
    return enc;
}

CfaLabel compute_cfa(const ClickSession& session) {
    if (!session.quiz) fail(ErrorKind::InvalidScore, "session has no quiz outcome");
    const auto& q = *session.quiz;
    if (q.points_max <= 0.0) fail(ErrorKind::InvalidScore, "non-positive points_max");
    if (q.points > q.points_max + 1e-9) fail(ErrorKind::InvalidScore, "points above maximum");
    CfaLabel label;
    label.cfa = std::abs(q.points - q.points_max) <= 1e-9 ? 1 : 0;
    label.one_hot = label.cfa ? std::array<int, 2>{1, 0} : std::array<int, 2>{0, 1};
    return label;
}

} // namespace clickcfa::click
