#pragma once

// Interval-level features: moving direction, the 28x4 AV/MIN/MAX/STD
// aggregate, and the per-action-unit activity descriptors (MV, MDR, region)
// consumed by the rule classifier.

#include "silhar/config.hpp"
#include "silhar/error.hpp"
#include "silhar/features.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace silhar {

struct ActionInterval {
    std::vector<FeatureRow> rows;
    int fps = 25;

    int k() const noexcept { return static_cast<int>(rows.size()); }
};

// Non-overlapping intervals of k frames. A remainder of at least k/2 frames
// becomes its own short interval, a smaller one is folded into the last.
inline std::vector<ActionInterval> segment_intervals(std::span<const FeatureRow> rows, int k, int fps)
{
    if (k < 2)
        throw Error(ErrorCode::parameter, "action interval must span at least 2 frames");
    std::vector<ActionInterval> out;
    const std::size_t n = rows.size();
    const std::size_t uk = static_cast<std::size_t>(k);
    if (n < uk) {
        if (n >= 2)
            out.push_back({{rows.begin(), rows.end()}, fps});
        return out;
    }
    for (std::size_t start = 0; start + uk <= n; start += uk)
        out.push_back({{rows.begin() + static_cast<std::ptrdiff_t>(start),
                        rows.begin() + static_cast<std::ptrdiff_t>(start + uk)},
                       fps});
    const std::size_t rem = n % uk;
    if (rem > 0) {
        auto tail_begin = rows.end() - static_cast<std::ptrdiff_t>(rem);
        if (2 * rem >= uk)
            out.push_back({{tail_begin, rows.end()}, fps});
        else
            out.back().rows.insert(out.back().rows.end(), tail_begin, rows.end());
    }
    return out;
}

namespace detail {

inline double mean_height(std::span<const FeatureRow> rows)
{
    double s = 0.0;
    int n = 0;
    for (const auto& r : rows)
        if (r.has(Col::dy)) {
            s += r[Col::dy] + 1.0;
            ++n;
        }
    return n > 0 ? s / n : 0.0;
}

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

// Direction cue of one frame when the body itself is not travelling.
inline int static_direction(const FeatureRow& last, const Config& cfg)
{
    int ha_vote = 0;
    if (last.has(Col::ha)) {
        if (last[Col::ha] > cfg.ha_right_deg)
            ha_vote = 1;
        else if (last[Col::ha] < cfg.ha_left_deg)
            ha_vote = -1;
    }
    int foot_vote = 0;
    bool any = false, consistent = true;
    const auto vote_leg = [&](Col hx, Col tx) {
        if (!last.has(hx) || !last.has(tx))
            return;
        const int v = sign_of(last[tx] - last[hx]);
        if (!any) {
            foot_vote = v;
            any = true;
        } else if (v != foot_vote) {
            consistent = false;
        }
    };
    vote_leg(Col::xhl1, Col::xt1);
    vote_leg(Col::xhl2, Col::xt2);
    if (!consistent)
        foot_vote = 0;

    if (ha_vote == foot_vote)
        return ha_vote;
    if (ha_vote == 0)
        return foot_vote;
    if (foot_vote == 0)
        return ha_vote;
    return 0;
}

} // namespace detail

// -1 left, 0 none, +1 right. When the global body center travels more than
// static_bmc_frac * H the sign of (mean - first) decides; otherwise the head
// angle and heel/toe order of the last frame vote.
inline int moving_direction(std::span<const FeatureRow> rows, const Config& cfg = {})
{
    const FeatureRow* first = nullptr;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    int n = 0;
    for (const auto& r : rows) {
        if (!r.has(Col::xg_cnt))
            continue;
        if (!first)
            first = &r;
        const double x = r[Col::xg_cnt];
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        sum += x;
        ++n;
    }
    if (n == 0)
        throw Error(ErrorCode::md_undefined, "no frame with a body mass center");
    const double h = detail::mean_height(rows);
    if (hi - lo > cfg.static_bmc_frac * h) {
        const double diff = sum / n - (*first)[Col::xg_cnt];
        if (std::abs(diff) < cfg.md_deadband_frac * h)
            return 0;
        return detail::sign_of(diff);
    }
    return detail::static_direction(rows.back(), cfg);
}

inline int moving_direction(const ActionInterval& interval, const Config& cfg = {})
{
    return moving_direction(std::span<const FeatureRow>(interval.rows), cfg);
}

// Provisional heel/toe labels are swapped where needed so toes lead in the
// direction of motion.
inline void orient_feet(std::span<FeatureRow> rows, int md)
{
    if (md == 0)
        return;
    const auto fix = [md](FeatureRow& r, Col hx, Col hy, Col tx, Col ty) {
        if (!r.has(hx) || !r.has(tx))
            return;
        if ((r[tx] - r[hx]) * md < 0.0) {
            const double x = r[hx], y = r[hy];
            r.set(hx, r[tx]);
            r.set(hy, r[ty]);
            r.set(tx, x);
            r.set(ty, y);
        }
    };
    for (auto& r : rows) {
        fix(r, Col::xhl1, Col::yhl1, Col::xt1, Col::yt1);
        fix(r, Col::xhl2, Col::yhl2, Col::xt2, Col::yt2);
    }
}

// A frame with a single visible leg reports it in slot 1. Within an interval
// that leg is moved to slot 2 when it sits nearer to where slot 2 was last
// seen, so a lifted foot does not make the standing foot jump slots.
inline void keep_leg_slots(std::span<FeatureRow> rows)
{
    const auto mid = [](const FeatureRow& r, Col hx, Col tx) { return 0.5 * (r[hx] + r[tx]); };
    std::optional<double> last1, last2;
    // seed from the first two-leg frame so an interval opening mid-step works too
    for (const auto& r : rows)
        if (r.has(Col::xhl1) && r.has(Col::xhl2)) {
            last1 = mid(r, Col::xhl1, Col::xt1);
            last2 = mid(r, Col::xhl2, Col::xt2);
            break;
        }
    for (auto& r : rows) {
        const bool has1 = r.has(Col::xhl1), has2 = r.has(Col::xhl2);
        if (has1 && !has2 && last1 && last2) {
            const double x = mid(r, Col::xhl1, Col::xt1);
            if (std::abs(x - *last2) < std::abs(x - *last1)) {
                constexpr std::array<std::pair<Col, Col>, 4> moves = {
                    {{Col::xhl1, Col::xhl2}, {Col::yhl1, Col::yhl2}, {Col::xt1, Col::xt2}, {Col::yt1, Col::yt2}}};
                for (const auto& [from, to] : moves) {
                    r.set(to, r[from]);
                    r.clear(from);
                }
            }
        }
        if (r.has(Col::xhl1))
            last1 = mid(r, Col::xhl1, Col::xt1);
        if (r.has(Col::xhl2))
            last2 = mid(r, Col::xhl2, Col::xt2);
    }
}

struct ColumnStats {
    double av = 0.0;
    double min = 0.0;
    double max = 0.0;
    double std = 0.0; // population standard deviation
    int n = 0;        // visible rows
    bool low_confidence = true;
};

// Action-unit reference points. bmc is the body center measured from the middle of the box; the others
// are relative to the global body center.
enum class Track : std::size_t { head, hand1, hand2, heel1, toe1, heel2, toe2, bmc };
inline constexpr std::size_t kTrackCount = 8;

struct TrackRange {
    double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
    int n = 0;

    double range_x() const noexcept { return n > 0 ? max_x - min_x : 0.0; }
    double range_y() const noexcept { return n > 0 ? max_y - min_y : 0.0; }

    void add(double x, double y)
    {
        if (n == 0) {
            min_x = max_x = x;
            min_y = max_y = y;
        } else {
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
            min_y = std::min(min_y, y);
            max_y = std::max(max_y, y);
        }
        ++n;
    }
};

struct StbpmVector {
    std::array<ColumnStats, kFeatureCount> cols{};
    std::array<TrackRange, kTrackCount> tracks{};
    int md = 0;
    int frames = 0;

    const ColumnStats& operator[](Col c) const noexcept { return cols[idx(c)]; }
    const TrackRange& track(Track t) const noexcept { return tracks[static_cast<std::size_t>(t)]; }

    double mean_height() const noexcept { return (*this)[Col::dy].av + 1.0; }
    double mean_base_row() const noexcept { return (*this)[Col::y_st].av + (*this)[Col::dy].av; }
};

namespace detail {

inline ColumnStats column_stats(std::span<const FeatureRow> rows, std::size_t col)
{
    ColumnStats s;
    double sum = 0.0;
    for (const auto& r : rows) {
        if (!r.visible[col])
            continue;
        const double v = r.values[col];
        if (s.n == 0) {
            s.min = s.max = v;
        } else {
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
        }
        sum += v;
        ++s.n;
    }
    if (s.n == 0)
        return s;
    s.av = sum / s.n;
    double ss = 0.0;
    for (const auto& r : rows)
        if (r.visible[col]) {
            const double d = r.values[col] - s.av;
            ss += d * d;
        }
    s.std = std::sqrt(ss / s.n);
    // keep min <= av <= max against rounding in the mean
    s.av = std::clamp(s.av, s.min, s.max);
    s.low_confidence = s.n < 2;
    return s;
}

} // namespace detail

inline StbpmVector aggregate(const ActionInterval& interval, const Config& cfg = {})
{
    if (interval.rows.empty())
        throw Error(ErrorCode::degenerate_interval, "empty action interval");
    bool any = false;
    for (const auto& r : interval.rows)
        any = any || r.visible.any();
    if (!any)
        throw Error(ErrorCode::degenerate_interval, "no visible feature in the interval");

    StbpmVector v;
    v.frames = interval.k();
    v.md = moving_direction(interval, cfg);

    std::vector<FeatureRow> rows = interval.rows;
    keep_leg_slots(rows);
    orient_feet(rows, v.md);
    for (auto& r : rows)
        r.set(Col::md, v.md);

    for (std::size_t c = 0; c < kFeatureCount; ++c)
        v.cols[c] = detail::column_stats(rows, c);

    for (const auto& r : rows) {
        if (!r.has(Col::xg_cnt))
            continue;
        const double cx = r[Col::xg_cnt], cy = r[Col::yg_cnt];
        v.tracks[static_cast<std::size_t>(Track::bmc)].add(r[Col::x_cnt] - 0.5 * r[Col::dx],
                                                           r[Col::y_cnt] - 0.5 * r[Col::dy]);
        const auto add = [&](Track t, Col x, Col y) {
            if (r.has(x) && r.has(y))
                v.tracks[static_cast<std::size_t>(t)].add(r[x] - cx, r[y] - cy);
        };
        if (r.has(Col::hd1x) && r.has(Col::hd2x))
            v.tracks[static_cast<std::size_t>(Track::head)].add(
                0.5 * (r[Col::hd1x] + r[Col::hd2x]) - cx, 0.5 * (r[Col::hd1y] + r[Col::hd2y]) - cy);
        add(Track::hand1, Col::xh1, Col::yh1);
        add(Track::hand2, Col::xh2, Col::yh2);
        add(Track::heel1, Col::xhl1, Col::yhl1);
        add(Track::toe1, Col::xt1, Col::yt1);
        add(Track::heel2, Col::xhl2, Col::yhl2);
        add(Track::toe2, Col::xt2, Col::yt2);
    }
    return v;
}

// ---------------------------------------------------------------------------
// Action-unit activity

enum class Au : std::size_t { bmc_g, bmc, head, hand, leg };
inline constexpr std::size_t kAuCount = 5;
inline constexpr std::array<std::string_view, kAuCount> kAuNames = {"bmcg", "bmc", "head", "hand", "leg"};

enum class Mdr : std::uint8_t { none, x, y, xy };

inline std::string_view to_string(Mdr m)
{
    switch (m) {
    case Mdr::x: return "X";
    case Mdr::y: return "Y";
    case Mdr::xy: return "XY";
    case Mdr::none: break;
    }
    return "NONE";
}

// Bit set over the three level bands.
enum Region : std::uint8_t { kRegionNone = 0, kUL = 1, kMID = 2, kLL = 4 };
using RegionSet = std::uint8_t;

inline std::string region_string(RegionSet r)
{
    if (r == kRegionNone)
        return "NONE";
    std::string s;
    const auto put = [&](Region bit, const char* name) {
        if (r & bit) {
            if (!s.empty())
                s += '/';
            s += name;
        }
    };
    put(kUL, "UL");
    put(kMID, "MID");
    put(kLL, "LL");
    return s;
}

// Bands containing a point at height `frac` * H above the base. The middle
// and lower bands overlap between 0.47 H and 0.53 H.
inline RegionSet region_of_height(double frac)
{
    RegionSet r = kRegionNone;
    if (frac >= anatomy::kUpperLevel)
        r |= kUL;
    if (frac >= anatomy::kMiddleLevel && frac < anatomy::kUpperLevel)
        r |= kMID;
    if (frac < anatomy::kLowerLevel)
        r |= kLL;
    return r;
}

struct AuState {
    int mv = 0;               // 0 static, 1 slow, 2 rapid
    Mdr mdr = Mdr::none;
    RegionSet region = kRegionNone;
    double displacement = 0.0; // pixels
    bool visible = false;

    friend bool operator==(const AuState&, const AuState&) = default;
};

struct AuActivity {
    std::array<AuState, kAuCount> au{};
    double sa_max = 0.0;
    int md = 0;

    AuState& operator[](Au a) noexcept { return au[static_cast<std::size_t>(a)]; }
    const AuState& operator[](Au a) const noexcept { return au[static_cast<std::size_t>(a)]; }

    friend bool operator==(const AuActivity&, const AuActivity&) = default;
};

namespace detail {

inline int quantize_mv(double d, double h, const Config& cfg)
{
    if (d < cfg.mv_slow_frac * h)
        return 0;
    if (d < cfg.mv_rapid_frac * h)
        return 1;
    return 2;
}

inline Mdr direction_of(double rx, double ry, const Config& cfg)
{
    if (rx >= cfg.mdr_ratio * ry)
        return Mdr::x;
    if (ry >= cfg.mdr_ratio * rx)
        return Mdr::y;
    return Mdr::xy;
}

inline AuState state_from_ranges(double rx, double ry, RegionSet region, double h, const Config& cfg)
{
    AuState s;
    s.visible = true;
    s.displacement = std::max(rx, ry);
    s.mv = quantize_mv(s.displacement, h, cfg);
    s.mdr = s.mv == 0 ? Mdr::none : direction_of(rx, ry, cfg);
    s.region = region;
    return s;
}

} // namespace detail

// Quantizes each action unit's movement over the interval. The global body
// center is measured in frame coordinates and the local one against the box
// middle, so a limb stretching the box on either side moves it alike; head,
// hand and leg points are measured relative to the global body center. `h`
// is the mean body height in pixels.
inline AuActivity au_activity(const StbpmVector& v, double h, const Config& cfg = {})
{
    AuActivity act;
    act.md = v.md;
    act.sa_max = v[Col::sa].n > 0 ? v[Col::sa].max : 0.0;
    if (!(h > 0.0))
        return act;

    const double base = v.mean_base_row();
    const auto band = [&](double y) { return region_of_height((base - y) / h); };

    if (v[Col::xg_cnt].n > 0) {
        act[Au::bmc_g] = detail::state_from_ranges(v[Col::xg_cnt].max - v[Col::xg_cnt].min,
                                                   v[Col::yg_cnt].max - v[Col::yg_cnt].min,
                                                   band(v[Col::yg_cnt].av), h, cfg);
        const TrackRange& tr = v.track(Track::bmc);
        act[Au::bmc] = detail::state_from_ranges(tr.range_x(), tr.range_y(),
                                                 region_of_height((v[Col::dy].av - v[Col::y_cnt].av) / h), h, cfg);
    }

    // Several reference points: the one that moved most sets mv and mdr,
    // the region is the union over all points.
    const auto multi = [&](std::initializer_list<std::pair<Track, Col>> points) {
        AuState best;
        RegionSet region = kRegionNone;
        for (const auto& [t, ycol] : points) {
            const TrackRange& tr = v.track(t);
            if (tr.n == 0 || v[ycol].n == 0)
                continue;
            region |= band(v[ycol].av);
            const AuState s = detail::state_from_ranges(tr.range_x(), tr.range_y(), kRegionNone, h, cfg);
            if (!best.visible || s.displacement > best.displacement)
                best = s;
        }
        best.region = region;
        return best;
    };

    {
        const TrackRange& tr = v.track(Track::head);
        if (tr.n > 0) {
            const double y = 0.5 * (v[Col::hd1y].av + v[Col::hd2y].av);
            act[Au::head] = detail::state_from_ranges(tr.range_x(), tr.range_y(), band(y), h, cfg);
        }
    }
    act[Au::hand] = multi({{Track::hand1, Col::yh1}, {Track::hand2, Col::yh2}});
    act[Au::leg] = multi({{Track::heel1, Col::yhl1},
                          {Track::toe1, Col::yt1},
                          {Track::heel2, Col::yhl2},
                          {Track::toe2, Col::yt2}});
    return act;
}

inline AuActivity au_activity(const StbpmVector& v, const Config& cfg = {})
{
    return au_activity(v, v.mean_height(), cfg);
}

inline nlohmann::json activity_json(const AuActivity& act)
{
    nlohmann::json j;
    for (std::size_t i = 0; i < kAuCount; ++i) {
        const auto& s = act.au[i];
        j[std::string(kAuNames[i])] = {{"mv", s.mv},
                                       {"mdr", std::string(to_string(s.mdr))},
                                       {"region", region_string(s.region)},
                                       {"displacement", s.displacement},
                                       {"visible", s.visible}};
    }
    j["sa_max"] = act.sa_max;
    j["md"] = act.md;
    return j;
}

inline nlohmann::json stbpm_json(const StbpmVector& v)
{
    nlohmann::json cols = nlohmann::json::object();
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const auto& c = v.cols[i];
        nlohmann::json o = {{"av", c.av}, {"min", c.min}, {"max", c.max}, {"std", c.std},
                            {"n", c.n}, {"low_confidence", c.low_confidence}};
        cols[std::string(kColumnNames[i])] = o;
    }
    return {{"frames", v.frames}, {"md", v.md}, {"columns", cols}};
}

} // namespace silhar
