#pragma once

// Per-frame action-unit localization: bounding box, body mass center,
// body ratio, anatomical levels, head, hands, heels/toes, and the derived
// head and stride angles. All functions are pure and work in image
// coordinates (x = column, y = row, 0-based).

#include "silhar/config.hpp"
#include "silhar/error.hpp"
#include "silhar/geometry.hpp"
#include "silhar/mask.hpp"

#include <algorithm>
#include <limits>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace silhar {

// Anatomical heights as fractions of body height H, measured up from the base.
namespace anatomy {
inline constexpr double kUpperLevel = 0.87;  // top of shoulders; head lives above
inline constexpr double kShoulder = 0.818;
inline constexpr double kLowerLevel = 0.53;  // hip; legs live below
inline constexpr double kMiddleLevel = 0.47; // reach of a relaxed hand
} // namespace anatomy

struct BBox {
    int x_st = 0;
    int y_st = 0;
    int dx = 0; // x_max - x_min
    int dy = 0; // y_max - y_min

    int width() const noexcept { return dx + 1; }
    int height() const noexcept { return dy + 1; }
    int right_col() const noexcept { return x_st + dx; }
    int base_row() const noexcept { return y_st + dy; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

struct BodyCenters {
    PointD bmc;   // relative to the box origin
    PointD bmc_g; // frame coordinates; bmc_g - bmc == (x_st, y_st) exactly
};

// Level lines sit at a fraction of H above the bottom edge of the base row.
// Lines are kept in edge coordinates (row r spans [r, r+1)); the level row is
// the one the line passes through. Measured this way an integer upscale of
// the mask maps every level row into the block of the original one.
struct Levels {
    int h = 0;        // body height in pixels (box height)
    int base_row = 0;
    int ul = 0;       // upper level row
    int ll = 0;       // lower level row
    int ml = 0;       // middle level row
    int shoulder_row = 0;
    double ul_line = 0.0;
    double shoulder_line = 0.0;
    double v1 = 0.0;  // mean |x1 - bmc_g.x| over [ul, ml]
    double v2 = 0.0;
    double lsl = 0.0; // left side level column
    double rsl = 0.0;
};

struct HeadLoc {
    PointD hd1;    // left end of the head run, on the top curve
    PointD hd2;    // right end
    PointD h_mid;  // run mid column, mean top row
    PointD center; // pixel centroid of the head above the upper level
    int run_start = 0;
    int run_end = 0;
};

struct HandLoc {
    std::optional<PointD> hand1; // from the left boundary
    std::optional<PointD> hand2; // from the right boundary

    int visible_count() const noexcept { return int(hand1.has_value()) + int(hand2.has_value()); }
};

struct Leg {
    PointD heel;
    PointD toe;
    PointD contact; // lowest point of the run
    int start = 0;
    int end = 0;
};

struct LegLoc {
    std::optional<Leg> leg1; // leftmost run
    std::optional<Leg> leg2;
    double sa = 0.0;         // stride angle in degrees; 0 with a single leg
    int leg_count = 0;
};

inline BBox bounding_box(const BoundaryVectors& bv)
{
    int x_min = kNone, x_max = kNone, y_min = kNone, y_max = kNone;
    for (std::size_t r = 0; r < bv.x1.size(); ++r) {
        if (bv.x1[r] == kNone)
            continue;
        x_min = x_min == kNone ? bv.x1[r] : std::min(x_min, bv.x1[r]);
        x_max = std::max(x_max, bv.x2[r]);
    }
    for (std::size_t c = 0; c < bv.y1.size(); ++c) {
        if (bv.y1[c] == kNone)
            continue;
        y_min = y_min == kNone ? bv.y1[c] : std::min(y_min, bv.y1[c]);
        y_max = std::max(y_max, bv.y2[c]);
    }
    if (x_min == kNone || y_min == kNone)
        throw Error(ErrorCode::empty_silhouette, "boundary vectors hold no foreground");
    return BBox{x_min, y_min, x_max - x_min, y_max - y_min};
}

namespace detail {
// Snap to a 2^-32 grid so adding an integer box origin is exact in double.
inline double snap_fraction(double v) { return std::ldexp(std::round(std::ldexp(v, 32)), -32); }
} // namespace detail

// Weighted average of row and column indices, weights being the foreground
// counts of each row/column inside the box. This equals the pixel centroid.
inline BodyCenters body_mass_center(const SilhouetteMask& mask, const BBox& box)
{
    std::int64_t total = 0;
    std::int64_t row_moment = 0;
    std::int64_t col_moment = 0;
    for (int r = 0; r <= box.dy; ++r) {
        const auto row = mask.row(box.y_st + r);
        std::int64_t row_wt = 0;
        for (int c = 0; c <= box.dx; ++c) {
            if (row[static_cast<std::size_t>(box.x_st + c)] != 0) {
                ++row_wt;
                col_moment += c;
            }
        }
        total += row_wt;
        row_moment += row_wt * r;
    }
    if (total == 0)
        throw Error(ErrorCode::empty_silhouette, "zero total weight inside the box");
    BodyCenters out;
    out.bmc = {detail::snap_fraction(double(col_moment) / double(total)),
               detail::snap_fraction(double(row_moment) / double(total))};
    out.bmc_g = {out.bmc.x + box.x_st, out.bmc.y + box.y_st};
    return out;
}

inline double body_ratio(const BBox& box,
                         BodyRatioOrientation orientation = BodyRatioOrientation::height_over_width)
{
    const double w = box.width();
    const double h = box.height();
    return orientation == BodyRatioOrientation::height_over_width ? h / w : w / h;
}

inline Levels body_levels(const BBox& box, const BoundaryVectors& bv, const BodyCenters& centers,
                          const Config& cfg = {})
{
    Levels lv;
    lv.h = box.height();
    if (lv.h < cfg.min_height_px)
        throw Error(ErrorCode::silhouette_too_small,
                    "body height " + std::to_string(lv.h) + " px is below " + std::to_string(cfg.min_height_px));
    lv.base_row = box.base_row();
    const double ground = lv.base_row + 1.0;
    const auto line = [&](double frac) { return ground - frac * lv.h; };
    const auto row = [](double y) { return static_cast<int>(std::floor(y)); };
    lv.ul_line = line(anatomy::kUpperLevel);
    lv.shoulder_line = line(anatomy::kShoulder);
    lv.ul = row(lv.ul_line);
    lv.ll = row(line(anatomy::kLowerLevel));
    lv.ml = row(line(anatomy::kMiddleLevel));
    lv.shoulder_row = row(lv.shoulder_line);

    const double cx = centers.bmc_g.x;
    double s1 = 0.0, s2 = 0.0;
    int n = 0;
    for (int r = std::max(lv.ul, 0); r <= lv.ml && r < static_cast<int>(bv.x1.size()); ++r) {
        const auto i = static_cast<std::size_t>(r);
        if (bv.x1[i] == kNone)
            continue;
        // outer pixel edges: x1 - 0.5 and x2 + 0.5
        s1 += std::abs(bv.x1[i] - 0.5 - cx);
        s2 += std::abs(bv.x2[i] + 0.5 - cx);
        ++n;
    }
    if (n > 0) {
        lv.v1 = s1 / n;
        lv.v2 = s2 / n;
    }
    lv.lsl = cx - lv.v1;
    lv.rsl = cx + lv.v2;
    return lv;
}

// The head is the longest run of columns whose top boundary lies above the
// upper level; ties go to the leftmost run. A column must rise at least
// head_min_rise_frac * H above the line, so a fist grazing it stays out of
// the run. Returns nullopt when no column qualifies.
inline std::optional<HeadLoc> locate_head(const SilhouetteMask& mask, const BoundaryVectors& bv,
                                          const Levels& lv, const BBox& box, const Config& cfg = {})
{
    const double limit = lv.ul_line - cfg.head_min_rise_frac * lv.h;
    int best_start = kNone, best_len = 0;
    int run_start = kNone;
    for (int c = box.x_st; c <= box.right_col() + 1; ++c) {
        const bool marked = c <= box.right_col() && bv.y1[static_cast<std::size_t>(c)] != kNone &&
                            bv.y1[static_cast<std::size_t>(c)] < limit;
        if (marked && run_start == kNone)
            run_start = c;
        if (!marked && run_start != kNone) {
            const int len = c - run_start;
            if (len > best_len) {
                best_len = len;
                best_start = run_start;
            }
            run_start = kNone;
        }
    }
    if (best_len == 0)
        return std::nullopt;

    HeadLoc head;
    head.run_start = best_start;
    head.run_end = best_start + best_len - 1;
    const auto y1_at = [&](int c) { return double(bv.y1[static_cast<std::size_t>(c)]); };
    head.hd1 = {double(head.run_start), y1_at(head.run_start)};
    head.hd2 = {double(head.run_end), y1_at(head.run_end)};
    double top_sum = 0.0;
    for (int c = head.run_start; c <= head.run_end; ++c)
        top_sum += y1_at(c);
    head.h_mid = {0.5 * (head.run_start + head.run_end), top_sum / best_len};

    std::int64_t n = 0, sx = 0, sy = 0;
    for (int r = box.y_st; r < lv.ul_line; ++r) {
        for (int c = head.run_start; c <= head.run_end; ++c) {
            if (mask.at(r, c) != 0) {
                ++n;
                sx += c;
                sy += r;
            }
        }
    }
    head.center = n > 0 ? PointD{double(sx) / double(n), double(sy) / double(n)} : head.h_mid;
    return head;
}

namespace detail {

// Foreground run on row r nearest column hx (containing it when possible;
// equal distances prefer the wider run); nullopt on an empty row.
inline std::optional<std::pair<int, int>> run_near(const SilhouetteMask& mask, const BoundaryVectors& bv, int r,
                                                   double hx)
{
    if (r < 0 || r >= static_cast<int>(bv.x1.size()) || bv.x1[static_cast<std::size_t>(r)] == kNone)
        return std::nullopt;
    const int x1 = bv.x1[static_cast<std::size_t>(r)], x2 = bv.x2[static_cast<std::size_t>(r)];
    int best_lo = x1, best_hi = x2;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int c = x1; c <= x2;) {
        if (!mask.at(r, c)) {
            ++c;
            continue;
        }
        const int lo = c;
        while (c <= x2 && mask.at(r, c))
            ++c;
        const int hi = c - 1;
        const double gap = hx < lo ? lo - hx : hx > hi ? hx - hi : 0.0;
        if (gap < best_gap || (gap == best_gap && hi - lo > best_hi - best_lo)) {
            best_gap = gap;
            best_lo = lo;
            best_hi = hi;
        }
    }
    return std::pair{best_lo, best_hi};
}

} // namespace detail

// Angle of the shoulder-midpoint -> head-midpoint segment, in degrees within
// (0, 180]: 90 is upright, above 90 the head leans right, below 90 left.
// The lower end is the base of the neck: the narrowest run under the head
// between the upper level and the shoulder line (lowest row on ties), taken
// at the bottom edge of that row. On the shoulder row itself an arm held out
// sideways merges with the torso and would drag the midpoint off center.
inline std::optional<double> head_angle(const HeadLoc& head, const SilhouetteMask& mask, const BoundaryVectors& bv,
                                        const Levels& lv)
{
    const int last = static_cast<int>(std::floor(lv.shoulder_line));
    std::optional<std::pair<int, int>> neck;
    int neck_row = 0;
    for (int r = last; r >= std::max(lv.ul, 0); --r) {
        const auto run = detail::run_near(mask, bv, r, head.h_mid.x);
        if (run && (!neck || run->second - run->first < neck->second - neck->first)) {
            neck = run;
            neck_row = r;
        }
    }
    if (!neck)
        return std::nullopt;
    // edge coordinates on both ends: h_mid.y is a top edge
    const double dx = head.h_mid.x - 0.5 * (neck->first + neck->second);
    const double up = std::min(neck_row + 1.0, lv.shoulder_line) - head.h_mid.y;
    double ha = rad2deg(std::atan2(up, -dx));
    if (ha <= 0.0)
        ha += 180.0;
    return ha;
}

namespace detail {

// One side of the hand search: `outward[r]` is how far the boundary sits
// from the body center on that side.
inline std::optional<PointD> find_hand(const std::vector<int>& side, bool left, const BBox& box,
                                       const Levels& lv, double cx, double side_level_offset,
                                       const Config& cfg)
{
    // spread of the side boundary over the middle band
    double sum = 0.0, sum_sq = 0.0;
    int n = 0;
    for (int r = std::max(lv.ul, box.y_st); r <= std::min(lv.ml, box.base_row()); ++r) {
        const int x = side[static_cast<std::size_t>(r)];
        if (x == kNone)
            continue;
        sum += x;
        sum_sq += double(x) * x;
        ++n;
    }
    if (n == 0)
        return std::nullopt;
    const double mean = sum / n;
    const double spread = std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
    const double th = cfg.hand_threshold_mult * spread;
    const int min_rows = std::max(1, static_cast<int>(std::ceil(cfg.hand_min_run_frac * lv.h)));

    auto outward = [&](int r) {
        const int x = side[static_cast<std::size_t>(r)];
        return left ? cx - (x - 0.5) : (x + 0.5) - cx;
    };

    std::optional<PointD> best;
    double best_out = 0.0;
    int run_start = kNone;
    const int first = std::max(lv.ul, box.y_st);
    const int last = std::min(lv.ml, box.base_row());
    for (int r = first; r <= last + 1; ++r) {
        const bool cand = r <= last && side[static_cast<std::size_t>(r)] != kNone &&
                          outward(r) - side_level_offset > th;
        if (cand && run_start == kNone)
            run_start = r;
        if (!cand && run_start != kNone) {
            if (r - run_start >= min_rows) {
                int ext = run_start;
                // equal extremes resolve to the lowest row, the distal end of a hanging arm
                for (int q = run_start + 1; q < r; ++q)
                    if (outward(q) >= outward(ext))
                        ext = q;
                if (!best || outward(ext) > best_out) {
                    best_out = outward(ext);
                    best = PointD{double(side[static_cast<std::size_t>(ext)]), double(ext)};
                }
            }
            run_start = kNone;
        }
    }
    return best;
}

} // namespace detail

// A hand shows up where a side boundary between the upper and middle levels
// bulges beyond its side level by more than the boundary's own spread, over
// at least hand_min_run_frac * H rows.
inline HandLoc locate_hands(const BoundaryVectors& bv, const Levels& lv, const BBox& box,
                            const BodyCenters& centers, const Config& cfg = {})
{
    HandLoc out;
    out.hand1 = detail::find_hand(bv.x1, true, box, lv, centers.bmc_g.x, lv.v1, cfg);
    out.hand2 = detail::find_hand(bv.x2, false, box, lv, centers.bmc_g.x, lv.v2, cfg);
    return out;
}

// Legs are runs of columns whose base curve dips below the lower level and
// is at least as deep (relative to the body center) as the mean depth of all
// such columns, and whose bottom lies in the ground band near the box base.
// Checking the band per column keeps the crotch and hanging hands out of the
// runs. The run endpoint nearer the body center is provisionally the heel.
inline std::optional<LegLoc> locate_legs(const BoundaryVectors& bv, const Levels& lv, const BBox& box,
                                         const BodyCenters& centers, const Config& cfg = {})
{
    const double cy = centers.bmc_g.y;
    double depth_sum = 0.0;
    int depth_n = 0;
    for (int c = box.x_st; c <= box.right_col(); ++c) {
        const int y = bv.y2[static_cast<std::size_t>(c)];
        if (y != kNone && y >= lv.ll) {
            depth_sum += y - cy;
            ++depth_n;
        }
    }
    if (depth_n == 0)
        return std::nullopt;
    const double th_l = depth_sum / depth_n;
    const double contact_row = lv.base_row - cfg.leg_contact_frac * lv.h;

    std::vector<Leg> runs;
    int run_start = kNone;
    for (int c = box.x_st; c <= box.right_col() + 1; ++c) {
        bool leg_col = false;
        if (c <= box.right_col()) {
            const int y = bv.y2[static_cast<std::size_t>(c)];
            leg_col = y != kNone && y >= lv.ll && (y - cy) >= th_l && y >= contact_row;
        }
        if (leg_col && run_start == kNone)
            run_start = c;
        if (!leg_col && run_start != kNone) {
            Leg leg;
            leg.start = run_start;
            leg.end = c - 1;
            int lowest = kNone;
            double lowest_x_sum = 0.0;
            int lowest_n = 0;
            for (int q = leg.start; q <= leg.end; ++q) {
                const int y = bv.y2[static_cast<std::size_t>(q)];
                if (y > lowest) {
                    lowest = y;
                    lowest_x_sum = q;
                    lowest_n = 1;
                } else if (y == lowest) {
                    lowest_x_sum += q;
                    ++lowest_n;
                }
            }
            leg.contact = {lowest_x_sum / lowest_n, double(lowest)};
            const PointD a{double(leg.start), double(bv.y2[static_cast<std::size_t>(leg.start)])};
            const PointD b{double(leg.end), double(bv.y2[static_cast<std::size_t>(leg.end)])};
            const double da = std::abs(a.x - centers.bmc_g.x);
            const double db = std::abs(b.x - centers.bmc_g.x);
            leg.heel = db < da ? b : a;
            leg.toe = db < da ? a : b;
            runs.push_back(leg);
            run_start = kNone;
        }
    }
    if (runs.empty())
        return std::nullopt;

    if (runs.size() > 2) {
        std::stable_sort(runs.begin(), runs.end(),
                         [](const Leg& a, const Leg& b) { return (a.end - a.start) > (b.end - b.start); });
        runs.resize(2);
        std::sort(runs.begin(), runs.end(), [](const Leg& a, const Leg& b) { return a.start < b.start; });
    }

    LegLoc out;
    out.leg_count = static_cast<int>(runs.size());
    out.leg1 = runs[0];
    if (runs.size() == 2) {
        out.leg2 = runs[1];
        const PointD hip{centers.bmc_g.x, lv.base_row - anatomy::kLowerLevel * lv.h};
        out.sa = angle_at(hip, runs[0].contact, runs[1].contact);
    }
    return out;
}

// Everything measured on one frame.
struct FrameAnalysis {
    BBox box;
    BodyCenters centers;
    double br = 0.0;
    Levels levels;
    std::optional<HeadLoc> head;
    std::optional<double> ha;
    HandLoc hands;
    std::optional<LegLoc> legs;
};

inline FrameAnalysis analyze_frame(const SilhouetteMask& mask, const Config& cfg = {})
{
    const BoundaryVectors bv = boundary_vectors(mask);
    FrameAnalysis fa;
    fa.box = bounding_box(bv);
    fa.centers = body_mass_center(mask, fa.box);
    fa.br = body_ratio(fa.box, cfg.br_orientation);
    fa.levels = body_levels(fa.box, bv, fa.centers, cfg);
    fa.head = locate_head(mask, bv, fa.levels, fa.box, cfg);
    if (fa.head)
        fa.ha = head_angle(*fa.head, mask, bv, fa.levels);
    fa.hands = locate_hands(bv, fa.levels, fa.box, fa.centers, cfg);
    fa.legs = locate_legs(bv, fa.levels, fa.box, fa.centers, cfg);
    return fa;
}

} // namespace silhar
