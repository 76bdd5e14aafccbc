#pragma once

#include "silhar/localization.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <bitset>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <span>
#include <sstream>
#include <string_view>
#include <vector>

namespace silhar {

inline constexpr std::size_t kFeatureCount = 28;

enum class Col : std::size_t {
    x_st, y_st, dx, dy,
    x_cnt, y_cnt, xg_cnt, yg_cnt,
    br,
    hd1x, hd1y, hd2x, hd2y,
    ha,
    xh1, yh1, xh2, yh2,
    xhl1, yhl1, xt1, yt1, xhl2, yhl2, xt2, yt2,
    sa,
    md,
};

inline constexpr std::array<std::string_view, kFeatureCount> kColumnNames = {
    "x_st", "y_st", "dx", "dy", "x_cnt", "y_cnt", "xg_cnt", "yg_cnt", "br",
    "hd1x", "hd1y", "hd2x", "hd2y", "ha", "xh1", "yh1", "xh2", "yh2",
    "xhl1", "yhl1", "xt1", "yt1", "xhl2", "yhl2", "xt2", "yt2", "sa", "md",
};

constexpr std::size_t idx(Col c) noexcept { return static_cast<std::size_t>(c); }

// One frame's 28 spatial values. Columns that were not observed (occluded
// hands, a missing second leg, md before interval assembly) are invisible
// and skipped by aggregation.
struct FeatureRow {
    int frame = 0;
    std::array<double, kFeatureCount> values{};
    std::bitset<kFeatureCount> visible;
    bool head_carried = false; // head columns copied from an earlier frame
    bool legs_carried = false;

    double operator[](Col c) const noexcept { return values[idx(c)]; }
    bool has(Col c) const noexcept { return visible[idx(c)]; }

    void set(Col c, double v) noexcept
    {
        values[idx(c)] = v;
        visible.set(idx(c));
    }
    void clear(Col c) noexcept
    {
        values[idx(c)] = 0.0;
        visible.reset(idx(c));
    }

    friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

// Column groups that move together.
inline constexpr std::array<Col, 5> kHeadCols = {Col::hd1x, Col::hd1y, Col::hd2x, Col::hd2y, Col::ha};
inline constexpr std::array<Col, 9> kLegCols = {Col::xhl1, Col::yhl1, Col::xt1, Col::yt1, Col::xhl2,
                                                Col::yhl2, Col::xt2, Col::yt2, Col::sa};

inline FeatureRow to_row(const FrameAnalysis& fa, int frame = 0)
{
    FeatureRow row;
    row.frame = frame;
    row.set(Col::x_st, fa.box.x_st);
    row.set(Col::y_st, fa.box.y_st);
    row.set(Col::dx, fa.box.dx);
    row.set(Col::dy, fa.box.dy);
    row.set(Col::x_cnt, fa.centers.bmc.x);
    row.set(Col::y_cnt, fa.centers.bmc.y);
    row.set(Col::xg_cnt, fa.centers.bmc_g.x);
    row.set(Col::yg_cnt, fa.centers.bmc_g.y);
    row.set(Col::br, fa.br);
    if (fa.head) {
        row.set(Col::hd1x, fa.head->hd1.x);
        row.set(Col::hd1y, fa.head->hd1.y);
        row.set(Col::hd2x, fa.head->hd2.x);
        row.set(Col::hd2y, fa.head->hd2.y);
        if (fa.ha)
            row.set(Col::ha, *fa.ha);
    }
    if (fa.hands.hand1) {
        row.set(Col::xh1, fa.hands.hand1->x);
        row.set(Col::yh1, fa.hands.hand1->y);
    }
    if (fa.hands.hand2) {
        row.set(Col::xh2, fa.hands.hand2->x);
        row.set(Col::yh2, fa.hands.hand2->y);
    }
    if (fa.legs) {
        const auto put = [&](const std::optional<Leg>& leg, Col hx, Col hy, Col tx, Col ty) {
            if (!leg)
                return;
            row.set(hx, leg->heel.x);
            row.set(hy, leg->heel.y);
            row.set(tx, leg->toe.x);
            row.set(ty, leg->toe.y);
        };
        put(fa.legs->leg1, Col::xhl1, Col::yhl1, Col::xt1, Col::yt1);
        put(fa.legs->leg2, Col::xhl2, Col::yhl2, Col::xt2, Col::yt2);
        row.set(Col::sa, fa.legs->sa);
    }
    return row;
}

// Runs the whole per-frame pipeline on a sanitized mask.
inline FeatureRow spatial_feature_row(const SilhouetteMask& mask, const Config& cfg = {}, int frame = 0)
{
    return to_row(analyze_frame(mask, cfg), frame);
}

struct CarryForwardStats {
    int head_carried = 0;
    int legs_carried = 0;
};

// Sequential pass: frames whose head or legs were not found reuse the values
// of the most recent frame that had them. Frames before the first success
// stay invisible.
inline CarryForwardStats carry_forward(std::span<FeatureRow> rows)
{
    CarryForwardStats stats;
    const FeatureRow* last_head = nullptr;
    const FeatureRow* last_legs = nullptr;
    for (auto& row : rows) {
        if (row.has(Col::hd1x)) {
            last_head = &row;
        } else if (last_head) {
            for (Col c : kHeadCols)
                if (last_head->has(c))
                    row.set(c, (*last_head)[c]);
            row.head_carried = true;
            ++stats.head_carried;
        }
        if (row.has(Col::sa)) {
            last_legs = &row;
        } else if (last_legs) {
            for (Col c : kLegCols)
                if (last_legs->has(c))
                    row.set(c, (*last_legs)[c]);
            row.legs_carried = true;
            ++stats.legs_carried;
        }
    }
    return stats;
}

inline void write_feature_csv(std::ostream& out, std::span<const FeatureRow> rows)
{
    out << "frame";
    for (auto name : kColumnNames)
        out << ',' << name;
    out << ",head_carried,legs_carried\n";
    out << std::setprecision(10);
    for (const auto& row : rows) {
        out << row.frame;
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            out << ',';
            if (row.visible[i])
                out << row.values[i];
        }
        out << ',' << int(row.head_carried) << ',' << int(row.legs_carried) << '\n';
    }
}

inline nlohmann::json feature_row_json(const FeatureRow& row)
{
    nlohmann::json j;
    j["frame"] = row.frame;
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        j[std::string(kColumnNames[i])] = row.visible[i] ? nlohmann::json(row.values[i]) : nlohmann::json();
    j["head_carried"] = row.head_carried;
    j["legs_carried"] = row.legs_carried;
    return j;
}

inline void write_feature_jsonl(std::ostream& out, std::span<const FeatureRow> rows)
{
    for (const auto& row : rows)
        out << feature_row_json(row).dump() << '\n';
}

} // namespace silhar
