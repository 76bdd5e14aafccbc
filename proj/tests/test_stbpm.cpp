#include "silhar/pipeline.hpp"
#include "silhar/stbpm.hpp"
#include "silhar/synth.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace silhar;

namespace {

// body 100 px tall standing on row 99, 30 px wide, centred on column x
FeatureRow body_row(int frame, double x)
{
    FeatureRow r;
    r.frame = frame;
    r.set(Col::x_st, x - 15);
    r.set(Col::y_st, 0);
    r.set(Col::dx, 29);
    r.set(Col::dy, 99);
    r.set(Col::x_cnt, 14.5);
    r.set(Col::y_cnt, 50);
    r.set(Col::xg_cnt, x);
    r.set(Col::yg_cnt, 50);
    return r;
}

FeatureRow static_row(double ha, double heel_x, double toe_x)
{
    FeatureRow r = body_row(0, 100);
    r.set(Col::ha, ha);
    r.set(Col::xhl1, heel_x);
    r.set(Col::yhl1, 99);
    r.set(Col::xt1, toe_x);
    r.set(Col::yt1, 99);
    return r;
}

std::vector<FeatureRow> rows_of(int n)
{
    std::vector<FeatureRow> rows;
    for (int i = 0; i < n; ++i)
        rows.push_back(body_row(i, 100));
    return rows;
}

} // namespace

TEST(Segment, FullAndRemainder)
{
    auto iv = segment_intervals(rows_of(60), 25, 25);
    ASSERT_EQ(iv.size(), 2u);
    EXPECT_EQ(iv[0].k(), 25);
    EXPECT_EQ(iv[1].k(), 35); // 10 left over is folded in
    iv = segment_intervals(rows_of(63), 25, 25);
    ASSERT_EQ(iv.size(), 3u);
    EXPECT_EQ(iv[2].k(), 13);
    EXPECT_EQ(iv[2].rows.front().frame, 50);
    iv = segment_intervals(rows_of(7), 25, 25);
    ASSERT_EQ(iv.size(), 1u);
    EXPECT_TRUE(segment_intervals(rows_of(1), 25, 25).empty());
    EXPECT_THROW(segment_intervals(rows_of(10), 1, 25), Error);
}

TEST(MovingDirection, Drift)
{
    std::vector<FeatureRow> rows;
    for (int i = 0; i < 25; ++i)
        rows.push_back(body_row(i, 100 + 2 * i));
    EXPECT_EQ(moving_direction(rows), 1);
    std::reverse(rows.begin(), rows.end());
    EXPECT_EQ(moving_direction(rows), -1);
}

TEST(MovingDirection, StaticVotes)
{
    const auto md = [](FeatureRow r) { return moving_direction(std::vector<FeatureRow>{r, r}); };
    EXPECT_EQ(md(static_row(100, 90, 100)), 1);  // head and toes agree
    EXPECT_EQ(md(static_row(100, 100, 90)), 0);  // they disagree
    EXPECT_EQ(md(static_row(90, 100, 90)), -1);  // head neutral, toes decide
    EXPECT_EQ(md(static_row(80, 95, 95)), -1);   // toes neutral, head decides
    EXPECT_EQ(md(static_row(90, 95, 95)), 0);

    // two feet pointing opposite ways carry no vote
    FeatureRow r = static_row(90, 90, 100);
    r.set(Col::xhl2, 120);
    r.set(Col::xt2, 110);
    EXPECT_EQ(md(r), 0);
}

TEST(MovingDirection, SmallWobbleIsStatic)
{
    std::vector<FeatureRow> rows;
    for (int i = 0; i < 25; ++i)
        rows.push_back(body_row(i, 100 + (i % 2) * 4.0)); // 4 px < 0.05 H
    rows.back().set(Col::ha, 100);
    EXPECT_EQ(moving_direction(rows), 1);
}

TEST(MovingDirection, DeadbandAroundTheStart)
{
    // travels 10 px out and back, mean ends 1 px from the start (< 0.02 H)
    std::vector<FeatureRow> rows = {body_row(0, 100), body_row(1, 110), body_row(2, 93)};
    EXPECT_EQ(moving_direction(rows), 0);
}

TEST(MovingDirection, NoBodyCenter)
{
    std::vector<FeatureRow> rows(3);
    try {
        moving_direction(rows);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::md_undefined);
    }
}

TEST(OrientFeet, ToesLeadTheMotion)
{
    std::vector<FeatureRow> rows = {static_row(90, 100, 90)};
    orient_feet(rows, 1);
    EXPECT_EQ(rows[0][Col::xhl1], 90);
    EXPECT_EQ(rows[0][Col::xt1], 100);
    orient_feet(rows, 0);
    EXPECT_EQ(rows[0][Col::xt1], 100);
    orient_feet(rows, -1);
    EXPECT_EQ(rows[0][Col::xt1], 90);
}

TEST(KeepLegSlots, LoneLegStaysInItsSlot)
{
    FeatureRow both = static_row(90, 80, 85);
    both.set(Col::xhl2, 120);
    both.set(Col::yhl2, 99);
    both.set(Col::xt2, 125);
    both.set(Col::yt2, 99);
    FeatureRow right_only = static_row(90, 121, 126); // detector reports it in slot 1
    std::vector<FeatureRow> rows = {both, right_only};
    keep_leg_slots(rows);
    EXPECT_FALSE(rows[1].has(Col::xhl1));
    EXPECT_EQ(rows[1][Col::xhl2], 121);
    EXPECT_EQ(rows[1][Col::xt2], 126);
}

TEST(Aggregate, ConstantColumn)
{
    std::vector<FeatureRow> rows = rows_of(25);
    for (auto& r : rows)
        r.set(Col::sa, 7.0);
    const auto v = aggregate({rows, 25});
    const ColumnStats& s = v[Col::sa];
    EXPECT_EQ(s.av, 7.0);
    EXPECT_EQ(s.min, 7.0);
    EXPECT_EQ(s.max, 7.0);
    EXPECT_EQ(s.std, 0.0);
    EXPECT_EQ(s.n, 25);
    EXPECT_FALSE(s.low_confidence);
    EXPECT_EQ(v.frames, 25);
}

TEST(Aggregate, PopulationStd)
{
    std::vector<FeatureRow> rows = rows_of(4);
    for (int i = 0; i < 4; ++i)
        rows[std::size_t(i)].set(Col::sa, i);
    const ColumnStats s = aggregate({rows, 25})[Col::sa];
    EXPECT_DOUBLE_EQ(s.av, 1.5);
    EXPECT_EQ(s.min, 0.0);
    EXPECT_EQ(s.max, 3.0);
    EXPECT_DOUBLE_EQ(s.std, 1.118033988749895); // sqrt(5/4)
}

TEST(Aggregate, InvisibleRowsSkippedAndFlagged)
{
    std::vector<FeatureRow> rows = rows_of(5);
    rows[2].set(Col::xh1, 10);
    rows[2].set(Col::yh1, 20);
    const auto v = aggregate({rows, 25});
    EXPECT_EQ(v[Col::xh1].n, 1);
    EXPECT_TRUE(v[Col::xh1].low_confidence);
    EXPECT_EQ(v[Col::xh2].n, 0);
    EXPECT_EQ(v[Col::md].n, 5);
    EXPECT_EQ(v[Col::md].av, v.md);
}

TEST(Aggregate, DegenerateInterval)
{
    try {
        aggregate({std::vector<FeatureRow>(4), 25});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::degenerate_interval);
    }
    EXPECT_THROW(aggregate({{}, 25}), Error);
}

TEST(Aggregate, PermutationLeavesStatisticsAlone)
{
    synth::FigureParams fig;
    fig.seed = 21;
    const auto seq = synth::generate_action("wave2", fig, 25, 1.0);
    const auto feats = extract_features(seq.masks);
    const ActionInterval iv{feats.rows, 25};
    const auto a = aggregate(iv);
    auto shuffled = feats.rows;
    std::shuffle(shuffled.begin() + 1, shuffled.end(), std::mt19937(4));
    const auto b = aggregate({shuffled, 25});
    ASSERT_EQ(a.md, b.md); // a static body keeps its anchor vote here
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
        EXPECT_EQ(a.cols[c].min, b.cols[c].min) << kColumnNames[c];
        EXPECT_EQ(a.cols[c].max, b.cols[c].max) << kColumnNames[c];
        EXPECT_NEAR(a.cols[c].av, b.cols[c].av, 1e-9) << kColumnNames[c];
        EXPECT_NEAR(a.cols[c].std, b.cols[c].std, 1e-9) << kColumnNames[c];
    }
    // pure: a second pass gives the same numbers
    const auto again = aggregate(iv);
    for (std::size_t c = 0; c < kFeatureCount; ++c)
        EXPECT_EQ(a.cols[c].av, again.cols[c].av);
}

TEST(Activity, AllConstantIsStandProfile)
{
    std::vector<FeatureRow> rows = rows_of(25);
    for (auto& r : rows) {
        r.set(Col::hd1x, 95);
        r.set(Col::hd1y, 2);
        r.set(Col::hd2x, 105);
        r.set(Col::hd2y, 2);
        r.set(Col::xhl1, 95);
        r.set(Col::yhl1, 99);
        r.set(Col::xt1, 105);
        r.set(Col::yt1, 99);
        r.set(Col::sa, 0);
    }
    const auto act = au_activity(aggregate({rows, 25}));
    for (std::size_t i = 0; i < kAuCount; ++i) {
        EXPECT_EQ(act.au[i].mv, 0) << kAuNames[i];
        EXPECT_EQ(act.au[i].mdr, Mdr::none) << kAuNames[i];
    }
    EXPECT_FALSE(act[Au::hand].visible);
    EXPECT_EQ(act[Au::hand].region, kRegionNone);
    EXPECT_EQ(act[Au::head].region, kUL);
    EXPECT_EQ(act[Au::leg].region, kLL);
}

TEST(Activity, HandSwingInUpperLevel)
{
    std::vector<FeatureRow> rows = rows_of(25);
    for (int i = 0; i < 25; ++i) {
        auto& r = rows[std::size_t(i)];
        r.set(Col::xh2, 115 + 25.0 * std::sin(i * 0.5)); // 0.5 H peak to peak
        r.set(Col::yh2, 5);
    }
    const auto act = au_activity(aggregate({rows, 25}));
    EXPECT_EQ(act[Au::hand].mv, 2);
    EXPECT_EQ(act[Au::hand].mdr, Mdr::x);
    EXPECT_EQ(act[Au::hand].region, kUL);
    EXPECT_EQ(act[Au::bmc_g].mv, 0);
}

TEST(Activity, Thresholds)
{
    // D = 4 px < 0.05 H is static, 20 px slow, 40 px rapid
    for (const auto& [d, want] : {std::pair{4.0, 0}, {20.0, 1}, {40.0, 2}}) {
        std::vector<FeatureRow> rows = {body_row(0, 100), body_row(1, 100 + d)};
        EXPECT_EQ(au_activity(aggregate({rows, 25}))[Au::bmc_g].mv, want) << d;
    }
}

TEST(Activity, SyntheticRunAndWalk)
{
    synth::FigureParams fig;
    fig.seed = 8;
    auto seq = synth::generate_action("run", fig, 25, 1.0);
    auto feats = extract_features(seq.masks);
    auto act = au_activity(aggregate({feats.rows, 25}));
    EXPECT_EQ(act[Au::bmc_g].mv, 2);
    EXPECT_EQ(act[Au::bmc_g].mdr, Mdr::x);

    seq = synth::generate_action("walk", fig, 25, 1.0);
    feats = extract_features(seq.masks);
    const auto v = aggregate({feats.rows, 25});
    EXPECT_GT(v[Col::sa].max, 0.0);
    EXPECT_LE(v[Col::sa].max, 40.0);
}

TEST(Json, StbpmAndActivity)
{
    const auto v = aggregate({rows_of(3), 25});
    const auto j = stbpm_json(v);
    EXPECT_EQ(j["columns"].size(), 28u);
    EXPECT_EQ(j["columns"]["dy"]["av"], 99.0);
    const auto a = activity_json(au_activity(v));
    EXPECT_EQ(a["bmcg"]["mdr"], "NONE");
    EXPECT_EQ(a["md"], v.md);
}
