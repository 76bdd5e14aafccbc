#include "silhar/localization.hpp"
#include "silhar/synth.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace silhar;
using testutil::ascii;
using testutil::fill;

namespace {

// upright figure: torso, head on top and two legs meeting a hip bar;
// feet centred `half_gap` columns either side of column 50
SilhouetteMask straddle(int half_gap)
{
    SilhouetteMask m(101, 100);
    fill(m, 0, 12, 45, 55);  // head
    fill(m, 13, 52, 40, 60); // torso
    fill(m, 45, 52, 50 - half_gap - 2, 50 + half_gap + 2);
    fill(m, 47, 99, 50 - half_gap - 2, 50 - half_gap + 2);
    fill(m, 47, 99, 50 + half_gap - 2, 50 + half_gap + 2);
    return m;
}

PointD pixel_centroid(const SilhouetteMask& m)
{
    double sx = 0, sy = 0, n = 0;
    for (int r = 0; r < m.height(); ++r)
        for (int c = 0; c < m.width(); ++c)
            if (m.at(r, c)) {
                sx += c;
                sy += r;
                ++n;
            }
    return {sx / n, sy / n};
}

} // namespace

TEST(BoundingBox, FullSquareAndSinglePixel)
{
    EXPECT_EQ(bounding_box(boundary_vectors(ascii({"111", "111", "111"}))), (BBox{0, 0, 2, 2}));
    const BBox one = bounding_box(boundary_vectors(ascii({"....", "..#.", "...."})));
    EXPECT_EQ(one, (BBox{2, 1, 0, 0}));
    EXPECT_EQ(one.width(), 1);
    EXPECT_EQ(one.height(), 1);
}

TEST(BoundingBox, RandomMasksMatchMinMaxAndTouchForeground)
{
    std::mt19937 rng(5);
    for (int t = 0; t < 100; ++t) {
        SilhouetteMask m(32, 32);
        const int n = 1 + int(rng() % 40);
        int x0 = 99, x1 = -1, y0 = 99, y1 = -1;
        for (int i = 0; i < n; ++i) {
            const int r = int(rng() % 32), c = int(rng() % 32);
            m.set(r, c, true);
            x0 = std::min(x0, c);
            x1 = std::max(x1, c);
            y0 = std::min(y0, r);
            y1 = std::max(y1, r);
        }
        const BBox b = bounding_box(boundary_vectors(m));
        ASSERT_EQ(b, (BBox{x0, y0, x1 - x0, y1 - y0}));
        bool left = false, right = false, top = false, bottom = false;
        for (int k = 0; k < 32; ++k) {
            left = left || m.at(k, b.x_st);
            right = right || m.at(k, b.right_col());
            top = top || m.at(b.y_st, k);
            bottom = bottom || m.at(b.base_row(), k);
        }
        EXPECT_TRUE(left && right && top && bottom);
    }
}

TEST(BodyMassCenter, RectangleAndTwoPoints)
{
    SilhouetteMask m(10, 8);
    fill(m, 1, 6, 2, 5); // 4 wide, 6 tall
    auto box = bounding_box(boundary_vectors(m));
    auto bc = body_mass_center(m, box);
    EXPECT_DOUBLE_EQ(bc.bmc.x, 1.5);
    EXPECT_DOUBLE_EQ(bc.bmc.y, 2.5);

    const auto two = ascii({"#.#"});
    bc = body_mass_center(two, bounding_box(boundary_vectors(two)));
    EXPECT_DOUBLE_EQ(bc.bmc.x, 1.0);
}

TEST(BodyMassCenter, CentroidOracleAndGlobalOffset)
{
    std::mt19937 rng(9);
    for (int t = 0; t < 200; ++t) {
        const int w = 2 + int(rng() % 60), h = 2 + int(rng() % 60);
        SilhouetteMask m(w, h);
        std::bernoulli_distribution on(0.1 + (rng() % 80) / 100.0);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                m.set(r, c, on(rng));
        if (m.empty())
            m.set(h / 2, w / 2, true);
        const BBox box = bounding_box(boundary_vectors(m));
        const BodyCenters bc = body_mass_center(m, box);
        const PointD want = pixel_centroid(m);
        EXPECT_NEAR(bc.bmc_g.x, want.x, 1e-9);
        EXPECT_NEAR(bc.bmc_g.y, want.y, 1e-9);
        EXPECT_EQ(bc.bmc_g.x - bc.bmc.x, double(box.x_st));
        EXPECT_EQ(bc.bmc_g.y - bc.bmc.y, double(box.y_st));
    }
}

TEST(BodyRatio, Examples)
{
    const BBox tall{0, 0, 1, 5}; // 2 wide, 6 tall
    EXPECT_DOUBLE_EQ(body_ratio(tall), 3.0);
    EXPECT_DOUBLE_EQ(body_ratio(tall, BodyRatioOrientation::width_over_height), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(body_ratio(BBox{4, 4, 6, 6}), 1.0);
}

TEST(BodyRatio, StandingAndLyingFigures)
{
    synth::FigureParams fig;
    synth::Pose p;
    p.x = 90;
    const auto stand = synth::render(fig, p);
    const auto fa = analyze_frame(stand.mask);
    EXPECT_GT(fa.br, 1.0);
    const SilhouetteMask lying(100, 20, [] {
        std::vector<std::uint8_t> px(2000, 0);
        for (int r = 8; r < 14; ++r)
            for (int c = 5; c < 95; ++c)
                px[std::size_t(r * 100 + c)] = 1;
        return px;
    }());
    EXPECT_LT(body_ratio(bounding_box(boundary_vectors(lying))), 1.0);
}

TEST(Levels, AnatomicalRows)
{
    SilhouetteMask m(10, 130);
    fill(m, 21, 120, 2, 7); // H = 100, base row 120
    const auto bv = boundary_vectors(m);
    const BBox box = bounding_box(bv);
    const Levels lv = body_levels(box, bv, body_mass_center(m, box));
    EXPECT_EQ(lv.h, 100);
    EXPECT_EQ(lv.base_row, 120);
    // lines measured from the bottom edge of row 120, i.e. y = 121
    EXPECT_DOUBLE_EQ(lv.ul_line, 34.0);
    EXPECT_EQ(lv.ul, 34);
    EXPECT_EQ(lv.ll, 68);
    EXPECT_EQ(lv.ml, 74);
    EXPECT_NEAR(lv.shoulder_line, 39.2, 1e-12);
    EXPECT_EQ(lv.shoulder_row, 39);
    // rectangular torso: side levels sit on the outer wall edges
    EXPECT_DOUBLE_EQ(lv.lsl, 1.5);
    EXPECT_DOUBLE_EQ(lv.rsl, 7.5);
}

TEST(Levels, TooSmall)
{
    SilhouetteMask m(4, 10);
    fill(m, 0, 6, 1, 2);
    const auto bv = boundary_vectors(m);
    const BBox box = bounding_box(bv);
    try {
        body_levels(box, bv, body_mass_center(m, box));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::silhouette_too_small);
    }
}

TEST(Head, LoneHeadOnTorso)
{
    const auto m = straddle(18);
    const auto fa = analyze_frame(m);
    ASSERT_TRUE(fa.head);
    EXPECT_EQ(fa.head->run_start, 45);
    EXPECT_EQ(fa.head->run_end, 55);
    EXPECT_EQ(fa.head->hd1.x, 45.0);
    EXPECT_EQ(fa.head->hd1.y, 0.0);
    EXPECT_EQ(fa.head->hd2.x, 55.0);
    EXPECT_DOUBLE_EQ(fa.head->center.x, 50.0);
    ASSERT_TRUE(fa.ha);
    EXPECT_DOUBLE_EQ(*fa.ha, 90.0);
}

TEST(Head, LongestRunWinsOverRaisedHand)
{
    SilhouetteMask m(60, 100);
    fill(m, 0, 12, 20, 29);  // head, 10 columns
    fill(m, 2, 40, 40, 43);  // raised forearm, 4 columns
    fill(m, 13, 99, 15, 34); // body
    fill(m, 30, 34, 35, 43); // arm joins the body
    const auto fa = analyze_frame(m);
    ASSERT_TRUE(fa.head);
    EXPECT_EQ(fa.head->run_start, 20);
    EXPECT_EQ(fa.head->run_end, 29);
}

TEST(Head, EqualRunsPreferLeftmost)
{
    SilhouetteMask m(60, 100);
    fill(m, 0, 20, 10, 15);
    fill(m, 0, 20, 30, 35);
    fill(m, 21, 99, 10, 35);
    const auto fa = analyze_frame(m);
    ASSERT_TRUE(fa.head);
    EXPECT_EQ(fa.head->run_start, 10);
    EXPECT_EQ(fa.head->run_end, 15);
}

TEST(HeadAngle, UnitSlopes)
{
    SilhouetteMask m(40, 20);
    fill(m, 15, 15, 10, 14); // shoulder row run, middle column 12
    const auto bv = boundary_vectors(m);
    Levels lv;
    lv.shoulder_line = 15.0;
    HeadLoc head;
    head.h_mid = {12.0, 5.0};
    EXPECT_DOUBLE_EQ(*head_angle(head, m, bv, lv), 90.0);
    head.h_mid = {22.0, 5.0}; // right by the vertical gap
    EXPECT_NEAR(*head_angle(head, m, bv, lv), 135.0, 1e-12);
    head.h_mid = {2.0, 5.0}; // left by the vertical gap
    EXPECT_NEAR(*head_angle(head, m, bv, lv), 45.0, 1e-12);
    lv.shoulder_line = 3.5; // empty row
    EXPECT_FALSE(head_angle(head, m, bv, lv));
}

TEST(HeadAngle, ArmAtShoulderHeightDoesNotShiftMidpoint)
{
    auto m = straddle(18);
    const int sh = analyze_frame(m).levels.shoulder_row;
    // raised forearm beside the head crosses the shoulder row as a separate run
    fill(m, 2, 30, 72, 75);
    fill(m, 28, 30, 60, 75);
    ASSERT_LT(sh, 28);
    const auto fa = analyze_frame(m);
    ASSERT_TRUE(fa.ha);
    EXPECT_DOUBLE_EQ(*fa.ha, 90.0);
}

TEST(Hands, OccludedArmsGiveNoHands)
{
    SilhouetteMask m(30, 100);
    fill(m, 0, 99, 10, 19);
    const auto fa = analyze_frame(m);
    EXPECT_EQ(fa.hands.visible_count(), 0);
}

TEST(Hands, TPoseShowsBoth)
{
    synth::FigureParams fig;
    synth::Pose p;
    p.x = 90;
    p.yaw = 90;
    p.arms[0].abduct = p.arms[1].abduct = 90;
    const auto r = synth::render(fig, p);
    const auto fa = analyze_frame(r.mask);
    ASSERT_TRUE(fa.hands.hand1);
    ASSERT_TRUE(fa.hands.hand2);
    const double tol = 0.05 * r.truth.height;
    const PointD left = r.truth.hand_tips[0].x < r.truth.hand_tips[1].x ? r.truth.hand_tips[0] : r.truth.hand_tips[1];
    const PointD right = r.truth.hand_tips[0].x < r.truth.hand_tips[1].x ? r.truth.hand_tips[1] : r.truth.hand_tips[0];
    EXPECT_LE(distance(*fa.hands.hand1, left), tol);
    EXPECT_LE(distance(*fa.hands.hand2, right), tol);
}

TEST(Hands, SideArmTipFound)
{
    synth::FigureParams fig;
    synth::Pose p;
    p.x = 90;
    p.yaw = 90;
    p.arms[0].abduct = 60; // one arm out and slightly down
    const auto r = synth::render(fig, p);
    const auto fa = analyze_frame(r.mask);
    ASSERT_EQ(fa.hands.visible_count(), 1);
    const PointD got = fa.hands.hand1 ? *fa.hands.hand1 : *fa.hands.hand2;
    const PointD want = std::abs(got.x - r.truth.hand_tips[0].x) < std::abs(got.x - r.truth.hand_tips[1].x)
                            ? r.truth.hand_tips[0]
                            : r.truth.hand_tips[1];
    EXPECT_LE(std::abs(got.x - want.x), 2.0);
    EXPECT_LE(std::abs(got.y - want.y), 2.0);
}

TEST(Legs, SingleRunMeansZeroStride)
{
    SilhouetteMask m(30, 100);
    fill(m, 0, 99, 10, 19);
    const auto fa = analyze_frame(m);
    ASSERT_TRUE(fa.legs);
    EXPECT_EQ(fa.legs->leg_count, 1);
    EXPECT_EQ(fa.legs->sa, 0.0);
}

TEST(Legs, StrideAngleAtTheHip)
{
    // feet 0.36 H and 0.6 H apart with the hip 0.53 H above the ground:
    // 2 atan(0.18 / 0.53) and 2 atan(0.30 / 0.53)
    auto fa = analyze_frame(straddle(18));
    ASSERT_TRUE(fa.legs);
    EXPECT_EQ(fa.legs->leg_count, 2);
    EXPECT_NEAR(fa.legs->sa, 37.51730069568447, 1e-9);
    fa = analyze_frame(straddle(30));
    ASSERT_TRUE(fa.legs);
    EXPECT_NEAR(fa.legs->sa, 59.02299711418064, 1e-9);
    // heel is the run end nearer the body centre
    EXPECT_EQ(fa.legs->leg1->heel.x, 22.0);
    EXPECT_EQ(fa.legs->leg1->toe.x, 18.0);
    EXPECT_EQ(fa.legs->leg2->heel.x, 78.0);
}

TEST(Legs, NothingBelowLowerLevel)
{
    SilhouetteMask m(30, 20);
    fill(m, 0, 9, 0, 29); // wide and short: no column dips below ll after the mean depth filter
    fill(m, 10, 19, 0, 29);
    const auto fa = analyze_frame(m);
    ASSERT_TRUE(fa.legs);
    EXPECT_EQ(fa.legs->leg_count, 1);
}

TEST(Equivariance, TranslationAndMirror)
{
    const auto base = straddle(18);
    const auto fa = analyze_frame(base);
    const auto moved = analyze_frame(placed(base, 140, 130, 17, 9));
    EXPECT_EQ(moved.box.x_st, fa.box.x_st + 17);
    EXPECT_EQ(moved.box.y_st, fa.box.y_st + 9);
    EXPECT_EQ(moved.centers.bmc, fa.centers.bmc);
    EXPECT_EQ(moved.centers.bmc_g.x, fa.centers.bmc_g.x + 17);
    EXPECT_EQ(*moved.ha, *fa.ha);
    EXPECT_EQ(moved.legs->sa, fa.legs->sa);

    // lean the head to the right, then mirror
    auto leaning = base;
    for (int r = 0; r <= 12; ++r)
        for (int c = 0; c < 101; ++c)
            leaning.set(r, c, c >= 49 && c <= 59);
    const auto fl = analyze_frame(leaning);
    const auto fm = analyze_frame(mirrored(leaning));
    ASSERT_TRUE(fl.ha && fm.ha);
    EXPECT_GT(*fl.ha, 90.0);
    EXPECT_NEAR(*fm.ha, 180.0 - *fl.ha, 1e-9);
    EXPECT_NEAR(fm.legs->sa, fl.legs->sa, 1e-9);
    EXPECT_EQ(fm.legs->leg1->heel.x, 100 - fl.legs->leg2->heel.x);
}

TEST(Equivariance, IntegerUpscaleKeepsLevelsAndAngles)
{
    synth::FigureParams fig;
    synth::Pose p;
    p.x = 80;
    p.yaw = 20;
    p.torso_pitch = 10;
    p.legs[0].flex = 25;
    p.legs[1].flex = -20;
    p.arms[0].abduct = 85; // arm out at shoulder height
    const auto base = synth::render(fig, p).mask;
    const auto fa = analyze_frame(base);
    ASSERT_TRUE(fa.ha && fa.legs);
    for (int k : {2, 3}) {
        const auto fs = analyze_frame(upscaled(base, k));
        EXPECT_EQ(fs.box.x_st, k * fa.box.x_st);
        EXPECT_EQ(fs.box.width(), k * fa.box.width());
        EXPECT_EQ(fs.br, fa.br);
        // every level row lands in the block of the original row
        EXPECT_EQ(fs.levels.ul / k, fa.levels.ul);
        EXPECT_EQ(fs.levels.ll / k, fa.levels.ll);
        EXPECT_EQ(fs.levels.ml / k, fa.levels.ml);
        EXPECT_EQ(fs.levels.shoulder_row / k, fa.levels.shoulder_row);
        EXPECT_NEAR(fs.levels.ul_line, k * fa.levels.ul_line, 1e-9);
        ASSERT_TRUE(fs.head && fs.ha && fs.legs);
        EXPECT_EQ(fs.head->run_start, k * fa.head->run_start);
        EXPECT_EQ(fs.head->run_end, k * fa.head->run_end + k - 1);
        EXPECT_NEAR(*fs.ha, *fa.ha, 1e-9);
        EXPECT_NEAR(fs.legs->sa, fa.legs->sa, 1e-9);
    }
}

TEST(Head, FistGrazingUpperLevelStaysOut)
{
    SilhouetteMask m(100, 100);
    fill(m, 0, 12, 45, 55);  // head
    fill(m, 13, 99, 40, 60); // body, base row 99, upper line at y = 13
    fill(m, 12, 12, 56, 59); // fist tops out one row above the line
    auto fa = analyze_frame(m);
    ASSERT_TRUE(fa.head);
    EXPECT_EQ(fa.head->run_start, 45);
    EXPECT_EQ(fa.head->run_end, 55);
    Config loose;
    loose.head_min_rise_frac = 0.0;
    fa = analyze_frame(m, loose);
    EXPECT_EQ(fa.head->run_end, 59);
}

TEST(Synthetic, WalkerHeadWithinTolerance)
{
    synth::FigureParams fig;
    fig.seed = 3;
    const auto seq = synth::generate_action("walk", fig, 25, 1.0);
    int ok = 0;
    for (std::size_t i = 0; i < seq.masks.size(); ++i) {
        const auto fa = analyze_frame(seq.masks[i]);
        ok += fa.head && distance(fa.head->center, seq.truth[i].head_center) <= 0.05 * seq.truth[i].height;
    }
    EXPECT_GE(ok, 25 * 97 / 100);
}

TEST(Synthetic, UpperLevelSeparatesHeadFromTorso)
{
    synth::FigureParams fig;
    fig.seed = 4;
    const auto seq = synth::generate_action("walk", fig, 25, 1.0);
    for (std::size_t i = 0; i < seq.masks.size(); ++i) {
        const auto fa = analyze_frame(seq.masks[i]);
        const auto& gt = seq.truth[i];
        // chin row of the rendered head disc
        const double chin = gt.head_center.y + fig.head_radius * seq.fig.height;
        EXPECT_LE(std::abs(fa.levels.ul - chin), 0.05 * gt.height + 2.0) << "frame " << i;
    }
}

TEST(Synthetic, LeanRightRaisesHeadAngle)
{
    synth::FigureParams fig;
    synth::Pose p;
    p.x = 90;
    p.torso_pitch = 26; // profile facing +x, upper body tipped forward
    const auto r = synth::render(fig, p);
    // head sits 0.05H right of the shoulders
    ASSERT_GE(r.truth.head_center.x - r.truth.shoulder_center.x, 0.05 * r.truth.height);
    const auto fa = analyze_frame(r.mask);
    ASSERT_TRUE(fa.ha);
    EXPECT_GT(r.truth.ha, 95.0);
    EXPECT_GT(*fa.ha, 95.0);
}
