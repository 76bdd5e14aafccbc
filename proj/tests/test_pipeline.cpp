#include "silhar/default_rules.hpp"
#include "silhar/pipeline.hpp"
#include "silhar/synth.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

using namespace silhar;
using testutil::TempDir;

namespace {

int rule_index(const KnowledgeBase& kb, std::string_view action)
{
    for (std::size_t i = 0; i < kb.rules.size(); ++i)
        if (kb.rules[i].action == action)
            return static_cast<int>(i);
    return -1;
}

std::vector<IntervalResult> votes(const KnowledgeBase& kb, std::initializer_list<std::string_view> labels)
{
    std::vector<IntervalResult> out;
    for (auto l : labels) {
        IntervalResult ir;
        ir.result.winner = l == kUnknownLabel ? -1 : rule_index(kb, l);
        out.push_back(ir);
    }
    return out;
}

} // namespace

TEST(ParallelFor, VisitsEachIndexOnce)
{
    for (int threads : {1, 2, 5}) {
        std::vector<int> hits(97, 0);
        parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
        EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; })) << threads;
    }
    parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelFor, PropagatesException)
{
    EXPECT_THROW(parallel_for(50, 3,
                              [](std::size_t i) {
                                  if (i == 17)
                                      throw Error(ErrorCode::parameter, "boom");
                              }),
                 Error);
}

TEST(Majority, PluralityWins)
{
    const auto& kb = default_kb();
    EXPECT_EQ(majority_label(votes(kb, {"Walk", "Run", "Walk"}), kb), "Walk");
    EXPECT_EQ(majority_label(votes(kb, {"UNKNOWN", "UNKNOWN", "Jump"}), kb), "UNKNOWN");
    EXPECT_EQ(majority_label(votes(kb, {}), kb), "UNKNOWN");
}

TEST(Majority, TiesGoToTheMoreSpecificRule)
{
    const auto& kb = default_kb();
    const auto& stand = kb.rules[static_cast<std::size_t>(rule_index(kb, "Stand"))];
    const auto& run = kb.rules[static_cast<std::size_t>(rule_index(kb, "Run"))];
    ASSERT_GT(run.specificity(), stand.specificity());
    EXPECT_EQ(majority_label(votes(kb, {"Stand", "Run"}), kb), "Run");
    EXPECT_EQ(majority_label(votes(kb, {"Run", "Stand"}), kb), "Run");
    // a known label beats UNKNOWN on a tie
    EXPECT_EQ(majority_label(votes(kb, {"UNKNOWN", "Stand"}), kb), "Stand");
}

TEST(Majority, EqualSpecificityFallsToPriority)
{
    const auto& kb = default_kb();
    const auto& walk = kb.rules[static_cast<std::size_t>(rule_index(kb, "Walk"))];
    const auto& run = kb.rules[static_cast<std::size_t>(rule_index(kb, "Run"))];
    ASSERT_EQ(walk.specificity(), run.specificity());
    ASSERT_LT(walk.priority, run.priority);
    EXPECT_EQ(majority_label(votes(kb, {"Run", "Walk"}), kb), "Walk");
}

TEST(Majority, OrderInsensitive)
{
    const auto& kb = default_kb();
    std::vector<std::string_view> labels = {"Walk", "Run", "Jump", "Run", "Walk", "Wave", "UNKNOWN", "Kick"};
    std::sort(labels.begin(), labels.end());
    std::string first;
    do {
        std::vector<IntervalResult> v;
        for (auto l : labels) {
            IntervalResult ir;
            ir.result.winner = l == kUnknownLabel ? -1 : rule_index(kb, l);
            v.push_back(ir);
        }
        const std::string got = majority_label(v, kb);
        if (first.empty())
            first = got;
        ASSERT_EQ(got, first);
    } while (std::next_permutation(labels.begin(), labels.end()));
    EXPECT_EQ(first, "Walk");
}

TEST(Extract, ThreadCountDoesNotChangeRows)
{
    synth::FigureParams fig;
    fig.seed = 12;
    const auto seq = synth::generate_action("jump", fig, 25, 1.0);
    const auto a = extract_features(seq.masks, {}, 1);
    const auto b = extract_features(seq.masks, {}, 4);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i)
        EXPECT_EQ(a.rows[i], b.rows[i]) << i;
    EXPECT_EQ(a.carried.head_carried, b.carried.head_carried);
}

TEST(Extract, SanitizesSpecks)
{
    synth::FigureParams fig;
    fig.seed = 13;
    auto seq = synth::generate_action("stand", fig, 25, 0.2);
    SilhouetteMask noisy = seq.masks[0];
    noisy.set(2, 2, true);
    noisy.set(3, 150, true);
    const auto a = extract_features(std::span(&seq.masks[0], 1));
    const auto b = extract_features(std::span(&noisy, 1));
    ASSERT_EQ(b.rows.size(), 1u);
    EXPECT_EQ(a.rows[0], b.rows[0]);
}

TEST(Extract, DirectoryWithBadFrames)
{
    TempDir tmp("pipe");
    synth::FigureParams fig;
    fig.seed = 14;
    const auto seq = synth::generate_action("walk", fig, 25, 0.4);
    synth::write_sequence(seq, tmp.path);
    const auto files = list_sequence(tmp.path);
    ASSERT_EQ(files.size(), 10u);
    write_pgm(files[3], SilhouetteMask(seq.masks[3].width(), seq.masks[3].height()));
    {
        std::ofstream f(files[6], std::ios::trunc);
        f << "P5\n10 10\n255\nxx";
    }
    const auto feats = extract_directory(tmp.path);
    EXPECT_EQ(feats.total_frames(), 10);
    EXPECT_EQ(feats.rows.size(), 8u);
    EXPECT_EQ(feats.skipped_frames(), 2);
    EXPECT_EQ(feats.empty_frames(), 1);
    EXPECT_FALSE(feats.status[3].ok);
    EXPECT_EQ(feats.status[3].error, ErrorCode::empty_silhouette);
    EXPECT_FALSE(feats.status[6].ok);
    EXPECT_NE(feats.status[6].error, ErrorCode::empty_silhouette);
    // frame indices survive the gaps
    EXPECT_EQ(feats.rows[3].frame, 4);
    EXPECT_EQ(feats.rows[5].frame, 7);
}

TEST(Classify, IntervalsCoverTheSequence)
{
    synth::FigureParams fig;
    fig.seed = 15;
    const auto seq = synth::generate_action("run", fig, 25, 2.4);
    ASSERT_EQ(seq.masks.size(), 60u);
    const auto& kb = default_kb();
    const auto feats = extract_features(seq.masks);
    const auto res = classify_rows(feats.rows, kb);
    ASSERT_EQ(res.intervals.size(), 2u);
    EXPECT_EQ(res.intervals[0].first_frame, 0);
    EXPECT_EQ(res.intervals[0].last_frame, 24);
    EXPECT_EQ(res.intervals[1].first_frame, 25);
    EXPECT_EQ(res.intervals[1].last_frame, 59);
    EXPECT_EQ(res.label, "Run");
    EXPECT_EQ(res.md, seq.truth[0].facing);
}

TEST(Classify, TooShortIsUnknown)
{
    synth::FigureParams fig;
    const auto seq = synth::generate_action("walk", fig, 25, 0.04);
    const auto res = classify_rows(extract_features(seq.masks).rows, default_kb());
    EXPECT_TRUE(res.intervals.empty());
    EXPECT_EQ(res.label, "UNKNOWN");
    EXPECT_EQ(res.md, 0);
}

TEST(Classify, ShorterIntervalOverride)
{
    synth::FigureParams fig;
    fig.seed = 16;
    const auto seq = synth::generate_action("stand", fig, 25, 2.0);
    Config cfg;
    cfg.k_override = 10;
    const auto res = classify_rows(extract_features(seq.masks, cfg).rows, default_kb(), cfg);
    EXPECT_EQ(res.intervals.size(), 5u);
    EXPECT_EQ(res.label, "Stand");
}
